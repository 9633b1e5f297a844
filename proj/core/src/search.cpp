#include "umr/search.hpp"

#include <algorithm>

#include "umr/error.hpp"
#include "umr/parallel.hpp"

namespace umr {
namespace {

struct Entry {
  float score;
  std::size_t rank;  // id order of the candidate
  std::size_t index;
};

// Strict total order: higher score first, then lower id.
inline bool better(const Entry& a, const Entry& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.rank < b.rank;
}

class BoundedHeap {
 public:
  explicit BoundedHeap(std::size_t k) : k_(k) { items_.reserve(k); }

  void offer(const Entry& e) {
    if (items_.size() < k_) {
      items_.push_back(e);
      std::push_heap(items_.begin(), items_.end(), better);
    } else if (better(e, items_.front())) {
      std::pop_heap(items_.begin(), items_.end(), better);
      items_.back() = e;
      std::push_heap(items_.begin(), items_.end(), better);
    }
  }

  // True when `score` cannot enter a full heap.
  bool rejects(float score) const noexcept {
    return items_.size() == k_ && score < items_.front().score;
  }

  const std::vector<Entry>& items() const noexcept { return items_; }

 private:
  std::size_t k_;
  std::vector<Entry> items_;
};

}  // namespace

std::vector<TopKResult> topk(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                             std::size_t k, std::span<const std::vector<std::string>> exclude,
                             const SearchOptions& opts) {
  if (k == 0) throw Error(Errc::kInvalidConfig, "topk: k must be >= 1");
  const PairScorer score(queries, candidates, opts.accumulate_double);
  const std::size_t nq = queries.count();
  const std::size_t nc = candidates.count();
  if (nc == 0) throw Error(Errc::kEmptyPool, "topk: candidate pool is empty");
  if (!exclude.empty() && exclude.size() != nq) {
    throw Error(Errc::kDimensionMismatch, "topk: exclude list count must match query count");
  }

  std::vector<std::vector<std::size_t>> excluded(exclude.empty() ? 0 : nq);
  for (std::size_t q = 0; q < excluded.size(); ++q) {
    for (const auto& id : exclude[q]) {
      if (auto idx = candidates.find(id)) excluded[q].push_back(*idx);
    }
    std::sort(excluded[q].begin(), excluded[q].end());
  }

  const std::size_t block = std::max<std::size_t>(1, opts.block_rows);
  const std::size_t nblocks = (nc + block - 1) / block;
  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.workers, nblocks));
  const std::size_t keep = std::min(k, nc);

  std::vector<std::vector<BoundedHeap>> local(workers, std::vector<BoundedHeap>(nq, BoundedHeap(keep)));
  parallel_for(nblocks, workers, [&](std::size_t b, std::size_t w) {
    const std::size_t begin = b * block;
    const std::size_t end = std::min(nc, begin + block);
    auto& heaps = local[w];
    for (std::size_t q = 0; q < nq; ++q) {
      BoundedHeap& heap = heaps[q];
      const std::vector<std::size_t>* ex = excluded.empty() || excluded[q].empty() ? nullptr : &excluded[q];
      for (std::size_t c = begin; c < end; ++c) {
        const float s = score(q, c);
        if (heap.rejects(s)) continue;
        if (ex && std::binary_search(ex->begin(), ex->end(), c)) continue;
        heap.offer(Entry{s, candidates.id_rank(c), c});
      }
    }
  });

  std::vector<TopKResult> results(nq);
  std::vector<Entry> merged;
  for (std::size_t q = 0; q < nq; ++q) {
    merged.clear();
    for (std::size_t w = 0; w < workers; ++w) {
      const auto& items = local[w][q].items();
      merged.insert(merged.end(), items.begin(), items.end());
    }
    std::sort(merged.begin(), merged.end(), better);
    if (merged.size() > keep) merged.resize(keep);
    results[q].query_id = queries.id(q);
    results[q].hits.reserve(merged.size());
    for (const Entry& e : merged) results[q].hits.push_back(Hit{candidates.id(e.index), e.score, e.index});
  }
  return results;
}

std::size_t rank_of_index(std::size_t query_index, std::size_t candidate_index,
                          const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                          const SearchOptions& opts) {
  if (query_index >= queries.count()) throw Error(Errc::kUnknownId, "rank_of: query index out of range");
  if (candidate_index >= candidates.count()) {
    throw Error(Errc::kUnknownId, "rank_of: candidate index out of range");
  }
  const PairScorer score(queries, candidates, opts.accumulate_double);
  const Entry target{score(query_index, candidate_index), candidates.id_rank(candidate_index), candidate_index};
  std::size_t ahead = 0;
  for (std::size_t c = 0; c < candidates.count(); ++c) {
    if (c == candidate_index) continue;
    if (better(Entry{score(query_index, c), candidates.id_rank(c), c}, target)) ++ahead;
  }
  return ahead + 1;
}

std::size_t rank_of(std::string_view query_id, std::string_view target_candidate_id,
                    const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                    const SearchOptions& opts) {
  const auto q = queries.find(query_id);
  if (!q) throw Error(Errc::kUnknownId, "rank_of: unknown query id '" + std::string(query_id) + "'");
  const auto c = candidates.find(target_candidate_id);
  if (!c) {
    throw Error(Errc::kUnknownId, "rank_of: unknown candidate id '" + std::string(target_candidate_id) + "'");
  }
  return rank_of_index(*q, *c, queries, candidates, opts);
}

}  // namespace umr

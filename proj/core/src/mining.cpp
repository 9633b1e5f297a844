#include "umr/mining.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "umr/error.hpp"
#include "umr/rng.hpp"
#include "umr/search.hpp"

namespace umr {

void MiningConfig::validate() const {
  if (retrieve_k < 1) throw Error(Errc::kInvalidConfig, "retrieve_k must be >= 1");
  if (negatives_out < 1) throw Error(Errc::kInvalidConfig, "negatives_out must be >= 1");
  if (negatives_out > retrieve_k) throw Error(Errc::kInvalidConfig, "negatives_out must be <= retrieve_k");
  if (rank_window) {
    const auto [lo, hi] = *rank_window;
    if (lo < 1 || hi < lo || hi > retrieve_k) {
      throw Error(Errc::kInvalidConfig, "rank_window must satisfy 1 <= lo <= hi <= retrieve_k");
    }
  }
}

namespace {

std::string pick_positive(const GradeMap& grades, const EmbeddingMatrix& candidates) {
  std::string best;
  int best_grade = 0;
  for (const auto& [id, g] : grades) {  // ascending id
    if (g > best_grade && candidates.find(id)) {
      best = id;
      best_grade = g;
    }
  }
  return best;
}

// Non-relevant hits ranked strictly after `after_rank`, in rank order, for
// one query, searching as deep as needed.
std::vector<std::string> deeper_negatives(const EmbeddingMatrix& queries, std::size_t q,
                                          const EmbeddingMatrix& candidates, const std::set<std::string>& relevant,
                                          std::size_t after_rank, std::size_t wanted,
                                          const SearchOptions& opts) {
  const auto row = queries.row(q);
  const EmbeddingMatrix single(queries.dim(), std::vector<float>(row.begin(), row.end()),
                               std::vector<std::string>{queries.id(q)}, queries.normalized());
  std::size_t depth = after_rank + wanted + relevant.size();
  for (;;) {
    depth = std::min(depth, candidates.count());
    const auto hits = topk(single, candidates, depth, {}, opts).front().hits;
    std::vector<std::string> out;
    for (std::size_t r = after_rank; r < hits.size() && out.size() < wanted; ++r) {
      if (!relevant.contains(hits[r].candidate_id)) out.push_back(hits[r].candidate_id);
    }
    if (out.size() == wanted || depth == candidates.count()) return out;
    depth *= 2;
  }
}

}  // namespace

MiningResult mine(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates, const Qrels& qrels,
                  const MiningConfig& cfg) {
  cfg.validate();
  SearchOptions opts;
  opts.workers = cfg.workers;
  const auto retrieved = topk(queries, candidates, cfg.retrieve_k, {}, opts);
  const std::size_t lo = cfg.rank_window ? cfg.rank_window->first : 1;
  const std::size_t hi = cfg.rank_window ? cfg.rank_window->second : cfg.retrieve_k;

  std::vector<std::size_t> order(queries.count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return queries.id_rank(a) < queries.id_rank(b); });

  MiningResult result;
  for (std::size_t q : order) {
    const std::string qid = queries.id(q);
    const GradeMap* grades = qrels.find(qid);
    const std::string positive = grades ? pick_positive(*grades, candidates) : std::string();
    if (positive.empty()) {
      ++result.skipped_no_positive;
      continue;
    }
    std::set<std::string> relevant;
    for (const auto& [id, g] : *grades) {
      if (g > 0) relevant.insert(id);
    }

    const auto& hits = retrieved[q].hits;
    std::vector<std::string> eligible;
    for (std::size_t r = lo; r <= std::min(hi, hits.size()); ++r) {
      if (!relevant.contains(hits[r - 1].candidate_id)) eligible.push_back(hits[r - 1].candidate_id);
    }

    MinedInstance inst{qid, positive, {}, false};
    if (eligible.size() >= cfg.negatives_out) {
      if (cfg.mode == MiningMode::kRank) {
        eligible.resize(cfg.negatives_out);
        inst.hard_negative_ids = std::move(eligible);
      } else {
        std::vector<std::size_t> pos(eligible.size());
        std::iota(pos.begin(), pos.end(), std::size_t{0});
        Rng rng(mix_seed(cfg.seed, stable_hash(qid)));
        rng.shuffle(std::span<std::size_t>(pos));
        pos.resize(cfg.negatives_out);
        std::sort(pos.begin(), pos.end());
        for (std::size_t p : pos) inst.hard_negative_ids.push_back(eligible[p]);
      }
    } else {
      inst.padded = true;
      inst.hard_negative_ids = std::move(eligible);
      const auto extra = deeper_negatives(queries, q, candidates, relevant, hi,
                                          cfg.negatives_out - inst.hard_negative_ids.size(), opts);
      inst.hard_negative_ids.insert(inst.hard_negative_ids.end(), extra.begin(), extra.end());
    }
    if (inst.hard_negative_ids.empty()) {
      ++result.skipped_no_negative;
      continue;
    }
    result.instances.push_back(std::move(inst));
  }
  return result;
}

}  // namespace umr

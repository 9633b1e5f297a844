#include "umr/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <numeric>

#include "umr/parallel.hpp"

namespace umr {

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::vector<float> data,
                                 std::optional<std::vector<std::string>> ids, bool normalized,
                                 NormCheck check)
    : dim_(dim), data_(std::move(data)), ids_(std::move(ids)), normalized_(normalized) {
  if (dim_ == 0) throw Error(Errc::kInvalidConfig, "embedding dim must be positive");
  if (data_.size() % dim_ != 0) {
    throw Error(Errc::kDimensionMismatch, "data length " + std::to_string(data_.size()) +
                                              " is not a multiple of dim " + std::to_string(dim_));
  }
  const std::size_t n = count();
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(Errc::kNonFinite, "row " + std::to_string(i / dim_) + " has a non-finite entry");
    }
  }
  if (ids_) {
    if (ids_->size() != n) {
      throw Error(Errc::kDimensionMismatch, "id count " + std::to_string(ids_->size()) +
                                                " != row count " + std::to_string(n));
    }
    index_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!index_.emplace((*ids_)[i], i).second) {
        throw Error(Errc::kDuplicateId, "duplicate id '" + (*ids_)[i] + "'");
      }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [this](std::size_t a, std::size_t b) { return (*ids_)[a] < (*ids_)[b]; });
    id_rank_.resize(n);
    for (std::size_t r = 0; r < n; ++r) id_rank_[order[r]] = r;
  }
  if (normalized_ && check == NormCheck::kEveryRow) {
    for (std::size_t i = 0; i < n; ++i) {
      const double norm = l2_norm(row(i));
      if (std::abs(norm - 1.0) > kUnitNormTolerance) {
        throw Error(Errc::kInvalidConfig, "row " + std::to_string(i) + " flagged normalized has norm " +
                                              std::to_string(norm));
      }
    }
  }
}

std::string EmbeddingMatrix::id(std::size_t i) const {
  return ids_ ? (*ids_)[i] : std::to_string(i);
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
  if (ids_) {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), value);
  if (ec != std::errc() || ptr != id.data() + id.size() || value >= count()) return std::nullopt;
  // reject non-canonical spellings such as "007"
  if (id.size() > 1 && id.front() == '0') return std::nullopt;
  return value;
}

EmbeddingMatrix EmbeddingMatrix::normalized_copy() const {
  if (normalized_) return *this;
  std::vector<float> out(data_.size());
  for (std::size_t i = 0; i < count(); ++i) {
    const double norm = l2_norm(row(i));
    if (norm <= kZeroNormThreshold) {
      throw Error(Errc::kZeroVector, "row " + std::to_string(i) + " (id " + id(i) + ") has zero norm");
    }
    for (std::size_t j = 0; j < dim_; ++j) {
      out[i * dim_ + j] = static_cast<float>(static_cast<double>(data_[i * dim_ + j]) / norm);
    }
  }
  return EmbeddingMatrix(dim_, std::move(out), ids_, true);
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.dim_ != b.dim_ || a.normalized_ != b.normalized_ || a.ids_ != b.ids_) return false;
  if (a.data_.size() != b.data_.size()) return false;
  return a.data_.empty() ||
         std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

namespace {

std::vector<double> inverse_norms(const EmbeddingMatrix& m, const char* side) {
  if (m.normalized()) return {};
  std::vector<double> inv(m.count());
  for (std::size_t i = 0; i < m.count(); ++i) {
    const double norm = l2_norm(m.row(i));
    if (norm <= kZeroNormThreshold) {
      throw Error(Errc::kZeroVector, std::string(side) + " row " + std::to_string(i) + " has zero norm");
    }
    inv[i] = 1.0 / norm;
  }
  return inv;
}

}  // namespace

PairScorer::PairScorer(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                       bool accumulate_double)
    : queries_(&queries), candidates_(&candidates), accumulate_double_(accumulate_double) {
  if (queries.dim() != candidates.dim()) {
    throw Error(Errc::kDimensionMismatch, "query dim " + std::to_string(queries.dim()) +
                                              " != candidate dim " + std::to_string(candidates.dim()));
  }
  q_inv_ = inverse_norms(queries, "query");
  c_inv_ = inverse_norms(candidates, "candidate");
}

void stream_similarity(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                       const SimilarityOptions& opts,
                       const std::function<void(const SimilarityBlock&)>& sink) {
  const PairScorer score(queries, candidates, opts.accumulate_double);
  const std::size_t block = std::max<std::size_t>(1, opts.block_rows);
  const std::size_t nq = queries.count();
  const std::size_t nc = candidates.count();
  const std::size_t nblocks = (nc + block - 1) / block;
  const std::size_t wave = std::max<std::size_t>(1, opts.workers);

  std::vector<std::vector<float>> buffers(std::min(wave, std::max<std::size_t>(nblocks, 1)));
  for (std::size_t first = 0; first < nblocks; first += wave) {
    const std::size_t in_wave = std::min(wave, nblocks - first);
    parallel_for(in_wave, opts.workers, [&](std::size_t t, std::size_t) {
      const std::size_t begin = (first + t) * block;
      const std::size_t end = std::min(nc, begin + block);
      auto& buf = buffers[t];
      buf.resize(nq * (end - begin));
      for (std::size_t q = 0; q < nq; ++q) {
        float* out = buf.data() + q * (end - begin);
        for (std::size_t c = begin; c < end; ++c) out[c - begin] = score(q, c);
      }
    });
    for (std::size_t t = 0; t < in_wave; ++t) {
      const std::size_t begin = (first + t) * block;
      const std::size_t end = std::min(nc, begin + block);
      sink(SimilarityBlock{begin, end, nq, buffers[t]});
    }
  }
}

std::vector<float> similarity_matrix(const EmbeddingMatrix& queries,
                                     const EmbeddingMatrix& candidates,
                                     const SimilarityOptions& opts) {
  const std::size_t nc = candidates.count();
  std::vector<float> out(queries.count() * nc);
  stream_similarity(queries, candidates, opts, [&](const SimilarityBlock& b) {
    for (std::size_t q = 0; q < b.query_count; ++q) {
      for (std::size_t c = b.candidate_begin; c < b.candidate_end; ++c) out[q * nc + c] = b.at(q, c);
    }
  });
  return out;
}

}  // namespace umr

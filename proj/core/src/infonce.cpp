#include "umr/infonce.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "umr/embedding.hpp"
#include "umr/error.hpp"

namespace umr {

void LossConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(Errc::kInvalidConfig, "temperature must be a positive finite value");
  }
  if (negatives_per_query < 1) throw Error(Errc::kInvalidConfig, "negatives_per_query must be >= 1");
}

namespace {

struct Unit {
  std::vector<double> dir;
  double norm = 0.0;
};

Unit unit(const std::vector<double>& v, std::size_t dim, const char* what) {
  if (v.size() != dim) {
    throw Error(Errc::kDimensionMismatch, std::string(what) + " has dim " + std::to_string(v.size()) +
                                              ", expected " + std::to_string(dim));
  }
  Unit u;
  u.norm = l2_norm(std::span<const double>(v));
  if (!std::isfinite(u.norm)) throw Error(Errc::kNonFinite, std::string(what) + " is not finite");
  if (u.norm <= kZeroNormThreshold) throw Error(Errc::kZeroVector, std::string(what) + " is the zero vector");
  u.dir.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) u.dir[i] = v[i] / u.norm;
  return u;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Softmax {
  double loss = 0.0;
  std::vector<double> sims;
  std::vector<double> prob;
  double one_minus_p0 = 0.0;
};

// Index 0 is the positive.
Softmax softmax_loss(const Unit& q, const std::vector<Unit>& cands, double tau) {
  Softmax out;
  const std::size_t n = cands.size();
  out.sims.resize(n);
  std::vector<double> logits(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.sims[j] = dot(q.dir, cands[j].dir);
    logits[j] = out.sims[j] / tau;
  }
  const auto top = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  const double m = logits[top];
  double rest = 0.0;
  out.prob.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.prob[j] = std::exp(logits[j] - m);
    if (j != top) rest += out.prob[j];
  }
  const double total = 1.0 + rest;
  for (double& p : out.prob) p /= total;
  out.loss = (m - logits[0]) + std::log1p(rest);
  // 1 - p0 without cancellation when the positive dominates
  double others = 0.0;
  for (std::size_t j = 1; j < n; ++j) others += out.prob[j];
  out.one_minus_p0 = others;
  return out;
}

struct Prepared {
  Unit q;
  std::vector<Unit> cands;
};

Prepared prepare(const LossBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  if (batch.negatives.empty()) throw Error(Errc::kInvalidConfig, "loss batch has no negatives");
  const std::size_t dim = batch.query.size();
  if (dim == 0) throw Error(Errc::kZeroVector, "query is empty");
  Prepared p;
  p.q = unit(batch.query, dim, "query");
  p.cands.reserve(batch.negatives.size() + 1);
  p.cands.push_back(unit(batch.positive, dim, "positive"));
  for (const auto& neg : batch.negatives) p.cands.push_back(unit(neg, dim, "negative"));
  return p;
}

}  // namespace

double infonce_forward(const LossBatch& batch, const LossConfig& cfg) {
  const Prepared p = prepare(batch, cfg);
  return softmax_loss(p.q, p.cands, cfg.temperature).loss;
}

LossOutput infonce_backward(const LossBatch& batch, const LossConfig& cfg) {
  const Prepared p = prepare(batch, cfg);
  const double tau = cfg.temperature;
  const Softmax sm = softmax_loss(p.q, p.cands, tau);
  const std::size_t dim = batch.query.size();
  const std::size_t n = p.cands.size();

  LossOutput out;
  out.loss = sm.loss;
  out.grad_query.assign(dim, 0.0);
  std::vector<std::vector<double>> grad_c(n, std::vector<double>(dim, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    // dL/ds_j
    const double g = (j == 0 ? -sm.one_minus_p0 : sm.prob[j]) / tau;
    const double s = sm.sims[j];
    const Unit& c = p.cands[j];
    for (std::size_t i = 0; i < dim; ++i) {
      out.grad_query[i] += g * (c.dir[i] - s * p.q.dir[i]) / p.q.norm;
      grad_c[j][i] = g * (p.q.dir[i] - s * c.dir[i]) / c.norm;
    }
  }
  out.grad_positive = std::move(grad_c[0]);
  out.grad_negatives.assign(std::make_move_iterator(grad_c.begin() + 1), std::make_move_iterator(grad_c.end()));
  return out;
}

namespace {

void accumulate(std::map<EmbeddingKey, std::vector<double>>& grads, EmbeddingKey key,
                const std::vector<double>& g) {
  auto [it, inserted] = grads.try_emplace(std::move(key), g);
  if (!inserted) {
    for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
  }
}

}  // namespace

BatchedLossOutput batched_infonce(std::span<const KeyedBatch> instances, const LossConfig& cfg) {
  if (instances.empty()) throw Error(Errc::kEmptyBatch, "batched_infonce needs at least one instance");
  cfg.validate();
  BatchedLossOutput out;
  out.losses.reserve(instances.size());
  double sum = 0.0;

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const KeyedBatch& inst = instances[i];
    if (inst.negative_ids.size() != inst.batch.negatives.size()) {
      throw Error(Errc::kInvalidConfig, "instance " + std::to_string(i) + ": negative id/vector count mismatch");
    }
    LossBatch batch = inst.batch;
    std::vector<std::string> neg_ids = inst.negative_ids;
    if (cfg.share_in_batch_negatives) {
      std::set<std::string> seen(neg_ids.begin(), neg_ids.end());
      seen.insert(inst.positive_id);
      for (const KeyedBatch& other : instances) {
        if (seen.insert(other.positive_id).second) {
          batch.negatives.push_back(other.batch.positive);
          neg_ids.push_back(other.positive_id);
        }
      }
    }
    const LossOutput lo = infonce_backward(batch, cfg);
    out.losses.push_back(lo.loss);
    sum += lo.loss;
    accumulate(out.grads, {Side::kQuery, inst.query_id}, lo.grad_query);
    accumulate(out.grads, {Side::kCandidate, inst.positive_id}, lo.grad_positive);
    for (std::size_t j = 0; j < neg_ids.size(); ++j) {
      accumulate(out.grads, {Side::kCandidate, neg_ids[j]}, lo.grad_negatives[j]);
    }
  }

  const double n = static_cast<double>(instances.size());
  out.mean_loss = sum / n;
  for (auto& [key, g] : out.grads) {
    for (double& x : g) x /= n;
  }
  return out;
}

}  // namespace umr

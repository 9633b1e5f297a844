#include "umr/toy/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "umr/error.hpp"
#include "umr/search.hpp"

namespace umr::toy {

ToyEncoderParams EncoderConfig::make() const {
  ToyEncoderParams p = ToyEncoderParams::random(feature_dim, embed_dim, hash_seed, init_seed, init_scale);
  p.pooling = pooling;
  p.instruction_mode = instruction_mode;
  p.context_decay = context_decay;
  p.validate();
  return p;
}

ToyBatchGradient batch_gradient(const ToyEncoderParams& params, std::span<const ToyInstance> batch,
                                const LossConfig& loss) {
  std::map<EmbeddingKey, Encoding> cache;
  auto encoded = [&](Side side, const ToyItem* item) -> const Encoding& {
    EmbeddingKey key{side, item->id};
    auto it = cache.find(key);
    if (it == cache.end()) {
      it = cache.emplace(std::move(key), encode_detailed(params, *item, side == Side::kQuery)).first;
    }
    return it->second;
  };

  std::vector<KeyedBatch> keyed;
  keyed.reserve(batch.size());
  for (const ToyInstance& inst : batch) {
    KeyedBatch kb;
    kb.query_id = inst.query->id;
    kb.positive_id = inst.positive->id;
    kb.batch.query = encoded(Side::kQuery, inst.query).raw;
    kb.batch.positive = encoded(Side::kCandidate, inst.positive).raw;
    for (const ToyItem* neg : inst.negatives) {
      kb.negative_ids.push_back(neg->id);
      kb.batch.negatives.push_back(encoded(Side::kCandidate, neg).raw);
    }
    keyed.push_back(std::move(kb));
  }

  const BatchedLossOutput out = batched_infonce(keyed, loss);
  ToyBatchGradient g;
  g.mean_loss = out.mean_loss;
  const std::size_t d = params.embed_dim;
  for (const auto& [key, grad_raw] : out.grads) {
    const Encoding& enc = cache.at(key);
    for (const auto& [f, v] : enc.features) {
      auto& row = g.grad_projection[f];
      if (row.empty()) row.assign(d, 0.0);
      for (std::size_t j = 0; j < d; ++j) row[j] += v * grad_raw[j];
    }
  }
  return g;
}

double batch_loss(const ToyEncoderParams& params, std::span<const ToyInstance> batch, const LossConfig& loss) {
  if (batch.empty()) throw Error(Errc::kEmptyBatch, "batch_loss on an empty batch");
  double sum = 0.0;
  for (const ToyInstance& inst : batch) {
    LossBatch lb;
    lb.query = encode_detailed(params, *inst.query, true).raw;
    lb.positive = encode_detailed(params, *inst.positive, false).raw;
    for (const ToyItem* neg : inst.negatives) lb.negatives.push_back(encode_detailed(params, *neg, false).raw);
    sum += infonce_forward(lb, loss);
  }
  return sum / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------

Trainer::Trainer(ToyEncoderParams init, std::vector<TrainingSource> sources, std::vector<PoolEntry> pool,
                 TrainSettings settings)
    : params_(std::move(init)),
      sources_(std::move(sources)),
      pool_(std::move(pool)),
      settings_(settings),
      rng_(settings.seed) {
  params_.validate();
  settings_.loss.validate();
  if (!(settings_.learning_rate >= 0.0) || !std::isfinite(settings_.learning_rate)) {
    throw Error(Errc::kInvalidConfig, "learning rate must be a finite non-negative value");
  }
  if (settings_.batch_size == 0) throw Error(Errc::kInvalidConfig, "batch_size must be positive");
  if (pool_.empty()) throw Error(Errc::kEmptyInput, "training pool is empty");

  index_.resize(sources_.size());
  for (std::size_t s = 0; s < sources_.size(); ++s) {
    const SyntheticCorpus& corpus = *sources_[s].corpus;
    std::unordered_map<std::string, std::size_t> cand;
    for (std::size_t c = 0; c < corpus.candidates.size(); ++c) cand.emplace(corpus.candidates[c].id, c);
    auto& idx = index_[s];
    idx.relevant.resize(corpus.queries.size());
    idx.hard_negatives.resize(corpus.queries.size());
    for (std::size_t q = 0; q < corpus.queries.size(); ++q) {
      for (const auto& id : corpus.qrels.positives(corpus.queries[q].id)) {
        if (auto it = cand.find(id); it != cand.end()) idx.relevant[q].push_back(it->second);
      }
      std::sort(idx.relevant[q].begin(), idx.relevant[q].end());
    }
  }
  for (const PoolEntry& e : pool_) {
    if (e.source >= sources_.size() || e.query >= sources_[e.source].corpus->queries.size()) {
      throw Error(Errc::kInvalidConfig, "pool entry out of range");
    }
    const auto& rel = index_[e.source].relevant[e.query];
    if (rel.empty()) throw Error(Errc::kNoPositives, "pool query without relevant candidates");
    if (rel.size() >= sources_[e.source].corpus->candidates.size()) {
      throw Error(Errc::kInvalidSpec, "pool query has no non-relevant candidate");
    }
  }
}

ToyInstance Trainer::draw(const PoolEntry& e, Rng& rng, bool use_hard) const {
  const SyntheticCorpus& corpus = *sources_[e.source].corpus;
  const SourceIndex& idx = index_[e.source];
  const auto& relevant = idx.relevant[e.query];
  const std::size_t k = settings_.loss.negatives_per_query;

  ToyInstance inst;
  inst.query = &corpus.queries[e.query];
  inst.positive = &corpus.candidates[relevant[rng.uniform_index(relevant.size())]];

  std::set<std::size_t> chosen;
  const auto& hard = idx.hard_negatives[e.query];
  if (use_hard && !hard.empty()) {
    std::vector<std::size_t> pick = hard;
    for (std::size_t i = 0; i < std::min(k, pick.size()); ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_index(pick.size() - i));
      std::swap(pick[i], pick[j]);
      chosen.insert(pick[i]);
    }
  }
  const std::size_t non_relevant = corpus.candidates.size() - relevant.size();
  while (chosen.size() < std::min(k, non_relevant)) {
    const auto c = static_cast<std::size_t>(rng.uniform_index(corpus.candidates.size()));
    if (std::binary_search(relevant.begin(), relevant.end(), c)) continue;
    chosen.insert(c);
  }
  for (std::size_t c : chosen) inst.negatives.push_back(&corpus.candidates[c]);
  return inst;
}

double Trainer::step() {
  std::vector<ToyInstance> batch;
  batch.reserve(settings_.batch_size);
  for (std::size_t i = 0; i < settings_.batch_size; ++i) {
    batch.push_back(draw(pool_[rng_.uniform_index(pool_.size())], rng_, true));
  }
  const ToyBatchGradient g = batch_gradient(params_, batch, settings_.loss);
  if (!std::isfinite(g.mean_loss)) {
    throw Error(Errc::kDivergenceDetected, "loss is not finite at step " + std::to_string(trace_.size()) +
                                               " (learning rate " + std::to_string(settings_.learning_rate) + ")");
  }
  const std::size_t d = params_.embed_dim;
  for (const auto& [f, row] : g.grad_projection) {
    double* w = params_.projection.data() + f * d;
    for (std::size_t j = 0; j < d; ++j) {
      w[j] -= settings_.learning_rate * row[j];
      if (!std::isfinite(w[j])) {
        throw Error(Errc::kDivergenceDetected, "parameters left the finite range at step " +
                                                   std::to_string(trace_.size()) + " (learning rate " +
                                                   std::to_string(settings_.learning_rate) + ")");
      }
    }
  }
  trace_.push_back(g.mean_loss);
  return g.mean_loss;
}

void Trainer::run(std::size_t steps) {
  for (std::size_t i = 0; i < steps; ++i) step();
}

void Trainer::set_hard_negatives(std::size_t source, std::vector<std::vector<std::size_t>> per_query) {
  if (source >= index_.size()) throw Error(Errc::kInvalidConfig, "unknown training source");
  if (per_query.size() != index_[source].hard_negatives.size()) {
    throw Error(Errc::kDimensionMismatch, "hard negative lists must cover every query of the source");
  }
  for (std::size_t q = 0; q < per_query.size(); ++q) {
    const auto& rel = index_[source].relevant[q];
    for (std::size_t c : per_query[q]) {
      if (std::binary_search(rel.begin(), rel.end(), c)) {
        throw Error(Errc::kInvalidConfig, "hard negative overlaps a relevant candidate");
      }
    }
  }
  index_[source].hard_negatives = std::move(per_query);
}

void Trainer::clear_hard_negatives() {
  for (auto& idx : index_) {
    for (auto& h : idx.hard_negatives) h.clear();
  }
}

std::vector<ToyInstance> Trainer::probe_instances(std::size_t count, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<ToyInstance> out;
  out.reserve(count);
  // probes use random negatives so checkpoints are compared on equal terms
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(draw(pool_[rng.uniform_index(pool_.size())], rng, false));
  }
  return out;
}

std::vector<PoolEntry> full_pool(std::size_t source, const SyntheticCorpus& corpus) {
  std::vector<PoolEntry> pool;
  pool.reserve(corpus.queries.size());
  for (std::size_t q = 0; q < corpus.queries.size(); ++q) pool.push_back(PoolEntry{source, q});
  return pool;
}

std::pair<EmbeddingMatrix, EmbeddingMatrix> embed_corpus(const ToyEncoderParams& params,
                                                         const SyntheticCorpus& corpus) {
  auto build = [&](const std::vector<ToyItem>& items, bool is_query) {
    std::vector<float> data;
    std::vector<std::string> ids;
    data.reserve(items.size() * params.embed_dim);
    for (const ToyItem& item : items) {
      const auto unit = encode(params, item, is_query);
      std::vector<float> row(unit.begin(), unit.end());
      // re-normalize after the float cast so the matrix can carry the flag
      row = l2_normalize(row);
      data.insert(data.end(), row.begin(), row.end());
      ids.push_back(item.id);
    }
    return EmbeddingMatrix(params.embed_dim, std::move(data), std::move(ids), true);
  };
  return {build(corpus.queries, true), build(corpus.candidates, false)};
}

double evaluate_recall(const ToyEncoderParams& params, const SyntheticCorpus& corpus, std::size_t k) {
  const auto [q, c] = embed_corpus(params, corpus);
  const auto results = topk(q, c, k);
  return evaluate_dataset(results, corpus.qrels, MetricSpec{MetricKind::kRecall, k}).score;
}

// ---------------------------------------------------------------------------

namespace {

SyntheticSpec eval_spec(SyntheticSpec spec, std::size_t qpc, std::size_t cpc, std::uint64_t seed) {
  spec.queries_per_cluster = qpc;
  spec.candidates_per_cluster = cpc;
  spec.sample_seed = seed;
  spec.id_prefix = "eval/" + spec.id_prefix;
  return spec;
}

std::vector<std::vector<std::size_t>> mined_lists(const MiningResult& mined, const SyntheticCorpus& corpus) {
  std::unordered_map<std::string, std::size_t> qidx, cidx;
  for (std::size_t i = 0; i < corpus.queries.size(); ++i) qidx.emplace(corpus.queries[i].id, i);
  for (std::size_t i = 0; i < corpus.candidates.size(); ++i) cidx.emplace(corpus.candidates[i].id, i);
  std::vector<std::vector<std::size_t>> lists(corpus.queries.size());
  for (const MinedInstance& m : mined.instances) {
    auto& list = lists[qidx.at(m.query_id)];
    for (const auto& id : m.hard_negative_ids) list.push_back(cidx.at(id));
  }
  return lists;
}

}  // namespace

TwoStageResult two_stage(const TwoStageConfig& cfg) {
  TwoStageResult r;
  r.train_corpus = generate_synthetic(cfg.data);
  r.eval_corpus = generate_synthetic(
      eval_spec(cfg.data, cfg.eval_queries_per_cluster, cfg.eval_candidates_per_cluster, cfg.eval_sample_seed));
  r.train_centroid_accuracy = r.train_corpus.centroid_accuracy;

  r.initial = cfg.encoder.make();
  r.recall_untrained = evaluate_recall(r.initial, r.eval_corpus, cfg.eval_k);

  Trainer trainer(r.initial, {{"train", &r.train_corpus}}, full_pool(0, r.train_corpus), cfg.train);
  const auto probe = trainer.probe_instances(cfg.probe_instances, mix_seed(cfg.train.seed, 0x9b0be));
  r.probe_loss_initial = batch_loss(r.initial, probe, cfg.train.loss);

  trainer.run(cfg.stage1_steps);
  r.stage1 = trainer.params();
  r.stage1_trace = trainer.loss_trace();
  r.recall_stage1 = evaluate_recall(r.stage1, r.eval_corpus, cfg.eval_k);
  r.probe_loss_stage1 = batch_loss(r.stage1, probe, cfg.train.loss);

  if (cfg.hard_negatives) {
    const auto [q, c] = embed_corpus(r.stage1, r.train_corpus);
    r.mined = mine(q, c, r.train_corpus.qrels, cfg.mining);
    trainer.set_hard_negatives(0, mined_lists(r.mined, r.train_corpus));
  }
  trainer.run(cfg.stage2_steps);
  r.stage2 = trainer.params();
  r.stage2_trace.assign(trainer.loss_trace().begin() + static_cast<std::ptrdiff_t>(cfg.stage1_steps),
                        trainer.loss_trace().end());
  r.recall_stage2 = evaluate_recall(r.stage2, r.eval_corpus, cfg.eval_k);
  r.probe_loss_stage2 = batch_loss(r.stage2, probe, cfg.train.loss);
  return r;
}

MixStudyResult mix_study(const MixStudyConfig& cfg) {
  if (cfg.sources.empty()) throw Error(Errc::kInvalidConfig, "mix_study needs at least one source");
  const std::size_t n = cfg.sources.size();

  std::vector<SyntheticCorpus> train(n), eval(n);
  for (std::size_t s = 0; s < n; ++s) {
    SyntheticSpec spec = source_spec(cfg.sources[s], cfg.base);
    spec.id_prefix = std::string(category_label(cfg.sources[s])) + "/";
    train[s] = generate_synthetic(spec);
    eval[s] = generate_synthetic(
        eval_spec(spec, cfg.eval_queries_per_cluster, cfg.eval_candidates_per_cluster, cfg.eval_sample_seed));
  }
  std::vector<TrainingSource> sources;
  for (std::size_t s = 0; s < n; ++s) sources.push_back({std::string(category_label(cfg.sources[s])), &train[s]});

  MixStudyResult r;
  r.tasks = cfg.sources;
  const ToyEncoderParams init = cfg.encoder.make();

  std::vector<std::vector<PoolEntry>> pools;
  for (std::size_t s = 0; s < n; ++s) {
    pools.push_back(full_pool(s, train[s]));
    r.models.push_back(std::string(category_label(cfg.sources[s])));
  }

  // Uniform mix with the same total pool size as one single-source model.
  std::vector<SourceSpec> specs;
  for (std::size_t s = 0; s < n; ++s) {
    specs.push_back(SourceSpec{sources[s].name, cfg.sources[s], train[s].queries.size(), 1.0, std::nullopt});
  }
  r.mixed_manifest = mix(specs, train[0].queries.size(), cfg.train.seed);
  std::vector<PoolEntry> mixed;
  for (const MixEntry& e : r.mixed_manifest.entries) {
    const auto it = std::find_if(sources.begin(), sources.end(), [&](const auto& s) { return s.name == e.source; });
    mixed.push_back(PoolEntry{static_cast<std::size_t>(it - sources.begin()), e.record_index});
  }
  pools.push_back(std::move(mixed));
  r.models.push_back("mixed");

  for (const ModalityGroup g : {ModalityGroup::kSingle, ModalityGroup::kCross, ModalityGroup::kFused}) {
    if (std::any_of(r.tasks.begin(), r.tasks.end(), [&](Category c) { return group_of(c) == g; })) {
      r.groups.push_back(g);
    }
  }

  for (const auto& pool : pools) {
    Trainer trainer(init, sources, pool, cfg.train);
    trainer.run(cfg.steps);
    std::vector<double> scores;
    for (std::size_t s = 0; s < n; ++s) scores.push_back(evaluate_recall(trainer.params(), eval[s], cfg.eval_k));
    std::vector<double> by_group;
    for (const ModalityGroup g : r.groups) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t s = 0; s < n; ++s) {
        if (group_of(r.tasks[s]) == g) {
          sum += scores[s];
          ++count;
        }
      }
      by_group.push_back(sum / static_cast<double>(count));
    }
    double macro = 0.0;
    for (double v : by_group) macro += v;
    r.macro.push_back(macro / static_cast<double>(by_group.size()));
    r.task_scores.push_back(std::move(scores));
    r.group_scores.push_back(std::move(by_group));
    r.params.push_back(trainer.params());
    r.traces.push_back(trainer.loss_trace());
  }
  return r;
}

}  // namespace umr::toy

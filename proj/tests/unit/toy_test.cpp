#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"
#include "umr/toy/trainer.hpp"

namespace umr::toy {
namespace {

using testing_util::error_code;

ToyEncoderParams small_params(Pooling pooling = Pooling::kLastToken,
                              InstructionMode mode = InstructionMode::kQueryOnly) {
  auto p = ToyEncoderParams::random(64, 4, 3, 9);
  p.pooling = pooling;
  p.instruction_mode = mode;
  return p;
}

ToyItem item(std::string id, std::vector<std::int32_t> tokens, std::vector<std::int32_t> instruction = {}) {
  ToyItem it;
  it.id = std::move(id);
  it.tokens = std::move(tokens);
  it.instruction = std::move(instruction);
  return it;
}

// Dense causal recurrence h_t = decay * h_{t-1} + phi(x_t), pooled by last
// state or mean over positions, then projected.
std::vector<double> dense_encode(const ToyEncoderParams& p, const std::vector<std::int32_t>& seq) {
  std::vector<double> h(p.feature_dim, 0.0), sum(p.feature_dim, 0.0);
  for (auto tok : seq) {
    for (auto& v : h) v *= p.context_decay;
    const auto [idx, sign] = token_feature(p, tok);
    h[idx] += sign;
    for (std::size_t i = 0; i < h.size(); ++i) sum[i] += h[i];
  }
  const auto& pooled = p.pooling == Pooling::kLastToken ? h : sum;
  const double scale = p.pooling == Pooling::kLastToken ? 1.0 : 1.0 / static_cast<double>(seq.size());
  std::vector<double> out(p.embed_dim, 0.0);
  for (std::size_t f = 0; f < p.feature_dim; ++f) {
    for (std::size_t j = 0; j < p.embed_dim; ++j) out[j] += scale * pooled[f] * p.projection[f * p.embed_dim + j];
  }
  return l2_normalize(out);
}

TEST(Encoder, MatchesDenseRecurrence) {
  for (auto pooling : {Pooling::kLastToken, Pooling::kMean}) {
    const auto p = small_params(pooling);
    const auto q = item("q", {5, 9, 5, 200, 31}, {900, 901});
    const auto got = encode(p, q, true);
    const auto want = dense_encode(p, {900, 901, 5, 9, 5, 200, 31});
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(got[j], want[j], 1e-12);
  }
}

TEST(Encoder, UnitNorm) {
  const auto p = small_params();
  for (int i = 0; i < 50; ++i) {
    const auto v = encode(p, item("x", {i, i + 1, 3 * i}), false);
    EXPECT_NEAR(l2_norm(std::span<const double>(v)), 1.0, 1e-12);
  }
}

TEST(Encoder, InstructionOnlyOnQuerySide) {
  const auto p = small_params();
  const auto with = item("a", {1, 2, 3}, {100, 101});
  const auto without = item("a", {1, 2, 3});
  EXPECT_EQ(encode(p, with, false), encode(p, without, false));
  EXPECT_NE(encode(p, with, true), encode(p, without, true));
  EXPECT_EQ(encoder_input(p, with, true), (std::vector<std::int32_t>{100, 101, 1, 2, 3}));

  const auto none = small_params(Pooling::kLastToken, InstructionMode::kNone);
  EXPECT_EQ(encoder_input(none, with, true), with.tokens);
  EXPECT_EQ(encode(none, with, true), encode(none, without, true));
}

TEST(Encoder, SingleTokenPoolingsAgree) {
  const auto last = small_params(Pooling::kLastToken, InstructionMode::kNone);
  const auto mean = small_params(Pooling::kMean, InstructionMode::kNone);
  const auto x = item("x", {42});
  EXPECT_EQ(encode(last, x, true), encode(mean, x, true));
}

TEST(Encoder, Errors) {
  const auto p = small_params();
  EXPECT_EQ(error_code([&] { encode(p, item("empty", {}), false); }), Errc::kInvalidConfig);
  auto zero = p;
  std::fill(zero.projection.begin(), zero.projection.end(), 0.0);
  EXPECT_EQ(error_code([&] { encode(zero, item("x", {1}), false); }), Errc::kZeroVector);
  auto bad = p;
  bad.projection.pop_back();
  EXPECT_EQ(error_code([&] { bad.validate(); }), Errc::kInvalidConfig);
  bad = p;
  bad.context_decay = 1.5;
  EXPECT_EQ(error_code([&] { bad.validate(); }), Errc::kInvalidConfig);
  bad = p;
  bad.projection[0] = NAN;
  EXPECT_EQ(error_code([&] { bad.validate(); }), Errc::kNonFinite);
}

TEST(Synthetic, DeterministicAndSeeded) {
  SyntheticSpec s;
  s.clusters = 4;
  const auto a = generate_synthetic(s);
  const auto b = generate_synthetic(s);
  ASSERT_EQ(a.queries.size(), 40u);
  for (std::size_t i = 0; i < a.queries.size(); ++i) EXPECT_EQ(a.queries[i].tokens, b.queries[i].tokens);
  s.sample_seed = 2;
  const auto c = generate_synthetic(s);
  bool differs = false;
  for (std::size_t i = 0; i < a.queries.size(); ++i) differs |= a.queries[i].tokens != c.queries[i].tokens;
  EXPECT_TRUE(differs);
}

TEST(Synthetic, Validation) {
  SyntheticSpec s;
  s.clusters = 1;
  EXPECT_EQ(error_code([&] { generate_synthetic(s); }), Errc::kInvalidSpec);
  s = {};
  s.noise = 1.5;
  EXPECT_EQ(error_code([&] { generate_synthetic(s); }), Errc::kInvalidSpec);
  s = {};
  s.sequence_length = 0;
  EXPECT_EQ(error_code([&] { generate_synthetic(s); }), Errc::kInvalidSpec);
}

TEST(Synthetic, NoiselessTwoClusters) {
  SyntheticSpec s;
  s.clusters = 2;
  s.queries_per_cluster = 3;
  s.candidates_per_cluster = 4;
  s.noise = 0.0;
  const auto c = generate_synthetic(s);
  EXPECT_EQ(c.qrels.query_count(), 6u);
  for (const auto& q : c.queries) {
    const auto pos = c.qrels.positives(q.id);
    ASSERT_EQ(pos.size(), 4u);
    for (const auto& cand : c.candidates) {
      const bool same = cand.cluster == q.cluster;
      EXPECT_EQ(std::find(pos.begin(), pos.end(), cand.id) != pos.end(), same);
    }
  }
  EXPECT_DOUBLE_EQ(c.centroid_accuracy, 1.0);
}

TEST(Synthetic, ClustersAreSeparable) {
  SyntheticSpec s;
  s.clusters = 32;
  s.queries_per_cluster = 20;
  s.candidates_per_cluster = 20;
  EXPECT_GT(generate_synthetic(s).centroid_accuracy, 0.95);
}

TEST(Synthetic, TokensStayInModalityRange) {
  SyntheticSpec s;
  s.clusters = 3;
  s.query_modality = Modality::kFused;
  s.candidate_modality = Modality::kVisualDoc;
  const auto c = generate_synthetic(s);
  const auto vd = modality_base(Modality::kVisualDoc, s.vocab_per_modality);
  for (const auto& cand : c.candidates) {
    for (auto t : cand.tokens) {
      EXPECT_GE(t, vd);
      EXPECT_LT(t, vd + static_cast<std::int32_t>(s.vocab_per_modality));
    }
  }
}

TEST(Synthetic, CategoryForRoundTrips) {
  EXPECT_EQ(category_for(Modality::kText, Modality::kImage), Category::kTextToImage);
  EXPECT_EQ(category_for(Modality::kFused, Modality::kFused), Category::kFusedToFused);
  for (auto cat : kAllCategories) {
    const auto spec = source_spec(cat, SyntheticSpec{});
    EXPECT_EQ(category_for(spec.query_modality, spec.candidate_modality), cat);
  }
}

// Tiny world for trainer tests.
struct Tiny {
  SyntheticCorpus corpus;
  ToyEncoderParams params;
};

Tiny tiny(std::size_t embed_dim = 4) {
  SyntheticSpec s;
  s.clusters = 6;
  s.queries_per_cluster = 4;
  s.candidates_per_cluster = 4;
  s.vocab_per_modality = 64;
  s.topic_tokens = 3;
  s.sequence_length = 5;
  EncoderConfig e;
  e.feature_dim = 128;
  e.embed_dim = embed_dim;
  return {generate_synthetic(s), e.make()};
}

TEST(Trainer, GradientMatchesFiniteDifferences) {
  auto t = tiny();
  for (bool mean : {false, true}) {
    t.params.pooling = mean ? Pooling::kMean : Pooling::kLastToken;
    TrainSettings settings;
    settings.loss.temperature = 0.1;
    settings.loss.negatives_per_query = 3;
    Trainer trainer(t.params, {{"s", &t.corpus}}, full_pool(0, t.corpus), settings);
    const auto batch = trainer.probe_instances(4, 17);
    const auto g = batch_gradient(t.params, batch, settings.loss);
    EXPECT_NEAR(g.mean_loss, batch_loss(t.params, batch, settings.loss), 1e-12);

    std::vector<double> analytic(t.params.projection.size(), 0.0);
    for (const auto& [row, vals] : g.grad_projection) {
      for (std::size_t j = 0; j < vals.size(); ++j) analytic[row * t.params.embed_dim + j] = vals[j];
    }
    auto f = [&](const std::vector<double>& w) {
      auto p = t.params;
      p.projection = w;
      return batch_loss(p, batch, settings.loss);
    };
    const auto numeric = oracle::numeric_gradient(f, t.params.projection, 1e-6);
    EXPECT_LT(oracle::max_relative_error(analytic, numeric, 1e-3), 1e-3);
  }
}

TEST(Trainer, ZeroLearningRateKeepsParams) {
  auto t = tiny();
  TrainSettings settings;
  settings.learning_rate = 0.0;
  settings.loss.negatives_per_query = 3;
  Trainer trainer(t.params, {{"s", &t.corpus}}, full_pool(0, t.corpus), settings);
  trainer.run(5);
  EXPECT_EQ(trainer.params(), t.params);
  EXPECT_EQ(trainer.steps_done(), 5u);
}

TEST(Trainer, SplitRunEqualsOneRun) {
  auto t = tiny();
  TrainSettings settings;
  settings.loss.negatives_per_query = 3;
  Trainer a(t.params, {{"s", &t.corpus}}, full_pool(0, t.corpus), settings);
  Trainer b(t.params, {{"s", &t.corpus}}, full_pool(0, t.corpus), settings);
  a.run(30);
  b.run(12);
  b.run(18);
  EXPECT_EQ(a.params(), b.params());
  EXPECT_EQ(a.loss_trace(), b.loss_trace());
}

TEST(Trainer, Validation) {
  auto t = tiny();
  TrainSettings settings;
  settings.learning_rate = -1.0;
  EXPECT_EQ(error_code([&] { Trainer(t.params, {{"s", &t.corpus}}, full_pool(0, t.corpus), settings); }),
            Errc::kInvalidConfig);
  settings = {};
  EXPECT_EQ(error_code([&] { Trainer(t.params, {{"s", &t.corpus}}, {}, settings); }), Errc::kEmptyInput);
  Trainer ok(t.params, {{"s", &t.corpus}}, full_pool(0, t.corpus), settings);
  EXPECT_EQ(error_code([&] { ok.set_hard_negatives(0, {}); }), Errc::kDimensionMismatch);
  // candidate 0 is relevant to query 0 (same cluster)
  std::vector<std::vector<std::size_t>> lists(t.corpus.queries.size());
  lists[0] = {0};
  EXPECT_EQ(error_code([&] { ok.set_hard_negatives(0, lists); }), Errc::kInvalidConfig);
}

TEST(Trainer, DivergenceDetected) {
  auto t = tiny();
  TrainSettings settings;
  settings.learning_rate = 1e308;
  settings.loss.negatives_per_query = 3;
  Trainer trainer(t.params, {{"s", &t.corpus}}, full_pool(0, t.corpus), settings);
  EXPECT_EQ(error_code([&] { trainer.run(50); }), Errc::kDivergenceDetected);
}

TwoStageConfig small_two_stage() {
  TwoStageConfig cfg;
  cfg.data.clusters = 16;
  cfg.data.queries_per_cluster = 8;
  cfg.data.candidates_per_cluster = 8;
  cfg.encoder.feature_dim = 4096;
  cfg.stage1_steps = 60;
  cfg.stage2_steps = 40;
  cfg.mining.retrieve_k = 50;
  return cfg;
}

TEST(TwoStage, DeterministicAndLearns) {
  const auto cfg = small_two_stage();
  const auto a = two_stage(cfg);
  const auto b = two_stage(cfg);
  EXPECT_EQ(a.stage2, b.stage2);
  EXPECT_EQ(a.stage1_trace, b.stage1_trace);
  EXPECT_EQ(a.recall_stage2, b.recall_stage2);
  EXPECT_EQ(a.stage1_trace.size(), 60u);
  EXPECT_EQ(a.stage2_trace.size(), 40u);
  EXPECT_LE(a.probe_loss_stage1, 0.5 * a.probe_loss_initial);
  EXPECT_GT(a.recall_stage1, a.recall_untrained);
  EXPECT_FALSE(a.mined.instances.empty());
}

TEST(TwoStage, WithoutMiningStage2ContinuesStage1) {
  auto cfg = small_two_stage();
  cfg.hard_negatives = false;
  const auto split = two_stage(cfg);
  cfg.stage1_steps = 100;
  cfg.stage2_steps = 0;
  const auto whole = two_stage(cfg);
  EXPECT_EQ(split.stage2, whole.stage1);
  EXPECT_TRUE(split.mined.instances.empty());
}

TEST(MixStudy, ShapesAndDeterminism) {
  MixStudyConfig cfg;
  cfg.base.clusters = 8;
  cfg.base.queries_per_cluster = 4;
  cfg.base.candidates_per_cluster = 4;
  cfg.encoder.feature_dim = 2048;
  cfg.steps = 20;
  cfg.sources = {Category::kTextToText, Category::kTextToImage};
  const auto a = mix_study(cfg);
  ASSERT_EQ(a.models.size(), 3u);
  EXPECT_EQ(a.models.back(), "mixed");
  EXPECT_EQ(a.task_scores.size(), 3u);
  EXPECT_EQ(a.task_scores[0].size(), 2u);
  EXPECT_EQ(a.params.size(), 3u);
  EXPECT_EQ(a.traces[2].size(), 20u);
  std::size_t mixed_total = 0;
  for (const auto& [name, n] : a.mixed_manifest.per_source) mixed_total += n;
  EXPECT_EQ(mixed_total, a.mixed_manifest.entries.size());
  const auto b = mix_study(cfg);
  EXPECT_EQ(a.task_scores, b.task_scores);
  EXPECT_EQ(a.macro, b.macro);
}

}  // namespace
}  // namespace umr::toy

#include "umr/io/run_manifest.hpp"

#include <algorithm>

#include "umr/error.hpp"
#include "umr/io/binary.hpp"
#include "umr/rng.hpp"
#include "yaml_util.hpp"

namespace umr::io {

using detail::YamlReader;

namespace {

toy::Modality modality_at(const YamlReader& r, const YAML::Node& node) {
  const auto s = r.str(node, "modality");
  for (auto m : {toy::Modality::kText, toy::Modality::kImage, toy::Modality::kVisualDoc, toy::Modality::kFused}) {
    if (s == toy::modality_name(m)) return m;
  }
  r.fail(node, "unknown modality '" + s + "'");
}

toy::Pooling pooling_at(const YamlReader& r, const YAML::Node& node) {
  const auto s = r.str(node, "pooling");
  for (auto p : {toy::Pooling::kLastToken, toy::Pooling::kMean}) {
    if (s == toy::pooling_name(p)) return p;
  }
  r.fail(node, "pooling must be 'last_token' or 'mean'");
}

toy::InstructionMode instruction_at(const YamlReader& r, const YAML::Node& node) {
  const auto s = r.str(node, "instruction_mode");
  for (auto m : {toy::InstructionMode::kQueryOnly, toy::InstructionMode::kNone}) {
    if (s == toy::instruction_mode_name(m)) return m;
  }
  r.fail(node, "instruction_mode must be 'query_only' or 'none'");
}

std::uint64_t eval_seed_for(std::uint64_t seed) { return mix_seed(seed, stable_hash("held-out")); }

void set_all_seeds(ToyRunManifest& m, std::uint64_t seed) {
  for (toy::SyntheticSpec* d : {&m.two_stage.data, &m.mix.base}) {
    d->world_seed = seed;
    d->sample_seed = seed;
  }
  m.two_stage.eval_sample_seed = m.mix.eval_sample_seed = eval_seed_for(seed);
  m.two_stage.encoder.init_seed = m.mix.encoder.init_seed = seed;
  m.two_stage.train.seed = m.mix.train.seed = seed;
  m.two_stage.mining.seed = seed;
}

}  // namespace

void override_seed(ToyRunManifest& m, std::uint64_t seed) { set_all_seeds(m, seed); }

ToyRunManifest parse_toy_manifest(std::string_view text, const std::string& source) {
  const YamlReader r(source, {});
  const YAML::Node root = r.load(text);
  r.expect_map(root, "run manifest",
               {"name", "mode", "seed", "data", "eval", "encoder", "train", "mining", "mix", "ablations",
                "export_embeddings"});
  ToyRunManifest m;
  if (root["name"]) m.name = r.str(root["name"], "name");
  if (const auto mode = root["mode"]) {
    const auto s = r.str(mode, "mode");
    if (s == "two_stage") {
      m.mode = ToyMode::kTwoStage;
    } else if (s == "mix_study") {
      m.mode = ToyMode::kMixStudy;
    } else {
      r.fail(mode, "mode must be 'two_stage' or 'mix_study'");
    }
  }
  if (root["seed"]) set_all_seeds(m, r.uint(root["seed"], "seed"));

  auto& ts = m.two_stage;
  auto& mx = m.mix;

  if (const auto d = root["data"]) {
    r.expect_map(d, "data",
                 {"clusters", "queries_per_cluster", "candidates_per_cluster", "query_modality",
                  "candidate_modality", "vocab_per_modality", "topic_tokens", "sequence_length", "noise",
                  "instruction_length", "world_seed", "sample_seed"});
    for (toy::SyntheticSpec* s : {&ts.data, &mx.base}) {
      if (d["clusters"]) s->clusters = r.uint(d["clusters"], "clusters");
      if (d["queries_per_cluster"]) s->queries_per_cluster = r.uint(d["queries_per_cluster"], "queries_per_cluster");
      if (d["candidates_per_cluster"]) {
        s->candidates_per_cluster = r.uint(d["candidates_per_cluster"], "candidates_per_cluster");
      }
      if (d["query_modality"]) s->query_modality = modality_at(r, d["query_modality"]);
      if (d["candidate_modality"]) s->candidate_modality = modality_at(r, d["candidate_modality"]);
      if (d["vocab_per_modality"]) s->vocab_per_modality = r.uint(d["vocab_per_modality"], "vocab_per_modality");
      if (d["topic_tokens"]) s->topic_tokens = r.uint(d["topic_tokens"], "topic_tokens");
      if (d["sequence_length"]) s->sequence_length = r.uint(d["sequence_length"], "sequence_length");
      if (d["noise"]) s->noise = r.real(d["noise"], "noise");
      if (d["instruction_length"]) s->instruction_length = r.uint(d["instruction_length"], "instruction_length");
      if (d["world_seed"]) s->world_seed = r.uint(d["world_seed"], "world_seed");
      if (d["sample_seed"]) s->sample_seed = r.uint(d["sample_seed"], "sample_seed");
    }
    try {
      ts.data.validate();
    } catch (const Error& e) {
      r.fail(d, e.detail());
    }
  }

  if (const auto e = root["eval"]) {
    r.expect_map(e, "eval", {"queries_per_cluster", "candidates_per_cluster", "seed", "k", "probe_instances"});
    if (e["queries_per_cluster"]) {
      ts.eval_queries_per_cluster = mx.eval_queries_per_cluster = r.uint(e["queries_per_cluster"], "queries_per_cluster");
    }
    if (e["candidates_per_cluster"]) {
      ts.eval_candidates_per_cluster = mx.eval_candidates_per_cluster =
          r.uint(e["candidates_per_cluster"], "candidates_per_cluster");
    }
    if (e["seed"]) ts.eval_sample_seed = mx.eval_sample_seed = r.uint(e["seed"], "seed");
    if (e["k"]) {
      ts.eval_k = mx.eval_k = r.uint(e["k"], "k");
      if (ts.eval_k == 0) r.fail(e["k"], "k must be at least 1");
    }
    if (e["probe_instances"]) ts.probe_instances = r.uint(e["probe_instances"], "probe_instances");
  }

  if (const auto enc = root["encoder"]) {
    r.expect_map(enc, "encoder",
                 {"feature_dim", "embed_dim", "pooling", "instruction_mode", "context_decay", "hash_seed", "init_seed",
                  "init_scale"});
    for (toy::EncoderConfig* c : {&ts.encoder, &mx.encoder}) {
      if (enc["feature_dim"]) c->feature_dim = r.uint(enc["feature_dim"], "feature_dim");
      if (enc["embed_dim"]) c->embed_dim = r.uint(enc["embed_dim"], "embed_dim");
      if (enc["pooling"]) c->pooling = pooling_at(r, enc["pooling"]);
      if (enc["instruction_mode"]) c->instruction_mode = instruction_at(r, enc["instruction_mode"]);
      if (enc["context_decay"]) c->context_decay = r.real(enc["context_decay"], "context_decay");
      if (enc["hash_seed"]) c->hash_seed = r.uint(enc["hash_seed"], "hash_seed");
      if (enc["init_seed"]) c->init_seed = r.uint(enc["init_seed"], "init_seed");
      if (enc["init_scale"]) c->init_scale = r.real(enc["init_scale"], "init_scale");
    }
    if (ts.encoder.feature_dim == 0 || ts.encoder.embed_dim == 0) r.fail(enc, "encoder dims must be positive");
    if (!(ts.encoder.context_decay >= 0.0 && ts.encoder.context_decay <= 1.0)) {
      r.fail(enc, "context_decay must lie in [0, 1]");
    }
    if (!(ts.encoder.init_scale > 0.0)) r.fail(enc, "init_scale must be positive");
  }

  if (const auto t = root["train"]) {
    r.expect_map(t, "train",
                 {"temperature", "negatives", "share_in_batch_negatives", "learning_rate", "batch_size", "seed",
                  "stage1_steps", "stage2_steps", "steps", "hard_negatives"});
    for (toy::TrainSettings* s : {&ts.train, &mx.train}) {
      if (t["temperature"]) s->loss.temperature = r.real(t["temperature"], "temperature");
      if (t["negatives"]) s->loss.negatives_per_query = r.uint(t["negatives"], "negatives");
      if (t["share_in_batch_negatives"]) {
        s->loss.share_in_batch_negatives = r.boolean(t["share_in_batch_negatives"], "share_in_batch_negatives");
      }
      if (t["learning_rate"]) s->learning_rate = r.real(t["learning_rate"], "learning_rate");
      if (t["batch_size"]) s->batch_size = r.uint(t["batch_size"], "batch_size");
      if (t["seed"]) s->seed = r.uint(t["seed"], "seed");
    }
    if (t["stage1_steps"]) ts.stage1_steps = r.uint(t["stage1_steps"], "stage1_steps");
    if (t["stage2_steps"]) ts.stage2_steps = r.uint(t["stage2_steps"], "stage2_steps");
    if (t["steps"]) mx.steps = r.uint(t["steps"], "steps");
    if (t["hard_negatives"]) ts.hard_negatives = r.boolean(t["hard_negatives"], "hard_negatives");
    try {
      ts.train.loss.validate();
    } catch (const Error& e) {
      r.fail(t, e.detail());
    }
    if (!(ts.train.learning_rate >= 0.0)) r.fail(t["learning_rate"], "learning_rate must be non-negative");
    if (ts.train.batch_size == 0) r.fail(t["batch_size"], "batch_size must be positive");
  }

  if (const auto mi = root["mining"]) {
    r.expect_map(mi, "mining", {"retrieve_k", "negatives_out", "rank_window", "mode", "seed"});
    auto& c = ts.mining;
    if (mi["retrieve_k"]) c.retrieve_k = r.uint(mi["retrieve_k"], "retrieve_k");
    if (mi["negatives_out"]) c.negatives_out = r.uint(mi["negatives_out"], "negatives_out");
    if (const auto w = mi["rank_window"]) {
      r.expect_seq(w, "rank_window");
      if (w.size() != 2) r.fail(w, "rank_window must be [first, last]");
      c.rank_window = std::pair{static_cast<std::size_t>(r.uint(w[0], "rank_window")),
                                static_cast<std::size_t>(r.uint(w[1], "rank_window"))};
    }
    if (const auto mode = mi["mode"]) {
      const auto s = r.str(mode, "mode");
      if (s == "rank") {
        c.mode = MiningMode::kRank;
      } else if (s == "sample") {
        c.mode = MiningMode::kSample;
      } else {
        r.fail(mode, "mode must be 'rank' or 'sample'");
      }
    }
    if (mi["seed"]) c.seed = r.uint(mi["seed"], "seed");
    try {
      c.validate();
    } catch (const Error& e) {
      r.fail(mi, e.detail());
    }
  }

  if (const auto x = root["mix"]) {
    r.expect_map(x, "mix", {"sources"});
    if (const auto s = x["sources"]) {
      r.expect_seq(s, "sources");
      if (s.size() == 0) r.fail(s, "sources is empty");
      mx.sources.clear();
      for (const auto& item : s) {
        const auto label = r.str(item, "source");
        const auto c = parse_category(label);
        if (!c) r.fail(item, "unknown category '" + label + "'");
        if (std::find(mx.sources.begin(), mx.sources.end(), *c) != mx.sources.end()) {
          r.fail(item, "source '" + label + "' listed twice");
        }
        mx.sources.push_back(*c);
      }
    }
  }

  if (const auto a = root["ablations"]) {
    r.expect_seq(a, "ablations");
    for (const auto& item : a) {
      r.expect_map(item, "ablation", {"name", "pooling", "instruction_mode", "hard_negatives"});
      r.require(item, "name");
      Ablation ab;
      ab.name = r.str(item["name"], "name");
      if (ab.name.empty() || ab.name == "base" || ab.name.find('/') != std::string::npos) {
        r.fail(item["name"], "ablation name must be non-empty, not 'base', and contain no '/'");
      }
      for (const auto& prev : m.ablations) {
        if (prev.name == ab.name) r.fail(item["name"], "ablation '" + ab.name + "' defined twice");
      }
      if (item["pooling"]) ab.pooling = pooling_at(r, item["pooling"]);
      if (item["instruction_mode"]) ab.instruction_mode = instruction_at(r, item["instruction_mode"]);
      if (item["hard_negatives"]) ab.hard_negatives = r.boolean(item["hard_negatives"], "hard_negatives");
      m.ablations.push_back(std::move(ab));
    }
  }

  if (root["export_embeddings"]) m.export_embeddings = r.boolean(root["export_embeddings"], "export_embeddings");
  return m;
}

ToyRunManifest load_toy_manifest(const std::filesystem::path& path) {
  return parse_toy_manifest(read_file(path), path.string());
}

std::map<std::string, std::uint64_t> toy_seeds(const ToyRunManifest& m) {
  std::map<std::string, std::uint64_t> s;
  if (m.mode == ToyMode::kTwoStage) {
    const auto& c = m.two_stage;
    s["data.world_seed"] = c.data.world_seed;
    s["data.sample_seed"] = c.data.sample_seed;
    s["eval.seed"] = c.eval_sample_seed;
    s["encoder.hash_seed"] = c.encoder.hash_seed;
    s["encoder.init_seed"] = c.encoder.init_seed;
    s["train.seed"] = c.train.seed;
    s["mining.seed"] = c.mining.seed;
  } else {
    const auto& c = m.mix;
    s["data.world_seed"] = c.base.world_seed;
    s["data.sample_seed"] = c.base.sample_seed;
    s["eval.seed"] = c.eval_sample_seed;
    s["encoder.hash_seed"] = c.encoder.hash_seed;
    s["encoder.init_seed"] = c.encoder.init_seed;
    s["train.seed"] = c.train.seed;
  }
  return s;
}

}  // namespace umr::io

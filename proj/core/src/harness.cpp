#include "umr/harness.hpp"

#include <algorithm>
#include <exception>
#include <map>

#include "umr/error.hpp"
#include "umr/io/binary.hpp"
#include "umr/io/checkpoint.hpp"
#include "umr/io/container.hpp"
#include "umr/io/jsonl.hpp"
#include "umr/io/qrels_file.hpp"
#include "umr/parallel.hpp"
#include "umr/search.hpp"
#include "umr/version.hpp"

namespace umr {

namespace {

io::Provenance provenance(const std::string& sha, std::map<std::string, std::uint64_t> seeds = {}) {
  return io::Provenance{std::string(engine_version()), sha, std::move(seeds)};
}

struct LoadedTask {
  const io::TaskSpec* spec = nullptr;
  MetricSpec metric;
  EmbeddingMatrix queries;
  EmbeddingMatrix candidates;
  Qrels qrels;
};

MetricSpec resolve_metric(const io::TaskSpec& t, const EvalOptions& opts) {
  std::optional<MetricSpec> blanket, named;
  for (const auto& [task, spec] : opts.overrides) {
    if (task.empty()) {
      blanket = spec;
    } else if (task == t.name) {
      named = spec;
    }
  }
  if (named) return *named;
  if (blanket) return *blanket;
  if (t.metric) return *t.metric;
  return default_metric(t.category, t.recall10);
}

}  // namespace

io::EvalReport run_eval(const io::EvalManifest& manifest, const std::string& manifest_sha256,
                        const EvalOptions& opts) {
  for (const auto& [task, spec] : opts.overrides) {
    if (task.empty()) continue;
    const bool known = std::any_of(manifest.tasks.begin(), manifest.tasks.end(),
                                   [&](const io::TaskSpec& t) { return t.name == task; });
    if (!known) throw Error(Errc::kInvalidConfig, "metric override names unknown task '" + task + "'");
  }

  std::vector<LoadedTask> tasks;
  for (const auto& t : manifest.tasks) {
    if (opts.category && t.category != *opts.category) continue;
    LoadedTask lt;
    lt.spec = &t;
    lt.metric = resolve_metric(t, opts);
    lt.queries = io::read_container(t.queries);
    lt.candidates = io::read_container(t.candidates);
    lt.qrels = io::read_qrels(t.qrels);
    if (lt.queries.dim() != lt.candidates.dim()) {
      throw Error(Errc::kDimensionMismatch, "task '" + t.name + "': query dim " + std::to_string(lt.queries.dim()) +
                                                " != candidate dim " + std::to_string(lt.candidates.dim()));
    }
    tasks.push_back(std::move(lt));
  }
  if (tasks.empty()) throw Error(Errc::kEmptyInput, "no task left to evaluate");

  std::vector<io::DatasetRow> rows(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  parallel_for(tasks.size(), opts.workers, [&](std::size_t i, std::size_t) {
    try {
      const LoadedTask& lt = tasks[i];
      std::vector<std::vector<std::string>> exclude;
      if (lt.spec->exclude_self) {
        exclude.resize(lt.queries.count());
        for (std::size_t q = 0; q < lt.queries.count(); ++q) exclude[q].push_back(lt.queries.id(q));
      }
      const auto results = topk(lt.queries, lt.candidates, lt.metric.cutoff, exclude);
      const auto ev = evaluate_dataset(results, lt.qrels, lt.metric);
      auto& row = rows[i];
      row.name = lt.spec->name;
      row.category = lt.spec->category;
      row.metric = lt.metric;
      row.score = ev.score;
      row.queries = lt.queries.count();
      row.candidates = lt.candidates.count();
      row.judged_queries = ev.judged_queries;
      row.skipped_queries = ev.skipped_queries;
      row.instruction = lt.spec->instruction.value_or("");
    } catch (const Error& e) {
      errors[i] = std::make_exception_ptr(Error(e.code(), "task '" + tasks[i].spec->name + "': " + e.detail()));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::sort(rows.begin(), rows.end(), [](const io::DatasetRow& a, const io::DatasetRow& b) {
    return a.name != b.name ? a.name < b.name : a.category < b.category;
  });
  std::vector<DatasetScore> scores;
  for (const auto& r : rows) scores.push_back(DatasetScore{r.name, r.category, r.score});

  io::EvalReport report;
  report.manifest_name = manifest.name;
  std::map<std::string, std::uint64_t> seeds;
  if (opts.seed) seeds["seed"] = *opts.seed;
  report.provenance = provenance(manifest_sha256, std::move(seeds));
  report.datasets = std::move(rows);
  report.aggregate = aggregate(scores);
  return report;
}

void write_eval_outputs(const io::EvalReport& report, const std::filesystem::path& out_dir) {
  io::write_file(out_dir / "report.json", io::eval_report_json(report));
  io::write_file(out_dir / "report.txt", io::eval_report_table(report));
}

MiningResult run_mine(const io::MineManifest& manifest, const std::string& manifest_sha256,
                      const std::filesystem::path& out_dir) {
  const auto queries = io::read_container(manifest.queries);
  const auto candidates = io::read_container(manifest.candidates);
  const auto qrels = io::read_qrels(manifest.qrels);
  MiningResult result = mine(queries, candidates, qrels, manifest.config);
  io::write_file(out_dir / "instances.jsonl", io::format_training_instances(io::to_training_instances(result)));
  io::write_file(out_dir / "mining_report.json",
                 io::mining_report_json(result, manifest.config,
                                        provenance(manifest_sha256, {{"mining.seed", manifest.config.seed}})));
  return result;
}

PipelineOutput run_filter(const io::FilterManifest& manifest, const std::string& manifest_sha256,
                          std::size_t workers, const std::filesystem::path& out_dir) {
  const auto records = io::parse_synth_records(io::read_file(manifest.records), manifest.records.string());
  std::optional<EmbeddingMatrix> queries, passages;
  if (manifest.queries) queries = io::read_container(*manifest.queries);
  if (manifest.passages) passages = io::read_container(*manifest.passages);

  PipelineConfig cfg;
  cfg.queries = queries ? &*queries : nullptr;
  cfg.passages = passages ? &*passages : nullptr;
  cfg.top_n = manifest.top_n;
  cfg.score_threshold = manifest.score_threshold;
  cfg.domain_quota = manifest.domain_quota;
  cfg.min_domain_confidence = manifest.min_domain_confidence;
  cfg.seed = manifest.seed;
  cfg.workers = workers;
  PipelineOutput out = run_filter_pipeline(records, cfg);

  io::write_file(out_dir / "kept.jsonl", io::format_synth_records(out.result.kept));
  io::write_file(out_dir / "discarded.jsonl", io::format_discarded(out.result.discarded));
  io::write_file(out_dir / "filter_report.json",
                 io::pipeline_report_json(out, provenance(manifest_sha256, {{"seed", manifest.seed}})));
  io::write_file(out_dir / "filter_report.txt", io::pipeline_report_table(out.report));
  return out;
}

std::string path_slug(std::string_view name) {
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name.substr(i, 2) == "->") {
      out += "_to_";
      ++i;
    } else if (name[i] == '/' || name[i] == '\\' || name[i] == ' ') {
      out += '_';
    } else {
      out += name[i];
    }
  }
  return out;
}

namespace {

void export_heldout(const toy::ToyEncoderParams& params, const toy::SyntheticCorpus& corpus,
                    const toy::SyntheticSpec& spec, const std::string& run, const std::filesystem::path& dir) {
  const auto [q, c] = toy::embed_corpus(params, corpus);
  io::write_container(dir / "queries.umre", q);
  io::write_container(dir / "candidates.umre", c);
  io::write_qrels(dir / "qrels.tsv", corpus.qrels);
  io::EvalManifest m;
  m.name = run + "-heldout";
  io::TaskSpec t;
  t.name = run;
  const auto cat = toy::category_for(spec.query_modality, spec.candidate_modality);
  if (!cat) throw Error(Errc::kInvalidSpec, "modality pair has no retrieval category");
  t.category = *cat;
  t.queries = dir / "queries.umre";
  t.candidates = dir / "candidates.umre";
  t.qrels = dir / "qrels.tsv";
  m.tasks.push_back(t);
  io::write_file(dir / "manifest.yaml", io::format_eval_manifest(m, dir));
}

}  // namespace

ToyRunOutput run_toy(const io::ToyRunManifest& manifest, const std::string& manifest_sha256,
                     const std::filesystem::path& out_dir) {
  ToyRunOutput out;
  const io::Provenance prov = provenance(manifest_sha256, io::toy_seeds(manifest));

  if (manifest.mode == io::ToyMode::kMixStudy) {
    auto r = toy::mix_study(manifest.mix);
    for (std::size_t m = 0; m < r.models.size(); ++m) {
      const auto dir = out_dir / path_slug(r.models[m]);
      io::write_checkpoint(dir / "final.umrc", r.params[m]);
      io::write_file(dir / "loss_trace.csv", io::loss_trace_csv({r.traces[m]}, {"train"}));
    }
    io::write_file(out_dir / "grid.json", io::mix_grid_json(r, prov));
    io::write_file(out_dir / "grid.txt", io::mix_grid_table(r));
    out.mix = std::move(r);
    return out;
  }

  struct Variant {
    std::string name;
    toy::TwoStageConfig cfg;
  };
  std::vector<Variant> variants{{"base", manifest.two_stage}};
  for (const auto& a : manifest.ablations) {
    Variant v{a.name, manifest.two_stage};
    if (a.pooling) v.cfg.encoder.pooling = *a.pooling;
    if (a.instruction_mode) v.cfg.encoder.instruction_mode = *a.instruction_mode;
    if (a.hard_negatives) v.cfg.hard_negatives = *a.hard_negatives;
    variants.push_back(std::move(v));
  }

  for (const auto& v : variants) {
    io::TwoStageRun run;
    run.name = v.name;
    run.pooling = v.cfg.encoder.pooling;
    run.instruction_mode = v.cfg.encoder.instruction_mode;
    run.hard_negatives = v.cfg.hard_negatives;
    run.eval_k = v.cfg.eval_k;
    run.result = toy::two_stage(v.cfg);

    const auto dir = out_dir / path_slug(v.name);
    const auto& r = run.result;
    io::write_checkpoint(dir / "initial.umrc", r.initial);
    io::write_checkpoint(dir / "stage1.umrc", r.stage1);
    io::write_checkpoint(dir / "stage2.umrc", r.stage2);
    io::write_file(dir / "loss_trace.csv", io::loss_trace_csv({r.stage1_trace, r.stage2_trace}, {"stage1", "stage2"}));
    if (v.cfg.hard_negatives) {
      io::write_file(dir / "mined.jsonl", io::format_training_instances(io::to_training_instances(r.mined)));
    }
    if (manifest.export_embeddings) export_heldout(r.stage2, r.eval_corpus, v.cfg.data, v.name, dir / "heldout");
    out.runs.push_back(std::move(run));
  }
  io::write_file(out_dir / "grid.json", io::two_stage_grid_json(out.runs, prov));
  io::write_file(out_dir / "grid.txt", io::two_stage_grid_table(out.runs));
  return out;
}

}  // namespace umr

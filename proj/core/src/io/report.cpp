#include "umr/io/report.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

namespace umr::io {

using nlohmann::ordered_json;

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pct(double v) { return fixed(100.0 * v); }

ordered_json provenance_json(const Provenance& p) {
  ordered_json j;
  j["engine_version"] = p.engine_version;
  j["manifest_sha256"] = p.manifest_sha256;
  ordered_json seeds = ordered_json::object();
  for (const auto& [k, v] : p.seeds) seeds[k] = v;
  j["seeds"] = seeds;
  return j;
}

std::string provenance_text(const Provenance& p) {
  std::string out = "engine " + p.engine_version + "  manifest sha256 " + p.manifest_sha256 + "\n";
  if (!p.seeds.empty()) {
    out += "seeds:";
    for (const auto& [k, v] : p.seeds) out += " " + k + "=" + std::to_string(v);
    out += "\n";
  }
  return out;
}

// Left-aligned first column, right-aligned others, two spaces apart.
class Table {
 public:
  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  void rule() { rows_.emplace_back(); }

  std::string str() const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_) {
      if (width.size() < r.size()) width.resize(r.size(), 0);
      for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    std::string out;
    for (const auto& r : rows_) {
      if (r.empty()) {
        out += std::string(total > 2 ? total - 2 : 0, '-') + "\n";
        continue;
      }
      std::string line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        const std::string pad(width[i] - r[i].size(), ' ');
        if (i > 0) line += "  ";
        line += i == 0 ? r[i] + pad : pad + r[i];
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + "\n";
    }
    return out;
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::vector<Category> group_members(ModalityGroup g) {
  std::vector<Category> out;
  for (Category c : kAllCategories) {
    if (group_of(c) == g) out.push_back(c);
  }
  return out;
}

constexpr ModalityGroup kGroups[] = {ModalityGroup::kSingle, ModalityGroup::kCross, ModalityGroup::kFused};

}  // namespace

std::string eval_report_json(const EvalReport& r) {
  ordered_json j;
  j["report"] = "eval";
  j["manifest"] = r.manifest_name;
  j["provenance"] = provenance_json(r.provenance);
  ordered_json datasets = ordered_json::array();
  for (const auto& d : r.datasets) {
    ordered_json e;
    e["name"] = d.name;
    e["category"] = std::string(category_label(d.category));
    e["metric"] = d.metric.label();
    e["score"] = d.score;
    e["queries"] = d.queries;
    e["candidates"] = d.candidates;
    e["judged_queries"] = d.judged_queries;
    e["skipped_queries"] = d.skipped_queries;
    if (!d.instruction.empty()) e["instruction"] = d.instruction;
    datasets.push_back(std::move(e));
  }
  j["datasets"] = std::move(datasets);
  ordered_json cats = ordered_json::object();
  for (Category c : kAllCategories) {
    if (auto it = r.aggregate.per_category.find(c); it != r.aggregate.per_category.end()) {
      cats[std::string(category_label(c))] = it->second;
    }
  }
  j["per_category"] = std::move(cats);
  j["micro_average"] = r.aggregate.micro_average;
  return j.dump(2) + "\n";
}

std::string eval_report_table(const EvalReport& r) {
  std::string out = "manifest: " + r.manifest_name + "\n" + provenance_text(r.provenance) + "\n";

  Table grid;
  std::vector<std::string> groups{""}, labels{""}, counts{"datasets"}, scores{"score"};
  for (ModalityGroup g : kGroups) {
    const auto members = group_members(g);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const Category c = members[i];
      groups.push_back(i == 0 ? std::string(group_name(g)) : "");
      labels.push_back(std::string(category_label(c)));
      const auto n = std::count_if(r.datasets.begin(), r.datasets.end(),
                                   [&](const DatasetRow& d) { return d.category == c; });
      counts.push_back(std::to_string(n));
      const auto it = r.aggregate.per_category.find(c);
      scores.push_back(it == r.aggregate.per_category.end() ? "-" : pct(it->second));
    }
  }
  groups.push_back("");
  labels.push_back("Avg");
  counts.push_back(std::to_string(r.datasets.size()));
  scores.push_back(pct(r.aggregate.micro_average));
  grid.row(groups);
  grid.row(labels);
  grid.rule();
  grid.row(counts);
  grid.row(scores);
  out += grid.str() + "\n";

  Table per;
  per.row({"dataset", "category", "metric", "score", "queries", "judged", "skipped"});
  per.rule();
  for (const auto& d : r.datasets) {
    per.row({d.name, std::string(category_label(d.category)), d.metric.label(), pct(d.score),
             std::to_string(d.queries), std::to_string(d.judged_queries), std::to_string(d.skipped_queries)});
  }
  out += per.str();
  return out;
}

std::string mining_report_json(const MiningResult& r, const MiningConfig& cfg, const Provenance& p) {
  ordered_json j;
  j["report"] = "mine";
  j["provenance"] = provenance_json(p);
  ordered_json c;
  c["retrieve_k"] = cfg.retrieve_k;
  c["negatives_out"] = cfg.negatives_out;
  if (cfg.rank_window) {
    c["rank_window"] = {cfg.rank_window->first, cfg.rank_window->second};
  } else {
    c["rank_window"] = nullptr;
  }
  c["mode"] = cfg.mode == MiningMode::kRank ? "rank" : "sample";
  j["config"] = std::move(c);
  j["instances"] = r.instances.size();
  j["padded"] = std::count_if(r.instances.begin(), r.instances.end(), [](const auto& m) { return m.padded; });
  j["skipped_no_positive"] = r.skipped_no_positive;
  j["skipped_no_negative"] = r.skipped_no_negative;
  return j.dump(2) + "\n";
}

std::string pipeline_report_json(const PipelineOutput& out, const Provenance& p) {
  ordered_json j;
  j["report"] = "filter";
  j["provenance"] = provenance_json(p);
  j["total_input"] = out.report.total_input;
  j["total_kept"] = out.report.total_kept;
  j["overall_discard_fraction"] = out.report.overall_discard_fraction;
  ordered_json stages = ordered_json::array();
  for (const auto& s : out.report.stages) {
    ordered_json e;
    e["stage"] = s.stage;
    e["input"] = s.input;
    e["kept"] = s.kept;
    e["discarded"] = s.discarded;
    e["stage_fraction"] = s.stage_fraction;
    e["absolute_fraction"] = s.absolute_fraction;
    ordered_json reasons = ordered_json::object();
    for (const auto& [k, v] : s.reasons) reasons[k] = v;
    e["reasons"] = std::move(reasons);
    stages.push_back(std::move(e));
  }
  j["stages"] = std::move(stages);
  j["clamped_domains"] = out.clamped_domains;
  return j.dump(2) + "\n";
}

std::string pipeline_report_table(const PipelineReport& r) {
  Table t;
  t.row({"stage", "input", "kept", "discarded", "of stage %", "of total %"});
  t.rule();
  for (const auto& s : r.stages) {
    t.row({s.stage, std::to_string(s.input), std::to_string(s.kept), std::to_string(s.discarded),
           pct(s.stage_fraction), pct(s.absolute_fraction)});
  }
  t.rule();
  t.row({"total", std::to_string(r.total_input), std::to_string(r.total_kept),
         std::to_string(r.total_input - r.total_kept), "", pct(r.overall_discard_fraction)});
  return t.str();
}

std::string two_stage_grid_json(const std::vector<TwoStageRun>& runs, const Provenance& p) {
  ordered_json j;
  j["report"] = "two_stage";
  j["provenance"] = provenance_json(p);
  ordered_json rows = ordered_json::array();
  for (const auto& run : runs) {
    const auto& r = run.result;
    ordered_json e;
    e["name"] = run.name;
    e["pooling"] = std::string(toy::pooling_name(run.pooling));
    e["instruction_mode"] = std::string(toy::instruction_mode_name(run.instruction_mode));
    e["hard_negatives"] = run.hard_negatives;
    e["metric"] = MetricSpec{MetricKind::kRecall, run.eval_k}.label();
    e["train_centroid_accuracy"] = r.train_centroid_accuracy;
    e["recall_untrained"] = r.recall_untrained;
    e["recall_stage1"] = r.recall_stage1;
    e["recall_stage2"] = r.recall_stage2;
    e["probe_loss_initial"] = r.probe_loss_initial;
    e["probe_loss_stage1"] = r.probe_loss_stage1;
    e["probe_loss_stage2"] = r.probe_loss_stage2;
    e["mined_instances"] = r.mined.instances.size();
    e["mined_skipped_no_positive"] = r.mined.skipped_no_positive;
    e["mined_skipped_no_negative"] = r.mined.skipped_no_negative;
    rows.push_back(std::move(e));
  }
  j["runs"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string two_stage_grid_table(const std::vector<TwoStageRun>& runs) {
  Table t;
  const std::string k = runs.empty() ? "5" : std::to_string(runs.front().eval_k);
  t.row({"run", "pooling", "instruction", "hard neg", "R@" + k + " untrained", "R@" + k + " stage1",
         "R@" + k + " stage2", "probe loss 0", "probe loss 1", "probe loss 2"});
  t.rule();
  for (const auto& run : runs) {
    const auto& r = run.result;
    t.row({run.name, std::string(toy::pooling_name(run.pooling)),
           std::string(toy::instruction_mode_name(run.instruction_mode)), run.hard_negatives ? "yes" : "no",
           pct(r.recall_untrained), pct(r.recall_stage1), pct(r.recall_stage2), fixed(r.probe_loss_initial, 4),
           fixed(r.probe_loss_stage1, 4), fixed(r.probe_loss_stage2, 4)});
  }
  return t.str();
}

std::string mix_grid_json(const toy::MixStudyResult& r, const Provenance& p) {
  ordered_json j;
  j["report"] = "mix_study";
  j["provenance"] = provenance_json(p);
  j["models"] = r.models;
  ordered_json tasks = ordered_json::array();
  for (Category c : r.tasks) tasks.push_back(std::string(category_label(c)));
  j["tasks"] = std::move(tasks);
  ordered_json groups = ordered_json::array();
  for (ModalityGroup g : r.groups) groups.push_back(std::string(group_name(g)));
  j["groups"] = std::move(groups);
  j["task_scores"] = r.task_scores;
  j["group_scores"] = r.group_scores;
  j["macro"] = r.macro;
  ordered_json mix = ordered_json::object();
  for (const auto& [k, v] : r.mixed_manifest.per_source) mix[k] = v;
  j["mixed_per_source"] = std::move(mix);
  return j.dump(2) + "\n";
}

std::string mix_grid_table(const toy::MixStudyResult& r) {
  Table tasks;
  std::vector<std::string> head{"model \\ task"};
  for (Category c : r.tasks) head.push_back(std::string(category_label(c)));
  tasks.row(head);
  tasks.rule();
  for (std::size_t m = 0; m < r.models.size(); ++m) {
    std::vector<std::string> row{r.models[m]};
    for (double v : r.task_scores[m]) row.push_back(pct(v));
    tasks.row(row);
  }

  Table groups;
  std::vector<std::string> ghead{"model \\ group"};
  for (ModalityGroup g : r.groups) ghead.push_back(std::string(group_name(g)));
  ghead.push_back("macro");
  groups.row(ghead);
  groups.rule();
  for (std::size_t m = 0; m < r.models.size(); ++m) {
    std::vector<std::string> row{r.models[m]};
    for (double v : r.group_scores[m]) row.push_back(pct(v));
    row.push_back(pct(r.macro[m]));
    groups.row(row);
  }
  return tasks.str() + "\n" + groups.str();
}

std::string loss_trace_csv(const std::vector<std::vector<double>>& stages,
                           const std::vector<std::string>& stage_names) {
  std::string out = "step,stage,loss\n";
  std::size_t step = 0;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    for (double v : stages[s]) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += std::to_string(step++) + "," + stage_names.at(s) + "," + buf + "\n";
    }
  }
  return out;
}

}  // namespace umr::io

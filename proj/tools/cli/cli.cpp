#include "cli.hpp"

#include <CLI11.hpp>

#include <optional>
#include <string>
#include <vector>

#include "umr/error.hpp"
#include "umr/harness.hpp"
#include "umr/io/binary.hpp"
#include "umr/io/sha256.hpp"
#include "umr/parallel.hpp"

namespace umr::cli {

namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kSchema: return kExitSchema;
    case Errc::kMissingFile: return kExitMissingFile;
    case Errc::kBadMagic:
    case Errc::kVersionUnsupported:
    case Errc::kTruncatedFile:
    case Errc::kMalformedContainer: return kExitCorruptContainer;
    default: return kExitComputation;
  }
}

std::string manifest_hash(const std::string& path) { return io::sha256_hex(io::read_file(path)); }

struct Common {
  std::string manifest;
  std::string out;
  std::size_t workers = 0;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c, bool with_workers) {
  app->add_option("--manifest", c.manifest, "manifest file")->required();
  app->add_option("--out", c.out, "output directory")->required();
  if (with_workers) app->add_option("--workers", c.workers, "worker threads (default: UMR_WORKERS or cores)");
  app->add_option("--seed", c.seed, "override every seed");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Universal multimodal retrieval engine"};
  app.set_version_flag("--version", std::string(UMR_VERSION));
  app.require_subcommand(1);

  Common eval_c;
  std::string category;
  std::vector<std::string> overrides;
  auto* eval = app.add_subcommand("eval", "score embedding tasks listed in a manifest");
  add_common(eval, eval_c, true);
  eval->add_option("--category", category, "evaluate only tasks of this category, e.g. IT->IT");
  eval->add_option("--metric-override", overrides, "[task=]ndcg@k or [task=]recall@k")->take_all();

  Common mine_c;
  auto* mine_cmd = app.add_subcommand("mine", "mine hard negatives into a training instance file");
  add_common(mine_cmd, mine_c, true);

  Common filter_c;
  std::optional<std::size_t> top_n;
  std::optional<double> threshold;
  auto* filter = app.add_subcommand("filter", "filter synthesized records");
  add_common(filter, filter_c, true);
  filter->add_option("--top-n", top_n, "rank filter cutoff");
  filter->add_option("--threshold", threshold, "relevance score threshold");

  Common toy_c;
  auto* toy_cmd = app.add_subcommand("train-toy", "train the toy encoder from a run manifest");
  add_common(toy_cmd, toy_c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto workers_of = [](const Common& c) {
      const std::size_t w = c.workers == 0 ? default_workers() : c.workers;
      return w == 0 ? std::size_t{1} : w;
    };

    if (*eval) {
      EvalOptions opts;
      opts.workers = workers_of(eval_c);
      opts.seed = eval_c.seed;
      if (!category.empty()) {
        opts.category = parse_category(category);
        if (!opts.category) {
          err << "umr eval: unknown category '" << category << "'\n";
          return kExitUsage;
        }
      }
      for (const auto& o : overrides) {
        try {
          opts.overrides.push_back(io::parse_metric_override(o));
        } catch (const Error& e) {
          err << "umr eval: " << e.detail() << "\n";
          return kExitUsage;
        }
      }
      const auto manifest = io::load_eval_manifest(eval_c.manifest);
      const auto report = run_eval(manifest, manifest_hash(eval_c.manifest), opts);
      write_eval_outputs(report, eval_c.out);
      out << io::eval_report_table(report);
    } else if (*mine_cmd) {
      auto manifest = io::load_mine_manifest(mine_c.manifest);
      manifest.config.workers = workers_of(mine_c);
      if (mine_c.seed) manifest.config.seed = *mine_c.seed;
      const auto r = run_mine(manifest, manifest_hash(mine_c.manifest), mine_c.out);
      out << "mined " << r.instances.size() << " instances (" << r.skipped_no_positive << " queries without positive, "
          << r.skipped_no_negative << " without negative)\n";
    } else if (*filter) {
      auto manifest = io::load_filter_manifest(filter_c.manifest);
      if (top_n) {
        if (*top_n == 0) {
          err << "umr filter: --top-n must be at least 1\n";
          return kExitUsage;
        }
        manifest.top_n = *top_n;
      }
      if (threshold) manifest.score_threshold = *threshold;
      if (filter_c.seed) manifest.seed = *filter_c.seed;
      const auto r = run_filter(manifest, manifest_hash(filter_c.manifest), workers_of(filter_c), filter_c.out);
      out << io::pipeline_report_table(r.report);
    } else if (*toy_cmd) {
      auto manifest = io::load_toy_manifest(toy_c.manifest);
      if (toy_c.seed) io::override_seed(manifest, *toy_c.seed);
      const auto r = run_toy(manifest, manifest_hash(toy_c.manifest), toy_c.out);
      out << (r.mix ? io::mix_grid_table(*r.mix) : io::two_stage_grid_table(r.runs));
    }
  } catch (const Error& e) {
    err << "umr: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "umr: internal error: " << e.what() << "\n";
    return kExitComputation;
  }
  return kExitOk;
}

}  // namespace umr::cli

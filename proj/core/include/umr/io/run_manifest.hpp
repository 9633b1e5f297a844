#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "umr/toy/trainer.hpp"

namespace umr::io {

enum class ToyMode { kTwoStage, kMixStudy };

/// One extra two-stage run that differs from the base run on a few axes.
struct Ablation {
  std::string name;
  std::optional<toy::Pooling> pooling;
  std::optional<toy::InstructionMode> instruction_mode;
  std::optional<bool> hard_negatives;
};

struct ToyRunManifest {
  std::string name = "toy";
  ToyMode mode = ToyMode::kTwoStage;
  toy::TwoStageConfig two_stage;
  toy::MixStudyConfig mix;
  std::vector<Ablation> ablations;
  /// Write held-out embeddings, qrels and an eval manifest per run.
  bool export_embeddings = false;
};

/// Keys: name, mode, seed, data, eval, encoder, train, mining, mix,
/// ablations, export. A top-level `seed` fills every seed not set
/// explicitly inside a section.
ToyRunManifest parse_toy_manifest(std::string_view text, const std::string& source);
ToyRunManifest load_toy_manifest(const std::filesystem::path& path);

/// Overwrites every seed (data, sampling, init, training, mining).
void override_seed(ToyRunManifest& m, std::uint64_t seed);

/// Named seeds of the configured run, for report provenance.
std::map<std::string, std::uint64_t> toy_seeds(const ToyRunManifest& m);

}  // namespace umr::io

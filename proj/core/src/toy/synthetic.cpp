#include "umr/toy/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "umr/error.hpp"
#include "umr/rng.hpp"

namespace umr::toy {

void SyntheticSpec::validate() const {
  if (clusters < 2) throw Error(Errc::kInvalidSpec, "need at least 2 clusters");
  if (queries_per_cluster == 0 || candidates_per_cluster == 0) {
    throw Error(Errc::kInvalidSpec, "items per cluster must be positive");
  }
  if (sequence_length == 0) throw Error(Errc::kInvalidSpec, "sequence_length must be positive");
  if (topic_tokens == 0 || topic_tokens > vocab_per_modality) {
    throw Error(Errc::kInvalidSpec, "topic_tokens must be in [1, vocab_per_modality]");
  }
  if (!(noise >= 0.0 && noise <= 1.0)) throw Error(Errc::kInvalidSpec, "noise must lie in [0, 1]");
  if (vocab_per_modality == 0 || vocab_per_modality > (1u << 26)) {
    throw Error(Errc::kInvalidSpec, "vocab_per_modality out of range");
  }
}

std::int32_t modality_base(Modality m, std::size_t vocab_per_modality) {
  std::size_t slot = 0;
  switch (m) {
    case Modality::kText: slot = 0; break;
    case Modality::kImage: slot = 1; break;
    case Modality::kVisualDoc: slot = 2; break;
    case Modality::kFused: slot = 0; break;
  }
  return static_cast<std::int32_t>(slot * vocab_per_modality);
}

namespace {

constexpr std::size_t kModalitySlots = 3;

// Topic tokens of one cluster inside one pure modality.
std::vector<std::int32_t> topics(const SyntheticSpec& spec, Modality m, std::size_t cluster) {
  std::uint64_t salt = stable_hash(spec.topic_namespace);
  salt = mix_seed(salt, static_cast<std::uint64_t>(m));
  salt = mix_seed(salt, cluster);
  Rng rng(mix_seed(spec.world_seed, salt));
  std::set<std::int32_t> picked;
  const std::int32_t base = modality_base(m, spec.vocab_per_modality);
  while (picked.size() < spec.topic_tokens) {
    picked.insert(base + static_cast<std::int32_t>(rng.uniform_index(spec.vocab_per_modality)));
  }
  return {picked.begin(), picked.end()};
}

std::vector<std::int32_t> sample_tokens(const SyntheticSpec& spec, Modality m, std::size_t cluster, Rng& rng) {
  std::vector<Modality> parts;
  if (m == Modality::kFused) {
    parts = {Modality::kText, Modality::kImage};
  } else {
    parts = {m};
  }
  std::vector<std::int32_t> seq;
  seq.reserve(spec.sequence_length);
  for (std::size_t t = 0; t < spec.sequence_length; ++t) {
    // fused items alternate image and text positions
    const Modality part = parts[t % parts.size()];
    if (rng.uniform01() < spec.noise) {
      seq.push_back(modality_base(part, spec.vocab_per_modality) +
                    static_cast<std::int32_t>(rng.uniform_index(spec.vocab_per_modality)));
    } else {
      const auto topic = topics(spec, part, cluster);
      seq.push_back(topic[rng.uniform_index(topic.size())]);
    }
  }
  return seq;
}

std::vector<std::int32_t> instruction_tokens(const SyntheticSpec& spec) {
  Rng rng(mix_seed(spec.world_seed, stable_hash("instruction/" + spec.topic_namespace)));
  const auto base = static_cast<std::int32_t>(kModalitySlots * spec.vocab_per_modality);
  std::vector<std::int32_t> out;
  for (std::size_t i = 0; i < spec.instruction_length; ++i) {
    out.push_back(base + static_cast<std::int32_t>(rng.uniform_index(256)));
  }
  return out;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticCorpus corpus;
  Rng rng(mix_seed(spec.sample_seed, stable_hash(spec.topic_namespace)));
  const auto instruction = instruction_tokens(spec);

  for (std::size_t c = 0; c < spec.clusters; ++c) {
    for (std::size_t i = 0; i < spec.queries_per_cluster; ++i) {
      ToyItem item;
      item.id = spec.id_prefix + "q" + std::to_string(corpus.queries.size());
      item.tokens = sample_tokens(spec, spec.query_modality, c, rng);
      item.modality = spec.query_modality;
      item.instruction = instruction;
      item.cluster = static_cast<int>(c);
      corpus.queries.push_back(std::move(item));
    }
    for (std::size_t i = 0; i < spec.candidates_per_cluster; ++i) {
      ToyItem item;
      item.id = spec.id_prefix + "c" + std::to_string(corpus.candidates.size());
      item.tokens = sample_tokens(spec, spec.candidate_modality, c, rng);
      item.modality = spec.candidate_modality;
      item.cluster = static_cast<int>(c);
      corpus.candidates.push_back(std::move(item));
    }
  }
  for (const auto& q : corpus.queries) {
    for (const auto& c : corpus.candidates) {
      if (q.cluster == c.cluster) corpus.qrels.add(q.id, c.id, 1);
    }
  }
  corpus.centroid_accuracy = nearest_centroid_accuracy(corpus);
  return corpus;
}

namespace {

using Bag = std::map<std::int32_t, double>;

Bag bag_of(const ToyItem& item) {
  Bag b;
  for (auto t : item.tokens) b[t] += 1.0;
  return b;
}

double bag_cosine(const Bag& a, const Bag& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (const auto& [t, v] : a) {
    aa += v * v;
    if (auto it = b.find(t); it != b.end()) ab += v * it->second;
  }
  for (const auto& [t, v] : b) bb += v * v;
  return (aa == 0.0 || bb == 0.0) ? 0.0 : ab / std::sqrt(aa * bb);
}

std::size_t centroid_hits(const std::vector<ToyItem>& items) {
  std::map<int, Bag> centroids;
  for (const auto& item : items) {
    for (const auto& [t, v] : bag_of(item)) centroids[item.cluster][t] += v;
  }
  std::size_t hits = 0;
  for (const auto& item : items) {
    const Bag bag = bag_of(item);
    int best = -1;
    double best_sim = -2.0;
    for (const auto& [cluster, centroid] : centroids) {
      const double s = bag_cosine(bag, centroid);
      if (s > best_sim) {
        best_sim = s;
        best = cluster;
      }
    }
    if (best == item.cluster) ++hits;
  }
  return hits;
}

}  // namespace

double nearest_centroid_accuracy(const SyntheticCorpus& corpus) {
  const std::size_t total = corpus.queries.size() + corpus.candidates.size();
  if (total == 0) return 0.0;
  return static_cast<double>(centroid_hits(corpus.queries) + centroid_hits(corpus.candidates)) /
         static_cast<double>(total);
}

SyntheticSpec source_spec(Category category, const SyntheticSpec& base) {
  SyntheticSpec s = base;
  s.topic_namespace = std::string(category_label(category));
  switch (category) {
    case Category::kTextToText:
      s.query_modality = Modality::kText;
      s.candidate_modality = Modality::kText;
      break;
    case Category::kImageToImage:
      s.query_modality = Modality::kImage;
      s.candidate_modality = Modality::kImage;
      break;
    case Category::kTextToImage:
      s.query_modality = Modality::kText;
      s.candidate_modality = Modality::kImage;
      break;
    case Category::kTextToVisualDoc:
      s.query_modality = Modality::kText;
      s.candidate_modality = Modality::kVisualDoc;
      break;
    case Category::kImageToText:
      s.query_modality = Modality::kImage;
      s.candidate_modality = Modality::kText;
      break;
    case Category::kTextToFused:
      s.query_modality = Modality::kText;
      s.candidate_modality = Modality::kFused;
      break;
    case Category::kFusedToText:
      s.query_modality = Modality::kFused;
      s.candidate_modality = Modality::kText;
      break;
    case Category::kFusedToImage:
      s.query_modality = Modality::kFused;
      s.candidate_modality = Modality::kImage;
      break;
    case Category::kFusedToFused:
      s.query_modality = Modality::kFused;
      s.candidate_modality = Modality::kFused;
      break;
  }
  return s;
}

std::optional<Category> category_for(Modality query, Modality candidate) {
  for (Category c : kAllCategories) {
    const SyntheticSpec s = source_spec(c, SyntheticSpec{});
    if (s.query_modality == query && s.candidate_modality == candidate) return c;
  }
  return std::nullopt;
}

}  // namespace umr::toy

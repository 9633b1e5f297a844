#include "umr/dataflow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "umr/error.hpp"
#include "umr/parallel.hpp"
#include "umr/rng.hpp"
#include "umr/search.hpp"

namespace umr {

// ---------------------------------------------------------------------------
// mix

MixManifest mix(const std::vector<SourceSpec>& sources, std::size_t total, std::uint64_t seed) {
  if (sources.empty()) throw Error(Errc::kInvalidConfig, "mix: no sources");
  if (total == 0) throw Error(Errc::kInvalidConfig, "mix: total must be positive");

  std::set<std::string> names;
  std::size_t fixed = 0;
  double weight_sum = 0.0;
  for (const auto& s : sources) {
    if (!names.insert(s.name).second) throw Error(Errc::kInvalidConfig, "mix: duplicate source '" + s.name + "'");
    if (s.quota) {
      fixed += *s.quota;
    } else {
      if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
        throw Error(Errc::kInvalidConfig, "mix: source '" + s.name + "' has an invalid weight");
      }
      weight_sum += s.weight;
    }
  }
  if (fixed > total) throw Error(Errc::kInvalidConfig, "mix: fixed quotas exceed total");
  const std::size_t rest = total - fixed;
  if (rest > 0 && weight_sum <= 0.0) {
    throw Error(Errc::kInvalidConfig, "mix: total exceeds fixed quotas but no source carries weight");
  }

  // Largest-remainder apportionment of `rest` over weighted sources.
  std::vector<std::size_t> counts(sources.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].quota) {
      counts[i] = *sources[i].quota;
      continue;
    }
    if (rest == 0) continue;
    const double exact = static_cast<double>(rest) * sources[i].weight / weight_sum;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < rest && r < remainders.size(); ++r, ++assigned) {
    ++counts[remainders[r].second];
  }

  MixManifest out;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    if (counts[i] > s.available) {
      throw Error(Errc::kQuotaExceedsSource, "source '" + s.name + "' needs " + std::to_string(counts[i]) +
                                                 " records but has " + std::to_string(s.available));
    }
    std::vector<std::size_t> idx(s.available);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(mix_seed(seed, i + 1));
    for (std::size_t j = 0; j < counts[i]; ++j) {  // partial Fisher-Yates
      const auto pick = j + static_cast<std::size_t>(rng.uniform_index(s.available - j));
      std::swap(idx[j], idx[pick]);
      out.entries.push_back(MixEntry{s.name, idx[j]});
    }
    out.per_source[s.name] = counts[i];
  }
  Rng order(mix_seed(seed, 0));
  order.shuffle(std::span<MixEntry>(out.entries));
  return out;
}

// ---------------------------------------------------------------------------
// filters

std::string_view discard_reason_name(DiscardReason r) noexcept {
  switch (r) {
    case DiscardReason::kRankBeyondTopN: return "rank_beyond_top_n";
    case DiscardReason::kLowRelevanceScore: return "low_relevance_score";
    case DiscardReason::kMissingRelevanceScore: return "missing_relevance_score";
    case DiscardReason::kLowDomainConfidence: return "low_domain_confidence";
    case DiscardReason::kMissingDomainLabel: return "missing_domain_label";
    case DiscardReason::kDomainQuota: return "domain_quota";
  }
  return "unknown";
}

namespace {

std::vector<const SynthRecord*> sorted_by_id(const std::vector<SynthRecord>& records) {
  std::vector<const SynthRecord*> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->record_id < b->record_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i - 1]->record_id == out[i]->record_id) {
      throw Error(Errc::kDuplicateId, "duplicate record_id '" + out[i]->record_id + "'");
    }
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

FilterResult rank_filter(const std::vector<SynthRecord>& records, const EmbeddingMatrix& queries,
                         const EmbeddingMatrix& passages, std::size_t top_n, const QueryPassageMap& qmap,
                         std::size_t workers) {
  if (top_n == 0) throw Error(Errc::kInvalidConfig, "rank_filter: top_n must be >= 1");
  if (queries.dim() != passages.dim()) throw Error(Errc::kDimensionMismatch, "rank_filter: query/passage dim");
  const auto sorted = sorted_by_id(records);

  std::vector<std::pair<std::size_t, std::size_t>> rows(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto [qid, pid] = qmap ? qmap(*sorted[i]) : std::pair{sorted[i]->record_id, sorted[i]->passage_id};
    const auto q = queries.find(qid);
    if (!q) throw Error(Errc::kUnknownId, "rank_filter: no query embedding for '" + qid + "'");
    const auto p = passages.find(pid);
    if (!p) throw Error(Errc::kUnknownId, "rank_filter: no passage embedding for '" + pid + "'");
    rows[i] = {*q, *p};
  }

  std::vector<std::size_t> ranks(sorted.size());
  parallel_for(sorted.size(), workers, [&](std::size_t i, std::size_t) {
    ranks[i] = rank_of_index(rows[i].first, rows[i].second, queries, passages);
  });

  FilterResult out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (ranks[i] <= top_n) {
      out.kept.push_back(*sorted[i]);
    } else {
      out.discarded.push_back(Discarded{*sorted[i], DiscardReason::kRankBeyondTopN,
                                        "rank " + std::to_string(ranks[i]) + " > " + std::to_string(top_n)});
    }
  }
  return out;
}

FilterResult score_filter(const std::vector<SynthRecord>& records, double threshold) {
  FilterResult out;
  for (const SynthRecord* r : sorted_by_id(records)) {
    if (r->image_source == ImageSource::kGenerated) {
      out.kept.push_back(*r);
    } else if (!r->relevance_score) {
      out.discarded.push_back(Discarded{*r, DiscardReason::kMissingRelevanceScore, "retrieved image without score"});
    } else if (*r->relevance_score < threshold) {
      out.discarded.push_back(Discarded{*r, DiscardReason::kLowRelevanceScore,
                                        fmt_double(*r->relevance_score) + " < " + fmt_double(threshold)});
    } else {
      out.kept.push_back(*r);
    }
  }
  return out;
}

DomainBalanceResult domain_balance(const std::vector<SynthRecord>& records, std::size_t per_domain_quota,
                                   std::uint64_t seed, double min_confidence) {
  DomainBalanceResult out;
  std::vector<Discarded> discarded;
  std::map<std::string, std::vector<const SynthRecord*>> domains;
  for (const SynthRecord* r : sorted_by_id(records)) {
    if (!r->domain_label || !r->domain_confidence) {
      discarded.push_back(Discarded{*r, DiscardReason::kMissingDomainLabel, "no domain label"});
    } else if (!(*r->domain_confidence > min_confidence)) {
      discarded.push_back(Discarded{*r, DiscardReason::kLowDomainConfidence,
                                    fmt_double(*r->domain_confidence) + " <= " + fmt_double(min_confidence)});
    } else {
      domains[*r->domain_label].push_back(r);
    }
  }

  std::vector<const SynthRecord*> kept;
  for (auto& [name, members] : domains) {
    if (members.size() < per_domain_quota) out.clamped_domains.push_back(name);
    Rng rng(mix_seed(seed, stable_hash(name)));
    rng.shuffle(std::span<const SynthRecord*>(members));
    const std::size_t take = std::min(per_domain_quota, members.size());
    kept.insert(kept.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    for (std::size_t i = take; i < members.size(); ++i) {
      discarded.push_back(Discarded{*members[i], DiscardReason::kDomainQuota,
                                    "domain '" + name + "' over quota " + std::to_string(per_domain_quota)});
    }
  }

  std::sort(kept.begin(), kept.end(), [](const auto* a, const auto* b) { return a->record_id < b->record_id; });
  for (const auto* r : kept) out.result.kept.push_back(*r);
  std::sort(discarded.begin(), discarded.end(),
            [](const auto& a, const auto& b) { return a.record.record_id < b.record.record_id; });
  out.result.discarded = std::move(discarded);
  return out;
}

namespace {

StageReport stage_report(std::string name, std::size_t input, std::size_t total, const FilterResult& r) {
  StageReport s;
  s.stage = std::move(name);
  s.input = input;
  s.kept = r.kept.size();
  s.discarded = r.discarded.size();
  s.stage_fraction = input == 0 ? 0.0 : static_cast<double>(s.discarded) / static_cast<double>(input);
  s.absolute_fraction = total == 0 ? 0.0 : static_cast<double>(s.discarded) / static_cast<double>(total);
  for (const auto& d : r.discarded) ++s.reasons[std::string(discard_reason_name(d.reason))];
  return s;
}

}  // namespace

PipelineOutput run_filter_pipeline(const std::vector<SynthRecord>& records, const PipelineConfig& cfg) {
  PipelineOutput out;
  const std::size_t total = records.size();
  out.report.total_input = total;
  std::vector<SynthRecord> current = records;
  std::vector<Discarded> all_discarded;

  auto absorb = [&](std::string stage, FilterResult r) {
    out.report.stages.push_back(stage_report(std::move(stage), current.size(), total, r));
    for (auto& d : r.discarded) all_discarded.push_back(std::move(d));
    current = std::move(r.kept);
  };

  if (cfg.queries != nullptr && cfg.passages != nullptr) {
    absorb("rank_filter", rank_filter(current, *cfg.queries, *cfg.passages, cfg.top_n, {}, cfg.workers));
  }
  absorb("score_filter", score_filter(current, cfg.score_threshold));
  if (cfg.domain_quota) {
    auto balanced = domain_balance(current, *cfg.domain_quota, cfg.seed, cfg.min_domain_confidence);
    out.clamped_domains = std::move(balanced.clamped_domains);
    absorb("domain_balance", std::move(balanced.result));
  }

  std::sort(all_discarded.begin(), all_discarded.end(),
            [](const auto& a, const auto& b) { return a.record.record_id < b.record.record_id; });
  out.result.kept = std::move(current);
  out.result.discarded = std::move(all_discarded);
  out.report.total_kept = out.result.kept.size();
  out.report.overall_discard_fraction =
      total == 0 ? 0.0 : static_cast<double>(total - out.report.total_kept) / static_cast<double>(total);
  return out;
}

}  // namespace umr

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "textpref/error.hpp"
#include "textpref/prompts.hpp"  // RatingSupport
#include "textpref/records.hpp"
#include "textpref/registry.hpp"

namespace textpref {

/// Positive class = 1 = normal text.
struct ConfusionCounts {
  long long tp = 0, tn = 0, fp = 0, fn = 0;
};

/// Matthews correlation coefficient. Equals the Pearson correlation of the
/// truth/prediction 0-1 vectors whenever that is defined; when any
/// denominator factor is zero the result is 0 by convention.
inline double mcc(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  const double f1 = tp + fp, f2 = tp + fn, f3 = tn + fp, f4 = tn + fn;
  if (f1 == 0 || f2 == 0 || f3 == 0 || f4 == 0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(f1 * f2 * f3 * f4);
}

/// How unparseable responses enter the scores. Drop excludes them from all
/// metrics; Wrong keeps them for F1 as a wrong-class prediction (MCC and KL
/// always use parsed records only).
enum class UnparsedPolicy { Drop, Wrong };

inline UnparsedPolicy unparsed_policy_from_string(std::string_view s) {
  if (s == "drop") return UnparsedPolicy::Drop;
  if (s == "wrong") return UnparsedPolicy::Wrong;
  throw ValidationError("unknown unparsed policy: '" + std::string(s) +
                        "' (expected drop|wrong)");
}

namespace detail {

/// The class a deliberately-wrong prediction lands in, deterministic.
inline int wrong_class(int truth, RatingSupport support) {
  const int span = support.hi - support.lo + 1;
  return support.lo + ((truth - support.lo + 1) % span);
}

struct LabeledPair {
  int truth;
  int pred;
};

/// Materialize (truth, prediction) pairs for F1 under the given policy.
inline std::vector<LabeledPair> f1_pairs(std::span<const RatingRecord> records,
                                         RatingSupport support,
                                         UnparsedPolicy policy) {
  std::vector<LabeledPair> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.predicted) out.push_back({r.true_label, *r.predicted});
    else if (policy == UnparsedPolicy::Wrong)
      out.push_back({r.true_label, wrong_class(r.true_label, support)});
  }
  return out;
}

}  // namespace detail

/// Unweighted mean of per-class F1, averaged over the classes present in the
/// truth labels. A truth class never predicted contributes F1 = 0.
inline double macro_f1(std::span<const RatingRecord> records,
                       RatingSupport support = {0, 1},
                       UnparsedPolicy policy = UnparsedPolicy::Drop) {
  const auto pairs = detail::f1_pairs(records, support, policy);
  if (pairs.empty())
    throw ValidationError("macro_f1: no scored records");
  std::map<int, bool> truth_classes;
  for (const auto& p : pairs) truth_classes[p.truth] = true;
  double sum = 0.0;
  for (const auto& [cls, _] : truth_classes) {
    long long tp = 0, fp = 0, fn = 0;
    for (const auto& p : pairs) {
      const bool t = p.truth == cls, q = p.pred == cls;
      if (t && q) ++tp;
      else if (!t && q) ++fp;
      else if (t && !q) ++fn;
    }
    const double precision = (tp + fp) == 0 ? 0.0 : double(tp) / double(tp + fp);
    const double recall = (tp + fn) == 0 ? 0.0 : double(tp) / double(tp + fn);
    sum += (precision + recall) == 0.0
               ? 0.0
               : 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(truth_classes.size());
}

/// Binary confusion counts over parsed records (positive class = 1).
inline ConfusionCounts confusion(std::span<const RatingRecord> records) {
  ConfusionCounts c;
  for (const auto& r : records) {
    if (!r.predicted) continue;
    const bool truth_pos = r.true_label == 1;
    const bool pred_pos = *r.predicted == 1;
    if (truth_pos && pred_pos) ++c.tp;
    else if (truth_pos && !pred_pos) ++c.fn;
    else if (!truth_pos && pred_pos) ++c.fp;
    else ++c.tn;
  }
  return c;
}

/// KL(P||Q) in nats, where P is the smoothed empirical distribution of the
/// ratings given to normal text and Q the one for degraded text, both over
/// the task's rating support. Additive smoothing:
/// p_v = (count_v + eps) / (N + eps * |support|).
inline double kl_divergence(const std::vector<int>& normal_ratings,
                            const std::vector<int>& degraded_ratings,
                            double epsilon = 1e-6,
                            RatingSupport support = {0, 1}) {
  if (normal_ratings.empty() || degraded_ratings.empty())
    throw ValidationError("kl_divergence: empty rating list");
  if (!(epsilon > 0.0))
    throw ValidationError("kl_divergence: epsilon must be positive");
  const int span = support.hi - support.lo + 1;
  if (span < 1) throw ValidationError("kl_divergence: bad rating support");
  std::vector<double> p_cnt(span, 0.0), q_cnt(span, 0.0);
  const auto tally = [&](const std::vector<int>& ratings, std::vector<double>& cnt) {
    for (int v : ratings) {
      if (v < support.lo || v > support.hi)
        throw ValidationError("kl_divergence: rating " + std::to_string(v) +
                              " outside support");
      cnt[v - support.lo] += 1.0;
    }
  };
  tally(normal_ratings, p_cnt);
  tally(degraded_ratings, q_cnt);
  const double pn = static_cast<double>(normal_ratings.size()) + epsilon * span;
  const double qn = static_cast<double>(degraded_ratings.size()) + epsilon * span;
  double kl = 0.0;
  for (int i = 0; i < span; ++i) {
    const double p = (p_cnt[i] + epsilon) / pn;
    const double q = (q_cnt[i] + epsilon) / qn;
    kl += p * std::log(p / q);
  }
  return std::max(kl, 0.0);
}

// ---------------------------------------------------------------------------
// Grouped metrics
// ---------------------------------------------------------------------------

struct GroupReport {
  std::string key;
  std::size_t n = 0;                // scored records in the group
  std::optional<double> mcc;        // binary support only
  std::optional<double> kl;         // needs both normal and degraded ratings
  double f1_macro = 0.0;

  bool operator==(const GroupReport&) const = default;
};

enum class GroupDimension {
  All,  // one group holding every record
  Language,
  ResourceLevel,
  HrLr,
  Family,
  Script,
  SupportedBy,
};

inline GroupDimension group_dimension_from_string(std::string_view s) {
  if (s == "all") return GroupDimension::All;
  if (s == "language") return GroupDimension::Language;
  if (s == "resource_level") return GroupDimension::ResourceLevel;
  if (s == "hr_lr") return GroupDimension::HrLr;
  if (s == "family") return GroupDimension::Family;
  if (s == "script") return GroupDimension::Script;
  if (s.rfind("supported_by", 0) == 0) return GroupDimension::SupportedBy;
  throw ValidationError(
      "unknown grouping dimension: '" + std::string(s) +
      "' (expected all|language|resource_level|hr_lr|family|script|supported_by:<model>)");
}

struct GroupOptions {
  double epsilon = 1e-6;
  UnparsedPolicy policy = UnparsedPolicy::Drop;
  RatingSupport support = {0, 1};
  bool allow_unknown = false;  // group unknown languages under "Unknown"
  std::string model;           // for GroupDimension::SupportedBy
};

namespace detail {

inline std::string group_key(const RatingRecord& r, const Registry& registry,
                             GroupDimension dim, const GroupOptions& opts) {
  if (dim == GroupDimension::All) return "all";
  if (dim == GroupDimension::Language) return r.lang;
  const LanguageMeta* meta = registry.find(r.lang);
  if (!meta) {
    if (!opts.allow_unknown)
      throw ValidationError("unknown language code: " + r.lang +
                            " (use allow-unknown to group it separately)");
    return "Unknown";
  }
  switch (dim) {
    case GroupDimension::ResourceLevel:
      return std::to_string(meta->resource_level);
    case GroupDimension::HrLr:
      return std::string(to_string(resource_class(*meta)));
    case GroupDimension::Family:
      return meta->family.empty() ? "Unknown" : meta->family;
    case GroupDimension::Script:
      return meta->script;
    case GroupDimension::SupportedBy: {
      if (opts.model.empty())
        throw ValidationError("supported_by grouping needs a model name");
      return meta->supported_by.count(opts.model) ? "supported" : "unsupported";
    }
    case GroupDimension::All:
    case GroupDimension::Language: break;
  }
  throw Error("unreachable group dimension");
}

}  // namespace detail

/// One report per non-empty group, sorted by key. Per-group metrics use only
/// that group's records. MCC is computed for binary supports; KL whenever
/// the group has parsed ratings for both normal and degraded truth.
inline std::vector<GroupReport> group_metrics(
    std::span<const RatingRecord> records, const Registry& registry,
    GroupDimension dim, const GroupOptions& opts = {}) {
  std::map<std::string, std::vector<RatingRecord>> groups;
  for (const auto& r : records)
    groups[detail::group_key(r, registry, dim, opts)].push_back(r);

  std::vector<GroupReport> out;
  for (const auto& [key, recs] : groups) {
    const auto scored = detail::f1_pairs(recs, opts.support, opts.policy);
    if (scored.empty()) continue;
    GroupReport g;
    g.key = key;
    g.n = scored.size();
    g.f1_macro = macro_f1(recs, opts.support, opts.policy);
    const bool binary = opts.support.hi - opts.support.lo == 1;
    if (binary) {
      g.mcc = mcc(confusion(recs));
      std::vector<int> normal, degraded;
      for (const auto& r : recs) {
        if (!r.predicted) continue;
        if (r.true_label == 1) normal.push_back(*r.predicted);
        else degraded.push_back(*r.predicted);
      }
      if (!normal.empty() && !degraded.empty())
        g.kl = kl_divergence(normal, degraded, opts.epsilon, opts.support);
    }
    out.push_back(std::move(g));
  }
  return out;
}

struct Improvement {
  std::string key;
  std::optional<double> percent;  // empty when the base value is 0

  bool operator==(const Improvement&) const = default;
};

enum class MetricField { Mcc, Kl, F1Macro };

inline MetricField metric_field_from_string(std::string_view s) {
  if (s == "mcc") return MetricField::Mcc;
  if (s == "kl") return MetricField::Kl;
  if (s == "f1" || s == "f1_macro") return MetricField::F1Macro;
  throw ValidationError("unknown metric field: '" + std::string(s) +
                        "' (expected mcc|kl|f1)");
}

inline std::optional<double> metric_value(const GroupReport& g, MetricField f) {
  switch (f) {
    case MetricField::Mcc: return g.mcc;
    case MetricField::Kl: return g.kl;
    case MetricField::F1Macro: return g.f1_macro;
  }
  throw Error("unreachable metric field");
}

/// 100 * (new - base) / base per group key. Group keys must match exactly;
/// a zero base yields an undefined marker rather than infinity.
inline std::vector<Improvement> percent_improvement(
    std::span<const GroupReport> base, std::span<const GroupReport> next,
    MetricField field) {
  std::map<std::string, const GroupReport*> base_by_key, next_by_key;
  for (const auto& g : base) base_by_key[g.key] = &g;
  for (const auto& g : next) next_by_key[g.key] = &g;
  std::string missing;
  for (const auto& [k, _] : base_by_key)
    if (!next_by_key.count(k)) missing += " " + k;
  for (const auto& [k, _] : next_by_key)
    if (!base_by_key.count(k)) missing += " " + k;
  if (!missing.empty())
    throw ValidationError("percent_improvement: group keys mismatch:" + missing);

  std::vector<Improvement> out;
  for (const auto& [key, b] : base_by_key) {
    const GroupReport* n = next_by_key.at(key);
    const auto bv = metric_value(*b, field);
    const auto nv = metric_value(*n, field);
    Improvement imp;
    imp.key = key;
    if (bv && nv && *bv != 0.0) imp.percent = 100.0 * (*nv - *bv) / *bv;
    out.push_back(std::move(imp));
  }
  return out;
}

}  // namespace textpref

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "textpref/corpus.hpp"
#include "textpref/error.hpp"
#include "textpref/registry.hpp"
#include "textpref/rng.hpp"

namespace textpref {

struct ShuffleParams {
  int min_moved = 3;
  int max_moved = 6;
  std::uint64_t seed = 0;
};

/// Tokenize by splitting on runs of U+0020 only. Tabs and newlines stay
/// inside tokens; leading/trailing spaces produce no empty tokens.
inline std::vector<std::string> space_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

namespace detail {
inline void validate_params(const ShuffleParams& p) {
  if (p.min_moved < 2)
    throw ValidationError("shuffle: min_moved must be >= 2");
  if (p.min_moved > p.max_moved)
    throw ValidationError("shuffle: min_moved must be <= max_moved");
}
}  // namespace detail

/// Displace exactly k tokens of `text`, k drawn uniformly from
/// [min_moved, min(max_moved, token_count)]: choose k positions without
/// replacement and apply a random derangement to them, so every chosen
/// token ends up carrying a different value than before. The output token
/// multiset always equals the input's, and the output differs from the
/// input. Deterministic for a fixed (text, params).
///
/// Repeated tokens can make a candidate derangement displace fewer than k
/// values; such candidates are rejected and redrawn. Texts where no
/// admissible displacement exists (e.g. all tokens identical) are reported
/// NotDegradable.
inline std::string shuffle_words(std::string_view text,
                                 const ShuffleParams& params) {
  detail::validate_params(params);
  const std::vector<std::string> tokens = space_tokens(text);
  const std::size_t n = tokens.size();
  const std::size_t needed = static_cast<std::size_t>(params.min_moved) + 1;
  if (n < needed)
    throw NotDegradable("text has " + std::to_string(n) + " tokens, needs >= " +
                        std::to_string(needed));

  Rng rng(params.seed);
  const std::size_t k_max =
      std::min<std::size_t>(static_cast<std::size_t>(params.max_moved), n);
  const auto draw_k = [&] {
    return static_cast<std::size_t>(
        rng.range(params.min_moved, static_cast<std::int64_t>(k_max)));
  };

  std::size_t k = draw_k();
  constexpr int kMaxAttempts = 2000;
  std::vector<std::string> out;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    if (attempt > 0 && attempt % 200 == 0) k = draw_k();
    const auto positions = sample_indices(n, k, rng);
    const auto perm = random_derangement(k, rng);
    out = tokens;
    for (std::size_t i = 0; i < k; ++i)
      out[positions[i]] = tokens[positions[perm[i]]];
    std::size_t displaced = 0;
    for (std::size_t i = 0; i < k; ++i)
      if (out[positions[i]] != tokens[positions[i]]) ++displaced;
    if (displaced == k) return join_tokens(out);
  }
  throw NotDegradable(
      "token repetition prevents displacing the requested number of tokens");
}

struct DegradeReport {
  std::size_t degraded = 0;
  // languages skipped because the registry marks them non-degradable
  std::map<std::string, std::size_t> skipped_languages;
  // passage id -> reason, for degradable-language passages that failed
  std::vector<std::pair<std::string, std::string>> failures;
};

/// One degraded passage per normal passage of a degradable language. The
/// degraded id is the source id plus "::deg". Each passage degrades under
/// its own sub-seed, so removing one passage never changes another's output.
inline Corpus build_degraded_corpus(const Corpus& corpus,
                                    const Registry& registry,
                                    const ShuffleParams& params,
                                    DegradeReport* report = nullptr,
                                    bool strict = false,
                                    bool allow_unknown = false) {
  detail::validate_params(params);
  DegradeReport local;
  DegradeReport& rep = report ? *report : local;
  Corpus out;
  for (const Passage& p : corpus.passages()) {
    if (p.label != kLabelNormal)
      throw ValidationError("degrade input must be normal-only; passage '" +
                            p.id + "' is degraded");
    const LanguageMeta* meta = registry.find(p.lang);
    if (!meta) {
      if (allow_unknown) {
        ++rep.skipped_languages[p.lang];
        continue;
      }
      throw ValidationError("unknown language code: " + p.lang +
                            " (passage '" + p.id + "')");
    }
    if (!meta->degradable) {
      ++rep.skipped_languages[p.lang];
      continue;
    }
    ShuffleParams per_passage = params;
    per_passage.seed = sub_seed(params.seed, p.id);
    try {
      Passage d;
      d.id = p.id + "::deg";
      d.lang = p.lang;
      d.text = shuffle_words(p.text, per_passage);
      d.label = kLabelDegraded;
      d.source_id = p.id;
      out.add(std::move(d));
      ++rep.degraded;
    } catch (const NotDegradable& e) {
      if (strict) throw;
      rep.failures.emplace_back(p.id, e.what());
    }
  }
  return out;
}

}  // namespace textpref

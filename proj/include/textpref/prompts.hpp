#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "textpref/error.hpp"
#include "textpref/io.hpp"
#include "textpref/rng.hpp"

namespace textpref {

enum class PromptKind {
  quality_binary,
  mela_acceptability,
  sentiment_ternary,
  summarize,
};

inline constexpr std::array<PromptKind, 4> kAllPromptKinds = {
    PromptKind::quality_binary, PromptKind::mela_acceptability,
    PromptKind::sentiment_ternary, PromptKind::summarize};

inline std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::quality_binary: return "quality";
    case PromptKind::mela_acceptability: return "mela";
    case PromptKind::sentiment_ternary: return "sentiment";
    case PromptKind::summarize: return "summarize";
  }
  throw Error("unreachable prompt kind");
}

inline PromptKind prompt_kind_from_string(std::string_view name) {
  for (PromptKind k : kAllPromptKinds)
    if (name == to_string(k)) return k;
  throw ValidationError("unknown prompt kind: '" + std::string(name) +
                        "' (expected quality|mela|sentiment|summarize)");
}

/// Template file name and its substitution placeholder.
inline std::string_view template_filename(PromptKind kind) {
  switch (kind) {
    case PromptKind::quality_binary: return "quality_binary.txt";
    case PromptKind::mela_acceptability: return "mela_acceptability.txt";
    case PromptKind::sentiment_ternary: return "sentiment_ternary.txt";
    case PromptKind::summarize: return "summarize.txt";
  }
  throw Error("unreachable prompt kind");
}

inline std::string_view placeholder(PromptKind kind) {
  switch (kind) {
    case PromptKind::quality_binary: return "{passage}";
    case PromptKind::mela_acceptability: return "{sentence}";
    case PromptKind::sentiment_ternary: return "{text}";
    case PromptKind::summarize: return "{text}";
  }
  throw Error("unreachable prompt kind");
}

/// Inclusive rating range a task's answers are parsed against.
struct RatingSupport {
  int lo = 0;
  int hi = 1;
};

inline RatingSupport rating_support(PromptKind kind) {
  switch (kind) {
    case PromptKind::quality_binary: return {0, 1};
    case PromptKind::mela_acceptability: return {0, 1};
    case PromptKind::sentiment_ternary: return {0, 2};
    case PromptKind::summarize: return {1, 5};  // generic 1-5 scale parsing
  }
  throw Error("unreachable prompt kind");
}

struct ChatMessage {
  std::string role;     // "user" or "assistant"
  std::string content;  // non-empty

  bool operator==(const ChatMessage&) const = default;
};

/// Answer cue appended to the quality prompt at inference time. The other
/// templates already end with it.
inline constexpr std::string_view kQualityAnswerCue = "\n\nYour Answer:";
inline constexpr std::string_view kQualityPassageMarker = "Passage:\n\n";

/// The four prompt templates, loaded from data files so their bytes stay an
/// external, checksummable contract rather than escaped string literals.
class TemplateSet {
 public:
  static TemplateSet load(const std::filesystem::path& dir) {
    TemplateSet set;
    for (PromptKind kind : kAllPromptKinds) {
      const auto path = dir / template_filename(kind);
      std::string text = read_file(path);
      if (text.empty())
        throw ValidationError("empty template file: " + path.string());
      const std::string_view ph = placeholder(kind);
      const std::size_t first = text.find(ph);
      if (first == std::string::npos)
        throw ValidationError(path.string() + ": missing placeholder " +
                              std::string(ph));
      if (text.find(ph, first + ph.size()) != std::string::npos)
        throw ValidationError(path.string() + ": placeholder " +
                              std::string(ph) + " must appear exactly once");
      set.templates_[kind] = std::move(text);
    }
    return set;
  }

  const std::string& raw(PromptKind kind) const { return templates_.at(kind); }

  std::uint64_t checksum(PromptKind kind) const {
    return fnv1a64(templates_.at(kind));
  }

  /// Substitute the payload verbatim into the template. For the quality
  /// prompt, inference mode appends the answer cue; the other templates are
  /// identical in both modes because the cue is part of their body.
  std::string render(PromptKind kind, std::string_view payload,
                     bool inference) const {
    if (payload.empty())
      throw ValidationError("render: empty payload for prompt kind '" +
                            std::string(to_string(kind)) + "'");
    const std::string& tpl = templates_.at(kind);
    const std::string_view ph = placeholder(kind);
    const std::size_t at = tpl.find(ph);
    std::string out;
    out.reserve(tpl.size() + payload.size());
    out.append(tpl, 0, at);
    out.append(payload);
    out.append(tpl, at + ph.size(), std::string::npos);
    if (inference && kind == PromptKind::quality_binary)
      out.append(kQualityAnswerCue);
    return out;
  }

 private:
  std::map<PromptKind, std::string> templates_;
};

/// Recover the passage payload from a rendered quality prompt (used by the
/// in-process toy judge backend). Returns nullopt for foreign text.
inline std::optional<std::string> extract_quality_payload(
    std::string_view rendered) {
  const std::size_t at = rendered.rfind(kQualityPassageMarker);
  if (at == std::string_view::npos) return std::nullopt;
  std::string_view tail = rendered.substr(at + kQualityPassageMarker.size());
  if (tail.ends_with(kQualityAnswerCue))
    tail.remove_suffix(kQualityAnswerCue.size());
  if (tail.empty()) return std::nullopt;
  return std::string(tail);
}

}  // namespace textpref

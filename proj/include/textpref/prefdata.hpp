#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "textpref/corpus.hpp"
#include "textpref/error.hpp"
#include "textpref/io.hpp"
#include "textpref/prompts.hpp"

namespace textpref {

/// One DPO training record. The assistant message repeats the full prompt
/// and then states the rating, matching the published training format; the
/// separator is " \nRating: [[r]]" (note the space before the newline).
struct PreferenceTriple {
  std::vector<ChatMessage> prompt;    // exactly one user message
  std::vector<ChatMessage> chosen;    // user + assistant
  std::vector<ChatMessage> rejected;  // user + assistant

  bool operator==(const PreferenceTriple&) const = default;
};

inline std::string rating_suffix(int rating) {
  return " \nRating: [[" + std::to_string(rating) + "]]";
}

/// Chosen carries the passage's true label as its rating, rejected the
/// flipped one: normal passages are chosen-[[1]], degraded chosen-[[0]].
inline PreferenceTriple build_triple(const Passage& passage,
                                     const TemplateSet& templates) {
  const std::string prompt = templates.render(PromptKind::quality_binary,
                                              passage.text,
                                              /*inference=*/false);
  const int r = passage.label;
  PreferenceTriple t;
  t.prompt = {{"user", prompt}};
  t.chosen = {{"user", prompt}, {"assistant", prompt + rating_suffix(r)}};
  t.rejected = {{"user", prompt}, {"assistant", prompt + rating_suffix(1 - r)}};
  return t;
}

inline std::vector<PreferenceTriple> build_triples(const Corpus& corpus,
                                                   const TemplateSet& templates) {
  std::vector<PreferenceTriple> out;
  out.reserve(corpus.size());
  for (const Passage& p : corpus.passages())
    out.push_back(build_triple(p, templates));
  return out;
}

namespace detail {

/// Parse "<prefix> \nRating: [[r]]" and return r, or -1 if malformed.
inline int split_rating(std::string_view assistant, std::string_view prompt) {
  if (assistant.size() <= prompt.size() ||
      assistant.substr(0, prompt.size()) != prompt)
    return -1;
  const std::string_view tail = assistant.substr(prompt.size());
  if (tail == rating_suffix(0)) return 0;
  if (tail == rating_suffix(1)) return 1;
  return -1;
}

inline void validate_triple(const PreferenceTriple& t, const std::string& where) {
  const auto fail = [&](const std::string& msg) {
    throw ValidationError(where + ": " + msg);
  };
  if (t.prompt.size() != 1 || t.prompt[0].role != "user")
    fail("prompt must be a single user message");
  if (t.prompt[0].content.empty()) fail("empty prompt content");
  for (const auto* side : {&t.chosen, &t.rejected}) {
    const char* name = side == &t.chosen ? "chosen" : "rejected";
    if (side->size() != 2 || (*side)[0].role != "user" ||
        (*side)[1].role != "assistant")
      fail(std::string(name) + " must be [user, assistant]");
    if ((*side)[0].content != t.prompt[0].content)
      fail(std::string(name) + " user content differs from prompt");
  }
  const int r_chosen =
      split_rating(t.chosen[1].content, t.prompt[0].content);
  const int r_rejected =
      split_rating(t.rejected[1].content, t.prompt[0].content);
  if (r_chosen < 0) fail("chosen assistant content is not prompt + rating");
  if (r_rejected < 0) fail("rejected assistant content is not prompt + rating");
  if (r_chosen == r_rejected)
    fail("chosen and rejected ratings agree (" + std::to_string(r_chosen) + ")");
}

inline json messages_to_json(const std::vector<ChatMessage>& msgs) {
  json arr = json::array();
  for (const auto& m : msgs) arr.push_back({{"role", m.role}, {"content", m.content}});
  return arr;
}

inline std::vector<ChatMessage> messages_from_json(const json& arr) {
  std::vector<ChatMessage> out;
  for (const auto& m : arr)
    out.push_back({m.at("role").get<std::string>(),
                   m.at("content").get<std::string>()});
  return out;
}

}  // namespace detail

/// JSONL, one triple per line:
/// {"prompt":[{"role","content"}],"chosen":[...],"rejected":[...]}.
inline std::size_t export_triples(std::span<const PreferenceTriple> triples,
                                  const std::filesystem::path& path) {
  JsonlWriter out(path);
  for (const auto& t : triples) {
    json rec;
    rec["prompt"] = detail::messages_to_json(t.prompt);
    rec["chosen"] = detail::messages_to_json(t.chosen);
    rec["rejected"] = detail::messages_to_json(t.rejected);
    out.write(rec);
  }
  return out.count();
}

/// Import re-validates every invariant; errors name the record index.
inline std::vector<PreferenceTriple> import_triples(
    const std::filesystem::path& path) {
  std::vector<PreferenceTriple> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    const std::string where =
        path.string() + ": record " + std::to_string(out.size()) + " (line " +
        std::to_string(line_no) + ")";
    PreferenceTriple t;
    try {
      t.prompt = detail::messages_from_json(rec.at("prompt"));
      t.chosen = detail::messages_from_json(rec.at("chosen"));
      t.rejected = detail::messages_from_json(rec.at("rejected"));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": bad record: " + e.what());
    }
    detail::validate_triple(t, where);
    out.push_back(std::move(t));
  });
  return out;
}

}  // namespace textpref

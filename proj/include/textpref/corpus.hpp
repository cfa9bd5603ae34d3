#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textpref/error.hpp"
#include "textpref/io.hpp"
#include "textpref/registry.hpp"
#include "textpref/rng.hpp"

namespace textpref {

inline constexpr int kLabelDegraded = 0;
inline constexpr int kLabelNormal = 1;

/// One text sample. Degraded passages point back at their normal twin via
/// `source_id`. Text is kept byte-for-byte; no Unicode normalization.
struct Passage {
  std::string id;
  std::string lang;
  std::string text;
  int label = kLabelNormal;
  std::optional<std::string> source_id;

  bool operator==(const Passage&) const = default;
};

/// Whether loading should require every degraded passage's source_id to
/// resolve inside the same corpus. Auto enforces the check only when the
/// corpus contains at least one normal passage; a degraded-only file is a
/// view onto an external base corpus and its sources live elsewhere.
enum class SourceCheck { Auto, Require, Skip };

class Corpus {
 public:
  Corpus() = default;

  void add(Passage p) {
    validate_passage(p);
    if (by_id_.count(p.id))
      throw ValidationError("duplicate passage id: " + p.id);
    by_id_.emplace(p.id, passages_.size());
    by_lang_[p.lang].push_back(passages_.size());
    passages_.push_back(std::move(p));
  }

  std::size_t size() const { return passages_.size(); }
  bool empty() const { return passages_.empty(); }
  const std::vector<Passage>& passages() const { return passages_; }

  const Passage* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &passages_[it->second];
  }

  /// lang -> passage indices, ordered by language code.
  const std::map<std::string, std::vector<std::size_t>>& by_lang() const {
    return by_lang_;
  }

  std::vector<std::string> languages() const {
    std::vector<std::string> out;
    out.reserve(by_lang_.size());
    for (const auto& [lang, _] : by_lang_) out.push_back(lang);
    return out;
  }

  /// Enforce source_id resolvability according to `check`.
  void validate_sources(SourceCheck check = SourceCheck::Auto) const {
    if (check == SourceCheck::Skip) return;
    if (check == SourceCheck::Auto) {
      const bool has_normal =
          std::any_of(passages_.begin(), passages_.end(),
                      [](const Passage& p) { return p.label == kLabelNormal; });
      if (!has_normal) return;
    }
    for (const Passage& p : passages_) {
      if (p.label != kLabelDegraded) continue;
      const Passage* src = find(*p.source_id);
      if (!src)
        throw ValidationError("passage '" + p.id + "': source_id '" +
                              *p.source_id + "' does not resolve");
      if (src->label != kLabelNormal)
        throw ValidationError("passage '" + p.id + "': source '" +
                              *p.source_id + "' is not a normal passage");
    }
  }

  // -- file formats ---------------------------------------------------------

  /// JSONL record: {"id","lang","text","label","source_id"?}. A record
  /// lacking "label" defaults to normal.
  static Corpus load_jsonl(const std::filesystem::path& path,
                           SourceCheck check = SourceCheck::Auto) {
    Corpus c;
    for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
      const std::string where =
          path.string() + ":" + std::to_string(line_no);
      Passage p;
      try {
        p.id = rec.at("id").get<std::string>();
        p.lang = rec.at("lang").get<std::string>();
        p.text = rec.at("text").get<std::string>();
        if (rec.contains("label")) p.label = rec.at("label").get<int>();
        if (rec.contains("source_id") && !rec.at("source_id").is_null())
          p.source_id = rec.at("source_id").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(where + ": bad record: " + e.what());
      }
      try {
        c.add(std::move(p));
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
    });
    c.validate_sources(check);
    return c;
  }

  /// TSV with header `id<TAB>lang<TAB>text`; normal-only ingestion. The text
  /// column is everything after the second tab.
  static Corpus load_tsv(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    Corpus c;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
      std::size_t eol = content.find('\n', pos);
      if (eol == std::string::npos) eol = content.size();
      std::string_view line(content.data() + pos, eol - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      pos = eol + 1;
      ++line_no;
      if (line.empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(line_no);
      if (line_no == 1) {
        if (line != "id\tlang\ttext")
          throw ValidationError(where + ": expected header 'id\\tlang\\ttext'");
        continue;
      }
      const std::size_t t1 = line.find('\t');
      const std::size_t t2 =
          t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string_view::npos)
        throw ValidationError(where + ": expected 3 tab-separated columns");
      Passage p;
      p.id = std::string(line.substr(0, t1));
      p.lang = std::string(line.substr(t1 + 1, t2 - t1 - 1));
      p.text = std::string(line.substr(t2 + 1));
      try {
        c.add(std::move(p));
      } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
      }
    }
    return c;
  }

  void save_jsonl(const std::filesystem::path& path) const {
    JsonlWriter out(path);
    for (const Passage& p : passages_) {
      json rec;
      rec["id"] = p.id;
      rec["lang"] = p.lang;
      rec["text"] = p.text;
      rec["label"] = p.label;
      if (p.source_id) rec["source_id"] = *p.source_id;
      out.write(rec);
    }
  }

 private:
  static void validate_passage(const Passage& p) {
    if (p.id.empty()) throw ValidationError("passage with empty id");
    if (p.text.empty())
      throw ValidationError("passage '" + p.id + "': empty text");
    if (p.lang.empty())
      throw ValidationError("passage '" + p.id + "': empty lang");
    if (p.label != kLabelNormal && p.label != kLabelDegraded)
      throw ValidationError("passage '" + p.id + "': label must be 0 or 1");
    if (p.label == kLabelDegraded && !p.source_id)
      throw ValidationError("passage '" + p.id +
                            "': degraded passage without source_id");
    if (p.label == kLabelNormal && p.source_id)
      throw ValidationError("passage '" + p.id +
                            "': normal passage must not carry source_id");
  }

  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> by_lang_;
};

/// Merge two corpora into one (ids must stay unique); the result must be
/// internally consistent, so source resolvability is enforced.
inline Corpus merge(const Corpus& a, const Corpus& b) {
  Corpus out;
  for (const Passage& p : a.passages()) out.add(p);
  for (const Passage& p : b.passages()) out.add(p);
  out.validate_sources(SourceCheck::Auto);
  return out;
}

/// Exactly n passages per language, selected deterministically. Selection is
/// keyed by sorted passage ids under a per-language sub-seed, so it does not
/// depend on input file ordering and adding a language never perturbs the
/// samples of another. Output is ordered by (lang, id).
inline Corpus sample_per_language(const Corpus& corpus, std::size_t n,
                                  std::uint64_t seed,
                                  const std::vector<std::string>& exclude_ids = {}) {
  Corpus out;
  if (n == 0) return out;
  std::unordered_map<std::string, bool> excluded;
  for (const auto& id : exclude_ids) excluded[id] = true;
  for (const auto& [lang, indices] : corpus.by_lang()) {
    std::vector<std::string> ids;
    ids.reserve(indices.size());
    for (std::size_t i : indices) {
      const auto& id = corpus.passages()[i].id;
      if (!excluded.count(id)) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    if (ids.size() < n)
      throw ValidationError("language '" + lang + "' has only " +
                            std::to_string(ids.size()) +
                            " passages, need " + std::to_string(n));
    Rng rng(sub_seed(seed, lang));
    auto picks = sample_indices(ids.size(), n, rng);
    std::sort(picks.begin(), picks.end());
    for (std::size_t k : picks) out.add(*corpus.find(ids[k]));
  }
  return out;
}

/// Keep only passages whose language the registry marks degradable.
/// Unknown languages are hard errors unless `allow_unknown`, in which case
/// they are treated as non-degradable and dropped.
inline Corpus filter_degradable(const Corpus& corpus, const Registry& registry,
                                bool allow_unknown = false) {
  Corpus out;
  for (const Passage& p : corpus.passages()) {
    const LanguageMeta* meta = registry.find(p.lang);
    if (!meta) {
      if (allow_unknown) continue;
      throw ValidationError("unknown language code: " + p.lang +
                            " (passage '" + p.id + "')");
    }
    if (meta->degradable) out.add(p);
  }
  return out;
}

}  // namespace textpref

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "textpref/error.hpp"
#include "textpref/io.hpp"

namespace textpref {

/// One judged passage. `predicted` is empty when no rating could be parsed
/// out of the response; `raw_response` then holds the model output or the
/// transport error verbatim.
struct RatingRecord {
  std::string passage_id;
  std::string lang;
  int true_label = 0;
  std::optional<int> predicted;
  std::string raw_response;

  bool operator==(const RatingRecord&) const = default;
};

inline void save_records(std::span<const RatingRecord> records,
                         const std::filesystem::path& path) {
  JsonlWriter out(path);
  for (const auto& r : records) {
    json rec;
    rec["passage_id"] = r.passage_id;
    rec["lang"] = r.lang;
    rec["true_label"] = r.true_label;
    if (r.predicted) rec["predicted"] = *r.predicted;
    else rec["predicted"] = nullptr;
    rec["raw_response"] = r.raw_response;
    out.write(rec);
  }
}

inline std::vector<RatingRecord> load_records(
    const std::filesystem::path& path) {
  std::vector<RatingRecord> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    RatingRecord r;
    try {
      r.passage_id = rec.at("passage_id").get<std::string>();
      r.lang = rec.at("lang").get<std::string>();
      r.true_label = rec.at("true_label").get<int>();
      if (!rec.at("predicted").is_null())
        r.predicted = rec.at("predicted").get<int>();
      r.raw_response = rec.at("raw_response").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": bad record: " + e.what());
    }
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace textpref

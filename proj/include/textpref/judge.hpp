#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "textpref/dpo.hpp"
#include "textpref/error.hpp"
#include "textpref/io.hpp"
#include "textpref/prompts.hpp"
#include "textpref/records.hpp"
#include "textpref/rng.hpp"

namespace textpref {

/// Last occurrence wins: models often restate the answer format before
/// answering, so the final in-range "[[n]]" is taken as the rating.
inline std::optional<int> parse_bracket_rating(std::string_view response,
                                               int lo, int hi) {
  if (lo > hi) throw ValidationError("parse_bracket_rating: lo > hi");
  std::optional<int> last;
  std::size_t pos = 0;
  while ((pos = response.find("[[", pos)) != std::string_view::npos) {
    std::size_t d = pos + 2;
    while (d < response.size() &&
           std::isdigit(static_cast<unsigned char>(response[d])))
      ++d;
    const std::size_t digits = d - (pos + 2);
    if (digits >= 1 && digits <= 9 && d + 1 < response.size() &&
        response[d] == ']' && response[d + 1] == ']') {
      int value = 0;
      for (std::size_t i = pos + 2; i < d; ++i) value = value * 10 + (response[i] - '0');
      if (value >= lo && value <= hi) last = value;
      pos = d + 2;
    } else {
      pos += 1;
    }
  }
  return last;
}

/// One inference prompt, carrying the ground truth so the judged record can
/// be scored downstream.
struct PromptItem {
  std::string id;
  std::string lang;
  int label = 0;
  std::string prompt;
};

inline std::size_t save_prompt_items(std::span<const PromptItem> items,
                                     const std::filesystem::path& path) {
  JsonlWriter out(path);
  for (const auto& it : items) {
    json rec;
    rec["id"] = it.id;
    rec["lang"] = it.lang;
    rec["label"] = it.label;
    rec["prompt"] = it.prompt;
    out.write(rec);
  }
  return out.count();
}

inline std::vector<PromptItem> load_prompt_items(
    const std::filesystem::path& path) {
  std::vector<PromptItem> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
    const std::string where = path.string() + ":" + std::to_string(line_no);
    PromptItem it;
    try {
      it.id = rec.at("id").get<std::string>();
      it.lang = rec.at("lang").get<std::string>();
      it.prompt = rec.at("prompt").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": bad record: " + e.what());
    }
    if (!rec.contains("label"))
      throw ValidationError(where +
                            ": prompt record lacks 'label'; judged records "
                            "cannot be scored without ground truth");
    it.label = rec.at("label").get<int>();
    out.push_back(std::move(it));
  });
  return out;
}

struct EndpointConfig {
  std::string base_url;
  std::string model_name;
  std::string api_key;
  int max_in_flight = 4;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  std::vector<std::chrono::milliseconds> backoff{
      std::chrono::milliseconds(250), std::chrono::milliseconds(1000),
      std::chrono::milliseconds(4000)};
  double temperature = 0.0;
  int max_tokens = 16;
};

struct BackendResult {
  bool ok = false;
  std::string text;  // model output, or transport error when !ok
};

/// A rating source. Implementations must be safe to call from multiple
/// threads at once.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual BackendResult complete(const PromptItem& item) = 0;
};

struct StubOptions {
  std::string default_response = "[[1]]";
  int max_latency_ms = 0;    // each request sleeps hash(id) % (max+1) ms
  double fail_rate = 0.0;    // fraction of ids that always fail transport
  std::uint64_t fail_seed = 0;
};

/// Scripted responses keyed by passage id, with optional deterministic
/// latency and transport-failure injection (both keyed by id, so outcomes do
/// not depend on scheduling or concurrency).
class StubBackend : public JudgeBackend {
 public:
  using Options = StubOptions;

  StubBackend() = default;
  explicit StubBackend(Options opts) : opts_(std::move(opts)) {}

  void set_response(std::string id, std::string response) {
    script_[std::move(id)] = std::move(response);
  }

  /// JSONL script: {"id": str, "response": str}.
  static StubBackend from_script(const std::filesystem::path& path,
                                 StubOptions opts = {}) {
    StubBackend stub(std::move(opts));
    for_each_jsonl(path, [&](std::size_t line_no, const json& rec) {
      try {
        stub.set_response(rec.at("id").get<std::string>(),
                          rec.at("response").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": bad stub record: " + e.what());
      }
    });
    return stub;
  }

  BackendResult complete(const PromptItem& item) override {
    if (opts_.fail_rate > 0.0) {
      const double u =
          static_cast<double>(sub_seed(opts_.fail_seed, item.id) >> 11) *
          0x1.0p-53;
      if (u < opts_.fail_rate)
        return {false, "injected transport failure for id " + item.id};
    }
    if (opts_.max_latency_ms > 0) {
      const auto ms = sub_seed(0x17a7e9c5, item.id) %
                      static_cast<std::uint64_t>(opts_.max_latency_ms + 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
    auto it = script_.find(item.id);
    return {true, it == script_.end() ? opts_.default_response : it->second};
  }

 private:
  std::unordered_map<std::string, std::string> script_;
  Options opts_;
};

/// In-process backend backed by a trained toy judge: recovers the passage
/// from the rendered quality prompt and answers "[[0]]" or "[[1]]".
class ToyBackend : public JudgeBackend {
 public:
  explicit ToyBackend(ToyJudgeModel model) : model_(std::move(model)) {}

  BackendResult complete(const PromptItem& item) override {
    const auto payload = extract_quality_payload(item.prompt);
    if (!payload)
      return {false, "toy backend: prompt does not contain a quality passage"};
    return {true, predict_label(model_, *payload) == 1 ? "[[1]]" : "[[0]]"};
  }

  const ToyJudgeModel& model() const { return model_; }

 private:
  ToyJudgeModel model_;
};

/// One record per prompt, in input order, regardless of failures. At most
/// `max_in_flight` requests run concurrently; each request is retried up to
/// `max_retries` times with the configured backoff, and a request that still
/// fails is recorded as unparseable with the transport error as its raw
/// response.
inline std::vector<RatingRecord> judge_batch(std::span<const PromptItem> prompts,
                                             JudgeBackend& backend,
                                             const EndpointConfig& cfg,
                                             RatingSupport support = {0, 1}) {
  if (cfg.max_in_flight < 1)
    throw ValidationError("judge: max_in_flight must be >= 1");
  if (cfg.max_retries < 0)
    throw ValidationError("judge: max_retries must be >= 0");

  std::vector<RatingRecord> records(prompts.size());
  std::atomic<std::size_t> cursor{0};

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= prompts.size()) return;
      const PromptItem& item = prompts[i];
      BackendResult res;
      for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0 && !cfg.backoff.empty()) {
          const std::size_t slot = std::min<std::size_t>(
              static_cast<std::size_t>(attempt - 1), cfg.backoff.size() - 1);
          std::this_thread::sleep_for(cfg.backoff[slot]);
        }
        res = backend.complete(item);
        if (res.ok) break;
      }
      RatingRecord rec;
      rec.passage_id = item.id;
      rec.lang = item.lang;
      rec.true_label = item.label;
      rec.raw_response = res.text;
      if (res.ok)
        rec.predicted = parse_bracket_rating(res.text, support.lo, support.hi);
      records[i] = std::move(rec);
    }
  };

  const std::size_t n_threads = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.max_in_flight), prompts.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return records;
}

/// Render inference prompts for a whole corpus.
inline std::vector<PromptItem> prompts_from_corpus(const Corpus& corpus,
                                                   const TemplateSet& templates,
                                                   PromptKind kind,
                                                   bool inference = true) {
  std::vector<PromptItem> out;
  out.reserve(corpus.size());
  for (const Passage& p : corpus.passages())
    out.push_back(
        {p.id, p.lang, p.label, templates.render(kind, p.text, inference)});
  return out;
}

}  // namespace textpref

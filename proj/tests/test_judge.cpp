#include <doctest.h>

#include <atomic>
#include <map>
#include <mutex>
#include <thread>

#include "support/synth.hpp"
#include "support/temp.hpp"
#include "textpref/http_backend.hpp"
#include "textpref/judge.hpp"

using namespace textpref;
using testsupport::TempDir;

TEST_CASE("bracket parsing: hand-enumerated fixtures") {
  struct Fixture {
    const char* response;
    int lo, hi;
    std::optional<int> expected;
  };
  const Fixture fixtures[] = {
      {"Rating: [[1]]", 0, 1, 1},
      {"Rating: [[0]]", 0, 1, 0},
      {"The passage is fine.", 0, 1, std::nullopt},
      {"[[0]] ... final answer [[1]]", 0, 1, 1},            // last wins
      {"[[1]]extra[[0]]", 0, 1, 0},
      {"[[1]] then out-of-range [[7]]", 0, 1, 1},           // 7 is not a match
      {"[[2]]", 0, 1, std::nullopt},
      {"[[2]]", 0, 2, 2},
      {"[[[1]]]", 0, 1, 1},
      {"[[12]]", 1, 5, std::nullopt},
      {"[[04]]", 0, 5, 4},
      {"[ [1] ]", 0, 1, std::nullopt},
      {"[[1]", 0, 1, std::nullopt},
      {"[[]]", 0, 1, std::nullopt},
      {"[[x1]]", 0, 1, std::nullopt},
      {"answer: [[3]] on a five-point scale", 1, 5, 3},
      {"“[[0]]” or “[[1]]“ ... I pick [[0]]", 0, 1, 0},
      {"", 0, 1, std::nullopt},
  };
  for (const auto& f : fixtures) {
    CAPTURE(f.response);
    CHECK(parse_bracket_rating(f.response, f.lo, f.hi) == f.expected);
  }
  CHECK_THROWS_AS(parse_bracket_rating("[[1]]", 1, 0), ValidationError);
}

TEST_CASE("parsing is pure: re-parsing the raw response reproduces predicted") {
  Rng rng(808);
  for (int round = 0; round < 300; ++round) {
    std::string s;
    const auto len = rng.below(30);
    for (std::uint64_t i = 0; i < len; ++i)
      s += "ab[]01 "[rng.below(7)];
    const auto first = parse_bracket_rating(s, 0, 1);
    CHECK(parse_bracket_rating(s, 0, 1) == first);
  }
}

namespace {

std::vector<PromptItem> make_prompts(std::size_t n) {
  std::vector<PromptItem> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = int(i % 2);
    out.push_back({"p" + std::to_string(i), "eng_Latn", label,
                   "Prompt body " + std::to_string(i) + "\n\nYour Answer:"});
  }
  return out;
}

EndpointConfig fast_config(int in_flight) {
  EndpointConfig cfg;
  cfg.max_in_flight = in_flight;
  cfg.max_retries = 2;
  cfg.backoff = {std::chrono::milliseconds(1)};
  return cfg;
}

}  // namespace

TEST_CASE("stub script and default responses") {
  TempDir dir("judge");
  const auto script = dir.file("script.jsonl");
  write_file(script,
             "{\"id\":\"p0\",\"response\":\"[[0]]\"}\n"
             "{\"id\":\"p2\",\"response\":\"no idea\"}\n");
  StubBackend stub = StubBackend::from_script(script);
  const auto prompts = make_prompts(4);
  const auto records = judge_batch(prompts, stub, fast_config(2));
  REQUIRE(records.size() == 4);
  CHECK(records[0].predicted == 0);        // scripted
  CHECK(records[1].predicted == 1);        // default [[1]]
  CHECK_FALSE(records[2].predicted.has_value());  // scripted junk
  CHECK(records[2].raw_response == "no idea");
  CHECK(records[3].predicted == 1);
}

TEST_CASE("malformed stub scripts are rejected") {
  TempDir dir("judge");
  const auto script = dir.file("bad.jsonl");
  write_file(script, "{\"id\":\"p0\"}\n");  // no response field
  CHECK_THROWS_AS(StubBackend::from_script(script), ValidationError);
  write_file(script, "not json\n");
  CHECK_THROWS_AS(StubBackend::from_script(script), ValidationError);
}

TEST_CASE("records reproduce a truth-conditional stub script exactly") {
  TempDir dir("judge");
  const auto prompts = make_prompts(60);
  StubBackend stub;
  std::map<std::string, std::string> script;
  for (const auto& p : prompts) {
    script[p.id] = p.label == 1 ? "Rating: [[1]]" : "Rating: [[0]]";
    stub.set_response(p.id, script[p.id]);
  }
  const auto records = judge_batch(prompts, stub, fast_config(8));
  REQUIRE(records.size() == prompts.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].passage_id == prompts[i].id);
    CHECK(records[i].raw_response == script[prompts[i].id]);
    CHECK(records[i].predicted == prompts[i].label);
  }
}

TEST_CASE("latency injection delays responses without reordering records") {
  StubBackend::Options opts;
  opts.max_latency_ms = 15;
  StubBackend stub{opts};
  const auto prompts = make_prompts(24);
  const auto records = judge_batch(prompts, stub, fast_config(8));
  REQUIRE(records.size() == prompts.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    CHECK(records[i].passage_id == prompts[i].id);
}

TEST_CASE("concurrency level does not change the records") {
  StubBackend::Options opts;
  opts.fail_rate = 0.1;
  opts.fail_seed = 99;
  opts.max_latency_ms = 3;
  StubBackend stub{opts};
  const auto prompts = make_prompts(120);
  const auto serial = judge_batch(prompts, stub, fast_config(1));
  const auto parallel = judge_batch(prompts, stub, fast_config(32));
  CHECK(serial == parallel);
}

TEST_CASE("record count equals prompt count under injected failures") {
  StubBackend::Options opts;
  opts.fail_rate = 0.25;
  opts.fail_seed = 5;
  StubBackend stub{opts};
  const auto prompts = make_prompts(80);
  const auto records = judge_batch(prompts, stub, fast_config(8));
  REQUIRE(records.size() == prompts.size());
  std::size_t failed = 0;
  for (const auto& r : records)
    if (!r.predicted) {
      ++failed;
      CHECK(r.raw_response.find("transport failure") != std::string::npos);
    }
  CHECK(failed > 0);
  CHECK(failed < prompts.size());
}

TEST_CASE("config validation fails fast") {
  StubBackend stub;
  const auto prompts = make_prompts(1);
  EndpointConfig cfg;
  cfg.max_in_flight = 0;
  CHECK_THROWS_AS(judge_batch(prompts, stub, cfg), ValidationError);
}

TEST_CASE("records round-trip through JSONL") {
  TempDir dir("judge");
  StubBackend::Options opts;
  opts.fail_rate = 0.2;
  StubBackend stub{opts};
  const auto prompts = make_prompts(30);
  const auto records = judge_batch(prompts, stub, fast_config(4));
  const auto path = dir.file("records.jsonl");
  save_records(records, path);
  CHECK(load_records(path) == records);
}

TEST_CASE("prompt items round-trip and require a label") {
  TempDir dir("judge");
  const auto items = make_prompts(5);
  const auto path = dir.file("prompts.jsonl");
  save_prompt_items(items, path);
  const auto again = load_prompt_items(path);
  REQUIRE(again.size() == items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    CHECK(again[i].id == items[i].id);
    CHECK(again[i].label == items[i].label);
    CHECK(again[i].prompt == items[i].prompt);
  }
  const auto unlabeled = dir.file("unlabeled.jsonl");
  write_file(unlabeled,
             "{\"id\":\"p\",\"lang\":\"eng_Latn\",\"prompt\":\"x\"}\n");
  CHECK_THROWS_WITH_AS(load_prompt_items(unlabeled), doctest::Contains("label"),
                       ValidationError);
}

TEST_CASE("toy backend answers from the extracted passage") {
  const TemplateSet templates =
      TemplateSet::load(std::string(TEXTPREF_DATA_DIR) + "/templates");
  const auto pairs = testsupport::synth_pairs(200, 777);
  ToyTrainConfig cfg;
  cfg.dim = 1u << 14;
  const ToyJudgeModel model = train_toy_judge(pairs, cfg);

  const Corpus corpus = testsupport::synth_corpus(10, 31337);
  const auto prompts =
      prompts_from_corpus(corpus, templates, PromptKind::quality_binary);
  ToyBackend backend(model);
  const auto records = judge_batch(prompts, backend, fast_config(4));
  REQUIRE(records.size() == corpus.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    REQUIRE(records[i].predicted.has_value());
    CHECK(*records[i].predicted ==
          predict_label(model, corpus.passages()[i].text));
  }

  // a prompt that is not a rendered quality prompt cannot be answered
  std::vector<PromptItem> foreign = {{"f1", "eng_Latn", 1, "what is 2+2?"}};
  const auto odd = judge_batch(foreign, backend, fast_config(1));
  CHECK_FALSE(odd[0].predicted.has_value());
}

// --- HTTP backend against a local server ------------------------------------

TEST_CASE("http backend speaks chat-completions and retries failures") {
  httplib::Server server;
  std::mutex mu;
  std::map<std::string, int> attempts;

  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                const json body = json::parse(req.body);
                const std::string prompt =
                    body.at("messages").at(0).at("content").get<std::string>();
                if (req.get_header_value("Authorization") != "Bearer test-key") {
                  res.status = 401;
                  res.set_content("missing auth", "text/plain");
                  return;
                }
                {
                  // fail the first attempt for prompts marked flaky
                  std::lock_guard<std::mutex> lock(mu);
                  if (prompt.find("flaky") != std::string::npos &&
                      attempts[prompt]++ == 0) {
                    res.status = 500;
                    res.set_content("boom", "text/plain");
                    return;
                  }
                }
                const char* answer =
                    prompt.find("good") != std::string::npos ? "[[1]]" : "[[0]]";
                json reply = {
                    {"choices",
                     json::array({{{"message", {{"role", "assistant"},
                                                {"content", answer}}}}})}};
                res.set_content(reply.dump(), "application/json");
              });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  cfg.model_name = "test-model";
  cfg.api_key = "test-key";
  cfg.max_in_flight = 3;
  cfg.max_retries = 2;
  cfg.backoff = {std::chrono::milliseconds(1)};

  std::vector<PromptItem> prompts = {
      {"a", "eng_Latn", 1, "good passage"},
      {"b", "eng_Latn", 0, "bad passage"},
      {"c", "eng_Latn", 1, "flaky but good"},
  };
  HttpBackend backend(cfg);
  const auto records = judge_batch(prompts, backend, cfg);
  server.stop();
  server_thread.join();

  REQUIRE(records.size() == 3);
  CHECK(records[0].predicted == 1);
  CHECK(records[1].predicted == 0);
  CHECK(records[2].predicted == 1);  // retried through the injected 500
}

TEST_CASE("an unreachable endpoint degrades to unparseable records") {
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:9";  // discard port, nothing listens
  cfg.model_name = "nope";
  cfg.max_in_flight = 2;
  cfg.max_retries = 1;
  cfg.backoff = {std::chrono::milliseconds(1)};
  cfg.timeout = std::chrono::milliseconds(1000);
  HttpBackend backend(cfg);
  const auto prompts = make_prompts(4);
  const auto records = judge_batch(prompts, backend, cfg);
  REQUIRE(records.size() == prompts.size());
  for (const auto& r : records) {
    CHECK_FALSE(r.predicted.has_value());
    CHECK_FALSE(r.raw_response.empty());
  }
}

TEST_CASE("base_url validation fails fast") {
  EndpointConfig cfg;
  cfg.base_url = "localhost:8000";
  CHECK_THROWS_AS(HttpBackend{cfg}, ValidationError);
}

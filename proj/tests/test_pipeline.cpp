#include <doctest.h>

#include <map>
#include <sstream>

#include "support/synth.hpp"
#include "support/temp.hpp"
#include "textpref/pipeline.hpp"

using namespace textpref;
using testsupport::TempDir;

namespace {

// five languages, one of them non-degradable
void write_fixture(const TempDir& dir) {
  std::string registry =
      "code,script,family,resource_level,degradable,supported_by\n"
      "aaa_Latn,Latn,FamA,5,true,llama\n"
      "bbb_Latn,Latn,FamA,4,true,\n"
      "ccc_Cyrl,Cyrl,FamB,2,true,\n"
      "ddd_Taml,Taml,FamB,1,true,\n"
      "eee_Jpan,Jpan,FamC,5,false,\n";
  write_file(dir.file("langs.csv"), registry);

  Corpus corpus;
  const char* langs[] = {"aaa_Latn", "bbb_Latn", "ccc_Cyrl", "ddd_Taml",
                         "eee_Jpan"};
  for (const char* lang : langs) {
    Rng rng(sub_seed(fnv1a64(lang), "fixture"));
    for (int i = 0; i < 8; ++i)
      corpus.add({std::string(lang) + "-p" + std::to_string(i), lang,
                  testsupport::synth_passage(rng), kLabelNormal, {}});
  }
  corpus.save_jsonl(dir.file("corpus.jsonl"));
}

RunConfig fixture_config(const TempDir& dir, const std::string& out_name) {
  RunConfig cfg;
  cfg.seed = 7;
  cfg.registry_path = dir.file("langs.csv").string();
  cfg.corpus_paths = {dir.file("corpus.jsonl").string()};
  cfg.templates_dir = std::string(TEXTPREF_DATA_DIR) + "/templates";
  cfg.out_dir = dir.file(out_name).string();
  cfg.sample_n = 5;
  cfg.toy.dim = 1u << 12;
  return cfg;
}

std::map<std::string, std::string> artifact_bytes(const std::string& out_dir) {
  std::map<std::string, std::string> bytes;
  for (const auto& entry : std::filesystem::directory_iterator(out_dir))
    bytes[entry.path().filename().string()] = read_file(entry.path());
  return bytes;
}

}  // namespace

TEST_CASE("pipeline with a toy judge produces every artifact") {
  TempDir dir("pipeline");
  write_fixture(dir);
  const RunConfig cfg = fixture_config(dir, "out");
  std::ostringstream log;
  const PipelineResult result = run_pipeline(cfg, log);

  CHECK(result.languages == 4);      // eee_Jpan filtered out
  CHECK(result.normal == 20);        // 4 languages x 5
  CHECK(result.degraded == 20);
  CHECK(result.merged == 40);
  CHECK(result.triples == 40);
  CHECK(result.records == 40);
  CHECK(result.unparseable == 0);

  for (const char* name :
       {"sampled.jsonl", "degraded.jsonl", "merged.jsonl", "triples.jsonl",
        "prompts.jsonl", "records.jsonl", "model.bin", "report.csv",
        "report.md"})
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / name));

  REQUIRE(result.report.size() == 2);  // HR and LR
  CHECK(result.report[0].key == "HR");
  CHECK(result.report[0].n == 20);
  CHECK(result.report[1].key == "LR");
}

TEST_CASE("pipeline reruns are byte-identical") {
  TempDir dir("pipeline");
  write_fixture(dir);
  std::ostringstream log;
  run_pipeline(fixture_config(dir, "out1"), log);
  run_pipeline(fixture_config(dir, "out2"), log);
  const auto a = artifact_bytes(dir.file("out1").string());
  const auto b = artifact_bytes(dir.file("out2").string());
  REQUIRE(a.size() == b.size());
  for (const auto& [name, bytes] : a) {
    CAPTURE(name);
    CHECK(bytes == b.at(name));
  }
}

TEST_CASE("pipeline with a stub backend uses the scripted answers") {
  TempDir dir("pipeline");
  write_fixture(dir);
  RunConfig cfg = fixture_config(dir, "out");
  write_file(dir.file("stub.jsonl"),
             "{\"id\":\"aaa_Latn-p0\",\"response\":\"[[0]]\"}\n");
  cfg.stub_script = dir.file("stub.jsonl").string();
  std::ostringstream log;
  const PipelineResult result = run_pipeline(cfg, log);
  CHECK(result.records == 40);
  CHECK_FALSE(
      std::filesystem::exists(std::filesystem::path(cfg.out_dir) / "model.bin"));
  const auto records =
      load_records(std::filesystem::path(cfg.out_dir) / "records.jsonl");
  std::size_t zeros = 0;
  for (const auto& r : records)
    if (r.predicted == 0) ++zeros;
  CHECK(zeros == 1);  // only the scripted id, everything else default [[1]]
}

TEST_CASE("config validation reports the offending path") {
  TempDir dir("pipeline");
  write_fixture(dir);
  RunConfig cfg = fixture_config(dir, "out");
  cfg.registry_path = dir.file("missing.csv").string();
  std::ostringstream log;
  CHECK_THROWS_WITH_AS(run_pipeline(cfg, log), doctest::Contains("missing.csv"),
                       ValidationError);
}

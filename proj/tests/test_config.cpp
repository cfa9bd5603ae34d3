#include <doctest.h>

#include <cstdlib>

#include "support/temp.hpp"
#include "textpref/config.hpp"

using namespace textpref;
using testsupport::TempDir;

TEST_CASE("run config loads from flat TOML") {
  TempDir dir("config");
  const auto path = dir.file("run.toml");
  write_file(path,
             "# a full run\n"
             "seed = 99\n"
             "registry = \"langs.csv\"\n"
             "corpus = [\"a.jsonl\", \"b.jsonl\"]  # two shards\n"
             "out-dir = \"artifacts\"\n"
             "n = 20\n"
             "min = 3\n"
             "max = 6\n"
             "strict = true\n"
             "epsilon = 1e-6\n"
             "unparsed = \"wrong\"\n"
             "group-by = \"script\"\n"
             "toy-dim = 4096\n");
  RunConfig cfg;
  apply_run_config_file(path, cfg);
  CHECK(cfg.seed == 99);
  CHECK(cfg.registry_path == "langs.csv");
  CHECK(cfg.corpus_paths == std::vector<std::string>{"a.jsonl", "b.jsonl"});
  CHECK(cfg.out_dir == "artifacts");
  CHECK(cfg.sample_n == 20);
  CHECK(cfg.strict);
  CHECK(cfg.epsilon == doctest::Approx(1e-6));
  CHECK(cfg.unparsed == "wrong");
  CHECK(cfg.group_by == "script");
  CHECK(cfg.toy.dim == 4096);
}

TEST_CASE("unknown keys, sections and malformed lines are rejected") {
  TempDir dir("config");
  const auto path = dir.file("bad.toml");

  SUBCASE("unknown key") {
    write_file(path, "sede = 1\n");
    RunConfig cfg;
    CHECK_THROWS_WITH_AS(apply_run_config_file(path, cfg),
                         doctest::Contains("sede"), ValidationError);
  }
  SUBCASE("section header") {
    write_file(path, "[pipeline]\nseed = 1\n");
    RunConfig cfg;
    CHECK_THROWS_WITH_AS(apply_run_config_file(path, cfg),
                         doctest::Contains("sections"), ValidationError);
  }
  SUBCASE("missing equals") {
    write_file(path, "seed 1\n");
    RunConfig cfg;
    CHECK_THROWS_AS(apply_run_config_file(path, cfg), ValidationError);
  }
  SUBCASE("unquoted string") {
    write_file(path, "registry = langs.csv oops\n");
    RunConfig cfg;
    CHECK_THROWS_AS(apply_run_config_file(path, cfg), ValidationError);
  }
  SUBCASE("duplicate key") {
    write_file(path, "seed = 1\nseed = 2\n");
    RunConfig cfg;
    CHECK_THROWS_WITH_AS(apply_run_config_file(path, cfg),
                         doctest::Contains("duplicate"), ValidationError);
  }
  SUBCASE("non-numeric seed") {
    write_file(path, "seed = \"seven\"\n");
    RunConfig cfg;
    CHECK_THROWS_AS(apply_run_config_file(path, cfg), ValidationError);
  }
}

TEST_CASE("environment interpolation expands inside quoted strings") {
  TempDir dir("config");
  const auto path = dir.file("env.toml");
  setenv("TEXTPREF_TEST_SECRET", "s3cret", 1);
  write_file(path, "api-key = \"${TEXTPREF_TEST_SECRET}\"\n");
  RunConfig cfg;
  apply_run_config_file(path, cfg);
  CHECK(cfg.api_key == "s3cret");

  write_file(path, "api-key = \"${TEXTPREF_TEST_UNSET_VAR}\"\n");
  CHECK_THROWS_WITH_AS(apply_run_config_file(path, cfg),
                       doctest::Contains("TEXTPREF_TEST_UNSET_VAR"),
                       ValidationError);
}

TEST_CASE("expand_env_vars leaves plain strings alone") {
  CHECK(expand_env_vars("no variables here") == "no variables here");
  CHECK_THROWS_AS(expand_env_vars("${"), ValidationError);
  setenv("TEXTPREF_TEST_A", "x", 1);
  CHECK(expand_env_vars("pre-${TEXTPREF_TEST_A}-post") == "pre-x-post");
}

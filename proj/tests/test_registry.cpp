#include <doctest.h>

#include <string>

#include "support/temp.hpp"
#include "textpref/io.hpp"
#include "textpref/registry.hpp"

using namespace textpref;
using testsupport::TempDir;

namespace {

const char* kSmallRegistry =
    "code,script,family,resource_level,degradable,supported_by\n"
    "eng_Latn,Latn,Indo-European,5,true,\"llama;aya\"\n"
    "jpn_Jpan,Jpan,Japonic,5,false,\"llama;aya\"\n"
    "kac_Latn,Latn,Sino-Tibetan,0,true,\n"
    "tam_Taml,Taml,Dravidian,2,true,aya\n";

Registry load_small(const TempDir& dir) {
  const auto path = dir.file("langs.csv");
  write_file(path, kSmallRegistry);
  return Registry::load(path);
}

}  // namespace

TEST_CASE("registry rows map onto language metadata") {
  TempDir dir("registry");
  const Registry reg = load_small(dir);
  CHECK(reg.size() == 4);

  const auto& eng = reg.at("eng_Latn");
  CHECK(eng.resource_level == 5);
  CHECK(eng.script == "Latn");
  CHECK(eng.family == "Indo-European");
  CHECK(eng.degradable);
  CHECK(eng.supported_by == std::set<std::string>{"aya", "llama"});

  CHECK_FALSE(reg.at("jpn_Jpan").degradable);
  CHECK(reg.at("kac_Latn").supported_by.empty());
}

TEST_CASE("resource class splits levels 0-2 from 3-5") {
  LanguageMeta m;
  m.code = "xxx_Latn";
  m.script = "Latn";
  for (int level : {3, 4, 5}) {
    m.resource_level = level;
    CHECK(resource_class(m) == ResourceClass::HR);
  }
  for (int level : {0, 1, 2}) {
    m.resource_level = level;
    CHECK(resource_class(m) == ResourceClass::LR);
  }
}

TEST_CASE("HR/LR partition is total and disjoint over any registry") {
  TempDir dir("registry");
  const Registry reg = load_small(dir);
  for (const auto& [code, meta] : reg) {
    const bool hr = resource_class(meta) == ResourceClass::HR;
    const bool lr = resource_class(meta) == ResourceClass::LR;
    CHECK(hr != lr);
  }
}

TEST_CASE("malformed rows are rejected with line and field") {
  TempDir dir("registry");
  const auto path = dir.file("bad.csv");

  SUBCASE("bad resource level") {
    write_file(path,
               "code,script,family,resource_level,degradable,supported_by\n"
               "eng_Latn,Latn,Indo-European,9,true,\n");
    CHECK_THROWS_WITH_AS(Registry::load(path),
                         doctest::Contains("resource_level"), ValidationError);
  }
  SUBCASE("non-integer resource level names the field") {
    write_file(path,
               "code,script,family,resource_level,degradable,supported_by\n"
               "eng_Latn,Latn,Indo-European,high,true,\n");
    try {
      Registry::load(path);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
      CHECK(std::string(e.what()).find("resource_level") != std::string::npos);
    }
  }
  SUBCASE("code pattern enforced") {
    write_file(path,
               "code,script,family,resource_level,degradable,supported_by\n"
               "english,Latn,Indo-European,5,true,\n");
    CHECK_THROWS_AS(Registry::load(path), ValidationError);
  }
  SUBCASE("script must equal code suffix") {
    write_file(path,
               "code,script,family,resource_level,degradable,supported_by\n"
               "eng_Latn,Cyrl,Indo-European,5,true,\n");
    CHECK_THROWS_WITH_AS(Registry::load(path), doctest::Contains("script"),
                         ValidationError);
  }
  SUBCASE("bad boolean") {
    write_file(path,
               "code,script,family,resource_level,degradable,supported_by\n"
               "eng_Latn,Latn,Indo-European,5,yes,\n");
    CHECK_THROWS_WITH_AS(Registry::load(path), doctest::Contains("degradable"),
                         ValidationError);
  }
  SUBCASE("wrong column count") {
    write_file(path,
               "code,script,family,resource_level,degradable,supported_by\n"
               "eng_Latn,Latn,Indo-European,5\n");
    CHECK_THROWS_WITH_AS(Registry::load(path), doctest::Contains("6 fields"),
                         ValidationError);
  }
}

TEST_CASE("duplicate codes are rejected") {
  TempDir dir("registry");
  const auto path = dir.file("dup.csv");
  write_file(path,
             "code,script,family,resource_level,degradable,supported_by\n"
             "eng_Latn,Latn,Indo-European,5,true,\n"
             "eng_Latn,Latn,Indo-European,4,true,\n");
  CHECK_THROWS_WITH_AS(Registry::load(path), doctest::Contains("duplicate"),
                       ValidationError);
}

TEST_CASE("unknown lookup is a reported error, never a default") {
  TempDir dir("registry");
  const Registry reg = load_small(dir);
  CHECK_THROWS_WITH_AS(reg.at("zzz_Latn"), doctest::Contains("zzz_Latn"),
                       ValidationError);
  CHECK(reg.find("zzz_Latn") == nullptr);
}

TEST_CASE("registry round-trips through save/load") {
  TempDir dir("registry");
  const Registry reg = load_small(dir);
  const auto out = dir.file("roundtrip.csv");
  reg.save(out);
  const Registry again = Registry::load(out);
  REQUIRE(again.size() == reg.size());
  for (const auto& [code, meta] : reg) {
    const auto& other = again.at(code);
    CHECK(other.script == meta.script);
    CHECK(other.family == meta.family);
    CHECK(other.resource_level == meta.resource_level);
    CHECK(other.degradable == meta.degradable);
    CHECK(other.supported_by == meta.supported_by);
  }
}

TEST_CASE("shipped registry: 122 languages, 115 degradable") {
  const Registry reg = Registry::load(std::string(TEXTPREF_DATA_DIR) +
                                      "/languages.csv");
  CHECK(reg.size() == 122);
  std::size_t degradable = 0;
  for (const auto& [code, meta] : reg) {
    CHECK(code_well_formed(code));
    if (meta.degradable) ++degradable;
  }
  CHECK(degradable == 115);
  CHECK_FALSE(reg.at("eus_Latn").degradable);
  CHECK_FALSE(reg.at("jpn_Jpan").degradable);
}

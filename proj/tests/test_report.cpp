#include <doctest.h>

#include <sstream>

#include "support/temp.hpp"
#include "textpref/report.hpp"

using namespace textpref;

TEST_CASE("mean and 95% CI match a reference computation") {
  const double values[] = {1, 2, 3, 4, 5};
  const MeanCi s = mean_ci95(values);
  CHECK(s.mean == doctest::Approx(3.0));
  // t(0.975, 4) = 2.7764451, sd = 1.5811388 -> half width 1.9632432
  CHECK(*s.ci_half_width == doctest::Approx(1.9632431614775607).epsilon(1e-9));

  const double f1s[] = {0.52, 0.61, 0.55, 0.49, 0.70, 0.66};
  const MeanCi s2 = mean_ci95(f1s);
  CHECK(s2.mean == doctest::Approx(0.588333333333).epsilon(1e-9));
  CHECK(*s2.ci_half_width == doctest::Approx(0.086390079001).epsilon(1e-9));
}

TEST_CASE("CI is undefined below two samples") {
  const double one[] = {0.5};
  const MeanCi s = mean_ci95(one);
  CHECK(s.mean == doctest::Approx(0.5));
  CHECK_FALSE(s.ci_half_width.has_value());
  CHECK_THROWS_AS(mean_ci95(std::span<const double>{}), ValidationError);
}

namespace {

TableSpec sample_table() {
  TableSpec t;
  t.title = "metrics by hr_lr";
  t.columns = {"group", "n", "mcc", "kl", "f1_macro"};
  t.rows = {{"HR", "40", "0.380000", "0.120000", "0.640000"},
            {"LR", "60", "0.160000", "", "0.550000"}};
  return t;
}

}  // namespace

TEST_CASE("CSV rendering round-trips through the parser") {
  const TableSpec t = sample_table();
  const std::string csv = render_table(t, TableFormat::Csv);
  CHECK(parse_table_csv(csv) == t);
}

TEST_CASE("fields with commas and quotes survive the round-trip") {
  TableSpec t;
  t.title = "escaping";
  t.columns = {"group", "note"};
  t.rows = {{"a,b", "say \"hi\""}, {"plain", ""}};
  CHECK(parse_table_csv(render_table(t, TableFormat::Csv)) == t);
}

TEST_CASE("markdown renders missing cells as an em dash") {
  const std::string md = render_table(sample_table(), TableFormat::Markdown);
  CHECK(md.find("### metrics by hr_lr") != std::string::npos);
  CHECK(md.find("| LR | 60 | 0.160000 | — | 0.550000 |") !=
        std::string::npos);
}

TEST_CASE("rendering is deterministic and stamps are opt-in") {
  const TableSpec t = sample_table();
  std::ostringstream a, b;
  const TableSpec tables[] = {t};
  emit(tables, TableFormat::Csv, a);
  emit(tables, TableFormat::Csv, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("generated") == std::string::npos);

  std::ostringstream stamped;
  emit(tables, TableFormat::Csv, stamped, true, "2024-01-01T00:00:00Z");
  CHECK(stamped.str().find("# generated: 2024-01-01T00:00:00Z") == 0);
}

TEST_CASE("row width mismatches and empty table sets are rejected") {
  TableSpec t = sample_table();
  t.rows.push_back({"only-one-cell"});
  CHECK_THROWS_AS(render_table(t, TableFormat::Csv), ValidationError);
  std::ostringstream out;
  CHECK_THROWS_AS(emit(std::span<const TableSpec>{}, TableFormat::Csv, out),
                  ValidationError);
}

TEST_CASE("group reports become tables") {
  std::vector<GroupReport> groups = {
      {"HR", 40, 0.38, 0.12, 0.64},
      {"LR", 60, 0.16, std::nullopt, 0.55},
  };
  const TableSpec t = table_from_groups("metrics by hr_lr", groups);
  CHECK(t.columns.size() == 5);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == std::vector<std::string>{"HR", "40", "0.380000",
                                              "0.120000", "0.640000"});
  CHECK(t.rows[1][3] == "");  // missing KL stays empty in the tabular core
}

TEST_CASE("single group, single metric renders as a one-row table") {
  std::vector<GroupReport> groups = {{"all", 10, 0.5, 0.2, 0.7}};
  const TableSpec t = table_from_groups("overall", groups);
  CHECK(t.rows.size() == 1);
  const std::string csv = render_table(t, TableFormat::Csv);
  CHECK(parse_table_csv(csv).rows.size() == 1);
}

TEST_CASE("improvement tables mark undefined deltas") {
  std::vector<Improvement> deltas = {{"Latn", 20.0}, {"Cyrl", std::nullopt}};
  const TableSpec t = table_from_improvements("improvement", deltas);
  CHECK(t.rows[0] == std::vector<std::string>{"Latn", "20.0"});
  CHECK(t.rows[1] == std::vector<std::string>{"Cyrl", "undefined"});
}

TEST_CASE("summary table aggregates the metric columns") {
  std::vector<GroupReport> groups;
  for (int i = 0; i < 6; ++i)
    groups.push_back({"g" + std::to_string(i), 10, 0.1 * i, std::nullopt,
                      0.5 + 0.01 * i});
  const TableSpec t = summary_table("summary", groups);
  REQUIRE(t.rows.size() == 2);  // mcc and f1 rows; no KL values present
  CHECK(t.rows[0][0] == "mcc");
  CHECK(t.rows[1][0] == "f1_macro");
  CHECK(t.rows[1][3] == "6");
}

TEST_CASE("top/bottom table pairs the extremes") {
  std::vector<GroupReport> groups;
  for (int i = 0; i < 10; ++i)
    groups.push_back({"lang" + std::to_string(i), 10, std::nullopt,
                      std::nullopt, 0.30 + 0.05 * i});
  const TableSpec t =
      top_bottom_table("top/bottom", groups, MetricField::F1Macro, 3);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][1] == "lang9");  // best
  CHECK(t.rows[0][3] == "lang0");  // worst
  CHECK(t.rows[1][1] == "lang8");
  CHECK(t.rows[1][3] == "lang1");
}

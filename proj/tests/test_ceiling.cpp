#include <gtest/gtest.h>

#include <cmath>

#include "reuselab/ceiling.hpp"
#include "reuselab/reproduce.hpp"

using namespace reuselab;
using namespace reuselab::ceiling;

TEST(IdealE2e, KnownValues) {
  EXPECT_DOUBLE_EQ(ideal_e2e(0.0, 4.0), 4.0);
  EXPECT_DOUBLE_EQ(ideal_e2e(1.0, 4.0), 1.0);
  EXPECT_NEAR(ideal_e2e(0.4, 2.0), 1.0 / 0.7, 1e-12);
  EXPECT_DOUBLE_EQ(ideal_e2e(0.5, 1.0), 1.0);
}

TEST(IdealE2e, DomainErrors) {
  EXPECT_THROW(ideal_e2e(0.5, 0.0), Error);
  EXPECT_THROW(ideal_e2e(-0.1, 2.0), Error);
  EXPECT_THROW(ideal_e2e(1.1, 2.0), Error);
}

TEST(Scatterback, KnownValues) {
  EXPECT_DOUBLE_EQ(scatterback_pred(0.0, 0.9), 1.0);
  EXPECT_NEAR(scatterback_pred(0.3, 0.5), 1.0 / 0.85, 1e-12);
  EXPECT_THROW(scatterback_pred(1.0, 1.0), Error);
  EXPECT_THROW(scatterback_pred(1.2, 0.1), Error);
}

// Removing a fraction v_red of a v_share stage is the same as speeding that
// stage up by 1/(1-v_red) with everything else fixed.
TEST(Scatterback, EqualsAmdahlWithStageSpeedup) {
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform();
    const double r = rng.uniform() * 0.999;
    const double a = scatterback_pred(v, r);
    const double b = ideal_e2e(1.0 - v, 1.0 / (1.0 - r));
    ASSERT_NEAR(a, b, 1e-9 * a) << v << " " << r;
    ASSERT_GE(a, 1.0);
  }
}

TEST(Residual, IsInPercentagePoints) {
  EXPECT_NEAR(residual_pp(1.08, 1.062), 1.8, 1e-9);
  EXPECT_NEAR(residual_pp(1.0, 1.05), -5.0, 1e-9);
}

TEST(Report, ToleranceFlagsAndMissingObservations) {
  std::vector<Cell> cells{VisionCell{"a", 0.3, 0.5, 1.19, ""}, StageShareCell{"b", 0.7, 4.0, std::nullopt, ""},
                          StageShareCell{"c", 0.4, 2.0, 1.2, "x"}};
  const auto rep = ceiling_report(cells, 3.0);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_NEAR(*rep.rows[0].residual_pp, (1.19 - 1.0 / 0.85) * 100, 1e-9);
  EXPECT_TRUE(*rep.rows[0].within_tolerance);
  EXPECT_FALSE(rep.rows[1].residual_pp.has_value());
  EXPECT_FALSE(rep.rows[1].within_tolerance.has_value());
  // 1.2 - 1.4286 = -22.9pp
  EXPECT_FALSE(*rep.rows[2].within_tolerance);
}

TEST(Report, MixedTableHasOneColumnPerInput) {
  std::vector<Cell> cells{VisionCell{"a", 0.3, 0.5, std::nullopt, ""}, StageShareCell{"b", 0.7, 4.0, std::nullopt, ""}};
  const auto t = report_table(ceiling_report(cells));
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& row : t.rows) EXPECT_EQ(row.size(), t.headers.size());
  EXPECT_EQ(t.rows[1][4], "-");
  // No stray pipe inside a header cell.
  for (const auto& h : t.headers) EXPECT_EQ(h.find('|'), std::string::npos);
}

TEST(CellJson, ParsesBothKindsAndRejectsBadDomains) {
  const auto cells = cells_from_json(Json::parse(R"([
    {"name": "v", "v_share": 0.2, "v_red": 0.4},
    {"kind": "stage", "name": "s", "f_fixed": 0.5, "s": 3, "observed": 1.4}
  ])"));
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_TRUE(std::holds_alternative<VisionCell>(cells[0]));
  EXPECT_EQ(std::get<StageShareCell>(cells[1]).observed, 1.4);
  EXPECT_THROW(cell_from_json(Json::parse(R"({"name":"x","v_share":1.5,"v_red":0.1})")), Error);
  EXPECT_THROW(cell_from_json(Json::parse(R"({"kind":"stage","name":"x","f_fixed":0.5,"s":0})")), Error);
  EXPECT_THROW(cell_from_json(Json::parse(R"({"kind":"other","name":"x"})")), Error);
  EXPECT_THROW(cell_from_json(Json::parse(R"({"v_share":0.1,"v_red":0.1})")), Error);
}

// Published rows: every printed prediction reproduces at 3 decimals except the
// one row whose printed inputs do not produce its printed output.
TEST(PublishedCells, PredictionsMatchPrintedValues) {
  const auto doc = read_json_file(reproduce::fixture_dir() / "ceiling_cells.json");
  int mismatches = 0;
  for (const auto& j : doc.at("cells")) {
    const double pred = predict(cell_from_json(j));
    const double printed = j.at("printed").at("predicted").get<double>();
    if (std::abs(reproduce::round_to(pred, 3) - printed) > 0.001 + 1e-9) {
      ++mismatches;
      EXPECT_EQ(j.at("name").get<std::string>(), "TOMATO 8f dev");
    }
  }
  EXPECT_EQ(mismatches, 1);
}

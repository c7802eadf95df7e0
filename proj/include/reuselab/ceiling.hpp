#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "reuselab/error.hpp"
#include "reuselab/io.hpp"
#include "reuselab/table.hpp"

namespace reuselab::ceiling {

// Stage-share form: one stage sped up by `s`, the fraction `f_fixed` of dense
// wall-clock untouched.
struct StageShareCell {
  std::string name;
  double f_fixed = 0.0;
  double s = 1.0;
  std::optional<double> observed;
  std::string verdict;
};

// Vision-tower form: dense vision share and observed vision-time reduction.
struct VisionCell {
  std::string name;
  double v_share = 0.0;
  double v_red = 0.0;
  std::optional<double> observed;
  std::string verdict;
};

using Cell = std::variant<VisionCell, StageShareCell>;

// Ideal end-to-end gain when one stage runs `s` times faster.
inline double ideal_e2e(double f_fixed, double s) {
  if (!(s > 0.0)) throw Error(ErrorCode::Domain, "stage speedup must be > 0");
  if (!(f_fixed >= 0.0 && f_fixed <= 1.0)) throw Error(ErrorCode::Domain, "f_fixed must lie in [0, 1]");
  return 1.0 / (f_fixed + (1.0 - f_fixed) / s);
}

// Scatter-back prediction 1 / (1 - V_share * V_red).
inline double scatterback_pred(double v_share, double v_red) {
  if (!(v_share >= 0.0 && v_share <= 1.0) || !(v_red >= 0.0 && v_red <= 1.0)) {
    throw Error(ErrorCode::Domain, "V_share and V_red must lie in [0, 1]");
  }
  const double product = v_share * v_red;
  if (product >= 1.0) throw Error(ErrorCode::Domain, "V_share * V_red must be < 1");
  return 1.0 / (1.0 - product);
}

// Observed minus predicted speedup, in percentage points.
inline double residual_pp(double observed, double predicted) { return (observed - predicted) * 100.0; }

inline const std::string& cell_name(const Cell& cell) {
  return std::visit([](const auto& c) -> const std::string& { return c.name; }, cell);
}

inline double predict(const Cell& cell) {
  if (const auto* v = std::get_if<VisionCell>(&cell)) return scatterback_pred(v->v_share, v->v_red);
  const auto& s = std::get<StageShareCell>(cell);
  return ideal_e2e(s.f_fixed, s.s);
}

struct ReportRow {
  Cell cell;
  double predicted = 0.0;
  std::optional<double> residual_pp;
  std::optional<bool> within_tolerance;  // present iff an observation exists
};

struct CeilingReport {
  double tolerance_pp = 5.0;
  std::vector<ReportRow> rows;
};

inline CeilingReport ceiling_report(const std::vector<Cell>& cells, double tolerance_pp = 5.0) {
  CeilingReport report{tolerance_pp, {}};
  for (const auto& cell : cells) {
    ReportRow row{cell, predict(cell), std::nullopt, std::nullopt};
    const auto observed = std::visit([](const auto& c) { return c.observed; }, cell);
    if (observed) {
      row.residual_pp = residual_pp(*observed, row.predicted);
      row.within_tolerance = std::abs(*row.residual_pp) <= tolerance_pp;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline Table report_table(const CeilingReport& report) {
  bool any_vision = false;
  bool any_stage = false;
  for (const auto& row : report.rows) {
    (std::holds_alternative<VisionCell>(row.cell) ? any_vision : any_stage) = true;
  }
  Table table;
  if (any_stage && !any_vision) {
    table.headers = {"Cell", "f_fixed", "s", "Pred.", "Obs.", "Resid.", "Within tol.", "Evidence"};
  } else if (any_stage) {
    table.headers = {"Cell", "V_share or f_fixed", "V_red or s", "Pred.", "Obs.", "Resid.", "Within tol.", "Evidence"};
  } else {
    table.headers = {"Cell", "V_share", "V_red", "Pred.", "Obs.", "Resid.", "Within tol.", "Evidence"};
  }
  for (const auto& row : report.rows) {
    std::vector<std::string> cells;
    std::optional<double> observed;
    std::string verdict;
    if (const auto* v = std::get_if<VisionCell>(&row.cell)) {
      cells = {v->name, fixed(v->v_share, 3), fixed(v->v_red, 3)};
      observed = v->observed;
      verdict = v->verdict;
    } else {
      const auto& s = std::get<StageShareCell>(row.cell);
      cells = {s.name, fixed(s.f_fixed, 3), fixed(s.s, 3)};
      observed = s.observed;
      verdict = s.verdict;
    }
    cells.push_back(fixed(row.predicted, 3));
    cells.push_back(observed ? fixed(*observed, 3) : "-");
    cells.push_back(row.residual_pp ? signed_fixed(*row.residual_pp, 1) + "pp" : "-");
    cells.push_back(row.within_tolerance ? (*row.within_tolerance ? "yes" : "no") : "-");
    cells.push_back(verdict);
    table.rows.push_back(std::move(cells));
  }
  return table;
}

// Cell JSON: {"kind": "vision"|"stage", "name", "v_share", "v_red"} or
// {"kind": "stage", "name", "f_fixed", "s"}; optional "observed", "verdict".
inline Cell cell_from_json(const Json& j) {
  const std::string where = "ceiling cell";
  const auto kind = optional_field<std::string>(j, "kind", "vision", where);
  const auto name = require<std::string>(j, "name", where);
  const auto observed = j.contains("observed") && !j.at("observed").is_null()
                            ? std::optional<double>(require<double>(j, "observed", where))
                            : std::nullopt;
  const auto verdict = optional_field<std::string>(j, "verdict", "", where);
  if (kind == "vision") {
    VisionCell c{name, require<double>(j, "v_share", where), require<double>(j, "v_red", where), observed, verdict};
    if (!(c.v_share >= 0 && c.v_share <= 1 && c.v_red >= 0 && c.v_red <= 1 && c.v_share * c.v_red < 1)) {
      throw Error(ErrorCode::Schema, where + " '" + name + "': V_share, V_red outside the valid domain");
    }
    return c;
  }
  if (kind == "stage") {
    StageShareCell c{name, require<double>(j, "f_fixed", where), require<double>(j, "s", where), observed, verdict};
    if (!(c.f_fixed >= 0 && c.f_fixed <= 1 && c.s > 0)) {
      throw Error(ErrorCode::Schema, where + " '" + name + "': f_fixed, s outside the valid domain");
    }
    return c;
  }
  throw Error(ErrorCode::Schema, where + " '" + name + "': kind must be vision|stage");
}

inline std::vector<Cell> cells_from_json(const Json& j) {
  const Json& list = j.is_object() && j.contains("cells") ? j.at("cells") : j;
  if (!list.is_array()) throw Error(ErrorCode::Schema, "ceiling cells must be a JSON array");
  std::vector<Cell> cells;
  for (const auto& item : list) cells.push_back(cell_from_json(item));
  return cells;
}

}  // namespace reuselab::ceiling

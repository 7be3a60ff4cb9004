#include <algorithm>
#include <cmath>
#include <map>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "embedhom/app.hpp"
#include "embedhom/error.hpp"

namespace embedhom::app {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(prefix + key, "unknown key");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& prefix) {
  if (!obj.contains(key)) throw ConfigError(prefix + key, "missing required key");
  return obj.at(key);
}

double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  return v.get<int>();
}

std::vector<double> numbers(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, key));
  return out;
}

void strictly_increasing(const std::vector<double>& v, const std::string& key) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) throw ConfigError(key, "must be strictly increasing");
  }
}

// A number (scalar times identity), d numbers (diagonal) or d rows.
SymMatrix matrix_value(const json& v, int d, const std::string& key) {
  if (v.is_number()) return SymMatrix::scalar(d, v.get<double>());
  if (!v.is_array() || static_cast<int>(v.size()) != d) {
    throw ConfigError(key, fmt::format("expected a number, {} numbers or {} rows", d, d));
  }
  if (v[0].is_array()) {
    std::vector<double> entries;
    for (const auto& row : v) {
      const auto r = numbers(row, key);
      if (static_cast<int>(r.size()) != d) throw ConfigError(key, "matrix rows have the wrong length");
      entries.insert(entries.end(), r.begin(), r.end());
    }
    try {
      return SymMatrix::from_rows(d, entries);
    } catch (const Error& e) {
      throw ConfigError(key, e.what());
    }
  }
  const auto diag = numbers(v, key);
  return SymMatrix::diagonal(diag);
}

const std::set<std::string> kTopKeys = {"dimension",      "microstructure",   "bounds",     "R_list",
                                        "kappa",          "cells_per_unit",   "solver_tolerance",
                                        "estimators",     "supercell_N_list", "richardson", "output_path",
                                        "search_space",   "boundary",         "supercell_cells_per_unit"};

const std::set<std::string>& micro_keys(const std::string& kind) {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"constant", {"kind", "seed", "value"}},
      {"checkerboard", {"kind", "seed", "phases", "period"}},
      {"inclusions",
       {"kind", "seed", "volume_fraction", "radius_min", "radius_max", "inclusion_value", "matrix_value",
        "generation_radius"}},
      {"piecewise_1d", {"kind", "seed", "breakpoints", "values", "period", "origin"}},
  };
  const auto it = keys.find(kind);
  if (it == keys.end()) {
    throw ConfigError("microstructure.kind",
                      "unknown kind '" + kind + "' (constant, checkerboard, inclusions, piecewise_1d)");
  }
  return it->second;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
  reject_unknown(doc, kTopKeys, "");

  RunConfig cfg;
  cfg.dimension = integer(require(doc, "dimension", ""), "dimension");
  if (cfg.dimension != 1 && cfg.dimension != 2) throw ConfigError("dimension", "must be 1 or 2");

  const json& b = require(doc, "bounds", "");
  if (!b.is_object()) throw ConfigError("bounds", "expected an object with alpha and beta");
  reject_unknown(b, {"alpha", "beta"}, "bounds.");
  try {
    cfg.bounds = EllipticityBounds(number(require(b, "alpha", "bounds."), "bounds.alpha"),
                                   number(require(b, "beta", "bounds."), "bounds.beta"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("bounds", e.what());
  }

  const json& m = require(doc, "microstructure", "");
  if (!m.is_object()) throw ConfigError("microstructure", "expected an object");
  const json& kind = require(m, "kind", "microstructure.");
  if (!kind.is_string()) throw ConfigError("microstructure.kind", "expected a string");
  cfg.microstructure_kind = kind.get<std::string>();
  reject_unknown(m, micro_keys(cfg.microstructure_kind), "microstructure.");
  if (m.contains("seed")) {
    if (!m["seed"].is_number_unsigned() && !(m["seed"].is_number_integer() && m["seed"].get<long long>() >= 0)) {
      throw ConfigError("microstructure.seed", "expected a nonnegative integer");
    }
    cfg.seed = m["seed"].get<std::uint64_t>();
  }
  cfg.microstructure_json = m.dump();

  if (doc.contains("R_list")) cfg.R_list = numbers(doc["R_list"], "R_list");
  strictly_increasing(cfg.R_list, "R_list");
  for (double r : cfg.R_list) {
    if (!(r > 0.0)) throw ConfigError("R_list", "entries must be positive");
  }
  if (doc.contains("kappa")) cfg.kappa = number(doc["kappa"], "kappa");
  if (!(cfg.kappa >= 2.0)) throw ConfigError("kappa", "must be at least 2 (L >= 2R)");
  if (doc.contains("cells_per_unit")) cfg.cells_per_unit = integer(doc["cells_per_unit"], "cells_per_unit");
  if (cfg.cells_per_unit < 1) throw ConfigError("cells_per_unit", "must be positive");
  if (doc.contains("solver_tolerance")) cfg.solver_tolerance = number(doc["solver_tolerance"], "solver_tolerance");
  if (!(cfg.solver_tolerance > 0.0 && cfg.solver_tolerance < 1.0)) {
    throw ConfigError("solver_tolerance", "must lie in (0, 1)");
  }
  if (doc.contains("estimators")) {
    const json& e = doc["estimators"];
    if (!e.is_array() || e.empty()) throw ConfigError("estimators", "expected a nonempty array of names");
    cfg.estimators.clear();
    for (const auto& x : e) {
      if (!x.is_string()) throw ConfigError("estimators", "expected strings");
      const auto k = parse_estimator(x.get<std::string>());
      if (std::find(cfg.estimators.begin(), cfg.estimators.end(), k) != cfg.estimators.end()) {
        throw ConfigError("estimators", "duplicate entry '" + x.get<std::string>() + "'");
      }
      cfg.estimators.push_back(k);
    }
  }
  if (doc.contains("supercell_N_list")) cfg.supercell_N_list = numbers(doc["supercell_N_list"], "supercell_N_list");
  strictly_increasing(cfg.supercell_N_list, "supercell_N_list");
  if (doc.contains("richardson")) {
    if (!doc["richardson"].is_boolean()) throw ConfigError("richardson", "expected true or false");
    cfg.richardson = doc["richardson"].get<bool>();
  }
  if (doc.contains("output_path")) {
    if (!doc["output_path"].is_string()) throw ConfigError("output_path", "expected a string");
    cfg.output_path = doc["output_path"].get<std::string>();
  }
  if (doc.contains("search_space")) {
    const json& s = doc["search_space"];
    if (s == "isotropic") {
      cfg.search_space = SearchSpace::isotropic;
    } else if (s == "diagonal") {
      cfg.search_space = SearchSpace::diagonal;
    } else {
      throw ConfigError("search_space", "expected \"isotropic\" or \"diagonal\"");
    }
  }
  if (doc.contains("boundary")) {
    const json& s = doc["boundary"];
    if (s == "neumann") {
      cfg.boundary = Boundary::neumann;
    } else if (s == "dirichlet") {
      cfg.boundary = Boundary::dirichlet;
    } else {
      throw ConfigError("boundary", "expected \"neumann\" or \"dirichlet\"");
    }
  }
  if (doc.contains("supercell_cells_per_unit")) {
    cfg.supercell_cells_per_unit = integer(doc["supercell_cells_per_unit"], "supercell_cells_per_unit");
    if (cfg.supercell_cells_per_unit < 1) throw ConfigError("supercell_cells_per_unit", "must be positive");
  }
  // Field parameters are checked here too, so a bad file fails before any solve.
  (void)build_field(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

CoefficientField build_field(const RunConfig& cfg) {
  const json m = json::parse(cfg.microstructure_json);
  const int d = cfg.dimension;
  const std::string& kind = cfg.microstructure_kind;
  const std::string p = "microstructure.";
  try {
    if (kind == "constant") {
      return CoefficientField::constant(matrix_value(require(m, "value", p), d, p + "value"), cfg.bounds);
    }
    if (kind == "checkerboard") {
      const json& ph = require(m, "phases", p);
      if (!ph.is_array() || ph.size() != 2) throw ConfigError(p + "phases", "expected two phase values");
      CheckerboardField cb{matrix_value(ph[0], d, p + "phases"), matrix_value(ph[1], d, p + "phases"),
                           m.contains("period") ? number(m["period"], p + "period") : 1.0};
      return CoefficientField(d, cb, cfg.bounds);
    }
    if (kind == "inclusions") {
      InclusionSpec spec;
      spec.dim = d;
      spec.seed = cfg.seed;
      spec.bounds = cfg.bounds;
      spec.volume_fraction_target = number(require(m, "volume_fraction", p), p + "volume_fraction");
      spec.radius_min = number(require(m, "radius_min", p), p + "radius_min");
      spec.radius_max = m.contains("radius_max") ? number(m["radius_max"], p + "radius_max") : spec.radius_min;
      spec.inclusion_matrix = matrix_value(require(m, "inclusion_value", p), d, p + "inclusion_value");
      spec.matrix_ext = matrix_value(require(m, "matrix_value", p), d, p + "matrix_value");
      if (m.contains("generation_radius")) {
        spec.generation_radius = number(m["generation_radius"], p + "generation_radius");
      } else {
        // Cover every embedding ball and supercell box of the study, plus a
        // margin: RSA leaves a depleted layer along the generation sphere.
        double r = 1.0;
        if (!cfg.R_list.empty()) r = std::max(r, cfg.R_list.back());
        if (!cfg.supercell_N_list.empty()) r = std::max(r, std::sqrt(static_cast<double>(d)) * cfg.supercell_N_list.back());
        spec.generation_radius = r + std::max(2.0, 4.0 * spec.radius_max);
      }
      try {
        return generate_inclusions(spec);
      } catch (const GenerationError& e) {
        throw ConfigError(p + "volume_fraction",
                          fmt::format("{} (achieved fraction {:.4f})", e.what(), e.achieved_fraction()));
      }
    }
    if (kind == "piecewise_1d") {
      if (d != 1) throw ConfigError(p + "kind", "piecewise_1d requires dimension 1");
      PiecewiseField1D pw;
      pw.breakpoints = numbers(require(m, "breakpoints", p), p + "breakpoints");
      pw.values = numbers(require(m, "values", p), p + "values");
      if (m.contains("period")) pw.period = number(m["period"], p + "period");
      if (m.contains("origin")) pw.origin = number(m["origin"], p + "origin");
      return CoefficientField(1, pw, cfg.bounds);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("microstructure", e.what());
  }
  micro_keys(kind);  // throws for unknown kinds
  throw ConfigError(p + "kind", "unsupported kind");
}

StudyOptions study_options(const RunConfig& cfg, int jobs) {
  StudyOptions o;
  o.R_list = cfg.R_list;
  o.kappa = cfg.kappa;
  o.cells_per_unit = cfg.cells_per_unit;
  o.boundary = cfg.boundary;
  o.solver.tolerance = cfg.solver_tolerance;
  o.estimators = cfg.estimators;
  o.space = cfg.search_space;
  o.richardson = cfg.richardson;
  const bool supercell =
      std::find(cfg.estimators.begin(), cfg.estimators.end(), EstimatorKind::supercell) != cfg.estimators.end();
  if (supercell) o.supercell_N = cfg.supercell_N_list;
  o.supercell_cells_per_unit = cfg.supercell_cells_per_unit;
  o.jobs = jobs;
  return o;
}

std::string csv_header() {
  return "R,estimator,a11,a12,a22,outer_iterations,inner_residual,wall_seconds,kappa,h,tolerance,seed,status";
}

std::string to_csv(const std::vector<EstimatorReport>& rows, const RunConfig& cfg, const CsvOptions& opts) {
  std::string out = csv_header() + "\n";
  const double h = 1.0 / cfg.cells_per_unit;
  const double hs = 1.0 / (cfg.supercell_cells_per_unit > 0 ? cfg.supercell_cells_per_unit : cfg.cells_per_unit);
  for (const auto& r : rows) {
    const bool sc = r.estimator == EstimatorKind::supercell;
    std::string entries;
    if (r.failed) {
      entries = ",,";
    } else if (cfg.dimension == 1) {
      entries = fmt::format("{},,", r.matrix(0, 0));
    } else {
      entries = fmt::format("{},{},{}", r.matrix(0, 0), r.matrix(0, 1), r.matrix(1, 1));
    }
    std::string status = "ok";
    if (r.failed) {
      status = "failed";
    } else if (!r.converged) {
      status = "not_converged";
    } else if (r.multiple_roots) {
      status = "multiple_roots";
    }
    out += fmt::format("{},{},{},{},{:.3e},{},{},{},{},{},{}\n", r.R, to_string(r.estimator), entries,
                       r.outer_iterations, r.inner_residual, opts.timings ? fmt::format("{:.3f}", r.wall_seconds) : "",
                       sc ? std::string() : fmt::format("{}", cfg.kappa), sc ? hs : h, cfg.solver_tolerance, cfg.seed,
                       status);
  }
  return out;
}

}  // namespace embedhom::app

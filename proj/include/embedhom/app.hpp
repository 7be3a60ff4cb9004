#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "embedhom/estimators.hpp"
#include "embedhom/field.hpp"

namespace embedhom::app {

/// Contents of a run configuration file. Unknown keys are rejected.
struct RunConfig {
  int dimension = 2;
  std::string microstructure_json;  // raw "microstructure" object, kept for the field builder
  std::string microstructure_kind;
  std::uint64_t seed = 0;
  EllipticityBounds bounds{1.0, 1.0};
  std::vector<double> R_list;
  double kappa = 4.0;
  int cells_per_unit = 16;
  double solver_tolerance = 1e-10;
  std::vector<EstimatorKind> estimators{EstimatorKind::a1, EstimatorKind::a2, EstimatorKind::a3_scalar};
  std::vector<double> supercell_N_list;
  bool richardson = false;
  std::string output_path;
  // Optional extras.
  SearchSpace search_space = SearchSpace::isotropic;
  Boundary boundary = Boundary::neumann;
  int supercell_cells_per_unit = 0;
};

// Throws ConfigError naming the key at fault.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Builds the coefficient field; inclusion fields are generated from the seed.
CoefficientField build_field(const RunConfig& cfg);

StudyOptions study_options(const RunConfig& cfg, int jobs);

struct CsvOptions {
  bool timings = false;  // fill wall_seconds; otherwise left empty for reproducible files
};

std::string csv_header();
/// One line per report in the given order. Always "\n" terminated.
std::string to_csv(const std::vector<EstimatorReport>& rows, const RunConfig& cfg, const CsvOptions& opts = {});

struct CommandOptions {
  int jobs = 1;
  std::optional<std::string> output;  // overrides cfg.output_path
  bool oracle_check = false;
  bool timings = false;
};

// Exit codes: 0 success, 1 configuration or I/O error, 2 some row failed.
int cmd_estimate(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_compare_supercell(const RunConfig& cfg, const CommandOptions& opts, std::ostream& out, std::ostream& log);

struct SelfCheck {
  std::string name;
  std::string description;
};
std::vector<SelfCheck> selfcheck_list();
/// Runs the invariant suite with the given solver tolerance; 0 iff all pass, else 2.
int cmd_selfcheck(double tolerance, std::ostream& out);

}  // namespace embedhom::app

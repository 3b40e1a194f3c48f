#pragma once

#include "locsolv/envelope.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace locsolv::cli {

enum class Format { Json, Csv, Text };

/// Parsed command line. Numbers that may need exact treatment (a0, taylor)
/// are kept as text until dispatch.
struct RunConfig {
  std::string subcommand;
  std::optional<int> m;
  std::optional<std::string> a0;
  std::vector<std::string> taylor;
  std::optional<int> order;
  std::optional<std::string> branch;
  std::optional<std::pair<double, double>> window;
  bool exact = false;
  Format format = Format::Json;
  std::optional<std::string> out;
  std::optional<std::string> cache;

  std::optional<int> dim;
  std::optional<double> scale;
  double tol = 1e-10;        ///< threshold root tolerance
  double tol_sigma = 1e-6;
  double tol_lambda = 1e-7;
  double c_floor = 1e-6;     ///< relative floor on c_n

  int j_max = 15;
  int fit_order = 3;
  int witness_A = 8;
  int witness_B = 2;
  std::vector<double> lambdas;
  bool allow_solvable = false;
};

/// Throws PreconditionError for unknown flags, malformed numbers and
/// inconsistent or missing options. `--help` yields std::nullopt after
/// printing usage to `help`.
std::optional<RunConfig> parse(const std::vector<std::string>& args, std::ostream& help);

/// Runs the command and returns its envelope; warnings end up in provenance.
ResultEnvelope execute(const RunConfig& cfg);

/// Renders an envelope in the requested format.
std::string render(const ResultEnvelope& envelope, const RunConfig& cfg);

/// Full front end: exit 0 on success, 2 on a precondition violation, 1 on
/// any other failure. Errors go to `err` as one line of JSON.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace locsolv::cli

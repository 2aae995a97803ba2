// Copyright 2026 The gpucb-cpd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GPUCB_CLI_HPP
#define GPUCB_CLI_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gpucb/experiments.hpp"
#include "json.hpp"

namespace gpucb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// Bad configuration. `field` names the offending key when known and `line`
/// is the 1-based line in the config text when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string field = {}, int line = 0);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

enum class Experiment { kRun, kSweepT, kSweepK, kCompare, kFit };

std::string to_string(Experiment e);
Experiment experiment_from_string(std::string_view name);

struct RunConfig {
  Experiment experiment = Experiment::kRun;
  double alpha = 2.5;
  double lengthscale = 1.0;
  std::vector<double> low = {0.0};
  std::vector<double> high = {5.0};
  int grid_size = 1000;
  double noise_sd = 0.05;
  double xi = std::sqrt(3.0);
  double big_d = 0.02;
  double theta_coeff = 2.6;
  double c_rho = ExperimentSettings{}.c_rho;
  std::optional<double> sigma2;
  std::optional<int> horizon;  // T; unset means the experiment's own default
  std::optional<int> periods;  // K; likewise
  int reps = 64;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out = "gpucb_out";
  std::string input;

  /// T and K actually used by the experiment.
  int resolved_horizon() const;
  int resolved_periods() const;
  std::vector<int> resolved_horizons() const;  // T values the run touches
  std::vector<int> resolved_periods_list() const;

  /// Throws ConfigError naming the field.
  void validate() const;
  ExperimentSettings settings() const;
  /// Every field that affects results; the worker count is left out.
  nlohmann::json to_json() const;
};

/// Command-line values; each set field replaces the file value.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<int> horizon;
  std::optional<int> periods;
  std::optional<double> xi;
  std::optional<double> big_d;
  std::optional<double> theta_coeff;
  std::optional<int> grid_size;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> input;
};

/// Parses YAML config text, applies overrides, then validates. An unset seed
/// falls back to `env_seed`. Throws ConfigError.
RunConfig parse_config(std::string_view text, const Overrides& overrides,
                       Experiment experiment = Experiment::kRun,
                       std::optional<std::uint64_t> env_seed = std::nullopt);

/// Shortest decimal that reads back to the same double; '.' separator.
std::string format_number(double value);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Runs one experiment and writes `<out>.csv` and `<out>.json`.
void execute(const RunConfig& cfg);

/// Entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace gpucb::cli

#endif  // GPUCB_CLI_HPP

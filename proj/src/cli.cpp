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

#include "gpucb/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <system_error>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "CLI11.hpp"
#include "gpucb/gpr.hpp"

namespace gpucb::cli {

namespace {

std::string with_location(const std::string& message, const std::string& field, int line) {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  if (!field.empty()) out += field + ": ";
  return out + message;
}

}  // namespace

ConfigError::ConfigError(const std::string& message, std::string field, int line)
    : std::runtime_error(with_location(message, field, line)),
      field_(std::move(field)),
      line_(line) {}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::kRun:
      return "run";
    case Experiment::kSweepT:
      return "sweep-t";
    case Experiment::kSweepK:
      return "sweep-k";
    case Experiment::kCompare:
      return "compare";
    case Experiment::kFit:
      return "fit";
  }
  return "unknown";
}

Experiment experiment_from_string(std::string_view name) {
  for (Experiment e : {Experiment::kRun, Experiment::kSweepT, Experiment::kSweepK,
                       Experiment::kCompare, Experiment::kFit}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'", "experiment");
}

// ---------------------------------------------------------------------------
// RunConfig

int RunConfig::resolved_horizon() const {
  if (horizon) return *horizon;
  return experiment == Experiment::kSweepK ? 2700 : 1200;
}

int RunConfig::resolved_periods() const {
  if (periods) return *periods;
  return experiment == Experiment::kSweepT ? 3 : 4;
}

std::vector<int> RunConfig::resolved_horizons() const {
  if (experiment == Experiment::kSweepT) return kSweepHorizons;
  return {resolved_horizon()};
}

std::vector<int> RunConfig::resolved_periods_list() const {
  if (experiment == Experiment::kSweepK) return kSweepPeriods;
  return {resolved_periods()};
}

void RunConfig::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("must be a finite number > 0", field);
  };
  if (alpha != 0.5 && alpha != 1.5 && alpha != 2.5) {
    throw ConfigError("must be one of 0.5, 1.5, 2.5", "kernel.alpha");
  }
  positive(lengthscale, "kernel.lengthscale");
  if (low.empty() || low.size() != high.size()) {
    throw ConfigError("low and high must have the same, positive length", "domain");
  }
  if (low.size() > 3) throw ConfigError("at most 3 dimensions are supported", "domain");
  for (std::size_t i = 0; i < low.size(); ++i) {
    if (!(high[i] > low[i])) throw ConfigError("high must exceed low", "domain.high");
  }
  if (grid_size < 2) throw ConfigError("must be >= 2", "domain.grid_size");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("must be >= 0", "noise_sd");
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw ConfigError("must be >= 0", "xi");
  positive(big_d, "D");
  positive(theta_coeff, "theta_coeff");
  positive(c_rho, "c_rho");
  if (sigma2) positive(*sigma2, "sigma2");
  if (!sigma2 && noise_sd == 0.0) {
    throw ConfigError("noise_sd = 0 needs an explicit sigma2", "sigma2");
  }
  if (reps < 1) throw ConfigError("must be >= 1", "reps");
  if (workers < 1) throw ConfigError("must be >= 1", "workers");
  if (experiment == Experiment::kFit) {
    if (input.empty()) throw ConfigError("fit needs an input CSV", "input");
    return;
  }
  if (out.empty()) throw ConfigError("must not be empty", "out");
  for (int k : resolved_periods_list()) {
    if (k < 1) throw ConfigError("must be >= 1", "K");
    for (int t : resolved_horizons()) {
      if (t < 2) throw ConfigError("must be >= 2", "T");
      if (t < k) {
        throw ConfigError("T >= K violated (T = " + std::to_string(t) +
                              ", K = " + std::to_string(k) + ")",
                          "T");
      }
    }
  }
}

ExperimentSettings RunConfig::settings() const {
  ExperimentSettings s;
  s.kernel.smoothness = smoothness_from_value(alpha);
  s.kernel.lengthscale = lengthscale;
  s.domain.low = Eigen::Map<const Eigen::VectorXd>(low.data(), static_cast<Eigen::Index>(low.size()));
  s.domain.high =
      Eigen::Map<const Eigen::VectorXd>(high.data(), static_cast<Eigen::Index>(high.size()));
  s.domain.points_per_axis = grid_size;
  s.noise_sd = noise_sd;
  s.xi = xi;
  s.big_d = big_d;
  s.theta_coeff = theta_coeff;
  s.c_rho = c_rho;
  s.sigma2 = sigma2;
  s.reps = reps;
  s.base_seed = seed;
  s.workers = workers;
  return s;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = to_string(experiment);
  j["kernel"] = {{"alpha", alpha}, {"lengthscale", lengthscale}};
  j["domain"] = {{"low", low}, {"high", high}, {"grid_size", grid_size}};
  j["noise_sd"] = noise_sd;
  j["xi"] = xi;
  j["D"] = big_d;
  j["theta_coeff"] = theta_coeff;
  j["c_rho"] = c_rho;
  j["sigma2"] = sigma2 ? nlohmann::json(*sigma2) : nlohmann::json(nullptr);
  if (experiment == Experiment::kFit) {
    j["input"] = input;
  } else {
    j["T"] = resolved_horizons();
    j["K"] = resolved_periods_list();
    j["reps"] = reps;
    j["seed"] = seed;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Config text

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

template <class T>
T scalar_as(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw ConfigError("expected a scalar value", field, line_of(node));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("cannot convert '" + node.Scalar() + "'", field, line_of(node));
  }
}

std::vector<double> bounds_as(const YAML::Node& node, const std::string& field) {
  if (node.IsScalar()) return {scalar_as<double>(node, field)};
  if (!node.IsSequence()) throw ConfigError("expected a number or a list", field, line_of(node));
  std::vector<double> out;
  for (const auto& item : node) out.push_back(scalar_as<double>(item, field));
  return out;
}

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                const std::string& prefix) {
  for (const auto& kv : map) {
    const std::string key = kv.first.Scalar();
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key", prefix + key, line_of(kv.first));
    }
  }
}

const YAML::Node require_map(const YAML::Node& node, const std::string& field) {
  if (!node.IsMap()) throw ConfigError("expected a mapping", field, line_of(node));
  return node;
}

void apply_yaml(const YAML::Node& root, RunConfig& cfg, bool& seed_set) {
  if (root.IsNull()) return;
  require_map(root, "<root>");
  check_keys(root,
             {"kernel", "domain", "noise_sd", "xi", "D", "theta_coeff", "c_rho", "sigma2", "T",
              "K", "reps", "seed", "workers", "out", "input"},
             "");
  if (const auto k = root["kernel"]) {
    require_map(k, "kernel");
    check_keys(k, {"alpha", "lengthscale"}, "kernel.");
    if (k["alpha"]) cfg.alpha = scalar_as<double>(k["alpha"], "kernel.alpha");
    if (k["lengthscale"]) cfg.lengthscale = scalar_as<double>(k["lengthscale"], "kernel.lengthscale");
  }
  if (const auto d = root["domain"]) {
    require_map(d, "domain");
    check_keys(d, {"low", "high", "grid_size"}, "domain.");
    if (d["low"]) cfg.low = bounds_as(d["low"], "domain.low");
    if (d["high"]) cfg.high = bounds_as(d["high"], "domain.high");
    if (d["grid_size"]) cfg.grid_size = scalar_as<int>(d["grid_size"], "domain.grid_size");
  }
  if (root["noise_sd"]) cfg.noise_sd = scalar_as<double>(root["noise_sd"], "noise_sd");
  if (root["xi"]) cfg.xi = scalar_as<double>(root["xi"], "xi");
  if (root["D"]) cfg.big_d = scalar_as<double>(root["D"], "D");
  if (root["theta_coeff"]) cfg.theta_coeff = scalar_as<double>(root["theta_coeff"], "theta_coeff");
  if (root["c_rho"]) cfg.c_rho = scalar_as<double>(root["c_rho"], "c_rho");
  if (const auto s = root["sigma2"]; s && !s.IsNull()) cfg.sigma2 = scalar_as<double>(s, "sigma2");
  if (root["T"]) cfg.horizon = scalar_as<int>(root["T"], "T");
  if (root["K"]) cfg.periods = scalar_as<int>(root["K"], "K");
  if (root["reps"]) cfg.reps = scalar_as<int>(root["reps"], "reps");
  if (root["seed"]) {
    cfg.seed = scalar_as<std::uint64_t>(root["seed"], "seed");
    seed_set = true;
  }
  if (root["workers"]) cfg.workers = scalar_as<int>(root["workers"], "workers");
  if (root["out"]) cfg.out = scalar_as<std::string>(root["out"], "out");
  if (root["input"]) cfg.input = scalar_as<std::string>(root["input"], "input");
}

}  // namespace

RunConfig parse_config(std::string_view text, const Overrides& ov, Experiment experiment,
                       std::optional<std::uint64_t> env_seed) {
  RunConfig cfg;
  cfg.experiment = experiment;
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, "", e.mark.line + 1);
  }
  bool seed_set = false;
  apply_yaml(root, cfg, seed_set);

  if (ov.seed) {
    cfg.seed = *ov.seed;
    seed_set = true;
  }
  if (!seed_set && env_seed) cfg.seed = *env_seed;
  if (ov.reps) cfg.reps = *ov.reps;
  if (ov.horizon) cfg.horizon = *ov.horizon;
  if (ov.periods) cfg.periods = *ov.periods;
  if (ov.xi) cfg.xi = *ov.xi;
  if (ov.big_d) cfg.big_d = *ov.big_d;
  if (ov.theta_coeff) cfg.theta_coeff = *ov.theta_coeff;
  if (ov.grid_size) cfg.grid_size = *ov.grid_size;
  if (ov.workers) cfg.workers = *ov.workers;
  if (ov.out) cfg.out = *ov.out;
  if (ov.input) cfg.input = *ov.input;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Output

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << contents;
    os.flush();
    if (!os) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename onto " + target.string() + ": " + ec.message());
  }
}

namespace {

std::string traces_csv(const std::vector<const RegretTrace*>& traces) {
  std::ostringstream os;
  os << "t";
  for (const auto* tr : traces) os << ',' << tr->label;
  os << '\n';
  const std::size_t len = traces.front()->cumulative.size();
  for (std::size_t i = 0; i < len; ++i) {
    os << i + 1;
    for (const auto* tr : traces) os << ',' << format_number(tr->cumulative[i]);
    os << '\n';
  }
  return os.str();
}

nlohmann::json fit_json(const PowerLawFit& fit) {
  return {{"coeff", fit.coeff},
          {"exponent", fit.exponent},
          {"ci_low", fit.ci_low},
          {"ci_high", fit.ci_high},
          {"n_points", fit.n_points}};
}

std::string sweep_csv(const SweepResult& res) {
  std::ostringstream os;
  os << "x,mean_final_regret,stderr\n";
  for (const auto& p : res.points) {
    os << format_number(p.x) << ',' << format_number(p.mean_final) << ','
       << format_number(p.stderr_final) << '\n';
  }
  return os.str();
}

nlohmann::json sweep_json(const SweepResult& res) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : res.points) {
    points.push_back({{"x", p.x},
                      {"mean_final_regret", p.mean_final},
                      {"stderr", p.stderr_final},
                      {"finals", p.finals}});
  }
  return {{"points", points}, {"fit", fit_json(res.fit)}};
}

std::vector<std::pair<double, double>> read_points(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open '" + path + "'", "input");
  std::vector<std::pair<double, double>> pts;
  std::string line;
  int lineno = 0;
  auto parse = [&](std::string_view s, double& v) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto c1 = line.find(',');
    if (c1 == std::string::npos) throw ConfigError("expected at least two columns", "input", lineno);
    const auto c2 = line.find(',', c1 + 1);
    const std::string_view sv(line);
    double x = 0.0, y = 0.0;
    const bool ok = parse(sv.substr(0, c1), x) &&
                    parse(sv.substr(c1 + 1, c2 == std::string::npos ? sv.npos : c2 - c1 - 1), y);
    if (!ok) {
      if (pts.empty() && lineno == 1) continue;  // header
      throw ConfigError("non-numeric value", "input", lineno);
    }
    pts.emplace_back(x, y);
  }
  return pts;
}

}  // namespace

void execute(const RunConfig& cfg) {
  nlohmann::json summary;
  summary["config"] = cfg.to_json();
  std::string csv;

  if (cfg.experiment == Experiment::kFit) {
    const auto pts = read_points(cfg.input);
    PowerLawFit fit;
    try {
      fit = fit_power_law(pts);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what(), "input");
    }
    summary["fit"] = fit_json(fit);
    csv = "coeff,exponent,ci_low,ci_high,n_points\n" + format_number(fit.coeff) + ',' +
          format_number(fit.exponent) + ',' + format_number(fit.ci_low) + ',' +
          format_number(fit.ci_high) + ',' + std::to_string(fit.n_points) + '\n';
  } else {
    const Workbench bench(cfg.settings());
    switch (cfg.experiment) {
      case Experiment::kRun: {
        const auto res =
            bench.run(cfg.resolved_periods(), cfg.resolved_horizon(), DetectorMode::kCpd);
        csv = traces_csv(std::vector<const RegretTrace*>{&res.mean});
        summary["label"] = res.mean.label;
        summary["mean_final_regret"] = res.mean.final_regret();
        summary["finals"] = res.finals;
        summary["resets"] = res.mean.detections.size();
        break;
      }
      case Experiment::kSweepT: {
        const auto res = sweep_T(bench, kSweepHorizons, cfg.resolved_periods());
        csv = sweep_csv(res);
        summary.update(sweep_json(res));
        break;
      }
      case Experiment::kSweepK: {
        const auto res = sweep_K(bench, kSweepPeriods, cfg.resolved_horizon());
        csv = sweep_csv(res);
        summary.update(sweep_json(res));
        break;
      }
      case Experiment::kCompare: {
        const auto res = compare(bench, cfg.resolved_horizon(), cfg.resolved_periods());
        std::vector<const RegretTrace*> traces;
        nlohmann::json algos = nlohmann::json::array();
        for (const auto& r : res) {
          traces.push_back(&r.mean);
          algos.push_back({{"label", r.mean.label},
                           {"mean_final_regret", r.mean.final_regret()},
                           {"finals", r.finals}});
        }
        csv = traces_csv(traces);
        summary["algorithms"] = algos;
        break;
      }
      case Experiment::kFit:
        break;
    }
  }
  write_file_atomic(cfg.out + ".csv", csv);
  write_file_atomic(cfg.out + ".json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Entry point

namespace {

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file '" + path + "'", "config");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("GPUCB_CPD_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string_view s(raw);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("not an unsigned integer", "GPUCB_CPD_SEED");
  }
  return v;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Simulator for GP-UCB with change-point detection"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  Overrides ov;
  app.add_option("--config", config_path, "YAML config file");
  app.add_option("--seed", ov.seed, "base seed (falls back to GPUCB_CPD_SEED)");
  app.add_option("--reps", ov.reps, "replications per setting");
  app.add_option("--T", ov.horizon, "horizon");
  app.add_option("--K", ov.periods, "number of stationary periods");
  app.add_option("--xi", ov.xi, "uniform exploration coefficient");
  app.add_option("--big-d", ov.big_d, "beta coefficient D");
  app.add_option("--theta", ov.theta_coeff, "detection threshold coefficient");
  app.add_option("--grid", ov.grid_size, "grid points per axis");
  app.add_option("--workers", ov.workers, "worker threads (default: available processors)");
  app.add_option("--out", ov.out, "output path prefix for .csv and .json");
  app.add_option("--input", ov.input, "points CSV for fit");

  std::vector<std::pair<CLI::App*, Experiment>> subs;
  subs.emplace_back(app.add_subcommand("run", "one replicated GP-UCB-CPD run"), Experiment::kRun);
  subs.emplace_back(app.add_subcommand("sweep-t", "regret against horizon"), Experiment::kSweepT);
  subs.emplace_back(app.add_subcommand("sweep-k", "regret against number of periods"),
                    Experiment::kSweepK);
  subs.emplace_back(app.add_subcommand("compare", "four agents on shared environments"),
                    Experiment::kCompare);
  subs.emplace_back(app.add_subcommand("fit", "power-law fit of a points CSV"), Experiment::kFit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  Experiment experiment = Experiment::kRun;
  for (const auto& [sub, e] : subs) {
    if (sub->parsed()) experiment = e;
  }

  try {
    if (!ov.workers) {
      ov.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
    const std::string text = config_path.empty() ? std::string() : read_text(config_path);
    const RunConfig cfg = parse_config(text, ov, experiment, env_seed());
    execute(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace gpucb::cli

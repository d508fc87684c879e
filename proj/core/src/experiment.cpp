#include "cobras/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "cobras/balance.hpp"
#include "cobras/galerkin.hpp"
#include "cobras/io.hpp"
#include "cobras/kernel_features.hpp"
#include "cobras/metrics.hpp"
#include "cobras/models.hpp"
#include "cobras/regression.hpp"
#include "cobras/snapshots.hpp"

namespace cobras {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto begin = item.find_first_not_of(" \t");
    const auto end = item.find_last_not_of(" \t");
    if (begin == std::string::npos) continue;
    items.push_back(item.substr(begin, end - begin + 1));
  }
  return items;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + value + "'");
  }
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad seed for " + key + ": '" + value + "'");
  }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

std::vector<Index> parse_index_list(const std::string& key, const std::string& value) {
  std::vector<Index> out;
  for (const auto& item : split_list(value))
    out.push_back(static_cast<Index>(parse_int(key, item)));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format_double(values[i]);
  }
  return out;
}

std::string join(const std::vector<Index>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace

ExperimentConfig ExperimentConfig::toy_defaults() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::surrogate_defaults() {
  ExperimentConfig cfg;
  cfg.system = "surrogate";
  cfg.dt = 0.25;
  cfg.substeps = 5;
  cfg.train_magnitudes = {-0.1, -0.08, -0.05, -0.02, 0.02, 0.05, 0.08, 0.1};
  cfg.train_steps = 80;
  cfg.horizon = 40;
  cfg.gradient_samples = 96;
  cfg.ranks = {8};
  cfg.bpod_horizon = 80;
  cfg.test_impulses = 5;
  cfg.impulse_min = -0.1;
  cfg.impulse_max = 0.1;
  cfg.test_steps = 80;
  cfg.sin_steps = 0;
  cfg.kernel_width = 8.0;
  return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "system") system = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "dt") dt = parse_double(key, value);
  else if (key == "substeps") substeps = static_cast<int>(parse_int(key, value));
  else if (key == "surrogate_dim") surrogate_dim = parse_int(key, value);
  else if (key == "surrogate_seed") surrogate_seed = parse_seed(key, value);
  else if (key == "lti_dim") lti_dim = parse_int(key, value);
  else if (key == "lti_inputs") lti_inputs = parse_int(key, value);
  else if (key == "lti_outputs") lti_outputs = parse_int(key, value);
  else if (key == "lti_seed") lti_seed = parse_seed(key, value);
  else if (key == "train_magnitudes") train_magnitudes = parse_double_list(key, value);
  else if (key == "samples_per_trajectory") samples_per_trajectory = parse_int(key, value);
  else if (key == "train_steps") train_steps = parse_int(key, value);
  else if (key == "horizon") horizon = static_cast<int>(parse_int(key, value));
  else if (key == "gradient_samples") gradient_samples = parse_int(key, value);
  else if (key == "eta_distribution") eta_distribution = value;
  else if (key == "train_seed") train_seed = parse_seed(key, value);
  else if (key == "ranks") ranks = parse_index_list(key, value);
  else if (key == "bpod_horizon") bpod_horizon = parse_int(key, value);
  else if (key == "output_projection_rank") output_projection_rank = parse_int(key, value);
  else if (key == "kernel") kernel = value;
  else if (key == "kernel_width") kernel_width = parse_double(key, value);
  else if (key == "kernel_alpha") kernel_alpha = parse_double(key, value);
  else if (key == "kernel_degree") kernel_degree = parse_double(key, value);
  else if (key == "feature_rank") feature_rank = parse_int(key, value);
  else if (key == "linear_rank") linear_rank = parse_int(key, value);
  else if (key == "krr_alpha_grid") krr_alpha_grid = parse_double_list(key, value);
  else if (key == "krr_gamma_grid") krr_gamma_grid = parse_double_list(key, value);
  else if (key == "cv_folds") cv_folds = static_cast<int>(parse_int(key, value));
  else if (key == "cv_seed") cv_seed = parse_seed(key, value);
  else if (key == "test_impulses") test_impulses = parse_int(key, value);
  else if (key == "impulse_min") impulse_min = parse_double(key, value);
  else if (key == "impulse_max") impulse_max = parse_double(key, value);
  else if (key == "test_steps") test_steps = parse_int(key, value);
  else if (key == "sin_steps") sin_steps = parse_int(key, value);
  else if (key == "test_seed") test_seed = parse_seed(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  bool system_seen = false;
  // First pass to pick the right defaults for the named system.
  std::vector<std::pair<std::string, std::string>> pairs;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
    if (key == "system") {
      system_seen = true;
      if (value == "surrogate") cfg = surrogate_defaults();
      else if (value == "toy" || value == "lti") cfg = toy_defaults();
      else throw ConfigError("config: unknown system '" + value + "'");
      cfg.system = value;
    }
    pairs.emplace_back(key, value);
  }
  (void)system_seen;
  for (const auto& [key, value] : pairs) cfg.set(key, value);
  return cfg;
}

std::string ExperimentConfig::canonical_string() const {
  std::map<std::string, std::string> kv;
  kv["system"] = system;
  kv["output_dir"] = output_dir;
  kv["dt"] = format_double(dt);
  kv["substeps"] = std::to_string(substeps);
  kv["surrogate_dim"] = std::to_string(surrogate_dim);
  kv["surrogate_seed"] = std::to_string(surrogate_seed);
  kv["lti_dim"] = std::to_string(lti_dim);
  kv["lti_inputs"] = std::to_string(lti_inputs);
  kv["lti_outputs"] = std::to_string(lti_outputs);
  kv["lti_seed"] = std::to_string(lti_seed);
  kv["train_magnitudes"] = join(train_magnitudes);
  kv["samples_per_trajectory"] = std::to_string(samples_per_trajectory);
  kv["train_steps"] = std::to_string(train_steps);
  kv["horizon"] = std::to_string(horizon);
  kv["gradient_samples"] = std::to_string(gradient_samples);
  kv["eta_distribution"] = eta_distribution;
  kv["train_seed"] = std::to_string(train_seed);
  kv["ranks"] = join(ranks);
  kv["bpod_horizon"] = std::to_string(bpod_horizon);
  kv["output_projection_rank"] = std::to_string(output_projection_rank);
  kv["kernel"] = kernel;
  kv["kernel_width"] = format_double(kernel_width);
  kv["kernel_alpha"] = format_double(kernel_alpha);
  kv["kernel_degree"] = format_double(kernel_degree);
  kv["feature_rank"] = std::to_string(feature_rank);
  kv["linear_rank"] = std::to_string(linear_rank);
  kv["krr_alpha_grid"] = join(krr_alpha_grid);
  kv["krr_gamma_grid"] = join(krr_gamma_grid);
  kv["cv_folds"] = std::to_string(cv_folds);
  kv["cv_seed"] = std::to_string(cv_seed);
  kv["test_impulses"] = std::to_string(test_impulses);
  kv["impulse_min"] = format_double(impulse_min);
  kv["impulse_max"] = format_double(impulse_max);
  kv["test_steps"] = std::to_string(test_steps);
  kv["sin_steps"] = std::to_string(sin_steps);
  kv["test_seed"] = std::to_string(test_seed);

  std::string out;
  for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
  return out;
}

void ExperimentConfig::to_file(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path.string());
  out << canonical_string();
}

std::string ExperimentConfig::hash_hex() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_string())));
  return buf;
}

std::string ResultManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["config"] = config_echo;
  json method_list = json::array();
  for (const auto& m : methods) {
    json jm;
    jm["method"] = m.method;
    jm["r"] = m.rank;
    jm["mean_normalized_error"] = m.mean_error;
    jm["median_normalized_error"] = m.median_error;
    jm["divergence_count"] = m.divergence_count;
    jm["files"] = m.files;
    method_list.push_back(jm);
  }
  j["methods"] = method_list;
  j["spectra"] = spectra;
  j["extra"] = extra;
  return j.dump(2) + "\n";
}

std::vector<std::string> emit_results(const ResultManifest& manifest, const fs::path& dir,
                                      EmitFormat format) {
  fs::create_directories(dir);
  std::vector<std::string> written;
  {
    const fs::path path = dir / "manifest.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_results: cannot write " + path.string());
    out << manifest.to_json();
    written.push_back(path.string());
  }
  if (format == EmitFormat::csv) {
    const fs::path path = dir / "summary.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_results: cannot write " + path.string());
    out << "method,r,mean_normalized_error,median_normalized_error,divergence_count\n";
    for (const auto& m : manifest.methods)
      out << m.method << ',' << m.rank << ',' << format_double(m.mean_error) << ','
          << format_double(m.median_error) << ',' << m.divergence_count << '\n';
    written.push_back(path.string());
  } else {
    const fs::path path = dir / "summary.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_results: cannot write " + path.string());
    json j = json::array();
    for (const auto& m : manifest.methods) {
      json jm;
      jm["method"] = m.method;
      jm["r"] = m.rank;
      jm["mean_normalized_error"] = m.mean_error;
      jm["median_normalized_error"] = m.median_error;
      jm["divergence_count"] = m.divergence_count;
      j.push_back(jm);
    }
    out << j.dump(2) << "\n";
    written.push_back(path.string());
  }
  return written;
}

KernelSpec kernel_from_config(const ExperimentConfig& cfg) {
  try {
    const KernelFamily family = kernel_family_from_string(cfg.kernel);
    switch (family) {
      case KernelFamily::linear: return KernelSpec::linear(cfg.kernel_alpha);
      case KernelFamily::polynomial:
        return KernelSpec::polynomial(cfg.kernel_alpha, cfg.kernel_degree);
      case KernelFamily::gaussian: return KernelSpec::gaussian(cfg.kernel_width);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  throw ConfigError("config: unknown kernel family");
}

namespace {

std::map<std::string, std::string> echo_config(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> echo;
  std::stringstream ss(cfg.canonical_string());
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) echo[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return echo;
}

std::string file_tag(const std::string& method, Index r, std::uint64_t seed) {
  return method + "_r" + std::to_string(r) + "_s" + std::to_string(seed);
}

Vec sigma_spectrum(const Mat& X, const Mat& Y) {
  return thin_svd_signed(Y.transpose() * X).sigma;
}

void write_spectrum(const fs::path& path, const Vec& sigma) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "index,sigma\n";
  for (Index i = 0; i < sigma.size(); ++i)
    out << i << ',' << format_double(sigma[i]) << '\n';
}

// Mean curve over trajectories; at each time, averages the trajectories whose
// (possibly clipped) curve still covers it.
Vec mean_curve(const std::vector<Vec>& curves) {
  Index longest = 0;
  for (const Vec& c : curves) longest = std::max(longest, c.size());
  Vec mean = Vec::Zero(longest);
  for (Index t = 0; t < longest; ++t) {
    double sum = 0.0;
    Index count = 0;
    for (const Vec& c : curves)
      if (t < c.size()) {
        sum += c[t];
        ++count;
      }
    mean[t] = (count > 0) ? sum / static_cast<double>(count) : 0.0;
  }
  return mean;
}

struct EvaluatedMethod {
  MethodSummary summary;
  std::vector<Vec> curves;
};

}  // namespace

ResultManifest run_toy_experiment(const ExperimentConfig& cfg) {
  if (cfg.system != "toy")
    throw ConfigError("run_toy_experiment: config.system must be 'toy'");
  if (cfg.samples_per_trajectory < 2)
    throw ConfigError("run_toy_experiment: samples_per_trajectory must be >= 2");
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  const OdeSystem ode = toy_model(cfg.dt, cfg.substeps);
  const DiscreteSystem dsys = discretize(ode);
  const int L = cfg.horizon;

  // Training impulse responses, extended L samples past the last initial
  // condition so every gradient horizon stays on stored data.
  std::vector<Trajectory> train;
  std::vector<std::string> train_ids;
  for (double u0 : cfg.train_magnitudes) {
    const Index T = (cfg.samples_per_trajectory - 1) + L;
    train.push_back(simulate(ode, toy_impulse_state(u0), zero_inputs(1, T)));
    train_ids.push_back("train_impulse_" + format_double(u0));
  }

  SnapshotMatrix X =
      build_state_matrix(train, select_time_range(train, 0, cfg.samples_per_trajectory));
  X.sources = train_ids;

  GradientSampleSpec gspec;
  gspec.horizon = L;
  gspec.sample_count = cfg.gradient_samples;
  gspec.eta = eta_distribution_from_string(cfg.eta_distribution);
  gspec.seed = cfg.train_seed;
  const GradientSet gradients = sample_gradients_long(dsys, train, gspec);
  SnapshotMatrix Y = gradients.to_snapshot_matrix();
  Y.sources = train_ids;

  write_snapshot_matrix(dir / "X", X);
  write_snapshot_matrix(dir / "Y", Y);

  // Test protocol: impulses with magnitudes drawn uniformly, plus one
  // sinusoidally forced run from rest.
  Rng test_rng(cfg.test_seed);
  std::vector<Trajectory> test;
  std::vector<Mat> test_outputs;
  std::vector<Vec> test_x0;
  for (Index i = 0; i < cfg.test_impulses; ++i) {
    Rng stream = test_rng.split(static_cast<std::uint64_t>(i));
    const double u0 =
        cfg.impulse_min + (cfg.impulse_max - cfg.impulse_min) * stream.uniform();
    const Vec x0 = toy_impulse_state(u0);
    test.push_back(simulate(ode, x0, zero_inputs(1, cfg.test_steps)));
    test_outputs.push_back(outputs_along(dsys, test.back()));
    test_x0.push_back(x0);
  }
  Mat sin_inputs(1, cfg.sin_steps);
  for (Index k = 0; k < cfg.sin_steps; ++k) sin_inputs(0, k) = std::sin(k * cfg.dt);
  Trajectory sin_truth;
  Mat sin_truth_outputs;
  if (cfg.sin_steps > 0) {
    sin_truth = simulate(ode, Vec::Zero(3), sin_inputs);
    sin_truth_outputs = outputs_along(dsys, sin_truth);
  }

  const OdeSystem lin = toy_linearization(cfg.dt, cfg.substeps);
  const DiscreteSystem dlin = discretize(lin);

  ResultManifest manifest;
  manifest.config_hash = cfg.hash_hex();
  manifest.config_echo = echo_config(cfg);
  manifest.extra["state_samples"] = std::to_string(X.samples());
  manifest.extra["gradient_columns"] = std::to_string(Y.samples());

  for (Index r : cfg.ranks) {
    const BalancedProjection proj = cobras_balance(X, Y, r);
    const PodBasis pod = pod_basis(X, r);
    const BalancedProjection bpod =
        bpod_projection(dlin, cfg.bpod_horizon, r, cfg.output_projection_rank);

    struct NamedRom {
      std::string name;
      GalerkinRom rom;
    };
    std::vector<NamedRom> roms;
    roms.push_back({"cobras", build_galerkin_rom(proj, ode)});
    roms.push_back({"pod", build_galerkin_rom(pod, ode)});
    roms.push_back({"bpod", build_galerkin_rom(bpod, ode)});

    {
      const std::string spath = "sigma_" + file_tag("cobras", r, cfg.train_seed) + ".csv";
      write_spectrum(dir / spath, proj.sigma);
      manifest.spectra["cobras_r" + std::to_string(r)] = spath;
      const std::string bpath = "sigma_" + file_tag("bpod", r, cfg.train_seed) + ".csv";
      write_spectrum(dir / bpath, bpod.sigma);
      manifest.spectra["bpod_r" + std::to_string(r)] = bpath;
      const std::string ppath = "sigma_" + file_tag("pod", r, cfg.train_seed) + ".csv";
      write_spectrum(dir / ppath, pod.singular_values);
      manifest.spectra["pod_r" + std::to_string(r)] = ppath;
    }

    for (const auto& [name, rom] : roms) {
      EvaluatedMethod method;
      method.summary.method = name;
      method.summary.rank = rom.reduced_dim();
      std::vector<Mat> predicted;
      for (Index i = 0; i < cfg.test_impulses; ++i) {
        const RomRun run = simulate_rom(rom, test_x0[static_cast<std::size_t>(i)],
                                        zero_inputs(1, cfg.test_steps));
        if (run.diverged()) ++method.summary.divergence_count;
        predicted.push_back(run.outputs);
      }
      method.curves = normalized_error_curves(predicted, test_outputs, ErrorKind::output);
      method.summary.mean_error =
          mean_normalized_error(predicted, test_outputs, ErrorKind::output);
      method.summary.median_error =
          median_normalized_error(predicted, test_outputs, ErrorKind::output);

      const std::string tag = file_tag(name, r, cfg.test_seed);
      for (std::size_t i = 0; i < method.curves.size(); ++i) {
        char idx[8];
        std::snprintf(idx, sizeof(idx), "%03zu", i);
        const std::string fname = "errors_" + tag + "_traj" + idx + ".csv";
        write_error_curve(dir / fname, cfg.dt, method.curves[i]);
        method.summary.files.push_back(fname);
      }
      const std::string mname = "errors_" + tag + "_mean.csv";
      write_error_curve(dir / mname, cfg.dt, mean_curve(method.curves));
      method.summary.files.push_back(mname);

      if (cfg.sin_steps > 0) {
        const RomRun sin_run = simulate_rom(rom, Vec::Zero(3), sin_inputs);
        const std::string sname = "sin_" + tag + ".csv";
        Trajectory out_traj;
        out_traj.states = sin_run.reduced.states;
        out_traj.inputs = sin_inputs.leftCols(sin_run.reduced.inputs.cols());
        out_traj.dt = cfg.dt;
        write_trajectory_csv(dir / sname, out_traj, sin_run.outputs);
        method.summary.files.push_back(sname);
        const Vec sin_err = normalized_error(sin_run.outputs, sin_truth_outputs,
                                             ErrorKind::output);
        const std::string sename = "sin_errors_" + tag + ".csv";
        write_error_curve(dir / sename, cfg.dt, sin_err);
        method.summary.files.push_back(sename);
      }
      manifest.methods.push_back(method.summary);
    }
  }

  if (cfg.sin_steps > 0)
    write_trajectory_csv(dir / "sin_fom.csv", sin_truth, sin_truth_outputs);

  std::sort(manifest.methods.begin(), manifest.methods.end(),
            [](const MethodSummary& a, const MethodSummary& b) {
              return std::tie(a.method, a.rank) < std::tie(b.method, b.rank);
            });
  emit_results(manifest, dir, EmitFormat::csv);
  return manifest;
}

ResultManifest run_surrogate_experiment(const ExperimentConfig& cfg) {
  if (cfg.system != "surrogate")
    throw ConfigError("run_surrogate_experiment: config.system must be 'surrogate'");
  if (cfg.surrogate_dim < 50 || cfg.surrogate_dim > 500)
    throw ConfigError("run_surrogate_experiment: surrogate_dim must be in [50, 500]");
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  const OdeSystem sys = cascade_surrogate(cfg.surrogate_dim, cfg.dt, cfg.substeps,
                                          cfg.surrogate_seed);
  const DiscreteSystem dsys = discretize(sys);
  const Index n = sys.state_dim;
  const int L = cfg.horizon;

  std::vector<Trajectory> train;
  std::vector<std::string> train_ids;
  for (double u0 : cfg.train_magnitudes) {
    train.push_back(simulate(sys, cascade_impulse_state(sys, u0),
                             zero_inputs(1, cfg.train_steps)));
    train_ids.push_back("train_impulse_" + format_double(u0));
  }

  // Raw states feed the kernel machinery; their 1/sqrt(s) scaling feeds the
  // linear reductions.
  const auto selection = select_all_states(train);
  SnapshotMatrix X = build_state_matrix(train, selection);
  X.sources = train_ids;
  Mat raw_states(n, X.samples());
  {
    Index c = 0;
    for (const auto& [j, t] : selection)
      raw_states.col(c++) = train[static_cast<std::size_t>(j)].states.col(t);
  }

  GradientSampleSpec gspec;
  gspec.horizon = L;
  gspec.sample_count = cfg.gradient_samples;
  gspec.eta = eta_distribution_from_string(cfg.eta_distribution);
  gspec.seed = cfg.train_seed;
  const GradientSet gradients = sample_gradients_long(dsys, train, gspec);
  SnapshotMatrix Y = gradients.to_snapshot_matrix();
  Y.sources = train_ids;

  // Held-out impulse responses, compared in state space.
  Rng test_rng(cfg.test_seed);
  std::vector<Trajectory> test;
  std::vector<Mat> test_states;
  for (Index i = 0; i < cfg.test_impulses; ++i) {
    Rng stream = test_rng.split(static_cast<std::uint64_t>(i));
    const double u0 =
        cfg.impulse_min + (cfg.impulse_max - cfg.impulse_min) * stream.uniform();
    test.push_back(simulate(sys, cascade_impulse_state(sys, u0),
                            zero_inputs(1, cfg.test_steps)));
    test_states.push_back(test.back().states);
  }

  ResultManifest manifest;
  manifest.config_hash = cfg.hash_hex();
  manifest.config_echo = echo_config(cfg);
  manifest.extra["state_samples"] = std::to_string(X.samples());
  manifest.extra["gradient_columns"] = std::to_string(Y.samples());

  auto evaluate_states = [&](const std::string& name, Index rank,
                             const std::vector<Mat>& predicted,
                             int divergences) {
    MethodSummary summary;
    summary.method = name;
    summary.rank = rank;
    summary.divergence_count = divergences;
    const auto curves = normalized_error_curves(predicted, test_states, ErrorKind::state);
    summary.mean_error = mean_normalized_error(predicted, test_states, ErrorKind::state);
    summary.median_error = median_normalized_error(predicted, test_states, ErrorKind::state);
    const std::string tag = file_tag(name, rank, cfg.test_seed);
    for (std::size_t i = 0; i < curves.size(); ++i) {
      char idx[8];
      std::snprintf(idx, sizeof(idx), "%03zu", i);
      const std::string fname = "errors_" + tag + "_traj" + idx + ".csv";
      write_error_curve(dir / fname, cfg.dt, curves[i]);
      summary.files.push_back(fname);
    }
    const std::string mname = "errors_" + tag + "_mean.csv";
    write_error_curve(dir / mname, cfg.dt, mean_curve(curves));
    summary.files.push_back(mname);
    manifest.methods.push_back(summary);
  };

  // Impulse ensembles of a linear system have sharply decaying spectra, so
  // every requested dimension is clamped to the data's numerical rank (with a
  // conditioning margin) and the clamp is recorded.
  auto numerical_rank = [](const Vec& sv, double tol) {
    Index rank = 0;
    while (rank < sv.size() && sv[rank] > tol * sv[0]) ++rank;
    return rank;
  };
  const Index rank_x = numerical_rank(thin_svd_signed(X.data).sigma, 1e-10);
  const Index rank_xy =
      numerical_rank(thin_svd_signed(Mat(Y.data.transpose() * X.data)).sigma, 1e-10);
  const Index feasible = std::min(rank_x, rank_xy);
  manifest.extra["state_numerical_rank"] = std::to_string(rank_x);
  manifest.extra["balancing_numerical_rank"] = std::to_string(rank_xy);

  // Petrov-Galerkin methods.
  for (Index requested : cfg.ranks) {
    const Index r = std::min(requested, feasible);
    if (r < requested)
      std::cerr << "run_surrogate_experiment: rank " << requested << " clamped to " << r
                << " by the data's numerical rank\n";
    const BalancedProjection proj = cobras_balance(X, Y, r);
    const PodBasis pod = pod_basis(X, r);
    const BalancedProjection bpod =
        bpod_projection(dsys, cfg.bpod_horizon, r, cfg.output_projection_rank);

    const std::string spath = "sigma_" + file_tag("cobras", r, cfg.train_seed) + ".csv";
    write_spectrum(dir / spath, sigma_spectrum(X.data, Y.data));
    manifest.spectra["cobras_r" + std::to_string(r)] = spath;

    struct NamedRom {
      std::string name;
      GalerkinRom rom;
    };
    std::vector<NamedRom> roms;
    roms.push_back({"cobras", build_galerkin_rom(proj, sys)});
    roms.push_back({"pod", build_galerkin_rom(pod, sys)});
    roms.push_back({"bpod", build_galerkin_rom(bpod, sys)});
    for (const auto& [name, rom] : roms) {
      std::vector<Mat> predicted;
      int divergences = 0;
      for (const auto& traj : test) {
        const RomRun run =
            simulate_rom(rom, Vec(traj.states.col(0)), zero_inputs(1, cfg.test_steps));
        if (run.diverged()) ++divergences;
        predicted.push_back(reconstruct_states(rom, run));
      }
      evaluate_states(name, r, predicted, divergences);
    }
  }

  // Learned models in nonlinear feature coordinates.
  {
    const KernelSpec kernel = kernel_from_config(cfg);
    const Index rk = std::min<Index>(cfg.feature_rank, feasible);
    const Index R = std::min<Index>(cfg.linear_rank, feasible);
    manifest.extra["linear_rank_used"] = std::to_string(R);
    manifest.extra["feature_rank_used"] = std::to_string(rk);

    const KernelFeatureMap fm = kernel_balance(kernel, raw_states, gradients, rk);
    const KpcaMap kpca = kpca_fit(kernel, raw_states, rk);

    const BalancedProjection lin_cobras = cobras_balance(X, Y, R);
    const PodBasis lin_pod = pod_basis(X, R);
    LinearLift cobras_lift{lin_cobras.psi.transpose(), lin_cobras.phi};
    LinearLift pod_lift{lin_pod.modes.transpose(), lin_pod.modes};

    CvConfig cv;
    cv.alpha_grid = cfg.krr_alpha_grid;
    cv.gamma_grid = cfg.krr_gamma_grid;
    cv.folds = cfg.cv_folds;
    cv.seed = cfg.cv_seed;

    struct NamedLearned {
      std::string name;
      LearnedRom rom;
    };
    std::vector<NamedLearned> learned;
    learned.push_back({"kcobras_krr", learn_feature_rom(fm, train, cobras_lift, cv, cv)});
    learned.push_back({"kpca_krr", learn_feature_rom(kpca, train, pod_lift, cv, cv)});

    write_kernel_feature_map(dir / "kcobras_features", fm);
    write_kpca_map(dir / "kpca_features", kpca);

    const std::string kpath = "sigma_" + file_tag("kcobras", rk, cfg.train_seed) + ".csv";
    write_spectrum(dir / kpath, fm.sigma);
    manifest.spectra["kcobras_r" + std::to_string(rk)] = kpath;

    for (const auto& [name, rom] : learned) {
      std::vector<Mat> predicted;
      int divergences = 0;
      for (const auto& traj : test) {
        const LearnedRomRun run =
            rollout_learned(rom, Vec(traj.states.col(0)), cfg.test_steps);
        if (run.diverged()) ++divergences;
        predicted.push_back(run.states);
      }
      evaluate_states(name, rk, predicted, divergences);
      manifest.extra[name + "_dynamics_alpha"] = format_double(rom.dynamics_alpha);
      manifest.extra[name + "_dynamics_gamma"] = format_double(rom.dynamics_gamma);
      manifest.extra[name + "_reconstruction_alpha"] =
          format_double(rom.reconstruction_alpha);
      manifest.extra[name + "_reconstruction_gamma"] =
          format_double(rom.reconstruction_gamma);
    }
  }

  std::sort(manifest.methods.begin(), manifest.methods.end(),
            [](const MethodSummary& a, const MethodSummary& b) {
              return std::tie(a.method, a.rank) < std::tie(b.method, b.rank);
            });
  emit_results(manifest, dir, EmitFormat::csv);
  return manifest;
}

}  // namespace cobras

// Command-line driver: simulation, sampling, reduction, and the packaged
// experiments, all file-based. Exit codes: 0 success, 2 config error,
// 3 numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cobras/balance.hpp"
#include "cobras/experiment.hpp"
#include "cobras/galerkin.hpp"
#include "cobras/io.hpp"
#include "cobras/kernel_features.hpp"
#include "cobras/metrics.hpp"
#include "cobras/models.hpp"
#include "cobras/regression.hpp"
#include "cobras/snapshots.hpp"

namespace fs = std::filesystem;
using namespace cobras;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct SystemChoice {
  OdeSystem ode;
  DiscreteSystem discrete;
};

SystemChoice make_system(const ExperimentConfig& cfg) {
  SystemChoice sc;
  if (cfg.system == "toy") {
    sc.ode = toy_model(cfg.dt, cfg.substeps);
  } else if (cfg.system == "surrogate") {
    sc.ode = cascade_surrogate(cfg.surrogate_dim, cfg.dt, cfg.substeps, cfg.surrogate_seed);
  } else if (cfg.system == "lti") {
    sc.ode = random_stable_linear_ode(cfg.lti_dim, cfg.lti_inputs, cfg.lti_outputs, cfg.dt,
                                      cfg.substeps, cfg.lti_seed);
  } else {
    throw ConfigError("unknown system '" + cfg.system + "'");
  }
  sc.discrete = discretize(sc.ode);
  return sc;
}

Vec initial_state(const ExperimentConfig& cfg, const SystemChoice& sc,
                  const std::optional<double>& impulse, const std::string& x0_list) {
  if (impulse.has_value()) {
    if (cfg.system == "toy") return toy_impulse_state(*impulse);
    return cascade_impulse_state(sc.ode, *impulse);
  }
  if (x0_list.empty()) return Vec::Zero(sc.ode.state_dim);
  std::stringstream ss(x0_list);
  std::string item;
  std::vector<double> values;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  if (static_cast<Index>(values.size()) != sc.ode.state_dim)
    throw ConfigError("--x0 has " + std::to_string(values.size()) + " entries, state dim is " +
                      std::to_string(sc.ode.state_dim));
  return Eigen::Map<const Vec>(values.data(), static_cast<Index>(values.size()));
}

Mat make_inputs(const ExperimentConfig& cfg, const SystemChoice& sc, const std::string& signal,
                Index steps) {
  Mat inputs = Mat::Zero(sc.ode.input_dim, steps);
  if (signal == "zero") return inputs;
  if (signal == "sin") {
    for (Index k = 0; k < steps; ++k)
      inputs.row(0)[k] = std::sin(static_cast<double>(k) * cfg.dt);
    return inputs;
  }
  throw ConfigError("unknown input signal '" + signal + "' (zero | sin)");
}

// Shared config handling: --config file first, then explicit --set overrides.
void apply_config(ExperimentConfig& cfg, const std::string& config_path,
                  const std::vector<std::string>& overrides) {
  if (!config_path.empty()) cfg = ExperimentConfig::from_file(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

std::vector<Trajectory> load_trajectories(const std::vector<std::string>& paths) {
  if (paths.empty()) throw ConfigError("no trajectory files given");
  std::vector<Trajectory> trajs;
  for (const auto& p : paths) trajs.push_back(read_trajectory_csv(p).trajectory);
  return trajs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covariance-balancing model reduction toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "experiment config file (key = value lines)");
  app.add_option("--set", overrides, "override a config key (key=value), repeatable");

  // simulate
  auto* cmd_simulate = app.add_subcommand("simulate", "roll a system forward and write a CSV");
  std::optional<double> sim_impulse;
  std::string sim_x0, sim_signal = "zero", sim_out = "trajectory.csv";
  Index sim_steps = 40;
  cmd_simulate->add_option("--impulse", sim_impulse, "impulse magnitude (sets x0)");
  cmd_simulate->add_option("--x0", sim_x0, "comma-separated initial state");
  cmd_simulate->add_option("--input", sim_signal, "input signal: zero | sin");
  cmd_simulate->add_option("--steps", sim_steps, "number of steps");
  cmd_simulate->add_option("--out", sim_out, "output trajectory CSV");

  // sample
  auto* cmd_sample = app.add_subcommand("sample", "build snapshot factors from trajectories");
  std::string sample_mode = "state";
  std::vector<std::string> sample_trajs;
  std::string sample_out = "snapshots";
  Index sample_first = -1;
  cmd_sample->add_option("--mode", sample_mode,
                         "state | gradient-long | gradient-stationary");
  cmd_sample->add_option("--traj", sample_trajs, "trajectory CSV files")->required();
  cmd_sample->add_option("--out", sample_out, "output base path (state) or directory (gradient)");
  cmd_sample->add_option("--first", sample_first,
                         "take only the first K states of each trajectory (state mode)");

  // cobras
  auto* cmd_cobras = app.add_subcommand("cobras", "balancing reduction from X and Y factors");
  std::string cob_x, cob_y, cob_out = "projection";
  Index cob_r = 2;
  cmd_cobras->add_option("--x", cob_x, "state snapshot base path (.csv/.json)")->required();
  cmd_cobras->add_option("--y", cob_y, "gradient snapshot base path")->required();
  cmd_cobras->add_option("--r", cob_r, "reduced dimension");
  cmd_cobras->add_option("--out", cob_out, "output directory");

  // kcobras
  auto* cmd_kcobras = app.add_subcommand("kcobras", "kernelized balancing feature map");
  std::string kc_states, kc_gradients, kc_out = "features";
  Index kc_r = 5;
  cmd_kcobras->add_option("--states", kc_states, "raw state sample CSV (n x s_x)")->required();
  cmd_kcobras->add_option("--gradients", kc_gradients, "gradient set directory")->required();
  cmd_kcobras->add_option("--r", kc_r, "feature dimension");
  cmd_kcobras->add_option("--out", kc_out, "output directory");

  // pod
  auto* cmd_pod = app.add_subcommand("pod", "proper orthogonal decomposition of X");
  std::string pod_x, pod_out = "pod";
  Index pod_r = 2;
  cmd_pod->add_option("--x", pod_x, "state snapshot base path")->required();
  cmd_pod->add_option("--r", pod_r, "basis size");
  cmd_pod->add_option("--out", pod_out, "output directory");

  // bpod
  auto* cmd_bpod = app.add_subcommand("bpod", "balanced POD of a linear(ized) system");
  std::string bpod_out = "bpod";
  Index bpod_r = 2, bpod_h = 40, bpod_p = 20;
  bool bpod_linearize_toy = false;
  cmd_bpod->add_option("--r", bpod_r, "reduced dimension");
  cmd_bpod->add_option("--horizon", bpod_h, "impulse-response horizon (steps)");
  cmd_bpod->add_option("--output-projection", bpod_p, "output projection rank");
  cmd_bpod->add_flag("--linearize-toy", bpod_linearize_toy,
                     "use the toy model's linearization about the origin");
  cmd_bpod->add_option("--out", bpod_out, "output directory");

  // rom
  auto* cmd_rom = app.add_subcommand("rom", "simulate a Petrov-Galerkin ROM");
  std::string rom_proj, rom_out = "rom_run.csv", rom_signal = "zero", rom_x0;
  std::optional<double> rom_impulse;
  Index rom_steps = 40;
  bool rom_orthogonal = false;
  cmd_rom->add_option("--projection", rom_proj, "projection directory")->required();
  cmd_rom->add_flag("--orthogonal", rom_orthogonal,
                    "treat the projection as an orthogonal basis (POD directory)");
  cmd_rom->add_option("--impulse", rom_impulse, "impulse magnitude (sets x0)");
  cmd_rom->add_option("--x0", rom_x0, "comma-separated initial state");
  cmd_rom->add_option("--input", rom_signal, "input signal: zero | sin");
  cmd_rom->add_option("--steps", rom_steps, "number of steps");
  cmd_rom->add_option("--out", rom_out, "output trajectory CSV (reduced states + outputs)");

  // learn
  auto* cmd_learn = app.add_subcommand("learn", "fit a regression ROM in feature coordinates");
  std::string learn_features, learn_kind = "kcobras", learn_linear, learn_out = "learned";
  std::vector<std::string> learn_trajs;
  cmd_learn->add_option("--features", learn_features, "feature map directory")->required();
  cmd_learn->add_option("--kind", learn_kind, "kcobras | kpca");
  cmd_learn->add_option("--linear", learn_linear,
                        "linear lift directory (projection or POD directory)")
      ->required();
  cmd_learn->add_option("--traj", learn_trajs, "training trajectory CSV files")->required();
  cmd_learn->add_option("--out", learn_out, "output directory");

  // evaluate
  auto* cmd_eval = app.add_subcommand("evaluate", "normalized error curves for predictions");
  std::vector<std::string> eval_pred, eval_truth;
  std::string eval_kind = "output", eval_out = "errors";
  cmd_eval->add_option("--pred", eval_pred, "prediction trajectory CSVs")->required();
  cmd_eval->add_option("--truth", eval_truth, "ground-truth trajectory CSVs")->required();
  cmd_eval->add_option("--kind", eval_kind, "output | state");
  cmd_eval->add_option("--out", eval_out, "output directory");

  // reproduce-toy
  auto* cmd_toy = app.add_subcommand("reproduce-toy", "run the packaged toy-model study");
  std::string toy_out;
  cmd_toy->add_option("--out", toy_out, "output directory (overrides config)");

  // surrogate
  auto* cmd_surr = app.add_subcommand("surrogate", "run the desk-scale comparison study");
  std::string surr_out;
  cmd_surr->add_option("--out", surr_out, "output directory (overrides config)");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg;
    apply_config(cfg, config_path, overrides);

    if (cmd_simulate->parsed()) {
      const SystemChoice sc = make_system(cfg);
      const Vec x0 = initial_state(cfg, sc, sim_impulse, sim_x0);
      const Mat inputs = make_inputs(cfg, sc, sim_signal, sim_steps);
      const Trajectory traj = simulate(sc.ode, x0, inputs);
      write_trajectory_csv(sim_out, traj, outputs_along(sc.discrete, traj));
      std::cout << "wrote " << sim_out << "\n";
    } else if (cmd_sample->parsed()) {
      const SystemChoice sc = make_system(cfg);
      const auto trajs = load_trajectories(sample_trajs);
      if (sample_mode == "state") {
        const auto selection =
            (sample_first > 0) ? select_time_range(trajs, 0, sample_first)
                               : select_all_states(trajs);
        SnapshotMatrix X = build_state_matrix(trajs, selection);
        X.sources = sample_trajs;
        write_snapshot_matrix(sample_out, X);
        std::cout << "wrote " << sample_out << ".csv (" << X.dim() << " x " << X.samples()
                  << ")\n";
      } else {
        GradientSampleSpec spec;
        spec.horizon = cfg.horizon;
        spec.sample_count = cfg.gradient_samples;
        spec.eta = eta_distribution_from_string(cfg.eta_distribution);
        spec.seed = cfg.train_seed;
        GradientSet set;
        if (sample_mode == "gradient-long") {
          set = sample_gradients_long(sc.discrete, trajs, spec);
        } else if (sample_mode == "gradient-stationary") {
          set = sample_gradients_stationary(sc.discrete, trajs, spec);
        } else {
          throw ConfigError("unknown sample mode '" + sample_mode + "'");
        }
        write_gradient_set(sample_out, set);
        SnapshotMatrix Y = set.to_snapshot_matrix();
        Y.sources = sample_trajs;
        write_snapshot_matrix(fs::path(sample_out) / "Y", Y);
        std::cout << "wrote " << sample_out << " (" << set.sample_count() << " columns)\n";
      }
    } else if (cmd_cobras->parsed()) {
      const SnapshotMatrix X = read_snapshot_matrix(cob_x);
      const SnapshotMatrix Y = read_snapshot_matrix(cob_y);
      const BalancedProjection proj = cobras_balance(X, Y, cob_r);
      write_projection(cob_out, proj, {cob_x, cob_y});
      std::cout << "wrote " << cob_out << " (rank " << proj.rank() << ")\n";
    } else if (cmd_kcobras->parsed()) {
      const Mat states = read_matrix_csv(kc_states);
      const GradientSet set = read_gradient_set(kc_gradients);
      const KernelSpec kernel = kernel_from_config(cfg);
      const KernelFeatureMap fm = kernel_balance(kernel, states, set, kc_r);
      write_kernel_feature_map(kc_out, fm);
      std::cout << "wrote " << kc_out << " (features " << fm.feature_dim() << ")\n";
    } else if (cmd_pod->parsed()) {
      const SnapshotMatrix X = read_snapshot_matrix(pod_x);
      const PodBasis basis = pod_basis(X, pod_r);
      write_pod_basis(pod_out, basis);
      std::cout << "wrote " << pod_out << "\n";
    } else if (cmd_bpod->parsed()) {
      ExperimentConfig bcfg = cfg;
      const DiscreteSystem dsys =
          bpod_linearize_toy ? discretize(toy_linearization(bcfg.dt, bcfg.substeps))
                             : make_system(bcfg).discrete;
      const BalancedProjection proj = bpod_projection(dsys, bpod_h, bpod_r, bpod_p);
      write_projection(bpod_out, proj);
      std::cout << "wrote " << bpod_out << " (rank " << proj.rank() << ")\n";
    } else if (cmd_rom->parsed()) {
      const SystemChoice sc = make_system(cfg);
      BalancedProjection proj;
      if (rom_orthogonal) {
        const PodBasis basis = read_pod_basis(rom_proj);
        proj.phi = basis.modes;
        proj.psi = basis.modes;
        proj.sigma = basis.singular_values;
      } else {
        proj = read_projection(rom_proj);
      }
      const GalerkinRom rom = build_galerkin_rom(proj, sc.ode);
      const Vec x0 = initial_state(cfg, sc, rom_impulse, rom_x0);
      const Mat inputs = make_inputs(cfg, sc, rom_signal, rom_steps);
      const RomRun run = simulate_rom(rom, x0, inputs);
      Trajectory out_traj;
      out_traj.states = run.reduced.states;
      out_traj.inputs = run.reduced.inputs;
      out_traj.dt = rom.dt;
      write_trajectory_csv(rom_out, out_traj, run.outputs);
      if (run.diverged())
        std::cout << "ROM diverged at step " << *run.divergence_step << "\n";
      std::cout << "wrote " << rom_out << "\n";
    } else if (cmd_learn->parsed()) {
      FeatureEncoder encoder = [&]() -> FeatureEncoder {
        if (learn_kind == "kcobras") return read_kernel_feature_map(learn_features);
        if (learn_kind == "kpca") return read_kpca_map(learn_features);
        throw ConfigError("unknown feature kind '" + learn_kind + "'");
      }();
      LinearLift lift;
      if (fs::exists(fs::path(learn_linear) / "modes.csv")) {
        const PodBasis basis = read_pod_basis(learn_linear);
        lift.encode = basis.modes.transpose();
        lift.lift = basis.modes;
      } else {
        const BalancedProjection proj = read_projection(learn_linear);
        lift.encode = proj.psi.transpose();
        lift.lift = proj.phi;
      }
      const auto trajs = load_trajectories(learn_trajs);
      CvConfig cv;
      cv.alpha_grid = cfg.krr_alpha_grid;
      cv.gamma_grid = cfg.krr_gamma_grid;
      cv.folds = cfg.cv_folds;
      cv.seed = cfg.cv_seed;
      const LearnedRom rom = learn_feature_rom(encoder, trajs, lift, cv, cv);
      fs::create_directories(learn_out);
      write_matrix_csv(fs::path(learn_out) / "dynamics_weights.csv", rom.dynamics.dual_weights);
      write_matrix_csv(fs::path(learn_out) / "reconstruction_weights.csv",
                       rom.reconstruction.dual_weights);
      write_matrix_csv(fs::path(learn_out) / "lift.csv", rom.linear.lift);
      std::ofstream hyper(fs::path(learn_out) / "hyperparameters.json");
      hyper << "{\n  \"dynamics_alpha\": " << format_double(rom.dynamics_alpha)
            << ",\n  \"dynamics_gamma\": " << format_double(rom.dynamics_gamma)
            << ",\n  \"reconstruction_alpha\": " << format_double(rom.reconstruction_alpha)
            << ",\n  \"reconstruction_gamma\": " << format_double(rom.reconstruction_gamma)
            << "\n}\n";
      std::cout << "wrote " << learn_out << "\n";
    } else if (cmd_eval->parsed()) {
      if (eval_pred.size() != eval_truth.size())
        throw ConfigError("--pred and --truth need the same number of files");
      const ErrorKind kind = (eval_kind == "state") ? ErrorKind::state : ErrorKind::output;
      std::vector<Mat> preds, truths;
      double dt = 1.0;
      for (std::size_t i = 0; i < eval_pred.size(); ++i) {
        const TrajectoryFile p = read_trajectory_csv(eval_pred[i]);
        const TrajectoryFile t = read_trajectory_csv(eval_truth[i]);
        dt = t.trajectory.dt;
        preds.push_back(kind == ErrorKind::state ? p.trajectory.states : p.outputs);
        truths.push_back(kind == ErrorKind::state ? t.trajectory.states : t.outputs);
      }
      const auto curves = normalized_error_curves(preds, truths, kind);
      fs::create_directories(eval_out);
      for (std::size_t i = 0; i < curves.size(); ++i) {
        char idx[8];
        std::snprintf(idx, sizeof(idx), "%03zu", i);
        write_error_curve(fs::path(eval_out) / ("errors_traj" + std::string(idx) + ".csv"), dt,
                          curves[i]);
      }
      std::cout << "mean normalized error: "
                << format_double(mean_normalized_error(preds, truths, kind)) << "\n";
    } else if (cmd_toy->parsed()) {
      if (config_path.empty()) cfg = ExperimentConfig::toy_defaults();
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (!toy_out.empty()) cfg.output_dir = toy_out;
      const ResultManifest manifest = run_toy_experiment(cfg);
      std::cout << "wrote " << cfg.output_dir << "/manifest.json (" << manifest.methods.size()
                << " method entries)\n";
    } else if (cmd_surr->parsed()) {
      if (config_path.empty()) cfg = ExperimentConfig::surrogate_defaults();
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (!surr_out.empty()) cfg.output_dir = surr_out;
      const ResultManifest manifest = run_surrogate_experiment(cfg);
      std::cout << "wrote " << cfg.output_dir << "/manifest.json (" << manifest.methods.size()
                << " method entries)\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BlowUpError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

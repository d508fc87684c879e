#include "cobras/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cobras {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return in;
}

std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
  return row;
}

json read_json_file(const fs::path& path) {
  auto in = open_in(path);
  json j;
  in >> j;
  return j;
}

void write_json_file(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace

void write_matrix_csv(const fs::path& path, const Mat& m) {
  auto out = open_out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Mat read_matrix_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_csv_row(line));
    if (rows.back().size() != rows.front().size())
      throw std::runtime_error("ragged CSV: " + path.string());
  }
  if (rows.empty()) return Mat(0, 0);
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj, const Mat& outputs) {
  const Index n = traj.states.rows();
  const Index q = traj.inputs.rows();
  const Index m = outputs.rows();
  const Index T = traj.steps();
  if (outputs.cols() != T + 1)
    throw std::invalid_argument("write_trajectory_csv: outputs/states length mismatch");

  auto out = open_out(path);
  out << 't';
  for (Index i = 0; i < n; ++i) out << ",x" << (i + 1);
  for (Index i = 0; i < q; ++i) out << ",u" << (i + 1);
  for (Index i = 0; i < m; ++i) out << ",y" << (i + 1);
  out << '\n';
  for (Index k = 0; k <= T; ++k) {
    out << format_double((traj.t0 + k) * traj.dt);
    for (Index i = 0; i < n; ++i) out << ',' << format_double(traj.states(i, k));
    for (Index i = 0; i < q; ++i)
      out << ',' << format_double(k < T ? traj.inputs(i, k) : 0.0);
    for (Index i = 0; i < m; ++i) out << ',' << format_double(outputs(i, k));
    out << '\n';
  }
}

TrajectoryFile read_trajectory_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("empty trajectory file");
  Index n = 0, q = 0, m = 0;
  {
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) {
      if (col.rfind('x', 0) == 0) ++n;
      else if (col.rfind('u', 0) == 0) ++q;
      else if (col.rfind('y', 0) == 0) ++m;
      else if (col != "t")
        throw std::runtime_error("unexpected trajectory column: " + col);
    }
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_csv_row(line));
    if (static_cast<Index>(rows.back().size()) != 1 + n + q + m)
      throw std::runtime_error("trajectory row width mismatch");
  }
  if (rows.empty()) throw std::runtime_error("trajectory file has no samples");
  const Index T = static_cast<Index>(rows.size()) - 1;

  TrajectoryFile tf;
  tf.trajectory.states.resize(n, T + 1);
  tf.trajectory.inputs.resize(q, T);
  tf.outputs.resize(m, T + 1);
  const double t_first = rows.front()[0];
  const double dt = (T > 0) ? rows[1][0] - t_first : 1.0;
  tf.trajectory.dt = dt;
  tf.trajectory.t0 = (dt != 0.0) ? static_cast<int>(std::lround(t_first / dt)) : 0;
  for (Index k = 0; k <= T; ++k) {
    const auto& row = rows[static_cast<std::size_t>(k)];
    for (Index i = 0; i < n; ++i) tf.trajectory.states(i, k) = row[static_cast<std::size_t>(1 + i)];
    if (k < T)
      for (Index i = 0; i < q; ++i)
        tf.trajectory.inputs(i, k) = row[static_cast<std::size_t>(1 + n + i)];
    for (Index i = 0; i < m; ++i)
      tf.outputs(i, k) = row[static_cast<std::size_t>(1 + n + q + i)];
  }
  return tf;
}

void write_snapshot_matrix(const fs::path& base, const SnapshotMatrix& snap) {
  fs::path csv = base;
  csv += ".csv";
  fs::path meta = base;
  meta += ".json";
  write_matrix_csv(csv, snap.data);
  json j;
  j["kind"] = snap.kind == SnapshotKind::state ? "state" : "gradient";
  j["n"] = snap.dim();
  j["s"] = snap.samples();
  j["seed"] = snap.seed;
  j["L"] = snap.horizon;
  j["eta_distribution"] = snap.eta_distribution;
  j["sources"] = snap.sources;
  write_json_file(meta, j);
}

SnapshotMatrix read_snapshot_matrix(const fs::path& base) {
  fs::path csv = base;
  csv += ".csv";
  fs::path meta = base;
  meta += ".json";
  SnapshotMatrix snap;
  snap.data = read_matrix_csv(csv);
  const json j = read_json_file(meta);
  snap.kind = (j.at("kind").get<std::string>() == "state") ? SnapshotKind::state
                                                           : SnapshotKind::gradient;
  snap.seed = j.at("seed").get<std::uint64_t>();
  snap.horizon = j.at("L").get<int>();
  snap.eta_distribution = j.at("eta_distribution").get<std::string>();
  snap.sources = j.at("sources").get<std::vector<std::string>>();
  if (snap.dim() != j.at("n").get<Index>() || snap.samples() != j.at("s").get<Index>())
    throw std::runtime_error("snapshot sidecar disagrees with CSV shape");
  return snap;
}

void write_gradient_set(const fs::path& dir, const GradientSet& set) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "base_states.csv", set.base_states);
  write_matrix_csv(dir / "gradients.csv", set.gradients);
  json j;
  j["L"] = set.horizon;
  j["seed"] = set.seed;
  j["eta_distribution"] = to_string(set.eta);
  write_json_file(dir / "meta.json", j);
}

GradientSet read_gradient_set(const fs::path& dir) {
  GradientSet set;
  set.base_states = read_matrix_csv(dir / "base_states.csv");
  set.gradients = read_matrix_csv(dir / "gradients.csv");
  const json j = read_json_file(dir / "meta.json");
  set.horizon = j.at("L").get<int>();
  set.seed = j.at("seed").get<std::uint64_t>();
  set.eta = eta_distribution_from_string(j.at("eta_distribution").get<std::string>());
  return set;
}

void write_projection(const fs::path& dir, const BalancedProjection& proj,
                      const std::vector<std::string>& source_ids) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "phi.csv", proj.phi);
  write_matrix_csv(dir / "psi.csv", proj.psi);
  write_matrix_csv(dir / "sigma.csv", Mat(proj.sigma));
  json j;
  j["r"] = proj.rank();
  j["rank_tolerance"] = 1e-12;
  j["sign_convention"] = "left-singular-max-positive";
  j["sources"] = source_ids;
  write_json_file(dir / "meta.json", j);
}

BalancedProjection read_projection(const fs::path& dir) {
  BalancedProjection proj;
  proj.phi = read_matrix_csv(dir / "phi.csv");
  proj.psi = read_matrix_csv(dir / "psi.csv");
  proj.sigma = Vec(read_matrix_csv(dir / "sigma.csv"));
  const json j = read_json_file(dir / "meta.json");
  if (proj.rank() != j.at("r").get<Index>())
    throw std::runtime_error("projection sidecar disagrees with CSV shape");
  return proj;
}

void write_pod_basis(const fs::path& dir, const PodBasis& basis) {
  fs::create_directories(dir);
  write_matrix_csv(dir / "modes.csv", basis.modes);
  write_matrix_csv(dir / "singular_values.csv", Mat(basis.singular_values));
}

PodBasis read_pod_basis(const fs::path& dir) {
  PodBasis basis;
  basis.modes = read_matrix_csv(dir / "modes.csv");
  basis.singular_values = Vec(read_matrix_csv(dir / "singular_values.csv"));
  return basis;
}

std::string kernel_to_json(const KernelSpec& k) {
  json j;
  j["family"] = to_string(k.family);
  j["alpha"] = k.alpha;
  j["degree"] = k.degree;
  j["width"] = k.width;
  return j.dump(2);
}

KernelSpec kernel_from_json(const std::string& text) {
  const json j = json::parse(text);
  const auto family = kernel_family_from_string(j.at("family").get<std::string>());
  switch (family) {
    case KernelFamily::linear: return KernelSpec::linear(j.at("alpha").get<double>());
    case KernelFamily::polynomial:
      return KernelSpec::polynomial(j.at("alpha").get<double>(), j.at("degree").get<double>());
    case KernelFamily::gaussian: return KernelSpec::gaussian(j.at("width").get<double>());
  }
  throw std::logic_error("kernel_from_json: unreachable");
}

void write_kernel_feature_map(const fs::path& dir, const KernelFeatureMap& fm) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "kernel.json");
    out << kernel_to_json(fm.kernel) << "\n";
  }
  write_matrix_csv(dir / "state_samples.csv", fm.state_samples);
  write_matrix_csv(dir / "gradient_bases.csv", fm.gradient_bases);
  write_matrix_csv(dir / "gradients.csv", fm.gradients);
  write_matrix_csv(dir / "left_vectors.csv", fm.left_vectors);
  write_matrix_csv(dir / "sigma.csv", Mat(fm.sigma));
  write_matrix_csv(dir / "right_vectors.csv", fm.right_vectors);
}

KernelFeatureMap read_kernel_feature_map(const fs::path& dir) {
  std::stringstream buffer;
  buffer << open_in(dir / "kernel.json").rdbuf();
  const KernelSpec kernel = kernel_from_json(buffer.str());
  const Mat states = read_matrix_csv(dir / "state_samples.csv");
  const Mat bases = read_matrix_csv(dir / "gradient_bases.csv");
  const Mat grads = read_matrix_csv(dir / "gradients.csv");
  GradientSet set;
  set.base_states = bases;
  set.gradients = grads;
  // Refit from the stored samples: the factors are cheap to rebuild and this
  // keeps the on-disk format free of derived quantities that could go stale.
  const Index r = read_matrix_csv(dir / "sigma.csv").rows();
  return kernel_balance(kernel, states, set, r);
}

void write_kpca_map(const fs::path& dir, const KpcaMap& map) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "kernel.json");
    out << kernel_to_json(map.kernel) << "\n";
  }
  write_matrix_csv(dir / "state_samples.csv", map.state_samples);
  write_matrix_csv(dir / "eigvecs.csv", map.eigvecs);
  write_matrix_csv(dir / "eigvals.csv", Mat(map.eigvals));
}

KpcaMap read_kpca_map(const fs::path& dir) {
  std::stringstream buffer;
  buffer << open_in(dir / "kernel.json").rdbuf();
  const KernelSpec kernel = kernel_from_json(buffer.str());
  const Mat states = read_matrix_csv(dir / "state_samples.csv");
  const Index r = read_matrix_csv(dir / "eigvals.csv").rows();
  return kpca_fit(kernel, states, r);
}

void write_error_curve(const fs::path& path, double dt, const Vec& curve) {
  auto out = open_out(path);
  out << "t,err\n";
  for (Index k = 0; k < curve.size(); ++k)
    out << format_double(k * dt) << ',' << format_double(curve[k]) << '\n';
}

}  // namespace cobras

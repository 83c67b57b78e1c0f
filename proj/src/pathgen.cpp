#include "vevp/pathgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace vevp {

namespace {

using nlohmann::json;

constexpr int kPrimes[9] = {2, 3, 5, 7, 11, 13, 17, 19, 23};

/// Row-major component order of the 9-dimensional sampling space.
constexpr int kCompRow[9] = {0, 0, 0, 1, 1, 1, 2, 2, 2};
constexpr int kCompCol[9] = {0, 1, 2, 0, 1, 2, 0, 1, 2};

double radical_inverse(std::uint64_t index, int base) {
  double r = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return r;
}

/// Uniform double in [0, 1) from the top 53 bits; avoids the distribution
/// objects whose output is not pinned down by the standard.
double canonical_u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * canonical_u01(rng);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool is_diag(int comp) { return kCompRow[comp] == kCompCol[comp]; }

Tensor2 components_to_tensor(const std::array<double, 9>& c) {
  Tensor2 f;
  for (int k = 0; k < 9; ++k) f(kCompRow[k], kCompCol[k]) = c[k];
  return f;
}

std::array<double, 9> identity_components() {
  return {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0};
}

}  // namespace

void PathConfig::validate() const {
  const auto ordered = [](const std::array<double, 2>& b) { return b[0] <= b[1]; };
  if (!ordered(diag_bounds) || !ordered(offdiag_bounds) || !ordered(df_range) ||
      !ordered(dt_range) || !ordered(rate_bounds)) {
    throw std::invalid_argument("PathConfig: bounds must be ordered min <= max");
  }
  if (points_to_visit < 1) throw std::invalid_argument("PathConfig: points_to_visit must be >= 1");
  if (steps_per_segment < 1) throw std::invalid_argument("PathConfig: steps_per_segment must be >= 1");
  if (max_retries < 1) throw std::invalid_argument("PathConfig: max_retries must be >= 1");
  if (!(df_range[0] > 0.0) || !(dt_range[0] > 0.0) || !(rate_bounds[0] > 0.0)) {
    throw std::invalid_argument("PathConfig: ranges must be positive");
  }
}

void GenerateConfig::validate() const {
  path.validate();
  if (count < 0) throw std::invalid_argument("GenerateConfig: count must be >= 0");
  if (p_choices.empty() || w_choices.empty() || v_choices.empty()) {
    throw std::invalid_argument("GenerateConfig: choice lists must be non-empty");
  }
  for (int p : p_choices) {
    if (p < 1) throw std::invalid_argument("GenerateConfig: P choices must be >= 1");
  }
  if (single_component_fraction < 0.0 || single_component_fraction > 1.0) {
    throw std::invalid_argument("GenerateConfig: single_component_fraction outside [0, 1]");
  }
}

std::vector<double> halton_point(std::uint64_t index, int dims) {
  if (dims < 1 || dims > 9) throw std::invalid_argument("halton_point: dims must be in [1, 9]");
  std::vector<double> out(dims);
  for (int k = 0; k < dims; ++k) out[k] = radical_inverse(index, kPrimes[k]);
  return out;
}

LoadingPath generate_path(const PathConfig& cfg, const Environment& env) {
  cfg.validate();
  env.validate();
  std::mt19937_64 rng(cfg.seed);

  // Waypoints: identity first, then the mapped Halton targets.
  std::vector<std::array<double, 9>> waypoints;
  waypoints.push_back(identity_components());
  if (cfg.single_component) {
    const int comp = static_cast<int>(rng() % 9);
    const auto h = halton_point(cfg.halton_start, 9);
    auto target = identity_components();
    const auto& b = is_diag(comp) ? cfg.diag_bounds : cfg.offdiag_bounds;
    target[comp] = b[0] + (b[1] - b[0]) * h[comp];
    waypoints.push_back(target);
  } else {
    for (int p = 0; p < cfg.points_to_visit; ++p) {
      const auto h = halton_point(cfg.halton_start + static_cast<std::uint64_t>(p), 9);
      std::array<double, 9> target{};
      for (int k = 0; k < 9; ++k) {
        const auto& b = is_diag(k) ? cfg.diag_bounds : cfg.offdiag_bounds;
        target[k] = b[0] + (b[1] - b[0]) * h[k];
      }
      waypoints.push_back(target);
    }
  }

  // Linear walk through the waypoints. The per-segment step count is the
  // configured budget, enlarged where needed to respect the component
  // increment cap.
  std::vector<Tensor2> fs;
  fs.push_back(Tensor2::Identity());
  for (std::size_t s = 1; s < waypoints.size(); ++s) {
    const auto& a = waypoints[s - 1];
    const auto& b = waypoints[s];
    double span = 0.0;
    for (int k = 0; k < 9; ++k) span = std::max(span, std::abs(b[k] - a[k]));
    int n = cfg.steps_per_segment;
    if (span / n > cfg.df_range[1]) n = static_cast<int>(std::ceil(span / cfg.df_range[1]));
    for (int i = 1; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      std::array<double, 9> c;
      for (int k = 0; k < 9; ++k) c[k] = a[k] + t * (b[k] - a[k]);
      fs.push_back(components_to_tensor(c));
    }
  }

  // Strain increment of every interior step; the timestep is redrawn until
  // all per-step rates fall inside the admissible window.
  std::vector<double> de(fs.size(), 0.0);
  for (std::size_t i = 1; i < fs.size(); ++i) {
    de[i] = (green_strain(fs[i]) - green_strain(fs[i - 1])).norm();
  }

  double dt = 0.0;
  bool ok = false;
  for (int attempt = 0; attempt < cfg.max_retries && !ok; ++attempt) {
    dt = uniform(rng, cfg.dt_range[0], cfg.dt_range[1]);
    ok = true;
    for (std::size_t i = 1; i < fs.size(); ++i) {
      const double rate = de[i] / dt;
      if (rate < cfg.rate_bounds[0] || rate > cfg.rate_bounds[1]) {
        ok = false;
        break;
      }
    }
  }
  if (!ok) {
    throw std::runtime_error("generate_path: rate bounds unsatisfiable after " +
                             std::to_string(cfg.max_retries) + " timestep draws");
  }

  LoadingPath path;
  path.env = env;
  path.records.reserve(fs.size());
  for (const auto& f : fs) path.records.push_back({f, dt});
  return path;
}

LoadingPath perturb_last_step(const LoadingPath& path, std::uint64_t rng_seed) {
  if (path.records.empty()) throw std::invalid_argument("perturb_last_step: empty path");
  std::mt19937_64 rng(rng_seed);
  const int comp = static_cast<int>(rng() % 9);
  LoadingPath out = path;
  LoadingPath::Record rec = out.records.back();
  rec.f(kCompRow[comp], kCompCol[comp]) += kPathPerturbAlpha;
  out.records.push_back(rec);
  return out;
}

TrainingSequence label_path(const LoadingPath& path, const MaterialParams& params) {
  const auto n = static_cast<Eigen::Index>(path.records.size());
  TrainingSequence seq;
  seq.inputs.resize(n, 9);
  seq.targets.resize(n, 6);

  MaterialState state;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = path.records[static_cast<std::size_t>(i)];
    StepResult r;
    try {
      r = integrate_step(state, rec.f, rec.dt, path.env, params);
    } catch (const std::exception& e) {
      throw std::runtime_error("label_path: integration failed at step " +
                               std::to_string(i) + ": " + e.what());
    }
    state = r.state;
    const Tensor2 b = rec.f * rec.f.transpose();
    seq.inputs.row(i).head<6>() = voigt_pack(b).transpose();
    seq.inputs(i, 6) = rec.dt;
    seq.inputs(i, 7) = path.env.w_w;
    seq.inputs(i, 8) = path.env.v_np;
    seq.targets.row(i) = voigt_pack(r.stress.sigma_tot).transpose();
  }
  return seq;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

std::vector<TrainingSequence> generate_dataset(const GenerateConfig& cfg,
                                               const MaterialParams& params) {
  cfg.validate();
  params.validate();
  std::vector<TrainingSequence> out(static_cast<std::size_t>(cfg.count));
  const int max_p = *std::max_element(cfg.p_choices.begin(), cfg.p_choices.end());
  const int single_every =
      cfg.single_component_fraction > 0.0
          ? std::max(1, static_cast<int>(std::llround(1.0 / cfg.single_component_fraction)))
          : 0;

  std::exception_ptr failure;
  std::atomic<bool> failed{false};
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < cfg.count; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      std::mt19937_64 rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i)));
      PathConfig pc = cfg.path;
      pc.seed = rng();
      pc.points_to_visit = cfg.p_choices[rng() % cfg.p_choices.size()];
      pc.single_component = single_every > 0 && (i % single_every == 0);
      pc.halton_start = 1 + static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(max_p);
      Environment env;
      env.w_w = cfg.w_choices[rng() % cfg.w_choices.size()];
      env.v_np = cfg.v_choices[rng() % cfg.v_choices.size()];

      LoadingPath path = generate_path(pc, env);
      path = perturb_last_step(path, rng());
      out[static_cast<std::size_t>(i)] = label_path(path, params);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("generate_dataset: ") + e.what());
    }
  }
  return out;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, Eigen::Index cols, const char* what) {
  if (!rows.is_array()) throw std::runtime_error(std::string(what) + " is not an array");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::runtime_error(std::string(what) + " row has wrong width");
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

}  // namespace

void write_dataset(const std::vector<TrainingSequence>& seqs, const std::string& path,
                   const std::string& manifest_json) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset: cannot open '" + path + "'");
  json manifest = json::parse(manifest_json);
  manifest["type"] = "vevp-dataset";
  manifest["count"] = seqs.size();
  out << manifest.dump() << "\n";
  for (const auto& seq : seqs) {
    json rec;
    rec["env"] = {{"w_w", seq.inputs.rows() > 0 ? seq.inputs(0, 7) : 0.0},
                  {"v_np", seq.inputs.rows() > 0 ? seq.inputs(0, 8) : 0.0}};
    json dts = json::array();
    for (Eigen::Index i = 0; i < seq.inputs.rows(); ++i) dts.push_back(seq.inputs(i, 6));
    rec["dt_list"] = std::move(dts);
    rec["inputs"] = matrix_to_json(seq.inputs);
    rec["targets"] = matrix_to_json(seq.targets);
    out << rec.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write_dataset: write failed for '" + path + "'");
}

std::vector<TrainingSequence> read_dataset(const std::string& path, std::string* manifest_json) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) {
    if (manifest_json) *manifest_json = "{}";
    return {};
  }
  json manifest;
  try {
    manifest = json::parse(line);
  } catch (const std::exception& e) {
    throw std::runtime_error("read_dataset: line 1: bad manifest: " + std::string(e.what()));
  }
  if (manifest_json) *manifest_json = manifest.dump();

  std::vector<TrainingSequence> seqs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      TrainingSequence seq;
      seq.inputs = matrix_from_json(rec.at("inputs"), 9, "inputs");
      seq.targets = matrix_from_json(rec.at("targets"), 6, "targets");
      if (seq.inputs.rows() != seq.targets.rows()) {
        throw std::runtime_error("inputs/targets length mismatch");
      }
      seqs.push_back(std::move(seq));
    } catch (const std::exception& e) {
      throw std::runtime_error("read_dataset: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return seqs;
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

}  // namespace vevp

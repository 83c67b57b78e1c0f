#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vevp/material.hpp"
#include "vevp/tensor3.hpp"

namespace vevp {

/// Perturbation added to one deformation-gradient component at the end of
/// every generated sequence, so the network learns single-component jumps of
/// exactly the size the tangent estimator applies.
inline constexpr double kPathPerturbAlpha = 1e-4;

struct PathConfig {
  std::array<double, 2> diag_bounds{0.9, 1.1};
  std::array<double, 2> offdiag_bounds{-0.05, 0.05};
  std::array<double, 2> df_range{1e-6, 1e-4};   ///< per-step component increment
  std::array<double, 2> dt_range{0.05, 5.0};    ///< s
  std::array<double, 2> rate_bounds{1e-5, 1e-3};///< 1/s
  int points_to_visit = 1;                      ///< P
  std::uint64_t seed = 0;
  int max_retries = 50;
  int steps_per_segment = 100;     ///< walk budget between visited points
  std::uint64_t halton_start = 1;  ///< first Halton index used for targets
  bool single_component = false;   ///< one-component uniform loading

  void validate() const;
};

struct LoadingPath {
  struct Record {
    Tensor2 f;
    double dt;
  };
  std::vector<Record> records;
  Environment env;
};

/// One supervised sequence: rows are timesteps. Inputs are the six
/// B = F F^T components in Voigt order, then dt, w_w, v_np; targets are the
/// six undamaged total-stress components in MPa.
struct TrainingSequence {
  Eigen::MatrixXd inputs;   ///< T x 9
  Eigen::MatrixXd targets;  ///< T x 6
};

/// k-th coordinate is the radical inverse of `index` in the k-th prime base.
std::vector<double> halton_point(std::uint64_t index, int dims);

/// Space-filling loading path: visits P Halton points of the deformation
/// gradient box by linear walks from the identity, with a per-sequence
/// timestep redrawn until every interior step's strain rate
/// |dE|_F / dt falls inside rate_bounds.
LoadingPath generate_path(const PathConfig& cfg, const Environment& env);

/// Appends one record equal to the last with a single randomly chosen
/// component increased by kPathPerturbAlpha.
LoadingPath perturb_last_step(const LoadingPath& path, std::uint64_t rng_seed);

/// Integrates the constitutive model along the path from a virgin state.
TrainingSequence label_path(const LoadingPath& path, const MaterialParams& params);

/// Configuration for a whole generation run. Five percent of the sequences
/// are single-component loadings, the rest multi-point random walks.
struct GenerateConfig {
  PathConfig path;                       ///< seed/P/halton_start are overwritten per sequence
  int count = 0;
  std::vector<int> p_choices{1, 3, 6};
  std::vector<double> w_choices{0.0, 0.012};
  std::vector<double> v_choices{0.0, 0.1};
  double single_component_fraction = 0.05;
  std::uint64_t master_seed = 0;

  void validate() const;
};

std::vector<TrainingSequence> generate_dataset(const GenerateConfig& cfg,
                                               const MaterialParams& params);

/// Line-delimited dataset: one JSON manifest line, then one JSON object per
/// sequence with fields {env, dt_list, inputs, targets}, doubles at full
/// precision. read_dataset(write_dataset(x)) == x.
void write_dataset(const std::vector<TrainingSequence>& seqs, const std::string& path,
                   const std::string& manifest_json = "{}");
std::vector<TrainingSequence> read_dataset(const std::string& path,
                                           std::string* manifest_json = nullptr);

/// FNV-1a hash of a text document, as fixed-width hex. Used to fingerprint
/// resolved configs and parameter sets in output files.
std::string fingerprint(const std::string& text);

/// Derived per-sequence seed so parallel generation is order-independent.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace vevp

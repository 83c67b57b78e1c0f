#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace vevp {

using Tensor2 = Eigen::Matrix3d;
using Voigt6 = Eigen::Matrix<double, 6, 1>;
using Tangent66 = Eigen::Matrix<double, 6, 6>;

/// Voigt component order used throughout: 11, 22, 33, 12, 13, 23.
inline constexpr int kVoigtRow[6] = {0, 1, 2, 0, 0, 1};
inline constexpr int kVoigtCol[6] = {0, 1, 2, 1, 2, 2};

inline double fro_norm(const Tensor2& t) { return t.norm(); }

/// Deviator and its Frobenius norm in one pass.
inline std::pair<Tensor2, double> dev_and_norm(const Tensor2& t) {
  Tensor2 d = t - (t.trace() / 3.0) * Tensor2::Identity();
  return {d, d.norm()};
}

inline Tensor2 deviator(const Tensor2& t) {
  return t - (t.trace() / 3.0) * Tensor2::Identity();
}

/// Rotation R of the right polar decomposition F = R U, via the
/// eigendecomposition of F^T F. Requires det F > 0; then det R = +1.
inline Tensor2 polar_rotation(const Tensor2& f) {
  const double j = f.determinant();
  if (!(j > 0.0)) {
    throw std::invalid_argument("polar_rotation: deformation gradient must have positive determinant");
  }
  const Tensor2 c = f.transpose() * f;
  Eigen::SelfAdjointEigenSolver<Tensor2> eig(c);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("polar_rotation: eigendecomposition failed");
  }
  const Eigen::Vector3d lam = eig.eigenvalues();
  if (!(lam.minCoeff() > 0.0)) {
    throw std::invalid_argument("polar_rotation: singular deformation gradient");
  }
  const Tensor2 u_inv = eig.eigenvectors() *
                        lam.cwiseSqrt().cwiseInverse().asDiagonal() *
                        eig.eigenvectors().transpose();
  return f * u_inv;
}

/// Green-Lagrange strain E = (F^T F - I) / 2, symmetrized exactly.
inline Tensor2 green_strain(const Tensor2& f) {
  const Tensor2 c = f.transpose() * f;
  Tensor2 e = 0.5 * (c - Tensor2::Identity());
  e = Tensor2(0.5 * (e + e.transpose()));
  return e;
}

/// Packs a symmetric tensor into Voigt order (no shear doubling).
/// Asymmetry beyond 1e-10 is a caller bug and is rejected.
inline Voigt6 voigt_pack(const Tensor2& t) {
  const double asym = (t - t.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw std::invalid_argument("voigt_pack: input asymmetry " + std::to_string(asym) +
                                " exceeds 1e-10");
  }
  Voigt6 v;
  for (int k = 0; k < 6; ++k) v[k] = t(kVoigtRow[k], kVoigtCol[k]);
  return v;
}

inline Tensor2 voigt_unpack(const Voigt6& v) {
  Tensor2 t;
  for (int k = 0; k < 6; ++k) {
    t(kVoigtRow[k], kVoigtCol[k]) = v[k];
    t(kVoigtCol[k], kVoigtRow[k]) = v[k];
  }
  return t;
}

}  // namespace vevp

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "vevp/tensor3.hpp"

namespace vevp {

/// Constitutive constants of the finite-strain viscoelastic-viscoplastic
/// damage model, plus environment constants and solver knobs. Stress in MPa,
/// time in s, energy in J.
struct MaterialParams {
  double mu_eq0 = 760.0;         ///< equilibrium shear modulus, MPa
  double mu_neq0 = 790.0;        ///< non-equilibrium shear modulus, MPa
  double k_v = 1154.0;           ///< volumetric bulk modulus, MPa
  double eps_dot_0 = 1.0447e12;  ///< viscous pre-exponential factor, 1/s
  double delta_H = 1.977e-19;    ///< activation energy, J
  double m = 0.657;              ///< Argon stress exponent
  double y_0 = 75.0;             ///< athermal yield baseline, MPa
  double x_0 = 0.2369;           ///< yield sigmoid midpoint (chain stretch)
  double b_s = 0.06786;          ///< yield sigmoid width
  double a_s = -48.23;           ///< yield sigmoid amplitude, MPa
  double a_vp = 0.179;           ///< viscoplastic flow prefactor
  double b_vp = 0.910;           ///< viscoplastic flow exponent
  double sigma_0 = 5.5;          ///< viscoplastic activation stress, MPa
  double A_dmg = 320.0;          ///< damage evolution rate
  double alpha_w = 0.039;        ///< moisture swelling coefficient
  double k_b = 1.380649e-23;     ///< Boltzmann constant, J/K
  double T = 296.0;              ///< absolute temperature, K
  double fp_tol = 1e-5;          ///< fixed-point tolerance on state increments
  int fp_max_iter = 200;         ///< fixed-point iteration cap
  double perturb_alpha = 1e-4;   ///< tangent perturbation parameter

  void validate() const;
};

/// Flat key-value (one "key value" pair per line) round trip. Unknown keys
/// are rejected; keys absent from the document keep their defaults.
MaterialParams params_from_text(const std::string& text);
std::string params_to_text(const MaterialParams& p);
MaterialParams load_params(const std::string& path);

/// Ambient conditions: moisture mass fraction and nanoparticle volume fraction.
struct Environment {
  double w_w = 0.0;
  double v_np = 0.0;

  void validate() const;
};

/// Internal variables of one material point. f_prev is the total deformation
/// gradient of the last converged step; it supplies the strain increment that
/// drives the viscoplastic rate sensitivity.
struct MaterialState {
  Tensor2 f_v = Tensor2::Identity();   ///< isochoric viscous deformation gradient
  Tensor2 f_vp = Tensor2::Identity();  ///< isochoric viscoplastic deformation gradient
  double lambda_max = 1.0;             ///< chain-stretch high-water mark
  double d = 0.0;                      ///< damage, in [0, 1)
  std::optional<double> eps_onset;     ///< effective strain at viscoplastic activation
  Tensor2 f_prev = Tensor2::Identity();
};

struct StressResult {
  Tensor2 sigma_eq;     ///< equilibrium Cauchy stress, MPa
  Tensor2 sigma_neq;    ///< non-equilibrium (overstress) Cauchy stress, MPa
  Tensor2 sigma_vol;    ///< volumetric Cauchy stress, MPa
  Tensor2 sigma_tot;    ///< undamaged total, eq + neq + vol
  Tensor2 sigma_tot_d;  ///< damaged total, (1 - d) * sigma_tot
};

/// Volumetric/isochoric split of a deformation gradient, with the moisture
/// swelling factored out of the mechanical volume change.
struct Decomposition {
  double j;       ///< det F
  double j_w;     ///< swelling volume ratio, 1 + alpha_w * w_w
  double j_m;     ///< mechanical volume ratio, J / J_w
  Tensor2 f_iso;  ///< J^(-1/3) F, unit determinant
};

/// Thrown when the backward-Euler fixed point fails to contract.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Guth-Gold stiffness amplification with moisture softening,
/// X = (1 + 5 v + 18 v^2)(1 + 0.057 w^2 - 9.5 w). Must stay positive.
double amplification_factor(const Environment& env);

Decomposition decompose_deformation(const Tensor2& f, const Environment& env,
                                    const MaterialParams& params);

/// Chain stretch from the isochoric left Cauchy-Green tensor, sqrt(tr B / 3).
double chain_stretch(const Tensor2& b_iso);

/// Sigmoid athermal yield stress driven by the chain-stretch high-water mark,
/// bounded between y_0 and y_0 + a_s.
double athermal_yield_stress(double lambda_max, const MaterialParams& params);

/// Argon thermally activated viscous flow rate.
double viscous_flow_rate(double tau_neq, double tau_0, const MaterialParams& params);

/// Phenomenological viscoplastic flow rate. Zero below the activation stress
/// and zero when the effective strain has not exceeded the onset strain.
double viscoplastic_flow_rate(double tau_tot, double eps_eff, double eps_onset,
                              double eps_rate, const MaterialParams& params);

/// Hyperelastic stress evaluation for a given kinematic split. Both
/// neo-Hookean branches are deviatoric, so an undeformed configuration is
/// exactly stress-free.
StressResult stress(const Tensor2& f_ve_iso, const Tensor2& f_e_iso, double j_m,
                    double j, double d, const Environment& env,
                    const MaterialParams& params);

/// Exact exponential damage integration. Damage only grows when the chain
/// stretch exceeds its high-water mark and never reaches 1.
std::pair<double, double> damage_update(double d, double lambda_max_old,
                                        double lambda_new, const MaterialParams& params);

struct StepResult {
  MaterialState state;
  StressResult stress;
  int iterations = 0;  ///< fixed-point iterations used
};

/// Backward-Euler update of the internal variables over one time increment,
/// via fixed-point iteration on (f_v, f_vp), followed by the stress and
/// damage evaluation at the converged split.
StepResult integrate_step(const MaterialState& state, const Tensor2& f_new,
                          double dt, const Environment& env,
                          const MaterialParams& params);

/// Consistent tangent by forward perturbation of the Kirchhoff stress
/// (Jaumann construction): column (ij) from re-integrating the same input
/// state at F + (alpha/2)(e_i e_j^T + e_j e_i^T) F, scaled by 1/J.
Tangent66 tangent(const MaterialState& state, const Tensor2& f, double dt,
                  const Environment& env, const MaterialParams& params);

}  // namespace vevp

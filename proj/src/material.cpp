#include "vevp/material.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace vevp {

namespace {

double clamped_exp(double x) { return std::exp(std::clamp(x, -500.0, 500.0)); }

}  // namespace

void MaterialParams::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("MaterialParams: ") + what);
  };
  require(mu_eq0 > 0.0, "mu_eq0 must be > 0");
  require(mu_neq0 > 0.0, "mu_neq0 must be > 0");
  require(k_v > 0.0, "k_v must be > 0");
  require(eps_dot_0 >= 0.0, "eps_dot_0 must be >= 0");
  require(sigma_0 > 0.0, "sigma_0 must be > 0");
  require(m > 0.0, "m must be > 0");
  require(fp_tol > 0.0, "fp_tol must be > 0");
  require(fp_max_iter > 0, "fp_max_iter must be > 0");
  require(A_dmg >= 0.0, "A_dmg must be >= 0");
  require(k_b > 0.0 && T > 0.0, "k_b and T must be > 0");
  require(perturb_alpha > 0.0, "perturb_alpha must be > 0");
}

void Environment::validate() const {
  if (!(v_np >= 0.0 && v_np <= 0.3)) {
    throw std::invalid_argument("Environment: v_np outside [0, 0.3]");
  }
  if (!(w_w >= 0.0 && w_w <= 0.05)) {
    throw std::invalid_argument("Environment: w_w outside [0, 0.05]");
  }
}

namespace {

struct FieldRef {
  const char* key;
  double MaterialParams::* field;
};

constexpr FieldRef kDoubleFields[] = {
    {"mu_eq0", &MaterialParams::mu_eq0},
    {"mu_neq0", &MaterialParams::mu_neq0},
    {"k_v", &MaterialParams::k_v},
    {"eps_dot_0", &MaterialParams::eps_dot_0},
    {"delta_H", &MaterialParams::delta_H},
    {"m", &MaterialParams::m},
    {"y_0", &MaterialParams::y_0},
    {"x_0", &MaterialParams::x_0},
    {"b_s", &MaterialParams::b_s},
    {"a_s", &MaterialParams::a_s},
    {"a_vp", &MaterialParams::a_vp},
    {"b_vp", &MaterialParams::b_vp},
    {"sigma_0", &MaterialParams::sigma_0},
    {"A_dmg", &MaterialParams::A_dmg},
    {"alpha_w", &MaterialParams::alpha_w},
    {"k_b", &MaterialParams::k_b},
    {"T", &MaterialParams::T},
    {"fp_tol", &MaterialParams::fp_tol},
    {"perturb_alpha", &MaterialParams::perturb_alpha},
};

}  // namespace

MaterialParams params_from_text(const std::string& text) {
  MaterialParams p;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    double value = 0.0;
    if (!(ls >> value)) {
      throw std::invalid_argument("params: missing value for key '" + key + "' at line " +
                                  std::to_string(lineno));
    }
    if (key == "fp_max_iter") {
      p.fp_max_iter = static_cast<int>(value);
      continue;
    }
    bool found = false;
    for (const auto& f : kDoubleFields) {
      if (key == f.key) {
        p.*(f.field) = value;
        found = true;
        break;
      }
    }
    if (!found) {
      throw std::invalid_argument("params: unknown key '" + key + "' at line " +
                                  std::to_string(lineno));
    }
  }
  p.validate();
  return p;
}

std::string params_to_text(const MaterialParams& p) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& f : kDoubleFields) out << f.key << " " << p.*(f.field) << "\n";
  out << "fp_max_iter " << p.fp_max_iter << "\n";
  return out.str();
}

MaterialParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("params: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return params_from_text(buf.str());
}

double amplification_factor(const Environment& env) {
  env.validate();
  const double v = env.v_np;
  const double w = env.w_w;
  const double filler = 1.0 + 5.0 * v + 18.0 * v * v;
  const double moisture = 1.0 + 0.057 * w * w - 9.5 * w;
  const double x = filler * moisture;
  if (!(x > 0.0)) {
    throw std::invalid_argument("amplification_factor: non-positive amplification, "
                                "moisture content outside model validity");
  }
  return x;
}

Decomposition decompose_deformation(const Tensor2& f, const Environment& env,
                                    const MaterialParams& params) {
  Decomposition out;
  out.j = f.determinant();
  if (!(out.j > 0.0)) {
    throw std::invalid_argument("decompose_deformation: det F must be > 0");
  }
  out.j_w = 1.0 + params.alpha_w * env.w_w;
  out.j_m = out.j / out.j_w;
  out.f_iso = std::pow(out.j, -1.0 / 3.0) * f;
  return out;
}

double chain_stretch(const Tensor2& b_iso) {
  const double tr = b_iso.trace();
  if (!(tr > 0.0)) {
    throw std::invalid_argument("chain_stretch: non-positive trace");
  }
  return std::sqrt(tr / 3.0);
}

double athermal_yield_stress(double lambda_max, const MaterialParams& params) {
  const double arg = -(lambda_max - params.x_0) / params.b_s;
  return params.y_0 + params.a_s / (1.0 + clamped_exp(arg));
}

double viscous_flow_rate(double tau_neq, double tau_0, const MaterialParams& params) {
  if (!(tau_0 > 0.0)) throw std::invalid_argument("viscous_flow_rate: tau_0 must be > 0");
  const double ratio = std::pow(tau_neq / tau_0, params.m);
  const double arg = params.delta_H / (params.k_b * params.T) * (ratio - 1.0);
  return params.eps_dot_0 * clamped_exp(arg);
}

double viscoplastic_flow_rate(double tau_tot, double eps_eff, double eps_onset,
                              double eps_rate, const MaterialParams& params) {
  if (tau_tot < params.sigma_0) return 0.0;
  const double base = eps_eff - eps_onset;
  if (base <= 0.0) return 0.0;
  return params.a_vp * std::pow(base, params.b_vp) * eps_rate;
}

StressResult stress(const Tensor2& f_ve_iso, const Tensor2& f_e_iso, double j_m,
                    double j, double d, const Environment& env,
                    const MaterialParams& params) {
  const double x = amplification_factor(env);
  StressResult r;
  const Tensor2 b_ve = f_ve_iso * f_ve_iso.transpose();
  const Tensor2 b_e = f_e_iso * f_e_iso.transpose();
  r.sigma_eq = (x * params.mu_eq0 / j) * deviator(b_ve);
  r.sigma_neq = (x * params.mu_neq0 / j) * deviator(b_e);
  r.sigma_vol = 0.5 * params.k_v * (j_m - 1.0 / j_m) * Tensor2::Identity();
  r.sigma_tot = r.sigma_eq + r.sigma_neq + r.sigma_vol;
  r.sigma_tot_d = (1.0 - d) * r.sigma_tot;
  return r;
}

std::pair<double, double> damage_update(double d, double lambda_max_old,
                                        double lambda_new, const MaterialParams& params) {
  if (lambda_new <= lambda_max_old) return {d, lambda_max_old};
  const double delta = lambda_new - lambda_max_old;
  const double d_new = 1.0 - (1.0 - d) * std::exp(-params.A_dmg * delta);
  return {d_new, lambda_new};
}

StepResult integrate_step(const MaterialState& state, const Tensor2& f_new,
                          double dt, const Environment& env,
                          const MaterialParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_step: dt must be > 0");

  const Decomposition kin = decompose_deformation(f_new, env, params);
  const double x = amplification_factor(env);
  const Tensor2 b_iso = kin.f_iso * kin.f_iso.transpose();
  const double lambda_new = chain_stretch(b_iso);
  const double lambda_hwm = std::max(state.lambda_max, lambda_new);
  const double tau_0 = athermal_yield_stress(lambda_hwm, params);

  const Tensor2 e_new = green_strain(f_new);
  const double eps_eff = e_new.norm();
  const double eps_rate = (e_new - green_strain(state.f_prev)).norm() / dt;

  Tensor2 f_v = state.f_v;
  Tensor2 f_vp = state.f_vp;
  std::optional<double> eps_onset = state.eps_onset;

  int iter = 0;
  double residual = 0.0;
  bool converged = false;
  while (iter < params.fp_max_iter) {
    ++iter;
    const Tensor2 f_ve = kin.f_iso * f_vp.inverse();
    const Tensor2 f_e = f_ve * f_v.inverse();

    // Viscous branch: Argon flow driven by the rotated overstress deviator.
    const Tensor2 b_e = f_e * f_e.transpose();
    const Tensor2 sigma_neq = (x * params.mu_neq0 / kin.j) * deviator(b_e);
    const Tensor2 r_e = polar_rotation(f_e);
    const Tensor2 s_neq_rel = r_e.transpose() * sigma_neq * r_e;
    const double tau_neq = s_neq_rel.norm();

    Tensor2 f_v_next = state.f_v;
    if (tau_neq > 0.0) {
      const double rate_v = viscous_flow_rate(tau_neq, tau_0, params);
      f_v_next += (dt * rate_v / tau_neq) * (s_neq_rel * f_v);
    }

    // Viscoplastic branch: activates once the total driving stress reaches
    // sigma_0; the onset strain is latched at first activation.
    const Tensor2 b_ve = f_ve * f_ve.transpose();
    const Tensor2 sigma_eq = (x * params.mu_eq0 / kin.j) * deviator(b_ve);
    const Tensor2 s_tot = sigma_eq + sigma_neq;
    const double tau_tot = s_tot.norm();

    Tensor2 f_vp_next = state.f_vp;
    if (tau_tot >= params.sigma_0) {
      if (!eps_onset) eps_onset = eps_eff;
      const double rate_vp =
          viscoplastic_flow_rate(tau_tot, eps_eff, *eps_onset, eps_rate, params);
      if (rate_vp > 0.0 && tau_tot > 0.0) {
        const Tensor2 r_ve = polar_rotation(f_ve);
        const Tensor2 s_tot_rel = r_ve.transpose() * s_tot * r_ve;
        f_vp_next += (dt * rate_vp / tau_tot) * (s_tot_rel * f_vp);
      }
    }

    const double err_v = (f_v_next - f_v).norm();
    const double err_vp = (f_vp_next - f_vp).norm();
    f_v = f_v_next;
    f_vp = f_vp_next;
    residual = err_v + err_vp;
    if (err_v < params.fp_tol && err_vp < params.fp_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergenceError("integrate_step: fixed point did not converge, residual " +
                                  std::to_string(residual) + " after " +
                                  std::to_string(iter) + " iterations",
                              residual, iter);
  }

  // The continuous flows are traceless; project the discrete updates back to
  // unit determinant so the isochoric constraint cannot drift over long runs.
  f_v *= std::pow(f_v.determinant(), -1.0 / 3.0);
  f_vp *= std::pow(f_vp.determinant(), -1.0 / 3.0);

  StepResult out;
  out.iterations = iter;
  const auto [d_new, lambda_max_new] =
      damage_update(state.d, state.lambda_max, lambda_new, params);
  const Tensor2 f_ve = kin.f_iso * f_vp.inverse();
  const Tensor2 f_e = f_ve * f_v.inverse();
  out.stress = stress(f_ve, f_e, kin.j_m, kin.j, d_new, env, params);
  out.state.f_v = f_v;
  out.state.f_vp = f_vp;
  out.state.lambda_max = lambda_max_new;
  out.state.d = d_new;
  out.state.eps_onset = eps_onset;
  out.state.f_prev = f_new;
  return out;
}

Tangent66 tangent(const MaterialState& state, const Tensor2& f, double dt,
                  const Environment& env, const MaterialParams& params) {
  const double alpha = params.perturb_alpha;
  const StepResult base = integrate_step(state, f, dt, env, params);
  const double j = f.determinant();
  const Tensor2 tau_base = j * base.stress.sigma_tot_d;

  Tangent66 c;
  for (int k = 0; k < 6; ++k) {
    const int i = kVoigtRow[k];
    const int jj = kVoigtCol[k];
    Tensor2 delta = Tensor2::Zero();
    delta(i, jj) += 0.5 * alpha;
    delta(jj, i) += 0.5 * alpha;
    const Tensor2 f_hat = f + delta * f;
    const StepResult pert = integrate_step(state, f_hat, dt, env, params);
    const Tensor2 tau_hat = f_hat.determinant() * pert.stress.sigma_tot_d;
    c.col(k) = voigt_pack(((tau_hat - tau_base) / alpha).eval());
  }
  return c / j;
}

}  // namespace vevp

#pragma once

// Asymptotic covariances of the fluctuations M (estimate - truth).
//
// Both estimators are linear functionals of M (m_hat - m_) to first order, and
// the limiting covariance of that field at (z1, z2) is
//
//   kappa(z1, z2) = m_'(z1) m_'(z2) / (m_(z1) - m_(z2))^2 - 1 / (z1 - z2)^2,
//
// so every covariance below is a double contour integral of kappa against the
// appropriate weights, evaluated by nested periodic trapezoidal quadrature.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "covest/contour.hpp"
#include "covest/error.hpp"
#include "covest/limiting_spectrum.hpp"
#include "covest/moment_inversion.hpp"
#include "covest/population_model.hpp"

namespace covest {

/// m_ and m_' sampled on the nodes of a contour.
struct ContourSample {
  std::vector<cplx> z;
  std::vector<cplx> weight;
  std::vector<cplx> m;
  std::vector<cplx> dm;
};

inline ContourSample sample_contour(const PopulationModel& model, const Contour& contour) {
  const auto nodes = contour.discretize();
  const std::size_t n = nodes.size();
  ContourSample s;
  s.z.resize(n);
  s.weight.resize(n);
  s.m.resize(n);
  s.dm.resize(n);
  // ellipse nodes come in conjugate pairs j <-> n-1-j
  const bool mirror = contour.shape == Contour::Shape::ellipse && n % 2 == 0;
  for (std::size_t j = 0; j < n; ++j) {
    s.z[j] = nodes[j].z;
    s.weight[j] = nodes[j].weight;
    if (mirror && j >= n / 2) {
      s.m[j] = std::conj(s.m[n - 1 - j]);
      s.dm[j] = std::conj(s.dm[n - 1 - j]);
      continue;
    }
    const cplx m = solve_m_underline(model, model.aspect, nodes[j].z).m_underline;
    if (!(std::abs(m) > 1e-10)) throw Error(ErrorCode::contour, "m_ vanishes on the contour", std::abs(m));
    s.m[j] = m;
    s.dm[j] = m_underline_derivative(model, model.aspect, m);
  }
  return s;
}

namespace detail {

inline cplx kappa(cplx z1, cplx m1, cplx dm1, cplx z2, cplx m2, cplx dm2) {
  const cplx dmz = m1 - m2;
  const cplx dz = z1 - z2;
  return dm1 * dm2 / (dmz * dmz) - 1.0 / (dz * dz);
}

// K_ij = kappa(z1_i, z2_j) w1_i w2_j
inline Eigen::MatrixXcd weighted_kernel(const ContourSample& a, const ContourSample& b) {
  const auto na = static_cast<Eigen::Index>(a.z.size());
  const auto nb = static_cast<Eigen::Index>(b.z.size());
  Eigen::MatrixXcd k(na, nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (Eigen::Index j = 0; j < nb; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      k(i, j) = kappa(a.z[ui], a.m[ui], a.dm[ui], b.z[uj], b.m[uj], b.dm[uj]) * a.weight[ui] * b.weight[uj];
    }
  }
  return k;
}

// P_ik = m_(z_i)^{-k}, k = 1..K
inline Eigen::MatrixXcd inverse_powers(const ContourSample& s, std::size_t K) {
  Eigen::MatrixXcd p(static_cast<Eigen::Index>(s.z.size()), static_cast<Eigen::Index>(K));
  for (std::size_t i = 0; i < s.z.size(); ++i) {
    const cplx inv = 1.0 / s.m[i];
    cplx pw = inv;
    for (std::size_t k = 0; k < K; ++k) {
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pw;
      pw *= inv;
    }
  }
  return p;
}

}  // namespace detail

/// kappa(z1, z2) for the limiting companion transform of `model`.
inline cplx kernel_kappa(const PopulationModel& model, cplx z1, cplx z2) {
  if (std::abs(z1 - z2) <= 1e-8) throw Error(ErrorCode::pole_proximity, "kappa needs z1 != z2", std::abs(z1 - z2));
  const cplx m1 = solve_m_underline(model, model.aspect, z1).m_underline;
  const cplx m2 = solve_m_underline(model, model.aspect, z2).m_underline;
  return detail::kappa(z1, m1, m_underline_derivative(model, model.aspect, m1), z2, m2,
                       m_underline_derivative(model, model.aspect, m2));
}

struct ContourPair {
  Contour inner;
  Contour outer;
};

/// Concentric circles around [0, b] crossing the axis at -delta and b + delta,
/// delta = 0.25 b (inner) and 0.5 b (outer), where b is the right support edge.
inline ContourPair default_v_contours(const PopulationModel& model, std::size_t nodes = 256) {
  const auto clusters = support_clusters(model, model.aspect);
  if (clusters.empty()) throw Error(ErrorCode::contour, "limiting support not detected");
  const double b = clusters.back().hi;
  ContourPair p;
  p.inner = Contour::ellipse(-0.25 * b, 1.25 * b, 0.75 * b, nodes);
  p.outer = Contour::ellipse(-0.5 * b, 1.5 * b, b, nodes);
  return p;
}

struct ContourMeta {
  std::size_t nodes_inner = 0;
  std::size_t nodes_outer = 0;
  double asymmetry = 0.0;         // before symmetrization
  double imag_leakage = 0.0;      // largest |Im| relative to 1 + |Re|
  double refinement_delta = 0.0;  // max relative change against half the nodes; 0 if not computed
};

struct VMatrix {
  Eigen::MatrixXd V;
  ContourMeta meta;
};

namespace detail {

inline Eigen::MatrixXcd v_raw(const ContourSample& a, const ContourSample& b, std::size_t K, double c) {
  const Eigen::MatrixXcd k = weighted_kernel(a, b);
  const Eigen::MatrixXcd v = inverse_powers(a, K).transpose() * k * inverse_powers(b, K);
  Eigen::MatrixXcd out(v.rows(), v.cols());
  const cplx two_pi_i(0.0, 2.0 * std::numbers::pi);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;  // (-1)^{(i+1)+(j+1)}
      out(i, j) = sign * v(i, j) / (two_pi_i * two_pi_i * c * c);
    }
  return out;
}

inline void check_pair(const ContourPair& p, const PopulationModel& model) {
  p.inner.check();
  p.outer.check();
  if (!p.inner.nested_in(p.outer)) throw Error(ErrorCode::geometry, "inner contour is not nested in the outer one");
  const auto clusters = support_clusters(model, model.aspect);
  for (const Contour* c : {&p.inner, &p.outer})
    for (const auto& iv : clusters)
      if (!c->encloses(cplx(iv.lo, 0.0)) || !c->encloses(cplx(iv.hi, 0.0)))
        throw Error(ErrorCode::geometry, "contour does not enclose the limiting support");
}

inline Eigen::MatrixXd finish_real(const Eigen::MatrixXcd& raw, ContourMeta& meta, double leak_tol) {
  Eigen::MatrixXd re = raw.real();
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
      meta.imag_leakage = std::max(meta.imag_leakage, std::abs(raw(i, j).imag()) / (1.0 + std::abs(re(i, j))));
  if (meta.imag_leakage > leak_tol) throw Error(ErrorCode::convergence, "double integral leaks imaginary part", meta.imag_leakage);
  if (re.rows() == re.cols()) {
    meta.asymmetry = (re - re.transpose()).cwiseAbs().maxCoeff();
    re = 0.5 * (re + re.transpose()).eval();
  }
  return re;
}

inline double relative_change(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max(1e-12, std::abs(a(i, j))));
  return worst;
}

}  // namespace detail

/// V_kl, 1 <= k, l <= 2L-1: limiting covariance of M (gamma_hat_k - gamma_k).
inline VMatrix v_matrix(const PopulationModel& model, std::size_t L, const ContourPair& contours,
                        bool refine = false) {
  model.validate();
  if (L != model.L()) throw Error(ErrorCode::input, "L does not match the model");
  detail::check_pair(contours, model);
  const std::size_t K = 2 * L - 1;
  VMatrix out;
  out.meta.nodes_inner = contours.inner.nodes;
  out.meta.nodes_outer = contours.outer.nodes;
  const auto a = sample_contour(model, contours.inner);
  const auto b = sample_contour(model, contours.outer);
  out.V = detail::finish_real(detail::v_raw(a, b, K, model.aspect), out.meta, 1e-6);
  if (refine) {
    ContourPair half = contours;
    half.inner.nodes /= 2;
    half.outer.nodes /= 2;
    ContourMeta scratch;
    const Eigen::MatrixXd coarse = detail::finish_real(
        detail::v_raw(sample_contour(model, half.inner), sample_contour(model, half.outer), K, model.aspect),
        scratch, 1.0);
    out.meta.refinement_delta = detail::relative_change(out.V, coarse);
  }
  return out;
}

struct CltCovariance {
  Eigen::MatrixXd M_matrix;  // d(gamma_0..gamma_{2L-1}) / d(c_1..c_L, rho_1..rho_L)
  Eigen::MatrixXd V;
  Eigen::MatrixXd W;
  Eigen::MatrixXd Theta;     // ordered (c_1..c_L, rho_1..rho_L)
  ContourMeta contour_meta;

  double rho_variance(std::size_t k) const {
    const auto l = M_matrix.rows() / 2;
    return Theta(l + static_cast<Eigen::Index>(k), l + static_cast<Eigen::Index>(k));
  }
  double weight_variance(std::size_t k) const {
    return Theta(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  }
};

/// Theta = M^{-1} W M^{-T} for the unknown-multiplicity moment estimator.
inline CltCovariance theta_moment_estimator(const PopulationModel& model, const ContourPair& contours,
                                            bool refine = false) {
  const std::size_t L = model.L();
  const auto l = static_cast<Eigen::Index>(L);
  CltCovariance out;
  out.M_matrix = moment_jacobian(model.rho, model.weights);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(out.M_matrix);
  if (!lu.isInvertible()) throw Error(ErrorCode::internal, "moment Jacobian is singular");
  VMatrix v = v_matrix(model, L, contours, refine);
  out.V = v.V;
  out.contour_meta = v.meta;
  out.W = Eigen::MatrixXd::Zero(2 * l, 2 * l);
  out.W.bottomRightCorner(2 * l - 1, 2 * l - 1) = out.V;
  const Eigen::MatrixXd inv = lu.inverse();
  out.Theta = inv * out.W * inv.transpose();
  out.Theta = 0.5 * (out.Theta + out.Theta.transpose()).eval();
  return out;
}

inline CltCovariance theta_moment_estimator(const PopulationModel& model, std::size_t nodes = 256) {
  return theta_moment_estimator(model, default_v_contours(model, nodes));
}

/// Per-cluster contours: inner[k] and outer[k] are nested around cluster k only,
/// and inner[k], inner[l] are disjoint for k != l.
struct ClusterContours {
  std::vector<Interval> clusters;
  std::vector<Contour> inner;
  std::vector<Contour> outer;
};

/// Crossings are placed at fixed fractions of each gap between clusters: for the gap
/// (b_k, a_{k+1}) of width g, inner k crosses at b_k + 0.15 g, outer k at 0.35 g,
/// outer k+1 at 0.55 g and inner k+1 at 0.8 g. Left of the first cluster the gap is
/// taken as (-a_1, a_1); right of the last it is (b_L, 2 b_L - a_L).
inline ClusterContours cluster_contours(const PopulationModel& model, std::size_t nodes = 256) {
  model.validate();
  ClusterContours cc;
  cc.clusters = support_clusters(model, model.aspect);
  const std::size_t L = model.L();
  if (cc.clusters.size() != L)
    throw Error(ErrorCode::separability, "model is not separable at this aspect ratio",
                static_cast<double>(cc.clusters.size()));
  if (!(cc.clusters.front().lo > 0.0)) throw Error(ErrorCode::geometry, "first cluster touches the origin");

  auto gap = [&](std::size_t k) -> Interval {  // gap left of cluster k (k = L: right of the last)
    if (k == 0) return {-cc.clusters[0].lo, cc.clusters[0].lo};
    if (k == L) return {cc.clusters[L - 1].hi, 2.0 * cc.clusters[L - 1].hi - cc.clusters[L - 1].lo};
    return {cc.clusters[k - 1].hi, cc.clusters[k].lo};
  };
  auto at = [](const Interval& g, double f) { return g.lo + f * (g.hi - g.lo); };
  for (std::size_t k = 0; k < L; ++k) {
    const Interval left = gap(k), right = gap(k + 1);
    const double il = at(left, 0.8), ol = at(left, 0.55);
    const double ir = at(right, 0.15), orr = at(right, 0.35);
    cc.inner.push_back(Contour::ellipse(il, ir, 0.5 * 0.5 * (ir - il), nodes));
    cc.outer.push_back(Contour::ellipse(ol, orr, 0.5 * (orr - ol), nodes));
    if (!cc.inner.back().nested_in(cc.outer.back()))
      throw Error(ErrorCode::geometry, "cluster contours are not nested", static_cast<double>(k));
  }
  return cc;
}

struct MestreCovariance {
  Eigen::MatrixXd Theta;
  ClusterContours contours;
  ContourMeta contour_meta;
};

/// Theta_kl = -1/(4 pi^2 c^2 c_k c_l) oint_{C_k} oint_{C_l} kappa / (m_(z1) m_(z2)).
inline MestreCovariance theta_mestre(const PopulationModel& model, std::size_t nodes = 256, bool refine = false) {
  MestreCovariance out;
  out.contours = cluster_contours(model, nodes);
  const std::size_t L = model.L();
  const double c = model.aspect;

  auto compute = [&](const ClusterContours& cc, ContourMeta& meta, double leak_tol) {
    std::vector<ContourSample> in, outs;
    for (std::size_t k = 0; k < L; ++k) {
      in.push_back(sample_contour(model, cc.inner[k]));
      outs.push_back(sample_contour(model, cc.outer[k]));
    }
    const cplx two_pi_i(0.0, 2.0 * std::numbers::pi);
    Eigen::MatrixXcd raw(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
    for (std::size_t k = 0; k < L; ++k)
      for (std::size_t l = 0; l < L; ++l) {
        const ContourSample& a = in[k];
        const ContourSample& b = k == l ? outs[l] : in[l];
        const Eigen::MatrixXcd kern = detail::weighted_kernel(a, b);
        const Eigen::MatrixXcd pa = detail::inverse_powers(a, 1), pb = detail::inverse_powers(b, 1);
        const cplx v = (pa.transpose() * kern * pb)(0, 0);
        raw(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) =
            v / (two_pi_i * two_pi_i * c * c * model.weights[k] * model.weights[l]);
      }
    return detail::finish_real(raw, meta, leak_tol);
  };

  out.contour_meta.nodes_inner = nodes;
  out.contour_meta.nodes_outer = nodes;
  out.Theta = compute(out.contours, out.contour_meta, 1e-6);
  if (refine) {
    ClusterContours half = out.contours;
    for (auto& ct : half.inner) ct.nodes /= 2;
    for (auto& ct : half.outer) ct.nodes /= 2;
    ContourMeta scratch;
    out.contour_meta.refinement_delta = detail::relative_change(out.Theta, compute(half, scratch, 1.0));
  }
  return out;
}

}  // namespace covest

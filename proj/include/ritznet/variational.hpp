#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ritznet/batch_eval.hpp"
#include "ritznet/quadrature.hpp"

namespace ritznet {

// How the trial-to-test operator relates to the formulation:
//   WeakSPD   - symmetric positive definite bilinear form taken as the test
//               inner product; T is the identity.
//   Strong    - b(u,v) = (Au, v)_L2 with V = L2; T is the PDE operator A.
//   Ultraweak - b(u,v) = (u, A'v)_L2; A' T u = u.
enum class FormulationKind { WeakSPD, Strong, Ultraweak };

std::string to_string(FormulationKind k);

// Reference to one Taylor component of a field: value, d/dx_axis, or the pure
// second derivative along an axis.
struct CompRef {
  int kind = 0;  // 0: value, 1: first derivative, 2: second derivative
  int axis = 0;

  int index(int dim) const {
    if (kind == 0) return comp_val();
    if (kind == 1) return comp_d1(axis);
    return comp_d2(axis, dim);
  }
};

// coeff * u[trial] * v[test], summed over terms and integrated: the bilinear
// form's integrand as structure rather than code, so losses can derive their
// own adjoints mechanically.
struct BilinearTerm {
  CompRef trial, test;
  double coeff = 1.0;
};

// coeff * field[comp]^2 terms of a (semi)norm integrand.
struct QuadTerm {
  CompRef comp;
  double coeff = 1.0;
};

// coeff * field[comp] terms of a pointwise linear operator (A', T).
struct LinTerm {
  CompRef comp;
  double coeff = 1.0;
};

// Right-hand side: an integral density plus an optional point evaluation
// c * v(x0). Dirac loads bypass quadrature entirely.
struct PointLoad {
  double coeff = 0.0;
  Point x0;
};
struct Load {
  std::function<double(const Point&)> density;  // may be null
  std::optional<PointLoad> point;
};

struct VariationalProblem {
  FormulationKind kind = FormulationKind::WeakSPD;
  int dim = 1;
  std::vector<BilinearTerm> b_terms;
  Load load;
  std::vector<QuadTerm> v_norm;  // ||.||_V^2 integrand over test fields
  std::vector<QuadTerm> u_norm;  // ||.||_U^2 integrand for error reporting
  std::vector<LinTerm> adjoint_op;  // A', required for Ultraweak
  std::vector<LinTerm> T_op;        // closed-form T, when available

  std::function<DualValue(const Point&)> exact_u;   // may be null
  std::function<DualValue(const Point&)> exact_Tu;  // may be null
  std::optional<double> exact_u_norm;   // ||u*||_U
  std::optional<double> exact_Tu_norm;  // ||Tu*||_V
  std::optional<double> optimum_F;      // min of the generalized Ritz functional

  int trial_order = 1;
  int test_order = 1;

  bool has_T() const { return !T_op.empty(); }
  void validate() const;
};

// Loss value plus adjoint seeds for the participating fields. `du`/`dv` seed
// the quadrature-batch evaluations; `du_pt`/`dv_pt` seed the single-point
// evaluation at the point load's x0 (size 0 when there is no point load).
struct LossEval {
  double value = 0.0;
  BatchDual du, dv;
  BatchDual du_pt, dv_pt;
};

// Integral density of the load over a batch (zeros when the load has none).
Vec load_density(const VariationalProblem& p, const std::vector<Point>& points);

// sum_i w_i b(u, v)(x_i)
double bilinear_value(const VariationalProblem& p, const BatchDual& u, const BatchDual& v,
                      const Vec& w);

// A'v at a point, from the test field's Taylor components.
double apply_adjoint(const VariationalProblem& p, const DualValue& v_at_x);

// Norm-squared of a field against quadratic terms: sum_i w_i sum_q k_q f_q^2.
double norm_sq(const std::vector<QuadTerm>& terms, const BatchDual& field, const Vec& w, int dim);

// The normalized residual action J(u,v) = (Bu - l)(v / ||v||_V). Throws
// DegenerateTestError when the discrete test norm falls below 1e-12.
// `v_at_x0`: value of v at the point load (ignored without one).
LossEval loss_wan(const VariationalProblem& p, const BatchDual& u, const BatchDual& v,
                  const Vec& w, const Vec& f, double v_at_x0, bool want_grads);

// Generalized Ritz functional 0.5 ||Tu||_V^2 - l(Tu) with closed-form T.
// `u_at_x0`: trial components at the point load location (pass a zero-order
// dummy when absent).
LossEval loss_ritz_T(const VariationalProblem& p, const BatchDual& u, const Vec& w, const Vec& f,
                     const DualValue& u_at_x0, bool want_grads);

// Outer loss of the nested scheme: 0.5 ||v||_V^2 - l(v) with v the composed
// test field.
LossEval loss_ritz_tau(const VariationalProblem& p, const BatchDual& v, const Vec& w, const Vec& f,
                       double v_at_x0, bool want_grads);

// Inner loss 0.5 ||v||_V^2 - b(u, v); the minimizer over v realizes Tu and the
// minimum value is -0.5 ||Tu||_V^2.
LossEval loss_inner(const VariationalProblem& p, const BatchDual& u, const BatchDual& v,
                    const Vec& w, bool want_grads);

// Adjoint Ritz functional 0.5 ||A'v||^2_L2 - l(v) (ultraweak only).
LossEval loss_adjoint_ritz(const VariationalProblem& p, const BatchDual& v, const Vec& w,
                           const Vec& f, double v_at_x0, bool want_grads);

// Discrete check of F_T(u) - F_T(u*) = 0.5 ||u - u*||_V^2 on one shared batch
// (weak SPD case, T = identity). The load is evaluated through the exact
// solution on the same nodes, which makes the identity algebraic rather than
// quadrature-limited. Returns (lhs, rhs).
std::pair<double, double> ritz_gap_check(const VariationalProblem& p, const BatchDual& u,
                                         const BatchDual& u_exact, const Vec& w);

}  // namespace ritznet

#pragma once

#include "wj/jetalg.hpp"
#include "wj/schedule.hpp"

#include <optional>

namespace wj {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Jets (F^alpha)_{|alpha|<=p} on a finite sample; column i of `points` and
// `jets` belong to the same sample point.
struct WhitneyField {
  JetSignature sig;
  MatrixXd points;  // n x N
  MatrixXd jets;    // dim x N

  WhitneyField() = default;
  WhitneyField(JetSignature s, MatrixXd pts, MatrixXd j);

  int size() const { return static_cast<int>(points.cols()); }
  VectorXd point(int i) const { return points.col(i); }
  // index of the sample point equal to x (to tol), throws if absent
  int find(const VectorXd& x, double tol = 1e-12) const;
};

// Field induced by P: F^alpha = D^alpha P at every point.
WhitneyField induced_field(const Polyd& P, const MatrixXd& points);

Polyd taylor_poly(const WhitneyField& F, int a);
Polyd taylor_poly(const WhitneyField& F, const VectorXd& a);

// (R^p_a F)^alpha(b)
double remainder(const WhitneyField& F, int a, int b, const MultiIndex& alpha);
// (R^p_a F)^alpha(b) / |b - a|^{p - |alpha|}
double delta_quotient(const WhitneyField& F, int a, int b, const MultiIndex& alpha);

// xi(F, a) = xi(T^p_a F)
double apply(const JetDuald& xi, const WhitneyField& F, int a);

struct IdentityResidual {
  double lhs = 0, rhs = 0, residual = 0;
};
// Both sides of xi(F,a) + eta(F,b) = (xi+eta)(F,a) + sum delta_alpha |b-a|^{p-|alpha|} eta_alpha(b).
IdentityResidual pair_identity(const WhitneyField& F, const JetDuald& xi, const JetDuald& eta, int a, int b);
double pair_identity_residual(const WhitneyField& F, const JetDuald& xi, const JetDuald& eta, int a, int b);
// xi = 0 case: eta(F,b) = eta(F,a) + sum delta_alpha |b-a|^{p-|alpha|} eta_alpha(b)
double shift_identity_residual(const WhitneyField& F, const JetDuald& eta, int a, int b);

// p! times the leading coefficient of the interpolant through (xs, ys).
double divided_difference(const std::vector<double>& xs, const std::vector<double>& ys);

enum class Verdict { pass, fail, inconclusive };
const char* to_string(Verdict v);
int exit_code(Verdict v);

struct ModulusBin {
  double lo = 0, hi = 0;
  double max_value = 0;
  std::size_t count = 0;
  int wa = -1, wb = -1, walpha = -1;
  double drift = 0;  // 1-D check only: change of diagonal values vs the next coarser bin
};

struct ModulusWitness {
  int a = -1, b = -1;
  int alpha = -1;  // basis index; -1 for divided-difference clusters
  double value = 0;
  double distance = 0;
};

struct ModulusOptions {
  double eps_mod = 1e-3;
  double eps_fail = 1e-1;
  double noise_floor = 1e-5;  // bin maxima may grow by this much and still count as nonincreasing
};

struct ModulusReport {
  std::string kind;  // "whitney" or "divided_difference"
  int p = 0;
  Schedule schedule;
  ModulusOptions options;
  std::vector<ModulusBin> bins;  // coarse to fine
  Verdict verdict = Verdict::inconclusive;
  std::optional<ModulusWitness> witness;
  std::string note;
};

ModulusReport whitney_check(const WhitneyField& F, const Schedule& schedule, const ModulusOptions& opt = {});

ModulusReport whitney_1d_check(const std::vector<double>& xs, const std::vector<double>& fs, int p,
                               const Schedule& schedule, const ModulusOptions& opt = {});

// Piecewise polynomial on R: Hermite pieces on each gap, Taylor tails outside.
struct PiecewisePoly {
  std::vector<double> nodes;  // sorted
  std::vector<Polyd> pieces;  // pieces[i] on [nodes[i], nodes[i+1]], centered at nodes[i]
  Polyd left, right;          // constant-jet tails

  const Polyd& piece_at(double x) const;
  double operator()(double x) const;
  // derivatives of order 0..p at x
  VectorXd jet(double x, int p) const;
};

// Two-point Hermite interpolant of degree 2p+1 matching F^0..F^p at both ends.
Polyd hermite_piece(double x0, const VectorXd& j0, double x1, const VectorXd& j1);

PiecewisePoly extend_1d(const WhitneyField& F, const std::optional<Schedule>& schedule = std::nullopt,
                        const ModulusOptions& opt = {});

}  // namespace wj

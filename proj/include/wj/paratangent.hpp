#pragma once

#include "wj/bundle.hpp"
#include "wj/jetalg.hpp"
#include "wj/whitney.hpp"

#include <optional>

namespace wj {

// Numerical knobs of the discrete refinement. All reports echo them.
struct Tolerances {
  double eps_alg = 1e-9;
  double eps_rank = 1e-8;       // relative singular-value cut for spans
  double theta_tol = 1e-3;      // subspace membership / stabilization (rad)
  double theta_persist = 0.3;   // limit across scales: allowed wobble of a persistent direction (rad)
  double theta_near = 0.5;      // neighbor fiber directions closer than this to E_a enter difference quotients
  double tau_vis = 0.05;        // smallest visible candidate magnitude after projecting out E_a
  double tau_pool = 0.1;        // RMS share a direction needs among per-source candidates
  double tau_close = 0.6;       // energy share a direction needs among neighbors (closure-type pools)
  double vertical_eps = 1e-6;   // unit vertical vector is in a fiber iff its projection >= 1 - vertical_eps
  int neighbor_cap = 12;
  int min_neighbors = 0;        // scale usable with at least this many neighbors; 0: n + 2 for jets, 2 for secants
};

struct DeltaConfig {
  int p = 1;
  int k = 1;
  Schedule schedule = Schedule::geometric(0.2, 8);
  Tolerances tol;
};

// Jet-bundle fibers live in local coordinates at their own base point:
// coordinates of P_p^* (as in JetDual) followed by `extra` plain coordinates.
struct JetFrame : FiberFrame<double> {
  JetSignature sig;
  int extra = 0;
  JetFrame(JetSignature s, int e) : sig(std::move(s)), extra(e) {}
  std::string name() const override { return "jet_local"; }
  Eigen::MatrixXd transport(const Eigen::VectorXd& from, const Eigen::VectorXd& to) const override;
};

const JetFrame* jet_frame(const Bundled& E);

// max over alpha of |a_i - a_0|^{p-|alpha|} |eta_alpha(a_i)|, with eta read at a_i
double constraint_value(const JetDuald& eta, const Eigen::VectorXd& a0, const Eigen::VectorXd& ai);

struct RefineDiagnostics {
  int unresolved = 0;     // points with fewer than 3 usable scales (fiber left unchanged)
  int capped = 0;         // points whose neighbor list hit the cap
  int nonconverged = 0;   // points whose three finest pooled subspaces drift by >= theta_tol
};

Bundled delta_seed(const Eigen::MatrixXd& X, int p);
Bundled nabla_seed(const Eigen::MatrixXd& X, const Eigen::VectorXd& f, int p);

// Per-scale pooled subspaces at one point (coordinates at the point, E_a projected out):
// tuple candidates found at the point itself, and everything combined.
struct PoolProbe {
  int point = -1;
  std::vector<Eigen::MatrixXd> pair_pools;
  std::vector<Eigen::MatrixXd> pools;
};

// One application of the discrete rho on a jet bundle (extra coordinates unconstrained).
Bundled delta_refine(const Bundled& E, const DeltaConfig& cfg, RefineDiagnostics* diag = nullptr,
                     PoolProbe* probe = nullptr);
// Same with the schedule delta * 2^-i, i < count.
Bundled delta_refine(const Bundled& E, int p, double delta, int k, int count = 8);
GlaeserOp<double> delta_refine_op(const DeltaConfig& cfg, RefineDiagnostics* diag = nullptr);

struct TauResult {
  Bundled bundle;
  SaturationTrace trace;
  RefineDiagnostics diag;
  bool stabilized = false;
};

TauResult tau_p(const Eigen::MatrixXd& X, const DeltaConfig& cfg);

struct VerticalWitness {
  int point = -1;
  Eigen::VectorXd vector;  // unit fiber vector
  double base_norm = 0;    // norm of the non-vertical part
  double vertical = 0;     // last coordinate
  int iteration = 0;       // first iteration at which the point was vertical
};

struct CriterionVerdict {
  Verdict is_function = Verdict::inconclusive;  // pass: function, fail: vertical vector found
  std::optional<VerticalWitness> witness;
  std::vector<int> fiber_dims;
  int iterations = 0;
  bool stabilized = false;
  int vertical_points = 0;
  bool scale_robust = true;
  std::string coarse_verdict;
  RefineDiagnostics diag;
  std::string note;
};

struct NablaResult {
  Bundled bundle;
  SaturationTrace trace;
  CriterionVerdict verdict;
};

NablaResult nabla_p(const Eigen::VectorXd& f, const Eigen::MatrixXd& X, const DeltaConfig& cfg);

struct NablaValue {
  double value = 0;
  double residual = 0;  // sine of the angle between xi and the projected fiber
};

// Value of the linear map over the fiber at a on xi (coordinates at a).
NablaValue nabla_value(const Bundled& nabla, int a, const Eigen::VectorXd& xi, double theta_tol = 1e-3);

struct FieldExtraction {
  WhitneyField field;
  std::vector<char> complete;  // every D^alpha(a) in the fiber
  bool partial = false;
  double worst_residual = 0;
};

FieldExtraction field_from_nabla(const Bundled& nabla, double theta_tol = 1e-3);
// Restriction of a field to the points flagged complete.
WhitneyField restrict_field(const WhitneyField& F, const std::vector<char>& keep);

// Order-1 constructions on X in R^n (fixed coordinates).
Bundled secant_ptg(const Eigen::MatrixXd& X, const Schedule& schedule, const Tolerances& tol = {},
                   RefineDiagnostics* diag = nullptr);
GlaeserOp<double> lambda_op(const Schedule& schedule, const Tolerances& tol = {});

struct Tau1Result {
  Bundled bundle;
  SaturationTrace trace;
  RefineDiagnostics diag;
};

Tau1Result tau1(const Eigen::MatrixXd& X, const Schedule& schedule, const Tolerances& tol = {});

struct Tau1FunctionResult {
  Bundled bundle;  // over the graph of f
  CriterionVerdict verdict;
};

Tau1FunctionResult tau1_function_test(const Eigen::VectorXd& f, const Eigen::MatrixXd& X, const Schedule& schedule,
                                      const Tolerances& tol = {});

// Fiberwise intersection of a tau^q bundle with the embedded P_p^*, in P_p^* coordinates.
Bundled tau_slice(const Bundled& tq, int p, double theta_tol = 1e-3);

struct ZariskiResult {
  Bundled bundle;                  // fibers T^q_a(X)_p in local P_p^* coordinates
  Eigen::MatrixXd vanishing;       // columns: scaled coefficients (center `center`) of a basis of I^q
  Eigen::VectorXd center;
  Eigen::VectorXd singular_values;
  bool underdetermined = false;    // fewer samples than dim P_q
  bool ambiguous_rank = false;     // singular values inside the gray zone
};

ZariskiResult zariski_Tp(const Eigen::MatrixXd& X, int p, int q, const Tolerances& tol = {},
                         bool with_bundle = true);
Subspaced zariski_fiber(const ZariskiResult& Z, const Eigen::VectorXd& a, int p, double eps_rank = 1e-8);

struct ProbeTable {
  std::vector<int> q;
  std::vector<int> dims;
  bool monotone = true;  // nonincreasing in q for the polynomial surrogate
  int first_stable = -1;
};

ProbeTable stability_probe(const Eigen::MatrixXd& X, const Eigen::VectorXd& a, int p, int q_max,
                           const Tolerances& tol = {});

struct MorphismReport {
  bool pass = true;
  double max_angle = 0;
  int worst_point = -1;
  std::vector<double> angles;                  // per Y point
  std::vector<double> boundedness_per_scale;   // max c' per scale
  Schedule schedule;
};

// phi[i] is the p-jet of phi at Y point i (tauY.point(i)); image points matched to X within eps_match.
MorphismReport pushforward_bundle(const std::vector<MapJetd>& phi, const Bundled& tauY, const Bundled& tauX,
                                  double eps_match, double theta_tol = 1e-3,
                                  const Schedule& schedule = Schedule::geometric(0.2, 8));

struct CompositeResult {
  bool feasible = false;
  Polyd P;
  double residual = 0;
  std::vector<int> fiber;  // sample indices b with phi(b) = a
};

// Solve T^p_b g = phi*_b(P) jointly over b in phi^{-1}(a); g_jets[i] is T^p_b g at Y point i.
CompositeResult composite_flat_test(const std::vector<Polyd>& g_jets, const std::vector<MapJetd>& phi,
                                    const Eigen::VectorXd& a, int p, double eps_match, double eps_alg = 1e-9);

}  // namespace wj

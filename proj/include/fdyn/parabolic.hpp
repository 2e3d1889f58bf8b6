#pragma once
// Numerical construction of an attracting parabolic curve of a diffeomorphism
// in Ramis-Sibuya form: coordinate normalization, the orbit-sum operator T on
// a discretized sector, Picard iteration and the verification checks.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fdyn/sector.hpp"

namespace fdyn {

using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;

// Float evaluation of a polynomial map (a truncated jet tuple).
struct PolyMap {
  int n = 0;
  int maxdeg = 0;
  std::vector<std::vector<std::pair<Mono, Cplx>>> comps;

  static PolyMap from(const MapQ& F, const Cplx& alpha);  // x = alpha x~ applied
  // out[i] = component i at z.
  void eval(const Cplx* z, Cplx* out) const;
};

struct NormalizedRS {
  int n = 0, k = 0, p = 0, m = 0;
  int N = 0;  // truncation of the exact data
  GaussQ lambda;  // before the scaling x = alpha x~
  MapQ map;  // exact, coordinates (x, y_m)
  CurveParam graph;  // the curve as (s, gamma_bar(s)) before recentring
  JetTuple<GaussQ> gammabar_trunc;  // J_(m+p-1) gamma_bar, one univariate jet per y
  std::vector<GaussQ> P_coeffs;  // a_r of x -> x + a_r x^(r+1), r = 1..p
  TransformSequence seq;  // normalization steps, old coordinates first
  RSDiffeoData rs;
  std::vector<MatQ> Dcal;
  MatQ Ccal;

  // Scaled float data, x = alpha x~, after which lambda = -1.
  Cplx alpha{1, 0};
  bool alpha_exact = false;
  PolyMap fmap;
  PolyMap dmap;  // fmap minus the identity, for cancellation-free steps
  std::vector<std::vector<Cplx>> Dsc;  // p diagonals
  MatC Csc;
  double min_re_spec = 0;
  int m0 = 0;
  double delta_trust = 0;

  // exp(-Csc L) computed from a one-time eigendecomposition when it is well
  // conditioned, from the matrix exponential otherwise.
  bool c_diag = false;
  MatC cV, cVinv;
  VecC cEig;

  int n1() const { return n - 1; }
  int M() const { return k + p; }
  double scaled_tau(double tau) const { return tau - std::arg(alpha); }
  MatC expC(const Cplx& L) const;
  VecC R(const Cplx& x) const;  // diagonal of the exponent, sum D_i x^(i-p) / (p - i)
  // (f, F_bar)(x, y) of the scaled map.
  void step(const Cplx& x, const VecC& y, Cplx& x1, VecC& y1) const;
  // One step from z = (x, y): writes z1 = F(z), the exponent increments
  // ell = R(x) - R(x1) and Lstep = log(x / x1), and H(x, y).
  void step_H(const Cplx* z, Cplx* z1, Cplx* ell, Cplx& Lstep, Cplx* H) const;
};

// F in Ramis-Sibuya form along the graph (s, gamma_bar(s)). With check_m0
// false an m below m0 is accepted so the caller can read nr.m0 and retry.
NormalizedRS normalize_rs(const MapQ& F, const CurveParam& graph, int m, bool check_m0 = true);

// E(x_from) E(x_to)^-1 in scaled coordinates; the log of x_from / x_to is
// taken on the branch continuous around tau.
MatC E_factors(const NormalizedRS& nr, const Cplx& x_from, const Cplx& x_to, double tau);

// H(x, y) = y - E(x) E(f(x, y))^-1 F_bar(x, y).
VecC H_eval(const NormalizedRS& nr, const Cplx& x, const VecC& y);

// Node values of u on a sector; u / x^(m+p) is interpolated by a tensor
// Chebyshev polynomial in (log |x|, arg x).
struct SectorGrid {
  SectorSpec sector;
  int m = 0, p = 0, n1 = 1;
  int ns = 0, nth = 0;
  double s0 = 0, s1 = 0, t0 = 0, t1 = 0;
  std::vector<double> snodes, tnodes;
  std::vector<Cplx> v;  // node-major, n1 entries per node

  static SectorGrid make(const SectorSpec& sec, int m, int p, int n1, int ns, int nth, double inner_ratio,
                         double angular_fill = 0.95);
  int nodes() const { return ns * nth; }
  Cplx node(int idx) const;
  double radius_of_ring(int i) const { return std::exp(snodes[i]); }
  VecC u_node(int idx) const;
  void set_u(int idx, const VecC& u);
  VecC eval(const Cplx& x) const;
  void eval_into(const Cplx& x, Cplx* out) const;
  VecC deriv(const Cplx& x) const;
  double rmin() const { return std::exp(s0); }
  double rmax() const { return std::exp(s1); }

  int weight() const { return m + p; }
};

struct OrbitTrace {
  Cplx x0;
  std::vector<Cplx> xs;
  std::string stop;  // "radius floor" or "iteration cap"
};

struct OrbitCaps {
  int cap = 10000;
  double floor = 0;  // 0 selects 0.2 * inner node radius
};

OrbitTrace orbit(const NormalizedRS& nr, const SectorGrid& u, const Cplx& x0, OrbitCaps caps = {});

struct TOptions {
  double tail_tol = 1e-13;
  long cap = 4000000;
};

struct TStats {
  long steps = 0;
  long longest = 0;
  double tail_est = 0;  // largest relative tail estimate over the nodes
};

// Orbit sum at one point; u evaluated by interpolation off the nodes.
VecC orbit_sum(const NormalizedRS& nr, const SectorGrid& u, const Cplx& x0, const TOptions& opt,
               TStats* st = nullptr);

// Tu at every node (or at the listed ones; the rest are copied from u).
SectorGrid apply_T(const NormalizedRS& nr, const SectorGrid& u, const TOptions& opt = {}, TStats* st = nullptr,
                   const std::vector<int>* only = nullptr);

struct GridNorms {
  double n = 0;        // sup |u| / |x|^(m-1)
  double dnorm = 0;    // sup |u'| / |x|^(m-p-2)
  double sup = 0;      // sup |u|
};
GridNorms grid_norms(const SectorGrid& u);
double n_distance(const SectorGrid& a, const SectorGrid& b);
double sup_distance(const SectorGrid& a, const SectorGrid& b);

struct Residuals {
  double sup = 0;     // sup |u(f(x, u)) - F_bar(x, u)|
  double scaled = 0;  // the same divided by |x|^k
};
Residuals invariance_residual(const NormalizedRS& nr, const SectorGrid& u);

struct ConstructOptions {
  double tol = 1e-8;    // absolute sup-norm tolerance
  double ntol = 1e-11;  // stop once the n-norm change drops below this
  int max_iter = 40;
  int ns = 16, nth = 16;
  double inner_ratio = 0.25;
  double angular_fill = 0.95;  // node fan covers this fraction of eta
  int max_halvings = 8;
  TOptions T;
  const SectorGrid* seed = nullptr;  // u_0, resampled; zero when null
};

struct Attempt {
  double delta = 0;
  std::string outcome;
  int iterations = 0;
  double last_change = 0;
  double contraction = 0;
};

struct ParabolicCurveNumeric {
  SectorGrid grid;  // scaled coordinates
  int m = 0;
  double tau = 0, eta = 0, delta = 0;  // tau and delta before scaling
  double tau_scaled = 0;
  Residuals residual;
  double residual_sup = 0;
  GridNorms norms;
  bool in_ball = false;
  double contraction = 0;  // last observed ratio of successive changes
  int iterations = 0;
  std::vector<double> changes;  // n-norm change per iteration
  TStats tstats;
  std::vector<Attempt> attempts;
  TransformSequence chain;  // normalization steps
};

ParabolicCurveNumeric construct(const NormalizedRS& nr, double tau, double eta, double delta,
                                const ConstructOptions& opt = {});

double fixed_point_defect(const NormalizedRS& nr, const SectorGrid& u, const TOptions& opt = {});

struct AsymptoticEntry {
  int order = 0;
  double slope = 0;
  double c = 0;
  bool pass = false;
};
struct AsymptoticReport {
  std::vector<AsymptoticEntry> entries;
  bool pass = true;
  std::vector<int> failing;
};
// gammabar: univariate jets in the coordinates of nr.graph.
AsymptoticReport verify_asymptotic(const ParabolicCurveNumeric& pc, const NormalizedRS& nr,
                                   const JetTuple<GaussQ>& gammabar, int N);

struct StabilityReport {
  int seeds = 0;
  int converged = 0;
  int exited = 0;
  double max_deviation = 0;
  double threshold = 0;
  double worst_law = 0;  // max |M j x_j^M - 1| at the last step
  bool pass = false;
  std::vector<std::string> violations;
};
StabilityReport verify_stability(const ParabolicCurveNumeric& pc, const NormalizedRS& nr, int seeds = 100,
                                 unsigned long long rng_seed = 1, int steps = 4000);

struct OrbitLawReport {
  int j = 0;
  std::vector<double> deviation;  // |M j x_j^M - 1| per x0
  double worst = 0;
  std::vector<double> K;  // sum |x_j|^s / |x0|^(s-M) per x0
  double K_spread = 0;    // max K / min K
  int s = 0;
};
// x0 on the outer ring of nodes.
OrbitLawReport orbit_law(const ParabolicCurveNumeric& pc, const NormalizedRS& nr, int j = 10000);

struct ContractionReport {
  double factor = 0;
  int pairs = 0;
  double delta = 0;
};
// Largest observed n(Tu - Tv) / n(u - v) over random pairs in the unit ball,
// evaluated on the outer half of the radial nodes.
ContractionReport measure_contraction(const NormalizedRS& nr, double tau, double eta, double delta, int pairs,
                                      unsigned long long rng_seed, const ConstructOptions& opt = {});

// Maps a point through the steps of seq in reverse, i.e. from the final
// coordinates back to the ones seq started from.
std::vector<Cplx> pull_back(const TransformSequence& seq, int n, std::vector<Cplx> pt);
// Point (x~, u(x~)) of the curve in the coordinates nr started from.
std::vector<Cplx> curve_point(const ParabolicCurveNumeric& pc, const NormalizedRS& nr, const Cplx& xs);

}  // namespace fdyn

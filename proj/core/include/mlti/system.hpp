#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <variant>

#include "mlti/block.hpp"
#include "mlti/decomp.hpp"
#include "mlti/einstein.hpp"

namespace mlti {

/// Discrete-time MLTI system X_{t+1} = A*X_t + B*U_t, Y_t = C*X_t with
/// A square on the state shape, B mapping inputs to states and C mapping
/// states to outputs.
struct MltiSystem {
    EvenPairedTensor a;
    EvenPairedTensor b;
    EvenPairedTensor c;

    MltiSystem(EvenPairedTensor a_, EvenPairedTensor b_, EvenPairedTensor c_);

    Index order() const { return a.order(); }
    Shape state_shape() const { return a.pshape().row_shape(); }
    Shape input_shape() const { return b.pshape().col_shape(); }
    Shape output_shape() const { return c.pshape().row_shape(); }
};

/// Tucker-product MLTI form: per-mode component matrices An (Jn x Jn),
/// Bn (Jn x Kn), Cn (In x Jn).
struct TuckerSystem {
    std::vector<Eigen::MatrixXd> a;
    std::vector<Eigen::MatrixXd> b;
    std::vector<Eigen::MatrixXd> c;
};

/// Einstein form of a Tucker system: A, B, C become interleaved outer
/// products of the component matrices.
MltiSystem tucker_to_einstein(const TuckerSystem& s);

using FactoredTensor = std::variant<GenCpFactors, GenTtCores>;

PairedShape factored_pshape(const FactoredTensor& f);
Index factored_parameter_count(const FactoredTensor& f);
EvenPairedTensor factored_to_full(const FactoredTensor& f);
DenseTensor factored_apply(const FactoredTensor& f, const DenseTensor& x);

/// phi of a factored tensor assembled from Kronecker chains, without
/// reconstructing the full tensor.
Eigen::MatrixXd factored_unfold(const FactoredTensor& f);

/// MLTI system with A, B, C held in generalized CPD or TT format.
struct FactoredMltiSystem {
    FactoredTensor a;
    FactoredTensor b;
    FactoredTensor c;

    Shape state_shape() const { return factored_pshape(a).row_shape(); }
    MltiSystem reconstruct() const;
};

struct SimulationResult {
    std::vector<DenseTensor> states;  // X_0 .. X_k
    std::vector<DenseTensor> outputs; // Y_0 .. Y_k
};

/// Forward simulation for k steps; inputs.size() >= k (may be empty for the
/// unforced system).
SimulationResult simulate(const MltiSystem& s, const DenseTensor& x0,
                          const std::vector<DenseTensor>& inputs, Index k);

enum class FactoredSimulatePath { Auto, Expansion, Stepping };

/// Factored simulation. Auto uses the unforced product-of-slices expansion
/// while R1^k stays small and iterated stepping beyond that.
SimulationResult factored_simulate(const FactoredMltiSystem& f, const DenseTensor& x0,
                                   const std::vector<DenseTensor>& inputs, Index k,
                                   FactoredSimulatePath path = FactoredSimulatePath::Auto);

/// Unfolded transfer function phi(C) (z I - phi(A))^-1 phi(B); throws
/// SingularError when z is numerically a pole.
Eigen::MatrixXcd transfer_eval(const MltiSystem& s, std::complex<double> z);

/// Grid-plus-refinement estimate of ||Gf - Gr||_inf / ||Gf||_inf on the unit
/// circle. Pole hits on the grid are perturbed by a half step with a warning.
double hinf_relative_error(const MltiSystem& full, const MltiSystem& reduced,
                           Index grid_size = 512);
double hinf_relative_error(const MltiSystem& full, const FactoredMltiSystem& reduced,
                           Index grid_size = 512);

struct LtiTriple {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd c;
};

/// Unfold to classical LTI matrices (phi(A), phi(B), phi(C)); the factored
/// overload assembles Kronecker chains without reconstructing full tensors.
LtiTriple unfold_to_lti(const MltiSystem& s);
LtiTriple unfold_to_lti(const FactoredMltiSystem& f);

double hinf_relative_error_lti(const LtiTriple& full, const LtiTriple& reduced,
                               Index grid_size = 512);

// ---------------------------------------------------------------------------
// Stability

enum class Stability { AsymptoticallyStable, Stable, Unstable, Inconclusive };

const char* to_string(Stability s);

struct StabilityVerdict {
    Stability verdict = Stability::Inconclusive;
    std::string criterion;
    double witness = 0.0;
    std::string note;
};

/// Exact criterion through the U-eigenvalues of A. Boundary cases run an
/// algebraic/geometric multiplicity check on the unit-magnitude cluster.
StabilityVerdict stability_eigen(const EvenPairedTensor& a);
StabilityVerdict stability_eigen(const MltiSystem& s);

/// One-sided: asymptotically stable when the n-mode singular values of A
/// square-sum below one (that sum equals ||A||^2 for every mode).
StabilityVerdict stability_hosvd(const EvenPairedTensor& a);
StabilityVerdict stability_hosvd(const MltiSystem& s);

/// One-sided CPD-weight criterion: requires orthonormal columns in at least
/// one odd and one even factor matrix of the order-2N CPD of A; then
/// lambda_1 < 1 implies asymptotic stability.
StabilityVerdict stability_cpd(const CpFactors& cp);

/// sigma_max of phi(A) read off the orthonormalized middle core of the
/// grouped-transpose TTD.
double ttd_sigma_max(const EvenPairedTensor& a);
double ttd_sigma_max(const GenTtCores& a);

/// One-sided TT criterion: asymptotically stable when ttd_sigma_max < 1.
StabilityVerdict stability_ttd(const EvenPairedTensor& a);
StabilityVerdict stability_ttd(const GenTtCores& a);

/// One-sided factored bound sum_r prod_n sigma_max(A_r^(n)); needs A in
/// Kronecker-rank (CPD) format.
StabilityVerdict stability_factored(const FactoredMltiSystem& f);

/// Full trichotomy on the product of component spectral radii (R1 = 1).
StabilityVerdict stability_tucker(const TuckerSystem& s);
StabilityVerdict stability_tucker(const FactoredMltiSystem& f);

// ---------------------------------------------------------------------------
// Reachability / observability

enum class GramianKind { Reach, Obs };

/// Finite-horizon Gramians over [t0, t1); weakly symmetric by construction.
EvenPairedTensor reach_gramian(const MltiSystem& s, Index t0, Index t1);
EvenPairedTensor obs_gramian(const MltiSystem& s, Index t0, Index t1);

struct GramianPair {
    EvenPairedTensor wr;
    EvenPairedTensor wo;
};
GramianPair gramian_pair(const MltiSystem& s, Index t0, Index t1);

/// Infinite-horizon Gramian from the tensor Lyapunov (Stein) equation,
/// solved by Smith doubling on the unfolding with a dense Kronecker
/// fallback. Requires an asymptotically stable A.
EvenPairedTensor lyapunov_solve(const MltiSystem& s, GramianKind kind);

/// Relative residual of a candidate solution of the Stein equation.
double lyapunov_residual(const MltiSystem& s, GramianKind kind, const EvenPairedTensor& w);

/// Reachability tensor |B  A*B ... A^{PiJ-1}*B| assembled as a mode row
/// block with the fixed factorization Kn = Jn; paired shape Jn x (Jn Kn).
/// With early_exit the series stops once the unfolding rank saturates.
EvenPairedTensor reachability_tensor(const MltiSystem& s, bool early_exit = false);

/// Observability tensor: mode column block of {C, C*A, ...} with the same
/// factorization; paired shape (In Jn) x Jn.
EvenPairedTensor observability_tensor(const MltiSystem& s, bool early_exit = false);

enum class TriState { Yes, No, Inconclusive };
const char* to_string(TriState t);

enum class ReachMethod { RankU, Gramian, Ttd, CpdCert, MlrankNeg, HosvdNeg };
const char* to_string(ReachMethod m);
std::optional<ReachMethod> reach_method_from_string(const std::string& name);

struct ReachabilityVerdict {
    TriState verdict = TriState::Inconclusive;
    ReachMethod method = ReachMethod::RankU;
    Index rank = -1;       // unfolding or certificate rank when applicable
    double witness = 0.0;  // Gramian minimum eigenvalue for the Gramian route
    std::string note;
};

ReachabilityVerdict is_reachable(const MltiSystem& s, ReachMethod method);
ReachabilityVerdict is_observable(const MltiSystem& s, ReachMethod method);

// ---------------------------------------------------------------------------
// Model reduction

enum class FactorFormat { Cpd, Ttd };

struct CompressOptions {
    FactorFormat format = FactorFormat::Ttd;
    /// CPD: Kronecker ranks (R1, R2, R3); estimated by fit search if absent.
    std::optional<std::array<Index, 3>> ranks;
    /// TTD: relative accuracy; exact ranks if absent.
    std::optional<double> eps;
    CpOptions cp;
    Index hinf_grid = 512;
};

struct CompressResult {
    FactoredMltiSystem system;
    Index parameter_count = 0;
    double hinf_error = 0.0;
    std::array<Index, 3> cpd_ranks{0, 0, 0};            // CPD format
    std::array<std::vector<Index>, 3> tt_ranks;         // TTD format
};

CompressResult compress(const MltiSystem& s, const CompressOptions& opts);

/// Parameter counts: R1 sum Jn^2 + R2 sum Jn Kn + R3 sum In Jn for CPD and
/// the corewise sum R_{n-1} Jn In Rn for TTD.
Index parameter_count(const FactoredMltiSystem& f);
/// Full model: prod Jn^2 + prod Jn Kn + prod In Jn.
Index parameter_count(const MltiSystem& s);

struct BalancedTruncationResult {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd c;
    Eigen::VectorXd hankel;   // all Hankel singular values, descending
    Index kept = 0;
    Index parameter_count = 0;
    double hinf_error = 0.0;
};

/// Classical discrete-time balanced truncation on the unfolded system;
/// comparison baseline for the decomposition-based reduction.
BalancedTruncationResult balanced_truncation_baseline(const MltiSystem& s, Index keep,
                                                      Index hinf_grid = 512);

} // namespace mlti

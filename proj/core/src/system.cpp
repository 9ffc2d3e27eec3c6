#include "mlti/system.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

#include "mlti/tensor_ops.hpp"

namespace mlti {

namespace {

// Shared stability boundary band: one-sided criteria declare asymptotic
// stability only when their witness clears the same band the eigenvalue
// criterion uses, so a one-sided "stable" can never overrule it.
double boundary_tol(double norm_a) { return 1e-9 * (1.0 + norm_a); }

Index complex_rank(const Eigen::MatrixXcd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double cutoff =
        linalg::kRankTol * sv(0) * static_cast<double>(std::max(m.rows(), m.cols()));
    Index r = 0;
    while (r < sv.size() && sv(r) > cutoff) ++r;
    return r;
}

// Algebraic vs geometric multiplicity of every eigenvalue cluster on the
// unit circle; used only in the marginal band.
bool unit_cluster_multiplicities_match(const Eigen::MatrixXd& m,
                                       const Eigen::VectorXcd& eigenvalues, double band,
                                       double cluster_radius) {
    std::vector<std::complex<double>> reps;
    std::vector<Index> counts;
    for (Index k = 0; k < eigenvalues.size(); ++k) {
        const std::complex<double> lam = eigenvalues(k);
        if (std::abs(std::abs(lam) - 1.0) > band) continue;
        bool found = false;
        for (std::size_t c = 0; c < reps.size(); ++c) {
            if (std::abs(lam - reps[c]) <= cluster_radius) {
                ++counts[c];
                found = true;
                break;
            }
        }
        if (!found) {
            reps.push_back(lam);
            counts.push_back(1);
        }
    }
    for (std::size_t c = 0; c < reps.size(); ++c) {
        Eigen::MatrixXcd shifted = m.cast<std::complex<double>>();
        shifted.diagonal().array() -= reps[c];
        const Index geometric = m.rows() - complex_rank(shifted);
        if (geometric != counts[c]) return false;
    }
    return true;
}

StabilityVerdict spectrum_verdict(const Eigen::MatrixXd& m, double norm_a,
                                  const std::string& criterion) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw ConvergenceError(criterion + ": eigensolver did not converge", 0.0);
    const Eigen::VectorXcd lam = es.eigenvalues();
    const double rho = lam.cwiseAbs().maxCoeff();
    const double tol = boundary_tol(norm_a);

    StabilityVerdict v;
    v.criterion = criterion;
    v.witness = rho;
    if (rho > 1.0 + tol) {
        v.verdict = Stability::Unstable;
    } else if (rho < 1.0 - tol) {
        v.verdict = Stability::AsymptoticallyStable;
    } else if (unit_cluster_multiplicities_match(m, lam, tol, std::sqrt(tol))) {
        v.verdict = Stability::Stable;
        v.note = "marginal";
    } else {
        v.verdict = Stability::Inconclusive;
        v.note = "marginal; unit-cluster multiplicity check failed";
    }
    return v;
}

StabilityVerdict one_sided_verdict(double witness, double norm_a, const std::string& criterion,
                                   bool marginal_is_stable = false) {
    StabilityVerdict v;
    v.criterion = criterion;
    v.witness = witness;
    const double tol = boundary_tol(norm_a);
    if (witness < 1.0 - tol) {
        v.verdict = Stability::AsymptoticallyStable;
    } else if (marginal_is_stable && std::abs(witness - 1.0) <= tol) {
        v.verdict = Stability::Stable;
        v.note = "marginal";
    } else {
        v.verdict = Stability::Inconclusive;
        v.note = "one-sided criterion cannot conclude";
    }
    return v;
}

} // namespace

const char* to_string(Stability s) {
    switch (s) {
    case Stability::AsymptoticallyStable: return "asymptotically_stable";
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Inconclusive: return "inconclusive";
    }
    return "?";
}

const char* to_string(TriState t) {
    switch (t) {
    case TriState::Yes: return "yes";
    case TriState::No: return "no";
    case TriState::Inconclusive: return "inconclusive";
    }
    return "?";
}

const char* to_string(ReachMethod m) {
    switch (m) {
    case ReachMethod::RankU: return "rank_u";
    case ReachMethod::Gramian: return "gramian";
    case ReachMethod::Ttd: return "ttd";
    case ReachMethod::CpdCert: return "cpd_cert";
    case ReachMethod::MlrankNeg: return "mlrank_neg";
    case ReachMethod::HosvdNeg: return "hosvd_neg";
    }
    return "?";
}

std::optional<ReachMethod> reach_method_from_string(const std::string& name) {
    if (name == "rank_u") return ReachMethod::RankU;
    if (name == "gramian") return ReachMethod::Gramian;
    if (name == "ttd") return ReachMethod::Ttd;
    if (name == "cpd_cert") return ReachMethod::CpdCert;
    if (name == "mlrank_neg") return ReachMethod::MlrankNeg;
    if (name == "hosvd_neg") return ReachMethod::HosvdNeg;
    return std::nullopt;
}

MltiSystem::MltiSystem(EvenPairedTensor a_, EvenPairedTensor b_, EvenPairedTensor c_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)) {
    if (!a.is_square()) throw DomainError("MltiSystem: A must be square");
    if (a.order() != b.order() || a.order() != c.order())
        throw DomainError("MltiSystem: A, B, C orders differ");
    if (b.pshape().row_shape() != a.pshape().row_shape())
        throw DomainError("MltiSystem: B row shape must equal the state shape");
    if (c.pshape().col_shape() != a.pshape().row_shape())
        throw DomainError("MltiSystem: C column shape must equal the state shape");
}

MltiSystem tucker_to_einstein(const TuckerSystem& s) {
    if (s.a.empty() || s.a.size() != s.b.size() || s.a.size() != s.c.size())
        throw DomainError("tucker_to_einstein: component lists must have equal nonzero length");
    auto interleave = [](const std::vector<Eigen::MatrixXd>& mats) {
        DenseTensor acc = DenseTensor::scalar(1.0);
        for (const auto& m : mats) acc = outer(acc, linalg::from_matrix(m));
        return EvenPairedTensor::from_interleaved(std::move(acc));
    };
    return MltiSystem(interleave(s.a), interleave(s.b), interleave(s.c));
}

// ---------------------------------------------------------------------------
// Factored format plumbing

PairedShape factored_pshape(const FactoredTensor& f) {
    return std::visit([](const auto& v) { return v.pshape(); }, f);
}

Index factored_parameter_count(const FactoredTensor& f) {
    if (const auto* cp = std::get_if<GenCpFactors>(&f)) {
        Index total = 0;
        for (const auto& c : cp->components) total += c.size();
        return total;
    }
    const auto& tt = std::get<GenTtCores>(f);
    Index total = 0;
    for (const auto& c : tt.cores) total += c.size();
    return total;
}

EvenPairedTensor factored_to_full(const FactoredTensor& f) {
    if (const auto* cp = std::get_if<GenCpFactors>(&f)) return gen_cpd_to_full(*cp);
    return gen_ttd_to_full(std::get<GenTtCores>(f));
}

namespace {

DenseTensor gen_cpd_apply(const GenCpFactors& f, const DenseTensor& x) {
    if (x.shape() != f.pshape().col_shape())
        throw DomainError("factored_apply: operand shape mismatch");
    DenseTensor acc(f.pshape().row_shape());
    std::vector<Eigen::MatrixXd> slices(static_cast<std::size_t>(f.order()));
    for (Index r = 1; r <= f.kronecker_rank(); ++r) {
        for (Index n = 1; n <= f.order(); ++n)
            slices[static_cast<std::size_t>(n - 1)] = f.slice(n, r);
        acc += tucker_product(x, slices);
    }
    return acc;
}

DenseTensor gen_tt_apply(const GenTtCores& f, const DenseTensor& x) {
    const PairedShape ps = f.pshape();
    if (x.shape() != ps.col_shape()) throw DomainError("factored_apply: operand shape mismatch");
    const Index n = f.order();

    // Carry layout (J_1..J_{m-1}, R_{m-1}, I_m..I_N) in ivec order.
    Eigen::MatrixXd t(1, x.size());
    for (Index q = 0; q < x.size(); ++q) t(0, q) = x[q];
    Index left = 1;
    for (Index m = 1; m <= n; ++m) {
        const DenseTensor& core = f.cores[static_cast<std::size_t>(m - 1)];
        const Index r0 = core.shape().extent(1);
        const Index jn = core.shape().extent(2);
        const Index in = core.shape().extent(3);
        const Index r1 = core.shape().extent(4);
        // K[(r0,i), (j,r1)] so the contraction is one GEMM per trailing block.
        Eigen::MatrixXd k(r0 * in, jn * r1);
        for (Index rr1 = 0; rr1 < r1; ++rr1)
            for (Index i = 0; i < in; ++i)
                for (Index j = 0; j < jn; ++j)
                    for (Index rr0 = 0; rr0 < r0; ++rr0)
                        k(rr0 + r0 * i, j + jn * rr1) =
                            core[rr0 + r0 * (j + jn * (i + in * rr1))];
        const Index rest = t.cols() * t.rows() / (left * r0 * in);
        Eigen::Map<const Eigen::MatrixXd> tm(t.data(), left, r0 * in * rest);
        Eigen::MatrixXd next(left, jn * r1 * rest);
        for (Index b = 0; b < rest; ++b)
            next.middleCols(b * jn * r1, jn * r1) =
                tm.middleCols(b * r0 * in, r0 * in) * k;
        left *= jn;
        t = Eigen::Map<Eigen::MatrixXd>(next.data(), left, next.size() / left);
    }
    DenseTensor out(ps.row_shape());
    for (Index q = 0; q < out.size(); ++q) out[q] = t.data()[q];
    return out;
}

} // namespace

DenseTensor factored_apply(const FactoredTensor& f, const DenseTensor& x) {
    if (const auto* cp = std::get_if<GenCpFactors>(&f)) return gen_cpd_apply(*cp, x);
    return gen_tt_apply(std::get<GenTtCores>(f), x);
}

MltiSystem FactoredMltiSystem::reconstruct() const {
    return MltiSystem(factored_to_full(a), factored_to_full(b), factored_to_full(c));
}

// ---------------------------------------------------------------------------
// Simulation

SimulationResult simulate(const MltiSystem& s, const DenseTensor& x0,
                          const std::vector<DenseTensor>& inputs, Index k) {
    if (x0.shape() != s.state_shape()) throw DomainError("simulate: x0 shape mismatch");
    if (!inputs.empty() && static_cast<Index>(inputs.size()) < k)
        throw DomainError("simulate: need at least k inputs");
    SimulationResult out;
    out.states.reserve(static_cast<std::size_t>(k + 1));
    out.states.push_back(x0);
    for (Index t = 0; t < k; ++t) {
        DenseTensor next = einstein_apply(s.a, out.states.back());
        if (!inputs.empty())
            next += einstein_apply(s.b, inputs[static_cast<std::size_t>(t)]);
        out.states.push_back(std::move(next));
    }
    out.outputs.reserve(out.states.size());
    for (const auto& x : out.states) out.outputs.push_back(einstein_apply(s.c, x));
    return out;
}

SimulationResult factored_simulate(const FactoredMltiSystem& f, const DenseTensor& x0,
                                   const std::vector<DenseTensor>& inputs, Index k,
                                   FactoredSimulatePath path) {
    if (!inputs.empty() && static_cast<Index>(inputs.size()) < k)
        throw DomainError("factored_simulate: need at least k inputs");

    const auto* cp = std::get_if<GenCpFactors>(&f.a);
    bool use_expansion = false;
    if (path == FactoredSimulatePath::Expansion) {
        if (!cp || !inputs.empty())
            throw DomainError("factored_simulate: expansion path needs unforced CPD factors");
        use_expansion = true;
    } else if (path == FactoredSimulatePath::Auto && cp && inputs.empty()) {
        const double terms = std::pow(static_cast<double>(cp->kronecker_rank()),
                                      static_cast<double>(k));
        use_expansion = terms <= 1e6;
    }

    SimulationResult out;
    if (use_expansion) {
        // Product-of-slices expansion: X_t = sum over length-t multi-indices
        // r of X_0 x {A_{r_1}^(n) ... A_{r_t}^(n)}.
        const Index n = cp->order();
        const Index r1 = cp->kronecker_rank();
        out.states.push_back(x0);
        for (Index t = 1; t <= k; ++t) {
            DenseTensor xt(f.state_shape());
            std::vector<Index> multi(static_cast<std::size_t>(t), 1);
            while (true) {
                std::vector<Eigen::MatrixXd> prod(static_cast<std::size_t>(n));
                for (Index m = 1; m <= n; ++m) {
                    Eigen::MatrixXd acc = cp->slice(m, multi[0]);
                    for (Index step = 1; step < t; ++step)
                        acc = acc * cp->slice(m, multi[static_cast<std::size_t>(step)]);
                    prod[static_cast<std::size_t>(m - 1)] = std::move(acc);
                }
                xt += tucker_product(x0, prod);
                Index carry = 0;
                while (carry < t && ++multi[static_cast<std::size_t>(carry)] > r1) {
                    multi[static_cast<std::size_t>(carry)] = 1;
                    ++carry;
                }
                if (carry == t) break;
            }
            out.states.push_back(std::move(xt));
        }
    } else {
        out.states.push_back(x0);
        for (Index t = 0; t < k; ++t) {
            DenseTensor next = factored_apply(f.a, out.states.back());
            if (!inputs.empty())
                next += factored_apply(f.b, inputs[static_cast<std::size_t>(t)]);
            out.states.push_back(std::move(next));
        }
    }
    out.outputs.reserve(out.states.size());
    for (const auto& x : out.states) out.outputs.push_back(factored_apply(f.c, x));
    return out;
}

// ---------------------------------------------------------------------------
// Transfer function and H-infinity estimates

Eigen::MatrixXcd transfer_eval(const MltiSystem& s, std::complex<double> z) {
    const Eigen::MatrixXd a = phi(s.a);
    Eigen::MatrixXcd m = (-a).cast<std::complex<double>>();
    m.diagonal().array() += z;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    const double rc = lu.rcond();
    if (!(rc > 1e-14))
        throw SingularError("transfer_eval: z is numerically a pole of G", 1.0 / std::max(rc, 1e-300));
    return phi(s.c).cast<std::complex<double>>() *
           lu.solve(phi(s.b).cast<std::complex<double>>());
}

namespace {

double sigma_max_of(const Eigen::MatrixXcd& g) {
    if (g.rows() == 0 || g.cols() == 0) return 0.0;
    if (!g.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXcd gram;
    if (g.rows() <= g.cols())
        gram = g * g.adjoint();
    else
        gram = g.adjoint() * g;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

// Frequency response through a cached complex Schur form:
// G(z) = (C U) (z I - T)^{-1} (U^H B) with one triangular solve per z.
class FreqResponse {
public:
    explicit FreqResponse(const LtiTriple& sys)
        : n_(sys.a.rows()), p_(sys.c.rows()), m_(sys.b.cols()) {
        if (n_ == 0) return;
        Eigen::ComplexSchur<Eigen::MatrixXcd> schur(sys.a.cast<std::complex<double>>());
        if (schur.info() != Eigen::Success)
            throw ConvergenceError("hinf: Schur decomposition failed", 0.0);
        t_ = schur.matrixT();
        cu_ = sys.c.cast<std::complex<double>>() * schur.matrixU();
        ub_ = schur.matrixU().adjoint() * sys.b.cast<std::complex<double>>();
    }

    Eigen::MatrixXcd eval(std::complex<double> z) const {
        if (n_ == 0) return Eigen::MatrixXcd::Zero(p_, m_);
        Eigen::MatrixXcd m = -t_;
        m.diagonal().array() += z;
        return cu_ * m.triangularView<Eigen::Upper>().solve(ub_);
    }

    bool stable() const {
        if (n_ == 0) return true;
        return t_.diagonal().cwiseAbs().maxCoeff() < 1.0;
    }

private:
    Index n_, p_, m_;
    Eigen::MatrixXcd t_, cu_, ub_;
};

// Maximum of fn over [lo, hi] by golden-section probing; fn may return NaN
// near poles, which counts as -inf.
template <typename Fn>
double golden_max(Fn&& fn, double lo, double hi, double seed_value) {
    constexpr double inv_phi = 0.6180339887498949;
    double best = seed_value;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    auto safe = [&](double w) {
        const double v = fn(w);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    };
    double f1 = safe(x1), f2 = safe(x2);
    for (int it = 0; it < 48 && b - a > 1e-12; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = safe(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = safe(x1);
        }
        best = std::max({best, f1, f2});
    }
    return best;
}

} // namespace

double hinf_relative_error_lti(const LtiTriple& full, const LtiTriple& reduced,
                               Index grid_size) {
    if (full.c.rows() != reduced.c.rows() || full.b.cols() != reduced.b.cols())
        throw DomainError("hinf_relative_error: input/output dimensions differ");
    const Index grid = std::max<Index>(grid_size, 2);
    FreqResponse gf(full);
    FreqResponse gr(reduced);
    if (!gf.stable() || !gr.stable())
        std::cerr << "mlti: warning: H-infinity estimate on an unstable system\n";

    const double step = std::numbers::pi / static_cast<double>(grid - 1);
    auto num_at = [&](double w) {
        const std::complex<double> z = std::polar(1.0, w);
        return sigma_max_of(gf.eval(z) - gr.eval(z));
    };
    auto den_at = [&](double w) {
        const std::complex<double> z = std::polar(1.0, w);
        return sigma_max_of(gf.eval(z));
    };

    double num_max = 0.0, den_max = 0.0, num_arg = 0.0, den_arg = 0.0;
    bool warned = false;
    for (Index i = 0; i < grid; ++i) {
        double w = static_cast<double>(i) * step;
        double nv = num_at(w), dv = den_at(w);
        if (!std::isfinite(nv) || !std::isfinite(dv)) {
            if (!warned) {
                std::cerr << "mlti: warning: pole on the H-infinity grid; perturbing\n";
                warned = true;
            }
            w += 0.5 * step;
            nv = num_at(w);
            dv = den_at(w);
            if (!std::isfinite(nv) || !std::isfinite(dv)) continue;
        }
        if (nv > num_max) {
            num_max = nv;
            num_arg = w;
        }
        if (dv > den_max) {
            den_max = dv;
            den_arg = w;
        }
    }
    num_max = golden_max(num_at, std::max(0.0, num_arg - step),
                         std::min(std::numbers::pi, num_arg + step), num_max);
    den_max = golden_max(den_at, std::max(0.0, den_arg - step),
                         std::min(std::numbers::pi, den_arg + step), den_max);

    if (den_max == 0.0) return num_max == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return num_max / den_max;
}

LtiTriple unfold_to_lti(const MltiSystem& s) {
    return LtiTriple{phi(s.a), phi(s.b), phi(s.c)};
}

namespace {

Eigen::MatrixXd core_slice(const DenseTensor& core, Index r0, Index r1) {
    const Index rr0 = core.shape().extent(1);
    const Index jn = core.shape().extent(2);
    const Index in = core.shape().extent(3);
    Eigen::MatrixXd m(jn, in);
    for (Index i = 0; i < in; ++i)
        for (Index j = 0; j < jn; ++j) m(j, i) = core[r0 + rr0 * (j + jn * (i + in * r1))];
    return m;
}

} // namespace

Eigen::MatrixXd factored_unfold(const FactoredTensor& f) {
    if (const auto* cp = std::get_if<GenCpFactors>(&f)) {
        const PairedShape ps = cp->pshape();
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(ps.row_shape().count(), ps.col_shape().count());
        for (Index r = 1; r <= cp->kronecker_rank(); ++r) {
            Eigen::MatrixXd chain = cp->slice(cp->order(), r);
            for (Index n = cp->order() - 1; n >= 1; --n)
                chain = linalg::kron(chain, cp->slice(n, r));
            acc += chain;
        }
        return acc;
    }
    const auto& tt = std::get<GenTtCores>(f);
    std::vector<Eigen::MatrixXd> carry;
    const DenseTensor& first = tt.cores.front();
    const Index r1 = first.shape().extent(4);
    carry.reserve(static_cast<std::size_t>(r1));
    for (Index r = 0; r < r1; ++r) carry.push_back(core_slice(first, 0, r));
    for (Index n = 2; n <= tt.order(); ++n) {
        const DenseTensor& core = tt.cores[static_cast<std::size_t>(n - 1)];
        const Index r0 = core.shape().extent(1);
        const Index rn = core.shape().extent(4);
        std::vector<Eigen::MatrixXd> next;
        next.reserve(static_cast<std::size_t>(rn));
        for (Index r = 0; r < rn; ++r) {
            Eigen::MatrixXd acc;
            for (Index q = 0; q < r0; ++q) {
                const Eigen::MatrixXd term =
                    linalg::kron(core_slice(core, q, r), carry[static_cast<std::size_t>(q)]);
                acc = q == 0 ? term : Eigen::MatrixXd(acc + term);
            }
            next.push_back(std::move(acc));
        }
        carry = std::move(next);
    }
    return carry.front();
}

LtiTriple unfold_to_lti(const FactoredMltiSystem& f) {
    return LtiTriple{factored_unfold(f.a), factored_unfold(f.b), factored_unfold(f.c)};
}

double hinf_relative_error(const MltiSystem& full, const MltiSystem& reduced, Index grid_size) {
    return hinf_relative_error_lti(unfold_to_lti(full), unfold_to_lti(reduced), grid_size);
}

double hinf_relative_error(const MltiSystem& full, const FactoredMltiSystem& reduced,
                           Index grid_size) {
    return hinf_relative_error_lti(unfold_to_lti(full), unfold_to_lti(reduced), grid_size);
}

// ---------------------------------------------------------------------------
// Stability criteria

StabilityVerdict stability_eigen(const EvenPairedTensor& a) {
    if (!a.is_square()) throw DomainError("stability_eigen: A must be square");
    return spectrum_verdict(phi(a), frobenius_norm(a.tensor()), "eigen");
}

StabilityVerdict stability_eigen(const MltiSystem& s) { return stability_eigen(s.a); }

StabilityVerdict stability_hosvd(const EvenPairedTensor& a) {
    if (!a.is_square()) throw DomainError("stability_hosvd: A must be square");
    // The n-mode singular values square-sum to ||A||^2 for every mode, so one
    // norm evaluation covers all N criteria.
    const double norm_a = frobenius_norm(a.tensor());
    return one_sided_verdict(norm_a * norm_a, norm_a, "hosvd");
}

StabilityVerdict stability_hosvd(const MltiSystem& s) { return stability_hosvd(s.a); }

StabilityVerdict stability_cpd(const CpFactors& cp) {
    StabilityVerdict v;
    v.criterion = "cpd_weight";
    const Index modes = static_cast<Index>(cp.factors.size());
    if (modes < 2 || modes % 2 != 0) {
        v.note = "precondition: factor list is not an even order";
        return v;
    }
    auto orthonormal = [](const Eigen::MatrixXd& f) {
        const Eigen::MatrixXd g = f.transpose() * f;
        return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).norm() <=
               1e-8 * std::sqrt(static_cast<double>(g.rows()));
    };
    bool odd_ok = false, even_ok = false;
    for (Index m = 1; m <= modes; ++m) {
        if (m % 2 == 1 && !odd_ok && orthonormal(cp.factors[static_cast<std::size_t>(m - 1)]))
            odd_ok = true;
        if (m % 2 == 0 && !even_ok && orthonormal(cp.factors[static_cast<std::size_t>(m - 1)]))
            even_ok = true;
    }
    if (!odd_ok || !even_ok) {
        v.note = "precondition: no orthonormal odd/even factor matrix pair";
        return v;
    }
    // Orthonormal Khatri-Rao sides make lambda the singular values of phi(A).
    const double lambda1 = cp.weights.size() > 0 ? cp.weights(0) : 0.0;
    const double norm_a = cp.weights.norm();
    return one_sided_verdict(lambda1, norm_a, "cpd_weight");
}

namespace {

double ttd_sigma_max_impl(TtCores t, Index n) {
    t = tt_left_orthonormalize(std::move(t), n - 1);
    if (t.order() >= n + 1) t = tt_right_orthonormalize(std::move(t), n + 1);
    const DenseTensor& core = t.cores[static_cast<std::size_t>(n - 1)];
    const Index r0 = core.shape().extent(1);
    const Index jn = core.shape().extent(2);
    const Index r1 = core.shape().extent(3);
    Eigen::Map<const Eigen::MatrixXd> v(core.data().data(), r0 * jn, r1);
    const Eigen::VectorXd sv = linalg::singular_values(v);
    return sv.size() > 0 ? sv(0) : 0.0;
}

} // namespace

double ttd_sigma_max(const EvenPairedTensor& a) {
    if (!a.is_square()) throw DomainError("ttd_sigma_max: A must be square");
    return ttd_sigma_max_impl(ttd_permuted_exact(a), a.order());
}

double ttd_sigma_max(const GenTtCores& a) { return ttd_sigma_max(gen_ttd_to_full(a)); }

StabilityVerdict stability_ttd(const EvenPairedTensor& a) {
    if (!a.is_square()) throw DomainError("stability_ttd: A must be square");
    const double sigma = ttd_sigma_max(a);
    return one_sided_verdict(sigma, frobenius_norm(a.tensor()), "ttd_sigma");
}

StabilityVerdict stability_ttd(const GenTtCores& a) { return stability_ttd(gen_ttd_to_full(a)); }

StabilityVerdict stability_factored(const FactoredMltiSystem& f) {
    StabilityVerdict v;
    v.criterion = "factored_bound";
    const auto* cp = std::get_if<GenCpFactors>(&f.a);
    if (!cp) {
        v.note = "precondition: A must be in Kronecker-rank (CPD) format";
        return v;
    }
    double bound = 0.0;
    for (Index r = 1; r <= cp->kronecker_rank(); ++r) {
        double prod = 1.0;
        for (Index n = 1; n <= cp->order(); ++n) {
            const Eigen::VectorXd sv = linalg::singular_values(cp->slice(n, r));
            prod *= sv.size() > 0 ? sv(0) : 0.0;
        }
        bound += prod;
    }
    // ||A||_F from the Gram form of the slice sum.
    double norm_sq = 0.0;
    for (Index r = 1; r <= cp->kronecker_rank(); ++r)
        for (Index q = 1; q <= cp->kronecker_rank(); ++q) {
            double prod = 1.0;
            for (Index n = 1; n <= cp->order(); ++n)
                prod *= (cp->slice(n, r).cwiseProduct(cp->slice(n, q))).sum();
            norm_sq += prod;
        }
    return one_sided_verdict(bound, std::sqrt(std::max(norm_sq, 0.0)), "factored_bound",
                             /*marginal_is_stable=*/true);
}

StabilityVerdict stability_tucker(const TuckerSystem& s) {
    if (s.a.empty()) throw DomainError("stability_tucker: no component matrices");
    double rho_product = 1.0;
    double norm_a = 1.0;
    for (const auto& an : s.a) {
        rho_product *= an.eigenvalues().cwiseAbs().maxCoeff();
        norm_a *= an.norm();
    }
    StabilityVerdict v;
    v.criterion = "tucker_spectral";
    v.witness = rho_product;
    const double tol = boundary_tol(norm_a);
    if (rho_product < 1.0 - tol) {
        v.verdict = Stability::AsymptoticallyStable;
    } else if (rho_product > 1.0 + tol) {
        v.verdict = Stability::Unstable;
    } else {
        // Marginal: check multiplicities on the Kronecker-assembled unfolding.
        Eigen::MatrixXd m = s.a.back();
        for (Index n = static_cast<Index>(s.a.size()) - 2; n >= 0; --n)
            m = linalg::kron(m, s.a[static_cast<std::size_t>(n)]);
        return spectrum_verdict(m, norm_a, "tucker_spectral");
    }
    return v;
}

StabilityVerdict stability_tucker(const FactoredMltiSystem& f) {
    const auto* cp = std::get_if<GenCpFactors>(&f.a);
    if (!cp || cp->kronecker_rank() != 1)
        throw DomainError("stability_tucker: A must be a Kronecker-rank-1 (Tucker) factorization");
    TuckerSystem t;
    for (Index n = 1; n <= cp->order(); ++n) t.a.push_back(cp->slice(n, 1));
    t.b = t.a; // unused by the criterion
    t.c = t.a;
    return stability_tucker(t);
}

// ---------------------------------------------------------------------------
// Gramians and Lyapunov equations

EvenPairedTensor reach_gramian(const MltiSystem& s, Index t0, Index t1) {
    if (t0 >= t1) throw DomainError("reach_gramian: need t0 < t1");
    const EvenPairedTensor bbt = einstein_compose(s.b, u_transpose(s.b));
    const EvenPairedTensor at = u_transpose(s.a);
    EvenPairedTensor term = bbt;
    EvenPairedTensor acc = bbt;
    for (Index k = 1; k < t1 - t0; ++k) {
        term = einstein_compose(einstein_compose(s.a, term), at);
        acc.tensor() += term.tensor();
    }
    return acc;
}

EvenPairedTensor obs_gramian(const MltiSystem& s, Index t0, Index t1) {
    if (t0 >= t1) throw DomainError("obs_gramian: need t0 < t1");
    const EvenPairedTensor ctc = einstein_compose(u_transpose(s.c), s.c);
    const EvenPairedTensor at = u_transpose(s.a);
    EvenPairedTensor term = ctc;
    EvenPairedTensor acc = ctc;
    for (Index k = 1; k < t1 - t0; ++k) {
        term = einstein_compose(einstein_compose(at, term), s.a);
        acc.tensor() += term.tensor();
    }
    return acc;
}

GramianPair gramian_pair(const MltiSystem& s, Index t0, Index t1) {
    return GramianPair{reach_gramian(s, t0, t1), obs_gramian(s, t0, t1)};
}

namespace {

// Smith doubling for W - a W a^T = q with rho(a) < 1.
Eigen::MatrixXd stein_smith(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
    Eigen::MatrixXd w = q;
    Eigen::MatrixXd ak = a;
    for (int it = 0; it < 128; ++it) {
        Eigen::MatrixXd next = w + ak * w * ak.transpose();
        next = 0.5 * (next + next.transpose()).eval();
        const double delta = (next - w).norm();
        w = std::move(next);
        if (delta <= 1e-16 * std::max(1.0, w.norm())) break;
        ak = (ak * ak).eval();
        if (ak.norm() < 1e-150) break;
    }
    return w;
}

double stein_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                      const Eigen::MatrixXd& w) {
    return (w - a * w * a.transpose() - q).norm() / std::max(1.0, q.norm());
}

} // namespace

EvenPairedTensor lyapunov_solve(const MltiSystem& s, GramianKind kind) {
    const StabilityVerdict sv = stability_eigen(s.a);
    if (sv.verdict != Stability::AsymptoticallyStable)
        throw PreconditionError(
            "lyapunov_solve: A must be asymptotically stable (spectral radius " +
            std::to_string(sv.witness) + ")");
    const Eigen::MatrixXd a = phi(s.a);
    Eigen::MatrixXd op, q;
    if (kind == GramianKind::Reach) {
        const Eigen::MatrixXd b = phi(s.b);
        op = a;
        q = b * b.transpose();
    } else {
        const Eigen::MatrixXd c = phi(s.c);
        op = a.transpose();
        q = c.transpose() * c;
    }
    Eigen::MatrixXd w = stein_smith(op, q);
    if (stein_residual(op, q, w) > 1e-10 && a.rows() <= 64) {
        // Dense Kronecker fallback for small, slowly converging cases.
        const Index n = a.rows();
        Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(n * n, n * n) - linalg::kron(op, op);
        Eigen::Map<const Eigen::VectorXd> qv(q.data(), n * n);
        Eigen::VectorXd wv = Eigen::PartialPivLU<Eigen::MatrixXd>(sys).solve(qv);
        w = Eigen::Map<Eigen::MatrixXd>(wv.data(), n, n);
        w = 0.5 * (w + w.transpose()).eval();
    }
    const double res = stein_residual(op, q, w);
    if (res > 1e-10)
        throw ConvergenceError("lyapunov_solve: residual did not reach 1e-10", res);
    return phi_inverse(w, s.a.pshape());
}

double lyapunov_residual(const MltiSystem& s, GramianKind kind, const EvenPairedTensor& w) {
    const EvenPairedTensor at = u_transpose(s.a);
    if (kind == GramianKind::Reach) {
        const EvenPairedTensor rhs = einstein_compose(s.b, u_transpose(s.b));
        const DenseTensor res =
            w.tensor() - einstein_compose(einstein_compose(s.a, w), at).tensor() - rhs.tensor();
        return frobenius_norm(res) / std::max(1.0, frobenius_norm(rhs.tensor()));
    }
    const EvenPairedTensor rhs = einstein_compose(u_transpose(s.c), s.c);
    const DenseTensor res =
        einstein_compose(einstein_compose(at, w), s.a).tensor() - w.tensor() + rhs.tensor();
    return frobenius_norm(res) / std::max(1.0, frobenius_norm(rhs.tensor()));
}

// ---------------------------------------------------------------------------
// Reachability / observability

EvenPairedTensor reachability_tensor(const MltiSystem& s, bool early_exit) {
    const Shape state = s.state_shape();
    const Index horizon = state.count();
    std::vector<EvenPairedTensor> blocks;
    blocks.reserve(static_cast<std::size_t>(horizon));
    blocks.push_back(s.b);
    Index saturated_rank = -1;
    for (Index k = 1; k < horizon; ++k) {
        blocks.push_back(einstein_compose(s.a, blocks.back()));
        if (early_exit) {
            BlockFactorization flat{std::vector<Index>(static_cast<std::size_t>(s.order()), 1)};
            flat.factors[0] = static_cast<Index>(blocks.size());
            const Index r = unfolding_rank(mode_row_block(blocks, flat));
            if (r == saturated_rank || r == horizon) break;
            saturated_rank = r;
        }
    }
    if (static_cast<Index>(blocks.size()) == horizon) {
        BlockFactorization f{state.dims()};
        return mode_row_block(blocks, f);
    }
    BlockFactorization flat{std::vector<Index>(static_cast<std::size_t>(s.order()), 1)};
    flat.factors[0] = static_cast<Index>(blocks.size());
    return mode_row_block(blocks, flat);
}

EvenPairedTensor observability_tensor(const MltiSystem& s, bool early_exit) {
    const Shape state = s.state_shape();
    const Index horizon = state.count();
    std::vector<EvenPairedTensor> blocks;
    blocks.reserve(static_cast<std::size_t>(horizon));
    blocks.push_back(s.c);
    Index saturated_rank = -1;
    for (Index k = 1; k < horizon; ++k) {
        blocks.push_back(einstein_compose(blocks.back(), s.a));
        if (early_exit) {
            BlockFactorization flat{std::vector<Index>(static_cast<std::size_t>(s.order()), 1)};
            flat.factors[0] = static_cast<Index>(blocks.size());
            const Index r = unfolding_rank(mode_col_block(blocks, flat));
            if (r == saturated_rank || r == horizon) break;
            saturated_rank = r;
        }
    }
    if (static_cast<Index>(blocks.size()) == horizon) {
        BlockFactorization f{state.dims()};
        return mode_col_block(blocks, f);
    }
    BlockFactorization flat{std::vector<Index>(static_cast<std::size_t>(s.order()), 1)};
    flat.factors[0] = static_cast<Index>(blocks.size());
    return mode_col_block(blocks, flat);
}

namespace {

ReachabilityVerdict rank_condition(const MltiSystem& s, ReachMethod method, bool dual) {
    const Index full_rank = s.state_shape().count();
    const EvenPairedTensor r = dual ? observability_tensor(s) : reachability_tensor(s);
    ReachabilityVerdict v;
    v.method = method;
    switch (method) {
    case ReachMethod::RankU:
        v.rank = unfolding_rank(r);
        v.verdict = v.rank == full_rank ? TriState::Yes : TriState::No;
        break;
    case ReachMethod::Ttd:
        v.rank = unfolding_rank_via_ttd(r);
        v.verdict = v.rank == full_rank ? TriState::Yes : TriState::No;
        break;
    case ReachMethod::CpdCert: {
        CpOptions opts;
        opts.seed = 20240915;
        opts.restarts = 4;
        const CpFactors cp = cp_als(r.tensor(), full_rank, opts);
        if (cp.fit < 1.0 - 1e-8) {
            v.verdict = TriState::Inconclusive;
            v.note = "no exact CPD found at R = Pi_J (fit " + std::to_string(cp.fit) + ")";
            break;
        }
        const RankCertificate cert = cpd_rank_certificate(cp);
        if (cert.certified && cert.rank == full_rank) {
            v.verdict = TriState::Yes;
            v.rank = cert.rank;
        } else {
            v.verdict = TriState::Inconclusive;
            v.note = cert.note.empty() ? "certificate inconclusive" : cert.note;
        }
        break;
    }
    case ReachMethod::MlrankNeg: {
        const std::vector<Index> ranks = multilinear_ranks(r.tensor());
        v.verdict = TriState::Inconclusive;
        v.note = "all state-side multilinear ranks are full";
        for (Index n = 1; n <= s.order(); ++n) {
            // State modes sit at odd positions of R and even positions of O.
            const Index mode = dual ? 2 * n : 2 * n - 1;
            if (ranks[static_cast<std::size_t>(mode - 1)] != s.state_shape().extent(n)) {
                v.verdict = TriState::No;
                v.rank = ranks[static_cast<std::size_t>(mode - 1)];
                v.note = "multilinear rank deficit in mode " + std::to_string(mode);
                break;
            }
        }
        break;
    }
    case ReachMethod::HosvdNeg: {
        const HosvdResult h = hosvd(r.tensor());
        v.verdict = TriState::Inconclusive;
        v.note = "no vanishing state-side n-mode singular value";
        for (Index n = 1; n <= s.order(); ++n) {
            const Index mode = dual ? 2 * n : 2 * n - 1;
            const Eigen::VectorXd& gamma =
                h.singular_values[static_cast<std::size_t>(mode - 1)];
            const double cutoff =
                linalg::kRankTol * gamma(0) *
                static_cast<double>(std::max<Index>(gamma.size(),
                                                    r.tensor().size() / gamma.size()));
            if (gamma(gamma.size() - 1) <= cutoff) {
                v.verdict = TriState::No;
                v.note = "vanishing n-mode singular value in mode " + std::to_string(mode);
                break;
            }
        }
        break;
    }
    case ReachMethod::Gramian:
        throw DomainError("rank_condition: gramian handled separately");
    }
    return v;
}

ReachabilityVerdict gramian_condition(const MltiSystem& s, bool dual) {
    const EvenPairedTensor w =
        lyapunov_solve(s, dual ? GramianKind::Obs : GramianKind::Reach);
    const Eigen::MatrixXd m = phi(w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                      Eigen::EigenvaluesOnly);
    ReachabilityVerdict v;
    v.method = ReachMethod::Gramian;
    v.witness = es.eigenvalues().minCoeff();
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    v.verdict = v.witness > 1e-12 * scale ? TriState::Yes : TriState::No;
    return v;
}

} // namespace

ReachabilityVerdict is_reachable(const MltiSystem& s, ReachMethod method) {
    if (method == ReachMethod::Gramian) return gramian_condition(s, false);
    return rank_condition(s, method, false);
}

ReachabilityVerdict is_observable(const MltiSystem& s, ReachMethod method) {
    if (method == ReachMethod::Gramian) return gramian_condition(s, true);
    return rank_condition(s, method, true);
}

// ---------------------------------------------------------------------------
// Model reduction

Index parameter_count(const FactoredMltiSystem& f) {
    return factored_parameter_count(f.a) + factored_parameter_count(f.b) +
           factored_parameter_count(f.c);
}

Index parameter_count(const MltiSystem& s) {
    return s.a.tensor().size() + s.b.tensor().size() + s.c.tensor().size();
}

CompressResult compress(const MltiSystem& s, const CompressOptions& opts) {
    CompressResult out{
        FactoredMltiSystem{GenCpFactors{}, GenCpFactors{}, GenCpFactors{}}, 0, 0.0, {0, 0, 0}, {}};
    if (opts.format == FactorFormat::Cpd) {
        std::array<Index, 3> ranks{};
        if (opts.ranks) {
            ranks = *opts.ranks;
        } else {
            ranks = {estimate_kronecker_rank(s.a, opts.cp), estimate_kronecker_rank(s.b, opts.cp),
                     estimate_kronecker_rank(s.c, opts.cp)};
        }
        out.cpd_ranks = ranks;
        out.system.a = generalized_cpd(s.a, ranks[0], opts.cp);
        out.system.b = generalized_cpd(s.b, ranks[1], opts.cp);
        out.system.c = generalized_cpd(s.c, ranks[2], opts.cp);
    } else {
        auto decompose = [&](const EvenPairedTensor& t) {
            return opts.eps ? generalized_ttd(t, *opts.eps) : generalized_ttd_exact(t);
        };
        GenTtCores a = decompose(s.a);
        GenTtCores b = decompose(s.b);
        GenTtCores c = decompose(s.c);
        out.tt_ranks = {a.ranks, b.ranks, c.ranks};
        out.system.a = std::move(a);
        out.system.b = std::move(b);
        out.system.c = std::move(c);
    }
    out.parameter_count = parameter_count(out.system);
    out.hinf_error = hinf_relative_error(s, out.system, opts.hinf_grid);
    return out;
}

BalancedTruncationResult balanced_truncation_baseline(const MltiSystem& s, Index keep,
                                                      Index hinf_grid) {
    const StabilityVerdict sv = stability_eigen(s.a);
    if (sv.verdict != Stability::AsymptoticallyStable)
        throw PreconditionError("balanced_truncation_baseline: system must be stable");
    const LtiTriple full = unfold_to_lti(s);
    const Index n = full.a.rows();
    if (keep < 0 || keep > n)
        throw DomainError("balanced_truncation_baseline: keep out of range");

    const Eigen::MatrixXd p = stein_smith(full.a, full.b * full.b.transpose());
    const Eigen::MatrixXd q =
        stein_smith(full.a.transpose(), full.c.transpose() * full.c);

    auto psd_factor = [](const Eigen::MatrixXd& m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return Eigen::MatrixXd(es.eigenvectors() * lam.asDiagonal());
    };
    const Eigen::MatrixXd lp = psd_factor(p);
    const Eigen::MatrixXd lq = psd_factor(q);

    const linalg::ThinSvd svd = linalg::thin_svd(lq.transpose() * lp);

    BalancedTruncationResult out;
    out.hankel = svd.s;
    out.kept = keep;
    if (keep == 0) {
        out.a.resize(0, 0);
        out.b.resize(0, full.b.cols());
        out.c.resize(full.c.rows(), 0);
    } else {
        const Eigen::VectorXd scale = svd.s.head(keep).cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd t = lp * svd.v.leftCols(keep) * scale.asDiagonal();
        const Eigen::MatrixXd tinv =
            scale.asDiagonal() * svd.u.leftCols(keep).transpose() * lq.transpose();
        out.a = tinv * full.a * t;
        out.b = tinv * full.b;
        out.c = full.c * t;
    }
    out.parameter_count = keep * keep + keep * full.b.cols() + full.c.rows() * keep;
    out.hinf_error = hinf_relative_error_lti(full, LtiTriple{out.a, out.b, out.c}, hinf_grid);
    return out;
}

} // namespace mlti

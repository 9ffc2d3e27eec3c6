// Acceptance harness: runs every acceptance criterion at its stated
// tolerance and prints one PASS/FAIL line per criterion. Exit code is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mlti/experiments.hpp"
#include "mlti/io.hpp"
#include "mlti/random.hpp"
#include "mlti/system.hpp"
#include "support/oracles.hpp"

using namespace mlti;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::string&)> run;
};

std::vector<std::string> g_warnings;

bool check_experiment(const std::vector<experiments::Check>& checks, std::string& detail) {
    bool pass = true;
    for (const auto& c : checks) {
        if (!c.pass) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + c.name +
                      (c.detail.empty() ? "" : " [" + c.detail + "]");
        }
    }
    if (pass) detail = std::to_string(checks.size()) + " checks";
    return pass;
}

// --------------------------------------------------------------------------
// 1. Golden reproduction of the fixed 3x2 SISO example.
bool criterion_golden(std::string& detail) {
    const auto r = experiments::run_reach_obs_example();
    return check_experiment(r.checks, detail);
}

// --------------------------------------------------------------------------
// 2. Isomorphism suite: 200 random conformable pairs, N <= 3, extents <= 3.
bool criterion_isomorphism(std::string& detail) {
    Index failures = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(1000 + seed);
        const Index n = 1 + static_cast<Index>(rng.integer(3));
        std::vector<std::pair<Index, Index>> pa, pb;
        for (Index k = 0; k < n; ++k) {
            const Index j = 1 + static_cast<Index>(rng.integer(3));
            const Index mid = 1 + static_cast<Index>(rng.integer(3));
            const Index i = 1 + static_cast<Index>(rng.integer(3));
            pa.emplace_back(j, mid);
            pb.emplace_back(mid, i);
        }
        const EvenPairedTensor a = oracle::random_paired_tensor(PairedShape{pa}, rng);
        const EvenPairedTensor b = oracle::random_paired_tensor(PairedShape{pb}, rng);
        const Eigen::MatrixXd pha = phi(a);
        const Eigen::MatrixXd phb = phi(b);
        const Eigen::MatrixXd lhs = phi(einstein_compose(a, b));
        if ((lhs - pha * phb).norm() > 1e-12 * pha.norm() * phb.norm() + 1e-300) ++failures;
        const EvenPairedTensor back = phi_inverse(pha, a.pshape());
        if (!oracle::tensors_equal(back.tensor(), a.tensor())) ++failures;
    }
    detail = "200 pairs, " + std::to_string(failures) + " failures";
    return failures == 0;
}

// --------------------------------------------------------------------------
// 3. Rank relations: TT route vs dense rank, full-rank multilinear
// implication, and the CPD rank certificate.
bool criterion_rank_relations(std::string& detail) {
    Index mismatches = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(2000 + seed);
        EvenPairedTensor a = [&]() {
            switch (seed % 3) {
            case 0: // dense random
                return oracle::random_paired_tensor(PairedShape{{2, 3}, {3, 2}}, rng);
            case 1: { // planted low phi-rank
                const Index k = 1 + static_cast<Index>(rng.integer(4));
                const Eigen::MatrixXd u = random_matrix(6, k, rng);
                const Eigen::MatrixXd v = random_matrix(6, k, rng);
                return phi_inverse(u * v.transpose(), PairedShape{{3, 2}, {2, 3}});
            }
            default: // third order
                return oracle::random_paired_tensor(PairedShape{{2, 2}, {2, 2}, {2, 2}}, rng);
            }
        }();
        if (unfolding_rank_via_ttd(a) != unfolding_rank(a)) ++mismatches;
    }

    Index implication_failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(2200 + seed);
        const EvenPairedTensor a =
            oracle::random_paired_tensor(PairedShape{{2, 3}, {3, 2}}, rng);
        if (unfolding_rank(a) != 6) continue; // generic, should not happen
        const std::vector<Index> mr = multilinear_ranks(a.tensor());
        if (mr[0] != 2 || mr[2] != 3) ++implication_failures;
    }

    Index cert_failures = 0;
    for (Index r = 1; r <= 6; ++r) {
        Rng rng(2400 + static_cast<std::uint64_t>(r));
        CpFactors cp;
        cp.weights = Eigen::VectorXd::Ones(r);
        cp.factors = {random_matrix(4, r, rng), random_matrix(4, r, rng),
                      random_matrix(3, r, rng), random_matrix(3, r, rng)};
        for (auto& f : cp.factors)
            for (Index c = 0; c < r; ++c) f.col(c) /= f.col(c).norm();
        const RankCertificate cert = cpd_rank_certificate(cp);
        const EvenPairedTensor full = EvenPairedTensor::from_interleaved(cp.reconstruct());
        if (!cert.certified || cert.rank != r || unfolding_rank(full) != r) ++cert_failures;
    }

    detail = "ttd/dense mismatches " + std::to_string(mismatches) + ", implication failures " +
             std::to_string(implication_failures) + ", certificate failures " +
             std::to_string(cert_failures);
    return mismatches == 0 && implication_failures == 0 && cert_failures == 0;
}

// --------------------------------------------------------------------------
// 4. Stability criterion consistency: no one-sided criterion may declare
// asymptotic stability when the eigenvalue criterion does not.
bool criterion_stability_consistency(std::string& detail) {
    Index systems = 0, violations = 0;
    auto consistent = [&](const StabilityVerdict& one_sided, const StabilityVerdict& eig) {
        if (one_sided.verdict == Stability::AsymptoticallyStable &&
            eig.verdict != Stability::AsymptoticallyStable)
            ++violations;
    };

    // Dense random systems over a spread of spectral radii.
    for (std::uint64_t seed = 0; seed < 80; ++seed) {
        Rng rng(3000 + seed);
        const Shape state = seed % 2 == 0 ? Shape{2, 2} : Shape{3, 2};
        EvenPairedTensor a = oracle::random_paired_tensor(PairedShape::square(state), rng);
        const double target = 0.3 + 0.015 * static_cast<double>(seed);
        const double rho = u_spectral_radius(a);
        if (rho > 0) a.tensor() *= target / rho;
        const StabilityVerdict eig = stability_eigen(a);
        consistent(stability_hosvd(a), eig);
        consistent(stability_ttd(a), eig);
        ++systems;
    }
    // Tucker systems: the spectral product is exact, so verdicts must agree.
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        Rng rng(3100 + seed);
        RandomSystemOptions opts;
        opts.stabilize = true;
        opts.target_rho = 0.25 + 0.02 * static_cast<double>(seed);
        const TuckerSystem t =
            random_tucker_system(Shape{2, 2}, Shape{1, 1}, Shape{1, 1}, rng, opts);
        const EvenPairedTensor a = tucker_to_einstein(t).a;
        const StabilityVerdict eig = stability_eigen(a);
        consistent(stability_tucker(t), eig);
        consistent(stability_hosvd(a), eig);
        consistent(stability_ttd(a), eig);
        ++systems;
    }
    // Planted generalized-TT systems.
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(3200 + seed);
        const Shape state{2, 2, 2};
        GenTtCores cores = random_gen_tt(PairedShape::square(state), {1, 2, 2, 1}, rng, 0.7);
        EvenPairedTensor a = gen_ttd_to_full(cores);
        const double target = 0.4 + 0.03 * static_cast<double>(seed);
        const double rho = u_spectral_radius(a);
        if (rho > 0) {
            const double scale = target / rho;
            a.tensor() *= scale;
            const double core_scale = std::pow(scale, 1.0 / 3.0);
            for (auto& c : cores.cores) c *= core_scale;
        }
        const StabilityVerdict eig = stability_eigen(a);
        consistent(stability_ttd(cores), eig);
        consistent(stability_hosvd(a), eig);
        ++systems;
    }
    // Orthonormal-factor CPD constructions, plus the factored bound.
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(3300 + seed);
        const double lambda1 = 0.5 + 0.025 * static_cast<double>(seed);
        const PlantedOrthonormalCpd p = planted_orthonormal_cpd(Shape{3, 3}, 2, lambda1, rng);
        const StabilityVerdict eig = stability_eigen(p.full);
        consistent(stability_cpd(p.cp), eig);
        // Kronecker-rank form of the same tensor for the factored bound.
        GenCpFactors f;
        const Index n = 2;
        for (Index m = 1; m <= n; ++m) {
            DenseTensor comp(Shape{p.cp.rank(), 3, 3});
            for (Index r = 0; r < p.cp.rank(); ++r) {
                const double w = std::pow(p.cp.weights(r), 1.0 / static_cast<double>(n));
                for (Index j = 0; j < 3; ++j)
                    for (Index i = 0; i < 3; ++i)
                        comp[r + p.cp.rank() * (j + 3 * i)] =
                            w * p.cp.factors[static_cast<std::size_t>(2 * m - 2)](j, r) *
                            p.cp.factors[static_cast<std::size_t>(2 * m - 1)](i, r);
            }
            f.components.push_back(std::move(comp));
        }
        consistent(stability_factored(FactoredMltiSystem{f, f, f}), eig);
        ++systems;
    }

    detail = std::to_string(systems) + " systems, " + std::to_string(violations) + " violations";
    return violations == 0;
}

// --------------------------------------------------------------------------
// 5. sigma_max correctness at desk scale plus the non-blocking timing trend.
bool criterion_sigma_timing(std::string& detail) {
    const auto r = experiments::run_sigma_timing({6, 8, 10, 12}, 42);
    if (!r.trend_ok)
        g_warnings.push_back("criterion 5: timing trend at n = 12 not met (" + r.trend_note +
                             "); non-blocking by design");
    return check_experiment(r.checks, detail);
}

// --------------------------------------------------------------------------
// 6. Rank-truncation ladders.
bool criterion_rank_truncation(std::string& detail) {
    const auto r = experiments::run_rank_truncation(20240901);
    return check_experiment(r.checks, detail);
}

// --------------------------------------------------------------------------
// 7. Planted low-TT-rank compression vs balanced truncation.
bool criterion_memory_comparison(std::string& detail) {
    const auto r = experiments::run_memory_comparison(20240901);
    return check_experiment(r.checks, detail);
}

// --------------------------------------------------------------------------
// 8. Gramian / Kalman equivalence on stable systems.
bool criterion_gramian_kalman(std::string& detail) {
    Index failures = 0, tested = 0;
    const std::vector<Shape> states{Shape{2, 2}, Shape{4, 2}, Shape{3, 2}, Shape{2, 2, 2},
                                    Shape{4, 4}};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(4000 + seed);
        const Shape state = states[seed % states.size()];
        // Wide-enough input/output maps keep the Krylov basis well
        // conditioned, so the rank and definiteness margins stay clear.
        std::vector<Index> io_dims;
        for (Index m = 1; m <= state.order(); ++m)
            io_dims.push_back(std::min<Index>(state.extent(m), 2));
        const Shape io{io_dims};
        RandomSystemOptions opts;
        opts.target_rho = 0.7;
        MltiSystem s = random_system(state, io, io, rng, opts);
        if (seed % 7 == 3) // unreachable variants: zero the input map
            s = MltiSystem(s.a, EvenPairedTensor(s.b.pshape()), s.c);
        if (seed % 7 == 5) // unobservable variants
            s = MltiSystem(s.a, s.b, EvenPairedTensor(s.c.pshape()));

        const EvenPairedTensor wr = lyapunov_solve(s, GramianKind::Reach);
        const EvenPairedTensor wo = lyapunov_solve(s, GramianKind::Obs);
        if (lyapunov_residual(s, GramianKind::Reach, wr) > 1e-10) ++failures;
        if (lyapunov_residual(s, GramianKind::Obs, wo) > 1e-10) ++failures;

        const bool reach_rank =
            is_reachable(s, ReachMethod::RankU).verdict == TriState::Yes;
        const bool obs_rank = is_observable(s, ReachMethod::RankU).verdict == TriState::Yes;
        const bool reach_pd = is_reachable(s, ReachMethod::Gramian).verdict == TriState::Yes;
        const bool obs_pd = is_observable(s, ReachMethod::Gramian).verdict == TriState::Yes;
        if (reach_rank != reach_pd) ++failures;
        if (obs_rank != obs_pd) ++failures;
        ++tested;
    }
    detail = std::to_string(tested) + " systems, " + std::to_string(failures) + " failures";
    return failures == 0;
}

// --------------------------------------------------------------------------
// 9. Classical collapse: N = 1 agrees with a direct matrix implementation.
bool criterion_classical_collapse(std::string& detail) {
    Index failures = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(5000 + seed);
        const Index n = 2 + static_cast<Index>(rng.integer(3));
        const Index m = 1 + static_cast<Index>(rng.integer(2));
        const Index p = 1 + static_cast<Index>(rng.integer(2));
        TuckerSystem t;
        t.a = {random_matrix(n, n, rng)};
        t.b = {random_matrix(n, m, rng)};
        t.c = {random_matrix(p, n, rng)};
        const double rho = t.a[0].eigenvalues().cwiseAbs().maxCoeff();
        if (rho > 0) t.a[0] *= 0.75 / rho;
        const MltiSystem s = tucker_to_einstein(t);
        oracle::DenseLti lti{t.a[0], t.b[0], t.c[0]};

        // Simulation.
        const DenseTensor x0 = oracle::random_dense(Shape{n}, rng);
        std::vector<DenseTensor> inputs;
        std::vector<Eigen::VectorXd> ltiu;
        for (int k = 0; k < 10; ++k) {
            inputs.push_back(oracle::random_dense(Shape{m}, rng));
            ltiu.emplace_back(
                Eigen::Map<const Eigen::VectorXd>(inputs.back().data().data(), m));
        }
        const SimulationResult sim = simulate(s, x0, inputs, 10);
        const auto xs =
            lti.simulate(Eigen::Map<const Eigen::VectorXd>(x0.data().data(), n), ltiu, 10);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            Eigen::Map<const Eigen::VectorXd> got(sim.states[k].data().data(), n);
            if ((got - xs[k]).norm() > 1e-12 * (1.0 + xs[k].norm())) ++failures;
        }

        // Transfer function at a few unit-circle points.
        for (double w : {0.0, 0.5, 2.0}) {
            const auto z = std::polar(1.0, w);
            if ((transfer_eval(s, z) - lti.transfer(z)).norm() > 1e-12) ++failures;
        }

        // Gramians over a finite horizon.
        if ((phi(reach_gramian(s, 0, 8)) - lti.reach_gramian(8)).norm() >
            1e-12 * (1.0 + lti.reach_gramian(8).norm()))
            ++failures;
        if ((phi(obs_gramian(s, 0, 8)) - lti.obs_gramian(8)).norm() >
            1e-12 * (1.0 + lti.obs_gramian(8).norm()))
            ++failures;

        // Reachability against the classical Kalman rank.
        const bool kalman = linalg::numerical_rank(lti.controllability()) == n;
        if ((is_reachable(s, ReachMethod::RankU).verdict == TriState::Yes) != kalman) ++failures;
    }
    detail = "50 seeds, " + std::to_string(failures) + " failures";
    return failures == 0;
}

// --------------------------------------------------------------------------
// 10. HORQI convergence on weakly symmetric systems.
bool criterion_horqi(std::string& detail) {
    Index converged = 0, matched = 0, trials = 50;
    for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(trials); ++seed) {
        Rng rng(6000 + seed);
        const Shape state = seed % 2 == 0 ? Shape{2, 2} : Shape{4, 2};
        const EvenPairedTensor b = oracle::random_paired_tensor(PairedShape::square(state), rng);
        const EvenPairedTensor a = einstein_compose(u_transpose(b), b);
        const DenseTensor x0 = oracle::random_dense(state, rng);
        try {
            const UEigenPair p = horqi(a, x0, 1e-8, 30);
            ++converged;
            const auto all = u_eigen(a);
            double best = 1e300;
            for (const auto& q : all) best = std::min(best, std::abs(q.value - p.value));
            if (best <= 1e-6 * (1.0 + std::abs(p.value))) ++matched;
        } catch (const ConvergenceError&) {
            // counted as a non-convergence
        }
    }
    detail = std::to_string(converged) + "/" + std::to_string(trials) + " converged, " +
             std::to_string(matched) + " matched the dense spectrum";
    return converged >= 45 && matched == converged;
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "golden reproduction of the 3x2 SISO example", criterion_golden},
        {2, "phi isomorphism suite (200 random pairs)", criterion_isomorphism},
        {3, "rank relations (TT route, multilinear implication, certificate)",
         criterion_rank_relations},
        {4, "one-sided stability criteria never overrule the eigenvalue test",
         criterion_stability_consistency},
        {5, "TT-pipeline sigma_max matches dense SVD at n = 6, 8, 10",
         criterion_sigma_timing},
        {6, "rank-truncation ladders and parameter formulas", criterion_rank_truncation},
        {7, "planted low-TT-rank compression beats balanced truncation",
         criterion_memory_comparison},
        {8, "Lyapunov Gramian definiteness matches the Kalman rank", criterion_gramian_kalman},
        {9, "classical collapse for N = 1", criterion_classical_collapse},
        {10, "HORQI convergence and spectrum match", criterion_horqi},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        std::string detail;
        bool pass = false;
        try {
            pass = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        std::printf("%s  criterion %2d: %s%s%s  [%.2f s]\n", pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), detail.empty() ? "" : " -- ", detail.c_str(), secs);
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    for (const auto& w : g_warnings) std::printf("WARN  %s\n", w.c_str());
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures;
}

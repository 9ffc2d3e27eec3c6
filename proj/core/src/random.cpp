#include "mlti/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>

namespace mlti {

DenseTensor random_tensor(const Shape& shape, Rng& rng, double fill) {
    DenseTensor t(shape);
    for (Index i = 0; i < t.size(); ++i) {
        const double keep = fill >= 1.0 ? 1.0 : (rng.uniform() < fill ? 1.0 : 0.0);
        t[i] = keep * rng.normal();
    }
    return t;
}

EvenPairedTensor random_paired(const PairedShape& pshape, Rng& rng, double fill) {
    return EvenPairedTensor(pshape, random_tensor(pshape.interleaved(), rng, fill));
}

Eigen::MatrixXd random_matrix(Index rows, Index cols, Rng& rng, double fill) {
    Eigen::MatrixXd m(rows, cols);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) {
            const double keep = fill >= 1.0 ? 1.0 : (rng.uniform() < fill ? 1.0 : 0.0);
            m(r, c) = keep * rng.normal();
        }
    return m;
}

Eigen::MatrixXd random_orthogonal(Index n, Rng& rng) {
    const Eigen::MatrixXd g = random_matrix(n, n, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    // Fix the sign convention so the result is deterministic in the data.
    const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    for (Index c = 0; c < n; ++c)
        if (r(c, c) < 0) q.col(c) = -q.col(c);
    return q;
}

namespace {

EvenPairedTensor stabilized(EvenPairedTensor a, double target_rho) {
    const double rho = u_spectral_radius(a);
    if (rho > 0.0) a.tensor() *= target_rho / rho;
    return a;
}

} // namespace

MltiSystem random_system(const Shape& state, const Shape& input, const Shape& output, Rng& rng,
                         const RandomSystemOptions& opts) {
    EvenPairedTensor a = random_paired(PairedShape::square(state), rng, opts.fill);
    EvenPairedTensor b =
        random_paired(PairedShape::from_row_col(state, input), rng, opts.fill);
    EvenPairedTensor c =
        random_paired(PairedShape::from_row_col(output, state), rng, opts.fill);
    if (opts.stabilize) a = stabilized(std::move(a), opts.target_rho);
    return MltiSystem(std::move(a), std::move(b), std::move(c));
}

TuckerSystem random_tucker_system(const Shape& state, const Shape& input, const Shape& output,
                                  Rng& rng, const RandomSystemOptions& opts) {
    TuckerSystem s;
    const Index n = state.order();
    if (input.order() != n || output.order() != n)
        throw DomainError("random_tucker_system: shape orders differ");
    double rho = 1.0;
    for (Index m = 1; m <= n; ++m) {
        Eigen::MatrixXd an = random_matrix(state.extent(m), state.extent(m), rng, opts.fill);
        rho *= an.eigenvalues().cwiseAbs().maxCoeff();
        s.a.push_back(std::move(an));
        s.b.push_back(random_matrix(state.extent(m), input.extent(m), rng, opts.fill));
        s.c.push_back(random_matrix(output.extent(m), state.extent(m), rng, opts.fill));
    }
    if (opts.stabilize && rho > 0.0) {
        const double scale = std::pow(opts.target_rho / rho, 1.0 / static_cast<double>(n));
        for (auto& an : s.a) an *= scale;
    }
    return s;
}

GenTtCores random_gen_tt(const PairedShape& pshape, const std::vector<Index>& ranks, Rng& rng,
                         double fill) {
    const Index n = pshape.order();
    if (static_cast<Index>(ranks.size()) != n + 1 || ranks.front() != 1 || ranks.back() != 1)
        throw DomainError("random_gen_tt: ranks must be (1, R1, ..., R_{N-1}, 1)");
    GenTtCores t;
    t.ranks = ranks;
    for (Index m = 1; m <= n; ++m) {
        const auto [jn, in] = pshape.pair(m);
        t.cores.push_back(random_tensor(
            Shape{ranks[static_cast<std::size_t>(m - 1)], jn, in,
                  ranks[static_cast<std::size_t>(m)]},
            rng, fill));
    }
    return t;
}

PlantedTtSystem random_planted_tt_system(const Shape& state, const Shape& input,
                                         const Shape& output, std::vector<Index> ranks_a,
                                         std::vector<Index> ranks_b, std::vector<Index> ranks_c,
                                         Rng& rng, const RandomSystemOptions& opts) {
    GenTtCores a = random_gen_tt(PairedShape::square(state), ranks_a, rng, opts.fill);
    GenTtCores b = random_gen_tt(PairedShape::from_row_col(state, input), ranks_b, rng, opts.fill);
    GenTtCores c =
        random_gen_tt(PairedShape::from_row_col(output, state), ranks_c, rng, opts.fill);
    if (opts.stabilize) {
        const double rho = u_spectral_radius(gen_ttd_to_full(a));
        if (rho > 0.0) {
            const double scale =
                std::pow(opts.target_rho / rho, 1.0 / static_cast<double>(state.order()));
            for (auto& core : a.cores) core *= scale;
        }
    }
    MltiSystem full(gen_ttd_to_full(a), gen_ttd_to_full(b), gen_ttd_to_full(c));
    return PlantedTtSystem{std::move(a), std::move(b), std::move(c), std::move(full)};
}

PlantedOrthonormalCpd planted_orthonormal_cpd(const Shape& state, Index r, double lambda1,
                                              Rng& rng) {
    const Index n = state.order();
    for (Index m = 1; m <= n; ++m)
        if (r > state.extent(m))
            throw DomainError("planted_orthonormal_cpd: r exceeds a mode extent");
    CpFactors cp;
    cp.weights = Eigen::VectorXd(r);
    for (Index k = 0; k < r; ++k)
        cp.weights(k) = lambda1 * std::pow(0.7, static_cast<double>(k));
    for (Index m = 1; m <= n; ++m) {
        // One orthonormal factor per paired position (odd and even).
        cp.factors.push_back(random_orthogonal(state.extent(m), rng).leftCols(r));
        cp.factors.push_back(random_orthogonal(state.extent(m), rng).leftCols(r));
    }
    cp.fit = 1.0;
    DenseTensor full = cp.reconstruct();
    return PlantedOrthonormalCpd{std::move(cp),
                                 EvenPairedTensor::from_interleaved(std::move(full))};
}

} // namespace mlti

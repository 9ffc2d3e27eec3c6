#include "mlti/decomp.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "mlti/rng.hpp"
#include "mlti/tensor_ops.hpp"

namespace mlti {

namespace {

Eigen::MatrixXd matricize(const DenseTensor& x, Index n) {
    const DenseTensor m = n_mode_matricize(x, n);
    return linalg::as_matrix(m);
}

DenseTensor column_tensor(const Eigen::MatrixXd& m, Index col, Index rows) {
    return DenseTensor(Shape{rows},
                       std::vector<double>(m.col(col).data(), m.col(col).data() + rows));
}

} // namespace

DenseTensor HosvdResult::reconstruct() const {
    DenseTensor out = core;
    for (Index n = 1; n <= core.order(); ++n)
        out = n_mode_product(out, factors[static_cast<std::size_t>(n - 1)], n);
    return out;
}

HosvdResult hosvd(const DenseTensor& x) {
    const Index n = x.order();
    if (n == 0) {
        HosvdResult r;
        r.core = x;
        return r;
    }
    HosvdResult r;
    r.factors.reserve(static_cast<std::size_t>(n));
    r.singular_values.reserve(static_cast<std::size_t>(n));
    for (Index mode = 1; mode <= n; ++mode) {
        const Eigen::MatrixXd xm = matricize(x, mode);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(xm, Eigen::ComputeFullU);
        Eigen::MatrixXd u = svd.matrixU();
        for (Index c = 0; c < u.cols(); ++c) {
            Index imax = 0;
            u.col(c).cwiseAbs().maxCoeff(&imax);
            if (u(imax, c) < 0.0) u.col(c) = -u.col(c);
        }
        Eigen::VectorXd gamma = Eigen::VectorXd::Zero(x.shape().extent(mode));
        gamma.head(svd.singularValues().size()) = svd.singularValues();
        r.factors.push_back(std::move(u));
        r.singular_values.push_back(std::move(gamma));
    }
    DenseTensor core = x;
    for (Index mode = 1; mode <= n; ++mode)
        core = n_mode_product(core, r.factors[static_cast<std::size_t>(mode - 1)].transpose(), mode);
    r.core = std::move(core);
    return r;
}

std::vector<Index> multilinear_ranks(const DenseTensor& x, double tol) {
    std::vector<Index> ranks;
    ranks.reserve(static_cast<std::size_t>(x.order()));
    for (Index n = 1; n <= x.order(); ++n)
        ranks.push_back(linalg::numerical_rank(matricize(x, n), tol));
    return ranks;
}

// ---------------------------------------------------------------------------
// CP-ALS

DenseTensor CpFactors::reconstruct() const {
    std::vector<Index> dims;
    for (const auto& f : factors) dims.push_back(f.rows());
    DenseTensor out{Shape(dims)};
    for (Index r = 0; r < rank(); ++r) {
        DenseTensor term = DenseTensor::scalar(weights(r));
        for (const auto& f : factors) term = outer(term, column_tensor(f, r, f.rows()));
        out += reshape(term, out.shape());
    }
    return out;
}

Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols()) throw DomainError("khatri_rao: column counts differ");
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols());
    for (Index c = 0; c < a.cols(); ++c)
        for (Index i = 0; i < a.rows(); ++i)
            out.col(c).segment(i * b.rows(), b.rows()) = a(i, c) * b.col(c);
    return out;
}

namespace {

// Khatri-Rao chain over the remaining modes so that mode 1 varies fastest,
// matching the column order of the n-mode matricization.
Eigen::MatrixXd kr_skip(const std::vector<Eigen::MatrixXd>& factors, Index skip) {
    Eigen::MatrixXd acc;
    bool first = true;
    for (Index m = static_cast<Index>(factors.size()); m >= 1; --m) {
        if (m == skip) continue;
        const auto& f = factors[static_cast<std::size_t>(m - 1)];
        acc = first ? f : khatri_rao(acc, f);
        first = false;
    }
    return acc;
}

struct AlsRun {
    Eigen::VectorXd lambda;
    std::vector<Eigen::MatrixXd> factors;
    double fit = 0.0;
};

AlsRun run_als(const std::vector<Eigen::MatrixXd>& unfoldings, const std::vector<Index>& dims,
               Index r, double norm_x, const CpOptions& opts, std::uint64_t seed) {
    const Index n = static_cast<Index>(dims.size());
    Rng rng(seed);
    AlsRun run;
    run.factors.resize(static_cast<std::size_t>(n));
    for (Index m = 0; m < n; ++m) {
        Eigen::MatrixXd f(dims[static_cast<std::size_t>(m)], r);
        for (Index j = 0; j < f.size(); ++j) f(j / r, j % r) = rng.normal();
        for (Index c = 0; c < r; ++c) {
            const double nc = f.col(c).norm();
            if (nc > 0) f.col(c) /= nc;
        }
        run.factors[static_cast<std::size_t>(m)] = std::move(f);
    }
    run.lambda = Eigen::VectorXd::Ones(r);

    std::vector<Eigen::MatrixXd> grams(static_cast<std::size_t>(n));
    for (Index m = 0; m < n; ++m)
        grams[static_cast<std::size_t>(m)] =
            run.factors[static_cast<std::size_t>(m)].transpose() *
            run.factors[static_cast<std::size_t>(m)];

    // Direct error evaluation; the Gram form bottoms out near 1 - sqrt(eps)
    // from cancellation, which is too coarse for tight fit goals.
    const Index total = unfoldings[0].size();
    auto dense_fit = [&]() {
        const Eigen::MatrixXd& x1 = unfoldings[0]; // mode-1 unfolding: x in ivec order
        std::vector<Index> counter(static_cast<std::size_t>(n), 0);
        double err_sq = 0.0;
        for (Index flat = 0; flat < total; ++flat) {
            double value = 0.0;
            for (Index c = 0; c < r; ++c) {
                double prod = run.lambda(c);
                for (Index m = 0; m < n; ++m)
                    prod *= run.factors[static_cast<std::size_t>(m)](
                        counter[static_cast<std::size_t>(m)], c);
                value += prod;
            }
            const double diff = value - x1.data()[flat];
            err_sq += diff * diff;
            for (Index m = 0; m < n; ++m) {
                if (++counter[static_cast<std::size_t>(m)] < dims[static_cast<std::size_t>(m)])
                    break;
                counter[static_cast<std::size_t>(m)] = 0;
            }
        }
        return norm_x > 0 ? 1.0 - std::sqrt(err_sq) / norm_x : 1.0;
    };
    const bool use_dense_fit = total <= 65536;

    double prev_fit = -1.0;
    for (Index it = 0; it < opts.max_iter; ++it) {
        for (Index mode = 1; mode <= n; ++mode) {
            Eigen::MatrixXd v = Eigen::MatrixXd::Ones(r, r);
            for (Index m = 0; m < n; ++m)
                if (m != mode - 1) v = v.cwiseProduct(grams[static_cast<std::size_t>(m)]);
            const Eigen::MatrixXd kr = kr_skip(run.factors, mode);
            const Eigen::MatrixXd w = unfoldings[static_cast<std::size_t>(mode - 1)] * kr;
            Eigen::MatrixXd b =
                w * Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(v).pseudoInverse();
            for (Index c = 0; c < r; ++c) {
                const double nc = b.col(c).norm();
                run.lambda(c) = nc;
                if (nc > 0)
                    b.col(c) /= nc;
                else
                    b.col(c) = Eigen::VectorXd::Unit(b.rows(), 0);
            }
            run.factors[static_cast<std::size_t>(mode - 1)] = std::move(b);
            grams[static_cast<std::size_t>(mode - 1)] =
                run.factors[static_cast<std::size_t>(mode - 1)].transpose() *
                run.factors[static_cast<std::size_t>(mode - 1)];
        }
        if (use_dense_fit) {
            run.fit = dense_fit();
        } else {
            // Gram-form fit for large tensors.
            Eigen::MatrixXd h = Eigen::MatrixXd::Ones(r, r);
            for (Index m = 0; m < n; ++m) h = h.cwiseProduct(grams[static_cast<std::size_t>(m)]);
            const double model_sq = run.lambda.dot(h * run.lambda);
            const Eigen::MatrixXd krn = kr_skip(run.factors, n);
            const Eigen::MatrixXd wn = unfoldings[static_cast<std::size_t>(n - 1)] * krn;
            double cross = 0.0;
            for (Index c = 0; c < r; ++c)
                cross += run.lambda(c) *
                         run.factors[static_cast<std::size_t>(n - 1)].col(c).dot(wn.col(c));
            const double err_sq = std::max(norm_x * norm_x - 2.0 * cross + model_sq, 0.0);
            run.fit = norm_x > 0 ? 1.0 - std::sqrt(err_sq) / norm_x : 1.0;
        }
        if (std::abs(run.fit - prev_fit) < opts.fit_tol) break;
        prev_fit = run.fit;
    }

    if (!use_dense_fit && total <= 2000000) run.fit = dense_fit();

    // Descending weights, permutation applied to every factor.
    std::vector<Index> perm(static_cast<std::size_t>(r));
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](Index a, Index b) { return run.lambda(a) > run.lambda(b); });
    Eigen::VectorXd lam(r);
    std::vector<Eigen::MatrixXd> sorted(run.factors.size());
    for (std::size_t m = 0; m < run.factors.size(); ++m)
        sorted[m].resize(run.factors[m].rows(), r);
    for (Index c = 0; c < r; ++c) {
        lam(c) = run.lambda(perm[static_cast<std::size_t>(c)]);
        for (std::size_t m = 0; m < run.factors.size(); ++m)
            sorted[m].col(c) = run.factors[m].col(perm[static_cast<std::size_t>(c)]);
    }
    run.lambda = std::move(lam);
    run.factors = std::move(sorted);
    return run;
}

} // namespace

CpFactors cp_als(const DenseTensor& x, Index r, const CpOptions& opts) {
    if (r < 1) throw DomainError("cp_als: rank must be >= 1");
    if (x.order() < 1) throw DomainError("cp_als: tensor order must be >= 1");
    const Index n = x.order();
    const std::vector<Index>& dims = x.shape().dims();

    Index max_rank_bound = std::numeric_limits<Index>::max();
    for (Index m = 1; m <= n; ++m) {
        const Index codim = x.shape().count() / x.shape().extent(m);
        max_rank_bound = std::min(max_rank_bound, codim);
    }
    // CP rank may genuinely exceed dimensions, so this is only informational.
    const bool above_bound = r > std::max<Index>(max_rank_bound, 1);

    std::vector<Eigen::MatrixXd> unfoldings;
    unfoldings.reserve(static_cast<std::size_t>(n));
    for (Index m = 1; m <= n; ++m) unfoldings.push_back(matricize(x, m));
    const double norm_x = frobenius_norm(x);

    AlsRun best;
    best.fit = -2.0;
    const Index restarts = std::max<Index>(opts.restarts, 1);
    for (Index s = 0; s < restarts; ++s) {
        AlsRun run = run_als(unfoldings, dims, r, norm_x, opts,
                             opts.seed + static_cast<std::uint64_t>(s));
        if (run.fit > best.fit) best = std::move(run);
    }

    CpFactors out;
    out.weights = std::move(best.lambda);
    out.factors = std::move(best.factors);
    out.fit = best.fit;
    (void)above_bound;
    return out;
}

// ---------------------------------------------------------------------------
// TT-SVD

Shape TtCores::mode_shape() const {
    std::vector<Index> dims;
    dims.reserve(cores.size());
    for (const auto& c : cores) dims.push_back(c.shape().extent(2));
    return Shape(std::move(dims));
}

DenseTensor TtCores::reconstruct() const {
    const Shape shape = mode_shape();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Ones(1, 1);
    Index left = 1;
    for (std::size_t n = 0; n < cores.size(); ++n) {
        const auto& c = cores[n];
        const Index r0 = c.shape().extent(1);
        const Index jn = c.shape().extent(2);
        const Index r1 = c.shape().extent(3);
        Eigen::Map<const Eigen::MatrixXd> cm(c.data().data(), r0, jn * r1);
        Eigen::MatrixXd next = acc * cm; // (left, jn*r1)
        left *= jn;
        acc = Eigen::Map<Eigen::MatrixXd>(next.data(), left, r1);
    }
    return DenseTensor(shape, std::vector<double>(acc.data(), acc.data() + acc.size()));
}

namespace {

using TruncationRule = std::function<Index(const Eigen::VectorXd&, Index, Index)>;

TtCores tt_svd_impl(const DenseTensor& x, const TruncationRule& keep) {
    const Index n = x.order();
    if (n < 1) throw DomainError("tt_svd: tensor order must be >= 1");
    const auto& dims = x.shape().dims();

    TtCores t;
    t.ranks.assign(static_cast<std::size_t>(n + 1), 1);
    t.cores.reserve(static_cast<std::size_t>(n));

    Eigen::MatrixXd m(dims[0], x.size() / dims[0]);
    std::copy(x.data().begin(), x.data().end(), m.data());

    for (Index k = 1; k < n; ++k) {
        const Index rows = m.rows();
        const Index cols = m.cols();
        linalg::ThinSvd svd = linalg::thin_svd(m);
        Index r = keep(svd.s, rows, cols);
        r = std::clamp<Index>(r, 1, svd.s.size());
        t.ranks[static_cast<std::size_t>(k)] = r;

        const Index jk = dims[static_cast<std::size_t>(k - 1)];
        const Index r_prev = t.ranks[static_cast<std::size_t>(k - 1)];
        Eigen::MatrixXd u = svd.u.leftCols(r);
        t.cores.emplace_back(Shape{r_prev, jk, r},
                             std::vector<double>(u.data(), u.data() + u.size()));

        Eigen::MatrixXd rest = svd.s.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
        const Index jn_next = dims[static_cast<std::size_t>(k)];
        m = Eigen::Map<Eigen::MatrixXd>(rest.data(), r * jn_next, cols / jn_next);
    }
    const Index r_prev = t.ranks[static_cast<std::size_t>(n - 1)];
    t.cores.emplace_back(Shape{r_prev, dims[static_cast<std::size_t>(n - 1)], Index{1}},
                         std::vector<double>(m.data(), m.data() + m.size()));
    return t;
}

} // namespace

TtCores tt_svd(const DenseTensor& x, double eps) {
    const double norm_x = frobenius_norm(x);
    const Index n = x.order();
    const double delta = n > 1 ? eps * norm_x / std::sqrt(static_cast<double>(n - 1)) : 0.0;
    return tt_svd_impl(x, [delta](const Eigen::VectorXd& sv, Index, Index) {
        // Keep the smallest rank whose truncated tail stays within delta.
        double tail = 0.0;
        Index r = sv.size();
        while (r > 1) {
            const double cand = tail + sv(r - 1) * sv(r - 1);
            if (cand > delta * delta) break;
            tail = cand;
            --r;
        }
        return r;
    });
}

TtCores tt_svd_exact(const DenseTensor& x, double tol) {
    return tt_svd_impl(x, [tol](const Eigen::VectorXd& sv, Index rows, Index cols) {
        return linalg::rank_from_singular_values(sv, rows, cols, tol);
    });
}

TtCores tt_left_orthonormalize(TtCores t, Index upto) {
    const Index n = t.order();
    if (upto < 0 || upto > n - 1) throw DomainError("tt_left_orthonormalize: bad range");
    for (Index k = 1; k <= upto; ++k) {
        DenseTensor& core = t.cores[static_cast<std::size_t>(k - 1)];
        const Index r0 = core.shape().extent(1);
        const Index jk = core.shape().extent(2);
        const Index r1 = core.shape().extent(3);
        Eigen::Map<const Eigen::MatrixXd> v(core.data().data(), r0 * jk, r1);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
        const Index rk = std::min(r0 * jk, r1);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r0 * jk, rk);
        Eigen::MatrixXd rmat =
            qr.matrixQR().topRows(rk).triangularView<Eigen::Upper>();

        core = DenseTensor(Shape{r0, jk, rk}, std::vector<double>(q.data(), q.data() + q.size()));
        t.ranks[static_cast<std::size_t>(k)] = rk;

        DenseTensor& next = t.cores[static_cast<std::size_t>(k)];
        const Index nj = next.shape().extent(2);
        const Index nr = next.shape().extent(3);
        Eigen::Map<const Eigen::MatrixXd> h(next.data().data(), r1, nj * nr);
        Eigen::MatrixXd merged = rmat * h;
        next = DenseTensor(Shape{rk, nj, nr},
                           std::vector<double>(merged.data(), merged.data() + merged.size()));
    }
    return t;
}

TtCores tt_right_orthonormalize(TtCores t, Index downto) {
    const Index n = t.order();
    if (downto < 2 || downto > n) throw DomainError("tt_right_orthonormalize: bad range");
    for (Index k = n; k >= downto; --k) {
        DenseTensor& core = t.cores[static_cast<std::size_t>(k - 1)];
        const Index r0 = core.shape().extent(1);
        const Index jk = core.shape().extent(2);
        const Index r1 = core.shape().extent(3);
        // LQ through a QR of the transpose of the horizontal unfolding.
        Eigen::Map<const Eigen::MatrixXd> h(core.data().data(), r0, jk * r1);
        Eigen::MatrixXd ht = h.transpose();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(ht);
        const Index rk = std::min(r0, jk * r1);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(jk * r1, rk);
        Eigen::MatrixXd l = qr.matrixQR().topRows(rk).triangularView<Eigen::Upper>();
        l.transposeInPlace(); // r0 x rk

        Eigen::MatrixXd qt = q.transpose(); // rk x jk*r1
        core = DenseTensor(Shape{rk, jk, r1},
                           std::vector<double>(qt.data(), qt.data() + qt.size()));
        t.ranks[static_cast<std::size_t>(k - 1)] = rk;

        DenseTensor& prev = t.cores[static_cast<std::size_t>(k - 2)];
        const Index pr = prev.shape().extent(1);
        const Index pj = prev.shape().extent(2);
        Eigen::Map<const Eigen::MatrixXd> pv(prev.data().data(), pr * pj, r0);
        Eigen::MatrixXd merged = pv * l;
        prev = DenseTensor(Shape{pr, pj, rk},
                           std::vector<double>(merged.data(), merged.data() + merged.size()));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Generalized CPD / TTD

Index GenCpFactors::kronecker_rank() const {
    if (components.empty()) return 0;
    return components.front().shape().extent(1);
}

PairedShape GenCpFactors::pshape() const {
    std::vector<std::pair<Index, Index>> pairs;
    for (const auto& c : components) pairs.emplace_back(c.shape().extent(2), c.shape().extent(3));
    return PairedShape(std::move(pairs));
}

Eigen::MatrixXd GenCpFactors::slice(Index n, Index r) const {
    const DenseTensor& c = components[static_cast<std::size_t>(n - 1)];
    const Index rr = c.shape().extent(1);
    const Index jn = c.shape().extent(2);
    const Index in = c.shape().extent(3);
    Eigen::MatrixXd m(jn, in);
    for (Index i = 0; i < in; ++i)
        for (Index j = 0; j < jn; ++j) m(j, i) = c[(r - 1) + rr * (j + jn * i)];
    return m;
}

PairedShape GenTtCores::pshape() const {
    std::vector<std::pair<Index, Index>> pairs;
    for (const auto& c : cores) pairs.emplace_back(c.shape().extent(2), c.shape().extent(3));
    return PairedShape(std::move(pairs));
}

namespace {

// Pairwise reshape (J1 I1, ..., JN IN); a pure relabel of the interleaved data.
DenseTensor pairwise_reshape(const EvenPairedTensor& a) {
    std::vector<Index> dims;
    for (const auto& [j, i] : a.pshape().pairs()) dims.push_back(j * i);
    return reshape(a.tensor(), Shape{std::move(dims)});
}

} // namespace

GenCpFactors generalized_cpd(const EvenPairedTensor& a, Index r, const CpOptions& opts) {
    const DenseTensor folded = pairwise_reshape(a);
    const CpFactors cp = cp_als(folded, r, opts);
    const Index n = a.order();
    GenCpFactors out;
    out.components.reserve(static_cast<std::size_t>(n));
    for (Index m = 1; m <= n; ++m) {
        const auto [jn, in] = a.pshape().pair(m);
        DenseTensor comp(Shape{r, jn, in});
        const auto& f = cp.factors[static_cast<std::size_t>(m - 1)];
        for (Index rr = 0; rr < r; ++rr) {
            const double scale = std::pow(cp.weights(rr), 1.0 / static_cast<double>(n));
            for (Index q = 0; q < jn * in; ++q) comp[rr + r * q] = scale * f(q, rr);
        }
        out.components.push_back(std::move(comp));
    }
    return out;
}

namespace {

GenTtCores fold_gen_cores(TtCores t, const PairedShape& ps) {
    GenTtCores out;
    out.ranks = std::move(t.ranks);
    out.cores.reserve(t.cores.size());
    for (Index n = 1; n <= static_cast<Index>(t.cores.size()); ++n) {
        DenseTensor& c = t.cores[static_cast<std::size_t>(n - 1)];
        const auto [jn, in] = ps.pair(n);
        out.cores.push_back(
            reshape(c, Shape{c.shape().extent(1), jn, in, c.shape().extent(3)}));
    }
    return out;
}

} // namespace

GenTtCores generalized_ttd(const EvenPairedTensor& a, double eps) {
    return fold_gen_cores(tt_svd(pairwise_reshape(a), eps), a.pshape());
}

GenTtCores generalized_ttd_exact(const EvenPairedTensor& a, double tol) {
    return fold_gen_cores(tt_svd_exact(pairwise_reshape(a), tol), a.pshape());
}

EvenPairedTensor gen_cpd_to_full(const GenCpFactors& f) {
    const PairedShape ps = f.pshape();
    DenseTensor acc(ps.interleaved());
    const Index r = f.kronecker_rank();
    for (Index rr = 1; rr <= r; ++rr) {
        DenseTensor term = DenseTensor::scalar(1.0);
        for (Index n = 1; n <= f.order(); ++n) {
            const Eigen::MatrixXd s = f.slice(n, rr);
            term = outer(term, linalg::from_matrix(s));
        }
        acc += reshape(term, acc.shape());
    }
    return EvenPairedTensor(ps, std::move(acc));
}

EvenPairedTensor gen_ttd_to_full(const GenTtCores& t) {
    const PairedShape ps = t.pshape();
    TtCores flat;
    flat.ranks = t.ranks;
    for (const auto& c : t.cores) {
        const Index r0 = c.shape().extent(1);
        const Index jn = c.shape().extent(2);
        const Index in = c.shape().extent(3);
        const Index r1 = c.shape().extent(4);
        flat.cores.push_back(reshape(c, Shape{r0, jn * in, r1}));
    }
    return EvenPairedTensor(ps, reshape(flat.reconstruct(), ps.interleaved()));
}

GenCpFactors einstein_compose_cpd(const GenCpFactors& a, const GenCpFactors& b) {
    if (a.order() != b.order()) throw DomainError("einstein_compose_cpd: order mismatch");
    if (a.pshape().col_shape() != b.pshape().row_shape())
        throw DomainError("einstein_compose_cpd: inner shapes do not conform");
    const Index r = a.kronecker_rank();
    const Index s = b.kronecker_rank();
    GenCpFactors out;
    for (Index n = 1; n <= a.order(); ++n) {
        const Index jn = a.pshape().pair(n).first;
        const Index in = b.pshape().pair(n).second;
        DenseTensor comp(Shape{r * s, jn, in});
        for (Index sr = 1; sr <= s; ++sr) {
            const Eigen::MatrixXd bs = b.slice(n, sr);
            for (Index ar = 1; ar <= r; ++ar) {
                const Eigen::MatrixXd prod = a.slice(n, ar) * bs;
                const Index t = (ar - 1) + r * (sr - 1); // ivec({r,s},{R,S}), 0-based
                for (Index q = 0; q < jn * in; ++q)
                    comp[t + r * s * q] = prod(q % jn, q / jn);
            }
        }
        out.components.push_back(std::move(comp));
    }
    return out;
}

GenTtCores einstein_compose_ttd(const GenTtCores& a, const GenTtCores& b) {
    if (a.order() != b.order()) throw DomainError("einstein_compose_ttd: order mismatch");
    if (a.pshape().col_shape() != b.pshape().row_shape())
        throw DomainError("einstein_compose_ttd: inner shapes do not conform");
    GenTtCores out;
    out.ranks.resize(a.ranks.size());
    for (std::size_t k = 0; k < a.ranks.size(); ++k) out.ranks[k] = a.ranks[k] * b.ranks[k];
    for (Index n = 1; n <= a.order(); ++n) {
        const DenseTensor& ca = a.cores[static_cast<std::size_t>(n - 1)];
        const DenseTensor& cb = b.cores[static_cast<std::size_t>(n - 1)];
        const Index ra0 = ca.shape().extent(1), jn = ca.shape().extent(2),
                    kn = ca.shape().extent(3), ra1 = ca.shape().extent(4);
        const Index rb0 = cb.shape().extent(1), in = cb.shape().extent(3),
                    rb1 = cb.shape().extent(4);
        DenseTensor ce(Shape{ra0 * rb0, jn, in, ra1 * rb1});
        for (Index t1b = 0; t1b < rb1; ++t1b)
            for (Index t1a = 0; t1a < ra1; ++t1a)
                for (Index i = 0; i < in; ++i)
                    for (Index j = 0; j < jn; ++j)
                        for (Index t0b = 0; t0b < rb0; ++t0b)
                            for (Index t0a = 0; t0a < ra0; ++t0a) {
                                double acc = 0.0;
                                for (Index k = 0; k < kn; ++k)
                                    acc += ca[t0a + ra0 * (j + jn * (k + kn * t1a))] *
                                           cb[t0b + rb0 * (k + kn * (i + in * t1b))];
                                const Index t0 = t0a + ra0 * t0b;
                                const Index t1 = t1a + ra1 * t1b;
                                ce[t0 + ra0 * rb0 * (j + jn * (i + in * t1))] = acc;
                            }
        out.cores.push_back(std::move(ce));
    }
    return out;
}

GenTtCores gen_tt_transpose(const GenTtCores& a) {
    GenTtCores out;
    out.ranks = a.ranks;
    out.cores.reserve(a.cores.size());
    for (const auto& c : a.cores) out.cores.push_back(s_transpose(c, Permutation{1, 3, 2, 4}));
    return out;
}

TtCores tt_round(TtCores t, const std::vector<Index>& bond_caps) {
    const Index n = t.order();
    if (static_cast<Index>(bond_caps.size()) != n - 1)
        throw DomainError("tt_round: need one cap per internal bond");
    t = tt_left_orthonormalize(std::move(t), n - 1);
    for (Index k = n; k >= 2; --k) {
        DenseTensor& core = t.cores[static_cast<std::size_t>(k - 1)];
        const Index r0 = core.shape().extent(1);
        const Index jk = core.shape().extent(2);
        const Index r1 = core.shape().extent(3);
        Eigen::Map<const Eigen::MatrixXd> h(core.data().data(), r0, jk * r1);
        const linalg::ThinSvd svd = linalg::thin_svd(h);
        const Index r = std::clamp<Index>(
            std::min(bond_caps[static_cast<std::size_t>(k - 2)], svd.s.size()), 1, svd.s.size());
        Eigen::MatrixXd vt = svd.v.leftCols(r).transpose();
        core = DenseTensor(Shape{r, jk, r1},
                           std::vector<double>(vt.data(), vt.data() + vt.size()));
        t.ranks[static_cast<std::size_t>(k - 1)] = r;

        Eigen::MatrixXd carry = svd.u.leftCols(r) * svd.s.head(r).asDiagonal();
        DenseTensor& prev = t.cores[static_cast<std::size_t>(k - 2)];
        const Index pr = prev.shape().extent(1);
        const Index pj = prev.shape().extent(2);
        Eigen::Map<const Eigen::MatrixXd> pv(prev.data().data(), pr * pj, r0);
        Eigen::MatrixXd merged = pv * carry;
        prev = DenseTensor(Shape{pr, pj, r},
                           std::vector<double>(merged.data(), merged.data() + merged.size()));
    }
    return t;
}

GenTtCores gen_tt_round(const GenTtCores& t, const std::vector<Index>& bond_caps) {
    TtCores flat;
    flat.ranks = t.ranks;
    for (const auto& c : t.cores) {
        const Index r0 = c.shape().extent(1);
        const Index jn = c.shape().extent(2);
        const Index in = c.shape().extent(3);
        const Index r1 = c.shape().extent(4);
        flat.cores.push_back(reshape(c, Shape{r0, jn * in, r1}));
    }
    flat = tt_round(std::move(flat), bond_caps);
    return fold_gen_cores(std::move(flat), t.pshape());
}

namespace {

// Grouped transpose A~ with all row modes before all column modes.
DenseTensor grouped_transpose(const EvenPairedTensor& a) {
    const Index n = a.order();
    std::vector<Index> image(static_cast<std::size_t>(2 * n));
    for (Index k = 1; k <= n; ++k) {
        image[static_cast<std::size_t>(k - 1)] = 2 * k - 1;
        image[static_cast<std::size_t>(n + k - 1)] = 2 * k;
    }
    return s_transpose(a.tensor(), Permutation(std::move(image)));
}

} // namespace

TtCores ttd_permuted(const EvenPairedTensor& a, double eps) {
    return tt_svd(grouped_transpose(a), eps);
}

TtCores ttd_permuted_exact(const EvenPairedTensor& a, double tol) {
    return tt_svd_exact(grouped_transpose(a), tol);
}

TtCores ttd_permuted_exact(const GenTtCores& a, double tol) {
    return ttd_permuted_exact(gen_ttd_to_full(a), tol);
}

Index unfolding_rank_via_ttd(const EvenPairedTensor& a, double tol) {
    if (frobenius_norm(a.tensor()) == 0.0) return 0;
    const TtCores t = ttd_permuted_exact(a, tol);
    return t.ranks[static_cast<std::size_t>(a.order())];
}

// ---------------------------------------------------------------------------
// k-rank and the CPD rank certificate

Index k_rank(const Eigen::MatrixXd& a, double tol, Index max_cols) {
    const Index cols = a.cols();
    if (cols == 0) return 0;
    if (cols > max_cols)
        throw CapabilityError("k_rank: " + std::to_string(cols) +
                              " columns exceed the exhaustive-search cap of " +
                              std::to_string(max_cols));
    const Index kmax = std::min(cols, a.rows());
    Index result = 0;
    std::vector<Index> pick;
    for (Index k = 1; k <= kmax; ++k) {
        pick.resize(static_cast<std::size_t>(k));
        std::iota(pick.begin(), pick.end(), 0);
        bool all_independent = true;
        while (true) {
            Eigen::MatrixXd sub(a.rows(), k);
            for (Index c = 0; c < k; ++c) sub.col(c) = a.col(pick[static_cast<std::size_t>(c)]);
            if (linalg::numerical_rank(sub, tol) < k) {
                all_independent = false;
                break;
            }
            // next combination
            Index i = k - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == cols - k + i) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (Index j = i + 1; j < k; ++j)
                pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
        }
        if (!all_independent) break;
        result = k;
    }
    return result;
}

RankCertificate cpd_rank_certificate(const CpFactors& cp) {
    RankCertificate cert;
    const Index modes = static_cast<Index>(cp.factors.size());
    if (modes < 2 || modes % 2 != 0) {
        cert.note = "factor count is not an even order";
        return cert;
    }
    const Index n = modes / 2;
    const Index r = cp.rank();
    Index odd_sum = 0, even_sum = 0;
    bool all_positive = true;
    for (Index m = 1; m <= modes; ++m) {
        const Index kr = k_rank(cp.factors[static_cast<std::size_t>(m - 1)]);
        if (kr < 1) all_positive = false;
        if (m % 2 == 1) {
            cert.odd_k_ranks.push_back(kr);
            odd_sum += kr;
        } else {
            cert.even_k_ranks.push_back(kr);
            even_sum += kr;
        }
    }
    if (all_positive && odd_sum >= r + n - 1 && even_sum >= r + n - 1) {
        cert.certified = true;
        cert.rank = r;
    } else {
        cert.note = "k-rank sums do not reach R + N - 1";
    }
    return cert;
}

RankCertificate cpd_rank_certificate(const GenCpFactors& f, double split_tol) {
    RankCertificate cert;
    const Index r = f.kronecker_rank();
    const Index n = f.order();
    CpFactors cp;
    cp.weights = Eigen::VectorXd::Ones(r);
    cp.factors.assign(static_cast<std::size_t>(2 * n), Eigen::MatrixXd());
    for (Index m = 1; m <= n; ++m) {
        const auto [jn, in] = f.pshape().pair(m);
        Eigen::MatrixXd odd(jn, r), even(in, r);
        for (Index rr = 1; rr <= r; ++rr) {
            const Eigen::MatrixXd s = f.slice(m, rr);
            const linalg::ThinSvd svd = linalg::thin_svd(s);
            if (svd.s.size() > 1 && svd.s(1) > split_tol * svd.s(0)) {
                cert.note = "component slice is not rank one; order-2N factors unavailable";
                return cert;
            }
            odd.col(rr - 1) = svd.u.col(0);
            even.col(rr - 1) = svd.v.col(0);
            cp.weights(rr - 1) *= svd.s.size() > 0 ? svd.s(0) : 0.0;
        }
        cp.factors[static_cast<std::size_t>(2 * m - 2)] = std::move(odd);
        cp.factors[static_cast<std::size_t>(2 * m - 1)] = std::move(even);
    }
    return cpd_rank_certificate(cp);
}

Index estimate_kronecker_rank(const EvenPairedTensor& a, const CpOptions& opts, double fit_goal) {
    const DenseTensor folded = pairwise_reshape(a);
    if (frobenius_norm(folded) == 0.0) return 0;
    Index bound = std::numeric_limits<Index>::max();
    for (Index m = 1; m <= folded.order(); ++m)
        bound = std::min(bound, folded.shape().count() / folded.shape().extent(m));
    bound = std::max<Index>(bound, 1);

    auto fit_at = [&](Index r) { return cp_als(folded, r, opts).fit; };

    Index lo = 1;                  // largest rank known to fail, plus one semantics below
    Index hi = 0;                  // smallest rank known to succeed
    if (fit_at(1) >= fit_goal) return 1;
    Index r = 2;
    while (r < bound && fit_at(r) < fit_goal) {
        lo = r;
        r *= 2;
    }
    hi = std::min(r, bound);
    if (hi == bound && fit_at(bound) < fit_goal) return bound;
    // Invariant: fit(lo) < goal <= fit(hi).
    while (hi - lo > 1) {
        const Index mid = lo + (hi - lo) / 2;
        if (fit_at(mid) >= fit_goal)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

} // namespace mlti

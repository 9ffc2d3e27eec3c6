#include "mlti/einstein.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mlti/rng.hpp"
#include "mlti/tensor_ops.hpp"

namespace mlti {

namespace {

struct PairStrides {
    std::vector<Index> row; // stride of j_n in the interleaved layout
    std::vector<Index> col; // stride of i_n
};

PairStrides pair_strides(const EvenPairedTensor& a) {
    const auto ilv = ivec_strides(a.tensor().shape());
    const std::size_t n = static_cast<std::size_t>(a.order());
    PairStrides s;
    s.row.resize(n);
    s.col.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        s.row[k] = ilv[2 * k];
        s.col[k] = ilv[2 * k + 1];
    }
    return s;
}

// Odometer step over `dims`, advancing `off` by `stride` per mode.
inline void step(std::vector<Index>& counter, const std::vector<Index>& dims,
                 const std::vector<Index>& stride, Index& off) {
    for (std::size_t k = 0; k < counter.size(); ++k) {
        if (++counter[k] < dims[k]) {
            off += stride[k];
            return;
        }
        counter[k] = 0;
        off -= stride[k] * (dims[k] - 1);
    }
}

} // namespace

DenseTensor einstein_apply(const EvenPairedTensor& a, const DenseTensor& x) {
    if (x.shape() != a.pshape().col_shape())
        throw DomainError("einstein_apply: operand shape " + x.shape().str() +
                          " does not match column shape " + a.pshape().col_shape().str());
    const Shape out_shape = a.pshape().row_shape();
    const PairStrides st = pair_strides(a);
    const auto& jd = out_shape.dims();
    const auto& id = x.shape().dims();
    const std::size_t n = jd.size();

    DenseTensor out(out_shape);
    const double* ad = a.tensor().data().data();
    std::vector<Index> jc(n, 0), ic(n, 0);
    Index a_base = 0;
    for (Index of = 0; of < out.size(); ++of) {
        double acc = 0.0;
        Index a_off = a_base;
        std::fill(ic.begin(), ic.end(), 0);
        for (Index xf = 0; xf < x.size(); ++xf) {
            acc += ad[a_off] * x[xf];
            step(ic, id, st.col, a_off);
        }
        out[of] = acc;
        step(jc, jd, st.row, a_base);
    }
    return out;
}

EvenPairedTensor einstein_compose(const EvenPairedTensor& a, const EvenPairedTensor& b) {
    if (a.pshape().col_shape() != b.pshape().row_shape())
        throw DomainError("einstein_compose: column shape " + a.pshape().col_shape().str() +
                          " does not match row shape " + b.pshape().row_shape().str());
    const PairedShape out_ps =
        PairedShape::from_row_col(a.pshape().row_shape(), b.pshape().col_shape());
    const PairStrides sa = pair_strides(a);
    const PairStrides sb = pair_strides(b);
    const std::size_t n = static_cast<std::size_t>(a.order());

    // Output odometer over the interleaved (j,i) modes: j_n advances a's row
    // offset, i_n advances b's column offset.
    const Shape out_shape = out_ps.interleaved();
    const auto& od = out_shape.dims();
    std::vector<Index> stride_a(2 * n, 0), stride_b(2 * n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        stride_a[2 * k] = sa.row[k];
        stride_b[2 * k + 1] = sb.col[k];
    }
    const Shape kshape = a.pshape().col_shape();
    const auto& kd = kshape.dims();

    DenseTensor out(out_shape);
    const double* ad = a.tensor().data().data();
    const double* bd = b.tensor().data().data();
    std::vector<Index> oc(2 * n, 0), kc(n, 0);
    Index a_base = 0, b_base = 0;
    const Index ksize = kshape.count();
    for (Index of = 0; of < out.size(); ++of) {
        double acc = 0.0;
        Index a_off = a_base, b_off = b_base;
        std::fill(kc.begin(), kc.end(), 0);
        for (Index kf = 0; kf < ksize; ++kf) {
            acc += ad[a_off] * bd[b_off];
            // Single odometer drives both contraction offsets.
            for (std::size_t k = 0; k < n; ++k) {
                if (++kc[k] < kd[k]) {
                    a_off += sa.col[k];
                    b_off += sb.row[k];
                    break;
                }
                kc[k] = 0;
                a_off -= sa.col[k] * (kd[k] - 1);
                b_off -= sb.row[k] * (kd[k] - 1);
            }
        }
        out[of] = acc;
        // Two-target odometer for the output modes.
        for (std::size_t k = 0; k < 2 * n; ++k) {
            if (++oc[k] < od[k]) {
                a_base += stride_a[k];
                b_base += stride_b[k];
                break;
            }
            oc[k] = 0;
            a_base -= stride_a[k] * (od[k] - 1);
            b_base -= stride_b[k] * (od[k] - 1);
        }
    }
    return EvenPairedTensor(out_ps, std::move(out));
}

EvenPairedTensor einstein_power(const EvenPairedTensor& a, Index k) {
    if (!a.is_square()) throw DomainError("einstein_power: tensor is not square");
    if (k < 0) throw DomainError("einstein_power: negative power");
    EvenPairedTensor acc = u_identity(a.pshape().row_shape());
    EvenPairedTensor base = a;
    while (k > 0) {
        if (k & 1) acc = einstein_compose(acc, base);
        k >>= 1;
        if (k > 0) base = einstein_compose(base, base);
    }
    return acc;
}

Eigen::MatrixXd phi(const EvenPairedTensor& a) {
    const Index n = a.order();
    std::vector<Index> rows, cols;
    for (Index k = 1; k <= n; ++k) {
        rows.push_back(2 * k - 1);
        cols.push_back(2 * k);
    }
    const DenseTensor m = rc_unfold(a.tensor(), rows, cols);
    return linalg::as_matrix(m);
}

EvenPairedTensor phi_inverse(const Eigen::MatrixXd& m, const PairedShape& pshape) {
    if (m.rows() != pshape.row_shape().count() || m.cols() != pshape.col_shape().count())
        throw DomainError("phi_inverse: matrix is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", paired shape needs " +
                          std::to_string(pshape.row_shape().count()) + "x" +
                          std::to_string(pshape.col_shape().count()));
    // (PiJ x PiI) -> (J1..JN, I1..IN) is a pure relabel; then interleave.
    std::vector<Index> grouped_dims = pshape.row_shape().dims();
    const auto cd = pshape.col_shape().dims();
    grouped_dims.insert(grouped_dims.end(), cd.begin(), cd.end());
    DenseTensor grouped(Shape{std::move(grouped_dims)},
                        std::vector<double>(m.data(), m.data() + m.size()));
    const Index n = pshape.order();
    std::vector<Index> image(static_cast<std::size_t>(2 * n));
    for (Index k = 1; k <= n; ++k) {
        image[static_cast<std::size_t>(2 * k - 2)] = k;     // J_k from position k
        image[static_cast<std::size_t>(2 * k - 1)] = n + k; // I_k from position N+k
    }
    return EvenPairedTensor(pshape, s_transpose(grouped, Permutation(std::move(image))));
}

EvenPairedTensor u_transpose(const EvenPairedTensor& a) {
    const Index n = a.order();
    std::vector<Index> image(static_cast<std::size_t>(2 * n));
    for (Index k = 1; k <= n; ++k) {
        image[static_cast<std::size_t>(2 * k - 2)] = 2 * k;
        image[static_cast<std::size_t>(2 * k - 1)] = 2 * k - 1;
    }
    return EvenPairedTensor(a.pshape().transposed(),
                            s_transpose(a.tensor(), Permutation(std::move(image))));
}

bool is_weakly_symmetric(const EvenPairedTensor& a, double tol) {
    if (!a.is_square()) return false;
    const EvenPairedTensor at = u_transpose(a);
    return frobenius_norm(a.tensor() - at.tensor()) <= tol * std::max(1.0, frobenius_norm(a.tensor()));
}

namespace {

// Flat offsets of the diagonal entries (j,j,...,j,j) of a square paired shape.
std::vector<Index> diagonal_offsets(const PairedShape& ps) {
    const Shape rows = ps.row_shape();
    const auto ilv = ivec_strides(ps.interleaved());
    const std::size_t n = static_cast<std::size_t>(ps.order());
    std::vector<Index> combined(n);
    for (std::size_t k = 0; k < n; ++k) combined[k] = ilv[2 * k] + ilv[2 * k + 1];
    std::vector<Index> offs(static_cast<std::size_t>(rows.count()));
    const auto& jd = rows.dims();
    std::vector<Index> jc(n, 0);
    Index off = 0;
    for (std::size_t p = 0; p < offs.size(); ++p) {
        offs[p] = off;
        for (std::size_t k = 0; k < n; ++k) {
            if (++jc[k] < jd[k]) {
                off += combined[k];
                break;
            }
            jc[k] = 0;
            off -= combined[k] * (jd[k] - 1);
        }
    }
    return offs;
}

} // namespace

EvenPairedTensor u_identity(const Shape& j) {
    return u_diagonal(DenseTensor(j, std::vector<double>(static_cast<std::size_t>(j.count()), 1.0)));
}

EvenPairedTensor u_diagonal(const DenseTensor& diag) {
    const PairedShape ps = PairedShape::square(diag.shape());
    EvenPairedTensor out(ps);
    const auto offs = diagonal_offsets(ps);
    for (Index p = 0; p < diag.size(); ++p) out.tensor()[offs[static_cast<std::size_t>(p)]] = diag[p];
    return out;
}

EvenPairedTensor subtract_scaled_identity(const EvenPairedTensor& a, double lambda) {
    if (!a.is_square()) throw DomainError("subtract_scaled_identity: tensor is not square");
    EvenPairedTensor out = a;
    const auto offs = diagonal_offsets(a.pshape());
    for (Index off : offs) out.tensor()[off] -= lambda;
    return out;
}

EvenPairedTensor u_inverse(const EvenPairedTensor& a) {
    if (!a.is_square()) throw DomainError("u_inverse: tensor is not square");
    const Eigen::MatrixXd m = phi(a);
    const Eigen::VectorXd sv = linalg::singular_values(m);
    const Index r = linalg::rank_from_singular_values(sv, m.rows(), m.cols(), linalg::kRankTol);
    if (r < m.rows()) {
        const double cond = sv(0) > 0 && sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1)
                                                               : std::numeric_limits<double>::infinity();
        throw SingularError("u_inverse: unfolding is numerically singular", cond);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    return phi_inverse(lu.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols())), a.pshape());
}

Index unfolding_rank(const EvenPairedTensor& a, double tol) {
    return linalg::numerical_rank(phi(a), tol);
}

double unfolding_det(const EvenPairedTensor& a) {
    if (!a.is_square()) throw DomainError("unfolding_det: tensor is not square");
    return phi(a).determinant();
}

bool is_u_positive_definite(const EvenPairedTensor& a, double tol) {
    if (!a.is_square()) throw DomainError("is_u_positive_definite: tensor is not square");
    const Eigen::MatrixXd m = phi(a);
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > tol;
}

ProbeResult m_positive_probe(const EvenPairedTensor& a, Index trials, std::uint64_t rng_seed) {
    if (!a.is_square()) throw DomainError("m_positive_probe: tensor is not square");
    Rng rng(rng_seed);
    const Shape rows = a.pshape().row_shape();
    for (Index t = 0; t < trials; ++t) {
        DenseTensor x = DenseTensor::scalar(1.0);
        for (Index n = 1; n <= rows.order(); ++n) {
            DenseTensor v(Shape{rows.extent(n)});
            double norm2 = 0.0;
            do {
                for (Index k = 0; k < v.size(); ++k) v[k] = rng.normal();
                norm2 = inner(v, v);
            } while (norm2 == 0.0);
            x = outer(x, v);
        }
        x = reshape(x, rows); // drop the leading scalar mode
        const double q = inner(x, einstein_apply(a, x));
        if (q <= 0.0) return ProbeResult::Falsified;
    }
    return ProbeResult::NotFalsified;
}

std::vector<UEigenPair> u_eigen(const EvenPairedTensor& a) {
    if (!a.is_square()) throw DomainError("u_eigen: tensor is not square");
    const Eigen::MatrixXd m = phi(a);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw ConvergenceError("u_eigen: eigensolver did not converge", 0.0);

    const Shape state = a.pshape().row_shape();
    const Index sz = state.count();
    const Eigen::MatrixXcd vectors = es.eigenvectors();
    std::vector<UEigenPair> out;
    out.reserve(static_cast<std::size_t>(sz));
    for (Index k = 0; k < sz; ++k) {
        UEigenPair p;
        p.value = es.eigenvalues()(k);
        p.tensor_re = DenseTensor(state);
        p.tensor_im = DenseTensor(state);
        const auto col = vectors.col(k);
        double norm2 = 0.0;
        for (Index q = 0; q < sz; ++q) norm2 += std::norm(col(q));
        const double scale = norm2 > 0 ? 1.0 / std::sqrt(norm2) : 1.0;
        for (Index q = 0; q < sz; ++q) {
            p.tensor_re[q] = col(q).real() * scale;
            p.tensor_im[q] = col(q).imag() * scale;
        }
        out.push_back(std::move(p));
    }
    std::stable_sort(out.begin(), out.end(), [](const UEigenPair& l, const UEigenPair& r) {
        const double al = std::abs(l.value), ar = std::abs(r.value);
        if (al != ar) return al > ar;
        if (l.value.real() != r.value.real()) return l.value.real() > r.value.real();
        return l.value.imag() > r.value.imag();
    });
    return out;
}

double u_spectral_radius(const EvenPairedTensor& a) {
    if (!a.is_square()) throw DomainError("u_spectral_radius: tensor is not square");
    return phi(a).eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

enum class BicgStatus { Converged, MaxIter, Breakdown };

struct BicgResult {
    DenseTensor x;
    double rel_residual = 0.0;
    BicgStatus status = BicgStatus::Converged;
};

// Classic BiCG on the Einstein-product operator; only applies a and a^T.
// The shadow residual is a fixed pseudo-random tensor: with rt0 = r0 a
// Rayleigh-quotient shift makes the first denominator <r0, A r0> vanish
// identically, which would stop the iteration before it starts.
BicgResult bicg(const EvenPairedTensor& a, const DenseTensor& rhs, double tol, Index max_iter) {
    const double rhs_norm = frobenius_norm(rhs);
    BicgResult res;
    res.x = DenseTensor(rhs.shape());
    if (rhs_norm == 0.0) return res;

    const EvenPairedTensor at = u_transpose(a);
    DenseTensor r = rhs;
    DenseTensor rt(rhs.shape());
    {
        Rng shadow(0x5eedb1c6ull);
        for (Index i = 0; i < rt.size(); ++i) rt[i] = shadow.normal();
        if (std::abs(inner(rt, r)) <= 1e-12 * frobenius_norm(rt) * rhs_norm) rt = rhs;
    }
    DenseTensor p = r;
    DenseTensor pt = rt;
    double rho = inner(rt, r);

    for (Index it = 0; it < max_iter; ++it) {
        res.rel_residual = frobenius_norm(r) / rhs_norm;
        if (res.rel_residual <= tol) {
            res.status = BicgStatus::Converged;
            return res;
        }
        const DenseTensor q = einstein_apply(a, p);
        const DenseTensor qt = einstein_apply(at, pt);
        const double denom = inner(pt, q);
        if (std::abs(denom) <= 1e-14 * (frobenius_norm(pt) * frobenius_norm(q)) ||
            denom == 0.0) {
            res.status = BicgStatus::Breakdown;
            return res;
        }
        const double alpha = rho / denom;
        res.x += alpha * p;
        r -= alpha * q;
        rt -= alpha * qt;
        const double rho_next = inner(rt, r);
        if (rho_next == 0.0 ||
            std::abs(rho_next) <= 1e-16 * (frobenius_norm(rt) * frobenius_norm(r))) {
            res.rel_residual = frobenius_norm(r) / rhs_norm;
            res.status = res.rel_residual <= tol ? BicgStatus::Converged : BicgStatus::Breakdown;
            return res;
        }
        const double beta = rho_next / rho;
        p = r + beta * p;
        pt = rt + beta * pt;
        rho = rho_next;
    }
    res.rel_residual = frobenius_norm(r) / rhs_norm;
    res.status = res.rel_residual <= tol ? BicgStatus::Converged : BicgStatus::MaxIter;
    return res;
}

} // namespace

DenseTensor hobg_solve(const EvenPairedTensor& a, const DenseTensor& rhs, double tol,
                       Index max_iter) {
    if (!a.is_square()) throw DomainError("hobg_solve: tensor is not square");
    if (rhs.shape() != a.pshape().row_shape())
        throw DomainError("hobg_solve: right-hand side shape mismatch");
    if (max_iter <= 0) max_iter = 4 * rhs.size() + 20;
    BicgResult res = bicg(a, rhs, tol, max_iter);
    if (res.status == BicgStatus::Converged) return res.x;
    throw ConvergenceError(res.status == BicgStatus::Breakdown
                               ? "hobg_solve: biconjugate-gradient breakdown"
                               : "hobg_solve: maximum iterations exceeded",
                           res.rel_residual);
}

UEigenPair horqi(const EvenPairedTensor& a, const DenseTensor& x0, double tol, Index max_iter) {
    if (!a.is_square()) throw DomainError("horqi: tensor is not square");
    if (x0.shape() != a.pshape().row_shape()) throw DomainError("horqi: start tensor shape mismatch");
    const double n0 = frobenius_norm(x0);
    if (n0 == 0.0) throw DomainError("horqi: start tensor must be nonzero");

    DenseTensor x = (1.0 / n0) * x0;
    DenseTensor ax = einstein_apply(a, x);
    double lambda = inner(x, ax);
    double residual = frobenius_norm(ax - lambda * x);
    const Index inner_iter = 8 * x.size() + 40;

    for (Index k = 0; k < max_iter; ++k) {
        if (residual <= tol) {
            UEigenPair p;
            p.value = lambda;
            p.tensor_re = x;
            p.tensor_im = DenseTensor(x.shape());
            return p;
        }
        BicgResult sol = bicg(subtract_scaled_identity(a, lambda), x, 1e-10, inner_iter);
        if (sol.status == BicgStatus::Breakdown || frobenius_norm(sol.x) == 0.0) {
            // The shift is (numerically) an exact eigenvalue; nudge it off.
            const double nudged = lambda + 1e-10 * (1.0 + std::abs(lambda));
            sol = bicg(subtract_scaled_identity(a, nudged), x, 1e-10, inner_iter);
            if (sol.status == BicgStatus::Breakdown || frobenius_norm(sol.x) == 0.0) {
                if (residual <= tol) break;
                throw ConvergenceError("horqi: shifted solve breakdown", residual);
            }
        }
        x = (1.0 / frobenius_norm(sol.x)) * sol.x;
        ax = einstein_apply(a, x);
        lambda = inner(x, ax);
        residual = frobenius_norm(ax - lambda * x);
    }
    if (residual <= tol) {
        UEigenPair p;
        p.value = lambda;
        p.tensor_re = x;
        p.tensor_im = DenseTensor(x.shape());
        return p;
    }
    throw ConvergenceError("horqi: maximum iterations exceeded", residual);
}

} // namespace mlti

#include "mlti/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

namespace mlti::linalg {

Eigen::Map<const Eigen::MatrixXd> as_matrix(const DenseTensor& t) {
    if (t.order() > 2) throw DomainError("as_matrix: tensor order exceeds 2");
    const Index rows = t.order() >= 1 ? t.shape().extent(1) : 1;
    const Index cols = t.order() == 2 ? t.shape().extent(2) : 1;
    return {t.data().data(), rows, cols};
}

DenseTensor from_matrix(const Eigen::MatrixXd& m) {
    return DenseTensor(Shape{m.rows(), m.cols()},
                       std::vector<double>(m.data(), m.data() + m.size()));
}

namespace {

// Wide matrices: factor M^T = QR, take the SVD of the small R^T, and map the
// right factor back through Q. Keeps TT-SVD steps at O(cols * rows^2).
ThinSvd wide_svd(const Eigen::MatrixXd& m) {
    const Index rows = m.rows();
    Eigen::MatrixXd mt = m.transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(mt);
    Eigen::MatrixXd thin_q = qr.householderQ() * Eigen::MatrixXd::Identity(mt.rows(), rows);
    Eigen::MatrixXd r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(r.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    ThinSvd out;
    out.u = svd.matrixU();
    out.s = svd.singularValues();
    out.v = thin_q * svd.matrixV();
    return out;
}

void fix_signs(ThinSvd& f) {
    for (Index c = 0; c < f.u.cols(); ++c) {
        Index imax = 0;
        f.u.col(c).cwiseAbs().maxCoeff(&imax);
        if (f.u(imax, c) < 0.0) {
            f.u.col(c) = -f.u.col(c);
            f.v.col(c) = -f.v.col(c);
        }
    }
}

} // namespace

ThinSvd thin_svd(const Eigen::MatrixXd& m) {
    ThinSvd out;
    if (m.cols() > 2 * m.rows() && m.rows() > 0) {
        out = wide_svd(m);
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.u = svd.matrixU();
        out.s = svd.singularValues();
        out.v = svd.matrixV();
    }
    fix_signs(out);
    return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
    if (m.cols() > 2 * m.rows() && m.rows() > 0) return wide_svd(m).s;
    if (m.rows() > 2 * m.cols() && m.cols() > 0) {
        Eigen::MatrixXd mt = m.transpose();
        return wide_svd(mt).s;
    }
    return Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
}

Index rank_from_singular_values(const Eigen::VectorXd& sv, Index rows, Index cols, double tol) {
    if (sv.size() == 0) return 0;
    const double cutoff = tol * sv(0) * static_cast<double>(std::max(rows, cols));
    Index r = 0;
    while (r < sv.size() && sv(r) > cutoff) ++r;
    return r;
}

Index numerical_rank(const Eigen::MatrixXd& m, double tol) {
    if (m.size() == 0) return 0;
    const Eigen::VectorXd sv = singular_values(m);
    return rank_from_singular_values(sv, m.rows(), m.cols(), tol);
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

} // namespace mlti::linalg

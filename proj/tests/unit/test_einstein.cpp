#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mlti/einstein.hpp"
#include "support/oracles.hpp"

using namespace mlti;

namespace {

EvenPairedTensor random_square(const Shape& s, Rng& rng) {
    return oracle::random_paired_tensor(PairedShape::square(s), rng);
}

} // namespace

TEST_CASE("einstein_apply") {
    Rng rng(101);
    SUBCASE("U-identity acts as the identity") {
        const DenseTensor x = oracle::random_dense(Shape{3, 2}, rng);
        CHECK(oracle::tensors_equal(einstein_apply(u_identity(x.shape()), x), x));
    }
    SUBCASE("Tucker-form operator is the matrix sandwich A1 X A2^T") {
        const Eigen::MatrixXd a1 = Eigen::MatrixXd::Random(3, 3);
        const Eigen::MatrixXd a2 = Eigen::MatrixXd::Random(2, 2);
        const EvenPairedTensor a = EvenPairedTensor::from_interleaved(
            outer(linalg::from_matrix(a1), linalg::from_matrix(a2)));
        const DenseTensor x = oracle::random_dense(Shape{3, 2}, rng);
        const Eigen::MatrixXd want = a1 * linalg::as_matrix(x) * a2.transpose();
        const DenseTensor got = einstein_apply(a, x);
        CHECK((linalg::as_matrix(got) - want).norm() <= 1e-13 * want.norm());
    }
    SUBCASE("agrees with phi(a) * vec(x)") {
        const EvenPairedTensor a =
            oracle::random_paired_tensor(PairedShape{{2, 2}, {3, 3}}, rng);
        const DenseTensor x = oracle::random_dense(Shape{2, 3}, rng);
        const DenseTensor got = einstein_apply(a, x);
        const Eigen::VectorXd want =
            oracle::phi_loop(a) * Eigen::Map<const Eigen::VectorXd>(x.data().data(), x.size());
        for (Index i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want(i)).epsilon(1e-13));
        CHECK(oracle::rel_error(got, oracle::einstein_apply_loop(a, x)) <= 1e-14);
    }
    SUBCASE("shape mismatch") {
        const EvenPairedTensor a = random_square(Shape{2, 2}, rng);
        CHECK_THROWS_AS(einstein_apply(a, DenseTensor(Shape{3, 2})), DomainError);
    }
}

TEST_CASE("einstein_compose") {
    Rng rng(103);
    SUBCASE("identity is neutral") {
        const EvenPairedTensor a = random_square(Shape{2, 3}, rng);
        const EvenPairedTensor ai = einstein_compose(a, u_identity(Shape{2, 3}));
        CHECK(oracle::tensors_equal(ai.tensor(), a.tensor()));
    }
    SUBCASE("N = 1 is the plain matrix product") {
        const EvenPairedTensor a = oracle::random_paired_tensor(PairedShape{{3, 4}}, rng);
        const EvenPairedTensor b = oracle::random_paired_tensor(PairedShape{{4, 2}}, rng);
        const EvenPairedTensor ab = einstein_compose(a, b);
        const Eigen::MatrixXd want = linalg::as_matrix(reshape(a.tensor(), Shape{3, 4})) *
                                     linalg::as_matrix(reshape(b.tensor(), Shape{4, 2}));
        CHECK((linalg::as_matrix(reshape(ab.tensor(), Shape{3, 2})) - want).norm() <=
              1e-13 * want.norm());
    }
    SUBCASE("phi homomorphism and loop oracle") {
        const EvenPairedTensor a =
            oracle::random_paired_tensor(PairedShape{{2, 3}, {3, 2}}, rng);
        const EvenPairedTensor b =
            oracle::random_paired_tensor(PairedShape{{3, 2}, {2, 3}}, rng);
        const EvenPairedTensor ab = einstein_compose(a, b);
        CHECK(oracle::rel_error(ab.tensor(), oracle::einstein_compose_loop(a, b).tensor()) <=
              1e-14);
        const Eigen::MatrixXd lhs = phi(ab);
        const Eigen::MatrixXd rhs = phi(a) * phi(b);
        CHECK((lhs - rhs).norm() <= 1e-12 * phi(a).norm() * phi(b).norm());
    }
    SUBCASE("shape mismatch") {
        const EvenPairedTensor a = random_square(Shape{2, 2}, rng);
        const EvenPairedTensor b = random_square(Shape{3, 2}, rng);
        CHECK_THROWS_AS(einstein_compose(a, b), DomainError);
    }
}

TEST_CASE("einstein_power") {
    Rng rng(105);
    const EvenPairedTensor a = random_square(Shape{2, 2}, rng);
    CHECK(oracle::tensors_equal(einstein_power(a, 0).tensor(), u_identity(Shape{2, 2}).tensor()));
    CHECK(oracle::rel_error(einstein_power(a, 3).tensor(),
                            einstein_compose(einstein_compose(a, a), a).tensor()) <= 1e-13);
}

TEST_CASE("phi and phi_inverse") {
    Rng rng(107);
    SUBCASE("N = 1 is the identity relabeling") {
        const EvenPairedTensor a = oracle::random_paired_tensor(PairedShape{{3, 4}}, rng);
        const Eigen::MatrixXd m = phi(a);
        for (Index j = 1; j <= 3; ++j)
            for (Index i = 1; i <= 4; ++i) CHECK(m(j - 1, i - 1) == a.at({j}, {i}));
    }
    SUBCASE("U-identity unfolds to the identity matrix") {
        CHECK(phi(u_identity(Shape{3, 2})) == Eigen::MatrixXd::Identity(6, 6));
    }
    SUBCASE("round-trip is bitwise and the norm is preserved exactly") {
        const EvenPairedTensor a =
            oracle::random_paired_tensor(PairedShape{{2, 3}, {2, 3}}, rng);
        const Eigen::MatrixXd m = phi(a);
        CHECK(m == oracle::phi_loop(a));
        CHECK(m.norm() == frobenius_norm(a.tensor()));
        const EvenPairedTensor back = phi_inverse(m, a.pshape());
        CHECK(oracle::tensors_equal(back.tensor(), a.tensor()));
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(phi_inverse(Eigen::MatrixXd::Zero(3, 3), PairedShape{{2, 2}}),
                        DomainError);
    }
}

TEST_CASE("u_transpose") {
    Rng rng(109);
    const EvenPairedTensor a = oracle::random_paired_tensor(PairedShape{{2, 3}, {4, 2}}, rng);
    const EvenPairedTensor at = u_transpose(a);
    CHECK(phi(at) == Eigen::MatrixXd(phi(a).transpose()));
    CHECK(oracle::tensors_equal(u_transpose(at).tensor(), a.tensor()));

    const EvenPairedTensor s0 = random_square(Shape{2, 2}, rng);
    const EvenPairedTensor sym =
        EvenPairedTensor(s0.pshape(), s0.tensor() + u_transpose(s0).tensor());
    CHECK(is_weakly_symmetric(sym));
    CHECK(oracle::tensors_equal(u_transpose(sym).tensor(), sym.tensor()));

    const EvenPairedTensor m = oracle::random_paired_tensor(PairedShape{{3, 4}}, rng);
    const Eigen::MatrixXd mt = phi(u_transpose(m));
    CHECK(mt == Eigen::MatrixXd(phi(m).transpose()));
}

TEST_CASE("u_identity and u_diagonal") {
    const EvenPairedTensor id = u_identity(Shape{2, 2});
    Index ones = 0, zeros = 0;
    for (Index i = 0; i < id.tensor().size(); ++i) {
        if (id.tensor()[i] == 1.0) ++ones;
        else if (id.tensor()[i] == 0.0) ++zeros;
    }
    CHECK(ones == 4); // exactly Pi_J diagonal ones
    CHECK(zeros == id.tensor().size() - 4);

    DenseTensor onesd(Shape{2, 2}, std::vector<double>(4, 1.0));
    CHECK(oracle::tensors_equal(u_diagonal(onesd).tensor(), id.tensor()));

    Rng rng(111);
    const DenseTensor d = oracle::random_dense(Shape{2, 3}, rng);
    const Eigen::MatrixXd m = phi(u_diagonal(d));
    Eigen::MatrixXd want = Eigen::MatrixXd::Zero(6, 6);
    for (Index p = 0; p < 6; ++p) want(p, p) = d[p];
    CHECK(m == want);
}

TEST_CASE("u_inverse") {
    Rng rng(113);
    const Shape s{2, 2};
    CHECK(oracle::tensors_equal(u_inverse(u_identity(s)).tensor(), u_identity(s).tensor()));

    DenseTensor d(s, {2.0, -0.5, 4.0, 1.25});
    const EvenPairedTensor dinv = u_inverse(u_diagonal(d));
    DenseTensor want(s, {0.5, -2.0, 0.25, 0.8});
    CHECK(oracle::rel_error(dinv.tensor(), u_diagonal(want).tensor()) <= 1e-14);

    // Well-conditioned random instance: phi(a^-1) = phi(a)^-1.
    EvenPairedTensor a = random_square(s, rng);
    a.tensor() += 4.0 * u_identity(s).tensor(); // diagonal dominance
    const EvenPairedTensor ainv = u_inverse(a);
    CHECK((phi(ainv) - phi(a).inverse()).norm() <= 1e-12 * phi(ainv).norm());
    const EvenPairedTensor prod = einstein_compose(a, ainv);
    CHECK((phi(prod) - Eigen::MatrixXd::Identity(4, 4)).norm() <= 1e-10);

    CHECK_THROWS_AS(u_inverse(EvenPairedTensor(PairedShape::square(s))), SingularError);
}

TEST_CASE("unfolding rank and determinant") {
    Rng rng(115);
    CHECK(unfolding_rank(EvenPairedTensor(PairedShape{{2, 2}, {2, 2}})) == 0);
    CHECK(unfolding_rank(u_identity(Shape{3, 2})) == 6);

    // Planted low phi-rank.
    const Eigen::MatrixXd u = Eigen::MatrixXd::Random(6, 2);
    const Eigen::MatrixXd v = Eigen::MatrixXd::Random(6, 2);
    const EvenPairedTensor low =
        phi_inverse(u * v.transpose(), PairedShape{{2, 2}, {3, 3}});
    CHECK(unfolding_rank(low) == 2);

    CHECK(unfolding_det(u_identity(Shape{2, 2})) == 1.0);
    const DenseTensor d = oracle::random_dense(Shape{2, 2}, rng);
    double prod = 1.0;
    for (Index i = 0; i < d.size(); ++i) prod *= d[i];
    CHECK(unfolding_det(u_diagonal(d)) == doctest::Approx(prod).epsilon(1e-12));

    const EvenPairedTensor a = random_square(Shape{2, 2}, rng);
    CHECK(unfolding_det(a) == doctest::Approx(phi(a).determinant()).epsilon(1e-12));
}

TEST_CASE("U-positive definiteness and the rank-one probe") {
    Rng rng(117);
    CHECK(is_u_positive_definite(u_identity(Shape{2, 2})));
    DenseTensor d(Shape{2, 2}, {1.0, 2.0, -0.5, 1.0});
    CHECK(!is_u_positive_definite(u_diagonal(d)));

    EvenPairedTensor id = u_identity(Shape{2, 2});
    CHECK(m_positive_probe(id, 100, 1) == ProbeResult::NotFalsified);
    EvenPairedTensor neg = id;
    neg.tensor() *= -1.0;
    CHECK(m_positive_probe(neg, 100, 1) == ProbeResult::Falsified);

    // U-positive definite implies the probe never falsifies.
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng g(900 + seed);
        const EvenPairedTensor b = random_square(Shape{2, 2}, g);
        EvenPairedTensor a = einstein_compose(u_transpose(b), b);
        a.tensor() += 0.1 * u_identity(Shape{2, 2}).tensor();
        REQUIRE(is_u_positive_definite(a));
        CHECK(m_positive_probe(a, 1000, seed) == ProbeResult::NotFalsified);
    }
}

TEST_CASE("u_eigen") {
    Rng rng(119);
    SUBCASE("diagonal spectrum") {
        const DenseTensor d = oracle::random_dense(Shape{2, 2}, rng);
        const auto pairs = u_eigen(u_diagonal(d));
        std::vector<double> want(d.data().begin(), d.data().end());
        std::sort(want.begin(), want.end(),
                  [](double a, double b) { return std::abs(a) > std::abs(b); });
        REQUIRE(pairs.size() == 4);
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(pairs[k].value.imag() == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(std::abs(pairs[k].value.real()) ==
                  doctest::Approx(std::abs(want[k])).epsilon(1e-10));
        }
    }
    SUBCASE("Tucker-form spectrum is the Kronecker product spectrum") {
        const Eigen::MatrixXd a1 = Eigen::MatrixXd::Random(3, 3);
        const Eigen::MatrixXd a2 = Eigen::MatrixXd::Random(2, 2);
        const EvenPairedTensor a = EvenPairedTensor::from_interleaved(
            outer(linalg::from_matrix(a1), linalg::from_matrix(a2)));
        const auto pairs = u_eigen(a);
        std::vector<std::complex<double>> want;
        const Eigen::VectorXcd e1 = a1.eigenvalues();
        const Eigen::VectorXcd e2 = a2.eigenvalues();
        for (Index i = 0; i < e1.size(); ++i)
            for (Index j = 0; j < e2.size(); ++j) want.push_back(e1(i) * e2(j));
        auto cmp = [](std::complex<double> l, std::complex<double> r) {
            if (std::abs(l) != std::abs(r)) return std::abs(l) > std::abs(r);
            if (l.real() != r.real()) return l.real() > r.real();
            return l.imag() > r.imag();
        };
        std::sort(want.begin(), want.end(), cmp);
        REQUIRE(pairs.size() == want.size());
        for (std::size_t k = 0; k < want.size(); ++k)
            CHECK(std::abs(pairs[k].value - want[k]) <= 1e-9 * (1.0 + std::abs(want[k])));
    }
    SUBCASE("eigenpairs satisfy the defining relation") {
        const EvenPairedTensor a = random_square(Shape{2, 2}, rng);
        const auto pairs = u_eigen(a);
        for (const auto& p : pairs) {
            const DenseTensor re = einstein_apply(a, p.tensor_re);
            const DenseTensor im = einstein_apply(a, p.tensor_im);
            // A*x = lambda*x split into real and imaginary parts.
            const DenseTensor res_re =
                re - (p.value.real() * p.tensor_re - p.value.imag() * p.tensor_im);
            const DenseTensor res_im =
                im - (p.value.real() * p.tensor_im + p.value.imag() * p.tensor_re);
            CHECK(frobenius_norm(res_re) + frobenius_norm(res_im) <= 1e-9);
        }
    }
}

TEST_CASE("hobg_solve") {
    Rng rng(121);
    const Shape s{2, 2};
    SUBCASE("identity and diagonal") {
        const DenseTensor rhs = oracle::random_dense(s, rng);
        CHECK(oracle::rel_error(hobg_solve(u_identity(s), rhs), rhs) <= 1e-12);

        DenseTensor d(s, {2.0, -1.0, 0.5, 4.0});
        const DenseTensor x = hobg_solve(u_diagonal(d), rhs);
        DenseTensor want(s);
        for (Index i = 0; i < 4; ++i) want[i] = rhs[i] / d[i];
        CHECK(oracle::rel_error(x, want) <= 1e-9);
    }
    SUBCASE("diagonally dominant random system vs dense solve") {
        EvenPairedTensor a = random_square(s, rng);
        a.tensor() += 6.0 * u_identity(s).tensor();
        const DenseTensor rhs = oracle::random_dense(s, rng);
        const DenseTensor x = hobg_solve(a, rhs, 1e-12);
        const Eigen::VectorXd want = phi(a).partialPivLu().solve(
            Eigen::Map<const Eigen::VectorXd>(rhs.data().data(), rhs.size()));
        double err = 0.0;
        for (Index i = 0; i < x.size(); ++i) err = std::max(err, std::abs(x[i] - want(i)));
        CHECK(err <= 1e-8 * want.norm());
    }
    SUBCASE("singular operator reports breakdown or stagnation") {
        const EvenPairedTensor zero(PairedShape::square(s));
        DenseTensor rhs(s);
        rhs[0] = 1.0;
        CHECK_THROWS_AS(hobg_solve(zero, rhs, 1e-12, 40), ConvergenceError);
    }
}

TEST_CASE("horqi") {
    Rng rng(123);
    const Shape s{2, 2};
    SUBCASE("diagonal operator from the dominant basis tensor") {
        DenseTensor d(s, {0.3, -0.2, 0.9, 0.1});
        DenseTensor x0(s);
        x0[2] = 1.0; // basis tensor for the 0.9 entry
        const UEigenPair p = horqi(u_diagonal(d), x0, 1e-10, 5);
        CHECK(p.value.real() == doctest::Approx(0.9).epsilon(1e-10));
        CHECK(std::abs(p.tensor_re[2]) == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("weakly symmetric operator converges to a true eigenpair") {
        const EvenPairedTensor b = random_square(s, rng);
        const EvenPairedTensor a = einstein_compose(u_transpose(b), b);
        const DenseTensor x0 = oracle::random_dense(s, rng);
        const UEigenPair p = horqi(a, x0, 1e-9, 40);
        const auto all = u_eigen(a);
        double best = 1e300;
        for (const auto& q : all) best = std::min(best, std::abs(q.value - p.value));
        CHECK(best <= 1e-8 * (1.0 + std::abs(p.value)));
        const DenseTensor res = einstein_apply(a, p.tensor_re) - p.value.real() * p.tensor_re;
        CHECK(frobenius_norm(res) <= 1e-9);
    }
    SUBCASE("planted dominant eigenpair is recovered from a nearby start") {
        // a = V D V^-1 through phi with a clearly dominant real eigenvalue.
        Eigen::MatrixXd v = Eigen::MatrixXd::Random(4, 4);
        while (std::abs(v.determinant()) < 0.1) v = Eigen::MatrixXd::Random(4, 4);
        Eigen::VectorXd d(4);
        d << 1.7, 0.4, -0.3, 0.1;
        const Eigen::MatrixXd m = v * d.asDiagonal() * v.inverse();
        const EvenPairedTensor a = phi_inverse(m, PairedShape::square(s));
        DenseTensor x0(s);
        for (Index i = 0; i < 4; ++i) x0[i] = v(i, 0) + 0.05 * rng.normal();
        const UEigenPair p = horqi(a, x0, 1e-9, 30);
        CHECK(p.value.real() == doctest::Approx(1.7).epsilon(1e-7));
    }
    SUBCASE("start tensor must be nonzero") {
        CHECK_THROWS_AS(horqi(u_identity(s), DenseTensor(s)), DomainError);
    }
}

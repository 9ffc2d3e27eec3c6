#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "mlti/block.hpp"
#include "mlti/einstein.hpp"
#include "support/oracles.hpp"

using namespace mlti;

namespace {

// Lexicographic column multiset comparison (bitwise entries).
bool same_column_multiset(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    auto columns = [](const Eigen::MatrixXd& m) {
        std::vector<std::vector<double>> cols;
        for (Index c = 0; c < m.cols(); ++c)
            cols.emplace_back(m.col(c).data(), m.col(c).data() + m.rows());
        std::sort(cols.begin(), cols.end());
        return cols;
    };
    return columns(a) == columns(b);
}

} // namespace

TEST_CASE("N = 1 blocks are matrix concatenation") {
    Rng rng(201);
    const EvenPairedTensor a = oracle::random_paired_tensor(PairedShape{{2, 3}}, rng);
    const EvenPairedTensor b = oracle::random_paired_tensor(PairedShape{{2, 3}}, rng);
    const EvenPairedTensor row = n_mode_row_block(a, b, 1);
    Eigen::MatrixXd want(2, 6);
    want << phi(a), phi(b);
    CHECK(phi(row) == want);

    const EvenPairedTensor col = n_mode_col_block(a, b, 1);
    Eigen::MatrixXd wantc(4, 3);
    wantc << phi(a), phi(b);
    CHECK(phi(col) == wantc);
}

TEST_CASE("worked 2x2x2x2 example: slices select the blocks") {
    Rng rng(203);
    const PairedShape ps{{2, 2}, {2, 2}};
    const EvenPairedTensor a = oracle::random_paired_tensor(ps, rng);
    const EvenPairedTensor b = oracle::random_paired_tensor(ps, rng);
    const EvenPairedTensor y = n_mode_row_block(a, b, 1);
    REQUIRE(y.pshape() == PairedShape{{2, 4}, {2, 2}});
    // (|A B|_1)_{:i1::} = A for i1 = 1,2 and B for i1 = 3,4.
    for (Index j1 = 1; j1 <= 2; ++j1)
        for (Index i1 = 1; i1 <= 2; ++i1)
            for (Index j2 = 1; j2 <= 2; ++j2)
                for (Index i2 = 1; i2 <= 2; ++i2) {
                    CHECK(y.at({j1, j2}, {i1, i2}) == a.at({j1, j2}, {i1, i2}));
                    CHECK(y.at({j1, j2}, {i1 + 2, i2}) == b.at({j1, j2}, {i1, i2}));
                }
}

TEST_CASE("unfolding of a row block is a column permutation of [phi(a) phi(b)]") {
    Rng rng(205);
    const PairedShape ps{{2, 3}, {2, 2}};
    const EvenPairedTensor a = oracle::random_paired_tensor(ps, rng);
    const EvenPairedTensor b = oracle::random_paired_tensor(ps, rng);
    Eigen::MatrixXd stacked(phi(a).rows(), 2 * phi(a).cols());
    stacked << phi(a), phi(b);
    for (Index n = 1; n <= 2; ++n) {
        const EvenPairedTensor y = n_mode_row_block(a, b, n);
        CHECK(same_column_multiset(phi(y), stacked));
        CHECK(unfolding_rank(y) == linalg::numerical_rank(stacked));
    }
    // For n = N the permutation is the identity.
    CHECK(phi(n_mode_row_block(a, b, 2)) == stacked);
}

TEST_CASE("transpose duality and the column version") {
    Rng rng(207);
    const PairedShape ps{{2, 2}, {3, 2}};
    const EvenPairedTensor a = oracle::random_paired_tensor(ps, rng);
    const EvenPairedTensor b = oracle::random_paired_tensor(ps, rng);
    for (Index n = 1; n <= 2; ++n) {
        const EvenPairedTensor lhs = u_transpose(n_mode_row_block(a, b, n));
        const EvenPairedTensor rhs = n_mode_col_block(u_transpose(a), u_transpose(b), n);
        CHECK(oracle::tensors_equal(lhs.tensor(), rhs.tensor()));

        // Row-permutation analogue for the column block.
        Eigen::MatrixXd stacked(2 * phi(a).rows(), phi(a).cols());
        stacked << phi(a), phi(b);
        CHECK(same_column_multiset(phi(n_mode_col_block(a, b, n)).transpose(),
                                   stacked.transpose()));
    }
}

TEST_CASE("Frobenius additivity") {
    Rng rng(209);
    const PairedShape ps{{2, 2}, {2, 2}};
    const EvenPairedTensor a = oracle::random_paired_tensor(ps, rng);
    const EvenPairedTensor b = oracle::random_paired_tensor(ps, rng);
    const double na = frobenius_norm(a.tensor());
    const double nb = frobenius_norm(b.tensor());
    const double ny = frobenius_norm(n_mode_row_block(a, b, 2).tensor());
    CHECK(ny * ny == doctest::Approx(na * na + nb * nb).epsilon(1e-14));
}

TEST_CASE("generalized mode row block") {
    Rng rng(211);
    const PairedShape ps{{2, 2}, {2, 2}, {2, 2}};
    SUBCASE("single block is returned unchanged") {
        const EvenPairedTensor x = oracle::random_paired_tensor(ps, rng);
        const EvenPairedTensor y = mode_row_block({x}, BlockFactorization{{1, 1, 1}});
        CHECK(oracle::tensors_equal(y.tensor(), x.tensor()));
    }
    SUBCASE("two blocks with f = (2,1,1) collapse to the binary case") {
        const EvenPairedTensor x1 = oracle::random_paired_tensor(ps, rng);
        const EvenPairedTensor x2 = oracle::random_paired_tensor(ps, rng);
        const EvenPairedTensor y = mode_row_block({x1, x2}, BlockFactorization{{2, 1, 1}});
        CHECK(oracle::tensors_equal(y.tensor(), n_mode_row_block(x1, x2, 1).tensor()));
    }
    SUBCASE("eight blocks with f = (2,2,2): staged shape and slice recovery") {
        std::vector<EvenPairedTensor> blocks;
        for (int k = 0; k < 8; ++k) blocks.push_back(oracle::random_paired_tensor(ps, rng));
        const BlockFactorization f{{2, 2, 2}};
        const EvenPairedTensor y = mode_row_block(blocks, f);
        CHECK(y.pshape() == PairedShape{{2, 4}, {2, 4}, {2, 4}});
        // Every original block is recoverable by slicing.
        for (Index k1 = 1; k1 <= 2; ++k1)
            for (Index k2 = 1; k2 <= 2; ++k2)
                for (Index k3 = 1; k3 <= 2; ++k3) {
                    const Index flat = ivec({k1, k2, k3}, Shape{2, 2, 2});
                    const EvenPairedTensor got = extract_row_block(y, ps, f, {k1, k2, k3});
                    CHECK(oracle::tensors_equal(
                        got.tensor(), blocks[static_cast<std::size_t>(flat - 1)].tensor()));
                }
    }
    SUBCASE("alternative factorization shapes") {
        std::vector<EvenPairedTensor> blocks;
        for (int k = 0; k < 8; ++k) blocks.push_back(oracle::random_paired_tensor(ps, rng));
        const EvenPairedTensor y = mode_row_block(blocks, BlockFactorization{{2, 4, 1}});
        CHECK(y.pshape() == PairedShape{{2, 4}, {2, 8}, {2, 2}});
    }
    SUBCASE("blocks with unit column extents unfold to contiguous columns") {
        const PairedShape vec_ps{{2, 1}, {2, 1}};
        std::vector<EvenPairedTensor> blocks;
        for (int k = 0; k < 4; ++k) blocks.push_back(oracle::random_paired_tensor(vec_ps, rng));
        const EvenPairedTensor y = mode_row_block(blocks, BlockFactorization{{2, 2}});
        const Eigen::MatrixXd m = phi(y);
        for (Index k = 0; k < 4; ++k)
            for (Index r = 0; r < 4; ++r)
                CHECK(m(r, k) == phi(blocks[static_cast<std::size_t>(k)])(r, 0));
    }
    SUBCASE("errors") {
        const EvenPairedTensor x = oracle::random_paired_tensor(ps, rng);
        CHECK_THROWS_AS(mode_row_block({x, x}, BlockFactorization{{1, 1, 1}}), DomainError);
        CHECK_THROWS_AS(mode_row_block({x}, BlockFactorization{{1, 1}}), DomainError);
        const EvenPairedTensor other =
            oracle::random_paired_tensor(PairedShape{{2, 2}, {2, 2}, {2, 3}}, rng);
        CHECK_THROWS_AS(n_mode_row_block(x, other, 1), DomainError);
    }
}

TEST_CASE("Einstein product distributes over block tensors") {
    Rng rng(213);
    SUBCASE("identity operator") {
        const PairedShape ps{{2, 2}, {2, 2}};
        const EvenPairedTensor a = oracle::random_paired_tensor(ps, rng);
        const EvenPairedTensor b = oracle::random_paired_tensor(ps, rng);
        CHECK(block_distribute_check(u_identity(Shape{2, 2}), a, b, 1));
        CHECK(block_distribute_check(u_identity(Shape{2, 2}), a, b, 2));
    }
    SUBCASE("N = 1 block matrix algebra") {
        const EvenPairedTensor a = oracle::random_paired_tensor(PairedShape{{2, 3}}, rng);
        const EvenPairedTensor b = oracle::random_paired_tensor(PairedShape{{2, 3}}, rng);
        const EvenPairedTensor p = oracle::random_paired_tensor(PairedShape{{4, 2}}, rng);
        CHECK(block_distribute_check(p, a, b, 1));
    }
    SUBCASE("random N = 2 instance with explicit c and d") {
        const PairedShape ps{{2, 3}, {2, 2}};
        const PairedShape cd{{3, 2}, {2, 3}};
        const EvenPairedTensor a = oracle::random_paired_tensor(ps, rng);
        const EvenPairedTensor b = oracle::random_paired_tensor(ps, rng);
        const EvenPairedTensor c = oracle::random_paired_tensor(cd, rng);
        const EvenPairedTensor d = oracle::random_paired_tensor(cd, rng);
        const EvenPairedTensor p =
            oracle::random_paired_tensor(PairedShape{{3, 2}, {2, 2}}, rng);
        for (Index n = 1; n <= 2; ++n) CHECK(block_distribute_check(p, a, b, c, d, n));
    }
}

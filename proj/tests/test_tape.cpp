#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "stylemt/tape.hpp"
#include "stylemt/util/rng.hpp"

using namespace stylemt;
using Matrix = Eigen::MatrixXd;

namespace {

Matrix random_matrix(Rng& rng, int64_t rows, int64_t cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) m(i, j) = rng.uniform_sym(scale);
    return m;
}

// Central finite differences of a scalar graph against every coordinate of
// every differentiable leaf. Builder maps leaf values to the root node.
void check_gradients(const std::vector<Matrix>& leaves,
                     const std::function<Tape::Id(Tape&, std::vector<Tape::Id>&)>& build,
                     double eps = 1e-6, double tol = 1e-7) {
    Tape tape;
    std::vector<Tape::Id> ids;
    for (const auto& leaf : leaves) ids.push_back(tape.leaf(leaf, true));
    Tape::Id root = build(tape, ids);
    tape.backward(root);

    auto eval = [&](const std::vector<Matrix>& values) {
        Tape t;
        std::vector<Tape::Id> vids;
        for (const auto& v : values) vids.push_back(t.leaf(v, true));
        return t.value(build(t, vids))(0, 0);
    };

    for (size_t l = 0; l < leaves.size(); ++l) {
        const Matrix& analytic = tape.grad(ids[l]);
        for (int64_t i = 0; i < leaves[l].rows(); ++i) {
            for (int64_t j = 0; j < leaves[l].cols(); ++j) {
                auto plus = leaves;
                auto minus = leaves;
                plus[l](i, j) += eps;
                minus[l](i, j) -= eps;
                double numeric = (eval(plus) - eval(minus)) / (2 * eps);
                double denom = std::max({1.0, std::abs(numeric), std::abs(analytic(i, j))});
                CAPTURE(l);
                CAPTURE(i);
                CAPTURE(j);
                CHECK(std::abs(numeric - analytic(i, j)) / denom < tol);
            }
        }
    }
}

// Sums all entries weighted by fixed coefficients so the root is scalar and
// every output entry matters.
Tape::Id weighted_sum(Tape& t, Tape::Id x, const Matrix& weights) {
    Tape::Id w = t.constant(weights);
    Tape::Id prod = t.cmul(x, w);
    Eigen::RowVectorXd mask = Eigen::RowVectorXd::Ones(weights.cols());
    // collapse to scalar: multiply by ones from both sides
    Tape::Id left = t.constant(Matrix::Ones(1, weights.rows()));
    Tape::Id right = t.constant(Matrix::Ones(weights.cols(), 1));
    return t.matmul(t.matmul(left, prod), right);
}

}  // namespace

TEST_CASE("matmul, add, bias, and elementwise ops differentiate correctly") {
    Rng rng(1);
    Matrix a = random_matrix(rng, 3, 4);
    Matrix b = random_matrix(rng, 4, 2);
    Matrix bias = random_matrix(rng, 3, 1);
    Matrix w = random_matrix(rng, 3, 2);

    check_gradients({a, b, bias}, [&](Tape& t, std::vector<Tape::Id>& ids) {
        Tape::Id y = t.add_bias(t.matmul(ids[0], ids[1]), ids[2]);
        return weighted_sum(t, y, w);
    });

    Matrix c = random_matrix(rng, 3, 2);
    Matrix d = random_matrix(rng, 3, 2);
    check_gradients({c, d}, [&](Tape& t, std::vector<Tape::Id>& ids) {
        Tape::Id y = t.cmul(t.add(ids[0], ids[1]), t.sub(ids[0], ids[1]));
        return weighted_sum(t, y, w);
    });
}

TEST_CASE("activations differentiate correctly") {
    Rng rng(2);
    Matrix x = random_matrix(rng, 4, 3, 2.0);
    Matrix w = random_matrix(rng, 4, 3);
    check_gradients({x}, [&](Tape& t, std::vector<Tape::Id>& ids) {
        return weighted_sum(t, t.tanh_op(ids[0]), w);
    });
    check_gradients({x}, [&](Tape& t, std::vector<Tape::Id>& ids) {
        return weighted_sum(t, t.sigmoid_op(ids[0]), w);
    });
    check_gradients({x}, [&](Tape& t, std::vector<Tape::Id>& ids) {
        return weighted_sum(t, t.scale(ids[0], -1.7), w);
    });
    Matrix f = random_matrix(rng, 4, 3);
    check_gradients({x}, [&](Tape& t, std::vector<Tape::Id>& ids) {
        return weighted_sum(t, t.cmul_const(ids[0], f), w);
    });
}

TEST_CASE("stacking and slicing differentiate correctly") {
    Rng rng(3);
    Matrix a = random_matrix(rng, 2, 3);
    Matrix b = random_matrix(rng, 3, 3);
    Matrix w = random_matrix(rng, 5, 3);
    check_gradients({a, b}, [&](Tape& t, std::vector<Tape::Id>& ids) {
        return weighted_sum(t, t.vstack({ids[0], ids[1]}), w);
    });
    Matrix w2 = random_matrix(rng, 2, 3);
    check_gradients({b}, [&](Tape& t, std::vector<Tape::Id>& ids) {
        return weighted_sum(t, t.slice_rows(ids[0], 1, 2), w2);
    });
}

TEST_CASE("lookup scatters gradients into table rows") {
    Rng rng(4);
    Matrix table = random_matrix(rng, 5, 3);
    std::vector<int32_t> ids = {4, 0, 4, 2};
    Matrix w = random_matrix(rng, 3, 4);
    check_gradients({table}, [&](Tape& t, std::vector<Tape::Id>& leaf) {
        return weighted_sum(t, t.lookup(leaf[0], ids), w);
    });

    Tape t;
    Tape::Id tab = t.leaf(table, false);
    Tape::Id y = t.lookup(tab, ids);
    CHECK(t.value(y).col(0) == table.row(4).transpose());
    CHECK(t.value(y).col(1) == table.row(0).transpose());
}

TEST_CASE("masked softmax normalizes valid entries and differentiates") {
    Rng rng(5);
    Matrix x = random_matrix(rng, 4, 3, 2.0);
    Matrix mask(4, 3);
    mask << 1, 1, 0,
            1, 0, 0,
            1, 1, 0,
            0, 1, 0;
    Tape t;
    Tape::Id y = t.softmax_cols_masked(t.leaf(x, true), mask);
    const Matrix& v = t.value(y);
    CHECK(v.col(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v.col(1).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v(3, 0) == 0.0);
    CHECK(v(1, 1) == 0.0);
    CHECK(v.col(2).sum() == 0.0);  // fully masked column
    CHECK(v.minCoeff() >= 0.0);

    Matrix w = random_matrix(rng, 4, 3);
    check_gradients({x}, [&](Tape& tp, std::vector<Tape::Id>& ids) {
        return weighted_sum(tp, tp.softmax_cols_masked(ids[0], mask), w);
    });
}

TEST_CASE("layer norm normalizes per column and differentiates") {
    Rng rng(6);
    Matrix x = random_matrix(rng, 5, 3, 3.0);
    Matrix gain = random_matrix(rng, 5, 1).array().abs().matrix() + Matrix::Ones(5, 1) * 0.5;
    Matrix bias = random_matrix(rng, 5, 1);

    Tape t;
    Tape::Id ones_gain = t.leaf(Matrix::Ones(5, 1), false);
    Tape::Id zero_bias = t.leaf(Matrix::Zero(5, 1), false);
    Tape::Id y = t.layer_norm_cols(t.leaf(x, true), ones_gain, zero_bias);
    for (int j = 0; j < 3; ++j) {
        CHECK(t.value(y).col(j).mean() == doctest::Approx(0.0).epsilon(1e-9));
        double var = t.value(y).col(j).squaredNorm() / 5.0;
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // eps shrinks it slightly
    }

    Matrix w = random_matrix(rng, 5, 3);
    check_gradients({x, gain, bias}, [&](Tape& tp, std::vector<Tape::Id>& ids) {
        return weighted_sum(tp, tp.layer_norm_cols(ids[0], ids[1], ids[2]), w);
    });
}

TEST_CASE("colblend keeps or replaces whole columns") {
    Rng rng(7);
    Matrix a = random_matrix(rng, 3, 4);
    Matrix b = random_matrix(rng, 3, 4);
    Eigen::RowVectorXd keep(4);
    keep << 1, 0, 1, 0;

    Tape t;
    Tape::Id y = t.colblend(keep, t.leaf(a, true), t.leaf(b, true));
    CHECK(t.value(y).col(0) == a.col(0));
    CHECK(t.value(y).col(1) == b.col(1));

    Matrix w = random_matrix(rng, 3, 4);
    check_gradients({a, b}, [&](Tape& tp, std::vector<Tape::Id>& ids) {
        return weighted_sum(tp, tp.colblend(keep, ids[0], ids[1]), w);
    });
}

TEST_CASE("masked nll sums per-column losses and differentiates") {
    Rng rng(8);
    Matrix logits = random_matrix(rng, 5, 4, 2.0);
    std::vector<int32_t> targets = {0, 3, 2, 4};
    Eigen::RowVectorXd mask(4);
    mask << 1, 1, 0, 1;

    Tape t;
    Tape::Id nll = t.masked_nll(t.leaf(logits, true), targets, mask);
    double expected = 0.0;
    for (int j = 0; j < 4; ++j) {
        if (mask(j) == 0.0) continue;
        double max = logits.col(j).maxCoeff();
        double z = (logits.col(j).array() - max).exp().sum();
        expected += std::log(z) + max - logits(targets[j], j);
    }
    CHECK(t.value(nll)(0, 0) == doctest::Approx(expected).epsilon(1e-12));

    check_gradients({logits}, [&](Tape& tp, std::vector<Tape::Id>& ids) {
        return tp.masked_nll(ids[0], targets, mask);
    });
}

TEST_CASE("scalar accumulation differentiates") {
    Rng rng(9);
    Matrix a = random_matrix(rng, 1, 1);
    Matrix b = random_matrix(rng, 1, 1);
    check_gradients({a, b}, [&](Tape& t, std::vector<Tape::Id>& ids) {
        return t.add_scalars({ids[0], t.scale(ids[1], 2.0), ids[0]});
    });
}

TEST_CASE("gradients accumulate when a node is reused") {
    // y = x * x (sharing the same node twice) -> dy/dx = 2x
    Matrix x(1, 1);
    x(0, 0) = 3.0;
    Tape t;
    Tape::Id xi = t.leaf(x, true);
    Tape::Id y = t.cmul(xi, xi);
    t.backward(y);
    CHECK(t.grad(xi)(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("shape mismatches are rejected") {
    Tape t;
    Tape::Id a = t.leaf(Matrix::Zero(2, 3), true);
    Tape::Id b = t.leaf(Matrix::Zero(2, 3), true);
    CHECK_THROWS_AS(t.matmul(a, b), TapeError);
    CHECK_THROWS_AS(t.slice_rows(a, 1, 3), TapeError);
    CHECK_THROWS_AS(t.add_bias(a, b), TapeError);
    CHECK_THROWS_AS(t.backward(a), TapeError);
    CHECK_THROWS_AS(t.lookup(a, {5}), TapeError);
}

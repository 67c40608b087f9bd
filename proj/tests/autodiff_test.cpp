#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tegdet/autodiff.hpp"
#include "tegdet/error.hpp"
#include "tegdet/teg.hpp"
#include "test_util.hpp"

using namespace tegdet;
using testutil::check_op_gradients;
using testutil::random_tensor;

TEST_CASE("matmul matches the naive triple-loop oracle") {
    Rng rng(42);
    Tensor a = random_tensor(3, 4, rng);
    Tensor b = random_tensor(4, 2, rng);

    oracle::Mat oa(3, std::vector<double>(4)), ob(4, std::vector<double>(2));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) oa[i][j] = a(i, j);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 2; ++j) ob[i][j] = b(i, j);
    auto expected = oracle::matmul(oa, ob);

    Tape tape;
    Var out = tape.matmul(tape.leaf(a), tape.leaf(b));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(out->value(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-12));
}

TEST_CASE("matmul rejects incompatible shapes with both named") {
    Tape tape;
    Var a = tape.leaf(Tensor(3, 4));
    Var b = tape.leaf(Tensor(5, 2));
    CHECK_THROWS_WITH_AS(tape.matmul(a, b), "matmul: shape mismatch 3x4 vs 5x2", Error);
}

TEST_CASE("analytic scalar values: sigmoid, tanh, softmax") {
    Tape tape;
    CHECK(tape.sigmoid(tape.leaf(Tensor(1, 1)))->value(0, 0) == doctest::Approx(0.5));
    CHECK(tape.tanh(tape.leaf(Tensor(1, 1)))->value(0, 0) == doctest::Approx(0.0));
    Var sm = tape.softmax_rows(tape.leaf(Tensor(1, 2)));
    CHECK(sm->value(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sm->value(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and shift invariance holds") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = random_tensor(3, 5, rng, -4.0, 4.0);
        Tensor shifted = x;
        const double c = rng.uniform(-10.0, 10.0);
        for (std::size_t j = 0; j < 5; ++j) shifted(1, j) += c;

        Tape tape;
        Var y = tape.softmax_rows(tape.leaf(x));
        Var ys = tape.softmax_rows(tape.leaf(shifted));
        for (std::size_t i = 0; i < 3; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < 5; ++j) sum += y->value(i, j);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(y->value(1, j) == doctest::Approx(ys->value(1, j)).epsilon(1e-9));
    }
}

TEST_CASE("backward: sum gradient is all ones, sigmoid'(0) = 0.25") {
    Rng rng(1);
    Tape tape;
    Var x = tape.leaf(random_tensor(3, 4, rng), true);
    Var loss = tape.sum_all(x);
    tape.backward(loss);
    for (double g : x->grad.raw()) CHECK(g == doctest::Approx(1.0));

    Tape tape2;
    Var w = tape2.leaf(Tensor(1, 1), true);
    Var l2 = tape2.sum_all(tape2.sigmoid(w));
    tape2.backward(l2);
    CHECK(w->grad(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("backward rejects non-scalar losses") {
    Tape tape;
    Var x = tape.leaf(Tensor(2, 2), true);
    CHECK_THROWS_AS(tape.backward(x), Error);
}

TEST_CASE("gradients of every primitive match central finite differences") {
    Rng rng(99);
    double max_err = 0.0;
    auto sizes = [&](std::size_t lo, std::size_t hi) {
        return static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(lo),
                                                  static_cast<std::int64_t>(hi)));
    };

    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t m = sizes(2, 8), k = sizes(2, 8), n = sizes(2, 8);
        const std::uint64_t seed = rng.next_u64();

        check_op_gradients({random_tensor(m, k, rng), random_tensor(k, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.matmul(v[0], v[1]); },
                           1e-5, seed, &max_err);
        check_op_gradients({random_tensor(m, n, rng), random_tensor(m, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.add(v[0], v[1]); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(m, n, rng), random_tensor(m, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.sub(v[0], v[1]); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(m, n, rng), random_tensor(m, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.hadamard(v[0], v[1]); },
                           1e-5, seed);
        check_op_gradients({random_tensor(m, n, rng, -2.0, 2.0)},
                           [](Tape& t, std::vector<Var>& v) { return t.sigmoid(v[0]); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(m, n, rng, -2.0, 2.0)},
                           [](Tape& t, std::vector<Var>& v) { return t.tanh(v[0]); }, 1e-5, seed);
        check_op_gradients({random_tensor(m, n, rng, 0.2, 3.0)},
                           [](Tape& t, std::vector<Var>& v) { return t.relu(v[0]); }, 1e-5, seed);
        check_op_gradients({random_tensor(m, n, rng, -3.0, 3.0)},
                           [](Tape& t, std::vector<Var>& v) { return t.softmax_rows(v[0]); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(m, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.transpose(v[0]); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(m, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.scale(v[0], -1.7); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(2, n, rng), random_tensor(3, n, rng)},
                           [](Tape& t, std::vector<Var>& v) {
                               return t.concat_rows({v[0], v[1]});
                           },
                           1e-5, seed);
        check_op_gradients({random_tensor(m, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.sum_rows(v[0]); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(m, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.sum_axis(v[0], 1); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(m, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.mean_rows(v[0]); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(m, n, rng)},
                           [](Tape& t, std::vector<Var>& v) { return t.max_rows(v[0]); }, 1e-5,
                           seed);
        check_op_gradients({random_tensor(m, n, rng, 0.3, 4.0)},
                           [](Tape& t, std::vector<Var>& v) { return t.log(v[0]); }, 1e-5, seed);
        check_op_gradients({random_tensor(m, n, rng, 0.5, 4.0)},
                           [](Tape& t, std::vector<Var>& v) { return t.clamp_min(v[0], 0.9); },
                           1e-5, seed);
        check_op_gradients({random_tensor(m, n, rng)},
                           [n](Tape& t, std::vector<Var>& v) { return t.col_slice(v[0], n - 1); },
                           1e-5, seed);
        check_op_gradients({random_tensor(m, 1, rng, 0.5, 3.0)},
                           [](Tape& t, std::vector<Var>& v) { return t.diag(v[0]); }, 1e-5, seed);
        check_op_gradients({random_tensor(m, n, rng, 0.5, 3.0)},
                           [](Tape& t, std::vector<Var>& v) { return t.rsqrt(v[0]); }, 1e-5, seed);

        Rng arng(seed);
        check_op_gradients({testutil::random_adjacency(m, arng, 0.5, false)},
                           [](Tape& t, std::vector<Var>& v) { return t.normalize_adj(v[0]); },
                           1e-5, seed);
    }
    CHECK(max_err < 1e-5);
}

TEST_CASE("normalize_adj on the tape matches the plain route and the oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::size_t>(rng.range(1, 6));
        Tensor a = testutil::random_adjacency(n, rng, 0.5, trial % 2 == 0);

        oracle::Mat oa(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) oa[i][j] = a(i, j);
        auto expected = oracle::normalize_adj(oa);

        Tensor plain = normalize_adj(a);
        Tape tape;
        Var taped = tape.normalize_adj(tape.leaf(a));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(plain(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-12));
                CHECK(taped->value(i, j) == doctest::Approx(expected[i][j]).epsilon(1e-12));
            }
    }
}

TEST_CASE("repeated backward after zero_grad is bitwise deterministic") {
    Rng rng(11);
    Tape tape;
    Var x = tape.leaf(random_tensor(4, 4, rng), true);
    Var y = tape.leaf(random_tensor(4, 4, rng), true);
    Var out = tape.matmul(tape.sigmoid(x), tape.add(y, tape.tanh(x)));
    Var loss = tape.sum_all(out);

    tape.backward(loss);
    Tensor gx = x->grad, gy = y->grad;
    tape.zero_grad();
    tape.backward(loss);
    CHECK(gx.raw() == x->grad.raw());
    CHECK(gy.raw() == y->grad.raw());
}

TEST_CASE("fan-out accumulates gradients additively") {
    Tape tape;
    Tensor v(1, 1);
    v(0, 0) = 0.7;
    Var x = tape.leaf(v, true);
    Var loss = tape.sum_all(tape.add(x, x));
    tape.backward(loss);
    CHECK(x->grad(0, 0) == doctest::Approx(2.0));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kan/errors.hpp"
#include "kan/grad_check.hpp"
#include "kan/ops.hpp"
#include "kan/tensor.hpp"

using namespace kan;
using namespace kan::ad;

TEST_CASE("sigmoid and tanh fixed points") {
    Tensor x = Tensor::from(1, 3, {0.0, 2.0, -2.0});
    Tensor s = sigmoid(x);
    CHECK(s.data()[0] == 0.5);
    CHECK(s.data()[1] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
    Tensor t = tanh_(x);
    CHECK(t.data()[0] == 0.0);
    CHECK(t.data()[2] == doctest::Approx(std::tanh(-2.0)));
}

TEST_CASE("sigmoid gradient at zero is a quarter") {
    Tensor x = Tensor::from(1, 1, {0.0}, true);
    Tensor y = scale(sigmoid(x), 3.0);
    backward(y);
    CHECK(x.grad()[0] == doctest::Approx(0.75));  // 3 * sigma'(0)
}

TEST_CASE("mul with a zero factor annihilates one side only") {
    Tensor a = Tensor::from(1, 2, {2.0, -3.0}, true);
    Tensor z = Tensor::from(1, 2, {0.0, 0.0}, true);
    backward(sum(mul(a, z)));
    CHECK(a.grad()[0] == 0.0);
    CHECK(a.grad()[1] == 0.0);
    CHECK(z.grad()[0] == 2.0);   // d(a*z)/dz = a
    CHECK(z.grad()[1] == -3.0);
}

TEST_CASE("cross entropy of uniform logits is ln 2") {
    Tensor logits = Tensor::zeros(4, 2);
    Tensor loss = softmax_cross_entropy(logits, {0, 1, 0, 1});
    CHECK(loss.item() == doctest::Approx(0.6931471805599453).epsilon(1e-15));
}

TEST_CASE("sum backpropagates ones") {
    Tensor a = Tensor::from(2, 2, {1.0, 2.0, 3.0, 4.0}, true);
    backward(sum(a));
    for (double g : a.grad()) CHECK(g == 1.0);
}

TEST_CASE("matmul values against a hand product") {
    Tensor a = Tensor::from(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor b = Tensor::from(3, 2, {7, 8, 9, 10, 11, 12});
    Tensor c = matmul(a, b);
    CHECK(c.data() == std::vector<double>{58, 64, 139, 154});
}

TEST_CASE("broadcast add of a bias row") {
    Tensor a = Tensor::from(2, 2, {1, 2, 3, 4}, true);
    Tensor b = Tensor::from(1, 2, {10, 20}, true);
    Tensor c = add(a, b);
    CHECK(c.data() == std::vector<double>{11, 22, 13, 24});
    backward(sum(c));
    CHECK(b.grad() == std::vector<double>{2, 2});  // summed over rows
}

TEST_CASE("composite expression matches finite differences") {
    Tensor w = Tensor::from(3, 2, {0.3, -0.2, 0.5, 0.1, -0.4, 0.2}, true);
    Tensor x = Tensor::from(2, 3, {1.0, -0.5, 0.25, 0.75, 0.1, -1.0}, true);
    Tensor b = Tensor::from(1, 2, {0.05, -0.1}, true);
    auto fn = [&] {
        Tensor h = tanh_(add(matmul(x, w), b));
        return softmax_cross_entropy(mul(h, sigmoid(h)), {1, 0});
    };
    auto rep = grad_check(fn, {{"w", w}, {"x", x}, {"b", b}});
    CHECK(rep.max_rel_dev < 1e-5);
}

TEST_CASE("quadratic gradient is near machine precision") {
    Tensor x = Tensor::from(1, 4, {0.5, -1.5, 2.0, 0.0}, true);
    auto fn = [&] { return sum(mul(x, x)); };
    auto rep = grad_check(fn, {{"x", x}});
    CHECK(rep.max_rel_dev < 1e-8);
}

TEST_CASE("gradients accumulate across backward calls") {
    Tensor x = Tensor::from(1, 1, {3.0}, true);
    Tensor y1 = scale(x, 2.0);
    backward(y1);
    Tensor y2 = scale(x, 2.0);
    backward(y2);
    CHECK(x.grad()[0] == 4.0);
    x.zero_grad();
    CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("dropout") {
    Rng rng(1);
    Tensor x = Tensor::from(1, 8, {1, 1, 1, 1, 1, 1, 1, 1}, true);
    SUBCASE("eval mode returns the very same node") {
        Tensor y = dropout(x, 0.5, rng, false);
        CHECK(y.same_node(x));
    }
    SUBCASE("train mode scales survivors by 1/keep") {
        Tensor y = dropout(x, 0.5, rng, true);
        for (double v : y.data()) CHECK((v == 0.0 || v == 2.0));
    }
    SUBCASE("keep = 1 keeps everything") {
        Tensor y = dropout(x, 1.0, rng, true);
        CHECK(y.data() == x.data());
    }
    SUBCASE("keep outside (0, 1] is rejected") {
        CHECK_THROWS(dropout(x, 0.0, rng, true));
        CHECK_THROWS(dropout(x, 1.5, rng, true));
    }
}

TEST_CASE("embedding lookup scatters gradients into the table") {
    Tensor table = Tensor::from(3, 2, {1, 2, 3, 4, 5, 6}, true);
    Tensor rows = embedding_lookup(table, {2, 0, 2});
    CHECK(rows.data() == std::vector<double>{5, 6, 1, 2, 5, 6});
    backward(sum(rows));
    CHECK(table.grad() == std::vector<double>{1, 1, 0, 0, 2, 2});
}

TEST_CASE("slice and concat round trip") {
    Tensor a = Tensor::from(2, 2, {1, 2, 3, 4}, true);
    Tensor b = Tensor::from(2, 1, {5, 6}, true);
    Tensor c = concat_cols(a, b);
    CHECK(c.cols() == 3);
    CHECK(c.data() == std::vector<double>{1, 2, 5, 3, 4, 6});
    Tensor row = slice_rows(c, 1, 2);
    CHECK(row.data() == std::vector<double>{3, 4, 6});
    backward(sum(row));
    CHECK(a.grad() == std::vector<double>{0, 0, 1, 1});
    CHECK(b.grad() == std::vector<double>{0, 1});
}

TEST_CASE("shape mismatches are reported") {
    Tensor a = Tensor::zeros(2, 3);
    Tensor b = Tensor::zeros(2, 3);
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
    CHECK_THROWS_AS(add(a, Tensor::zeros(3, 3)), ShapeError);
    CHECK_THROWS_AS(softmax_cross_entropy(Tensor::zeros(2, 2), {0}),
                    ShapeError);
}

TEST_CASE("backward demands a scalar") {
    Tensor a = Tensor::from(1, 2, {1.0, 2.0}, true);
    CHECK_THROWS(backward(scale(a, 2.0)));
}

#include <cmath>
#include <functional>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"

#include "clmrc/errors.hpp"
#include "clmrc/kernels.hpp"
#include "clmrc/num/gradcheck.hpp"
#include "clmrc/num/ops.hpp"
#include "clmrc/num/optim.hpp"

using namespace clmrc;
using namespace testutil;
using num::Mask;

TEST_SUITE("numkernel") {

TEST_CASE("kernels: scalar and simd tables agree with triple loops") {
    Rng rng(11);
    std::vector<const kernels::KernelTable*> tables = {&kernels::scalar_table()};
    if (const auto* simd = kernels::avx2_table()) tables.push_back(simd);
    const std::size_t sizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 16, 17, 33};
    for (const auto* t : tables) {
        CAPTURE(t->name);
        for (std::size_t m : sizes)
            for (std::size_t k : {1, 3, 4, 9, 17})
                for (std::size_t n : {1, 2, 5, 8, 13}) {
                    const Matrix a = random_matrix(rng, m, k), b = random_matrix(rng, k, n);
                    const Matrix want = naive_matmul(a, b);
                    Matrix c(m, n);
                    t->gemm_nn(a.data(), b.data(), c.data(), m, k, n);
                    CHECK(max_rel_diff(c, want) < 1e-13);

                    const Matrix bt = naive_transpose(b);
                    Matrix c2(m, n);
                    t->gemm_nt(a.data(), bt.data(), c2.data(), m, k, n);
                    CHECK(max_rel_diff(c2, want) < 1e-13);

                    const Matrix at = naive_transpose(a);
                    Matrix c3(m, n, 1.0);  // accumulates into C
                    t->gemm_tn(at.data(), b.data(), c3.data(), m, k, n);
                    for (double& v : c3.values()) v -= 1.0;
                    CHECK(max_rel_diff(c3, want) < 1e-12);
                }
        for (std::size_t n : sizes) {
            const Matrix x = random_matrix(rng, 1, n), y = random_matrix(rng, 1, n);
            long double d = 0;
            for (std::size_t i = 0; i < n; ++i) d += static_cast<long double>(x[i]) * y[i];
            CHECK(t->dot(x.data(), y.data(), n) == doctest::Approx(static_cast<double>(d)).epsilon(1e-13));
            Matrix z = y;
            t->axpy(0.5, x.data(), z.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(z[i] == y[i] + 0.5 * x[i]);
        }
    }
}

TEST_CASE("kernels: active table honours the environment") {
    const auto& active = kernels::active();
    CHECK((active.name == "scalar" || active.name == "avx2"));
}

TEST_CASE("forward values match hand-computed examples") {
    Tape tape;
    SUBCASE("softmax") {
        const Var p = num::softmax(tape.constant(Matrix(1, 3, {0.0, std::log(2.0), std::log(3.0)})));
        CHECK(p.value()[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
        CHECK(p.value()[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
        CHECK(p.value()[2] == doctest::Approx(3.0 / 6.0).epsilon(1e-15));
    }
    SUBCASE("masked softmax zeroes masked keys and rejects empty rows") {
        const Var x = tape.constant(Matrix(2, 3, {1, 2, 3, 4, 5, 6}));
        const Var p = num::masked_softmax(x, Mask{true, false, true});
        CHECK(p.value()(0, 1) == 0.0);
        CHECK(p.value()(1, 1) == 0.0);
        CHECK(p.value()(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(2.0))));
        CHECK_THROWS_AS(num::masked_softmax(x, Mask{false, false, false}), InvalidMaskError);
        CHECK_THROWS_AS(num::masked_softmax(x, Mask{true, true}), DimensionError);
    }
    SUBCASE("layer norm uses the population variance") {
        const Var y = num::layer_norm(tape.constant(Matrix(1, 3, {1, 2, 3})), tape.constant(Matrix(1, 3, 1.0)),
                                      tape.constant(Matrix(1, 3)));
        const double s = 1.0 / std::sqrt(2.0 / 3.0);
        CHECK(y.value()[0] == doctest::Approx(-s).epsilon(1e-12));
        CHECK(y.value()[1] == doctest::Approx(0.0));
        CHECK(y.value()[2] == doctest::Approx(s).epsilon(1e-12));
    }
    SUBCASE("layer norm is shift invariant") {
        Rng rng(3);
        const Matrix x = random_matrix(rng, 3, 6);
        Matrix shifted = x;
        for (double& v : shifted.values()) v += 7.25;
        const Var g = tape.constant(Matrix(1, 6, 1.0)), b = tape.constant(Matrix(1, 6));
        CHECK(num::max_abs_diff(num::layer_norm(tape.constant(x), g, b).value(),
                                num::layer_norm(tape.constant(shifted), g, b).value()) < 1e-12);
    }
    SUBCASE("gelu and cross entropy") {
        const Var g = num::gelu(tape.constant(Matrix(1, 2, {1.0, -0.5})));
        CHECK(g.value()[0] == doctest::Approx(0.8413447460685429).epsilon(1e-14));
        CHECK(g.value()[1] == doctest::Approx(-0.5 * 0.3085375387259869).epsilon(1e-14));
        const Var ce = num::cross_entropy(tape.constant(Matrix(1, 2, {0.25, 0.75})), 0);
        CHECK(ce.scalar() == doctest::Approx(std::log(4.0)).epsilon(1e-15));
        CHECK_THROWS_AS(num::cross_entropy(tape.constant(Matrix(1, 2, {0.25, 0.75})), 2), IndexError);
        CHECK_THROWS_AS(num::cross_entropy(tape.constant(Matrix(1, 2, {0.25, 0.75})), 0, Mask{false, true}),
                        IndexError);
    }
    SUBCASE("matmul against the triple loop, shape errors name both operands") {
        Rng rng(5);
        const Matrix a = random_matrix(rng, 4, 7), b = random_matrix(rng, 7, 3);
        CHECK(max_rel_diff(num::matmul(tape.constant(a), tape.constant(b)).value(), naive_matmul(a, b)) < 1e-13);
        try {
            num::matmul(tape.constant(a), tape.constant(a));
            FAIL("expected DimensionError");
        } catch (const DimensionError& e) {
            CHECK(std::string(e.what()).find("4x7") != std::string::npos);
        }
    }
    SUBCASE("cosine similarity") {
        const std::vector<double> u = {1, 2, 3}, v = {-2, 0.5, 4};
        const double want = (1 * -2 + 2 * 0.5 + 3 * 4) / (std::sqrt(14.0) * std::sqrt(4 + 0.25 + 16));
        CHECK(num::cosine_similarity(u, v) == doctest::Approx(want).epsilon(1e-15));
        CHECK_THROWS_AS(num::cosine_similarity(u, std::vector<double>{0, 0, 0}), DegenerateVectorError);
    }
    SUBCASE("dropout keeps the expectation and is identity at rate 0") {
        Rng rng(9);
        const Matrix ones(200, 50, 1.0);
        const Var same = num::dropout(tape.constant(ones), 0.0, rng);
        CHECK(same.value() == ones);
        const Var d = num::dropout(tape.constant(ones), 0.25, rng);
        double sum = 0;
        for (double v : d.value().values()) {
            CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
            sum += v;
        }
        CHECK(sum / ones.size() == doctest::Approx(1.0).epsilon(0.03));
    }
}

TEST_CASE("tape: single use, parameter binding shares one node") {
    Matrix w(1, 1, 3.0);
    Tape tape;
    const Var a = tape.parameter(w);
    const Var b = tape.parameter(w);
    CHECK(a.id() == b.id());
    const Var loss = num::matmul(a, b);  // w^2
    tape.backward(loss);
    CHECK(tape.parameter_grad(w)->operator[](0) == doctest::Approx(6.0));
    CHECK_THROWS(tape.backward(loss));
}

TEST_CASE("grad_check: every primitive at 1e-5, five seeds") {
    for (const auto& pc : primitive_cases())
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto report = check_primitive(pc, seed, 1e-5);
            CHECK_MESSAGE(report.passed, pc.name, " seed ", seed, " max rel err ", report.max_relative_error, " at ",
                          report.worst_parameter);
        }
}

TEST_CASE("grad_check reports a wrong gradient") {
    Matrix w(1, 3, {0.5, -1.0, 2.0});
    const auto report = num::grad_check(
        [&](Tape& t) {
            const Var x = t.parameter(w);
            // value sum(x^2) but backward claims 3x
            double s = 0;
            for (double v : w.values()) s += v * v;
            return t.record(Matrix(1, 1, s), {x}, [x, &w](Tape& tape, std::uint32_t self) {
                const double g = tape.grad_buffer(self)[0];
                for (std::size_t i = 0; i < 3; ++i) tape.grad_buffer(x.id())[i] += g * 3.0 * w[i];
            });
        },
        {{"w", &w}}, {});
    CHECK_FALSE(report.passed);
    CHECK(report.max_relative_error == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(report.worst_parameter == "w");
}

TEST_CASE("AdamW: first step in closed form, decoupled decay, cosine schedule") {
    Matrix w(1, 2, {1.0, -2.0});
    num::ParameterList params = {{"w", &w}};
    num::AdamWConfig cfg;
    cfg.base_lr = 0.1;
    cfg.weight_decay = 0.5;
    cfg.epsilon = 1e-8;
    cfg.total_steps = 4;
    num::AdamW opt(params, cfg);
    num::Gradients g = {Matrix(1, 2, {0.5, 0.0})};
    const double lr = opt.step(params, g);
    CHECK(lr == doctest::Approx(0.1));
    // m_hat = g, v_hat = g^2, so the update is g / (|g| + eps)
    CHECK(w[0] == doctest::Approx(1.0 * (1 - 0.1 * 0.5) - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    // zero gradient: only the decay acts
    CHECK(w[1] == doctest::Approx(-2.0 * (1 - 0.1 * 0.5)).epsilon(1e-15));

    num::CosineSchedule s{2.0, 10};
    CHECK(s.learning_rate(0) == doctest::Approx(2.0));
    CHECK(s.learning_rate(5) == doctest::Approx(1.0));
    CHECK(s.learning_rate(10) == doctest::Approx(0.0));
    CHECK(s.learning_rate(3) == doctest::Approx(1.0 + std::cos(std::numbers::pi * 0.3)));

    g[0][0] = std::nan("");
    CHECK_THROWS_AS(opt.step(params, g), DivergenceError);
}

TEST_CASE("AdamW minimizes a quadratic") {
    Matrix w(1, 3, {3.0, -4.0, 0.5});
    num::ParameterList params = {{"w", &w}};
    num::AdamWConfig cfg;
    cfg.base_lr = 0.05;
    cfg.weight_decay = 0.0;
    cfg.total_steps = 2000;
    num::AdamW opt(params, cfg);
    for (std::size_t i = 0; i < 2000; ++i) {
        num::Gradients g = {Matrix(1, 3)};
        for (std::size_t j = 0; j < 3; ++j) g[0][j] = 2.0 * (w[j] - 1.0);
        opt.step(params, g);
    }
    for (double v : w.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-3));
}

}  // TEST_SUITE

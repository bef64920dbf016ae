#include <doctest.h>

#include <cmath>
#include <utility>

#include "trilstm/gradcheck.hpp"
#include "trilstm/lstm.hpp"
#include "trilstm/mlp.hpp"
#include "trilstm/optimizer.hpp"
#include "trilstm/reference.hpp"
#include "trilstm/rng.hpp"

using namespace trilstm;

namespace {

Matrix random_vec(std::size_t n, RngStream& rng) {
    Matrix v(n, 1);
    for (double& x : v.raw())
        x = rng.normal();
    return v;
}

} // namespace

TEST_SUITE("nn") {

TEST_CASE("lstm_step zero params gives zero state") {
    const LstmParams p = LstmParams::zeros(3, 4);
    RngStream rng(1);
    const Matrix u = random_vec(3, rng);
    const LstmState out = lstm_step(p, u, LstmState::zero(4));
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(out.h(k, 0) == 0.0);
        CHECK(out.c(k, 0) == 0.0);
    }
}

TEST_CASE("lstm_step hand-evaluated saturated gates") {
    // gates ~1 via bias +50, candidate 0, so c passes through and h = tanh(c)
    LstmParams p = LstmParams::zeros(1, 1);
    p.b_f(0, 0) = 50.0;
    p.b_i(0, 0) = 50.0;
    p.b_o(0, 0) = 50.0;
    LstmState prev = LstmState::zero(1);
    prev.c(0, 0) = 0.8;
    const Matrix u(1, 1, {0.3});
    const LstmState out = lstm_step(p, u, prev);
    CHECK(out.c(0, 0) == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(out.h(0, 0) == doctest::Approx(std::tanh(0.8)).epsilon(1e-9));
}

TEST_CASE("lstm_step rejects bad input shape") {
    const LstmParams p = LstmParams::zeros(3, 4);
    CHECK_THROWS_AS(lstm_step(p, Matrix(5, 1), LstmState::zero(4)), ShapeError);
}

TEST_CASE("lstm h stays strictly inside (-1, 1)") {
    RngStream rng(17);
    LstmParams p = LstmParams::init(6, 8, rng.child("p"));
    for (Matrix* t : p.tensors())
        for (double& v : t->raw())
            v *= 10.0; // push the cell hard
    LstmState st = LstmState::zero(8);
    RngStream data = rng.child("data");
    for (int t = 0; t < 20; ++t) {
        st = lstm_step(p, random_vec(6, data), st);
        for (std::size_t k = 0; k < 8; ++k) {
            CHECK(st.h(k, 0) > -1.0);
            CHECK(st.h(k, 0) < 1.0);
        }
    }
}

TEST_CASE("lstm_backward zero upstream gives zero grads") {
    RngStream rng(5);
    const LstmParams p = LstmParams::init(4, 3, rng);
    std::vector<LstmStepTape> tape(3);
    LstmState st = LstmState::zero(3);
    RngStream data = rng.child("data");
    for (int t = 0; t < 3; ++t)
        st = lstm_step(p, random_vec(4, data), st, &tape[t]);
    const std::vector<Matrix> upstream(3, Matrix(3, 1));
    const LstmGrads g = lstm_backward(p, tape, upstream);
    for (const Matrix* t : g.tensors())
        for (double v : t->raw())
            CHECK(v == 0.0);
}

TEST_CASE("lstm_backward rejects length mismatch") {
    const LstmParams p = LstmParams::zeros(2, 2);
    std::vector<LstmStepTape> tape(2);
    LstmState st = LstmState::zero(2);
    tape.resize(2);
    st = lstm_step(p, Matrix(2, 1), st, &tape[0]);
    st = lstm_step(p, Matrix(2, 1), st, &tape[1]);
    const std::vector<Matrix> upstream(1, Matrix(2, 1));
    CHECK_THROWS_AS(lstm_backward(p, tape, upstream), ProtocolError);
}

TEST_CASE("lstm gradients match finite differences, single step") {
    RngStream rng(31);
    LstmParams p = LstmParams::init(5, 4, rng.child("p"));
    RngStream data = rng.child("data");
    const Matrix u = random_vec(5, data);
    const Matrix weights = random_vec(4, data); // random linear readout as loss

    const std::vector<Matrix> fd_inputs = {u};
    const std::vector<Matrix> fd_upstream = {weights};
    auto loss = [&]() { return reference::lstm_cell_readout(p, fd_inputs, fd_upstream); };

    std::vector<LstmStepTape> tape(1);
    lstm_step(p, u, LstmState::zero(4), &tape[0]);
    const std::vector<Matrix> upstream = {weights};
    LstmGrads g = lstm_backward(p, tape, upstream);

    const std::vector<std::string> names = {"W_f", "W_i", "W_g", "W_o",
                                            "b_f", "b_i", "b_g", "b_o"};
    const auto res = check_gradients("single-step", p.tensors(),
                                     std::as_const(g).tensors(), names, loss);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("lstm gradients match finite differences, 4-step hidden 8") {
    RngStream rng(77);
    LstmParams p = LstmParams::init(6, 8, rng.child("p"));
    RngStream data = rng.child("data");
    std::vector<Matrix> inputs, upstream;
    for (int t = 0; t < 4; ++t) {
        inputs.push_back(random_vec(6, data));
        upstream.push_back(random_vec(8, data));
    }

    auto run = [&](std::vector<LstmStepTape>* tape) {
        LstmState st = LstmState::zero(8);
        double l = 0.0;
        for (std::size_t t = 0; t < 4; ++t) {
            st = lstm_step(p, inputs[t], st, tape ? &(*tape)[t] : nullptr);
            for (std::size_t k = 0; k < 8; ++k)
                l += upstream[t](k, 0) * st.h(k, 0);
        }
        return l;
    };

    std::vector<LstmStepTape> tape(4);
    run(&tape);
    LstmGrads g = lstm_backward(p, tape, upstream);
    const std::vector<std::string> names = {"W_f", "W_i", "W_g", "W_o",
                                            "b_f", "b_i", "b_g", "b_o"};
    auto loss = [&]() { return reference::lstm_cell_readout(p, inputs, upstream); };
    const auto res =
        check_gradients("4-step", p.tensors(), std::as_const(g).tensors(), names, loss);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("lstm_backward also reports input gradients") {
    RngStream rng(13);
    LstmParams p = LstmParams::init(3, 2, rng.child("p"));
    RngStream data = rng.child("data");
    Matrix u = random_vec(3, data);
    const Matrix w = random_vec(2, data);

    std::vector<LstmStepTape> tape(1);
    lstm_step(p, u, LstmState::zero(2), &tape[0]);
    std::vector<Matrix> d_inputs;
    lstm_backward(p, tape, std::vector<Matrix>{w}, &d_inputs);
    REQUIRE(d_inputs.size() == 1);

    const double eps = 1e-5;
    for (std::size_t k = 0; k < 3; ++k) {
        const double saved = u(k, 0);
        auto eval = [&]() {
            const LstmState st = lstm_step(p, u, LstmState::zero(2));
            return w(0, 0) * st.h(0, 0) + w(1, 0) * st.h(1, 0);
        };
        u(k, 0) = saved + eps;
        const double up = eval();
        u(k, 0) = saved - eps;
        const double dn = eval();
        u(k, 0) = saved;
        CHECK(d_inputs[0](k, 0) == doctest::Approx((up - dn) / (2 * eps)).epsilon(1e-4));
    }
}

TEST_CASE("mlp dropout rate 0 matches eval mode bit for bit") {
    RngStream rng(21);
    const MlpParams p = MlpParams::init(5, 6, 3, rng.child("p"));
    RngStream data = rng.child("data");
    const Matrix x = random_vec(5, data);
    RngStream drop = rng.child("drop");
    const Matrix train_out = mlp_forward(p, x, true, 0.0, &drop);
    const Matrix eval_out = mlp_forward(p, x, false, 0.0, nullptr);
    CHECK(train_out == eval_out);
}

TEST_CASE("mlp zero output layer gives the uniform distribution") {
    RngStream rng(22);
    MlpParams p = MlpParams::init(5, 6, 4, rng.child("p"));
    p.W_out.set_zero();
    p.b_out.set_zero();
    RngStream data = rng.child("data");
    const Matrix out = mlp_forward(p, random_vec(5, data), false, 0.0, nullptr);
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(out(0, c) == doctest::Approx(0.25));
}

TEST_CASE("mlp cross-entropy gradients match finite differences") {
    RngStream rng(23);
    MlpParams p = MlpParams::init(6, 5, 4, rng.child("p"));
    RngStream data = rng.child("data");
    const Matrix x = random_vec(6, data);
    const std::size_t target = 2;

    MlpTape tape;
    mlp_forward(p, x, false, 0.0, nullptr, &tape);
    MlpGrads g = MlpGrads::zeros_like(p);
    auto [l0, d_logits] = cross_entropy(tape.probs, target);
    (void)l0;
    mlp_backward(p, tape, d_logits, g);

    auto loss = [&]() { return reference::mlp_ce(p, x, target); };
    const std::vector<std::string> names = {"W_hidden", "b_hidden", "W_out", "b_out"};
    const auto res =
        check_gradients("mlp", p.tensors(), std::as_const(g).tensors(), names, loss);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("apply_dropout rate 0 is the identity") {
    RngStream rng(1);
    const Matrix x{{1.0, 2.0}, {3.0, 4.0}};
    auto [y, mask] = apply_dropout(x, 0.0, rng);
    CHECK(y == x);
    for (double v : mask.raw())
        CHECK(v == 1.0);
}

TEST_CASE("apply_dropout keeps the expectation") {
    RngStream rng(99);
    Matrix x = Matrix::filled(1000, 1000, 1.0);
    auto [y, mask] = apply_dropout(x, 0.1, rng);
    (void)mask;
    double mean = 0.0;
    for (double v : y.raw())
        mean += v;
    mean /= static_cast<double>(y.size());
    CHECK(mean > 0.99);
    CHECK(mean < 1.01);
}

TEST_CASE("apply_dropout fixed seed reproduces the mask") {
    const Matrix x = Matrix::filled(10, 10, 2.0);
    RngStream a(1234), b(1234);
    auto [ya, ma] = apply_dropout(x, 0.3, a);
    auto [yb, mb] = apply_dropout(x, 0.3, b);
    CHECK(ma == mb);
    CHECK(ya == yb);
}

TEST_CASE("apply_dropout rejects rate >= 1") {
    RngStream rng(1);
    CHECK_THROWS_AS(apply_dropout(Matrix(2, 2), 1.0, rng), ConfigError);
    CHECK_THROWS_AS(apply_dropout(Matrix(2, 2), 1.5, rng), ConfigError);
}

TEST_CASE("forward passes are deterministic with dropout off") {
    RngStream rng(55);
    const MlpParams p = MlpParams::init(4, 4, 3, rng.child("p"));
    RngStream data = rng.child("data");
    const Matrix x = random_vec(4, data);
    CHECK(mlp_forward(p, x, false, 0.0, nullptr) == mlp_forward(p, x, false, 0.0, nullptr));
}

} // TEST_SUITE

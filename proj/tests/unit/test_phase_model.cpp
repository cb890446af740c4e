#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "phaseat/error.hpp"
#include "phaseat/phase_model.hpp"

using namespace phaseat;

namespace {

PhaseModel seeded_model(std::size_t d, std::size_t classes, std::size_t heads, std::uint64_t seed,
                        Activation hidden = Activation::tanh) {
    Rng rng(seed);
    std::vector<double> dir = oracle::random_vector(d, rng);
    double n = 0.0;
    for (double v : dir) n += v * v;
    for (double& v : dir) v /= std::sqrt(n);
    ModelShape shape;
    shape.input_dim = d;
    shape.hidden = {6, 5};
    shape.hidden_activation = hidden;
    shape.num_classes = classes;
    shape.heads = heads;
    PhaseModel m = PhaseModel::create(shape, ProjectionSpec{dir, 1.0}, rng);
    auto flat = m.flatten();
    for (double& v : flat) v += rng.uniform(-0.1, 0.1);
    m.assign(flat);
    return m;
}

ParameterSet constant_head(std::size_t in, std::vector<double> value) {
    Layer l;
    l.in = in;
    l.out = value.size();
    l.weight.assign(in * value.size(), 0.0);
    l.bias = std::move(value);
    l.activation = Activation::identity;
    return ParameterSet({l});
}

double logit_loss(std::span<const double> logits, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) s += w[i] * logits[i] + 0.1 * logits[i] * logits[i];
    return s;
}

std::vector<double> logit_loss_grad(std::span<const double> logits, std::span<const double> w) {
    std::vector<double> g(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) g[i] = w[i] + 0.2 * logits[i];
    return g;
}

}  // namespace

TEST_SUITE("phase-model") {

TEST_CASE("first principal component of points along one axis") {
    std::vector<double> v;
    for (int t = -5; t <= 5; ++t) v.insert(v.end(), {0.3 * t, 0.0, 0.0});
    const auto p = compute_first_pc(Tensor::matrix(11, 3, v), 100, 1);
    CHECK(p.direction[0] == doctest::Approx(1.0));
    CHECK(p.direction[1] == doctest::Approx(0.0));
    CHECK(p.direction[2] == doctest::Approx(0.0));
}

TEST_CASE("principal component of diag(4,1) samples is within 2 degrees of the analytic eigenvector") {
    Rng rng(17);
    const std::size_t n = 2000;
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.insert(v.end(), {rng.normal(0.0, 2.0), rng.normal(0.0, 1.0)});
    const auto p = compute_first_pc(Tensor::matrix(n, 2, v), 100, 3);

    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += v[2 * i];
        my += v[2 * i + 1];
    }
    mx /= n;
    my /= n;
    double a = 0, b = 0, c = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = v[2 * i] - mx, dy = v[2 * i + 1] - my;
        a += dx * dx;
        b += dx * dy;
        c += dy * dy;
    }
    // Dominant eigenvector of [[a, b], [b, c]].
    const double lambda = 0.5 * (a + c) + std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    double ex = b, ey = lambda - a;
    const double en = std::hypot(ex, ey);
    ex /= en;
    ey /= en;
    const double cosang = std::abs(ex * p.direction[0] + ey * p.direction[1]);
    CHECK(std::acos(std::min(1.0, cosang)) * 180.0 / M_PI < 2.0);
    CHECK(std::abs(p.direction[0]) > 0.99);
}

TEST_CASE("principal component of identical points is degenerate") {
    const auto t = Tensor::matrix(4, 2, {1, 2, 1, 2, 1, 2, 1, 2});
    CHECK_THROWS_AS(compute_first_pc(t, 100, 1), DegeneracyError);
}

TEST_CASE("principal component needs two samples") {
    CHECK_THROWS_AS(compute_first_pc(Tensor::matrix(1, 2, {1, 2}), 100, 1), ShapeError);
}

TEST_CASE("principal component is unit norm with its largest component positive") {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 2 + rng.index(6);
        const auto v = oracle::random_vector(30 * d, rng);
        const auto p = compute_first_pc(Tensor::matrix(30, d, v), 100, rng.next());
        CHECK_NOTHROW(p.validate());
        const auto big = std::max_element(p.direction.begin(), p.direction.end(),
                                          [](double a, double b) { return std::abs(a) < std::abs(b); });
        CHECK(*big > 0.0);
    }
}

TEST_CASE("projection of x parallel to p is C") {
    const ProjectionSpec p{{0.6, 0.8}, 1.0};
    CHECK(project(std::vector<double>{3, 4}, p) == doctest::Approx(1.0));
    const ProjectionSpec q{{0.6, 0.8}, 2.5};
    CHECK(project(std::vector<double>{3, 4}, q) == doctest::Approx(2.5));
}

TEST_CASE("projection of x orthogonal to p is zero") {
    const ProjectionSpec p{{1.0, 0.0}, 1.0};
    CHECK(project(std::vector<double>{0, 7}, p) == 0.0);
}

TEST_CASE("projection of (3,4) onto (1,0) is 3/5") {
    const ProjectionSpec p{{1.0, 0.0}, 1.0};
    CHECK(project(std::vector<double>{3, 4}, p) == doctest::Approx(0.6));
}

TEST_CASE("projection of the zero vector is zero with zero gradient") {
    const ProjectionSpec p{{1.0, 0.0}, 1.0};
    const std::vector<double> zero{0, 0};
    CHECK(project(zero, p) == 0.0);
    for (double g : project_gradient(zero, p)) CHECK(g == 0.0);
}

TEST_CASE("projection gradient matches finite differences") {
    Rng rng(4);
    const ProjectionSpec p{{0.48, 0.6, 0.64}, 1.7};
    for (int t = 0; t < 20; ++t) {
        const auto x = oracle::random_vector(3, rng);
        const auto numeric = oracle::central_difference(
            [&](const std::vector<double>& v) { return oracle::direct_projection(v, p); }, x);
        CHECK(oracle::max_relative_error(project_gradient(x, p), numeric) < 1e-6);
    }
}

TEST_CASE("projection spec validation") {
    CHECK_THROWS_AS(ProjectionSpec({{1.0, 1.0}, 1.0}).validate(), StateError);
    CHECK_THROWS_AS(ProjectionSpec({{1.0, 0.0}, 0.0}).validate(), StateError);
    CHECK_NOTHROW(ProjectionSpec({{1.0, 0.0}, 1.0}).validate());
}

TEST_CASE("all-zero frequencies give the sum of real heads") {
    const auto m = seeded_model(3, 4, 3, 5);
    const std::vector<double> x{0.2, -0.5, 0.9};
    const auto logits = phase_logits(m, FrequencyAssignment::zeros(3), x);
    const auto f = oracle::dense_stack(m.extractor(), x);
    std::vector<double> want(4, 0.0);
    for (const auto& h : m.heads()) {
        const auto r = oracle::dense_stack(h.real, f);
        for (std::size_t c = 0; c < 4; ++c) want[c] += r[c];
    }
    for (std::size_t c = 0; c < 4; ++c) CHECK(logits[c] == doctest::Approx(want[c]).epsilon(1e-13));
}

TEST_CASE("a single zero head is a plain network") {
    const auto m = seeded_model(3, 2, 1, 6);
    const std::vector<double> x{0.1, 0.4, -0.3};
    const auto logits = phase_logits(m, FrequencyAssignment::zeros(1), x);
    const auto want = evaluate(m.heads()[0].real, evaluate(m.extractor(), x));
    CHECK(logits == want);
}

TEST_CASE("two heads at z=0.25, omega=(0,1): logits = H0_re - H1_im") {
    Layer id;
    id.in = id.out = 2;
    id.weight = {1, 0, 0, 1};
    id.bias = {0, 0};
    std::vector<PhaseHead> heads{
        {constant_head(2, {1.0, 2.0}), constant_head(2, {5.0, 7.0})},
        {constant_head(2, {3.0, -4.0}), constant_head(2, {0.5, -1.5})},
    };
    const PhaseModel m(ParameterSet({id}), heads, ProjectionSpec{{1.0, 0.0}, 1.0});
    const std::vector<double> x{0.3, 0.1};
    const auto out = phase_forward_at(m, FrequencyAssignment{{0, 1}}, x, 0.25).logits;
    CHECK(out[0] == doctest::Approx(1.0 - 0.5));
    CHECK(out[1] == doctest::Approx(2.0 + 1.5));
}

TEST_CASE("phase-shifted logits match direct complex arithmetic") {
    Rng rng(8);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = seeded_model(4, 3, 3, seed);
        const auto x = oracle::random_vector(4, rng);
        const std::vector<int> w{0, static_cast<int>(rng.index(20)), static_cast<int>(rng.index(20))};
        const auto got = phase_logits(m, FrequencyAssignment{w}, x);
        const auto want = oracle::phase_logits_complex(m, w, x, oracle::direct_projection(x, m.projection()));
        for (std::size_t c = 0; c < 3; ++c) CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-11));
    }
}

TEST_CASE("zero-frequency model is bit-identical to phase_forward with zero frequencies") {
    Rng rng(3);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = seeded_model(3, 2, 3, seed);
        const auto x = oracle::random_vector(3, rng);
        CHECK(base_forward(m, x) == phase_forward(m, FrequencyAssignment::zeros(3), x).logits);
    }
}

TEST_CASE("a nonzero frequency with nonzero imaginary output changes the logits") {
    const auto m = seeded_model(3, 2, 2, 12);
    const std::vector<double> x{0.3, 0.2, -0.6};
    const double z = project(x, m.projection());
    REQUIRE(std::abs(std::sin(2 * M_PI * 3 * z)) > 1e-3);
    CHECK(base_forward(m, x) != phase_logits(m, FrequencyAssignment{{0, 3}}, x));
}

TEST_CASE("logits are periodic in the phase coordinate for integer frequencies") {
    Rng rng(21);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = seeded_model(3, 3, 3, seed);
        const auto x = oracle::random_vector(3, rng);
        const FrequencyAssignment f{{0, static_cast<int>(1 + rng.index(9)), static_cast<int>(1 + rng.index(9))}};
        const double z = rng.uniform(-1, 1);
        const auto a = phase_forward_at(m, f, x, z).logits;
        const auto b = phase_forward_at(m, f, x, z + 1.0).logits;
        for (std::size_t c = 0; c < 3; ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-9));
    }
}

TEST_CASE("phase_forward rejects a frequency list of the wrong length") {
    const auto m = seeded_model(3, 2, 3, 1);
    const std::vector<double> x{0.1, 0.2, 0.3};
    CHECK_THROWS_AS(phase_forward(m, FrequencyAssignment::zeros(2), x), ShapeError);
}

TEST_CASE("zero-frequency theta gradient matches finite differences") {
    const auto m = seeded_model(3, 3, 3, 14);
    const std::vector<double> x{0.4, -0.2, 0.7};
    const std::vector<double> w{0.3, -1.0, 0.5};
    const auto fwd = phase_forward(m, FrequencyAssignment::zeros(3), x);
    const auto back = phase_backward(m, fwd.trace, logit_loss_grad(fwd.logits, w));
    const auto numeric = oracle::central_difference(
        [&](const std::vector<double>& v) {
            PhaseModel q = m;
            q.assign(v);
            return logit_loss(base_forward(q, x), w);
        },
        m.flatten());
    CHECK(oracle::max_relative_error(back.grads.flatten(), numeric) < 1e-4);
}

TEST_CASE("phase_backward gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CAPTURE(seed);
        const auto m = seeded_model(3, 3, 3, seed);
        Rng rng(seed + 50);
        const auto x = oracle::random_vector(3, rng);
        const std::vector<double> w = oracle::random_vector(3, rng);
        for (const FrequencyAssignment f : {FrequencyAssignment::zeros(3), FrequencyAssignment{{0, 2, 7}}}) {
            const auto fwd = phase_forward(m, f, x);
            const auto back = phase_backward(m, fwd.trace, logit_loss_grad(fwd.logits, w));

            const auto theta = oracle::central_difference(
                [&](const std::vector<double>& v) {
                    PhaseModel q = m;
                    q.assign(v);
                    return logit_loss(phase_logits(q, f, x), w);
                },
                m.flatten());
            CHECK(oracle::max_relative_error(back.grads.flatten(), theta) < 1e-4);

            const auto dx = oracle::central_difference(
                [&](const std::vector<double>& v) { return logit_loss(phase_logits(m, f, v), w); }, x);
            CHECK(oracle::max_relative_error(back.grad_x, dx) < 1e-4);
        }
    }
}

TEST_CASE("stubbed phase coordinate contributes no input gradient through z") {
    const auto m = seeded_model(3, 2, 2, 9);
    const std::vector<double> x{0.2, 0.5, -0.1};
    const FrequencyAssignment f{{0, 4}};
    const double z = 0.37;
    const std::vector<double> w{1.0, -0.5};
    const auto fwd = phase_forward_at(m, f, x, z);
    const auto back = phase_backward(m, fwd.trace, logit_loss_grad(fwd.logits, w));
    const auto dx = oracle::central_difference(
        [&](const std::vector<double>& v) { return logit_loss(phase_forward_at(m, f, v, z).logits, w); }, x);
    CHECK(oracle::max_relative_error(back.grad_x, dx) < 1e-4);
}

TEST_CASE("a trace is stale once the parameters change") {
    auto m = seeded_model(3, 2, 2, 1);
    const std::vector<double> x{0.1, 0.2, 0.3};
    const auto fwd = phase_forward(m, FrequencyAssignment::zeros(2), x);
    m.apply_gradient(PhaseGradient::zeros_like(m), 0.1);
    const std::vector<double> g{1.0, 0.0};
    CHECK_THROWS_AS(phase_backward(m, fwd.trace, g), StateError);
}

TEST_CASE("flatten and assign round-trip") {
    auto m = seeded_model(4, 3, 3, 2);
    const auto flat = m.flatten();
    CHECK(flat.size() == m.parameter_count());
    auto other = seeded_model(4, 3, 3, 99);
    other.assign(flat);
    CHECK(other.flatten() == flat);
    CHECK_THROWS_AS(other.assign(std::vector<double>(flat.size() - 1)), ShapeError);
}

TEST_CASE("a model without heads cannot be created") {
    ModelShape shape;
    shape.input_dim = 2;
    shape.heads = 0;
    Rng rng(1);
    CHECK_THROWS_AS(PhaseModel::create(shape, ProjectionSpec{{1.0, 0.0}, 1.0}, rng), ConfigError);
}

}

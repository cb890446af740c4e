#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "phaseat/error.hpp"
#include "phaseat/spectral.hpp"

using namespace phaseat;

namespace {

Dataset sine_mix(std::size_t n, std::size_t dim, std::uint64_t seed) {
    DatasetSpec spec;
    spec.kind = DatasetKind::sine_mix;
    spec.n = n;
    spec.dim = dim;
    spec.seed = seed;
    return gen_dataset(spec);
}

// Direct O(n^2) evaluation of the low-pass and both error ratios.
struct DirectReport {
    double e_low = 0.0;
    double e_high = 0.0;
};

std::vector<std::vector<double>> direct_low(const std::vector<std::vector<double>>& x,
                                            const std::vector<std::vector<double>>& v, double variance) {
    std::vector<std::vector<double>> low;
    for (std::size_t j = 0; j < x.size(); ++j) {
        std::vector<long double> acc(v[0].size(), 0.0L);
        long double norm = 0.0L;
        for (std::size_t m = 0; m < x.size(); ++m) {
            long double d2 = 0.0L;
            for (std::size_t k = 0; k < x[j].size(); ++k) d2 += (x[j][k] - x[m][k]) * (x[j][k] - x[m][k]);
            const long double g = std::exp(-d2 / (2.0L * variance));
            norm += g;
            for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += g * v[m][c];
        }
        std::vector<double> row;
        for (auto a : acc) row.push_back(static_cast<double>(a / norm));
        low.push_back(row);
    }
    return low;
}

DirectReport direct_errors(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
                           const std::vector<std::vector<double>>& t, double variance) {
    const auto yl = direct_low(x, y, variance);
    const auto tl = direct_low(x, t, variance);
    long double nl = 0, dl = 0, nh = 0, dh = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        for (std::size_t c = 0; c < y[j].size(); ++c) {
            const long double yh = y[j][c] - yl[j][c], th = t[j][c] - tl[j][c];
            nl += (yl[j][c] - tl[j][c]) * (yl[j][c] - tl[j][c]);
            dl += yl[j][c] * yl[j][c];
            nh += (yh - th) * (yh - th);
            dh += yh * yh;
        }
    }
    return {static_cast<double>(std::sqrt(nl / dl)), static_cast<double>(std::sqrt(nh / dh))};
}

std::vector<std::vector<double>> rows(const Tensor& t) {
    std::vector<std::vector<double>> out;
    for (std::size_t j = 0; j < t.rows(); ++j) out.emplace_back(t.row(j).begin(), t.row(j).end());
    return out;
}

double diff_norm2(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace

TEST_SUITE("spectral-analysis") {

TEST_CASE("constant values pass through the low-pass unchanged") {
    Rng rng(1);
    const auto pts = Tensor::matrix(30, 2, oracle::random_vector(60, rng, -3, 3));
    const auto vals = Tensor::matrix(30, 2, std::vector<double>(60, 0.7));
    const auto low = gaussian_low_pass(pts, vals, FilterConfig{3.0});
    for (double v : low.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("a single point is its own low part") {
    const auto low = gaussian_low_pass(Tensor::matrix(1, 3, {1, 2, 3}), Tensor::matrix(1, 2, {0.25, -4}), FilterConfig{3.0});
    CHECK(low[0] == 0.25);
    CHECK(low[1] == -4.0);
}

TEST_CASE("three collinear points with a bump in the middle") {
    const auto low = gaussian_low_pass(Tensor::matrix(3, 1, {0, 1, 2}), Tensor::matrix(3, 1, {0, 1, 0}), FilterConfig{3.0});
    const double e = std::exp(-1.0 / 6.0);
    CHECK(low[1] == doctest::Approx(1.0 / (1.0 + 2.0 * e)).epsilon(1e-14));
    const double e4 = std::exp(-4.0 / 6.0);
    CHECK(low[0] == doctest::Approx(e / (1.0 + e + e4)).epsilon(1e-14));
}

TEST_CASE("low-pass matches the direct kernel sum on random data") {
    Rng rng(2);
    for (int t = 0; t < 5; ++t) {
        const std::size_t n = 5 + rng.index(40);
        const std::size_t d = 1 + rng.index(3);
        const auto pts = Tensor::matrix(n, d, oracle::random_vector(n * d, rng, -2, 2));
        const auto vals = Tensor::matrix(n, 2, oracle::random_vector(n * 2, rng));
        const double variance = rng.uniform(0.05, 4.0);
        const auto low = gaussian_low_pass(pts, vals, FilterConfig{variance});
        const auto want = direct_low(rows(pts), rows(vals), variance);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t c = 0; c < 2; ++c) CHECK(low[j * 2 + c] == doctest::Approx(want[j][c]).epsilon(1e-11));
        }
    }
}

TEST_CASE("outputs equal to the labels give zero errors") {
    const auto data = sine_mix(200, 1, 3);
    const auto report = SpectralAnalyzer(data, FilterConfig{0.01}).analyze(data.one_hot());
    REQUIRE(report.e_low.has_value());
    CHECK(*report.e_low == doctest::Approx(0.0));
    CHECK(*report.e_high == doctest::Approx(0.0));
}

TEST_CASE("outputs equal to the label low part give e_low 0 and e_high 1") {
    // Needs an idempotent low-pass; a very wide kernel is one (every point maps to the mean).
    const auto data = sine_mix(150, 1, 4);
    SpectralAnalyzer analyzer(data, FilterConfig{1e8});
    const auto labels = analyzer.analyze(data.one_hot());
    const auto r = analyzer.analyze(labels.label_low);
    CHECK(*r.e_low == doctest::Approx(0.0));
    CHECK(*r.e_high == doctest::Approx(1.0));
}

TEST_CASE("report matches a straight-line recomputation for a seeded random model") {
    const auto data = sine_mix(120, 2, 5);
    Rng rng(6);
    const auto net = ParameterSet::init(std::vector<std::size_t>{2, 16, 2},
                                        std::vector<Activation>{Activation::tanh, Activation::identity}, rng);
    const auto model = [&](std::span<const double> x) { return softmax(evaluate(net, x)).data(); };
    const FilterConfig cfg{0.05};
    const auto report = frequency_errors(model, data, cfg);

    std::vector<std::vector<double>> x, y, t;
    const auto oh = data.one_hot();
    for (std::size_t j = 0; j < data.size(); ++j) {
        x.emplace_back(data.input(j).begin(), data.input(j).end());
        y.emplace_back(oh.row(j).begin(), oh.row(j).end());
        t.push_back(oracle::direct_softmax(oracle::dense_stack(net, x.back())));
    }
    const auto want = direct_errors(x, y, t, cfg.variance);
    CHECK(*report.e_low == doctest::Approx(want.e_low).epsilon(1e-9));
    CHECK(*report.e_high == doctest::Approx(want.e_high).epsilon(1e-9));
}

TEST_CASE("low plus high recovers the values") {
    const auto data = sine_mix(100, 2, 7);
    SpectralAnalyzer analyzer(data, FilterConfig{0.2});
    Rng rng(8);
    const auto out = Tensor::matrix(100, 2, oracle::random_vector(200, rng, 0, 1));
    const auto r = analyzer.analyze(out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(std::abs(r.output_low[i] + r.output_high[i] - out[i]) <= 1e-12);
        CHECK(std::abs(r.label_low[i] + r.label_high[i] - data.one_hot()[i]) <= 1e-12);
    }
}

TEST_CASE("a second low-pass changes values less than the first") {
    Rng rng(9);
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = 20 + rng.index(30);
        const auto pts = Tensor::matrix(n, 2, oracle::random_vector(n * 2, rng, -2, 2));
        const auto vals = Tensor::matrix(n, 1, oracle::random_vector(n, rng));
        const FilterConfig cfg{rng.uniform(0.1, 2.0)};
        const auto once = gaussian_low_pass(pts, vals, cfg);
        const auto twice = gaussian_low_pass(pts, once, cfg);
        CHECK(diff_norm2(twice, once) < diff_norm2(once, vals));
    }
}

TEST_CASE("larger variance gives a smoother low part on sine-mix") {
    const auto data = sine_mix(200, 1, 10);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data.input(a)[0] < data.input(b)[0]; });
    double previous = INFINITY;
    for (double variance : {0.0005, 0.002, 0.01, 0.05, 0.3, 3.0}) {
        const auto low = gaussian_low_pass(data.inputs, data.targets, FilterConfig{variance});
        double rough = 0.0;
        for (std::size_t i = 1; i < order.size(); ++i) {
            const double d = low[order[i]] - low[order[i - 1]];
            rough += d * d;
        }
        CHECK(rough <= previous + 1e-12);
        previous = rough;
    }
}

TEST_CASE("errors do not depend on dataset order") {
    const auto data = sine_mix(80, 2, 11);
    Rng rng(12);
    const auto net = ParameterSet::init(std::vector<std::size_t>{2, 8, 2},
                                        std::vector<Activation>{Activation::relu, Activation::identity}, rng);
    const auto model = [&](std::span<const double> x) { return softmax(evaluate(net, x)).data(); };
    std::vector<std::size_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    const auto shuffled = data.subset(perm);
    const auto a = frequency_errors(model, data, FilterConfig{0.1});
    const auto b = frequency_errors(model, shuffled, FilterConfig{0.1});
    CHECK(*a.e_low == doctest::Approx(*b.e_low).epsilon(1e-12));
    CHECK(*a.e_high == doctest::Approx(*b.e_high).epsilon(1e-12));
}

TEST_CASE("a zero denominator is reported as undefined") {
    auto data = sine_mix(20, 1, 13);
    std::fill(data.labels.begin(), data.labels.end(), 1);
    const auto r = frequency_errors([](std::span<const double>) { return std::vector<double>{0.5, 0.5}; }, data,
                                    FilterConfig{0.1});
    CHECK(r.e_low.has_value());
    CHECK_FALSE(r.e_high.has_value());
}

TEST_CASE("subsampling keeps at most max_points sorted rows, seeded") {
    FilterConfig cfg{1.0, 50, 3};
    const auto a = spectral_subsample(500, cfg);
    CHECK(a.size() == 50);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(a == spectral_subsample(500, cfg));
    CHECK(spectral_subsample(40, cfg).size() == 40);
}

TEST_CASE("filter config validation") {
    CHECK_THROWS_AS(FilterConfig({0.0}).validate(), ConfigError);
    CHECK_THROWS_AS(FilterConfig({1.0, 1}).validate(), ConfigError);
}

}

#include "muygps/errors.hpp"
#include "muygps/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace muygps;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// CRPS as the integral of (F(x) - 1{x >= y})^2, Simpson's rule on each side
// of y so neither piece has a jump.
double simpson(double a, double b, auto f) {
    const int n = 20000;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * i);
    return s * h / 3.0;
}

double crps_by_quadrature(double y, double mu, double sd) {
    const auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mu) / (sd * std::numbers::sqrt2)); };
    const double lo = std::min(y, mu) - 12.0 * sd;
    const double hi = std::max(y, mu) + 12.0 * sd;
    return simpson(lo, y, [&](double x) { return cdf(x) * cdf(x); }) +
           simpson(y, hi, [&](double x) { return (1.0 - cdf(x)) * (1.0 - cdf(x)); });
}

}  // namespace

TEST_CASE("absolute and squared error") {
    const Vector truth = vec({0.0, 0.0});
    const Vector pred = vec({3.0, -4.0});
    CHECK(mae(truth, pred) == 3.5);
    CHECK(rmse(truth, pred) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    CHECK(rmse(truth, truth) == 0.0);
    CHECK_THROWS_AS(mae(truth, vec({1.0})), ShapeError);
    CHECK_THROWS_AS(rmse(Vector(0), Vector(0)), InsufficientDataError);
}

TEST_CASE("gaussian crps") {
    SUBCASE("truth at the mean") {
        const double expect = (2.0 - std::numbers::sqrt2) / std::sqrt(2.0 * std::numbers::pi);
        CHECK(crps_gaussian(vec({1.0}), vec({1.0}), vec({1.0})) == doctest::Approx(expect).epsilon(1e-15));
        // Scales with the standard deviation.
        CHECK(crps_gaussian(vec({1.0}), vec({1.0}), vec({4.0})) == doctest::Approx(2.0 * expect).epsilon(1e-15));
    }
    SUBCASE("vanishing spread tends to absolute error") {
        CHECK(crps_gaussian(vec({2.0}), vec({2.0}), vec({1e-20})) < 1e-10);
        CHECK(crps_gaussian(vec({2.5}), vec({2.0}), vec({1e-20})) == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("agrees with the defining integral") {
        for (double y : {-3.0, -0.4, 0.0, 0.9, 5.0}) {
            const double c = crps_gaussian(vec({y}), vec({0.3}), vec({1.7}));
            CHECK(c == doctest::Approx(crps_by_quadrature(y, 0.3, std::sqrt(1.7))).epsilon(1e-10));
        }
    }
    SUBCASE("agrees with the sampling identity") {
        // CRPS = E|X - y| - E|X - X'| / 2
        std::mt19937_64 rng(3);
        std::normal_distribution<double> g(0.5, 1.3);
        const int m = 400000;
        double a = 0.0;
        double b = 0.0;
        for (int i = 0; i < m; ++i) {
            const double x = g(rng);
            a += std::abs(x - 1.7);
            b += std::abs(x - g(rng));
        }
        const double mc = a / m - 0.5 * b / m;
        CHECK(crps_gaussian(vec({1.7}), vec({0.5}), vec({1.69})) == doctest::Approx(mc).epsilon(1e-2));
    }
    CHECK_THROWS_AS(crps_gaussian(vec({1.0}), vec({1.0}), vec({0.0})), ParameterError);
}

TEST_CASE("interval score") {
    const Vector lo = vec({-1.0, -1.0, -1.0});
    const Vector hi = vec({1.0, 1.0, 1.0});
    CHECK(interval_score(vec({0.0}), vec({-1.0}), vec({1.0})) == 2.0);
    CHECK(interval_score(vec({2.0}), vec({-1.0}), vec({1.0})) == doctest::Approx(2.0 + 40.0).epsilon(1e-15));
    CHECK(interval_score(vec({-1.5}), vec({-1.0}), vec({1.0}), 0.1) == doctest::Approx(2.0 + 10.0).epsilon(1e-15));
    CHECK(interval_score(vec({0.0, 2.0, -1.5}), lo, hi) == doctest::Approx((2.0 + 42.0 + 22.0) / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(interval_score(vec({0.0}), vec({1.0}), vec({-1.0})), ParameterError);
    CHECK_THROWS_AS(interval_score(vec({0.0}), vec({-1.0}), vec({1.0}), 1.0), ParameterError);
}

TEST_CASE("coverage counts endpoints as inside") {
    const Vector lo = vec({-1.0, -1.0});
    const Vector hi = vec({1.0, 1.0});
    CHECK(coverage(vec({1.0, -1.0}), lo, hi) == 1.0);
    CHECK(coverage(vec({1.5, -3.0}), lo, hi) == 0.0);
    CHECK(coverage(vec({0.0, 3.0}), lo, hi) == 0.5);
}

TEST_CASE("report formatting") {
    const Vector truth = vec({0.0, 1.0});
    const Vector mean = vec({0.5, 1.0});
    const Vector var = vec({1.0, 1.0});
    const Vector lo = vec({-1.0, 0.0});
    const Vector hi = vec({2.0, 2.0});
    MetricsReport r = evaluate(truth, mean, var, lo, hi);
    r.timings = {30.0, 60.0, 30.0};
    CHECK(r.mae == 0.25);
    CHECK(r.n_test == 2);
    CHECK(r.coverage == 1.0);
    CHECK(MetricsReport::table_header() == "MAE,RMSE,CRPS,INT,COV,Time (min)");
    const std::string row = r.table_row();
    CHECK(row.rfind("0.25,0.35,", 0) == 0);
    CHECK(row.substr(row.size() - 10) == ",1.00,2.00");
    const std::string kv = r.to_key_value();
    CHECK(kv.find("mae = ") == 0);
    CHECK(kv.find("\ncov = 1\n") != std::string::npos);
    CHECK(kv.find("n_test = 2\n") != std::string::npos);
}

#include "muygps/errors.hpp"
#include "muygps/optimize.hpp"

#include <doctest.h>

#include <cmath>

using namespace muygps;

namespace {

bool nonincreasing(const std::vector<double>& t) {
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] > t[i - 1]) return false;
    return true;
}

}  // namespace

TEST_CASE("interior minimum of a bowl") {
    const Objective f = [](std::span<const double> x) {
        return (x[0] - 0.7) * (x[0] - 0.7) + 3.0 * (x[1] - 1.9) * (x[1] - 1.9) + 0.5 * (x[0] - 0.7) * (x[1] - 1.9);
    };
    const std::vector<Bounds> box{{0.1, 5.0}, {0.1, 5.0}};
    const MinimizeResult r = minimize_bounded(f, {3.0, 0.5}, box);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(0.7).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(1.9).epsilon(1e-4));
    CHECK(r.trace.front() == f(std::vector<double>{3.0, 0.5}));
    CHECK(r.trace.back() == r.value);
    CHECK(nonincreasing(r.trace));
}

TEST_CASE("minimum outside the box lands on the bound") {
    const Objective f = [](std::span<const double> x) { return (x[0] + 1.0) * (x[0] + 1.0) + (x[1] - 0.5) * (x[1] - 0.5); };
    const std::vector<Bounds> box{{0.1, 5.0}, {0.0, 1.0}};
    const MinimizeResult r = minimize_bounded(f, {2.0, 0.9}, box);
    CHECK(r.x[0] == 0.1);
    CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("iterates never leave the box") {
    const std::vector<Bounds> box{{0.5, 1.5}, {-1.0, 2.0}};
    const Objective f = [&](std::span<const double> x) {
        REQUIRE(x[0] >= 0.5);
        REQUIRE(x[0] <= 1.5);
        REQUIRE(x[1] >= -1.0);
        REQUIRE(x[1] <= 2.0);
        return std::pow(1.0 - x[0], 2) + 100.0 * std::pow(x[1] - x[0] * x[0], 2);
    };
    const MinimizeResult r = minimize_bounded(f, {1.4, -0.8}, box);
    CHECK(r.value < 1e-6);
    CHECK(nonincreasing(r.trace));
}

TEST_CASE("rosenbrock from the textbook start") {
    const Objective f = [](std::span<const double> x) {
        return std::pow(1.0 - x[0], 2) + 100.0 * std::pow(x[1] - x[0] * x[0], 2);
    };
    const std::vector<Bounds> box{{-2.0, 2.0}, {-2.0, 2.0}};
    OptimizerOptions opt;
    opt.max_iterations = 200;
    const MinimizeResult r = minimize_bounded(f, {-1.2, 1.0}, box, opt);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(2e-2));
}

TEST_CASE("start at the optimum stops almost at once") {
    const Objective f = [](std::span<const double> x) { return 1.0 + (x[0] - 2.0) * (x[0] - 2.0); };
    const std::vector<Bounds> box{{0.1, 5.0}};
    const MinimizeResult r = minimize_bounded(f, {2.0}, box);
    CHECK(r.converged);
    CHECK(r.iterations <= 2);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("start point outside the box is clamped") {
    const Objective f = [](std::span<const double> x) { return (x[0] - 1.0) * (x[0] - 1.0); };
    const std::vector<Bounds> box{{0.1, 5.0}};
    const MinimizeResult r = minimize_bounded(f, {9.0}, box);
    CHECK(r.trace.front() == 16.0);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("golden section on one parameter") {
    const Objective f = [](std::span<const double> x) { return std::abs(x[0] - 0.3) + 0.1 * x[0]; };
    const std::vector<Bounds> box{{0.0, 1.0}};
    OptimizerOptions opt;
    opt.method = OptimizerMethod::golden;
    const MinimizeResult r = minimize_bounded(f, {0.9}, box, opt);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(0.3).epsilon(1e-5));
    CHECK(r.value <= r.trace.front());

    const std::vector<Bounds> two{{0.0, 1.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(minimize_bounded(f, {0.5, 0.5}, two, opt), ParameterError);
}

TEST_CASE("bad input") {
    const Objective f = [](std::span<const double> x) { return x[0] * x[0]; };
    CHECK_THROWS_AS(minimize_bounded(f, {}, std::vector<Bounds>{}), ParameterError);
    CHECK_THROWS_AS(minimize_bounded(f, {1.0}, std::vector<Bounds>{{1.0, 0.0}}), ParameterError);
    CHECK_THROWS_AS(minimize_bounded(f, {1.0, 2.0}, std::vector<Bounds>{{0.0, 3.0}}), ShapeError);
    const Objective nan = [](std::span<const double> x) { return x[0] > 0.5 ? NAN : 1.0 - x[0]; };
    CHECK_THROWS_AS(minimize_bounded(nan, {0.2}, std::vector<Bounds>{{0.0, 1.0}}), NumericalError);
}

TEST_CASE("method names") {
    CHECK(parse_optimizer_method("lbfgsb") == OptimizerMethod::quasi_newton);
    CHECK(parse_optimizer_method("golden") == OptimizerMethod::golden);
    CHECK(to_string(OptimizerMethod::quasi_newton) == "quasi_newton");
    CHECK_THROWS_AS(parse_optimizer_method("nelder"), ParameterError);
}

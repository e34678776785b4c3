// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any required criterion fails.
//
//   MUYGPS_ACCEPTANCE_ONLY=3,5      run a subset
//   MUYGPS_BENCHMARK_DATA=path.csv  enable the optional benchmark criterion
//                                   (columns Lon, Lat, MaskTemp, TrueTemp)

#include "muygps/cli.hpp"
#include "muygps/data.hpp"
#include "muygps/errors.hpp"
#include "muygps/metrics.hpp"
#include "muygps/predictor.hpp"
#include "muygps/trainer.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace muygps;

namespace {

// Pinned tolerances.
constexpr double kOracleRelTol = 1e-8;
constexpr double kKernelRelTol = 1e-10;
constexpr double kRecoveryNuAbs = 0.2;
constexpr double kRecoverySigmaRel = 0.30;
constexpr double kCoverageLo = 0.92;
constexpr double kCoverageHi = 0.975;
constexpr Index kCoverageMinPoints = 2000;
constexpr double kBatchStdRatio = 0.10;
constexpr double kCrpsAbsTol = 1e-3;
constexpr double kScalingMaxRatio = 2.0;
constexpr double kBenchMae = 1.25;
constexpr double kBenchRmse = 1.70;
constexpr double kBenchCovLo = 0.90;
constexpr double kBenchCovHi = 0.97;
constexpr double kBenchMinutes = 10.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Verdict {
    bool pass = false;
    std::string detail;
    bool skipped = false;
};

TrainingSet training_from(const GridDataset& d) {
    const auto ids = d.cell_ids(CellStatus::train);
    Locations x(static_cast<Index>(ids.size()), 2);
    Vector y(x.rows());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto c = static_cast<std::size_t>(ids[i]);
        x(static_cast<Index>(i), 0) = d.lon[c];
        x(static_cast<Index>(i), 1) = d.lat[c];
        y[static_cast<Index>(i)] = d.response[c];
    }
    return {x, y};
}

// 1. Nearest-neighbor code with every point as a neighbor against dense kriging.
Verdict oracle_equivalence() {
    std::mt19937_64 rng(20240101);
    std::uniform_int_distribution<Index> size(60, 300);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_loss = 0.0;
    double worst_mean = 0.0;
    double worst_var = 0.0;
    const auto start = Clock::now();
    for (int problem = 0; problem < 10; ++problem) {
        const Index n = size(rng);
        const HyperParams p = HyperParams::make(0.5 + 2.0 * u(rng), 0.05 + 0.4 * u(rng), 0.3 + 2.5 * u(rng),
                                                1e-3 + 0.05 * u(rng));
        Locations x(n, 2);
        for (Index i = 0; i < n; ++i) {
            x(i, 0) = u(rng);
            x(i, 1) = u(rng);
        }
        std::normal_distribution<double> z;
        Vector e(n);
        for (Index i = 0; i < n; ++i) e[i] = z(rng);
        const Matrix cov = local_covariance(x, p);
        const TrainingSet t{x, Eigen::LLT<Matrix>(cov).matrixL() * e};

        // Dense leave-one-out residuals from the precision matrix.
        const Matrix prec = cov.inverse();
        const Vector resid = (prec * t.responses).cwiseQuotient(prec.diagonal());
        const double dense = resid.squaredNorm() / static_cast<double>(n);

        const auto index = NeighborIndex::build(x, Backend::exact);
        std::vector<Index> all(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
        const double loss = batched_loss(t, index, all, static_cast<std::size_t>(n - 1), p);
        worst_loss = std::max(worst_loss, rel_err(loss, dense));

        Locations test(25, 2);
        for (Index i = 0; i < test.rows(); ++i) {
            test(i, 0) = u(rng);
            test(i, 1) = u(rng);
        }
        const auto full = predict_full(t, test, p);
        const PredictionSet nn = NnPredictor(t, index, static_cast<std::size_t>(n), p).predict(test);
        for (std::size_t i = 0; i < full.size(); ++i) {
            worst_mean = std::max(worst_mean, std::abs(nn.points[i].mean - full[i].mean) /
                                                  std::max(std::abs(full[i].mean), 1e-3));
            worst_var = std::max(worst_var, rel_err(nn.points[i].variance, full[i].variance));
        }
    }
    const double secs = seconds_since(start);
    const bool ok = worst_loss < kOracleRelTol && worst_mean < kOracleRelTol && worst_var < kOracleRelTol && secs < 60;
    return {ok, fmt("loss rel %.2e, mean rel %.2e, variance rel %.2e (tol %.0e), %.1f s", worst_loss, worst_mean,
                    worst_var, kOracleRelTol, secs)};
}

// 2. Closed forms written out here, compared with both kernel paths.
Verdict kernel_identities() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> logd(std::log(1e-6), std::log(10.0));
    const double rho = 0.35;
    const double sigma_sq = 1.7;
    const double tau_sq = 0.02;
    double worst = 0.0;
    bool zero_exact = true;
    for (double nu : {0.5, 1.5, 2.5}) {
        const HyperParams p = HyperParams::make(sigma_sq, rho, nu, tau_sq);
        const MaternKernel fast(p);
        const MaternKernel slow = MaternKernel::bessel_only(p);
        for (int i = 0; i < 1000; ++i) {
            const double d = rho * std::exp(logd(rng));
            double closed = 0.0;
            if (nu == 0.5) {
                closed = std::exp(-d / rho);
            } else if (nu == 1.5) {
                const double s = std::sqrt(3.0) * d / rho;
                closed = (1.0 + s) * std::exp(-s);
            } else {
                const double s = std::sqrt(5.0) * d / rho;
                closed = (1.0 + s + s * s / 3.0) * std::exp(-s);
            }
            closed *= sigma_sq;
            worst = std::max({worst, rel_err(fast(d), closed), rel_err(slow(d), closed), rel_err(matern(d, p), closed)});
        }
        zero_exact = zero_exact && fast(0.0) == sigma_sq * (1.0 + tau_sq) && slow(0.0) == sigma_sq * (1.0 + tau_sq);
    }
    return {worst < kKernelRelTol && zero_exact,
            fmt("worst rel %.2e (tol %.0e), d=0 exact: %s", worst, kKernelRelTol, zero_exact ? "yes" : "no")};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// 3. Smoothness and scale recovered from simulated fields.
Verdict recovery() {
    const double nu_true = 0.8;
    const double rho_true = 0.2;
    const double sigma_true = 2.5;
    std::vector<double> nus;
    std::vector<double> sigmas;
    const auto start = Clock::now();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SimulationSpec spec;
        spec.params = HyperParams::make(sigma_true, rho_true, nu_true, 0.001);
        spec.seed = 1000 + seed;
        const TrainingSet t = training_from(simulate_gp(spec).data);
        const auto index = NeighborIndex::build(t.locations, Backend::exact);
        HyperParams init = HyperParams::make(1.0, rho_true, 1.0, 0.001);
        init.nu = Param::free(1.0, 0.1, 5.0);
        const TrainResult r = optimize(t, index, {500, seed}, 50, init);
        nus.push_back(r.params.nu.value);
        sigmas.push_back(r.params.sigma_sq.value);
    }
    const double secs = seconds_since(start);
    const double nu_med = median(nus);
    const double sigma_med = median(sigmas);
    const auto [nu_lo, nu_hi] = std::minmax_element(nus.begin(), nus.end());
    const auto [s_lo, s_hi] = std::minmax_element(sigmas.begin(), sigmas.end());
    const bool ok = std::abs(nu_med - nu_true) <= kRecoveryNuAbs &&
                    std::abs(sigma_med - sigma_true) <= kRecoverySigmaRel * sigma_true && secs < 300;
    return {ok, fmt("median nu %.3f (range %.3f..%.3f, truth %.1f +- %.1f), median sigma_sq %.3f (range %.3f..%.3f, "
                    "truth %.1f +- %.0f%%), %.1f s",
                    nu_med, *nu_lo, *nu_hi, nu_true, kRecoveryNuAbs, sigma_med, *s_lo, *s_hi, sigma_true,
                    100 * kRecoverySigmaRel, secs)};
}

// 4. Nominal 95% intervals under the generating parameters.
Verdict coverage_calibration() {
    const HyperParams truth = HyperParams::make(1.5, 0.15, 1.2, 0.01);
    Index inside = 0;
    Index total = 0;
    const auto start = Clock::now();
    for (std::uint64_t seed = 0; total < kCoverageMinPoints; ++seed) {
        SimulationSpec spec;
        spec.rows = 50;
        spec.cols = 50;
        spec.params = truth;
        spec.seed = 500 + seed;
        const GridDataset d = mask_split(simulate_gp(spec).data, 0.25, seed);
        const TrainingSet t = training_from(d);
        const auto test_ids = d.cell_ids(CellStatus::test);
        Locations x(static_cast<Index>(test_ids.size()), 2);
        for (std::size_t i = 0; i < test_ids.size(); ++i) {
            x(static_cast<Index>(i), 0) = d.lon[static_cast<std::size_t>(test_ids[i])];
            x(static_cast<Index>(i), 1) = d.lat[static_cast<std::size_t>(test_ids[i])];
        }
        const auto index = NeighborIndex::build(t.locations, Backend::exact);
        const PredictionSet preds = NnPredictor(t, index, 50, truth).predict(x);
        for (std::size_t i = 0; i < test_ids.size(); ++i) {
            const double y = d.response[static_cast<std::size_t>(test_ids[i])];
            if (preds.points[i].lo <= y && y <= preds.points[i].hi) ++inside;
        }
        total += static_cast<Index>(test_ids.size());
    }
    const double cov = static_cast<double>(inside) / static_cast<double>(total);
    const double secs = seconds_since(start);
    return {cov >= kCoverageLo && cov <= kCoverageHi && secs < 120,
            fmt("coverage %.4f over %lld points (want [%.3f, %.3f]), %.1f s", cov, static_cast<long long>(total),
                kCoverageLo, kCoverageHi, secs)};
}

// 5. Spread of test RMSE across batch seeds shrinks with the batch size.
Verdict batch_variance() {
    SimulationSpec spec;
    spec.rows = 60;
    spec.cols = 60;
    spec.params = HyperParams::make(1.0, 0.2, 0.8, 0.001);
    spec.seed = 77;
    const GridDataset d = mask_split(simulate_gp(spec).data, 0.25, 77);
    const cli::Problem problem = cli::make_problem(d, NormalizationTransform::fit(d));
    cli::ModelSettings settings;
    settings.init = HyperParams::make(1.0, 0.2, 1.0, 0.001);
    settings.init.nu = Param::free(1.0, 0.1, 5.0);
    settings.k = 50;
    cli::StudySpec study;
    study.axis = cli::StudyAxis::batch_size;
    study.values = {25, 500, 2000};
    study.reps = 20;
    const auto start = Clock::now();
    const auto rows = cli::run_study(problem, settings, study);
    const double secs = seconds_since(start);
    const double s25 = rows[0].rmse_std;
    const double s500 = rows[1].rmse_std;
    const double s2000 = rows[2].rmse_std;
    const bool ok = s2000 < s25 && s500 < kBatchStdRatio * s25 && secs < 600;
    return {ok, fmt("n_train %lld; rmse std b=25 %.2e, b=500 %.2e (ratio %.3f, want < %.2f), b=2000 %.2e; %.1f s",
                    static_cast<long long>(problem.train_x.rows()), s25, s500, s500 / s25, kBatchStdRatio, s2000,
                    secs)};
}

// 6. Closed-form CRPS against sampling of E|X - y| - E|X - X'| / 2. The draws
// are stratified over the normal quantiles (one uniform per stratum), which
// keeps the sampling error far below the tolerance at this sample size.
Verdict crps_monte_carlo() {
    constexpr int samples = 1000000;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const boost::math::normal_distribution<double> std_normal;
    double worst = 0.0;
    const auto start = Clock::now();
    for (int trial = 0; trial < 20; ++trial) {
        const double mu = -3.0 + 6.0 * u(rng);
        const double sd = 0.1 + 2.9 * u(rng);
        const double y = mu + sd * 3.0 * (2.0 * u(rng) - 1.0);
        double a = 0.0;
        double b = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double q = boost::math::quantile(std_normal, (i + u(rng)) / samples);
            a += std::abs(mu + sd * q - y);
            // X - X' ~ N(0, 2 sd^2)
            b += std::abs(std::sqrt(2.0) * sd * boost::math::quantile(std_normal, (i + u(rng)) / samples));
        }
        const double mc = a / samples - 0.5 * b / samples;
        const double closed = crps_gaussian(Vector::Constant(1, y), Vector::Constant(1, mu), Vector::Constant(1, sd * sd));
        worst = std::max(worst, std::abs(mc - closed));
    }
    const double secs = seconds_since(start);
    return {worst < kCrpsAbsTol && secs < 60, fmt("worst abs diff %.2e (tol %.0e), %.1f s", worst, kCrpsAbsTol, secs)};
}

// 7. Objective cost depends on b and k, not n.
Verdict n_independence() {
    auto time_per_eval = [](Index n) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(n));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Locations x(n, 2);
        Vector y(n);
        for (Index i = 0; i < n; ++i) {
            x(i, 0) = u(rng);
            x(i, 1) = u(rng);
            y[i] = std::sin(6.0 * x(i, 0)) * std::cos(4.0 * x(i, 1)) + 0.1 * (u(rng) - 0.5);
        }
        const TrainingSet t{x, y};
        const auto index = NeighborIndex::build(t.locations, Backend::exact);
        const LooBatch batch = make_loo_batch(index, sample_batch(n, {500, 3}), 50);
        const HyperParams p = HyperParams::make(1.0, 0.05, 0.8, 0.001);
        (void)batched_loss(t, batch, p);  // warm up
        std::vector<double> times;
        for (int rep = 0; rep < 7; ++rep) {
            const auto start = Clock::now();
            (void)batched_loss(t, batch, p);
            times.push_back(seconds_since(start));
        }
        return median(times);
    };
    const auto start = Clock::now();
    const double small = time_per_eval(10000);
    const double large = time_per_eval(100000);
    const double ratio = std::max(small, large) / std::min(small, large);
    const double secs = seconds_since(start);
    return {ratio < kScalingMaxRatio && secs < 600,
            fmt("per evaluation %.4f s at n=10000, %.4f s at n=100000, ratio %.2f (want < %.1f), %.1f s", small,
                large, ratio, kScalingMaxRatio, secs)};
}

// 8. Land-surface-temperature benchmark, when the data are available.
Verdict benchmark() {
    const char* path = std::getenv("MUYGPS_BENCHMARK_DATA");
    if (!path || !*path) return {true, "MUYGPS_BENCHMARK_DATA not set", true};
    const auto start = Clock::now();
    CsvSchema schema;
    schema.lon = "Lon";
    schema.lat = "Lat";
    schema.response = "MaskTemp";
    schema.truth = "TrueTemp";
    const GridDataset d = load_csv(path, schema);
    // The heaton constants squeeze this grid into a 0.01-wide box; the
    // printed normalized ranges match the shared-scale fit instead.
    const cli::Problem problem = cli::make_problem(d, NormalizationTransform::fit(d));
    cli::ModelSettings s;
    s.init = HyperParams::make(1.0, 0.25, 1.0, 0.001);
    s.init.nu = Param::free(1.0, 0.1, 5.0);
    s.k = 50;
    s.backend = Backend::approximate;
    s.batch = {500, 0};
    s.mean = cli::MeanKind::smoother;
    const cli::Prepared prep = cli::prepare(problem, s);
    const TrainResult r = cli::train(prep, s);
    const PredictionSet preds = cli::predict(prep, r.params, problem.test_x, s);
    Vector lo(problem.test_x.rows());
    Vector hi(problem.test_x.rows());
    for (Index i = 0; i < lo.size(); ++i) {
        lo[i] = preds.points[static_cast<std::size_t>(i)].lo;
        hi[i] = preds.points[static_cast<std::size_t>(i)].hi;
    }
    Vector var = preds.variances().cwiseMax(1e-300);
    const MetricsReport m = evaluate(problem.test_y, preds.means(), var, lo, hi);
    const double minutes = seconds_since(start) / 60.0;
    const bool ok = m.mae <= kBenchMae && m.rmse <= kBenchRmse && m.coverage >= kBenchCovLo &&
                    m.coverage <= kBenchCovHi && minutes < kBenchMinutes;
    return {ok, fmt("MAE %.2f RMSE %.2f CRPS %.2f INT %.2f COV %.3f, nu %.3f, %.2f min", m.mae, m.rmse, m.crps,
                    m.int_score, m.coverage, r.params.nu.value, minutes)};
}

std::set<int> selected() {
    std::set<int> out;
    const char* only = std::getenv("MUYGPS_ACCEPTANCE_ONLY");
    if (!only || !*only) {
        for (int i = 1; i <= 8; ++i) out.insert(i);
        return out;
    }
    std::stringstream ss(only);
    for (std::string tok; std::getline(ss, tok, ',');) out.insert(std::stoi(tok));
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Verdict()> run;
        bool required;
    };
    const std::vector<Criterion> criteria{
        {1, "oracle equivalence", oracle_equivalence, true},
        {2, "kernel identities", kernel_identities, true},
        {3, "hyperparameter recovery", recovery, true},
        {4, "coverage calibration", coverage_calibration, true},
        {5, "batch-variance decay", batch_variance, true},
        {6, "CRPS formula", crps_monte_carlo, true},
        {7, "n-independence of training cost", n_independence, true},
        {8, "benchmark reproduction (optional)", benchmark, false},
    };
    const auto which = selected();
    int failures = 0;
    for (const auto& c : criteria) {
        if (!which.count(c.id)) continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const char* tag = v.skipped ? "SKIP" : (v.pass ? "PASS" : "FAIL");
        std::printf("[%s] %d. %s: %s\n", tag, c.id, c.name, v.detail.c_str());
        std::fflush(stdout);
        if (!v.pass && !v.skipped && c.required) ++failures;
    }
    return failures == 0 ? 0 : 1;
}

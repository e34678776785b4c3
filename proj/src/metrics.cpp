#include "muygps/metrics.hpp"

#include "muygps/errors.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace muygps {

namespace {

void check_lengths(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeError("metric inputs differ in length");
    if (a.size() == 0) throw InsufficientDataError("metrics need at least one point");
}

void check_interval(const Vector& truth, const Vector& lo, const Vector& hi) {
    check_lengths(truth, lo);
    check_lengths(truth, hi);
    for (Index i = 0; i < truth.size(); ++i) {
        if (!(lo[i] <= hi[i])) throw ParameterError("interval lower end exceeds upper end at point " + std::to_string(i));
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

double mae(const Vector& truth, const Vector& pred) {
    check_lengths(truth, pred);
    return (truth - pred).cwiseAbs().mean();
}

double rmse(const Vector& truth, const Vector& pred) {
    check_lengths(truth, pred);
    return std::sqrt((truth - pred).squaredNorm() / static_cast<double>(truth.size()));
}

double crps_gaussian(const Vector& truth, const Vector& mean, const Vector& variance) {
    check_lengths(truth, mean);
    check_lengths(truth, variance);
    const double inv_sqrt_pi = std::numbers::inv_sqrtpi;
    const double inv_sqrt_2pi = inv_sqrt_pi / std::numbers::sqrt2;
    double total = 0.0;
    for (Index i = 0; i < truth.size(); ++i) {
        if (!(variance[i] > 0.0)) throw ParameterError("CRPS needs a positive variance at point " + std::to_string(i));
        const double s = std::sqrt(variance[i]);
        const double z = (truth[i] - mean[i]) / s;
        const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * z * z);
        total += s * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - inv_sqrt_pi);
    }
    return total / static_cast<double>(truth.size());
}

double interval_score(const Vector& truth, const Vector& lo, const Vector& hi, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    check_interval(truth, lo, hi);
    double total = 0.0;
    for (Index i = 0; i < truth.size(); ++i) {
        double s = hi[i] - lo[i];
        if (truth[i] < lo[i]) s += 2.0 / alpha * (lo[i] - truth[i]);
        if (truth[i] > hi[i]) s += 2.0 / alpha * (truth[i] - hi[i]);
        total += s;
    }
    return total / static_cast<double>(truth.size());
}

double coverage(const Vector& truth, const Vector& lo, const Vector& hi) {
    check_interval(truth, lo, hi);
    Index inside = 0;
    for (Index i = 0; i < truth.size(); ++i) {
        if (lo[i] <= truth[i] && truth[i] <= hi[i]) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(truth.size());
}

std::string MetricsReport::to_key_value() const {
    std::string s;
    s += "mae = " + fmt(mae) + "\n";
    s += "rmse = " + fmt(rmse) + "\n";
    s += "crps = " + fmt(crps) + "\n";
    s += "int = " + fmt(int_score) + "\n";
    s += "cov = " + fmt(coverage) + "\n";
    s += "n_test = " + std::to_string(n_test) + "\n";
    s += "time.nn_build_s = " + fmt(timings.nn_build_s) + "\n";
    s += "time.train_s = " + fmt(timings.train_s) + "\n";
    s += "time.predict_s = " + fmt(timings.predict_s) + "\n";
    return s;
}

std::string MetricsReport::table_header() {
    return "MAE,RMSE,CRPS,INT,COV,Time (min)";
}

std::string MetricsReport::table_row() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f,%.2f,%.2f", mae, rmse, crps, int_score, coverage,
                  timings.total_s() / 60.0);
    return buf;
}

MetricsReport evaluate(const Vector& truth, const Vector& mean, const Vector& variance, const Vector& lo,
                       const Vector& hi, double alpha) {
    MetricsReport r;
    r.mae = mae(truth, mean);
    r.rmse = rmse(truth, mean);
    r.crps = crps_gaussian(truth, mean, variance);
    r.int_score = interval_score(truth, lo, hi, alpha);
    r.coverage = coverage(truth, lo, hi);
    r.n_test = truth.size();
    return r;
}

}  // namespace muygps

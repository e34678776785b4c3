#pragma once

#include "muygps/types.hpp"

#include <string>

namespace muygps {

double mae(const Vector& truth, const Vector& pred);
double rmse(const Vector& truth, const Vector& pred);

/// Mean CRPS of Gaussian predictive distributions N(mean, variance).
double crps_gaussian(const Vector& truth, const Vector& mean, const Vector& variance);

/// Mean interval score of central (1 - alpha) intervals [lo, hi].
double interval_score(const Vector& truth, const Vector& lo, const Vector& hi, double alpha = 0.05);

/// Fraction of truths inside [lo, hi], endpoints included.
double coverage(const Vector& truth, const Vector& lo, const Vector& hi);

struct MetricsTimings {
    double nn_build_s = 0.0;
    double train_s = 0.0;
    double predict_s = 0.0;

    [[nodiscard]] double total_s() const noexcept { return nn_build_s + train_s + predict_s; }
};

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    double crps = 0.0;
    double int_score = 0.0;
    double coverage = 0.0;
    Index n_test = 0;
    MetricsTimings timings;

    /// `key = value` lines.
    [[nodiscard]] std::string to_key_value() const;
    /// "MAE,RMSE,CRPS,INT,COV,Time (min)"
    static std::string table_header();
    [[nodiscard]] std::string table_row() const;
};

MetricsReport evaluate(const Vector& truth, const Vector& mean, const Vector& variance, const Vector& lo,
                       const Vector& hi, double alpha = 0.05);

}  // namespace muygps

#pragma once

#include "muygps/kernels.hpp"
#include "muygps/mean_models.hpp"
#include "muygps/neighbors.hpp"
#include "muygps/trainer.hpp"

#include <span>
#include <vector>

namespace muygps {

struct PosteriorPrediction {
    double mean = 0.0;
    double variance = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool clamped = false;  // variance came out negative and was set to 0
};

struct PredictOptions {
    double level = 0.95;  // nominal coverage of [lo, hi]
};

/// Two-sided Gaussian multiplier: Phi^-1((1 + level) / 2).
double z_multiplier(double level);

struct PredictionSet {
    std::vector<PosteriorPrediction> points;
    std::size_t clamped = 0;

    [[nodiscard]] Vector means() const;
    [[nodiscard]] Vector variances() const;
};

/// Local kriging at test locations from their k nearest training points.
///
/// `train.responses` are residuals; when `trend` is given its value at the
/// test location is added back to the mean. `params` carry the fitted
/// sigma_sq, which scales both the covariances and the prior variance.
class NnPredictor {
public:
    NnPredictor(const TrainingSet& train, const NeighborIndex& index, std::size_t k, const HyperParams& params,
                const MeanModel* trend = nullptr, PredictOptions options = {});

    [[nodiscard]] PosteriorPrediction predict(std::span<const double> location) const;
    /// Parallel over test points; identical output to predict_serial.
    [[nodiscard]] PredictionSet predict(const Locations& locations) const;
    [[nodiscard]] PredictionSet predict_serial(const Locations& locations) const;

private:
    PosteriorPrediction predict_at(std::span<const double> location, Index test_id) const;

    const TrainingSet& train_;
    const NeighborIndex& index_;
    std::size_t k_;
    MaternKernel kernel_;
    const MeanModel* trend_;
    double z_;
};

PosteriorPrediction predict_nn(const TrainingSet& train, const NeighborIndex& index, std::span<const double> location,
                               std::size_t k, const HyperParams& params, const MeanModel* trend = nullptr,
                               PredictOptions options = {});

inline constexpr Index default_oracle_cap = 2000;

/// Exact dense kriging on all n training points. Refuses n above `cap`.
std::vector<PosteriorPrediction> predict_full(const TrainingSet& train, const Locations& test,
                                              const HyperParams& params, PredictOptions options = {},
                                              Index cap = default_oracle_cap);

/// Gaussian log-likelihood of the training responses, with the -(n/2) log(2 pi)
/// normalizing constant. Dense; refuses n above `cap`.
double log_likelihood(const TrainingSet& train, const HyperParams& params, Index cap = default_oracle_cap);

}  // namespace muygps

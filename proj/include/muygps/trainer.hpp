#pragma once

#include "muygps/kernels.hpp"
#include "muygps/neighbors.hpp"
#include "muygps/optimize.hpp"
#include "muygps/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace muygps {

/// Training locations with zero-mean (detrended) responses.
struct TrainingSet {
    Locations locations;
    Vector responses;

    [[nodiscard]] Index size() const noexcept { return locations.rows(); }
    [[nodiscard]] Index dim() const noexcept { return locations.cols(); }
    /// Throws ShapeError / ParameterError on mismatched sizes or non-finite data.
    void validate() const;
};

struct BatchSpec {
    Index size = 500;
    std::uint64_t seed = 0;
};

/// `spec.size` distinct indices drawn uniformly without replacement from
/// [0, n), in draw order. Deterministic in (n, spec).
std::vector<Index> sample_batch(Index n, const BatchSpec& spec);

/// A batch together with the leave-one-out neighborhoods of its members. The
/// neighborhoods range over the whole training set and do not depend on the
/// hyperparameters, so they are computed once.
struct LooBatch {
    std::vector<Index> batch;
    std::size_t k = 0;
    std::vector<Index> neighbor_ids;  // batch.size() * k, row per batch member

    [[nodiscard]] std::span<const Index> neighbors(std::size_t j) const {
        return {neighbor_ids.data() + j * k, k};
    }
};

LooBatch make_loo_batch(const NeighborIndex& index, std::vector<Index> batch, std::size_t k);

/// Kriging prediction of training point i from its k nearest other points.
double loo_predict_nn(const TrainingSet& train, const NeighborIndex& index, Index i, std::size_t k,
                      const HyperParams& params);

/// Mean squared leave-one-out error over the batch. Evaluated in parallel over
/// batch members; the result does not depend on the thread count.
double batched_loss(const TrainingSet& train, const LooBatch& batch, const HyperParams& params);
double batched_loss(const TrainingSet& train, const NeighborIndex& index, std::span<const Index> batch,
                    std::size_t k, const HyperParams& params);
/// Single-threaded reference for batched_loss.
double batched_loss_serial(const TrainingSet& train, const LooBatch& batch, const HyperParams& params);

/// Per-member leave-one-out residuals Y(x_i) - prediction, in batch order.
Vector loo_residuals(const TrainingSet& train, const LooBatch& batch, const HyperParams& params);

/// (1 / kb) sum_i Y_N^T Omega^-1 Y_N with Omega the unit-scale local
/// covariance. Returns 0 when every neighborhood response is zero; callers
/// treat that as degenerate.
double estimate_sigma_sq(const TrainingSet& train, const LooBatch& batch, const HyperParams& params);
double estimate_sigma_sq(const TrainingSet& train, const NeighborIndex& index, std::span<const Index> batch,
                         std::size_t k, const HyperParams& params);

struct TrainTimings {
    double neighbors_s = 0.0;
    double optimize_s = 0.0;
    double sigma_s = 0.0;
};

struct TrainResult {
    HyperParams params;                 // fitted values, sigma_sq = estimate
    std::vector<double> objective_trace;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::vector<Index> batch;
    TrainTimings timings;

    [[nodiscard]] double initial_objective() const { return objective_trace.front(); }
    [[nodiscard]] double final_objective() const { return objective_trace.back(); }
};

/// Fits the free hyperparameters by minimizing batched_loss with sigma_sq
/// fixed at 1 over a batch drawn once up front, then estimates sigma_sq.
TrainResult optimize(const TrainingSet& train, const NeighborIndex& index, const BatchSpec& batch_spec,
                     std::size_t k, const HyperParams& init, const OptimizerOptions& options = {});

}  // namespace muygps

#include "muygps/trainer.hpp"

#include "muygps/errors.hpp"
#include "muygps/linalg.hpp"

#include <chrono>
#include <exception>
#include <random>
#include <string>

namespace muygps {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

HyperParams unit_scale(const HyperParams& p) {
    HyperParams out = p;
    out.sigma_sq = Param::fixed(1.0);
    return out;
}

Vector gather(const Vector& y, std::span<const Index> ids) {
    Vector out(static_cast<Index>(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j) out[static_cast<Index>(j)] = y[ids[j]];
    return out;
}

[[noreturn]] void rethrow_for_point(const SingularityError& e, Index train_id) {
    throw SingularityError("local covariance of training point " + std::to_string(train_id) + ": " + e.what(),
                           e.minor());
}

// Kriging prediction of training point i from the given neighbor ids.
double loo_prediction(const TrainingSet& train, Index i, std::span<const Index> ids, const MaternKernel& kernel) {
    Matrix local;
    Vector cross;
    local_covariance(train.locations, ids, kernel, local);
    cross_covariance(train.locations, point(train.locations, i), ids, kernel, cross);
    try {
        const SpdSolve chol(local);
        return cross.dot(chol.solve(gather(train.responses, ids)));
    } catch (const SingularityError& e) {
        rethrow_for_point(e, i);
    }
}

void check_batch(const TrainingSet& train, const LooBatch& batch) {
    if (batch.batch.empty()) throw ParameterError("batch is empty");
    if (batch.neighbor_ids.size() != batch.batch.size() * batch.k) throw ShapeError("batch neighborhoods are incomplete");
    if (batch.k < 1 || static_cast<Index>(batch.k) > train.size() - 1) {
        throw ParameterError("k must lie in [1, n - 1]");
    }
    for (Index i : batch.batch) {
        if (i < 0 || i >= train.size()) throw ParameterError("batch index out of range");
    }
}

}  // namespace

void TrainingSet::validate() const {
    if (locations.rows() != responses.size()) throw ShapeError("training locations and responses differ in length");
    if (!locations.allFinite() || !responses.allFinite()) throw ParameterError("training data contain non-finite values");
}

std::vector<Index> sample_batch(Index n, const BatchSpec& spec) {
    if (spec.size < 1) throw ParameterError("batch size must be >= 1");
    if (spec.size > n) {
        throw ParameterError("batch size " + std::to_string(spec.size) + " exceeds the " + std::to_string(n) +
                             " training points");
    }
    // Partial Fisher-Yates with an explicit uniform draw so the sequence is
    // fixed by the seed alone.
    std::vector<Index> pool(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(spec.seed);
    for (Index j = 0; j < spec.size; ++j) {
        const auto span = static_cast<std::uint64_t>(n - j);
        const auto r = static_cast<Index>(rng() % span);
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(j + r)]);
    }
    pool.resize(static_cast<std::size_t>(spec.size));
    return pool;
}

LooBatch make_loo_batch(const NeighborIndex& index, std::vector<Index> batch, std::size_t k) {
    LooBatch out;
    out.k = k;
    out.neighbor_ids.resize(batch.size() * k);
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const Neighbors nb = index.query_loo(batch[j], k);
        std::copy(nb.ids.begin(), nb.ids.end(), out.neighbor_ids.begin() + static_cast<std::ptrdiff_t>(j * k));
    }
    out.batch = std::move(batch);
    return out;
}

double loo_predict_nn(const TrainingSet& train, const NeighborIndex& index, Index i, std::size_t k,
                      const HyperParams& params) {
    train.validate();
    const Neighbors nb = index.query_loo(i, k);
    return loo_prediction(train, i, nb.ids, MaternKernel(params));
}

Vector loo_residuals(const TrainingSet& train, const LooBatch& batch, const HyperParams& params) {
    check_batch(train, batch);
    const MaternKernel kernel(params);
    const auto b = static_cast<Index>(batch.batch.size());
    Vector residuals(b);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(b));
#pragma omp parallel for schedule(dynamic, 8)
    for (Index j = 0; j < b; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        try {
            const Index i = batch.batch[sj];
            residuals[j] = train.responses[i] - loo_prediction(train, i, batch.neighbors(sj), kernel);
        } catch (...) {
            errors[sj] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return residuals;
}

double batched_loss(const TrainingSet& train, const LooBatch& batch, const HyperParams& params) {
    const Vector r = loo_residuals(train, batch, params);
    // Summed in batch order so the value is independent of the thread count.
    double s = 0.0;
    for (Index j = 0; j < r.size(); ++j) s += r[j] * r[j];
    return s / static_cast<double>(r.size());
}

double batched_loss_serial(const TrainingSet& train, const LooBatch& batch, const HyperParams& params) {
    check_batch(train, batch);
    const MaternKernel kernel(params);
    double s = 0.0;
    for (std::size_t j = 0; j < batch.batch.size(); ++j) {
        const Index i = batch.batch[j];
        const double r = train.responses[i] - loo_prediction(train, i, batch.neighbors(j), kernel);
        s += r * r;
    }
    return s / static_cast<double>(batch.batch.size());
}

double batched_loss(const TrainingSet& train, const NeighborIndex& index, std::span<const Index> batch,
                    std::size_t k, const HyperParams& params) {
    train.validate();
    return batched_loss(train, make_loo_batch(index, {batch.begin(), batch.end()}, k), params);
}

double estimate_sigma_sq(const TrainingSet& train, const LooBatch& batch, const HyperParams& params) {
    check_batch(train, batch);
    const MaternKernel kernel(unit_scale(params));
    const auto b = static_cast<Index>(batch.batch.size());
    Vector quad(b);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(b));
#pragma omp parallel for schedule(dynamic, 8)
    for (Index j = 0; j < b; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        try {
            const auto ids = batch.neighbors(sj);
            Matrix omega;
            local_covariance(train.locations, ids, kernel, omega);
            try {
                quad[j] = SpdSolve(omega).quad_form(gather(train.responses, ids));
            } catch (const SingularityError& e) {
                rethrow_for_point(e, batch.batch[sj]);
            }
        } catch (...) {
            errors[sj] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    double s = 0.0;
    for (Index j = 0; j < b; ++j) s += quad[j];
    return s / (static_cast<double>(batch.k) * static_cast<double>(b));
}

double estimate_sigma_sq(const TrainingSet& train, const NeighborIndex& index, std::span<const Index> batch,
                         std::size_t k, const HyperParams& params) {
    train.validate();
    return estimate_sigma_sq(train, make_loo_batch(index, {batch.begin(), batch.end()}, k), params);
}

TrainResult optimize(const TrainingSet& train, const NeighborIndex& index, const BatchSpec& batch_spec,
                     std::size_t k, const HyperParams& init, const OptimizerOptions& options) {
    train.validate();
    init.validate();
    if (index.size() != train.size()) throw ShapeError("neighbor index and training set differ in size");
    if (k < 1 || static_cast<Index>(k) > train.size() - 1) {
        throw ParameterError("k = " + std::to_string(k) + " must lie in [1, n - 1 = " +
                             std::to_string(train.size() - 1) + "]");
    }
    TrainResult result;
    auto start = Clock::now();
    const LooBatch batch = make_loo_batch(index, sample_batch(train.size(), batch_spec), k);
    result.timings.neighbors_s = seconds_since(start);

    start = Clock::now();
    const HyperParams base = unit_scale(init);
    const auto bounds = base.free_bounds();
    const Objective objective = [&](std::span<const double> x) {
        return batched_loss(train, batch, base.with_free_values(x));
    };
    MinimizeResult fit;
    if (bounds.empty()) {
        // Nothing to fit; record the objective so the summary still has a trace.
        fit.value = batched_loss(train, batch, base);
        fit.trace = {fit.value};
        fit.evaluations = 1;
        fit.converged = true;
    } else {
        fit = minimize_bounded(objective, base.free_values(), bounds, options);
    }
    result.timings.optimize_s = seconds_since(start);

    start = Clock::now();
    HyperParams fitted = base.with_free_values(fit.x);
    const double sigma_sq = estimate_sigma_sq(train, batch, fitted);
    result.timings.sigma_s = seconds_since(start);
    if (!(sigma_sq > 0.0) || !std::isfinite(sigma_sq)) {
        throw NumericalError("degenerate sigma_sq estimate " + std::to_string(sigma_sq) +
                             " (all neighborhood responses zero?)");
    }
    fitted.sigma_sq = Param::fixed(sigma_sq);

    result.params = fitted;
    result.objective_trace = fit.trace;
    result.iterations = fit.iterations;
    result.evaluations = fit.evaluations;
    result.converged = fit.converged;
    result.batch = batch.batch;
    return result;
}

}  // namespace muygps

#include "muygps/predictor.hpp"

#include "muygps/errors.hpp"
#include "muygps/linalg.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <exception>
#include <numbers>
#include <string>

namespace muygps {

namespace {

Matrix dense_covariance(const Locations& x, const MaternKernel& kernel) {
    return local_covariance(x, kernel);
}

void check_oracle_size(Index n, Index cap) {
    if (n > cap) {
        throw ParameterError("dense oracle refused for n = " + std::to_string(n) + " > cap " + std::to_string(cap) +
                             "; use nearest-neighbor prediction instead");
    }
}

PosteriorPrediction finish(double mean, double variance, double z) {
    PosteriorPrediction p;
    if (variance < 0.0) {
        p.clamped = true;
        variance = 0.0;
    }
    p.mean = mean;
    p.variance = variance;
    const double half = z * std::sqrt(variance);
    p.lo = mean - half;
    p.hi = mean + half;
    return p;
}

}  // namespace

double z_multiplier(double level) {
    if (!(level > 0.0 && level < 1.0)) throw ParameterError("interval level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

Vector PredictionSet::means() const {
    Vector v(static_cast<Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) v[static_cast<Index>(i)] = points[i].mean;
    return v;
}

Vector PredictionSet::variances() const {
    Vector v(static_cast<Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) v[static_cast<Index>(i)] = points[i].variance;
    return v;
}

NnPredictor::NnPredictor(const TrainingSet& train, const NeighborIndex& index, std::size_t k,
                         const HyperParams& params, const MeanModel* trend, PredictOptions options)
    : train_(train), index_(index), k_(k), kernel_(params), trend_(trend), z_(z_multiplier(options.level)) {
    train.validate();
    params.validate();
    if (index.size() != train.size()) throw ShapeError("neighbor index and training set differ in size");
    if (k < 1 || static_cast<Index>(k) > train.size()) {
        throw ParameterError("k = " + std::to_string(k) + " must lie in [1, n = " + std::to_string(train.size()) + "]");
    }
    if (trend && !trend->fitted()) throw StateError("mean model used before it was fitted");
}

PosteriorPrediction NnPredictor::predict_at(std::span<const double> location, Index test_id) const {
    const Neighbors nb = index_.query(location, k_);
    Matrix local;
    Vector cross;
    local_covariance(train_.locations, nb.ids, kernel_, local);
    cross_covariance(train_.locations, location, nb.ids, kernel_, cross);
    Vector y(static_cast<Index>(nb.ids.size()));
    for (std::size_t j = 0; j < nb.ids.size(); ++j) y[static_cast<Index>(j)] = train_.responses[nb.ids[j]];
    try {
        const SpdSolve chol(local);
        double mean = cross.dot(chol.solve(y));
        if (trend_) mean += trend_->evaluate(location);
        return finish(mean, kernel_.diagonal() - chol.quad_form(cross), z_);
    } catch (const SingularityError& e) {
        throw SingularityError("local covariance of test point " + std::to_string(test_id) + ": " + e.what(),
                               e.minor());
    }
}

PosteriorPrediction NnPredictor::predict(std::span<const double> location) const {
    if (static_cast<Index>(location.size()) != train_.dim()) throw ShapeError("test point dimension mismatch");
    return predict_at(location, 0);
}

PredictionSet NnPredictor::predict(const Locations& locations) const {
    if (locations.rows() > 0 && locations.cols() != train_.dim()) throw ShapeError("test point dimension mismatch");
    const Index m = locations.rows();
    PredictionSet out;
    out.points.resize(static_cast<std::size_t>(m));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic, 16)
    for (Index i = 0; i < m; ++i) {
        try {
            out.points[static_cast<std::size_t>(i)] = predict_at(point(locations, i), i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    for (const auto& p : out.points) out.clamped += p.clamped ? 1 : 0;
    return out;
}

PredictionSet NnPredictor::predict_serial(const Locations& locations) const {
    if (locations.rows() > 0 && locations.cols() != train_.dim()) throw ShapeError("test point dimension mismatch");
    PredictionSet out;
    out.points.reserve(static_cast<std::size_t>(locations.rows()));
    for (Index i = 0; i < locations.rows(); ++i) {
        out.points.push_back(predict_at(point(locations, i), i));
        out.clamped += out.points.back().clamped ? 1 : 0;
    }
    return out;
}

PosteriorPrediction predict_nn(const TrainingSet& train, const NeighborIndex& index, std::span<const double> location,
                               std::size_t k, const HyperParams& params, const MeanModel* trend,
                               PredictOptions options) {
    return NnPredictor(train, index, k, params, trend, options).predict(location);
}

std::vector<PosteriorPrediction> predict_full(const TrainingSet& train, const Locations& test,
                                              const HyperParams& params, PredictOptions options, Index cap) {
    train.validate();
    params.validate();
    check_oracle_size(train.size(), cap);
    if (train.size() < 1) throw InsufficientDataError("dense prediction needs at least one training point");
    if (test.rows() > 0 && test.cols() != train.dim()) throw ShapeError("test point dimension mismatch");
    const MaternKernel kernel(params);
    const double z = z_multiplier(options.level);

    const Eigen::LLT<Matrix> llt(dense_covariance(train.locations, kernel));
    if (llt.info() != Eigen::Success) throw SingularityError("dense training covariance is not positive definite", 0);
    const Vector alpha = llt.solve(train.responses);

    std::vector<PosteriorPrediction> out;
    out.reserve(static_cast<std::size_t>(test.rows()));
    for (Index i = 0; i < test.rows(); ++i) {
        const Vector cross = cross_covariance(point(test, i), train.locations, kernel);
        const Vector v = llt.matrixL().solve(cross);
        out.push_back(finish(cross.dot(alpha), kernel.diagonal() - v.squaredNorm(), z));
    }
    return out;
}

double log_likelihood(const TrainingSet& train, const HyperParams& params, Index cap) {
    train.validate();
    params.validate();
    check_oracle_size(train.size(), cap);
    if (train.size() < 1) throw InsufficientDataError("log-likelihood needs at least one observation");
    const Eigen::LLT<Matrix> llt(dense_covariance(train.locations, MaternKernel(params)));
    if (llt.info() != Eigen::Success) throw SingularityError("dense training covariance is not positive definite", 0);
    const Matrix& l = llt.matrixLLT();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const Vector v = llt.matrixL().solve(train.responses);
    const auto n = static_cast<double>(train.size());
    return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * log_det - 0.5 * v.squaredNorm();
}

}  // namespace muygps

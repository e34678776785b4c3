#pragma once

#include "muygps/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace muygps {

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
};

/// A scalar hyperparameter: fixed at `value`, or free within `bounds` with
/// `value` as the optimizer's starting point.
struct Param {
    double value = 0.0;
    std::optional<Bounds> bounds;

    [[nodiscard]] bool is_free() const noexcept { return bounds.has_value(); }

    static Param fixed(double v) { return {v, std::nullopt}; }
    static Param free(double v, double lo, double hi) { return {v, Bounds{lo, hi}}; }
};

/// Matérn hyperparameters. `tau_sq` is relative to `sigma_sq`: the diagonal of
/// a covariance matrix is sigma_sq * (1 + tau_sq).
struct HyperParams {
    Param sigma_sq = Param::fixed(1.0);
    Param rho = Param::fixed(1.0);
    Param nu = Param::fixed(1.0);
    Param tau_sq = Param::fixed(0.001);

    /// Throws ParameterError on out-of-domain values or bad bounds.
    void validate() const;

    /// Names of the free parameters in optimizer order (rho, nu, tau_sq).
    [[nodiscard]] std::vector<std::string> free_names() const;
    [[nodiscard]] std::vector<double> free_values() const;
    [[nodiscard]] std::vector<Bounds> free_bounds() const;
    /// Copy with the free parameters replaced, in free_names() order.
    [[nodiscard]] HyperParams with_free_values(std::span<const double> values) const;

    static HyperParams make(double sigma_sq, double rho, double nu, double tau_sq);
};

/// log K_nu(x) for nu > 0, x > 0. Temme's series for x < 2, Steed's continued
/// fraction otherwise, then forward recurrence in the order. Works in log space
/// so neither huge K at tiny x nor underflow at large x is a problem.
double log_bessel_k(double nu, double x);
double bessel_k(double nu, double x);

/// Modified Bessel function of the second kind of fixed order, with the order
/// dependent constants of the Temme series precomputed.
class BesselK {
public:
    explicit BesselK(double nu);

    [[nodiscard]] double log_value(double x) const;
    [[nodiscard]] double nu() const noexcept { return nu_; }

private:
    double nu_;
    int steps_;     // upward recurrence steps from mu to nu
    double mu_;     // nu - steps_, in [-1/2, 1/2]
    double gam1_;
    double gam2_;
    double gampl_;  // 1 / Gamma(1 + mu)
    double gammi_;  // 1 / Gamma(1 - mu)
};

enum class MaternPath { half, three_halves, five_halves, rbf, bessel };

/// Evaluates the isotropic Matérn covariance for one parameter set.
class MaternKernel {
public:
    /// Order above which the RBF limit replaces the Bessel form.
    static constexpr double default_rbf_threshold = 30.0;

    explicit MaternKernel(const HyperParams& params, double rbf_threshold = default_rbf_threshold);

    /// Same parameters but always evaluated through the Bessel function.
    static MaternKernel bessel_only(const HyperParams& params);

    /// Covariance at distance d >= 0, nugget included when d == 0.
    [[nodiscard]] double operator()(double d) const;
    /// Covariance without the nugget term; equals sigma_sq at d == 0.
    [[nodiscard]] double smooth(double d) const;

    [[nodiscard]] double sigma_sq() const noexcept { return sigma_sq_; }
    [[nodiscard]] double tau_sq() const noexcept { return tau_sq_; }
    [[nodiscard]] double diagonal() const noexcept { return sigma_sq_ * (1.0 + tau_sq_); }
    [[nodiscard]] MaternPath path() const noexcept { return path_; }

private:
    MaternKernel(const HyperParams& params, double rbf_threshold, bool force_bessel);

    double correlation(double d) const;

    double sigma_sq_;
    double rho_;
    double nu_;
    double tau_sq_;
    MaternPath path_;
    double scale_;       // sqrt(2 nu) / rho
    double log_prefix_;  // log(2^(1-nu) / Gamma(nu))
    std::optional<BesselK> bessel_;
};

/// Scalar Matérn covariance.
double matern(double d, const HyperParams& params);

/// Row of covariances between `center` and each row of `neighbors`.
Vector cross_covariance(std::span<const double> center, const Locations& neighbors,
                        const HyperParams& params);
Vector cross_covariance(std::span<const double> center, const Locations& neighbors,
                        const MaternKernel& kernel);

/// Covariance among the rows of `neighbors`.
Matrix local_covariance(const Locations& neighbors, const HyperParams& params);
Matrix local_covariance(const Locations& neighbors, const MaternKernel& kernel);

/// Index based variants over a shared location table; `out` is resized.
void cross_covariance(const Locations& x, std::span<const double> center,
                      std::span<const Index> ids, const MaternKernel& kernel, Vector& out);
void local_covariance(const Locations& x, std::span<const Index> ids,
                      const MaternKernel& kernel, Matrix& out);

}  // namespace muygps

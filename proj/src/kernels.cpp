#include "muygps/kernels.hpp"

#include "muygps/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace muygps {

namespace {

void check_value(const char* name, double v, bool allow_zero) {
    if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0)) {
        throw ParameterError(std::string("hyperparameter ") + name + " out of domain: " +
                             std::to_string(v));
    }
}

void check_bounds(const char* name, const Param& p) {
    if (!p.bounds) return;
    const auto [lo, hi] = *p.bounds;
    if (!(lo > 0.0) || !(lo < hi) || !std::isfinite(hi)) {
        throw ParameterError(std::string("bad bounds for free hyperparameter ") + name);
    }
    if (p.value < lo || p.value > hi) {
        throw ParameterError(std::string("initial value of ") + name + " lies outside its bounds");
    }
}

// Coefficients of 1/Gamma(z) = sum c_k z^k (Abramowitz & Stegun 6.1.34).
constexpr double kRecipGamma[] = {
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
};

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;
constexpr double kRescale = 1e250;

}  // namespace

void HyperParams::validate() const {
    check_value("sigma_sq", sigma_sq.value, false);
    check_value("rho", rho.value, false);
    check_value("nu", nu.value, false);
    check_value("tau_sq", tau_sq.value, true);
    if (sigma_sq.is_free()) {
        throw ParameterError("sigma_sq cannot be free; it is estimated in closed form after training");
    }
    check_bounds("rho", rho);
    check_bounds("nu", nu);
    check_bounds("tau_sq", tau_sq);
}

std::vector<std::string> HyperParams::free_names() const {
    std::vector<std::string> names;
    if (rho.is_free()) names.emplace_back("rho");
    if (nu.is_free()) names.emplace_back("nu");
    if (tau_sq.is_free()) names.emplace_back("tau_sq");
    return names;
}

std::vector<double> HyperParams::free_values() const {
    std::vector<double> v;
    for (const Param* p : {&rho, &nu, &tau_sq}) {
        if (p->is_free()) v.push_back(p->value);
    }
    return v;
}

std::vector<Bounds> HyperParams::free_bounds() const {
    std::vector<Bounds> b;
    for (const Param* p : {&rho, &nu, &tau_sq}) {
        if (p->is_free()) b.push_back(*p->bounds);
    }
    return b;
}

HyperParams HyperParams::with_free_values(std::span<const double> values) const {
    HyperParams out = *this;
    std::size_t i = 0;
    for (Param* p : {&out.rho, &out.nu, &out.tau_sq}) {
        if (!p->is_free()) continue;
        if (i >= values.size()) throw ShapeError("too few values for the free hyperparameters");
        p->value = values[i++];
    }
    if (i != values.size()) throw ShapeError("too many values for the free hyperparameters");
    return out;
}

HyperParams HyperParams::make(double sigma_sq, double rho, double nu, double tau_sq) {
    HyperParams p;
    p.sigma_sq = Param::fixed(sigma_sq);
    p.rho = Param::fixed(rho);
    p.nu = Param::fixed(nu);
    p.tau_sq = Param::fixed(tau_sq);
    return p;
}

BesselK::BesselK(double nu) : nu_(nu) {
    if (!(nu >= 0.0) || !std::isfinite(nu)) throw ParameterError("Bessel order must be finite and >= 0");
    steps_ = static_cast<int>(nu + 0.5);
    mu_ = nu - steps_;
    gampl_ = 1.0 / std::tgamma(1.0 + mu_);
    gammi_ = 1.0 / std::tgamma(1.0 - mu_);
    if (std::abs(mu_) < 0.1) {
        // (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu) cancels badly near zero.
        const double m2 = mu_ * mu_;
        double odd = 0.0;
        double even = 0.0;
        for (int k = 11; k >= 1; k -= 2) odd = odd * m2 + kRecipGamma[k];
        for (int k = 10; k >= 2; k -= 2) even = even * m2 + kRecipGamma[k];
        gam1_ = -odd;
        gam2_ = 1.0 + m2 * even;
    } else {
        gam1_ = (gammi_ - gampl_) / (2.0 * mu_);
        gam2_ = (gammi_ + gampl_) / 2.0;
    }
}

double BesselK::log_value(double x) const {
    if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError("Bessel argument must be finite and > 0");
    const double xmu = mu_;
    const double xmu2 = xmu * xmu;
    const double xi = 1.0 / x;
    const double xi2 = 2.0 * xi;

    double log_scale = 0.0;
    double rkmu = 0.0;
    double rk1 = 0.0;

    if (x < 2.0) {
        const double x2 = 0.5 * x;
        const double pimu = std::numbers::pi * xmu;
        const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = xmu * d;
        const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
        double ff = fact * (gam1_ * std::cosh(e) + gam2_ * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / gampl_;
        double q = 0.5 / (e * gammi_);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        int i = 1;
        for (; i <= kMaxIter; ++i) {
            ff = (i * ff + p + q) / (i * i - xmu2);
            c *= d / i;
            p /= i - xmu;
            q /= i + xmu;
            const double del = c * ff;
            sum += del;
            sum1 += c * (p - i * ff);
            if (std::abs(del) < std::abs(sum) * kEps) break;
        }
        if (i > kMaxIter) throw NumericalError("Bessel K series failed to converge");
        // sum = K_mu(x), sum1 * xi2 = K_{mu+1}(x); carry both relative to sum.
        log_scale = std::log(sum);
        rkmu = 1.0;
        rk1 = std::exp(std::log(sum1) + std::log(xi2) - log_scale);
    } else {
        double b = 2.0 * (1.0 + x);
        double d = 1.0 / b;
        double h = d;
        double delh = d;
        double q1 = 0.0;
        double q2 = 1.0;
        const double a1 = 0.25 - xmu2;
        double q = a1;
        double c = a1;
        double a = -a1;
        double s = 1.0 + q * delh;
        int i = 2;
        for (; i <= kMaxIter; ++i) {
            a -= 2 * (i - 1);
            c = -a * c / i;
            const double qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            const double dels = q * delh;
            s += dels;
            if (std::abs(dels / s) < kEps) break;
        }
        if (i > kMaxIter) throw NumericalError("Bessel K continued fraction failed to converge");
        h = a1 * h;
        // K_mu(x) = sqrt(pi / 2x) exp(-x) / s
        log_scale = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x - std::log(s);
        rkmu = 1.0;
        rk1 = (xmu + x + 0.5 - h) * xi;
    }

    for (int i = 1; i <= steps_; ++i) {
        const double next = (xmu + i) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = next;
        if (rk1 > kRescale) {
            rkmu /= kRescale;
            rk1 /= kRescale;
            log_scale += std::log(kRescale);
        }
    }
    return log_scale + std::log(rkmu);
}

double log_bessel_k(double nu, double x) {
    return BesselK(std::abs(nu)).log_value(x);
}

double bessel_k(double nu, double x) {
    return std::exp(log_bessel_k(nu, x));
}

MaternKernel::MaternKernel(const HyperParams& params, double rbf_threshold)
    : MaternKernel(params, rbf_threshold, false) {}

MaternKernel MaternKernel::bessel_only(const HyperParams& params) {
    return MaternKernel(params, std::numeric_limits<double>::infinity(), true);
}

MaternKernel::MaternKernel(const HyperParams& params, double rbf_threshold, bool force_bessel)
    : sigma_sq_(params.sigma_sq.value),
      rho_(params.rho.value),
      nu_(params.nu.value),
      tau_sq_(params.tau_sq.value),
      path_(MaternPath::bessel),
      scale_(0.0),
      log_prefix_(0.0) {
    check_value("sigma_sq", sigma_sq_, false);
    check_value("rho", rho_, false);
    check_value("nu", nu_, false);
    check_value("tau_sq", tau_sq_, true);
    if (!force_bessel) {
        if (nu_ == 0.5) {
            path_ = MaternPath::half;
        } else if (nu_ == 1.5) {
            path_ = MaternPath::three_halves;
        } else if (nu_ == 2.5) {
            path_ = MaternPath::five_halves;
        } else if (nu_ > rbf_threshold) {
            path_ = MaternPath::rbf;
        }
    }
    if (path_ == MaternPath::bessel) {
        scale_ = std::sqrt(2.0 * nu_) / rho_;
        log_prefix_ = (1.0 - nu_) * std::numbers::ln2 - std::lgamma(nu_);
        bessel_.emplace(nu_);
    }
}

double MaternKernel::correlation(double d) const {
    if (d == 0.0) return 1.0;
    const double r = d / rho_;
    switch (path_) {
    case MaternPath::half:
        return std::exp(-r);
    case MaternPath::three_halves: {
        const double t = std::numbers::sqrt3 * r;
        return (1.0 + t) * std::exp(-t);
    }
    case MaternPath::five_halves: {
        const double t = std::sqrt(5.0) * r;
        return (1.0 + t + t * t / 3.0) * std::exp(-t);
    }
    case MaternPath::rbf:
        return std::exp(-0.5 * r * r);
    case MaternPath::bessel:
        break;
    }
    const double x = scale_ * d;
    return std::exp(log_prefix_ + nu_ * std::log(x) + bessel_->log_value(x));
}

double MaternKernel::smooth(double d) const {
    if (!(d >= 0.0) || !std::isfinite(d)) throw ParameterError("distance must be finite and >= 0");
    return sigma_sq_ * correlation(d);
}

double MaternKernel::operator()(double d) const {
    if (!(d >= 0.0) || !std::isfinite(d)) throw ParameterError("distance must be finite and >= 0");
    if (d == 0.0) return sigma_sq_ * (1.0 + tau_sq_);
    return sigma_sq_ * correlation(d);
}

double matern(double d, const HyperParams& params) {
    return MaternKernel(params)(d);
}

Vector cross_covariance(std::span<const double> center, const Locations& neighbors,
                        const MaternKernel& kernel) {
    if (neighbors.rows() == 0) throw ShapeError("cross_covariance needs at least one neighbor");
    if (static_cast<Index>(center.size()) != neighbors.cols()) {
        throw ShapeError("center and neighbors have different dimensions");
    }
    Vector out(neighbors.rows());
    for (Index j = 0; j < neighbors.rows(); ++j) {
        out[j] = kernel(std::sqrt(squared_distance(center, point(neighbors, j))));
    }
    return out;
}

Vector cross_covariance(std::span<const double> center, const Locations& neighbors,
                        const HyperParams& params) {
    return cross_covariance(center, neighbors, MaternKernel(params));
}

Matrix local_covariance(const Locations& neighbors, const MaternKernel& kernel) {
    if (neighbors.rows() == 0) throw ShapeError("local_covariance needs at least one location");
    const Index k = neighbors.rows();
    Matrix out(k, k);
    for (Index i = 0; i < k; ++i) {
        out(i, i) = kernel.diagonal();
        for (Index j = i + 1; j < k; ++j) {
            const double v = kernel.smooth(std::sqrt(squared_distance(point(neighbors, i), point(neighbors, j))));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
    return out;
}

Matrix local_covariance(const Locations& neighbors, const HyperParams& params) {
    return local_covariance(neighbors, MaternKernel(params));
}

void cross_covariance(const Locations& x, std::span<const double> center,
                      std::span<const Index> ids, const MaternKernel& kernel, Vector& out) {
    out.resize(static_cast<Index>(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j) {
        out[static_cast<Index>(j)] = kernel(std::sqrt(squared_distance(center, point(x, ids[j]))));
    }
}

void local_covariance(const Locations& x, std::span<const Index> ids,
                      const MaternKernel& kernel, Matrix& out) {
    const auto k = static_cast<Index>(ids.size());
    out.resize(k, k);
    for (Index i = 0; i < k; ++i) {
        out(i, i) = kernel.diagonal();
        for (Index j = i + 1; j < k; ++j) {
            const double v = kernel.smooth(std::sqrt(squared_distance(point(x, ids[i]), point(x, ids[j]))));
            out(i, j) = v;
            out(j, i) = v;
        }
    }
}

}  // namespace muygps

#include "muygps/optimize.hpp"

#include "muygps/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace muygps {

namespace {

class Counted {
public:
    explicit Counted(const Objective& f) : f_(f) {}

    double operator()(std::span<const double> x) {
        ++count_;
        const double v = f_(x);
        if (!std::isfinite(v)) {
            std::string at;
            for (double xi : x) at += (at.empty() ? "" : ", ") + std::to_string(xi);
            throw NumericalError("objective is not finite at (" + at + ")");
        }
        return v;
    }

    [[nodiscard]] int count() const noexcept { return count_; }

private:
    const Objective& f_;
    int count_ = 0;
};

Eigen::VectorXd fd_gradient(Counted& f, const Eigen::VectorXd& x, double fx, std::span<const Bounds> b,
                            double step) {
    const Index n = x.size();
    Eigen::VectorXd g(n);
    std::vector<double> xs(x.data(), x.data() + n);
    for (Index i = 0; i < n; ++i) {
        double h = step * std::max(std::abs(x[i]), 0.1);
        if (x[i] + h > b[static_cast<std::size_t>(i)].hi) h = -h;
        xs[static_cast<std::size_t>(i)] = x[i] + h;
        g[i] = (f(xs) - fx) / h;
        xs[static_cast<std::size_t>(i)] = x[i];
    }
    return g;
}

Eigen::VectorXd clamp(Eigen::VectorXd x, std::span<const Bounds> b) {
    for (Index i = 0; i < x.size(); ++i) {
        x[i] = std::clamp(x[i], b[static_cast<std::size_t>(i)].lo, b[static_cast<std::size_t>(i)].hi);
    }
    return x;
}

bool relative_change_small(double before, double after, double tol) {
    return std::abs(before - after) <= tol * std::max(std::abs(before), 1e-300);
}

MinimizeResult quasi_newton(const Objective& objective, Eigen::VectorXd x, std::span<const Bounds> b,
                            const OptimizerOptions& opt) {
    Counted f(objective);
    const Index n = x.size();
    Eigen::VectorXd range(n);
    for (Index i = 0; i < n; ++i) range[i] = b[static_cast<std::size_t>(i)].hi - b[static_cast<std::size_t>(i)].lo;

    MinimizeResult res;
    double fx = f(std::span<const double>(x.data(), static_cast<std::size_t>(n)));
    res.trace.push_back(fx);
    Eigen::VectorXd g = fd_gradient(f, x, fx, b, opt.fd_step);
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    bool fresh = true;

    while (res.iterations < opt.max_iterations) {
        std::vector<bool> free(static_cast<std::size_t>(n));
        double pg = 0.0;
        for (Index i = 0; i < n; ++i) {
            const auto& bi = b[static_cast<std::size_t>(i)];
            const bool pinned = (x[i] <= bi.lo && g[i] > 0.0) || (x[i] >= bi.hi && g[i] < 0.0);
            free[static_cast<std::size_t>(i)] = !pinned;
            if (!pinned) pg = std::max(pg, std::abs(g[i]));
        }
        if (pg == 0.0) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd gf = g;
        for (Index i = 0; i < n; ++i) {
            if (!free[static_cast<std::size_t>(i)]) gf[i] = 0.0;
        }
        Eigen::VectorXd p = -(h * gf);
        for (Index i = 0; i < n; ++i) {
            if (!free[static_cast<std::size_t>(i)]) p[i] = 0.0;
        }
        if (!fresh && g.dot(p) >= 0.0) {
            h.setIdentity();
            fresh = true;
            p = -gf;
        }
        if (fresh) {
            // Without curvature information, move at most 10% of the box.
            double largest = 0.0;
            for (Index i = 0; i < n; ++i) largest = std::max(largest, std::abs(p[i]) / range[i]);
            if (largest > 0.0) p *= 0.1 / largest;
        }

        bool accepted = false;
        Eigen::VectorXd xn;
        double fn = fx;
        double t = 1.0;
        for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
            xn = clamp(x + t * p, b);
            if (xn == x) break;
            fn = f(std::span<const double>(xn.data(), static_cast<std::size_t>(n)));
            if (fn <= fx + 1e-4 * g.dot(xn - x)) {
                accepted = true;
                break;
            }
        }
        ++res.iterations;
        if (!accepted) {
            if (!fresh) {
                h.setIdentity();
                fresh = true;
                continue;
            }
            // No descent along the steepest projected direction: stationary
            // to the accuracy of the finite-difference gradient.
            res.converged = true;
            break;
        }

        const Eigen::VectorXd gn = fd_gradient(f, xn, fn, b, opt.fd_step);
        const Eigen::VectorXd s = xn - x;
        const Eigen::VectorXd y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh) h *= sy / y.squaredNorm();
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
            h = v * h * v.transpose() + rho * s * s.transpose();
            fresh = false;
        }
        const bool small = relative_change_small(fx, fn, opt.rel_tol);
        x = xn;
        fx = fn;
        g = gn;
        res.trace.push_back(fx);
        if (small) {
            res.converged = true;
            break;
        }
    }
    res.x.assign(x.data(), x.data() + n);
    res.value = fx;
    res.evaluations = f.count();
    return res;
}

MinimizeResult golden(const Objective& objective, double x0, const Bounds& b, const OptimizerOptions& opt) {
    Counted f(objective);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    MinimizeResult res;

    double best_x = std::clamp(x0, b.lo, b.hi);
    double best_f = f(std::span<const double>(&best_x, 1));
    res.trace.push_back(best_f);
    auto eval = [&](double x) {
        const double v = f(std::span<const double>(&x, 1));
        if (v < best_f) {
            best_f = v;
            best_x = x;
        }
        return v;
    };

    double lo = b.lo;
    double hi = b.hi;
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double fc = eval(c);
    double fd = eval(d);
    const double xtol = 1e-6 * (b.hi - b.lo);
    while (res.iterations < opt.max_iterations) {
        ++res.iterations;
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = eval(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = eval(d);
        }
        res.trace.push_back(best_f);
        if (hi - lo < xtol) {
            res.converged = true;
            break;
        }
    }
    // The endpoints are never sampled by the bracket; check them last.
    eval(b.lo);
    eval(b.hi);
    res.x = {best_x};
    res.value = best_f;
    res.evaluations = f.count();
    return res;
}

}  // namespace

OptimizerMethod parse_optimizer_method(std::string_view name) {
    if (name == "quasi_newton" || name == "lbfgsb" || name == "bfgs") return OptimizerMethod::quasi_newton;
    if (name == "golden") return OptimizerMethod::golden;
    throw ParameterError("unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerMethod method) {
    return method == OptimizerMethod::golden ? "golden" : "quasi_newton";
}

MinimizeResult minimize_bounded(const Objective& f, std::vector<double> x0, std::span<const Bounds> bounds,
                                const OptimizerOptions& options) {
    if (x0.empty()) throw ParameterError("nothing to optimize: no free parameters");
    if (x0.size() != bounds.size()) throw ShapeError("start point and bounds differ in length");
    for (const auto& b : bounds) {
        if (!(b.lo < b.hi)) throw ParameterError("optimizer bounds must satisfy lo < hi");
    }
    if (options.max_iterations < 1) throw ParameterError("max_iterations must be >= 1");
    if (options.method == OptimizerMethod::golden) {
        if (x0.size() != 1) throw ParameterError("golden-section search handles exactly one free parameter");
        return golden(f, x0[0], bounds[0], options);
    }
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Index>(x0.size()));
    return quasi_newton(f, clamp(std::move(x), bounds), bounds, options);
}

}  // namespace muygps

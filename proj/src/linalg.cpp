#include "muygps/linalg.hpp"

#include "muygps/errors.hpp"

#include <atomic>
#include <cmath>
#include <optional>
#include <string>

namespace muygps {

namespace {

std::atomic<std::uint64_t> g_jitter_count{0};

// Returns the index of the first non-positive pivot, or nullopt on success.
std::optional<Index> factor_in_place(Matrix& l, double jitter) {
    const Index k = l.rows();
    for (Index j = 0; j < k; ++j) {
        double diag = l(j, j) + jitter;
        for (Index p = 0; p < j; ++p) diag -= l(j, p) * l(j, p);
        if (!(diag > 0.0) || !std::isfinite(diag)) return j;
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (Index i = j + 1; i < k; ++i) {
            double s = l(i, j);
            for (Index p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
            l(i, j) = s / ljj;
        }
    }
    for (Index j = 1; j < k; ++j) {
        for (Index i = 0; i < j; ++i) l(i, j) = 0.0;
    }
    return std::nullopt;
}

}  // namespace

SpdSolve::SpdSolve(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("SPD solve needs a square matrix");
    if (a.rows() == 0) throw ShapeError("SPD solve needs a non-empty matrix");
    l_ = a;
    auto failed = factor_in_place(l_, 0.0);
    if (!failed) return;

    const double jitter = 1e-10 * a.diagonal().mean();
    l_ = a;
    failed = factor_in_place(l_, jitter);
    if (failed) {
        throw SingularityError("matrix is not positive definite (leading minor " +
                                   std::to_string(*failed + 1) + " of " + std::to_string(a.rows()) + ")",
                               static_cast<std::size_t>(*failed));
    }
    jittered_ = true;
    g_jitter_count.fetch_add(1, std::memory_order_relaxed);
}

void SpdSolve::forward(Vector& y) const {
    const Index k = l_.rows();
    for (Index i = 0; i < k; ++i) {
        double s = y[i];
        for (Index p = 0; p < i; ++p) s -= l_(i, p) * y[p];
        y[i] = s / l_(i, i);
    }
}

void SpdSolve::backward(Vector& y) const {
    const Index k = l_.rows();
    for (Index i = k - 1; i >= 0; --i) {
        double s = y[i];
        for (Index p = i + 1; p < k; ++p) s -= l_(p, i) * y[p];
        y[i] = s / l_(i, i);
    }
}

Vector SpdSolve::solve(const Vector& b) const {
    if (b.size() != l_.rows()) throw ShapeError("right-hand side length does not match the matrix");
    Vector x = b;
    forward(x);
    backward(x);
    return x;
}

Matrix SpdSolve::solve(const Matrix& b) const {
    if (b.rows() != l_.rows()) throw ShapeError("right-hand side rows do not match the matrix");
    Matrix x(b.rows(), b.cols());
    for (Index c = 0; c < b.cols(); ++c) x.col(c) = solve(Vector(b.col(c)));
    return x;
}

double SpdSolve::quad_form(const Vector& y) const {
    if (y.size() != l_.rows()) throw ShapeError("vector length does not match the matrix");
    Vector z = y;
    forward(z);
    return z.squaredNorm();
}

double SpdSolve::log_det() const {
    return 2.0 * l_.diagonal().array().log().sum();
}

Vector solve_spd(const Matrix& a, const Vector& b) {
    return SpdSolve(a).solve(b);
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
    return SpdSolve(a).solve(b);
}

double quad_form(const Matrix& a, const Vector& y) {
    return SpdSolve(a).quad_form(y);
}

std::uint64_t jitter_count() noexcept {
    return g_jitter_count.load(std::memory_order_relaxed);
}

}  // namespace muygps

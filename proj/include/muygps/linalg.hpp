#pragma once

#include "muygps/types.hpp"

#include <cstdint>

namespace muygps {

/// Cholesky factorization A = L L^T of a small symmetric positive definite
/// matrix. Only the lower triangle of A is read.
///
/// If the plain factorization breaks down, it is retried once with
/// 1e-10 * mean(diag(A)) added to the diagonal. A second failure throws
/// SingularityError carrying the index of the failing leading minor.
class SpdSolve {
public:
    explicit SpdSolve(const Matrix& a);

    [[nodiscard]] Vector solve(const Vector& b) const;
    [[nodiscard]] Matrix solve(const Matrix& b) const;
    /// y^T A^-1 y computed as ||L^-1 y||^2, so never negative.
    [[nodiscard]] double quad_form(const Vector& y) const;
    [[nodiscard]] double log_det() const;

    [[nodiscard]] const Matrix& lower() const noexcept { return l_; }
    [[nodiscard]] bool jittered() const noexcept { return jittered_; }
    [[nodiscard]] Index size() const noexcept { return l_.rows(); }

    /// In-place L^-1 y.
    void forward(Vector& y) const;
    /// In-place L^-T y.
    void backward(Vector& y) const;

private:
    Matrix l_;
    bool jittered_ = false;
};

Vector solve_spd(const Matrix& a, const Vector& b);
Matrix solve_spd(const Matrix& a, const Matrix& b);
double quad_form(const Matrix& a, const Vector& y);

/// Number of factorizations that needed the diagonal jitter since start-up.
std::uint64_t jitter_count() noexcept;

}  // namespace muygps

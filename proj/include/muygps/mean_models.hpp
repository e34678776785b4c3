#pragma once

#include "muygps/types.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace muygps {

/// Regular 2-D grid. Cell (r, c) is centered at (x0 + c * dx, y0 + r * dy);
/// cells are stored row-major.
struct GridSpec {
    Index rows = 0;
    Index cols = 0;
    double x0 = 0.0;
    double y0 = 0.0;
    double dx = 1.0;
    double dy = 1.0;

    [[nodiscard]] Index cells() const noexcept { return rows * cols; }
};

/// Weight as a function of distance in grid cells.
enum class SmootherKernel {
    exponential,  // exp(-d / bandwidth)
    gaussian,     // exp(-(d / bandwidth)^2)
};

enum class SmootherMethod { automatic, direct, fft };

struct SmootherOptions {
    double bandwidth = 25.0;  // grid-cell units
    SmootherKernel kernel = SmootherKernel::exponential;
    SmootherMethod method = SmootherMethod::automatic;
};

struct ConstantMean {
    double c = 0.0;
};

/// mu(x) = beta0 + beta1 x1 + beta2 x2 + beta3 x1 x2
struct LinearMean {
    std::array<double, 4> beta{};
};

struct SmootherMean {
    GridSpec grid;
    SmootherOptions options;
    std::vector<double> field;  // rows * cols, row-major
};

/// One of the detrending mean functions. A default-constructed model is
/// unfitted and every evaluation throws StateError.
class MeanModel {
public:
    MeanModel() = default;
    explicit MeanModel(ConstantMean m) : model_(m) {}
    explicit MeanModel(LinearMean m) : model_(m) {}
    explicit MeanModel(SmootherMean m) : model_(std::move(m)) {}

    [[nodiscard]] bool fitted() const noexcept { return !std::holds_alternative<std::monostate>(model_); }
    [[nodiscard]] std::string_view name() const noexcept;

    [[nodiscard]] double evaluate(std::span<const double> location) const;
    [[nodiscard]] Vector evaluate(const Locations& locations) const;

    /// responses - mu(locations)
    [[nodiscard]] Vector detrend(const Locations& locations, const Vector& responses) const;
    /// predictions + mu(locations)
    [[nodiscard]] Vector retrend(const Locations& locations, const Vector& predictions) const;

    [[nodiscard]] const auto& variant() const noexcept { return model_; }

private:
    std::variant<std::monostate, ConstantMean, LinearMean, SmootherMean> model_;
};

MeanModel fit_constant(const Vector& responses);
MeanModel fit_linear(const Locations& locations, const Vector& responses);

/// Nadaraya-Watson smoother on a grid. `values` and `observed` are row-major
/// over the grid; unobserved cells get zero weight.
MeanModel fit_smoother(const GridSpec& grid, std::span<const double> values,
                       std::span<const std::uint8_t> observed, const SmootherOptions& options = {});

/// Smoothed field evaluated at every cell. The serial loop is the reference;
/// the parallel one must agree exactly; the FFT one to round-off.
std::vector<double> smooth_direct_serial(Index rows, Index cols, std::span<const double> values,
                                         std::span<const std::uint8_t> observed,
                                         double bandwidth, SmootherKernel kernel);
std::vector<double> smooth_direct(Index rows, Index cols, std::span<const double> values,
                                  std::span<const std::uint8_t> observed, double bandwidth,
                                  SmootherKernel kernel);
std::vector<double> smooth_fft(Index rows, Index cols, std::span<const double> values,
                               std::span<const std::uint8_t> observed, double bandwidth,
                               SmootherKernel kernel);

SmootherKernel parse_smoother_kernel(std::string_view name);
std::string_view to_string(SmootherKernel kernel);

}  // namespace muygps

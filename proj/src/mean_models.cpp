#include "muygps/mean_models.hpp"

#include "muygps/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <complex>
#include <memory>
#include <string>

namespace muygps {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double bilinear(const SmootherMean& m, std::span<const double> loc) {
    const GridSpec& g = m.grid;
    auto axis = [](double v, double origin, double step, Index n, Index& i0, Index& i1, double& t) {
        double f = n > 1 ? (v - origin) / step : 0.0;
        f = std::clamp(f, 0.0, static_cast<double>(n - 1));
        i0 = static_cast<Index>(std::floor(f));
        i1 = std::min(i0 + 1, n - 1);
        t = f - static_cast<double>(i0);
    };
    Index c0 = 0, c1 = 0, r0 = 0, r1 = 0;
    double tc = 0.0, tr = 0.0;
    axis(loc[0], g.x0, g.dx, g.cols, c0, c1, tc);
    axis(loc[1], g.y0, g.dy, g.rows, r0, r1, tr);
    auto at = [&](Index r, Index c) { return m.field[static_cast<std::size_t>(r * g.cols + c)]; };
    const double top = (1.0 - tc) * at(r0, c0) + tc * at(r0, c1);
    const double bottom = (1.0 - tc) * at(r1, c0) + tc * at(r1, c1);
    return (1.0 - tr) * top + tr * bottom;
}

// Weight for every (|dr|, |dc|) offset, rows x cols row-major.
std::vector<double> weight_table(Index rows, Index cols, double bandwidth, SmootherKernel kernel) {
    std::vector<double> w(static_cast<std::size_t>(rows * cols));
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            const double d = std::sqrt(static_cast<double>(r * r + c * c)) / bandwidth;
            w[static_cast<std::size_t>(r * cols + c)] =
                kernel == SmootherKernel::exponential ? std::exp(-d) : std::exp(-d * d);
        }
    }
    return w;
}

void check_smoother_inputs(Index rows, Index cols, std::span<const double> values,
                           std::span<const std::uint8_t> observed, double bandwidth) {
    if (rows < 1 || cols < 1) throw ShapeError("smoother grid must have at least one cell");
    const auto cells = static_cast<std::size_t>(rows * cols);
    if (values.size() != cells || observed.size() != cells) {
        throw ShapeError("smoother values and mask must cover the grid");
    }
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ParameterError("smoother bandwidth must be > 0");
    bool any = false;
    for (std::size_t i = 0; i < cells; ++i) {
        if (!observed[i]) continue;
        if (!std::isfinite(values[i])) throw ParameterError("observed smoother cell has a non-finite value");
        any = true;
    }
    if (!any) throw InsufficientDataError("smoother needs at least one observed cell");
}

double smooth_cell(Index r, Index c, Index rows, Index cols, std::span<const double> values,
                   std::span<const std::uint8_t> observed, const std::vector<double>& w) {
    double num = 0.0;
    double den = 0.0;
    for (Index r2 = 0; r2 < rows; ++r2) {
        const Index dr = std::abs(r2 - r);
        for (Index c2 = 0; c2 < cols; ++c2) {
            const auto i = static_cast<std::size_t>(r2 * cols + c2);
            if (!observed[i]) continue;
            const double wt = w[static_cast<std::size_t>(dr * cols + std::abs(c2 - c))];
            num += wt * values[i];
            den += wt;
        }
    }
    return num / den;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

std::string_view MeanModel::name() const noexcept {
    return std::visit(Overloaded{
                          [](const std::monostate&) { return std::string_view("unfitted"); },
                          [](const ConstantMean&) { return std::string_view("const"); },
                          [](const LinearMean&) { return std::string_view("linear"); },
                          [](const SmootherMean&) { return std::string_view("smoother"); },
                      },
                      model_);
}

double MeanModel::evaluate(std::span<const double> location) const {
    return std::visit(Overloaded{
                          [](const std::monostate&) -> double {
                              throw StateError("mean model used before it was fitted");
                          },
                          [](const ConstantMean& m) { return m.c; },
                          [&](const LinearMean& m) {
                              if (location.size() != 2) throw ShapeError("linear mean needs 2-D locations");
                              const double x1 = location[0];
                              const double x2 = location[1];
                              return m.beta[0] + m.beta[1] * x1 + m.beta[2] * x2 + m.beta[3] * x1 * x2;
                          },
                          [&](const SmootherMean& m) {
                              if (location.size() != 2) throw ShapeError("smoother mean needs 2-D locations");
                              return bilinear(m, location);
                          },
                      },
                      model_);
}

Vector MeanModel::evaluate(const Locations& locations) const {
    if (!fitted()) throw StateError("mean model used before it was fitted");
    Vector out(locations.rows());
    for (Index i = 0; i < locations.rows(); ++i) out[i] = evaluate(point(locations, i));
    return out;
}

Vector MeanModel::detrend(const Locations& locations, const Vector& responses) const {
    if (responses.size() != locations.rows()) throw ShapeError("responses and locations differ in length");
    return responses - evaluate(locations);
}

Vector MeanModel::retrend(const Locations& locations, const Vector& predictions) const {
    if (predictions.size() != locations.rows()) throw ShapeError("predictions and locations differ in length");
    return predictions + evaluate(locations);
}

MeanModel fit_constant(const Vector& responses) {
    if (responses.size() == 0) throw InsufficientDataError("constant mean needs at least one response");
    if (!responses.allFinite()) throw ParameterError("responses contain non-finite values");
    return MeanModel(ConstantMean{responses.mean()});
}

MeanModel fit_linear(const Locations& locations, const Vector& responses) {
    if (locations.cols() != 2) throw ShapeError("linear mean needs 2-D locations");
    if (locations.rows() != responses.size()) throw ShapeError("responses and locations differ in length");
    const Index n = locations.rows();
    if (n < 4) throw InsufficientDataError("linear mean needs at least 4 observations");
    Matrix z(n, 4);
    z.col(0).setOnes();
    z.col(1) = locations.col(0);
    z.col(2) = locations.col(1);
    z.col(3) = locations.col(0).cwiseProduct(locations.col(1));
    Eigen::ColPivHouseholderQR<Matrix> qr(z);
    if (qr.rank() < 4) throw DegenerateDesignError("linear mean design [1, x1, x2, x1*x2] is rank deficient");
    const Vector beta = qr.solve(responses);
    LinearMean m;
    for (int j = 0; j < 4; ++j) m.beta[static_cast<std::size_t>(j)] = beta[j];
    return MeanModel(m);
}

std::vector<double> smooth_direct_serial(Index rows, Index cols, std::span<const double> values,
                                         std::span<const std::uint8_t> observed, double bandwidth,
                                         SmootherKernel kernel) {
    check_smoother_inputs(rows, cols, values, observed, bandwidth);
    const auto w = weight_table(rows, cols, bandwidth, kernel);
    std::vector<double> out(static_cast<std::size_t>(rows * cols));
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            out[static_cast<std::size_t>(r * cols + c)] = smooth_cell(r, c, rows, cols, values, observed, w);
        }
    }
    return out;
}

std::vector<double> smooth_direct(Index rows, Index cols, std::span<const double> values,
                                  std::span<const std::uint8_t> observed, double bandwidth,
                                  SmootherKernel kernel) {
    check_smoother_inputs(rows, cols, values, observed, bandwidth);
    const auto w = weight_table(rows, cols, bandwidth, kernel);
    std::vector<double> out(static_cast<std::size_t>(rows * cols));
    const Index cells = rows * cols;
#pragma omp parallel for schedule(dynamic, 16)
    for (Index g = 0; g < cells; ++g) {
        out[static_cast<std::size_t>(g)] = smooth_cell(g / cols, g % cols, rows, cols, values, observed, w);
    }
    return out;
}

std::vector<double> smooth_fft(Index rows, Index cols, std::span<const double> values,
                               std::span<const std::uint8_t> observed, double bandwidth,
                               SmootherKernel kernel) {
    check_smoother_inputs(rows, cols, values, observed, bandwidth);
    const auto w = weight_table(rows, cols, bandwidth, kernel);
    // Zero padding to 2R x 2C turns the circular convolution into a linear one.
    const Index pr = 2 * rows;
    const Index pc = 2 * cols;
    const Index hc = pc / 2 + 1;
    const auto real_n = static_cast<std::size_t>(pr * pc);
    const auto cplx_n = static_cast<std::size_t>(pr * hc);

    auto alloc_real = [&] {
        return std::unique_ptr<double[], FftwFree>(static_cast<double*>(fftw_malloc(sizeof(double) * real_n)));
    };
    auto alloc_cplx = [&] {
        return std::unique_ptr<fftw_complex[], FftwFree>(
            static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * cplx_n)));
    };
    auto kern = alloc_real();
    auto num = alloc_real();
    auto den = alloc_real();
    auto kern_hat = alloc_cplx();
    auto num_hat = alloc_cplx();
    auto den_hat = alloc_cplx();
    std::fill(kern.get(), kern.get() + real_n, 0.0);
    std::fill(num.get(), num.get() + real_n, 0.0);
    std::fill(den.get(), den.get() + real_n, 0.0);

    for (Index dr = -(rows - 1); dr <= rows - 1; ++dr) {
        const Index pr_idx = (dr + pr) % pr;
        for (Index dc = -(cols - 1); dc <= cols - 1; ++dc) {
            const Index pc_idx = (dc + pc) % pc;
            kern[static_cast<std::size_t>(pr_idx * pc + pc_idx)] =
                w[static_cast<std::size_t>(std::abs(dr) * cols + std::abs(dc))];
        }
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            const auto i = static_cast<std::size_t>(r * cols + c);
            if (!observed[i]) continue;
            num[static_cast<std::size_t>(r * pc + c)] = values[i];
            den[static_cast<std::size_t>(r * pc + c)] = 1.0;
            lo = std::min(lo, values[i]);
            hi = std::max(hi, values[i]);
        }
    }

    auto forward = [&](double* in, fftw_complex* out) {
        fftw_plan plan = fftw_plan_dft_r2c_2d(static_cast<int>(pr), static_cast<int>(pc), in, out, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    };
    forward(kern.get(), kern_hat.get());
    forward(num.get(), num_hat.get());
    forward(den.get(), den_hat.get());
    for (std::size_t i = 0; i < cplx_n; ++i) {
        const std::complex<double> k(kern_hat[i][0], kern_hat[i][1]);
        const std::complex<double> a = k * std::complex<double>(num_hat[i][0], num_hat[i][1]);
        const std::complex<double> b = k * std::complex<double>(den_hat[i][0], den_hat[i][1]);
        num_hat[i][0] = a.real();
        num_hat[i][1] = a.imag();
        den_hat[i][0] = b.real();
        den_hat[i][1] = b.imag();
    }
    auto backward = [&](fftw_complex* in, double* out) {
        fftw_plan plan = fftw_plan_dft_c2r_2d(static_cast<int>(pr), static_cast<int>(pc), in, out, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    };
    backward(num_hat.get(), num.get());
    backward(den_hat.get(), den.get());

    // The 1 / (pr * pc) normalization cancels in the ratio. The exact result
    // is a convex combination, so round-off is clipped to the observed range.
    std::vector<double> out(static_cast<std::size_t>(rows * cols));
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            const auto p = static_cast<std::size_t>(r * pc + c);
            out[static_cast<std::size_t>(r * cols + c)] = std::clamp(num[p] / den[p], lo, hi);
        }
    }
    return out;
}

MeanModel fit_smoother(const GridSpec& grid, std::span<const double> values,
                       std::span<const std::uint8_t> observed, const SmootherOptions& options) {
    if (!(grid.dx > 0.0) || !(grid.dy > 0.0)) throw ParameterError("grid spacing must be > 0");
    SmootherMethod method = options.method;
    if (method == SmootherMethod::automatic) {
        const auto n_obs = std::count_if(observed.begin(), observed.end(), [](std::uint8_t o) { return o != 0; });
        method = static_cast<double>(grid.cells()) * static_cast<double>(n_obs) > 2e7 ? SmootherMethod::fft
                                                                                        : SmootherMethod::direct;
    }
    SmootherMean m;
    m.grid = grid;
    m.options = options;
    m.options.method = method;
    m.field = method == SmootherMethod::fft
                  ? smooth_fft(grid.rows, grid.cols, values, observed, options.bandwidth, options.kernel)
                  : smooth_direct(grid.rows, grid.cols, values, observed, options.bandwidth, options.kernel);
    return MeanModel(std::move(m));
}

SmootherKernel parse_smoother_kernel(std::string_view name) {
    if (name == "exponential") return SmootherKernel::exponential;
    if (name == "gaussian") return SmootherKernel::gaussian;
    throw ParameterError("unknown smoother kernel '" + std::string(name) + "'");
}

std::string_view to_string(SmootherKernel kernel) {
    return kernel == SmootherKernel::exponential ? "exponential" : "gaussian";
}

}  // namespace muygps

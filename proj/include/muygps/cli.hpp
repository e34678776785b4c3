#pragma once

#include "muygps/data.hpp"
#include "muygps/kernels.hpp"
#include "muygps/mean_models.hpp"
#include "muygps/metrics.hpp"
#include "muygps/neighbors.hpp"
#include "muygps/optimize.hpp"
#include "muygps/predictor.hpp"
#include "muygps/trainer.hpp"

#include <exception>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace muygps::cli {

enum class MeanKind { constant, linear, smoother };
MeanKind parse_mean_kind(std::string_view name);
std::string_view to_string(MeanKind kind);

/// Everything that determines a fit apart from the data.
struct ModelSettings {
    HyperParams init;
    std::size_t k = 50;
    Backend backend = Backend::exact;
    HnswParams hnsw;
    BatchSpec batch;
    OptimizerOptions optimizer;
    MeanKind mean = MeanKind::constant;
    SmootherOptions smoother;
    double level = 0.95;
};

/// Normalized training and test data. `test_y` holds truth where known and
/// NaN elsewhere. The grid fields are only needed by the smoother mean.
struct Problem {
    Locations train_x;
    Vector train_y;
    Locations test_x;
    Vector test_y;
    std::optional<GridSpec> grid;
    std::vector<double> grid_values;          // response at train cells, 0 elsewhere
    std::vector<std::uint8_t> grid_observed;  // 1 at train cells
};

Problem make_problem(const GridDataset& data, const NormalizationTransform& transform);

MeanModel fit_mean(const Problem& problem, const ModelSettings& settings);

/// Detrended training set with its neighbor index. Built once and reused
/// across refits that only change the batch or the hyperparameters.
struct Prepared {
    MeanModel mean;
    TrainingSet train;
    NeighborIndex index;
    double mean_s = 0.0;
    double nn_build_s = 0.0;
};

Prepared prepare(const Problem& problem, const ModelSettings& settings);
/// Batch sizes above n are clamped to n.
TrainResult train(const Prepared& prepared, const ModelSettings& settings);
PredictionSet predict(const Prepared& prepared, const HyperParams& fitted, const Locations& test,
                      const ModelSettings& settings);

enum class StudyAxis { batch_size, k };
StudyAxis parse_study_axis(std::string_view name);
std::string_view to_string(StudyAxis axis);

struct StudySpec {
    StudyAxis axis = StudyAxis::batch_size;
    std::vector<Index> values;
    int reps = 20;
};

struct StudyRow {
    StudyAxis axis = StudyAxis::batch_size;
    Index value = 0;
    std::vector<double> rmse;    // one per repetition
    std::vector<double> time_s;  // train + predict wall time per repetition
    double rmse_mean = 0.0;
    double rmse_std = 0.0;       // sample standard deviation
    double rmse_q025 = 0.0;
    double rmse_q975 = 0.0;
    double rmse_q05 = 0.0;
    double rmse_q95 = 0.0;
    double time_mean_s = 0.0;
};

/// Refits the model `reps` times per axis value, varying the batch seed as
/// settings.batch.seed + rep, and scores test RMSE against `problem.test_y`.
std::vector<StudyRow> run_study(const Problem& problem, const ModelSettings& settings, const StudySpec& spec);
std::string study_csv(const std::vector<StudyRow>& rows);

/// Process exit status for an error: 2 configuration, 3 data, 4 numerical.
int exit_code(const std::exception& e);

/// Runs the command line. Reports go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace muygps::cli

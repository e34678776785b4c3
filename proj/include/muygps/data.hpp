#pragma once

#include "muygps/kernels.hpp"
#include "muygps/mean_models.hpp"
#include "muygps/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace muygps {

enum class CellStatus : std::uint8_t { train, test, missing };

/// Gridded observations. Cells are stored row-major: row r holds the r-th
/// smallest latitude, column c the c-th smallest longitude. Test cells carry
/// their held-out truth in `response`; missing cells carry NaN.
struct GridDataset {
    Index rows = 0;
    Index cols = 0;
    std::vector<double> lon;
    std::vector<double> lat;
    std::vector<double> response;
    std::vector<CellStatus> status;
    std::string provenance;

    [[nodiscard]] Index cells() const noexcept { return rows * cols; }
    [[nodiscard]] Index count(CellStatus s) const;
    /// Cell ids with status `s`, ascending.
    [[nodiscard]] std::vector<Index> cell_ids(CellStatus s) const;
    [[nodiscard]] Vector responses(CellStatus s) const;
    /// Throws StructureError when the invariants do not hold.
    void validate() const;
};

/// Column names and missing-value semantics of a flat CSV table.
///
/// With a mask column, mask = 1 holds a cell out: it becomes a test cell if it
/// has a response and is missing otherwise. Without one, a truth column marks
/// cells whose response is NA but whose truth is known as test cells. Cells
/// with neither response nor truth are missing.
struct CsvSchema {
    char delimiter = ',';
    std::string lon = "lon";
    std::string lat = "lat";
    std::string response = "response";
    std::string truth;  // optional
    std::string mask;   // optional
};

GridDataset load_csv(const std::string& path, const CsvSchema& schema = {});
GridDataset parse_csv(std::istream& in, const CsvSchema& schema = {}, const std::string& provenance = "stream");
/// Writes lon,lat,response,mask; missing cells get response NA and mask 0.
void write_csv(const GridDataset& data, const std::string& path);

/// x = (lon + offset_x) / scale, y = (lat + offset_y) / scale. A single scale
/// keeps the aspect ratio, so distance ratios are preserved.
struct NormalizationTransform {
    double offset_x = 0.0;
    double offset_y = 0.0;
    double scale = 1.0;

    /// Land-surface-temperature preset: (coord + 218) / 464.
    static NormalizationTransform heaton();
    /// Min-shifted, divided by the larger of the two coordinate ranges.
    static NormalizationTransform fit(const GridDataset& data);

    [[nodiscard]] std::array<double, 2> apply(double lon, double lat) const;
    [[nodiscard]] std::array<double, 2> invert(double x, double y) const;
    void validate() const;
};

/// Normalized (x, y) of the given cells, one row each.
Locations normalize(const GridDataset& data, const NormalizationTransform& t, const std::vector<Index>& cells);
/// Normalized coordinates of every cell.
Locations normalize(const GridDataset& data, const NormalizationTransform& t);

/// Grid geometry in normalized coordinates. Throws StructureError if the
/// longitudes or latitudes are not evenly spaced.
GridSpec grid_spec(const GridDataset& data, const NormalizationTransform& t);

struct SimulationSpec {
    Index rows = 40;
    Index cols = 40;
    HyperParams params;
    MeanModel trend = MeanModel(ConstantMean{0.0});
    std::uint64_t seed = 0;
};

inline constexpr Index max_simulation_cells = 10000;

struct Simulation {
    GridDataset data;
    HyperParams truth;  // generating parameters
};

/// Draws one GP realization on an evenly spaced grid whose longer side spans
/// [0, 1]. Every cell is a training cell.
Simulation simulate_gp(const SimulationSpec& spec);

/// Marks round(fraction * observed) randomly chosen non-missing cells as test
/// and the rest as train.
GridDataset mask_split(GridDataset data, double fraction, std::uint64_t seed);
/// Marks non-missing cells test where mask == 1 and train where mask == 0.
GridDataset apply_mask(GridDataset data, const std::vector<std::uint8_t>& mask);
/// Reads a rows x cols grid of 0/1 values, row 0 first.
std::vector<std::uint8_t> load_mask_csv(const std::string& path, Index rows, Index cols);

}  // namespace muygps

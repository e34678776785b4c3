#pragma once

#include "muygps/types.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace muygps {

enum class Backend { exact, approximate };

Backend parse_backend(std::string_view name);
std::string_view to_string(Backend backend);

/// Build and query settings of the layered small-world graph.
struct HnswParams {
    std::size_t degree = 16;            // links per node above layer 0; layer 0 keeps 2x
    std::size_t ef_construction = 200;  // beam width while inserting
    std::size_t ef_search = 100;        // beam width while querying (raised to k if smaller)
    std::uint64_t seed = 100;           // level assignment
};

/// k nearest neighbors sorted by (distance, id).
struct Neighbors {
    std::vector<Index> ids;
    std::vector<double> distances;
};

namespace detail {

struct Candidate {
    double sq_dist;
    Index id;

    friend bool operator<(const Candidate& a, const Candidate& b) {
        return a.sq_dist < b.sq_dist || (a.sq_dist == b.sq_dist && a.id < b.id);
    }
};

class SearchBackend {
public:
    virtual ~SearchBackend() = default;
    /// Up to k nearest reference points to `query`, skipping `exclude` (-1 for
    /// none), sorted ascending.
    virtual void search(std::span<const double> query, std::size_t k, Index exclude,
                        std::vector<Candidate>& out) const = 0;
};

}  // namespace detail

/// Immutable k-nearest-neighbor index over a fixed set of reference points.
///
/// The exact backend uses a k-d tree for p <= 3 and brute force with partial
/// selection otherwise; both return the true k nearest with ties broken by
/// ascending index. The approximate backend is an HNSW graph. A built index
/// can be queried concurrently.
class NeighborIndex {
public:
    static NeighborIndex build(Locations locations, Backend backend, const HnswParams& hnsw = {});

    /// k nearest reference points to an arbitrary location, 1 <= k <= n.
    [[nodiscard]] Neighbors query(std::span<const double> location, std::size_t k) const;
    /// k nearest reference points to reference point `id`, excluding itself.
    /// 1 <= k <= n - 1.
    [[nodiscard]] Neighbors query_loo(Index id, std::size_t k) const;

    [[nodiscard]] Index size() const noexcept { return locations_->rows(); }
    [[nodiscard]] Index dim() const noexcept { return locations_->cols(); }
    [[nodiscard]] Backend backend() const noexcept { return backend_; }
    [[nodiscard]] const Locations& locations() const noexcept { return *locations_; }

private:
    NeighborIndex() = default;

    std::shared_ptr<const Locations> locations_;
    std::shared_ptr<const detail::SearchBackend> impl_;
    Backend backend_ = Backend::exact;
};

/// Brute-force reference used by tests and benchmarks.
Neighbors brute_force_knn(const Locations& reference, std::span<const double> query, std::size_t k,
                          Index exclude = -1);

}  // namespace muygps

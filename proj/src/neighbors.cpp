#include "muygps/neighbors.hpp"

#include "muygps/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <string>

namespace muygps {

using detail::Candidate;

namespace {

void finish(std::vector<Candidate>& c, std::size_t k) {
    if (c.size() > k) {
        std::nth_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k), c.end());
        c.resize(k);
    }
    std::sort(c.begin(), c.end());
}

class BruteForce final : public detail::SearchBackend {
public:
    explicit BruteForce(std::shared_ptr<const Locations> x) : x_(std::move(x)) {}

    void search(std::span<const double> query, std::size_t k, Index exclude,
                std::vector<Candidate>& out) const override {
        out.clear();
        out.reserve(static_cast<std::size_t>(x_->rows()));
        for (Index i = 0; i < x_->rows(); ++i) {
            if (i == exclude) continue;
            out.push_back({squared_distance(query, point(*x_, i)), i});
        }
        finish(out, k);
    }

private:
    std::shared_ptr<const Locations> x_;
};

class KdTree final : public detail::SearchBackend {
public:
    explicit KdTree(std::shared_ptr<const Locations> x) : x_(std::move(x)) {
        order_.resize(static_cast<std::size_t>(x_->rows()));
        std::iota(order_.begin(), order_.end(), Index{0});
        nodes_.reserve(2 * order_.size() / kLeafSize + 1);
        build(0, static_cast<Index>(order_.size()));
        // Leaf points copied contiguously in tree order.
        packed_.resize(x_->rows(), x_->cols());
        for (Index i = 0; i < x_->rows(); ++i) packed_.row(i) = x_->row(order_[static_cast<std::size_t>(i)]);
    }

    void search(std::span<const double> query, std::size_t k, Index exclude,
                std::vector<Candidate>& out) const override {
        std::priority_queue<Candidate> heap;
        visit(0, query, k, exclude, heap);
        out.clear();
        out.reserve(heap.size());
        while (!heap.empty()) {
            out.push_back(heap.top());
            heap.pop();
        }
        std::reverse(out.begin(), out.end());
    }

private:
    static constexpr Index kLeafSize = 16;

    struct Node {
        Index begin;
        Index end;
        int dim = -1;  // -1 marks a leaf
        double split = 0.0;
        Index left = -1;
        Index right = -1;
    };

    Index build(Index begin, Index end) {
        const auto id = static_cast<Index>(nodes_.size());
        nodes_.push_back({begin, end});
        if (end - begin <= kLeafSize) return id;

        const Index p = x_->cols();
        int best_dim = 0;
        double best_spread = -1.0;
        for (Index d = 0; d < p; ++d) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (Index i = begin; i < end; ++i) {
                const double v = (*x_)(order_[static_cast<std::size_t>(i)], d);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                best_dim = static_cast<int>(d);
            }
        }
        const Index mid = begin + (end - begin) / 2;
        auto first = order_.begin() + begin;
        std::nth_element(first, order_.begin() + mid, order_.begin() + end, [&](Index a, Index b) {
            const double va = (*x_)(a, best_dim);
            const double vb = (*x_)(b, best_dim);
            return va < vb || (va == vb && a < b);
        });
        const double split = (*x_)(order_[static_cast<std::size_t>(mid)], best_dim);
        const Index left = build(begin, mid);
        const Index right = build(mid, end);
        Node& node = nodes_[static_cast<std::size_t>(id)];
        node.dim = best_dim;
        node.split = split;
        node.left = left;
        node.right = right;
        return id;
    }

    void visit(Index node_id, std::span<const double> q, std::size_t k, Index exclude,
               std::priority_queue<Candidate>& heap) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (node.dim < 0) {
            for (Index i = node.begin; i < node.end; ++i) {
                const Index id = order_[static_cast<std::size_t>(i)];
                if (id == exclude) continue;
                const Candidate c{squared_distance(q, point(packed_, i)), id};
                if (heap.size() < k) {
                    heap.push(c);
                } else if (c < heap.top()) {
                    heap.pop();
                    heap.push(c);
                }
            }
            return;
        }
        const double diff = q[static_cast<std::size_t>(node.dim)] - node.split;
        const Index near = diff < 0.0 ? node.left : node.right;
        const Index far = diff < 0.0 ? node.right : node.left;
        visit(near, q, k, exclude, heap);
        // Equal distance is not pruned: a tie with a smaller id may lie beyond.
        if (heap.size() < k || diff * diff <= heap.top().sq_dist) visit(far, q, k, exclude, heap);
    }

    std::shared_ptr<const Locations> x_;
    std::vector<Index> order_;
    std::vector<Node> nodes_;
    Locations packed_;
};

class Hnsw final : public detail::SearchBackend {
public:
    Hnsw(std::shared_ptr<const Locations> x, const HnswParams& params)
        : x_(std::move(x)),
          m_(std::max<std::size_t>(params.degree, 2)),
          m0_(2 * m_),
          ef_construction_(std::max(params.ef_construction, m_)),
          ef_search_(params.ef_search) {
        const auto n = static_cast<std::size_t>(x_->rows());
        links_.resize(n);
        std::mt19937_64 rng(params.seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double ml = 1.0 / std::log(static_cast<double>(m_));
        for (std::size_t i = 0; i < n; ++i) {
            const double u = 1.0 - unif(rng);  // (0, 1]
            const int level = static_cast<int>(std::floor(-std::log(u) * ml));
            insert(static_cast<Index>(i), level);
        }
    }

    void search(std::span<const double> query, std::size_t k, Index exclude,
                std::vector<Candidate>& out) const override {
        out.clear();
        if (entry_ < 0) return;
        Candidate ep{dist(query, entry_), entry_};
        for (int layer = max_level_; layer > 0; --layer) ep = greedy(query, ep, layer);
        const std::size_t want = k + (exclude >= 0 ? 1 : 0);
        search_layer(query, ep, std::max(ef_search_, want), 0, out);
        std::erase_if(out, [&](const Candidate& c) { return c.id == exclude; });
        finish(out, k);
    }

private:
    using Links = std::vector<std::uint32_t>;

    struct Visited {
        std::vector<std::uint32_t> marks;
        std::uint32_t tag = 0;
    };

    static Visited& visited_for(std::size_t n) {
        thread_local Visited v;
        if (v.marks.size() < n) v.marks.resize(n, 0);
        if (++v.tag == 0) {
            std::fill(v.marks.begin(), v.marks.end(), 0);
            v.tag = 1;
        }
        return v;
    }

    double dist(std::span<const double> q, Index id) const {
        return squared_distance(q, point(*x_, id));
    }

    double dist(Index a, Index b) const {
        return squared_distance(point(*x_, a), point(*x_, b));
    }

    Candidate greedy(std::span<const double> q, Candidate cur, int layer) const {
        bool moved = true;
        while (moved) {
            moved = false;
            for (const auto e : links_[static_cast<std::size_t>(cur.id)][static_cast<std::size_t>(layer)]) {
                const Candidate c{dist(q, e), static_cast<Index>(e)};
                if (c < cur) {
                    cur = c;
                    moved = true;
                }
            }
        }
        return cur;
    }

    // Beam search on one layer; `out` receives up to ef candidates, unsorted.
    void search_layer(std::span<const double> q, Candidate ep, std::size_t ef, int layer,
                      std::vector<Candidate>& out) const {
        auto& visited = visited_for(links_.size());
        auto by_far = [](const Candidate& a, const Candidate& b) { return b < a; };
        std::priority_queue<Candidate, std::vector<Candidate>, decltype(by_far)> frontier(by_far);
        std::priority_queue<Candidate> best;
        visited.marks[static_cast<std::size_t>(ep.id)] = visited.tag;
        frontier.push(ep);
        best.push(ep);
        while (!frontier.empty()) {
            const Candidate c = frontier.top();
            if (best.size() >= ef && best.top() < c) break;
            frontier.pop();
            for (const auto e : links_[static_cast<std::size_t>(c.id)][static_cast<std::size_t>(layer)]) {
                if (visited.marks[e] == visited.tag) continue;
                visited.marks[e] = visited.tag;
                const Candidate n{dist(q, e), static_cast<Index>(e)};
                if (best.size() < ef || n < best.top()) {
                    frontier.push(n);
                    best.push(n);
                    if (best.size() > ef) best.pop();
                }
            }
        }
        out.clear();
        out.reserve(best.size());
        while (!best.empty()) {
            out.push_back(best.top());
            best.pop();
        }
    }

    // Keeps a candidate only if it is closer to the base than to every
    // neighbor already kept. `candidates` must be sorted ascending.
    Links select(const std::vector<Candidate>& candidates, std::size_t m) const {
        Links kept;
        for (const auto& c : candidates) {
            if (kept.size() >= m) break;
            bool good = true;
            for (const auto r : kept) {
                if (dist(c.id, static_cast<Index>(r)) < c.sq_dist) {
                    good = false;
                    break;
                }
            }
            if (good) kept.push_back(static_cast<std::uint32_t>(c.id));
        }
        return kept;
    }

    void insert(Index id, int level) {
        auto& node_links = links_[static_cast<std::size_t>(id)];
        node_links.resize(static_cast<std::size_t>(level) + 1);
        if (entry_ < 0) {
            entry_ = id;
            max_level_ = level;
            return;
        }
        const auto q = point(*x_, id);
        Candidate ep{dist(q, entry_), entry_};
        for (int layer = max_level_; layer > level; --layer) ep = greedy(q, ep, layer);

        std::vector<Candidate> found;
        for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
            search_layer(q, ep, ef_construction_, layer, found);
            std::sort(found.begin(), found.end());
            const std::size_t cap = layer == 0 ? m0_ : m_;
            node_links[static_cast<std::size_t>(layer)] = select(found, m_);
            for (const auto nb : node_links[static_cast<std::size_t>(layer)]) {
                auto& theirs = links_[nb][static_cast<std::size_t>(layer)];
                if (theirs.size() < cap) {
                    theirs.push_back(static_cast<std::uint32_t>(id));
                    continue;
                }
                std::vector<Candidate> pool;
                pool.reserve(theirs.size() + 1);
                pool.push_back({dist(static_cast<Index>(nb), id), id});
                for (const auto t : theirs) pool.push_back({dist(static_cast<Index>(nb), static_cast<Index>(t)), static_cast<Index>(t)});
                std::sort(pool.begin(), pool.end());
                theirs = select(pool, cap);
            }
            ep = found.front();
        }
        if (level > max_level_) {
            max_level_ = level;
            entry_ = id;
        }
    }

    std::shared_ptr<const Locations> x_;
    std::size_t m_;
    std::size_t m0_;
    std::size_t ef_construction_;
    std::size_t ef_search_;
    std::vector<std::vector<Links>> links_;
    Index entry_ = -1;
    int max_level_ = -1;
};

Neighbors to_neighbors(const std::vector<Candidate>& c) {
    Neighbors out;
    out.ids.reserve(c.size());
    out.distances.reserve(c.size());
    for (const auto& e : c) {
        out.ids.push_back(e.id);
        out.distances.push_back(std::sqrt(e.sq_dist));
    }
    return out;
}

}  // namespace

Backend parse_backend(std::string_view name) {
    if (name == "exact") return Backend::exact;
    if (name == "approximate" || name == "hnsw") return Backend::approximate;
    throw ParameterError("unknown neighbor backend '" + std::string(name) + "'");
}

std::string_view to_string(Backend backend) {
    return backend == Backend::exact ? "exact" : "approximate";
}

NeighborIndex NeighborIndex::build(Locations locations, Backend backend, const HnswParams& hnsw) {
    if (locations.rows() < 2) throw InsufficientDataError("a neighbor index needs at least 2 points");
    if (locations.cols() < 1) throw ShapeError("locations need at least one coordinate");
    if (!locations.allFinite()) throw ParameterError("locations contain non-finite coordinates");
    if (locations.rows() > std::numeric_limits<std::uint32_t>::max()) {
        throw ParameterError("too many points for the neighbor index");
    }
    NeighborIndex index;
    index.backend_ = backend;
    index.locations_ = std::make_shared<const Locations>(std::move(locations));
    if (backend == Backend::approximate) {
        if (hnsw.degree < 2 || hnsw.ef_construction < 1 || hnsw.ef_search < 1) {
            throw ParameterError("HNSW degree must be >= 2 and beam widths >= 1");
        }
        index.impl_ = std::make_shared<const Hnsw>(index.locations_, hnsw);
    } else if (index.locations_->cols() <= 3) {
        index.impl_ = std::make_shared<const KdTree>(index.locations_);
    } else {
        index.impl_ = std::make_shared<const BruteForce>(index.locations_);
    }
    return index;
}

Neighbors NeighborIndex::query(std::span<const double> location, std::size_t k) const {
    if (static_cast<Index>(location.size()) != dim()) throw ShapeError("query dimension does not match the index");
    if (k < 1 || static_cast<Index>(k) > size()) {
        throw ParameterError("k = " + std::to_string(k) + " must lie in [1, " + std::to_string(size()) + "]");
    }
    std::vector<Candidate> c;
    impl_->search(location, k, -1, c);
    return to_neighbors(c);
}

Neighbors NeighborIndex::query_loo(Index id, std::size_t k) const {
    if (id < 0 || id >= size()) throw ParameterError("training point id out of range");
    if (k < 1 || static_cast<Index>(k) > size() - 1) {
        throw ParameterError("k = " + std::to_string(k) + " must lie in [1, n - 1 = " +
                             std::to_string(size() - 1) + "]");
    }
    std::vector<Candidate> c;
    impl_->search(point(*locations_, id), k, id, c);
    return to_neighbors(c);
}

Neighbors brute_force_knn(const Locations& reference, std::span<const double> query, std::size_t k,
                          Index exclude) {
    std::vector<Candidate> c;
    c.reserve(static_cast<std::size_t>(reference.rows()));
    for (Index i = 0; i < reference.rows(); ++i) {
        if (i == exclude) continue;
        c.push_back({squared_distance(query, point(reference, i)), i});
    }
    finish(c, k);
    return to_neighbors(c);
}

}  // namespace muygps

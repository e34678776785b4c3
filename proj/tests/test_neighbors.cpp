#include "muygps/errors.hpp"
#include "muygps/neighbors.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace muygps;

namespace {

Locations uniform(Index n, Index p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Locations x(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) x(i, j) = u(rng);
    return x;
}

Locations line(std::initializer_list<double> xs) {
    Locations x(static_cast<Index>(xs.size()), 1);
    Index i = 0;
    for (double v : xs) x(i++, 0) = v;
    return x;
}

bool sorted(const Neighbors& nb) {
    return std::is_sorted(nb.distances.begin(), nb.distances.end());
}

}  // namespace

TEST_CASE("three collinear points") {
    for (Backend b : {Backend::exact, Backend::approximate}) {
        const NeighborIndex index = NeighborIndex::build(line({0.0, 1.0, 2.0}), b);
        const Neighbors mid = index.query_loo(1, 2);
        CHECK(mid.ids == std::vector<Index>{0, 2});
        CHECK(mid.distances == std::vector<double>{1.0, 1.0});
        const Neighbors end = index.query_loo(0, 1);
        CHECK(end.ids == std::vector<Index>{1});
        CHECK(end.distances == std::vector<double>{1.0});

        const double at1[1] = {1.0};
        const Neighbors hit = index.query(at1, 1);
        CHECK(hit.ids == std::vector<Index>{1});
        CHECK(hit.distances[0] == 0.0);
        const double half[1] = {0.5};
        const Neighbors two = index.query(half, 2);
        CHECK(two.ids == std::vector<Index>{0, 1});
        CHECK(two.distances[0] == two.distances[1]);
    }
}

TEST_CASE("two points is the smallest index") {
    const NeighborIndex index = NeighborIndex::build(line({0.0, 3.0}), Backend::exact);
    CHECK(index.query_loo(0, 1).ids == std::vector<Index>{1});
    CHECK(index.query_loo(1, 1).ids == std::vector<Index>{0});
    CHECK_THROWS_AS((void)NeighborIndex::build(line({0.0}), Backend::exact), InsufficientDataError);
    CHECK_THROWS_AS((void)NeighborIndex::build(line({0.0}), Backend::approximate), InsufficientDataError);
}

TEST_CASE("k out of range") {
    const NeighborIndex index = NeighborIndex::build(uniform(10, 2, 1), Backend::exact);
    const double q[2] = {0.5, 0.5};
    CHECK_THROWS_AS((void)index.query_loo(0, 10), ParameterError);
    CHECK_THROWS_AS((void)index.query_loo(0, 0), ParameterError);
    CHECK_THROWS_AS((void)index.query(q, 11), ParameterError);
    CHECK_NOTHROW((void)index.query(q, 10));
    CHECK_NOTHROW((void)index.query_loo(3, 9));
    CHECK_THROWS_AS((void)index.query_loo(10, 1), ParameterError);
    const double q3[3] = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS((void)index.query(q3, 1), ShapeError);
}

TEST_CASE("non-finite coordinates are rejected") {
    Locations x = uniform(5, 2, 2);
    x(3, 1) = NAN;
    CHECK_THROWS_AS((void)NeighborIndex::build(x, Backend::exact), ParameterError);
}

TEST_CASE("exact backend matches brute force") {
    for (Index p : {1, 2, 3, 5}) {
        const Locations x = uniform(500, p, 10 + static_cast<std::uint64_t>(p));
        const NeighborIndex index = NeighborIndex::build(x, Backend::exact);
        const Locations queries = uniform(40, p, 99);
        for (Index i = 0; i < queries.rows(); ++i) {
            const Neighbors got = index.query(point(queries, i), 50);
            const Neighbors want = brute_force_knn(x, point(queries, i), 50);
            CHECK(got.ids == want.ids);
            CHECK(got.distances == want.distances);
            CHECK(sorted(got));
        }
        for (Index i = 0; i < 500; i += 7) {
            const Neighbors got = index.query_loo(i, 20);
            const Neighbors want = brute_force_knn(x, point(x, i), 20, i);
            CHECK(got.ids == want.ids);
            CHECK(std::find(got.ids.begin(), got.ids.end(), i) == got.ids.end());
        }
    }
}

TEST_CASE("brute force oracle really is sorted self-excluded distances") {
    const Locations x = uniform(60, 2, 4);
    const Neighbors nb = brute_force_knn(x, point(x, 5), 59, 5);
    std::vector<double> all;
    for (Index j = 0; j < 60; ++j)
        if (j != 5) all.push_back(std::sqrt(squared_distance(point(x, 5), point(x, j))));
    std::sort(all.begin(), all.end());
    REQUIRE(nb.distances.size() == all.size());
    for (std::size_t j = 0; j < all.size(); ++j) CHECK(nb.distances[j] == doctest::Approx(all[j]).epsilon(1e-15));
}

TEST_CASE("ties on a lattice break by ascending id") {
    Locations x(9, 2);
    for (Index r = 0; r < 3; ++r)
        for (Index c = 0; c < 3; ++c) {
            x(r * 3 + c, 0) = static_cast<double>(c);
            x(r * 3 + c, 1) = static_cast<double>(r);
        }
    for (Backend b : {Backend::exact, Backend::approximate}) {
        const NeighborIndex index = NeighborIndex::build(x, b);
        CHECK(index.query_loo(4, 4).ids == std::vector<Index>{1, 3, 5, 7});
        CHECK(index.query_loo(4, 8).ids == std::vector<Index>{1, 3, 5, 7, 0, 2, 6, 8});
    }
}

TEST_CASE("duplicate locations are all reported") {
    Locations x(4, 2);
    x << 0, 0, 0, 0, 0, 0, 1, 1;
    const NeighborIndex index = NeighborIndex::build(x, Backend::exact);
    CHECK(index.query_loo(1, 2).ids == std::vector<Index>{0, 2});
    CHECK(index.query_loo(1, 2).distances == std::vector<double>{0.0, 0.0});
}

TEST_CASE("approximate backend recall on a 10k cloud") {
    const Locations x = uniform(10000, 2, 2024);
    const NeighborIndex exact = NeighborIndex::build(x, Backend::exact);
    const NeighborIndex approx = NeighborIndex::build(x, Backend::approximate);
    const Locations queries = uniform(300, 2, 77);
    double hits = 0.0;
    for (Index i = 0; i < queries.rows(); ++i) {
        const auto a = approx.query(point(queries, i), 50);
        const auto e = exact.query(point(queries, i), 50);
        CHECK(sorted(a));
        const std::set<Index> truth(e.ids.begin(), e.ids.end());
        for (Index id : a.ids) hits += truth.count(id);
    }
    const double recall = hits / (300.0 * 50.0);
    MESSAGE("recall@50 = " << recall);
    CHECK(recall >= 0.95);

    double loo_hits = 0.0;
    for (Index i = 0; i < 10000; i += 50) {
        const auto a = approx.query_loo(i, 50);
        const auto e = exact.query_loo(i, 50);
        CHECK(std::find(a.ids.begin(), a.ids.end(), i) == a.ids.end());
        CHECK(a.ids.size() == 50);
        const std::set<Index> truth(e.ids.begin(), e.ids.end());
        for (Index id : a.ids) loo_hits += truth.count(id);
    }
    CHECK(loo_hits / (200.0 * 50.0) >= 0.95);
}

TEST_CASE("indexes are deterministic and safe to query concurrently") {
    const Locations x = uniform(3000, 2, 8);
    for (Backend b : {Backend::exact, Backend::approximate}) {
        const NeighborIndex a = NeighborIndex::build(x, b);
        const NeighborIndex c = NeighborIndex::build(x, b);
        std::vector<std::vector<Index>> serial(500), parallel(500);
        for (int i = 0; i < 500; ++i) serial[i] = a.query_loo(i, 30).ids;
#pragma omp parallel for
        for (int i = 0; i < 500; ++i) parallel[i] = c.query_loo(i, 30).ids;
        CHECK(serial == parallel);
    }
}

TEST_CASE("backend names") {
    CHECK(parse_backend("exact") == Backend::exact);
    CHECK(parse_backend("approximate") == Backend::approximate);
    CHECK(parse_backend("hnsw") == Backend::approximate);
    CHECK(to_string(Backend::approximate) == "approximate");
    CHECK_THROWS_AS(parse_backend("lsh"), ParameterError);
}

#include "doctest.h"

#include "helpers.hpp"
#include "zacc/oracle.hpp"

using namespace zacc;
using namespace zacc::testing;

TEST_CASE("brute aggregate over constant data")
{
    MemoryStore store;
    put_variable(store, "v", {"x", "y"}, {6, 5}, {3, 2}, std::vector<double>(30, 4.5));
    BruteEngine brute(store, "v");

    RegionQuery q;
    q.agg_dims = DimSubset::of(brute.grid(), {"x", "y"});
    q.bounds = {{0, 6}, {0, 5}};
    q.weighting = Weighting::unweighted;
    auto r = brute.region_aggregate(q);
    CHECK(r.average[0] == doctest::Approx(4.5));
    CHECK(r.fetch.chunk_reads == 6);
}

TEST_CASE("brute aggregate over the introduction sequence")
{
    MemoryStore store;
    put_variable(store, "v", {"x"}, {4}, {1}, {1, 2, 3, 4});
    BruteEngine brute(store, "v");

    RegionQuery q;
    q.agg_dims = DimSubset::of(brute.grid(), {"x"});
    q.bounds = {{1, 4}};
    q.weighting = Weighting::unweighted;
    CHECK(brute.region_aggregate(q).average[0] == doctest::Approx(3.0));
}

TEST_CASE("brute aggregate honors gaps and weights")
{
    MemoryStore store;
    put_variable(store, "v", {"x"}, {4}, {2}, {2.0, -9999.0, 6.0, 10.0});
    auto wsrc = WeightSource::dim_vectors({{0, {1.0, 1.0, 0.5, 0.25}}});
    BruteEngine brute(store, "v", wsrc);

    RegionQuery q;
    q.agg_dims = DimSubset::of(brute.grid(), {"x"});
    q.bounds = {{0, 4}};
    q.weighting = Weighting::weighted;
    auto r = brute.region_aggregate(q);
    // (2*1 + 6*0.5 + 10*0.25) / (1 + 0.5 + 0.25)
    CHECK(r.average[0] == doctest::Approx(7.5 / 1.75));

    q.weighting = Weighting::unweighted;
    auto u = brute.region_aggregate(q);
    CHECK(u.data_sum[0] == doctest::Approx(18.0));
    CHECK(u.weight_sum[0] == 4.0); // element count; gaps contribute zero
}

TEST_CASE("element ceiling guards full-scale scans")
{
    MemoryStore store;
    put_variable(store, "v", {"x"}, {100}, {10},
                 std::vector<double>(100, 1.0));
    BruteEngine brute(store, "v");
    brute.set_element_ceiling(50);

    RegionQuery q;
    q.agg_dims = DimSubset::of(brute.grid(), {"x"});
    q.bounds = {{0, 100}};
    q.weighting = Weighting::unweighted;
    CHECK_THROWS_WITH_AS(brute.region_aggregate(q), doctest::Contains("ceiling"),
                         CapabilityError);
}

TEST_CASE("nrmsd")
{
    std::vector<double> base = {0.0, 1.0};
    std::vector<double> same = base;
    auto zero = nrmsd(base, same);
    CHECK(zero.defined);
    CHECK(zero.nrmsd == 0.0);
    CHECK(zero.n == 2);

    std::vector<double> off = {0.0, 1.0 + 1e-7};
    auto r = nrmsd(base, off);
    CHECK(r.defined);
    CHECK(r.nrmsd == doctest::Approx(1e-7 / std::sqrt(2.0)).epsilon(1e-9));

    // Deviation sign does not matter.
    std::vector<double> neg = {0.0, 1.0 - 1e-7};
    CHECK(nrmsd(base, neg).nrmsd == doctest::Approx(r.nrmsd));

    // Constant baseline: the normalizing range vanishes.
    std::vector<double> flat = {2.0, 2.0};
    CHECK_FALSE(nrmsd(flat, base).defined);

    std::vector<double> short_vec = {1.0};
    CHECK_THROWS_AS(nrmsd(base, short_vec), BoundsError);
}

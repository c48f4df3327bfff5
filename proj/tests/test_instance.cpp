#include <cmath>
#include <sstream>

#include <doctest.h>

#include "sbpc/instance.hpp"

using namespace sbpc;

namespace {

double poisson_pmf(int k, double rate) {
    return std::exp(k * std::log(rate) - std::lgamma(double(k) + 1.0) - rate);
}

std::string synthetic_file(int demand, int capacity) {
    std::ostringstream os;
    os << "NAME : synthetic\nTYPE : CVRP\nDIMENSION : 2\n"
       << "EDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : " << capacity << "\n"
       << "NODE_COORD_SECTION\n 1 0 0\n 2 3 4\n"
       << "DEMAND_SECTION\n 1 0\n 2 " << demand << "\n"
       << "DEPOT_SECTION\n 1\n -1\nEOF\n";
    return os.str();
}

}  // namespace

TEST_CASE("euclidean cost basics") {
    CHECK(euclidean_cost({0, 0}, {3, 4}) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(euclidean_cost({1, 1}, {1, 1}) == 0.0);
    CHECK(euclidean_cost({0, 0}, {1, 1}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("build_poisson keeps modal points under degenerate eps") {
    auto d = build_poisson(1.0, 0.5);
    REQUIRE(d.support.size() == 2);
    CHECK(d.support[0] == 0);
    CHECK(d.support[1] == 1);
    CHECK(d.probs[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(d.probs[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("build_poisson normalizes exactly") {
    for (double rate : {1.0, 7.0, 10.0, 42.0, 137.0, 200.0}) {
        auto d = build_poisson(rate, 1e-5);
        double total = 0.0;
        for (double p : d.probs)
            total += p;
        CHECK(std::abs(total - 1.0) <= 1e-12);
        CHECK(d.support.size() < 10000);
        // support is contiguous
        for (std::size_t k = 1; k < d.support.size(); ++k)
            CHECK(d.support[k] == d.support[k - 1] + 1);
    }
}

TEST_CASE("build_poisson mean matches the exact truncated mean") {
    // Independent recomputation: brute scan over [0, 400] with the raw pmf.
    const double rate = 50.0, eps = 1e-5;
    double total = 0.0, mean = 0.0;
    for (int k = 0; k <= 400; ++k) {
        double p = poisson_pmf(k, rate);
        if (p >= eps) {
            total += p;
            mean += k * p;
        }
    }
    mean /= total;
    auto d = build_poisson(rate, eps);
    CHECK(d.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(std::abs(d.mean - 50.0) < 0.05);
}

TEST_CASE("build_poisson rejects bad arguments") {
    CHECK_THROWS_AS(build_poisson(0.0), InstanceError);
    CHECK_THROWS_AS(build_poisson(-1.0), InstanceError);
    CHECK_THROWS_AS(build_poisson(1.0, 0.0), InstanceError);
    CHECK_THROWS_AS(build_poisson(1.0, 1.0), InstanceError);
}

TEST_CASE("parse P-n40-k5") {
    auto inst = load_instance(std::string(SBPC_DATA_DIR) + "/P-n40-k5.vrp", 1.0,
                              FleetMode::unlimited);
    CHECK(inst.n == 39);
    CHECK(inst.capacity == 140);
    CHECK(inst.unlimited_fleet());
    CHECK(inst.coords[0].x == 30.0);  // depot from DEPOT_SECTION
    CHECK(inst.coords[0].y == 40.0);
    inst.validate();

    SUBCASE("cost table is symmetric with zero diagonal") {
        for (int i = 0; i <= inst.n; ++i)
            for (int j = 0; j <= inst.n; ++j)
                CHECK(inst.cost[i][j] == inst.cost[j][i]);
    }

    SUBCASE("fixed fleet size comes from the instance name") {
        auto fixed = load_instance(std::string(SBPC_DATA_DIR) + "/P-n40-k5.vrp", 1.0,
                                   FleetMode::fixed);
        CHECK(fixed.fleet == 5);
        CHECK(fixed.min_fleet() == 5);
    }
}

TEST_CASE("single customer with zero demand is accepted") {
    std::istringstream in(synthetic_file(0, 10));
    auto inst = parse_instance(in, 1.0, FleetMode::unlimited);
    CHECK(inst.n == 1);
    CHECK(inst.mean_demand(1) == 0.0);
}

TEST_CASE("customer mean above f*Q is rejected at load time") {
    std::istringstream in(synthetic_file(20, 10));
    CHECK_THROWS_AS(parse_instance(in, 1.0, FleetMode::unlimited), InstanceError);
}

TEST_CASE("parse/serialize round trip preserves demands and capacity") {
    auto inst = load_instance(std::string(SBPC_DATA_DIR) + "/A-n37-k5.vrp", 1.0,
                              FleetMode::unlimited);
    std::ostringstream out;
    write_instance(inst, out);
    std::istringstream in(out.str());
    auto again = parse_instance(in, 1.0, FleetMode::unlimited);
    CHECK(again.capacity == inst.capacity);
    REQUIRE(again.n == inst.n);
    for (int i = 1; i <= inst.n; ++i) {
        CHECK(again.nominal_demand[i] == inst.nominal_demand[i]);
        CHECK(again.mean_demand(i) == inst.mean_demand(i));
    }
}

TEST_CASE("instance report is valid JSON with the expected fields") {
    auto inst = load_instance(std::string(SBPC_DATA_DIR) + "/P-n40-k5.vrp", 1.0,
                              FleetMode::fixed);
    auto report = instance_report(inst);
    CHECK(report.find("\"customers\":39") != std::string::npos);
    CHECK(report.find("\"feasible\":true") != std::string::npos);
}

TEST_CASE("malformed files are rejected") {
    SUBCASE("unsupported edge weight type") {
        std::istringstream in(
            "DIMENSION : 2\nEDGE_WEIGHT_TYPE : EXPLICIT\nCAPACITY : 5\n"
            "NODE_COORD_SECTION\n 1 0 0\n 2 1 1\nDEMAND_SECTION\n 1 0\n 2 1\n"
            "DEPOT_SECTION\n 1\n -1\nEOF\n");
        CHECK_THROWS_AS(parse_instance(in, 1.0, FleetMode::unlimited), InstanceError);
    }
    SUBCASE("incomplete coordinate section") {
        std::istringstream in(
            "DIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : 5\n"
            "NODE_COORD_SECTION\n 1 0 0\n 2 1 1\nDEMAND_SECTION\n 1 0\n 2 1\n 3 1\n"
            "DEPOT_SECTION\n 1\n -1\nEOF\n");
        CHECK_THROWS_AS(parse_instance(in, 1.0, FleetMode::unlimited), InstanceError);
    }
    SUBCASE("no depot anywhere") {
        std::istringstream in(
            "DIMENSION : 2\nEDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : 5\n"
            "NODE_COORD_SECTION\n 1 0 0\n 2 1 1\nDEMAND_SECTION\n 1 2\n 2 1\nEOF\n");
        CHECK_THROWS_AS(parse_instance(in, 1.0, FleetMode::unlimited), InstanceError);
    }
}

TEST_CASE("truncated poisson stays a pmf across rates") {
    for (int rate = 1; rate <= 200; rate += 13) {
        auto d = build_poisson(double(rate), 1e-5);
        double total = 0.0;
        for (double p : d.probs) {
            CHECK(p > 0.0);
            total += p;
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
    }
}

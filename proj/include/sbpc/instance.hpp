#ifndef SBPC_INSTANCE_HPP
#define SBPC_INSTANCE_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbpc {

struct InstanceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Finite discrete pmf over nonnegative integers. Zero-mass points are never
// stored, probabilities sum to one, and the mean is cached. When the pmf was
// obtained by truncating a distribution, `mass` records the raw probability
// retained by the truncation window; expectations of recourse cost are scaled
// by it, so dropped tail outcomes contribute nothing. Exact pmfs have mass 1.
struct DemandDistribution {
    std::vector<int> support;   // strictly increasing
    std::vector<double> probs;  // matching, all > 0
    double mean = 0.0;
    double mass = 1.0;          // raw probability covered by the support, in (0, 1]

    int min_value() const { return support.front(); }
    int max_value() const { return support.back(); }

    static DemandDistribution point_mass(int value);
    // Drops non-positive masses, renormalizes the rest, caches the mean.
    static DemandDistribution from_weights(std::vector<int> support,
                                           std::vector<double> weights);
};

// Poisson pmf with every point below `eps` removed and the remaining masses
// renormalized to sum to one. The retained support is contiguous. If no point
// reaches `eps`, the modal point(s) are kept so the pmf stays nonempty.
DemandDistribution build_poisson(double rate, double eps = 1e-5);

struct Coord {
    double x = 0.0;
    double y = 0.0;
};

double euclidean_cost(const Coord& a, const Coord& b);

enum class FleetMode { fixed, unlimited };
inline constexpr int kUnlimitedFleet = -1;

struct StochasticInstance {
    std::string name;
    int n = 0;                               // customers 1..n, node 0 is the depot
    std::vector<Coord> coords;               // n+1 entries
    std::vector<std::vector<double>> cost;   // (n+1) x (n+1), unrounded
    int capacity = 0;                        // Q
    int fleet = kUnlimitedFleet;             // m, or kUnlimitedFleet
    double load_factor = 1.0;                // f
    std::vector<DemandDistribution> demands; // n+1 entries, [0] is a point mass at 0
    std::vector<int> nominal_demand;         // file demands (Poisson rates), n+1 entries

    double mean_demand(int i) const { return demands[i].mean; }
    double load_limit() const { return load_factor * capacity; }
    double total_mean_demand() const;
    int min_fleet() const;  // ceil(total mean demand / load limit)
    bool unlimited_fleet() const { return fleet == kUnlimitedFleet; }

    // Checks the structural invariants; throws InstanceError on violation.
    void validate() const;
};

// CVRPLIB/TSPLIB text, EDGE_WEIGHT_TYPE EUC_2D only. File demands become
// truncated Poisson rates; zero demands become point masses at zero.
StochasticInstance parse_instance(std::istream& in, double load_factor,
                                  FleetMode mode, double eps = 1e-5);
StochasticInstance load_instance(const std::string& path, double load_factor,
                                 FleetMode mode, double eps = 1e-5);

// Emits the instance back in CVRPLIB text form (nominal demands).
void write_instance(const StochasticInstance&, std::ostream& out);

// Feasibility report as a JSON object (one line).
std::string instance_report(const StochasticInstance&);

}  // namespace sbpc

#endif

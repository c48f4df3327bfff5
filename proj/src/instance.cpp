#include "sbpc/instance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace sbpc {

namespace {

double poisson_pmf(int k, double rate) {
    return std::exp(k * std::log(rate) - std::lgamma(double(k) + 1.0) - rate);
}

}  // namespace

DemandDistribution DemandDistribution::point_mass(int value) {
    DemandDistribution d;
    d.support = {value};
    d.probs = {1.0};
    d.mean = value;
    return d;
}

DemandDistribution DemandDistribution::from_weights(std::vector<int> support,
                                                    std::vector<double> weights) {
    if (support.size() != weights.size() || support.empty())
        throw InstanceError("from_weights: support/weights size mismatch or empty");
    DemandDistribution d;
    double total = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (k > 0 && support[k] <= support[k - 1])
            throw InstanceError("from_weights: support must be strictly increasing");
        if (support[k] < 0)
            throw InstanceError("from_weights: negative demand value");
        if (weights[k] > 0.0) {
            d.support.push_back(support[k]);
            d.probs.push_back(weights[k]);
            total += weights[k];
        }
    }
    if (d.support.empty() || total <= 0.0)
        throw InstanceError("from_weights: no positive mass");
    double mean = 0.0;
    for (std::size_t k = 0; k < d.support.size(); ++k) {
        d.probs[k] /= total;
        mean += d.support[k] * d.probs[k];
    }
    d.mean = mean;
    return d;
}

DemandDistribution build_poisson(double rate, double eps) {
    if (!(rate > 0.0))
        throw InstanceError("build_poisson: rate must be positive");
    if (!(eps > 0.0 && eps < 1.0))
        throw InstanceError("build_poisson: eps must lie in (0,1)");
    const int mode = int(std::floor(rate));
    int lo = mode, hi = mode;
    if (poisson_pmf(mode, rate) >= eps) {
        while (lo > 0 && poisson_pmf(lo - 1, rate) >= eps)
            --lo;
        while (poisson_pmf(hi + 1, rate) >= eps)
            ++hi;
    } else {
        // Degenerate eps: keep the modal point(s) so the pmf stays nonempty.
        double pmode = poisson_pmf(mode, rate);
        while (lo > 0 && poisson_pmf(lo - 1, rate) >= pmode * (1.0 - 1e-12))
            --lo;
        while (poisson_pmf(hi + 1, rate) >= pmode * (1.0 - 1e-12))
            ++hi;
    }
    std::vector<int> support;
    std::vector<double> weights;
    support.reserve(hi - lo + 1);
    weights.reserve(hi - lo + 1);
    double retained = 0.0;
    for (int k = lo; k <= hi; ++k) {
        support.push_back(k);
        weights.push_back(poisson_pmf(k, rate));
        retained += weights.back();
    }
    auto d = DemandDistribution::from_weights(std::move(support), std::move(weights));
    d.mass = std::min(1.0, retained);
    return d;
}

double euclidean_cost(const Coord& a, const Coord& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

double StochasticInstance::total_mean_demand() const {
    double total = 0.0;
    for (int i = 1; i <= n; ++i)
        total += demands[i].mean;
    return total;
}

int StochasticInstance::min_fleet() const {
    return int(std::ceil(total_mean_demand() / load_limit() - 1e-9));
}

void StochasticInstance::validate() const {
    if (n < 1)
        throw InstanceError("instance has no customers");
    if (capacity < 1)
        throw InstanceError("capacity must be positive");
    if (load_factor < 1.0)
        throw InstanceError("load factor must be at least 1");
    if (int(coords.size()) != n + 1 || int(cost.size()) != n + 1 ||
        int(demands.size()) != n + 1)
        throw InstanceError("inconsistent instance array sizes");
    for (int i = 0; i <= n; ++i) {
        if (int(cost[i].size()) != n + 1)
            throw InstanceError("cost table is not square");
        if (cost[i][i] != 0.0)
            throw InstanceError("cost[i][i] must be zero");
        for (int j = 0; j <= n; ++j)
            if (!std::isfinite(cost[i][j]) || cost[i][j] < 0.0)
                throw InstanceError("arc costs must be finite and nonnegative");
    }
    for (int i = 1; i <= n; ++i) {
        const auto& d = demands[i];
        if (d.support.empty() || d.support.size() != d.probs.size())
            throw InstanceError("malformed demand distribution");
        double total = 0.0, mean = 0.0;
        for (std::size_t k = 0; k < d.support.size(); ++k) {
            if (k > 0 && d.support[k] <= d.support[k - 1])
                throw InstanceError("demand support must be strictly increasing");
            if (d.probs[k] <= 0.0)
                throw InstanceError("demand probabilities must be positive");
            total += d.probs[k];
            mean += d.support[k] * d.probs[k];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw InstanceError("demand probabilities must sum to one");
        if (!(d.mass > 0.0 && d.mass <= 1.0))
            throw InstanceError("retained mass must lie in (0,1]");
        if (std::abs(mean - d.mean) > 1e-12 * std::max(1.0, std::abs(mean)))
            throw InstanceError("cached demand mean is stale");
        if (d.mean > load_limit() + 1e-9)
            throw InstanceError("customer mean demand exceeds f*Q");
    }
}

namespace {

std::string upper(std::string s) {
    for (char& c : s)
        c = char(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct RawInstance {
    std::map<std::string, std::string> fields;
    std::vector<std::pair<double, double>> coords;  // by file node id 1..dim
    std::vector<long> demands;
    std::vector<int> depot_ids;
    int dimension = 0;
};

RawInstance read_sections(std::istream& in) {
    RawInstance raw;
    std::string line;
    enum class Section { none, coords, demands, depots } sec = Section::none;
    int coord_count = 0, demand_count = 0;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty())
            continue;
        std::string key = upper(t.substr(0, t.find_first_of(" :\t")));
        if (key == "EOF")
            break;
        if (key == "NODE_COORD_SECTION") {
            if (raw.dimension <= 0)
                throw InstanceError("NODE_COORD_SECTION before DIMENSION");
            raw.coords.assign(raw.dimension + 1, {0.0, 0.0});
            sec = Section::coords;
            continue;
        }
        if (key == "DEMAND_SECTION") {
            if (raw.dimension <= 0)
                throw InstanceError("DEMAND_SECTION before DIMENSION");
            raw.demands.assign(raw.dimension + 1, -1);
            sec = Section::demands;
            continue;
        }
        if (key == "DEPOT_SECTION") {
            sec = Section::depots;
            continue;
        }
        if (t.find(':') != std::string::npos &&
            (sec == Section::none || !std::isdigit(static_cast<unsigned char>(t[0])) )) {
            auto pos = t.find(':');
            std::string k = upper(trim(t.substr(0, pos)));
            raw.fields[k] = trim(t.substr(pos + 1));
            if (k == "DIMENSION") {
                raw.dimension = std::stoi(raw.fields[k]);
                if (raw.dimension < 2)
                    throw InstanceError("DIMENSION must be at least 2");
            }
            sec = Section::none;
            continue;
        }
        std::istringstream ls(t);
        if (sec == Section::coords) {
            int id;
            double x, y;
            if (!(ls >> id >> x >> y) || id < 1 || id > raw.dimension)
                throw InstanceError("malformed NODE_COORD_SECTION line: " + t);
            raw.coords[id] = {x, y};
            ++coord_count;
        } else if (sec == Section::demands) {
            int id;
            long d;
            if (!(ls >> id >> d) || id < 1 || id > raw.dimension)
                throw InstanceError("malformed DEMAND_SECTION line: " + t);
            if (d < 0)
                throw InstanceError("negative demand in DEMAND_SECTION");
            raw.demands[id] = d;
            ++demand_count;
        } else if (sec == Section::depots) {
            int id;
            while (ls >> id) {
                if (id == -1) {
                    sec = Section::none;
                    break;
                }
                if (id < 1 || id > raw.dimension)
                    throw InstanceError("bad depot id in DEPOT_SECTION");
                raw.depot_ids.push_back(id);
            }
        } else {
            throw InstanceError("unexpected line outside any section: " + t);
        }
    }
    if (raw.dimension <= 0)
        throw InstanceError("missing DIMENSION");
    if (coord_count != raw.dimension)
        throw InstanceError("NODE_COORD_SECTION incomplete");
    if (demand_count != raw.dimension)
        throw InstanceError("DEMAND_SECTION incomplete");
    return raw;
}

std::optional<int> fleet_from_metadata(const RawInstance& raw, const std::string& name) {
    if (auto it = raw.fields.find("VEHICLES"); it != raw.fields.end())
        return std::stoi(it->second);
    std::smatch m;
    static const std::regex k_suffix("-k([0-9]+)\\s*$", std::regex::icase);
    if (std::regex_search(name, m, k_suffix))
        return std::stoi(m[1].str());
    if (auto it = raw.fields.find("COMMENT"); it != raw.fields.end()) {
        static const std::regex trucks("trucks\\s*:\\s*([0-9]+)", std::regex::icase);
        if (std::regex_search(it->second, m, trucks))
            return std::stoi(m[1].str());
    }
    return std::nullopt;
}

}  // namespace

StochasticInstance parse_instance(std::istream& in, double load_factor,
                                  FleetMode mode, double eps) {
    if (load_factor < 1.0)
        throw InstanceError("load factor must be at least 1");
    RawInstance raw = read_sections(in);

    if (auto it = raw.fields.find("EDGE_WEIGHT_TYPE"); it != raw.fields.end()) {
        if (upper(it->second) != "EUC_2D")
            throw InstanceError("unsupported EDGE_WEIGHT_TYPE: " + it->second);
    } else {
        throw InstanceError("missing EDGE_WEIGHT_TYPE");
    }

    int depot_id;
    if (!raw.depot_ids.empty()) {
        if (raw.depot_ids.size() > 1)
            throw InstanceError("multiple depots are not supported");
        depot_id = raw.depot_ids[0];
    } else {
        // No DEPOT_SECTION: fall back to the unique zero-demand node.
        depot_id = 0;
        for (int id = 1; id <= raw.dimension; ++id)
            if (raw.demands[id] == 0) {
                if (depot_id != 0)
                    throw InstanceError("missing DEPOT_SECTION and ambiguous depot");
                depot_id = id;
            }
        if (depot_id == 0)
            throw InstanceError("missing depot");
    }

    StochasticInstance inst;
    if (auto it = raw.fields.find("NAME"); it != raw.fields.end())
        inst.name = it->second;
    if (auto it = raw.fields.find("CAPACITY"); it != raw.fields.end())
        inst.capacity = std::stoi(it->second);
    else
        throw InstanceError("missing CAPACITY");
    inst.load_factor = load_factor;
    inst.n = raw.dimension - 1;

    inst.coords.resize(inst.n + 1);
    inst.nominal_demand.assign(inst.n + 1, 0);
    inst.demands.resize(inst.n + 1);
    inst.coords[0] = {raw.coords[depot_id].first, raw.coords[depot_id].second};
    inst.demands[0] = DemandDistribution::point_mass(0);
    int next = 1;
    for (int id = 1; id <= raw.dimension; ++id) {
        if (id == depot_id)
            continue;
        inst.coords[next] = {raw.coords[id].first, raw.coords[id].second};
        long rate = raw.demands[id];
        inst.nominal_demand[next] = int(rate);
        inst.demands[next] = rate == 0 ? DemandDistribution::point_mass(0)
                                       : build_poisson(double(rate), eps);
        if (inst.demands[next].mean > load_factor * inst.capacity + 1e-9) {
            std::ostringstream msg;
            msg << "customer with file id " << id << " has mean demand "
                << inst.demands[next].mean << " > f*Q = "
                << load_factor * inst.capacity;
            throw InstanceError(msg.str());
        }
        ++next;
    }

    inst.cost.assign(inst.n + 1, std::vector<double>(inst.n + 1, 0.0));
    for (int i = 0; i <= inst.n; ++i)
        for (int j = 0; j <= inst.n; ++j)
            inst.cost[i][j] = i == j ? 0.0 : euclidean_cost(inst.coords[i], inst.coords[j]);

    if (mode == FleetMode::unlimited) {
        inst.fleet = kUnlimitedFleet;
    } else {
        auto meta = fleet_from_metadata(raw, inst.name);
        inst.fleet = meta ? *meta : inst.min_fleet();
        if (inst.fleet < 1)
            throw InstanceError("fixed fleet size must be positive");
    }
    inst.validate();
    return inst;
}

StochasticInstance load_instance(const std::string& path, double load_factor,
                                 FleetMode mode, double eps) {
    std::ifstream in(path);
    if (!in)
        throw InstanceError("cannot open instance file: " + path);
    StochasticInstance inst = parse_instance(in, load_factor, mode, eps);
    if (inst.name.empty())
        inst.name = path;
    return inst;
}

void write_instance(const StochasticInstance& inst, std::ostream& out) {
    out << "NAME : " << (inst.name.empty() ? "instance" : inst.name) << "\n";
    out << "TYPE : CVRP\n";
    out << "DIMENSION : " << inst.n + 1 << "\n";
    out << "EDGE_WEIGHT_TYPE : EUC_2D\n";
    out << "CAPACITY : " << inst.capacity << "\n";
    out << "NODE_COORD_SECTION\n";
    out.precision(17);
    for (int i = 0; i <= inst.n; ++i)
        out << " " << i + 1 << " " << inst.coords[i].x << " " << inst.coords[i].y << "\n";
    out << "DEMAND_SECTION\n";
    for (int i = 0; i <= inst.n; ++i)
        out << " " << i + 1 << " " << inst.nominal_demand[i] << "\n";
    out << "DEPOT_SECTION\n 1\n -1\nEOF\n";
}

std::string instance_report(const StochasticInstance& inst) {
    nlohmann::json j;
    j["name"] = inst.name;
    j["customers"] = inst.n;
    j["capacity"] = inst.capacity;
    j["load_factor"] = inst.load_factor;
    j["fleet"] = inst.unlimited_fleet() ? nlohmann::json() : nlohmann::json(inst.fleet);
    j["total_mean_demand"] = inst.total_mean_demand();
    j["min_fleet"] = inst.min_fleet();
    bool feasible = true;
    if (!inst.unlimited_fleet() && inst.fleet < inst.min_fleet())
        feasible = false;
    j["feasible"] = feasible;
    return j.dump();
}

}  // namespace sbpc

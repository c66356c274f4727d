#include "oscnet/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "json.hpp"
#include "oscnet/errors.hpp"
#include "oscnet/rng.hpp"

namespace oscnet {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_node(std::size_t node, std::size_t n, const char* what) {
    if (node >= n) {
        throw IndexError(std::string(what) + " index " + std::to_string(node) +
                         " out of range for network of size " + std::to_string(n));
    }
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<double> draw_omega(const OmegaSpec& spec, std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed, "omega");
    std::vector<double> omega(n);
    std::visit(overloaded{
                   [&](const ConstantOmega& c) { std::fill(omega.begin(), omega.end(), c.value); },
                   [&](const UniformOmega& u) {
                       if (!(u.lo <= u.hi)) throw ParameterError("omega uniform requires lo <= hi");
                       for (auto& w : omega) w = rng.uniform(u.lo, u.hi);
                   },
                   [&](const NormalOmega& g) {
                       if (!(g.sd >= 0.0)) throw ParameterError("omega normal requires sd >= 0");
                       for (auto& w : omega) w = rng.normal(g.mean, g.sd);
                   },
               },
               spec);
    for (double w : omega) {
        if (!std::isfinite(w)) throw ParameterError("omega spec produced a non-finite frequency");
    }
    return omega;
}

double number_at(const json& node, const std::string& field) {
    if (!node.is_number()) throw ParseError(field + ": must be a finite number");
    const double v = node.get<double>();
    if (!std::isfinite(v)) throw ParseError(field + ": must be a finite number (NaN/Inf rejected)");
    return v;
}

const json& require(const json& doc, const char* field) {
    auto it = doc.find(field);
    if (it == doc.end()) throw ParseError(std::string("missing required field \"") + field + "\"");
    return *it;
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

Matrix attenuate(const Matrix& distance, const AttenuationParams& params, std::optional<double> cutoff) {
    const std::size_t n = distance.rows();
    Matrix x(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double r = distance(i, j);
            if (!std::isfinite(r)) continue;   // unreachable
            if (cutoff && r > *cutoff) continue;
            x(i, j) = params.beta0 * std::exp(-params.gamma * std::pow(r, params.m));
        }
    }
    return x;
}

}  // namespace

// ---------------------------------------------------------------------------

double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(angle, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w = 0.0;   // fmod of tiny negatives can round up to 2*pi
    return w;
}

std::vector<double> PhaseState::wrapped() const {
    std::vector<double> out(theta.size());
    std::transform(theta.begin(), theta.end(), out.begin(), wrap_angle);
    return out;
}

bool Network::is_symmetric() const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (coupling(i, j) != coupling(j, i)) return false;
        }
    }
    return true;
}

void Network::validate() const {
    const std::size_t n = size();
    if (coupling.rows() != n || coupling.cols() != n) {
        throw InvariantError("coupling must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(omega[i])) throw InvariantError("omega[" + std::to_string(i) + "] is not finite");
        for (std::size_t j = 0; j < n; ++j) {
            const double x = coupling(i, j);
            const std::string where = "coupling[" + std::to_string(i) + "][" + std::to_string(j) + "]";
            if (!std::isfinite(x)) throw InvariantError(where + " is not finite");
            if (x < 0.0) throw InvariantError(where + " is negative (couplings must be >= 0)");
            if (i == j && x != 0.0) throw InvariantError(where + " is on the diagonal and must be 0");
        }
    }
    if (positions) {
        if (positions->rows() != n) throw InvariantError("positions must have one row per node");
        for (double v : positions->data()) {
            if (!std::isfinite(v)) throw InvariantError("positions contain a non-finite coordinate");
        }
    }
    if (!labels.empty() && labels.size() != n) throw InvariantError("labels must be empty or have n entries");
}

void AttenuationParams::validate() const {
    if (!(beta0 > 0.0) || !std::isfinite(beta0)) throw ParameterError("attenuation beta0 must be > 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ParameterError("attenuation gamma must be >= 0");
    if (!(m > 0.0) || !std::isfinite(m)) throw ParameterError("attenuation m must be > 0");
}

std::string topology_name(const TopologyKind& kind) {
    return std::visit(overloaded{
                          [](const Complete&) { return std::string("complete"); },
                          [](const Ring& r) { return "ring(" + std::to_string(r.k) + ")"; },
                          [](const ErdosRenyi& e) { return "erdos-renyi(" + format_double(e.p) + ")"; },
                          [](const Custom&) { return std::string("custom"); },
                      },
                      kind);
}

Network build_topology(const TopologySpec& spec) {
    const std::size_t n = spec.n;
    if (n < 1) throw ParameterError("topology n must be >= 1");
    if (!(spec.coupling >= 0.0) || !std::isfinite(spec.coupling)) {
        throw ParameterError("uniform coupling K must be finite and >= 0");
    }
    const bool complete = std::holds_alternative<Complete>(spec.kind);
    const bool mean_field = spec.mean_field.value_or(complete);
    const double k_eff = mean_field ? spec.coupling / static_cast<double>(n) : spec.coupling;

    Network net;
    net.coupling = Matrix(n, n);
    auto set_pair = [&](std::size_t i, std::size_t j, double x) {
        net.coupling(i, j) = x;
        net.coupling(j, i) = x;
    };

    std::visit(overloaded{
                   [&](const Complete&) {
                       for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = i + 1; j < n; ++j) set_pair(i, j, k_eff);
                   },
                   [&](const Ring& ring) {
                       if (ring.k >= n) throw ParameterError("ring degree k must be < n");
                       for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t s = 1; s <= ring.k; ++s) {
                               const std::size_t j = (i + s) % n;
                               if (j != i) set_pair(i, j, k_eff);
                           }
                       }
                   },
                   [&](const ErdosRenyi& er) {
                       if (!(er.p >= 0.0 && er.p <= 1.0)) {
                           throw ParameterError("erdos-renyi probability p must be in [0, 1]");
                       }
                       CounterRng rng(spec.seed, "topology");
                       for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = i + 1; j < n; ++j)
                               if (rng.uniform() < er.p) set_pair(i, j, k_eff);
                   },
                   [&](const Custom& custom) {
                       if (custom.adjacency.rows() != n || custom.adjacency.cols() != n) {
                           throw ParameterError("custom adjacency must be n x n");
                       }
                       for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t j = 0; j < n; ++j) {
                               const double a = custom.adjacency(i, j);
                               if (!std::isfinite(a) || a < 0.0) {
                                   throw ParameterError("custom adjacency entries must be finite and >= 0");
                               }
                               if (i != j) net.coupling(i, j) = k_eff * a;
                           }
                       }
                   },
               },
               spec.kind);

    net.omega = draw_omega(spec.omega, n, spec.seed);
    net.validate();
    return net;
}

Matrix coupling_from_distance(const Matrix& positions, const AttenuationParams& params,
                              std::optional<double> cutoff) {
    params.validate();
    if (cutoff && !(*cutoff > 0.0)) throw ParameterError("cutoff must be > 0");
    for (double v : positions.data()) {
        if (!std::isfinite(v)) throw ParameterError("positions must be finite");
    }
    const std::size_t n = positions.rows();
    Matrix distance(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t d = 0; d < positions.cols(); ++d) {
                const double diff = positions(i, d) - positions(j, d);
                sq += diff * diff;
            }
            distance(i, j) = distance(j, i) = std::sqrt(sq);
        }
    }
    return attenuate(distance, params, cutoff);
}

Matrix coupling_from_graph_distance(const Matrix& adjacency, const AttenuationParams& params,
                                    std::optional<double> cutoff) {
    params.validate();
    if (cutoff && !(*cutoff > 0.0)) throw ParameterError("cutoff must be > 0");
    const std::size_t n = adjacency.rows();
    if (adjacency.cols() != n) throw ParameterError("adjacency must be square");

    std::vector<std::vector<std::size_t>> neighbours(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && (adjacency(i, j) > 0.0 || adjacency(j, i) > 0.0)) neighbours[i].push_back(j);

    constexpr double inf = std::numeric_limits<double>::infinity();
    Matrix distance(n, n, inf);
    for (std::size_t src = 0; src < n; ++src) {
        distance(src, src) = 0.0;
        std::queue<std::size_t> frontier;
        frontier.push(src);
        while (!frontier.empty()) {
            const std::size_t u = frontier.front();
            frontier.pop();
            for (std::size_t v : neighbours[u]) {
                if (distance(src, v) == inf) {
                    distance(src, v) = distance(src, u) + 1.0;
                    frontier.push(v);
                }
            }
        }
    }
    return attenuate(distance, params, cutoff);
}

// ---------------------------------------------------------------------------

std::string perturbation_name(const PerturbationKind& kind) {
    return std::visit(overloaded{
                          [](const FrequencyShift&) { return std::string("frequency-shift"); },
                          [](const EdgeRescale&) { return std::string("edge-rescale"); },
                          [](const EdgeRemove&) { return std::string("edge-remove"); },
                          [](const NodeSilence&) { return std::string("node-silence"); },
                      },
                      kind);
}

namespace {

Network perturb_network(const Network& net, const PerturbationSpec& spec) {
    if (!(spec.at_time >= 0.0)) throw ParameterError("perturbation at_time must be >= 0");
    const std::size_t n = net.size();
    Network out = net;
    std::visit(overloaded{
                   [&](const FrequencyShift& f) {
                       check_node(f.node, n, "frequency-shift node");
                       if (!std::isfinite(f.delta_omega)) throw ParameterError("delta_omega must be finite");
                       out.omega[f.node] += f.delta_omega;
                   },
                   [&](const EdgeRescale& e) {
                       check_node(e.i, n, "edge-rescale i");
                       check_node(e.j, n, "edge-rescale j");
                       if (e.i == e.j) throw IndexError("edge-rescale on a self-edge");
                       if (!(e.factor >= 0.0) || !std::isfinite(e.factor)) {
                           throw ParameterError("edge-rescale factor must be finite and >= 0");
                       }
                       out.coupling(e.i, e.j) *= e.factor;
                   },
                   [&](const EdgeRemove& e) {
                       check_node(e.i, n, "edge-remove i");
                       check_node(e.j, n, "edge-remove j");
                       if (e.i == e.j) throw IndexError("edge-remove on a self-edge");
                       const bool symmetric = net.is_symmetric();
                       out.coupling(e.i, e.j) = 0.0;
                       if (symmetric) out.coupling(e.j, e.i) = 0.0;
                   },
                   [&](const NodeSilence& s) {
                       check_node(s.node, n, "node-silence node");
                       for (std::size_t k = 0; k < n; ++k) {
                           out.coupling(s.node, k) = 0.0;
                           out.coupling(k, s.node) = 0.0;
                       }
                   },
               },
               spec.kind);
    return out;
}

}  // namespace

std::pair<Network, PhaseState> apply_perturbation(const Network& net, const PhaseState& state,
                                                  const PerturbationSpec& spec) {
    if (state.theta.size() != net.size()) throw ParameterError("state size does not match network");
    return {perturb_network(net, spec), state};
}

std::pair<Network, CircleState> apply_perturbation(const Network& net, const CircleState& state,
                                                   const PerturbationSpec& spec) {
    if (state.phi.size() != net.size() || state.period.size() != net.size()) {
        throw ParameterError("state size does not match network");
    }
    Network out = perturb_network(net, spec);
    CircleState next = state;
    if (const auto* f = std::get_if<FrequencyShift>(&spec.kind)) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        const double angular = two_pi / state.period[f->node] + f->delta_omega;
        if (!(angular > 0.0)) throw ParameterError("frequency-shift would make the period non-positive");
        next.period[f->node] = two_pi / angular;
    }
    return {std::move(out), std::move(next)};
}

// ---------------------------------------------------------------------------

Network network_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON at line " + std::to_string(line_of_offset(text, e.byte)) + ": " +
                         e.what());
    }
    if (!doc.is_object()) throw ParseError("network document must be a JSON object");
    if (auto it = doc.find("schema_version"); it != doc.end() && *it != 1) {
        throw ParseError("schema_version: only version 1 is understood");
    }

    const json& n_node = require(doc, "n");
    if (!n_node.is_number_integer() || n_node.get<long long>() < 1) {
        throw ParseError("n: must be a positive integer");
    }
    const auto n = static_cast<std::size_t>(n_node.get<long long>());

    Network net;
    const json& omega = require(doc, "omega");
    if (!omega.is_array() || omega.size() != n) throw ParseError("omega: must be an array of n numbers");
    net.omega.resize(n);
    for (std::size_t i = 0; i < n; ++i) net.omega[i] = number_at(omega[i], "omega[" + std::to_string(i) + "]");

    const json& coupling = require(doc, "coupling");
    if (!coupling.is_array() || coupling.size() != n) throw ParseError("coupling: must be an array of n rows");
    net.coupling = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const json& row = coupling[i];
        const std::string where = "coupling[" + std::to_string(i) + "]";
        if (!row.is_array() || row.size() != n) throw ParseError(where + ": must be an array of n numbers");
        for (std::size_t j = 0; j < n; ++j) {
            net.coupling(i, j) = number_at(row[j], where + "[" + std::to_string(j) + "]");
        }
    }

    if (auto it = doc.find("positions"); it != doc.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != n) throw ParseError("positions: must be an array of n rows");
        const std::size_t d = n > 0 && (*it)[0].is_array() ? (*it)[0].size() : 0;
        Matrix pos(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            const json& row = (*it)[i];
            const std::string where = "positions[" + std::to_string(i) + "]";
            if (!row.is_array() || row.size() != d) throw ParseError(where + ": rows must share one dimension");
            for (std::size_t k = 0; k < d; ++k) pos(i, k) = number_at(row[k], where + "[" + std::to_string(k) + "]");
        }
        net.positions = std::move(pos);
    }
    if (auto it = doc.find("labels"); it != doc.end() && !it->is_null()) {
        if (!it->is_array() || it->size() != n) throw ParseError("labels: must be an array of n strings");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(*it)[i].is_string()) throw ParseError("labels[" + std::to_string(i) + "]: must be a string");
            net.labels.push_back((*it)[i].get<std::string>());
        }
    }
    net.validate();
    return net;
}

std::string network_to_json_text(const Network& net) {
    net.validate();
    json doc;
    doc["schema_version"] = 1;
    doc["n"] = net.size();
    doc["omega"] = net.omega;
    json rows = json::array();
    for (std::size_t i = 0; i < net.size(); ++i) {
        auto r = net.coupling.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    doc["coupling"] = std::move(rows);
    if (net.positions) {
        json pos = json::array();
        for (std::size_t i = 0; i < net.positions->rows(); ++i) {
            auto r = net.positions->row(i);
            pos.push_back(std::vector<double>(r.begin(), r.end()));
        }
        doc["positions"] = std::move(pos);
    }
    if (!net.labels.empty()) doc["labels"] = net.labels;
    return doc.dump(1) + "\n";
}

Network network_from_edge_list(const std::string& edges_text, const std::string& omega_text) {
    Network net;
    {
        std::istringstream in(omega_text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
                continue;
            }
            std::istringstream ls(line);
            double w = 0.0;
            if (!(ls >> w) || !std::isfinite(w)) {
                throw ParseError("omega sidecar line " + std::to_string(lineno) + ": expected one finite number");
            }
            net.omega.push_back(w);
        }
    }
    const std::size_t n = net.omega.size();
    if (n == 0) throw ParseError("omega sidecar is empty");
    net.coupling = Matrix(n, n);

    std::istringstream in(edges_text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        long long i = -1;
        long long j = -1;
        double x = 0.0;
        std::string extra;
        if (!(ls >> i >> j >> x) || (ls >> extra)) {
            throw ParseError("edge list line " + std::to_string(lineno) + ": expected `i j X_ij`");
        }
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n) {
            throw ParseError("edge list line " + std::to_string(lineno) + ": node index outside the " +
                             std::to_string(n) + " nodes listed in the omega sidecar");
        }
        if (!std::isfinite(x)) throw ParseError("edge list line " + std::to_string(lineno) + ": X_ij must be finite");
        net.coupling(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = x;
    }
    net.validate();
    return net;
}

Network load_network(const std::filesystem::path& path) {
    if (path.extension() == ".json") return network_from_json_text(read_file(path));
    auto sidecar = path;
    sidecar.replace_extension(".omega");
    return network_from_edge_list(read_file(path), read_file(sidecar));
}

void save_edge_list(const Network& net, const std::filesystem::path& path) {
    net.validate();
    std::string edges;
    for (std::size_t i = 0; i < net.size(); ++i) {
        for (std::size_t j = 0; j < net.size(); ++j) {
            if (net.coupling(i, j) != 0.0) {
                edges += std::to_string(i) + " " + std::to_string(j) + " " + format_double(net.coupling(i, j)) + "\n";
            }
        }
    }
    std::string omega;
    for (double w : net.omega) omega += format_double(w) + "\n";
    auto sidecar = path;
    sidecar.replace_extension(".omega");
    write_file(path, edges);
    write_file(sidecar, omega);
}

void save_network(const Network& net, const std::filesystem::path& path) {
    if (path.extension() == ".json") {
        write_file(path, network_to_json_text(net));
    } else {
        save_edge_list(net, path);
    }
}

}  // namespace oscnet

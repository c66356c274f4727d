#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "oscnet/matrix.hpp"
#include "oscnet/state.hpp"

namespace oscnet {

/// Weighted directed oscillator network.
///
/// `coupling(i, j)` is X_ij, the strength with which oscillator j drives
/// oscillator i (row i holds the incoming couplings of i). The diagonal is
/// always zero and every entry is finite and nonnegative.
struct Network {
    std::vector<double> omega;             // natural frequencies, rad/time
    Matrix coupling;                       // n x n
    std::optional<Matrix> positions;       // n x d node coordinates
    std::vector<std::string> labels;       // empty or n entries

    std::size_t size() const noexcept { return omega.size(); }
    bool is_symmetric() const;

    // Throws InvariantError naming the first violated invariant.
    void validate() const;

    bool operator==(const Network&) const = default;
};

/// beta = beta0 * exp(-gamma * r^m)
struct AttenuationParams {
    double beta0 = 1.0;
    double gamma = 1.0;
    double m = 1.0;

    void validate() const;
};

enum class DistanceMetric { euclidean, graph_hops };

// ---------------------------------------------------------------------------
// Topology construction

struct Complete {};
struct Ring {
    std::size_t k = 1;   // neighbours on each side
};
struct ErdosRenyi {
    double p = 0.1;
};
/// Unweighted (or weighted) adjacency supplied by the caller; scaled by K.
struct Custom {
    Matrix adjacency;
};
using TopologyKind = std::variant<Complete, Ring, ErdosRenyi, Custom>;

struct ConstantOmega {
    double value = 0.0;
};
struct UniformOmega {
    double lo = -1.0;
    double hi = 1.0;
};
struct NormalOmega {
    double mean = 0.0;
    double sd = 1.0;
};
using OmegaSpec = std::variant<ConstantOmega, UniformOmega, NormalOmega>;

struct TopologySpec {
    TopologyKind kind = Complete{};
    std::size_t n = 1;
    double coupling = 1.0;                 // uniform K
    OmegaSpec omega = NormalOmega{};
    std::uint64_t seed = 0;
    // Divide K by n. Unset means "on for complete graphs, off otherwise".
    std::optional<bool> mean_field;
};

std::string topology_name(const TopologyKind& kind);

/// Builds a network from a topology spec. All built-in topologies are
/// symmetric. Deterministic in the TopologySpec: edges and frequencies are drawn
/// from separate named streams of the seed.
Network build_topology(const TopologySpec& spec);

/// X_ij = beta0 * exp(-gamma * r_ij^m) with r_ij the Euclidean distance
/// between rows i and j of `positions`; entries with r_ij > cutoff are 0.
Matrix coupling_from_distance(const Matrix& positions, const AttenuationParams& params,
                              std::optional<double> cutoff = std::nullopt);

/// Same attenuation law with r_ij the hop distance in the graph whose edges
/// are the positive entries of `adjacency` (either direction). Unreachable
/// pairs get 0.
Matrix coupling_from_graph_distance(const Matrix& adjacency, const AttenuationParams& params,
                                    std::optional<double> cutoff = std::nullopt);

// ---------------------------------------------------------------------------
// Perturbations

struct FrequencyShift {
    std::size_t node = 0;
    double delta_omega = 0.0;
};
struct EdgeRescale {
    std::size_t i = 0;
    std::size_t j = 0;
    double factor = 1.0;
};
struct EdgeRemove {
    std::size_t i = 0;
    std::size_t j = 0;
};
struct NodeSilence {
    std::size_t node = 0;
};
using PerturbationKind = std::variant<FrequencyShift, EdgeRescale, EdgeRemove, NodeSilence>;

struct PerturbationSpec {
    double at_time = 0.0;
    PerturbationKind kind;
};

/// A perturbation as it actually took effect during a run.
struct AppliedPerturbation {
    PerturbationSpec spec;
    double applied_at = 0.0;
    std::size_t step = 0;   // integrator step or event-loop iteration
};

std::string perturbation_name(const PerturbationKind& kind);

/// Returns perturbed copies. Frequency shifts change omega; on a CircleState
/// they also raise the angular frequency 2*pi/T of the node by delta_omega.
std::pair<Network, PhaseState> apply_perturbation(const Network& net, const PhaseState& state,
                                                  const PerturbationSpec& spec);
std::pair<Network, CircleState> apply_perturbation(const Network& net, const CircleState& state,
                                                   const PerturbationSpec& spec);

// ---------------------------------------------------------------------------
// Persistence

/// JSON: {"schema_version"?, "n", "omega", "coupling", "positions"?, "labels"?}
Network network_from_json_text(const std::string& text);
std::string network_to_json_text(const Network& net);

/// Dispatches on extension: `.json` is the JSON schema, anything else is an
/// edge list `i j X_ij` with a sidecar `.omega` file (same stem).
Network load_network(const std::filesystem::path& path);
void save_network(const Network& net, const std::filesystem::path& path);

/// Edge list reader. `n` is the number of lines in the omega sidecar, which
/// must cover every node index used by an edge.
Network network_from_edge_list(const std::string& edges_text, const std::string& omega_text);
void save_edge_list(const Network& net, const std::filesystem::path& path);

}  // namespace oscnet

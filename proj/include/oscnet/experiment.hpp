#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oscnet/action.hpp"
#include "oscnet/graph.hpp"
#include "oscnet/kuramoto.hpp"
#include "oscnet/probe.hpp"
#include "oscnet/pulse.hpp"

namespace oscnet {

inline constexpr int kSchemaVersion = 1;

enum class Model { kuramoto, pulse };

/// Optional distance-law reweighting of the built topology.
struct AttenuationConfig {
    AttenuationParams params;
    DistanceMetric metric = DistanceMetric::euclidean;
    std::optional<double> cutoff;
    std::size_t dim = 2;   // random positions in the unit cube when none are given
    std::optional<Matrix> positions;
};

struct NetworkSource {
    TopologySpec topology;                       // used when `path` is empty
    bool topology_seed_fixed = false;            // false: the run seed picks the network
    std::filesystem::path path;                  // JSON or edge list
    std::optional<AttenuationConfig> attenuation;
};

struct AnalysisConfig {
    bool regime = true;
    RegimeOptions regime_options;
    bool qoppa = true;
    std::optional<double> qoppa_t_start;         // defaults: the whole run
    std::optional<double> qoppa_t_end;
    bool trajectory_embed = true;
    bool local_order = false;
    std::optional<double> rate_window;           // pulse firing-rate window; unset means 10 mean periods
};

struct ExperimentConfig {
    Model model = Model::kuramoto;
    NetworkSource network;
    SimulationOptions dynamics;                  // dt doubles as the pulse sampling step
    PulseParams pulse;
    std::optional<std::vector<double>> pulse_periods;   // default 2 pi / omega_i
    std::vector<std::uint64_t> seeds;
    std::optional<ProbeConfig> probe;
    std::filesystem::path output_root = "oscnet-out";
    std::size_t workers = 1;
    AnalysisConfig analysis;
};

struct ConfigCheck {
    std::optional<ExperimentConfig> config;      // set when there are no violations
    std::vector<std::string> violations;
};

/// Parses and validates a JSON config. Relative file paths inside the config
/// resolve against `base_dir`. Every violation names the field.
ConfigCheck check_config_text(const std::string& text, const std::filesystem::path& base_dir = {});
std::vector<std::string> validate_config(const std::filesystem::path& path);
/// Throws ParseError listing every violation.
ExperimentConfig load_config(const std::filesystem::path& path);

/// OSCNET_OUTPUT_ROOT and OSCNET_WORKERS, when set, replace the config values.
void apply_env_overrides(ExperimentConfig& config);

// ---------------------------------------------------------------------------
// In-memory per-seed pipelines

Network build_network(const ExperimentConfig& config, std::uint64_t seed);
/// Uniform on [0, 2 pi) from the stream "initial" of the seed.
PhaseState initial_phases(std::size_t n, std::uint64_t seed);

struct KuramotoOutcome {
    Network network;                             // as built, probe included
    std::size_t network_nodes = 0;               // nodes before the probe
    TrajectoryRecord record;
    SimulationResult sim;
    std::optional<RegimeReport> regime;
    std::optional<QoppaFit> qoppa;
    std::string qoppa_error;                     // why the fit is missing
    std::vector<TrajectoryPoint> embedding;
    std::optional<double> probe_estimate;
    std::string probe_error;
};
KuramotoOutcome run_kuramoto_seed(const ExperimentConfig& config, std::uint64_t seed);

struct PulseOutcome {
    Network network;
    CircleState initial;
    PulseRun run;
    std::vector<double> times;                   // sampling grid for the signaling series
    std::vector<double> signaling_action;        // S_f
    std::vector<double> firing_rate;
};
PulseOutcome run_pulse_seed(const ExperimentConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Campaigns

struct SeedReport {
    std::uint64_t seed = 0;
    std::filesystem::path dir;                   // relative to the output root
    std::vector<std::string> files;
    std::optional<double> final_r;
    std::optional<std::string> regime;
    std::optional<double> sync_time;
    std::vector<AppliedPerturbation> applied;
};

struct ExitReport {
    std::filesystem::path root;
    std::filesystem::path summary;
    std::vector<SeedReport> seeds;               // in config seed order
};

/// Runs every seed (in parallel up to `workers`), writes one directory per
/// seed and summary.json at the root. Throws IoError when the output root
/// cannot be written.
ExitReport run_experiment(const ExperimentConfig& config);

/// The summary.json text for a report; contains no timestamps.
std::string summary_json(const ExperimentConfig& config, const ExitReport& report);

// ---------------------------------------------------------------------------
// Figure data

enum class Figure { fig6, fig7, fig8, phase_circle };
std::optional<Figure> parse_figure(const std::string& name);
std::string figure_name(Figure which);

/// fig6: t,dSdt   fig7: t,domega_0..   fig8: x,y,color   phase-circle: node,cos_theta,sin_theta
/// The phase-circle snapshot is the final recorded step.
std::string figure_csv(const TrajectoryRecord& record, Figure which);

/// Same tables, read back from a per-seed record directory written by
/// run_experiment. Throws ParameterError naming the analysis toggle to
/// enable when the record lacks the data for `which`.
void export_figure_data(const std::filesystem::path& record_dir, Figure which, const std::filesystem::path& out);

}  // namespace oscnet

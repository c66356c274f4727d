#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oscnet/graph.hpp"
#include "oscnet/rng.hpp"
#include "oscnet/state.hpp"

namespace oscnet {

/// Phase-response curves for a receiver at circle phase phi (threshold 1):
///
///   advance_late:  dphi = -alpha * X * sin(2 pi phi)
///                  nodes past the half cycle jump forward toward firing,
///                  nodes that fired recently jump back. Synchronizing.
///   advance_early: dphi = +alpha * X * sin(2 pi phi)
///                  the mirror image; drives pairs toward antiphase.
enum class ResponseCurve { advance_late, advance_early };

struct PulseParams {
    double p_send = 1.0;       // firing probability at threshold
    double alpha = 0.1;        // response gain
    double threshold = 1.0;
    ResponseCurve curve = ResponseCurve::advance_late;
    // Receivers that land within this distance of the threshold are treated
    // as having reached it and fire in the same cascade.
    double coincidence_tol = 1e-12;

    void validate() const;
};

struct PulseEvent {
    double t = 0.0;
    std::size_t source = 0;
    bool suppressed = false;
    std::vector<std::pair<std::size_t, double>> deltas;   // receiver -> applied dphi

    bool operator==(const PulseEvent&) const = default;
};

struct Crossing {
    std::size_t node = 0;
    double t = 0.0;   // exact (interpolated) crossing time
};

struct AdvanceResult {
    CircleState state;
    std::vector<Crossing> crossings;   // nodes whose phase reached the threshold, by time then index
};

/// phi_i += dt / T_i for every node. No wrapping; crossings of `threshold`
/// are reported with linearly interpolated times.
AdvanceResult advance_phases(const CircleState& state, double dt, double threshold = 1.0);

/// Phase jump for a receiver at `phi` receiving a pulse through coupling X.
/// Clamped so that phi + dphi stays in [0, threshold].
double phase_response(double phi, double coupling, double alpha,
                      ResponseCurve curve = ResponseCurve::advance_late, double threshold = 1.0);

/// Processes every node at or above threshold, in order of crossing time
/// (ties by index). Each crossing draws one Bernoulli(p_send) from `rng`;
/// the node resets to 0 either way, and only a firing node shifts its
/// receivers {j : X_j,source > 0}. Receivers pushed to the threshold join
/// the cascade. Each node is processed at most once per call.
std::pair<CircleState, std::vector<PulseEvent>> fire_and_propagate(const CircleState& state, const Network& net,
                                                                   const PulseParams& params, CounterRng& rng);

struct PulseRun {
    std::vector<PulseEvent> events;
    CircleState final_state;
    std::optional<double> sync_time;              // first cascade that reset every node
    std::vector<std::size_t> cascade_sizes;       // nodes reset per cascade, in order
    std::vector<double> cascade_times;
    std::vector<AppliedPerturbation> applied;
};

/// Hybrid event loop: jumps analytically from one threshold crossing to the
/// next until t_max. Bernoulli draws come from the stream "pulse" of `seed`.
PulseRun run_pulse_sim(const Network& net, const PulseParams& params, const CircleState& init, double t_max,
                       std::uint64_t seed, const std::vector<PerturbationSpec>& perturbations = {});

/// CSV `t,source,suppressed,n_receivers`, one row per event.
std::string events_to_csv(const std::vector<PulseEvent>& events);
/// JSON {"schema_version", "events": [{"t", "source", "deltas": {"j": dphi}}]}.
std::string event_deltas_to_json(const std::vector<PulseEvent>& events);

/// Shortest circular distance between two circle phases (period `threshold`).
double circle_gap(double a, double b, double threshold = 1.0);

}  // namespace oscnet

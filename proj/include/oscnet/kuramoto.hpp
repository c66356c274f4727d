#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "oscnet/graph.hpp"
#include "oscnet/matrix.hpp"
#include "oscnet/state.hpp"

namespace oscnet {

enum class Integrator { euler, rk4 };

/// Mean phasor r * exp(i psi) = (1/N) sum_j exp(i theta_j).
struct OrderParameter {
    double r = 0.0;     // [0, 1]
    double psi = 0.0;   // [0, 2*pi)
};

/// d(theta_i)/dt = omega_i + sum_j X_ij sin(theta_j - theta_i).
///
/// No 1/N factor is applied here; mean-field scaling is a property of the
/// network (see TopologySpec::mean_field). Zero couplings are skipped, so
/// adding zero-weight edges never changes the result bitwise.
std::vector<double> kuramoto_derivative(const PhaseState& state, const Network& net);
void kuramoto_derivative(std::span<const double> theta, const Network& net, std::span<double> out);

/// Advances `state` by dt. Throws NumericError if any phase becomes
/// non-finite.
PhaseState integrate_step(const PhaseState& state, const Network& net, double dt,
                          Integrator method = Integrator::rk4);

OrderParameter order_parameter(std::span<const double> theta);
inline OrderParameter order_parameter(const PhaseState& state) { return order_parameter(state.theta); }

// ---------------------------------------------------------------------------
// Effective coupling diagnostics

/// C_k = sin(theta_k - theta_j), the interaction kernel seen from node j.
std::vector<double> default_contributions(std::span<const double> theta, std::size_t j);

/// sum over k in N(i) of X_ik * C_k, with N(i) = {k : X_ik > 0}.
double effective_coupling(const Network& net, std::size_t i, std::span<const double> contributions);
/// Same, with the default contribution profile taken from `state`.
double effective_coupling(const Network& net, const PhaseState& state, std::size_t i, std::size_t j);

struct PathSum {
    double value = 0.0;
    std::size_t paths = 0;   // number of simple paths enumerated
    bool self_pair = false;  // a == b; value is 0 by convention
};

/// Optional per-path factor (the "amplitude" of a path). Receives the node
/// sequence a, ..., b. Defaults to 1.
using PathFactor = std::function<double(std::span<const std::size_t> path)>;

/// Sum over simple paths a -> ... -> b of at most `max_len` hops of the
/// product of hop couplings. A hop u -> v carries X_vu (u drives v).
PathSum path_sum_coupling(const Network& net, std::size_t a, std::size_t b, std::size_t max_len = 4,
                          const PathFactor& factor = {});

/// Time-weighted RMS of sin(theta_a) about its window mean.
double oscillation_amplitude(std::span<const double> times, const Matrix& thetas, std::size_t a);

/// (1/n) sum_ij X_ij.
double mean_node_strength(const Network& net);

/// A_a / B with A_a = oscillation_amplitude and B = mean_node_strength.
/// `b` is only range-checked. Throws UndefinedError when B = 0.
double amplitude_ratio(const Network& net, std::span<const double> times, const Matrix& thetas, std::size_t a,
                       std::size_t b);
/// Variant with a caller-supplied collective strength B.
double amplitude_ratio(std::span<const double> times, const Matrix& thetas, std::size_t a, double strength);

// ---------------------------------------------------------------------------
// Fixed-step simulation

struct SimulationOptions {
    double dt = 0.01;
    double t_max = 10.0;
    Integrator method = Integrator::rk4;
    std::size_t record_every = 1;
    std::vector<PerturbationSpec> perturbations;
};

/// Called on every `record_every`-th step (step 0 and the last step always
/// included). Receives the state with its phase velocity and the network in force.
using StepObserver =
    std::function<void(const PhaseState& state, std::span<const double> theta_dot, const Network& net)>;

struct SimulationResult {
    PhaseState final_state;
    Network final_network;
    std::vector<AppliedPerturbation> applied;
    std::size_t steps = 0;
};

/// Runs round(t_max / dt) steps. Time at step k is k * dt. Perturbations
/// take effect before the first step whose time reaches `at_time`.
SimulationResult simulate(const Network& net, PhaseState init, const SimulationOptions& options,
                          const StepObserver& observe = {});

}  // namespace oscnet

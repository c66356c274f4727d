#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oscnet/graph.hpp"
#include "oscnet/kuramoto.hpp"
#include "oscnet/matrix.hpp"
#include "oscnet/pulse.hpp"

namespace oscnet {

/// Everything recorded along one Kuramoto run. Per-node matrices are
/// steps x n; scalar series have one entry per recorded step.
struct TrajectoryRecord {
    std::vector<double> times;
    Matrix thetas;                  // unwrapped
    Matrix theta_dots;
    Matrix omegas;                  // natural frequencies in force at each step
    std::vector<double> r_series;
    std::vector<double> psi_series;
    std::vector<double> lagrangian_series;
    std::vector<double> action_series;
    std::vector<double> action_derivative_series;
    Matrix freq_shift_series;       // theta_dot - omega

    std::size_t steps() const noexcept { return times.size(); }
    std::size_t nodes() const noexcept { return thetas.cols(); }
};

enum class Regime { underdamped, critically_damped, steady_state, unsettled };
std::string regime_name(Regime regime);

struct RegimeReport {
    Regime regime = Regime::unsettled;
    double asymptote = 0.0;
    std::optional<double> settle_time;
    std::size_t zero_crossings = 0;
    double envelope_rate = 0.0;
    std::vector<double> extrema_times;   // local extrema of dS/dt before settling
};

struct QoppaFit {
    double qoppa = 0.0;
    double r_squared = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
};

struct TrajectoryPoint {
    double x = 0.0;
    double y = 0.0;
    double color = 0.0;
};

// ---------------------------------------------------------------------------
// Lagrangian and action

/// L = sum_i theta_dot_i^2 / 2 + sum_{i<j} Xs_ij cos(theta_j - theta_i), with
/// Xs the symmetrized coupling (X + X^T) / 2 and unit masses.
double lagrangian(std::span<const double> theta, std::span<const double> theta_dot, const Network& net);

/// Cumulative trapezoid integral with S(t_0) = 0. Times must be strictly
/// increasing.
std::vector<double> accumulate_action(std::span<const double> lagrangian_series, std::span<const double> times);

/// Central differences in the interior, second-order one-sided stencils at
/// the ends. Needs at least 3 samples.
std::vector<double> action_derivative(std::span<const double> action_series, std::span<const double> times);

/// S_f(t) = integral of P_send dt (trapezoid).
std::vector<double> signaling_action(std::span<const double> p_send_series, std::span<const double> times);

/// Rate of fired (non-suppressed) pulses at each time: events inside a
/// centered window of width `window`, clipped to [times.front(), times.back()]
/// and divided by the clipped width.
std::vector<double> firing_rate(const std::vector<PulseEvent>& events, std::span<const double> times, double window);

/// -gamma * t, the log intensity ratio of an exponentially attenuated signal.
double attenuation_action(double gamma, double t);
/// exp(-gamma * t)
double intensity_ratio(double gamma, double t);

// ---------------------------------------------------------------------------
// Regime classification

struct RegimeOptions {
    double tol = 0.02;             // relative to |asymptote|
    double tail_fraction = 0.10;   // samples averaged for the asymptote
    double settle_fraction = 0.20; // must be settled over this final share of the run
};

/// Classifies the settling of a dS/dt series about the mean of its tail.
/// The band is tol * |asymptote| (tol * peak when the asymptote is 0).
///  - unsettled: fewer than 10 samples, or not inside the band over the
///    final settle_fraction of the run;
///  - steady-state: inside the band from the first sample;
///  - underdamped: >= 2 crossings of the asymptote before settling with a
///    decaying envelope, or an overshoot (the transient leaves the band on
///    both sides of the asymptote);
///  - critically-damped: settles with <= 1 crossing and no overshoot;
///  - steady-state otherwise (oscillation without a decaying envelope).
RegimeReport classify_regime(std::span<const double> ds_dt, std::span<const double> times,
                             const RegimeOptions& options = {});

// ---------------------------------------------------------------------------
// Frequency shifts and the drive factor

/// delta_omega(t, i) = theta_dot(t, i) - omega_i.
Matrix frequency_shifts(const Matrix& theta_dots, std::span<const double> omega);
/// Per-step omega (same shape as theta_dots).
Matrix frequency_shifts(const Matrix& theta_dots, const Matrix& omegas);

/// RMS over nodes at each step.
std::vector<double> rms_over_nodes(const Matrix& values);

/// Zero-intercept least squares of delta_omega against dS/dt over the
/// samples with t in [t_start, t_end]. Throws UndefinedError when dS/dt is
/// identically zero on the window.
QoppaFit fit_qoppa(std::span<const double> delta_omega, std::span<const double> ds_dt,
                   std::span<const double> times, double t_start, double t_end);

/// -(1 / 2 pi) / (qoppa * ds_dt), a dimensionless proxy for the wavelength
/// shift. Throws UndefinedError when qoppa * ds_dt is 0 or not finite.
double wavelength_shift(double ds_dt, double qoppa);

/// Embeds each configuration as (cos theta_i, sin theta_i) in R^{2n},
/// projects onto the two leading principal axes of the run and colors each
/// point by the matching entry of `color`.
std::vector<TrajectoryPoint> config_trajectory(const Matrix& thetas, std::span<const double> color);

// ---------------------------------------------------------------------------

struct RecordOptions {
    // Nodes included in r/psi (the first `observed_nodes`); 0 means all.
    std::size_t observed_nodes = 0;
};

/// Runs `simulate` and fills every series of a TrajectoryRecord.
TrajectoryRecord record_trajectory(const Network& net, const PhaseState& init, const SimulationOptions& options,
                                   const RecordOptions& record_options = {}, SimulationResult* result = nullptr);

/// Recomputes S, dS/dt from the Lagrangian series and delta_omega from the
/// recorded velocities. Needs at least 3 samples for dS/dt.
void finish_record(TrajectoryRecord& record);

}  // namespace oscnet

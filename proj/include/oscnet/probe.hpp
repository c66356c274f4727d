#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "oscnet/graph.hpp"
#include "oscnet/state.hpp"

namespace oscnet {

// ---------------------------------------------------------------------------
// Kernel-smoothed observables
//
// M(t) = integral from t0 to t of K(t - s) O(s) ds, with t0 the first sample.
// The finite lower limit drops the pre-run history; for the exponential
// kernel the dropped part is bounded by exp(-gamma (t - t0)) times the
// steady value.

struct ExponentialKernel {
    double gamma = 1.0;   // K(lag) = exp(-gamma * lag)
};
struct BoxKernel {
    double width = 1.0;   // K(lag) = 1 for 0 <= lag <= width
};
/// K(lag) linearly interpolated from (lags, values); zero outside the table.
struct TableKernel {
    std::vector<double> lags;
    std::vector<double> values;
};

enum class KernelNormalization { none, unit_area };

struct KernelSpec {
    std::variant<ExponentialKernel, BoxKernel, TableKernel> shape = ExponentialKernel{};
    KernelNormalization normalization = KernelNormalization::none;

    void validate() const;
    double weight(double lag) const;   // normalized K(lag)
};

std::vector<double> kernel_observable(std::span<const double> observable, std::span<const double> times,
                                      const KernelSpec& kernel);

// ---------------------------------------------------------------------------
// Pre/post-selected ensemble averages (classical analog of a weak value)

struct EnsembleMember {
    std::vector<double> times;
    std::vector<double> selector;     // series the predicates look at
    std::vector<double> observable;   // series that gets averaged
};

struct WindowPredicate {
    std::string description;
    std::function<bool(std::span<const double> times, std::span<const double> values)> test;
};

WindowPredicate always_true();
WindowPredicate mean_above(double threshold);
WindowPredicate mean_below(double threshold);

struct SelectionSpec {
    double pre_window = 0.0;    // predicate sees samples with t <= t0 + pre_window
    WindowPredicate pre = always_true();
    double post_window = 0.0;   // predicate sees samples with t >= t_end - post_window
    WindowPredicate post = always_true();
};

struct ConditionedAverage {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> std_error;   // 0 when fewer than two members are selected
    std::size_t selected = 0;
    std::size_t total = 0;
    std::string pre_description;
    std::string post_description;
};

/// Mean observable over the members passing both predicates. All members
/// must share one time grid. Throws UndefinedError when nothing is selected.
ConditionedAverage conditioned_average(std::span<const EnsembleMember> ensemble, const SelectionSpec& selection);

std::string conditioned_series_csv(const ConditionedAverage& avg);
/// {"schema_version", "analog", "pre_select", "post_select", "selected", "total", "series_csv"}
std::string conditioned_report_json(const ConditionedAverage& avg, const std::string& series_csv_path);

// ---------------------------------------------------------------------------
// Probe oscillator

enum class ProbeMode {
    ideal,        // listens only
    back_action,  // the attached nodes also feel the probe with strength epsilon
};

struct ProbeConfig {
    double epsilon = 0.0;
    double omega_probe = 0.0;
    std::vector<std::size_t> attach_to;   // empty means every node
    ProbeMode mode = ProbeMode::back_action;
    double initial_phase = 0.0;

    void validate(std::size_t n) const;
};

/// Returns an (n + 1)-node network whose last node is the probe.
Network attach_probe(const Network& net, const ProbeConfig& config);

/// Appends the probe phase to a network state.
PhaseState attach_probe_state(const PhaseState& state, const ProbeConfig& config);

/// Time-averaged probe frequency (theta_end - theta_start) / (t_end - t_start)
/// from an unwrapped probe phase series. Needs more than 5 probe periods
/// 2 pi / |omega_probe| of data (for omega_probe = 0, at least 2 samples).
double probe_estimate(std::span<const double> times, std::span<const double> probe_theta, double omega_probe);

}  // namespace oscnet

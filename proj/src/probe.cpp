#include "oscnet/probe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "oscnet/errors.hpp"

namespace oscnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double table_area(const TableKernel& table) {
    double area = 0.0;
    for (std::size_t k = 1; k < table.lags.size(); ++k) {
        area += 0.5 * (table.lags[k] - table.lags[k - 1]) * (table.values[k] + table.values[k - 1]);
    }
    return area;
}

// Integral of the piecewise-linear interpolant of `values` over [lo, times[k]].
double window_integral(std::span<const double> values, std::span<const double> times, std::size_t k, double lo) {
    double acc = 0.0;
    std::size_t j = k;
    while (j > 0 && times[j - 1] >= lo) {
        acc += 0.5 * (times[j] - times[j - 1]) * (values[j] + values[j - 1]);
        --j;
    }
    if (j > 0 && times[j] > lo) {
        // partial segment [lo, times[j]] inside [times[j-1], times[j]]
        const double w = (lo - times[j - 1]) / (times[j] - times[j - 1]);
        const double v_lo = values[j - 1] + w * (values[j] - values[j - 1]);
        acc += 0.5 * (times[j] - lo) * (v_lo + values[j]);
    }
    return acc;
}

}  // namespace

void KernelSpec::validate() const {
    std::visit(overloaded{
                   [](const ExponentialKernel& e) {
                       if (!(e.gamma > 0.0) || !std::isfinite(e.gamma)) {
                           throw ParameterError("exponential kernel gamma must be > 0");
                       }
                   },
                   [](const BoxKernel& b) {
                       if (!(b.width > 0.0) || !std::isfinite(b.width)) {
                           throw ParameterError("box kernel width must be > 0");
                       }
                   },
                   [&](const TableKernel& t) {
                       if (t.lags.size() < 2 || t.lags.size() != t.values.size()) {
                           throw ParameterError("table kernel needs >= 2 (lag, value) pairs");
                       }
                       for (std::size_t k = 0; k < t.lags.size(); ++k) {
                           if (!(t.values[k] >= 0.0)) throw ParameterError("table kernel values must be >= 0");
                           if (k > 0 && !(t.lags[k] > t.lags[k - 1])) {
                               throw ParameterError("table kernel lags must be strictly increasing");
                           }
                       }
                       if (t.lags.front() < 0.0) throw ParameterError("table kernel lags must be >= 0");
                       if (normalization == KernelNormalization::unit_area && !(table_area(t) > 0.0)) {
                           throw ParameterError("table kernel with zero area cannot be normalized");
                       }
                   },
               },
               shape);
}

double KernelSpec::weight(double lag) const {
    if (lag < 0.0) return 0.0;
    const bool unit = normalization == KernelNormalization::unit_area;
    return std::visit(overloaded{
                          [&](const ExponentialKernel& e) {
                              const double k = std::exp(-e.gamma * lag);
                              return unit ? e.gamma * k : k;
                          },
                          [&](const BoxKernel& b) {
                              const double k = lag <= b.width ? 1.0 : 0.0;
                              return unit ? k / b.width : k;
                          },
                          [&](const TableKernel& t) {
                              double k = 0.0;
                              if (lag >= t.lags.front() && lag <= t.lags.back()) {
                                  const auto it = std::upper_bound(t.lags.begin(), t.lags.end(), lag);
                                  const auto hi = static_cast<std::size_t>(
                                      std::min<std::ptrdiff_t>(it - t.lags.begin(),
                                                               static_cast<std::ptrdiff_t>(t.lags.size()) - 1));
                                  const std::size_t lo = hi - 1;
                                  const double w = (lag - t.lags[lo]) / (t.lags[hi] - t.lags[lo]);
                                  k = t.values[lo] + w * (t.values[hi] - t.values[lo]);
                              }
                              return unit ? k / table_area(t) : k;
                          },
                      },
                      shape);
}

std::vector<double> kernel_observable(std::span<const double> observable, std::span<const double> times,
                                      const KernelSpec& kernel) {
    kernel.validate();
    if (observable.size() != times.size()) throw ParameterError("observable and times must be aligned");
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) throw ParameterError("times must be strictly increasing");
    }
    const std::size_t m = times.size();
    std::vector<double> out(m, 0.0);

    if (const auto* box = std::get_if<BoxKernel>(&kernel.shape)) {
        // The box edge rarely falls on a sample; integrate the interpolant exactly.
        const double scale = kernel.normalization == KernelNormalization::unit_area ? 1.0 / box->width : 1.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double lo = std::max(times.front(), times[k] - box->width);
            out[k] = scale * window_integral(observable, times, k, lo);
        }
        return out;
    }

    for (std::size_t k = 1; k < m; ++k) {
        double acc = 0.0;
        double prev = kernel.weight(times[k] - times[0]) * observable[0];
        for (std::size_t j = 1; j <= k; ++j) {
            const double cur = kernel.weight(times[k] - times[j]) * observable[j];
            acc += 0.5 * (times[j] - times[j - 1]) * (prev + cur);
            prev = cur;
        }
        out[k] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------

WindowPredicate always_true() {
    return {"always", [](std::span<const double>, std::span<const double>) { return true; }};
}

WindowPredicate mean_above(double threshold) {
    return {"mean > " + format_double(threshold), [threshold](std::span<const double>, std::span<const double> v) {
                if (v.empty()) return false;
                return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()) > threshold;
            }};
}

WindowPredicate mean_below(double threshold) {
    return {"mean < " + format_double(threshold), [threshold](std::span<const double>, std::span<const double> v) {
                if (v.empty()) return false;
                return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()) < threshold;
            }};
}

ConditionedAverage conditioned_average(std::span<const EnsembleMember> ensemble, const SelectionSpec& selection) {
    if (ensemble.empty()) throw ParameterError("ensemble must be nonempty");
    if (!selection.pre.test || !selection.post.test) throw ParameterError("selection predicates must be set");
    const auto& grid = ensemble.front().times;

    ConditionedAverage avg;
    avg.times = grid;
    avg.total = ensemble.size();
    avg.pre_description = selection.pre.description;
    avg.post_description = selection.post.description;
    std::vector<double> sum(grid.size(), 0.0);
    std::vector<double> sum_sq(grid.size(), 0.0);

    for (const auto& member : ensemble) {
        if (member.times != grid || member.selector.size() != grid.size() || member.observable.size() != grid.size()) {
            throw ParameterError("ensemble members must share one time grid");
        }
        if (grid.empty()) continue;
        const double t0 = grid.front();
        const double t1 = grid.back();
        const auto pre_end = std::upper_bound(grid.begin(), grid.end(), t0 + selection.pre_window) - grid.begin();
        const auto post_begin = std::lower_bound(grid.begin(), grid.end(), t1 - selection.post_window) - grid.begin();
        std::span<const double> times(grid);
        std::span<const double> sel(member.selector);
        const auto pre_n = static_cast<std::size_t>(pre_end);
        const auto post_b = static_cast<std::size_t>(post_begin);
        if (!selection.pre.test(times.first(pre_n), sel.first(pre_n))) continue;
        if (!selection.post.test(times.subspan(post_b), sel.subspan(post_b))) continue;
        ++avg.selected;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            sum[k] += member.observable[k];
            sum_sq[k] += member.observable[k] * member.observable[k];
        }
    }
    if (avg.selected == 0) {
        throw UndefinedError("conditioned average undefined: no trajectory passed both selections");
    }
    const auto s = static_cast<double>(avg.selected);
    avg.mean.resize(grid.size());
    avg.std_error.assign(grid.size(), 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        avg.mean[k] = sum[k] / s;
        if (avg.selected > 1) {
            const double var = std::max(0.0, (sum_sq[k] - s * avg.mean[k] * avg.mean[k]) / (s - 1.0));
            avg.std_error[k] = std::sqrt(var / s);
        }
    }
    return avg;
}

std::string conditioned_series_csv(const ConditionedAverage& avg) {
    std::string out = "t,mean,std_error\n";
    for (std::size_t k = 0; k < avg.times.size(); ++k) {
        out += format_double(avg.times[k]) + "," + format_double(avg.mean[k]) + "," + format_double(avg.std_error[k]) +
               "\n";
    }
    return out;
}

std::string conditioned_report_json(const ConditionedAverage& avg, const std::string& series_csv_path) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    doc["analog"] = "pre/post-selected ensemble average";
    doc["pre_select"] = avg.pre_description;
    doc["post_select"] = avg.post_description;
    doc["selected"] = avg.selected;
    doc["total"] = avg.total;
    doc["series_csv"] = series_csv_path;
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

void ProbeConfig::validate(std::size_t n) const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ParameterError("probe epsilon must be >= 0");
    if (!std::isfinite(omega_probe)) throw ParameterError("probe omega must be finite");
    for (std::size_t node : attach_to) {
        if (node >= n) throw IndexError("probe attach_to node " + std::to_string(node) + " out of range");
    }
}

Network attach_probe(const Network& net, const ProbeConfig& config) {
    const std::size_t n = net.size();
    config.validate(n);
    Network out;
    out.omega = net.omega;
    out.omega.push_back(config.omega_probe);
    out.coupling = Matrix(n + 1, n + 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.coupling(i, j) = net.coupling(i, j);

    std::vector<std::size_t> nodes = config.attach_to;
    if (nodes.empty()) {
        nodes.resize(n);
        std::iota(nodes.begin(), nodes.end(), std::size_t{0});
    }
    for (std::size_t j : nodes) {
        out.coupling(n, j) = config.epsilon;
        if (config.mode == ProbeMode::back_action) out.coupling(j, n) = config.epsilon;
    }
    if (net.positions) {
        Matrix pos(n + 1, net.positions->cols());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < pos.cols(); ++d) pos(i, d) = (*net.positions)(i, d);
        out.positions = std::move(pos);
    }
    if (!net.labels.empty()) {
        out.labels = net.labels;
        out.labels.push_back("probe");
    }
    out.validate();
    return out;
}

PhaseState attach_probe_state(const PhaseState& state, const ProbeConfig& config) {
    PhaseState out = state;
    out.theta.push_back(config.initial_phase);
    return out;
}

double probe_estimate(std::span<const double> times, std::span<const double> probe_theta, double omega_probe) {
    if (times.size() != probe_theta.size()) throw ParameterError("probe series and times must be aligned");
    if (times.size() < 2) throw InsufficientDataError("probe estimate needs at least 2 samples");
    const double duration = times.back() - times.front();
    if (omega_probe != 0.0) {
        const double period = 2.0 * std::numbers::pi / std::abs(omega_probe);
        if (!(duration > 5.0 * period)) {
            throw InsufficientDataError("probe trajectory must cover more than 5 probe periods");
        }
    }
    if (!(duration > 0.0)) throw InsufficientDataError("probe trajectory has zero duration");
    return (probe_theta.back() - probe_theta.front()) / duration;
}

}  // namespace oscnet

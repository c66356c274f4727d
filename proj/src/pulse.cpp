#include "oscnet/pulse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "json.hpp"
#include "oscnet/errors.hpp"

namespace oscnet {

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// sin(2 pi u) evaluated on the offset of u from the nearest integer, so the
// zeros at u = 0, 1/2, 1 are exact and phases just below 1 keep full
// relative precision.
double sin_two_pi(double u) {
    const double x = u - std::round(u);              // [-1/2, 1/2]
    const double ax = std::abs(x);
    const double y = ax <= 0.25 ? ax : 0.5 - ax;     // sin(2 pi ax) = sin(2 pi y)
    const double s = std::sin(2.0 * std::numbers::pi * y);
    return x < 0.0 ? -s : s;
}

void check_state(const CircleState& state) {
    if (state.phi.size() != state.period.size()) throw ParameterError("phi and period must have equal length");
    for (double T : state.period) {
        if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("periods must be finite and > 0");
    }
}

}  // namespace

void PulseParams::validate() const {
    if (!(p_send >= 0.0 && p_send <= 1.0)) throw ParameterError("p_send must be in [0, 1]");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha must be >= 0");
    if (!(threshold > 0.0) || !std::isfinite(threshold)) throw ParameterError("threshold must be > 0");
    if (!(coincidence_tol >= 0.0)) throw ParameterError("coincidence_tol must be >= 0");
}

double circle_gap(double a, double b, double threshold) {
    double d = std::fmod(std::abs(a - b), threshold);
    return std::min(d, threshold - d);
}

AdvanceResult advance_phases(const CircleState& state, double dt, double threshold) {
    check_state(state);
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be >= 0");
    AdvanceResult result{state, {}};
    if (dt == 0.0) return result;
    for (std::size_t i = 0; i < state.phi.size(); ++i) {
        const double before = state.phi[i];
        const double after = before + dt / state.period[i];
        result.state.phi[i] = after;
        if (before < threshold && after >= threshold) {
            result.crossings.push_back({i, state.t + (threshold - before) * state.period[i]});
        }
    }
    result.state.t = state.t + dt;
    std::sort(result.crossings.begin(), result.crossings.end(), [](const Crossing& x, const Crossing& y) {
        return x.t != y.t ? x.t < y.t : x.node < y.node;
    });
    return result;
}

double phase_response(double phi, double coupling, double alpha, ResponseCurve curve, double threshold) {
    if (coupling == 0.0 || alpha == 0.0) return 0.0;
    const double sign = curve == ResponseCurve::advance_late ? -1.0 : 1.0;
    double delta = sign * alpha * coupling * threshold * sin_two_pi(phi / threshold);
    if (phi + delta > threshold) delta = threshold - phi;
    if (phi + delta < 0.0) delta = -phi;
    return delta;
}

std::pair<CircleState, std::vector<PulseEvent>> fire_and_propagate(const CircleState& state, const Network& net,
                                                                   const PulseParams& params, CounterRng& rng) {
    check_state(state);
    const std::size_t n = net.size();
    if (state.phi.size() != n) throw ParameterError("state size does not match network");
    const double thr = params.threshold;

    CircleState next = state;
    std::vector<PulseEvent> events;
    std::vector<char> processed(n, 0);
    std::vector<char> queued(n, 0);
    // (crossing time, node)
    std::set<std::pair<double, std::size_t>> pending;
    for (std::size_t i = 0; i < n; ++i) {
        if (next.phi[i] >= thr) {
            pending.insert({state.t - (next.phi[i] - thr) * next.period[i], i});
            queued[i] = 1;
        }
    }

    while (!pending.empty()) {
        const auto [t_cross, src] = *pending.begin();
        pending.erase(pending.begin());
        processed[src] = 1;

        PulseEvent ev;
        ev.t = t_cross;
        ev.source = src;
        ev.suppressed = !rng.bernoulli(params.p_send);
        next.phi[src] = 0.0;

        if (!ev.suppressed) {
            for (std::size_t j = 0; j < n; ++j) {
                const double x = net.coupling(j, src);
                if (j == src || !(x > 0.0)) continue;
                const double before = next.phi[j];
                double after = before + phase_response(before, x, params.alpha, params.curve, thr);
                if (thr - after <= params.coincidence_tol) after = thr;
                ev.deltas.emplace_back(j, after - before);
                next.phi[j] = after;
                if (after >= thr && !processed[j] && !queued[j]) {
                    pending.insert({state.t, j});
                    queued[j] = 1;
                }
            }
        }
        events.push_back(std::move(ev));
    }
    return {std::move(next), std::move(events)};
}

PulseRun run_pulse_sim(const Network& net, const PulseParams& params, const CircleState& init, double t_max,
                       std::uint64_t seed, const std::vector<PerturbationSpec>& perturbations) {
    params.validate();
    net.validate();
    check_state(init);
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ParameterError("t_max must be > 0");
    const std::size_t n = net.size();
    if (init.phi.size() != n) throw ParameterError("initial state size does not match network");
    for (double p : init.phi) {
        if (!(p >= 0.0 && p < params.threshold)) throw ParameterError("initial phases must lie in [0, threshold)");
    }

    auto pending = perturbations;
    std::stable_sort(pending.begin(), pending.end(),
                     [](const PerturbationSpec& x, const PerturbationSpec& y) { return x.at_time < y.at_time; });

    CounterRng rng(seed, "pulse");
    PulseRun run;
    CircleState state = init;
    Network current = net;
    const double thr = params.threshold;
    std::size_t next_perturbation = 0;
    std::size_t iteration = 0;

    auto advance_to = [&](double t_target) {
        const double dt = t_target - state.t;
        if (dt > 0.0) {
            state = advance_phases(state, dt, thr).state;
        }
        state.t = t_target;
    };

    for (;; ++iteration) {
        double t_next = std::numeric_limits<double>::infinity();
        std::size_t first = n;
        for (std::size_t i = 0; i < n; ++i) {
            const double tc = state.t + (thr - state.phi[i]) * state.period[i];
            if (tc < t_next) {
                t_next = tc;
                first = i;
            }
        }

        if (next_perturbation < pending.size()) {
            const auto& spec = pending[next_perturbation];
            const double tp = std::max(spec.at_time, state.t);
            if (tp <= t_next && tp <= t_max) {
                advance_to(tp);
                auto [net2, state2] = apply_perturbation(current, state, spec);
                current = std::move(net2);
                state = std::move(state2);
                run.applied.push_back({spec, state.t, iteration});
                ++next_perturbation;
                continue;
            }
        }
        if (first == n || t_next > t_max) {
            advance_to(t_max);
            break;
        }

        advance_to(t_next);
        state.phi[first] = thr;
        for (auto& p : state.phi) {
            if (thr - p <= params.coincidence_tol) p = thr;
        }

        auto [after, events] = fire_and_propagate(state, current, params, rng);
        state = std::move(after);
        run.cascade_sizes.push_back(events.size());
        run.cascade_times.push_back(state.t);
        if (!run.sync_time && events.size() == n) run.sync_time = state.t;
        run.events.insert(run.events.end(), std::make_move_iterator(events.begin()),
                          std::make_move_iterator(events.end()));
    }
    run.final_state = std::move(state);
    return run;
}

std::string events_to_csv(const std::vector<PulseEvent>& events) {
    std::string out = "t,source,suppressed,n_receivers\n";
    for (const auto& ev : events) {
        out += format_double(ev.t) + "," + std::to_string(ev.source) + "," + (ev.suppressed ? "1" : "0") + "," +
               std::to_string(ev.deltas.size()) + "\n";
    }
    return out;
}

std::string event_deltas_to_json(const std::vector<PulseEvent>& events) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = 1;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& ev : events) {
        nlohmann::ordered_json e;
        e["t"] = ev.t;
        e["source"] = ev.source;
        e["suppressed"] = ev.suppressed;
        nlohmann::ordered_json d = nlohmann::ordered_json::object();
        for (const auto& [j, dphi] : ev.deltas) d[std::to_string(j)] = dphi;
        e["deltas"] = std::move(d);
        arr.push_back(std::move(e));
    }
    doc["events"] = std::move(arr);
    return doc.dump() + "\n";
}

}  // namespace oscnet

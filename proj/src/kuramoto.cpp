#include "oscnet/kuramoto.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "oscnet/errors.hpp"

namespace oscnet {

namespace {

void check_index(std::size_t i, std::size_t n, const char* what) {
    if (i >= n) {
        throw IndexError(std::string(what) + " index " + std::to_string(i) + " out of range (n = " +
                         std::to_string(n) + ")");
    }
}

}  // namespace

void kuramoto_derivative(std::span<const double> theta, const Network& net, std::span<double> out) {
    const std::size_t n = net.size();
    if (theta.size() != n || out.size() != n) throw ParameterError("phase vector size does not match network");

    std::vector<double> s(n);
    std::vector<double> c(n);
    for (std::size_t j = 0; j < n; ++j) {
        s[j] = std::sin(theta[j]);
        c[j] = std::cos(theta[j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto row = net.coupling.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double x = row[j];
            if (x == 0.0) continue;
            // sin(theta_j - theta_i)
            acc += x * (s[j] * c[i] - c[j] * s[i]);
        }
        out[i] = net.omega[i] + acc;
    }
}

std::vector<double> kuramoto_derivative(const PhaseState& state, const Network& net) {
    std::vector<double> out(net.size());
    kuramoto_derivative(state.theta, net, out);
    return out;
}

PhaseState integrate_step(const PhaseState& state, const Network& net, double dt, Integrator method) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("dt must be > 0");
    const std::size_t n = net.size();
    if (state.theta.size() != n) throw ParameterError("phase vector size does not match network");

    PhaseState next{state.theta, state.t + dt};
    std::vector<double> k1(n);
    kuramoto_derivative(state.theta, net, k1);

    if (method == Integrator::euler) {
        for (std::size_t i = 0; i < n; ++i) next.theta[i] += dt * k1[i];
    } else {
        std::vector<double> k2(n), k3(n), k4(n), tmp(n);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = state.theta[i] + 0.5 * dt * k1[i];
        kuramoto_derivative(tmp, net, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = state.theta[i] + 0.5 * dt * k2[i];
        kuramoto_derivative(tmp, net, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = state.theta[i] + dt * k3[i];
        kuramoto_derivative(tmp, net, k4);
        for (std::size_t i = 0; i < n; ++i) {
            next.theta[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(next.theta[i])) {
            throw NumericError("phase " + std::to_string(i) + " became non-finite at t = " +
                               std::to_string(next.t) + "; reduce dt");
        }
    }
    return next;
}

OrderParameter order_parameter(std::span<const double> theta) {
    if (theta.empty()) throw ParameterError("order parameter needs at least one phase");
    double sc = 0.0;
    double ss = 0.0;
    for (double th : theta) {
        sc += std::cos(th);
        ss += std::sin(th);
    }
    const double inv = 1.0 / static_cast<double>(theta.size());
    sc *= inv;
    ss *= inv;
    return {std::min(1.0, std::hypot(sc, ss)), wrap_angle(std::atan2(ss, sc))};
}

// ---------------------------------------------------------------------------

std::vector<double> default_contributions(std::span<const double> theta, std::size_t j) {
    check_index(j, theta.size(), "contribution reference");
    std::vector<double> c(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) c[k] = std::sin(theta[k] - theta[j]);
    return c;
}

double effective_coupling(const Network& net, std::size_t i, std::span<const double> contributions) {
    const std::size_t n = net.size();
    check_index(i, n, "effective coupling node");
    if (contributions.size() != n) throw ParameterError("contributions must have one entry per node");
    double acc = 0.0;
    auto row = net.coupling.row(i);
    for (std::size_t k = 0; k < n; ++k) {
        if (row[k] > 0.0) acc += row[k] * contributions[k];
    }
    return acc;
}

double effective_coupling(const Network& net, const PhaseState& state, std::size_t i, std::size_t j) {
    check_index(j, net.size(), "effective coupling reference");
    return effective_coupling(net, i, default_contributions(state.theta, j));
}

PathSum path_sum_coupling(const Network& net, std::size_t a, std::size_t b, std::size_t max_len,
                          const PathFactor& factor) {
    const std::size_t n = net.size();
    check_index(a, n, "path source");
    check_index(b, n, "path target");
    if (max_len < 1) throw ParameterError("max_len must be >= 1");
    PathSum result;
    if (a == b) {
        result.self_pair = true;
        return result;
    }

    // Sparse out-adjacency derived from the dense matrix: u -> v when X_vu > 0.
    std::vector<std::vector<std::size_t>> out(n);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t u = 0; u < n; ++u)
            if (net.coupling(v, u) > 0.0) out[u].push_back(v);

    std::vector<char> visited(n, 0);
    std::vector<std::size_t> path{a};
    visited[a] = 1;

    // Iterative DFS would save little here; recursion depth is bounded by max_len.
    std::function<void(std::size_t, double)> walk = [&](std::size_t u, double weight) {
        for (std::size_t v : out[u]) {
            if (visited[v]) continue;
            const double w = weight * net.coupling(v, u);
            path.push_back(v);
            if (v == b) {
                result.value += factor ? w * factor(path) : w;
                ++result.paths;
            } else if (path.size() <= max_len) {
                visited[v] = 1;
                walk(v, w);
                visited[v] = 0;
            }
            path.pop_back();
        }
    };
    walk(a, 1.0);
    return result;
}

double oscillation_amplitude(std::span<const double> times, const Matrix& thetas, std::size_t a) {
    if (times.empty() || thetas.rows() != times.size()) throw ParameterError("window must be nonempty and aligned");
    check_index(a, thetas.cols(), "amplitude node");
    const std::size_t m = times.size();
    const double span = times.back() - times.front();
    if (m == 1 || !(span > 0.0)) return 0.0;

    std::vector<double> s(m);
    for (std::size_t k = 0; k < m; ++k) s[k] = std::sin(thetas(k, a));
    auto trapezoid = [&](auto&& f) {
        double acc = 0.0;
        for (std::size_t k = 1; k < m; ++k) acc += 0.5 * (times[k] - times[k - 1]) * (f(k - 1) + f(k));
        return acc;
    };
    const double mean = trapezoid([&](std::size_t k) { return s[k]; }) / span;
    const double var = trapezoid([&](std::size_t k) { return (s[k] - mean) * (s[k] - mean); }) / span;
    return std::sqrt(std::max(0.0, var));
}

double mean_node_strength(const Network& net) {
    if (net.size() == 0) return 0.0;
    double total = 0.0;
    for (double x : net.coupling.data()) total += x;
    return total / static_cast<double>(net.size());
}

double amplitude_ratio(std::span<const double> times, const Matrix& thetas, std::size_t a, double strength) {
    if (strength == 0.0) throw UndefinedError("amplitude ratio undefined: collective coupling strength B is 0");
    return oscillation_amplitude(times, thetas, a) / strength;
}

double amplitude_ratio(const Network& net, std::span<const double> times, const Matrix& thetas, std::size_t a,
                       std::size_t b) {
    check_index(a, net.size(), "amplitude node a");
    check_index(b, net.size(), "amplitude node b");
    return amplitude_ratio(times, thetas, a, mean_node_strength(net));
}

// ---------------------------------------------------------------------------

SimulationResult simulate(const Network& net, PhaseState init, const SimulationOptions& options,
                          const StepObserver& observe) {
    if (!(options.dt > 0.0) || !std::isfinite(options.dt)) throw ParameterError("dt must be > 0");
    if (!(options.t_max > 0.0) || !std::isfinite(options.t_max)) throw ParameterError("t_max must be > 0");
    if (options.record_every < 1) throw ParameterError("record_every must be >= 1");
    net.validate();
    if (init.theta.size() != net.size()) throw ParameterError("initial state size does not match network");

    auto pending = options.perturbations;
    std::stable_sort(pending.begin(), pending.end(),
                     [](const PerturbationSpec& x, const PerturbationSpec& y) { return x.at_time < y.at_time; });

    const auto steps = static_cast<std::size_t>(std::llround(options.t_max / options.dt));
    SimulationResult result{std::move(init), net, {}, steps};
    PhaseState& state = result.final_state;
    Network& current = result.final_network;
    const double t0 = state.t;

    std::vector<double> theta_dot(current.size());
    std::size_t next_perturbation = 0;
    // Perturbations due within a relative hair of a grid time fire on that step.
    const double slack = 1e-9 * options.dt;

    for (std::size_t k = 0;; ++k) {
        state.t = t0 + static_cast<double>(k) * options.dt;
        while (next_perturbation < pending.size() && pending[next_perturbation].at_time <= state.t - t0 + slack) {
            const auto& spec = pending[next_perturbation++];
            auto [net2, state2] = apply_perturbation(current, state, spec);
            current = std::move(net2);
            result.applied.push_back({spec, state.t, k});
        }
        if (observe && (k % options.record_every == 0 || k == steps)) {
            kuramoto_derivative(state.theta, current, theta_dot);
            observe(state, theta_dot, current);
        }
        if (k == steps) break;
        const double t_before = state.t;
        state = integrate_step(state, current, options.dt, options.method);
        state.t = t_before;
    }
    return result;
}

}  // namespace oscnet

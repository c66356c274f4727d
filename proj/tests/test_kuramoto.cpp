#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oscnet/errors.hpp"
#include "oscnet/kuramoto.hpp"

using namespace oscnet;
using std::numbers::pi;

namespace {

Network pair_network(double x, double w0 = 0.0, double w1 = 0.0) {
    Network net;
    net.omega = {w0, w1};
    net.coupling = Matrix(2, 2);
    net.coupling(0, 1) = net.coupling(1, 0) = x;
    return net;
}

Network random_graph(std::mt19937_64& gen, std::size_t n, double density) {
    std::bernoulli_distribution edge(density);
    std::uniform_real_distribution<double> w(0.1, 1.5);
    Network net;
    net.omega.assign(n, 0.0);
    net.coupling = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && edge(gen)) net.coupling(i, j) = w(gen);
    return net;
}

// Brute force over every ordered selection of distinct intermediate nodes.
double enumerate_paths(const Network& net, std::size_t a, std::size_t b, std::size_t max_len) {
    const std::size_t n = net.size();
    std::vector<std::size_t> others;
    for (std::size_t v = 0; v < n; ++v)
        if (v != a && v != b) others.push_back(v);
    double total = 0.0;
    const std::size_t m = others.size();
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        std::vector<std::size_t> mids;
        for (std::size_t k = 0; k < m; ++k)
            if (mask & (1u << k)) mids.push_back(others[k]);
        if (mids.size() + 1 > max_len) continue;
        std::sort(mids.begin(), mids.end());
        do {
            std::vector<std::size_t> path{a};
            path.insert(path.end(), mids.begin(), mids.end());
            path.push_back(b);
            double w = 1.0;
            for (std::size_t h = 0; h + 1 < path.size(); ++h) w *= net.coupling(path[h + 1], path[h]);
            total += w;
        } while (std::next_permutation(mids.begin(), mids.end()));
    }
    return total;
}

double max_abs_diff(const std::vector<double>& x, const std::vector<double>& y) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
    return d;
}

PhaseState run_to(const Network& net, PhaseState s, double dt, double t_end, Integrator method) {
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t k = 0; k < steps; ++k) s = integrate_step(s, net, dt, method);
    return s;
}

}  // namespace

TEST_CASE("derivative of a quadrature pair") {
    const auto d = kuramoto_derivative(PhaseState{{0.0, pi / 2}, 0.0}, pair_network(1.0));
    CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d[1] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("derivative with equal phases or no coupling is omega") {
    Network net;
    net.omega = {0.3, -1.2, 2.5};
    net.coupling = Matrix(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) net.coupling(i, j) = 0.7;
    CHECK(kuramoto_derivative(PhaseState{{1.1, 1.1, 1.1}, 0.0}, net) == net.omega);

    Network free = net;
    free.coupling = Matrix(3, 3);
    CHECK(kuramoto_derivative(PhaseState{{0.0, 2.0, -4.0}, 0.0}, free) == net.omega);
}

TEST_CASE("derivative matches the textbook sum") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-pi, pi);
    const auto net = random_graph(gen, 7, 0.5);
    PhaseState s;
    for (int i = 0; i < 7; ++i) s.theta.push_back(u(gen));
    const auto d = kuramoto_derivative(s, net);
    for (std::size_t i = 0; i < 7; ++i) {
        double ref = net.omega[i];
        for (std::size_t j = 0; j < 7; ++j) ref += net.coupling(i, j) * std::sin(s.theta[j] - s.theta[i]);
        CHECK(d[i] == doctest::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("rotational invariance") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 2 * pi);
    auto net = random_graph(gen, 6, 0.7);
    for (auto& w : net.omega) w = u(gen);
    PhaseState s;
    for (int i = 0; i < 6; ++i) s.theta.push_back(u(gen));
    PhaseState shifted = s;
    const double c = 1.234;
    for (auto& th : shifted.theta) th += c;
    const auto d0 = kuramoto_derivative(s, net);
    const auto d1 = kuramoto_derivative(shifted, net);
    CHECK(max_abs_diff(d0, d1) < 1e-12);
    const auto o0 = order_parameter(s);
    const auto o1 = order_parameter(shifted);
    CHECK(o1.r == doctest::Approx(o0.r).epsilon(1e-13));
    CHECK(std::abs(std::remainder(o1.psi - o0.psi - c, 2 * pi)) < 1e-12);
}

TEST_CASE("symmetric coupling conserves the frequency sum") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto net = random_graph(gen, 8, 0.6);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < i; ++j) net.coupling(i, j) = net.coupling(j, i);
    for (auto& w : net.omega) w = u(gen);
    PhaseState s;
    for (int i = 0; i < 8; ++i) s.theta.push_back(3 * u(gen));
    const double omega_sum = std::accumulate(net.omega.begin(), net.omega.end(), 0.0);
    for (int step = 0; step < 200; ++step) {
        const auto d = kuramoto_derivative(s, net);
        CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(omega_sum).epsilon(1e-12));
        s = integrate_step(s, net, 0.01);
    }
}

TEST_CASE("euler drift without coupling") {
    Network net;
    net.omega = {1.0, 2.0};
    net.coupling = Matrix(2, 2);
    const auto s = integrate_step(PhaseState{{0.0, 0.0}, 0.0}, net, 0.1, Integrator::euler);
    CHECK(s.theta[0] == 0.1);
    CHECK(s.theta[1] == 0.2);
    CHECK(s.t == 0.1);
}

TEST_CASE("antisymmetric pair keeps its mean phase") {
    const auto net = pair_network(0.8, 0.3, -0.3);
    PhaseState s{{0.9, -0.9}, 0.0};
    for (int k = 0; k < 1000; ++k) {
        s = integrate_step(s, net, 0.01);
        CHECK(std::abs(s.theta[0] + s.theta[1]) < 1e-12);
    }
}

TEST_CASE("integrator convergence orders") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto net = random_graph(gen, 5, 0.8);
    for (auto& w : net.omega) w = u(gen);
    PhaseState init;
    for (int i = 0; i < 5; ++i) init.theta.push_back(3 * u(gen));

    const auto ref = run_to(net, init, 1e-4, 2.0, Integrator::rk4).theta;
    auto err = [&](double dt, Integrator m) { return max_abs_diff(run_to(net, init, dt, 2.0, m).theta, ref); };

    const double rk_ratio = err(0.04, Integrator::rk4) / err(0.02, Integrator::rk4);
    const double eu_ratio = err(0.02, Integrator::euler) / err(0.01, Integrator::euler);
    MESSAGE("rk4 ratio " << rk_ratio << ", euler ratio " << eu_ratio);
    CHECK(rk_ratio > 12.0);
    CHECK(rk_ratio < 20.0);
    CHECK(eu_ratio > 1.7);
    CHECK(eu_ratio < 2.3);
}

TEST_CASE("integrate_step rejects bad input") {
    const auto net = pair_network(1.0);
    CHECK_THROWS_AS(integrate_step(PhaseState{{0, 0}, 0}, net, 0.0), ParameterError);
    CHECK_THROWS_AS(integrate_step(PhaseState{{0}, 0}, net, 0.1), ParameterError);
    Network wild = pair_network(0.0, 1e308, 0.0);
    CHECK_THROWS_AS(integrate_step(PhaseState{{1e308, 0}, 0}, wild, 10.0, Integrator::euler), NumericError);
}

TEST_CASE("order parameter closed forms") {
    const auto same = order_parameter(std::vector<double>{2.0, 2.0, 2.0, 2.0});
    CHECK(same.r == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(same.psi == doctest::Approx(2.0).epsilon(1e-14));

    const auto wrapped = order_parameter(std::vector<double>{-1.0, -1.0});
    CHECK(wrapped.psi == doctest::Approx(2 * pi - 1.0).epsilon(1e-14));

    const auto quad = order_parameter(std::vector<double>{0.0, pi / 2, pi, 3 * pi / 2});
    CHECK(quad.r <= 1e-12);

    const auto two = order_parameter(std::vector<double>{0.0, pi / 2});
    CHECK(std::abs(two.r - std::cos(pi / 4)) <= 1e-12);
    CHECK(std::abs(two.psi - pi / 4) <= 1e-12);
}

TEST_CASE("effective coupling") {
    Network path;
    path.omega = {0, 0, 0};
    path.coupling = Matrix(3, 3);
    path.coupling(0, 1) = path.coupling(1, 0) = 1.0;
    path.coupling(1, 2) = path.coupling(2, 1) = 1.0;
    const std::vector<double> c{0.5, 0.25, 0.125};
    CHECK(effective_coupling(path, 1, c) == 0.625);

    const std::vector<double> ones{1.0, 1.0, 1.0};
    Network weighted = path;
    weighted.coupling(1, 0) = 0.3;
    weighted.coupling(1, 2) = 0.9;
    CHECK(effective_coupling(weighted, 1, ones) == doctest::Approx(1.2));

    Network lonely = path;
    lonely.coupling(0, 1) = 0.0;
    CHECK(effective_coupling(lonely, 0, c) == 0.0);

    CHECK_THROWS_AS(effective_coupling(path, 3, c), IndexError);
    CHECK_THROWS(effective_coupling(path, 0, std::vector<double>{1.0}));
}

TEST_CASE("effective coupling default profile") {
    Network net = pair_network(2.0);
    const PhaseState s{{0.0, pi / 6}, 0.0};
    // node 0 seen from node 0: X_01 * sin(theta_1 - theta_0)
    CHECK(effective_coupling(net, s, 0, 0) == doctest::Approx(2.0 * 0.5));
}

TEST_CASE("path sums on small graphs") {
    Network edge = pair_network(0.5);
    CHECK(path_sum_coupling(edge, 0, 1, 1).value == 0.5);

    Network tri;
    tri.omega = {0, 0, 0};
    tri.coupling = Matrix(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) tri.coupling(i, j) = 1.0;
    const auto ps = path_sum_coupling(tri, 0, 1, 2);
    CHECK(ps.value == 2.0);
    CHECK(ps.paths == 2);

    Network apart;
    apart.omega = {0, 0, 0};
    apart.coupling = Matrix(3, 3);
    apart.coupling(0, 1) = apart.coupling(1, 0) = 1.0;
    CHECK(path_sum_coupling(apart, 0, 2, 4).value == 0.0);

    const auto self = path_sum_coupling(tri, 1, 1, 3);
    CHECK(self.value == 0.0);
    CHECK(self.self_pair);

    CHECK_THROWS_AS(path_sum_coupling(tri, 0, 1, 0), ParameterError);
    CHECK_THROWS_AS(path_sum_coupling(tri, 0, 5, 2), IndexError);
}

TEST_CASE("path sums follow edge direction and the factor hook") {
    Network chain;
    chain.omega = {0, 0, 0};
    chain.coupling = Matrix(3, 3);
    chain.coupling(1, 0) = 0.5;   // 0 drives 1
    chain.coupling(2, 1) = 0.25;  // 1 drives 2
    CHECK(path_sum_coupling(chain, 0, 2, 4).value == 0.125);
    CHECK(path_sum_coupling(chain, 2, 0, 4).value == 0.0);

    const auto halved = path_sum_coupling(chain, 0, 2, 4, [](std::span<const std::size_t> p) {
        return p.size() == 3 ? 0.5 : 1.0;
    });
    CHECK(halved.value == 0.0625);
}

TEST_CASE("path sum matches exhaustive enumeration") {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + trial % 5;
        const auto net = random_graph(gen, n, 0.55);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                if (a == b) continue;
                for (std::size_t len = 1; len <= n; ++len) {
                    const double expected = enumerate_paths(net, a, b, len);
                    CHECK(std::abs(path_sum_coupling(net, a, b, len).value - expected) <= 1e-12);
                }
            }
    }
}

TEST_CASE("amplitude ratio") {
    // single free node over one full period
    Network one;
    one.omega = {1.0};
    one.coupling = Matrix(1, 1);
    std::vector<double> times;
    Matrix thetas;
    const int steps = 4000;
    for (int k = 0; k <= steps; ++k) {
        const double t = 2 * pi * k / steps;
        times.push_back(t);
        const double th[] = {t};
        thetas.append_row(th);
    }
    CHECK(oscillation_amplitude(times, thetas, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
    CHECK(amplitude_ratio(times, thetas, 0, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
    CHECK_THROWS_AS(amplitude_ratio(one, times, thetas, 0, 0), UndefinedError);

    // frozen phases have no amplitude
    Matrix frozen;
    for (int k = 0; k < 10; ++k) {
        const double th[] = {0.4, 0.4};
        frozen.append_row(th);
    }
    std::vector<double> ft(10);
    std::iota(ft.begin(), ft.end(), 0.0);
    const auto net = pair_network(1.0);
    CHECK(std::abs(amplitude_ratio(net, ft, frozen, 0, 1)) < 1e-15);

    // doubling X halves the ratio
    Matrix moving;
    for (int k = 0; k < 10; ++k) {
        const double th[] = {0.3 * k, -0.2 * k};
        moving.append_row(th);
    }
    const double base = amplitude_ratio(net, ft, moving, 0, 1);
    const double doubled = amplitude_ratio(pair_network(2.0), ft, moving, 0, 1);
    CHECK(doubled == doctest::Approx(base / 2));
    CHECK(mean_node_strength(net) == 1.0);
}

TEST_CASE("simulate records and perturbs") {
    Network net = pair_network(0.0, 1.0, 1.0);
    SimulationOptions opt;
    opt.dt = 0.1;
    opt.t_max = 1.0;
    opt.method = Integrator::euler;
    opt.perturbations = {{0.45, FrequencyShift{1, 1.0}}};
    std::vector<double> times;
    std::vector<double> omega1;
    const auto res = simulate(net, PhaseState{{0, 0}, 0}, opt,
                              [&](const PhaseState& s, std::span<const double>, const Network& cur) {
                                  times.push_back(s.t);
                                  omega1.push_back(cur.omega[1]);
                              });
    CHECK(res.steps == 10);
    REQUIRE(times.size() == 11);
    CHECK(times.back() == doctest::Approx(1.0));
    REQUIRE(res.applied.size() == 1);
    // fires before the first step whose time reaches at_time
    CHECK(res.applied[0].applied_at == doctest::Approx(0.5));
    CHECK(res.applied[0].step == 5);
    CHECK(omega1[4] == 1.0);
    CHECK(omega1[5] == 2.0);
    CHECK(res.final_state.theta[0] == doctest::Approx(1.0));
    CHECK(res.final_state.theta[1] == doctest::Approx(0.5 + 1.0));
}

TEST_CASE("simulate is deterministic") {
    std::mt19937_64 gen(5);
    auto net = random_graph(gen, 10, 0.5);
    PhaseState s;
    for (int i = 0; i < 10; ++i) s.theta.push_back(0.6 * i);
    SimulationOptions opt;
    opt.t_max = 5.0;
    const auto a = simulate(net, s, opt);
    const auto b = simulate(net, s, opt);
    CHECK(a.final_state == b.final_state);
}

TEST_CASE("uncoupled ensemble stays incoherent") {
    const std::size_t n = 200;
    std::mt19937_64 gen(8);
    std::normal_distribution<double> w(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 2 * pi);
    Network net;
    net.coupling = Matrix(n, n);
    PhaseState s;
    for (std::size_t i = 0; i < n; ++i) {
        net.omega.push_back(w(gen));
        s.theta.push_back(u(gen));
    }
    SimulationOptions opt;
    opt.dt = 0.05;
    opt.t_max = 200.0;
    double sum = 0.0;
    std::size_t count = 0;
    simulate(net, s, opt, [&](const PhaseState& st, std::span<const double>, const Network&) {
        sum += order_parameter(st).r;
        ++count;
    });
    const double mean_r = sum / static_cast<double>(count);
    const double baseline = std::sqrt(pi / (4.0 * n));
    CHECK(mean_r <= baseline + 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("strong coupling locks a complete graph") {
    const std::size_t n = 40;
    std::mt19937_64 gen(12);
    std::normal_distribution<double> w(0.0, 0.5);
    std::uniform_real_distribution<double> u(0.0, 2 * pi);
    Network net;
    net.coupling = Matrix(n, n);
    PhaseState s;
    for (std::size_t i = 0; i < n; ++i) {
        net.omega.push_back(w(gen));
        s.theta.push_back(u(gen));
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) net.coupling(i, j) = 8.0 / n;
    }
    SimulationOptions opt;
    opt.dt = 0.01;
    opt.t_max = 30.0;
    double min_late_r = 1.0;
    simulate(net, s, opt, [&](const PhaseState& st, std::span<const double>, const Network&) {
        if (st.t >= 20.0) min_late_r = std::min(min_late_r, order_parameter(st).r);
    });
    CHECK(min_late_r > 0.95);
}

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "oscnet/action.hpp"
#include "oscnet/experiment.hpp"
#include "oscnet/kuramoto.hpp"
#include "oscnet/probe.hpp"
#include "oscnet/pulse.hpp"
#include "oscnet/rng.hpp"

using namespace oscnet;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

PhaseState random_phases(std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed, "initial");
    PhaseState s;
    for (std::size_t i = 0; i < n; ++i) s.theta.push_back(rng.uniform(0.0, 2.0 * pi));
    return s;
}

Network mean_field(std::size_t n, double k, std::uint64_t seed) {
    TopologySpec spec;
    spec.n = n;
    spec.coupling = k;
    spec.seed = seed;
    return build_topology(spec);
}

double tail_mean(const std::vector<double>& x, double fraction) {
    const std::size_t start = static_cast<std::size_t>(std::floor(x.size() * (1.0 - fraction)));
    double s = 0.0;
    for (std::size_t k = start; k < x.size(); ++k) s += x[k];
    return s / static_cast<double>(x.size() - start);
}

// -------------------------------------------------------------------------

Verdict locking() {
    Verdict v;
    const auto start = Clock::now();
    SimulationOptions opt;
    opt.dt = 0.01;
    opt.t_max = 50.0;
    const auto strong = record_trajectory(mean_field(100, 4.0, 1), random_phases(100, 1), opt);
    const auto weak = record_trajectory(mean_field(100, 0.2, 1), random_phases(100, 1), opt);
    const double elapsed = seconds_since(start);
    const double r_strong = tail_mean(strong.r_series, 0.2);
    const double r_weak = tail_mean(weak.r_series, 0.2);
    v.require(r_strong >= 0.9, "K=4 tail r >= 0.9");
    v.require(r_weak <= 0.3, "K=0.2 tail r <= 0.3");
    v.require(elapsed < 10.0, "runtime < 10 s");
    v.note("r(K=4) " + fmt("%.4f", r_strong) + ", r(K=0.2) " + fmt("%.4f", r_weak) + ", " + fmt("%.2f s", elapsed));
    return v;
}

Verdict pulse_pair() {
    Verdict v;
    const auto start = Clock::now();
    Network net;
    net.omega = {2.0 * pi, 2.0 * pi};
    net.coupling = Matrix(2, 2);
    net.coupling(0, 1) = net.coupling(1, 0) = 0.2;
    PulseParams params;
    params.alpha = 0.5;
    params.p_send = 1.0;
    int synced = 0;
    int monotone = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        CounterRng rng(seed, "initial");
        CircleState init;
        init.phi = {rng.uniform(), rng.uniform()};
        init.period = {1.0, 1.0};
        const auto run = run_pulse_sim(net, params, init, 100.0, seed);
        if (!run.sync_time) continue;
        ++synced;
        // replay to each cascade and measure the gap right after it
        double previous = circle_gap(init.phi[0], init.phi[1]);
        bool ok = true;
        for (double t : run.cascade_times) {
            const auto part = run_pulse_sim(net, params, init, t, seed);
            const double gap = circle_gap(part.final_state.phi[0], part.final_state.phi[1]);
            if (gap > previous) ok = false;
            previous = gap;
            if (t >= *run.sync_time) break;
        }
        monotone += ok;
    }
    const double elapsed = seconds_since(start);
    v.require(synced >= 99, "synced in >= 99 of 100 seeds");
    v.require(monotone == synced, "gap monotone in every synced run");
    v.require(elapsed < 5.0, "runtime < 5 s");
    v.note(std::to_string(synced) + "/100 synced, " + std::to_string(monotone) + " monotone, " + fmt("%.2f s", elapsed));
    return v;
}

Verdict order_parameter_exactness() {
    Verdict v;
    // direct phasor sum as the oracle
    auto oracle = [](const std::vector<double>& th) {
        double c = 0.0, s = 0.0;
        for (double x : th) {
            c += std::cos(x);
            s += std::sin(x);
        }
        return std::hypot(c, s) / static_cast<double>(th.size());
    };
    const std::vector<double> same(7, 1.234);
    const std::vector<double> quad{0.0, pi / 2, pi, 3 * pi / 2};
    const std::vector<double> half{0.0, pi / 2};
    v.require(std::abs(order_parameter(same).r - 1.0) <= 1e-15, "identical phases give r = 1");
    v.require(std::abs(order_parameter(quad).r) <= 1e-12, "quadrature gives r = 0");
    v.require(std::abs(order_parameter(half).r - std::cos(pi / 4)) <= 1e-12, "(0, pi/2) gives cos(pi/4)");
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> th(1 + k % 9);
        for (auto& x : th) x = u(gen);
        worst = std::max(worst, std::abs(order_parameter(th).r - oracle(th)));
    }
    v.require(worst <= 1e-12, "random phases match the phasor sum");
    v.note("max deviation " + fmt("%.2e", worst));
    return v;
}

// Brute force over every ordered choice of distinct intermediate nodes.
double enumerate_paths(const Network& net, std::size_t a, std::size_t b, std::size_t max_len) {
    std::vector<std::size_t> others;
    for (std::size_t x = 0; x < net.size(); ++x)
        if (x != a && x != b) others.push_back(x);
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << others.size()); ++mask) {
        std::vector<std::size_t> mids;
        for (std::size_t k = 0; k < others.size(); ++k)
            if (mask & (1u << k)) mids.push_back(others[k]);
        if (mids.size() + 1 > max_len) continue;
        do {
            double w = net.coupling(mids.empty() ? b : mids.front(), a);
            for (std::size_t h = 0; h + 1 < mids.size(); ++h) w *= net.coupling(mids[h + 1], mids[h]);
            if (!mids.empty()) w *= net.coupling(b, mids.back());
            total += w;
        } while (std::next_permutation(mids.begin(), mids.end()));
    }
    return total;
}

Verdict path_sums() {
    Verdict v;
    const auto start = Clock::now();
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> w(0.05, 2.0);
    std::bernoulli_distribution edge(0.6);
    double worst = 0.0;
    std::size_t compared = 0;
    for (int g = 0; g < 200; ++g) {
        const std::size_t n = 2 + g % 5;
        Network net;
        net.omega.assign(n, 0.0);
        net.coupling = Matrix(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && edge(gen)) net.coupling(i, j) = w(gen);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) {
                if (a == b) continue;
                for (std::size_t len = 1; len < n; ++len) {
                    const double got = path_sum_coupling(net, a, b, len).value;
                    worst = std::max(worst, std::abs(got - enumerate_paths(net, a, b, len)));
                    ++compared;
                }
            }
    }
    const double elapsed = seconds_since(start);
    v.require(worst <= 1e-12, "path sums equal enumeration to 1e-12");
    v.require(elapsed < 5.0, "runtime < 5 s");
    v.note(std::to_string(compared) + " sums, max deviation " + fmt("%.2e", worst) + ", " + fmt("%.2f s", elapsed));
    return v;
}

Verdict action_calculus() {
    Verdict v;
    auto L = [](double t) { return std::sin(2.0 * t) + 0.3 * t * t; };
    auto round_trip = [&](std::size_t intervals) {
        std::vector<double> t, l;
        for (std::size_t k = 0; k <= intervals; ++k) {
            t.push_back(3.0 * static_cast<double>(k) / intervals);
            l.push_back(L(t.back()));
        }
        const auto back = action_derivative(accumulate_action(l, t), t);
        double e = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k) e = std::max(e, std::abs(back[k] - l[k]));
        return e;
    };
    const double ratio = round_trip(150) / round_trip(300);
    v.require(ratio >= 3.5 && ratio <= 4.5, "dt-halving ratio in [3.5, 4.5]");

    // symmetric random network
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Network net;
    net.coupling = Matrix(12, 12);
    for (std::size_t i = 0; i < 12; ++i) {
        net.omega.push_back(u(gen) * 2.0 - 1.0);
        for (std::size_t j = 0; j < i; ++j)
            if (u(gen) < 0.5) net.coupling(i, j) = net.coupling(j, i) = u(gen);
    }
    SimulationOptions opt;
    opt.t_max = 30.0;
    const auto rec = record_trajectory(net, random_phases(12, 5), opt);
    double worst = 0.0;
    for (std::size_t k = 0; k < rec.steps(); ++k) {
        double s = 0.0;
        for (double x : rec.freq_shift_series.row(k)) s += x;
        worst = std::max(worst, std::abs(s));
    }
    v.require(worst <= 1e-9, "sum of frequency shifts is 0 at every step");
    v.note("ratio " + fmt("%.3f", ratio) + ", max |sum dw| " + fmt("%.2e", worst));
    return v;
}

Verdict regime_pipeline() {
    Verdict v;
    const std::string config = R"({
      "schema_version": 1,
      "model": "kuramoto",
      "topology": {"kind": "complete", "n": 50, "coupling": 4.0, "mean_field": true},
      "omega": {"distribution": "normal", "mean": 0.0, "sd": 1.0},
      "dynamics": {"dt": 0.01, "t_max": 50.0},
      "seeds": [1]
    })";
    const auto check = check_config_text(config);
    if (!check.config) {
        v.require(false, "config validates");
        return v;
    }
    const auto out = run_kuramoto_seed(*check.config, 1);
    const auto& ds = out.record.action_derivative_series;
    const RegimeReport& rep = *out.regime;
    v.require(rep.regime == Regime::underdamped || rep.regime == Regime::steady_state,
              "regime is underdamped or steady-state");
    v.require(rep.settle_time.has_value(), "a critical point (settle time) is detected");
    const std::size_t tail = ds.size() * 4 / 5;
    const double last = ds.back();
    double spread = 0.0;
    for (std::size_t k = tail; k < ds.size(); ++k) spread = std::max(spread, std::abs(ds[k] - last));
    const double rel = spread / std::abs(last);
    v.require(rel <= 0.02, "dS/dt constant within 2% over the final 20%");
    v.note("regime " + regime_name(rep.regime) + ", settle " + (rep.settle_time ? fmt("%.2f", *rep.settle_time) : "none") +
           ", crossings " + std::to_string(rep.zero_crossings) + ", tail spread " + fmt("%.1e", rel));
    return v;
}

Verdict qoppa_regression() {
    Verdict v;
    std::vector<double> t, ds, dw;
    std::mt19937_64 gen(7);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int k = 0; k <= 2000; ++k) {
        t.push_back(0.01 * k);
        ds.push_back(1.0 + 0.5 * std::exp(-0.3 * t.back()) * std::cos(4.0 * t.back()));
        dw.push_back(2.0 * ds.back() * (1.0 + 0.01 * noise(gen)));
    }
    const auto fit = fit_qoppa(dw, ds, t, t.front(), t.back());
    v.require(fit.qoppa >= 1.9 && fit.qoppa <= 2.1, "qoppa in [1.9, 2.1]");
    v.require(fit.r_squared > 0.99, "r^2 > 0.99");

    // the identity holds up to the rounding of one division and one product
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    const double target = -1.0 / (2.0 * pi);
    std::size_t exact = 0;
    double worst_ulps = 0.0;
    const int trials = 10000;
    for (int k = 0; k < trials; ++k) {
        const double x = u(gen);
        const double prod = wavelength_shift(x, 1.0) * x;
        exact += prod == target;
        worst_ulps = std::max(worst_ulps, std::abs(prod - target) / (std::nextafter(-target, 1.0) + target));
    }
    v.require(worst_ulps <= 1.0, "wavelength_shift(x) * x = -1/(2 pi) to the last bit");
    v.note("qoppa " + fmt("%.4f", fit.qoppa) + ", r^2 " + fmt("%.5f", fit.r_squared) + ", identity bit-exact in " +
           std::to_string(exact) + "/" + std::to_string(trials) + ", worst " + fmt("%.0f ulp", worst_ulps));
    return v;
}

Verdict attenuation() {
    Verdict v;
    double worst = 0.0;
    for (int gi = 0; gi <= 50; ++gi)
        for (int ti = 0; ti <= 100; ++ti) {
            const double gamma = 0.1 * gi;
            const double t = 1.0 * ti;
            worst = std::max(worst, std::abs(std::log(intensity_ratio(gamma, t)) - attenuation_action(gamma, t)));
        }
    v.require(worst <= 1e-12, "ln(intensity_ratio) = attenuation_action to 1e-12");
    v.note("51 x 101 grid, max deviation " + fmt("%.2e", worst));
    return v;
}

Verdict probe_back_action() {
    Verdict v;
    const auto net = mean_field(50, 4.0, 9);
    SimulationOptions lock;
    lock.t_max = 30.0;
    PhaseState locked = simulate(net, random_phases(50, 9), lock).final_state;
    locked.t = 0.0;
    double omega_mean = 0.0;
    for (double w : net.omega) omega_mean += w / 50.0;

    SimulationOptions opt;
    opt.t_max = 20.0;
    RecordOptions ro;
    ro.observed_nodes = 50;
    const auto base = record_trajectory(net, locked, opt);
    auto disturbance = [&](double eps, ProbeMode mode, bool* identical) {
        ProbeConfig pc;
        pc.epsilon = eps;
        pc.omega_probe = omega_mean + 0.5;
        pc.mode = mode;
        const auto rec = record_trajectory(attach_probe(net, pc), attach_probe_state(locked, pc), opt, ro);
        double d = 0.0;
        bool same = rec.r_series == base.r_series;
        for (std::size_t k = 0; k < rec.steps(); ++k) {
            d = std::max(d, std::abs(rec.r_series[k] - base.r_series[k]));
            for (std::size_t i = 0; i < 50; ++i) same = same && rec.thetas(k, i) == base.thetas(k, i);
        }
        if (identical) *identical = same;
        return d;
    };
    const double small = disturbance(1e-3, ProbeMode::back_action, nullptr);
    const double large = disturbance(1e-2, ProbeMode::back_action, nullptr);
    const double ratio = large / small;
    bool ideal_same = false;
    disturbance(1e-2, ProbeMode::ideal, &ideal_same);
    v.require(ratio >= 5.0 && ratio <= 20.0, "disturbance ratio in [5, 20]");
    v.require(ideal_same, "ideal probe leaves the network bitwise unchanged");
    v.note("max|dr| " + fmt("%.2e", small) + " -> " + fmt("%.2e", large) + ", ratio " + fmt("%.2f", ratio));
    return v;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out[fs::relative(e.path(), root).string()] = ss.str();
    }
    return out;
}

Verdict determinism_and_suppression() {
    Verdict v;
    const std::string kuramoto = R"({
      "schema_version": 1, "model": "kuramoto",
      "topology": {"kind": "erdos-renyi", "n": 20, "p": 0.3, "coupling": 1.0},
      "omega": {"distribution": "normal", "mean": 0.0, "sd": 0.5},
      "dynamics": {"dt": 0.01, "t_max": 10.0},
      "perturbations": [{"at_time": 5.0, "kind": "edge-remove", "i": 0, "j": 1}],
      "probe": {"epsilon": 0.01, "omega_probe": 0.2},
      "analysis": {"local_order": true},
      "seeds": [1, 2, 3]
    })";
    const std::string pulse = R"({
      "schema_version": 1, "model": "pulse",
      "topology": {"kind": "complete", "n": 6, "coupling": 0.05, "mean_field": false},
      "omega": {"distribution": "uniform", "lo": 5.5, "hi": 6.5},
      "dynamics": {"dt": 0.01, "t_max": 60.0},
      "pulse": {"p_send": 0.7, "alpha": 0.5},
      "seeds": [1, 2, 3]
    })";
    const auto scratch = fs::temp_directory_path() / "oscnet_acceptance";
    fs::remove_all(scratch);
    bool identical = true;
    std::size_t files = 0;
    for (const auto& [name, text] : {std::pair{"kuramoto", kuramoto}, std::pair{"pulse", pulse}}) {
        auto check = check_config_text(text);
        if (!check.config) {
            v.require(false, std::string(name) + " config validates");
            return v;
        }
        auto cfg = *check.config;
        cfg.output_root = scratch / name / "a";
        cfg.workers = 1;
        run_experiment(cfg);
        cfg.output_root = scratch / name / "b";
        cfg.workers = 3;
        run_experiment(cfg);
        const auto a = read_tree(scratch / name / "a");
        identical = identical && !a.empty() && a == read_tree(scratch / name / "b");
        files += a.size();
    }
    fs::remove_all(scratch);
    v.require(identical, "reruns byte-identical");

    Network net;
    net.coupling = Matrix(10, 10);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j)
            if (i != j) net.coupling(i, j) = 0.02;
    CounterRng rng(3, "initial");
    CircleState init;
    for (int i = 0; i < 10; ++i) {
        init.phi.push_back(rng.uniform());
        init.period.push_back(1.0 + 0.1 * rng.uniform());
        net.omega.push_back(2.0 * pi / init.period.back());
    }
    PulseParams params;
    params.p_send = 0.7;
    const auto run = run_pulse_sim(net, params, init, 1500.0, 3);
    std::size_t suppressed = 0;
    for (const auto& e : run.events) suppressed += e.suppressed;
    const double n = static_cast<double>(run.events.size());
    const double frac = suppressed / n;
    const double z = (frac - 0.3) / std::sqrt(0.3 * 0.7 / n);
    v.require(n >= 1e4, ">= 1e4 crossings");
    v.require(std::abs(z) <= 4.0, "suppressed fraction within 4 SE of 0.3");
    v.note(std::to_string(files) + " files compared, " + std::to_string(run.events.size()) + " crossings, fraction " +
           fmt("%.4f", frac) + ", z " + fmt("%.2f", z));
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"kuramoto locking", locking},
        {"two-oscillator pulse sync", pulse_pair},
        {"order-parameter exactness", order_parameter_exactness},
        {"path-sum oracle", path_sums},
        {"action calculus", action_calculus},
        {"dS/dt regime pipeline", regime_pipeline},
        {"qoppa regression", qoppa_regression},
        {"attenuation identity", attenuation},
        {"probe back-action", probe_back_action},
        {"determinism and suppression statistics", determinism_and_suppression},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Verdict v;
        try {
            v = criteria[k].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("threw: ") + e.what();
        }
        failed += !v.pass;
        std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

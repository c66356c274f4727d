#include "oscnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "oscnet/errors.hpp"
#include "oscnet/rng.hpp"

namespace oscnet {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

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

// ---------------------------------------------------------------------------
// Config reading. Every accessor records a violation instead of throwing so
// that one pass reports all problems.

class Reader {
public:
    explicit Reader(std::vector<std::string>& violations) : v_(violations) {}

    void add(std::string message) { v_.push_back(std::move(message)); }

    bool object(const json& j, const std::string& path) {
        if (j.is_object()) return true;
        add(path + " must be an object");
        return false;
    }

    void known(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        for (const auto& [key, value] : obj.items()) {
            (void)value;
            if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
                add(join(path, key) + " is not a recognized field");
            }
        }
    }

    std::optional<double> number(const json& obj, const std::string& path, const char* key) {
        if (!obj.contains(key)) return std::nullopt;
        const auto& x = obj.at(key);
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
            add(join(path, key) + " must be a finite number");
            return std::nullopt;
        }
        return x.get<double>();
    }

    std::optional<std::uint64_t> count(const json& obj, const std::string& path, const char* key) {
        if (!obj.contains(key)) return std::nullopt;
        const auto& x = obj.at(key);
        if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0)) {
            add(join(path, key) + " must be a nonnegative integer");
            return std::nullopt;
        }
        return x.get<std::uint64_t>();
    }

    std::optional<bool> boolean(const json& obj, const std::string& path, const char* key) {
        if (!obj.contains(key)) return std::nullopt;
        if (!obj.at(key).is_boolean()) {
            add(join(path, key) + " must be true or false");
            return std::nullopt;
        }
        return obj.at(key).get<bool>();
    }

    std::optional<std::string> text(const json& obj, const std::string& path, const char* key) {
        if (!obj.contains(key)) return std::nullopt;
        if (!obj.at(key).is_string()) {
            add(join(path, key) + " must be a string");
            return std::nullopt;
        }
        return obj.at(key).get<std::string>();
    }

    std::optional<std::vector<double>> numbers(const json& obj, const std::string& path, const char* key) {
        if (!obj.contains(key)) return std::nullopt;
        const auto& x = obj.at(key);
        std::vector<double> out;
        bool ok = x.is_array();
        if (ok) {
            for (const auto& e : x) {
                if (!e.is_number() || !std::isfinite(e.get<double>())) {
                    ok = false;
                    break;
                }
                out.push_back(e.get<double>());
            }
        }
        if (!ok) {
            add(join(path, key) + " must be an array of finite numbers");
            return std::nullopt;
        }
        return out;
    }

    std::optional<Matrix> matrix(const json& obj, const std::string& path, const char* key) {
        if (!obj.contains(key)) return std::nullopt;
        const auto& x = obj.at(key);
        Matrix m;
        bool ok = x.is_array() && !x.empty();
        if (ok) {
            for (const auto& row : x) {
                std::vector<double> values;
                if (!row.is_array() || row.empty()) {
                    ok = false;
                    break;
                }
                for (const auto& e : row) {
                    if (!e.is_number() || !std::isfinite(e.get<double>())) {
                        ok = false;
                        break;
                    }
                    values.push_back(e.get<double>());
                }
                if (!ok || (m.rows() > 0 && values.size() != m.cols())) {
                    ok = false;
                    break;
                }
                m.append_row(values);
            }
        }
        if (!ok) {
            add(join(path, key) + " must be a rectangular array of arrays of finite numbers");
            return std::nullopt;
        }
        return m;
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

private:
    std::vector<std::string>& v_;
};

std::optional<PerturbationSpec> read_perturbation(Reader& rd, const json& p, const std::string& path,
                                                  std::optional<std::size_t> n) {
    if (!rd.object(p, path)) return std::nullopt;
    const auto kind = rd.text(p, path, "kind");
    const auto at = rd.number(p, path, "at_time");
    if (!at) rd.add(path + ".at_time is required");
    else if (*at < 0.0) rd.add(path + ".at_time must be >= 0");
    if (!kind) {
        rd.add(path + ".kind is required (frequency-shift, edge-rescale, edge-remove or node-silence)");
        return std::nullopt;
    }
    auto node_field = [&](const char* key) -> std::size_t {
        const auto v = rd.count(p, path, key);
        if (!v) {
            if (!p.contains(key)) rd.add(Reader::join(path, key) + " is required");
            return 0;
        }
        if (n && *v >= *n) {
            rd.add(Reader::join(path, key) + " must be < n = " + std::to_string(*n));
        }
        return static_cast<std::size_t>(*v);
    };

    PerturbationSpec spec;
    spec.at_time = at.value_or(0.0);
    if (*kind == "frequency-shift") {
        rd.known(p, path, {"kind", "at_time", "node", "delta_omega"});
        FrequencyShift f;
        f.node = node_field("node");
        const auto d = rd.number(p, path, "delta_omega");
        if (!d) rd.add(path + ".delta_omega is required");
        f.delta_omega = d.value_or(0.0);
        spec.kind = f;
    } else if (*kind == "edge-rescale") {
        rd.known(p, path, {"kind", "at_time", "i", "j", "factor"});
        EdgeRescale e;
        e.i = node_field("i");
        e.j = node_field("j");
        const auto f = rd.number(p, path, "factor");
        if (!f) rd.add(path + ".factor is required");
        else if (*f < 0.0) rd.add(path + ".factor must be >= 0");
        e.factor = f.value_or(1.0);
        spec.kind = e;
    } else if (*kind == "edge-remove") {
        rd.known(p, path, {"kind", "at_time", "i", "j"});
        EdgeRemove e;
        e.i = node_field("i");
        e.j = node_field("j");
        spec.kind = e;
    } else if (*kind == "node-silence") {
        rd.known(p, path, {"kind", "at_time", "node"});
        NodeSilence s;
        s.node = node_field("node");
        spec.kind = s;
    } else {
        rd.add(path + ".kind must be one of frequency-shift, edge-rescale, edge-remove, node-silence");
        return std::nullopt;
    }
    return spec;
}

void read_omega(Reader& rd, const json& root, TopologySpec& topo) {
    if (!root.contains("omega")) return;
    const auto& o = root.at("omega");
    if (!rd.object(o, "omega")) return;
    rd.known(o, "omega", {"distribution", "mean", "sd", "lo", "hi", "value"});
    const auto dist = rd.text(o, "omega", "distribution").value_or("normal");
    if (dist == "normal") {
        NormalOmega w;
        w.mean = rd.number(o, "omega", "mean").value_or(0.0);
        w.sd = rd.number(o, "omega", "sd").value_or(1.0);
        if (w.sd < 0.0) rd.add("omega.sd must be >= 0");
        topo.omega = w;
    } else if (dist == "uniform") {
        UniformOmega w;
        w.lo = rd.number(o, "omega", "lo").value_or(-1.0);
        w.hi = rd.number(o, "omega", "hi").value_or(1.0);
        if (!(w.hi >= w.lo)) rd.add("omega.hi must be >= omega.lo");
        topo.omega = w;
    } else if (dist == "constant") {
        ConstantOmega w;
        w.value = rd.number(o, "omega", "value").value_or(0.0);
        topo.omega = w;
    } else {
        rd.add("omega.distribution must be one of normal, uniform, constant");
    }
}

void read_attenuation(Reader& rd, const json& a, NetworkSource& src) {
    const std::string path = "topology.attenuation";
    if (!rd.object(a, path)) return;
    rd.known(a, path, {"beta0", "gamma", "m", "metric", "cutoff", "dim", "positions"});
    AttenuationConfig cfg;
    cfg.params.beta0 = rd.number(a, path, "beta0").value_or(1.0);
    cfg.params.gamma = rd.number(a, path, "gamma").value_or(1.0);
    cfg.params.m = rd.number(a, path, "m").value_or(1.0);
    if (!(cfg.params.beta0 > 0.0)) rd.add(path + ".beta0 must be > 0");
    if (!(cfg.params.gamma >= 0.0)) rd.add(path + ".gamma must be >= 0");
    if (!(cfg.params.m > 0.0)) rd.add(path + ".m must be > 0");
    const auto metric = rd.text(a, path, "metric").value_or("euclidean");
    if (metric == "euclidean") {
        cfg.metric = DistanceMetric::euclidean;
    } else if (metric == "graph-hops") {
        cfg.metric = DistanceMetric::graph_hops;
    } else {
        rd.add(path + ".metric must be euclidean or graph-hops");
    }
    cfg.cutoff = rd.number(a, path, "cutoff");
    if (cfg.cutoff && *cfg.cutoff < 0.0) rd.add(path + ".cutoff must be >= 0");
    const auto dim = rd.count(a, path, "dim");
    if (dim) {
        if (*dim < 1) rd.add(path + ".dim must be >= 1");
        cfg.dim = static_cast<std::size_t>(*dim);
    }
    cfg.positions = rd.matrix(a, path, "positions");
    src.attenuation = std::move(cfg);
}

// Returns the node count when it is known without running anything.
std::optional<std::size_t> read_topology(Reader& rd, const json& root, NetworkSource& src,
                                         const fs::path& base_dir) {
    if (!root.contains("topology")) {
        rd.add("topology is required");
        return std::nullopt;
    }
    const auto& t = root.at("topology");
    if (!rd.object(t, "topology")) return std::nullopt;
    rd.known(t, "topology", {"kind", "n", "k", "p", "coupling", "mean_field", "seed", "adjacency", "path", "attenuation"});
    const auto kind = rd.text(t, "topology", "kind").value_or("complete");
    auto& topo = src.topology;
    std::optional<std::size_t> n;

    if (kind == "file") {
        const auto path = rd.text(t, "topology", "path");
        if (!path) {
            rd.add("topology.path is required when topology.kind is file");
            return std::nullopt;
        }
        src.path = fs::path(*path).is_absolute() ? fs::path(*path) : base_dir / *path;
        try {
            n = load_network(src.path).size();
        } catch (const std::exception& e) {
            rd.add("topology.path: " + std::string(e.what()));
        }
    } else {
        const auto nn = rd.count(t, "topology", "n");
        if (!nn) {
            if (kind != "custom") rd.add("topology.n is required");
        } else if (*nn < 1) {
            rd.add("topology.n must be >= 1");
        } else {
            n = static_cast<std::size_t>(*nn);
        }
        if (kind == "complete") {
            topo.kind = Complete{};
        } else if (kind == "ring") {
            Ring r;
            r.k = static_cast<std::size_t>(rd.count(t, "topology", "k").value_or(1));
            if (r.k < 1) rd.add("topology.k must be >= 1");
            if (n && r.k >= *n) rd.add("topology.k must be < n");
            topo.kind = r;
        } else if (kind == "erdos-renyi") {
            ErdosRenyi e;
            const auto p = rd.number(t, "topology", "p");
            if (!p) {
                rd.add("topology.p is required for erdos-renyi");
            } else if (!(*p >= 0.0 && *p <= 1.0)) {
                rd.add("topology.p must be a probability in [0, 1] (erdos-renyi edge probability), got " +
                       format_double(*p));
            }
            e.p = std::clamp(p.value_or(0.1), 0.0, 1.0);
            topo.kind = e;
        } else if (kind == "custom") {
            const auto adj = rd.matrix(t, "topology", "adjacency");
            if (!adj) {
                if (!t.contains("adjacency")) rd.add("topology.adjacency is required for custom");
            } else if (adj->rows() != adj->cols()) {
                rd.add("topology.adjacency must be square");
            } else {
                if (n && *n != adj->rows()) rd.add("topology.n must match the adjacency size");
                n = adj->rows();
                for (double x : adj->data()) {
                    if (x < 0.0) {
                        rd.add("topology.adjacency entries must be >= 0");
                        break;
                    }
                }
                topo.kind = Custom{*adj};
            }
        } else {
            rd.add("topology.kind must be one of complete, ring, erdos-renyi, custom, file");
        }
        if (n) topo.n = *n;
        const auto k = rd.number(t, "topology", "coupling");
        if (k && *k < 0.0) rd.add("topology.coupling must be >= 0");
        topo.coupling = k.value_or(1.0);
        topo.mean_field = rd.boolean(t, "topology", "mean_field");
        if (const auto seed = rd.count(t, "topology", "seed")) {
            topo.seed = *seed;
            src.topology_seed_fixed = true;
        }
        read_omega(rd, root, topo);
    }
    if (t.contains("attenuation")) {
        read_attenuation(rd, t.at("attenuation"), src);
        if (src.attenuation && src.attenuation->positions && n && src.attenuation->positions->rows() != *n) {
            rd.add("topology.attenuation.positions must have one row per node");
        }
    }
    return n;
}

void read_dynamics(Reader& rd, const json& root, ExperimentConfig& cfg) {
    if (!root.contains("dynamics")) {
        rd.add("dynamics is required");
        return;
    }
    const auto& d = root.at("dynamics");
    if (!rd.object(d, "dynamics")) return;
    rd.known(d, "dynamics", {"dt", "t_max", "integrator", "record_every"});
    if (const auto dt = rd.number(d, "dynamics", "dt")) {
        if (!(*dt > 0.0)) rd.add("dynamics.dt must be > 0");
        cfg.dynamics.dt = *dt;
    } else if (cfg.model == Model::kuramoto && !d.contains("dt")) {
        rd.add("dynamics.dt is required for the kuramoto model");
    }
    if (const auto t_max = rd.number(d, "dynamics", "t_max")) {
        if (!(*t_max > 0.0)) rd.add("dynamics.t_max must be > 0");
        cfg.dynamics.t_max = *t_max;
    } else if (!d.contains("t_max")) {
        rd.add("dynamics.t_max is required");
    }
    const auto integrator = rd.text(d, "dynamics", "integrator").value_or("rk4");
    if (integrator == "rk4") {
        cfg.dynamics.method = Integrator::rk4;
    } else if (integrator == "euler") {
        cfg.dynamics.method = Integrator::euler;
    } else {
        rd.add("dynamics.integrator must be rk4 or euler");
    }
    if (const auto every = rd.count(d, "dynamics", "record_every")) {
        if (*every < 1) rd.add("dynamics.record_every must be >= 1");
        cfg.dynamics.record_every = static_cast<std::size_t>(std::max<std::uint64_t>(1, *every));
    }
    if (cfg.dynamics.dt > 0.0 && cfg.dynamics.t_max > 0.0 && cfg.dynamics.t_max / cfg.dynamics.dt > 1e8) {
        rd.add("dynamics.t_max / dynamics.dt must be <= 1e8 steps");
    }
}

void read_pulse(Reader& rd, const json& root, ExperimentConfig& cfg, std::optional<std::size_t> n) {
    if (!root.contains("pulse")) return;
    const auto& p = root.at("pulse");
    if (!rd.object(p, "pulse")) return;
    rd.known(p, "pulse", {"p_send", "alpha", "threshold", "response", "coincidence_tol", "periods"});
    auto& pp = cfg.pulse;
    pp.p_send = rd.number(p, "pulse", "p_send").value_or(pp.p_send);
    if (!(pp.p_send >= 0.0 && pp.p_send <= 1.0)) rd.add("pulse.p_send must be a probability in [0, 1]");
    pp.alpha = rd.number(p, "pulse", "alpha").value_or(pp.alpha);
    if (!(pp.alpha >= 0.0)) rd.add("pulse.alpha must be >= 0");
    pp.threshold = rd.number(p, "pulse", "threshold").value_or(pp.threshold);
    if (!(pp.threshold > 0.0)) rd.add("pulse.threshold must be > 0");
    pp.coincidence_tol = rd.number(p, "pulse", "coincidence_tol").value_or(pp.coincidence_tol);
    if (!(pp.coincidence_tol >= 0.0)) rd.add("pulse.coincidence_tol must be >= 0");
    const auto response = rd.text(p, "pulse", "response").value_or("advance-late");
    if (response == "advance-late") {
        pp.curve = ResponseCurve::advance_late;
    } else if (response == "advance-early") {
        pp.curve = ResponseCurve::advance_early;
    } else {
        rd.add("pulse.response must be advance-late or advance-early");
    }
    if (auto periods = rd.numbers(p, "pulse", "periods")) {
        if (n && periods->size() != *n) rd.add("pulse.periods must have one entry per node");
        if (std::any_of(periods->begin(), periods->end(), [](double T) { return !(T > 0.0); })) {
            rd.add("pulse.periods entries must be > 0");
        }
        cfg.pulse_periods = std::move(*periods);
    }
}

void read_probe(Reader& rd, const json& root, ExperimentConfig& cfg, std::optional<std::size_t> n) {
    if (!root.contains("probe") || root.at("probe").is_null()) return;
    const auto& p = root.at("probe");
    if (!rd.object(p, "probe")) return;
    rd.known(p, "probe", {"epsilon", "omega_probe", "attach_to", "mode", "initial_phase"});
    if (cfg.model != Model::kuramoto) rd.add("probe is only supported for the kuramoto model");
    ProbeConfig pc;
    pc.epsilon = rd.number(p, "probe", "epsilon").value_or(0.0);
    if (!(pc.epsilon >= 0.0)) rd.add("probe.epsilon must be >= 0");
    pc.omega_probe = rd.number(p, "probe", "omega_probe").value_or(0.0);
    pc.initial_phase = rd.number(p, "probe", "initial_phase").value_or(0.0);
    const auto mode = rd.text(p, "probe", "mode").value_or("back-action");
    if (mode == "back-action") {
        pc.mode = ProbeMode::back_action;
    } else if (mode == "ideal") {
        pc.mode = ProbeMode::ideal;
    } else {
        rd.add("probe.mode must be ideal or back-action");
    }
    if (p.contains("attach_to")) {
        const auto& a = p.at("attach_to");
        if (a.is_string() && a.get<std::string>() == "all") {
            // empty list means every node
        } else if (a.is_array()) {
            for (const auto& e : a) {
                if (!e.is_number_unsigned()) {
                    rd.add("probe.attach_to must be \"all\" or an array of node indices");
                    break;
                }
                const auto idx = e.get<std::size_t>();
                if (n && idx >= *n) rd.add("probe.attach_to entry " + std::to_string(idx) + " must be < n");
                pc.attach_to.push_back(idx);
            }
        } else {
            rd.add("probe.attach_to must be \"all\" or an array of node indices");
        }
    }
    cfg.probe = std::move(pc);
}

void read_analysis(Reader& rd, const json& root, ExperimentConfig& cfg) {
    if (!root.contains("analysis")) return;
    const auto& a = root.at("analysis");
    if (!rd.object(a, "analysis")) return;
    rd.known(a, "analysis",
             {"regime", "regime_tol", "tail_fraction", "settle_fraction", "qoppa", "trajectory_embed", "local_order",
              "rate_window"});
    auto& an = cfg.analysis;
    an.regime = rd.boolean(a, "analysis", "regime").value_or(an.regime);
    an.regime_options.tol = rd.number(a, "analysis", "regime_tol").value_or(an.regime_options.tol);
    if (!(an.regime_options.tol > 0.0)) rd.add("analysis.regime_tol must be > 0");
    an.regime_options.tail_fraction =
        rd.number(a, "analysis", "tail_fraction").value_or(an.regime_options.tail_fraction);
    if (!(an.regime_options.tail_fraction > 0.0 && an.regime_options.tail_fraction <= 1.0)) {
        rd.add("analysis.tail_fraction must be in (0, 1]");
    }
    an.regime_options.settle_fraction =
        rd.number(a, "analysis", "settle_fraction").value_or(an.regime_options.settle_fraction);
    if (!(an.regime_options.settle_fraction > 0.0 && an.regime_options.settle_fraction < 1.0)) {
        rd.add("analysis.settle_fraction must be in (0, 1)");
    }
    if (a.contains("qoppa")) {
        const auto& q = a.at("qoppa");
        if (q.is_boolean()) {
            an.qoppa = q.get<bool>();
        } else if (rd.object(q, "analysis.qoppa")) {
            rd.known(q, "analysis.qoppa", {"enabled", "t_start", "t_end"});
            an.qoppa = rd.boolean(q, "analysis.qoppa", "enabled").value_or(true);
            an.qoppa_t_start = rd.number(q, "analysis.qoppa", "t_start");
            an.qoppa_t_end = rd.number(q, "analysis.qoppa", "t_end");
            if (an.qoppa_t_start && an.qoppa_t_end && !(*an.qoppa_t_end >= *an.qoppa_t_start)) {
                rd.add("analysis.qoppa.t_end must be >= analysis.qoppa.t_start");
            }
            if (an.qoppa_t_start && *an.qoppa_t_start < 0.0) rd.add("analysis.qoppa.t_start must be >= 0");
            if (an.qoppa_t_end && *an.qoppa_t_end > cfg.dynamics.t_max) {
                rd.add("analysis.qoppa.t_end must be <= dynamics.t_max");
            }
        }
    }
    an.trajectory_embed = rd.boolean(a, "analysis", "trajectory_embed").value_or(an.trajectory_embed);
    an.local_order = rd.boolean(a, "analysis", "local_order").value_or(an.local_order);
    if (auto w = rd.number(a, "analysis", "rate_window")) {
        if (!(*w > 0.0)) rd.add("analysis.rate_window must be > 0");
        an.rate_window = *w;
    }
}

// ---------------------------------------------------------------------------
// Output helpers

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_row(std::span<const double> values) {
    std::string line;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k > 0) line += ',';
        line += format_double(values[k]);
    }
    line += '\n';
    return line;
}

std::string node_label(std::size_t i, std::size_t network_nodes) {
    return i < network_nodes ? std::to_string(i) : "probe";
}

ojson perturbation_json(const AppliedPerturbation& ap) {
    ojson p;
    p["kind"] = perturbation_name(ap.spec.kind);
    p["at_time"] = ap.spec.at_time;
    p["applied_at"] = ap.applied_at;
    p["step"] = ap.step;
    std::visit(overloaded{
                   [&](const FrequencyShift& f) {
                       p["node"] = f.node;
                       p["delta_omega"] = f.delta_omega;
                   },
                   [&](const EdgeRescale& e) {
                       p["i"] = e.i;
                       p["j"] = e.j;
                       p["factor"] = e.factor;
                   },
                   [&](const EdgeRemove& e) {
                       p["i"] = e.i;
                       p["j"] = e.j;
                   },
                   [&](const NodeSilence& s) { p["node"] = s.node; },
               },
               ap.spec.kind);
    return p;
}

template <class T>
ojson optional_json(const std::optional<T>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

std::string regime_json(const RegimeReport& rep, const RegimeOptions& opts) {
    ojson doc;
    doc["schema_version"] = kSchemaVersion;
    doc["regime"] = regime_name(rep.regime);
    doc["asymptote"] = rep.asymptote;
    doc["settle_time"] = optional_json(rep.settle_time);
    doc["zero_crossings"] = rep.zero_crossings;
    doc["envelope_rate"] = rep.envelope_rate;
    doc["critical_points"] = rep.extrema_times;
    doc["tol"] = opts.tol;
    doc["tail_fraction"] = opts.tail_fraction;
    doc["settle_fraction"] = opts.settle_fraction;
    return doc.dump(2) + "\n";
}

std::string qoppa_json(const KuramotoOutcome& out) {
    ojson doc;
    doc["schema_version"] = kSchemaVersion;
    doc["aggregate"] = "rms-over-nodes";
    doc["defined"] = out.qoppa.has_value();
    if (out.qoppa) {
        doc["qoppa"] = out.qoppa->qoppa;
        doc["r_squared"] = out.qoppa->r_squared;
        doc["t_start"] = out.qoppa->t_start;
        doc["t_end"] = out.qoppa->t_end;
        const double ds = out.record.action_derivative_series.back();
        try {
            doc["final_wavelength_shift"] = wavelength_shift(ds, out.qoppa->qoppa);
        } catch (const UndefinedError&) {
            doc["final_wavelength_shift"] = nullptr;
        }
    } else {
        doc["reason"] = out.qoppa_error;
    }
    return doc.dump(2) + "\n";
}

std::string series_csv(const TrajectoryRecord& rec) {
    std::string out = "t,r,psi,L,S,dSdt\n";
    for (std::size_t k = 0; k < rec.steps(); ++k) {
        const double row[] = {rec.times[k],           rec.r_series[k],       rec.psi_series[k],
                              rec.lagrangian_series[k], rec.action_series[k], rec.action_derivative_series[k]};
        out += csv_row(row);
    }
    return out;
}

std::string nodes_csv(const TrajectoryRecord& rec, std::size_t network_nodes) {
    const std::size_t n = rec.nodes();
    std::string out = "t";
    for (std::size_t i = 0; i < n; ++i) out += ",theta_" + node_label(i, network_nodes);
    for (std::size_t i = 0; i < n; ++i) out += ",domega_" + node_label(i, network_nodes);
    out += '\n';
    std::vector<double> row(1 + 2 * n);
    for (std::size_t k = 0; k < rec.steps(); ++k) {
        row[0] = rec.times[k];
        for (std::size_t i = 0; i < n; ++i) {
            row[1 + i] = rec.thetas(k, i);
            row[1 + n + i] = rec.freq_shift_series(k, i);
        }
        out += csv_row(row);
    }
    return out;
}

std::string embedding_csv(const std::vector<TrajectoryPoint>& points) {
    std::string out = "x,y,color\n";
    for (const auto& p : points) {
        const double row[] = {p.x, p.y, p.color};
        out += csv_row(row);
    }
    return out;
}

// r_i over the closed neighbourhood {i} + {j : X_ij > 0}, per recorded step.
std::string local_order_csv(const TrajectoryRecord& rec, const Network& net, std::size_t network_nodes) {
    std::string out = "t";
    for (std::size_t i = 0; i < network_nodes; ++i) out += ",r_" + std::to_string(i);
    out += '\n';
    std::vector<double> row(1 + network_nodes);
    std::vector<double> phases;
    for (std::size_t k = 0; k < rec.steps(); ++k) {
        row[0] = rec.times[k];
        for (std::size_t i = 0; i < network_nodes; ++i) {
            phases.assign(1, rec.thetas(k, i));
            for (std::size_t j = 0; j < network_nodes; ++j) {
                if (j != i && net.coupling(i, j) > 0.0) phases.push_back(rec.thetas(k, j));
            }
            row[1 + i] = order_parameter(phases).r;
        }
        out += csv_row(row);
    }
    return out;
}

std::string probe_json(const KuramotoOutcome& out, const ProbeConfig& pc) {
    ojson doc;
    doc["schema_version"] = kSchemaVersion;
    doc["epsilon"] = pc.epsilon;
    doc["omega_probe"] = pc.omega_probe;
    doc["mode"] = pc.mode == ProbeMode::ideal ? "ideal" : "back-action";
    doc["attach_to"] = pc.attach_to.empty() ? ojson("all") : ojson(pc.attach_to);
    doc["estimate"] = optional_json(out.probe_estimate);
    if (!out.probe_estimate) doc["reason"] = out.probe_error;
    return doc.dump(2) + "\n";
}

struct FileEntry {
    std::string name;
    std::string schema;
};

std::string manifest_json(const ExperimentConfig& cfg, const SeedReport& rep, const std::vector<FileEntry>& files,
                          const ojson& extra) {
    ojson doc;
    doc["schema_version"] = kSchemaVersion;
    doc["model"] = cfg.model == Model::kuramoto ? "kuramoto" : "pulse";
    doc["seed"] = rep.seed;
    auto f = ojson::object();
    for (const auto& e : files) {
        ojson entry;
        entry["schema"] = e.schema;
        entry["schema_version"] = kSchemaVersion;
        f[e.name] = std::move(entry);
    }
    doc["files"] = std::move(f);
    doc["final_r"] = optional_json(rep.final_r);
    doc["regime"] = optional_json(rep.regime);
    doc["sync_time"] = optional_json(rep.sync_time);
    auto applied = ojson::array();
    for (const auto& ap : rep.applied) applied.push_back(perturbation_json(ap));
    doc["perturbations"] = std::move(applied);
    for (const auto& [k, v] : extra.items()) doc[k] = v;
    return doc.dump(2) + "\n";
}

SeedReport write_kuramoto_seed(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& dir) {
    const auto out = run_kuramoto_seed(cfg, seed);
    SeedReport rep;
    rep.seed = seed;
    rep.final_r = out.record.r_series.back();
    if (out.regime) rep.regime = regime_name(out.regime->regime);
    rep.applied = out.sim.applied;

    std::vector<FileEntry> files;
    auto emit = [&](const std::string& name, const std::string& schema, const std::string& content) {
        write_text(dir / name, content);
        files.push_back({name, schema});
    };
    emit("network.json", "network", network_to_json_text(out.network));
    emit("series.csv", "t,r,psi,L,S,dSdt", series_csv(out.record));
    emit("nodes.csv", "t,theta_*,domega_*", nodes_csv(out.record, out.network_nodes));
    if (out.regime) emit("regime.json", "regime", regime_json(*out.regime, cfg.analysis.regime_options));
    if (cfg.analysis.qoppa) emit("qoppa.json", "qoppa", qoppa_json(out));
    if (cfg.analysis.trajectory_embed) emit("embedding.csv", "x,y,color", embedding_csv(out.embedding));
    if (cfg.analysis.local_order) {
        emit("local_order.csv", "t,r_*", local_order_csv(out.record, out.network, out.network_nodes));
    }
    if (cfg.probe) emit("probe.json", "probe", probe_json(out, *cfg.probe));

    ojson extra;
    extra["n"] = out.network_nodes;
    extra["steps"] = out.sim.steps;
    extra["probe"] = cfg.probe.has_value();
    write_text(dir / "manifest.json", manifest_json(cfg, rep, files, extra));
    for (const auto& f : files) rep.files.push_back(f.name);
    rep.files.push_back("manifest.json");
    return rep;
}

SeedReport write_pulse_seed(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& dir) {
    const auto out = run_pulse_seed(cfg, seed);
    SeedReport rep;
    rep.seed = seed;
    rep.sync_time = out.run.sync_time;
    rep.applied = out.run.applied;
    std::vector<double> angles;
    for (double phi : out.run.final_state.phi) angles.push_back(2.0 * std::numbers::pi * phi / cfg.pulse.threshold);
    rep.final_r = order_parameter(angles).r;

    std::vector<FileEntry> files;
    auto emit = [&](const std::string& name, const std::string& schema, const std::string& content) {
        write_text(dir / name, content);
        files.push_back({name, schema});
    };
    emit("network.json", "network", network_to_json_text(out.network));
    emit("events.csv", "t,source,suppressed,n_receivers", events_to_csv(out.run.events));
    emit("deltas.json", "event-deltas", event_deltas_to_json(out.run.events));

    std::string sig = "t,S_f,exp_S_f,firing_rate\n";
    for (std::size_t k = 0; k < out.times.size(); ++k) {
        const double row[] = {out.times[k], out.signaling_action[k], std::exp(out.signaling_action[k]),
                              out.firing_rate[k]};
        sig += csv_row(row);
    }
    emit("signaling.csv", "t,S_f,exp_S_f,firing_rate", sig);

    std::string cascades = "t,size\n";
    for (std::size_t k = 0; k < out.run.cascade_times.size(); ++k) {
        cascades += format_double(out.run.cascade_times[k]) + "," + std::to_string(out.run.cascade_sizes[k]) + "\n";
    }
    emit("cascades.csv", "t,size", cascades);

    std::size_t suppressed = 0;
    for (const auto& ev : out.run.events) suppressed += ev.suppressed ? 1 : 0;
    ojson extra;
    extra["n"] = out.network.size();
    extra["events"] = out.run.events.size();
    extra["suppressed"] = suppressed;
    extra["final_phases"] = out.run.final_state.phi;
    extra["final_S_f"] = out.signaling_action.empty() ? 0.0 : out.signaling_action.back();
    write_text(dir / "manifest.json", manifest_json(cfg, rep, files, extra));
    for (const auto& f : files) rep.files.push_back(f.name);
    rep.files.push_back("manifest.json");
    return rep;
}

// ---------------------------------------------------------------------------
// CSV reading for export

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name, const fs::path& file) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError(file.string() + ": missing column \"" + name + "\"");
        return static_cast<std::size_t>(it - header.begin());
    }
};

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

Table read_csv(const fs::path& path) {
    const std::string text = read_text(path);
    std::istringstream in(text);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    t.header = split(line, ',');
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != t.header.size()) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(t.header.size()) + " columns");
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto& s = cells[c];
            const auto res = std::from_chars(s.data(), s.data() + s.size(), row[c]);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad number \"" + s + "\"");
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string phase_circle_rows(std::span<const double> thetas, std::span<const std::string> labels) {
    std::string out = "node,cos_theta,sin_theta\n";
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        out += labels[i] + "," + format_double(std::cos(thetas[i])) + "," + format_double(std::sin(thetas[i])) + "\n";
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ConfigCheck check_config_text(const std::string& text, const fs::path& base_dir) {
    ConfigCheck check;
    auto& v = check.violations;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        v.push_back("config is not valid JSON: " + std::string(e.what()));
        return check;
    }
    Reader rd(v);
    if (!rd.object(root, "config")) return check;
    rd.known(root, "",
             {"schema_version", "model", "topology", "omega", "dynamics", "pulse", "seeds", "perturbations", "probe",
              "output", "analysis", "description"});

    ExperimentConfig cfg;
    if (const auto sv = rd.count(root, "", "schema_version")) {
        if (*sv != static_cast<std::uint64_t>(kSchemaVersion)) {
            rd.add("schema_version must be " + std::to_string(kSchemaVersion));
        }
    } else if (!root.contains("schema_version")) {
        rd.add("schema_version is required");
    }
    const auto model = rd.text(root, "", "model");
    if (!model) {
        if (!root.contains("model")) rd.add("model is required (kuramoto or pulse)");
    } else if (*model == "kuramoto") {
        cfg.model = Model::kuramoto;
    } else if (*model == "pulse") {
        cfg.model = Model::pulse;
    } else {
        rd.add("model must be kuramoto or pulse");
    }

    const auto n = read_topology(rd, root, cfg.network, base_dir);
    read_dynamics(rd, root, cfg);
    read_pulse(rd, root, cfg, n);
    if (cfg.model == Model::pulse && !cfg.pulse_periods) {
        if (const auto* c = std::get_if<ConstantOmega>(&cfg.network.topology.omega);
            c && cfg.network.path.empty() && !(c->value > 0.0)) {
            rd.add("omega.value must be > 0 for the pulse model (periods are 2 pi / omega) or set pulse.periods");
        }
    }

    if (!root.contains("seeds")) {
        rd.add("seeds is required");
    } else if (!root.at("seeds").is_array() || root.at("seeds").empty()) {
        rd.add("seeds must be a nonempty array of nonnegative integers");
    } else {
        std::set<std::uint64_t> seen;
        for (const auto& s : root.at("seeds")) {
            if (!s.is_number_unsigned()) {
                rd.add("seeds must be a nonempty array of nonnegative integers");
                break;
            }
            const auto seed = s.get<std::uint64_t>();
            if (!seen.insert(seed).second) rd.add("seeds entry " + std::to_string(seed) + " is duplicated");
            cfg.seeds.push_back(seed);
        }
    }

    if (root.contains("perturbations")) {
        const auto& ps = root.at("perturbations");
        if (!ps.is_array()) {
            rd.add("perturbations must be an array");
        } else {
            for (std::size_t k = 0; k < ps.size(); ++k) {
                auto spec = read_perturbation(rd, ps[k], "perturbations[" + std::to_string(k) + "]", n);
                if (spec) cfg.dynamics.perturbations.push_back(std::move(*spec));
            }
        }
    }
    read_probe(rd, root, cfg, n);

    if (root.contains("output")) {
        const auto& o = root.at("output");
        if (rd.object(o, "output")) {
            rd.known(o, "output", {"root", "workers"});
            if (const auto r = rd.text(o, "output", "root")) {
                if (r->empty()) rd.add("output.root must be nonempty");
                cfg.output_root = *r;
            }
            if (const auto w = rd.count(o, "output", "workers")) {
                if (*w < 1) rd.add("output.workers must be >= 1");
                cfg.workers = static_cast<std::size_t>(std::max<std::uint64_t>(1, *w));
            }
        }
    }
    read_analysis(rd, root, cfg);

    if (v.empty()) check.config = std::move(cfg);
    return check;
}

std::vector<std::string> validate_config(const fs::path& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const IoError& e) {
        return {std::string("config: ") + e.what()};
    }
    return check_config_text(text, path.parent_path()).violations;
}

ExperimentConfig load_config(const fs::path& path) {
    auto check = check_config_text(read_text(path), path.parent_path());
    if (!check.config) {
        std::string msg = "invalid config " + path.string() + ":";
        for (const auto& s : check.violations) msg += "\n  " + s;
        throw ParseError(msg);
    }
    return std::move(*check.config);
}

void apply_env_overrides(ExperimentConfig& config) {
    if (const char* root = std::getenv("OSCNET_OUTPUT_ROOT"); root && *root) config.output_root = root;
    if (const char* workers = std::getenv("OSCNET_WORKERS"); workers && *workers) {
        std::size_t w = 0;
        const std::string s(workers);
        const auto res = std::from_chars(s.data(), s.data() + s.size(), w);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || w < 1) {
            throw ParameterError("OSCNET_WORKERS must be a positive integer, got \"" + s + "\"");
        }
        config.workers = w;
    }
}

// ---------------------------------------------------------------------------

Network build_network(const ExperimentConfig& config, std::uint64_t seed) {
    const auto& src = config.network;
    Network net;
    if (!src.path.empty()) {
        net = load_network(src.path);
    } else {
        TopologySpec spec = src.topology;
        if (!src.topology_seed_fixed) spec.seed = seed;
        net = build_topology(spec);
    }
    if (src.attenuation) {
        const auto& att = *src.attenuation;
        const std::size_t n = net.size();
        if (att.metric == DistanceMetric::euclidean) {
            Matrix pos;
            if (att.positions) {
                pos = *att.positions;
            } else if (net.positions) {
                pos = *net.positions;
            } else {
                const std::uint64_t pseed = src.topology_seed_fixed ? src.topology.seed : seed;
                CounterRng rng(pseed, "positions");
                pos = Matrix(n, att.dim);
                for (double& x : pos.data()) x = rng.uniform();
            }
            if (pos.rows() != n) throw ParameterError("attenuation positions must have one row per node");
            net.coupling = coupling_from_distance(pos, att.params, att.cutoff);
            net.positions = std::move(pos);
        } else {
            net.coupling = coupling_from_graph_distance(net.coupling, att.params, att.cutoff);
        }
    }
    net.validate();
    return net;
}

PhaseState initial_phases(std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed, "initial");
    PhaseState s;
    s.theta.resize(n);
    for (double& th : s.theta) th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return s;
}

KuramotoOutcome run_kuramoto_seed(const ExperimentConfig& config, std::uint64_t seed) {
    KuramotoOutcome out;
    Network net = build_network(config, seed);
    PhaseState init = initial_phases(net.size(), seed);
    out.network_nodes = net.size();
    if (config.probe) {
        net = attach_probe(net, *config.probe);
        init = attach_probe_state(init, *config.probe);
    }
    out.network = net;
    RecordOptions ro;
    ro.observed_nodes = out.network_nodes;
    out.record = record_trajectory(net, init, config.dynamics, ro, &out.sim);
    const auto& rec = out.record;

    if (config.analysis.regime) {
        out.regime = classify_regime(rec.action_derivative_series, rec.times, config.analysis.regime_options);
    }
    if (config.analysis.qoppa) {
        const double t0 = config.analysis.qoppa_t_start.value_or(rec.times.front());
        const double t1 = std::min(config.analysis.qoppa_t_end.value_or(rec.times.back()), rec.times.back());
        Matrix shifts(rec.steps(), out.network_nodes);
        for (std::size_t k = 0; k < rec.steps(); ++k)
            for (std::size_t i = 0; i < out.network_nodes; ++i) shifts(k, i) = rec.freq_shift_series(k, i);
        const auto agg = rms_over_nodes(shifts);
        try {
            out.qoppa = fit_qoppa(agg, rec.action_derivative_series, rec.times, t0, t1);
        } catch (const Error& e) {
            out.qoppa_error = e.what();
        }
    }
    if (config.analysis.trajectory_embed) {
        Matrix net_thetas(rec.steps(), out.network_nodes);
        for (std::size_t k = 0; k < rec.steps(); ++k)
            for (std::size_t i = 0; i < out.network_nodes; ++i) net_thetas(k, i) = rec.thetas(k, i);
        out.embedding = config_trajectory(net_thetas, rec.action_derivative_series);
    }
    if (config.probe) {
        const auto probe_col = rec.thetas.column(out.network_nodes);
        try {
            out.probe_estimate = probe_estimate(rec.times, probe_col, config.probe->omega_probe);
        } catch (const Error& e) {
            out.probe_error = e.what();
        }
    }
    return out;
}

PulseOutcome run_pulse_seed(const ExperimentConfig& config, std::uint64_t seed) {
    PulseOutcome out;
    out.network = build_network(config, seed);
    const std::size_t n = out.network.size();
    const double thr = config.pulse.threshold;

    CircleState init;
    if (config.pulse_periods) {
        if (config.pulse_periods->size() != n) throw ParameterError("pulse.periods must have one entry per node");
        init.period = *config.pulse_periods;
    } else {
        for (double w : out.network.omega) {
            if (!(w > 0.0)) throw ParameterError("pulse model needs omega > 0 on every node (period = 2 pi / omega)");
            init.period.push_back(2.0 * std::numbers::pi / w);
        }
    }
    CounterRng rng(seed, "initial");
    init.phi.resize(n);
    for (double& p : init.phi) p = rng.uniform() * thr;
    out.initial = init;

    out.run = run_pulse_sim(out.network, config.pulse, init, config.dynamics.t_max, seed,
                            config.dynamics.perturbations);

    const double dt = config.dynamics.dt;
    const auto steps = static_cast<std::size_t>(std::llround(config.dynamics.t_max / dt));
    out.times.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) out.times[k] = static_cast<double>(k) * dt;
    const std::vector<double> p_send(out.times.size(), config.pulse.p_send);
    out.signaling_action = signaling_action(p_send, out.times);
    double mean_period = 0.0;
    for (double T : init.period) mean_period += T / static_cast<double>(n);
    out.firing_rate = firing_rate(out.run.events, out.times, config.analysis.rate_window.value_or(10.0 * mean_period));
    return out;
}

// ---------------------------------------------------------------------------

std::string summary_json(const ExperimentConfig& config, const ExitReport& report) {
    ojson doc;
    doc["schema_version"] = kSchemaVersion;
    doc["model"] = config.model == Model::kuramoto ? "kuramoto" : "pulse";
    auto seeds = ojson::array();
    for (const auto& s : report.seeds) {
        ojson e;
        e["seed"] = s.seed;
        e["dir"] = s.dir.generic_string();
        e["files"] = s.files;
        e["final_r"] = optional_json(s.final_r);
        e["regime"] = optional_json(s.regime);
        e["sync_time"] = optional_json(s.sync_time);
        auto applied = ojson::array();
        for (const auto& ap : s.applied) applied.push_back(perturbation_json(ap));
        e["perturbations"] = std::move(applied);
        seeds.push_back(std::move(e));
    }
    doc["seeds"] = std::move(seeds);
    return doc.dump(2) + "\n";
}

ExitReport run_experiment(const ExperimentConfig& config) {
    if (config.seeds.empty()) throw ParameterError("seeds must be nonempty");
    ExitReport report;
    report.root = config.output_root;
    std::error_code ec;
    fs::create_directories(report.root, ec);
    if (ec || !fs::is_directory(report.root)) {
        throw IoError("cannot create output directory " + report.root.string() +
                      (ec ? ": " + ec.message() : std::string()));
    }

    const std::size_t count = config.seeds.size();
    report.seeds.resize(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t idx = next++; idx < count; idx = next++) {
            const std::uint64_t seed = config.seeds[idx];
            try {
                const fs::path rel = "seed_" + std::to_string(seed);
                const fs::path dir = report.root / rel;
                std::error_code dir_ec;
                fs::create_directories(dir, dir_ec);
                if (dir_ec) throw IoError("cannot create " + dir.string() + ": " + dir_ec.message());
                SeedReport rep = config.model == Model::kuramoto ? write_kuramoto_seed(config, seed, dir)
                                                                 : write_pulse_seed(config, seed, dir);
                rep.dir = rel;
                report.seeds[idx] = std::move(rep);
            } catch (...) {
                errors[idx] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(config.workers, 1, count);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    report.summary = report.root / "summary.json";
    write_text(report.summary, summary_json(config, report));
    return report;
}

// ---------------------------------------------------------------------------

std::optional<Figure> parse_figure(const std::string& name) {
    if (name == "fig6") return Figure::fig6;
    if (name == "fig7") return Figure::fig7;
    if (name == "fig8") return Figure::fig8;
    if (name == "phase-circle") return Figure::phase_circle;
    return std::nullopt;
}

std::string figure_name(Figure which) {
    switch (which) {
        case Figure::fig6: return "fig6";
        case Figure::fig7: return "fig7";
        case Figure::fig8: return "fig8";
        case Figure::phase_circle: return "phase-circle";
    }
    return "unknown";
}

std::string figure_csv(const TrajectoryRecord& record, Figure which) {
    if (record.steps() == 0) throw InsufficientDataError("record is empty");
    const std::size_t n = record.nodes();
    std::string out;
    switch (which) {
        case Figure::fig6: {
            if (record.action_derivative_series.size() != record.steps()) {
                throw ParameterError("fig6 needs dS/dt; call finish_record first");
            }
            out = "t,dSdt\n";
            for (std::size_t k = 0; k < record.steps(); ++k) {
                const double row[] = {record.times[k], record.action_derivative_series[k]};
                out += csv_row(row);
            }
            break;
        }
        case Figure::fig7: {
            if (record.freq_shift_series.rows() != record.steps()) {
                throw ParameterError("fig7 needs frequency shifts; call finish_record first");
            }
            out = "t";
            for (std::size_t i = 0; i < n; ++i) out += ",domega_" + std::to_string(i);
            out += '\n';
            std::vector<double> row(1 + n);
            for (std::size_t k = 0; k < record.steps(); ++k) {
                row[0] = record.times[k];
                for (std::size_t i = 0; i < n; ++i) row[1 + i] = record.freq_shift_series(k, i);
                out += csv_row(row);
            }
            break;
        }
        case Figure::fig8:
            out = embedding_csv(config_trajectory(record.thetas, record.action_derivative_series));
            break;
        case Figure::phase_circle: {
            std::vector<std::string> labels;
            for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
            out = phase_circle_rows(record.thetas.row(record.steps() - 1), labels);
            break;
        }
    }
    return out;
}

void export_figure_data(const fs::path& record_dir, Figure which, const fs::path& out) {
    if (!fs::is_directory(record_dir)) throw IoError("record directory " + record_dir.string() + " does not exist");
    const auto series_path = record_dir / "series.csv";
    const auto nodes_path = record_dir / "nodes.csv";
    if (!fs::exists(series_path)) {
        throw ParameterError(figure_name(which) + " needs a kuramoto record with series.csv; " +
                             record_dir.string() + " has none (pulse records export events.csv and signaling.csv)");
    }

    std::string csv;
    switch (which) {
        case Figure::fig6: {
            const auto t = read_csv(series_path);
            const auto ct = t.column("t", series_path);
            const auto cd = t.column("dSdt", series_path);
            csv = "t,dSdt\n";
            for (const auto& r : t.rows) {
                const double row[] = {r[ct], r[cd]};
                csv += csv_row(row);
            }
            break;
        }
        case Figure::fig7: {
            const auto t = read_csv(nodes_path);
            csv = "t";
            std::vector<std::size_t> cols{t.column("t", nodes_path)};
            for (std::size_t c = 0; c < t.header.size(); ++c) {
                if (t.header[c].rfind("domega_", 0) == 0) {
                    cols.push_back(c);
                    csv += "," + t.header[c];
                }
            }
            csv += '\n';
            std::vector<double> row(cols.size());
            for (const auto& r : t.rows) {
                for (std::size_t c = 0; c < cols.size(); ++c) row[c] = r[cols[c]];
                csv += csv_row(row);
            }
            break;
        }
        case Figure::fig8: {
            const auto path = record_dir / "embedding.csv";
            if (!fs::exists(path)) {
                throw ParameterError("fig8 needs the configuration-space embedding, which this record lacks; "
                                     "set analysis.trajectory_embed to true and rerun");
            }
            const auto t = read_csv(path);
            const auto cx = t.column("x", path);
            const auto cy = t.column("y", path);
            const auto cc = t.column("color", path);
            csv = "x,y,color\n";
            for (const auto& r : t.rows) {
                const double row[] = {r[cx], r[cy], r[cc]};
                csv += csv_row(row);
            }
            break;
        }
        case Figure::phase_circle: {
            const auto t = read_csv(nodes_path);
            if (t.rows.empty()) throw InsufficientDataError(nodes_path.string() + " has no rows");
            std::vector<double> thetas;
            std::vector<std::string> labels;
            for (std::size_t c = 0; c < t.header.size(); ++c) {
                if (t.header[c].rfind("theta_", 0) == 0) {
                    thetas.push_back(t.rows.back()[c]);
                    labels.push_back(t.header[c].substr(6));
                }
            }
            csv = phase_circle_rows(thetas, labels);
            break;
        }
    }
    write_text(out, csv);
}

}  // namespace oscnet

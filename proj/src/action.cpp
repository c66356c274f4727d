#include "oscnet/action.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "oscnet/errors.hpp"

namespace oscnet {

namespace {

void check_aligned(std::span<const double> values, std::span<const double> times, const char* what) {
    if (values.size() != times.size()) {
        throw ParameterError(std::string(what) + ": series and times must have equal length");
    }
}

void check_increasing(std::span<const double> times) {
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) {
            throw ParameterError("times must be strictly increasing (violated at index " + std::to_string(k) + ")");
        }
    }
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
    const auto m = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if (sxx == 0.0) return {0.0, my};
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

}  // namespace

std::string regime_name(Regime regime) {
    switch (regime) {
        case Regime::underdamped: return "underdamped";
        case Regime::critically_damped: return "critically-damped";
        case Regime::steady_state: return "steady-state";
        case Regime::unsettled: return "chaotic/unsettled";
    }
    return "chaotic/unsettled";
}

double lagrangian(std::span<const double> theta, std::span<const double> theta_dot, const Network& net) {
    const std::size_t n = net.size();
    if (theta.size() != n || theta_dot.size() != n) throw ParameterError("lagrangian: dimension mismatch");

    double kinetic = 0.0;
    for (double v : theta_dot) kinetic += 0.5 * v * v;

    std::vector<double> s(n);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::sin(theta[i]);
        c[i] = std::cos(theta[i]);
    }
    // -V = sum_{i<j} Xs_ij cos(theta_j - theta_i)
    double minus_potential = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double xs = 0.5 * (net.coupling(i, j) + net.coupling(j, i));
            if (xs == 0.0) continue;
            minus_potential += xs * (c[j] * c[i] + s[j] * s[i]);
        }
    }
    return kinetic + minus_potential;
}

std::vector<double> accumulate_action(std::span<const double> lagrangian_series, std::span<const double> times) {
    check_aligned(lagrangian_series, times, "accumulate_action");
    check_increasing(times);
    std::vector<double> s(times.size(), 0.0);
    for (std::size_t k = 1; k < times.size(); ++k) {
        s[k] = s[k - 1] + 0.5 * (times[k] - times[k - 1]) * (lagrangian_series[k - 1] + lagrangian_series[k]);
    }
    return s;
}

std::vector<double> action_derivative(std::span<const double> action_series, std::span<const double> times) {
    check_aligned(action_series, times, "action_derivative");
    check_increasing(times);
    const std::size_t m = times.size();
    if (m < 3) throw InsufficientDataError("action_derivative needs at least 3 samples");
    const auto& f = action_series;
    const auto& t = times;
    std::vector<double> d(m);
    for (std::size_t k = 1; k + 1 < m; ++k) {
        const double h1 = t[k] - t[k - 1];
        const double h2 = t[k + 1] - t[k];
        d[k] = -h2 / (h1 * (h1 + h2)) * f[k - 1] + (h2 - h1) / (h1 * h2) * f[k] + h1 / (h2 * (h1 + h2)) * f[k + 1];
    }
    {
        const double h1 = t[1] - t[0];
        const double h2 = t[2] - t[1];
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
               h1 / (h2 * (h1 + h2)) * f[2];
    }
    {
        const double a = t[m - 1] - t[m - 2];
        const double b = t[m - 2] - t[m - 3];
        d[m - 1] = (2.0 * a + b) / (a * (a + b)) * f[m - 1] - (a + b) / (a * b) * f[m - 2] +
                   a / (b * (a + b)) * f[m - 3];
    }
    return d;
}

std::vector<double> signaling_action(std::span<const double> p_send_series, std::span<const double> times) {
    return accumulate_action(p_send_series, times);
}

std::vector<double> firing_rate(const std::vector<PulseEvent>& events, std::span<const double> times, double window) {
    if (!(window > 0.0)) throw ParameterError("rate window must be > 0");
    check_increasing(times);
    std::vector<double> fired;
    for (const auto& ev : events) {
        if (!ev.suppressed) fired.push_back(ev.t);
    }
    std::sort(fired.begin(), fired.end());
    std::vector<double> rate(times.size(), 0.0);
    if (times.empty()) return rate;
    const double lo_bound = times.front();
    const double hi_bound = times.back();
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double lo = std::max(lo_bound, times[k] - 0.5 * window);
        const double hi = std::min(hi_bound, times[k] + 0.5 * window);
        if (!(hi > lo)) continue;
        const auto first = std::lower_bound(fired.begin(), fired.end(), lo);
        const auto last = std::upper_bound(fired.begin(), fired.end(), hi);
        rate[k] = static_cast<double>(last - first) / (hi - lo);
    }
    return rate;
}

double attenuation_action(double gamma, double t) {
    if (!(gamma >= 0.0) || !(t >= 0.0)) throw ParameterError("attenuation_action needs gamma >= 0 and t >= 0");
    return -gamma * t;
}

double intensity_ratio(double gamma, double t) {
    return std::exp(attenuation_action(gamma, t));
}

// ---------------------------------------------------------------------------

RegimeReport classify_regime(std::span<const double> ds_dt, std::span<const double> times,
                             const RegimeOptions& options) {
    check_aligned(ds_dt, times, "classify_regime");
    RegimeReport report;
    const std::size_t m = ds_dt.size();
    if (m < 10) return report;
    check_increasing(times);

    const auto tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(options.tail_fraction * m)));
    report.asymptote = std::accumulate(ds_dt.end() - static_cast<std::ptrdiff_t>(tail), ds_dt.end(), 0.0) /
                       static_cast<double>(tail);

    std::vector<double> dev(m);
    double peak = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        dev[k] = ds_dt[k] - report.asymptote;
        peak = std::max(peak, std::abs(ds_dt[k]));
    }
    // Relative to the asymptote, or to the signal peak when the asymptote is 0.
    const double scale = report.asymptote != 0.0 ? std::abs(report.asymptote) : peak;
    const double band = options.tol * scale;

    std::size_t settle = m;
    while (settle > 0 && std::abs(dev[settle - 1]) <= band) --settle;
    if (settle == m) return report;
    const double t0 = times.front();
    const double t_end = times.back();
    if (times[settle] > t_end - options.settle_fraction * (t_end - t0)) return report;
    report.settle_time = times[settle];

    int last_sign = 0;
    for (std::size_t k = 0; k < settle; ++k) {
        const int sign = dev[k] > 0.0 ? 1 : (dev[k] < 0.0 ? -1 : 0);
        if (sign == 0) continue;
        if (last_sign != 0 && sign != last_sign) ++report.zero_crossings;
        last_sign = sign;
    }
    for (std::size_t k = 1; k < settle && k + 1 < m; ++k) {
        const bool max = ds_dt[k] > ds_dt[k - 1] && ds_dt[k] >= ds_dt[k + 1];
        const bool min = ds_dt[k] < ds_dt[k - 1] && ds_dt[k] <= ds_dt[k + 1];
        if (max || min) report.extrema_times.push_back(times[k]);
    }

    // Envelope: log |dev| at its local peaks (or at every pre-settle sample
    // when there are fewer than two peaks) against time.
    std::vector<double> et;
    std::vector<double> ev;
    for (std::size_t k = 1; k < settle && k + 1 < m; ++k) {
        const double a = std::abs(dev[k]);
        if (a > 0.0 && a > std::abs(dev[k - 1]) && a >= std::abs(dev[k + 1])) {
            et.push_back(times[k]);
            ev.push_back(std::log(a));
        }
    }
    if (et.size() < 2) {
        et.clear();
        ev.clear();
        for (std::size_t k = 0; k < settle; ++k) {
            if (dev[k] != 0.0) {
                et.push_back(times[k]);
                ev.push_back(std::log(std::abs(dev[k])));
            }
        }
    }
    if (et.size() >= 2) report.envelope_rate = -least_squares_line(et, ev).slope;

    // Overshoot: after the first excursion outside the band, the signal
    // leaves the band again on the other side of the asymptote.
    int first_side = 0;
    bool overshoot = false;
    for (std::size_t k = 0; k < settle; ++k) {
        if (std::abs(dev[k]) <= band) continue;
        const int side = dev[k] > 0.0 ? 1 : -1;
        if (first_side == 0) {
            first_side = side;
        } else if (side != first_side) {
            overshoot = true;
            break;
        }
    }

    if (settle == 0) {
        report.regime = Regime::steady_state;
    } else if ((report.zero_crossings >= 2 && report.envelope_rate > 0.0) || overshoot) {
        report.regime = Regime::underdamped;
    } else if (report.zero_crossings <= 1) {
        report.regime = Regime::critically_damped;
    } else {
        report.regime = Regime::steady_state;
    }
    return report;
}

// ---------------------------------------------------------------------------

Matrix frequency_shifts(const Matrix& theta_dots, std::span<const double> omega) {
    if (theta_dots.cols() != omega.size()) throw ParameterError("frequency_shifts: dimension mismatch");
    Matrix out(theta_dots.rows(), theta_dots.cols());
    for (std::size_t r = 0; r < theta_dots.rows(); ++r)
        for (std::size_t i = 0; i < theta_dots.cols(); ++i) out(r, i) = theta_dots(r, i) - omega[i];
    return out;
}

Matrix frequency_shifts(const Matrix& theta_dots, const Matrix& omegas) {
    if (theta_dots.rows() != omegas.rows() || theta_dots.cols() != omegas.cols()) {
        throw ParameterError("frequency_shifts: dimension mismatch");
    }
    Matrix out(theta_dots.rows(), theta_dots.cols());
    for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] = theta_dots.data()[k] - omegas.data()[k];
    return out;
}

std::vector<double> rms_over_nodes(const Matrix& values) {
    std::vector<double> out(values.rows(), 0.0);
    if (values.cols() == 0) return out;
    for (std::size_t r = 0; r < values.rows(); ++r) {
        double acc = 0.0;
        for (double v : values.row(r)) acc += v * v;
        out[r] = std::sqrt(acc / static_cast<double>(values.cols()));
    }
    return out;
}

QoppaFit fit_qoppa(std::span<const double> delta_omega, std::span<const double> ds_dt, std::span<const double> times,
                   double t_start, double t_end) {
    check_aligned(delta_omega, times, "fit_qoppa");
    check_aligned(ds_dt, times, "fit_qoppa");
    if (!(t_end >= t_start)) throw ParameterError("fit window must have t_end >= t_start");
    if (times.empty() || t_start < times.front() || t_end > times.back()) {
        throw ParameterError("fit window must lie within the run");
    }
    double sxx = 0.0;
    double sxy = 0.0;
    double sy = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < t_start || times[k] > t_end) continue;
        sxx += ds_dt[k] * ds_dt[k];
        sxy += ds_dt[k] * delta_omega[k];
        sy += delta_omega[k];
        ++count;
    }
    if (count == 0) throw InsufficientDataError("no samples inside the fit window");
    if (sxx == 0.0) throw UndefinedError("qoppa fit undefined: dS/dt is identically zero on the window");

    QoppaFit fit;
    fit.t_start = t_start;
    fit.t_end = t_end;
    fit.qoppa = sxy / sxx;
    const double mean_y = sy / static_cast<double>(count);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < t_start || times[k] > t_end) continue;
        const double e = delta_omega[k] - fit.qoppa * ds_dt[k];
        ss_res += e * e;
        ss_tot += (delta_omega[k] - mean_y) * (delta_omega[k] - mean_y);
    }
    if (ss_tot > 0.0) {
        fit.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
    } else {
        fit.r_squared = ss_res == 0.0 ? 1.0 : 0.0;
    }
    return fit;
}

double wavelength_shift(double ds_dt, double qoppa) {
    const double drive = qoppa * ds_dt;
    if (drive == 0.0 || !std::isfinite(drive)) {
        throw UndefinedError("wavelength shift undefined: qoppa * dS/dt = " + std::to_string(drive));
    }
    return -(1.0 / (2.0 * std::numbers::pi)) / drive;
}

std::vector<TrajectoryPoint> config_trajectory(const Matrix& thetas, std::span<const double> color) {
    const std::size_t m = thetas.rows();
    const std::size_t n = thetas.cols();
    if (m < 2) throw InsufficientDataError("config_trajectory needs at least 2 steps");
    if (color.size() != m) throw ParameterError("config_trajectory: one color value per step required");
    const std::size_t dim = 2 * n;

    Eigen::MatrixXd x(m, dim);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            x(k, 2 * i) = std::cos(thetas(k, i));
            x(k, 2 * i + 1) = std::sin(thetas(k, i));
        }
    }
    x.rowwise() -= x.colwise().mean();

    // Scores on the two leading axes, via whichever Gram form is smaller.
    Eigen::MatrixXd scores(m, 2);
    if (dim <= m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
        const Eigen::MatrixXd& v = eig.eigenvectors();   // ascending eigenvalues
        for (int a = 0; a < 2; ++a) {
            const auto col = static_cast<Eigen::Index>(dim) - 1 - a;
            scores.col(a) = col >= 0 ? Eigen::VectorXd(x * v.col(col)) : Eigen::VectorXd::Zero(m);
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x * x.transpose());
        for (int a = 0; a < 2; ++a) {
            const auto col = static_cast<Eigen::Index>(m) - 1 - a;
            if (col < 0) {
                scores.col(a).setZero();
                continue;
            }
            const double lambda = std::max(0.0, eig.eigenvalues()(col));
            scores.col(a) = eig.eigenvectors().col(col) * std::sqrt(lambda);
        }
    }
    // Sign convention: the largest-magnitude score on each axis is positive.
    for (int a = 0; a < 2; ++a) {
        Eigen::Index idx = 0;
        scores.col(a).cwiseAbs().maxCoeff(&idx);
        if (scores(idx, a) < 0.0) scores.col(a) *= -1.0;
    }

    std::vector<TrajectoryPoint> points(m);
    for (std::size_t k = 0; k < m; ++k) {
        points[k] = {scores(static_cast<Eigen::Index>(k), 0), scores(static_cast<Eigen::Index>(k), 1), color[k]};
    }
    return points;
}

// ---------------------------------------------------------------------------

void finish_record(TrajectoryRecord& record) {
    record.action_series = accumulate_action(record.lagrangian_series, record.times);
    if (record.steps() >= 3) {
        record.action_derivative_series = action_derivative(record.action_series, record.times);
    } else {
        record.action_derivative_series = record.lagrangian_series;
    }
    record.freq_shift_series = frequency_shifts(record.theta_dots, record.omegas);
}

TrajectoryRecord record_trajectory(const Network& net, const PhaseState& init, const SimulationOptions& options,
                                   const RecordOptions& record_options, SimulationResult* result) {
    const std::size_t observed = record_options.observed_nodes == 0 ? net.size() : record_options.observed_nodes;
    if (observed > net.size()) throw ParameterError("observed_nodes exceeds network size");

    TrajectoryRecord rec;
    auto observe = [&](const PhaseState& state, std::span<const double> theta_dot, const Network& current) {
        rec.times.push_back(state.t);
        rec.thetas.append_row(state.theta);
        rec.theta_dots.append_row(theta_dot);
        rec.omegas.append_row(current.omega);
        const auto op = order_parameter(std::span<const double>(state.theta).first(observed));
        rec.r_series.push_back(op.r);
        rec.psi_series.push_back(op.psi);
        rec.lagrangian_series.push_back(lagrangian(state.theta, theta_dot, current));
    };
    auto sim = simulate(net, init, options, observe);
    finish_record(rec);
    if (result) *result = std::move(sim);
    return rec;
}

}  // namespace oscnet

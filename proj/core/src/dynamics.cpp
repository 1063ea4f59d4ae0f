#include "esparse/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <string>

#include "esparse/error.hpp"

namespace esparse::dynamics {

namespace {

double signum(double x) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

struct State {
    double q;
    double v;
};

State derivative(const DuffingParams& p, const State& s, double u) noexcept {
    return {s.v, acceleration(p, s.q, s.v, u)};
}

State axpy(const State& s, double h, const State& d) noexcept {
    return {s.q + h * d.q, s.v + h * d.v};
}

}  // namespace

void DuffingParams::validate() const {
    if (!(m > 0.0)) throw InvalidArgument("mass must be positive");
    if (!(k3 >= 0.0)) throw InvalidArgument("cubic stiffness must be non-negative");
    if (!(mu1 >= 0.0) || !(mu2 >= 0.0)) {
        throw InvalidArgument("friction coefficients must be non-negative");
    }
    if (!std::isfinite(c) || !std::isfinite(k)) {
        throw InvalidArgument("damping and stiffness must be finite");
    }
}

void TrackDesign::validate() const {
    if (!(k1 > 0.0)) throw InvalidArgument("track spring stiffness k1 must be positive");
    if (!(a > 0.0)) throw InvalidArgument("track curvature a must be positive");
    if (!(b >= 0.0)) throw InvalidArgument("track shift b must be non-negative");
    if (!(mu >= 0.0)) throw InvalidArgument("track friction coefficient must be non-negative");
}

Stiffness stiffness_from_track(const TrackDesign& design) {
    design.validate();
    return {4.0 * design.k1 * design.a * design.b, 4.0 * design.k1 * design.a * design.a};
}

Friction friction_from_track(const TrackDesign& design) {
    design.validate();
    return {2.0 * design.mu * design.k1 * design.b, 2.0 * design.mu * design.k1 * design.a};
}

DuffingParams params_from_track(const TrackDesign& design, double m, double c) {
    const auto stiffness = stiffness_from_track(design);
    const auto friction = friction_from_track(design);
    DuffingParams params{m, c, stiffness.k, stiffness.k3, friction.mu1, friction.mu2};
    params.validate();
    return params;
}

NormalizedModel normalized(const DuffingParams& params) {
    params.validate();
    return {params.c / params.m, params.k / params.m, params.k3 / params.m,
            params.mu1 / params.m, params.mu2 / params.m};
}

double acceleration(const DuffingParams& p, double q, double qdot, double zddot) noexcept {
    const double q2 = q * q;
    const double force = p.c * qdot + p.k * q + p.k3 * q2 * q + (p.mu1 + p.mu2 * q2) * signum(qdot);
    return -force / p.m - zddot;
}

std::vector<double> sample_times(std::size_t count, double dt) {
    std::vector<double> t(count);
    for (std::size_t i = 0; i < count; ++i) t[i] = static_cast<double>(i) * dt;
    return t;
}

std::vector<double> chirp_input(double f0, double f1, double duration, double dt,
                                double amplitude) {
    if (!(f0 > 0.0) || !(f1 > 0.0)) throw InvalidArgument("chirp frequencies must be positive");
    if (!(dt > 0.0)) throw InvalidArgument("sampling step must be positive");
    if (!(duration >= dt)) throw InvalidArgument("chirp duration must be at least one step");
    const auto count = static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
    const double sweep = (f1 - f0) / (2.0 * duration);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) * dt;
        out[i] = amplitude * std::cos(2.0 * std::numbers::pi * (f0 * t + sweep * t * t));
    }
    return out;
}

SignalSet simulate(const DuffingParams& params, std::span<const double> zddot,
                   const SimulationOptions& options) {
    params.validate();
    if (!(options.dt > 0.0)) throw InvalidArgument("sampling step must be positive");
    const std::size_t n = zddot.size();
    if (n < 2) throw InvalidArgument("simulation needs at least two input samples");

    SignalSet out;
    out.t = sample_times(n, options.dt);
    out.q.resize(n);
    out.qdot.resize(n);
    out.qddot.resize(n);
    out.zddot.assign(zddot.begin(), zddot.end());
    out.split = options.split;

    const double h = options.dt;
    State s{options.initial.q, options.initial.qdot};
    for (std::size_t i = 0; i < n; ++i) {
        const double bound = std::max(std::abs(s.q), std::abs(s.v));
        if (!(bound <= options.divergence_bound)) throw DivergedTrajectory(i, bound);
        out.q[i] = s.q;
        out.qdot[i] = s.v;
        out.qddot[i] = acceleration(params, s.q, s.v, zddot[i]);
        if (i + 1 == n) break;

        const double u = zddot[i];
        const State k1 = derivative(params, s, u);
        const State k2 = derivative(params, axpy(s, 0.5 * h, k1), u);
        const State k3 = derivative(params, axpy(s, 0.5 * h, k2), u);
        const State k4 = derivative(params, axpy(s, h, k3), u);
        s.q += h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
        s.v += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    }
    return out;
}

std::vector<double> add_noise(std::span<const double> column, double snr_db, Rng& rng) {
    std::vector<double> out(column.begin(), column.end());
    if (std::isinf(snr_db) && snr_db > 0.0) return out;
    if (column.empty()) throw ZeroSignalPower();
    const double mean =
        std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
    double power = 0.0;
    for (double v : column) power += (v - mean) * (v - mean);
    power /= static_cast<double>(column.size());
    if (!(power > 0.0)) throw ZeroSignalPower();

    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : out) v += noise(rng);
    return out;
}

std::vector<double> finite_diff(std::span<const double> column, double dt) {
    const std::size_t n = column.size();
    if (n < 3) throw InvalidArgument("finite differences need at least three samples");
    if (!(dt > 0.0)) throw InvalidArgument("sampling step must be positive");
    std::vector<double> out(n);
    const double scale = 1.0 / (2.0 * dt);
    out[0] = (-3.0 * column[0] + 4.0 * column[1] - column[2]) * scale;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (column[i + 1] - column[i - 1]) * scale;
    out[n - 1] = (3.0 * column[n - 1] - 4.0 * column[n - 2] + column[n - 3]) * scale;
    return out;
}

bool NoiseSpec::is_clean() const noexcept {
    return std::isinf(q) && std::isinf(qdot) && std::isinf(qddot) && std::isinf(zddot);
}

SignalSet add_noise(const SignalSet& signals, const NoiseSpec& noise, Rng& rng) {
    SignalSet out = signals;
    out.q = add_noise(signals.q, noise.q, rng);
    out.qdot = add_noise(signals.qdot, noise.qdot, rng);
    out.qddot = add_noise(signals.qddot, noise.qddot, rng);
    out.zddot = add_noise(signals.zddot, noise.zddot, rng);
    return out;
}

EnvelopePeak envelope_peak(const SignalSet& signals, double f0, double f1, double duration,
                           double lag) {
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < signals.size(); ++i) {
        const double v = std::abs(signals.q[i]);
        if (v > std::abs(signals.q[i - 1]) && v >= std::abs(signals.q[i + 1])) peaks.push_back(i);
    }
    EnvelopePeak result;
    if (peaks.empty()) return result;
    std::size_t top = 0;
    for (std::size_t p = 1; p < peaks.size(); ++p) {
        if (std::abs(signals.q[peaks[p]]) > std::abs(signals.q[peaks[top]])) top = p;
    }
    const std::size_t i = peaks[top];
    result.time = signals.t[i] - signals.t.front();
    result.frequency = f0 + (f1 - f0) * result.time / duration;
    result.value = std::abs(signals.q[i]);
    for (std::size_t p = top; p < peaks.size(); ++p) {
        if (signals.t[peaks[p]] >= signals.t[i] + lag) {
            const double later = std::abs(signals.q[peaks[p]]);
            result.drop_ratio = later > 0.0 ? result.value / later
                                            : std::numeric_limits<double>::infinity();
            break;
        }
    }
    return result;
}

double natural_frequency(const DuffingParams& params) {
    return std::sqrt(params.k / params.m) / (2.0 * std::numbers::pi);
}

double damping_ratio(const DuffingParams& params) {
    return params.c / (2.0 * std::sqrt(params.k * params.m));
}

double find_bifurcation_amplitude(const Scenario& scenario, const JumpCriteria& criteria) {
    const double fn = natural_frequency(scenario.params);
    const double shifted = fn * (1.0 + criteria.bandwidths * 2.0 * damping_ratio(scenario.params));
    for (double amplitude = 0.25; amplitude <= criteria.max_amplitude * (1.0 + 1e-12);
         amplitude *= std::sqrt(2.0)) {
        const auto input = chirp_input(scenario.f0, scenario.f1, scenario.duration,
                                       scenario.options.dt, amplitude);
        SimulationOptions options = scenario.options;
        options.split = 1;
        try {
            const auto response = simulate(scenario.params, input, options);
            const auto peak =
                envelope_peak(response, scenario.f0, scenario.f1, scenario.duration, criteria.lag);
            if (peak.frequency >= shifted && peak.time <= scenario.duration - criteria.lag &&
                peak.drop_ratio >= criteria.drop_ratio) {
                return amplitude;
            }
        } catch (const DivergedTrajectory&) {
            break;
        }
    }
    throw Error("no chirp amplitude up to " + std::to_string(criteria.max_amplitude) +
                " m/s^2 produces a visible jump");
}

double resolved_amplitude(const Scenario& scenario) {
    return scenario.amplitude > 0.0 ? scenario.amplitude : find_bifurcation_amplitude(scenario);
}

SignalSet run_scenario(const Scenario& scenario) {
    const double amplitude = resolved_amplitude(scenario);
    const auto input =
        chirp_input(scenario.f0, scenario.f1, scenario.duration, scenario.options.dt, amplitude);
    auto signals = simulate(scenario.params, input, scenario.options);
    signals.validate();
    return signals;
}

std::vector<std::pair<expr::Tree, double>> ground_truth_terms(const DuffingParams& params) {
    using expr::Op;
    using expr::Tree;
    const auto coeffs = normalized(params);
    const Tree q = Tree::variable(0);
    const Tree qdot = Tree::variable(1);
    const Tree zddot = Tree::variable(2);
    const Tree q2 = Tree::binary(Op::Times, q, q);
    std::vector<std::pair<Tree, double>> terms;
    if (coeffs.damping != 0.0) terms.emplace_back(qdot, -coeffs.damping);
    if (coeffs.linear != 0.0) terms.emplace_back(q, -coeffs.linear);
    if (coeffs.cubic != 0.0) terms.emplace_back(Tree::binary(Op::Times, q, q2), -coeffs.cubic);
    if (coeffs.coulomb != 0.0) terms.emplace_back(Tree::unary(Op::Sgn, qdot), -coeffs.coulomb);
    if (coeffs.quadratic != 0.0) {
        terms.emplace_back(Tree::binary(Op::Times, q2, Tree::unary(Op::Sgn, qdot)),
                           -coeffs.quadratic);
    }
    terms.emplace_back(zddot, -1.0);
    return terms;
}

}  // namespace esparse::dynamics

#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "esparse/expr.hpp"
#include "esparse/signals.hpp"

namespace esparse::dynamics {

// Ground-excited Duffing oscillator with optional Coulomb friction
//   m q'' = -c q' - k q - k3 q^3 - mu1 sgn(q') - mu2 q^2 sgn(q') - m z''
struct DuffingParams {
    double m = 0.49;     // kg
    double c = 1.8;      // N s/m
    double k = 487.0;    // N/m
    double k3 = 1.07e6;  // N/m^3
    double mu1 = 0.0;    // N
    double mu2 = 0.0;    // N/m^2

    void validate() const;
};

// Parabolic track f(x) = a x^2 + b pressed by springs of stiffness k1.
struct TrackDesign {
    double k1 = 16.7e3;  // N/m
    double a = 4.0;      // 1/m
    double b = 0.0;      // m
    double mu = 0.0;     // friction coefficient

    void validate() const;
};

struct Stiffness {
    double k;
    double k3;
};

struct Friction {
    double mu1;
    double mu2;
};

// k = 4 k1 a b, k3 = 4 k1 a^2
[[nodiscard]] Stiffness stiffness_from_track(const TrackDesign& design);
// mu1 = 2 mu k1 b, mu2 = 2 mu k1 a
[[nodiscard]] Friction friction_from_track(const TrackDesign& design);
// Full parameter set for a rig of mass m and viscous damping c.
[[nodiscard]] DuffingParams params_from_track(const TrackDesign& design, double m, double c);

// Coefficients of the normalised equation
//   q'' = -c/m q' - k/m q - k3/m q^3 - mu1/m sgn(q') - mu2/m q^2 sgn(q') - z''
struct NormalizedModel {
    double damping;    // c/m
    double linear;     // k/m
    double cubic;      // k3/m
    double coulomb;    // mu1/m
    double quadratic;  // mu2/m
};
[[nodiscard]] NormalizedModel normalized(const DuffingParams& params);

// Right-hand side of the acceleration equation.
[[nodiscard]] double acceleration(const DuffingParams& params, double q, double qdot,
                                  double zddot) noexcept;

// Linear sweep from f0 to f1 over `duration`, sampled every dt starting at
// t = 0. Produces floor(duration / dt) + 1 samples.
[[nodiscard]] std::vector<double> chirp_input(double f0, double f1, double duration, double dt,
                                              double amplitude);
[[nodiscard]] std::vector<double> sample_times(std::size_t count, double dt);

struct InitialState {
    double q = 0.0;
    double qdot = 0.0;
};

struct SimulationOptions {
    double dt = 0.488e-3;
    InitialState initial{};
    // Any |q| or |qdot| above this aborts with DivergedTrajectory.
    double divergence_bound = 1e3;
    std::size_t split = 0;  // 0 lets the caller fix it later; must be set before use
};

// Fixed-step RK4 with the input held constant over each step. qddot is the
// right-hand side evaluated on the stored states.
[[nodiscard]] SignalSet simulate(const DuffingParams& params, std::span<const double> zddot,
                                 const SimulationOptions& options);

// Adds N(0, P / 10^(snr/10)) noise, P = variance of the column. Infinite
// snr returns the column unchanged. Throws ZeroSignalPower on a constant
// column with finite snr.
[[nodiscard]] std::vector<double> add_noise(std::span<const double> column, double snr_db,
                                            Rng& rng);

// Central differences in the interior, second-order one-sided at the ends.
[[nodiscard]] std::vector<double> finite_diff(std::span<const double> column, double dt);

// Per-channel noise levels in dB; infinity leaves a channel clean.
struct NoiseSpec {
    static constexpr double kClean = std::numeric_limits<double>::infinity();
    double q = kClean;
    double qdot = kClean;
    double qddot = kClean;
    double zddot = kClean;

    [[nodiscard]] bool is_clean() const noexcept;
};

// Channels are perturbed in the order q, qdot, qddot, zddot from one stream.
[[nodiscard]] SignalSet add_noise(const SignalSet& signals, const NoiseSpec& noise, Rng& rng);

// Response envelope of an up-sweep, from the half-cycle peaks of |q|.
struct EnvelopePeak {
    double time = 0.0;       // s, time of the largest peak
    double frequency = 0.0;  // Hz, instantaneous sweep frequency at that time
    double value = 0.0;      // m
    double drop_ratio = 1.0; // largest peak / envelope `lag` seconds later
};

[[nodiscard]] EnvelopePeak envelope_peak(const SignalSet& signals, double f0, double f1,
                                         double duration, double lag = 1.0);

struct JumpCriteria {
    double drop_ratio = 2.0;
    double lag = 1.0;          // s
    double bandwidths = 2.0;   // required peak shift, in half-power bandwidths
    double max_amplitude = 256.0;
};

// Linear natural frequency sqrt(k/m) / 2 pi and damping ratio c / 2 sqrt(k m).
[[nodiscard]] double natural_frequency(const DuffingParams& params);
[[nodiscard]] double damping_ratio(const DuffingParams& params);

struct Scenario {
    DuffingParams params{};
    double f0 = 2.0;
    double f1 = 20.0;
    double duration = 40.0;
    double amplitude = 0.0;  // m/s^2; <= 0 triggers the bifurcation sweep
    SimulationOptions options{.dt = 0.488e-3, .initial = {}, .divergence_bound = 1e3, .split = 16000};
};

// Smallest amplitude on the grid 0.25 * sqrt(2)^i whose response shows the
// jump: the envelope peak sits at least `bandwidths` half-power bandwidths
// above the linear natural frequency, at least `lag` before the end of the
// record, and falls by `drop_ratio` within `lag`. Throws Error when no grid
// point does.
[[nodiscard]] double find_bifurcation_amplitude(const Scenario& scenario,
                                                const JumpCriteria& criteria = {});

// Simulates the scenario, resolving a non-positive amplitude with
// find_bifurcation_amplitude first.
[[nodiscard]] SignalSet run_scenario(const Scenario& scenario);
[[nodiscard]] double resolved_amplitude(const Scenario& scenario);

// True-term oracle: the normalized right-hand side as (tree, coefficient)
// pairs, skipping zero friction terms.
[[nodiscard]] std::vector<std::pair<expr::Tree, double>> ground_truth_terms(
    const DuffingParams& params);

}  // namespace esparse::dynamics

#pragma once

#include "qspde/coefficient.hpp"
#include "qspde/errors.hpp"
#include "qspde/grid.hpp"
#include "qspde/noise.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qspde {

enum class Scheme {
    f_imex,  ///< implicit conservative scheme for f = phi(v)/theta
    v_flux,  ///< finite-volume flux scheme for v with pointwise mollified noise
};
enum class VFluxMode { imex, explicit_euler };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

/// Initial data. Profiles for field "v": sine (m + a sin(2 pi k x)), bridge
/// (m + a times a zero-mean Brownian bridge), stationary (v_bar_m), constant
/// (m), csv (read from path; m is then taken from the file). For field "f"
/// the shape is added to z_m and v = phi^{-1}(f theta), so the mass is
/// whatever that profile carries.
struct InitialSpec {
    std::string profile = "sine";
    std::string field = "v";
    double amplitude = 1.0;
    int mode = 1;
    std::size_t kl_modes = 0;  ///< bridge profile; 0 means n/2
    std::string path;
};

struct SimConfig {
    std::size_t n = 256;
    double dt = 1e-4;
    double t_end = 1.0;
    Scheme scheme = Scheme::f_imex;
    VFluxMode v_flux_mode = VFluxMode::imex;
    double eps = 1e-3;
    std::uint64_t seed = 0;
    CoefficientFunction coeff = CoefficientFunction::linear();
    double m = 0.0;
    InitialSpec initial;
    std::size_t diagnostics_every = 1;
    std::size_t snapshot_every = 0;  ///< 0: only the first and last state
    double blowup_ceiling = 1e6;
};

/// Throws std::invalid_argument on inconsistent settings.
void validate(const SimConfig& config);

struct State {
    GridFunction v;
    GridFunction f;
};

struct Snapshot {
    double t;
    GridFunction v;
    GridFunction f;
};

struct Trajectory {
    // Scalar series, one entry per diagnostic time.
    std::vector<double> times;
    std::vector<double> mass;
    std::vector<double> energy;  ///< staggered discrete Phi(f)
    std::vector<double> hnorm;   ///< ||f - z_m|| in staggered H1_theta
    std::vector<double> f_min;
    std::vector<double> f_max;
    std::vector<double> v_dev;   ///< sup |v - v_bar_m|
    std::vector<Snapshot> snapshots;

    GridFunction theta = GridFunction::constant(GridFunction::min_size, 1.0);
    GridFunction xi = GridFunction::constant(GridFunction::min_size, 0.0);
    GridFunction v_bar = GridFunction::constant(GridFunction::min_size, 0.0);
    double mu = 0.0;
    double m = 0.0;
    double z_m = 0.0;
    std::size_t steps = 0;
    int max_newton_iterations = 0;
    bool peclet_ok = true;  ///< |mu| dx <= 2 min theta_{j+1/2}; required for the discrete max principle
};

/// Blow-up surrogate: the run exceeded the configured ceiling on sup |v|.
class BlowUpError : public NumericalError {
public:
    BlowUpError(const std::string& what, std::size_t step, Trajectory partial, State last_finite)
        : NumericalError(what, step), partial_(std::move(partial)), last_(std::move(last_finite)) {}
    const Trajectory& partial() const { return partial_; }
    const State& last_finite_state() const { return last_; }

private:
    Trajectory partial_;
    State last_;
};

/**
 * One time step of either scheme on fixed theta, mu and noise.
 *
 * f_imex: backward Euler for v in conservative form,
 *   v_{n+1} - v_n = dt D-( theta_{j+1/2} D+ f + mu (f_j + f_{j+1})/2 ),
 * with f the unknown and v = phi^{-1}(f theta). The nonlinear system is
 * solved by Newton's method whose first iterate is the frozen-coefficient
 * step. v is then updated from the converged fluxes, so mass is conserved up
 * to summation rounding, and f = phi(v)/theta.
 *
 * v_flux: v_{n+1} - v_n = dt D- F with
 *   F_{j+1/2} = D+ phi(v) + xi_{j+1/2} (phi_j + phi_{j+1})/2,
 * the diffusive part linearized implicitly (imex) or fully explicit.
 */
class Stepper {
public:
    Stepper(Scheme scheme, CoefficientFunction coeff, GridFunction theta, double mu, GridFunction xi, double dt,
            VFluxMode mode = VFluxMode::imex);

    State make_state(const GridFunction& v) const;
    /// Throws NumericalError (with step index) on solver failure or a
    /// non-finite result.
    State step(const State& s, std::size_t step_index = 0) const;

    bool peclet_ok() const { return peclet_ok_; }
    int last_newton_iterations() const { return last_iterations_; }
    const GridFunction& theta() const { return theta_; }
    double dt() const { return dt_; }

private:
    State step_f(const State& s, std::size_t step_index) const;
    State step_v(const State& s, std::size_t step_index) const;

    Scheme scheme_;
    CoefficientFunction coeff_;
    GridFunction theta_;
    GridFunction theta_half_;
    double mu_;
    GridFunction xi_half_;
    double dt_;
    VFluxMode mode_;
    bool peclet_ok_;
    mutable int last_iterations_ = 0;
};

State step_f(const State& s, const CoefficientFunction& coeff, const GridFunction& theta, double mu, double dt);
State step_v(const State& s, const CoefficientFunction& coeff, const GridFunction& theta, const GridFunction& xi,
             double dt, VFluxMode mode = VFluxMode::imex);

/// v(0) from the initial spec. theta is needed for the stationary and f-field
/// profiles.
GridFunction make_initial_v(const InitialSpec& spec, std::size_t n, double m, std::uint64_t seed,
                            const CoefficientFunction& coeff, const GridFunction& theta);

/// Runs the configured scheme on mollify(noise, eps): theta and mu from the
/// mollified integral, xi = mollified_xi(noise, eps).
Trajectory evolve(const SimConfig& config, const NoiseSample& noise);

/// Same with explicit initial data (config.initial is ignored).
Trajectory evolve(const SimConfig& config, const NoiseSample& noise, const GridFunction& v0);

struct MaxPrincipleReport {
    bool ok;
    double worst_violation;  ///< largest excursion outside [min f(0), max f(0)], 0 if none
};
/// Scans the recorded f_min/f_max series and all snapshots.
MaxPrincipleReport max_principle_check(const Trajectory& traj, double tol = 1e-8);

/// Exponential decay of the energy after the initial layer.
struct DecayFit {
    double slope;       ///< least-squares slope of log Phi over the window
    double rate_bound;  ///< c* of the energy estimate for this theta and mu
    double t_start;
    double t_stop;      ///< last time with Phi above the rounding floor
    std::size_t points;
    /// sqrt(2 (1 + C_eq^2) Phi(t_start)) e^{c* t_start / 2}, so that the
    /// envelope C_fit e^{-c* t/2} passes through the first fitted point.
    double C_fit;
    double worst_envelope_ratio;  ///< max over t >= t_start of hnorm / envelope
    bool envelope_ok;
};

/// Fits the recorded energy series on [t_layer, t_stop]. Phi values below
/// relative_floor * Phi(t_layer) are treated as rounding and excluded.
DecayFit fit_decay(const Trajectory& traj, const CoefficientFunction& coeff, double t_layer = 1e-2,
                   double relative_floor = 1e-16);

/// ||S_dt(v) - v||_inf / dt for one step of the given stepper.
double one_step_truncation(const Stepper& stepper, const GridFunction& v);

// ---------------------------------------------------------------------------
// Integrated solution

struct USeries {
    std::vector<double> times;
    std::vector<GridFunction> u;
    std::vector<double> noise_term;  ///< int_0^t int chi(v) xi, trapezoid over snapshots
    bool density_ok = true;          ///< every-other-snapshot noise term within 1% (or 1e-12)
    double density_change = 0.0;
    std::vector<double> residual_times;
    std::vector<double> residual;  ///< sup |u_t - phi'(u') u'' - chi(u') xi| at interior snapshots
};

/// u(t,x) = int_0^x v + int u0 - int (1-y) v(y) dy + int_0^t ds int chi(v) xi.
/// u0 must be consistent with the first snapshot (v(0) = u0').
USeries recover_u(const Trajectory& traj, const GridFunction& u0, const CoefficientFunction& phi,
                  const ScalarFunction& chi, const GridFunction& xi);

struct DriftEstimate {
    double slope;      ///< least-squares slope of the spatial mean of u over the window
    double predicted;  ///< z_0 mu
    std::size_t points;
};
DriftEstimate drift_estimate(const USeries& u, double t0, double t1, double predicted);

// ---------------------------------------------------------------------------
// Initial layer

struct LayerProbeConfig {
    std::vector<std::size_t> grids{256, 512, 1024};
    double delta = 1e-3;
    std::size_t layer_steps = 4;  ///< report at t = 0, delta, ..., layer_steps * delta
    double dt = 1e-5;
    double eps = 1e-3;
    std::uint64_t seed = 0;
    std::size_t noise_kl_modes = 64;
    double amplitude = 1.0;
    CoefficientFunction coeff = CoefficientFunction::linear();
};

struct LayerProbeReport {
    std::vector<double> times;
    std::vector<std::size_t> grids;
    std::vector<std::vector<double>> h1;      ///< [grid][time], staggered unweighted H1 of f
    std::vector<std::vector<double>> energy;  ///< [grid][time]
    /// h1 on the finest grid over h1 on the coarsest, per time.
    std::vector<double> ratio;
};

/// f(0) = 1 + amplitude times a Brownian bridge path (K = n/2 modes, nested
/// across grids); theta comes from a mollified noise sample with a fixed number
/// of modes.
LayerProbeReport initial_layer_probe(const LayerProbeConfig& config);

}  // namespace qspde

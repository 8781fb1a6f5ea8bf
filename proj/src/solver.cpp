#include "qspde/solver.hpp"

#include "qspde/energy.hpp"
#include "qspde/stationary.hpp"
#include "tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qspde {
namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string to_string(Scheme s) {
    return s == Scheme::f_imex ? "f_imex" : "v_flux";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "f_imex") return Scheme::f_imex;
    if (s == "v_flux") return Scheme::v_flux;
    throw std::invalid_argument("unknown scheme '" + s + "' (expected f_imex or v_flux)");
}

void validate(const SimConfig& c) {
    if (c.n < GridFunction::min_size) throw std::invalid_argument("config: n must be at least 8");
    if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw std::invalid_argument("config: dt must be positive");
    if (!(c.t_end >= c.dt) || !std::isfinite(c.t_end)) throw std::invalid_argument("config: t_end must be >= dt");
    if (!(c.eps >= 0.0)) throw std::invalid_argument("config: eps must be nonnegative");
    if (c.diagnostics_every == 0) throw std::invalid_argument("config: diagnostics_every must be positive");
    if (!(c.blowup_ceiling > 0.0)) throw std::invalid_argument("config: blowup_ceiling must be positive");
    const double ratio = c.t_end / c.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) {
        throw std::invalid_argument("config: t_end must be an integer multiple of dt");
    }
}

// ---------------------------------------------------------------------------

Stepper::Stepper(Scheme scheme, CoefficientFunction coeff, GridFunction theta, double mu, GridFunction xi,
                 double dt, VFluxMode mode)
    : scheme_(scheme),
      coeff_(std::move(coeff)),
      theta_(std::move(theta)),
      theta_half_(half_node_average(theta_)),
      mu_(mu),
      xi_half_(spectral_half_shift(xi)),
      dt_(dt),
      mode_(mode) {
    require_same_grid(theta_, xi, "Stepper");
    require_positive(theta_, "Stepper");
    if (!(dt_ > 0.0)) throw std::invalid_argument("Stepper: dt must be positive");
    peclet_ok_ = std::abs(mu_) * theta_.dx() <= 2.0 * theta_half_.min();
    if (scheme_ == Scheme::v_flux && mode_ == VFluxMode::explicit_euler) {
        const double dx = theta_.dx();
        const double limit = dx * dx / (2.0 * coeff_.c_plus());
        if (dt_ > limit) {
            throw std::invalid_argument("Stepper: explicit step dt = " + format_double(dt_) +
                                        " violates dt <= dx^2/(2 c_plus) = " + format_double(limit));
        }
    }
}

State Stepper::make_state(const GridFunction& v) const {
    require_same_grid(v, theta_, "make_state");
    return {v, coeff_.apply(v) / theta_};
}

State Stepper::step(const State& s, std::size_t step_index) const {
    return scheme_ == Scheme::f_imex ? step_f(s, step_index) : step_v(s, step_index);
}

State Stepper::step_f(const State& s, std::size_t step_index) const {
    const std::size_t n = theta_.size();
    const double inv_dx = static_cast<double>(n);
    const double inv_dx2 = inv_dx * inv_dx;
    const auto& a = theta_half_.vector();
    const auto& th = theta_.vector();
    const std::vector<double>& vn = s.v.vector();

    // Divergence of G_{j+1/2} = a_{j+1/2} D+ f + mu (f_j + f_{j+1})/2.
    const auto divergence = [&](const std::vector<double>& f) {
        std::vector<double> g(n), d(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double fp = f[(j + 1) % n];
            g[j] = a[j] * (fp - f[j]) * inv_dx + 0.5 * mu_ * (f[j] + fp);
        }
        for (std::size_t j = 0; j < n; ++j) d[j] = (g[j] - g[(j + n - 1) % n]) * inv_dx;
        return d;
    };
    const auto residual = [&](const std::vector<double>& v, const std::vector<double>& f) {
        const std::vector<double> d = divergence(f);
        std::vector<double> r(n);
        for (std::size_t j = 0; j < n; ++j) r[j] = v[j] - vn[j] - dt_ * d[j];
        return r;
    };
    const auto invert = [&](const std::vector<double>& f, const std::vector<double>& guess) {
        std::vector<double> v(n);
        for (std::size_t j = 0; j < n; ++j) v[j] = coeff_.inverse(f[j] * th[j], guess[j]);
        return v;
    };

    std::vector<double> f = s.f.vector();
    std::vector<double> v = vn;
    std::vector<double> r = residual(v, f);
    double rnorm = max_abs(r);
    const double tol = 1e-13 * (1.0 + max_abs(vn));

    // Off-diagonal entries do not depend on the iterate.
    std::vector<double> lower(n), upper(n), diag(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double am = a[(j + n - 1) % n];
        upper[j] = -dt_ * (a[j] * inv_dx2 + 0.5 * mu_ * inv_dx);
        lower[j] = -dt_ * (am * inv_dx2 - 0.5 * mu_ * inv_dx);
    }

    int it = 0;
    constexpr int max_iterations = 30;
    while (rnorm > tol) {
        if (++it > max_iterations) {
            throw NumericalError("f_imex: Newton did not converge, residual " + format_double(rnorm), step_index);
        }
        for (std::size_t j = 0; j < n; ++j) {
            diag[j] = th[j] / coeff_.dphi(v[j]) + dt_ * (a[j] + a[(j + n - 1) % n]) * inv_dx2;
        }
        std::vector<double> rhs(n);
        for (std::size_t j = 0; j < n; ++j) rhs[j] = -r[j];
        const std::vector<double> delta = detail::solve_cyclic_tridiagonal(lower, diag, upper, rhs);
        if (!all_finite(delta)) throw NumericalError("f_imex: non-finite Newton update", step_index);

        double lambda = 1.0;
        std::vector<double> f_try(n), v_try, r_try;
        double rtry = 0.0;
        for (int half = 0; half < 20; ++half) {
            for (std::size_t j = 0; j < n; ++j) f_try[j] = f[j] + lambda * delta[j];
            v_try = invert(f_try, v);
            r_try = residual(v_try, f_try);
            rtry = max_abs(r_try);
            if (rtry < rnorm || rtry <= 10.0 * tol) break;
            lambda *= 0.5;
        }
        const double step_size = lambda * max_abs(delta);
        f = std::move(f_try);
        v = std::move(v_try);
        r = std::move(r_try);
        rnorm = rtry;
        // Further iterations cannot beat rounding once the update is at ulp level.
        if (step_size <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + max_abs(f))) break;
    }
    last_iterations_ = it;

    const std::vector<double> d = divergence(f);
    std::vector<double> v_new(n);
    for (std::size_t j = 0; j < n; ++j) v_new[j] = vn[j] + dt_ * d[j];
    if (!all_finite(v_new)) throw NumericalError("f_imex: non-finite state", step_index);
    GridFunction vg(std::move(v_new));
    GridFunction fg = coeff_.apply(vg) / theta_;
    return {std::move(vg), std::move(fg)};
}

State Stepper::step_v(const State& s, std::size_t step_index) const {
    const std::size_t n = theta_.size();
    const double inv_dx = static_cast<double>(n);
    const double inv_dx2 = inv_dx * inv_dx;
    const std::vector<double>& v = s.v.vector();
    const auto& xh = xi_half_.vector();

    std::vector<double> phi(n), flux(n);
    for (std::size_t j = 0; j < n; ++j) phi[j] = coeff_.phi(v[j]);
    for (std::size_t j = 0; j < n; ++j) {
        const double pp = phi[(j + 1) % n];
        flux[j] = (pp - phi[j]) * inv_dx + 0.5 * xh[j] * (phi[j] + pp);
    }

    if (mode_ == VFluxMode::imex) {
        std::vector<double> dphi(n), lower(n), diag(n), upper(n), rhs(n);
        for (std::size_t j = 0; j < n; ++j) dphi[j] = coeff_.dphi(v[j]);
        for (std::size_t j = 0; j < n; ++j) {
            diag[j] = 1.0 + 2.0 * dt_ * dphi[j] * inv_dx2;
            lower[j] = -dt_ * dphi[(j + n - 1) % n] * inv_dx2;
            upper[j] = -dt_ * dphi[(j + 1) % n] * inv_dx2;
            rhs[j] = dt_ * (flux[j] - flux[(j + n - 1) % n]) * inv_dx;
        }
        const std::vector<double> delta = detail::solve_cyclic_tridiagonal(lower, diag, upper, rhs);
        // Fold the implicit correction back into the fluxes so the update
        // telescopes exactly.
        for (std::size_t j = 0; j < n; ++j) {
            flux[j] += (dphi[(j + 1) % n] * delta[(j + 1) % n] - dphi[j] * delta[j]) * inv_dx;
        }
    }

    std::vector<double> v_new(n);
    for (std::size_t j = 0; j < n; ++j) v_new[j] = v[j] + dt_ * (flux[j] - flux[(j + n - 1) % n]) * inv_dx;
    if (!all_finite(v_new)) throw NumericalError("v_flux: non-finite state", step_index);
    last_iterations_ = 0;
    GridFunction vg(std::move(v_new));
    GridFunction fg = coeff_.apply(vg) / theta_;
    return {std::move(vg), std::move(fg)};
}

State step_f(const State& s, const CoefficientFunction& coeff, const GridFunction& theta, double mu, double dt) {
    return Stepper(Scheme::f_imex, coeff, theta, mu, GridFunction::constant(theta.size(), 0.0), dt).step(s);
}

State step_v(const State& s, const CoefficientFunction& coeff, const GridFunction& theta, const GridFunction& xi,
             double dt, VFluxMode mode) {
    return Stepper(Scheme::v_flux, coeff, theta, 0.0, xi, dt, mode).step(s);
}

double one_step_truncation(const Stepper& stepper, const GridFunction& v) {
    const State s = stepper.make_state(v);
    const State next = stepper.step(s);
    return linf_norm(next.v - v) / stepper.dt();
}

// ---------------------------------------------------------------------------

GridFunction make_initial_v(const InitialSpec& spec, std::size_t n, double m, std::uint64_t seed,
                            const CoefficientFunction& coeff, const GridFunction& theta) {
    if (spec.field != "v" && spec.field != "f") {
        throw std::invalid_argument("initial: field must be 'v' or 'f', got '" + spec.field + "'");
    }
    if (spec.profile == "csv") {
        GridFunction v = read_csv(std::filesystem::path(spec.path));
        if (v.size() != n) throw std::invalid_argument("initial: csv has " + std::to_string(v.size()) + " points, expected " + std::to_string(n));
        return spec.field == "v" ? v : coeff.apply_inverse(v * theta);
    }
    if (spec.profile == "stationary") {
        const double z = solve_zm(coeff, theta, m);
        return stationary_profile(coeff, theta, z);
    }

    GridFunction shape = GridFunction::constant(n, 0.0);
    if (spec.profile == "sine") {
        const int k = spec.mode;
        shape = GridFunction::sample(n, [k](double x) { return std::sin(2.0 * std::numbers::pi * k * x); });
    } else if (spec.profile == "bridge") {
        const std::size_t kl = spec.kl_modes == 0 ? n / 2 : spec.kl_modes;
        const GridFunction b = sample_bridge(derive_seed(seed, stream::initial_profile), n, kl).eta();
        shape = b - integrate(b);
    } else if (spec.profile != "constant") {
        throw std::invalid_argument("initial: unknown profile '" + spec.profile + "'");
    }
    if (spec.field == "v") return shape * spec.amplitude + m;
    const double z = solve_zm(coeff, theta, m);
    return coeff.apply_inverse((shape * spec.amplitude + z) * theta);
}

namespace {

struct Recorder {
    const SimConfig& config;
    const GridFunction& theta;
    const GridFunction& v_bar;
    double z;
    Trajectory& traj;

    void scalars(double t, const State& s) {
        traj.times.push_back(t);
        traj.mass.push_back(integrate(s.v));
        traj.energy.push_back(energy(s.f, theta, Gradient::staggered));
        traj.hnorm.push_back(h1_norm(s.f - z, theta, Gradient::staggered));
        traj.f_min.push_back(s.f.min());
        traj.f_max.push_back(s.f.max());
        traj.v_dev.push_back(linf_norm(s.v - v_bar));
    }
    void snapshot(double t, const State& s) { traj.snapshots.push_back({t, s.v, s.f}); }
};

}  // namespace

Trajectory evolve(const SimConfig& config, const NoiseSample& noise) {
    validate(config);
    if (noise.size() != config.n) throw std::invalid_argument("evolve: noise grid does not match config.n");
    const NoiseSample smooth = config.eps > 0.0 ? mollify(noise, config.eps) : noise;
    const ThetaResult th = build_theta(smooth);
    const GridFunction v0 = make_initial_v(config.initial, config.n, config.m, config.seed, config.coeff, th.theta);
    return evolve(config, noise, v0);
}

Trajectory evolve(const SimConfig& config, const NoiseSample& noise, const GridFunction& v0) {
    validate(config);
    if (noise.size() != config.n || v0.size() != config.n) {
        throw std::invalid_argument("evolve: grid sizes do not match config.n");
    }
    const NoiseSample smooth = config.eps > 0.0 ? mollify(noise, config.eps) : noise;
    ThetaResult th = build_theta(smooth);
    GridFunction xi = mollified_xi(noise, config.eps);

    Trajectory traj;
    traj.theta = th.theta;
    traj.mu = th.mu;
    traj.xi = xi;
    traj.m = integrate(v0);
    traj.z_m = solve_zm(config.coeff, th.theta, traj.m);
    traj.v_bar = stationary_profile(config.coeff, th.theta, traj.z_m);

    const Stepper stepper(config.scheme, config.coeff, th.theta, th.mu, xi, config.dt, config.v_flux_mode);
    traj.peclet_ok = stepper.peclet_ok();

    const auto steps = static_cast<std::size_t>(std::llround(config.t_end / config.dt));
    Recorder rec{config, traj.theta, traj.v_bar, traj.z_m, traj};
    State s = stepper.make_state(v0);
    rec.scalars(0.0, s);
    rec.snapshot(0.0, s);

    for (std::size_t k = 1; k <= steps; ++k) {
        State next = stepper.step(s, k);
        traj.max_newton_iterations = std::max(traj.max_newton_iterations, stepper.last_newton_iterations());
        if (linf_norm(next.v) > config.blowup_ceiling) {
            traj.steps = k - 1;
            throw BlowUpError("sup |v| exceeded the blow-up ceiling " + format_double(config.blowup_ceiling), k,
                              std::move(traj), std::move(s));
        }
        s = std::move(next);
        const double t = static_cast<double>(k) * config.dt;
        if (k % config.diagnostics_every == 0 || k == steps) rec.scalars(t, s);
        if ((config.snapshot_every != 0 && k % config.snapshot_every == 0) || k == steps) rec.snapshot(t, s);
    }
    traj.steps = steps;
    return traj;
}

MaxPrincipleReport max_principle_check(const Trajectory& traj, double tol) {
    if (traj.f_min.empty()) return {true, 0.0};
    const double lo = traj.f_min.front();
    const double hi = traj.f_max.front();
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.f_min.size(); ++i) {
        worst = std::max({worst, lo - traj.f_min[i], traj.f_max[i] - hi});
    }
    for (const Snapshot& s : traj.snapshots) worst = std::max({worst, lo - s.f.min(), s.f.max() - hi});
    return {worst <= tol, worst};
}

DecayFit fit_decay(const Trajectory& traj, const CoefficientFunction& coeff, double t_layer, double relative_floor) {
    const auto first = std::find_if(traj.times.begin(), traj.times.end(), [&](double t) { return t >= t_layer; });
    if (first == traj.times.end()) throw std::invalid_argument("fit_decay: t_layer beyond the recorded times");
    const auto i0 = static_cast<std::size_t>(first - traj.times.begin());
    const double phi0 = traj.energy[i0];
    const double floor = relative_floor * phi0;

    DecayFit fit{};
    fit.t_start = traj.times[i0];
    fit.t_stop = fit.t_start;
    fit.rate_bound = energy_diagnostics(traj.snapshots.front().f, traj.theta, coeff, traj.mu).c_star;

    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t i = i0; i < traj.times.size() && traj.energy[i] > floor; ++i) {
        const double t = traj.times[i];
        const double y = std::log(traj.energy[i]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++fit.points;
        fit.t_stop = t;
    }
    const double c = static_cast<double>(fit.points);
    fit.slope = fit.points >= 2 ? (c * sty - st * sy) / (c * stt - st * st) : std::numeric_limits<double>::quiet_NaN();

    const double ceq = norm_equivalence_constant(traj.theta);
    fit.C_fit = std::sqrt(2.0 * (1.0 + ceq * ceq) * phi0) * std::exp(0.5 * fit.rate_bound * fit.t_start);
    for (std::size_t i = i0; i < traj.times.size(); ++i) {
        const double envelope = fit.C_fit * std::exp(-0.5 * fit.rate_bound * traj.times[i]);
        fit.worst_envelope_ratio = std::max(fit.worst_envelope_ratio, traj.hnorm[i] / envelope);
    }
    fit.envelope_ok = fit.worst_envelope_ratio <= 1.0;
    return fit;
}

// ---------------------------------------------------------------------------

USeries recover_u(const Trajectory& traj, const GridFunction& u0, const CoefficientFunction& phi,
                  const ScalarFunction& chi, const GridFunction& xi) {
    if (traj.snapshots.empty()) throw std::invalid_argument("recover_u: trajectory has no snapshots");
    require_same_grid(u0, xi, "recover_u");
    const double u0_mean = integrate(u0);
    const GridFunction x = GridFunction::sample(u0.size(), [](double y) { return y; });

    USeries out;
    std::vector<double> q;  // int chi(v) xi at each snapshot
    double noise_term = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const Snapshot& s = traj.snapshots[k];
        require_same_grid(s.v, u0, "recover_u");
        q.push_back(integrate(s.v.map(chi) * xi));
        if (k > 0) noise_term += 0.5 * (s.t - traj.snapshots[k - 1].t) * (q[k] + q[k - 1]);
        const GridFunction a1 = antiderivative(s.v);
        const double m = integrate(s.v);
        // int (1-y) v dy = int_0^1 A1, with A1 = m x + periodic part.
        const double a3 = 0.5 * m + integrate(a1 - m * x);
        out.times.push_back(s.t);
        out.u.push_back(a1 + (u0_mean - a3 + noise_term));
        out.noise_term.push_back(noise_term);
    }

    // Snapshot-density check: trapezoid over every other snapshot.
    const std::size_t last_even = (traj.snapshots.size() - 1) / 2 * 2;
    if (last_even >= 4) {
        double coarse = 0.0;
        for (std::size_t k = 2; k <= last_even; k += 2) {
            coarse += 0.5 * (traj.snapshots[k].t - traj.snapshots[k - 2].t) * (q[k] + q[k - 2]);
        }
        const double fine = out.noise_term[last_even];
        out.density_change = std::abs(coarse - fine);
        out.density_ok = out.density_change <= std::max(0.01 * std::abs(fine), 1e-12);
    } else {
        out.density_ok = false;
        out.density_change = std::numeric_limits<double>::infinity();
    }

    for (std::size_t k = 1; k + 1 < out.u.size(); ++k) {
        const double m = integrate(traj.snapshots[k].v);
        const GridFunction periodic = out.u[k] - m * x;
        const GridFunction ux = differentiate(periodic) + m;
        const GridFunction uxx = differentiate(periodic, 2);
        const GridFunction ut = (out.u[k + 1] - out.u[k - 1]) * (1.0 / (out.times[k + 1] - out.times[k - 1]));
        const GridFunction rhs = phi.apply_derivative(ux) * uxx + ux.map(chi) * xi;
        out.residual_times.push_back(out.times[k]);
        out.residual.push_back(linf_norm(ut - rhs));
    }
    return out;
}

DriftEstimate drift_estimate(const USeries& u, double t0, double t1, double predicted) {
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < u.times.size(); ++k) {
        const double t = u.times[k];
        if (t < t0 || t > t1) continue;
        const double y = integrate(u.u[k]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++count;
    }
    if (count < 2) throw std::invalid_argument("drift_estimate: fewer than two snapshots in the window");
    const double c = static_cast<double>(count);
    const double denom = c * stt - st * st;
    if (!(denom > 0.0)) throw std::invalid_argument("drift_estimate: degenerate window");
    return {(c * sty - st * sy) / denom, predicted, count};
}

// ---------------------------------------------------------------------------

LayerProbeReport initial_layer_probe(const LayerProbeConfig& config) {
    if (config.grids.size() < 2) throw std::invalid_argument("initial_layer_probe: need at least two grids");
    if (!(config.delta > 0.0) || !(config.dt > 0.0)) throw std::invalid_argument("initial_layer_probe: delta and dt must be positive");
    const auto per_delta = static_cast<std::size_t>(std::llround(config.delta / config.dt));
    if (per_delta == 0) throw std::invalid_argument("initial_layer_probe: delta must be at least dt");

    LayerProbeReport report;
    report.grids = config.grids;
    for (std::size_t i = 0; i <= config.layer_steps; ++i) report.times.push_back(static_cast<double>(i) * config.delta);

    for (std::size_t n : config.grids) {
        const NoiseSample noise = mollify(sample_bridge(config.seed, n, config.noise_kl_modes), config.eps);
        const ThetaResult th = build_theta(noise);
        const GridFunction path = sample_bridge(derive_seed(config.seed, stream::initial_profile), n, n / 2).eta();
        const GridFunction f0 = path * config.amplitude + 1.0;
        const Stepper stepper(Scheme::f_imex, config.coeff, th.theta, th.mu, GridFunction::constant(n, 0.0), config.dt);
        State s = stepper.make_state(config.coeff.apply_inverse(f0 * th.theta));

        std::vector<double> h1, en;
        h1.push_back(h1_norm(s.f, Gradient::staggered));
        en.push_back(energy(s.f, th.theta, Gradient::staggered));
        std::size_t k = 0;
        for (std::size_t i = 1; i <= config.layer_steps; ++i) {
            for (std::size_t j = 0; j < per_delta; ++j) s = stepper.step(s, ++k);
            h1.push_back(h1_norm(s.f, Gradient::staggered));
            en.push_back(energy(s.f, th.theta, Gradient::staggered));
        }
        report.h1.push_back(std::move(h1));
        report.energy.push_back(std::move(en));
    }
    for (std::size_t i = 0; i < report.times.size(); ++i) report.ratio.push_back(report.h1.back()[i] / report.h1.front()[i]);
    return report;
}

}  // namespace qspde

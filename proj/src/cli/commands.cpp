#include "internal.hpp"

#include "qspde/energy.hpp"
#include "qspde/noise.hpp"
#include "qspde/stationary.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace qspde::cli::detail {
namespace {

CoefficientFunction coefficient_from(const Json& c) {
    const auto kind = c["kind"].get<std::string>();
    if (kind == "linear") return CoefficientFunction::linear(c["slope"].get<double>(), c["offset"].get<double>());
    if (kind == "sine") return CoefficientFunction::sine(c["amplitude"].get<double>(), c["offset"].get<double>());
    throw ConfigError("config.coefficient.kind must be 'linear' or 'sine', got '" + kind + "'");
}

NoiseSample noise_from(const Json& c) {
    const auto n = c["n"].get<std::size_t>();
    const Json& nz = c["noise"];
    const auto source = nz["source"].get<std::string>();
    const double sigma = nz["sigma"].get<double>();
    if (source == "zero") return with_drift(zero_noise(n), sigma);
    if (source != "bridge") throw ConfigError("config.noise.source must be 'bridge' or 'zero', got '" + source + "'");
    const auto k = nz["kl_modes"].get<std::size_t>();
    return with_drift(sample_bridge(c["seed"].get<std::uint64_t>(), n, k == 0 ? n / 2 : k), sigma);
}

SimConfig sim_from(const Json& c, double eps) {
    SimConfig s;
    s.n = c["n"].get<std::size_t>();
    s.dt = c["dt"].get<double>();
    s.t_end = c["t_end"].get<double>();
    s.scheme = scheme_from_string(c["scheme"].get<std::string>());
    const auto mode = c["v_flux_mode"].get<std::string>();
    if (mode != "imex" && mode != "explicit") {
        throw ConfigError("config.v_flux_mode must be 'imex' or 'explicit', got '" + mode + "'");
    }
    s.v_flux_mode = mode == "imex" ? VFluxMode::imex : VFluxMode::explicit_euler;
    s.eps = eps;
    s.seed = c["seed"].get<std::uint64_t>();
    s.coeff = coefficient_from(c["coefficient"]);
    s.m = c["m"].get<double>();
    const Json& in = c["initial"];
    s.initial.profile = in["profile"].get<std::string>();
    s.initial.field = in["field"].get<std::string>();
    s.initial.amplitude = in["amplitude"].get<double>();
    s.initial.mode = in["mode"].get<int>();
    s.initial.kl_modes = in["kl_modes"].get<std::size_t>();
    s.initial.path = in["path"].get<std::string>();
    s.diagnostics_every = c["diagnostics_every"].get<std::size_t>();
    s.snapshot_every = c["snapshot_every"].get<std::size_t>();
    s.blowup_ceiling = c["blowup_ceiling"].get<double>();
    validate(s);
    return s;
}

std::string snapshot_format(const Json& c) {
    const auto f = c["snapshot_format"].get<std::string>();
    if (f != "csv" && f != "binary") throw ConfigError("config.snapshot_format must be 'csv' or 'binary'");
    return f;
}

void write_grid(Context& ctx, const std::string& stem, const GridFunction& g, const std::string& format) {
    if (format == "binary") {
        write_binary(ctx.artifact(stem + ".bin"), g);
    } else {
        write_csv(ctx.artifact(stem + ".csv"), g);
    }
}

void write_series(Context& ctx, const std::string& name, const Trajectory& t) {
    std::ofstream os(ctx.artifact(name));
    os << "t,mass,energy,hnorm,f_min,f_max,v_dev\n";
    for (std::size_t i = 0; i < t.times.size(); ++i) {
        os << format_double(t.times[i]) << ',' << format_double(t.mass[i]) << ',' << format_double(t.energy[i])
           << ',' << format_double(t.hnorm[i]) << ',' << format_double(t.f_min[i]) << ','
           << format_double(t.f_max[i]) << ',' << format_double(t.v_dev[i]) << '\n';
    }
}

void write_trajectory(Context& ctx, const std::string& prefix, const Trajectory& t, const std::string& format) {
    write_series(ctx, prefix + "series.csv", t);
    write_csv(ctx.artifact(prefix + "theta.csv"), t.theta);
    write_csv(ctx.artifact(prefix + "xi.csv"), t.xi);
    write_csv(ctx.artifact(prefix + "v_bar.csv"), t.v_bar);
    for (const Snapshot& s : t.snapshots) {
        write_grid(ctx, prefix + "snapshots/v_t=" + format_double(s.t), s.v, format);
        write_grid(ctx, prefix + "snapshots/f_t=" + format_double(s.t), s.f, format);
    }
}

Json trajectory_summary(const Trajectory& t) {
    return Json{
        {"t", t.times.back()},
        {"steps", t.steps},
        {"mass", t.mass.back()},
        {"m", t.m},
        {"mu", t.mu},
        {"z_m", t.z_m},
        {"energy", t.energy.back()},
        {"hnorm", t.hnorm.back()},
        {"v_dev", t.v_dev.back()},
        {"max_newton_iterations", t.max_newton_iterations},
        {"peclet_ok", t.peclet_ok},
    };
}

double worst_mass_error(const Trajectory& t) {
    double w = 0.0;
    for (double mass : t.mass) w = std::max(w, std::abs(mass - t.m));
    return w;
}

double worst_energy_increase(const Trajectory& t) {
    double w = 0.0;
    for (std::size_t i = 1; i < t.energy.size(); ++i) w = std::max(w, t.energy[i] - t.energy[i - 1]);
    return w;
}

std::string fmt(double v) { return format_double(v); }

void trajectory_checks(Report& r, const std::string& label, const Trajectory& t) {
    const double mass = worst_mass_error(t);
    r.check(label + "mass conservation", mass <= 1e-10, "max |mass - m| = " + fmt(mass) + " (tolerance 1e-10)");
    const MaxPrincipleReport mp = max_principle_check(t);
    r.check(label + "maximum principle", mp.ok, "worst excursion " + fmt(mp.worst_violation) + " (tolerance 1e-8)");
    if (t.mu == 0.0) {
        const double inc = worst_energy_increase(t);
        r.check(label + "energy nonincreasing", inc <= 1e-10, "largest step increase " + fmt(inc) + " (slack 1e-10)");
    } else {
        r.skip(label + "energy nonincreasing", "mu = " + fmt(t.mu) + " is nonzero; monotonicity is only claimed for mu = 0");
    }
}

std::pair<NoiseSample, GridFunction> smoothed_theta(const Json& c, double& mu) {
    const NoiseSample noise = noise_from(c);
    const double eps = c["eps"].get<double>();
    const NoiseSample smooth = eps > 0.0 ? mollify(noise, eps) : noise;
    ThetaResult th = build_theta(smooth);
    mu = th.mu;
    return {noise, std::move(th.theta)};
}

}  // namespace

void run_noise(Context& ctx) {
    const Json& c = ctx.config;
    const NoiseSample noise = noise_from(c);
    const double eps = c["eps"].get<double>();
    const NoiseSample smooth = eps > 0.0 ? mollify(noise, eps) : noise;
    const GridFunction eta = smooth.eta();
    const GridFunction xi = mollified_xi(noise, eps);
    write_csv(ctx.artifact("eta.csv"), eta);
    write_csv(ctx.artifact("xi.csv"), xi);
    const NoiseSample::Header& h = smooth.header();
    ctx.report.final = Json{{"seed", h.seed}, {"n", h.n},     {"kl_modes", h.kl_modes},
                            {"sigma", h.sigma}, {"eps", h.eps}, {"source", h.source}};
    ctx.report.check("eta(0) = 0", eta[0] == 0.0, "eta(0) = " + fmt(eta[0]));
    const double mean_gap = std::abs(integrate(xi) - noise.sigma());
    ctx.report.check("mean of xi equals sigma", mean_gap <= 1e-12, "|int xi - sigma| = " + fmt(mean_gap));
}

void run_stationary(Context& ctx) {
    const Json& c = ctx.config;
    double mu = 0.0;
    const auto [noise, theta] = smoothed_theta(c, mu);
    const CoefficientFunction coeff = coefficient_from(c["coefficient"]);
    const double m = c["m"].get<double>();
    const double z = solve_zm(coeff, theta, m);
    const GridFunction v_bar = stationary_profile(coeff, theta, z);
    write_csv(ctx.artifact("theta.csv"), theta);
    write_csv(ctx.artifact("v_bar.csv"), v_bar);
    ctx.report.final = Json{{"mu", mu},
                            {"z_m", z},
                            {"m", m},
                            {"theta_min", theta.min()},
                            {"theta_max", theta.max()},
                            {"mu_threshold", mu_smallness_threshold(coeff, theta)}};

    const double eps = c["eps"].get<double>();
    if (eps > 0.0 || c["noise"]["source"] == "zero") {
        const double res = residual_theta(theta, mu, mollified_xi(noise, eps));
        ctx.report.final["identity_residual"] = res;
        ctx.report.check("theta' + xi theta = mu", res < 1e-7, "sup residual " + fmt(res) + " (tolerance 1e-7)");
    } else {
        ctx.report.skip("theta' + xi theta = mu", "eps = 0: the raw noise has no pointwise values");
    }
    const double gap = std::abs(integrate(v_bar) - m);
    ctx.report.check("mass of v_bar", gap <= 1e-10, "|int v_bar - m| = " + fmt(gap));
}

void run_energy(Context& ctx) {
    const Json& c = ctx.config;
    double mu = 0.0;
    const auto [noise, theta] = smoothed_theta(c, mu);
    const CoefficientFunction coeff = coefficient_from(c["coefficient"]);
    const EnergyConstants k = energy_constants(coeff, theta);
    const DecayBound b = decay_rate_bound(coeff, theta, mu);

    std::mt19937_64 rng(derive_seed(c["seed"].get<std::uint64_t>(), stream::property_tests));
    std::normal_distribution<double> normal;
    const auto samples = c["samples"].get<std::size_t>();
    std::size_t violations = 0;
    double worst = 0.0;
    std::ofstream os(ctx.artifact("poincare.csv"));
    os << "sample,lhs,rhs\n";
    for (std::size_t s = 0; s < samples; ++s) {
        std::vector<double> a(8), bcoef(8);
        for (int j = 0; j < 8; ++j) {
            a[j] = normal(rng) / (1.0 + j);
            bcoef[j] = normal(rng) / (1.0 + j);
        }
        const GridFunction f = GridFunction::sample(theta.size(), [&](double x) {
            double v = 0.0;
            for (int j = 0; j < 8; ++j) {
                const double w = 2.0 * std::numbers::pi * (j + 1) * x;
                v += a[j] * std::cos(w) + bcoef[j] * std::sin(w);
            }
            return v;
        });
        const PoincareCheck p = verify_poincare(f, theta);
        os << s << ',' << fmt(p.lhs) << ',' << fmt(p.rhs) << '\n';
        if (p.lhs > p.rhs * (1.0 + 1e-12)) ++violations;
        worst = std::max(worst, p.lhs / p.rhs);
    }
    ctx.report.final = Json{{"mu", mu},
                            {"c_of_theta", k.c_of_theta},
                            {"c1", k.c1},
                            {"c2", k.c2},
                            {"C_theta", b.C_theta},
                            {"c_star_mu0", b.c_star_mu0},
                            {"mu_threshold", mu_smallness_threshold(coeff, theta)},
                            {"poincare_violations", violations},
                            {"largest_ratio", worst}};
    ctx.report.check("Poincare inequality", violations == 0,
                     std::to_string(violations) + " violations in " + std::to_string(samples) +
                         " samples, largest Phi/(c2 |DPhi|^2) = " + fmt(worst));
}

void run_simulate(Context& ctx) {
    const Json& c = ctx.config;
    const SimConfig cfg = sim_from(c, c["eps"].get<double>());
    const std::string format = snapshot_format(c);
    const NoiseSample noise = noise_from(c);
    Trajectory t;
    try {
        t = evolve(cfg, noise);
    } catch (const BlowUpError& e) {
        write_series(ctx, "partial/series.csv", e.partial());
        write_csv(ctx.artifact("partial/v_last_finite.csv"), e.last_finite_state().v);
        throw;
    }
    write_trajectory(ctx, "", t, format);
    ctx.report.final = trajectory_summary(t);
    trajectory_checks(ctx.report, "", t);
}

void run_decay(Context& ctx) {
    const Json& c = ctx.config;
    const std::string format = snapshot_format(c);
    const auto seeds = c["seeds"].get<std::vector<std::uint64_t>>();
    const double t_layer = c["t_layer"].get<double>();
    const double factor = c["slope_factor"].get<double>();

    struct Result {
        Trajectory traj;
        DecayFit fit{};
    };
    std::vector<Result> results(seeds.size());
    parallel_for(seeds.size(), ctx.workers, [&](std::size_t i) {
        Json run_cfg = c;
        run_cfg["seed"] = seeds[i];
        const SimConfig cfg = sim_from(run_cfg, c["eps"].get<double>());
        results[i].traj = evolve(cfg, noise_from(run_cfg));
        results[i].fit = fit_decay(results[i].traj, cfg.coeff, t_layer);
        write_trajectory(ctx, "seed_" + std::to_string(seeds[i]) + "/", results[i].traj, format);
    });

    Json runs = Json::array();
    std::size_t slope_fail = 0, envelope_fail = 0, slope_skip = 0;
    double worst_slope_ratio = 0.0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const Result& r = results[i];
        Json j = trajectory_summary(r.traj);
        j["seed"] = seeds[i];
        j["fitted_slope"] = r.fit.slope;
        j["rate_bound"] = r.fit.rate_bound;
        j["fit_window"] = Json::array({r.fit.t_start, r.fit.t_stop});
        j["fit_points"] = r.fit.points;
        j["C_fit"] = r.fit.C_fit;
        j["worst_envelope_ratio"] = r.fit.worst_envelope_ratio;
        runs.push_back(j);
        trajectory_checks(ctx.report, "seed " + std::to_string(seeds[i]) + ": ", r.traj);
        if (!(r.fit.rate_bound > 0.0) || r.fit.points < 2) {
            ++slope_skip;
        } else {
            const bool ok = r.fit.slope <= -factor * r.fit.rate_bound;
            if (!ok) ++slope_fail;
            worst_slope_ratio = std::max(worst_slope_ratio, r.fit.slope < 0.0 ? r.fit.rate_bound / -r.fit.slope
                                                                               : INFINITY);
        }
        if (!r.fit.envelope_ok) ++envelope_fail;
    }
    ctx.report.final = Json{{"runs", runs}};
    if (slope_skip == seeds.size()) {
        ctx.report.skip("decay slope", "no positive decay rate available (mu too large or too few points above the floor)");
    } else {
        ctx.report.check("decay slope", slope_fail == 0,
                         std::to_string(slope_fail) + " of " + std::to_string(seeds.size() - slope_skip) +
                             " runs with slope above -" + fmt(factor) + " c*; largest c*/|slope| = " +
                             fmt(worst_slope_ratio) + (slope_skip > 0 ? "; " + std::to_string(slope_skip) + " skipped" : ""));
    }
    ctx.report.check("H1 decay envelope", envelope_fail == 0,
                     std::to_string(envelope_fail) + " of " + std::to_string(seeds.size()) + " runs leave the envelope");
}

void run_drift(Context& ctx) {
    const Json& c = ctx.config;
    const double eps = c["eps"].get<double>();
    const SimConfig cfg = sim_from(c, eps);
    const auto window = c["window"].get<std::vector<double>>();
    if (window.size() != 2 || !(window[0] < window[1]) || window[1] > cfg.t_end) {
        throw ConfigError("config.window must be [t0, t1] with t0 < t1 <= t_end");
    }
    if (cfg.snapshot_every == 0) throw ConfigError("config.snapshot_every must be positive for drift runs");
    const double tol = c["tolerance"].get<double>();

    const Trajectory t = evolve(cfg, noise_from(c));
    write_trajectory(ctx, "", t, snapshot_format(c));
    const GridFunction u0 = antiderivative(t.snapshots.front().v);
    const USeries u = recover_u(t, u0, cfg.coeff, [&](double v) { return cfg.coeff.phi(v); }, t.xi);
    const double predicted = t.z_m * t.mu;
    const DriftEstimate d = drift_estimate(u, window[0], window[1], predicted);

    {
        std::ofstream os(ctx.artifact("u_mean.csv"));
        os << "t,mean_u,noise_term\n";
        for (std::size_t k = 0; k < u.times.size(); ++k) {
            os << fmt(u.times[k]) << ',' << fmt(integrate(u.u[k])) << ',' << fmt(u.noise_term[k]) << '\n';
        }
        std::ofstream rs(ctx.artifact("u_residual.csv"));
        rs << "t,residual\n";
        for (std::size_t k = 0; k < u.residual.size(); ++k) rs << fmt(u.residual_times[k]) << ',' << fmt(u.residual[k]) << '\n';
    }

    const double pairing = integrate(t.theta * t.xi);
    ctx.report.final = trajectory_summary(t);
    ctx.report.final["slope"] = d.slope;
    ctx.report.final["predicted"] = predicted;
    ctx.report.final["window_points"] = d.points;
    ctx.report.final["theta_xi_integral"] = pairing;
    ctx.report.final["density_change"] = u.density_change;

    ctx.report.check("snapshot density", u.density_ok,
                     "noise term changes by " + fmt(u.density_change) + " on halving the snapshot rate (limit 1%)");
    if (std::abs(predicted) <= 1e-12) {
        ctx.report.check("drift slope", std::abs(d.slope) <= 1e-6, "slope " + fmt(d.slope) + ", predicted 0");
    } else {
        const double rel = std::abs(d.slope - predicted) / std::abs(predicted);
        ctx.report.check("drift slope", rel <= tol,
                         "slope " + fmt(d.slope) + ", predicted z_m mu = " + fmt(predicted) + ", relative error " + fmt(rel));
    }
    if (eps > 0.0) {
        const double gap = std::abs(pairing - t.mu);
        ctx.report.check("int theta xi = mu", gap <= 1e-8, "|int theta xi - mu| = " + fmt(gap));
    } else {
        ctx.report.skip("int theta xi = mu", "eps = 0: the raw noise has no pointwise values");
    }
    trajectory_checks(ctx.report, "", t);
}

void run_convergence(Context& ctx) {
    const Json& c = ctx.config;
    const auto eps_values = c["eps_values"].get<std::vector<double>>();
    if (eps_values.size() < 3) throw ConfigError("config.eps_values needs at least three entries");
    const double min_ratio = c["min_gap_ratio"].get<double>();
    const NoiseSample noise = noise_from(c);

    // Identical initial data for every eps, built with the coarsest theta.
    const SimConfig first = sim_from(c, eps_values.front());
    const ThetaResult th0 = build_theta(eps_values.front() > 0.0 ? mollify(noise, eps_values.front()) : noise);
    const GridFunction v0 = make_initial_v(first.initial, first.n, first.m, first.seed, first.coeff, th0.theta);

    std::vector<Trajectory> runs(eps_values.size());
    parallel_for(eps_values.size(), ctx.workers, [&](std::size_t i) {
        runs[i] = evolve(sim_from(c, eps_values[i]), noise, v0);
        write_csv(ctx.artifact("eps_" + fmt(eps_values[i]) + "/v_final.csv"), runs[i].snapshots.back().v);
        write_series(ctx, "eps_" + fmt(eps_values[i]) + "/series.csv", runs[i]);
    });

    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
        gaps.push_back(linf_norm(runs[i].snapshots.back().v - runs[i + 1].snapshots.back().v));
    }
    std::ofstream os(ctx.artifact("gaps.csv"));
    os << "eps_a,eps_b,gap\n";
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        os << fmt(eps_values[i]) << ',' << fmt(eps_values[i + 1]) << ',' << fmt(gaps[i]) << '\n';
    }
    Json ratios = Json::array();
    bool ok = true;
    for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
        const double q = gaps[i] / gaps[i + 1];
        ratios.push_back(q);
        ok = ok && (min_ratio <= 1.0 ? gaps[i + 1] < gaps[i] : q >= min_ratio);
    }
    ctx.report.final = Json{{"gaps", gaps}, {"ratios", ratios}};
    std::ostringstream detail;
    detail << "gaps";
    for (double g : gaps) detail << ' ' << fmt(g);
    detail << "; required successive ratio " << (min_ratio <= 1.0 ? std::string("> 1") : ">= " + fmt(min_ratio));
    ctx.report.check("Cauchy trend in eps", ok, detail.str());
    for (std::size_t i = 0; i < runs.size(); ++i) trajectory_checks(ctx.report, "eps " + fmt(eps_values[i]) + ": ", runs[i]);
}

void run_initial_layer(Context& ctx) {
    const Json& c = ctx.config;
    LayerProbeConfig p;
    p.grids = c["grids"].get<std::vector<std::size_t>>();
    p.delta = c["delta"].get<double>();
    p.layer_steps = c["layer_steps"].get<std::size_t>();
    p.dt = c["dt"].get<double>();
    p.eps = c["eps"].get<double>();
    p.seed = c["seed"].get<std::uint64_t>();
    p.noise_kl_modes = c["noise"]["kl_modes"].get<std::size_t>();
    p.amplitude = c["amplitude"].get<double>();
    p.coeff = coefficient_from(c["coefficient"]);
    if (p.layer_steps == 0) throw ConfigError("config.layer_steps must be positive");
    const LayerProbeReport r = initial_layer_probe(p);

    std::ofstream os(ctx.artifact("layer.csv"));
    os << 't';
    for (std::size_t n : r.grids) os << ",h1_n" << n;
    for (std::size_t n : r.grids) os << ",energy_n" << n;
    os << ",ratio\n";
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        os << fmt(r.times[i]);
        for (const auto& h : r.h1) os << ',' << fmt(h[i]);
        for (const auto& e : r.energy) os << ',' << fmt(e[i]);
        os << ',' << fmt(r.ratio[i]) << '\n';
    }

    const double refinement = static_cast<double>(r.grids.back()) / static_cast<double>(r.grids.front());
    const double expected = std::sqrt(refinement);
    ctx.report.final = Json{{"times", r.times}, {"ratio", r.ratio}, {"expected_ratio_at_0", expected}};
    ctx.report.check("rough start grows like sqrt(n)", r.ratio[0] >= 0.85 * expected && r.ratio[0] <= 1.15 * expected,
                     "ratio " + fmt(r.ratio[0]) + " at t = 0, expected " + fmt(expected) + " within 15%");
    ctx.report.check("bounded after the layer", r.ratio[1] >= 0.8 && r.ratio[1] <= 1.25,
                     "ratio " + fmt(r.ratio[1]) + " at t = " + fmt(r.times[1]) + ", allowed [0.8, 1.25]");
    double inc = 0.0;
    for (const auto& e : r.energy) {
        for (std::size_t i = 2; i < e.size(); ++i) inc = std::max(inc, e[i] - e[i - 1]);
    }
    if (r.times.size() > 2) {
        ctx.report.check("energy nonincreasing after the layer", inc <= 1e-10, "largest increase " + fmt(inc));
    } else {
        ctx.report.skip("energy nonincreasing after the layer", "layer_steps = 1 leaves no later times");
    }
}

}  // namespace qspde::cli::detail

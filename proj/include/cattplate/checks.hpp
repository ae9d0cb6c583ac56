#pragma once

// Self-contained invariant suite behind the `check` subcommand: quick wiring
// checks on every module plus, at the full level, the convergence-order
// studies. Returns structured results so callers can print a table and map
// failures to an exit code. CheckHooks is a test-only fault-injection point
// (the mutation harness flips the AF sign and expects the two-route check to
// name the failure).

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cattplate/config.hpp"
#include "cattplate/oracle.hpp"

namespace cattplate {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

enum class CheckLevel { quick, full };

struct CheckHooks {
    bool flip_af_sign = false;
};

namespace checks_detail {

inline SpectralField random_field(const BasisPtr& basis, unsigned seed, double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    SpectralField u(basis);
    for (size_t i = 0; i < u.coeffs.size(); ++i)
        u.coeffs[i] = amplitude * dist(rng) / (1.0 + static_cast<double>(i) * i);
    return u;
}

}  // namespace checks_detail

inline std::vector<CheckResult> run_checks(CheckLevel level, const CheckHooks& hooks = {}) {
    using config_detail::format_double;
    std::vector<CheckResult> results;
    auto run = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
        CheckResult r;
        r.name = name;
        try {
            auto [ok, detail] = fn();
            r.pass = ok;
            r.detail = detail;
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        results.push_back(std::move(r));
    };
    auto qoi = [](double value, double bound) {
        using config_detail::format_double;
        return "value " + format_double(value, 3) + ", bound " + format_double(bound, 3);
    };

    run("spectral: transform round trip", [&]() -> std::pair<bool, std::string> {
        double worst = 0.0;
        for (int n : {16, 64}) {
            auto basis = make_basis(1, {1.0}, {n});
            auto u = checks_detail::random_field(basis, 100 + n, 1.0);
            worst = std::max(worst, l2_distance(to_modal(to_nodal(u)), u));
        }
        auto basis2 = make_basis(2, {1.0, 1.3}, {8, 6});
        auto u2 = checks_detail::random_field(basis2, 7, 1.0);
        worst = std::max(worst, l2_distance(to_modal(to_nodal(u2)), u2));
        return {worst <= 1e-12, qoi(worst, 1e-12)};
    });

    run("spectral: A-power semigroup", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {32});
        auto u = checks_detail::random_field(basis, 3, 1.0);
        const double err =
            l2_distance(apply_A_power(apply_A_power(u, 0.7), -0.2), apply_A_power(u, 0.5));
        return {err <= 1e-12 * l2_norm(u), qoi(err, 1e-12)};
    });

    run("spectral: Parseval vs quadrature", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {32}, 1.0);
        auto u = checks_detail::random_field(basis, 5, 1.0);
        auto nodal = to_nodal(u);
        double quad = 0.0;
        for (double v : nodal.values) quad += v * v;
        quad *= basis->quadrature_weight();
        const double p2 = inner(u, u);
        const double rel = std::abs(quad - p2) / std::max(p2, 1e-300);
        return {rel <= 1e-10, qoi(rel, 1e-10)};
    });

    run("spectral: I_gamma and B multipliers", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {16});
        const double alpha = 0.9, gamma = 0.6;
        SpectralField ones(basis);
        for (double& c : ones.coeffs) c = 1.0;
        auto ig = apply_Igamma(ones, gamma);
        auto bb = apply_B(ones, alpha, gamma);
        double worst = 0.0;
        bool bounded = true;
        for (size_t i = 0; i < ones.coeffs.size(); ++i) {
            const double lam = basis->eigenvalue(i);
            worst = std::max(worst, std::abs(ig.coeffs[i] - 1.0 / (gamma * lam + 1.0)));
            worst = std::max(worst,
                             std::abs(bb.coeffs[i] - (alpha / gamma) * lam / (gamma * lam + 1.0)));
            if (!(bb.coeffs[i] > 0.0 && bb.coeffs[i] <= alpha / (gamma * gamma) + 1e-15))
                bounded = false;
        }
        return {worst <= 1e-14 && bounded, qoi(worst, 1e-14)};
    });

    run("nonlinearity: two-route AF", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {64});
        auto nl = Nonlinearity::cubic(1.0, 1.0);
        auto z = checks_detail::random_field(basis, 11, 0.4);
        SpectralField route1 = apply_AF(z, nl);
        if (hooks.flip_af_sign) route1 = scaled(route1, -1.0);
        const SpectralField route2 = apply_A_power(to_modal(remainder_F(nl, to_nodal(z))), 1.0);
        const double rel = l2_distance(route1, route2) / std::max(l2_norm(route2), 1e-300);
        return {rel <= 1e-9, qoi(rel, 1e-9)};
    });

    run("nonlinearity: two-route AG and AH", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {64});
        auto nl = Nonlinearity::cubic(1.0, 1.0);
        auto z = checks_detail::random_field(basis, 13, 0.4);
        auto zt = checks_detail::random_field(basis, 14, 0.4);
        auto ztt = checks_detail::random_field(basis, 15, 0.4);
        const double rg =
            l2_distance(apply_AG(z, zt, nl),
                        apply_A_power(to_modal(remainder_G(nl, to_nodal(z), to_nodal(zt))), 1.0));
        const double rh = l2_distance(
            apply_AH(z, zt, ztt, nl),
            apply_A_power(to_modal(remainder_H(nl, to_nodal(z), to_nodal(zt), to_nodal(ztt))),
                          1.0));
        const double scale = std::max(l2_norm(apply_AG(z, zt, nl)), 1.0);
        const double worst = std::max(rg, rh) / scale;
        return {worst <= 1e-9, qoi(worst, 1e-9)};
    });

    run("nonlinearity: remainder jet arithmetic", [&]() -> std::pair<bool, std::string> {
        auto nl = Nonlinearity::cubic(1.0, 1.0);
        const double h = nl.F2(0.1) * 4.0 + nl.F1(0.1);
        const double err = std::abs(h + 2.43);
        return {err <= 1e-12, qoi(err, 1e-12)};
    });

    run("nonlinearity: ellipticity closed forms", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {16});
        auto soft = Nonlinearity::cubic(1.0, -1.0);
        SpectralField half(basis), big(basis);
        half.coeffs[0] = 0.5 / std::sqrt(2.0);
        big.coeffs[0] = 0.6 / std::sqrt(2.0);
        const double e1 = std::abs(ellipticity_min(half, soft) - 0.25);
        const double e2 = std::abs(ellipticity_min(big, soft) + 0.08);
        return {e1 <= 1e-12 && e2 <= 1e-12, qoi(std::max(e1, e2), 1e-12)};
    });

    run("dynamics: linear dissipation identity", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {16});
        ModelParams params;
        auto lin = Nonlinearity::linear(1.0);
        SimOptions opts;
        opts.dt = 1e-3;
        opts.t_end = 1.0;
        SpectralField z = checks_detail::random_field(basis, 17, 0.5);
        SpectralField v = checks_detail::random_field(basis, 18, 0.5);
        SpectralField th = checks_detail::random_field(basis, 19, 0.5);
        SpectralField p = checks_detail::random_field(basis, 20, 0.5);
        std::vector<Jet> jets;
        auto res = simulate(PlateState(0.0, z, v, th, p), params, lin, opts,
                            [&](const Record& r) { jets.push_back(r.jet); });
        if (res.halt != HaltReason::completed) return {false, "run did not complete"};
        const double r = dissipation_residual(jets, params, lin);
        return {r <= 1e-10, qoi(r, 1e-10)};
    });

    run("oracle: trace consistency", [&]() -> std::pair<bool, std::string> {
        ModelParams p;
        p.sigma = 0.3;
        p.beta = 1.4;
        p.tau = 0.7;
        auto sp = spectral_abscissa(mode_matrix(250.0, p));
        double re = 0.0;
        for (auto& e : sp.eigenvalues) re += e.real();
        const double trace = -p.sigma / p.beta - 1.0 / p.tau;
        const double rel = std::abs(re - trace) / std::abs(trace);
        return {rel <= 1e-12, qoi(rel, 1e-12)};
    });

    run("oracle: dissipativity sample", [&]() -> std::pair<bool, std::string> {
        ModelParams p;
        double worst = -1e300;
        for (int k = 1; k <= 64; k *= 2) {
            const double lam = k * k * std::numbers::pi * std::numbers::pi;
            worst = std::max(worst, spectral_abscissa(mode_matrix(lam, p)).abscissa);
        }
        return {worst < 0.0, "max abscissa " + format_double(worst, 4)};
    });

    run("oracle: matrix exponential sanity", [&]() -> std::pair<bool, std::string> {
        ModelParams pa;
        pa.alpha = 0.0;
        auto osc = mode_matrix(std::numbers::pi * std::numbers::pi, pa);
        const double omega =
            std::sqrt(std::pow(std::numbers::pi, 4) / (1.0 + std::numbers::pi * std::numbers::pi));
        Eigen::VectorXd u0(4);
        u0 <<  1.0, 0.0, 0.0, 0.0;
        const auto u = propagate_exact(u0, osc, 2.0 * std::numbers::pi / omega);
        const double err = (u - u0).norm();
        return {err <= 1e-12, qoi(err, 1e-12)};
    });

    run("dynamics: reconstruction divergence identity", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {12});
        SpectralField z = checks_detail::random_field(basis, 23, 0.4);
        SpectralField v = checks_detail::random_field(basis, 24, 0.4);
        SpectralField th = checks_detail::random_field(basis, 25, 0.4);
        SpectralField p = checks_detail::random_field(basis, 26, 0.4);
        PlateState state(1.7, z, v, th, p);
        FluxField q0 = FluxField::from_gradient(checks_detail::random_field(basis, 27, 0.5));
        auto rec = reconstruct_w_q(state, q0.to_nodal());
        auto div = FluxField::from_nodal(rec.q.to_nodal()).divergence();
        const double rel = l2_distance(div, state.p) / std::max(l2_norm(state.p), 1e-300);
        return {rel <= 1e-12, qoi(rel, 1e-12)};
    });

    run("dynamics: jet wiring residual", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {12});
        ModelParams params;
        auto nl = Nonlinearity::cubic(1.0, 1.0);
        PlateState state(0.0, checks_detail::random_field(basis, 31, 0.1),
                         checks_detail::random_field(basis, 32, 0.1),
                         checks_detail::random_field(basis, 33, 0.1),
                         checks_detail::random_field(basis, 34, 0.1));
        auto jet = runtime_jet(state, params, nl);
        auto af = apply_AF(state.z, nl);
        const auto& lam = basis->eigenvalues();
        double rel = 0.0;
        for (size_t i = 0; i < lam.size(); ++i) {
            const double lhs = (1.0 / lam[i] + params.gamma) * jet.ztt.coeffs[i] +
                               lam[i] * state.z.coeffs[i] - lam[i] * state.theta.coeffs[i] -
                               af.coeffs[i];
            rel = std::max(rel, std::abs(lhs));
        }
        rel /= std::max(1.0, l2_norm(jet.ztt));
        return {rel <= 1e-10, qoi(rel, 1e-10)};
    });

    if (level == CheckLevel::quick) return results;

    run("full: midpoint order against the exponential oracle",
        [&]() -> std::pair<bool, std::string> {
            auto basis = make_basis(1, {1.0}, {1});
            ModelParams params;
            auto mm = mode_matrix(std::numbers::pi * std::numbers::pi, params);
            Eigen::VectorXd u0(4);
            u0 << 0.1, 0.0, 0.01, 0.0;
            Eigen::VectorXd exact = propagate_exact(u0, mm, 1.0);
            auto err = [&](double dt) {
                SpectralField z(basis), v(basis), th(basis), p(basis);
                z.coeffs[0] = u0[0];
                th.coeffs[0] = u0[2];
                PlateState cur(0.0, z, v, th, p);
                const long n = std::lround(1.0 / dt);
                for (long i = 0; i < n; ++i) cur = step_linear_midpoint(cur, dt, params);
                return std::sqrt(std::pow(cur.z.coeffs[0] - exact[0], 2) +
                                 std::pow(cur.v.coeffs[0] - exact[1], 2) +
                                 std::pow(cur.theta.coeffs[0] - exact[2], 2) +
                                 std::pow(cur.p.coeffs[0] - exact[3], 2));
            };
            const double ratio = err(1e-3) / err(5e-4);
            return {std::abs(ratio - 4.0) <= 0.4, "ratio " + format_double(ratio, 4)};
        });

    run("full: finite-difference jets converge at order 2", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {8});
        ModelParams params;
        auto nl = Nonlinearity::cubic(1.0, 1.0);
        SimOptions opts;
        PlateState state(0.0, checks_detail::random_field(basis, 41, 0.05),
                         checks_detail::random_field(basis, 42, 0.05),
                         checks_detail::random_field(basis, 43, 0.05),
                         checks_detail::random_field(basis, 44, 0.05));
        auto jet = initial_jet(state.z, state.v, state.theta, state.p, params, nl);
        auto fd_err = [&](double dt) {
            auto fwd = step_nonlinear(state, dt, params, nl, opts).state;
            auto bwd = step_nonlinear(state, -dt, params, nl, opts).state;
            SpectralField fd(basis);
            for (size_t i = 0; i < fd.coeffs.size(); ++i)
                fd.coeffs[i] =
                    (fwd.z.coeffs[i] - 2.0 * state.z.coeffs[i] + bwd.z.coeffs[i]) / (dt * dt);
            return l2_distance(fd, jet.ztt);
        };
        const double ratio = fd_err(2e-3) / fd_err(1e-3);
        return {std::abs(ratio - 4.0) <= 0.6, "ratio " + format_double(ratio, 4)};
    });

    run("full: AF resolution convergence", [&]() -> std::pair<bool, std::string> {
        // project a fixed smooth profile onto growing bands; errors against
        // the finest resolution must decrease monotonically
        auto nl = Nonlinearity::cubic(1.0, 1.0);
        auto profile = [](double x) { return 0.4 * std::exp(std::sin(std::numbers::pi * x)) *
                                             std::sin(std::numbers::pi * x); };
        auto af_at = [&](int n) {
            auto basis = make_basis(1, {1.0}, {n});
            NodalField nodal(basis);
            for (int j = 0; j < basis->grid(0); ++j) nodal.values[j] = profile(basis->node(0, j));
            return apply_AF(to_modal(nodal), nl);
        };
        auto reference = af_at(512);
        auto err_at = [&](int n) {
            auto af = af_at(n);
            double s = 0.0;
            for (size_t i = 0; i < af.coeffs.size(); ++i) {
                const double d = af.coeffs[i] - reference.coeffs[i];
                s += d * d;
            }
            return std::sqrt(s);
        };
        const double e16 = err_at(16), e32 = err_at(32), e64 = err_at(64);
        const bool mono = e16 > e32 && e32 > e64;
        return {mono, "errors " + format_double(e16, 3) + " > " + format_double(e32, 3) + " > " +
                          format_double(e64, 3)};
    });

    run("full: decay fit matches the spectral abscissa", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {1});
        ModelParams params;
        auto lin = Nonlinearity::linear(1.0);
        SimOptions opts;
        opts.dt = 1e-3;
        opts.t_end = 40.0;
        opts.record_stride = 40;
        SpectralField z(basis), zero(basis);
        z.coeffs[0] = 1.0;
        std::vector<std::pair<double, double>> xs;
        auto res = simulate(PlateState(0.0, z, zero, zero, zero), params, lin, opts,
                            [&](const Record& r) {
                                xs.emplace_back(r.t, energy_levels(r.jet, params).X);
                            });
        if (res.halt != HaltReason::completed) return {false, "run did not complete"};
        auto fit = decay_fit(xs);
        const double target = 2.0 * 0.14763678325402;
        const double rel = std::abs(fit.kappa_hat - target) / target;
        return {rel <= 0.05, "kappa " + format_double(fit.kappa_hat, 5) + " vs " +
                                 format_double(target, 5)};
    });

    run("full: stability dichotomy", [&]() -> std::pair<bool, std::string> {
        ModelParams base;
        auto sw = stability_sweep(base, {0.0, 1.0}, {0.0, 1.0}, 128);
        int ok = 0;
        for (const auto& c : sw.cells) {
            const bool vanishes = (c.gamma == 0.0 && c.tau > 0.0);
            if (c.classification == (vanishes ? "damping-vanishes" : "uniformly-damped")) ++ok;
        }
        return {ok == 4, std::to_string(ok) + "/4 cells classified as expected"};
    });

    run("full: nonlinear small-data run", [&]() -> std::pair<bool, std::string> {
        auto basis = make_basis(1, {1.0}, {32});
        ModelParams params;
        auto nl = Nonlinearity::cubic(1.0, 1.0);
        SimOptions opts;
        opts.dt = 1e-3;
        opts.t_end = 2.0;
        PlateState state(0.0, checks_detail::random_field(basis, 51, 1e-2),
                         checks_detail::random_field(basis, 52, 1e-2),
                         checks_detail::random_field(basis, 53, 1e-2),
                         checks_detail::random_field(basis, 54, 1e-2));
        auto res = simulate(state, params, nl, opts);
        if (res.halt != HaltReason::completed) return {false, "run did not complete"};
        return {res.max_picard_iters <= 8,
                "max picard iterations " + std::to_string(res.max_picard_iters)};
    });

    return results;
}

}  // namespace cattplate

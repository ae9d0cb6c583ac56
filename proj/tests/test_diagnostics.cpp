#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "cattplate/diagnostics.hpp"

using namespace cattplate;
using std::numbers::pi;

namespace {

PlateState random_state(const BasisPtr& basis, unsigned seed, double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    auto field = [&] {
        SpectralField u(basis);
        for (size_t i = 0; i < u.coeffs.size(); ++i)
            u.coeffs[i] = amplitude * dist(rng) / (1.0 + static_cast<double>(i) * i);
        return u;
    };
    SpectralField z = field(), v = field(), th = field(), p = field();
    return PlateState(0.0, z, v, th, p);
}

std::vector<Jet> run_with_jets(const PlateState& init, const ModelParams& params,
                               const Nonlinearity& nl, SimOptions opts) {
    std::vector<Jet> jets;
    auto result = simulate(init, params, nl, opts, [&](const Record& r) { jets.push_back(r.jet); });
    REQUIRE(result.halt == HaltReason::completed);
    return jets;
}

}  // namespace

TEST_CASE("energy levels on simple jets") {
    auto basis = make_basis(1, {1.0}, {4});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    SpectralField zero(basis);

    auto jz = initial_jet(zero, zero, zero, zero, params, lin);
    auto rz = energy_levels(jz, params);
    CHECK(rz.E1 == 0.0);
    CHECK(rz.E == 0.0);
    CHECK(rz.X == 0.0);
    CHECK(rz.Y == 0.0);

    // z = phi_1: only the kappa0|A^{1/2} z|^2 term contributes to E1
    SpectralField z(basis);
    z.coeffs[0] = 1.0;
    auto jz1 = initial_jet(z, zero, zero, zero, params, lin);
    auto r1 = energy_levels(jz1, params);
    CHECK(r1.e1_terms[2] == Catch::Approx(pi * pi / 2.0).epsilon(1e-14));
    CHECK(r1.E1 == Catch::Approx(pi * pi / 2.0).epsilon(1e-14));

    // p = phi_1 with tau = eta = 1: E1 = 1/2
    SpectralField p(basis);
    p.coeffs[0] = 1.0;
    auto jp = initial_jet(zero, zero, zero, p, params, lin);
    auto rp = energy_levels(jp, params);
    CHECK(rp.e1_terms[4] == Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("energy report invariants on random jets") {
    auto basis = make_basis(1, {1.0}, {16});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    for (unsigned seed : {1u, 2u, 3u}) {
        auto s = random_state(basis, seed, 0.1);
        auto rep = energy_levels(runtime_jet(s, params, nl), params);
        CHECK(rep.E1 >= 0.0);
        CHECK(rep.E >= 0.0);
        CHECK(rep.X >= rep.E);
        CHECK(rep.Y >= -1e-12 * rep.X);
        CHECK(rep.E == rep.E1 + rep.E2 + rep.E3);
    }
}

TEST_CASE("per-step discrete dissipation of the linear midpoint run") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    params.eta = 1.3;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    opts.dt = 1e-2;
    opts.t_end = 0.5;
    auto jets = run_with_jets(random_state(basis, 9, 0.5), params, lin, opts);
    REQUIRE(jets.size() >= 10);
    for (size_t n = 0; n + 1 < jets.size(); ++n) {
        const double e0 = energy_levels(jets[n], params).E1;
        const double e1 = energy_levels(jets[n + 1], params).E1;
        auto p_mid = scaled(axpy(1.0, jets[n].p, jets[n + 1].p), 0.5);
        const double drop = -opts.dt * inner(p_mid, p_mid) / params.eta;
        CHECK(e1 - e0 == Catch::Approx(drop).margin(1e-12 * std::max(1.0, e0)));
    }
}

TEST_CASE("dissipation residual: linear run is round-off exact") {
    auto basis = make_basis(1, {1.0}, {16});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    opts.dt = 1e-3;
    opts.t_end = 1.0;
    auto jets = run_with_jets(random_state(basis, 13, 0.5), params, lin, opts);
    CHECK(dissipation_residual(jets, params, lin) <= 1e-10);
}

TEST_CASE("dissipation residual: nonlinear runs stay at the round-off floor") {
    // the converged per-step Picard iteration satisfies the implicit midpoint
    // equations of the full quasilinear system, so the identity evaluated at
    // the averaged states is exact to round-off at any dt
    auto basis = make_basis(1, {1.0}, {16});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    auto init = random_state(basis, 5, 0.01);
    for (double dt : {2e-3, 1e-3}) {
        SimOptions opts;
        opts.dt = dt;
        opts.t_end = 1.0;
        auto jets = run_with_jets(init, params, nl, opts);
        CHECK(dissipation_residual(jets, params, nl) <= 1e-10);
    }
}

TEST_CASE("dissipation residual: zero trajectory and precondition checks") {
    auto basis = make_basis(1, {1.0}, {4});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    opts.dt = 1e-2;
    opts.t_end = 0.1;
    SpectralField zero(basis);
    auto jets = run_with_jets(PlateState(0.0, zero, zero, zero, zero), params, lin, opts);
    CHECK(dissipation_residual(jets, params, lin) == 0.0);

    ModelParams sig = params;
    sig.sigma = 0.5;
    CHECK_THROWS_AS(dissipation_residual(jets, sig, lin), std::invalid_argument);

    auto nonuniform = jets;
    nonuniform.back().t += 0.5 * opts.dt;
    CHECK_THROWS_AS(dissipation_residual(nonuniform, params, lin), std::invalid_argument);
}

TEST_CASE("sigma damping keeps E1 non-increasing in the linear model") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    params.sigma = 0.4;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    opts.dt = 1e-2;
    opts.t_end = 1.0;
    auto jets = run_with_jets(random_state(basis, 17, 0.3), params, lin, opts);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& jet : jets) {
        const double e1 = energy_levels(jet, params).E1;
        CHECK(e1 <= prev * (1.0 + 1e-13));
        prev = e1;
    }
}

TEST_CASE("decay fit on synthetic data") {
    std::vector<std::pair<double, double>> series;
    for (int i = 0; i <= 200; ++i) {
        const double t = 0.05 * i;
        series.emplace_back(t, 3.0 * std::exp(-0.7 * t));
    }
    auto fit = decay_fit(series);
    CHECK(fit.kappa_hat == Catch::Approx(0.7).margin(1e-12));
    CHECK(fit.r_squared == Catch::Approx(1.0).margin(1e-12));
    CHECK(fit.C_hat == Catch::Approx(3.0).epsilon(1e-9));

    std::vector<std::pair<double, double>> flat;
    for (int i = 0; i <= 50; ++i) flat.emplace_back(0.1 * i, 2.5);
    auto ffit = decay_fit(flat);
    CHECK(ffit.kappa_hat == Catch::Approx(0.0).margin(1e-13));

    // scale equivariance
    std::vector<std::pair<double, double>> scaled_series = series;
    for (auto& [t, x] : scaled_series) x *= 12.5;
    auto sfit = decay_fit(scaled_series);
    CHECK(sfit.kappa_hat == Catch::Approx(fit.kappa_hat).margin(1e-12));
    CHECK(sfit.C_hat == Catch::Approx(12.5 * fit.C_hat).epsilon(1e-9));

    std::vector<std::pair<double, double>> few = {{0.0, 1.0}, {1.0, 0.5}};
    CHECK_THROWS_AS(decay_fit(few), std::invalid_argument);
    auto bad = series;
    bad[150].second = -1.0;
    CHECK_THROWS_AS(decay_fit(bad), std::invalid_argument);
}

TEST_CASE("decay fit tracks the spectral abscissa on a single-mode run") {
    auto basis = make_basis(1, {1.0}, {1});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    opts.dt = 1e-3;
    opts.t_end = 40.0;
    opts.record_stride = 20;
    SpectralField z(basis), zero(basis);
    z.coeffs[0] = 1.0;

    std::vector<std::pair<double, double>> xs;
    auto result = simulate(PlateState(0.0, z, zero, zero, zero), params, lin, opts,
                           [&](const Record& r) {
                               xs.emplace_back(r.t, energy_levels(r.jet, params).X);
                           });
    REQUIRE(result.halt == HaltReason::completed);
    auto fit = decay_fit(xs);
    CHECK(fit.kappa_hat == Catch::Approx(2.0 * 0.14763678325402).epsilon(0.05));
}

TEST_CASE("barrier report golden values on a nonlinear small-data run") {
    auto basis = make_basis(1, {1.0}, {16});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    SimOptions opts;
    opts.dt = 1e-3;
    opts.t_end = 5.0;
    opts.record_stride = 5;
    auto init = random_state(basis, 9, 0.02);
    std::vector<std::pair<double, double>> xs, e1s;
    auto result = simulate(init, params, nl, opts, [&](const Record& r) {
        auto rep = energy_levels(r.jet, params);
        xs.emplace_back(r.t, rep.X);
        e1s.emplace_back(r.t, rep.E1);
    });
    REQUIRE(result.halt == HaltReason::completed);
    auto rep = barrier_report(xs, e1s, xs.front().second, e1s.front().second);
    CHECK(rep.sup_E1_ratio == Catch::Approx(1.0).margin(1e-9));  // E1 dissipates from t = 0
    CHECK(rep.sup_X_ratio == Catch::Approx(2.110533884266).epsilon(1e-6));
    CHECK(rep.eventually_monotone);
    CHECK(rep.monotone_from <= 0.1);  // the transient hump peaks early
}

TEST_CASE("barrier report") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    opts.dt = 1e-2;
    opts.t_end = 4.0;
    std::vector<std::pair<double, double>> xs, e1s;
    auto result = simulate(random_state(basis, 23, 0.4), params, lin, opts, [&](const Record& r) {
        auto rep = energy_levels(r.jet, params);
        xs.emplace_back(r.t, rep.X);
        e1s.emplace_back(r.t, rep.E1);
    });
    REQUIRE(result.halt == HaltReason::completed);
    auto rep = barrier_report(xs, e1s, xs.front().second, e1s.front().second);
    CHECK(rep.sup_E1_ratio <= 1.0 + 1e-9);  // E1 dissipates monotonically here
    CHECK(rep.sup_X_ratio < 10.0);

    auto zrep = barrier_report({}, {}, 0.0, 0.0);
    CHECK(zrep.sup_X_ratio == 0.0);
    CHECK(zrep.sup_E1_ratio == 0.0);
}

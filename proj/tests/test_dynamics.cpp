#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "cattplate/diagnostics.hpp"
#include "cattplate/dynamics.hpp"
#include "cattplate/oracle.hpp"

using namespace cattplate;
using std::numbers::pi;

namespace {

PlateState single_mode_state(const BasisPtr& basis, double cz, double cv, double ct, double cp) {
    SpectralField z(basis), v(basis), th(basis), p(basis);
    z.coeffs[0] = cz;
    v.coeffs[0] = cv;
    th.coeffs[0] = ct;
    p.coeffs[0] = cp;
    return PlateState(0.0, z, v, th, p);
}

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

}  // namespace

TEST_CASE("initial jet: single-mode closed form") {
    auto basis = make_basis(1, {1.0}, {1});
    ModelParams params;  // kappa0 = gamma = 1
    auto lin = Nonlinearity::linear(1.0);
    const double c = 0.37;
    auto jet = initial_jet(single_mode_state(basis, c, 0, 0, 0).z, SpectralField(basis),
                           SpectralField(basis), SpectralField(basis), params, lin);
    const double lam = pi * pi;
    CHECK(jet.ztt.coeffs[0] == Catch::Approx(-lam * lam * c / (1.0 + lam)).epsilon(1e-13));
    CHECK(jet.theta_t.coeffs[0] == 0.0);
    CHECK(jet.pt.coeffs[0] == 0.0);
}

TEST_CASE("initial jet: zero data and theta-only data") {
    auto basis = make_basis(1, {1.0}, {4});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);

    SpectralField zero(basis);
    auto jet = initial_jet(zero, zero, zero, zero, params, lin);
    CHECK(l2_norm(jet.ztt) == 0.0);
    CHECK(l2_norm(jet.zttt) == 0.0);
    CHECK(l2_norm(jet.theta_t) == 0.0);
    CHECK(l2_norm(jet.ptt) == 0.0);

    SpectralField th(basis);
    th.coeffs[0] = 1.0;
    auto jet2 = initial_jet(zero, zero, th, zero, params, lin);
    CHECK(jet2.theta_t.coeffs[0] == 0.0);  // -(p + alpha z1)/beta with p = z1 = 0
    CHECK(jet2.pt.coeffs[0] == Catch::Approx(pi * pi).epsilon(1e-14));  // (eta/tau) lambda theta
}

TEST_CASE("initial jet with sigma > 0") {
    auto basis = make_basis(1, {1.0}, {2});
    ModelParams params;
    params.sigma = 0.5;
    params.beta = 2.0;
    auto lin = Nonlinearity::linear(1.0);
    SpectralField zero(basis), th(basis), p(basis), z1(basis);
    th.coeffs[0] = 0.4;
    p.coeffs[0] = 0.3;
    z1.coeffs[0] = 0.2;
    auto jet = initial_jet(zero, z1, th, p, params, lin);
    CHECK(jet.theta_t.coeffs[0] ==
          Catch::Approx(-(0.3 + 0.5 * 0.4 + 1.0 * 0.2) / 2.0).epsilon(1e-14));
}

TEST_CASE("initial jet rejects degenerate data") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    auto soft = Nonlinearity::cubic(1.0, -1.0);
    SpectralField z(basis), zero(basis);
    z.coeffs[0] = 0.7 / std::sqrt(2.0);  // peak amplitude 0.7: min N' < 0
    CHECK_THROWS_AS(initial_jet(z, zero, zero, zero, params, soft), DegeneracyError);
}

TEST_CASE("runtime jet equals initial jet at t = 0 and matches the mode matrix") {
    auto basis = make_basis(1, {1.0}, {1});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    auto state = single_mode_state(basis, 0.2, -0.1, 0.05, 0.3);

    auto j0 = initial_jet(state.z, state.v, state.theta, state.p, params, lin);
    auto jr = runtime_jet(state, params, lin);
    CHECK(jr.ztt.coeffs[0] == Catch::Approx(j0.ztt.coeffs[0]).margin(1e-15));
    CHECK(jr.zttt.coeffs[0] == Catch::Approx(j0.zttt.coeffs[0]).margin(1e-15));

    // analytic derivatives: u' = M u, u'' = M^2 u
    auto mm = mode_matrix(pi * pi, params);
    Eigen::VectorXd u(4);
    u << 0.2, -0.1, 0.05, 0.3;
    Eigen::VectorXd du = mm.dense() * u;
    Eigen::VectorXd ddu = mm.dense() * du;
    Eigen::VectorXd dddu = mm.dense() * ddu;
    CHECK(jr.ztt.coeffs[0] == Catch::Approx(du[1]).margin(1e-12));
    CHECK(jr.zttt.coeffs[0] == Catch::Approx(ddu[1]).margin(1e-12));
    CHECK(jr.theta_t.coeffs[0] == Catch::Approx(du[2]).margin(1e-12));
    CHECK(jr.theta_tt.coeffs[0] == Catch::Approx(ddu[2]).margin(1e-12));
    CHECK(jr.pt.coeffs[0] == Catch::Approx(du[3]).margin(1e-12));
    CHECK(jr.ptt.coeffs[0] == Catch::Approx(ddu[3]).margin(1e-12));
    CHECK(jr.theta_ttt.coeffs[0] == Catch::Approx(dddu[2]).margin(1e-12));
}

TEST_CASE("jets along a propagated trajectory match the exponential oracle") {
    auto basis = make_basis(1, {1.0}, {1});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    auto mm = mode_matrix(pi * pi, params);
    Eigen::VectorXd u0(4);
    u0 << 0.3, 0.1, -0.2, 0.15;
    const double t = 0.8;
    Eigen::VectorXd ut = propagate_exact(u0, mm, t);
    PlateState state = single_mode_state(basis, ut[0], ut[1], ut[2], ut[3]);
    state.t = t;
    auto jet = runtime_jet(state, params, lin);
    Eigen::VectorXd du = mm.dense() * ut;
    Eigen::VectorXd ddu = mm.dense() * du;
    CHECK(jet.ztt.coeffs[0] == Catch::Approx(du[1]).margin(1e-10));
    CHECK(jet.zttt.coeffs[0] == Catch::Approx(ddu[1]).margin(1e-10));
}

TEST_CASE("linear midpoint conserves the decoupled plate energy") {
    auto basis = make_basis(1, {1.0}, {1});
    ModelParams params;
    params.alpha = 0.0;  // decouple the plate block
    auto state = single_mode_state(basis, 0.5, 0.2, 0.0, 0.0);
    const double lam = pi * pi;
    auto plate_energy = [&](const PlateState& s) {
        const double zt = s.v.coeffs[0], z = s.z.coeffs[0];
        return 0.5 * ((1.0 / lam + params.gamma) * zt * zt + params.kappa0 * lam * z * z);
    };
    const double e0 = plate_energy(state);
    PlateState cur = state;
    for (int n = 0; n < 200; ++n) {
        cur = step_linear_midpoint(cur, 1e-2, params);
        CHECK(std::abs(plate_energy(cur) - e0) <= 1e-13 * e0);
    }
}

TEST_CASE("linear midpoint: zero state stays zero") {
    auto basis = make_basis(1, {1.0}, {4});
    ModelParams params;
    SpectralField zero(basis);
    PlateState state(0.0, zero, zero, zero, zero);
    auto next = step_linear_midpoint(state, 1e-3, params);
    CHECK(l2_norm(next.z) == 0.0);
    CHECK(l2_norm(next.p) == 0.0);
}

TEST_CASE("linear midpoint converges at order 2 to the exponential oracle") {
    auto basis = make_basis(1, {1.0}, {1});
    ModelParams params;
    auto mm = mode_matrix(pi * pi, params);
    Eigen::VectorXd u0(4);
    u0 << 1.0, 0.0, 0.1, 0.0;
    const double T = 1.0;
    Eigen::VectorXd exact = propagate_exact(u0, mm, T);

    auto endpoint_error = [&](double dt) {
        PlateState cur = single_mode_state(basis, u0[0], u0[1], u0[2], u0[3]);
        const long n = std::lround(T / dt);
        for (long i = 0; i < n; ++i) cur = step_linear_midpoint(cur, dt, params);
        const double d0 = cur.z.coeffs[0] - exact[0];
        const double d1 = cur.v.coeffs[0] - exact[1];
        const double d2 = cur.theta.coeffs[0] - exact[2];
        const double d3 = cur.p.coeffs[0] - exact[3];
        return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3);
    };

    const double e1 = endpoint_error(1e-3);
    const double e2 = endpoint_error(5e-4);
    CHECK(e1 <= 1e-5);
    CHECK(e1 / e2 == Catch::Approx(4.0).epsilon(0.1));
}

TEST_CASE("picard step: linear model reduces to the midpoint step in one iteration") {
    auto basis = make_basis(1, {1.0}, {4});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    auto state = random_state(basis, 3, 0.2);
    auto direct = step_linear_midpoint(state, 1e-3, params);
    auto picard = step_nonlinear(state, 1e-3, params, lin, opts);
    REQUIRE(picard.halt == HaltReason::completed);
    CHECK(picard.picard_iters == 1);
    for (size_t i = 0; i < direct.z.coeffs.size(); ++i)
        CHECK(picard.state.z.coeffs[i] == direct.z.coeffs[i]);
}

TEST_CASE("picard step: cubic small data converges in a few iterations") {
    auto basis = make_basis(1, {1.0}, {16});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    SimOptions opts;
    auto state = random_state(basis, 5, 1e-2);  // E1 ~ 1e-4 scale
    auto res = step_nonlinear(state, 1e-3, params, nl, opts);
    REQUIRE(res.halt == HaltReason::completed);
    CHECK(res.picard_iters <= 5);
}

TEST_CASE("picard step: degenerate softening data halts without NaN") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    auto soft = Nonlinearity::cubic(1.0, -1.0);
    SimOptions opts;
    SpectralField z(basis), zero(basis);
    z.coeffs[0] = 0.7 / std::sqrt(2.0);
    PlateState state(0.0, z, zero, zero, zero);
    auto res = step_nonlinear(state, 1e-3, params, soft, opts);
    CHECK(res.halt == HaltReason::degeneracy);
    CHECK(detail::state_finite(res.state));
}

TEST_CASE("simulate: zero data stays zero and completes") {
    auto basis = make_basis(1, {1.0}, {4});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    SimOptions opts;
    opts.dt = 1e-2;
    opts.t_end = 0.5;
    SpectralField zero(basis);
    auto result = simulate(PlateState(0.0, zero, zero, zero, zero), params, nl, opts);
    CHECK(result.halt == HaltReason::completed);
    CHECK(l2_norm(result.final_state.z) == 0.0);
}

TEST_CASE("simulate: linear single mode endpoint matches the oracle") {
    auto basis = make_basis(1, {1.0}, {1});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    opts.dt = 1e-3;
    opts.t_end = 1.0;
    opts.scheme = Scheme::picard_midpoint;
    auto state = single_mode_state(basis, 1.0, 0.0, 0.1, 0.0);
    auto result = simulate(state, params, lin, opts);
    REQUIRE(result.halt == HaltReason::completed);

    auto mm = mode_matrix(pi * pi, params);
    Eigen::VectorXd u0(4);
    u0 << 1.0, 0.0, 0.1, 0.0;
    Eigen::VectorXd exact = propagate_exact(u0, mm, 1.0);
    CHECK(result.final_state.z.coeffs[0] == Catch::Approx(exact[0]).margin(1e-6));
    CHECK(result.final_state.v.coeffs[0] == Catch::Approx(exact[1]).margin(1e-6));
}

TEST_CASE("simulate: softening large data halts with degeneracy") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    auto soft = Nonlinearity::cubic(1.0, -1.0);
    SimOptions opts;
    opts.dt = 1e-3;
    opts.t_end = 5.0;
    SpectralField z(basis), zero(basis);
    z.coeffs[0] = 0.8 / std::sqrt(2.0);
    auto result = simulate(PlateState(0.0, z, zero, zero, zero), params, soft, opts);
    CHECK(result.halt == HaltReason::degeneracy);
    CHECK(detail::state_finite(result.final_state));
}

TEST_CASE("simulate: determinism of repeated runs") {
    auto basis = make_basis(1, {1.0}, {16});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    SimOptions opts;
    opts.dt = 1e-3;
    opts.t_end = 0.2;
    auto state = random_state(basis, 11, 0.05);
    auto a = simulate(state, params, nl, opts);
    auto b = simulate(state, params, nl, opts);
    REQUIRE(a.halt == HaltReason::completed);
    for (size_t i = 0; i < a.final_state.z.coeffs.size(); ++i) {
        CHECK(a.final_state.z.coeffs[i] == b.final_state.z.coeffs[i]);
        CHECK(a.final_state.p.coeffs[i] == b.final_state.p.coeffs[i]);
    }
}

TEST_CASE("picard divergence: oversized step halts cleanly") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    SimOptions opts;
    opts.dt = 0.5;
    opts.t_end = 5.0;
    SpectralField z(basis), zero(basis);
    z.coeffs[0] = 3.0;
    auto result = simulate(PlateState(0.0, z, zero, zero, zero), params, nl, opts);
    CHECK(result.halt == HaltReason::picard_divergence);
    CHECK(detail::state_finite(result.final_state));
}

TEST_CASE("blow-up surveillance triggers on the H3 norm threshold") {
    auto basis = make_basis(1, {1.0}, {4});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    opts.dt = 1e-3;
    opts.t_end = 1.0;
    opts.blowup_threshold = 0.5;
    SpectralField z(basis), v(basis), zero(basis);
    v.coeffs[0] = 5.0;  // z grows from zero and crosses the threshold
    auto result = simulate(PlateState(0.0, z, v, zero, zero), params, lin, opts);
    CHECK(result.halt == HaltReason::blow_up);
    CHECK(detail::state_finite(result.final_state));
    CHECK(sobolev_norm(result.final_state.z, 3) <= opts.blowup_threshold);
}

TEST_CASE("split-explicit scheme: linear agreement and order 2") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    auto state = random_state(basis, 61, 0.3);

    // linear model: the kicks vanish and the step equals plain midpoint
    auto lin = Nonlinearity::linear(1.0);
    SimOptions lopts;
    lopts.scheme = Scheme::split_explicit;
    lopts.dt = 1e-2;
    lopts.t_end = 0.1;
    auto split_lin = simulate(state, params, lin, lopts);
    lopts.scheme = Scheme::linear_midpoint;
    auto mid_lin = simulate(state, params, lin, lopts);
    REQUIRE(split_lin.halt == HaltReason::completed);
    for (size_t i = 0; i < state.z.coeffs.size(); ++i)
        CHECK(split_lin.final_state.z.coeffs[i] == mid_lin.final_state.z.coeffs[i]);

    // nonlinear: order-2 convergence toward a fine picard reference
    auto run = [&](Scheme scheme, double dt) {
        SimOptions opts;
        opts.scheme = scheme;
        opts.dt = dt;
        opts.t_end = 1.0;
        auto r = simulate(state, params, nl, opts);
        REQUIRE(r.halt == HaltReason::completed);
        return r.final_state;
    };
    auto ref = run(Scheme::picard_midpoint, 1e-4);
    const double e1 = l2_distance(run(Scheme::split_explicit, 4e-3).z, ref.z);
    const double e2 = l2_distance(run(Scheme::split_explicit, 2e-3).z, ref.z);
    CHECK(e1 / e2 == Catch::Approx(4.0).epsilon(0.15));
}

TEST_CASE("2D linear simulate matches the per-mode oracle") {
    auto basis = make_basis(2, {1.0, 1.0}, {3, 3});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    SimOptions opts;
    opts.dt = 1e-3;
    opts.t_end = 0.5;
    auto state = random_state(basis, 77, 0.5);
    auto result = simulate(state, params, lin, opts);
    REQUIRE(result.halt == HaltReason::completed);
    for (size_t i = 0; i < basis->size(); ++i) {
        auto mm = mode_matrix(basis->eigenvalue(i), params);
        Eigen::VectorXd u0(4);
        u0 << state.z.coeffs[i], state.v.coeffs[i], state.theta.coeffs[i], state.p.coeffs[i];
        Eigen::VectorXd exact = propagate_exact(u0, mm, 0.5);
        CHECK(result.final_state.z.coeffs[i] == Catch::Approx(exact[0]).margin(1e-4));
        CHECK(result.final_state.p.coeffs[i] == Catch::Approx(exact[3]).margin(1e-4));
    }
}

TEST_CASE("solution map is Lipschitz in the data at fixed dt") {
    auto basis = make_basis(1, {1.0}, {12});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    SimOptions opts;
    opts.dt = 1e-3;
    opts.t_end = 1.0;
    auto base = random_state(basis, 81, 0.1);
    auto run = [&](const PlateState& s) {
        auto r = simulate(s, params, nl, opts);
        REQUIRE(r.halt == HaltReason::completed);
        return r.final_state;
    };
    auto out_base = run(base);
    for (double eps : {1e-6, 1e-4}) {
        PlateState shifted = base;
        shifted.z.coeffs[0] += eps;
        shifted.v.coeffs[2] -= 0.5 * eps;
        auto out = run(shifted);
        double din = std::sqrt(eps * eps + 0.25 * eps * eps);
        double dout = std::max({l2_distance(out.z, out_base.z), l2_distance(out.v, out_base.v),
                                l2_distance(out.theta, out_base.theta),
                                l2_distance(out.p, out_base.p)});
        CHECK(dout <= 20.0 * din);  // modest amplification over T = 1
    }
}

TEST_CASE("jet wiring: runtime jets satisfy the reduced equations") {
    auto basis = make_basis(1, {1.0}, {12});
    ModelParams params;
    params.sigma = 0.1;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    auto state = random_state(basis, 21, 0.1);
    auto jet = runtime_jet(state, params, nl);
    const auto& lam = basis->eigenvalues();
    auto af = apply_AF(state.z, nl);
    double r1 = 0.0, r2 = 0.0, r3 = 0.0;
    for (size_t i = 0; i < lam.size(); ++i) {
        r1 = std::max(r1, std::abs((1.0 / lam[i] + params.gamma) * jet.ztt.coeffs[i] +
                                   params.kappa0 * lam[i] * state.z.coeffs[i] -
                                   params.alpha * lam[i] * state.theta.coeffs[i] -
                                   af.coeffs[i]));
        r2 = std::max(r2, std::abs(params.beta * jet.theta_t.coeffs[i] + state.p.coeffs[i] +
                                   params.sigma * state.theta.coeffs[i] +
                                   params.alpha * state.v.coeffs[i]));
        r3 = std::max(r3, std::abs(params.tau * jet.pt.coeffs[i] + state.p.coeffs[i] -
                                   params.eta * lam[i] * state.theta.coeffs[i]));
    }
    CHECK(r1 <= 1e-10 * std::max(1.0, l2_norm(jet.ztt)));
    CHECK(r2 <= 1e-10);
    CHECK(r3 <= 1e-10);
}

TEST_CASE("finite differences of the trajectory converge to the initial jet") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    auto nl = Nonlinearity::cubic(1.0, 1.0);
    SimOptions opts;
    auto state = random_state(basis, 31, 0.05);
    auto jet = initial_jet(state.z, state.v, state.theta, state.p, params, nl);

    auto fd_errors = [&](double dt) {
        // two steps forward and two backward around t = 0
        std::vector<PlateState> traj(5);
        traj[2] = state;
        auto fwd = step_nonlinear(state, dt, params, nl, opts);
        REQUIRE(fwd.halt == HaltReason::completed);
        traj[3] = fwd.state;
        auto fwd2 = step_nonlinear(traj[3], dt, params, nl, opts);
        traj[4] = fwd2.state;
        auto bwd = step_nonlinear(state, -dt, params, nl, opts);
        REQUIRE(bwd.halt == HaltReason::completed);
        traj[1] = bwd.state;
        auto bwd2 = step_nonlinear(traj[1], -dt, params, nl, opts);
        traj[0] = bwd2.state;

        auto diff2 = [&](auto pick, const SpectralField& ref) {
            SpectralField fd(basis);
            for (size_t i = 0; i < fd.coeffs.size(); ++i)
                fd.coeffs[i] = (pick(traj[3])[i] - 2.0 * pick(traj[2])[i] + pick(traj[1])[i]) /
                               (dt * dt);
            return l2_distance(fd, ref);
        };
        auto diff3 = [&](auto pick, const SpectralField& ref) {
            SpectralField fd(basis);
            for (size_t i = 0; i < fd.coeffs.size(); ++i)
                fd.coeffs[i] = (pick(traj[4])[i] - 2.0 * pick(traj[3])[i] +
                                2.0 * pick(traj[1])[i] - pick(traj[0])[i]) /
                               (2.0 * dt * dt * dt);
            return l2_distance(fd, ref);
        };
        const double e_ztt = diff2([](const PlateState& s) { return s.z.coeffs; }, jet.ztt);
        const double e_zttt = diff3([](const PlateState& s) { return s.z.coeffs; }, jet.zttt);
        const double e_ptt = diff2([](const PlateState& s) { return s.p.coeffs; }, jet.ptt);
        return std::array<double, 3>{e_ztt, e_zttt, e_ptt};
    };

    auto coarse = fd_errors(2e-3);
    auto fine = fd_errors(1e-3);
    for (int i = 0; i < 3; ++i) CHECK(coarse[i] / fine[i] == Catch::Approx(4.0).epsilon(0.15));
}

TEST_CASE("reconstruction: telescoping at t = 0 and diagonal inverse") {
    auto basis = make_basis(1, {1.0}, {6});
    auto state = random_state(basis, 41, 0.3);

    FluxField q0 = FluxField::from_gradient(random_state(basis, 42, 0.5).z);
    state.p = q0.divergence();  // p(0) = div q0
    auto rec = reconstruct_w_q(state, q0);
    for (int a = 0; a < basis->dim(); ++a)
        for (size_t i = 0; i < rec.q.component(a).size(); ++i)
            CHECK(rec.q.component(a)[i] == Catch::Approx(q0.component(a)[i]).margin(1e-14));

    // w = A^{-1} z: single mode inverts exactly
    SpectralField z(basis), zero(basis);
    const double lam = basis->eigenvalue(0);
    z.coeffs[0] = lam * 0.9;
    auto rec2 = reconstruct_w_q(PlateState(0.0, z, zero, zero, zero), q0);
    CHECK(rec2.w.coeffs[0] == Catch::Approx(0.9).epsilon(1e-14));

    // re-reduction is the identity: A w reproduces z on coefficients
    auto rered = apply_A_power(rec.w, 1.0);
    for (size_t i = 0; i < state.z.coeffs.size(); ++i)
        CHECK(rered.coeffs[i] == Catch::Approx(state.z.coeffs[i]).margin(1e-14));
}

TEST_CASE("reconstruction: div q tracks p through nodal round trips") {
    for (int dim = 1; dim <= 2; ++dim) {
        auto basis = dim == 1 ? make_basis(1, {1.0}, {12}) : make_basis(2, {1.0, 1.3}, {5, 4});
        auto state = random_state(basis, 50 + dim, 0.4);
        state.t = 2.3;

        FluxField q0 = FluxField::from_gradient(random_state(basis, 60 + dim, 0.7).z);
        auto rec = reconstruct_w_q(state, q0.to_nodal());
        CHECK(rec.p0_complement <= 1e-10);

        // independent route: sample the reconstructed flux, re-fit, take div
        auto qfit = FluxField::from_nodal(rec.q.to_nodal());
        auto div = qfit.divergence();
        CHECK(l2_distance(div, state.p) <= 1e-12 * std::max(1.0, l2_norm(state.p)));
    }
}

TEST_CASE("original-equation residuals react to a theta perturbation") {
    auto basis = make_basis(1, {1.0}, {8});
    ModelParams params;
    auto lin = Nonlinearity::linear(1.0);
    auto state = random_state(basis, 71, 0.2);
    auto jet = runtime_jet(state, params, lin);

    // assemble exact original-frame jets from the reduced ones
    OriginalJets oj;
    oj.w_t = apply_A_power(jet.zt, -1.0);
    oj.w_tt = apply_A_power(jet.ztt, -1.0);
    oj.theta_t = jet.theta_t;
    FluxField q0 = FluxField::from_gradient(scaled(apply_A_power(state.p, -1.0), -1.0));
    auto rec = reconstruct_w_q(state, q0);
    oj.q_t = FluxField::from_gradient(scaled(apply_A_power(jet.pt, -1.0), -1.0));

    auto base = residual_original(rec.w, state.theta, rec.q, oj, params, lin);
    CHECK(base.plate <= 1e-10);
    CHECK(base.heat <= 1e-10);
    CHECK(base.flux <= 1e-10);

    SpectralField theta_bad = state.theta;
    theta_bad.coeffs[0] += 1e-3;
    auto bumped = residual_original(rec.w, theta_bad, rec.q, oj, params, lin);
    const double lam = basis->eigenvalue(0);
    CHECK(bumped.plate == Catch::Approx(params.alpha * lam * 1e-3).epsilon(1e-4));

    // zero fields give zero residuals
    SpectralField zero(basis);
    OriginalJets zj;
    zj.w_t = zero;
    zj.w_tt = zero;
    zj.theta_t = zero;
    zj.q_t = FluxField(basis);
    auto none = residual_original(zero, zero, FluxField(basis), zj, params, lin);
    CHECK(none.plate == 0.0);
    CHECK(none.heat == 0.0);
    CHECK(none.flux == 0.0);
}

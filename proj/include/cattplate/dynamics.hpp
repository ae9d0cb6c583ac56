#pragma once

// Time integration of the reduced system
//   (A^{-1} + gamma) z_tt + kappa0 A z - alpha A theta = A F(z)
//   beta theta_t + p + sigma theta + alpha z_t = 0
//   tau p_t + p - eta A theta = 0
// with per-mode implicit midpoint for the linear part and a per-step Picard
// iteration that freezes the quasilinear forcing A F(z) at the step midpoint.
// Also: compatibility jets (time derivatives to order 3 computed from the
// equations), degeneracy/blow-up surveillance, and the reconstruction of the
// original variables (w, q) from (z, p).

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cattplate/model.hpp"

namespace cattplate {

struct PlateState {
    double t = 0.0;
    SpectralField z, v, theta, p;

    PlateState() = default;
    PlateState(double time, SpectralField z_, SpectralField v_, SpectralField theta_,
               SpectralField p_)
        : t(time), z(std::move(z_)), v(std::move(v_)), theta(std::move(theta_)), p(std::move(p_)) {
        detail::require_same_basis(*z.basis, *v.basis);
        detail::require_same_basis(*z.basis, *theta.basis);
        detail::require_same_basis(*z.basis, *p.basis);
    }
};

struct Jet {
    double t = 0.0;
    SpectralField z, zt, ztt, zttt;
    SpectralField theta, theta_t, theta_tt, theta_ttt;
    SpectralField p, pt, ptt;
};

enum class Scheme { linear_midpoint, split_explicit, picard_midpoint };

enum class HaltReason { completed, degeneracy, blow_up, picard_divergence };

inline const char* to_string(HaltReason h) {
    switch (h) {
        case HaltReason::completed: return "Completed";
        case HaltReason::degeneracy: return "Degeneracy";
        case HaltReason::blow_up: return "BlowUp";
        case HaltReason::picard_divergence: return "PicardDivergence";
    }
    return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "linear-midpoint") return Scheme::linear_midpoint;
    if (s == "split-explicit") return Scheme::split_explicit;
    if (s == "picard-midpoint") return Scheme::picard_midpoint;
    throw std::invalid_argument("unknown scheme: " + s);
}

struct SimOptions {
    double dt = 1e-3;
    double t_end = 1.0;
    Scheme scheme = Scheme::picard_midpoint;
    double picard_tol = 1e-12;
    int picard_max_iter = 50;
    double degeneracy_eps = 1e-8;
    double blowup_threshold = 1e8;
    int record_stride = 1;

    void validate() const {
        detail::require(dt > 0.0, "SimOptions: dt must be positive");
        detail::require(picard_tol > 0.0, "SimOptions: picard_tol must be positive");
        detail::require(picard_max_iter >= 1, "SimOptions: picard_max_iter must be >= 1");
        detail::require(degeneracy_eps > 0.0, "SimOptions: degeneracy_eps must be positive");
        detail::require(blowup_threshold > 0.0, "SimOptions: blowup_threshold must be positive");
        detail::require(record_stride >= 1, "SimOptions: record_stride must be >= 1");
    }
};

struct DegeneracyError : std::runtime_error {
    explicit DegeneracyError(double min_val)
        : std::runtime_error("ellipticity lost: min N'(z) = " + std::to_string(min_val)),
          minimum(min_val) {}
    double minimum;
};

// Time-derivative jets defined by the equations themselves (zttt uses AG with
// the just-computed ztt via G = F'(z) z_t).
inline Jet make_jet(double t, const SpectralField& z, const SpectralField& v,
                    const SpectralField& theta, const SpectralField& p, const ModelParams& params,
                    const Nonlinearity& nl, double degeneracy_eps = 1e-8) {
    params.validate(true);
    const double ell = ellipticity_min(z, nl);
    if (ell <= degeneracy_eps) throw DegeneracyError(ell);

    const auto& lam = z.basis->eigenvalues();
    Jet jet;
    jet.t = t;
    jet.z = z;
    jet.zt = v;
    jet.theta = theta;
    jet.p = p;

    auto solve_z_row = [&](const SpectralField& forcing, const SpectralField& zval,
                           const SpectralField& thetaval) {
        SpectralField out(z.basis);
        for (size_t i = 0; i < out.coeffs.size(); ++i) {
            const double l = lam[i];
            out.coeffs[i] = l *
                            (forcing.coeffs[i] - params.kappa0 * l * zval.coeffs[i] +
                             params.alpha * l * thetaval.coeffs[i]) /
                            (1.0 + params.gamma * l);
        }
        return out;
    };

    jet.ztt = solve_z_row(apply_AF(z, nl), z, theta);

    jet.theta_t = SpectralField(z.basis);
    jet.pt = SpectralField(z.basis);
    for (size_t i = 0; i < lam.size(); ++i) {
        jet.theta_t.coeffs[i] = -(p.coeffs[i] + params.sigma * theta.coeffs[i] +
                                  params.alpha * v.coeffs[i]) /
                                params.beta;
        jet.pt.coeffs[i] = (params.eta * lam[i] * theta.coeffs[i] - p.coeffs[i]) / params.tau;
    }

    jet.zttt = solve_z_row(apply_AG(z, v, nl), v, jet.theta_t);

    jet.theta_tt = SpectralField(z.basis);
    jet.ptt = SpectralField(z.basis);
    for (size_t i = 0; i < lam.size(); ++i) {
        jet.theta_tt.coeffs[i] = -(jet.pt.coeffs[i] + params.sigma * jet.theta_t.coeffs[i] +
                                   params.alpha * jet.ztt.coeffs[i]) /
                                 params.beta;
        jet.ptt.coeffs[i] =
            (params.eta * lam[i] * jet.theta_t.coeffs[i] - jet.pt.coeffs[i]) / params.tau;
    }

    jet.theta_ttt = SpectralField(z.basis);
    for (size_t i = 0; i < lam.size(); ++i)
        jet.theta_ttt.coeffs[i] = -(jet.ptt.coeffs[i] + params.sigma * jet.theta_tt.coeffs[i] +
                                    params.alpha * jet.zttt.coeffs[i]) /
                                  params.beta;
    return jet;
}

inline Jet initial_jet(const SpectralField& z0, const SpectralField& z1,
                       const SpectralField& theta0, const SpectralField& p0,
                       const ModelParams& params, const Nonlinearity& nl,
                       double degeneracy_eps = 1e-8) {
    return make_jet(0.0, z0, z1, theta0, p0, params, nl, degeneracy_eps);
}

inline Jet runtime_jet(const PlateState& state, const ModelParams& params, const Nonlinearity& nl,
                       double degeneracy_eps = 1e-8) {
    return make_jet(state.t, state.z, state.v, state.theta, state.p, params, nl, degeneracy_eps);
}

namespace detail {

// Per-mode 4x4 implicit midpoint with precomputed LU factors of
// (I - dt/2 M_lambda); forcing enters the v-row.
class ModeStepper {
public:
    ModeStepper(const BasisPtr& basis, const ModelParams& params, double dt)
        : basis_(basis), params_(params), dt_(dt) {
        const auto& lam = basis->eigenvalues();
        fwd_.resize(lam.size());
        lu_.resize(lam.size());
        piv_.resize(lam.size());
        for (size_t i = 0; i < lam.size(); ++i) {
            const auto m = mode_rows(lam[i], params);
            std::array<double, 16> a{}, b{};
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) {
                    const double half = 0.5 * dt * m[r][c];
                    a[r * 4 + c] = (r == c ? 1.0 : 0.0) - half;
                    b[r * 4 + c] = (r == c ? 1.0 : 0.0) + half;
                }
            fwd_[i] = b;
            factorize(a, lu_[i], piv_[i]);
        }
    }

    double dt() const { return dt_; }

    // u_{n+1} = (I - dt/2 M)^{-1} [ (I + dt/2 M) u_n + dt g ], with the
    // forcing coefficient g = lambda af_k / (1 + gamma lambda) on the v-row.
    void apply(const PlateState& in, const SpectralField* af, PlateState& out) const {
        const auto& lam = basis_->eigenvalues();
        for (size_t i = 0; i < lam.size(); ++i) {
            const std::array<double, 4> u{in.z.coeffs[i], in.v.coeffs[i], in.theta.coeffs[i],
                                          in.p.coeffs[i]};
            std::array<double, 4> rhs{};
            const auto& b = fwd_[i];
            for (int r = 0; r < 4; ++r)
                rhs[r] = b[r * 4] * u[0] + b[r * 4 + 1] * u[1] + b[r * 4 + 2] * u[2] +
                         b[r * 4 + 3] * u[3];
            if (af)
                rhs[1] += dt_ * lam[i] * af->coeffs[i] / (1.0 + params_.gamma * lam[i]);
            std::array<double, 4> x = solve(lu_[i], piv_[i], rhs);
            out.z.coeffs[i] = x[0];
            out.v.coeffs[i] = x[1];
            out.theta.coeffs[i] = x[2];
            out.p.coeffs[i] = x[3];
        }
    }

    static std::array<std::array<double, 4>, 4> mode_rows(double lambda,
                                                          const ModelParams& params) {
        const double denom = 1.0 + params.gamma * lambda;
        std::array<std::array<double, 4>, 4> m{};
        m[0][1] = 1.0;
        m[1][0] = -params.kappa0 * lambda * lambda / denom;
        m[1][2] = params.alpha * lambda * lambda / denom;
        m[2][1] = -params.alpha / params.beta;
        m[2][2] = -params.sigma / params.beta;
        m[2][3] = -1.0 / params.beta;
        m[3][2] = params.eta * lambda / params.tau;
        m[3][3] = -1.0 / params.tau;
        return m;
    }

private:
    static void factorize(std::array<double, 16> a, std::array<double, 16>& lu,
                          std::array<int, 4>& piv) {
        for (int i = 0; i < 4; ++i) piv[i] = i;
        for (int col = 0; col < 4; ++col) {
            int pivot = col;
            double best = std::abs(a[col * 4 + col]);
            for (int r = col + 1; r < 4; ++r)
                if (std::abs(a[r * 4 + col]) > best) { best = std::abs(a[r * 4 + col]); pivot = r; }
            if (best < 1e-300) throw std::runtime_error("ModeStepper: singular midpoint solve");
            if (pivot != col) {
                for (int c = 0; c < 4; ++c) std::swap(a[pivot * 4 + c], a[col * 4 + c]);
                std::swap(piv[pivot], piv[col]);
            }
            for (int r = col + 1; r < 4; ++r) {
                const double f = a[r * 4 + col] / a[col * 4 + col];
                a[r * 4 + col] = f;
                for (int c = col + 1; c < 4; ++c) a[r * 4 + c] -= f * a[col * 4 + c];
            }
        }
        lu = a;
    }

    static std::array<double, 4> solve(const std::array<double, 16>& lu,
                                       const std::array<int, 4>& piv,
                                       const std::array<double, 4>& b) {
        std::array<double, 4> x{};
        for (int i = 0; i < 4; ++i) x[i] = b[piv[i]];
        for (int i = 1; i < 4; ++i)
            for (int j = 0; j < i; ++j) x[i] -= lu[i * 4 + j] * x[j];
        for (int i = 3; i >= 0; --i) {
            for (int j = i + 1; j < 4; ++j) x[i] -= lu[i * 4 + j] * x[j];
            x[i] /= lu[i * 4 + i];
        }
        return x;
    }

    BasisPtr basis_;
    ModelParams params_;
    double dt_;
    std::vector<std::array<double, 16>> fwd_;
    std::vector<std::array<double, 16>> lu_;
    std::vector<std::array<int, 4>> piv_;
};

inline PlateState blank_like(const PlateState& s, double t) {
    PlateState out = s;
    out.t = t;
    return out;
}

inline bool state_finite(const PlateState& s) {
    return all_finite(s.z.coeffs) && all_finite(s.v.coeffs) && all_finite(s.theta.coeffs) &&
           all_finite(s.p.coeffs);
}

}  // namespace detail

struct StepResult {
    PlateState state;
    int picard_iters = 1;
    HaltReason halt = HaltReason::completed;
};

// One implicit-midpoint step of the linear system (F = 0). The scheme is
// symmetric, so negative dt steps backward (used by finite-difference probes).
inline PlateState step_linear_midpoint(const PlateState& state, double dt,
                                       const ModelParams& params) {
    params.validate(true);
    detail::require(dt != 0.0, "step_linear_midpoint: dt must be nonzero");
    detail::ModeStepper stepper(state.z.basis, params, dt);
    PlateState out = detail::blank_like(state, state.t + dt);
    stepper.apply(state, nullptr, out);
    return out;
}

namespace detail {

inline double iterate_distance(const PlateState& a, const PlateState& b) {
    double d = l2_distance(a.z, b.z);
    d = std::max(d, l2_distance(a.v, b.v));
    d = std::max(d, l2_distance(a.theta, b.theta));
    d = std::max(d, l2_distance(a.p, b.p));
    return d;
}

// Per-step Picard iteration: freeze zbar, solve the linear midpoint system
// with forcing AF(zbar), update zbar to the new midpoint, repeat until the
// iterate distance drops below tol.
inline StepResult step_picard(const ModeStepper& stepper, const PlateState& state,
                              const Nonlinearity& nl, const SimOptions& opts) {
    const double dt = stepper.dt();
    StepResult res;
    if (nl.is_linear()) {
        res.state = blank_like(state, state.t + dt);
        stepper.apply(state, nullptr, res.state);
        res.picard_iters = 1;
        return res;
    }

    SpectralField zbar = axpy(0.5 * dt, state.v, state.z);  // midpoint predictor
    PlateState next = blank_like(state, state.t + dt);
    PlateState prev = next;
    bool have_prev = false;
    for (int iter = 1; iter <= opts.picard_max_iter; ++iter) {
        if (!all_finite(zbar.coeffs)) {
            res.halt = HaltReason::picard_divergence;
            res.state = state;
            res.picard_iters = iter;
            return res;
        }
        const double ell = ellipticity_min(zbar, nl);
        if (ell <= opts.degeneracy_eps) {
            res.halt = HaltReason::degeneracy;
            res.state = state;
            res.picard_iters = iter;
            return res;
        }
        SpectralField af;
        try {
            af = apply_AF(zbar, nl);
        } catch (const std::runtime_error&) {
            // the frozen iterate overflowed the nonlinear evaluation
            res.halt = HaltReason::picard_divergence;
            res.state = state;
            res.picard_iters = iter;
            return res;
        }
        stepper.apply(state, &af, next);
        if (!state_finite(next)) {
            res.halt = HaltReason::picard_divergence;
            res.state = state;
            res.picard_iters = iter;
            return res;
        }
        zbar = scaled(axpy(1.0, state.z, next.z), 0.5);
        if (have_prev && iterate_distance(next, prev) <= opts.picard_tol) {
            res.state = next;
            res.picard_iters = iter;
            return res;
        }
        prev = next;
        have_prev = true;
    }
    res.halt = HaltReason::picard_divergence;
    res.state = state;
    res.picard_iters = opts.picard_max_iter;
    return res;
}

// Strang splitting: explicit half-kick with AF, full linear midpoint step,
// second half-kick. Order 2, no inner iteration.
inline StepResult step_split(const ModeStepper& stepper, const PlateState& state,
                             const ModelParams& params, const Nonlinearity& nl,
                             const SimOptions& opts) {
    const double dt = stepper.dt();
    StepResult res;
    const auto& lam = state.z.basis->eigenvalues();
    auto kick = [&](PlateState& s) -> std::optional<HaltReason> {
        const double ell = ellipticity_min(s.z, nl);
        if (ell <= opts.degeneracy_eps) return HaltReason::degeneracy;
        SpectralField af;
        try {
            af = apply_AF(s.z, nl);
        } catch (const std::runtime_error&) {
            return HaltReason::blow_up;  // the explicit kick overflowed
        }
        for (size_t i = 0; i < lam.size(); ++i)
            s.v.coeffs[i] += 0.5 * dt * lam[i] * af.coeffs[i] / (1.0 + params.gamma * lam[i]);
        return std::nullopt;
    };
    PlateState work = state;
    if (auto halt = kick(work)) {
        res.halt = *halt;
        res.state = state;
        return res;
    }
    PlateState mid = blank_like(work, state.t + dt);
    stepper.apply(work, nullptr, mid);
    if (auto halt = kick(mid)) {
        res.halt = *halt;
        res.state = state;
        return res;
    }
    if (!state_finite(mid)) {
        res.halt = HaltReason::blow_up;
        res.state = state;
        return res;
    }
    res.state = mid;
    return res;
}

}  // namespace detail

inline StepResult step_nonlinear(const PlateState& state, double dt, const ModelParams& params,
                                 const Nonlinearity& nl, const SimOptions& opts) {
    params.validate(true);
    detail::require(dt != 0.0, "step_nonlinear: dt must be nonzero");
    detail::ModeStepper stepper(state.z.basis, params, dt);
    return detail::step_picard(stepper, state, nl, opts);
}

struct Record {
    double t = 0.0;
    PlateState state;
    Jet jet;
    double ellipticity = 0.0;
    int picard_iters = 0;
};

using RecordSink = std::function<void(const Record&)>;

struct SimResult {
    PlateState final_state;
    HaltReason halt = HaltReason::completed;
    long steps_taken = 0;
    int max_picard_iters = 0;
    double mean_picard_iters = 0.0;
};

inline SimResult simulate(const PlateState& initial, const ModelParams& params,
                          const Nonlinearity& nl, const SimOptions& opts,
                          const RecordSink& sink = {}) {
    params.validate(true);
    opts.validate();
    detail::require(opts.t_end > initial.t, "simulate: t_end must exceed the initial time");
    detail::require(opts.scheme != Scheme::linear_midpoint || nl.is_linear(),
                    "simulate: the linear-midpoint scheme requires the linear model");

    SimResult result;
    result.final_state = initial;

    const double ell0 = ellipticity_min(initial.z, nl);
    if (ell0 <= opts.degeneracy_eps) {
        result.halt = HaltReason::degeneracy;
        return result;
    }

    auto record = [&](const PlateState& s, int iters) {
        if (!sink) return;
        Record rec;
        rec.t = s.t;
        rec.state = s;
        rec.jet = make_jet(s.t, s.z, s.v, s.theta, s.p, params, nl, opts.degeneracy_eps);
        rec.ellipticity = ellipticity_min(s.z, nl);
        rec.picard_iters = iters;
        sink(rec);
    };

    record(initial, 0);

    const long nsteps = std::lround((opts.t_end - initial.t) / opts.dt);
    detail::require(nsteps >= 1, "simulate: no steps between t0 and t_end at this dt");

    detail::ModeStepper stepper(initial.z.basis, params, opts.dt);
    PlateState state = initial;
    long iter_sum = 0;
    auto halt_at = [&](HaltReason reason, long completed_steps) {
        result.halt = reason;
        result.final_state = state;
        result.steps_taken = completed_steps;
        result.mean_picard_iters =
            completed_steps > 0 ? static_cast<double>(iter_sum) / completed_steps : 0.0;
        return result;
    };

    for (long n = 1; n <= nsteps; ++n) {
        StepResult sr;
        switch (opts.scheme) {
            case Scheme::linear_midpoint: {
                sr.state = detail::blank_like(state, 0.0);
                stepper.apply(state, nullptr, sr.state);
                sr.picard_iters = 1;
                break;
            }
            case Scheme::split_explicit:
                sr = detail::step_split(stepper, state, params, nl, opts);
                break;
            case Scheme::picard_midpoint:
                sr = detail::step_picard(stepper, state, nl, opts);
                break;
        }
        if (sr.halt != HaltReason::completed) return halt_at(sr.halt, n - 1);
        sr.state.t = initial.t + n * opts.dt;

        if (!detail::state_finite(sr.state) ||
            sobolev_norm(sr.state.z, 3) > opts.blowup_threshold)
            return halt_at(HaltReason::blow_up, n - 1);
        if (ellipticity_min(sr.state.z, nl) <= opts.degeneracy_eps)
            return halt_at(HaltReason::degeneracy, n - 1);

        state = std::move(sr.state);
        iter_sum += sr.picard_iters;
        result.max_picard_iters = std::max(result.max_picard_iters, sr.picard_iters);
        if (n % opts.record_stride == 0 || n == nsteps) record(state, sr.picard_iters);
    }

    return halt_at(HaltReason::completed, nsteps);
}

inline SimResult simulate(const SpectralField& z0, const SpectralField& z1,
                          const SpectralField& theta0, const SpectralField& p0,
                          const ModelParams& params, const Nonlinearity& nl,
                          const SimOptions& opts, const RecordSink& sink = {}) {
    return simulate(PlateState(0.0, z0, z1, theta0, p0), params, nl, opts, sink);
}

// --- Reconstruction of the original plate variables --------------------------

struct Reconstruction {
    SpectralField w;
    FluxField q;
    double p0_complement = 0.0;  // grid-norm of the part of q0 outside the band
};

// w = A^{-1} z and q = q0 + grad A^{-1} div q0 - grad A^{-1} p(t).
inline Reconstruction reconstruct_w_q(const PlateState& state, const FluxField& q0) {
    Reconstruction rec;
    rec.w = apply_A_power(state.z, -1.0);
    const SpectralField p0 = q0.divergence();
    SpectralField chi = apply_A_power(axpy(-1.0, state.p, p0), -1.0);  // A^{-1}(p0 - p)
    rec.q = q0;
    rec.q.add_scaled(FluxField::from_gradient(chi), 1.0);
    return rec;
}

inline Reconstruction reconstruct_w_q(const PlateState& state,
                                      const std::vector<NodalField>& q0_nodal) {
    double complement = 0.0;
    FluxField q0 = FluxField::from_nodal(q0_nodal, &complement);
    Reconstruction rec = reconstruct_w_q(state, q0);
    rec.p0_complement = complement;
    return rec;
}

struct OriginalJets {
    SpectralField w_t;
    SpectralField w_tt;
    SpectralField theta_t;
    FluxField q_t;
};

struct ResidualNorms {
    double plate = 0.0;  // w_tt - gamma Lap w_tt + Lap K(Lap w) + alpha Lap theta
    double heat = 0.0;   // beta theta_t + div q + sigma theta - alpha Lap w_t
    double flux = 0.0;   // tau q_t + q + eta grad theta
};

// L2 residuals of the original formulation; time derivatives are supplied by
// the caller (e.g. finite differences of a trajectory) so the check stays
// independent of the equation-defined jets.
inline ResidualNorms residual_original(const SpectralField& w, const SpectralField& theta,
                                       const FluxField& q, const OriginalJets& jets,
                                       const ModelParams& params, const Nonlinearity& nl) {
    const auto& lam = w.basis->eigenvalues();
    ResidualNorms out;

    const SpectralField z = apply_A_power(w, 1.0);
    const SpectralField an = apply_AN(z, nl);  // samples of Lap K(Lap w) = A N(z)
    double s1 = 0.0;
    for (size_t i = 0; i < lam.size(); ++i) {
        const double r = (1.0 + params.gamma * lam[i]) * jets.w_tt.coeffs[i] + an.coeffs[i] -
                         params.alpha * lam[i] * theta.coeffs[i];
        s1 += r * r;
    }
    out.plate = std::sqrt(s1);

    const SpectralField divq = q.divergence();
    double s2 = 0.0;
    for (size_t i = 0; i < lam.size(); ++i) {
        const double r = params.beta * jets.theta_t.coeffs[i] + divq.coeffs[i] +
                         params.sigma * theta.coeffs[i] +
                         params.alpha * lam[i] * jets.w_t.coeffs[i];
        s2 += r * r;
    }
    out.heat = std::sqrt(s2);

    FluxField r3 = jets.q_t;
    // tau q_t + q + eta grad theta
    for (int a = 0; a < w.basis->dim(); ++a)
        for (double& c : r3.component(a)) c *= params.tau;
    r3.add_scaled(q, 1.0);
    r3.add_scaled(FluxField::from_gradient(theta), params.eta);
    out.flux = r3.l2_norm();
    return out;
}

}  // namespace cattplate

#pragma once

// Weighted energies at three time-differentiation levels, the full
// topological energy X and remainder Y = X - E, the level-1 dissipation
// identity residual, exponential-decay fitting and boundedness reporting.
//
//   E1 = 1/2 ( |A^{-1/2} z_t|^2 + gamma |z_t|^2 + kappa0 |A^{1/2} z|^2
//              + beta |A^{1/2} theta|^2 + (tau/eta) |p|^2 )
// with E2, E3 the same form on time-shifted jets (kappa0 = 1 recovers the
// unit-coefficient system). X collects the H^k product norms of the jets and
// Y = X - E the higher-order remainder.

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "cattplate/dynamics.hpp"

namespace cattplate {

struct EnergyReport {
    double t = 0.0;
    double E1 = 0.0, E2 = 0.0, E3 = 0.0, E = 0.0;
    double X = 0.0, Y = 0.0;
    double ellipticity_min = std::numeric_limits<double>::quiet_NaN();
    // E1 summands: A^{-1/2} z_t, gamma z_t, kappa0 A^{1/2} z, beta A^{1/2} theta, (tau/eta) p.
    std::array<double, 5> e1_terms{};
};

namespace detail {

inline double weighted_half_sum(const SpectralField& u, const std::vector<double>& lam,
                                double power, double factor) {
    double s = 0.0;
    for (size_t i = 0; i < u.coeffs.size(); ++i)
        s += std::pow(lam[i], power) * u.coeffs[i] * u.coeffs[i];
    return 0.5 * factor * s;
}

inline double sq(double x) { return x * x; }

}  // namespace detail

// E1 needs no time derivatives beyond z_t, so it is available directly from a
// state (used for initial-data normalization before any jet exists).
inline double e1_of_state(const PlateState& s, const ModelParams& params) {
    const auto& lam = s.z.basis->eigenvalues();
    return detail::weighted_half_sum(s.v, lam, -1.0, 1.0) +
           detail::weighted_half_sum(s.v, lam, 0.0, params.gamma) +
           detail::weighted_half_sum(s.z, lam, 1.0, params.kappa0) +
           detail::weighted_half_sum(s.theta, lam, 1.0, params.beta) +
           detail::weighted_half_sum(s.p, lam, 0.0, params.tau / params.eta);
}

inline EnergyReport energy_levels(const Jet& jet, const ModelParams& params) {
    const auto& lam = jet.z.basis->eigenvalues();
    EnergyReport rep;
    rep.t = jet.t;

    auto level = [&](const SpectralField& zt, const SpectralField& zlow, const SpectralField& th,
                     const SpectralField& pp, std::array<double, 5>* terms) {
        const double a = detail::weighted_half_sum(zt, lam, -1.0, 1.0);
        const double b = detail::weighted_half_sum(zt, lam, 0.0, params.gamma);
        const double c = detail::weighted_half_sum(zlow, lam, 1.0, params.kappa0);
        const double d = detail::weighted_half_sum(th, lam, 1.0, params.beta);
        const double e = detail::weighted_half_sum(pp, lam, 0.0, params.tau / params.eta);
        if (terms) *terms = {a, b, c, d, e};
        return a + b + c + d + e;
    };

    rep.E1 = level(jet.zt, jet.z, jet.theta, jet.p, &rep.e1_terms);
    rep.E2 = level(jet.ztt, jet.zt, jet.theta_t, jet.pt, nullptr);
    rep.E3 = level(jet.zttt, jet.ztt, jet.theta_tt, jet.ptt, nullptr);
    rep.E = rep.E1 + rep.E2 + rep.E3;

    rep.X = detail::sq(sobolev_norm(jet.z, 3)) + detail::sq(sobolev_norm(jet.zt, 2)) +
            detail::sq(sobolev_norm(jet.ztt, 1)) + detail::sq(sobolev_norm(jet.zttt, 0)) +
            detail::sq(sobolev_norm(jet.theta, 3)) + detail::sq(sobolev_norm(jet.theta_t, 2)) +
            detail::sq(sobolev_norm(jet.theta_tt, 1)) + detail::sq(sobolev_norm(jet.theta_ttt, 0)) +
            detail::sq(sobolev_norm(jet.p, 2)) + detail::sq(sobolev_norm(jet.pt, 1)) +
            detail::sq(sobolev_norm(jet.ptt, 0));
    rep.Y = rep.X - rep.E;
    return rep;
}

// Residual of the level-1 identity
//   E1(T) + int_0^T (1/eta)|p|^2 dt = E1(0) + int_0^T <AF(z), z_t> dt
// over a uniformly sampled jet series, with both quadratures evaluated at the
// averaged states (the exactness class of the midpoint scheme: for the linear
// model the residual is round-off only). Requires sigma = 0.
inline double dissipation_residual(const std::vector<Jet>& series, const ModelParams& params,
                                   const Nonlinearity& nl) {
    detail::require(params.sigma == 0.0,
                    "dissipation_residual: identity requires sigma = 0");
    detail::require(series.size() >= 2, "dissipation_residual: need at least two samples");
    const double dt0 = series[1].t - series[0].t;
    detail::require(dt0 > 0.0, "dissipation_residual: times must increase");
    for (size_t n = 1; n + 1 < series.size(); ++n) {
        const double d = series[n + 1].t - series[n].t;
        detail::require(std::abs(d - dt0) <= 1e-9 * std::max(1.0, std::abs(dt0)),
                        "dissipation_residual: non-uniform sampling");
    }

    const double e1_start = energy_levels(series.front(), params).E1;
    const double e1_end = energy_levels(series.back(), params).E1;

    double q_p = 0.0;
    double q_f = 0.0;
    for (size_t n = 0; n + 1 < series.size(); ++n) {
        const Jet& a = series[n];
        const Jet& b = series[n + 1];
        const SpectralField p_mid = scaled(axpy(1.0, a.p, b.p), 0.5);
        q_p += dt0 * inner(p_mid, p_mid) / params.eta;
        if (!nl.is_linear()) {
            const SpectralField z_mid = scaled(axpy(1.0, a.z, b.z), 0.5);
            const SpectralField v_mid = scaled(axpy(1.0, a.zt, b.zt), 0.5);
            q_f += dt0 * inner(apply_AF(z_mid, nl), v_mid);
        }
    }
    const double denom = std::max(e1_start, 1e-300);
    return std::abs(e1_end + q_p - e1_start - q_f) / denom;
}

struct DecayFit {
    double kappa_hat = 0.0;
    double C_hat = 0.0;
    double r_squared = 0.0;
    double t_a = 0.0;
    double t_b = 0.0;
    size_t samples = 0;
};

// Least-squares line fit of log X against t over [t_a, t_b]; kappa_hat is the
// negated slope and C_hat = exp(intercept). Defaults to the second half of
// the series to skip transients.
inline DecayFit decay_fit(const std::vector<std::pair<double, double>>& series,
                          double t_a = std::numeric_limits<double>::quiet_NaN(),
                          double t_b = std::numeric_limits<double>::quiet_NaN()) {
    detail::require(series.size() >= 2, "decay_fit: need at least two samples");
    const double t_min = series.front().first;
    const double t_max = series.back().first;
    if (!std::isfinite(t_a)) t_a = 0.5 * (t_min + t_max);
    if (!std::isfinite(t_b)) t_b = t_max;
    detail::require(t_a < t_b, "decay_fit: window must satisfy t_a < t_b");

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    size_t n = 0;
    for (const auto& [t, x] : series) {
        if (t < t_a || t > t_b) continue;
        detail::require(x > 0.0, "decay_fit: nonpositive sample in fit window");
        const double y = std::log(x);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        syy += y * y;
        ++n;
    }
    detail::require(n >= 10, "decay_fit: need at least 10 samples in the window");

    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    detail::require(denom > 0.0, "decay_fit: degenerate time samples");
    const double slope = (nn * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / nn;

    const double ss_tot = syy - sy * sy / nn;
    const double ss_res = ss_tot - slope * (sxy - sx * sy / nn);
    DecayFit fit;
    fit.kappa_hat = -slope;
    fit.C_hat = std::exp(intercept);
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.t_a = t_a;
    fit.t_b = t_b;
    fit.samples = n;
    return fit;
}

struct BarrierReport {
    double sup_X_ratio = 0.0;
    double sup_E1_ratio = 0.0;
    bool eventually_monotone = false;
    double monotone_from = std::numeric_limits<double>::quiet_NaN();
};

// Descriptive boundedness report: sup X/X(0), sup E1/E1(0), and whether the
// moving-max envelope of X is non-increasing from some recorded time onward.
inline BarrierReport barrier_report(const std::vector<std::pair<double, double>>& x_series,
                                    const std::vector<std::pair<double, double>>& e1_series,
                                    double x0, double e1_0) {
    BarrierReport rep;
    auto sup_ratio = [](const std::vector<std::pair<double, double>>& s, double denom) {
        if (denom <= 0.0) return 0.0;  // zero run convention
        double m = 0.0;
        for (const auto& [t, v] : s) m = std::max(m, v / denom);
        return m;
    };
    rep.sup_X_ratio = sup_ratio(x_series, x0);
    rep.sup_E1_ratio = sup_ratio(e1_series, e1_0);

    // Running-max envelope: X counts as eventually monotone when it stops
    // setting new records strictly before the end of the series.
    const size_t n = x_series.size();
    if (n >= 3) {
        size_t last_record = 0;
        double running_max = x_series[0].second;
        for (size_t i = 1; i < n; ++i)
            if (x_series[i].second > running_max * (1.0 + 1e-12)) {
                running_max = x_series[i].second;
                last_record = i;
            }
        if (last_record + 1 < n) {
            rep.eventually_monotone = true;
            rep.monotone_from = x_series[last_record].first;
        }
    }
    return rep;
}

}  // namespace cattplate

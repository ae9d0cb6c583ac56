#pragma once

// Model coefficients and the scalar response calculus in the z-frame.
//
// The reduced plate system is driven by N(z) := -K(-z), so the z-equation
// reads (A^{-1} + gamma) z_tt + A N(z) - alpha A theta = 0. All chain-rule
// identities are derived from N via -Delta N(z) = N'(z) A z - N''(z)|grad z|^2,
// which keeps the argument signs unambiguous. The Taylor remainder
// F(z) = N'(0) z - N(z) and its time jets G, H feed the weighted energy
// estimates; AF, AG, AH are evaluated on the padded grid and projected back.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cattplate/basis.hpp"

namespace cattplate {

struct ModelParams {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double eta = 1.0;
    double tau = 1.0;
    double sigma = 0.0;
    double kappa0 = 1.0;

    // The time-domain simulator needs gamma > 0 and tau > 0; the oracle
    // admits the gamma = 0 and tau = 0 limits. alpha = 0 is allowed so the
    // decoupled plate/thermal blocks can be exercised directly.
    void validate(bool for_simulation = false) const {
        detail::require(beta > 0.0 && eta > 0.0 && kappa0 > 0.0,
                        "ModelParams: beta, eta, kappa0 must be positive");
        detail::require(alpha >= 0.0 && gamma >= 0.0 && tau >= 0.0 && sigma >= 0.0,
                        "ModelParams: alpha, gamma, tau, sigma must be nonnegative");
        if (for_simulation)
            detail::require(gamma > 0.0 && tau > 0.0,
                            "ModelParams: simulation requires gamma > 0 and tau > 0");
    }
};

// Scalar z-frame response with derivatives to order 4.
class Nonlinearity {
public:
    using Fn = std::function<double(double)>;

    static Nonlinearity from_response(std::string name, std::array<Fn, 5> n, bool linear = false) {
        Nonlinearity nl;
        nl.name_ = std::move(name);
        nl.n_ = std::move(n);
        nl.linear_ = linear;
        nl.kappa0_ = nl.n_[1](0.0);
        detail::require(std::abs(nl.n_[0](0.0)) <= 1e-12, "Nonlinearity: N(0) must vanish");
        detail::require(nl.kappa0_ > 0.0, "Nonlinearity: N'(0) must be positive");
        return nl;
    }

    // Wires N^{(j)}(z) = (-1)^{j+1} K^{(j)}(-z) from a response K with
    // derivatives to order 4. Rejects K'(0) <= 0.
    static Nonlinearity from_K(std::string name, std::array<Fn, 5> K,
                               double kappa0_hint = std::numeric_limits<double>::quiet_NaN()) {
        std::array<Fn, 5> n;
        for (int j = 0; j <= 4; ++j) {
            const double sign = (j % 2 == 0) ? -1.0 : 1.0;  // (-1)^{j+1}
            n[j] = [K = K[j], sign](double z) { return sign * K(-z); };
        }
        auto nl = from_response(std::move(name), std::move(n));
        if (std::isfinite(kappa0_hint))
            detail::require(std::abs(nl.kappa0_ - kappa0_hint) <=
                                1e-10 * std::max(1.0, std::abs(kappa0_hint)),
                            "Nonlinearity: K'(0) does not match the supplied kappa0");
        return nl;
    }

    static Nonlinearity linear(double kappa0) {
        return from_response("linear",
                             {Fn([kappa0](double z) { return kappa0 * z; }),
                              Fn([kappa0](double) { return kappa0; }), Fn([](double) { return 0.0; }),
                              Fn([](double) { return 0.0; }), Fn([](double) { return 0.0; })},
                             /*linear=*/true);
    }

    // N(z) = kappa0 z + c z^3 (stiffening for c > 0, softening for c < 0).
    static Nonlinearity cubic(double kappa0, double c) {
        std::string name = c >= 0.0 ? "cubic-stiffening" : "cubic-softening";
        return from_response(std::move(name),
                             {Fn([=](double z) { return kappa0 * z + c * z * z * z; }),
                              Fn([=](double z) { return kappa0 + 3.0 * c * z * z; }),
                              Fn([=](double z) { return 6.0 * c * z; }),
                              Fn([=](double) { return 6.0 * c; }), Fn([](double) { return 0.0; })});
    }

    // N(z) = kappa0 z - c z^2. Violates the N''(0) = 0 assumption for c != 0.
    static Nonlinearity quadratic(double kappa0, double c) {
        return from_response("quadratic",
                             {Fn([=](double z) { return kappa0 * z - c * z * z; }),
                              Fn([=](double z) { return kappa0 - 2.0 * c * z; }),
                              Fn([=](double) { return -2.0 * c; }), Fn([](double) { return 0.0; }),
                              Fn([](double) { return 0.0; })});
    }

    double value(double z, int order = 0) const { return n_[order](z); }
    double kappa0() const { return kappa0_; }
    bool is_linear() const { return linear_; }
    const std::string& name() const { return name_; }

    // Taylor remainder F(z) = N'(0) z - N(z) and derivatives.
    double F(double z) const { return kappa0_ * z - n_[0](z); }
    double F1(double z) const { return kappa0_ - n_[1](z); }
    double F2(double z) const { return -n_[2](z); }
    double F3(double z) const { return -n_[3](z); }
    double F4(double z) const { return -n_[4](z); }

private:
    std::string name_;
    std::array<Fn, 5> n_;
    double kappa0_ = 0.0;
    bool linear_ = false;
};

namespace detail {

inline void require_finite_values(const std::vector<double>& v, const char* what) {
    if (!all_finite(v)) throw std::runtime_error(std::string(what) + ": non-finite value");
}

}  // namespace detail

// Pointwise remainder F(z) on a nodal grid.
inline NodalField remainder_F(const Nonlinearity& nl, const NodalField& z) {
    detail::require_finite_values(z.values, "remainder_F");
    NodalField out(z.basis);
    for (size_t i = 0; i < z.values.size(); ++i) out.values[i] = nl.F(z.values[i]);
    return out;
}

// G(z) = d/dt F(z) = F'(z) z_t.
inline NodalField remainder_G(const Nonlinearity& nl, const NodalField& z, const NodalField& zt) {
    detail::require_same_basis(*z.basis, *zt.basis);
    detail::require_finite_values(z.values, "remainder_G");
    detail::require_finite_values(zt.values, "remainder_G");
    NodalField out(z.basis);
    for (size_t i = 0; i < z.values.size(); ++i)
        out.values[i] = nl.F1(z.values[i]) * zt.values[i];
    return out;
}

// H(z) = d/dt G(z) = F''(z) z_t^2 + F'(z) z_tt.
inline NodalField remainder_H(const Nonlinearity& nl, const NodalField& z, const NodalField& zt,
                              const NodalField& ztt) {
    detail::require_same_basis(*z.basis, *zt.basis);
    detail::require_same_basis(*z.basis, *ztt.basis);
    detail::require_finite_values(z.values, "remainder_H");
    detail::require_finite_values(zt.values, "remainder_H");
    detail::require_finite_values(ztt.values, "remainder_H");
    NodalField out(z.basis);
    for (size_t i = 0; i < z.values.size(); ++i)
        out.values[i] = nl.F2(z.values[i]) * zt.values[i] * zt.values[i] +
                        nl.F1(z.values[i]) * ztt.values[i];
    return out;
}

namespace detail {

struct NodalJet {
    NodalField val;
    NodalField lap;  // samples of A u = -Delta u
    std::vector<NodalField> grad;
};

inline NodalJet nodal_jet(const SpectralField& u) {
    return NodalJet{to_nodal(u), to_nodal(apply_A_power(u, 1.0)), gradient(u)};
}

inline double grad_dot(const std::vector<NodalField>& a, const std::vector<NodalField>& b,
                       size_t i) {
    double s = 0.0;
    for (size_t d = 0; d < a.size(); ++d) s += a[d].values[i] * b[d].values[i];
    return s;
}

inline SpectralField project_checked(const NodalField& f, const char* what) {
    if (!all_finite(f.values)) throw std::runtime_error(std::string(what) + ": non-finite intermediate (under-resolved?)");
    return to_modal(f);
}

}  // namespace detail

// AF(z) = F'(z) A z - F''(z) |grad z|^2, evaluated on the padded grid and
// projected back to modal space.
inline SpectralField apply_AF(const SpectralField& z, const Nonlinearity& nl) {
    if (nl.is_linear()) return SpectralField(z.basis);
    auto zj = detail::nodal_jet(z);
    NodalField out(z.basis);
    for (size_t i = 0; i < out.values.size(); ++i) {
        const double zv = zj.val.values[i];
        out.values[i] = nl.F1(zv) * zj.lap.values[i] -
                        nl.F2(zv) * detail::grad_dot(zj.grad, zj.grad, i);
    }
    return detail::project_checked(out, "apply_AF");
}

// AG(z) = A(F'(z) z_t)
//       = -F'''(z) z_t |grad z|^2 - 2 F''(z) (grad z . grad z_t)
//         + F''(z) z_t A z + F'(z) A z_t.
inline SpectralField apply_AG(const SpectralField& z, const SpectralField& zt,
                              const Nonlinearity& nl) {
    if (nl.is_linear()) return SpectralField(z.basis);
    detail::require_same_basis(*z.basis, *zt.basis);
    auto zj = detail::nodal_jet(z);
    auto tj = detail::nodal_jet(zt);
    NodalField out(z.basis);
    for (size_t i = 0; i < out.values.size(); ++i) {
        const double zv = zj.val.values[i];
        const double g2 = detail::grad_dot(zj.grad, zj.grad, i);
        const double gg = detail::grad_dot(zj.grad, tj.grad, i);
        out.values[i] = -nl.F3(zv) * tj.val.values[i] * g2 - 2.0 * nl.F2(zv) * gg +
                        nl.F2(zv) * tj.val.values[i] * zj.lap.values[i] +
                        nl.F1(zv) * tj.lap.values[i];
    }
    return detail::project_checked(out, "apply_AG");
}

// AH(z) = A(F''(z) z_t^2) + A(F'(z) z_tt), fully expanded:
//   A(F'' z_t^2) = -F''''(z)|grad z|^2 z_t^2 + F'''(z) (A z) z_t^2
//                  - 4 F'''(z) z_t (grad z . grad z_t)
//                  - 2 F''(z)|grad z_t|^2 + 2 F''(z) z_t A z_t,
//   A(F' z_tt)   = -F'''(z) z_tt |grad z|^2 - 2 F''(z) (grad z . grad z_tt)
//                  + F''(z) z_tt A z + F'(z) A z_tt.
inline SpectralField apply_AH(const SpectralField& z, const SpectralField& zt,
                              const SpectralField& ztt, const Nonlinearity& nl) {
    if (nl.is_linear()) return SpectralField(z.basis);
    detail::require_same_basis(*z.basis, *zt.basis);
    detail::require_same_basis(*z.basis, *ztt.basis);
    auto zj = detail::nodal_jet(z);
    auto tj = detail::nodal_jet(zt);
    auto sj = detail::nodal_jet(ztt);
    NodalField out(z.basis);
    for (size_t i = 0; i < out.values.size(); ++i) {
        const double zv = zj.val.values[i];
        const double ztv = tj.val.values[i];
        const double zttv = sj.val.values[i];
        const double gz2 = detail::grad_dot(zj.grad, zj.grad, i);
        const double gzt2 = detail::grad_dot(tj.grad, tj.grad, i);
        const double gz_gzt = detail::grad_dot(zj.grad, tj.grad, i);
        const double gz_gztt = detail::grad_dot(zj.grad, sj.grad, i);
        const double part1 = -nl.F4(zv) * gz2 * ztv * ztv + nl.F3(zv) * zj.lap.values[i] * ztv * ztv -
                             4.0 * nl.F3(zv) * ztv * gz_gzt - 2.0 * nl.F2(zv) * gzt2 +
                             2.0 * nl.F2(zv) * ztv * tj.lap.values[i];
        const double part2 = -nl.F3(zv) * zttv * gz2 - 2.0 * nl.F2(zv) * gz_gztt +
                             nl.F2(zv) * zttv * zj.lap.values[i] + nl.F1(zv) * sj.lap.values[i];
        out.values[i] = part1 + part2;
    }
    return detail::project_checked(out, "apply_AH");
}

// A N(z) = N'(z) A z - N''(z)|grad z|^2 (same expansion applied to N itself);
// used by the residual checks against the original formulation.
inline SpectralField apply_AN(const SpectralField& z, const Nonlinearity& nl) {
    auto zj = detail::nodal_jet(z);
    NodalField out(z.basis);
    for (size_t i = 0; i < out.values.size(); ++i) {
        const double zv = zj.val.values[i];
        out.values[i] = nl.value(zv, 1) * zj.lap.values[i] -
                        nl.value(zv, 2) * detail::grad_dot(zj.grad, zj.grad, i);
    }
    return detail::project_checked(out, "apply_AN");
}

// Minimum of N'(z(x)) over the padded nodal grid.
inline double ellipticity_min(const SpectralField& z, const Nonlinearity& nl) {
    auto zn = to_nodal(z);
    double m = std::numeric_limits<double>::infinity();
    for (double v : zn.values) m = std::min(m, nl.value(v, 1));
    return m;
}

struct AssumptionCheck {
    std::string condition;
    bool pass = false;
    double worst_value = 0.0;
    double worst_at = 0.0;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

// Samples N, N', N'' on [-rho, rho] and reports the smoothness/positivity
// conditions used by the global theory: N(0) = 0, N'(0) > 0, N''(0) = 0 and
// min N' > 0 on the sampled range.
inline AssumptionReport check_assumptions(const Nonlinearity& nl, double rho,
                                          int samples = 2001) {
    detail::require(rho > 0.0, "check_assumptions: rho must be positive");
    detail::require(samples >= 3, "check_assumptions: need at least 3 samples");
    AssumptionReport rep;

    const double n0 = nl.value(0.0, 0);
    rep.checks.push_back({"N(0) = 0", std::abs(n0) <= 1e-12, n0, 0.0});
    const double n1 = nl.value(0.0, 1);
    rep.checks.push_back({"N'(0) > 0", n1 > 0.0, n1, 0.0});
    const double n2 = nl.value(0.0, 2);
    rep.checks.push_back({"N''(0) = 0", std::abs(n2) <= 1e-12, n2, 0.0});

    double min_n1 = std::numeric_limits<double>::infinity();
    double at = 0.0;
    bool finite = true;
    for (int i = 0; i < samples; ++i) {
        const double zv = -rho + 2.0 * rho * i / (samples - 1);
        for (int ord = 0; ord <= 2; ++ord)
            if (!std::isfinite(nl.value(zv, ord))) finite = false;
        const double d = nl.value(zv, 1);
        if (d < min_n1) { min_n1 = d; at = zv; }
    }
    rep.checks.push_back({"N' > 0 on [-rho, rho]", min_n1 > 0.0, min_n1, at});
    rep.checks.push_back({"finite on sampled range", finite, finite ? 0.0 : 1.0, 0.0});
    return rep;
}

// Appendix-style physical inputs (SI units).
struct PhysicalParams {
    double density = 0.0;                // rho_m
    double thickness = 0.0;              // h
    double rigidity = 0.0;               // flexural rigidity D
    double poisson = 0.0;                // nu < 1/2
    double heat_capacity = 0.0;          // c
    double expansion = 0.0;              // alpha_th
    double lambda0 = 0.0;                // bulk conductivity
    double lambda1 = 0.0;                // face cooling coefficient
    double relaxation = 0.0;             // tau_0
    double reference_temperature = 0.0;  // T_0
    double bulk_modulus = 0.0;           // B_m

    void validate() const {
        detail::require(density > 0 && thickness > 0 && rigidity > 0 && heat_capacity > 0 &&
                            expansion > 0 && lambda0 > 0 && lambda1 >= 0 && relaxation > 0 &&
                            reference_temperature > 0 && bulk_modulus > 0,
                        "PhysicalParams: all inputs must be positive (lambda1 may be zero)");
        detail::require(poisson > -1.0 && poisson < 0.5, "PhysicalParams: need -1 < nu < 1/2");
    }
};

struct NormalizationReport {
    double mu = 0.0;       // (theta, q) were divided by mu; multiply to undo
    double k_scale = 0.0;  // the physical response K is divided by rho_m h
    double coeff_plate_dtheta = 0.0;
    double coeff_heat_dwt = 0.0;
};

// Maps the final plate system of the physical derivation onto the normalized
// coefficients: the plate equation is divided by rho_m h (so gamma = h^2/12
// and the stiffness scales by 1/(rho_m h)), and (theta, q) are rescaled by a
// common factor mu = sqrt(a2/a1) chosen so both cross couplings equal
// alpha = sqrt(a1 a2), with a1 = D(1+nu)/(2 rho_m h) and a2 = 3 B_m alpha_th T0.
inline std::pair<ModelParams, NormalizationReport> normalize_physical(const PhysicalParams& p) {
    p.validate();
    const double h = p.thickness;
    const double a1 = p.rigidity * (1.0 + p.poisson) / (2.0 * p.density * h);
    const double a2 = 3.0 * p.bulk_modulus * p.expansion * p.reference_temperature;

    ModelParams m;
    m.gamma = h * h / 12.0;
    m.alpha = std::sqrt(a1 * a2);
    m.beta = p.density * p.heat_capacity / p.expansion;
    m.sigma = 12.0 / (p.expansion * h * h) * (p.lambda0 + h * p.lambda1 / 2.0);
    m.eta = p.lambda0 / p.expansion;
    m.tau = p.relaxation;
    m.kappa0 = p.rigidity / (p.density * h);  // K'(0) = D for the averaged response

    NormalizationReport rep;
    rep.mu = std::sqrt(a2 / a1);
    rep.k_scale = 1.0 / (p.density * h);
    rep.coeff_plate_dtheta = a1 * rep.mu;
    rep.coeff_heat_dwt = a2 / rep.mu;
    m.validate(false);
    return {m, rep};
}

}  // namespace cattplate

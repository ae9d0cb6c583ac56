#pragma once

// Independent ground truth for the linear theory. Each eigenmode of A turns
// the linear reduced system into a small ODE
//     z' = v
//     v' = lambda (-kappa0 lambda z + alpha lambda theta) / (1 + gamma lambda)
//     theta' = -(p + sigma theta + alpha v) / beta
//     p' = (eta lambda theta - p) / tau
// (4x4 for tau > 0; for tau = 0 the flux moment is eliminated exactly via
// p = eta lambda theta, the Fourier limit, giving a 3x3 system). Dense
// eigensolves provide spectral abscissas, a Pade scaling-and-squaring matrix
// exponential provides reference trajectories, and the (gamma, tau) sweep
// reproduces the stability dichotomy.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "cattplate/model.hpp"

namespace cattplate {

enum class MatrixForm { automatic, full_4x4, fourier_3x3 };

struct ModeMatrix {
    double lambda = 0.0;
    ModelParams params;
    int size = 4;
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();  // top-left size x size block

    Eigen::MatrixXd dense() const { return m.topLeftCorner(size, size); }
};

inline ModeMatrix mode_matrix(double lambda, const ModelParams& params,
                              MatrixForm form = MatrixForm::automatic) {
    detail::require(lambda > 0.0, "mode_matrix: lambda must be positive");
    // The oracle admits the alpha = 0, gamma = 0 and tau = 0 limits.
    detail::require(params.beta > 0.0 && params.eta > 0.0 && params.kappa0 > 0.0,
                    "mode_matrix: beta, eta, kappa0 must be positive");
    detail::require(params.alpha >= 0.0 && params.gamma >= 0.0 && params.tau >= 0.0 &&
                        params.sigma >= 0.0,
                    "mode_matrix: alpha, gamma, tau, sigma must be nonnegative");
    if (form == MatrixForm::full_4x4 && params.tau == 0.0)
        throw std::invalid_argument("mode_matrix: 4x4 form requested but tau = 0");

    ModeMatrix mm;
    mm.lambda = lambda;
    mm.params = params;
    const double denom = 1.0 + params.gamma * lambda;
    const double vz = -params.kappa0 * lambda * lambda / denom;
    const double vtheta = params.alpha * lambda * lambda / denom;

    const bool fourier = (params.tau == 0.0) || form == MatrixForm::fourier_3x3;
    if (fourier) {
        detail::require(params.tau == 0.0 || form == MatrixForm::fourier_3x3,
                        "mode_matrix: Fourier form is the tau = 0 limit");
        mm.size = 3;
        mm.m(0, 1) = 1.0;
        mm.m(1, 0) = vz;
        mm.m(1, 2) = vtheta;
        mm.m(2, 1) = -params.alpha / params.beta;
        mm.m(2, 2) = -(params.sigma + params.eta * lambda) / params.beta;
        return mm;
    }

    mm.size = 4;
    mm.m(0, 1) = 1.0;
    mm.m(1, 0) = vz;
    mm.m(1, 2) = vtheta;
    mm.m(2, 1) = -params.alpha / params.beta;
    mm.m(2, 2) = -params.sigma / params.beta;
    mm.m(2, 3) = -1.0 / params.beta;
    mm.m(3, 2) = params.eta * lambda / params.tau;
    mm.m(3, 3) = -1.0 / params.tau;
    return mm;
}

struct ModeSpectrum {
    double lambda = 0.0;
    std::vector<std::complex<double>> eigenvalues;  // sorted: Re desc, then Im asc
    double abscissa = 0.0;
};

// Largest |char poly| over the computed eigenvalues, for cross-checking the
// dense solve before freezing golden values.
inline double char_poly_residual(const ModeMatrix& mm, const ModeSpectrum& sp) {
    const Eigen::MatrixXd a = mm.dense();
    double worst = 0.0;
    for (const auto& s : sp.eigenvalues) {
        Eigen::MatrixXcd shifted = a.cast<std::complex<double>>();
        for (int i = 0; i < mm.size; ++i) shifted(i, i) -= s;
        worst = std::max(worst, std::abs(shifted.determinant()));
    }
    return worst;
}

namespace detail {

// Parlett-Reinsch balancing (radix-2 diagonal similarity). The gamma = 0 mode
// matrices carry lambda^2 entries next to O(1/lambda) real parts; balancing
// keeps those real parts resolvable by the dense eigensolve.
inline Eigen::MatrixXd balance(Eigen::MatrixXd a) {
    const int n = static_cast<int>(a.rows());
    bool converged = false;
    while (!converged) {
        converged = true;
        for (int i = 0; i < n; ++i) {
            double c = 0.0, r = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(a(j, i));
                r += std::abs(a(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            const double s = c + r;
            double f = 1.0;
            while (c < r / 2.0) { c *= 2.0; r /= 2.0; f *= 2.0; }
            while (c >= r * 2.0) { c /= 2.0; r *= 2.0; f /= 2.0; }
            if (c + r < 0.95 * s) {
                converged = false;
                a.col(i) *= f;
                a.row(i) /= f;
            }
        }
    }
    return a;
}

}  // namespace detail

inline ModeSpectrum spectral_abscissa(const ModeMatrix& mm) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(detail::balance(mm.dense()),
                                               /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("spectral_abscissa: dense eigensolve failed");
    ModeSpectrum sp;
    sp.lambda = mm.lambda;
    sp.eigenvalues.reserve(mm.size);
    for (int i = 0; i < mm.size; ++i) sp.eigenvalues.push_back(solver.eigenvalues()[i]);
    std::sort(sp.eigenvalues.begin(), sp.eigenvalues.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  if (a.real() != b.real()) return a.real() > b.real();
                  return a.imag() < b.imag();
              });
    sp.abscissa = sp.eigenvalues.front().real();
    return sp;
}

// exp(t M) u0 via Eigen's scaling-and-squaring Pade exponential.
inline Eigen::VectorXd propagate_exact(const Eigen::VectorXd& u0, const ModeMatrix& mm, double t) {
    detail::require(t >= 0.0, "propagate_exact: t must be nonnegative");
    detail::require(u0.size() == mm.size, "propagate_exact: state size mismatch");
    const Eigen::MatrixXd a = mm.dense();
    const double scale = t * a.cwiseAbs().rowwise().sum().maxCoeff();
    if (scale > 500.0) throw std::overflow_error("propagate_exact: t * ||M|| too large");
    Eigen::MatrixXd e = (t * a).exp();
    return e * u0;
}

struct SweepCell {
    double gamma = 0.0;
    double tau = 0.0;
    std::vector<ModeSpectrum> spectra;  // k = 1..k_max
    double inf_neg_abscissa = 0.0;      // over all k
    double trend_ratio = 0.0;           // (-abscissa at k_max) / (-abscissa at k_max/8)
    std::string classification;         // "uniformly-damped" | "damping-vanishes"
};

struct SweepResult {
    std::vector<SweepCell> cells;  // ordered by (gamma, tau) as given
    int k_max = 0;
};

// Classifies each (gamma, tau) cell by whether the damping seen over all
// k = 1..k_max keeps at least 90% of the damping seen on k <= k_max/2.
inline SweepResult stability_sweep(const ModelParams& base, const std::vector<double>& gamma_list,
                                   const std::vector<double>& tau_list, int k_max,
                                   double domain_length = 1.0) {
    detail::require(k_max >= 32, "stability_sweep: k_max must be >= 32");
    detail::require(!gamma_list.empty() && !tau_list.empty(),
                    "stability_sweep: empty parameter lists");
    SweepResult result;
    result.k_max = k_max;
    for (double g : gamma_list)
        for (double t : tau_list) {
            ModelParams p = base;
            p.gamma = g;
            p.tau = t;
            SweepCell cell;
            cell.gamma = g;
            cell.tau = t;
            cell.spectra.reserve(k_max);
            double inf_all = std::numeric_limits<double>::infinity();
            double inf_half = std::numeric_limits<double>::infinity();
            for (int k = 1; k <= k_max; ++k) {
                const double w = k * std::numbers::pi / domain_length;
                auto sp = spectral_abscissa(mode_matrix(w * w, p));
                const double damping = -sp.abscissa;
                inf_all = std::min(inf_all, damping);
                if (k <= k_max / 2) inf_half = std::min(inf_half, damping);
                cell.spectra.push_back(std::move(sp));
            }
            cell.inf_neg_abscissa = inf_all;
            const double ref = -cell.spectra[k_max / 8 - 1].abscissa;
            cell.trend_ratio = ref > 0.0 ? (-cell.spectra[k_max - 1].abscissa) / ref : 0.0;
            cell.classification =
                (inf_all >= 0.9 * inf_half) ? "uniformly-damped" : "damping-vanishes";
            result.cells.push_back(std::move(cell));
        }
    return result;
}

}  // namespace cattplate

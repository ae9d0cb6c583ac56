#pragma once

// Sine-basis discretization of the negative Dirichlet Laplacian A on
// intervals and rectangles (hinged boundary conditions w = theta = 0).
// Provides:
//   * orthonormal sine transforms between modal coefficients and values on a
//     padded interior tensor grid (dealiasing padding, default 2x),
//   * exact diagonal calculus: fractional powers A^s, the resolvent-type
//     multipliers I_gamma = A^{-1}(gamma + A^{-1})^{-1} and
//     B = (alpha/gamma) I_gamma A,
//   * spectral gradients sampled on the grid,
//   * discrete Sobolev norms with (1 + lambda)^k modal weights,
//   * FluxField: vector fields with cosine/sine tensor components, closed
//     under gradients and divergences (used for heat-flux reconstruction).
//
// Convention: phi_k(x) = prod_i sqrt(2/L_i) sin(k_i pi x_i / L_i), so the
// basis is L2-orthonormal and lambda_k = sum_i (k_i pi / L_i)^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cattplate {

using std::size_t;

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Dense LU with partial pivoting; used for the small cosine-Vandermonde
// solves in FluxField::from_nodal. Column-major free, row-major storage.
class DenseLu {
public:
    DenseLu() = default;
    explicit DenseLu(std::vector<double> a, int n) : a_(std::move(a)), piv_(n), n_(n) {
        for (int i = 0; i < n_; ++i) piv_[i] = i;
        for (int col = 0; col < n_; ++col) {
            int pivot = col;
            double best = std::abs(a_[col * n_ + col]);
            for (int r = col + 1; r < n_; ++r) {
                double v = std::abs(a_[r * n_ + col]);
                if (v > best) { best = v; pivot = r; }
            }
            if (best == 0.0) throw std::runtime_error("DenseLu: singular matrix");
            if (pivot != col) {
                for (int c = 0; c < n_; ++c) std::swap(a_[pivot * n_ + c], a_[col * n_ + c]);
                std::swap(piv_[pivot], piv_[col]);
            }
            const double d = a_[col * n_ + col];
            for (int r = col + 1; r < n_; ++r) {
                const double f = a_[r * n_ + col] / d;
                a_[r * n_ + col] = f;
                for (int c = col + 1; c < n_; ++c) a_[r * n_ + c] -= f * a_[col * n_ + c];
            }
        }
    }

    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> x(n_);
        for (int i = 0; i < n_; ++i) x[i] = b[piv_[i]];
        for (int i = 1; i < n_; ++i) {
            double s = x[i];
            for (int j = 0; j < i; ++j) s -= a_[i * n_ + j] * x[j];
            x[i] = s;
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double s = x[i];
            for (int j = i + 1; j < n_; ++j) s -= a_[i * n_ + j] * x[j];
            x[i] = s / a_[i * n_ + i];
        }
        return x;
    }

private:
    std::vector<double> a_;
    std::vector<int> piv_;
    int n_ = 0;
};

}  // namespace detail

class Basis;
using BasisPtr = std::shared_ptr<const Basis>;

class Basis : public std::enable_shared_from_this<Basis> {
public:
    static BasisPtr make(int dim, std::vector<double> lengths, std::vector<int> modes,
                         double padding = 2.0) {
        detail::require(dim == 1 || dim == 2, "Basis: dim must be 1 or 2");
        detail::require(static_cast<int>(lengths.size()) == dim, "Basis: lengths size mismatch");
        detail::require(static_cast<int>(modes.size()) == dim, "Basis: modes size mismatch");
        for (double L : lengths) detail::require(L > 0.0, "Basis: lengths must be positive");
        for (int N : modes) detail::require(N >= 1, "Basis: modes must be >= 1");
        detail::require(padding >= 1.0, "Basis: padding must be >= 1");
        return BasisPtr(new Basis(dim, std::move(lengths), std::move(modes), padding));
    }

    int dim() const { return dim_; }
    double length(int axis) const { return lengths_[axis]; }
    int modes(int axis) const { return modes_[axis]; }
    int grid(int axis) const { return grid_[axis]; }
    double padding() const { return padding_; }

    size_t size() const { return size_; }            // number of modal coefficients
    size_t grid_size() const { return grid_size_; }  // number of interior grid points

    // x_j = (j+1) L / (M+1) for j = 0..M-1 along the given axis.
    double node(int axis, int j) const {
        return (j + 1) * lengths_[axis] / (grid_[axis] + 1);
    }

    // Eigenvalues in lexicographic mode order (k_1 major).
    const std::vector<double>& eigenvalues() const { return lambda_; }
    double eigenvalue(size_t flat) const { return lambda_[flat]; }

    std::vector<double> sorted_eigenvalues() const {
        std::vector<double> out = lambda_;
        std::sort(out.begin(), out.end());
        return out;
    }

    // Flat index of the (1-based) multi-index k.
    size_t flat_index(const std::vector<int>& k) const {
        detail::require(static_cast<int>(k.size()) == dim_, "Basis: multi-index size mismatch");
        size_t idx = 0;
        for (int a = 0; a < dim_; ++a) {
            detail::require(k[a] >= 1 && k[a] <= modes_[a], "Basis: mode index out of range");
            idx = idx * modes_[a] + static_cast<size_t>(k[a] - 1);
        }
        return idx;
    }

    // Per-axis tables, row-major.
    //   sin_mn:  M x N,      sqrt(2/L) sin((k+1)(j+1) pi / (M+1))
    //   sin_nm:  N x M,      sqrt(2L)/(M+1) sin((k+1)(j+1) pi / (M+1))
    //   dcos_mn: M x N,      sqrt(2/L) ((k+1) pi / L) cos((k+1)(j+1) pi / (M+1))
    //   cos_mc:  M x (N+1),  c_k cos(k (j+1) pi / (M+1)), c_0 = sqrt(1/L), c_k = sqrt(2/L)
    const std::vector<double>& sin_mn(int axis) const { return sin_mn_[axis]; }
    const std::vector<double>& sin_nm(int axis) const { return sin_nm_[axis]; }
    const std::vector<double>& dcos_mn(int axis) const { return dcos_mn_[axis]; }
    const std::vector<double>& cos_mc(int axis) const { return cos_mc_[axis]; }

    // Quadrature weight of the interior grid: prod_i L_i / (M_i + 1).
    double quadrature_weight() const {
        double w = 1.0;
        for (int a = 0; a < dim_; ++a) w *= lengths_[a] / (grid_[a] + 1);
        return w;
    }

    bool same_as(const Basis& other) const {
        return dim_ == other.dim_ && lengths_ == other.lengths_ && modes_ == other.modes_ &&
               grid_ == other.grid_;
    }

private:
    Basis(int dim, std::vector<double> lengths, std::vector<int> modes, double padding)
        : dim_(dim), lengths_(std::move(lengths)), modes_(std::move(modes)), padding_(padding) {
        grid_.resize(dim_);
        for (int a = 0; a < dim_; ++a)
            grid_[a] = static_cast<int>(std::ceil(padding_ * modes_[a])) + 1;

        size_ = 1;
        grid_size_ = 1;
        for (int a = 0; a < dim_; ++a) {
            size_ *= static_cast<size_t>(modes_[a]);
            grid_size_ *= static_cast<size_t>(grid_[a]);
        }

        lambda_.resize(size_);
        if (dim_ == 1) {
            for (int k = 0; k < modes_[0]; ++k) lambda_[k] = axis_lambda(0, k);
        } else {
            for (int k1 = 0; k1 < modes_[0]; ++k1)
                for (int k2 = 0; k2 < modes_[1]; ++k2)
                    lambda_[static_cast<size_t>(k1) * modes_[1] + k2] =
                        axis_lambda(0, k1) + axis_lambda(1, k2);
        }

        sin_mn_.resize(dim_);
        sin_nm_.resize(dim_);
        dcos_mn_.resize(dim_);
        cos_mc_.resize(dim_);
        for (int a = 0; a < dim_; ++a) build_axis_tables(a);
    }

    double axis_lambda(int axis, int k0) const {
        const double w = (k0 + 1) * std::numbers::pi / lengths_[axis];
        return w * w;
    }

    void build_axis_tables(int a) {
        const int M = grid_[a];
        const int N = modes_[a];
        const double L = lengths_[a];
        const double nrm = std::sqrt(2.0 / L);
        const double inv = std::sqrt(2.0 * L) / (M + 1);
        const double step = std::numbers::pi / (M + 1);

        sin_mn_[a].assign(static_cast<size_t>(M) * N, 0.0);
        sin_nm_[a].assign(static_cast<size_t>(N) * M, 0.0);
        dcos_mn_[a].assign(static_cast<size_t>(M) * N, 0.0);
        cos_mc_[a].assign(static_cast<size_t>(M) * (N + 1), 0.0);
        for (int j = 0; j < M; ++j) {
            for (int k = 0; k < N; ++k) {
                const double arg = (k + 1) * (j + 1) * step;
                const double s = std::sin(arg);
                sin_mn_[a][static_cast<size_t>(j) * N + k] = nrm * s;
                sin_nm_[a][static_cast<size_t>(k) * M + j] = inv * s;
                dcos_mn_[a][static_cast<size_t>(j) * N + k] =
                    nrm * ((k + 1) * std::numbers::pi / L) * std::cos(arg);
            }
            cos_mc_[a][static_cast<size_t>(j) * (N + 1)] = std::sqrt(1.0 / L);
            for (int k = 1; k <= N; ++k)
                cos_mc_[a][static_cast<size_t>(j) * (N + 1) + k] =
                    nrm * std::cos(k * (j + 1) * step);
        }
    }

    int dim_;
    std::vector<double> lengths_;
    std::vector<int> modes_;
    std::vector<int> grid_;
    double padding_;
    size_t size_ = 0;
    size_t grid_size_ = 0;
    std::vector<double> lambda_;
    std::vector<std::vector<double>> sin_mn_, sin_nm_, dcos_mn_, cos_mc_;
};

struct SpectralField {
    BasisPtr basis;
    std::vector<double> coeffs;

    SpectralField() = default;
    explicit SpectralField(BasisPtr b) : basis(std::move(b)), coeffs(basis->size(), 0.0) {}
    SpectralField(BasisPtr b, std::vector<double> c) : basis(std::move(b)), coeffs(std::move(c)) {
        detail::require(coeffs.size() == basis->size(), "SpectralField: coefficient count mismatch");
    }
};

struct NodalField {
    BasisPtr basis;
    std::vector<double> values;

    NodalField() = default;
    explicit NodalField(BasisPtr b) : basis(std::move(b)), values(basis->grid_size(), 0.0) {}
    NodalField(BasisPtr b, std::vector<double> v) : basis(std::move(b)), values(std::move(v)) {
        detail::require(values.size() == basis->grid_size(), "NodalField: value count mismatch");
    }
};

namespace detail {

inline void require_same_basis(const Basis& a, const Basis& b) {
    require(a.same_as(b), "fields do not share a basis");
}

// out[r, c2] = sum_c1 mat[r, c1] in[c1, c2]; mat is rows x cols row-major.
inline void contract_rows(const std::vector<double>& mat, int rows, int cols,
                          const double* in, int inner, double* out) {
    for (int r = 0; r < rows; ++r) {
        double* o = out + static_cast<size_t>(r) * inner;
        std::fill(o, o + inner, 0.0);
        const double* mrow = mat.data() + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
            const double m = mrow[c];
            if (m == 0.0) continue;
            const double* i = in + static_cast<size_t>(c) * inner;
            for (int q = 0; q < inner; ++q) o[q] += m * i[q];
        }
    }
}

// Applies the per-axis matrices (axis0: rows0 x cols0, axis1: rows1 x cols1)
// to a cols0 x cols1 row-major array. For dim 1 pass axis1 = identity 1x1.
inline std::vector<double> tensor_apply_2d(const std::vector<double>& m0, int rows0, int cols0,
                                           const std::vector<double>& m1, int rows1, int cols1,
                                           const std::vector<double>& in) {
    // First contract axis 0: tmp[r0, c1] = sum_{c0} m0[r0, c0] in[c0, c1]
    std::vector<double> tmp(static_cast<size_t>(rows0) * cols1);
    contract_rows(m0, rows0, cols0, in.data(), cols1, tmp.data());
    // Then axis 1: out[r0, r1] = sum_{c1} m1[r1, c1] tmp[r0, c1]
    std::vector<double> out(static_cast<size_t>(rows0) * rows1);
    for (int r0 = 0; r0 < rows0; ++r0) {
        const double* trow = tmp.data() + static_cast<size_t>(r0) * cols1;
        double* orow = out.data() + static_cast<size_t>(r0) * rows1;
        for (int r1 = 0; r1 < rows1; ++r1) {
            const double* mrow = m1.data() + static_cast<size_t>(r1) * cols1;
            double s = 0.0;
            for (int c1 = 0; c1 < cols1; ++c1) s += mrow[c1] * trow[c1];
            orow[r1] = s;
        }
    }
    return out;
}

}  // namespace detail

inline NodalField to_nodal(const SpectralField& u) {
    const Basis& b = *u.basis;
    if (b.dim() == 1) {
        std::vector<double> vals(b.grid_size());
        detail::contract_rows(b.sin_mn(0), b.grid(0), b.modes(0), u.coeffs.data(), 1, vals.data());
        return NodalField(u.basis, std::move(vals));
    }
    auto vals = detail::tensor_apply_2d(b.sin_mn(0), b.grid(0), b.modes(0),
                                        b.sin_mn(1), b.grid(1), b.modes(1), u.coeffs);
    return NodalField(u.basis, std::move(vals));
}

inline SpectralField to_modal(const NodalField& f) {
    const Basis& b = *f.basis;
    if (b.dim() == 1) {
        std::vector<double> c(b.size());
        detail::contract_rows(b.sin_nm(0), b.modes(0), b.grid(0), f.values.data(), 1, c.data());
        return SpectralField(f.basis, std::move(c));
    }
    auto c = detail::tensor_apply_2d(b.sin_nm(0), b.modes(0), b.grid(0),
                                     b.sin_nm(1), b.modes(1), b.grid(1), f.values);
    return SpectralField(f.basis, std::move(c));
}

inline SpectralField apply_A_power(const SpectralField& u, double s) {
    SpectralField out = u;
    const auto& lam = u.basis->eigenvalues();
    for (size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] *= std::pow(lam[i], s);
    return out;
}

// I_gamma = A^{-1}(gamma + A^{-1})^{-1}: modal multiplier 1 / (gamma lambda + 1).
inline SpectralField apply_Igamma(const SpectralField& u, double gamma) {
    detail::require(gamma > 0.0, "apply_Igamma: gamma must be positive");
    SpectralField out = u;
    const auto& lam = u.basis->eigenvalues();
    for (size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] /= gamma * lam[i] + 1.0;
    return out;
}

// B = (alpha/gamma) I_gamma A: modal multiplier (alpha/gamma) lambda / (gamma lambda + 1),
// bounded by alpha / gamma^2.
inline SpectralField apply_B(const SpectralField& u, double alpha, double gamma) {
    detail::require(gamma > 0.0, "apply_B: gamma must be positive");
    SpectralField out = u;
    const auto& lam = u.basis->eigenvalues();
    for (size_t i = 0; i < out.coeffs.size(); ++i)
        out.coeffs[i] *= (alpha / gamma) * lam[i] / (gamma * lam[i] + 1.0);
    return out;
}

// Spectral gradient sampled on the padded grid, one NodalField per axis.
inline std::vector<NodalField> gradient(const SpectralField& u) {
    const Basis& b = *u.basis;
    std::vector<NodalField> out;
    out.reserve(b.dim());
    if (b.dim() == 1) {
        std::vector<double> v(b.grid_size());
        detail::contract_rows(b.dcos_mn(0), b.grid(0), b.modes(0), u.coeffs.data(), 1, v.data());
        out.emplace_back(u.basis, std::move(v));
        return out;
    }
    out.emplace_back(u.basis, detail::tensor_apply_2d(b.dcos_mn(0), b.grid(0), b.modes(0),
                                                      b.sin_mn(1), b.grid(1), b.modes(1), u.coeffs));
    out.emplace_back(u.basis, detail::tensor_apply_2d(b.sin_mn(0), b.grid(0), b.modes(0),
                                                      b.dcos_mn(1), b.grid(1), b.modes(1), u.coeffs));
    return out;
}

// Discrete H^k norm, k = 0..3: ( sum_k (1 + lambda_k)^k |u_k|^2 )^{1/2}.
inline double sobolev_norm(const SpectralField& u, int k) {
    detail::require(k >= 0 && k <= 3, "sobolev_norm: k must be in 0..3");
    const auto& lam = u.basis->eigenvalues();
    double s = 0.0;
    for (size_t i = 0; i < u.coeffs.size(); ++i) {
        double w = 1.0;
        const double base = 1.0 + lam[i];
        for (int j = 0; j < k; ++j) w *= base;
        s += w * u.coeffs[i] * u.coeffs[i];
    }
    return std::sqrt(s);
}

inline double l2_norm(const SpectralField& u) { return sobolev_norm(u, 0); }

inline double l2_distance(const SpectralField& a, const SpectralField& b) {
    detail::require_same_basis(*a.basis, *b.basis);
    double s = 0.0;
    for (size_t i = 0; i < a.coeffs.size(); ++i) {
        const double d = a.coeffs[i] - b.coeffs[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline SpectralField axpy(double a, const SpectralField& x, const SpectralField& y) {
    detail::require_same_basis(*x.basis, *y.basis);
    SpectralField out = y;
    for (size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] += a * x.coeffs[i];
    return out;
}

inline SpectralField scaled(const SpectralField& x, double a) {
    SpectralField out = x;
    for (double& c : out.coeffs) c *= a;
    return out;
}

// L2 inner product via modal Parseval.
inline double inner(const SpectralField& a, const SpectralField& b) {
    detail::require_same_basis(*a.basis, *b.basis);
    double s = 0.0;
    for (size_t i = 0; i < a.coeffs.size(); ++i) s += a.coeffs[i] * b.coeffs[i];
    return s;
}

// Vector field whose component along axis a is a cosine series in x_a tensored
// with sines in the remaining axes:
//   q_a(x) = sum_{k_a = 0..N_a, k_b = 1..N_b} C_a[k] c_{k_a} cos(k_a pi x_a / L_a)
//            prod_{b != a} sqrt(2/L_b) sin(k_b pi x_b / L_b),
// with c_0 = sqrt(1/L_a) and c_k = sqrt(2/L_a). This family is L2-orthonormal,
// closed under gradients of sine fields, and has sine-series divergences.
class FluxField {
public:
    FluxField() = default;
    explicit FluxField(BasisPtr b) : basis_(std::move(b)) {
        comps_.resize(basis_->dim());
        for (int a = 0; a < basis_->dim(); ++a) comps_[a].assign(comp_size(a), 0.0);
    }

    const BasisPtr& basis() const { return basis_; }

    size_t comp_size(int a) const {
        size_t n = static_cast<size_t>(basis_->modes(a)) + 1;
        for (int b = 0; b < basis_->dim(); ++b)
            if (b != a) n *= static_cast<size_t>(basis_->modes(b));
        return n;
    }

    std::vector<double>& component(int a) { return comps_[a]; }
    const std::vector<double>& component(int a) const { return comps_[a]; }

    static FluxField from_gradient(const SpectralField& u) {
        FluxField q(u.basis);
        const Basis& b = *u.basis;
        if (b.dim() == 1) {
            const double L = b.length(0);
            for (int k = 0; k < b.modes(0); ++k)
                q.comps_[0][k + 1] = u.coeffs[k] * (k + 1) * std::numbers::pi / L;
        } else {
            const int N1 = b.modes(0), N2 = b.modes(1);
            const double L1 = b.length(0), L2 = b.length(1);
            // component 0 layout: [(k1 = 0..N1) x (k2 = 1..N2)] row-major
            for (int k1 = 0; k1 < N1; ++k1)
                for (int k2 = 0; k2 < N2; ++k2)
                    q.comps_[0][static_cast<size_t>(k1 + 1) * N2 + k2] =
                        u.coeffs[static_cast<size_t>(k1) * N2 + k2] * (k1 + 1) * std::numbers::pi / L1;
            // component 1 layout: [(k1 = 1..N1) x (k2 = 0..N2)] row-major
            for (int k1 = 0; k1 < N1; ++k1)
                for (int k2 = 0; k2 < N2; ++k2)
                    q.comps_[1][static_cast<size_t>(k1) * (N2 + 1) + (k2 + 1)] =
                        u.coeffs[static_cast<size_t>(k1) * N2 + k2] * (k2 + 1) * std::numbers::pi / L2;
        }
        return q;
    }

    SpectralField divergence() const {
        const Basis& b = *basis_;
        SpectralField out(basis_);
        if (b.dim() == 1) {
            const double L = b.length(0);
            for (int k = 0; k < b.modes(0); ++k)
                out.coeffs[k] = -comps_[0][k + 1] * (k + 1) * std::numbers::pi / L;
        } else {
            const int N1 = b.modes(0), N2 = b.modes(1);
            const double L1 = b.length(0), L2 = b.length(1);
            for (int k1 = 0; k1 < N1; ++k1)
                for (int k2 = 0; k2 < N2; ++k2) {
                    double s = -comps_[0][static_cast<size_t>(k1 + 1) * N2 + k2] *
                               (k1 + 1) * std::numbers::pi / L1;
                    s += -comps_[1][static_cast<size_t>(k1) * (N2 + 1) + (k2 + 1)] *
                         (k2 + 1) * std::numbers::pi / L2;
                    out.coeffs[static_cast<size_t>(k1) * N2 + k2] = s;
                }
        }
        return out;
    }

    std::vector<NodalField> to_nodal() const {
        const Basis& b = *basis_;
        std::vector<NodalField> out;
        out.reserve(b.dim());
        if (b.dim() == 1) {
            std::vector<double> v(b.grid_size());
            detail::contract_rows(b.cos_mc(0), b.grid(0), b.modes(0) + 1, comps_[0].data(), 1,
                                  v.data());
            out.emplace_back(basis_, std::move(v));
            return out;
        }
        out.emplace_back(basis_,
                         detail::tensor_apply_2d(b.cos_mc(0), b.grid(0), b.modes(0) + 1,
                                                 b.sin_mn(1), b.grid(1), b.modes(1), comps_[0]));
        out.emplace_back(basis_,
                         detail::tensor_apply_2d(b.sin_mn(0), b.grid(0), b.modes(0),
                                                 b.cos_mc(1), b.grid(1), b.modes(1) + 1, comps_[1]));
        return out;
    }

    // Fits each component on the grid (cosine Vandermonde along its own axis,
    // sine transforms along the rest), truncates to the basis band and reports
    // the L2 norm of the discarded remainder.
    static FluxField from_nodal(const std::vector<NodalField>& q, double* complement_norm = nullptr) {
        detail::require(!q.empty(), "FluxField: empty nodal input");
        BasisPtr bp = q[0].basis;
        const Basis& b = *bp;
        detail::require(static_cast<int>(q.size()) == b.dim(), "FluxField: component count mismatch");
        for (const auto& f : q) detail::require_same_basis(b, *f.basis);

        FluxField out(bp);
        for (int a = 0; a < b.dim(); ++a) {
            const int M = b.grid(a);
            const int N = b.modes(a);
            // Full cosine interpolation along axis a (modes 0..M-1), then truncate.
            std::vector<double> vand(static_cast<size_t>(M) * M);
            const double L = b.length(a);
            const double step = std::numbers::pi / (M + 1);
            for (int j = 0; j < M; ++j)
                for (int k = 0; k < M; ++k) {
                    const double c = (k == 0) ? std::sqrt(1.0 / L) : std::sqrt(2.0 / L);
                    vand[static_cast<size_t>(j) * M + k] = c * std::cos(k * (j + 1) * step);
                }
            detail::DenseLu lu(std::move(vand), M);

            if (b.dim() == 1) {
                auto full = lu.solve(q[a].values);
                for (int k = 0; k <= N && k < M; ++k) out.comps_[a][k] = full[k];
            } else {
                const int other = 1 - a;
                const int No = b.modes(other);
                const int Mo = b.grid(other);
                // Sine-analyze along the other axis first.
                std::vector<double> partial;
                if (a == 0) {
                    partial = detail::tensor_apply_2d(
                        // identity on axis 0 (grid), sine analysis on axis 1
                        identity(M), M, M, b.sin_nm(1), No, Mo, q[a].values);
                    // partial is M x No; solve cosine fit per column of axis 0
                    std::vector<double> col(M), fit;
                    for (int k2 = 0; k2 < No; ++k2) {
                        for (int j = 0; j < M; ++j) col[j] = partial[static_cast<size_t>(j) * No + k2];
                        fit = lu.solve(col);
                        for (int k = 0; k <= N && k < M; ++k)
                            out.comps_[a][static_cast<size_t>(k) * No + k2] = fit[k];
                    }
                } else {
                    partial = detail::tensor_apply_2d(b.sin_nm(0), No, Mo, identity(M), M, M,
                                                      q[a].values);
                    // partial is No x M; fit along axis 1 per row
                    std::vector<double> col(M), fit;
                    for (int k1 = 0; k1 < No; ++k1) {
                        for (int j = 0; j < M; ++j) col[j] = partial[static_cast<size_t>(k1) * M + j];
                        fit = lu.solve(col);
                        for (int k = 0; k <= N && k < M; ++k)
                            out.comps_[a][static_cast<size_t>(k1) * (N + 1) + k] = fit[k];
                    }
                }
            }
        }

        if (complement_norm) {
            // Residual between the input samples and the truncated field,
            // measured in the grid quadrature norm.
            auto back = out.to_nodal();
            double s = 0.0;
            for (int a = 0; a < b.dim(); ++a)
                for (size_t i = 0; i < q[a].values.size(); ++i) {
                    const double d = q[a].values[i] - back[a].values[i];
                    s += d * d;
                }
            *complement_norm = std::sqrt(s * b.quadrature_weight());
        }
        return out;
    }

    double l2_norm() const {
        double s = 0.0;
        for (const auto& c : comps_)
            for (double v : c) s += v * v;
        return std::sqrt(s);
    }

    FluxField& add_scaled(const FluxField& other, double a) {
        detail::require_same_basis(*basis_, *other.basis_);
        for (size_t c = 0; c < comps_.size(); ++c)
            for (size_t i = 0; i < comps_[c].size(); ++i) comps_[c][i] += a * other.comps_[c][i];
        return *this;
    }

private:
    static std::vector<double> identity(int n) {
        std::vector<double> id(static_cast<size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) id[static_cast<size_t>(i) * n + i] = 1.0;
        return id;
    }

    BasisPtr basis_;
    std::vector<std::vector<double>> comps_;
};

inline BasisPtr make_basis(int dim, std::vector<double> lengths, std::vector<int> modes,
                           double padding = 2.0) {
    return Basis::make(dim, std::move(lengths), std::move(modes), padding);
}

}  // namespace cattplate

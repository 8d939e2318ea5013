#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "tsns/operators.hpp"

namespace tsns {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Complex in-place 3D FFT buffers and plans for one cubic grid size.
/// FFTW plan creation is not thread-safe; execution on the owning thread is.
class FourierWorkspace {
  public:
    explicit FourierWorkspace(int grid) : grid_(grid) {
        const std::size_t n = static_cast<std::size_t>(grid) * grid * grid;
        buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        backward_ = fftw_plan_dft_3d(grid, grid, grid, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        forward_ = fftw_plan_dft_3d(grid, grid, grid, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    ~FourierWorkspace() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(backward_);
        fftw_destroy_plan(forward_);
        fftw_free(buf_);
    }
    FourierWorkspace(const FourierWorkspace&) = delete;
    FourierWorkspace& operator=(const FourierWorkspace&) = delete;

    int grid() const { return grid_; }
    std::size_t points() const { return static_cast<std::size_t>(grid_) * grid_ * grid_; }

    void clear() {
        const std::size_t n = points();
        for (std::size_t i = 0; i < n; ++i) buf_[i][0] = buf_[i][1] = 0.0;
    }

    std::size_t flat_mode(const Mode& j) const {
        const int m = grid_;
        const int x = ((j[0] % m) + m) % m;
        const int y = ((j[1] % m) + m) % m;
        const int z = ((j[2] % m) + m) % m;
        return (static_cast<std::size_t>(z) * m + y) * m + x;
    }

    /// Scatters a conjugate-symmetric coefficient set: value at j, conj at -j.
    void scatter(const Mode& j, Complex value) {
        const std::size_t a = flat_mode(j);
        buf_[a][0] = value.real();
        buf_[a][1] = value.imag();
        const std::size_t b = flat_mode(Lattice::negate(j));
        buf_[b][0] = value.real();
        buf_[b][1] = -value.imag();
    }

    /// Packs two real fields into one transform: the buffer receives the
    /// coefficients of p + i q, so one backward pass yields p in the real
    /// part and q in the imaginary part.
    void scatter_pair(const Mode& j, Complex p, Complex q) {
        const std::size_t a = flat_mode(j);
        buf_[a][0] = p.real() - q.imag();
        buf_[a][1] = p.imag() + q.real();
        const std::size_t b = flat_mode(Lattice::negate(j));
        buf_[b][0] = p.real() + q.imag();
        buf_[b][1] = q.real() - p.imag();
    }

    void load_real(const std::vector<double>& x) {
        const std::size_t n = points();
        for (std::size_t i = 0; i < n; ++i) {
            buf_[i][0] = x[i];
            buf_[i][1] = 0.0;
        }
    }

    void load_real_pair(const std::vector<double>& p, const std::vector<double>& q) {
        const std::size_t n = points();
        for (std::size_t i = 0; i < n; ++i) {
            buf_[i][0] = p[i];
            buf_[i][1] = q[i];
        }
    }

    void store_real(std::vector<double>& x) const {
        const std::size_t n = points();
        x.resize(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = buf_[i][0];
    }

    void store_real_imag(std::vector<double>& p, std::vector<double>& q) const {
        const std::size_t n = points();
        p.resize(n);
        q.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = buf_[i][0];
            q[i] = buf_[i][1];
        }
    }

    void backward() { fftw_execute(backward_); }
    void forward() { fftw_execute(forward_); }

    Complex coefficient(const Mode& j) const {
        const std::size_t a = flat_mode(j);
        const double inv = 1.0 / static_cast<double>(points());
        return Complex(buf_[a][0] * inv, buf_[a][1] * inv);
    }

    /// Unpacks the coefficients of two real fields transformed as p + i q:
    /// p_j = (F(j) + conj(F(-j)))/2, q_j = -i (F(j) - conj(F(-j)))/2.
    std::pair<Complex, Complex> coefficient_pair(const Mode& j) const {
        const std::size_t a = flat_mode(j);
        const std::size_t b = flat_mode(Lattice::negate(j));
        const double inv = 0.5 / static_cast<double>(points());
        const Complex fj(buf_[a][0], buf_[a][1]);
        const Complex fmj_conj(buf_[b][0], -buf_[b][1]);
        const Complex sum = (fj + fmj_conj) * inv;
        const Complex dif = (fj - fmj_conj) * inv;
        return {sum, Complex(dif.imag(), -dif.real())};
    }

  private:
    int grid_;
    fftw_complex* buf_;
    fftw_plan backward_;
    fftw_plan forward_;
};

inline FourierWorkspace& workspace_for(int grid) {
    thread_local std::unordered_map<int, std::unique_ptr<FourierWorkspace>> cache;
    auto& slot = cache[grid];
    if (!slot) slot = std::make_unique<FourierWorkspace>(grid);
    return *slot;
}

inline bool is_fast_size(int n) {
    for (int p : {2, 3, 5, 7})
        while (n % p == 0) n /= p;
    return n == 1;
}

inline int next_fast_size(int n) {
    while (!is_fast_size(n)) ++n;
    return n;
}

/// Largest eigenvalue of a symmetric 3x3 matrix (trigonometric method).
inline double sym3_max_eigenvalue(const double a[3][3]) {
    const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (p1 == 0.0) return std::max({a[0][0], a[1][1], a[2][2]});
    const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) +
                      (a[2][2] - q) * (a[2][2] - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    double b[3][3];
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) b[r][c] = (a[r][c] - (r == c ? q : 0.0)) / p;
    const double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                        b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                        b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    const double r = std::clamp(detb / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    return q + 2.0 * p * std::cos(phi);
}

}  // namespace detail

/// Base physical grid: the smallest FFT-friendly cube that resolves the
/// truncated spectrum exactly.
inline int sampling_grid_size(const Lattice& lat, int oversample = 1) {
    const int base = detail::next_fast_size(2 * lat.truncation() + 1);
    // Multiples of the base grid keep coarser grids as strict subsets, so a
    // larger oversample can never lose points (and never lowers a sup).
    return base * std::max(1, oversample);
}

/// Grid for quadratic products under the retained-fraction rule: modes up to N
/// stay alias-free when N <= dealias_fraction * (grid/2); for the default 2/3
/// this is the classical 3N+1 zero-padding grid.
inline int dealias_grid_size(const Lattice& lat) {
    const int n = lat.truncation();
    const double q = lat.dealias_fraction();
    const int m = std::max(2 * n + 1, static_cast<int>(std::ceil(2.0 * n / q)) + 1);
    return detail::next_fast_size(m);
}

/// Samples one velocity component on the physical grid (x fastest index,
/// spacing L/grid).
inline std::vector<double> to_physical_component(const SpectralField& u, int component,
                                                 int grid) {
    auto& ws = detail::workspace_for(grid);
    ws.clear();
    const auto& lat = u.lattice();
    for (std::size_t i = 0; i < u.size(); ++i)
        ws.scatter(lat.mode(i), u[i][component]);
    ws.backward();
    std::vector<double> out;
    ws.store_real(out);
    return out;
}

/// Dealiased B(u, v) = P((u . grad) v) in convective form. Valid for any pair
/// of fields on a shared lattice; matches the direct convolution of the
/// truncated series.
inline SpectralField nonlinear_term(const SpectralField& u, const SpectralField& v) {
    u.require_same_lattice(v);
    const auto& lat = u.lattice();
    const int grid = dealias_grid_size(lat);
    const double k0 = lat.base_wavenumber();
    auto& ws = detail::workspace_for(grid);
    const std::size_t npts = ws.points();

    std::vector<double> uphys[3];
    for (int m = 0; m < 3; ++m) uphys[m] = to_physical_component(u, m, grid);

    std::vector<double> advect[3];
    for (int m = 0; m < 3; ++m) advect[m].assign(npts, 0.0);

    // (u . grad) v accumulated one derivative at a time.
    std::vector<double> dv;
    for (int m = 0; m < 3; ++m)
        for (int d = 0; d < 3; ++d) {
            ws.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                const Mode& j = lat.mode(i);
                ws.scatter(j, Complex(0.0, k0 * j[d]) * v[i][m]);
            }
            ws.backward();
            ws.store_real(dv);
            const std::vector<double>& ud = uphys[d];
            std::vector<double>& acc = advect[m];
            for (std::size_t p = 0; p < npts; ++p) acc[p] += ud[p] * dv[p];
        }

    SpectralField out(u.lattice_ptr());
    for (int m = 0; m < 3; ++m) {
        ws.load_real(advect[m]);
        ws.forward();
        for (std::size_t i = 0; i < out.size(); ++i) out[i][m] = ws.coefficient(lat.mode(i));
    }
    return leray_project(out);
}

/// Dealiased B(w) = B(w, w) in divergence form, P(d_d (w_d w_m)). Requires w
/// divergence-free (equal to the convective form there). The hot path of the
/// time stepper: two-for-one packing brings it to 5 transforms per call.
inline SpectralField nonlinear_self(const SpectralField& w) {
    const auto& lat = w.lattice();
    const int grid = dealias_grid_size(lat);
    const double k0 = lat.base_wavenumber();
    auto& ws = detail::workspace_for(grid);
    const std::size_t npts = ws.points();

    thread_local std::vector<double> wphys[3], pa, pb;
    thread_local std::vector<std::array<Complex, 6>> prod_hat;

    ws.clear();
    for (std::size_t i = 0; i < w.size(); ++i) ws.scatter_pair(lat.mode(i), w[i][0], w[i][1]);
    ws.backward();
    ws.store_real_imag(wphys[0], wphys[1]);
    ws.clear();
    for (std::size_t i = 0; i < w.size(); ++i) ws.scatter(lat.mode(i), w[i][2]);
    ws.backward();
    ws.store_real(wphys[2]);

    // Symmetric products w_d w_m, six distinct entries, transformed in pairs:
    // (00, 01), (02, 11), (12, 22).
    static constexpr int pair_a[3][2] = {{0, 0}, {0, 2}, {1, 2}};
    static constexpr int pair_b[3][2] = {{0, 1}, {1, 1}, {2, 2}};
    static constexpr int slot_a[3] = {0, 2, 4};  // index into the 6-entry table
    static constexpr int slot_b[3] = {1, 3, 5};
    prod_hat.assign(w.size(), {});
    pa.resize(npts);
    pb.resize(npts);
    for (int k = 0; k < 3; ++k) {
        const std::vector<double>& a1 = wphys[pair_a[k][0]];
        const std::vector<double>& a2 = wphys[pair_a[k][1]];
        const std::vector<double>& b1 = wphys[pair_b[k][0]];
        const std::vector<double>& b2 = wphys[pair_b[k][1]];
        for (std::size_t p = 0; p < npts; ++p) {
            pa[p] = a1[p] * a2[p];
            pb[p] = b1[p] * b2[p];
        }
        ws.load_real_pair(pa, pb);
        ws.forward();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const auto [ca, cb] = ws.coefficient_pair(lat.mode(i));
            prod_hat[i][slot_a[k]] = ca;
            prod_hat[i][slot_b[k]] = cb;
        }
    }

    // table order: 00, 01, 02, 11, 12, 22
    auto hat = [&](int d, int m, std::size_t i) -> Complex {
        if (d > m) std::swap(d, m);
        if (d == 0) return prod_hat[i][m];
        if (d == 1) return prod_hat[i][2 + m];
        return prod_hat[i][5];
    };

    SpectralField out(w.lattice_ptr());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const Mode& j = lat.mode(i);
        for (int m = 0; m < 3; ++m) {
            Complex acc(0.0, 0.0);
            for (int d = 0; d < 3; ++d) acc += Complex(0.0, k0 * j[d]) * hat(d, m, i);
            out[i][m] = acc;
        }
    }
    return leray_project(out);
}

enum class GradientMatrixNorm { spectral, frobenius };

/// Sup over an oversampled physical grid of the pointwise norm of the 3x3
/// gradient matrix (d_d h_m). Default norm is the largest singular value.
inline double sup_gradient_norm(const SpectralField& h, int oversample = 4,
                                GradientMatrixNorm norm = GradientMatrixNorm::spectral) {
    if (oversample < 1) throw ConfigError("sup_gradient_norm: oversample must be >= 1");
    const auto& lat = h.lattice();
    const int grid = sampling_grid_size(lat, oversample);
    const double k0 = lat.base_wavenumber();
    auto& ws = detail::workspace_for(grid);
    const std::size_t npts = ws.points();

    std::vector<double> grad[3][3];
    for (int m = 0; m < 3; ++m)
        for (int d = 0; d < 3; ++d) {
            ws.clear();
            for (std::size_t i = 0; i < h.size(); ++i) {
                const Mode& j = lat.mode(i);
                ws.scatter(j, Complex(0.0, k0 * j[d]) * h[i][m]);
            }
            ws.backward();
            ws.store_real(grad[m][d]);
        }

    double sup = 0.0;
    for (std::size_t p = 0; p < npts; ++p) {
        double g[3][3];
        for (int m = 0; m < 3; ++m)
            for (int d = 0; d < 3; ++d) g[m][d] = grad[m][d][p];
        double value;
        if (norm == GradientMatrixNorm::frobenius) {
            double s = 0.0;
            for (int m = 0; m < 3; ++m)
                for (int d = 0; d < 3; ++d) s += g[m][d] * g[m][d];
            value = std::sqrt(s);
        } else {
            double gtg[3][3];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    double s = 0.0;
                    for (int m = 0; m < 3; ++m) s += g[m][r] * g[m][c];
                    gtg[r][c] = s;
                }
            value = std::sqrt(std::max(0.0, detail::sym3_max_eigenvalue(gtg)));
        }
        sup = std::max(sup, value);
    }
    return sup;
}

}  // namespace tsns

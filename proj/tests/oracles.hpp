#pragma once

// Independent reference implementations used only by the tests. Nothing here
// calls into the library's numerical code.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double c0 = 299792458.0;

/// |Σ_k rx[k + lag] conj(ref[k])| for lag = -(Lref-1) .. (Lrx-1).
inline std::vector<double> xcorr(const std::vector<cd>& rx, const std::vector<cd>& ref) {
    const auto lrx = static_cast<long>(rx.size());
    const auto lref = static_cast<long>(ref.size());
    std::vector<double> out;
    for (long lag = -(lref - 1); lag <= lrx - 1; ++lag) {
        cd acc{};
        for (long k = 0; k < lref; ++k) {
            const long i = k + lag;
            if (i >= 0 && i < lrx) acc += rx[static_cast<std::size_t>(i)] * std::conj(ref[static_cast<std::size_t>(k)]);
        }
        out.push_back(std::abs(acc));
    }
    return out;
}

inline std::vector<cd> dft(const std::vector<cd>& x) {
    const std::size_t n = x.size();
    std::vector<cd> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cd acc{};
        for (std::size_t i = 0; i < n; ++i) {
            acc += x[i] * std::polar(1.0, -2.0 * pi * static_cast<double>(k * i % n) / static_cast<double>(n));
        }
        out[k] = acc;
    }
    return out;
}

using Mat = std::vector<std::vector<cd>>;

inline Mat inverse(Mat a) {
    const std::size_t n = a.size();
    Mat inv(n, std::vector<cd>(n));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-300) throw std::runtime_error("singular");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const cd d = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const cd f = a[r][col];
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

/// w_n = Σ_m g_m [(CᴴC)⁻¹]_{m,·} conj(C) for an N×M matrix given as rows.
inline std::vector<cd> lcmp(const Mat& c, const std::vector<double>& g) {
    const std::size_t n = c.size();
    const std::size_t m = c.front().size();
    Mat gram(m, std::vector<cd>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t k = 0; k < n; ++k) gram[i][j] += std::conj(c[k][i]) * c[k][j];
        }
    }
    const Mat ginv = inverse(gram);
    std::vector<cd> row(m);  // gᴴ (CᴴC)⁻¹
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < m; ++i) row[j] += g[i] * ginv[i][j];
    }
    std::vector<cd> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < m; ++j) w[k] += row[j] * std::conj(c[k][j]);
    }
    return w;
}

inline double ramp(double u, double rf) {
    if (rf <= 0.0 || u >= rf) return 1.0;
    if (u <= 0.0) return 0.0;
    return 0.5 * (1.0 - std::cos(pi * u / rf));
}

enum class Kind { TwoTone, Lfm, DualLfm };

/// Closed-form pulse at pulse-centred time t, rect window [-T/2, T/2) with
/// raised-cosine edges.
inline cd pulse(Kind kind, double bw, double T, double rf, double t) {
    if (t < -T / 2 || t >= T / 2) return {};
    cd v;
    switch (kind) {
        case Kind::TwoTone:
            v = std::polar(1.0, -pi * bw * t) + std::polar(1.0, pi * bw * t);
            break;
        case Kind::Lfm:
            v = std::polar(1.0, pi * (bw / T) * t * t);
            break;
        case Kind::DualLfm: {
            const double half = bw / 2;
            const double chirp = pi * (half / T) * t * t;
            v = std::polar(1.0, chirp - pi * half * t) + std::polar(1.0, chirp + pi * half * t);
            break;
        }
    }
    return v * ramp(t + T / 2, rf) * ramp(T / 2 - t, rf);
}

/// Samples of the pulse delayed by `delay` inside a capture of `n` samples at
/// rate fs, where capture sample k sits at k / fs and the undelayed pulse's
/// first sample sits at 0.
inline std::vector<cd> delayed(Kind kind, double bw, double T, double rf, double fs, double delay, std::size_t n) {
    const double n_pulse = std::round(T * fs);
    const double centre = (n_pulse - 1) / (2 * fs);
    std::vector<cd> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = pulse(kind, bw, T, rf, static_cast<double>(k) / fs - delay - centre);
    return out;
}

}  // namespace oracle

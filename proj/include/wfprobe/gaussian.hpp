// Copyright 2026 The wfprobe Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file
 * Closed-form algebra of one-dimensional Gaussian probe wavefunctions.
 *
 * Phase convention: a packet with center c (possibly complex), width sigma and
 * weight w is the function
 *
 *     psi(x) = w * exp(-(x - c)^2 / (4 sigma^2)),
 *
 * i.e. the analytic continuation of a real-centred Gaussian. The displacement
 * exp(-i s P) maps psi(x) to psi(x - s) for complex s as well, so a complex
 * weak value simply moves the center off the real axis and every phase and
 * norm change it induces is carried by the formula above. Overlaps are
 *
 *     <a|b> = conj(w_a) w_b sqrt(2 pi) sigma exp(-(conj(c_a) - c_b)^2 / (8 sigma^2)).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "wfprobe/types.hpp"

namespace wfprobe {

/// Centers closer than this are treated as identical when merging.
inline constexpr double kCenterMergeTolerance = 1e-12;

struct GaussianPacket {
    cplx center{0.0, 0.0};
    double width{1.0};
    cplx weight{1.0, 0.0};

    /// (2 pi sigma^2)^(-1/4): the weight that makes a real-centred packet unit-norm.
    static double unit_weight(double width) {
        return std::pow(2.0 * std::numbers::pi * width * width, -0.25);
    }

    static GaussianPacket normalized(cplx center, double width, cplx amplitude = 1.0) {
        if (!(width > 0.0) || !std::isfinite(width)) {
            throw ValidationError("gaussian packet width must be positive, got " +
                                  std::to_string(width));
        }
        return GaussianPacket{center, width, amplitude * unit_weight(width)};
    }

    [[nodiscard]] cplx operator()(double x) const {
        const cplx d = x - center;
        return weight * std::exp(-d * d / (4.0 * width * width));
    }
};

inline GaussianPacket shift(const GaussianPacket &p, cplx s) {
    return GaussianPacket{p.center + s, p.width, p.weight};
}

/// Overlap of two unit-weight shapes with centers a, b and common width.
inline cplx unit_overlap(cplx a, cplx b, double width) {
    const cplx d = std::conj(a) - b;
    return std::exp(-d * d / (8.0 * width * width));
}

inline void require_same_width(double a, double b) {
    if (std::abs(a - b) > 1e-14 * std::max(std::abs(a), std::abs(b))) {
        throw ValidationError("gaussian overlap requires equal widths (" + std::to_string(a) +
                              " vs " + std::to_string(b) + ")");
    }
}

inline cplx overlap(const GaussianPacket &a, const GaussianPacket &b) {
    require_same_width(a.width, b.width);
    const double sigma = a.width;
    return std::conj(a.weight) * b.weight * std::sqrt(2.0 * std::numbers::pi) * sigma *
           unit_overlap(a.center, b.center, sigma);
}

/// Coherent superposition of packets sharing one width.
class ProbeWave {
  public:
    ProbeWave() = default;

    explicit ProbeWave(std::vector<GaussianPacket> packets) : packets_(std::move(packets)) {
        for (const auto &p : packets_) {
            require_same_width(p.width, packets_.front().width);
        }
        canonicalize();
    }

    [[nodiscard]] const std::vector<GaussianPacket> &packets() const { return packets_; }
    [[nodiscard]] bool empty() const { return packets_.empty(); }
    [[nodiscard]] double width() const { return packets_.empty() ? 1.0 : packets_.front().width; }

    [[nodiscard]] cplx operator()(double x) const {
        cplx v{0.0, 0.0};
        for (const auto &p : packets_) {
            v += p(x);
        }
        return v;
    }

  private:
    void canonicalize() {
        std::vector<GaussianPacket> merged;
        for (const auto &p : packets_) {
            auto it = std::find_if(merged.begin(), merged.end(), [&](const GaussianPacket &q) {
                return std::abs(q.center - p.center) <= kCenterMergeTolerance;
            });
            if (it == merged.end()) {
                merged.push_back(p);
            } else {
                it->weight += p.weight;
            }
        }
        std::erase_if(merged, [](const GaussianPacket &p) { return std::abs(p.weight) == 0.0; });
        std::sort(merged.begin(), merged.end(), [](const auto &a, const auto &b) {
            if (a.center.real() != b.center.real()) {
                return a.center.real() < b.center.real();
            }
            return a.center.imag() < b.center.imag();
        });
        packets_ = std::move(merged);
    }

    std::vector<GaussianPacket> packets_;
};

inline cplx overlap(const ProbeWave &a, const ProbeWave &b) {
    cplx s{0.0, 0.0};
    for (const auto &p : a.packets()) {
        for (const auto &q : b.packets()) {
            s += overlap(p, q);
        }
    }
    return s;
}

inline double norm_sq(const ProbeWave &w) { return overlap(w, w).real(); }

/// <X> of the normalized wave. The cross term between packets a and b
/// contributes <a|b> * (conj(c_a) + c_b) / 2.
inline double mean_position(const ProbeWave &w) {
    cplx num{0.0, 0.0};
    cplx den{0.0, 0.0};
    for (const auto &a : w.packets()) {
        for (const auto &b : w.packets()) {
            const cplx o = overlap(a, b);
            den += o;
            num += o * 0.5 * (std::conj(a.center) + b.center);
        }
    }
    if (!(den.real() > 0.0)) {
        throw ValidationError("mean_position of a zero-norm probe wave");
    }
    return num.real() / den.real();
}

struct Grid {
    double x_min{-6.0};
    double x_max{6.0};
    std::size_t n_points{241};

    void validate() const {
        if (n_points < 2 || !(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
            throw ValidationError("degenerate grid: need n_points >= 2 and x_max > x_min");
        }
    }
    [[nodiscard]] double step() const { return (x_max - x_min) / static_cast<double>(n_points - 1); }
    [[nodiscard]] double at(std::size_t i) const { return x_min + step() * static_cast<double>(i); }
};

inline std::vector<double> render_density(const ProbeWave &w, const Grid &grid) {
    grid.validate();
    std::vector<double> out(grid.n_points, 0.0);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        out[i] = std::norm(w(grid.at(i)));
    }
    return out;
}

/// Orthonormal expansion of a family of probe waves.
struct GramExpansion {
    /// Distinct unit-weight shapes (one per center) spanning every wave.
    std::vector<GaussianPacket> shapes;
    /// basis(p, k): coefficient of shape p in orthonormal basis vector k.
    Matrix basis;
    /// coefficients(w, k) = <e_k | wave_w>.
    Matrix coefficients;
};

namespace detail {

/// Orthonormalizes the span of `shapes` given their Gram matrix. Returns
/// (basis, projector) where basis(p,k) expands e_k and projector(k,p) maps
/// shape-coordinates to basis coordinates.
inline std::pair<Matrix, Matrix> orthonormal_basis(const Matrix &gram) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const auto &d = es.eigenvalues();
    const double dmax = d.size() > 0 ? d.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        if (d(k) > 1e-15 * dmax && d(k) > 0.0) {
            keep.push_back(k);
        }
    }
    const auto n = gram.rows();
    const auto r = static_cast<Eigen::Index>(keep.size());
    Matrix basis(n, r);
    Matrix proj(r, n);
    for (Eigen::Index j = 0; j < r; ++j) {
        const auto k = keep[static_cast<std::size_t>(j)];
        const double s = std::sqrt(d(k));
        basis.col(j) = es.eigenvectors().col(k) / s;
        proj.row(j) = s * es.eigenvectors().col(k).adjoint();
    }
    return {basis, proj};
}

} // namespace detail

inline GramExpansion gram_orthonormalize(const std::vector<ProbeWave> &waves) {
    if (waves.empty()) {
        throw ValidationError("gram_orthonormalize needs at least one wave");
    }
    GramExpansion out;
    const double sigma = waves.front().width();
    for (const auto &w : waves) {
        if (!w.empty()) {
            require_same_width(w.width(), sigma);
        }
        for (const auto &p : w.packets()) {
            const bool seen = std::any_of(out.shapes.begin(), out.shapes.end(), [&](const auto &q) {
                return std::abs(q.center - p.center) <= kCenterMergeTolerance;
            });
            if (!seen) {
                out.shapes.push_back(GaussianPacket{p.center, sigma, 1.0});
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(out.shapes.size());
    Matrix gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            gram(i, j) = overlap(out.shapes[static_cast<std::size_t>(i)],
                                 out.shapes[static_cast<std::size_t>(j)]);
        }
    }
    auto [basis, proj] = detail::orthonormal_basis(gram);
    out.basis = basis;
    out.coefficients = Matrix::Zero(static_cast<Eigen::Index>(waves.size()), proj.rows());
    for (std::size_t w = 0; w < waves.size(); ++w) {
        Vector a = Vector::Zero(n);
        for (const auto &p : waves[w].packets()) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (std::abs(out.shapes[static_cast<std::size_t>(i)].center - p.center) <=
                    kCenterMergeTolerance) {
                    a(i) += p.weight;
                }
            }
        }
        out.coefficients.row(static_cast<Eigen::Index>(w)) = (proj * a).transpose();
    }
    return out;
}

/// One product term of a multi-probe wavefunction:
/// amplitude * prod_j phi0(x_j - centers[j]), phi0 the unit-norm packet.
struct ProbeTerm {
    cplx amplitude{1.0, 0.0};
    std::vector<cplx> centers;
};

/// Joint wavefunction of one or more probes sharing a width; the general
/// form of a conditioned probe state.
struct JointProbeWave {
    double width{1.0};
    std::vector<std::string> probes;
    std::vector<ProbeTerm> terms;

    [[nodiscard]] std::size_t dims() const { return probes.size(); }

    [[nodiscard]] cplx term_overlap(const ProbeTerm &a, const ProbeTerm &b) const {
        cplx o{1.0, 0.0};
        for (std::size_t j = 0; j < a.centers.size(); ++j) {
            o *= unit_overlap(a.centers[j], b.centers[j], width);
        }
        return o;
    }

    [[nodiscard]] double norm_sq() const {
        cplx s{0.0, 0.0};
        for (const auto &a : terms) {
            for (const auto &b : terms) {
                s += std::conj(a.amplitude) * b.amplitude * term_overlap(a, b);
            }
        }
        return s.real();
    }

    [[nodiscard]] JointProbeWave normalized() const {
        const double n = norm_sq();
        if (!(n > 0.0)) {
            throw ConditioningError("cannot normalize a zero-norm probe wave");
        }
        JointProbeWave out = *this;
        for (auto &t : out.terms) {
            t.amplitude /= std::sqrt(n);
        }
        return out;
    }

    [[nodiscard]] cplx operator()(const std::vector<double> &x) const {
        const double nw = GaussianPacket::unit_weight(width);
        cplx v{0.0, 0.0};
        for (const auto &t : terms) {
            cplx f = t.amplitude;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const cplx d = x[j] - t.centers[j];
                f *= nw * std::exp(-d * d / (4.0 * width * width));
            }
            v += f;
        }
        return v;
    }

    /// Reduced single-probe density of probe j at x (other probes traced out).
    [[nodiscard]] double marginal_density(std::size_t j, double x) const {
        const double nw = GaussianPacket::unit_weight(width);
        cplx s{0.0, 0.0};
        for (const auto &a : terms) {
            const cplx da = x - a.centers[j];
            const cplx fa = nw * std::exp(-da * da / (4.0 * width * width));
            for (const auto &b : terms) {
                const cplx db = x - b.centers[j];
                const cplx fb = nw * std::exp(-db * db / (4.0 * width * width));
                cplx rest{1.0, 0.0};
                for (std::size_t i = 0; i < a.centers.size(); ++i) {
                    if (i != j) {
                        rest *= unit_overlap(a.centers[i], b.centers[i], width);
                    }
                }
                s += std::conj(a.amplitude * fa) * b.amplitude * fb * rest;
            }
        }
        return s.real();
    }

    /// <X_j> of the normalized joint wave.
    [[nodiscard]] double mean_position(std::size_t j) const {
        cplx num{0.0, 0.0};
        cplx den{0.0, 0.0};
        for (const auto &a : terms) {
            for (const auto &b : terms) {
                const cplx o = std::conj(a.amplitude) * b.amplitude * term_overlap(a, b);
                den += o;
                num += o * 0.5 * (std::conj(a.centers[j]) + b.centers[j]);
            }
        }
        if (!(den.real() > 0.0)) {
            throw ValidationError("mean_position of a zero-norm probe wave");
        }
        return num.real() / den.real();
    }

    /// Single-probe view; only valid when dims() == 1.
    [[nodiscard]] ProbeWave as_single() const {
        if (dims() != 1) {
            throw ValidationError("as_single on a " + std::to_string(dims()) + "-probe wave");
        }
        std::vector<GaussianPacket> packets;
        for (const auto &t : terms) {
            packets.push_back(GaussianPacket::normalized(t.centers[0], width, t.amplitude));
        }
        return ProbeWave(std::move(packets));
    }
};

inline std::vector<double> render_marginal_density(const JointProbeWave &w, std::size_t probe,
                                                   const Grid &grid) {
    grid.validate();
    std::vector<double> out(grid.n_points, 0.0);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        out[i] = w.marginal_density(probe, grid.at(i));
    }
    return out;
}

} // namespace wfprobe

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

#include <random>

#include <gtest/gtest.h>

#include "oracles/dense_oracle.hpp"
#include "wfprobe/gaussian.hpp"

using namespace wfprobe;

namespace {

cplx quad_overlap(const GaussianPacket &a, const GaussianPacket &b) {
    return oracle::quad_overlap(a.weight, a.center, a.width, b.weight, b.center, b.width);
}

} // namespace

TEST(Gaussian, UnitWeightNormalizesRealCenter) {
    for (double s : {0.3, 1.0, 2.5}) {
        const auto p = GaussianPacket::normalized(0.7, s);
        EXPECT_NEAR(overlap(p, p).real(), 1.0, 1e-14);
        EXPECT_NEAR(quad_overlap(p, p).real(), 1.0, 1e-10);
    }
}

TEST(Gaussian, RandomOverlapsMatchQuadrature) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> c(-1.5, 1.5);
    std::uniform_real_distribution<double> ci(-0.4, 0.4);
    std::uniform_real_distribution<double> s(0.4, 2.0);
    for (int i = 0; i < 100; ++i) {
        const double w = s(rng);
        const GaussianPacket a{{c(rng), ci(rng)}, w, {c(rng), c(rng)}};
        const GaussianPacket b{{c(rng), ci(rng)}, w, {c(rng), c(rng)}};
        EXPECT_LT(std::abs(overlap(a, b) - quad_overlap(a, b)), 1e-10) << "case " << i;
    }
}

TEST(Gaussian, OverlapIsHermitian) {
    const GaussianPacket a{{0.2, 0.1}, 1.0, {1.0, 0.5}};
    const GaussianPacket b{{-0.4, -0.3}, 1.0, {0.3, -0.2}};
    EXPECT_LT(std::abs(overlap(a, b) - std::conj(overlap(b, a))), 1e-15);
}

TEST(Gaussian, MismatchedWidthsRejected) {
    EXPECT_THROW(overlap(GaussianPacket::normalized(0, 1.0), GaussianPacket::normalized(0, 1.1)), ValidationError);
    EXPECT_THROW(GaussianPacket::normalized(0, 0.0), ValidationError);
    EXPECT_THROW(GaussianPacket::normalized(0, -1.0), ValidationError);
}

TEST(Gaussian, ShiftMovesCenter) {
    const auto p = shift(GaussianPacket::normalized(0.0, 1.0), {0.3, 0.1});
    EXPECT_EQ(p.center, cplx(0.3, 0.1));
    EXPECT_NEAR(std::abs(p(0.3) / GaussianPacket::unit_weight(1.0)), std::exp(0.01 / 4.0), 1e-14);
}

TEST(ProbeWave, MergesEqualCenters) {
    const ProbeWave w({GaussianPacket::normalized(0.1, 1.0, 0.5), GaussianPacket::normalized(0.1, 1.0, 0.25),
                       GaussianPacket::normalized(-0.2, 1.0, 1.0)});
    ASSERT_EQ(w.packets().size(), 2u);
    EXPECT_DOUBLE_EQ(w.packets()[0].center.real(), -0.2);
    EXPECT_NEAR(std::abs(w.packets()[1].weight / GaussianPacket::unit_weight(1.0)), 0.75, 1e-15);
}

TEST(ProbeWave, CancellingPacketsVanish) {
    const ProbeWave w({GaussianPacket::normalized(0.1, 1.0, 1.0), GaussianPacket::normalized(0.1, 1.0, -1.0)});
    EXPECT_TRUE(w.empty());
    EXPECT_THROW(mean_position(w), ValidationError);
}

TEST(ProbeWave, MeanPositionMatchesQuadrature) {
    const ProbeWave w({GaussianPacket::normalized(0.3, 0.8, {1.0, 0.2}),
                       GaussianPacket::normalized({-0.5, 0.2}, 0.8, -0.6)});
    auto dens = [&](double x) { return std::norm(w(x)); };
    const double n = oracle::simpson(dens, -12, 12, 20000);
    const double m = oracle::simpson([&](double x) { return x * dens(x); }, -12, 12, 20000) / n;
    EXPECT_NEAR(norm_sq(w), n, 1e-10);
    EXPECT_NEAR(mean_position(w), m, 1e-10);
}

TEST(ProbeWave, RenderedDensityIntegratesToNorm) {
    const ProbeWave w({GaussianPacket::normalized(0.0, 1.0)});
    const Grid g{-10, 10, 2001};
    const auto d = render_density(w, g);
    double s = 0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        s += 0.5 * (d[i] + d[i + 1]) * g.step();
    }
    EXPECT_NEAR(s, 1.0, 1e-8);
    EXPECT_THROW(render_density(w, Grid{1, 1, 10}), ValidationError);
    EXPECT_THROW(render_density(w, Grid{0, 1, 1}), ValidationError);
}

TEST(Gram, ExpansionIsOrthonormalAndPreservesNorms) {
    const double s = 1.0;
    std::vector<ProbeWave> waves{
        ProbeWave({GaussianPacket::normalized(0.0, s), GaussianPacket::normalized(0.01, s, -1.0)}),
        ProbeWave({GaussianPacket::normalized(0.01, s, 0.5)}),
        ProbeWave({GaussianPacket::normalized(0.5, s, {0.0, 1.0})}),
    };
    const auto g = gram_orthonormalize(waves);
    const auto n = g.basis.cols();
    Matrix gram(static_cast<Eigen::Index>(g.shapes.size()), static_cast<Eigen::Index>(g.shapes.size()));
    for (std::size_t i = 0; i < g.shapes.size(); ++i) {
        for (std::size_t j = 0; j < g.shapes.size(); ++j) {
            gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = overlap(g.shapes[i], g.shapes[j]);
        }
    }
    const Matrix id = g.basis.adjoint() * gram * g.basis;
    EXPECT_LT((id - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-9);
    for (std::size_t w = 0; w < waves.size(); ++w) {
        EXPECT_NEAR(g.coefficients.row(static_cast<Eigen::Index>(w)).squaredNorm(), norm_sq(waves[w]), 1e-12);
    }
}

TEST(JointProbeWave, NormAndMarginals) {
    JointProbeWave w;
    w.width = 1.0;
    w.probes = {"W1", "W2"};
    w.terms = {{0.5, {0.2, 0.0}}, {0.5, {0.0, -0.3}}};
    const auto n = w.normalized();
    EXPECT_NEAR(n.norm_sq(), 1.0, 1e-14);
    for (std::size_t j = 0; j < 2; ++j) {
        const double mass = oracle::simpson([&](double x) { return n.marginal_density(j, x); }, -12, 12, 8000);
        const double mean =
            oracle::simpson([&](double x) { return x * n.marginal_density(j, x); }, -12, 12, 8000);
        EXPECT_NEAR(mass, 1.0, 1e-10);
        EXPECT_NEAR(mean, n.mean_position(j), 1e-10);
    }
    JointProbeWave zero = w;
    zero.terms = {{1.0, {0.1, 0.1}}, {-1.0, {0.1, 0.1}}};
    EXPECT_THROW((void)zero.normalized(), ConditioningError);
}

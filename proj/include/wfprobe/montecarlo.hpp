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
 * Finite-statistics readout of scenario runs: outcome and probe-position
 * sampling, weak-value estimation from mean shifts, and the exact
 * disturbance scan.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "wfprobe/analysis.hpp"
#include "wfprobe/scenario.hpp"

namespace wfprobe {

struct SampleRecord {
    std::size_t run_index{0};
    /// Index into SampleSet::result.rows.
    std::size_t row{0};
    /// One position per probe; NaN for rows without a pure conditional wave.
    std::vector<double> positions;
};

struct SampleSet {
    ScenarioResult result;
    std::uint64_t seed{0};
    std::vector<SampleRecord> records;

    [[nodiscard]] const ResultRow &row_of(const SampleRecord &r) const { return result.rows[r.row]; }
};

/// SplitMix64 finalizer, used to derive independent sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::size_t kSampleChunk = 8192;

/// Exact sampler for |psi(x)|^2 of a joint probe wave.
///
/// Envelope: by Cauchy-Schwarz |sum_k a_k f_k|^2 <= B sum_k b_k g_k(x), with
/// b_k the peak modulus of term k and g_k(x) = prod_j exp(-(x_j - Re c_kj)^2 / 2 sigma^2).
class ProbeSampler {
  public:
    explicit ProbeSampler(JointProbeWave wave) : wave_(std::move(wave)) {
        const double s = wave_.width;
        const double nw = GaussianPacket::unit_weight(s);
        for (const auto &t : wave_.terms) {
            double b = std::abs(t.amplitude);
            for (const auto &c : t.centers) {
                b *= nw * std::exp(c.imag() * c.imag() / (4.0 * s * s));
            }
            b_.push_back(b);
            total_ += b;
        }
        pick_ = std::discrete_distribution<std::size_t>(b_.begin(), b_.end());
    }

    template <class Rng> std::vector<double> operator()(Rng &rng) {
        const double s = wave_.width;
        std::normal_distribution<double> normal(0.0, s);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> x(wave_.dims());
        for (;;) {
            const auto k = pick_(rng);
            for (std::size_t j = 0; j < x.size(); ++j) {
                x[j] = wave_.terms[k].centers[j].real() + normal(rng);
            }
            double env = 0.0;
            for (std::size_t m = 0; m < b_.size(); ++m) {
                double g = 1.0;
                for (std::size_t j = 0; j < x.size(); ++j) {
                    const double d = x[j] - wave_.terms[m].centers[j].real();
                    g *= std::exp(-d * d / (2.0 * s * s));
                }
                env += b_[m] * g;
            }
            const double target = std::norm(wave_(x));

            if (unit(rng) * total_ * env <= target) {
                return x;
            }
        }
    }

  private:
    JointProbeWave wave_;
    std::vector<double> b_;
    double total_{0.0};
    std::discrete_distribution<std::size_t> pick_;
};

/// Draws N runs: outcome row from the exact Born table, then probe positions
/// from the row's exact conditional density. Chunks of kSampleChunk runs use
/// their own mt19937_64 seeded by splitmix64(seed, chunk), so the output does
/// not depend on the thread count.
inline SampleSet sample(const ScenarioConfig &cfg, std::size_t n, std::uint64_t seed, unsigned threads = 0) {
    if (n == 0) {
        throw ValidationError("sample count must be at least 1");
    }
    SampleSet set;
    set.result = run(cfg);
    set.seed = seed;
    set.records.resize(n);
    const auto &rows = set.result.rows;
    std::vector<double> probs;
    for (const auto &r : rows) {
        probs.push_back(r.probability);
    }
    std::vector<std::optional<ProbeSampler>> samplers;
    for (const auto &r : rows) {
        samplers.emplace_back(r.conditional_probes && r.probability > 0.0
                                  ? std::optional<ProbeSampler>(ProbeSampler(*r.conditional_probes))
                                  : std::nullopt);
    }
    const std::size_t dims = cfg.variant == Variant::wfs ? 1 : 2;
    const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;

    auto work = [&](std::size_t first_chunk, std::size_t stride) {
        auto local = samplers;
        std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
        for (std::size_t c = first_chunk; c < chunks; c += stride) {
            std::mt19937_64 rng(splitmix64(seed ^ splitmix64(c)));
            const std::size_t end = std::min(n, (c + 1) * kSampleChunk);
            for (std::size_t i = c * kSampleChunk; i < end; ++i) {
                auto &rec = set.records[i];
                rec.run_index = i;
                rec.row = pick(rng);
                auto &s = local[rec.row];
                rec.positions = s ? (*s)(rng) : std::vector<double>(dims, std::numeric_limits<double>::quiet_NaN());
            }
        }
    };
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) {
        pool.emplace_back(work, t, threads);
    }
    work(0, threads);
    for (auto &t : pool) {
        t.join();
    }
    return set;
}

struct Conditioning {
    std::optional<std::vector<std::string>> wigner;
    std::optional<std::vector<std::string>> friends;
    std::size_t probe{0};
};

inline bool accepts(const Conditioning &c, const ResultRow &row) {
    if (c.wigner && row.wigner_outcomes != *c.wigner) {
        return false;
    }
    return !c.friends || (row.friend_outcomes && *row.friend_outcomes == *c.friends);
}

struct WeakValueEstimate {
    std::size_t count{0};
    double mean{0.0};
    double stderr_mean{0.0};
    /// mean / gamma; absent when gamma = 0.
    std::optional<double> implied_wv;
    std::optional<double> implied_stderr;
};

inline constexpr std::size_t kMinConditionedSamples = 100;

inline WeakValueEstimate estimate_weak_value(const SampleSet &set, const Conditioning &cond) {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto &r : set.records) {
        if (!accepts(cond, set.row_of(r))) {
            continue;
        }
        if (cond.probe >= r.positions.size()) {
            throw ValidationError("probe index " + std::to_string(cond.probe) + " out of range");
        }
        const double x = r.positions[cond.probe];
        if (std::isnan(x)) {
            continue;
        }
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    if (n == 0) {
        throw ConditioningError("no samples satisfy the conditioning");
    }
    if (n < kMinConditionedSamples) {
        throw ConditioningError("only " + std::to_string(n) + " conditioned samples; at least " +
                                std::to_string(kMinConditionedSamples) + " required");
    }
    WeakValueEstimate e;
    e.count = n;
    e.mean = sum / static_cast<double>(n);
    const double var = (sum_sq - static_cast<double>(n) * e.mean * e.mean) / static_cast<double>(n - 1);
    e.stderr_mean = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    const double g = set.result.config.gamma;
    if (g > 0.0) {
        e.implied_wv = e.mean / g;
        e.implied_stderr = e.stderr_mean / g;
    }
    return e;
}

struct ScanPoint {
    double gamma{0.0};
    double max_prob_deviation{0.0};
};

struct ScanResult {
    std::vector<ScanPoint> points;
    /// Least-squares slope of log(deviation) against log(gamma).
    std::optional<double> slope;
    bool exactly_non_invasive{false};
    std::string summary;
};

/// Deviations at or below this are rounding noise of the exact evaluation.
inline constexpr double kZeroDeviation = 1e-15;

inline ScanResult disturbance_scan(const ScenarioConfig &cfg, const std::vector<double> &gammas) {
    if (gammas.size() < 3) {
        throw ValidationError("disturbance scan needs at least 3 gamma values");
    }
    for (double g : gammas) {
        if (!(g > 0.0)) {
            throw ValidationError("disturbance scan gamma values must be positive");
        }
    }
    auto key = [](const ResultRow &r) {
        auto k = r.wigner_outcomes;
        if (r.friend_outcomes) {
            k.insert(k.end(), r.friend_outcomes->begin(), r.friend_outcomes->end());
        }
        return k;
    };
    auto table = [&](double g) {
        ScenarioConfig c = cfg;
        c.gamma = g;
        std::map<std::vector<std::string>, double> t;
        for (const auto &r : run(c).rows) {
            t[key(r)] += r.probability;
        }
        return t;
    };
    const auto base = table(0.0);
    ScanResult out;
    std::vector<double> lx;
    std::vector<double> ly;
    for (double g : gammas) {
        auto t = table(g);
        double dev = 0.0;
        for (const auto &[k, p] : t) {
            const auto it = base.find(k);
            dev = std::max(dev, std::abs(p - (it == base.end() ? 0.0 : it->second)));
        }
        for (const auto &[k, p] : base) {
            if (!t.count(k)) {
                dev = std::max(dev, p);
            }
        }
        if (dev <= kZeroDeviation) {
            dev = 0.0;
        } else {
            lx.push_back(std::log(g));
            ly.push_back(std::log(dev));
        }
        out.points.push_back({g, dev});
    }
    if (lx.empty()) {
        out.exactly_non_invasive = true;
        out.summary = "exactly non-invasive";
        return out;
    }
    if (lx.size() >= 2) {
        const double n = static_cast<double>(lx.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        out.summary = "log-log slope " + std::to_string(*out.slope);
    } else {
        out.summary = "single nonzero deviation; slope undefined";
    }
    return out;
}

} // namespace wfprobe

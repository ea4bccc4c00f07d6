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
 * Weak values and weak von Neumann couplings.
 *
 * The coupling exp(-i gamma A P) is applied exactly: every branch is expanded
 * in the eigenbasis of A and the component with eigenvalue a has its probe
 * displaced by gamma * a. First-order statements are recovered afterwards by
 * truncate_order() and leading_order_form(), which classify terms by their
 * formal order in gamma.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "wfprobe/state.hpp"
#include "wfprobe/types.hpp"

namespace wfprobe {

inline constexpr double kPostSelectionTolerance = 1e-12;

struct WeakValue {
    cplx value;
    Vector pre;
    Vector post;
    Matrix observable;
    cplx denominator;
};

/// <post| U A |pre> / <post| U |pre>.
inline WeakValue weak_value(const Vector &pre, const Matrix &observable, const Vector &post,
                            const std::optional<Matrix> &u_mid = std::nullopt) {
    const auto n = pre.size();
    if (post.size() != n || observable.rows() != n || observable.cols() != n) {
        throw ValidationError("weak_value: dimension mismatch");
    }
    if (pre.norm() == 0.0 || post.norm() == 0.0) {
        throw ValidationError("weak_value: pre- and post-selected states must be nonzero");
    }
    const Matrix u = u_mid.value_or(Matrix::Identity(n, n));
    const cplx den = post.dot(u * pre);
    if (std::abs(den) < kPostSelectionTolerance) {
        throw OrthogonalPostSelection("weak_value: post-selected state is orthogonal to the "
                                      "evolved pre-selected state");
    }
    const cplx num = post.dot(u * (observable * pre));
    return WeakValue{num / den, pre, post, observable, den};
}

/// Exact action of exp(-i gamma A P_probe).
inline BranchState couple_exact(const BranchState &state, const Observable &obs,
                                const std::string &probe, double gamma) {
    if (gamma < 0.0 || !std::isfinite(gamma)) {
        throw ValidationError("coupling strength gamma must be >= 0");
    }
    const auto r = state.finite_index(obs.register_id());
    const auto p = state.probe_index(probe);
    const auto dim = static_cast<Eigen::Index>(state.finite_registers()[r].dim());
    if (obs.matrix().rows() != dim) {
        throw ValidationError("observable dimension does not match register '" + obs.register_id() + "'");
    }
    if (gamma == 0.0) {
        return state;
    }
    const Matrix &v = obs.eigenvectors();
    const Eigen::VectorXd &lambda = obs.eigenvalues();
    std::vector<Branch> out;
    for (const auto &b : state.branches()) {
        const auto j = static_cast<Eigen::Index>(b.labels[r]);
        for (Eigen::Index k = 0; k < dim; ++k) {
            const cplx proj = std::conj(v(j, k));
            if (proj == cplx{0.0, 0.0}) {
                continue;
            }
            for (Eigen::Index i = 0; i < dim; ++i) {
                const cplx c = v(i, k) * proj;
                if (c == cplx{0.0, 0.0}) {
                    continue;
                }
                Branch nb = b;
                nb.amplitude *= c;
                nb.labels[r] = static_cast<std::size_t>(i);
                nb.shifts[p] += gamma * lambda(k);
                out.push_back(std::move(nb));
            }
        }
    }
    return state.with_branches(std::move(out));
}

/// First-order coupling. The shifted-Gaussian representation makes the exact
/// coupling as cheap as its linearization, so both entry points share one
/// implementation; the O(gamma) view lives in truncate_order().
inline BranchState couple_weak_first_order(const BranchState &state, const Observable &obs,
                                           const std::string &probe, double gamma) {
    return couple_exact(state, obs, probe, gamma);
}

/// A collection of terms removed by a truncation, with the reason.
struct DroppedTerm {
    std::vector<std::size_t> labels;
    std::vector<ProbeTerm> terms;
    std::string reason;
};

struct Truncation {
    BranchState state;
    std::vector<DroppedTerm> ledger;
};

namespace detail {

struct LabelGroup {
    std::vector<std::size_t> labels;
    std::vector<ProbeTerm> terms;
};

inline std::vector<LabelGroup> group_by_labels(const BranchState &state) {
    std::vector<LabelGroup> groups;
    for (const auto &b : state.branches()) {
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const LabelGroup &g) { return g.labels == b.labels; });
        if (it == groups.end()) {
            groups.push_back(LabelGroup{b.labels, {}});
            it = std::prev(groups.end());
        }
        it->terms.push_back(ProbeTerm{b.amplitude, b.shifts});
    }
    return groups;
}

inline bool leading_coefficient_vanishes(const std::vector<ProbeTerm> &terms) {
    cplx sum{0.0, 0.0};
    double scale = 0.0;
    for (const auto &t : terms) {
        sum += t.amplitude;
        scale += std::abs(t.amplitude);
    }
    return std::abs(sum) <= 1e-9 * scale;
}

/// Shifts equal in every probe but one, where they differ.
inline bool differ_in_one_probe(const ProbeTerm &a, const ProbeTerm &b) {
    int differing = 0;
    for (std::size_t j = 0; j < a.centers.size(); ++j) {
        if (std::abs(a.centers[j] - b.centers[j]) > kCenterMergeTolerance) {
            ++differing;
        }
    }
    return differing == 1;
}

inline bool opposite(cplx a, cplx b) {
    return std::abs(a + b) <= 1e-9 * (std::abs(a) + std::abs(b));
}

/// Cancels difference pairs  c*phi(.. - u ..) - c*phi(.. - v ..)  whose
/// leading term vanishes. A term with several partners splits its magnitude
/// equally between them.
inline std::vector<ProbeTerm> cancel_difference_pairs(std::vector<ProbeTerm> terms,
                                                      std::vector<ProbeTerm> &removed) {
    const std::size_t n = terms.size();
    std::vector<std::vector<std::size_t>> edges(n);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (opposite(terms[i].amplitude, terms[j].amplitude) &&
                differ_in_one_probe(terms[i], terms[j])) {
                edges[i].push_back(j);
                edges[j].push_back(i);
                pairs.emplace_back(i, j);
            }
        }
    }
    if (pairs.empty()) {
        return terms;
    }
    std::vector<cplx> phase(n);
    std::vector<double> share(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::abs(terms[i].amplitude);
        phase[i] = terms[i].amplitude / mag;
        if (!edges[i].empty()) {
            share[i] = mag / static_cast<double>(edges[i].size());
        }
    }
    std::vector<double> cancelled(n, 0.0);
    for (const auto &[i, j] : pairs) {
        const double m = std::min(share[i], share[j]);
        cancelled[i] += m;
        cancelled[j] += m;
        removed.push_back(ProbeTerm{phase[i] * m, terms[i].centers});
        removed.push_back(ProbeTerm{phase[j] * m, terms[j].centers});
    }
    std::vector<ProbeTerm> kept;
    for (std::size_t i = 0; i < n; ++i) {
        const double mag = std::abs(terms[i].amplitude) - cancelled[i];
        if (mag > 1e-12 * std::abs(terms[i].amplitude)) {
            kept.push_back(ProbeTerm{phase[i] * mag, terms[i].centers});
        }
    }
    return kept;
}

inline BranchState rebuild(const BranchState &like, const std::vector<LabelGroup> &groups) {
    std::vector<Branch> br;
    for (const auto &g : groups) {
        for (const auto &t : g.terms) {
            br.push_back(Branch{t.amplitude, g.labels, t.centers});
        }
    }
    return like.with_branches(std::move(br));
}

} // namespace detail

/// Keeps the terms of formal order <= `order` in gamma.
///
/// Order 0: difference pairs (equal and opposite amplitudes, shifts differing
/// in one probe) are removed, then every label group whose amplitudes sum to
/// zero is removed. Order 1: only groups whose zeroth and first shift moments
/// both vanish are removed.
inline Truncation truncate_order(const BranchState &state, int order) {
    if (order != 0 && order != 1) {
        throw ValidationError("truncate_order supports order 0 or 1");
    }
    auto groups = detail::group_by_labels(state);
    std::vector<DroppedTerm> ledger;
    std::vector<detail::LabelGroup> kept;
    for (auto &g : groups) {
        if (g.terms.size() < 2) {
            kept.push_back(std::move(g));
            continue;
        }
        if (order == 0) {
            std::vector<ProbeTerm> removed;
            g.terms = detail::cancel_difference_pairs(std::move(g.terms), removed);
            if (!removed.empty()) {
                ledger.push_back(DroppedTerm{g.labels, std::move(removed), "difference pair, O(gamma)"});
            }
            if (!g.terms.empty() && detail::leading_coefficient_vanishes(g.terms)) {
                ledger.push_back(DroppedTerm{g.labels, g.terms, "vanishing leading coefficient, O(gamma)"});
                continue;
            }
        } else if (detail::leading_coefficient_vanishes(g.terms)) {
            bool first_vanishes = true;
            const std::size_t dims = g.terms.front().centers.size();
            for (std::size_t j = 0; j < dims; ++j) {
                cplx m{0.0, 0.0};
                double scale = 0.0;
                for (const auto &t : g.terms) {
                    m += t.amplitude * t.centers[j];
                    scale += std::abs(t.amplitude * t.centers[j]);
                }
                first_vanishes = first_vanishes && std::abs(m) <= 1e-9 * scale;
            }
            if (first_vanishes) {
                ledger.push_back(DroppedTerm{g.labels, g.terms, "vanishing first moment, O(gamma^2)"});
                continue;
            }
        }
        if (!g.terms.empty()) {
            kept.push_back(std::move(g));
        }
    }
    return Truncation{detail::rebuild(state, kept), std::move(ledger)};
}

/// Rewrites every label group sum_t a_t phi(x - s_t) as A phi(x - sbar) with
/// A = sum_t a_t and sbar = sum_t a_t s_t / A: the weak-value form, exact to
/// first order in gamma. Groups with A = 0 are O(gamma) and dropped.
inline Truncation leading_order_form(const BranchState &state) {
    auto groups = detail::group_by_labels(state);
    std::vector<DroppedTerm> ledger;
    std::vector<detail::LabelGroup> kept;
    for (auto &g : groups) {
        if (g.terms.size() == 1) {
            kept.push_back(std::move(g));
            continue;
        }
        if (detail::leading_coefficient_vanishes(g.terms)) {
            ledger.push_back(DroppedTerm{g.labels, g.terms, "vanishing leading coefficient, O(gamma)"});
            continue;
        }
        ProbeTerm reduced;
        const std::size_t dims = g.terms.front().centers.size();
        reduced.amplitude = 0.0;
        reduced.centers.assign(dims, cplx{0.0, 0.0});
        for (const auto &t : g.terms) {
            reduced.amplitude += t.amplitude;
        }
        for (const auto &t : g.terms) {
            for (std::size_t j = 0; j < dims; ++j) {
                reduced.centers[j] += t.amplitude * t.centers[j] / reduced.amplitude;
            }
        }
        kept.push_back(detail::LabelGroup{g.labels, {reduced}});
    }
    return Truncation{detail::rebuild(state, kept), std::move(ledger)};
}

} // namespace wfprobe

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
 * Physics read-outs of scenario runs: conditional probe states, superposition
 * detection, the two-probe entanglement witness and the five-statement
 * contradiction report.
 */

#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wfprobe/scenario.hpp"
#include "wfprobe/state.hpp"
#include "wfprobe/weak.hpp"

namespace wfprobe {

struct OutcomeSelector {
    std::vector<std::string> wigner;
    std::optional<std::vector<std::string>> friends;
};

inline bool matches(const ResultRow &row, const OutcomeSelector &sel) {
    if (row.wigner_outcomes != sel.wigner) {
        return false;
    }
    return !sel.friends || (row.friend_outcomes && *row.friend_outcomes == *sel.friends);
}

inline std::string describe(const OutcomeSelector &sel) {
    std::string s = "W=(";
    for (std::size_t i = 0; i < sel.wigner.size(); ++i) {
        s += (i ? "," : "") + sel.wigner[i];
    }
    s += ")";
    if (sel.friends) {
        s += " F=(";
        for (std::size_t i = 0; i < sel.friends->size(); ++i) {
            s += (i ? "," : "") + (*sel.friends)[i];
        }
        s += ")";
    }
    return s;
}

/// Normalized joint probe wave conditioned on one outcome row.
inline JointProbeWave conditional_probe(const ScenarioResult &result, const OutcomeSelector &sel) {
    const ResultRow *found = nullptr;
    for (const auto &row : result.rows) {
        if (!matches(row, sel)) {
            continue;
        }
        if (found != nullptr) {
            throw ConditioningError("outcome " + describe(sel) +
                                    " matches several rows; specify the friend outcomes");
        }
        found = &row;
    }
    if (found == nullptr || !(found->probability > 0.0)) {
        throw ConditioningError("outcome " + describe(sel) + " has zero probability");
    }
    if (!found->conditional_probes) {
        throw ConditioningError("outcome " + describe(sel) + " has no pure conditional probe state");
    }
    return *found->conditional_probes;
}

enum class SuperpositionKind { single_shifted, coherent_superposition };

inline std::string to_string(SuperpositionKind k) {
    return k == SuperpositionKind::single_shifted ? "single_shifted" : "coherent_superposition";
}

struct SuperpositionClass {
    SuperpositionKind kind{SuperpositionKind::single_shifted};
    /// Distinct center vectors (one entry per probe), in term order.
    std::vector<std::vector<cplx>> centers;
    /// |amplitude|^2 fractions of each cluster, summing to 1.
    std::vector<double> weights;
};

inline constexpr double kDefaultClusterTolerance = 1e-6;

/// Clusters the wave's term centers; centers closer than tolerance * gamma
/// (in every probe coordinate) belong to one cluster.
inline SuperpositionClass detect_superposition(const JointProbeWave &wave, double gamma,
                                               double tolerance = kDefaultClusterTolerance) {
    const double radius = std::max(tolerance * gamma, kCenterMergeTolerance);
    std::vector<std::vector<cplx>> centers;
    std::vector<cplx> amps;
    for (const auto &t : wave.terms) {
        std::size_t k = 0;
        for (; k < centers.size(); ++k) {
            bool close = true;
            for (std::size_t j = 0; j < t.centers.size(); ++j) {
                close = close && std::abs(t.centers[j] - centers[k][j]) <= radius;
            }
            if (close) {
                break;
            }
        }
        if (k == centers.size()) {
            centers.push_back(t.centers);
            amps.push_back(0.0);
        }
        amps[k] += t.amplitude;
    }
    double scale = 0.0;
    for (const auto &a : amps) {
        scale = std::max(scale, std::abs(a));
    }
    SuperpositionClass out;
    double total = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
        if (std::abs(amps[k]) > 1e-12 * scale) {
            out.centers.push_back(centers[k]);
            out.weights.push_back(std::norm(amps[k]));
            total += std::norm(amps[k]);
        }
    }
    for (auto &w : out.weights) {
        w /= total;
    }
    out.kind = out.centers.size() <= 1 ? SuperpositionKind::single_shifted
                                       : SuperpositionKind::coherent_superposition;
    return out;
}

inline SuperpositionClass detect_superposition(const ProbeWave &wave, double gamma,
                                               double tolerance = kDefaultClusterTolerance) {
    JointProbeWave j;
    j.width = wave.width();
    j.probes = {"probe"};
    for (const auto &p : wave.packets()) {
        j.terms.push_back(ProbeTerm{p.weight / GaussianPacket::unit_weight(p.width), {p.center}});
    }
    return detect_superposition(j, gamma, tolerance);
}

struct EntanglementWitness {
    std::size_t schmidt_rank{1};
    bool entangled{false};
    Eigen::VectorXd schmidt_coefficients;
};

inline constexpr double kDefaultWitnessTolerance = 1e-9;

inline EntanglementWitness probe_entanglement_witness(const JointProbeWave &wave,
                                                      double tolerance = kDefaultWitnessTolerance) {
    if (wave.dims() != 2) {
        throw ValidationError("the probe entanglement witness needs exactly two probes");
    }
    const BranchState s = from_probe_wave(wave);
    EntanglementWitness w;
    w.schmidt_coefficients = schmidt_coefficients(s, {wave.probes[0]});
    w.schmidt_rank = schmidt_rank(s, {wave.probes[0]}, tolerance);
    w.entangled = w.schmidt_rank >= 2;
    return w;
}

inline EntanglementWitness probe_entanglement_witness(const ScenarioResult &result,
                                                      const OutcomeSelector &sel,
                                                      double tolerance = kDefaultWitnessTolerance) {
    if (result.config.variant != Variant::ewfs) {
        throw ValidationError("the probe entanglement witness needs the two-lab scenario");
    }
    return probe_entanglement_witness(conditional_probe(result, sel), tolerance);
}

struct Statement {
    bool holds{false};
    std::optional<double> probability;
    std::vector<std::string> evidence;
    std::string probe_annotation;
};

struct ContradictionReport {
    Mode mode{Mode::unitary};
    std::array<ProbeTarget, 2> probe_targets{};
    /// Keys "i" .. "v".
    std::map<std::string, Statement> statements;
    /// "inconsistent set" or "consistent".
    std::string verdict;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Friend outcomes (lab 1, lab 2) of a branch, read from the pointers.
inline std::pair<std::string, std::string> friend_labels(const BranchState &s, const Branch &b) {
    std::pair<std::string, std::string> out;
    if (s.find_finite("pointer1")) {
        out.first = s.label_of(b, "pointer1");
    }
    if (s.find_finite("pointer2")) {
        out.second = s.label_of(b, "pointer2");
    }
    return out;
}

inline std::string friends_text(const std::pair<std::string, std::string> &f) {
    return "F1=" + f.first + ", F2=" + f.second;
}

/// Probe shift signature of each friend-outcome pair, in weak-value form.
using Signatures = std::vector<std::pair<std::pair<std::string, std::string>, std::vector<cplx>>>;

inline Signatures signatures(const BranchState &leading) {
    Signatures sig;
    for (const auto &b : leading.branches()) {
        sig.push_back({friend_labels(leading, b), b.shifts});
    }
    return sig;
}

/// `fixed` = (lab index, label) restricts matches to that friend outcome.
using FixedLabel = std::optional<std::pair<int, std::string>>;

inline std::vector<std::pair<std::string, std::string>> match_signature(const Signatures &sig,
                                                                        const std::vector<cplx> &shifts,
                                                                        double gamma,
                                                                        const FixedLabel &fixed = std::nullopt) {
    const double tol = 1e-9 * std::max(gamma, 1e-12);
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &[f, s] : sig) {
        bool same = true;
        for (std::size_t j = 0; j < s.size(); ++j) {
            same = same && std::abs(s[j] - shifts[j]) <= tol;
        }
        if (fixed) {
            same = same && (fixed->first == 1 ? f.first : f.second) == fixed->second;
        }
        if (same && std::find(out.begin(), out.end(), f) == out.end()) {
            out.push_back(f);
        }
    }
    return out;
}

inline std::string annotate_terms(const Signatures &sig, const std::vector<ProbeTerm> &terms, double gamma,
                                  const std::vector<FixedLabel> &fixed = {}) {
    if (gamma == 0.0) {
        return "probes uncoupled (gamma = 0): no information";
    }
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto m = match_signature(sig, terms[i].centers, gamma, i < fixed.size() ? fixed[i] : std::nullopt);
        if (m.size() == 1) {
            parts.push_back(friends_text(m.front()));
        } else if (m.empty()) {
            parts.push_back("unmatched shift");
        } else {
            parts.push_back("ambiguous shift");
        }
    }
    if (parts.size() == 1) {
        return parts.front();
    }
    std::string s = "superposition - no specific outcome indicated:";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        s += (i ? " + (" : " (") + parts[i] + ")";
    }
    return s;
}

/// Survivors of a leading-order projection, grouped by the remaining friend
/// label on `pointer`.
struct Survivors {
    std::vector<std::string> friend_labels;
    std::vector<ProbeTerm> terms;
    std::vector<FixedLabel> fixed;
    std::vector<std::string> evidence;
};

inline Survivors leading_survivors(const BranchState &leading, const SparseKet &ket, int lab) {
    const std::string pointer = "pointer" + std::to_string(lab);
    const BranchState projected = contract(leading, ket);
    const Truncation t = truncate_order(projected, 0);
    Survivors out;
    for (const auto &b : t.state.branches()) {
        const auto &label = t.state.label_of(b, pointer);
        if (std::find(out.friend_labels.begin(), out.friend_labels.end(), label) == out.friend_labels.end()) {
            out.friend_labels.push_back(label);
        }
        out.terms.push_back(ProbeTerm{b.amplitude, b.shifts});
        out.fixed.emplace_back(std::pair<int, std::string>{lab, label});
        std::ostringstream os;
        os.precision(6);
        os << pointer << "=" << label << " amplitude " << b.amplitude.real();
        if (b.amplitude.imag() != 0.0) {
            os << (b.amplitude.imag() > 0 ? "+" : "") << b.amplitude.imag() << "i";
        }
        out.evidence.push_back(os.str());
    }
    for (const auto &d : t.ledger) {
        out.evidence.push_back("dropped " + std::to_string(d.terms.size()) + " term(s): " + d.reason);
    }
    return out;
}

} // namespace detail

/// Evaluates statements (i)-(v) for a two-lab configuration.
inline ContradictionReport contradiction_report(const ScenarioConfig &cfg) {
    if (cfg.variant != Variant::ewfs) {
        throw ValidationError("contradiction_report requires the EWFS variant");
    }
    ContradictionReport rep;
    rep.mode = cfg.mode;
    rep.probe_targets = {cfg.probes[0].target, cfg.probes[1].target};

    ScenarioConfig ucfg = cfg;
    ucfg.mode = Mode::unitary;
    const Evolution uev = evolve(ucfg);
    const FriendBranch &u = uev.branches.front();

    // (i) F2=up => F1=+ never: leading-order amplitude of (F1=+, F2=up) is zero.
    {
        Statement st;
        const BranchState rec = leading_order_form(u.records).state;
        double lead = 0.0;
        for (const auto &b : rec.branches()) {
            if (detail::friend_labels(rec, b) == std::pair<std::string, std::string>{"+", "up"}) {
                lead += std::norm(b.amplitude);
            }
        }
        const auto p1 = project(u.records, "pointer1", "+");
        const double exact = p1.zero ? 0.0 : project(p1.state, "pointer2", "up").probability;
        st.holds = lead == 0.0;
        st.probability = exact;
        st.evidence.push_back("P(F1=+, F2=up) = " + detail::num(exact) + " (leading order " + detail::num(lead) + ")");
        st.probe_annotation = "verified by construction of the preparation gate";
        rep.statements["i"] = st;
    }

    const ScenarioResult result = run(cfg);
    double p_up_minus = 0.0;
    for (const auto &row : result.rows) {
        if (row.wigner_outcomes == std::vector<std::string>{"up", "-"}) {
            p_up_minus += row.probability;
        }
    }

    if (cfg.mode == Mode::unitary) {
        const BranchState leading = leading_order_form(u.final_state).state;
        const auto sig = detail::signatures(leading);
        const double g = cfg.gamma;

        const auto ii = detail::leading_survivors(leading, wigner_ket(leading, 2, 1, cfg.env_unitary[1]), 1);
        Statement st2;
        st2.holds = ii.friend_labels.size() == 1;
        st2.evidence = ii.evidence;
        st2.probe_annotation = detail::annotate_terms(sig, ii.terms, g, ii.fixed);
        rep.statements["ii"] = st2;

        const auto iii = detail::leading_survivors(leading, wigner_ket(leading, 1, 0, cfg.env_unitary[0]), 2);
        Statement st3;
        st3.holds = iii.friend_labels.size() == 1;
        st3.evidence = iii.evidence;
        st3.probe_annotation = detail::annotate_terms(sig, iii.terms, g, iii.fixed);
        rep.statements["iii"] = st3;

        Statement st4;
        st4.holds = rep.statements["i"].holds && st2.holds && st3.holds && ii.friend_labels.front() == "+" &&
                    iii.friend_labels.front() == "up";
        st4.evidence.push_back(st4.holds ? "W2=- => F1=+; W1=up => F2=up => F1=-: W1=up, W2=- excluded"
                                         : "premises (i)-(iii) do not all hold");
        if (st4.holds && g > 0.0) {
            st4.probe_annotation = "probes: W2=- => (" + st2.probe_annotation + "); W1=up => (" +
                                   st3.probe_annotation + ")";
        }
        rep.statements["iv"] = st4;

        Statement st5;
        st5.probability = p_up_minus;
        st5.holds = p_up_minus > 0.0;
        st5.evidence.push_back("P(W1=up, W2=-) = " + detail::num(p_up_minus));
        const BranchState vwave = contract(leading, wigner_product_ket(leading, {0, 1}, cfg.env_unitary));
        const Truncation vt = truncate_order(vwave, 0);
        std::vector<ProbeTerm> vterms;
        for (const auto &b : vt.state.branches()) {
            vterms.push_back(ProbeTerm{b.amplitude, b.shifts});
        }
        st5.probe_annotation = detail::annotate_terms(sig, vterms, g);
        rep.statements["v"] = st5;

        rep.verdict = st4.holds && st5.holds ? "inconsistent set" : "consistent";
        return rep;
    }

    // Collapse mode: leading-order friend/Wigner correlations from the
    // uncoupled run; probabilities are only added.
    ScenarioConfig zero = cfg;
    zero.gamma = 0.0;
    const ScenarioResult r0 = run(zero);
    auto friends_given = [&](std::size_t w_index, const std::string &w_label, std::size_t f_index) {
        std::map<std::string, double> p;
        for (const auto &row : r0.rows) {
            if (row.wigner_outcomes[w_index] == w_label && row.probability > 0.0) {
                p[(*row.friend_outcomes)[f_index]] += row.probability;
            }
        }
        return p;
    };
    auto as_statement = [&](const std::map<std::string, double> &p, const std::string &who) {
        Statement st;
        st.holds = p.size() == 1;
        for (const auto &[label, prob] : p) {
            st.evidence.push_back(who + "=" + label + " with joint probability " + detail::num(prob));
        }
        st.probe_annotation = "each probe is a single shifted packet matching the announced outcome";
        return st;
    };
    rep.statements["ii"] = as_statement(friends_given(1, "-", 0), "F1");
    rep.statements["iii"] = as_statement(friends_given(0, "up", 1), "F2");
    Statement st4;
    st4.holds = rep.statements["i"].holds && rep.statements["ii"].holds && rep.statements["iii"].holds;
    st4.evidence.push_back(st4.holds ? "premises hold" : "premises (ii)/(iii) fail under collapse");
    rep.statements["iv"] = st4;
    Statement st5;
    st5.probability = p_up_minus;
    st5.holds = p_up_minus > 0.0;
    st5.evidence.push_back("P(W1=up, W2=-) = " + detail::num(p_up_minus));
    st5.probe_annotation = "probes read the friends' definite outcomes";
    rep.statements["v"] = st5;
    rep.verdict = st4.holds && st5.holds ? "inconsistent set" : "consistent";
    return rep;
}

} // namespace wfprobe

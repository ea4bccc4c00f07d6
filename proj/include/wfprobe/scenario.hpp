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
 * Builders and executors for the single-lab (WFS) and two-lab (EWFS) Wigner's
 * friend protocols, in "collapse" and fully "unitary" modes, with weak probes
 * attached to a lab's spin, pointer or environment.
 *
 * Register layout per lab i:
 *   spin<i>     spin stored in the friend's measurement basis
 *               (lab 1: {+, -}; lab 2: {down, up})
 *   pointer<i>  {ready, o1, o2}, o1/o2 the friend's outcomes
 *   env<i>      {ready, o1, o2}
 *   W<i>        probe of the external agent W<i>
 *
 * All user-facing 2x2 matrices use the (down, up) ordering of the z basis,
 * with |+-> = (|down> +- |up>)/sqrt(2) and sigma_z |down> = -|down>.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wfprobe/state.hpp"
#include "wfprobe/types.hpp"
#include "wfprobe/weak.hpp"

namespace wfprobe {

enum class Variant { wfs, ewfs };
enum class Mode { unitary, collapse };
enum class ProbeTarget { none, spin, pointer, environment };
enum class FriendBasis { x, z };
enum class WignerBasis { updown, plusminus };

inline std::string to_string(Variant v) { return v == Variant::wfs ? "WFS" : "EWFS"; }
inline std::string to_string(Mode m) { return m == Mode::unitary ? "unitary" : "collapse"; }
inline std::string to_string(ProbeTarget t) {
    switch (t) {
    case ProbeTarget::spin: return "spin";
    case ProbeTarget::pointer: return "pointer";
    case ProbeTarget::environment: return "environment";
    case ProbeTarget::none: break;
    }
    return "none";
}

namespace spin_basis {

inline double inv_sqrt2() { return 1.0 / std::sqrt(2.0); }

/// Columns |+>, |-> in (down, up) coordinates.
inline Matrix x_in_z() {
    Matrix h(2, 2);
    h << inv_sqrt2(), inv_sqrt2(), inv_sqrt2(), -inv_sqrt2();
    return h;
}

inline Vector ket(double down, double up) {
    Vector v(2);
    v << down, up;
    return v;
}
inline Vector down() { return ket(1.0, 0.0); }
inline Vector up() { return ket(0.0, 1.0); }
inline Vector plus() { return ket(inv_sqrt2(), inv_sqrt2()); }
inline Vector minus() { return ket(inv_sqrt2(), -inv_sqrt2()); }

/// Initial lab-1 spin (|+> + sqrt(2)|->)/sqrt(3), in (down, up) coordinates.
inline Vector initial_spin1() {
    return plus() / std::sqrt(3.0) + std::sqrt(2.0) / std::sqrt(3.0) * minus();
}

} // namespace spin_basis

/// Named 2x2 observables in (down, up) ordering.
inline Matrix preset_matrix(const std::string &name) {
    using namespace spin_basis;
    Matrix m(2, 2);
    if (name == "pi_plus") {
        return plus() * plus().adjoint();
    }
    if (name == "pi_minus") {
        return minus() * minus().adjoint();
    }
    if (name == "pi_up") {
        return up() * up().adjoint();
    }
    if (name == "pi_down") {
        return down() * down().adjoint();
    }
    if (name == "sigma_x") {
        m << 0.0, 1.0, 1.0, 0.0;
        return m;
    }
    if (name == "sigma_z") {
        m << -1.0, 0.0, 0.0, 1.0;
        return m;
    }
    if (name == "identity") {
        return Matrix::Identity(2, 2);
    }
    throw ValidationError("unknown observable preset '" + name + "'");
}

inline const std::vector<std::string> &preset_names() {
    static const std::vector<std::string> names{"pi_plus", "pi_minus", "pi_up",   "pi_down",
                                                "sigma_x", "sigma_z",  "identity"};
    return names;
}

/// Either a preset name or an explicit matrix (2x2 in (down, up) ordering,
/// or 3x3 over a pointer/environment register's labels).
struct ObservableSpec {
    std::string preset{"identity"};
    std::optional<Matrix> matrix;

    [[nodiscard]] Matrix resolved() const { return matrix ? *matrix : preset_matrix(preset); }
};

struct LabProbe {
    ProbeTarget target{ProbeTarget::none};
    ObservableSpec observable;
};

struct ScenarioConfig {
    Variant variant{Variant::wfs};
    Mode mode{Mode::unitary};
    std::array<LabProbe, 2> probes{};
    double gamma{1e-2};
    double sigma{1.0};
    /// Optional 3x3 unitary on env<i>, applied between friend and Wigner events.
    std::array<std::optional<Matrix>, 2> env_unitary{};
    bool environment_registers{true};
    std::uint64_t seed{0};

    [[nodiscard]] std::size_t lab_count() const { return variant == Variant::wfs ? 1 : 2; }
};

struct LabLayout {
    int lab{1};
    std::string spin;
    std::string pointer;
    std::string env;
    std::string probe;
    FriendBasis friend_basis{FriendBasis::x};
    WignerBasis wigner_basis{WignerBasis::updown};
    /// Friend outcome labels, in register order.
    std::array<std::string, 2> outcomes;
    /// Wigner outcome labels, in report order.
    std::array<std::string, 2> wigner_outcomes;
};

inline LabLayout lab_layout(int lab) {
    const auto n = std::to_string(lab);
    if (lab == 1) {
        return LabLayout{1, "spin1", "pointer1", "env1", "W1", FriendBasis::x, WignerBasis::updown,
                         {"+", "-"}, {"up", "down"}};
    }
    if (lab == 2) {
        return LabLayout{2, "spin2", "pointer2", "env2", "W2", FriendBasis::z, WignerBasis::plusminus,
                         {"down", "up"}, {"+", "-"}};
    }
    throw ValidationError("lab index must be 1 or 2, got " + n);
}

/// Basis change from (down, up) coordinates to the lab's spin register basis.
inline Matrix z_to_register(const LabLayout &lab) {
    return lab.friend_basis == FriendBasis::x ? spin_basis::x_in_z() : Matrix::Identity(2, 2);
}

inline void validate(const ScenarioConfig &cfg) {
    if (cfg.gamma < 0.0 || !std::isfinite(cfg.gamma)) {
        throw ValidationError("gamma must be >= 0");
    }
    if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) {
        throw ValidationError("sigma must be > 0");
    }
    for (std::size_t i = 0; i < 2; ++i) {
        const auto &p = cfg.probes[i];
        if (i >= cfg.lab_count() && p.target != ProbeTarget::none) {
            throw ValidationError("WFS has no lab 2; probe for lab 2 must be 'none'");
        }
        if (p.target == ProbeTarget::environment && !cfg.environment_registers) {
            throw ValidationError("probe target 'environment' requires environment registers");
        }
        if (p.target == ProbeTarget::none) {
            continue;
        }
        const Matrix m = p.observable.resolved();
        const bool spin = p.target == ProbeTarget::spin;
        if (m.rows() != m.cols() || (m.rows() != 2 && (spin || m.rows() != 3))) {
            throw ValidationError("observable for lab " + std::to_string(i + 1) + " target " +
                                  to_string(p.target) + " must be " + (spin ? "2x2" : "2x2 or 3x3"));
        }
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermiticityTolerance) {
            throw ValidationError("observable for lab " + std::to_string(i + 1) + " is not Hermitian");
        }
    }
    for (std::size_t i = 0; i < 2; ++i) {
        if (const auto &u = cfg.env_unitary[i]) {
            if (i >= cfg.lab_count() || !cfg.environment_registers) {
                throw ValidationError("env_unitary given for a missing environment register");
            }
            if (u->rows() != 3 || u->cols() != 3 || unitarity_defect(*u) > kUnitarityTolerance) {
                throw ValidationError("env_unitary for lab " + std::to_string(i + 1) +
                                      " must be a 3x3 unitary");
            }
        }
    }
}

/// Observable acting on the register the probe is attached to.
inline Observable resolve_observable(const ObservableSpec &spec, const LabLayout &lab, ProbeTarget target) {
    const Matrix m = spec.resolved();
    const Matrix h = z_to_register(lab);
    if (target == ProbeTarget::spin) {
        return Observable(lab.spin, h.adjoint() * m * h);
    }
    const std::string &reg = target == ProbeTarget::pointer ? lab.pointer : lab.env;
    if (m.rows() == 3) {
        return Observable(reg, m);
    }
    // 2x2 acts on the outcome block {o1, o2}, identified with the friend's
    // measurement basis; the ready label is untouched.
    Matrix full = Matrix::Zero(3, 3);
    full.block(1, 1, 2, 2) = h.adjoint() * m * h;
    return Observable(reg, full);
}

inline BranchState build_initial(Variant variant, double gamma = 0.0, double sigma = 1.0,
                                 bool environment_registers = true) {
    std::vector<RegisterSpec> regs;
    const int labs = variant == Variant::wfs ? 1 : 2;
    for (int i = 1; i <= labs; ++i) {
        const auto lab = lab_layout(i);
        regs.push_back(RegisterSpec::spin(lab.spin, {lab.outcomes[0], lab.outcomes[1]}));
        regs.push_back(RegisterSpec::label(lab.pointer, {"ready", lab.outcomes[0], lab.outcomes[1]}));
        if (environment_registers) {
            regs.push_back(RegisterSpec::label(lab.env, {"ready", lab.outcomes[0], lab.outcomes[1]}));
        }
    }
    for (int i = 1; i <= labs; ++i) {
        regs.push_back(RegisterSpec::probe(lab_layout(i).probe));
    }
    const std::size_t finite = regs.size() - static_cast<std::size_t>(labs);
    std::vector<Branch> branches;
    // spin1 is stored in the x basis: amplitudes 1/sqrt3 on +, sqrt(2/3) on -.
    for (std::size_t k = 0; k < 2; ++k) {
        Branch b;
        b.amplitude = k == 0 ? 1.0 / std::sqrt(3.0) : std::sqrt(2.0) / std::sqrt(3.0);
        b.labels.assign(finite, 0);
        b.labels[0] = k;
        branches.push_back(std::move(b));
    }
    return BranchState(std::move(regs), std::move(branches), gamma, sigma);
}

namespace detail {

inline bool pointer_ready_everywhere(const BranchState &state, const LabLayout &lab) {
    const auto p = state.finite_index(lab.pointer);
    return std::all_of(state.branches().begin(), state.branches().end(),
                       [&](const Branch &b) { return b.labels[p] == 0; });
}

inline bool pointer_ready_nowhere(const BranchState &state, const LabLayout &lab) {
    const auto p = state.finite_index(lab.pointer);
    return std::none_of(state.branches().begin(), state.branches().end(),
                        [&](const Branch &b) { return b.labels[p] == 0; });
}

} // namespace detail

/// Von Neumann premeasurement: copies the spin's component in `basis` into
/// the pointer (and environment) of the lab.
inline BranchState friend_premeasure(const BranchState &state, int lab_index, FriendBasis basis) {
    const auto lab = lab_layout(lab_index);
    if (!detail::pointer_ready_everywhere(state, lab)) {
        throw ProtocolError("friend_premeasure: pointer of lab " + std::to_string(lab_index) +
                            " is not in the ready state");
    }
    const auto s = state.finite_index(lab.spin);
    const auto p = state.finite_index(lab.pointer);
    const auto e = state.find_finite(lab.env);
    // Columns: measurement-basis vectors in register coordinates.
    const Matrix meas = z_to_register(lab).adjoint() *
                        (basis == FriendBasis::x ? spin_basis::x_in_z() : Matrix::Identity(2, 2));
    std::vector<Branch> out;
    for (const auto &b : state.branches()) {
        const auto j = static_cast<Eigen::Index>(b.labels[s]);
        for (Eigen::Index k = 0; k < 2; ++k) {
            const cplx c = std::conj(meas(j, k));
            if (c == cplx{0.0, 0.0}) {
                continue;
            }
            for (Eigen::Index i = 0; i < 2; ++i) {
                if (meas(i, k) == cplx{0.0, 0.0}) {
                    continue;
                }
                Branch nb = b;
                nb.amplitude *= c * meas(i, k);
                nb.labels[s] = static_cast<std::size_t>(i);
                nb.labels[p] = static_cast<std::size_t>(k) + 1;
                if (e) {
                    nb.labels[*e] = static_cast<std::size_t>(k) + 1;
                }
                out.push_back(std::move(nb));
            }
        }
    }
    return state.with_branches(std::move(out));
}

struct Outcome {
    std::string label;
    BranchState state;
    double probability{0.0};
};

/// Projective readout of the lab's pointer; one entry per outcome with
/// nonzero probability, states renormalized, probes carried along.
inline std::vector<Outcome> friend_collapse(const BranchState &state, int lab_index) {
    const auto lab = lab_layout(lab_index);
    const auto p = state.finite_index(lab.pointer);
    const auto &reg = state.finite_registers()[p];
    const double total = norm_sq(state);
    std::vector<Outcome> out;
    for (const auto &label : reg.labels) {
        const auto proj = project(state, lab.pointer, label);
        if (proj.zero) {
            continue;
        }
        out.push_back(Outcome{label, proj.normalized(), proj.probability / total});
    }
    return out;
}

/// Weakly couples the lab's probe to its spin (before the friend's
/// premeasurement) or to its pointer/environment (after it).
inline BranchState attach_probe(const BranchState &state, int lab_index, ProbeTarget target,
                                const Observable &obs, double gamma) {
    const auto lab = lab_layout(lab_index);
    if (target == ProbeTarget::none) {
        return state;
    }
    if (target == ProbeTarget::spin && !detail::pointer_ready_everywhere(state, lab)) {
        throw ProtocolError("spin probe of lab " + std::to_string(lab_index) +
                            " must couple before the friend's premeasurement");
    }
    if (target != ProbeTarget::spin && !detail::pointer_ready_nowhere(state, lab)) {
        throw ProtocolError(to_string(target) + " probe of lab " + std::to_string(lab_index) +
                            " must couple after the friend's premeasurement");
    }
    const std::string &expected = target == ProbeTarget::spin      ? lab.spin
                                  : target == ProbeTarget::pointer ? lab.pointer
                                                                   : lab.env;
    if (obs.register_id() != expected) {
        throw ValidationError("observable acts on '" + obs.register_id() + "' but the probe targets '" +
                              expected + "'");
    }
    return couple_exact(state, obs, lab.probe, gamma);
}

/// |L o> = |o>_spin |o>_pointer U_env|o>_env for friend outcome index k.
inline SparseKet lab_outcome_ket(const BranchState &state, const LabLayout &lab, std::size_t k,
                                 const std::optional<Matrix> &env_unitary = std::nullopt) {
    const bool has_env = state.find_finite(lab.env).has_value();
    SparseKet ket;
    ket.registers = {lab.spin, lab.pointer};
    if (!has_env) {
        ket.components.push_back({{k, k + 1}, cplx{1.0, 0.0}});
        return ket;
    }
    ket.registers.push_back(lab.env);
    for (std::size_t i = 0; i < 3; ++i) {
        const cplx a = env_unitary ? (*env_unitary)(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(k + 1))
                                   : cplx(i == k + 1 ? 1.0 : 0.0);
        if (a != cplx{0.0, 0.0}) {
            ket.components.push_back({{k, k + 1, i}, a});
        }
    }
    return ket;
}

namespace detail {

inline SparseKet combine(const SparseKet &a, cplx ca, const SparseKet &b, cplx cb) {
    SparseKet out{a.registers, {}};
    for (const auto &[l, v] : a.components) {
        out.components.push_back({l, ca * v});
    }
    for (const auto &[l, v] : b.components) {
        out.components.push_back({l, cb * v});
    }
    return out;
}

inline SparseKet tensor(const SparseKet &a, const SparseKet &b) {
    SparseKet out;
    out.registers = a.registers;
    out.registers.insert(out.registers.end(), b.registers.begin(), b.registers.end());
    for (const auto &[la, va] : a.components) {
        for (const auto &[lb, vb] : b.components) {
            auto l = la;
            l.insert(l.end(), lb.begin(), lb.end());
            out.components.push_back({l, va * vb});
        }
    }
    return out;
}

} // namespace detail

/// Wigner's entangled-lab basis vector for outcome index w (0 or 1):
///   lab 1: |L up/down> = (|L+> -/+ |L->)/sqrt2
///   lab 2: |L +/->     = (|L down> +/- |L up>)/sqrt2
inline SparseKet wigner_ket(const BranchState &state, int lab_index, std::size_t w,
                            const std::optional<Matrix> &env_unitary = std::nullopt) {
    const auto lab = lab_layout(lab_index);
    const auto k0 = lab_outcome_ket(state, lab, 0, env_unitary);
    const auto k1 = lab_outcome_ket(state, lab, 1, env_unitary);
    const double r = spin_basis::inv_sqrt2();
    if (lab.wigner_basis == WignerBasis::updown) {
        return detail::combine(k0, r, k1, w == 0 ? -r : r);
    }
    return detail::combine(k0, r, k1, w == 0 ? r : -r);
}

inline SparseKet wigner_product_ket(const BranchState &state, const std::vector<std::size_t> &w,
                                    const std::array<std::optional<Matrix>, 2> &env_unitary = {}) {
    SparseKet ket = wigner_ket(state, 1, w.at(0), env_unitary[0]);
    for (std::size_t i = 1; i < w.size(); ++i) {
        ket = detail::tensor(ket, wigner_ket(state, static_cast<int>(i + 1), w[i], env_unitary[i]));
    }
    return ket;
}

/// Label used for the complement of Wigner's two-dimensional lab subspace.
inline const std::string kOutOfSpan = "other";

/// Wigner's projective measurement of a whole lab. Outcomes outside the span
/// of {|L o1>, |L o2>} are reported as kOutOfSpan.
inline std::vector<Outcome> wigner_measure(const BranchState &state, int lab_index, WignerBasis basis,
                                           const std::optional<Matrix> &env_unitary = std::nullopt) {
    const auto lab = lab_layout(lab_index);
    if (basis != lab.wigner_basis) {
        throw ValidationError("lab " + std::to_string(lab_index) + " is measured by Wigner in the " +
                              (lab.wigner_basis == WignerBasis::updown ? "up/down" : "+/-") + " basis");
    }
    // A pointer probe may rotate a little weight back into "ready"; that part
    // lands in the out-of-span channel. Only an unmeasured lab is an error.
    if (detail::pointer_ready_everywhere(state, lab)) {
        throw ProtocolError("wigner_measure: lab " + std::to_string(lab_index) +
                            " has not been measured by its friend");
    }
    const double total = norm_sq(state);
    std::vector<Outcome> out;
    std::vector<Branch> remainder = state.branches();
    for (std::size_t w = 0; w < 2; ++w) {
        const auto proj = project(state, wigner_ket(state, lab_index, w, env_unitary));
        if (proj.zero) {
            continue;
        }
        for (auto b : proj.state.branches()) {
            b.amplitude = -b.amplitude;
            remainder.push_back(std::move(b));
        }
        out.push_back(Outcome{lab.wigner_outcomes[w], proj.normalized(), proj.probability / total});
    }
    const BranchState rest = state.with_branches(std::move(remainder));
    const double p_rest = norm_sq(rest) / total;
    if (!rest.branches().empty() && p_rest > 1e-15) {
        out.push_back(Outcome{kOutOfSpan, renormalized(rest), p_rest});
    }
    return out;
}

/// One member of the ensemble produced by the friends' measurements (a
/// single member with no friend outcomes in unitary mode).
struct FriendBranch {
    std::vector<std::string> friend_outcomes;
    double probability{1.0};
    /// State right after the last friend premeasurement (before pointer or
    /// environment probes); friend records are read from here.
    BranchState records;
    /// State right before the Wigner measurements.
    BranchState final_state;
};

struct Evolution {
    ScenarioConfig config;
    std::vector<FriendBranch> branches;
};

/// Executes every event up to (not including) the Wigner measurements.
inline Evolution evolve(const ScenarioConfig &cfg) {
    validate(cfg);
    const int labs = static_cast<int>(cfg.lab_count());
    struct Partial {
        std::vector<std::string> friends;
        double probability;
        BranchState state;
    };
    auto observable = [&](int i) {
        const auto &p = cfg.probes[static_cast<std::size_t>(i - 1)];
        return resolve_observable(p.observable, lab_layout(i), p.target);
    };
    auto spin_probe = [&](BranchState s, int i) {
        const auto &p = cfg.probes[static_cast<std::size_t>(i - 1)];
        if (p.target == ProbeTarget::spin) {
            s = attach_probe(s, i, ProbeTarget::spin, observable(i), cfg.gamma);
        }
        return s;
    };
    auto friend_step = [&](std::vector<Partial> in, int i) {
        const auto lab = lab_layout(i);
        std::vector<Partial> out;
        for (auto &part : in) {
            BranchState s = friend_premeasure(part.state, i, lab.friend_basis);
            if (cfg.mode == Mode::unitary) {
                out.push_back(Partial{part.friends, part.probability, std::move(s)});
                continue;
            }
            for (auto &o : friend_collapse(s, i)) {
                auto f = part.friends;
                f.push_back(o.label);
                out.push_back(Partial{std::move(f), part.probability * o.probability, std::move(o.state)});
            }
        }
        return out;
    };

    BranchState s0 = build_initial(cfg.variant, cfg.gamma, cfg.sigma, cfg.environment_registers);
    s0 = spin_probe(std::move(s0), 1);
    std::vector<Partial> parts = friend_step({Partial{{}, 1.0, std::move(s0)}}, 1);

    if (labs == 2) {
        const std::map<std::string, ControlledAction> gate{
            {"+", ControlledPreparation{spin_basis::down()}},
            {"-", ControlledPreparation{spin_basis::plus()}}};
        for (auto &part : parts) {
            part.state = controlled_map(part.state, "spin1", "spin2", gate);
            part.state = spin_probe(std::move(part.state), 2);
        }
        parts = friend_step(std::move(parts), 2);
    }

    Evolution ev{cfg, {}};
    for (auto &part : parts) {
        BranchState records = part.state;
        BranchState s = std::move(part.state);
        for (int i = 1; i <= labs; ++i) {
            const auto &p = cfg.probes[static_cast<std::size_t>(i - 1)];
            if (p.target == ProbeTarget::pointer || p.target == ProbeTarget::environment) {
                s = attach_probe(s, i, p.target, observable(i), cfg.gamma);
            }
        }
        for (int i = 1; i <= labs; ++i) {
            if (const auto &u = cfg.env_unitary[static_cast<std::size_t>(i - 1)]) {
                s = apply_unitary(s, lab_layout(i).env, *u);
            }
        }
        ev.branches.push_back(FriendBranch{std::move(part.friends), part.probability, std::move(records),
                                           std::move(s)});
    }
    return ev;
}

struct ResultRow {
    std::vector<std::string> wigner_outcomes;
    /// Present only in collapse mode.
    std::optional<std::vector<std::string>> friend_outcomes;
    /// Zeroth-order amplitude of the row (sum of its probe-term amplitudes).
    cplx amplitude{0.0, 0.0};
    double probability{0.0};
    /// Normalized joint probe wave conditioned on the row; absent for rows
    /// outside Wigner's lab subspace.
    std::optional<JointProbeWave> conditional_probes;
    /// Same conditioning applied to the weak-value form of the state (each
    /// friend-outcome group reduced to one packet at its weak-value shift).
    /// Absent when the row vanishes at zeroth order in gamma.
    std::optional<JointProbeWave> leading_probes;
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<ResultRow> rows;

    [[nodiscard]] double total_probability() const {
        double s = 0.0;
        for (const auto &r : rows) {
            s += r.probability;
        }
        return s;
    }
};

inline ScenarioResult run(const ScenarioConfig &cfg) {
    const Evolution ev = evolve(cfg);
    ScenarioResult result{cfg, {}};
    const std::size_t labs = cfg.lab_count();
    for (const auto &fb : ev.branches) {
        const BranchState &s = fb.final_state;
        const BranchState leading = leading_order_form(s).state;
        // Enumerate Wigner outcomes lab by lab, keeping an out-of-span channel.
        std::vector<std::pair<std::vector<std::size_t>, std::vector<Outcome>>> leaves;
        std::vector<std::pair<std::vector<std::size_t>, Outcome>> frontier{
            {{}, Outcome{"", s, 1.0}}};
        for (std::size_t i = 0; i < labs; ++i) {
            const auto lab = lab_layout(static_cast<int>(i + 1));
            decltype(frontier) next;
            for (const auto &[idx, o] : frontier) {
                for (auto &w : wigner_measure(o.state, static_cast<int>(i + 1), lab.wigner_basis,
                                              cfg.env_unitary[i])) {
                    auto nidx = idx;
                    nidx.push_back(w.label == lab.wigner_outcomes[0]   ? 0
                                   : w.label == lab.wigner_outcomes[1] ? 1
                                                                       : 2);
                    next.push_back({std::move(nidx), Outcome{w.label, std::move(w.state),
                                                             o.probability * w.probability}});
                }
            }
            frontier = std::move(next);
        }
        for (const auto &[idx, o] : frontier) {
            ResultRow row;
            for (std::size_t i = 0; i < labs; ++i) {
                const auto lab = lab_layout(static_cast<int>(i + 1));
                row.wigner_outcomes.push_back(idx[i] < 2 ? lab.wigner_outcomes[idx[i]] : kOutOfSpan);
            }
            if (cfg.mode == Mode::collapse) {
                row.friend_outcomes = fb.friend_outcomes;
            }
            row.probability = fb.probability * o.probability;
            const bool in_span = std::all_of(idx.begin(), idx.end(), [](auto k) { return k < 2; });
            if (in_span) {
                const SparseKet ket = wigner_product_ket(s, idx, cfg.env_unitary);
                const BranchState amp_state = contract(s, ket);
                for (const auto &b : amp_state.branches()) {
                    row.amplitude += b.amplitude * std::sqrt(fb.probability);
                }
                row.conditional_probes = to_probe_wave(amp_state).normalized();
                const JointProbeWave lw = to_probe_wave(contract(leading, ket));
                if (!lw.terms.empty() && lw.norm_sq() > 0.0) {
                    row.leading_probes = lw.normalized();
                }
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

} // namespace wfprobe

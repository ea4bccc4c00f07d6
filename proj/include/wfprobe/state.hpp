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
 * Exact composite states as explicit branch decompositions over labeled
 * registers.
 *
 * A BranchState is a finite sum
 *
 *     sum_b  amp_b |labels_b> (x) prod_probes phi0(x_probe - shift_b[probe])
 *
 * where each finite register carries an orthonormal label basis and each probe
 * register is a Gaussian of common width displaced by a complex shift.
 * Operations are pure functions returning new states in canonical form:
 * branches with identical labels and shifts merged, near-zero amplitudes
 * dropped, lexicographic ordering.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "wfprobe/gaussian.hpp"
#include "wfprobe/types.hpp"

namespace wfprobe {

/// Amplitudes below this after merging are dropped from the canonical form.
inline constexpr double kAmplitudeDropTolerance = 1e-14;
inline constexpr double kUnitarityTolerance = 1e-12;
inline constexpr double kHermiticityTolerance = 1e-12;

enum class RegisterKind { spin2, label, probe };

struct RegisterSpec {
    std::string id;
    RegisterKind kind{RegisterKind::label};
    std::vector<std::string> labels;

    static RegisterSpec spin(std::string id, std::vector<std::string> labels = {"down", "up"}) {
        return RegisterSpec{std::move(id), RegisterKind::spin2, std::move(labels)};
    }
    static RegisterSpec label(std::string id, std::vector<std::string> labels) {
        return RegisterSpec{std::move(id), RegisterKind::label, std::move(labels)};
    }
    static RegisterSpec probe(std::string id) {
        return RegisterSpec{std::move(id), RegisterKind::probe, {}};
    }

    [[nodiscard]] std::size_t dim() const { return labels.size(); }

    [[nodiscard]] std::size_t index_of(const std::string &label) const {
        const auto it = std::find(labels.begin(), labels.end(), label);
        if (it == labels.end()) {
            throw ValidationError("register '" + id + "' has no label '" + label + "'");
        }
        return static_cast<std::size_t>(it - labels.begin());
    }

    void validate() const {
        if (kind == RegisterKind::probe) {
            if (!labels.empty()) {
                throw ValidationError("probe register '" + id + "' cannot carry labels");
            }
            return;
        }
        if (kind == RegisterKind::spin2 && labels.size() != 2) {
            throw ValidationError("spin register '" + id + "' must have exactly 2 labels");
        }
        if (labels.empty()) {
            throw ValidationError("register '" + id + "' has no labels");
        }
        std::set<std::string> seen(labels.begin(), labels.end());
        if (seen.size() != labels.size()) {
            throw ValidationError("register '" + id + "' has duplicate labels");
        }
    }
};

struct Branch {
    cplx amplitude{1.0, 0.0};
    /// One label index per finite register, in register order.
    std::vector<std::size_t> labels;
    /// One complex displacement per probe register, in register order.
    std::vector<cplx> shifts;
};

namespace detail {

inline bool same_shifts(const std::vector<cplx> &a, const std::vector<cplx> &b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > kCenterMergeTolerance) {
            return false;
        }
    }
    return true;
}

inline bool branch_less(const Branch &a, const Branch &b) {
    if (a.labels != b.labels) {
        return a.labels < b.labels;
    }
    for (std::size_t i = 0; i < a.shifts.size(); ++i) {
        if (a.shifts[i].real() != b.shifts[i].real()) {
            return a.shifts[i].real() < b.shifts[i].real();
        }
        if (a.shifts[i].imag() != b.shifts[i].imag()) {
            return a.shifts[i].imag() < b.shifts[i].imag();
        }
    }
    return false;
}

} // namespace detail

class BranchState {
  public:
    BranchState(std::vector<RegisterSpec> registers, std::vector<Branch> branches, double gamma,
                double sigma)
        : gamma_(gamma), sigma_(sigma) {
        if (gamma < 0.0 || !std::isfinite(gamma)) {
            throw ValidationError("gamma must be >= 0");
        }
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw ValidationError("probe width sigma must be > 0");
        }
        std::set<std::string> ids;
        for (auto &r : registers) {
            r.validate();
            if (!ids.insert(r.id).second) {
                throw ValidationError("duplicate register id '" + r.id + "'");
            }
            (r.kind == RegisterKind::probe ? probes_ : finite_).push_back(std::move(r));
        }
        for (const auto &b : branches) {
            if (b.labels.size() != finite_.size() ||
                (b.shifts.size() != probes_.size() && !b.shifts.empty())) {
                throw ValidationError("branch arity does not match the register list");
            }
            for (std::size_t i = 0; i < b.labels.size(); ++i) {
                if (b.labels[i] >= finite_[i].dim()) {
                    throw ValidationError("label index out of range on register '" +
                                          finite_[i].id + "'");
                }
            }
        }
        branches_ = canonical(std::move(branches), probes_.size());
    }

    [[nodiscard]] const std::vector<RegisterSpec> &finite_registers() const { return finite_; }
    [[nodiscard]] const std::vector<RegisterSpec> &probe_registers() const { return probes_; }
    [[nodiscard]] const std::vector<Branch> &branches() const { return branches_; }
    [[nodiscard]] double gamma() const { return gamma_; }
    [[nodiscard]] double sigma() const { return sigma_; }

    [[nodiscard]] std::vector<RegisterSpec> registers() const {
        std::vector<RegisterSpec> all = finite_;
        all.insert(all.end(), probes_.begin(), probes_.end());
        return all;
    }

    [[nodiscard]] std::optional<std::size_t> find_finite(const std::string &id) const {
        for (std::size_t i = 0; i < finite_.size(); ++i) {
            if (finite_[i].id == id) {
                return i;
            }
        }
        return std::nullopt;
    }

    [[nodiscard]] std::size_t finite_index(const std::string &id) const {
        if (auto i = find_finite(id)) {
            return *i;
        }
        throw ValidationError("no finite register named '" + id + "'");
    }

    [[nodiscard]] std::size_t probe_index(const std::string &id) const {
        for (std::size_t i = 0; i < probes_.size(); ++i) {
            if (probes_[i].id == id) {
                return i;
            }
        }
        throw ValidationError("no probe register named '" + id + "'");
    }

    [[nodiscard]] bool has_register(const std::string &id) const {
        return find_finite(id).has_value() ||
               std::any_of(probes_.begin(), probes_.end(), [&](const auto &p) { return p.id == id; });
    }

    /// Same registers and parameters, new branch list.
    [[nodiscard]] BranchState with_branches(std::vector<Branch> branches) const {
        return BranchState(registers(), std::move(branches), gamma_, sigma_);
    }

    /// Label string of branch b on finite register `id`.
    [[nodiscard]] const std::string &label_of(const Branch &b, const std::string &id) const {
        const auto i = finite_index(id);
        return finite_[i].labels[b.labels[i]];
    }

  private:
    static std::vector<Branch> canonical(std::vector<Branch> in, std::size_t n_probes) {
        for (auto &b : in) {
            if (b.shifts.empty()) {
                b.shifts.assign(n_probes, cplx{0.0, 0.0});
            }
        }
        std::vector<Branch> out;
        out.reserve(in.size());
        for (auto &b : in) {
            auto it = std::find_if(out.begin(), out.end(), [&](const Branch &o) {
                return o.labels == b.labels && detail::same_shifts(o.shifts, b.shifts);
            });
            if (it == out.end()) {
                out.push_back(std::move(b));
            } else {
                it->amplitude += b.amplitude;
            }
        }
        std::erase_if(out, [](const Branch &b) { return std::abs(b.amplitude) < kAmplitudeDropTolerance; });
        std::sort(out.begin(), out.end(), detail::branch_less);
        return out;
    }

    std::vector<RegisterSpec> finite_;
    std::vector<RegisterSpec> probes_;
    std::vector<Branch> branches_;
    double gamma_{0.0};
    double sigma_{1.0};
};

/// Inner product of the probe factors of two branches (unit-norm shapes).
inline cplx probe_overlap(const Branch &a, const Branch &b, double sigma) {
    cplx o{1.0, 0.0};
    for (std::size_t j = 0; j < a.shifts.size(); ++j) {
        o *= unit_overlap(a.shifts[j], b.shifts[j], sigma);
    }
    return o;
}

inline cplx inner(const BranchState &a, const BranchState &b) {
    cplx s{0.0, 0.0};
    for (const auto &x : a.branches()) {
        for (const auto &y : b.branches()) {
            if (x.labels == y.labels) {
                s += std::conj(x.amplitude) * y.amplitude * probe_overlap(x, y, a.sigma());
            }
        }
    }
    return s;
}

inline double norm_sq(const BranchState &state) { return inner(state, state).real(); }

inline BranchState renormalized(const BranchState &state) {
    const double n = norm_sq(state);
    if (!(n > 0.0)) {
        throw ConditioningError("cannot renormalize a zero-norm state");
    }
    std::vector<Branch> br = state.branches();
    for (auto &b : br) {
        b.amplitude /= std::sqrt(n);
    }
    return state.with_branches(std::move(br));
}

/// Hermitian matrix on one finite register with cached eigensystem.
class Observable {
  public:
    Observable(std::string register_id, Matrix matrix)
        : register_(std::move(register_id)), matrix_(std::move(matrix)) {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
            throw ValidationError("observable on '" + register_ + "' must be a square matrix");
        }
        const double defect = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
        if (defect > kHermiticityTolerance) {
            throw ValidationError("observable on '" + register_ +
                                  "' is not Hermitian (max |A - A^H| = " + std::to_string(defect) + ")");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_);
        values_ = es.eigenvalues();
        vectors_ = es.eigenvectors();
        const Matrix rebuilt = vectors_ * values_.cast<cplx>().asDiagonal() * vectors_.adjoint();
        if ((rebuilt - matrix_).cwiseAbs().maxCoeff() > 1e-10) {
            throw ValidationError("eigensystem of observable on '" + register_ +
                                  "' failed to reconstruct the matrix");
        }
    }

    [[nodiscard]] const std::string &register_id() const { return register_; }
    [[nodiscard]] const Matrix &matrix() const { return matrix_; }
    [[nodiscard]] const Eigen::VectorXd &eigenvalues() const { return values_; }
    [[nodiscard]] const Matrix &eigenvectors() const { return vectors_; }

  private:
    std::string register_;
    Matrix matrix_;
    Eigen::VectorXd values_;
    Matrix vectors_;
};

inline double unitarity_defect(const Matrix &u) {
    if (u.rows() != u.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

inline void require_unitary(const Matrix &u, const RegisterSpec &reg) {
    if (u.rows() != static_cast<Eigen::Index>(reg.dim()) ||
        u.cols() != static_cast<Eigen::Index>(reg.dim())) {
        throw ValidationError("unitary on '" + reg.id + "' has wrong dimension");
    }
    const double defect = unitarity_defect(u);
    if (defect > kUnitarityTolerance) {
        throw ValidationError("matrix on '" + reg.id + "' is not unitary (norm defect " +
                              std::to_string(defect) + ")");
    }
}

/// Expands each branch's label on `register_id` through the columns of U.
inline BranchState apply_unitary(const BranchState &state, const std::string &register_id,
                                 const Matrix &u) {
    const auto r = state.finite_index(register_id);
    require_unitary(u, state.finite_registers()[r]);
    std::vector<Branch> out;
    for (const auto &b : state.branches()) {
        const auto j = static_cast<Eigen::Index>(b.labels[r]);
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            if (u(i, j) == cplx{0.0, 0.0}) {
                continue;
            }
            Branch nb = b;
            nb.amplitude *= u(i, j);
            nb.labels[r] = static_cast<std::size_t>(i);
            out.push_back(std::move(nb));
        }
    }
    return state.with_branches(std::move(out));
}

/// Apply a unitary on the target register.
struct ControlledUnitary {
    Matrix matrix;
};

/// Prepare the target register, which must sit in its fiducial label (index
/// 0), in the given normalized vector.
struct ControlledPreparation {
    Vector vector;
};

using ControlledAction = std::variant<ControlledUnitary, ControlledPreparation>;

inline BranchState controlled_map(const BranchState &state, const std::string &control,
                                  const std::string &target,
                                  const std::map<std::string, ControlledAction> &actions) {
    const auto c = state.finite_index(control);
    const auto t = state.finite_index(target);
    const auto &creg = state.finite_registers()[c];
    const auto &treg = state.finite_registers()[t];
    std::vector<Matrix> per_label(creg.dim());
    for (std::size_t k = 0; k < creg.dim(); ++k) {
        const auto it = actions.find(creg.labels[k]);
        if (it == actions.end()) {
            throw ValidationError("controlled map on '" + control + "' has no entry for label '" +
                                  creg.labels[k] + "'");
        }
        if (const auto *u = std::get_if<ControlledUnitary>(&it->second)) {
            require_unitary(u->matrix, treg);
            per_label[k] = u->matrix;
        } else {
            const auto &v = std::get<ControlledPreparation>(it->second).vector;
            if (v.size() != static_cast<Eigen::Index>(treg.dim()) ||
                std::abs(v.squaredNorm() - 1.0) > kUnitarityTolerance) {
                throw ValidationError("preparation vector for '" + target +
                                      "' must be normalized with matching dimension");
            }
            // Only column 0 (the fiducial label) is ever used.
            Matrix m = Matrix::Zero(v.size(), v.size());
            m.col(0) = v;
            per_label[k] = m;
        }
    }
    std::vector<Branch> out;
    for (const auto &b : state.branches()) {
        const auto ctrl = b.labels[c];
        const auto &m = per_label[ctrl];
        const auto *prep = std::get_if<ControlledPreparation>(&actions.at(creg.labels[ctrl]));
        if (prep != nullptr && b.labels[t] != 0) {
            throw ProtocolError("preparation on '" + target + "' requires its fiducial label '" +
                                treg.labels[0] + "'");
        }
        const auto j = static_cast<Eigen::Index>(b.labels[t]);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m(i, j) == cplx{0.0, 0.0}) {
                continue;
            }
            Branch nb = b;
            nb.amplitude *= m(i, j);
            nb.labels[t] = static_cast<std::size_t>(i);
            out.push_back(std::move(nb));
        }
    }
    return state.with_branches(std::move(out));
}

/// Sparse vector on a product of finite registers.
struct SparseKet {
    std::vector<std::string> registers;
    /// (label index per register, amplitude)
    std::vector<std::pair<std::vector<std::size_t>, cplx>> components;

    static SparseKet basis(const std::string &reg, std::size_t label) {
        return SparseKet{{reg}, {{{label}, cplx{1.0, 0.0}}}};
    }
    static SparseKet from_vector(const std::string &reg, const Vector &v) {
        SparseKet k{{reg}, {}};
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (v(i) != cplx{0.0, 0.0}) {
                k.components.push_back({{static_cast<std::size_t>(i)}, v(i)});
            }
        }
        return k;
    }

    [[nodiscard]] cplx amplitude(const std::vector<std::size_t> &labels) const {
        cplx s{0.0, 0.0};
        for (const auto &[l, a] : components) {
            if (l == labels) {
                s += a;
            }
        }
        return s;
    }

    [[nodiscard]] double norm_sq() const {
        double s = 0.0;
        for (const auto &c : components) {
            s += std::norm(c.second);
        }
        return s;
    }
};

struct Projection {
    /// Unnormalized projected state |v><v|psi>. Empty when probability is 0.
    BranchState state;
    double probability{0.0};
    bool zero{false};

    [[nodiscard]] BranchState normalized() const { return renormalized(state); }
};

namespace detail {

inline std::vector<std::size_t> register_slots(const BranchState &state, const SparseKet &ket) {
    std::vector<std::size_t> slots;
    for (const auto &id : ket.registers) {
        slots.push_back(state.finite_index(id));
    }
    return slots;
}

inline std::vector<std::size_t> key_of(const Branch &b, const std::vector<std::size_t> &slots) {
    std::vector<std::size_t> k;
    k.reserve(slots.size());
    for (auto s : slots) {
        k.push_back(b.labels[s]);
    }
    return k;
}

} // namespace detail

/// Projects onto a (normalized) vector on a product of registers.
inline Projection project(const BranchState &state, const SparseKet &ket) {
    if (std::abs(ket.norm_sq() - 1.0) > 1e-12) {
        throw ValidationError("projection target must be a normalized vector");
    }
    const auto slots = detail::register_slots(state, ket);
    std::vector<Branch> out;
    for (const auto &b : state.branches()) {
        const cplx c = std::conj(ket.amplitude(detail::key_of(b, slots)));
        if (c == cplx{0.0, 0.0}) {
            continue;
        }
        for (const auto &[labels, a] : ket.components) {
            Branch nb = b;
            nb.amplitude *= c * a;
            for (std::size_t i = 0; i < slots.size(); ++i) {
                nb.labels[slots[i]] = labels[i];
            }
            out.push_back(std::move(nb));
        }
    }
    BranchState projected = state.with_branches(std::move(out));
    const double p = norm_sq(projected);
    if (p <= 0.0 || projected.branches().empty()) {
        return Projection{state.with_branches({}), 0.0, true};
    }
    return Projection{std::move(projected), p, false};
}

inline Projection project(const BranchState &state, const std::string &register_id,
                          const std::string &label) {
    const auto r = state.finite_index(register_id);
    return project(state, SparseKet::basis(register_id, state.finite_registers()[r].index_of(label)));
}

inline Projection project(const BranchState &state, const std::string &register_id, const Vector &v) {
    return project(state, SparseKet::from_vector(register_id, v));
}

/// Partial inner product <ket| psi>: removes the ket's registers.
inline BranchState contract(const BranchState &state, const SparseKet &ket) {
    const auto slots = detail::register_slots(state, ket);
    std::vector<RegisterSpec> remaining;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < state.finite_registers().size(); ++i) {
        if (std::find(slots.begin(), slots.end(), i) == slots.end()) {
            remaining.push_back(state.finite_registers()[i]);
            kept.push_back(i);
        }
    }
    for (const auto &p : state.probe_registers()) {
        remaining.push_back(p);
    }
    std::vector<Branch> out;
    for (const auto &b : state.branches()) {
        const cplx c = std::conj(ket.amplitude(detail::key_of(b, slots)));
        if (c == cplx{0.0, 0.0}) {
            continue;
        }
        Branch nb;
        nb.amplitude = b.amplitude * c;
        for (auto k : kept) {
            nb.labels.push_back(b.labels[k]);
        }
        nb.shifts = b.shifts;
        out.push_back(std::move(nb));
    }
    return BranchState(std::move(remaining), std::move(out), state.gamma(), state.sigma());
}

/// Probe-only state as a joint probe wavefunction.
inline JointProbeWave to_probe_wave(const BranchState &state) {
    if (!state.finite_registers().empty()) {
        throw ValidationError("to_probe_wave requires a state with only probe registers");
    }
    JointProbeWave w;
    w.width = state.sigma();
    for (const auto &p : state.probe_registers()) {
        w.probes.push_back(p.id);
    }
    for (const auto &b : state.branches()) {
        w.terms.push_back(ProbeTerm{b.amplitude, b.shifts});
    }
    return w;
}

inline BranchState from_probe_wave(const JointProbeWave &w, double gamma = 0.0) {
    std::vector<RegisterSpec> regs;
    for (const auto &id : w.probes) {
        regs.push_back(RegisterSpec::probe(id));
    }
    std::vector<Branch> br;
    for (const auto &t : w.terms) {
        br.push_back(Branch{t.amplitude, {}, t.centers});
    }
    return BranchState(std::move(regs), std::move(br), gamma, w.width);
}

/// Singular values (descending) of the normalized state across the cut
/// `partition` | rest.
inline Eigen::VectorXd schmidt_coefficients(const BranchState &state,
                                            const std::set<std::string> &partition) {
    for (const auto &id : partition) {
        if (!state.has_register(id)) {
            throw ValidationError("partition names unknown register '" + id + "'");
        }
    }
    struct Key {
        std::vector<std::size_t> labels;
        std::vector<cplx> shifts;
    };
    const auto &fin = state.finite_registers();
    const auto &prb = state.probe_registers();
    auto split = [&](const Branch &b, bool side_a) {
        Key k;
        for (std::size_t i = 0; i < fin.size(); ++i) {
            if (partition.contains(fin[i].id) == side_a) {
                k.labels.push_back(b.labels[i]);
            }
        }
        for (std::size_t i = 0; i < prb.size(); ++i) {
            if (partition.contains(prb[i].id) == side_a) {
                k.shifts.push_back(b.shifts[i]);
            }
        }
        return k;
    };
    auto intern = [](std::vector<Key> &keys, Key k) {
        for (std::size_t i = 0; i < keys.size(); ++i) {
            if (keys[i].labels == k.labels && detail::same_shifts(keys[i].shifts, k.shifts)) {
                return i;
            }
        }
        keys.push_back(std::move(k));
        return keys.size() - 1;
    };
    std::vector<Key> ka;
    std::vector<Key> kb;
    std::vector<std::tuple<std::size_t, std::size_t, cplx>> entries;
    for (const auto &b : state.branches()) {
        const auto ia = intern(ka, split(b, true));
        const auto ib = intern(kb, split(b, false));
        entries.emplace_back(ia, ib, b.amplitude);
    }
    if (entries.empty()) {
        return Eigen::VectorXd();
    }
    auto gram = [&](const std::vector<Key> &keys) {
        const auto n = static_cast<Eigen::Index>(keys.size());
        Matrix g = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto &x = keys[static_cast<std::size_t>(i)];
                const auto &y = keys[static_cast<std::size_t>(j)];
                if (x.labels != y.labels) {
                    continue;
                }
                cplx o{1.0, 0.0};
                for (std::size_t p = 0; p < x.shifts.size(); ++p) {
                    o *= unit_overlap(x.shifts[p], y.shifts[p], state.sigma());
                }
                g(i, j) = o;
            }
        }
        return g;
    };
    Matrix c = Matrix::Zero(static_cast<Eigen::Index>(ka.size()), static_cast<Eigen::Index>(kb.size()));
    for (const auto &[ia, ib, amp] : entries) {
        c(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib)) += amp;
    }
    const auto pa = detail::orthonormal_basis(gram(ka)).second;
    const auto pb = detail::orthonormal_basis(gram(kb)).second;
    const Matrix m = pa * c * pb.transpose();
    const double fro = m.norm();
    if (!(fro > 0.0)) {
        return Eigen::VectorXd();
    }
    Eigen::JacobiSVD<Matrix> svd(m / fro);
    return svd.singularValues();
}

inline std::size_t schmidt_rank(const BranchState &state, const std::set<std::string> &partition,
                                double tolerance) {
    if (!(tolerance > 0.0)) {
        throw ValidationError("schmidt_rank tolerance must be > 0");
    }
    const auto s = schmidt_coefficients(state, partition);
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > tolerance) {
            ++rank;
        }
    }
    return rank;
}

} // namespace wfprobe

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

// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero
// if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "oracles/dense_oracle.hpp"
#include "wfprobe/commands.hpp"

using namespace wfprobe;

namespace {

struct Verdict {
    bool pass{false};
    std::string detail;
};

std::string fmt(const char *spec, double v) { return fmt_double(v, spec); }

ScenarioConfig config(const std::string &name) { return parse_config(WFPROBE_SOURCE_DIR "/configs/" + name); }

ScenarioConfig with_probes(Variant v, Mode m, double gamma, const std::string &o1, const std::string &o2 = "") {
    ScenarioConfig c;
    c.variant = v;
    c.mode = m;
    c.gamma = gamma;
    c.probes[0] = {ProbeTarget::spin, ObservableSpec{o1, std::nullopt}};
    if (!o2.empty()) {
        c.probes[1] = {ProbeTarget::spin, ObservableSpec{o2, std::nullopt}};
    }
    return c;
}

const ResultRow &row_of(const ScenarioResult &r, const std::vector<std::string> &w,
                        const std::optional<std::vector<std::string>> &f = std::nullopt) {
    for (const auto &row : r.rows) {
        if (row.wigner_outcomes == w && row.friend_outcomes == f) {
            return row;
        }
    }
    throw Error("row not found");
}

Vector to_eigen(const oracle::Vec2 &v) { return (Vector(2) << v[0], v[1]).finished(); }
Matrix to_eigen(const oracle::Mat2 &m) { return (Matrix(2, 2) << m[0][0], m[0][1], m[1][0], m[1][1]).finished(); }
oracle::Mat2 to_oracle(const Matrix &m) { return {{{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}}; }

Matrix random_hermitian(std::mt19937_64 &rng, Eigen::Index n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        m(r, r) = g(rng);
        for (Eigen::Index c = r + 1; c < n; ++c) {
            m(r, c) = cplx(g(rng), g(rng));
            m(c, r) = std::conj(m(r, c));
        }
    }
    return m;
}

// 1. Joint Wigner probabilities of the unitary two-lab protocol.
Verdict lu12() {
    auto cfg = config("ewfs_unitary_spin.yaml");
    cfg.gamma = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Amplitudes (-1, 1, 3, 1) / sqrt(12) for (up+, up-, down+, down-).
    const std::vector<std::pair<std::vector<std::string>, double>> want{
        {{"up", "+"}, -1.0}, {{"up", "-"}, 1.0}, {{"down", "+"}, 3.0}, {{"down", "-"}, 1.0}};
    double dp = 0.0;
    double da = 0.0;
    const cplx phase = row_of(r, {"down", "+"}).amplitude / std::abs(row_of(r, {"down", "+"}).amplitude);
    for (const auto &[w, a] : want) {
        const auto &row = row_of(r, w);
        dp = std::max(dp, std::abs(row.probability - a * a / 12.0));
        da = std::max(da, std::abs(row.amplitude / phase - a / std::sqrt(12.0)));
    }
    return {dp <= 1e-12 && da <= 1e-12 && secs < 1.0,
            "max |dP| " + fmt("%.2e", dp) + ", max |d amplitude| " + fmt("%.2e", da) + ", evolve " +
                fmt("%.4f", secs) + " s"};
}

// 2. Contradiction report against the golden reports and the expected table.
Verdict contradiction_table() {
    std::string detail;
    bool ok = true;
    for (const auto &[cfg_name, golden, verdict] :
         std::vector<std::tuple<std::string, std::string, std::string>>{
             {"ewfs_unitary_spin.yaml", "report_ewfs_unitary_spin", "inconsistent set"},
             {"ewfs_collapse_spin.yaml", "report_ewfs_collapse_spin", "consistent"}}) {
        const auto cfg = config(cfg_name);
        const auto rep = contradiction_report(cfg);
        std::ifstream in(WFPROBE_SOURCE_DIR "/tests/golden/" + golden + "/report.json");
        const auto gold = nlohmann::json::parse(in)["contradiction"];
        ok = ok && rep.verdict == verdict && gold["verdict"] == verdict;
        std::string holds;
        for (const auto &[k, s] : rep.statements) {
            const auto &g = gold["statements"][k];
            ok = ok && g["holds"] == s.holds && g["probe_annotation"] == s.probe_annotation &&
                 g["evidence"] == s.evidence;
            if (s.probability) {
                ok = ok && std::abs(g["probability"].get<double>() - *s.probability) <= 1e-12;
            }
            holds += k + (s.holds ? "+ " : "- ");
        }
        const bool unitary = cfg.mode == Mode::unitary;
        for (const auto *k : {"i", "ii", "iii", "iv", "v"}) {
            const bool expect = unitary || std::string(k) == "i" || std::string(k) == "v";
            ok = ok && rep.statements.at(k).holds == expect;
        }
        detail += to_string(cfg.mode) + ": " + holds + "=> " + rep.verdict + "; ";
    }
    return {ok, detail + "matches goldens"};
}

// 3. Weak values against the closed-form 2x2 oracle and the stated values.
Verdict weak_values() {
    using namespace oracle;
    const auto pp = outer(plus());
    Mat2 sz{{{-1.0, 0.0}, {0.0, 1.0}}};
    auto lib = [](const Vec2 &pre, const Mat2 &a, const Vec2 &post) {
        return weak_value(to_eigen(pre), to_eigen(a), to_eigen(post)).value;
    };
    struct Case {
        std::string name;
        Vec2 pre;
        Mat2 a;
        Vec2 post;
        double stated;
    };
    const std::vector<Case> cases{
        {"w1-(Pi+)", spin1(), pp, minus(), 0.0},
        {"w1+(Pi+)", spin1(), pp, plus(), 1.0},
        {"w(sz; + -> down)", plus(), sz, down(), -1.0},
        {"w2^(down,down)(sz)", down(), sz, down(), -1.0},
        {"w1^up(Pi+)", spin1(), pp, up(), -(1.0 + std::sqrt(2.0))},
    };
    double worst = 0.0;
    for (const auto &c : cases) {
        const cplx w = lib(c.pre, c.a, c.post);
        worst = std::max({worst, std::abs(w - oracle::weak_value(c.pre, c.a, c.post)), std::abs(w - c.stated)});
    }
    return {worst <= 1e-12, std::to_string(cases.size()) + " weak values, max deviation " + fmt("%.2e", worst)};
}

// 4. Two-product superposition for sigma_z on lab 2, single product otherwise.
// The (W1=up, W2=-) projection holds three product terms; at leading order the
// term shared by two difference pairs cancels half against each partner.
Verdict vp2_structure() {
    auto truncated = [](const ScenarioConfig &cfg) {
        const auto ev = evolve(cfg);
        const BranchState &s = ev.branches.front().final_state;
        const auto ket = wigner_product_ket(s, {0, 1}, cfg.env_unitary);
        return truncate_order(contract(leading_order_form(s).state, ket), 0).state;
    };
    const auto cfg = config("ewfs_unitary_sigmaz.yaml");
    const auto wave = to_probe_wave(truncated(cfg)).normalized();
    const auto cls = detect_superposition(wave, cfg.gamma);
    const auto wit = probe_entanglement_witness(wave);
    const auto exact = *row_of(run(cfg), {"up", "-"}).conditional_probes;
    bool ok = wave.terms.size() == 2 && cls.kind == SuperpositionKind::coherent_superposition &&
              cls.weights.size() == 2 && std::abs(cls.weights[0] - 0.5) <= 1e-10 &&
              std::abs(cls.weights[1] - 0.5) <= 1e-10 && wit.schmidt_rank == 2;
    std::string detail = "sigma_z: " + std::to_string(exact.terms.size()) + " exact terms, leading order weights " +
                         fmt("%.12f", cls.weights.at(0)) + ", " + fmt("%.12f", cls.weights.at(1)) + ", rank " +
                         std::to_string(wit.schmidt_rank);
    auto survivors = [&](const ScenarioConfig &c) { return truncated(c).branches().size(); };
    std::mt19937_64 rng(4);
    std::size_t generic = 0;
    double min_gap = 1e9;
    for (int i = 0; i < 20; ++i) {
        const Matrix m = random_hermitian(rng, 2);
        const auto o = to_oracle(m);
        const double gap = std::abs(oracle::weak_value(oracle::down(), o, oracle::down()) -
                                    oracle::weak_value(oracle::plus(), o, oracle::down()));
        min_gap = std::min(min_gap, gap);
        auto gc = cfg;
        gc.probes[1].observable = ObservableSpec{"", m};
        generic += survivors(gc) == 1 ? 1 : 0;
    }
    ok = ok && generic == 20 && min_gap > 1e-6;
    return {ok, detail + "; generic omega2: " + std::to_string(generic) + "/20 single product terms"};
}

// Friend outcome state of lab i in (down, up) coordinates.
oracle::Vec2 friend_state(std::size_t lab, const std::string &label) {
    if (lab == 0) {
        return label == "+" ? oracle::plus() : oracle::minus();
    }
    return label == "down" ? oracle::down() : oracle::up();
}

// Leading-order probe shift over gamma for the friends' outcomes. A spin probe
// acts before the friend's measurement and reads the weak value from the state
// the friend received to the announced outcome; pointer and environment probes
// act afterwards and read the expectation in the announced outcome.
cplx expected_shift(std::size_t lab, const std::vector<std::string> &friends, const LabProbe &p) {
    const Matrix m = p.observable.resolved();
    const std::string &label = friends[lab];
    if (m.rows() == 3) {
        const Eigen::Index k = label == (lab == 0 ? "+" : "down") ? 1 : 2;
        return m(k, k);
    }
    const auto f = friend_state(lab, label);
    if (p.target == ProbeTarget::spin) {
        const auto pre = lab == 0 ? oracle::spin1() : (friends[0] == "+" ? oracle::down() : oracle::plus());
        return oracle::weak_value(pre, to_oracle(m), f);
    }
    return oracle::dot(f, oracle::mul(to_oracle(m), f));
}

// 5. Collapse mode: every probe reads its friend's announced outcome.
Verdict collapse_consistency() {
    const std::array<ProbeTarget, 3> targets{ProbeTarget::spin, ProbeTarget::pointer, ProbeTarget::environment};
    std::mt19937_64 rng(5);
    const double g = 0.01;
    std::size_t probes = 0;
    std::size_t skipped = 0;
    double center_err = 0.0;
    double mean_err = 0.0;
    double max_infid = 0.0;
    double max_skipped_p = 0.0;
    bool ok = true;
    for (int i = 0; i < 50; ++i) {
        ScenarioConfig cfg;
        cfg.variant = Variant::ewfs;
        cfg.mode = Mode::collapse;
        cfg.gamma = g;
        double spread[2]{};
        for (std::size_t lab = 0; lab < 2; ++lab) {
            const auto t = targets[lab == 0 ? i % 3 : (i / 3) % 3];
            const Eigen::Index n = t == ProbeTarget::spin || (i / 9) % 2 == 0 ? 2 : 3;
            const Matrix m = random_hermitian(rng, n);
            cfg.probes[lab] = {t, ObservableSpec{"", m}};
            const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues();
            spread[lab] = ev.maxCoeff() - ev.minCoeff();
        }
        const double max_spread = std::max(spread[0], spread[1]) + 1.0;
        const auto r = run(cfg);
        for (const auto &row : r.rows) {
            if (!row.leading_probes) {
                // Out-of-span rows and rows with no zeroth-order amplitude carry O(gamma^2) probability.
                ++skipped;
                max_skipped_p = std::max(max_skipped_p, row.probability / (g * g * max_spread * max_spread));
                continue;
            }
            const auto &lw = *row.leading_probes;
            const auto &ew = *row.conditional_probes;
            ok = ok && detect_superposition(lw, g).kind == SuperpositionKind::single_shifted && lw.terms.size() == 1;
            double bound = 0.0;
            for (std::size_t lab = 0; lab < 2; ++lab) {
                const cplx w = expected_shift(lab, *row.friend_outcomes, cfg.probes[lab]);
                const double scale = spread[lab] + std::abs(w);
                const double ce = std::abs(lw.terms.front().centers[lab] - g * w);
                const double me = std::abs(ew.mean_position(lab) - g * w.real());
                center_err = std::max(center_err, ce);
                mean_err = std::max(mean_err, me / (g * g * scale * scale * scale));
                ok = ok && ce <= 1e-12 && me <= g * g * scale * scale * scale;
                bound += g * g * scale * scale / 16.0;
                ++probes;
            }
            // Fidelity between the exact wave and the single shifted packet.
            JointProbeWave diff = ew;
            for (auto t : lw.terms) {
                t.amplitude = -t.amplitude;
                diff.terms.push_back(t);
            }
            const double re = 1.0 - diff.norm_sq() / 2.0;
            const double infid = 1.0 - re * re;
            max_infid = std::max(max_infid, infid);
            ok = ok && infid <= bound + 1e-12;
        }
    }
    ok = ok && max_skipped_p <= 1.0;
    return {ok && probes > 0, "50 random observables, " + std::to_string(probes) + " probe readouts; max center error " +
                                  fmt("%.2e", center_err) + ", exact-mean error / gamma^2 bound " + fmt("%.2e", mean_err) +
                                  ", max infidelity " + fmt("%.2e", max_infid) + " (O(gamma^2) bound held); " + std::to_string(skipped) +
                                  " rows without a zeroth-order term skipped (probability / gamma^2 bound " +
                                  fmt("%.2e", max_skipped_p) + ")"};
}

// 6. Probability disturbance scales as gamma^2.
Verdict disturbance_scaling() {
    const std::vector<double> gammas{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    std::string detail;
    bool ok = true;
    for (const auto &[name, cfg] : std::vector<std::pair<std::string, ScenarioConfig>>{
             {"unitary WFS Pi+", with_probes(Variant::wfs, Mode::unitary, 0.0, "pi_plus")},
             {"collapse EWFS sigma_z/sigma_x", with_probes(Variant::ewfs, Mode::collapse, 0.0, "sigma_z", "sigma_x")}}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto s = disturbance_scan(cfg, gammas);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ok = ok && s.slope && std::abs(*s.slope - 2.0) <= 0.1 && secs < 1.0;
        detail += name + ": slope " + (s.slope ? fmt("%.5f", *s.slope) : std::string("none")) + " (" +
                  fmt("%.3f", secs) + " s); ";
    }
    const auto exact = disturbance_scan(with_probes(Variant::wfs, Mode::collapse, 0.0, "pi_plus"), gammas);
    return {ok, detail + "collapse WFS Pi+: " + exact.summary};
}

// 7. Monte Carlo implied weak values.
Verdict monte_carlo() {
    using namespace oracle;
    const std::size_t n = 1000000;
    const double g = 0.05;
    const std::uint64_t seed = 20261018;
    const auto t0 = std::chrono::steady_clock::now();
    const auto unitary = sample(with_probes(Variant::wfs, Mode::unitary, g, "pi_plus"), n, seed);
    const auto collapse = sample(with_probes(Variant::wfs, Mode::collapse, g, "pi_plus"), n, seed);
    struct Case {
        std::string name;
        const SampleSet *set;
        Conditioning cond;
        double analytic;
    };
    const auto pp = outer(plus());
    const std::vector<Case> cases{
        {"W1=down", &unitary, {std::vector<std::string>{"down"}, std::nullopt, 0}, weak_value(spin1(), pp, down()).real()},
        {"W1=up", &unitary, {std::vector<std::string>{"up"}, std::nullopt, 0}, weak_value(spin1(), pp, up()).real()},
        {"F1=-", &collapse, {std::nullopt, std::vector<std::string>{"-"}, 0}, weak_value(spin1(), pp, minus()).real()},
    };
    bool ok = true;
    std::string detail;
    for (const auto &c : cases) {
        const auto e = estimate_weak_value(*c.set, c.cond);
        const double z = std::abs(*e.implied_wv - c.analytic) / *e.implied_stderr;
        ok = ok && z <= 3.0;
        detail += c.name + " " + fmt("%.4f", *e.implied_wv) + "+-" + fmt("%.4f", *e.implied_stderr) + " vs " +
                  fmt("%.4f", c.analytic) + " (" + fmt("%.2f", z) + " SE); ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {ok && secs < 60.0, detail + "N=1e6 each, " + fmt("%.2f", secs) + " s"};
}

// 8. Gaussian overlaps against quadrature; norm preservation.
Verdict gaussian_algebra() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> c(-1.5, 1.5);
    std::uniform_real_distribution<double> ci(-0.4, 0.4);
    std::uniform_real_distribution<double> s(0.4, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double w = s(rng);
        const GaussianPacket a{{c(rng), ci(rng)}, w, {c(rng), c(rng)}};
        const GaussianPacket b{{c(rng), ci(rng)}, w, {c(rng), c(rng)}};
        const cplx q = oracle::quad_overlap(a.weight, a.center, a.width, b.weight, b.center, b.width);
        worst = std::max(worst, std::abs(overlap(a, b) - q));
    }
    double norm_err = 0.0;
    int runs = 0;
    for (const auto variant : {Variant::wfs, Variant::ewfs}) {
        for (const auto mode : {Mode::unitary, Mode::collapse}) {
            for (const auto t : {ProbeTarget::spin, ProbeTarget::pointer, ProbeTarget::environment}) {
                for (const auto &preset : preset_names()) {
                    ScenarioConfig cfg;
                    cfg.variant = variant;
                    cfg.mode = mode;
                    cfg.gamma = 0.3;
                    for (std::size_t lab = 0; lab < cfg.lab_count(); ++lab) {
                        cfg.probes[lab] = {t, ObservableSpec{preset, std::nullopt}};
                    }
                    norm_err = std::max(norm_err, std::abs(run(cfg).total_probability() - 1.0));
                    ++runs;
                }
                for (int k = 0; k < 5; ++k) {
                    ScenarioConfig cfg;
                    cfg.variant = variant;
                    cfg.mode = mode;
                    cfg.gamma = 0.5;
                    for (std::size_t lab = 0; lab < cfg.lab_count(); ++lab) {
                        cfg.probes[lab] = {t, ObservableSpec{"", random_hermitian(rng, t == ProbeTarget::spin ? 2 : 3)}};
                    }
                    norm_err = std::max(norm_err, std::abs(run(cfg).total_probability() - 1.0));
                    ++runs;
                }
            }
        }
    }
    return {worst <= 1e-10 && norm_err <= 1e-12, "100 overlaps, max error " + fmt("%.2e", worst) + "; " +
                                                     std::to_string(runs) + " coupled runs, max |norm - 1| " +
                                                     fmt("%.2e", norm_err)};
}

// 9. CLI golden suite and schema validation, end to end.
Verdict cli_suite() {
    const std::string py = WFPROBE_PYTHON;
    if (py.empty()) {
        return {false, "no Python interpreter found at configure time"};
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::string root = WFPROBE_SOURCE_DIR;
    const std::string cli = WFPROBE_CLI;
    const int golden = std::system((py + " " + root + "/tests/tools/cli_golden.py " + cli + " " + root +
                                    "/tests/golden > /dev/null")
                                       .c_str());
    const int schemas =
        std::system((py + " " + root + "/tests/tools/validate_schemas.py " + cli + " > /dev/null").c_str());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {golden == 0 && schemas == 0 && secs < 300.0,
            std::string("golden files ") + (golden == 0 ? "match" : "differ") + ", schemas " +
                (schemas == 0 ? "valid" : "invalid") + ", " + fmt("%.1f", secs) + " s"};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"joint Wigner probabilities", lu12},
        {"contradiction table", contradiction_table},
        {"weak values", weak_values},
        {"two-probe superposition structure", vp2_structure},
        {"collapse-mode consistency", collapse_consistency},
        {"second-order disturbance", disturbance_scaling},
        {"Monte Carlo estimator", monte_carlo},
        {"Gaussian algebra", gaussian_algebra},
        {"CLI golden suite", cli_suite},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %zu %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}

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
 * File-producing commands behind the wfprobe executable: run, report, scan
 * and mc. Data goes to files under an output directory; nothing is printed.
 */

#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wfprobe/analysis.hpp"
#include "wfprobe/config.hpp"
#include "wfprobe/montecarlo.hpp"

namespace wfprobe {

namespace fs = std::filesystem;

/// Rounds to 15 significant digits.
inline double round15(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return std::strtod(buf, nullptr);
}

/// Shortest round-trip form.
inline std::string fmt_double(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

inline std::string fmt_double(double v, const char *spec) {
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline nlohmann::json complex_json(cplx c) { return nlohmann::json::array({c.real(), c.imag()}); }

/// File-name friendly form of an outcome label.
inline std::string label_slug(const std::string &label) {
    if (label == "+") {
        return "plus";
    }
    if (label == "-") {
        return "minus";
    }
    return label;
}

inline std::string row_slug(const ResultRow &row) {
    std::string s;
    if (row.friend_outcomes) {
        for (std::size_t i = 0; i < row.friend_outcomes->size(); ++i) {
            s += "F" + std::to_string(i + 1) + "-" + label_slug((*row.friend_outcomes)[i]) + "_";
        }
    }
    for (std::size_t i = 0; i < row.wigner_outcomes.size(); ++i) {
        s += (i ? "_W" : "W") + std::to_string(i + 1) + "-" + label_slug(row.wigner_outcomes[i]);
    }
    return s;
}

class OutputDir {
  public:
    explicit OutputDir(fs::path root) : root_(std::move(root)) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) {
            throw Error("cannot create output directory '" + root_.string() + "': " + ec.message());
        }
    }

    /// Writes `content` to root/name and records the relative path.
    void write(const std::string &name, const std::string &content) {
        const fs::path p = root_ / name;
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        std::ofstream out(p, std::ios::binary);
        out << content;
        out.close();
        if (!out) {
            throw Error("cannot write '" + p.string() + "'");
        }
        written_.push_back(name);
    }

    void write_json(const std::string &name, const nlohmann::json &j) { write(name, j.dump(2) + "\n"); }

    [[nodiscard]] const fs::path &root() const { return root_; }
    [[nodiscard]] const std::vector<std::string> &written() const { return written_; }

  private:
    fs::path root_;
    std::vector<std::string> written_;
};

inline nlohmann::json wave_json(const JointProbeWave &w, double gamma) {
    nlohmann::json j;
    j["probes"] = w.probes;
    auto terms = nlohmann::json::array();
    for (const auto &t : w.terms) {
        auto centers = nlohmann::json::array();
        for (const auto &c : t.centers) {
            centers.push_back(complex_json(c));
        }
        terms.push_back({{"amplitude", complex_json(t.amplitude)}, {"centers", centers}});
    }
    j["terms"] = terms;
    std::vector<double> means;
    for (std::size_t k = 0; k < w.dims(); ++k) {
        means.push_back(w.mean_position(k));
    }
    j["mean_positions"] = means;
    const auto cls = detect_superposition(w, gamma);
    j["classification"] = to_string(cls.kind);
    j["cluster_weights"] = cls.weights;
    return j;
}

inline nlohmann::json result_json(const ScenarioResult &r) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = to_json(r.config);
    nlohmann::json obs = nlohmann::json::object();
    for (std::size_t i = 0; i < r.config.lab_count(); ++i) {
        const auto &p = r.config.probes[i];
        if (p.target != ProbeTarget::none) {
            obs["lab" + std::to_string(i + 1)] = matrix_to_json(p.observable.resolved());
        }
    }
    j["observables"] = obs;
    auto rows = nlohmann::json::array();
    for (const auto &row : r.rows) {
        nlohmann::json rj;
        rj["wigner"] = row.wigner_outcomes;
        if (row.friend_outcomes) {
            rj["friends"] = *row.friend_outcomes;
        }
        rj["probability"] = round15(row.probability);
        rj["amplitude"] = nlohmann::json::array({round15(row.amplitude.real()), round15(row.amplitude.imag())});
        if (row.conditional_probes) {
            rj["conditional_probes"] = wave_json(*row.conditional_probes, r.config.gamma);
        }
        if (row.leading_probes) {
            rj["leading_order"] = wave_json(*row.leading_probes, r.config.gamma);
        }
        rows.push_back(rj);
    }
    j["rows"] = rows;
    j["total_probability"] = round15(r.total_probability());
    return j;
}

inline nlohmann::json report_json(const ScenarioResult &r) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["variant"] = to_string(r.config.variant);
    j["mode"] = to_string(r.config.mode);
    auto readout = nlohmann::json::array();
    for (const auto &row : r.rows) {
        if (!row.conditional_probes) {
            continue;
        }
        nlohmann::json e;
        e["wigner"] = row.wigner_outcomes;
        if (row.friend_outcomes) {
            e["friends"] = *row.friend_outcomes;
        }
        e["classification"] = to_string(detect_superposition(*row.conditional_probes, r.config.gamma).kind);
        if (row.leading_probes) {
            e["leading_order_classification"] =
                to_string(detect_superposition(*row.leading_probes, r.config.gamma).kind);
        }
        if (row.conditional_probes->dims() == 2) {
            const auto w = probe_entanglement_witness(*row.conditional_probes);
            e["schmidt_rank"] = w.schmidt_rank;
            e["entangled"] = w.entangled;
        }
        readout.push_back(e);
    }
    j["readout"] = readout;
    if (r.config.variant == Variant::ewfs) {
        const auto rep = contradiction_report(r.config);
        nlohmann::json st = nlohmann::json::object();
        for (const auto &[k, s] : rep.statements) {
            nlohmann::json sj;
            sj["holds"] = s.holds;
            if (s.probability) {
                sj["probability"] = round15(*s.probability);
            }
            sj["evidence"] = s.evidence;
            sj["probe_annotation"] = s.probe_annotation;
            st[k] = sj;
        }
        j["contradiction"] = {{"statements", st},
                              {"verdict", rep.verdict},
                              {"probe_targets", {to_string(rep.probe_targets[0]), to_string(rep.probe_targets[1])}}};
    }
    return j;
}

inline std::string density_csv(const JointProbeWave &w, const Grid &g) {
    std::string s = "x";
    for (const auto &p : w.probes) {
        s += ",density_" + p;
    }
    s += "\n";
    for (std::size_t i = 0; i < g.n_points; ++i) {
        const double x = g.at(i);
        s += fmt_double(x, "%.12g");
        for (std::size_t k = 0; k < w.dims(); ++k) {
            s += "," + fmt_double(w.marginal_density(k, x), "%.12e");
        }
        s += "\n";
    }
    return s;
}

struct Manifest {
    ScenarioConfig config;
    std::vector<std::string> outputs;
    std::map<std::string, double> timing;

    [[nodiscard]] nlohmann::json json() const {
        nlohmann::json j;
        j["config"] = to_json(config);
        j["outputs"] = outputs;
        j["versions"] = {{"engine", kEngineVersion}, {"schema", kSchemaVersion}};
        j["timing"] = timing;
        return j;
    }
};

class PhaseTimer {
  public:
    explicit PhaseTimer(Manifest &m) : m_(m) {}
    void lap(const std::string &phase) {
        const auto now = std::chrono::steady_clock::now();
        m_.timing[phase] = std::chrono::duration<double>(now - last_).count();
        last_ = now;
    }

  private:
    Manifest &m_;
    std::chrono::steady_clock::time_point last_{std::chrono::steady_clock::now()};
};

inline void finish(OutputDir &out, Manifest &m) {
    m.outputs = out.written();
    m.outputs.push_back("manifest.json");
    out.write_json("manifest.json", m.json());
}

inline Manifest cmd_run(const ScenarioConfig &cfg, const fs::path &dir, const Grid &grid = {}) {
    grid.validate();
    OutputDir out(dir);
    Manifest m{cfg, {}, {}};
    PhaseTimer t(m);
    const auto result = run(cfg);
    t.lap("evolve");
    out.write_json("result.json", result_json(result));
    for (const auto &row : result.rows) {
        if (row.conditional_probes) {
            out.write("probes/" + row_slug(row) + ".csv", density_csv(*row.conditional_probes, grid));
        }
    }
    t.lap("write_result");
    out.write_json("report.json", report_json(result));
    t.lap("report");
    finish(out, m);
    return m;
}

inline Manifest cmd_report(const ScenarioConfig &cfg, const fs::path &dir) {
    OutputDir out(dir);
    Manifest m{cfg, {}, {}};
    PhaseTimer t(m);
    out.write_json("report.json", report_json(run(cfg)));
    t.lap("report");
    finish(out, m);
    return m;
}

inline nlohmann::json scan_json(const ScanResult &s) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    auto pts = nlohmann::json::array();
    for (const auto &p : s.points) {
        pts.push_back({{"gamma", p.gamma}, {"max_prob_deviation", p.max_prob_deviation}});
    }
    j["points"] = pts;
    j["slope"] = s.slope ? nlohmann::json(*s.slope) : nlohmann::json(nullptr);
    j["exactly_non_invasive"] = s.exactly_non_invasive;
    j["summary"] = s.summary;
    return j;
}

inline Manifest cmd_scan(const ScenarioConfig &cfg, const std::vector<double> &gammas, const fs::path &dir) {
    OutputDir out(dir);
    Manifest m{cfg, {}, {}};
    PhaseTimer t(m);
    const auto s = disturbance_scan(cfg, gammas);
    t.lap("scan");
    std::string csv = "gamma,max_prob_deviation\n";
    for (const auto &p : s.points) {
        csv += fmt_double(p.gamma) + "," + fmt_double(p.max_prob_deviation) + "\n";
    }
    out.write("scan.csv", csv);
    out.write_json("scan_summary.json", scan_json(s));
    finish(out, m);
    return m;
}

inline std::string samples_csv(const SampleSet &set) {
    const auto &cfg = set.result.config;
    const std::size_t labs = cfg.lab_count();
    std::string s = "run_index";
    for (std::size_t i = 1; i <= labs; ++i) {
        s += ",W" + std::to_string(i);
    }
    if (cfg.mode == Mode::collapse) {
        for (std::size_t i = 1; i <= labs; ++i) {
            s += ",F" + std::to_string(i);
        }
    }
    for (std::size_t i = 1; i <= labs; ++i) {
        s += ",x_W" + std::to_string(i);
    }
    s += "\n";
    for (const auto &r : set.records) {
        const auto &row = set.row_of(r);
        s += std::to_string(r.run_index);
        for (const auto &w : row.wigner_outcomes) {
            s += "," + w;
        }
        if (row.friend_outcomes) {
            for (const auto &f : *row.friend_outcomes) {
                s += "," + f;
            }
        }
        for (double x : r.positions) {
            s += "," + fmt_double(x);
        }
        s += "\n";
    }
    return s;
}

inline nlohmann::json estimates_json(const SampleSet &set) {
    const auto &cfg = set.result.config;
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["samples"] = set.records.size();
    j["seed"] = set.seed;
    j["gamma"] = cfg.gamma;
    auto list = nlohmann::json::array();
    for (const auto &row : set.result.rows) {
        if (!row.conditional_probes) {
            continue;
        }
        Conditioning c;
        c.wigner = row.wigner_outcomes;
        c.friends = row.friend_outcomes;
        for (std::size_t k = 0; k < row.conditional_probes->dims(); ++k) {
            c.probe = k;
            nlohmann::json e;
            e["wigner"] = row.wigner_outcomes;
            if (row.friend_outcomes) {
                e["friends"] = *row.friend_outcomes;
            }
            e["probe"] = row.conditional_probes->probes[k];
            const double exact = row.conditional_probes->mean_position(k);
            e["exact_mean"] = exact;
            try {
                const auto est = estimate_weak_value(set, c);
                e["count"] = est.count;
                e["mean"] = est.mean;
                e["stderr"] = est.stderr_mean;
                if (est.implied_wv) {
                    e["implied_wv"] = *est.implied_wv;
                    e["implied_wv_stderr"] = *est.implied_stderr;
                    e["exact_implied_wv"] = exact / cfg.gamma;
                }
            } catch (const ConditioningError &err) {
                e["error"] = err.what();
            }
            list.push_back(e);
        }
    }
    j["estimates"] = list;
    return j;
}

inline Manifest cmd_mc(const ScenarioConfig &cfg, std::size_t n, std::uint64_t seed, const fs::path &dir) {
    if (n == 0) {
        throw ValidationError("--samples must be at least 1");
    }
    OutputDir out(dir);
    Manifest m{cfg, {}, {}};
    PhaseTimer t(m);
    const auto set = sample(cfg, n, seed);
    t.lap("sample");
    out.write("samples.csv", samples_csv(set));
    out.write_json("estimates.json", estimates_json(set));
    t.lap("write");
    finish(out, m);
    return m;
}

} // namespace wfprobe

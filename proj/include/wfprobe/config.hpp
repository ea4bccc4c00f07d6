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
 * Scenario configuration files (YAML, or JSON as a YAML subset) and their
 * canonical JSON form.
 *
 * Matrices are lists of rows; an entry is a real number or a [re, im] pair.
 * Spin observables use (down, up) ordering; pointer/environment 3x3
 * matrices use (ready, o1, o2) with o1, o2 the friend's outcome labels,
 * (+, -) for lab 1 and (down, up) for lab 2.
 */

#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "wfprobe/scenario.hpp"

namespace wfprobe {

inline constexpr const char *kEngineVersion = "0.1.0";
inline constexpr const char *kSchemaVersion = "1";

/// Validation failure located in a configuration file.
class ConfigError : public ValidationError {
  public:
    ConfigError(const std::string &source, int line, const std::string &field, const std::string &msg)
        : ValidationError(source + ":" + std::to_string(line) + ": field '" + field + "': " + msg), line_(line),
          field_(field) {}

    [[nodiscard]] int line() const { return line_; }
    [[nodiscard]] const std::string &field() const { return field_; }

  private:
    int line_;
    std::string field_;
};

namespace detail {

struct YamlCursor {
    const std::string &source;

    [[noreturn]] void fail(const YAML::Node &n, const std::string &field, const std::string &msg) const {
        throw ConfigError(source, n.Mark().line + 1, field, msg);
    }

    void only_keys(const YAML::Node &n, const std::string &field, const std::set<std::string> &allowed) const {
        if (!n.IsMap()) {
            fail(n, field, "expected a mapping");
        }
        for (const auto &kv : n) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) {
                fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
            }
        }
    }

    template <class T> T scalar(const YAML::Node &n, const std::string &field, const char *what) const {
        if (!n.IsScalar()) {
            fail(n, field, std::string("expected ") + what);
        }
        try {
            return n.as<T>();
        } catch (const YAML::Exception &) {
            fail(n, field, std::string("expected ") + what);
        }
    }

    cplx entry(const YAML::Node &n, const std::string &field) const {
        if (n.IsSequence()) {
            if (n.size() != 2) {
                fail(n, field, "complex entries are [re, im] pairs");
            }
            return {scalar<double>(n[0], field, "a number"), scalar<double>(n[1], field, "a number")};
        }
        return {scalar<double>(n, field, "a number or [re, im]"), 0.0};
    }

    Matrix matrix(const YAML::Node &n, const std::string &field) const {
        if (!n.IsSequence() || n.size() == 0) {
            fail(n, field, "expected a list of matrix rows");
        }
        const auto rows = static_cast<Eigen::Index>(n.size());
        Matrix m(rows, rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto &row = n[static_cast<std::size_t>(r)];
            const std::string rf = field + "[" + std::to_string(r) + "]";
            if (!row.IsSequence() || static_cast<Eigen::Index>(row.size()) != rows) {
                fail(n, rf, "matrix must be square");
            }
            for (Eigen::Index c = 0; c < rows; ++c) {
                m(r, c) = entry(row[static_cast<std::size_t>(c)], rf + "[" + std::to_string(c) + "]");
            }
        }
        return m;
    }
};

template <class E>
E parse_enum(const YamlCursor &y, const YAML::Node &n, const std::string &field,
             const std::vector<std::pair<std::string, E>> &names) {
    const auto s = y.scalar<std::string>(n, field, "a string");
    std::string allowed;
    for (const auto &[name, value] : names) {
        if (s == name) {
            return value;
        }
        allowed += (allowed.empty() ? "" : ", ") + name;
    }
    y.fail(n, field, "'" + s + "' is not one of " + allowed);
}

inline LabProbe parse_probe(const YamlCursor &y, const YAML::Node &n, const std::string &field, int lab) {
    y.only_keys(n, field, {"target", "observable"});
    LabProbe p;
    if (n["target"]) {
        p.target = parse_enum<ProbeTarget>(y, n["target"], field + ".target",
                                           {{"none", ProbeTarget::none},
                                            {"spin", ProbeTarget::spin},
                                            {"pointer", ProbeTarget::pointer},
                                            {"environment", ProbeTarget::environment}});
    }
    if (const auto o = n["observable"]) {
        const std::string of = field + ".observable";
        if (o.IsScalar()) {
            p.observable.preset = y.scalar<std::string>(o, of, "a preset name");
            const auto &names = preset_names();
            if (std::find(names.begin(), names.end(), p.observable.preset) == names.end()) {
                y.fail(o, of, "unknown preset '" + p.observable.preset + "'");
            }
        } else {
            y.only_keys(o, of, {"matrix"});
            if (!o["matrix"]) {
                y.fail(o, of, "expected a preset name or {matrix: ...}");
            }
            const Matrix m = y.matrix(o["matrix"], of + ".matrix");
            const bool spin = p.target == ProbeTarget::spin;
            if (m.rows() != 2 && (spin || m.rows() != 3)) {
                y.fail(o["matrix"], of + ".matrix", spin ? "spin observables are 2x2" : "expected 2x2 or 3x3");
            }
            if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermiticityTolerance) {
                y.fail(o["matrix"], of + ".matrix", "matrix is not Hermitian");
            }
            p.observable.matrix = m;
            p.observable.preset.clear();
        }
    } else if (p.target != ProbeTarget::none) {
        y.fail(n, field + ".observable", "observable required for lab " + std::to_string(lab));
    }
    return p;
}

} // namespace detail

/// Parses a configuration document. A run manifest (with a top-level
/// "config" mapping) is accepted too.
inline ScenarioConfig parse_config_text(const std::string &text, const std::string &source = "<config>") {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException &e) {
        throw ConfigError(source, e.mark.line + 1, "", e.msg);
    }
    const detail::YamlCursor y{source};
    if (root.IsMap() && root["config"] && root["versions"]) {
        root = root["config"];
    }
    y.only_keys(root, "", {"variant", "mode", "gamma", "sigma", "seed", "environment_registers", "probes",
                           "env_unitary"});
    ScenarioConfig cfg;
    if (!root["variant"]) {
        y.fail(root, "variant", "required");
    }
    if (!root["mode"]) {
        y.fail(root, "mode", "required");
    }
    cfg.variant = detail::parse_enum<Variant>(y, root["variant"], "variant",
                                              {{"WFS", Variant::wfs}, {"EWFS", Variant::ewfs}});
    cfg.mode = detail::parse_enum<Mode>(y, root["mode"], "mode",
                                        {{"unitary", Mode::unitary}, {"collapse", Mode::collapse}});
    if (const auto g = root["gamma"]) {
        cfg.gamma = y.scalar<double>(g, "gamma", "a number");
        if (!(cfg.gamma >= 0.0) || !std::isfinite(cfg.gamma)) {
            y.fail(g, "gamma", "must be >= 0");
        }
    }
    if (const auto s = root["sigma"]) {
        cfg.sigma = y.scalar<double>(s, "sigma", "a number");
        if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) {
            y.fail(s, "sigma", "must be > 0");
        }
    }
    if (const auto s = root["seed"]) {
        cfg.seed = y.scalar<std::uint64_t>(s, "seed", "a non-negative integer");
    }
    if (const auto e = root["environment_registers"]) {
        cfg.environment_registers = y.scalar<bool>(e, "environment_registers", "true or false");
    }
    const std::size_t labs = cfg.lab_count();
    if (const auto p = root["probes"]) {
        y.only_keys(p, "probes", {"lab1", "lab2"});
        for (std::size_t i = 0; i < 2; ++i) {
            const std::string key = "lab" + std::to_string(i + 1);
            if (const auto n = p[key]) {
                if (i >= labs) {
                    y.fail(n, "probes." + key, "WFS has a single lab");
                }
                cfg.probes[i] = detail::parse_probe(y, n, "probes." + key, static_cast<int>(i + 1));
            }
        }
    }
    if (const auto u = root["env_unitary"]) {
        y.only_keys(u, "env_unitary", {"lab1", "lab2"});
        for (std::size_t i = 0; i < 2; ++i) {
            const std::string key = "lab" + std::to_string(i + 1);
            if (const auto n = u[key]) {
                const std::string f = "env_unitary." + key;
                if (i >= labs) {
                    y.fail(n, f, "WFS has a single lab");
                }
                const Matrix m = y.matrix(n, f);
                if (m.rows() != 3 || unitarity_defect(m) > kUnitarityTolerance) {
                    y.fail(n, f, "must be a 3x3 unitary");
                }
                cfg.env_unitary[i] = m;
            }
        }
    }
    try {
        validate(cfg);
    } catch (const ValidationError &e) {
        throw ConfigError(source, root.Mark().line + 1, "", e.what());
    }
    return cfg;
}

inline ScenarioConfig parse_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

inline nlohmann::json matrix_to_json(const Matrix &m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c).imag() == 0.0 ? nlohmann::json(m(r, c).real())
                                                : nlohmann::json::array({m(r, c).real(), m(r, c).imag()}));
        }
        rows.push_back(row);
    }
    return rows;
}

/// Canonical JSON form; parse_config_text(to_json(c).dump()) reproduces c.
inline nlohmann::json to_json(const ScenarioConfig &cfg) {
    nlohmann::json j;
    j["variant"] = to_string(cfg.variant);
    j["mode"] = to_string(cfg.mode);
    j["gamma"] = cfg.gamma;
    j["sigma"] = cfg.sigma;
    j["seed"] = cfg.seed;
    j["environment_registers"] = cfg.environment_registers;
    nlohmann::json probes = nlohmann::json::object();
    nlohmann::json envs = nlohmann::json::object();
    for (std::size_t i = 0; i < cfg.lab_count(); ++i) {
        const std::string key = "lab" + std::to_string(i + 1);
        const auto &p = cfg.probes[i];
        nlohmann::json pj;
        pj["target"] = to_string(p.target);
        if (p.observable.matrix) {
            pj["observable"] = {{"matrix", matrix_to_json(*p.observable.matrix)}};
        } else if (p.target != ProbeTarget::none) {
            pj["observable"] = p.observable.preset;
        }
        probes[key] = pj;
        if (cfg.env_unitary[i]) {
            envs[key] = matrix_to_json(*cfg.env_unitary[i]);
        }
    }
    j["probes"] = probes;
    if (!envs.empty()) {
        j["env_unitary"] = envs;
    }
    return j;
}

} // namespace wfprobe

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

#include <filesystem>

#include <gtest/gtest.h>

#include "wfprobe/config.hpp"

using namespace wfprobe;

namespace {

/// Runs the parser and returns the located error.
ConfigError config_error(const std::string &text) {
    try {
        (void)parse_config_text(text, "t.yaml");
    } catch (const ConfigError &e) {
        return e;
    }
    ADD_FAILURE() << "accepted:\n" << text;
    return ConfigError("t.yaml", 0, "", "none");
}

} // namespace

TEST(Config, MinimalDocumentUsesDefaults) {
    const auto c = parse_config_text("variant: WFS\nmode: collapse\n");
    EXPECT_EQ(c.variant, Variant::wfs);
    EXPECT_EQ(c.mode, Mode::collapse);
    EXPECT_DOUBLE_EQ(c.gamma, 1e-2);
    EXPECT_DOUBLE_EQ(c.sigma, 1.0);
    EXPECT_EQ(c.seed, 0u);
    EXPECT_TRUE(c.environment_registers);
    EXPECT_EQ(c.probes[0].target, ProbeTarget::none);
    EXPECT_EQ(c.probes[1].target, ProbeTarget::none);
}

TEST(Config, PresetsAndMatrices) {
    const auto c = parse_config_text(R"(variant: EWFS
mode: unitary
gamma: 0.2
sigma: 0.5
seed: 42
probes:
  lab1: {target: spin, observable: sigma_z}
  lab2:
    target: pointer
    observable:
      matrix: [[0, 0, 0], [0, 1, [0, 2]], [0, [0, -2], -1]]
)");
    EXPECT_DOUBLE_EQ(c.gamma, 0.2);
    EXPECT_DOUBLE_EQ(c.sigma, 0.5);
    EXPECT_EQ(c.seed, 42u);
    Matrix z(2, 2);
    z << -1.0, 0.0, 0.0, 1.0;
    EXPECT_TRUE(c.probes[0].observable.resolved().isApprox(z));
    const Matrix m = c.probes[1].observable.resolved();
    ASSERT_EQ(m.rows(), 3);
    EXPECT_EQ(m(1, 2), cplx(0.0, 2.0));
    EXPECT_EQ(m(2, 1), cplx(0.0, -2.0));
}

TEST(Config, UnknownKeyIsLocated) {
    const auto e = config_error("variant: WFS\nmode: unitary\ngama: 0.1\n");
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.field(), "gama");
    EXPECT_NE(std::string(e.what()).find("t.yaml:3: field 'gama'"), std::string::npos);
    const auto p = config_error("variant: WFS\nmode: unitary\nprobes:\n  lab1: {target: spin, obs: x}\n");
    EXPECT_EQ(p.field(), "probes.lab1.obs");
    EXPECT_EQ(p.line(), 4);
}

TEST(Config, NonHermitianRejectedWithLocation) {
    const auto e = config_error(R"(variant: WFS
mode: unitary
probes:
  lab1:
    target: spin
    observable:
      matrix: [[1, 1], [0, 1]]
)");
    EXPECT_EQ(e.line(), 7);
    EXPECT_EQ(e.field(), "probes.lab1.observable.matrix");
    EXPECT_NE(std::string(e.what()).find("not Hermitian"), std::string::npos);
}

TEST(Config, RangeAndPresenceChecks) {
    EXPECT_EQ(config_error("variant: WFS\nmode: unitary\ngamma: -0.1\n").field(), "gamma");
    EXPECT_EQ(config_error("variant: WFS\nmode: unitary\nsigma: 0\n").field(), "sigma");
    EXPECT_EQ(config_error("variant: WFS\ngamma: 0.1\n").field(), "mode");
    EXPECT_EQ(config_error("mode: unitary\n").field(), "variant");
    EXPECT_EQ(config_error("variant: XWFS\nmode: unitary\n").field(), "variant");
    EXPECT_EQ(config_error("variant: WFS\nmode: unitary\ngamma: lots\n").field(), "gamma");
    EXPECT_EQ(config_error("variant: WFS\nmode: unitary\nprobes:\n  lab2: {target: spin, observable: sigma_x}\n")
                  .field(),
              "probes.lab2");
    EXPECT_EQ(config_error("variant: WFS\nmode: unitary\nprobes:\n  lab1: {target: spin}\n").field(),
              "probes.lab1.observable");
    EXPECT_EQ(config_error("variant: WFS\nmode: unitary\nprobes:\n  lab1: {target: spin, observable: tilt}\n")
                  .field(),
              "probes.lab1.observable");
    EXPECT_EQ(config_error(
                  "variant: WFS\nmode: unitary\nprobes:\n  lab1:\n    target: spin\n    observable:\n      matrix: "
                  "[[1, 0, 0], [0, 1, 0], [0, 0, 1]]\n")
                  .field(),
              "probes.lab1.observable.matrix");
    EXPECT_EQ(config_error("variant: EWFS\nmode: unitary\nenv_unitary:\n  lab1: [[2, 0, 0], [0, 1, 0], [0, 0, 1]]\n")
                  .field(),
              "env_unitary.lab1");
    EXPECT_EQ(config_error("variant: WFS\nmode: [unitary\n").line(), 3);
}

TEST(Config, JsonIsAccepted) {
    const auto c = parse_config_text(
        R"({"variant": "EWFS", "mode": "collapse", "gamma": 0.3,
            "probes": {"lab2": {"target": "environment", "observable": {"matrix": [[1, 0], [0, -1]]}}}})");
    EXPECT_EQ(c.variant, Variant::ewfs);
    EXPECT_EQ(c.probes[1].target, ProbeTarget::environment);
    EXPECT_DOUBLE_EQ(c.gamma, 0.3);
}

TEST(Config, CanonicalJsonRoundTrip) {
    for (const auto &entry : std::filesystem::directory_iterator(WFPROBE_SOURCE_DIR "/configs")) {
        const auto c = parse_config(entry.path().string());
        const std::string once = to_json(c).dump(2);
        const std::string twice = to_json(parse_config_text(once)).dump(2);
        EXPECT_EQ(once, twice) << entry.path();
        nlohmann::json manifest{{"config", to_json(c)}, {"versions", {{"engine", kEngineVersion}}}};
        EXPECT_EQ(to_json(parse_config_text(manifest.dump())).dump(2), once) << entry.path();
    }
}

TEST(Config, MissingFileIsAnError) {
    EXPECT_THROW(parse_config("/nonexistent/wfprobe.yaml"), Error);
}

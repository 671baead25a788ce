#include "qbattery/config.hpp"

#include <catch_amalgamated.hpp>

#include <string>

using namespace qbattery;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("empty config reproduces the defaults", "[config]") {
  const RunConfig c = parse_config(json::object());
  CHECK(c.model.N == 3);
  CHECK(c.model.omega_c == 0.5);
  CHECK(c.model.omega_a == 2.0);
  CHECK(c.model.omega_cat == 0.06);
  CHECK(c.model.J == 1.6);
  CHECK(c.model.g == 0.3);
  CHECK(c.model.lambda == 1.5);
  CHECK(c.model.kappa == 0.15);
  CHECK(c.model.gamma == 0.01);
  CHECK(c.model.T == 0.8);
  CHECK(c.model.photon_cutoff == 5);
  CHECK(c.integrator.method == IntegratorMethod::rk4_fixed);
  CHECK(c.integrator.dt == 0.005);
  CHECK(c.t_end == 500.0);
  CHECK(c.integrator.snapshot_stride == 100);
  CHECK(c.dissipator == DissipatorMode::standard);
  CHECK(c.battery_h == BatteryHamiltonianMode::local_plus_exchange);
  CHECK(c.initial.battery == std::vector<int>{1, 1, 1});
  CHECK(c.steady_window == 0.2);
  CHECK_FALSE(c.sweep.has_value());
  CHECK(c.effective == default_config_json());
}

TEST_CASE("partial configs merge over the defaults", "[config]") {
  const RunConfig c = parse_config(json::parse(R"({"model": {"N": 2, "kappa": 0.3},
                                                    "integrator": {"method": "expm-krylov"},
                                                    "initial_state": {"battery": [1, 0], "cavity": {"fock": 2},
                                                                      "catalyst": {"bloch": [0, 0, -1]}},
                                                    "battery_h": "local"})"));
  CHECK(c.model.N == 2);
  CHECK(c.model.kappa == 0.3);
  CHECK(c.model.g == 0.3);
  CHECK(c.integrator.method == IntegratorMethod::expm_krylov_reference);
  CHECK(c.initial.battery == std::vector<int>{1, 0});
  CHECK(c.battery_h == BatteryHamiltonianMode::local_only);
  CHECK(c.effective["model"]["N"] == 2);
  CHECK(c.effective["model"]["omega_a"] == 2.0);
}

TEST_CASE("invalid configs name the offending field", "[config]") {
  CHECK_THAT(config_error(json::parse(R"({"model": {"kapa": 0.1}})")), ContainsSubstring("unknown field 'model.kapa'"));
  CHECK_THAT(config_error(json::parse(R"({"modle": {}})")), ContainsSubstring("unknown field 'modle'"));
  CHECK_THAT(config_error(json::parse(R"({"model": {"kappa": -0.1}})")), ContainsSubstring("field 'model.kappa'"));
  CHECK_THAT(config_error(json::parse(R"({"model": {"kappa": "x"}})")), ContainsSubstring("field 'model.kappa'"));
  CHECK_THAT(config_error(json::parse(R"({"model": {"N": 2.5}})")), ContainsSubstring("field 'model.N'"));
  CHECK_THAT(config_error(json::parse(R"({"model": {"T": -0.1}})")), ContainsSubstring("field 'model.T'"));
  CHECK_THAT(config_error(json::parse(R"({"integrator": {"dt": 0}})")), ContainsSubstring("field 'integrator.dt'"));
  CHECK_THAT(config_error(json::parse(R"({"integrator": {"t_end": 1.0001, "dt": 0.01}})")),
             ContainsSubstring("multiple of integrator.dt"));
  CHECK_THAT(config_error(json::parse(R"({"integrator": {"method": "euler"}})")),
             ContainsSubstring("field 'integrator.method'"));
  CHECK_THAT(config_error(json::parse(R"({"initial_state": {"battery": [1, 1]}})")),
             ContainsSubstring("list length must equal model.N"));
  CHECK_THAT(config_error(json::parse(R"({"initial_state": {"cavity": {"fock": 6}}})")),
             ContainsSubstring("initial_state.cavity.fock"));
  CHECK_THAT(config_error(json::parse(R"({"initial_state": {"catalyst": {"bloch": [1, 1, 0]}}})")),
             ContainsSubstring("vector length exceeds 1"));
  CHECK_THAT(config_error(json::parse(R"({"dissipator": "lossy"})")), ContainsSubstring("field 'dissipator'"));
  CHECK_THAT(config_error(json::parse(R"({"defaults_version": 7})")), ContainsSubstring("defaults_version"));
  CHECK_THAT(config_error(json::parse(R"({"sweep": {"param": "colour", "values": [1]}})")),
             ContainsSubstring("field 'sweep.param'"));
  CHECK_THAT(config_error(json::parse(R"({"sweep": {"param": "kappa", "values": []}})")),
             ContainsSubstring("field 'sweep.values'"));
  CHECK_THAT(config_error(json::parse(R"({"sweep": {"param": "kappa", "values": [0.1, -1]}})")),
             ContainsSubstring("field 'sweep.values'"));
  CHECK_THAT(config_error(json::parse(R"({"summary": {"steady_window": 0}})")),
             ContainsSubstring("summary.steady_window"));
  CHECK_THAT(config_error(json::parse("[1, 2]")), ContainsSubstring("expected an object"));
}

TEST_CASE("dimension cap is reported as a config error", "[config]") {
  const std::string msg = config_error(json::parse(R"({"model": {"N": 10, "photon_cutoff": 20}})"));
  CHECK_THAT(msg, ContainsSubstring("field 'model'"));
  CHECK_THAT(msg, ContainsSubstring("exceeds cap"));
}

TEST_CASE("JSON syntax errors carry line and column", "[config]") {
  const std::string text = "{\n  \"model\": {\n    \"N\": 3,,\n  }\n}\n";
  try {
    parse_config_text(text, "bad.json");
    FAIL("expected a syntax error");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK_THAT(m, ContainsSubstring("bad.json: JSON syntax error at line 3, column 12"));
  }
}

TEST_CASE("command-line overrides", "[config]") {
  json raw = json::object();
  apply_override(raw, "kappa=0.2");
  apply_override(raw, "integrator.dt=0.01");
  apply_override(raw, "integrator.method=expm-krylov");
  apply_override(raw, "initial_state.battery=[1,0,1]");
  apply_override(raw, "summary.exact_steady_state=false");
  apply_override(raw, "initial_state.cavity={\"fock\": 2}");
  const RunConfig c = parse_config(raw);
  CHECK(c.model.kappa == 0.2);
  CHECK(c.integrator.dt == 0.01);
  CHECK(c.integrator.method == IntegratorMethod::expm_krylov_reference);
  CHECK(c.initial.battery == std::vector<int>{1, 0, 1});
  CHECK_FALSE(c.exact_steady_state);
  CHECK(c.initial.cavity == InitialStateSpec::Cavity::fock);
  CHECK(c.initial.fock == 2);

  json bad = json::object();
  CHECK_THROWS_AS(apply_override(bad, "kappa"), ConfigError);
  CHECK_THROWS_AS(apply_override(bad, "model.nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(bad, "nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(bad, "model..kappa=1"), ConfigError);
}

TEST_CASE("model parameters by name", "[config]") {
  ModelParams p;
  for (const auto& name : model_param_names()) {
    CHECK(is_model_param(name));
    const double v = get_model_param(p, name);
    set_model_param(p, name, v);
    CHECK(get_model_param(p, name) == v);
  }
  CHECK_FALSE(is_model_param("gamma_per_spin"));
  CHECK_THROWS_AS(set_model_param(p, "N", 2.5), ConfigError);
  CHECK_THROWS_AS(get_model_param(p, "x"), ConfigError);

  const RunConfig c = with_model_param(parse_config(json::object()), "N", 2);
  CHECK(c.model.N == 2);
  CHECK(c.initial.battery == std::vector<int>{1, 1});
  CHECK(c.effective["model"]["N"] == 2);
  CHECK_THROWS_AS(with_model_param(c, "kappa", -1.0), ConfigError);
}

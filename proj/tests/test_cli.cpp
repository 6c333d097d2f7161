#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "runner.hpp"

using nlohmann::json;
using namespace wolffkit::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("wolffkit-cli-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json json_artifact(const RunResult& r) {
  for (const auto& a : r.artifacts)
    if (a.size() > 5 && a.substr(a.size() - 5) == ".json") return json::parse(slurp(a));
  return json();
}

RunOptions in(const fs::path& d) {
  RunOptions o;
  o.out_dir = d.string();
  return o;
}

const json kSmall = json::parse(R"({
  "params": {"n": 2, "alpha": "0.5", "p": "2", "q": "0.5", "r": "3"},
  "measure": {"kind": "uniform-ball", "cells": 6, "subsample": 1},
  "probes": {"kind": "grid", "center": [0, 0], "radius": 1, "per_axis": 2}
})");

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("empty measure solves to zero") {
    auto d = scratch("empty");
    json cfg = {{"params", {{"n", 3}, {"alpha", "1"}, {"p", "2"}, {"q", "0.5"}}}, {"measure", {{"kind", "empty"}}}};
    RunResult r = run("solve", "", cfg, in(d));
    CHECK(r.exit_code == kOk);
    json j = json_artifact(r);
    CHECK(j.at("status") == "TrivialOnly");
  }

  TEST_CASE("exit codes") {
    auto d = scratch("codes");
    CHECK(run("frobnicate", "", kSmall, in(d)).exit_code == kUsage);
    CHECK(run("criteria", "", kSmall, in(d)).exit_code == kValidation);
    CHECK(run("verify", "", kSmall, in(d)).exit_code == kValidation);
    CHECK(run("solve", "extra", kSmall, in(d)).exit_code == kValidation);
    CHECK(run("criteria", "nonsense", kSmall, in(d)).exit_code == kValidation);

    json bad = kSmall;
    bad["params"]["q"] = "1.5";
    CHECK(run("solve", "", bad, in(d)).exit_code == kValidation);
    json typo = kSmall;
    typo["solver"] = {{"tolerence", "1e-9"}};
    CHECK(run("solve", "", typo, in(d)).exit_code == kValidation);
    json comma = kSmall;
    comma["params"]["p"] = "1,5";
    CHECK(run("solve", "", comma, in(d)).exit_code == kValidation);
    json nop = kSmall;
    nop.erase("params");
    CHECK(run("solve", "", nop, in(d)).exit_code == kValidation);

    json div = {{"params", {{"n", 3}, {"alpha", "1"}, {"p", "3"}, {"q", "1"}}},
                {"measure", {{"kind", "uniform-ball"}, {"cells", 4}, {"subsample", 1}}}};
    CHECK(run("verify", "wolff-inequality", div, in(d)).exit_code == kNumeric);
  }

  TEST_CASE("numbers and decimal strings are interchangeable") {
    auto d1 = scratch("num1");
    auto d2 = scratch("num2");
    json a = kSmall;
    json b = kSmall;
    b["params"]["alpha"] = 0.5;
    b["params"]["r"] = 3;
    RunResult ra = run("potential", "", a, in(d1));
    RunResult rb = run("potential", "", b, in(d2));
    REQUIRE(ra.exit_code == kOk);
    REQUIRE(rb.exit_code == kOk);
    REQUIRE(ra.artifacts.size() == rb.artifacts.size());
    const std::string csv_a = slurp(ra.artifacts.front());
    const std::string csv_b = slurp(rb.artifacts.front());
    // Only the header differs (the hash covers the literal config).
    CHECK(csv_a.substr(csv_a.find("\nx1")) == csv_b.substr(csv_b.find("\nx1")));
  }

  TEST_CASE("assert turns a failing verdict into exit 4") {
    auto d = scratch("assert");
    json cfg = json::parse(R"({
      "params": {"n": 2, "alpha": "0.5", "p": "2", "q": "0.5", "r": "3"},
      "measure": {"kind": "random-cells", "cells": 8, "subsample": 2, "blocks": 4, "sparsity": "0.4"},
      "seed": 3})");
    RunOptions o = in(d);
    o.assert_verdicts = true;
    CHECK(run("verify", "enhanced-wolff", cfg, o).exit_code == kOk);
    cfg["fault"] = {{"sum_table_scale", "0.001"}};
    RunResult bad = run("verify", "enhanced-wolff", cfg, o);
    CHECK(bad.exit_code == kAssertFailed);
    CHECK(json_artifact(bad).at("report").at("verdict") == "Fails");
    o.assert_verdicts = false;
    CHECK(run("verify", "enhanced-wolff", cfg, o).exit_code == kOk);
  }

  TEST_CASE("artifacts are thread independent and named by hash") {
    auto d1 = scratch("t1");
    auto d8 = scratch("t8");
    RunOptions o1 = in(d1);
    o1.threads = 1;
    RunOptions o8 = in(d8);
    o8.threads = 8;
    for (const char* cmd : {"solve", "kappa", "intrinsic"}) {
      RunResult a = run(cmd, "", kSmall, o1);
      RunResult b = run(cmd, "", kSmall, o8);
      REQUIRE(a.exit_code == kOk);
      REQUIRE(b.exit_code == kOk);
      REQUIRE(a.artifacts.size() == b.artifacts.size());
      for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
        CHECK(fs::path(a.artifacts[i]).filename() == fs::path(b.artifacts[i]).filename());
        CHECK(slurp(a.artifacts[i]) == slurp(b.artifacts[i]));
      }
    }
    RunOptions reset = in(d1);
    reset.threads = 1;
    run("gen", "", kSmall, reset);
  }

  TEST_CASE("seed override enters the hash") {
    auto d = scratch("seed");
    json cfg = json::parse(R"({
      "params": {"n": 2, "alpha": "0.5", "p": "2", "q": "0.5"},
      "measure": {"kind": "random-cells", "cells": 4, "subsample": 1}})");
    RunOptions o = in(d);
    RunResult a = run("gen", "", cfg, o);
    o.seed = 99;
    RunResult b = run("gen", "", cfg, o);
    REQUIRE(a.exit_code == kOk);
    REQUIRE(b.exit_code == kOk);
    CHECK(fs::path(a.artifacts.front()).filename() != fs::path(b.artifacts.front()).filename());
    CHECK(slurp(a.artifacts.front()) != slurp(b.artifacts.front()));
    cfg["seed"] = 99;
    o.seed.reset();
    RunResult c = run("gen", "", cfg, o);
    CHECK(fs::path(c.artifacts.front()).filename() == fs::path(b.artifacts.front()).filename());
  }

  TEST_CASE("hash is FNV-1a of the dump") {
    CHECK(config_hash(json("")) == config_hash(json("")));
    CHECK(config_hash(json::object()).size() == 16);
    CHECK(config_hash(json{{"a", 1}}) != config_hash(json{{"a", 2}}));
  }
}

#include "doctest.h"

#include <cstdlib>
#include <fstream>

#include "mvreg/config.hpp"

using namespace mvreg;
using nlohmann::json;
namespace fs = std::filesystem;

TEST_CASE("defaults") {
    const Config c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.session.pairwise.delta == 0.3);
    CHECK(c.session.pairwise.lambda == 2.0);
    CHECK(c.session.pairwise.descriptor_frequency == 100);
    CHECK(c.session.pairwise.icp_frequency == 10);
    CHECK_FALSE(c.session.pairwise.full_propagation);
    CHECK_FALSE(c.session.augment.rude);
    CHECK(c.session.reference == 0);
}

TEST_CASE("json round trip and overlay") {
    Config c;
    c.session.pairwise.delta = 0.5;
    c.session.pairwise.scale_multipliers = {4.0, 8.0};
    c.session.augment.rude = true;
    c.session.pairwise.ransac_seed = 9;
    const json j = to_json(c);
    const Config back = config_from_json(j);
    CHECK(to_json(back) == j);

    const Config partial = config_from_json(json{{"icp_frequency", 5}});
    CHECK(partial.session.pairwise.icp_frequency == 5);
    CHECK(partial.session.pairwise.descriptor_frequency == 100);
}

TEST_CASE("rejections") {
    CHECK_THROWS_AS(config_from_json(json{{"no_such_key", 1}}), ParseError);
    CHECK_THROWS_AS(config_from_json(json{{"delta", "high"}}), ParseError);
    CHECK_THROWS_AS(config_from_json(json{{"icp_frequency", 2.5}}), ParseError);
    CHECK_THROWS_AS(config_from_json(json{{"reference", -1}}), ParseError);
    CHECK_THROWS_AS(config_from_json(json{{"full_propagation", 1}}), ParseError);
    CHECK_THROWS_AS(config_from_json(json{{"scale_multipliers", {1, "a"}}}), ParseError);
    CHECK_THROWS_AS(config_from_json(json::array()), ParseError);
    CHECK_THROWS_AS(config_from_json(json{{"delta", 0.0}}), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(json{{"scale_multipliers", {5.0}}}), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(json{{"scale_multipliers", {5.0, 4.0}}}), InvalidArgument);
    CHECK_THROWS_AS(config_from_json(json{{"normal_scale", 3}}), InvalidArgument);
    try {
        config_from_json(json{{"mystery", 1}});
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("mystery") != std::string::npos);
    }
}

TEST_CASE("overrides") {
    Config c = apply_override({}, "delta=0.4");
    CHECK(c.session.pairwise.delta == 0.4);
    c = apply_override(c, "full_propagation=true");
    CHECK(c.session.pairwise.full_propagation);
    c = apply_override(c, "scale_multipliers=[3,6,12]");
    CHECK(c.session.pairwise.scale_multipliers == std::vector<double>{3, 6, 12});
    CHECK_THROWS_AS(apply_override(c, "delta"), ParseError);
    CHECK_THROWS_AS(apply_override(c, "=1"), ParseError);
    CHECK_THROWS_AS(apply_override(c, "delta=abc"), ParseError);
}

TEST_CASE("load_config precedence") {
    const fs::path dir = fs::temp_directory_path() / ("mvreg_cfg_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::ofstream(dir / "a.json") << R"({"delta": 0.6, "icp_frequency": 4})";
    std::ofstream(dir / "b.json") << R"({"delta": 0.7})";
    std::ofstream(dir / "bad.json") << "{not json";

    ::unsetenv(kConfigEnv);
    CHECK(load_config(std::nullopt).session.pairwise.delta == 0.3);
    ::setenv(kConfigEnv, (dir / "a.json").c_str(), 1);
    CHECK(load_config(std::nullopt).session.pairwise.delta == 0.6);
    const Config explicit_file = load_config(dir / "b.json");
    CHECK(explicit_file.session.pairwise.delta == 0.7);
    CHECK(explicit_file.session.pairwise.icp_frequency == 10);
    ::unsetenv(kConfigEnv);

    CHECK_THROWS_AS(load_config(dir / "bad.json"), ParseError);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("report json") {
    SessionReport r;
    r.scan_count = 3;
    r.unplaced = {2};
    r.status = {ScanStatus::reference, ScanStatus::registered, ScanStatus::unplaced};
    r.seconds.total = 1.5;
    const json j = to_json(r, false);
    CHECK(j.at("stalled") == true);
    CHECK(j.at("status").at(2) == "unplaced");
    CHECK_FALSE(j.contains("seconds"));
    CHECK(to_json(r, true).at("seconds").at("total") == 1.5);

    ErrorReport e;
    e.e_R = 0.25;
    CHECK(to_json(e).at("e_R") == 0.25);
}

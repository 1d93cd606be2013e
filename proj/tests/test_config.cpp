#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "run_config.hpp"

using namespace torcone;
using namespace torcone::cli;

namespace {

RawConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config_text(in, "test.cfg");
}

std::string where_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.where();
    }
    return "";
}

std::string resolve_error(const std::string& text) {
    try {
        resolve(parse(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ParseConfigText, KeysValuesAndComments) {
    const auto raw = parse("# header\n\ncommand = sweep  # trailing\n  opening=pi/2\neps = 0.01, 0.02,0.04\n");
    ASSERT_EQ(raw.size(), 3u);
    EXPECT_EQ(raw.at("command").value, "sweep");
    EXPECT_EQ(raw.at("command").origin, "file:3");
    EXPECT_EQ(raw.at("opening").value, "pi/2");
    EXPECT_EQ(raw.at("eps").value, "0.01, 0.02,0.04");
}

TEST(ParseConfigText, ErrorsCarryTheLine) {
    EXPECT_EQ(where_of("command = solve\nopening\n"), "test.cfg:2");
    EXPECT_EQ(where_of("\n\nbogus = 1\n"), "test.cfg:3");
    EXPECT_EQ(where_of("h = 0.1\nh = 0.2\n"), "test.cfg:2");
    EXPECT_EQ(where_of("h =\n"), "test.cfg:1");
    EXPECT_EQ(where_of(" = 3\n"), "test.cfg:1");
    EXPECT_EQ(where_of("h = 0.1 # fine\n"), "");
}

TEST(ParseConfigText, DuplicateNamesTheFirstLine) {
    try {
        parse("h = 0.1\n\nh = 0.2\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("file:1"), std::string::npos);
    }
}

TEST(ParseAngle, AcceptedForms) {
    EXPECT_DOUBLE_EQ(parse_angle("pi", "k"), pi);
    EXPECT_DOUBLE_EQ(parse_angle("pi/2", "k"), 0.5 * pi);
    EXPECT_DOUBLE_EQ(parse_angle("2pi", "k"), 2 * pi);
    EXPECT_DOUBLE_EQ(parse_angle("2*pi", "k"), 2 * pi);
    EXPECT_DOUBLE_EQ(parse_angle("0.5 * pi", "k"), 0.5 * pi);
    EXPECT_DOUBLE_EQ(parse_angle("3pi/4", "k"), 0.75 * pi);
    EXPECT_DOUBLE_EQ(parse_angle("1.25", "k"), 1.25);
    EXPECT_THROW(parse_angle("pi/0", "k"), ConfigError);
    EXPECT_THROW(parse_angle("pi*2", "k"), ConfigError);
    EXPECT_THROW(parse_angle("tau", "k"), ConfigError);
}

TEST(ParseModes, PairsAndNone) {
    const auto m = parse_modes("2:1, 4:-0.5", "modes");
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m[0].m, 2);
    EXPECT_EQ(m[0].a, 1.0);
    EXPECT_EQ(m[1].m, 4);
    EXPECT_EQ(m[1].a, -0.5);
    EXPECT_TRUE(parse_modes("none", "modes").empty());
    EXPECT_THROW(parse_modes("2", "modes"), ConfigError);
    EXPECT_THROW(parse_modes("2.5:1", "modes"), ConfigError);
    EXPECT_THROW(parse_modes("-1:1", "modes"), ConfigError);
}

TEST(ParseNumbers, StrictConversion) {
    EXPECT_EQ(parse_number(" 1e-3 ", "k"), 1e-3);
    EXPECT_THROW(parse_number("1e-3x", "k"), ConfigError);
    EXPECT_THROW(parse_number("", "k"), ConfigError);
    EXPECT_THROW(parse_number("inf", "k"), ConfigError);
    EXPECT_EQ(parse_int("4", "k"), 4);
    EXPECT_THROW(parse_int("4.5", "k"), ConfigError);
    EXPECT_THROW(parse_list("0.1,,0.2", "k"), ConfigError);
}

TEST(Resolve, Defaults) {
    const auto c = resolve({});
    EXPECT_EQ(c.command, Command::verify);
    EXPECT_DOUBLE_EQ(c.opening, 0.5 * pi);
    EXPECT_EQ(c.base_radius, 1.0);
    EXPECT_EQ(c.amplitude, 0.0);
    ASSERT_EQ(c.modes.size(), 1u);
    EXPECT_EQ(c.h, 0.02);
    EXPECT_EQ(c.refinements, 3);
    EXPECT_EQ(c.eps, (std::vector<double>{0.01, 0.02, 0.04, 0.08}));
    EXPECT_EQ(c.z_policy, ZPolicy::paper);
    EXPECT_EQ(c.threads, 1);
    EXPECT_EQ(c.tol.at("tol_rigid"), 1e-3);
    EXPECT_EQ(c.tol.at("tol_identity"), 0.05);
    EXPECT_EQ(c.tol.at("min_r2"), 0.98);
    EXPECT_EQ(c.raw.at("h").origin, "default");
}

TEST(Resolve, Validation) {
    EXPECT_NE(resolve_error("eps = 0.02, 0.01\n").find("eps (file:1)"), std::string::npos);
    EXPECT_NE(resolve_error("eps = 0.01, 0.01\n").find("ascending"), std::string::npos);
    EXPECT_NE(resolve_error("eps = -0.01, 0.01\n"), "");
    EXPECT_NE(resolve_error("tol_rigid = 0\n").find("positive"), std::string::npos);
    EXPECT_NE(resolve_error("min_r2 = -1\n"), "");
    EXPECT_NE(resolve_error("refinements = 0\n"), "");
    EXPECT_NE(resolve_error("refinements = 7\n"), "");
    EXPECT_EQ(resolve_error("refinements = 6\n"), "");
    EXPECT_NE(resolve_error("opening = 3pi\n"), "");
    EXPECT_NE(resolve_error("command = plot\n"), "");
    EXPECT_NE(resolve_error("z_policy = other\n"), "");
    EXPECT_NE(resolve_error("threads = 0\n"), "");
    EXPECT_NE(resolve_error("amplitude = -0.1\n"), "");
    EXPECT_NE(resolve_error("h = 0\n"), "");
}

TEST(Resolve, DomainFromKeys) {
    const auto c = resolve(parse("opening = pi\namplitude = 0.05\nmodes = 2:1\nbase_radius = 2\n"));
    const auto d = c.domain();
    EXPECT_DOUBLE_EQ(d.opening(), pi);
    EXPECT_NEAR(d.rho(0.0), 2.0 * 1.05, 1e-12);
    // a non-positive radius is reported as a configuration error
    EXPECT_NE(resolve_error("amplitude = 2\nmodes = 2:1\n").find("domain"), std::string::npos);
}

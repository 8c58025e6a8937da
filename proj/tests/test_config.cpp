#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qst/config.hpp"
#include "qst/io.hpp"

using namespace qst;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << contents;
    return path;
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("values, comments and whitespace") {
        const auto cfg = RunConfig::from_string(
            "# a comment\n"
            "pulse.kind = sech\n"
            "integrator.rel_tol = 1e-10  # trailing comment\n"
            "optimize.n = 6\n"
            "sweep.T_values = 2,4,6\n");
        CHECK(cfg.get("pulse.kind") == "sech");
        CHECK(cfg.get_double("integrator.rel_tol") == 1e-10);
        CHECK(cfg.get_int("optimize.n") == 6);
        CHECK(cfg.get_list("sweep.T_values") == std::vector<double>{2, 4, 6});
        CHECK(cfg.get_or("noise.kinds", "amplitude") == "amplitude");
        CHECK(cfg.hash().size() == 16);
    }
    SUBCASE("unknown keys are rejected with a location") {
        CHECK_THROWS_WITH_AS(RunConfig::from_string("pulse.kind = sech\nbogus.key = 1\n"),
                             doctest::Contains(":2"), ConfigError);
    }
    SUBCASE("duplicate keys are rejected") {
        CHECK_THROWS_AS(RunConfig::from_string("optimize.n = 3\noptimize.n = 6\n"),
                        ConfigError);
    }
    SUBCASE("malformed lines are rejected") {
        CHECK_THROWS_AS(RunConfig::from_string("pulse.kind sech\n"), ConfigError);
        CHECK_THROWS_AS(RunConfig::from_string("pulse.kind =\n"), ConfigError);
    }
    SUBCASE("type errors are diagnosed by key") {
        const auto cfg = RunConfig::from_string("optimize.T = fast\noptimize.n = 2.5\n");
        CHECK_THROWS_WITH_AS(cfg.get_double("optimize.T"), doctest::Contains("optimize.T"),
                             ConfigError);
        CHECK_THROWS_AS(cfg.get_int("optimize.n"), ConfigError);
    }
    SUBCASE("missing referenced paths fail at load") {
        CHECK_THROWS_WITH_AS(
            RunConfig::from_string("pulse.table = /nonexistent/pulse.txt\n"),
            doctest::Contains("missing path"), ConfigError);
    }
    SUBCASE("identical text hashes identically, different text differently") {
        const auto a = RunConfig::from_string("optimize.n = 3\n");
        const auto b = RunConfig::from_string("optimize.n = 3\n");
        const auto c = RunConfig::from_string("optimize.n = 6\n");
        CHECK(a.hash() == b.hash());
        CHECK(a.hash() != c.hash());
    }
}

TEST_CASE("float formatting carries 17 significant digits") {
    CHECK(format_float(0.5) == "0.5");
    CHECK(format_float(1.0 / 3.0) == "0.33333333333333331");
    const double v = -0.58646123456789012;
    double round_trip = 0;
    std::sscanf(format_float(v).c_str(), "%lf", &round_trip);
    CHECK(round_trip == v);
}

TEST_CASE("pulse tables round-trip") {
    SampledPulse<double> pulse;
    pulse.T = 10.0;
    pulse.n = 6;
    pulse.values = {0.3065, 0.3524, 0.3847, 0.3842, 0.6706, 0.8043};
    const auto path = temp_file("qst_test_pulse.txt", "");
    save_pulse_table(path.string(), pulse, "deadbeef");

    const auto loaded = load_sampled_pulse<double>(path.string());
    CHECK(loaded.T == pulse.T);
    CHECK(loaded.n == pulse.n);
    CHECK(loaded.values == pulse.values);  // 17-digit format is lossless
    std::filesystem::remove(path);
}

TEST_CASE("sampled-pulse tables are validated") {
    SUBCASE("non-uniform grid") {
        const auto path =
            temp_file("qst_test_bad1.txt", "0 1.0\n1 0.8\n3 0.5\n4 0\n");
        CHECK_THROWS_WITH_AS(load_sampled_pulse<double>(path.string()),
                             doctest::Contains("uniform grid"), ConfigError);
        std::filesystem::remove(path);
    }
    SUBCASE("missing final zero") {
        const auto path = temp_file("qst_test_bad2.txt", "0 1.0\n1 0.8\n2 0.5\n");
        CHECK_THROWS_WITH_AS(load_sampled_pulse<double>(path.string()),
                             doctest::Contains("end with g = 0"), ConfigError);
        std::filesystem::remove(path);
    }
    SUBCASE("non-increasing times") {
        const auto path = temp_file("qst_test_bad3.txt", "0 1.0\n2 0.8\n1 0.5\n4 0\n");
        CHECK_THROWS_AS(load_sampled_pulse<double>(path.string()), ConfigError);
        std::filesystem::remove(path);
    }
    SUBCASE("wrong column count") {
        const auto path = temp_file("qst_test_bad4.txt", "0 1.0 7\n");
        CHECK_THROWS_AS(load_table<double>(path.string()), ConfigError);
        std::filesystem::remove(path);
    }
}

TEST_CASE("seed tables interpolate on t >= 0") {
    const auto path =
        temp_file("qst_test_seed.txt", "# comment\n0 1.0\n1.5 0.7\n4 0.2\n8 0\n");
    const auto seed = load_seed_table<double>(path.string());
    CHECK(seed.value(0.0) == doctest::Approx(1.0));
    CHECK(seed.value(1.5) == doctest::Approx(0.7));
    CHECK(seed.value(9.0) == 0.0);  // beyond the table
    CHECK(seed.support_end == 8.0);
    std::filesystem::remove(path);
}

#include "catch_amalgamated.hpp"

#include "quadcert/cli.hpp"
#include "test_support.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace quadcert;
using Catch::Matchers::WithinAbs;
using testsupport::data_path;

namespace {

struct CliResult {
    int status;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = cli::run_cli(args, out, err);
    return {status, out.str(), err.str()};
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string field(const std::string& line, std::size_t index) {
    std::istringstream in(line);
    std::string cell;
    for (std::size_t i = 0; i <= index; ++i) std::getline(in, cell, ',');
    return cell;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("quadcert_test_" + name);
}

const std::string kDemo = data_path("systems/scalar_demo.json");

} // namespace

// =============================================================================
// certify
// =============================================================================

TEST_CASE("certify inside the ball", "[cli]") {
    const auto r = run({"certify", "--system", kDemo, "--u", "0.2", "--r", "0.5"});
    REQUIRE(r.status == cli::kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK_THAT(j["certificate"]["lhs"].get<double>(), WithinAbs(0.894427191, 1e-9));
    CHECK(j["certificate"]["certified"] == true);
    CHECK(j["terms"]["e"] == 0.2);
    CHECK(j["mode"] == "ball");
}

TEST_CASE("certify at the nominal parameter", "[cli]") {
    const auto r = run({"certify", "--system", kDemo, "--u", "0"});
    REQUIRE(r.status == cli::kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["certificate"]["lhs"] == 0.0);
    CHECK(j["mode"] == "unbounded");
}

TEST_CASE("certify reports not certified with status 2", "[cli]") {
    const auto r = run({"certify", "--system", kDemo, "--u", "0.3", "--kappa", "0.5"});
    CHECK(r.status == cli::kExitNotCertified);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["tightness"]["inner_threshold"] == 0.1875);
    CHECK(j["tightness"]["outer_threshold"] == 0.3125);
}

TEST_CASE("certify with verification", "[cli]") {
    const auto r = run({"certify", "--system", kDemo, "--u", "0.1", "--r", "1", "--verify"});
    REQUIRE(r.status == cli::kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["verification"]["found"] == true);
    CHECK_THAT(j["verification"]["x"][0][0].get<double>(), WithinAbs((-1.0 + std::sqrt(0.6)) / 2.0, 1e-10));
}

TEST_CASE("certify input errors exit 1", "[cli]") {
    CHECK(run({"certify", "--system", kDemo, "--u", "zero"}).status == cli::kExitError);
    CHECK(run({"certify", "--system", kDemo, "--u", "0.1,0.2"}).status == cli::kExitError);
    CHECK(run({"certify", "--system", kDemo, "--u", "0.1", "--r", "-1"}).status == cli::kExitError);
    CHECK(run({"certify", "--system", kDemo}).status == cli::kExitError);
    const auto missing = run({"certify", "--system", "/nonexistent/sys.json", "--u", "0.1"});
    CHECK(missing.status == cli::kExitError);
    CHECK(missing.err.find("/nonexistent/sys.json") != std::string::npos);
    CHECK(run({}).status == cli::kExitError);
    CHECK(run({"bogus"}).status == cli::kExitError);
}

TEST_CASE("complex parameter tokens", "[cli]") {
    CHECK(cli::parse_complex("1.5") == Complex(1.5, 0.0));
    CHECK(cli::parse_complex("-2") == Complex(-2.0, 0.0));
    CHECK(cli::parse_complex("0.1+0.2j") == Complex(0.1, 0.2));
    CHECK(cli::parse_complex(" 0.3-1e-2i ") == Complex(0.3, -0.01));
    CHECK(cli::parse_complex("2j") == Complex(0.0, 2.0));
    CHECK(cli::parse_complex("+1-1j") == Complex(1.0, -1.0));
    CHECK_THROWS_AS(cli::parse_complex("1+2"), FormatError);
    CHECK_THROWS_AS(cli::parse_complex("j"), FormatError);
    CHECK_THROWS_AS(cli::parse_complex(""), FormatError);
    CHECK(cli::parse_complex_list("1,2j,3-1j").size() == 3);
}

// =============================================================================
// scan / rotate / case-info
// =============================================================================

TEST_CASE("scan of the two-bus fixture", "[cli]") {
    const auto r = run({"scan", "--case", data_path("cases/case2.m"), "--dirs", "10"});
    REQUIRE(r.status == cli::kExitOk);
    const auto lines = csv_lines(r.out);
    REQUIRE(lines.size() == 11);
    CHECK(lines[0] == "direction_id,seed,t_cert,t_prior,t_relax,ratio_prior,ratio_relax");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        CHECK(field(lines[i], 5) == "1");
        CHECK(field(lines[i], 1) == "42");
    }
}

TEST_CASE("scan output is deterministic", "[cli]") {
    const std::string c18 = data_path("cases/case18.m");
    const auto a = run({"scan", "--case", c18, "--dirs", "100", "--seed", "5"});
    const auto b = run({"scan", "--case", c18, "--dirs", "100", "--seed", "5"});
    REQUIRE(a.status == cli::kExitOk);
    CHECK(a.out == b.out);
    CHECK(a.out != run({"scan", "--case", c18, "--dirs", "100", "--seed", "6"}).out);
}

TEST_CASE("scan with relaxation data and zeta export", "[cli]") {
    const auto relax = temp_file("relax.csv");
    const auto zeta_out = temp_file("zeta.jsonl");
    const auto csv_out = temp_file("scan.csv");
    {
        std::ofstream f(relax);
        f << "direction_id,t_relax\n0,3.125\n1,1.0\n";
    }
    const auto r = run({"scan", "--case", data_path("cases/case2.m"), "--dirs", "2", "--relax-csv",
                        relax.string(), "--export-zeta", zeta_out.string(), "--out", csv_out.string()});
    REQUIRE(r.status == cli::kExitOk);
    CHECK(r.out.empty());
    const auto lines = csv_lines(testsupport::slurp(csv_out.string()));
    REQUIRE(lines.size() == 3);
    CHECK_THAT(std::stod(field(lines[1], 6)), WithinAbs(0.8, 1e-12));
    CHECK(r.err.find("direction 1") != std::string::npos);
    const auto zeta_lines = csv_lines(testsupport::slurp(zeta_out.string()));
    REQUIRE(zeta_lines.size() == 2);
    const auto j = nlohmann::json::parse(zeta_lines[0]);
    CHECK(j["n"] == 1);
    CHECK_THAT(std::hypot(j["zeta_re"][0][0].get<double>(), j["zeta_im"][0][0].get<double>()),
               WithinAbs(0.1, 1e-12));
    for (const auto& p : {relax, zeta_out, csv_out}) std::filesystem::remove(p);
}

TEST_CASE("scan errors", "[cli]") {
    const auto missing = run({"scan", "--case", "/nonexistent/case.m"});
    CHECK(missing.status == cli::kExitError);
    CHECK(missing.err.find("/nonexistent/case.m") != std::string::npos);
    const auto malformed = run({"scan", "--case", testsupport::test_data_path("malformed/two_slack.m")});
    CHECK(malformed.status == cli::kExitError);
    CHECK(malformed.err.find("multiple slack buses") != std::string::npos);
    CHECK(run({"scan", "--case", data_path("cases/case2.m"), "--dirs", "0"}).status == cli::kExitError);
}

TEST_CASE("rotate emits a flat curve", "[cli]") {
    const std::string c18 = data_path("cases/case18.m");
    const auto r = run({"rotate", "--case", c18, "--theta-count", "8"});
    REQUIRE(r.status == cli::kExitOk);
    const auto lines = csv_lines(r.out);
    REQUIRE(lines.size() == 9);
    CHECK(lines[0] == "theta,t_cert,t_prior");
    const double t0 = std::stod(field(lines[1], 1));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        CHECK(std::abs(std::stod(field(lines[i], 1)) - t0) <= 1e-10 * t0);
    }
    const auto scan = csv_lines(run({"scan", "--case", c18, "--dirs", "1"}).out);
    CHECK(field(scan[1], 2) == field(lines[1], 1));
    CHECK(field(scan[1], 3) == field(lines[1], 2));
    CHECK(run({"rotate", "--case", c18, "--theta-count", "3"}).status == cli::kExitError);
}

TEST_CASE("case-info summary", "[cli]") {
    const auto r = run({"case-info", "--case", data_path("cases/case2.m")});
    REQUIRE(r.status == cli::kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["n"] == 1);
    CHECK(j["slack_id"] == 1);
    CHECK_THAT(j["z_inf_norm"].get<double>(), WithinAbs(0.1, 1e-12));
    CHECK_THAT(j["min_abs_w"].get<double>(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("QUADCERT_THREADS caps scan workers", "[cli]") {
    ::setenv("QUADCERT_THREADS", "1", 1);
    CHECK(cli::scan_threads() == 1);
    ::setenv("QUADCERT_THREADS", "junk", 1);
    CHECK(cli::scan_threads() >= 1);
    ::unsetenv("QUADCERT_THREADS");
}

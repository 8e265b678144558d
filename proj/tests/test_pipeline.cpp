#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "certify/pipeline.hpp"

using namespace certify;

namespace {

SystemModel motivational() {
    return parse_system(
        "states x1; inputs u1;"
        "x1' = -x1 + x1^3 + (-x1 + 1)*u1;"
        "y1 = x1 - x1^2 + (0.5*x1^2 + 1)*u1;"
        "region x1 in [-1, 1]; region u1 in [-1, 1];");
}

} // namespace

TEST_CASE("export produces grammar-conforming sdpa text") {
    auto model = parse_system(
        "states x1, x2; inputs; x1' = x2; x2' = -2*x2 - x1*cos(x1 + x2);"
        "region x1 in [-1, 1]; region x2 in [-1, 1];");
    RunConfig cfg;
    cfg.mode = "stability";
    cfg.approx = "taylor";
    cfg.order = 5;
    auto res = run_export(model, cfg);

    std::stringstream ss(res.sdpa_text);
    std::string line;
    const std::regex integer(R"(^\d+$)");
    const std::regex numrow(R"(^-?[\d. eE+-]+( -?[\d. eE+-]+)*$)");
    const std::regex entry(R"(^\d+ \d+ \d+ \d+ -?[\d.]+(e[+-]?\d+)?$)");

    REQUIRE(std::getline(ss, line));
    CHECK(std::regex_match(line, integer));  // m
    const int m = std::stoi(line);
    CHECK(m == res.num_con);
    REQUIRE(std::getline(ss, line));
    CHECK(std::regex_match(line, integer));  // nblocks
    REQUIRE(std::getline(ss, line));         // block sizes
    {
        std::stringstream bs(line);
        int count = 0, v;
        while (bs >> v) ++count;
        CHECK(count == int(res.block_sizes.size()) + (res.num_free > 0 ? 1 : 0));
    }
    REQUIRE(std::getline(ss, line));  // objective vector
    {
        std::stringstream bs(line);
        double v;
        int count = 0;
        while (bs >> v) ++count;
        CHECK(count == m);
    }
    int entries = 0;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        INFO("line: ", line);
        CHECK(std::regex_match(line, entry));
        ++entries;
    }
    CHECK(entries > 100);
}

TEST_CASE("export dimensions are deterministic and consistent") {
    auto model = motivational();
    RunConfig cfg;
    cfg.mode = "passivity";
    auto a = run_export(model, cfg);
    auto b = run_export(model, cfg);
    CHECK(a.sdpa_text == b.sdpa_text);
    CHECK(a.num_con == b.num_con);
    CHECK(a.num_con > 0);
    CHECK(!a.block_sizes.empty());
}

TEST_CASE("single-radius sweep equals the index run, certificate bytes included") {
    auto model = motivational();
    RunConfig cfg;
    cfg.mode = "ofp";
    cfg.radii = {0.5};
    auto rows = run_sweep(model, cfg);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].status == "ok");

    RunConfig icfg;
    icfg.mode = "ofp";
    icfg.radius = 0.5;
    auto idx = run_index(model, icfg);
    REQUIRE(idx.exit_code == 0);
    CHECK(rows[0].index == idx.index);
    CHECK(rows[0].cert_json == idx.cert_json);
}

TEST_CASE("sweep argument validation") {
    auto model = motivational();
    RunConfig cfg;
    cfg.mode = "ofp";
    cfg.radii = {};
    CHECK_THROWS_AS(run_sweep(model, cfg), ConfigError);
    cfg.radii = {1.0, 0.5};
    CHECK_THROWS_AS(run_sweep(model, cfg), ConfigError);
    cfg.radii = {-1.0};
    CHECK_THROWS_AS(run_sweep(model, cfg), ConfigError);
}

TEST_CASE("sweep csv format") {
    std::vector<SweepRow> rows(2);
    rows[0] = {0.5, 0.25, "ok", ""};
    rows[1] = {1.0, std::nan(""), "infeasible", ""};
    const std::string csv = sweep_to_csv(rows);
    CHECK(csv == "r,index,status\n0.5,0.25,ok\n1,,infeasible\n");
}

TEST_CASE("verify on the unstable control exits 2") {
    auto model = parse_system("states x1; inputs; x1' = x1; region x1 in [-1, 1];");
    RunConfig cfg;
    cfg.mode = "stability";
    cfg.vdeg = 4;
    auto res = run_verify(model, cfg);
    CHECK(res.exit_code == 2);
    CHECK(!res.cert.has_value());
    CHECK(res.cert_json.find("\"certified\": false") != std::string::npos);
}

TEST_CASE("auto approximation dispatch") {
    // polynomial dynamics -> exact route, zero-error certificate
    auto poly = motivational();
    RunConfig cfg;
    cfg.mode = "passivity";
    auto res = run_verify(poly, cfg);
    REQUIRE(res.exit_code == 0);
    CHECK(res.cert->approx_kind == ApproxKind::exact_polynomial);

    // radius above 1 with a transcendental -> bernstein
    auto wide = parse_system(
        "states x1; inputs; x1' = -2*x1 + sin(x1); region x1 in [-1.5, 1.5];");
    RunConfig scfg;
    scfg.mode = "stability";
    scfg.vdeg = 4;
    auto sres = run_verify(wide, scfg);
    REQUIRE(sres.exit_code == 0);
    CHECK(sres.cert->approx_kind == ApproxKind::bernstein);

    // small region with a transcendental -> taylor
    auto narrow = parse_system(
        "states x1; inputs; x1' = -2*x1 + sin(x1); region x1 in [-0.5, 0.5];");
    auto nres = run_verify(narrow, scfg);
    REQUIRE(nres.exit_code == 0);
    CHECK(nres.cert->approx_kind == ApproxKind::taylor);
}

TEST_CASE("config files and overrides") {
    const char* path = "/tmp/certify_test_config.txt";
    {
        std::ofstream out(path);
        out << "# comment\nmode = passivity\nvdeg=6\ntol = 1e-6\nradii = 0.5, 1.0\n";
    }
    RunConfig cfg;
    apply_config_file(cfg, path);
    CHECK(cfg.mode == "passivity");
    CHECK(cfg.vdeg == 6);
    CHECK(cfg.tol == 1e-6);
    REQUIRE(cfg.radii.size() == 2);
    CHECK(cfg.radii[1] == 1.0);

    CHECK_THROWS_AS(apply_config_line(cfg, "nonsense", "1"), ConfigError);
    CHECK_THROWS_AS(apply_config_line(cfg, "vdeg", "abc"), ConfigError);
    CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/file"), ConfigError);
}

TEST_CASE("l2 gain mode on a stable linear system") {
    // x' = -x + u, y = x has L2 gain 1; gamma = 2 certifies easily
    auto model = parse_system(
        "states x1; inputs u1; x1' = -x1 + u1; y1 = x1;"
        "region x1 in [-1, 1]; region u1 in [-1, 1];");
    RunConfig cfg;
    cfg.mode = "l2gain";
    cfg.gamma = 2.0;
    cfg.vdeg = 2;
    auto res = run_verify(model, cfg);
    CHECK(res.exit_code == 0);

    // w = 4 u^2 - y^2 matches the supply construction
    auto s = make_supply_l2gain(1, 1, 2.0);
    std::vector<double> u{1.0}, y{0.5};
    CHECK(s.eval(u, y, 0.0) == doctest::Approx(4.0 - 0.25));
}

TEST_CASE("qsr mode consumes matrix literals") {
    auto model = motivational();
    RunConfig cfg;
    cfg.mode = "qsr";
    cfg.qsr = "0|0.5|0";  // passivity written as a QSR triple
    auto res = run_verify(model, cfg);
    CHECK(res.exit_code == 0);
    cfg.qsr = "bad";
    CHECK_THROWS_AS(run_verify(model, cfg), ConfigError);
}

TEST_CASE("identical runs produce byte-identical certificates") {
    auto model = motivational();
    RunConfig cfg;
    cfg.mode = "passivity";
    auto a = run_verify(model, cfg);
    auto b = run_verify(model, cfg);
    REQUIRE(a.exit_code == 0);
    CHECK(a.cert_json == b.cert_json);
}

TEST_CASE("domain violations over the region are rejected up front") {
    auto model = parse_system(
        "states x1; inputs; x1' = -x1/(1 - x1); region x1 in [-2, 2];");
    RunConfig cfg;
    cfg.mode = "stability";
    CHECK_THROWS_AS(run_verify(model, cfg), ConfigError);

    auto ok_model = parse_system(
        "states x1; inputs; x1' = -x1/(2 + x1); region x1 in [-0.5, 0.5];");
    cfg.lambda = 1e-3;       // healthy margin scale for this small case
    cfg.sdeg = 6;            // odd-degree dynamics need odd-capable face terms
    cfg.subdivisions = 64;   // quotient-rule derivative trees need subdivision
    auto res = run_verify(ok_model, cfg);
    CHECK(res.exit_code == 0);
    // the strictness margin rules out vacuous storage functions
    std::vector<double> probe{0.4};
    CHECK(res.cert->storage.eval(probe) >= 1e-3 * 0.4 * 0.4 - 1e-6);
}

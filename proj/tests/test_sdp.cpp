#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "certify/sdp.hpp"

using namespace certify;

namespace {

// minimize x s.t. x >= 1, written as: maximize -v s.t. v - X = 1, X >= 0.
SdpProblem toy_lp() {
    SdpProblem p;
    p.blocks.push_back({1, BlockKind::diagonal});
    p.num_free = 1;
    p.num_con = 1;
    p.entries.push_back({0, 0, 0, 0, -1.0});
    p.free_entries.emplace_back(0, 0, 1.0);
    p.obj_free = {-1.0};
    p.rhs = {1.0};
    return p;
}

// maximize X01 s.t. X00 = X11 = 1, X PSD 2x2; optimum 1.
SdpProblem toy_corr() {
    SdpProblem p;
    p.blocks.push_back({2, BlockKind::psd});
    p.num_con = 2;
    p.entries.push_back({0, 0, 0, 0, 1.0});
    p.entries.push_back({1, 0, 1, 1, 1.0});
    p.obj_entries.push_back({-1, 0, 0, 1, 0.5});
    p.rhs = {1.0, 1.0};
    return p;
}

} // namespace

TEST_CASE("scalar LP through the interior point method") {
    auto p = toy_lp();
    auto sol = sdp_solve(p);
    REQUIRE(sol.status == SdpStatus::optimal);
    CHECK(sol.free_values[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.primal_obj == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("correlation matrix completion") {
    auto p = toy_corr();
    auto sol = sdp_solve(p);
    REQUIRE(sol.status == SdpStatus::optimal);
    CHECK(sol.x_blocks[0](0, 1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("random strictly feasible SDPs satisfy KKT against the dual certificate") {
    std::mt19937 rng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int inst = 0; inst < 50; ++inst) {
        const int n = 3 + int(rng() % 5);    // block size <= 20 overall
        const int m = 2 + int(rng() % 8);
        SdpProblem p;
        p.blocks.push_back({n, BlockKind::psd});
        p.num_con = m;
        p.rhs.assign(m, 0.0);

        // random A_k, strictly feasible primal X0 = I and dual y0, S0 = I
        la::Matrix x0 = la::Matrix::identity(n);
        std::vector<double> y0(m);
        for (int k = 0; k < m; ++k) y0[k] = gauss(rng);
        la::Matrix astar(n, n);
        for (int k = 0; k < m; ++k) {
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    const double v = gauss(rng);
                    p.entries.push_back({k, 0, i, j, v});
                    p.rhs[k] += v * x0(i, j) * (i == j ? 1.0 : 2.0);
                    astar(i, j) += y0[k] * v;
                    if (i != j) astar(j, i) += y0[k] * v;
                }
        }
        // C = A*(y0) - S0 with S0 = I ensures dual strict feasibility
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                p.obj_entries.push_back({-1, 0, i, j, astar(i, j) - (i == j ? 1.0 : 0.0)});

        auto sol = sdp_solve(p);
        REQUIRE(sol.status == SdpStatus::optimal);
        // KKT: primal/dual feasibility and complementarity at the reported point
        CHECK(sol.residuals.primal <= 1e-6);
        CHECK(sol.residuals.dual <= 1e-6);
        CHECK(sol.residuals.gap <= 1e-6);
        // PSD of both X and S
        CHECK(la::sym_min_eigenvalue(sol.x_blocks[0]) >= -1e-8);
        CHECK(la::sym_min_eigenvalue(sol.s_blocks[0]) >= -1e-8);
    }
}

TEST_CASE("weak duality and gap decrease along iterates") {
    auto p = toy_corr();
    SdpOptions opts;
    std::vector<double> gaps;
    int violations = 0;
    int steps = 0;
    opts.iterate_hook = [&](int, double pobj, double dobj, double pinf, double dinf) {
        ++steps;
        // weak duality holds up to the current infeasibility level
        const double slack = 1e-9 + 1e3 * (pinf + dinf);
        CHECK(pobj <= dobj + slack + 1e-6 * std::fabs(dobj));
        gaps.push_back(std::fabs(pobj - dobj));
    };
    auto sol = sdp_solve(p, opts);
    REQUIRE(sol.status == SdpStatus::optimal);
    for (std::size_t i = 1; i < gaps.size(); ++i)
        if (gaps[i] > gaps[i - 1] * 1.0001) ++violations;
    CHECK(violations <= std::max<std::size_t>(1, gaps.size() / 10));
}

TEST_CASE("determinism: identical problems give identical iterates") {
    auto p = toy_corr();
    std::vector<double> trace1, trace2;
    SdpOptions o1, o2;
    o1.iterate_hook = [&](int, double pobj, double dobj, double, double) {
        trace1.push_back(pobj);
        trace1.push_back(dobj);
    };
    o2.iterate_hook = [&](int, double pobj, double dobj, double, double) {
        trace2.push_back(pobj);
        trace2.push_back(dobj);
    };
    auto s1 = sdp_solve(p, o1);
    auto s2 = sdp_solve(p, o2);
    REQUIRE(trace1.size() == trace2.size());
    for (std::size_t i = 0; i < trace1.size(); ++i) CHECK(trace1[i] == trace2[i]);
    for (std::size_t i = 0; i < s1.y.size(); ++i) CHECK(s1.y[i] == s2.y[i]);
}

TEST_CASE("contradictory equalities are declared infeasible") {
    SdpProblem p;
    p.blocks.push_back({1, BlockKind::psd});
    p.num_con = 2;
    p.entries.push_back({0, 0, 0, 0, 1.0});
    p.entries.push_back({1, 0, 0, 0, 1.0});
    p.rhs = {1.0, 2.0};
    auto sol = sdp_solve(p);
    CHECK((sol.status == SdpStatus::infeasible || sol.status == SdpStatus::stalled));
    CHECK(sol.status != SdpStatus::optimal);
}

TEST_CASE("presolve pins zero diagonals and detects dead rows") {
    // G00 = 0 and 2 G01 = 1 cannot hold with G PSD
    SdpProblem p;
    p.blocks.push_back({2, BlockKind::psd});
    p.num_con = 2;
    p.entries.push_back({0, 0, 0, 0, 1.0});
    p.entries.push_back({1, 0, 0, 1, 1.0});
    p.rhs = {0.0, 1.0};
    sdp_presolve(p);
    CHECK(p.structurally_infeasible);
    auto sol = sdp_solve(p);
    CHECK(sol.status == SdpStatus::infeasible);
}

TEST_CASE("negative forced diagonal is infeasible") {
    SdpProblem p;
    p.blocks.push_back({1, BlockKind::psd});
    p.num_con = 1;
    p.entries.push_back({0, 0, 0, 0, 1.0});
    p.rhs = {-1.0};
    sdp_presolve(p);
    CHECK(p.structurally_infeasible);
}

TEST_CASE("sdpa export of the toy problem") {
    auto p = toy_lp();
    const std::string text = export_sdpa(p);
    // golden layout: m, nblocks, sizes (negative = diagonal), rhs, entries
    CHECK(text ==
          "1\n"
          "2\n"
          "-1 -2\n"
          "1\n"
          "0 2 1 1 -1\n"
          "0 2 2 2 1\n"
          "1 1 1 1 -1\n"
          "1 2 1 1 1\n"
          "1 2 2 2 -1\n");
}

TEST_CASE("solution round-trip preserves residuals") {
    auto p = toy_corr();
    auto sol = sdp_solve(p);
    REQUIRE(sol.status == SdpStatus::optimal);
    const std::string doc = export_solution(p, sol);
    auto back = import_solution(doc, p);
    CHECK(back.status == SdpStatus::optimal);
    CHECK(std::fabs(back.residuals.primal - sol.residuals.primal) <= 1e-9);
    CHECK(std::fabs(back.residuals.dual - sol.residuals.dual) <= 1e-9);
    CHECK(back.primal_obj == doctest::Approx(sol.primal_obj).epsilon(1e-9));

    CHECK_THROWS_AS(import_solution(doc.substr(0, doc.size() / 2), p), SdpError);
}

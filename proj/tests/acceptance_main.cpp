// Acceptance suite: runs every top-level criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion.  Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "certify/cert.hpp"
#include "certify/halton.hpp"
#include "certify/pipeline.hpp"

using namespace certify;

namespace {

std::string g_cli;
std::string g_systems;
std::string g_data;
int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int number, const std::string& name, bool pass, double seconds,
            const std::string& detail = "") {
    std::printf("%s  criterion %2d  %-28s  %7.1fs%s%s\n", pass ? "PASS" : "FAIL", number,
                name.c_str(), seconds, detail.empty() ? "" : "  ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    CliResult res;
    const std::string cmd = g_cli + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    while (fgets(buf, sizeof buf, pipe)) res.output += buf;
    const int rc = pclose(pipe);
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return res;
}

bool close_2sf(double value, double printed) {
    if (printed == 0.0) return std::fabs(value) < 1e-10;
    const double ulp = std::pow(10.0, std::floor(std::log10(std::fabs(printed))) - 1);
    return std::fabs(value - printed) <= 0.75 * ulp;
}

bool cert_file_valid(const std::string& path) {
    const std::string text = read_file(path);
    if (text.find("\"verdict\": \"valid\"") != std::string::npos) return true;
    return false;
}

SystemModel load_system(const std::string& name) {
    return parse_system(read_file(g_systems + "/" + name));
}

// ---- criteria ------------------------------------------------------------

void criterion1_taylor_coefficients() {
    Timer t;
    bool ok = true;
    auto model = parse_system(
        "states x1, x2; inputs; x1' = x1*cos(x1 + x2); x2' = 0;"
        "region x1 in [-1, 1]; region x2 in [-1, 1];");
    auto surr = taylor_expand(model, 7);
    const auto& poly = surr.f_poly[0];
    const struct {
        uint32_t a, b;
        double c;
    } wanted[] = {
        {5, 0, 1.0 / 24}, {4, 1, 1.0 / 6},  {3, 2, 1.0 / 4},  {3, 0, -0.5},
        {2, 3, 1.0 / 6},  {2, 1, -1.0},     {1, 4, 1.0 / 24}, {1, 2, -0.5},
        {1, 0, 1.0},
    };
    for (const auto& w : wanted)
        ok = ok && std::fabs(poly.coeff(MultiIndex{w.a, w.b}) - w.c) <= 1e-12;
    ok = ok && poly.term_count() == 9;
    ok = ok && t.seconds() < 1.0;
    report(1, "taylor coefficients", ok, t.seconds());
}

void criterion2_remainder_table() {
    Timer t;
    bool ok = true;
    auto model = load_system("ex1.sys");
    auto surr = taylor_expand(model, 7);
    taylor_remainder_bounds(model, surr, RemainderMode::per_beta, 1);
    const double table[8] = {2.0e-4, 0.0028, 0.0125, 0.0279, 0.0349, 0.0252, 0.0097, 0.0016};
    if (surr.f_rem[1].size() != 8) ok = false;
    for (const auto& rt : surr.f_rem[1]) {
        const double want = table[rt.beta[0]];
        if (std::fabs(rt.bound - want) > 0.10 * want) ok = false;
    }
    ok = ok && t.seconds() < 10.0;
    report(2, "remainder table", ok, t.seconds());
}

void criterion3_bernstein_pendulum() {
    Timer t;
    bool ok = true;
    // shifted-domain convention: sample on [0, 1]
    Expr e = Expr::unary(UnaryOp::neg,
                         Expr::unary(UnaryOp::sin, Expr::binary(BinaryOp::sub, Expr::variable(0),
                                                                Expr::constant(0.5))));
    std::vector<Interval> box{Interval(0.0, 1.0)};
    auto b = bernstein_expand_expr(e, box, {"x1"}, {6});
    ok = ok && close_2sf(b.coeff(MultiIndex{0}), 0.48);
    ok = ok && close_2sf(b.coeff(MultiIndex{1}), -0.91);
    ok = ok && close_2sf(b.coeff(MultiIndex{2}), -0.14);
    ok = ok && close_2sf(b.coeff(MultiIndex{3}), 0.089);
    ok = ok && close_2sf(b.coeff(MultiIndex{4}), 1.9e-3);
    ok = ok && close_2sf(b.coeff(MultiIndex{5}), -7.6e-4);
    ok = ok && std::fabs(b.coeff(MultiIndex{6})) < 1e-12;

    auto model = load_system("pendulum.sys");
    auto surr = bernstein_expand(model, {6, 6}, {});
    bernstein_error_bound(model, surr, BernsteinErrorMode::empirical);
    ok = ok && surr.f_err[1] <= 0.04;
    ok = ok && t.seconds() < 5.0;
    report(3, "bernstein pendulum", ok, t.seconds());
}

void criterion4_bernstein_bivariate() {
    Timer t;
    bool ok = true;
    Expr x1 = Expr::variable(0), x2 = Expr::variable(1);
    Expr e = Expr::binary(BinaryOp::mul, x1,
                          Expr::unary(UnaryOp::cos, Expr::binary(BinaryOp::add, x1, x2)));
    std::vector<Interval> box{Interval(-0.5, 0.5), Interval(-0.5, 0.5)};
    auto b = bernstein_expand_expr(e, box, {"x1", "x2"}, {4, 4});
    const struct {
        uint32_t a, b;
        double c;
    } wanted[] = {
        {4, 3, -9.5e-4}, {4, 1, 0.015},  {3, 4, -7.1e-4}, {3, 2, 0.067},
        {3, 0, -0.18},   {2, 3, 0.044},  {2, 1, -0.7},    {1, 4, 3.6e-3},
        {1, 2, -0.34},   {1, 0, 0.89},   {0, 3, 3.7e-3},  {0, 1, -0.059},
    };
    for (const auto& w : wanted)
        if (!close_2sf(b.coeff(MultiIndex{w.a, w.b}), w.c)) ok = false;

    double worst = 0.0;
    for (int i = 0; i <= 192; ++i)
        for (int j = 0; j <= 192; ++j) {
            std::vector<double> z{-0.5 + i / 192.0, -0.5 + j / 192.0};
            worst = std::max(worst, std::fabs(e.eval(z) - b.eval(z)));
        }
    ok = ok && 1.1 * worst <= 0.04;
    ok = ok && t.seconds() < 10.0;
    report(4, "bernstein bivariate", ok, t.seconds());
}

void criterion5_paper_certificate() {
    Timer t;
    auto model = load_system("motivational.sys");
    Certificate cert;
    cert.kind = CertKind::passivity;
    cert.vars = model.all_vars();
    cert.n = model.n;
    cert.m = model.m;
    cert.p = model.p;
    Polynomial v{model.all_vars()};
    v.add_term(MultiIndex{4, 0}, -0.4581);
    v.add_term(MultiIndex{2, 0}, 1.416);
    cert.storage = v;
    cert.supply = make_supply_passivity(1, 1);
    cert.region = model.region;
    auto rep = validate(cert, model, 10000, 42);
    bool ok = rep.verdict == Verdict::valid && rep.sampled_margin >= -1e-6 &&
              rep.sample_count == 10000;
    ok = ok && t.seconds() < 5.0;
    char detail[80];
    std::snprintf(detail, sizeof detail, "margin %.2e", rep.sampled_margin);
    report(5, "paper certificate validation", ok, t.seconds(), detail);
}

void criterion6_ofp_anchor_and_sweep() {
    Timer t;
    std::string detail;
    bool ok = true;

    auto anchor = run_cli("index " + g_systems + "/motivational.sys --mode ofp --radius 2.47"
                          " --vdeg 6");
    double rho_anchor = std::nan("");
    {
        const auto pos = anchor.output.find("index = ");
        if (pos != std::string::npos) rho_anchor = std::atof(anchor.output.c_str() + pos + 8);
    }
    const bool anchor_ok =
        anchor.exit_code == 0 && rho_anchor >= 0.25 && rho_anchor <= 0.45;
    if (!anchor_ok) ok = false;
    char buf[160];
    std::snprintf(buf, sizeof buf, "rho(2.47)=%.4g%s", rho_anchor,
                  anchor_ok ? "" : " (outside [0.25,0.45])");
    detail = buf;

    auto sweep = run_cli(
        "sweep " + g_systems + "/motivational.sys --mode ofp --vdeg 6 "
        "--radii 0.5,0.75,1.0,1.25,1.5,1.75,2.0,2.25,2.5,2.75,3.0,3.25,3.5,3.75,4.0");
    std::vector<double> radii, indices;
    std::vector<std::string> statuses;
    {
        std::stringstream ss(sweep.output);
        std::string line;
        std::getline(ss, line);  // header
        while (std::getline(ss, line)) {
            if (line.empty()) continue;
            std::stringstream ls(line);
            std::string r, idx, st;
            std::getline(ls, r, ',');
            std::getline(ls, idx, ',');
            std::getline(ls, st, ',');
            if (st.empty()) continue;
            radii.push_back(std::atof(r.c_str()));
            indices.push_back(idx.empty() ? std::nan("") : std::atof(idx.c_str()));
            statuses.push_back(st);
        }
    }
    bool monotone = radii.size() == 15;
    bool positive_small = true;
    bool negative_large = false;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!std::isnan(indices[i])) {
            if (indices[i] > prev + 1e-6) monotone = false;
            prev = indices[i];
        }
        if (radii[i] <= 1.0 && !(indices[i] > 0)) positive_small = false;
    }
    if (!radii.empty() && !std::isnan(indices.back()) && indices.back() < 0)
        negative_large = true;
    if (!monotone || !positive_small || !negative_large) ok = false;
    std::snprintf(buf, sizeof buf, "%s; sweep monotone=%d pos(r<=1)=%d neg(max r)=%d",
                  detail.c_str(), int(monotone), int(positive_small), int(negative_large));
    ok = ok && t.seconds() < 600.0;
    report(6, "ofp anchor and sweep", ok, t.seconds(), buf);
}

void criterion7_end_to_end_stability() {
    Timer t1;
    auto ex1 = run_cli("verify " + g_systems + "/ex1.sys --mode stability --approx taylor"
                       " --order 7 --vdeg 4 --variant ellipsoid --out /tmp/acc_ex1.json");
    const bool ex1_ok =
        ex1.exit_code == 0 && cert_file_valid("/tmp/acc_ex1.json") && t1.seconds() < 300.0;
    const double t_ex1 = t1.seconds();

    Timer t2;
    auto pend = run_cli("verify " + g_systems + "/pendulum.sys --mode stability"
                        " --approx bernstein --mu 6 --vdeg 6 --berr empirical"
                        " --out /tmp/acc_pend.json");
    const bool pend_ok =
        pend.exit_code == 0 && cert_file_valid("/tmp/acc_pend.json") && t2.seconds() < 300.0;

    char detail[120];
    std::snprintf(detail, sizeof detail, "ex1 %.0fs exit %d, pendulum %.0fs exit %d", t_ex1,
                  ex1.exit_code, t2.seconds(), pend.exit_code);
    report(7, "end-to-end stability", ex1_ok && pend_ok, t_ex1 + t2.seconds(), detail);
}

void criterion8_end_to_end_passivity() {
    Timer t;
    auto ex2 = run_cli("verify " + g_systems + "/ex2.sys --mode passivity --approx taylor"
                       " --order 10 --vdeg 10 --variant box --gram-cap 1700 --tol 1e-7"
                       " --out /tmp/acc_ex2.json");
    const bool ok =
        ex2.exit_code == 0 && cert_file_valid("/tmp/acc_ex2.json") && t.seconds() < 600.0;
    char detail[80];
    std::snprintf(detail, sizeof detail, "exit %d", ex2.exit_code);
    report(8, "end-to-end passivity", ok, t.seconds(), detail);
}

void criterion9_property_suites() {
    Timer t;
    bool ok = true;
    std::string failed;

    // interval soundness on 1e5 random point/box pairs
    {
        std::mt19937 rng(71);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Expr x1 = Expr::variable(0), x2 = Expr::variable(1);
        std::vector<Expr> corpus = {
            Expr::binary(BinaryOp::mul, x1,
                         Expr::unary(UnaryOp::cos, Expr::binary(BinaryOp::add, x1, x2))),
            Expr::unary(UnaryOp::tanh, Expr::binary(BinaryOp::sub, Expr::pow(x1, 3), x2)),
            Expr::binary(BinaryOp::mul, Expr::unary(UnaryOp::exp, x2),
                         Expr::unary(UnaryOp::sin, x1)),
        };
        int checked = 0;
        for (int rep = 0; rep < 34 && ok; ++rep) {
            const double a1 = -2 * unif(rng) - 0.01, b1 = 2 * unif(rng) + 0.01;
            const double a2 = -2 * unif(rng) - 0.01, b2 = 2 * unif(rng) + 0.01;
            std::vector<Interval> box{Interval(a1, b1), Interval(a2, b2)};
            for (const auto& e : corpus) {
                const Interval enc = e.eval_interval(box);
                for (int k = 0; k < 1000; ++k) {
                    std::vector<double> z{a1 + (b1 - a1) * unif(rng),
                                          a2 + (b2 - a2) * unif(rng)};
                    const double v = e.eval(z);
                    if (!(enc.lo <= v + 1e-12 && v <= enc.hi + 1e-12)) ok = false;
                    ++checked;
                }
            }
        }
        if (checked < 100000) ok = false;
        if (!ok) failed += " interval-soundness";
    }

    // taylor and bernstein surrogate validity on 1e4 samples each
    {
        bool sub = true;
        auto model = load_system("ex1.sys");
        auto surr = taylor_expand(model, 7);
        taylor_remainder_bounds(model, surr, RemainderMode::per_beta, 1);
        std::mt19937 rng(73);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (int s = 0; s < 10000; ++s) {
            std::vector<double> z{unif(rng), unif(rng)};
            double budget = 0.0;
            for (const auto& rt : surr.f_rem[1])
                budget += rt.bound *
                          std::fabs(std::pow(z[0], rt.beta[0]) * std::pow(z[1], rt.beta[1]));
            if (std::fabs(model.f[1].eval(z) - surr.f_poly[1].eval(z)) > budget + 1e-12)
                sub = false;
        }
        auto pend = load_system("pendulum.sys");
        auto bs = bernstein_expand(pend, {6, 6}, {});
        bernstein_error_bound(pend, bs, BernsteinErrorMode::empirical);
        std::uniform_real_distribution<double> half(-0.5, 0.5);
        for (int s = 0; s < 10000; ++s) {
            std::vector<double> z{half(rng), half(rng)};
            if (std::fabs(pend.f[1].eval(z) - bs.f_poly[1].eval(z)) > bs.f_err[1] + 1e-12)
                sub = false;
        }
        // affine exactness
        auto lin = parse_system("states x1; inputs; x1' = -0.7*x1; region x1 in [-0.5, 0.5];");
        auto ls = bernstein_expand(lin, {5}, {});
        bernstein_error_bound(lin, ls, BernsteinErrorMode::empirical);
        if (ls.f_err[0] != 0.0) sub = false;
        if (std::fabs(ls.f_poly[0].coeff(MultiIndex{1}) + 0.7) > 1e-12) sub = false;
        if (!sub) failed += " surrogate-validity";
        ok = ok && sub;
    }

    // SOS affinity probe
    {
        bool sub = true;
        auto model = load_system("ex1.sys");
        auto surr = taylor_expand(model, 5);
        taylor_remainder_bounds(model, surr, RemainderMode::per_beta, 1);
        SosOptions opts;
        auto prob = build_stability_taylor(surr, model, opts, TaylorVariant::ellipsoid);
        std::mt19937 rng(79);
        std::uniform_real_distribution<double> unif(-2.0, 2.0);
        for (const auto& tgt : prob.targets) {
            auto eval_poly = [&](const std::vector<double>& d) {
                Polynomial acc = tgt.poly.base;
                for (const auto& [sid, coef] : tgt.poly.scalar_terms)
                    acc = acc + coef * d[sid];
                return acc;
            };
            std::vector<double> a(prob.scalars.size()), b(prob.scalars.size()),
                ab(prob.scalars.size()), zero(prob.scalars.size(), 0.0);
            for (std::size_t i = 0; i < a.size(); ++i) {
                a[i] = unif(rng);
                b[i] = unif(rng);
                ab[i] = a[i] + b[i];
            }
            Polynomial diff = (eval_poly(ab) + eval_poly(zero)) - (eval_poly(a) + eval_poly(b));
            for (const auto& [mi, c] : diff.terms())
                if (std::fabs(c) > 1e-9) sub = false;
        }
        if (!sub) failed += " sos-affinity";
        ok = ok && sub;
    }

    // SDP weak duality and KKT on 50 random strictly feasible instances
    {
        bool sub = true;
        std::mt19937 rng(2024);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int inst = 0; inst < 50 && sub; ++inst) {
            const int n = 3 + int(rng() % 5);
            const int m = 2 + int(rng() % 8);
            SdpProblem p;
            p.blocks.push_back({n, BlockKind::psd});
            p.num_con = m;
            p.rhs.assign(m, 0.0);
            la::Matrix astar(n, n);
            std::vector<double> y0(m);
            for (int k = 0; k < m; ++k) y0[k] = gauss(rng);
            for (int k = 0; k < m; ++k)
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j) {
                        const double v = gauss(rng);
                        p.entries.push_back({k, 0, i, j, v});
                        p.rhs[k] += v * (i == j ? 1.0 : 0.0) * (i == j ? 1.0 : 2.0);
                        astar(i, j) += y0[k] * v;
                    }
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    p.obj_entries.push_back({-1, 0, i, j, astar(i, j) - (i == j ? 1.0 : 0.0)});
            SdpOptions o;
            int dual_violations = 0;
            o.iterate_hook = [&](int, double pobj, double dobj, double pinf, double dinf) {
                if (pobj > dobj + 1e-9 + 1e3 * (pinf + dinf) + 1e-6 * std::fabs(dobj))
                    ++dual_violations;
            };
            auto sol = sdp_solve(p, o);
            if (sol.status != SdpStatus::optimal) sub = false;
            if (sol.residuals.primal > 1e-6 || sol.residuals.dual > 1e-6 ||
                sol.residuals.gap > 1e-6)
                sub = false;
            if (la::sym_min_eigenvalue(sol.x_blocks[0]) < -1e-8) sub = false;
            if (dual_violations > 0) sub = false;
        }
        if (!sub) failed += " sdp-kkt";
        ok = ok && sub;
    }

    // SDPA golden-file byte match
    {
        SdpProblem p;
        p.blocks.push_back({1, BlockKind::diagonal});
        p.num_free = 1;
        p.num_con = 1;
        p.entries.push_back({0, 0, 0, 0, -1.0});
        p.free_entries.emplace_back(0, 0, 1.0);
        p.obj_free = {-1.0};
        p.rhs = {1.0};
        const std::string golden = read_file(g_data + "/toy.dat-s");
        if (export_sdpa(p) != golden || golden.empty()) {
            failed += " sdpa-golden";
            ok = false;
        }
    }

    // corrupted error bound is detected as invalid
    {
        bool sub = true;
        auto model = parse_system(
            "states x1; inputs; x1' = -x1 + 0.3*sin(12*x1); region x1 in [-0.5, 0.5];");
        auto surr = bernstein_expand(model, {2}, {});
        bernstein_error_bound(model, surr, BernsteinErrorMode::empirical);
        surr.f_err[0] = 1e-3;  // deliberately shrunken
        SosOptions opts;
        opts.vdeg = 4;
        auto prob = build_stability_bernstein(surr, model, opts);
        auto compiled = compile_to_sdp(prob);
        auto sol = sdp_solve(compiled.sdp);
        if (sol.status != SdpStatus::optimal) {
            sub = false;
        } else {
            auto cert = extract_certificate(prob, compiled, sol, model, CertKind::stability,
                                            std::nullopt, std::nullopt);
            auto rep = validate(cert, model, 10000, 42);
            if (rep.verdict == Verdict::valid) sub = false;
        }
        if (!sub) failed += " corruption-detection";
        ok = ok && sub;
    }

    report(9, "property suites", ok, t.seconds(), failed.empty() ? "" : "failed:" + failed);
}

void criterion10_negative_controls() {
    Timer t;
    bool ok = true;
    std::string detail;
    for (int vdeg : {2, 4, 6}) {
        auto r = run_cli("verify " + g_systems + "/unstable.sys --mode stability --vdeg " +
                         std::to_string(vdeg));
        if (r.exit_code != 2) {
            ok = false;
            detail += " vdeg" + std::to_string(vdeg) + "->exit" + std::to_string(r.exit_code);
        }
    }
    // odd polynomial rejected as a sum of squares
    {
        Polynomial podd({"x"});
        podd.add_term(MultiIndex{1}, 1.0);
        SosProblem prob;
        prob.vars = {"x"};
        prob.groups = {VarGroup::state};
        SosTarget tgt{.name = "odd", .poly = LinPoly({"x"}), .mults = {}};
        tgt.poly.base = podd;
        prob.targets.push_back(std::move(tgt));
        auto compiled = compile_to_sdp(prob);
        if (!compiled.sdp.structurally_infeasible) ok = false;
        if (sdp_solve(compiled.sdp).status != SdpStatus::infeasible) ok = false;
    }
    report(10, "negative controls", ok, t.seconds(), detail);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 4) {
        std::fprintf(stderr, "usage: acceptance <cli-binary> <systems-dir> <data-dir>\n");
        return 2;
    }
    g_cli = argv[1];
    g_systems = argv[2];
    g_data = argv[3];

    criterion1_taylor_coefficients();
    criterion2_remainder_table();
    criterion3_bernstein_pendulum();
    criterion4_bernstein_bivariate();
    criterion5_paper_certificate();
    criterion6_ofp_anchor_and_sweep();
    criterion7_end_to_end_stability();
    criterion8_end_to_end_passivity();
    criterion9_property_suites();
    criterion10_negative_controls();

    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}

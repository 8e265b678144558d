#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "certify/cert.hpp"
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

// certificate wrapper for a storage function quoted without gram data
Certificate bare_certificate(const SystemModel& model, CertKind kind, Polynomial v,
                             std::optional<SupplyRate> supply) {
    Certificate cert;
    cert.kind = kind;
    cert.vars = model.all_vars();
    cert.n = model.n;
    cert.m = model.m;
    cert.p = model.p;
    cert.storage = std::move(v);
    cert.supply = std::move(supply);
    cert.region = model.region;
    return cert;
}

} // namespace

TEST_CASE("quartic storage function of the scalar example validates") {
    auto model = motivational();
    Polynomial v{model.all_vars()};
    v.add_term(MultiIndex{4, 0}, -0.4581);
    v.add_term(MultiIndex{2, 0}, 1.416);
    auto cert = bare_certificate(model, CertKind::passivity, v,
                                 make_supply_passivity(1, 1));
    auto rep = validate(cert, model, 10000, 42);
    CHECK(rep.verdict == Verdict::valid);
    CHECK(rep.sampled_margin >= -1e-6);
    CHECK(rep.coeff_residual == 0.0);
    CHECK(rep.sample_count == 10000);
}

TEST_CASE("sign-flipped storage function is rejected") {
    auto model = parse_system("states x1; inputs; x1' = -x1; region x1 in [-1, 1];");
    Polynomial v{model.all_vars()};
    v.add_term(MultiIndex{2}, -1.0);  // V = -x^2 < 0 away from the origin
    auto cert = bare_certificate(model, CertKind::stability, v, std::nullopt);
    auto rep = validate(cert, model, 2000, 42);
    CHECK(rep.verdict == Verdict::invalid);
    CHECK(rep.sampled_margin < -1e-4);
}

TEST_CASE("zero storage function works for the static passive gain") {
    auto model = parse_system("states; inputs u1; y1 = u1;");
    Polynomial v{model.all_vars()};
    auto cert = bare_certificate(model, CertKind::passivity, v, make_supply_passivity(1, 1));
    auto rep = validate(cert, model, 2000, 42);
    CHECK(rep.verdict == Verdict::valid);
}

TEST_CASE("solved certificate round-trips through json and revalidates identically") {
    auto model = parse_system(
        "states theta, omega; inputs;"
        "theta' = omega; omega' = -sin(theta) - omega;"
        "region theta in [-0.5, 0.5]; region omega in [-0.5, 0.5];");
    RunConfig cfg;
    cfg.mode = "stability";
    cfg.approx = "bernstein";
    cfg.mu = 6;
    cfg.vdeg = 6;
    cfg.berr = "empirical";
    auto res = run_verify(model, cfg);
    REQUIRE(res.exit_code == 0);
    REQUIRE(res.cert.has_value());
    CHECK(res.cert->report.verdict == Verdict::valid);
    CHECK(!res.cert->targets.empty());

    // deserialized certificates validate identically (same margins, verdict)
    Certificate back = certificate_from_json(res.cert_json);
    auto rep = validate(back, model, 10000, 42);
    CHECK(rep.verdict == res.cert->report.verdict);
    CHECK(rep.sampled_margin == res.cert->report.sampled_margin);
    CHECK(rep.coeff_residual ==
          doctest::Approx(res.cert->report.coeff_residual).epsilon(1e-12));

    // serialization itself is byte-stable
    CHECK(certificate_to_json(back) == res.cert_json);
}

TEST_CASE("sampled margins agree between parallel and serial sweeps") {
    auto model = motivational();
    Polynomial v{model.all_vars()};
    v.add_term(MultiIndex{4, 0}, -0.4581);
    v.add_term(MultiIndex{2, 0}, 1.416);
    auto cert = bare_certificate(model, CertKind::passivity, v, make_supply_passivity(1, 1));
    for (uint64_t seed : {42ull, 7ull}) {
        const double a = sampled_margin_parallel(cert, model, 5000, seed);
        const double b = sampled_margin_serial(cert, model, 5000, seed);
        CHECK(a == b);
    }
}

TEST_CASE("ofp certificates stay valid when the claimed index is reduced") {
    auto model = motivational();
    RunConfig cfg;
    cfg.mode = "ofp";
    cfg.radius = 0.5;
    auto res = run_index(model, cfg);
    REQUIRE(res.exit_code == 0);
    const double rho = res.index;
    CHECK(rho > 0.2);

    Certificate cert = *res.cert;
    SystemModel ball = model;
    apply_ball_region(ball, 0.5);
    double prev_margin = -1e9;
    for (double shrink : {0.0, 0.05, 0.1, 0.2}) {
        Certificate weaker = cert;
        weaker.index = rho - shrink;
        weaker.supply->rho = rho - shrink;
        weaker.targets.clear();  // sampling-only check of the weaker claim
        auto rep = validate(weaker, ball, 5000, 42);
        CHECK(rep.sampled_margin >= prev_margin - 1e-12);
        CHECK(rep.verdict == Verdict::valid);
        prev_margin = rep.sampled_margin;
    }
}

TEST_CASE("deliberately shrunken bernstein error bound is caught by sampling") {
    // the true dynamics are unstable at the origin, but a coarse Bernstein
    // surrogate with a falsified error bound looks stable
    auto model = parse_system(
        "states x1; inputs;"
        "x1' = -x1 + 0.3*sin(12*x1);"
        "region x1 in [-0.5, 0.5];");
    auto surr = bernstein_expand(model, {2}, {});
    bernstein_error_bound(model, surr, BernsteinErrorMode::empirical);
    const double honest = surr.f_err[0];
    CHECK(honest > 0.1);  // the coarse surrogate really is this bad

    surr.f_err[0] = 1e-3;  // the lie
    SosOptions opts;
    opts.vdeg = 4;
    auto prob = build_stability_bernstein(surr, model, opts);
    auto compiled = compile_to_sdp(prob);
    auto sol = sdp_solve(compiled.sdp);
    REQUIRE(sol.status == SdpStatus::optimal);  // the surrogate claim goes through

    auto cert = extract_certificate(prob, compiled, sol, model, CertKind::stability,
                                    std::nullopt, std::nullopt);
    cert.region = model.region;
    auto rep = validate(cert, model, 10000, 42);
    CHECK(rep.verdict != Verdict::valid);  // the true dynamics expose it
    CHECK(rep.sampled_margin < -1e-4);
}

TEST_CASE("validation rejects dimension mismatches") {
    auto model = motivational();
    auto other = parse_system("states x1; inputs; x1' = -x1;");
    Polynomial v{model.all_vars()};
    v.add_term(MultiIndex{2, 0}, 1.0);
    auto cert = bare_certificate(model, CertKind::passivity, v, make_supply_passivity(1, 1));
    CHECK_THROWS_AS(validate(cert, other, 100, 42), CertError);
}

TEST_CASE("extract_index demands an objective and an optimal solve") {
    auto model = parse_system("states x1; inputs; x1' = -x1; region x1 in [-1, 1];");
    auto exact = detect_polynomial(model);
    SosOptions opts;
    opts.vdeg = 2;
    auto prob = build_stability_exact(*exact, model, opts);
    auto compiled = compile_to_sdp(prob);
    auto sol = sdp_solve(compiled.sdp);
    REQUIRE(sol.status == SdpStatus::optimal);
    CHECK_THROWS_AS(extract_index(sol, prob), CertError);
}

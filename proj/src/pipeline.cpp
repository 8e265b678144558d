#include "certify/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace certify {

namespace {

la::Matrix parse_matrix(const std::string& text, std::size_t rows, std::size_t cols) {
    la::Matrix m(rows, cols);
    std::stringstream ss(text);
    std::string rowtext;
    std::size_t i = 0;
    while (std::getline(ss, rowtext, ';')) {
        std::stringstream rs(rowtext);
        std::string cell;
        std::size_t j = 0;
        while (std::getline(rs, cell, ',')) {
            if (i >= rows || j >= cols) throw ConfigError("matrix literal too large");
            m(i, j) = std::stod(cell);
            ++j;
        }
        if (j != cols) throw ConfigError("matrix literal has a short row");
        ++i;
    }
    if (i != rows) throw ConfigError("matrix literal has too few rows");
    return m;
}

CertKind kind_of_mode(const std::string& mode) {
    if (mode == "stability") return CertKind::stability;
    if (mode == "dissipativity") return CertKind::dissipativity;
    if (mode == "passivity") return CertKind::passivity;
    if (mode == "ofp") return CertKind::ofp;
    if (mode == "ifp") return CertKind::ifp;
    if (mode == "qsr") return CertKind::qsr;
    if (mode == "l2gain") return CertKind::l2gain;
    throw ConfigError("unknown mode '" + mode + "'");
}

SupplyRate supply_of(const SystemModel& model, const RunConfig& cfg, bool index_decision) {
    const CertKind kind = kind_of_mode(cfg.mode);
    switch (kind) {
        case CertKind::passivity: return make_supply_passivity(model.m, model.p);
        case CertKind::ofp: return make_supply_ofp(model.m, model.p, cfg.rho, index_decision);
        case CertKind::ifp: return make_supply_ifp(model.m, model.p, cfg.nu, index_decision);
        case CertKind::l2gain: return make_supply_l2gain(model.m, model.p, cfg.gamma);
        case CertKind::qsr:
        case CertKind::dissipativity: {
            if (cfg.qsr.empty())
                throw ConfigError("mode '" + cfg.mode + "' needs qsr=Q|S|R matrices");
            std::stringstream ss(cfg.qsr);
            std::string qt, st, rt;
            if (!std::getline(ss, qt, '|') || !std::getline(ss, st, '|') ||
                !std::getline(ss, rt, '|'))
                throw ConfigError("qsr literal must be Q|S|R");
            return make_supply_qsr(parse_matrix(qt, model.p, model.p),
                                   parse_matrix(st, model.p, model.m),
                                   parse_matrix(rt, model.m, model.m));
        }
        case CertKind::stability: break;
    }
    throw ConfigError("stability mode has no supply rate");
}

struct BuildOutput {
    SosProblem prob;
    ApproxKind approx_kind;
    std::string approx_note;
    std::optional<AffineMap> back_map;  // set for canonical-scaled bernstein runs
    SystemModel build_model;            // the model the problem was built against
};

// Scale an origin-centred box model onto the canonical box |x_i| <= 1/2.
SystemModel to_canonical_model(const SystemModel& model, AffineMap& to_canonical) {
    const std::size_t nv = model.n + model.m;
    std::vector<double> scale(nv), offset(nv, 0.0);
    for (std::size_t v = 0; v < nv; ++v) {
        const auto& iv = model.region.box[v];
        if (std::fabs(iv.lo + iv.hi) > 1e-12 * std::max(1.0, iv.width()))
            throw ApproxError("bernstein pipeline requires origin-centred boxes");
        scale[v] = 1.0 / iv.width();
    }
    to_canonical = AffineMap(scale, offset);
    const AffineMap inv = to_canonical.inverse();

    SystemModel scaled = model;
    for (std::size_t i = 0; i < model.n; ++i)
        scaled.f[i] = Expr::binary(BinaryOp::mul, Expr::constant(scale[i]),
                                   model.f[i].substitute_affine(inv));
    for (std::size_t j = 0; j < model.p; ++j)
        scaled.h[j] = model.h[j].substitute_affine(inv);
    for (std::size_t v = 0; v < nv; ++v) scaled.region.box[v] = Interval(-0.5, 0.5);
    if (!model.region.extra_ineqs.empty())
        throw ApproxError("bernstein pipeline requires a pure box region");
    return scaled;
}

std::string pick_approx(const SystemModel& model, const RunConfig& cfg) {
    if (cfg.approx != "auto") return cfg.approx;
    if (detect_polynomial(model)) return "exact";
    return model.region.radius() <= 1.0 ? "taylor" : "bernstein";
}

BuildOutput build_problem(const SystemModel& model, const RunConfig& cfg,
                          bool index_decision) {
    const CertKind kind = kind_of_mode(cfg.mode);
    const bool stability = kind == CertKind::stability;

    SosOptions opts;
    opts.vdeg = cfg.vdeg;
    opts.region_mult_deg = cfg.sdeg;
    // supply rates couple u quadratically through the feedthrough; with a
    // declared input box the boundary-tight cases need quartic multipliers
    if (!stability && model.any_input_declared())
        opts.region_mult_deg = std::max(opts.region_mult_deg, 4);
    opts.error_mult_deg = cfg.edeg;
    opts.lambda = cfg.lambda;

    std::optional<SupplyRate> supply;
    if (!stability) supply = supply_of(model, cfg, index_decision);

    // every component must be interval-evaluable on the declared region
    // (rejects division by zero and log/sqrt domain violations up front)
    for (std::size_t i = 0; i < model.n; ++i) {
        try {
            model.f[i].eval_interval(model.region.box);
        } catch (const IntervalError& e) {
            throw ConfigError("f_" + std::to_string(i + 1) +
                              " is not defined over the region: " + e.what());
        }
    }
    for (std::size_t j = 0; j < model.p; ++j) {
        try {
            model.h[j].eval_interval(model.region.box);
        } catch (const IntervalError& e) {
            throw ConfigError("h_" + std::to_string(j + 1) +
                              " is not defined over the region: " + e.what());
        }
    }

    BuildOutput out;
    out.build_model = model;
    const std::string approx = pick_approx(model, cfg);

    if (approx == "exact") {
        auto exact = detect_polynomial(model);
        if (!exact) throw ConfigError("approx=exact but the dynamics are not polynomial");
        out.approx_kind = ApproxKind::exact_polynomial;
        out.approx_note = "exact polynomial dynamics, zero approximation error";
        out.prob = stability ? build_stability_exact(*exact, model, opts)
                             : build_dissipativity_exact(*exact, model, *supply, opts);
        return out;
    }
    if (approx == "taylor") {
        auto surr = taylor_expand(model, cfg.order);
        taylor_remainder_bounds(
            model, surr,
            cfg.remainder == "uniform" ? RemainderMode::uniform : RemainderMode::per_beta,
            cfg.subdivisions);
        out.approx_kind = ApproxKind::taylor;
        out.approx_note = "taylor order " + std::to_string(cfg.order) + ", " + cfg.remainder +
                          " remainder bounds, " + cfg.variant + " error handling";
        const TaylorVariant variant =
            cfg.variant == "box" ? TaylorVariant::box : TaylorVariant::ellipsoid;
        out.prob = stability ? build_stability_taylor(surr, model, opts, variant)
                             : build_dissipativity_taylor(surr, model, *supply, opts, variant);
        return out;
    }
    if (approx == "bernstein") {
        AffineMap to_canonical;
        SystemModel scaled = to_canonical_model(model, to_canonical);
        out.build_model = scaled;
        std::vector<int> mu(model.n + model.m, cfg.mu);
        auto surr = bernstein_expand(scaled, mu, mu);
        bernstein_error_bound(scaled, surr,
                              cfg.berr == "lipschitz" ? BernsteinErrorMode::lipschitz
                                                      : BernsteinErrorMode::empirical);
        out.approx_kind = ApproxKind::bernstein;
        out.approx_note = "bernstein degree " + std::to_string(cfg.mu) + ", " + cfg.berr +
                          " error bounds, canonical box";
        out.back_map = to_canonical;
        out.prob = stability ? build_stability_bernstein(surr, scaled, opts)
                             : build_dissipativity_bernstein(surr, scaled, *supply, opts);
        return out;
    }
    throw ConfigError("unknown approx '" + approx + "'");
}

SdpOptions solver_options(const RunConfig& cfg) {
    SdpOptions o;
    o.tol = cfg.tol;
    o.max_iter = cfg.max_iter;
    o.psd_dim_cap = cfg.gram_cap;
    o.con_cap = cfg.con_cap;
    return o;
}

std::string diagnostic_json(const std::string& status, const std::string& detail) {
    return std::string("{\n  \"certified\": false,\n  \"status\": \"") + status +
           "\",\n  \"detail\": \"" + detail + "\"\n}\n";
}

const char* status_name(SdpStatus s) {
    switch (s) {
        case SdpStatus::optimal: return "optimal";
        case SdpStatus::infeasible: return "infeasible";
        case SdpStatus::unbounded: return "unbounded";
        case SdpStatus::stalled: return "stalled";
    }
    return "?";
}

RunResult solve_and_certify(const SystemModel& model, const RunConfig& cfg,
                            bool index_decision) {
    const CertKind kind = kind_of_mode(cfg.mode);
    BuildOutput built = build_problem(model, cfg, index_decision);
    auto compiled = compile_to_sdp(built.prob);
    auto sol = sdp_solve(compiled.sdp, solver_options(cfg));

    RunResult res;
    res.solver_status = sol.status;
    if (sol.status != SdpStatus::optimal) {
        res.exit_code = 2;
        res.message = std::string("solver status: ") + status_name(sol.status);
        res.cert_json = diagnostic_json(status_name(sol.status), res.message);
        return res;
    }

    std::optional<SupplyRate> supply;
    if (kind != CertKind::stability) {
        supply = supply_of(model, cfg, index_decision);
        if (index_decision) {
            // freeze the solved index into the supply used for validation
            const double idx = sol.free_values[built.prob.objective_scalar];
            if (supply->kind == SupplyKind::ofp) supply->rho = idx;
            if (supply->kind == SupplyKind::ifp) supply->nu = idx;
        }
    }

    Certificate cert = extract_certificate(built.prob, compiled, sol, built.build_model, kind,
                                           supply, built.back_map);
    // report the certificate against the original model region
    cert.region = model.region;
    cert.approx_kind = built.approx_kind;
    cert.approx_note = built.approx_note;
    if (index_decision) res.index = *cert.index;

    validate(cert, model, cfg.samples, cfg.seed);
    res.cert = cert;
    res.cert_json = certificate_to_json(cert);
    if (cert.report.verdict == Verdict::valid) {
        res.exit_code = 0;
        res.message = "certified";
    } else {
        res.exit_code = 2;
        res.message = std::string("certificate verdict: ") +
                      (cert.report.verdict == Verdict::marginal ? "marginal" : "invalid");
    }
    return res;
}

} // namespace

void apply_ball_region(SystemModel& model, double radius) {
    if (!(radius > 0)) throw ConfigError("radius must be positive");
    model.region.extra_ineqs.clear();
    Polynomial ball{model.all_vars()};
    for (std::size_t v = 0; v < model.n; ++v) {
        model.region.box[v] = Interval(-radius, radius);
        model.region.declared[v] = true;
        MultiIndex mi(model.n + model.m);
        mi[v] = 2;
        ball.add_term(mi, 1.0);
    }
    ball.add_term(MultiIndex(model.n + model.m), -radius * radius);
    model.region.extra_ineqs.push_back(ball);
}

RunResult run_verify(const SystemModel& model_in, const RunConfig& cfg) {
    SystemModel model = model_in;
    if (cfg.radius > 0) apply_ball_region(model, cfg.radius);
    return solve_and_certify(model, cfg, false);
}

RunResult run_index(const SystemModel& model_in, const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    if (cfg.mode != "ofp" && cfg.mode != "ifp")
        throw ConfigError("index mode must be ofp or ifp");
    if (model_in.p < 1) throw ConfigError("index computation needs at least one output");
    // the quadratic-in-u part of the index supply rate needs degree-4
    // region multipliers to act away from the origin
    cfg.sdeg = std::max(cfg.sdeg, 4);
    SystemModel model = model_in;
    if (cfg.radius > 0) apply_ball_region(model, cfg.radius);

    if (!cfg.bisection) {
        RunResult direct = solve_and_certify(model, cfg, true);
        if (direct.exit_code == 0) return direct;
    }

    // bisection fallback on fixed-index feasibility problems
    RunConfig probe = cfg;
    auto feasible = [&](double idx) -> std::optional<RunResult> {
        if (cfg.mode == "ofp")
            probe.rho = idx;
        else
            probe.nu = idx;
        RunResult r = solve_and_certify(model, probe, false);
        if (r.exit_code == 0) return r;
        return std::nullopt;
    };

    // find a certifiable starting value; the fixed-degree relaxation need not
    // be monotone in the index, so walk down from zero
    double lo = 0.0, hi = 10.0;
    std::optional<RunResult> at_lo;
    for (double idx : {0.0, -0.25, -0.5, -1.0, -2.0, -4.0, -7.0, -10.0}) {
        at_lo = feasible(idx);
        if (at_lo) {
            lo = idx;
            break;
        }
        hi = idx;
    }
    if (!at_lo) {
        RunResult res;
        res.exit_code = 2;
        res.message = "index bisection: no certifiable index in [-10, 10]";
        res.cert_json = diagnostic_json("infeasible", res.message);
        return res;
    }
    if (lo == 0.0) {
        // expand upward until infeasible to bracket the maximum
        hi = 0.5;
        while (hi < 10.0) {
            if (auto r = feasible(hi)) {
                at_lo = r;
                lo = hi;
                hi = std::min(10.0, hi * 2.0);
            } else {
                break;
            }
        }
    }
    RunResult best = *at_lo;
    double best_idx = lo;
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        if (auto r = feasible(mid)) {
            best = *r;
            best_idx = mid;
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.index = 0.5 * (lo + hi);
    best.bracket = hi - lo;
    if (best.cert) {
        best.cert->index = best.index;
        best.cert->index_bracket = best.bracket;
        // the validated certificate corresponds to best_idx <= best.index;
        // keep the validated index inside the certificate supply
        if (best.cert->supply) {
            if (cfg.mode == "ofp") best.cert->supply->rho = best_idx;
            else best.cert->supply->nu = best_idx;
        }
        best.cert_json = certificate_to_json(*best.cert);
    }
    return best;
}

std::vector<SweepRow> run_sweep(const SystemModel& model, const RunConfig& cfg) {
    if (cfg.radii.empty()) throw ConfigError("sweep needs a nonempty radius list");
    for (std::size_t i = 1; i < cfg.radii.size(); ++i)
        if (cfg.radii[i] <= cfg.radii[i - 1])
            throw ConfigError("sweep radii must be positive and ascending");
    if (cfg.radii.front() <= 0) throw ConfigError("sweep radii must be positive");

    std::vector<SweepRow> rows(cfg.radii.size());
    for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
        SweepRow& row = rows[i];
        row.radius = cfg.radii[i];
        RunConfig rc = cfg;
        rc.radius = cfg.radii[i];
        try {
            RunResult r = run_index(model, rc);
            if (r.exit_code == 0) {
                row.index = r.index;
                row.status = "ok";
                row.cert_json = r.cert_json;
            } else {
                row.index = std::nan("");
                row.status = "infeasible";
            }
        } catch (const std::exception&) {
            row.index = std::nan("");
            row.status = "error";
        }
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string csv = "r,index,status\n";
    char buf[128];
    for (const auto& row : rows) {
        if (row.status == "ok")
            std::snprintf(buf, sizeof buf, "%.6g,%.9g,%s\n", row.radius, row.index,
                          row.status.c_str());
        else
            std::snprintf(buf, sizeof buf, "%.6g,,%s\n", row.radius, row.status.c_str());
        csv += buf;
    }
    return csv;
}

ExportResult run_export(const SystemModel& model_in, const RunConfig& cfg) {
    SystemModel model = model_in;
    if (cfg.radius > 0) apply_ball_region(model, cfg.radius);
    const bool index_decision = cfg.mode == "ofp" || cfg.mode == "ifp";
    BuildOutput built = build_problem(model, cfg, index_decision);
    auto compiled = compile_to_sdp(built.prob);
    ExportResult out;
    out.sdpa_text = export_sdpa(compiled.sdp);
    out.num_con = compiled.sdp.num_con;
    out.num_free = compiled.sdp.num_free;
    for (const auto& b : compiled.sdp.blocks) out.block_sizes.push_back(b.size);
    return out;
}

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "mode") cfg.mode = value;
        else if (key == "approx") cfg.approx = value;
        else if (key == "order") cfg.order = std::stoi(value);
        else if (key == "mu") cfg.mu = std::stoi(value);
        else if (key == "variant") cfg.variant = value;
        else if (key == "vdeg") cfg.vdeg = std::stoi(value);
        else if (key == "sdeg") cfg.sdeg = std::stoi(value);
        else if (key == "edeg") cfg.edeg = std::stoi(value);
        else if (key == "lambda") cfg.lambda = std::stod(value);
        else if (key == "tol") cfg.tol = std::stod(value);
        else if (key == "max_iter") cfg.max_iter = std::stoi(value);
        else if (key == "gram_cap") cfg.gram_cap = std::stoi(value);
        else if (key == "con_cap") cfg.con_cap = std::stoi(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "samples") cfg.samples = std::stoi(value);
        else if (key == "subdivisions") cfg.subdivisions = std::stoi(value);
        else if (key == "berr") cfg.berr = value;
        else if (key == "remainder") cfg.remainder = value;
        else if (key == "radius") cfg.radius = std::stod(value);
        else if (key == "rho") cfg.rho = std::stod(value);
        else if (key == "nu") cfg.nu = std::stod(value);
        else if (key == "gamma") cfg.gamma = std::stod(value);
        else if (key == "qsr") cfg.qsr = value;
        else if (key == "out") cfg.out = value;
        else if (key == "bisection") cfg.bisection = value == "1" || value == "true";
        else if (key == "radii") {
            cfg.radii.clear();
            std::stringstream ss(value);
            std::string tok;
            while (std::getline(ss, tok, ',')) cfg.radii.push_back(std::stod(tok));
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad value for config key '" + key + "'");
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string trimmed;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) trimmed += c;
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " is not key=value");
        apply_config_line(cfg, trimmed.substr(0, eq), trimmed.substr(eq + 1));
    }
}

} // namespace certify

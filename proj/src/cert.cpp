#include "certify/cert.hpp"
#include "certify/halton.hpp"
#include "certify/parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <algorithm>

namespace certify {

using ordered_json = nlohmann::ordered_json;

const char* cert_kind_name(CertKind k) {
    switch (k) {
        case CertKind::stability: return "stability";
        case CertKind::dissipativity: return "dissipativity";
        case CertKind::passivity: return "passivity";
        case CertKind::ofp: return "ofp";
        case CertKind::ifp: return "ifp";
        case CertKind::qsr: return "qsr";
        case CertKind::l2gain: return "l2gain";
    }
    return "?";
}

CertKind cert_kind_from_name(const std::string& s) {
    for (CertKind k : {CertKind::stability, CertKind::dissipativity, CertKind::passivity,
                       CertKind::ofp, CertKind::ifp, CertKind::qsr, CertKind::l2gain})
        if (s == cert_kind_name(k)) return k;
    throw CertError("unknown certificate kind '" + s + "'");
}

Certificate extract_certificate(const SosProblem& prob, const CompiledSos& compiled,
                                const SdpSolution& sol, const SystemModel& model,
                                CertKind kind, const std::optional<SupplyRate>& supply,
                                const std::optional<AffineMap>& back_map) {
    Certificate cert;
    cert.kind = kind;
    cert.vars = prob.vars;
    cert.n = model.n;
    cert.m = model.m;
    cert.p = model.p;
    cert.supply = supply;
    cert.region = model.region;

    // storage function over the model variables
    const auto model_vars = model.all_vars();
    Polynomial v{std::vector<std::string>(model_vars)};
    for (std::size_t k = 0; k < prob.v_basis.size(); ++k) {
        MultiIndex mi(model_vars.size());
        for (std::size_t i = 0; i < model_vars.size(); ++i) mi[i] = prob.v_basis[k][i];
        v.add_term(mi, sol.free_values[prob.v_scalar_ids[k]]);
    }
    if (back_map) {
        // V was found in canonical coordinates x_c = S x; substitute back
        AffineMap restricted(std::vector<double>(back_map->scale.begin(),
                                                 back_map->scale.begin() + model_vars.size()),
                             std::vector<double>(back_map->offset.begin(),
                                                 back_map->offset.begin() + model_vars.size()));
        v = poly_compose_affine(v, restricted);
    }
    cert.storage = v;

    if (prob.objective_scalar >= 0) cert.index = sol.free_values[prob.objective_scalar];

    for (std::size_t ti = 0; ti < prob.targets.size(); ++ti) {
        const auto& t = prob.targets[ti];
        CertTarget ct;
        ct.name = t.name;
        ct.known = t.poly.base;
        for (const auto& [sid, coef] : t.poly.scalar_terms)
            ct.known = ct.known + coef * sol.free_values[sid];
        for (const auto& use : t.mults) {
            ct.mult_names.push_back(prob.mult_grams[use.gram_id].name);
            ct.mult_factors.push_back(use.factor);
            ct.mult_bases.push_back(prob.mult_grams[use.gram_id].basis);
            ct.mult_grams.push_back(sol.x_blocks[compiled.mult_block[use.gram_id]]);
        }
        ct.gram_basis = compiled.target_basis[ti];
        ct.gram = sol.x_blocks[compiled.target_block[ti]];
        cert.targets.push_back(std::move(ct));
    }
    return cert;
}

double extract_index(const SdpSolution& sol, const SosProblem& prob) {
    if (prob.objective_scalar < 0) throw CertError("problem has no index objective");
    if (sol.status != SdpStatus::optimal)
        throw CertError("extract_index: solver status is not optimal");
    return sol.free_values[prob.objective_scalar];
}

namespace {

struct SampleEval {
    const Certificate& cert;
    const SystemModel& model;
    Halton seq;
    std::size_t dims;
    std::vector<Polynomial> grad_v;

    SampleEval(const Certificate& c, const SystemModel& mdl, uint64_t seed)
        : cert(c), model(mdl), seq(mdl.n + mdl.m, seed), dims(mdl.n + mdl.m) {
        for (std::size_t i = 0; i < model.n; ++i) grad_v.push_back(cert.storage.derivative(i));
    }

    // returns the inequality slack at halton index i, or +inf for rejected points
    double slack(uint64_t i) const {
        std::vector<double> pt(dims);
        for (std::size_t c = 0; c < dims; ++c) {
            const auto& iv = model.region.box[c];
            pt[c] = iv.lo + iv.width() * seq.coordinate(i, c);
        }
        for (const auto& g : model.region.extra_ineqs)
            if (g.eval(pt) > 1e-12) return std::numeric_limits<double>::infinity();

        double margin = cert.storage.eval(pt);  // V >= 0

        // Vdot along the true dynamics
        double vdot = 0.0;
        for (std::size_t i2 = 0; i2 < model.n; ++i2)
            vdot += grad_v[i2].eval(pt) * model.f[i2].eval(pt);

        if (cert.kind == CertKind::stability) {
            margin = std::min(margin, -vdot);
        } else {
            std::vector<double> u(pt.begin() + model.n, pt.end());
            std::vector<double> y(model.p);
            for (std::size_t j = 0; j < model.p; ++j) y[j] = model.h[j].eval(pt);
            const double w =
                cert.supply ? cert.supply->eval(u, y, cert.index.value_or(0.0)) : 0.0;
            margin = std::min(margin, w - vdot);
        }
        return margin;
    }
};

double fold_min(double a, double b) { return a < b ? a : b; }

} // namespace

double sampled_margin_parallel(const Certificate& cert, const SystemModel& model, int samples,
                               uint64_t seed) {
    SampleEval ev(cert, model, seed);
    const uint64_t budget =
        model.region.extra_ineqs.empty() ? uint64_t(samples) : uint64_t(samples) * 8;
    std::vector<uint8_t> accepted(budget, 0);
    std::vector<double> slacks(budget, std::numeric_limits<double>::infinity());
    par::parallel_for(std::size_t(budget), [&](std::size_t i) {
        const double s = ev.slack(i);
        slacks[i] = s;
        accepted[i] = std::isfinite(s) ? 1 : 0;
    });
    double margin = std::numeric_limits<double>::infinity();
    int count = 0;
    for (uint64_t i = 0; i < budget && count < samples; ++i) {
        if (!accepted[i]) continue;
        margin = fold_min(margin, slacks[i]);
        ++count;
    }
    if (count == 0) throw CertError("validation: no sample points inside the region");
    return margin;
}

double sampled_margin_serial(const Certificate& cert, const SystemModel& model, int samples,
                             uint64_t seed) {
    SampleEval ev(cert, model, seed);
    const uint64_t budget =
        model.region.extra_ineqs.empty() ? uint64_t(samples) : uint64_t(samples) * 8;
    double margin = std::numeric_limits<double>::infinity();
    int count = 0;
    for (uint64_t i = 0; i < budget && count < samples; ++i) {
        const double s = ev.slack(i);
        if (!std::isfinite(s)) continue;
        margin = fold_min(margin, s);
        ++count;
    }
    if (count == 0) throw CertError("validation: no sample points inside the region");
    return margin;
}

ValidationReport validate(Certificate& cert, const SystemModel& model, int samples,
                          uint64_t seed) {
    if (cert.n != model.n || cert.m != model.m || cert.p != model.p)
        throw CertError("validate: certificate/model dimension mismatch");

    ValidationReport rep;
    rep.sample_count = samples;

    // (a) algebraic re-check of every stored SOS identity
    double resid = 0.0;
    for (const auto& t : cert.targets) {
        Polynomial lhs = t.known;
        for (std::size_t k = 0; k < t.mult_factors.size(); ++k) {
            const Polynomial s = gram_to_poly(cert.vars, t.mult_bases[k], t.mult_grams[k]);
            lhs = lhs + s * t.mult_factors[k];
            rep.gram_min_eigs.push_back(la::sym_min_eigenvalue(t.mult_grams[k]));
        }
        const Polynomial rhs = gram_to_poly(cert.vars, t.gram_basis, t.gram);
        const Polynomial diff = lhs - rhs;
        for (const auto& [mi, c] : diff.terms()) resid = std::max(resid, std::fabs(c));
        rep.gram_min_eigs.push_back(la::sym_min_eigenvalue(t.gram));
    }
    rep.coeff_residual = resid;

    // V(0) = 0 within 1e-9
    const std::vector<double> origin(model.n + model.m, 0.0);
    const bool v0_ok = std::fabs(cert.storage.eval(origin)) <= 1e-9;

    // (b) sampled inequality margins against the true dynamics
    rep.sampled_margin = sampled_margin_parallel(cert, model, samples, seed);

    double min_eig = 0.0;
    for (double e : rep.gram_min_eigs) min_eig = std::min(min_eig, e);

    const bool ok_resid = rep.coeff_residual <= 1e-6;
    const bool ok_margin = rep.sampled_margin >= -1e-6;
    const bool ok_eig = min_eig >= -1e-8;
    if (v0_ok && ok_resid && ok_margin && ok_eig) {
        rep.verdict = Verdict::valid;
    } else if (v0_ok && rep.coeff_residual <= 1e-4 && rep.sampled_margin >= -1e-4 &&
               min_eig >= -1e-6) {
        rep.verdict = Verdict::marginal;
    } else {
        rep.verdict = Verdict::invalid;
    }
    cert.report = rep;
    return rep;
}

// ---------------------------------------------------------------------------
// JSON serialization (schema_version 1)

namespace {

ordered_json poly_to_json(const Polynomial& p) {
    ordered_json j;
    j["vars"] = p.vars();
    ordered_json monos = ordered_json::array();
    ordered_json coeffs = ordered_json::array();
    for (const auto& [mi, c] : p.terms()) {
        monos.push_back(mi.exp);
        coeffs.push_back(c);
    }
    j["monomials"] = std::move(monos);
    j["coeffs"] = std::move(coeffs);
    return j;
}

Polynomial poly_from_json(const ordered_json& j) {
    Polynomial p{j.at("vars").get<std::vector<std::string>>()};
    const auto& monos = j.at("monomials");
    const auto& coeffs = j.at("coeffs");
    for (std::size_t i = 0; i < monos.size(); ++i) {
        MultiIndex mi;
        mi.exp = monos[i].get<std::vector<uint32_t>>();
        p.add_term(mi, coeffs[i].get<double>());
    }
    return p;
}

ordered_json matrix_to_json(const la::Matrix& m) {
    ordered_json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    ordered_json data = ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
    j["data"] = std::move(data);
    return j;
}

la::Matrix matrix_from_json(const ordered_json& j) {
    la::Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto& data = j.at("data");
    std::size_t k = 0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t c = 0; c < m.cols(); ++c) m(i, c) = data[k++].get<double>();
    return m;
}

ordered_json basis_to_json(const std::vector<MultiIndex>& basis) {
    ordered_json j = ordered_json::array();
    for (const auto& mi : basis) j.push_back(mi.exp);
    return j;
}

std::vector<MultiIndex> basis_from_json(const ordered_json& j) {
    std::vector<MultiIndex> basis;
    for (const auto& e : j) {
        MultiIndex mi;
        mi.exp = e.get<std::vector<uint32_t>>();
        basis.push_back(std::move(mi));
    }
    return basis;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::valid: return "valid";
        case Verdict::marginal: return "marginal";
        case Verdict::invalid: return "invalid";
    }
    return "?";
}

Verdict verdict_from_name(const std::string& s) {
    if (s == "valid") return Verdict::valid;
    if (s == "marginal") return Verdict::marginal;
    return Verdict::invalid;
}

} // namespace

std::string certificate_to_json(const Certificate& cert) {
    ordered_json j;
    j["schema_version"] = cert.schema_version;
    j["kind"] = cert_kind_name(cert.kind);
    j["variables"] = cert.vars;
    j["dims"] = {{"n", cert.n}, {"m", cert.m}, {"p", cert.p}};
    j["V"] = poly_to_json(cert.storage);

    ordered_json mults = ordered_json::array();
    for (const auto& t : cert.targets)
        for (std::size_t k = 0; k < t.mult_names.size(); ++k) {
            ordered_json mj;
            mj["name"] = t.mult_names[k];
            mj["poly"] = poly_to_json(gram_to_poly(cert.vars, t.mult_bases[k], t.mult_grams[k]));
            mults.push_back(std::move(mj));
        }
    j["multipliers"] = std::move(mults);

    if (cert.index)
        j["index"] = *cert.index;
    else
        j["index"] = nullptr;
    if (cert.index_bracket)
        j["index_bracket"] = *cert.index_bracket;

    if (cert.supply) {
        ordered_json sj;
        const auto& s = *cert.supply;
        sj["kind"] = int(s.kind);
        sj["m"] = s.m;
        sj["p"] = s.p;
        sj["Q"] = matrix_to_json(s.Q);
        sj["S"] = matrix_to_json(s.S);
        sj["R"] = matrix_to_json(s.R);
        sj["rho"] = s.rho;
        sj["nu"] = s.nu;
        sj["gamma"] = s.gamma;
        sj["index_is_decision"] = s.index_is_decision;
        j["supply"] = std::move(sj);
    } else {
        j["supply"] = nullptr;
    }

    ordered_json rj;
    ordered_json box = ordered_json::array();
    for (const auto& iv : cert.region.box) box.push_back({iv.lo, iv.hi});
    rj["box"] = std::move(box);
    rj["declared"] = cert.region.declared;
    ordered_json ineqs = ordered_json::array();
    for (const auto& g : cert.region.extra_ineqs) ineqs.push_back(poly_to_json(g));
    rj["ineqs"] = std::move(ineqs);
    j["region"] = std::move(rj);

    j["approx"] = {{"kind", int(cert.approx_kind)}, {"note", cert.approx_note}};

    ordered_json targets = ordered_json::array();
    for (const auto& t : cert.targets) {
        ordered_json tj;
        tj["name"] = t.name;
        tj["known"] = poly_to_json(t.known);
        tj["gram_basis"] = basis_to_json(t.gram_basis);
        tj["gram"] = matrix_to_json(t.gram);
        ordered_json tm = ordered_json::array();
        for (std::size_t k = 0; k < t.mult_names.size(); ++k) {
            ordered_json mj;
            mj["name"] = t.mult_names[k];
            mj["factor"] = poly_to_json(t.mult_factors[k]);
            mj["basis"] = basis_to_json(t.mult_bases[k]);
            mj["gram"] = matrix_to_json(t.mult_grams[k]);
            tm.push_back(std::move(mj));
        }
        tj["mults"] = std::move(tm);
        targets.push_back(std::move(tj));
    }
    j["targets"] = std::move(targets);

    ordered_json rep;
    rep["gram_min_eigs"] = cert.report.gram_min_eigs;
    rep["coeff_residual"] = cert.report.coeff_residual;
    rep["sampled_margin"] = cert.report.sampled_margin;
    rep["samples"] = cert.report.sample_count;
    rep["verdict"] = verdict_name(cert.report.verdict);
    j["report"] = std::move(rep);

    return j.dump(2) + "\n";
}

Certificate certificate_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    Certificate cert;
    cert.schema_version = j.at("schema_version").get<int>();
    if (cert.schema_version != 1) throw CertError("unsupported certificate schema version");
    cert.kind = cert_kind_from_name(j.at("kind").get<std::string>());
    cert.vars = j.at("variables").get<std::vector<std::string>>();
    cert.n = j.at("dims").at("n").get<std::size_t>();
    cert.m = j.at("dims").at("m").get<std::size_t>();
    cert.p = j.at("dims").at("p").get<std::size_t>();
    cert.storage = poly_from_json(j.at("V"));
    if (!j.at("index").is_null()) cert.index = j.at("index").get<double>();
    if (j.contains("index_bracket")) cert.index_bracket = j.at("index_bracket").get<double>();

    if (!j.at("supply").is_null()) {
        const auto& sj = j.at("supply");
        SupplyRate s;
        s.kind = SupplyKind(sj.at("kind").get<int>());
        s.m = sj.at("m").get<std::size_t>();
        s.p = sj.at("p").get<std::size_t>();
        s.Q = matrix_from_json(sj.at("Q"));
        s.S = matrix_from_json(sj.at("S"));
        s.R = matrix_from_json(sj.at("R"));
        s.rho = sj.at("rho").get<double>();
        s.nu = sj.at("nu").get<double>();
        s.gamma = sj.at("gamma").get<double>();
        s.index_is_decision = sj.at("index_is_decision").get<bool>();
        cert.supply = std::move(s);
    }

    const auto& rj = j.at("region");
    for (const auto& b : rj.at("box"))
        cert.region.box.emplace_back(b[0].get<double>(), b[1].get<double>());
    cert.region.declared = rj.at("declared").get<std::vector<bool>>();
    for (const auto& gj : rj.at("ineqs")) cert.region.extra_ineqs.push_back(poly_from_json(gj));

    cert.approx_kind = ApproxKind(j.at("approx").at("kind").get<int>());
    cert.approx_note = j.at("approx").at("note").get<std::string>();

    for (const auto& tj : j.at("targets")) {
        CertTarget t;
        t.name = tj.at("name").get<std::string>();
        t.known = poly_from_json(tj.at("known"));
        t.gram_basis = basis_from_json(tj.at("gram_basis"));
        t.gram = matrix_from_json(tj.at("gram"));
        for (const auto& mj : tj.at("mults")) {
            t.mult_names.push_back(mj.at("name").get<std::string>());
            t.mult_factors.push_back(poly_from_json(mj.at("factor")));
            t.mult_bases.push_back(basis_from_json(mj.at("basis")));
            t.mult_grams.push_back(matrix_from_json(mj.at("gram")));
        }
        cert.targets.push_back(std::move(t));
    }

    const auto& rep = j.at("report");
    cert.report.gram_min_eigs = rep.at("gram_min_eigs").get<std::vector<double>>();
    cert.report.coeff_residual = rep.at("coeff_residual").get<double>();
    cert.report.sampled_margin = rep.at("sampled_margin").get<double>();
    cert.report.sample_count = rep.at("samples").get<int>();
    cert.report.verdict = verdict_from_name(rep.at("verdict").get<std::string>());
    return cert;
}

} // namespace certify

#include "certify/sos.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace certify {

namespace {

// Pad a polynomial over (x, u) onto the full indeterminate list (x, u, errors).
Polynomial lift(const Polynomial& p, const std::vector<std::string>& to_vars) {
    Polynomial out{std::vector<std::string>(to_vars)};
    const std::size_t narrow = p.vars().size();
    for (const auto& [mi, c] : p.terms()) {
        MultiIndex wide(to_vars.size());
        for (std::size_t v = 0; v < narrow; ++v) wide[v] = mi[v];
        out.add_term(wide, c);
    }
    return out;
}

struct ErrorVar {
    std::string name;
    double bound = 0.0;      // true remainder bound (the symbol itself is unit-scaled)
    std::size_t comp = 0;    // component index within f (or h when is_output)
    bool is_output = false;
    Polynomial factor;       // monomial multiplying the symbol, over full vars
    std::size_t var_pos = 0; // position in the full variable list
};

int even_up(int d) { return d % 2 == 0 ? d : d + 1; }

class Assembler {
public:
    Assembler(const SystemModel& model, std::vector<std::string> vars,
              std::vector<VarGroup> groups, const SosOptions& opts)
        : model_(model), opts_(opts) {
        prob_.vars = std::move(vars);
        prob_.groups = std::move(groups);
    }

    SosProblem& prob() { return prob_; }
    const std::vector<std::string>& vars() const { return prob_.vars; }

    Polynomial zero() const { return Polynomial{std::vector<std::string>(prob_.vars)}; }
    Polynomial constant(double c) const {
        return Polynomial::constant(std::vector<std::string>(prob_.vars), c);
    }
    Polynomial var_poly(std::size_t v) const {
        return Polynomial::variable(std::vector<std::string>(prob_.vars), v);
    }

    int add_scalar(const std::string& name) {
        prob_.scalars.push_back({name});
        return int(prob_.scalars.size()) - 1;
    }

    int add_mult(const std::string& name, int degree, bool states_only) {
        // multiplier of polynomial degree `degree`: its Gram basis carries
        // monomials up to half that; over the states, or states and inputs
        const int bdeg = std::max(0, degree / 2);
        std::vector<int> caps(prob_.vars.size(), 0);
        for (std::size_t v = 0; v < model_.n; ++v) caps[v] = bdeg;
        if (!states_only)
            for (std::size_t j = 0; j < model_.m; ++j) caps[model_.n + j] = bdeg;
        auto basis = monomial_basis_box(prob_.vars.size(), bdeg, caps, 0);
        prob_.mult_grams.push_back({name, std::move(basis)});
        return int(prob_.mult_grams.size()) - 1;
    }

    // storage-function candidate over the states, no constant term
    void make_v(int vdeg) {
        std::vector<int> caps(prob_.vars.size(), 0);
        for (std::size_t v = 0; v < model_.n; ++v) caps[v] = vdeg;
        prob_.v_basis = monomial_basis_box(prob_.vars.size(), vdeg, caps, 1);
        for (const auto& mi : prob_.v_basis) {
            std::string nm = "V[";
            bool first = true;
            for (std::size_t v = 0; v < model_.n; ++v) {
                for (uint32_t e = 0; e < mi[v]; ++e) {
                    if (!first) nm += "*";
                    nm += prob_.vars[v];
                    first = false;
                }
            }
            nm += "]";
            prob_.v_scalar_ids.push_back(add_scalar(nm));
        }
    }

    Polynomial phi(double lambda) const {
        Polynomial s = zero();
        for (std::size_t v = 0; v < model_.n; ++v) {
            MultiIndex mi(prob_.vars.size());
            mi[v] = 2;
            s.add_term(mi, lambda);
        }
        return s;
    }

    // region inequalities g <= 0 as polynomials over the full variables
    std::vector<Polynomial> state_region() const {
        std::vector<Polynomial> gs;
        for (std::size_t v = 0; v < model_.n; ++v) {
            gs.push_back(var_poly(v) - constant(model_.region.box[v].hi));
            gs.push_back(constant(model_.region.box[v].lo) - var_poly(v));
        }
        for (const auto& g : model_.region.extra_ineqs) {
            bool input_free = true;
            for (const auto& [mi, c] : g.terms())
                for (std::size_t j = model_.n; j < model_.n + model_.m; ++j)
                    if (mi[j] > 0) input_free = false;
            if (input_free) gs.push_back(lift(g, prob_.vars));
        }
        return gs;
    }

    std::vector<Polynomial> input_region() const {
        std::vector<Polynomial> gs;
        for (std::size_t j = 0; j < model_.m; ++j) {
            if (!model_.region.declared[model_.n + j]) continue;
            gs.push_back(var_poly(model_.n + j) -
                         constant(model_.region.box[model_.n + j].hi));
            gs.push_back(constant(model_.region.box[model_.n + j].lo) -
                         var_poly(model_.n + j));
        }
        for (const auto& g : model_.region.extra_ineqs) {
            bool has_input = false;
            for (const auto& [mi, c] : g.terms())
                for (std::size_t j = model_.n; j < model_.n + model_.m; ++j)
                    if (mi[j] > 0) has_input = true;
            if (has_input) gs.push_back(lift(g, prob_.vars));
        }
        return gs;
    }

    // V(x) - phi1 + sum s1_i g_i  >= 0
    void add_positivity_target(bool with_margin) {
        SosTarget t{.name = "V-positivity", .poly = LinPoly(vars()), .mults = {}};
        for (std::size_t k = 0; k < prob_.v_basis.size(); ++k) {
            Polynomial mono = zero();
            mono.add_term(prob_.v_basis[k], 1.0);
            t.poly.scalar_terms[prob_.v_scalar_ids[k]] = mono;
        }
        if (with_margin) t.poly.base = t.poly.base - phi(opts_.lambda);
        int k = 0;
        for (const auto& g : state_region()) {
            const int id = add_mult("s1;" + std::to_string(++k), opts_.region_mult_deg, true);
            t.mults.push_back({id, g});
        }
        prob_.targets.push_back(std::move(t));
    }

    // -sum_i dV/dx_i f_ext_i (+ w) (+ mults) (- phi2) >= 0
    SosTarget make_dynamic_target(const std::vector<Polynomial>& f_ext) {
        SosTarget t{.name = "dissipation", .poly = LinPoly(vars()), .mults = {}};
        for (std::size_t k = 0; k < prob_.v_basis.size(); ++k) {
            Polynomial coeff = zero();
            Polynomial mono = zero();
            mono.add_term(prob_.v_basis[k], 1.0);
            for (std::size_t i = 0; i < model_.n; ++i) {
                const Polynomial dmono = mono.derivative(i);
                if (dmono.is_zero()) continue;
                coeff = coeff - dmono * f_ext[i];
            }
            t.poly.scalar_terms[prob_.v_scalar_ids[k]] = coeff;
        }
        return t;
    }

    // largest (x, u)-degree of the coefficient multiplying error variable e
    int error_linear_degree(const SosTarget& t, std::size_t epos) const {
        int d = 0;
        auto scan = [&](const Polynomial& p) {
            for (const auto& [mi, c] : p.terms()) {
                if (mi[epos] != 1) continue;
                int nonerr = 0;
                for (std::size_t v = 0; v < prob_.vars.size(); ++v)
                    if (prob_.groups[v] != VarGroup::error) nonerr += int(mi[v]);
                d = std::max(d, nonerr);
            }
        };
        scan(t.poly.base);
        for (const auto& [id, p] : t.poly.scalar_terms) scan(p);
        return d;
    }

    // per-variable degree hull of the same coefficient
    std::vector<int> error_linear_var_degrees(const SosTarget& t, std::size_t epos) const {
        std::vector<int> dv(prob_.vars.size(), 0);
        auto scan = [&](const Polynomial& p) {
            for (const auto& [mi, c] : p.terms()) {
                if (mi[epos] != 1) continue;
                for (std::size_t v = 0; v < prob_.vars.size(); ++v)
                    if (prob_.groups[v] != VarGroup::error)
                        dv[v] = std::max(dv[v], int(mi[v]));
            }
        };
        scan(t.poly.base);
        for (const auto& [id, p] : t.poly.scalar_terms) scan(p);
        return dv;
    }

    int add_mult_capped(const std::string& name, int degree, const std::vector<int>& var_degs) {
        const int bdeg = std::max(0, degree / 2);
        std::vector<int> caps(prob_.vars.size(), 0);
        for (std::size_t v = 0; v < prob_.vars.size(); ++v)
            if (prob_.groups[v] != VarGroup::error)
                caps[v] = std::min(bdeg, (var_degs[v] + 1) / 2);
        auto basis = monomial_basis_box(prob_.vars.size(), bdeg, caps, 0);
        prob_.mult_grams.push_back({name, std::move(basis)});
        return int(prob_.mult_grams.size()) - 1;
    }

    int pure_degree(const SosTarget& t) const {
        int d = 0;
        auto scan = [&](const Polynomial& p) {
            for (const auto& [mi, c] : p.terms()) {
                bool pure = true;
                for (std::size_t v = 0; v < prob_.vars.size(); ++v)
                    if (prob_.groups[v] == VarGroup::error && mi[v] > 0) pure = false;
                if (pure) d = std::max(d, mi.total_degree());
            }
        };
        scan(t.poly.base);
        for (const auto& [id, p] : t.poly.scalar_terms) scan(p);
        return d;
    }

    void attach_error_mults_box(SosTarget& t, const std::vector<ErrorVar>& errs) {
        for (const auto& e : errs) {
            const auto var_degs = error_linear_var_degrees(t, e.var_pos);
            int deg = opts_.error_mult_deg;
            if (deg < 0) deg = even_up(error_linear_degree(t, e.var_pos));
            const std::string tag =
                (e.is_output ? "s4;" : "s2;") + e.name;
            const std::string tag2 =
                (e.is_output ? "s5;" : "s3;") + e.name;
            Polynomial ev = var_poly(e.var_pos);
            // symbols are unit-scaled: + s (e - 1) and + s (-e - 1)
            t.mults.push_back({add_mult_capped(tag, deg, var_degs), ev - constant(1.0)});
            t.mults.push_back({add_mult_capped(tag2, deg, var_degs), -ev - constant(1.0)});
        }
    }

    void attach_error_mults_ellipsoid(SosTarget& t, const std::vector<ErrorVar>& errs) {
        // group by (component, side)
        std::map<std::pair<bool, std::size_t>, std::vector<const ErrorVar*>> comps;
        for (const auto& e : errs) comps[{e.is_output, e.comp}].push_back(&e);
        for (const auto& [key, group] : comps) {
            double radius_sq = 0.0;
            for (const auto* e : group) radius_sq += e->bound * e->bound;
            Polynomial quad = zero();
            int tmax = 0;
            for (const auto* e : group) {
                quad = quad + var_poly(e->var_pos) * var_poly(e->var_pos) *
                                  (e->bound * e->bound / radius_sq);
                tmax = std::max(tmax, error_linear_degree(t, e->var_pos));
            }
            radius_sq = 1.0;
            std::vector<int> var_degs(prob_.vars.size(), 0);
            for (const auto* e : group) {
                const auto dv = error_linear_var_degrees(t, e->var_pos);
                for (std::size_t v = 0; v < dv.size(); ++v)
                    var_degs[v] = std::max(var_degs[v], dv[v]);
            }
            int deg = opts_.error_mult_deg;
            if (deg < 0) {
                const int dpure = pure_degree(t);
                deg = 2;
                while (deg < 64) {
                    const int degc = std::max({dpure, tmax + 1, deg + 2});
                    if (2 * (degc / 2) - 1 >= tmax) break;
                    deg += 2;
                }
            }
            const std::string tag = (key.first ? "s3;" : "s2;") + std::to_string(key.second + 1);
            // + s (sum w e^2 - 1), nonpositive on the weighted unit ellipsoid
            t.mults.push_back({add_mult_capped(tag, deg, var_degs), quad - constant(radius_sq)});
        }
    }

    void attach_region_mults(SosTarget& t, const char* xtag, const char* utag) {
        int k = 0;
        for (const auto& g : state_region())
            t.mults.push_back({add_mult(std::string(xtag) + ";" + std::to_string(++k),
                                        opts_.region_mult_deg, false),
                               g});
        k = 0;
        for (const auto& g : input_region())
            t.mults.push_back({add_mult(std::string(utag) + ";" + std::to_string(++k),
                                        opts_.region_mult_deg, false),
                               g});
    }

private:
    const SystemModel& model_;
    SosOptions opts_;
    SosProblem prob_;
};

// full variable list plus error symbols; returns positions of the error vars
std::vector<std::string> make_vars(const SystemModel& model,
                                   std::vector<ErrorVar>& errs,
                                   std::vector<VarGroup>& groups) {
    std::vector<std::string> vars = model.all_vars();
    groups.assign(vars.size(), VarGroup::state);
    for (std::size_t j = 0; j < model.m; ++j) groups[model.n + j] = VarGroup::input;
    for (auto& e : errs) {
        e.var_pos = vars.size();
        vars.push_back(e.name);
        groups.push_back(VarGroup::error);
    }
    return vars;
}

std::string beta_tag(const MultiIndex& beta, std::size_t nxu) {
    std::string s;
    for (std::size_t v = 0; v < nxu; ++v) {
        if (v) s += "_";
        s += std::to_string(beta[v]);
    }
    return s;
}

std::vector<ErrorVar> taylor_errors(const TaylorSurrogate& surr, std::size_t nxu) {
    std::vector<ErrorVar> errs;
    for (std::size_t i = 0; i < surr.f_rem.size(); ++i)
        for (const auto& rt : surr.f_rem[i]) {
            if (rt.bound <= 0.0) continue;
            ErrorVar e;
            e.name = "r" + std::to_string(i + 1) + "_" + beta_tag(rt.beta, nxu);
            e.bound = rt.bound;
            e.comp = i;
            e.is_output = false;
            errs.push_back(std::move(e));
        }
    for (std::size_t j = 0; j < surr.h_rem.size(); ++j)
        for (const auto& rt : surr.h_rem[j]) {
            if (rt.bound <= 0.0) continue;
            ErrorVar e;
            e.name = "t" + std::to_string(j + 1) + "_" + beta_tag(rt.beta, nxu);
            e.bound = rt.bound;
            e.comp = j;
            e.is_output = true;
            errs.push_back(std::move(e));
        }
    return errs;
}

// f_ext_i = f_poly_i + sum_beta r_{i,beta} x^beta over the full variables
std::vector<Polynomial> taylor_f_ext(const TaylorSurrogate& surr,
                                     std::vector<ErrorVar>& errs,
                                     const std::vector<std::string>& vars,
                                     bool outputs) {
    const auto& polys = outputs ? surr.h_poly : surr.f_poly;
    const auto& rems = outputs ? surr.h_rem : surr.f_rem;
    std::vector<Polynomial> ext;
    for (std::size_t i = 0; i < polys.size(); ++i) ext.push_back(lift(polys[i], vars));
    for (auto& e : errs) {
        if (e.is_output != outputs) continue;
        // find the remainder monomial for this symbol
        const auto& rem = rems[e.comp];
        for (const auto& rt : rem) {
            if (rt.bound != e.bound) continue;
            std::string nm = (outputs ? "t" : "r") + std::to_string(e.comp + 1) + "_" +
                             beta_tag(rt.beta, surr.vars.size());
            if (nm != e.name) continue;
            MultiIndex mono(vars.size());
            for (std::size_t v = 0; v < surr.vars.size(); ++v) mono[v] = rt.beta[v];
            mono[e.var_pos] += 1;
            Polynomial fac{std::vector<std::string>(vars)};
            MultiIndex beta_only(vars.size());
            for (std::size_t v = 0; v < surr.vars.size(); ++v) beta_only[v] = rt.beta[v];
            fac.add_term(beta_only, rt.bound);
            e.factor = fac;
            ext[e.comp].add_term(mono, rt.bound);
            break;
        }
    }
    return ext;
}

SosProblem build_taylor(const TaylorSurrogate& surr, const SystemModel& model,
                        const SupplyRate* supply, const SosOptions& opts,
                        TaylorVariant variant, bool stability) {
    auto errs = taylor_errors(surr, surr.vars.size());
    if (stability)
        for (const auto& e : errs)
            if (e.is_output) throw SosError("stability build with output remainders");
    std::vector<VarGroup> groups;
    auto vars = make_vars(model, errs, groups);

    Assembler as(model, vars, groups, opts);
    as.make_v(opts.vdeg);
    as.add_positivity_target(stability);

    auto f_ext = taylor_f_ext(surr, errs, vars, false);
    auto y_ext = taylor_f_ext(surr, errs, vars, true);

    SosTarget dyn = as.make_dynamic_target(f_ext);
    if (supply) {
        std::vector<Polynomial> u_polys;
        for (std::size_t j = 0; j < model.m; ++j)
            u_polys.push_back(as.var_poly(model.n + j));
        dyn.poly.base = dyn.poly.base + supply->base_poly(y_ext, u_polys);
        if (supply->index_is_decision) {
            const int rho = as.add_scalar(supply->kind == SupplyKind::ifp ? "nu" : "rho");
            dyn.poly.scalar_terms[rho] = supply->index_coeff_poly(y_ext, u_polys);
            as.prob().objective_scalar = rho;
        }
    }
    if (stability) dyn.poly.base = dyn.poly.base - as.phi(opts.lambda);

    if (variant == TaylorVariant::box)
        as.attach_error_mults_box(dyn, errs);
    else
        as.attach_error_mults_ellipsoid(dyn, errs);
    as.attach_region_mults(dyn, stability ? "s4" : "s6", "s7");
    as.prob().targets.push_back(std::move(dyn));
    return std::move(as.prob());
}

std::vector<ErrorVar> bernstein_errors(const BernsteinSurrogate& surr) {
    std::vector<ErrorVar> errs;
    for (std::size_t i = 0; i < surr.f_err.size(); ++i) {
        if (surr.f_err[i] <= 0.0) continue;
        ErrorVar e;
        e.name = "eps" + std::to_string(i + 1);
        e.bound = surr.f_err[i];
        e.comp = i;
        e.is_output = false;
        errs.push_back(std::move(e));
    }
    for (std::size_t j = 0; j < surr.h_err.size(); ++j) {
        if (surr.h_err[j] <= 0.0) continue;
        ErrorVar e;
        e.name = "epsy" + std::to_string(j + 1);
        e.bound = surr.h_err[j];
        e.comp = j;
        e.is_output = true;
        errs.push_back(std::move(e));
    }
    return errs;
}

SosProblem build_bernstein(const BernsteinSurrogate& surr, const SystemModel& model,
                           const SupplyRate* supply, const SosOptions& opts, bool stability) {
    // this build form requires the canonical box
    for (std::size_t v = 0; v < model.region.box.size(); ++v) {
        const auto& iv = model.region.box[v];
        const bool boxed = v < model.n || model.region.declared[v];
        if (boxed && (std::fabs(iv.lo + 0.5) > 1e-9 || std::fabs(iv.hi - 0.5) > 1e-9))
            throw SosError("bernstein build requires the canonical box |x_i| <= 1/2");
    }
    if (!model.region.extra_ineqs.empty())
        throw SosError("bernstein build requires a pure box region");

    auto errs = bernstein_errors(surr);
    std::vector<VarGroup> groups;
    auto vars = make_vars(model, errs, groups);

    Assembler as(model, vars, groups, opts);
    as.make_v(opts.vdeg);
    as.add_positivity_target(true);  // phi1 margin per the Bernstein feasibility program

    std::vector<Polynomial> f_ext, y_ext;
    for (std::size_t i = 0; i < model.n; ++i) f_ext.push_back(lift(surr.f_poly[i], vars));
    for (std::size_t j = 0; j < model.p; ++j) y_ext.push_back(lift(surr.h_poly[j], vars));
    for (auto& e : errs) {
        Polynomial one{std::vector<std::string>(vars)};
        MultiIndex mi(vars.size());
        mi[e.var_pos] = 1;
        if (e.is_output)
            y_ext[e.comp].add_term(mi, e.bound);
        else
            f_ext[e.comp].add_term(mi, e.bound);
        e.factor = one;
    }

    SosTarget dyn = as.make_dynamic_target(f_ext);
    if (supply) {
        std::vector<Polynomial> u_polys;
        for (std::size_t j = 0; j < model.m; ++j)
            u_polys.push_back(as.var_poly(model.n + j));
        dyn.poly.base = dyn.poly.base + supply->base_poly(y_ext, u_polys);
        if (supply->index_is_decision) {
            const int rho = as.add_scalar(supply->kind == SupplyKind::ifp ? "nu" : "rho");
            dyn.poly.scalar_terms[rho] = supply->index_coeff_poly(y_ext, u_polys);
            as.prob().objective_scalar = rho;
        }
    }
    if (stability) dyn.poly.base = dyn.poly.base - as.phi(opts.lambda);

    // epsilon box multipliers (s3/s4 for f errors, s9/s10 for outputs)
    for (const auto& e : errs) {
        const auto var_degs = as.error_linear_var_degrees(dyn, e.var_pos);
        int deg = opts.error_mult_deg;
        if (deg < 0) deg = even_up(as.error_linear_degree(dyn, e.var_pos));
        const std::string lo_tag = (e.is_output ? "s9;" : "s3;") + e.name;
        const std::string hi_tag = (e.is_output ? "s10;" : "s4;") + e.name;
        Polynomial ev = as.var_poly(e.var_pos);
        dyn.mults.push_back({as.add_mult_capped(lo_tag, deg, var_degs), ev - as.constant(1.0)});
        dyn.mults.push_back({as.add_mult_capped(hi_tag, deg, var_degs), -ev - as.constant(1.0)});
    }
    as.attach_region_mults(dyn, "s5", "s7");
    as.prob().targets.push_back(std::move(dyn));
    return std::move(as.prob());
}

SosProblem build_exact(const ExactPolyModel& exact, const SystemModel& model,
                       const SupplyRate* supply, const SosOptions& opts, bool stability) {
    std::vector<ErrorVar> errs;
    std::vector<VarGroup> groups;
    auto vars = make_vars(model, errs, groups);
    Assembler as(model, vars, groups, opts);
    as.make_v(opts.vdeg);
    as.add_positivity_target(stability);

    std::vector<Polynomial> f_ext, y_ext;
    for (const auto& p : exact.f_poly) f_ext.push_back(lift(p, vars));
    for (const auto& p : exact.h_poly) y_ext.push_back(lift(p, vars));

    SosTarget dyn = as.make_dynamic_target(f_ext);
    if (supply) {
        std::vector<Polynomial> u_polys;
        for (std::size_t j = 0; j < model.m; ++j)
            u_polys.push_back(as.var_poly(model.n + j));
        dyn.poly.base = dyn.poly.base + supply->base_poly(y_ext, u_polys);
        if (supply->index_is_decision) {
            const int rho = as.add_scalar(supply->kind == SupplyKind::ifp ? "nu" : "rho");
            dyn.poly.scalar_terms[rho] = supply->index_coeff_poly(y_ext, u_polys);
            as.prob().objective_scalar = rho;
        }
    }
    if (stability) dyn.poly.base = dyn.poly.base - as.phi(opts.lambda);
    as.attach_region_mults(dyn, stability ? "s4" : "s6", "s7");
    as.prob().targets.push_back(std::move(dyn));
    return std::move(as.prob());
}

} // namespace

SosProblem build_stability_taylor(const TaylorSurrogate& surr, const SystemModel& model,
                                  const SosOptions& opts, TaylorVariant variant) {
    if (model.m != 0) throw SosError("stability build requires an unforced system (m = 0)");
    return build_taylor(surr, model, nullptr, opts, variant, true);
}

SosProblem build_dissipativity_taylor(const TaylorSurrogate& surr, const SystemModel& model,
                                      const SupplyRate& supply, const SosOptions& opts,
                                      TaylorVariant variant) {
    if (supply.p > 0 && model.p == 0)
        throw SosError("supply rate references outputs but the model has none");
    return build_taylor(surr, model, &supply, opts, variant, false);
}

SosProblem build_stability_bernstein(const BernsteinSurrogate& surr, const SystemModel& model,
                                     const SosOptions& opts) {
    if (model.m != 0) throw SosError("stability build requires an unforced system (m = 0)");
    return build_bernstein(surr, model, nullptr, opts, true);
}

SosProblem build_dissipativity_bernstein(const BernsteinSurrogate& surr,
                                         const SystemModel& model, const SupplyRate& supply,
                                         const SosOptions& opts) {
    if (supply.p > 0 && model.p == 0)
        throw SosError("supply rate references outputs but the model has none");
    return build_bernstein(surr, model, &supply, opts, false);
}

SosProblem build_stability_exact(const ExactPolyModel& exact, const SystemModel& model,
                                 const SosOptions& opts) {
    if (model.m != 0) throw SosError("stability build requires an unforced system (m = 0)");
    return build_exact(exact, model, nullptr, opts, true);
}

SosProblem build_dissipativity_exact(const ExactPolyModel& exact, const SystemModel& model,
                                     const SupplyRate& supply, const SosOptions& opts) {
    return build_exact(exact, model, &supply, opts, false);
}

std::vector<MultiIndex> target_gram_basis(const SosProblem& prob, const SosTarget& t) {
    const std::size_t nv = prob.vars.size();
    std::vector<int> vmax(nv, 0);
    int totmax = 0;
    int totmin = 1 << 20;
    int errmax = 0;

    auto scan_mono = [&](const MultiIndex& mi) {
        int tot = 0, err = 0;
        for (std::size_t v = 0; v < nv; ++v) {
            vmax[v] = std::max(vmax[v], int(mi[v]));
            tot += int(mi[v]);
            if (prob.groups[v] == VarGroup::error) err += int(mi[v]);
        }
        totmax = std::max(totmax, tot);
        totmin = std::min(totmin, tot);
        errmax = std::max(errmax, err);
    };
    auto scan_poly = [&](const Polynomial& p) {
        for (const auto& [mi, c] : p.terms()) scan_mono(mi);
    };
    scan_poly(t.poly.base);
    for (const auto& [id, p] : t.poly.scalar_terms) scan_poly(p);
    for (const auto& use : t.mults) {
        const auto& basis = prob.mult_grams[use.gram_id].basis;
        // degree hull of (basis + basis + factor)
        std::vector<int> bmax(nv, 0);
        int btot = 0, bmin = 1 << 20;
        for (const auto& w : basis) {
            int tot = 0;
            for (std::size_t v = 0; v < nv; ++v) {
                bmax[v] = std::max(bmax[v], int(w[v]));
                tot += int(w[v]);
            }
            btot = std::max(btot, tot);
            bmin = std::min(bmin, tot);
        }
        for (const auto& [mi, c] : use.factor.terms()) {
            int tot = 0, err = 0;
            for (std::size_t v = 0; v < nv; ++v) {
                vmax[v] = std::max(vmax[v], int(mi[v]) + 2 * bmax[v]);
                tot += int(mi[v]);
                if (prob.groups[v] == VarGroup::error) err += int(mi[v]);
            }
            for (const auto& w : basis) {
                int werr = 0;
                for (std::size_t v = 0; v < nv; ++v)
                    if (prob.groups[v] == VarGroup::error) werr += int(w[v]);
                errmax = std::max(errmax, err + 2 * werr);
            }
            totmax = std::max(totmax, tot + 2 * btot);
            totmin = std::min(totmin, tot + 2 * bmin);
        }
    }
    if (totmin > totmax) totmin = 0;

    std::vector<int> caps(nv);
    for (std::size_t v = 0; v < nv; ++v) caps[v] = vmax[v] / 2;
    auto all = monomial_basis_box(nv, totmax / 2, caps, (totmin + 1) / 2);
    // error-group cap
    const int ecap = errmax / 2;
    std::vector<MultiIndex> out;
    for (auto& mi : all) {
        int err = 0;
        for (std::size_t v = 0; v < nv; ++v)
            if (prob.groups[v] == VarGroup::error) err += int(mi[v]);
        if (err <= ecap) out.push_back(std::move(mi));
    }
    return out;
}

Polynomial gram_to_poly(const std::vector<std::string>& vars,
                        const std::vector<MultiIndex>& basis, const la::Matrix& gram) {
    Polynomial p{std::vector<std::string>(vars)};
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = i; j < basis.size(); ++j) {
            const double v = gram(i, j) * (i == j ? 1.0 : 2.0);
            if (v == 0.0) continue;
            MultiIndex mi(vars.size());
            for (std::size_t k = 0; k < vars.size(); ++k) mi[k] = basis[i][k] + basis[j][k];
            p.add_term(mi, v);
        }
    return p;
}

CompiledSos compile_to_sdp(const SosProblem& prob) {
    CompiledSos out;
    SdpProblem& sdp = out.sdp;

    // blocks: one per target gram, one per multiplier gram
    for (const auto& t : prob.targets) {
        auto basis = target_gram_basis(prob, t);
        if (basis.empty()) {
            // no admissible gram monomials; represent with a 1x1 zero-pinned block
            basis.push_back(MultiIndex(prob.vars.size()));
        }
        out.target_basis.push_back(std::move(basis));
        out.target_block.push_back(int(sdp.blocks.size()));
        sdp.blocks.push_back({int(out.target_basis.back().size()), BlockKind::psd});
    }
    for (const auto& g : prob.mult_grams) {
        out.mult_block.push_back(int(sdp.blocks.size()));
        sdp.blocks.push_back({int(g.basis.size()), BlockKind::psd});
    }

    sdp.num_free = int(prob.scalars.size());
    sdp.obj_free.assign(sdp.num_free, 0.0);
    if (prob.objective_scalar >= 0) sdp.obj_free[prob.objective_scalar] = 1.0;

    // rows keyed (target, monomial)
    std::map<std::pair<int, MultiIndex>, int,
             bool (*)(const std::pair<int, MultiIndex>&, const std::pair<int, MultiIndex>&)>
        row_of(+[](const std::pair<int, MultiIndex>& a, const std::pair<int, MultiIndex>& b) {
            if (a.first != b.first) return a.first < b.first;
            return GrlexLess{}(a.second, b.second);
        });
    auto row = [&](int tgt, const MultiIndex& mono) {
        auto it = row_of.find({tgt, mono});
        if (it != row_of.end()) return it->second;
        const int r = int(row_of.size());
        row_of.emplace(std::make_pair(tgt, mono), r);
        sdp.rhs.push_back(0.0);
        return r;
    };

    std::map<std::tuple<int, int, int, int>, double> acc_entries;   // (row, blk, i, j)
    std::map<std::pair<int, int>, double> acc_free;                 // (row, scalar)

    for (std::size_t ti = 0; ti < prob.targets.size(); ++ti) {
        const auto& t = prob.targets[ti];
        const auto& basis = out.target_basis[ti];
        const int blk = out.target_block[ti];

        // base polynomial fixes the rhs
        for (const auto& [mi, c] : t.poly.base.terms()) sdp.rhs[row(int(ti), mi)] += c;
        // scalar decision terms move to the lhs with negative sign
        for (const auto& [sid, p] : t.poly.scalar_terms)
            for (const auto& [mi, c] : p.terms())
                acc_free[{row(int(ti), mi), sid}] -= c;
        // target gram
        for (std::size_t i = 0; i < basis.size(); ++i)
            for (std::size_t j = i; j < basis.size(); ++j) {
                MultiIndex mono(prob.vars.size());
                for (std::size_t v = 0; v < prob.vars.size(); ++v)
                    mono[v] = basis[i][v] + basis[j][v];
                acc_entries[{row(int(ti), mono), blk, int(i), int(j)}] += 1.0;
            }
        // multipliers enter the lhs, so their gram entries get -factor
        for (const auto& use : t.mults) {
            const auto& mb = prob.mult_grams[use.gram_id].basis;
            const int mblk = out.mult_block[use.gram_id];
            for (std::size_t a = 0; a < mb.size(); ++a)
                for (std::size_t b = a; b < mb.size(); ++b)
                    for (const auto& [fm, fc] : use.factor.terms()) {
                        MultiIndex mono(prob.vars.size());
                        for (std::size_t v = 0; v < prob.vars.size(); ++v)
                            mono[v] = mb[a][v] + mb[b][v] + fm[v];
                        acc_entries[{row(int(ti), mono), mblk, int(a), int(b)}] -= fc;
                    }
        }
    }

    sdp.num_con = int(row_of.size());
    for (const auto& [key, val] : acc_entries) {
        if (val == 0.0) continue;
        const auto& [r, blk, i, j] = key;
        sdp.entries.push_back({r, blk, i, j, val});
    }
    for (const auto& [key, val] : acc_free) {
        if (val == 0.0) continue;
        sdp.free_entries.emplace_back(key.first, key.second, val);
    }
    sdp_presolve(sdp);
    return out;
}

std::string SosProblem::debug_dump() const {
    std::string s = "indeterminates:";
    for (const auto& v : vars) s += " " + v;
    s += "\n";
    for (const auto& t : targets) {
        s += "constraint [" + t.name + "] SOS:\n";
        if (!t.poly.base.is_zero()) s += "  " + t.poly.base.str() + "\n";
        for (const auto& [sid, p] : t.poly.scalar_terms)
            s += "  + " + scalars[sid].name + " * (" + p.str() + ")\n";
        for (const auto& use : t.mults)
            s += "  + " + mult_grams[use.gram_id].name + "(.) * (" + use.factor.str() + ")\n";
    }
    if (objective_scalar >= 0)
        s += "objective: maximize " + scalars[objective_scalar].name + "\n";
    return s;
}

} // namespace certify

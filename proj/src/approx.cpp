#include "certify/approx.hpp"
#include "certify/parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <algorithm>

namespace certify {

namespace {

double factorial(uint32_t k) {
    double r = 1.0;
    for (uint32_t i = 2; i <= k; ++i) r *= double(i);
    return r;
}

double multi_factorial(const MultiIndex& mi) {
    double r = 1.0;
    for (auto e : mi.exp) r *= factorial(e);
    return r;
}

// Cache of D^alpha e, built incrementally one derivative at a time so each
// tree is derived from its immediate parent.
class DerivativeTable {
public:
    explicit DerivativeTable(const Expr& e, std::size_t nvars) : nvars_(nvars) {
        table_.emplace(MultiIndex(nvars), e);
    }

    const Expr& get(const MultiIndex& alpha) {
        auto it = table_.find(alpha);
        if (it != table_.end()) return it->second;
        // find a variable with positive exponent; recurse on the parent
        MultiIndex parent = alpha;
        std::size_t v = 0;
        while (v < nvars_ && parent[v] == 0) ++v;
        parent[v] -= 1;
        const Expr& pe = get(parent);
        auto [ins, ok] = table_.emplace(alpha, pe.diff(v));
        return ins->second;
    }

private:
    std::size_t nvars_;
    std::map<MultiIndex, Expr, GrlexLess> table_;
};

} // namespace

TaylorSurrogate taylor_expand(const SystemModel& model, int order) {
    if (order < 1) throw ApproxError("taylor_expand: order must be >= 1");
    TaylorSurrogate surr;
    surr.order = order;
    surr.vars = model.all_vars();
    const std::size_t nv = surr.vars.size();
    const std::vector<double> origin(nv, 0.0);

    const auto inner = monomial_basis(nv, order - 1);
    const auto boundary = [&] {
        std::vector<MultiIndex> b;
        for (const auto& mi : monomial_basis(nv, order))
            if (mi.total_degree() == order) b.push_back(mi);
        return b;
    }();

    auto expand_component = [&](const Expr& e, Polynomial& out,
                                std::vector<RemainderTerm>& rem) {
        DerivativeTable table(e, nv);
        out = Polynomial(surr.vars);
        for (const auto& alpha : inner) {
            const Expr& d = table.get(alpha);
            if (d.is_const(0.0)) continue;
            const double c = d.eval(origin) / multi_factorial(alpha);
            if (c != 0.0) out.add_term(alpha, c);
        }
        rem.clear();
        for (const auto& beta : boundary) {
            const Expr& d = table.get(beta);
            RemainderTerm t;
            t.beta = beta;
            t.bound = d.is_const(0.0) ? 0.0 : -1.0; // -1 marks "not yet bounded"
            rem.push_back(t);
        }
    };

    surr.f_poly.resize(model.n);
    surr.f_rem.resize(model.n);
    for (std::size_t i = 0; i < model.n; ++i)
        expand_component(model.f[i], surr.f_poly[i], surr.f_rem[i]);
    surr.h_poly.resize(model.p);
    surr.h_rem.resize(model.p);
    for (std::size_t j = 0; j < model.p; ++j)
        expand_component(model.h[j], surr.h_poly[j], surr.h_rem[j]);
    return surr;
}

void taylor_remainder_bounds(const SystemModel& model, TaylorSurrogate& surr,
                             RemainderMode mode, int subdivisions) {
    surr.mode = mode;
    const std::size_t nv = surr.vars.size();
    const auto& box = model.region.box;

    auto fill = [&](const Expr& e, std::vector<RemainderTerm>& rem) {
        DerivativeTable table(e, nv);
        // per-beta: |R_beta| <= sup|D^beta e| / beta!
        std::vector<double> sup(rem.size(), 0.0);
        for (std::size_t r = 0; r < rem.size(); ++r) {
            const Expr& d = table.get(rem[r].beta);
            sup[r] = d.is_const(0.0) ? 0.0 : bound_sup_abs(d, box, subdivisions);
        }
        if (mode == RemainderMode::per_beta) {
            for (std::size_t r = 0; r < rem.size(); ++r)
                rem[r].bound = sup[r] / multi_factorial(rem[r].beta);
        } else {
            // uniform: max over |alpha| = |beta| of sup|D^alpha e|, then /beta!
            const double worst = *std::max_element(sup.begin(), sup.end());
            for (std::size_t r = 0; r < rem.size(); ++r)
                rem[r].bound = worst / multi_factorial(rem[r].beta);
        }
    };

    for (std::size_t i = 0; i < model.n; ++i) fill(model.f[i], surr.f_rem[i]);
    for (std::size_t j = 0; j < model.p; ++j) fill(model.h[j], surr.h_rem[j]);
}

namespace {

// Expanded basis polynomial  C(mu,k) * t^k * (1-t)^(mu-k)  in the coordinate
// of `var`, where t is the shifted position of x in [lo, hi].
Polynomial bernstein_basis_poly(const std::vector<std::string>& vars, std::size_t var,
                                int mu, int k, double lo, double hi) {
    // t = (x - lo) / (hi - lo);  basis = C(mu,k) t^k (1-t)^(mu-k)
    const double w = hi - lo;
    Polynomial t(vars);
    MultiIndex mi(vars.size());
    mi[var] = 1;
    t.add_term(mi, 1.0 / w);
    t.add_term(MultiIndex(vars.size()), -lo / w);
    Polynomial one_minus_t = Polynomial::constant(vars, 1.0) - t;
    Polynomial r = Polynomial::constant(vars, double(binomial(mu, k)));
    for (int i = 0; i < k; ++i) r = r * t;
    for (int i = 0; i < mu - k; ++i) r = r * one_minus_t;
    return r;
}

} // namespace

Polynomial bernstein_expand_expr(const Expr& e, std::span<const Interval> box,
                                 const std::vector<std::string>& vars,
                                 const std::vector<int>& degrees) {
    const std::size_t nv = vars.size();
    if (degrees.size() != nv) throw ApproxError("bernstein: degree list arity mismatch");
    for (int d : degrees)
        if (d < 1) throw ApproxError("bernstein: degrees must be >= 1");

    // Per-variable expanded basis polynomials.
    std::vector<std::vector<Polynomial>> basis(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        basis[v].reserve(degrees[v] + 1);
        for (int k = 0; k <= degrees[v]; ++k)
            basis[v].push_back(bernstein_basis_poly(vars, v, degrees[v], k, box[v].lo, box[v].hi));
    }

    // Tensor grid walk: sample f at (k_j / mu_j) mapped into the box.
    long ngrid = 1;
    for (int d : degrees) ngrid *= (d + 1);

    Polynomial acc{std::vector<std::string>(vars)};
    std::vector<double> pt(nv);
    for (long idx = 0; idx < ngrid; ++idx) {
        long rest = idx;
        for (std::size_t v = 0; v < nv; ++v) {
            const int k = int(rest % (degrees[v] + 1));
            rest /= (degrees[v] + 1);
            pt[v] = box[v].lo + (box[v].hi - box[v].lo) * double(k) / double(degrees[v]);
        }
        const double fval = e.eval(pt);
        if (fval == 0.0) continue;
        rest = idx;
        Polynomial term = Polynomial::constant(vars, fval);
        for (std::size_t v = 0; v < nv; ++v) {
            const int k = int(rest % (degrees[v] + 1));
            rest /= (degrees[v] + 1);
            term = term * basis[v][k];
        }
        acc = acc + term;
    }
    return acc;
}

namespace {

bool is_affine(const Expr& e, const std::vector<std::string>& vars) {
    auto p = e.to_polynomial(vars);
    return p && p->degree() <= 1;
}

} // namespace

BernsteinSurrogate bernstein_expand(const SystemModel& model, const std::vector<int>& mu,
                                    const std::vector<int>& eta,
                                    BernsteinConvention convention) {
    if (!model.region.extra_ineqs.empty())
        throw ApproxError("bernstein_expand: region must be a box");
    BernsteinSurrogate surr;
    surr.vars = model.all_vars();
    surr.convention = convention;
    const std::size_t nv = surr.vars.size();

    // scale-only map into the canonical domain; boxes must be origin-centred
    std::vector<double> scale(nv), offset(nv, 0.0);
    std::vector<Interval> canonical(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        const auto& iv = model.region.box[v];
        if (convention == BernsteinConvention::canonical) {
            if (std::fabs(iv.lo + iv.hi) > 1e-12 * std::max(1.0, iv.width()))
                throw ApproxError("bernstein_expand: box must be centred at the origin");
            scale[v] = 1.0 / iv.width();
            canonical[v] = Interval(-0.5, 0.5);
        } else {
            scale[v] = 1.0 / iv.width();
            offset[v] = -iv.lo / iv.width();
            canonical[v] = Interval(0.0, 1.0);
        }
    }
    surr.to_canonical = AffineMap(scale, offset);

    // dynamics in canonical coordinates: xc' = scale_i * f_i(inverse(xc))
    const AffineMap inv = surr.to_canonical.inverse();

    auto expand = [&](const Expr& e, double out_scale, const std::vector<int>& degs) {
        const Expr scaled = e.substitute_affine(inv);
        Polynomial b = bernstein_expand_expr(scaled, canonical, surr.vars, degs);
        return b * out_scale;
    };

    surr.f_degrees.assign(model.n, mu);
    surr.h_degrees.assign(model.p, eta.empty() ? mu : eta);
    surr.f_poly.resize(model.n);
    surr.h_poly.resize(model.p);
    for (std::size_t i = 0; i < model.n; ++i)
        surr.f_poly[i] = expand(model.f[i], scale[i], surr.f_degrees[i]);
    for (std::size_t j = 0; j < model.p; ++j)
        surr.h_poly[j] = expand(model.h[j], 1.0, surr.h_degrees[j]);
    surr.f_err.assign(model.n, 0.0);
    surr.h_err.assign(model.p, 0.0);
    return surr;
}

void bernstein_error_bound(const SystemModel& model, BernsteinSurrogate& surr,
                           BernsteinErrorMode mode) {
    surr.error_mode = mode;
    const std::size_t nv = surr.vars.size();
    const AffineMap inv = surr.to_canonical.inverse();
    std::vector<Interval> canonical(nv);
    for (std::size_t v = 0; v < nv; ++v)
        canonical[v] = surr.convention == BernsteinConvention::canonical ? Interval(-0.5, 0.5)
                                                                         : Interval(0.0, 1.0);

    auto err_for = [&](const Expr& e, double out_scale, const Polynomial& b,
                       const std::vector<int>& degs) -> double {
        // Bernstein reproduces affine functions exactly.
        if (is_affine(e, surr.vars)) return 0.0;
        const Expr scaled = e.substitute_affine(inv);
        if (mode == BernsteinErrorMode::lipschitz) {
            // (L/2) * sqrt(sum_j 1/mu_j) with L on the canonical (unit) box
            double l = lipschitz_bound(scaled, canonical) * std::fabs(out_scale);
            double s = 0.0;
            std::vector<bool> used(nv, false);
            scaled.collect_vars(used);
            for (std::size_t v = 0; v < nv; ++v)
                if (used[v]) s += 1.0 / double(degs[v]);
            return 0.5 * l * std::sqrt(s);
        }
        // empirical: 1.1 x dense-grid max of |f - b|
        std::vector<bool> used(nv, false);
        scaled.collect_vars(used);
        std::size_t active = 0;
        for (std::size_t v = 0; v < nv; ++v)
            if (used[v]) ++active;
        long per_axis = active == 0 ? 1 : std::max<long>(65, std::lround(std::pow(
                                              double(kMaxCells), 1.0 / double(active))));
        if (active > 0)
            while (std::pow(double(per_axis), double(active)) > double(kMaxCells)) --per_axis;
        long npts = 1;
        for (std::size_t v = 0; v < nv; ++v)
            if (used[v]) npts *= per_axis;

        const double worst = par::parallel_reduce<double>(
            std::size_t(npts), 0.0,
            [&](std::size_t idx) {
                std::vector<double> pt(nv, 0.0);
                std::size_t rest = idx;
                for (std::size_t v = 0; v < nv; ++v) {
                    if (!used[v]) continue;
                    const long k = long(rest % per_axis);
                    rest /= per_axis;
                    pt[v] = canonical[v].lo +
                            canonical[v].width() * double(k) / double(per_axis - 1);
                }
                return std::fabs(out_scale * scaled.eval(pt) - b.eval(pt));
            },
            [](double a, double c) { return a > c ? a : c; });
        return 1.1 * worst;
    };

    for (std::size_t i = 0; i < model.n; ++i)
        surr.f_err[i] = err_for(model.f[i], surr.to_canonical.scale[i], surr.f_poly[i],
                                surr.f_degrees[i]);
    for (std::size_t j = 0; j < model.p; ++j)
        surr.h_err[j] = err_for(model.h[j], 1.0, surr.h_poly[j], surr.h_degrees[j]);
}

std::optional<ExactPolyModel> detect_polynomial(const SystemModel& model) {
    ExactPolyModel out;
    out.vars = model.all_vars();
    for (const auto& e : model.f) {
        auto p = e.to_polynomial(out.vars);
        if (!p) return std::nullopt;
        out.f_poly.push_back(*p);
    }
    for (const auto& e : model.h) {
        auto p = e.to_polynomial(out.vars);
        if (!p) return std::nullopt;
        out.h_poly.push_back(*p);
    }
    return out;
}

namespace {

nlohmann::ordered_json poly_entry(const Polynomial& p) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json monos = nlohmann::ordered_json::array();
    nlohmann::ordered_json coeffs = nlohmann::ordered_json::array();
    for (const auto& [mi, c] : p.terms()) {
        monos.push_back(mi.exp);
        coeffs.push_back(c);
    }
    j["monomials"] = std::move(monos);
    j["coeffs"] = std::move(coeffs);
    return j;
}

} // namespace

std::string approx_to_json(const ApproxModel& approx) {
    nlohmann::ordered_json j;
    switch (approx.kind) {
        case ApproxKind::exact_polynomial: {
            const auto& e = approx.exact();
            j["kind"] = "exact-polynomial";
            j["variables"] = e.vars;
            for (const auto& p : e.f_poly) j["f"].push_back(poly_entry(p));
            for (const auto& p : e.h_poly) j["h"].push_back(poly_entry(p));
            j["f_error_bounds"] = std::vector<double>(e.f_poly.size(), 0.0);
            j["h_error_bounds"] = std::vector<double>(e.h_poly.size(), 0.0);
            break;
        }
        case ApproxKind::taylor: {
            const auto& t = approx.taylor();
            j["kind"] = "taylor";
            j["variables"] = t.vars;
            j["order"] = t.order;
            j["remainder_mode"] = t.mode == RemainderMode::per_beta ? "per-beta" : "uniform";
            j["f"] = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < t.f_poly.size(); ++i) {
                auto comp = poly_entry(t.f_poly[i]);
                nlohmann::ordered_json rem = nlohmann::ordered_json::array();
                for (const auto& rt : t.f_rem[i])
                    rem.push_back({{"beta", rt.beta.exp}, {"bound", rt.bound}});
                comp["remainders"] = std::move(rem);
                j["f"].push_back(std::move(comp));
            }
            j["h"] = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < t.h_poly.size(); ++i) {
                auto comp = poly_entry(t.h_poly[i]);
                nlohmann::ordered_json rem = nlohmann::ordered_json::array();
                for (const auto& rt : t.h_rem[i])
                    rem.push_back({{"beta", rt.beta.exp}, {"bound", rt.bound}});
                comp["remainders"] = std::move(rem);
                j["h"].push_back(std::move(comp));
            }
            break;
        }
        case ApproxKind::bernstein: {
            const auto& b = approx.bernstein();
            j["kind"] = "bernstein";
            j["variables"] = b.vars;
            j["convention"] =
                b.convention == BernsteinConvention::canonical ? "canonical" : "shifted";
            j["error_mode"] =
                b.error_mode == BernsteinErrorMode::lipschitz ? "lipschitz" : "empirical";
            j["degrees_f"] = b.f_degrees;
            j["degrees_h"] = b.h_degrees;
            j["f"] = nlohmann::ordered_json::array();
            for (const auto& p : b.f_poly) j["f"].push_back(poly_entry(p));
            j["h"] = nlohmann::ordered_json::array();
            for (const auto& p : b.h_poly) j["h"].push_back(poly_entry(p));
            j["f_error_bounds"] = b.f_err;
            j["h_error_bounds"] = b.h_err;
            j["canonical_scale"] = b.to_canonical.scale;
            j["canonical_offset"] = b.to_canonical.offset;
            break;
        }
    }
    return j.dump(2) + "\n";
}

} // namespace certify

#include "certify/sdp.hpp"
#include "certify/parallel.hpp"

#include <cmath>
#include <algorithm>
#include <map>
#include <numeric>

namespace certify {

int SdpProblem::total_psd_dim() const {
    int d = 0;
    for (const auto& b : blocks)
        if (b.kind == BlockKind::psd) d += b.size;
    return d;
}

namespace {

struct Ent {
    int blk, p, q;
    double val;
};

// Internal view: diagonal blocks are exploded into 1x1 dense blocks.
struct Layout {
    std::vector<int> bsize;                 // internal sizes
    std::vector<int> first_internal;        // external blk -> first internal blk
    std::vector<std::vector<Ent>> con;      // per-constraint full entry lists
    std::vector<la::Matrix> cmat;           // objective per internal block
    int nblocks() const { return int(bsize.size()); }
};

Layout build_layout(const SdpProblem& p) {
    Layout lay;
    lay.first_internal.resize(p.blocks.size());
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        lay.first_internal[b] = lay.nblocks();
        if (p.blocks[b].kind == BlockKind::psd) {
            lay.bsize.push_back(p.blocks[b].size);
        } else {
            for (int i = 0; i < p.blocks[b].size; ++i) lay.bsize.push_back(1);
        }
    }
    lay.cmat.reserve(lay.nblocks());
    for (int b = 0; b < lay.nblocks(); ++b) lay.cmat.emplace_back(lay.bsize[b], lay.bsize[b]);

    auto map_entry = [&](const SdpEntry& e) -> Ent {
        if (p.blocks[e.blk].kind == BlockKind::psd)
            return Ent{lay.first_internal[e.blk], e.i, e.j, e.val};
        if (e.i != e.j) throw SdpError("off-diagonal entry in a diagonal block");
        return Ent{lay.first_internal[e.blk] + e.i, 0, 0, e.val};
    };

    lay.con.assign(p.num_con, {});
    for (const auto& e : p.entries) {
        if (e.con < 0 || e.con >= p.num_con) throw SdpError("entry constraint out of range");
        const Ent in = map_entry(e);
        lay.con[e.con].push_back(in);
        if (in.p != in.q) lay.con[e.con].push_back(Ent{in.blk, in.q, in.p, in.val});
    }
    for (auto& list : lay.con)
        std::sort(list.begin(), list.end(), [](const Ent& a, const Ent& b) {
            return std::tie(a.blk, a.p, a.q) < std::tie(b.blk, b.p, b.q);
        });
    for (const auto& e : p.obj_entries) {
        const Ent in = map_entry(e);
        lay.cmat[in.blk](in.p, in.q) += in.val;
        if (in.p != in.q) lay.cmat[in.blk](in.q, in.p) += in.val;
    }
    return lay;
}

double trace_prod(const std::vector<Ent>& list, const std::vector<la::Matrix>& mats) {
    double s = 0.0;
    for (const auto& e : list) s += e.val * mats[e.blk](e.q, e.p);
    return s;
}

la::Matrix dense_inverse_from_cholesky(la::Matrix chol) {
    const std::size_t n = chol.rows();
    la::Matrix inv(n, n);
    std::vector<double> col(n);
    for (std::size_t c = 0; c < n; ++c) {
        std::fill(col.begin(), col.end(), 0.0);
        col[c] = 1.0;
        la::cholesky_solve(chol, col);
        for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
    }
    // enforce symmetry against roundoff
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double v = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = inv(j, i) = v;
        }
    return inv;
}

// Largest step alpha in (0, 1] keeping  m + alpha*dm  PSD, via the factored
// generalized eigenvalue bound; falls back to Cholesky bisection.
double max_step(const la::Matrix& m, const la::Matrix& dm) {
    const std::size_t n = m.rows();
    la::Matrix l = m;
    if (la::cholesky(l)) {
        // T = L^-1 dm L^-T
        la::Matrix t = dm;
        // forward solve on columns: L * B = dm  (column-wise)
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = t(i, c);
                for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * t(k, c);
                t(i, c) = s / l(i, i);
            }
        }
        // now solve (L * Z')' : Z = B L^-T  => for each row, forward solve with L
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = t(r, i);
                for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * t(r, k);
                t(r, i) = s / l(i, i);
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const double v = 0.5 * (t(i, j) + t(j, i));
                t(i, j) = t(j, i) = v;
            }
        try {
            const double lmin = la::sym_min_eigenvalue(t);
            if (lmin >= -1e-14) return 1.0;
            return std::min(1.0, -1.0 / lmin);
        } catch (const la::LinalgError&) {
            // fall through to bisection
        }
    }
    return la::max_psd_step(m, dm);
}

// Pack internal (exploded) blocks back into the external block convention:
// diagonal blocks are stored as size x 1 column matrices.
SdpSolution& finalize(SdpSolution& sol, const SdpProblem& p, const Layout& lay,
                      const std::vector<la::Matrix>& x, const std::vector<la::Matrix>& s,
                      const std::vector<double>& y, const std::vector<double>& v,
                      const std::vector<double>* row_scale = nullptr) {
    sol.x_blocks.assign(p.blocks.size(), la::Matrix());
    sol.s_blocks.assign(p.blocks.size(), la::Matrix());
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const int ib = lay.first_internal[b];
        if (p.blocks[b].kind == BlockKind::psd) {
            sol.x_blocks[b] = x[ib];
            sol.s_blocks[b] = s[ib];
        } else {
            sol.x_blocks[b] = la::Matrix(p.blocks[b].size, 1);
            sol.s_blocks[b] = la::Matrix(p.blocks[b].size, 1);
            for (int i = 0; i < p.blocks[b].size; ++i) {
                sol.x_blocks[b](i, 0) = x[ib + i](0, 0);
                sol.s_blocks[b](i, 0) = s[ib + i](0, 0);
            }
        }
    }
    sol.y = y;
    if (row_scale)
        for (std::size_t k = 0; k < sol.y.size(); ++k) sol.y[k] *= (*row_scale)[k];
    sol.free_values = v;
    return sol;
}

} // namespace

void sdp_presolve(SdpProblem& p) {
    // active pattern per constraint, pinned diagonal positions per block
    std::vector<std::vector<char>> pinned(p.blocks.size());
    for (std::size_t b = 0; b < p.blocks.size(); ++b)
        pinned[b].assign(p.blocks[b].size, 0);

    std::vector<std::vector<const SdpEntry*>> rows(p.num_con);
    for (const auto& e : p.entries) rows[e.con].push_back(&e);
    std::vector<char> has_free(p.num_con, 0);
    for (const auto& [con, idx, val] : p.free_entries)
        if (val != 0.0) has_free[con] = 1;

    auto active = [&](const SdpEntry& e) {
        return !pinned[e.blk][e.i] && !pinned[e.blk][e.j];
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (int k = 0; k < p.num_con; ++k) {
            if (has_free[k]) continue;
            double diag_pos = 0, diag_neg = 0;
            int nactive = 0, ndiag = 0;
            const SdpEntry* only = nullptr;
            for (const auto* e : rows[k]) {
                if (!active(*e)) continue;
                ++nactive;
                only = e;
                if (e->i == e->j) {
                    ++ndiag;
                    (e->val > 0 ? diag_pos : diag_neg) += 1;
                }
            }
            const double rhs = p.rhs[k];
            if (nactive == 0) {
                if (std::fabs(rhs) > 1e-12) {
                    p.structurally_infeasible = true;
                    p.infeasibility_note =
                        "constraint " + std::to_string(k) + " has empty support and rhs " +
                        std::to_string(rhs);
                    return;
                }
                continue;
            }
            if (nactive == 1 && only->i == only->j) {
                const double v = rhs / only->val;
                if (v < -1e-12) {
                    p.structurally_infeasible = true;
                    p.infeasibility_note = "constraint " + std::to_string(k) +
                                           " forces a negative PSD diagonal";
                    return;
                }
                if (std::fabs(v) <= 1e-12) {
                    pinned[only->blk][only->i] = 1;
                    changed = true;
                }
                continue;
            }
            if (nactive == ndiag && std::fabs(rhs) <= 1e-12 &&
                (diag_pos == 0 || diag_neg == 0)) {
                // all-diagonal same-sign row summing to zero pins every diagonal
                for (const auto* e : rows[k])
                    if (active(*e)) pinned[e->blk][e->i] = 1;
                changed = true;
            }
        }
    }
}

void sdp_residuals(const SdpProblem& p, SdpSolution& sol) {
    const Layout lay = build_layout(p);
    // internal views of x blocks
    std::vector<la::Matrix> x(lay.nblocks()), s(lay.nblocks());
    int ib = 0;
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        if (p.blocks[b].kind == BlockKind::psd) {
            x[ib] = sol.x_blocks[b];
            if (!sol.s_blocks.empty()) s[ib] = sol.s_blocks[b];
            ++ib;
        } else {
            for (int i = 0; i < p.blocks[b].size; ++i) {
                x[ib] = la::Matrix(1, 1);
                x[ib](0, 0) = sol.x_blocks[b](i, 0);
                if (!sol.s_blocks.empty()) {
                    s[ib] = la::Matrix(1, 1);
                    s[ib](0, 0) = sol.s_blocks[b](i, 0);
                }
                ++ib;
            }
        }
    }

    double bmax = 0.0;
    for (double v : p.rhs) bmax = std::max(bmax, std::fabs(v));
    double prim = 0.0;
    for (int k = 0; k < p.num_con; ++k) {
        double lhs = trace_prod(lay.con[k], x);
        for (const auto& [con, idx, val] : p.free_entries)
            if (con == k) lhs += val * sol.free_values[idx];
        prim = std::max(prim, std::fabs(p.rhs[k] - lhs));
    }
    sol.residuals.primal = prim / (1.0 + bmax);

    double pobj = sol.free_values.empty()
                      ? 0.0
                      : std::inner_product(p.obj_free.begin(), p.obj_free.end(),
                                           sol.free_values.begin(), 0.0);
    for (int b = 0; b < lay.nblocks(); ++b)
        for (std::size_t i = 0; i < x[b].rows(); ++i)
            for (std::size_t j = 0; j < x[b].rows(); ++j)
                pobj += lay.cmat[b](i, j) * x[b](j, i);
    sol.primal_obj = pobj;

    if (!sol.y.empty()) {
        sol.dual_obj =
            std::inner_product(p.rhs.begin(), p.rhs.end(), sol.y.begin(), 0.0);
        // dual residual: C + S - A*(y) blockwise (only when S provided)
        double dmax = 0.0, cmax = 0.0;
        if (!sol.s_blocks.empty()) {
            std::vector<la::Matrix> asum(lay.nblocks());
            for (int b = 0; b < lay.nblocks(); ++b)
                asum[b] = la::Matrix(lay.bsize[b], lay.bsize[b]);
            for (int k = 0; k < p.num_con; ++k)
                for (const auto& e : lay.con[k]) asum[e.blk](e.p, e.q) += sol.y[k] * e.val;
            for (int b = 0; b < lay.nblocks(); ++b)
                for (std::size_t i = 0; i < s[b].rows(); ++i)
                    for (std::size_t j = 0; j < s[b].rows(); ++j) {
                        cmax = std::max(cmax, std::fabs(lay.cmat[b](i, j)));
                        dmax = std::max(dmax, std::fabs(lay.cmat[b](i, j) + s[b](i, j) -
                                                        asum[b](i, j)));
                    }
        }
        double fmax = 0.0, cfmax = 0.0;
        std::vector<double> fty(p.num_free, 0.0);
        for (const auto& [con, idx, val] : p.free_entries) fty[idx] += val * sol.y[con];
        for (int q = 0; q < p.num_free; ++q) {
            cfmax = std::max(cfmax, std::fabs(p.obj_free[q]));
            fmax = std::max(fmax, std::fabs(p.obj_free[q] - fty[q]));
        }
        sol.residuals.dual = std::max(dmax / (1.0 + cmax), fmax / (1.0 + cfmax));
        sol.residuals.gap = std::fabs(sol.primal_obj - sol.dual_obj) /
                            (1.0 + std::fabs(sol.primal_obj) + std::fabs(sol.dual_obj));
    }
}

double sdp_primal_objective(const SdpProblem& p, const SdpSolution& sol) {
    SdpSolution tmp = sol;
    sdp_residuals(p, tmp);
    return tmp.primal_obj;
}

SdpSolution sdp_solve(const SdpProblem& p, const SdpOptions& opts) {
    if (p.num_con < 1) throw SdpError("sdp_solve: need at least one constraint");
    for (const auto& b : p.blocks)
        if (b.size < 1) throw SdpError("sdp_solve: empty block");
    if (p.total_psd_dim() > opts.psd_dim_cap)
        throw SdpError("sdp_solve: total PSD dimension " + std::to_string(p.total_psd_dim()) +
                       " exceeds cap " + std::to_string(opts.psd_dim_cap));
    if (p.num_con > opts.con_cap)
        throw SdpError("sdp_solve: constraint count exceeds cap");

    SdpSolution sol;
    sol.y.assign(p.num_con, 0.0);
    sol.free_values.assign(p.num_free, 0.0);

    {
        SdpProblem probe = p;
        if (!probe.structurally_infeasible) sdp_presolve(probe);
        if (probe.structurally_infeasible) {
            sol.status = SdpStatus::infeasible;
            return sol;
        }
    }

    Layout lay = build_layout(p);
    const int nb = lay.nblocks();
    const int m = p.num_con;
    const int nf = p.num_free;

    // row equilibration: divide each constraint by its largest coefficient
    std::vector<double> row_scale(m, 1.0);
    {
        std::vector<double> rmax(m, 0.0);
        for (int k = 0; k < m; ++k)
            for (const auto& e : lay.con[k]) rmax[k] = std::max(rmax[k], std::fabs(e.val));
        for (const auto& [con, idx, val] : p.free_entries)
            rmax[con] = std::max(rmax[con], std::fabs(val));
        for (int k = 0; k < m; ++k) row_scale[k] = rmax[k] > 0 ? 1.0 / rmax[k] : 1.0;
        for (int k = 0; k < m; ++k)
            for (auto& e : lay.con[k]) e.val *= row_scale[k];
    }
    std::vector<double> rhs(p.rhs);
    for (int k = 0; k < m; ++k) rhs[k] *= row_scale[k];

    double bmax = 0.0;
    for (double v : rhs) bmax = std::max(bmax, std::fabs(v));
    const double tau = 1.0 + bmax;

    std::vector<la::Matrix> x(nb), s(nb);
    int ntot = 0;
    for (int b = 0; b < nb; ++b) {
        x[b] = la::Matrix::identity(lay.bsize[b], tau);
        s[b] = la::Matrix::identity(lay.bsize[b], tau);
        ntot += lay.bsize[b];
    }
    std::vector<double> y(m, 0.0), v(nf, 0.0);

    // free-variable coefficient matrix F (m x nf), dense (nf is small)
    la::Matrix fmat(m, std::max(nf, 1));
    for (const auto& [con, idx, val] : p.free_entries)
        fmat(con, idx) += val * row_scale[con];

    double cmax = 0.0;
    for (int b = 0; b < nb; ++b)
        for (std::size_t i = 0; i < lay.cmat[b].rows(); ++i)
            for (std::size_t j = 0; j < lay.cmat[b].rows(); ++j)
                cmax = std::max(cmax, std::fabs(lay.cmat[b](i, j)));
    double cfmax = 0.0;
    for (double q : p.obj_free) cfmax = std::max(cfmax, std::fabs(q));
    // pure feasibility problem: a PSD X meeting the equalities is already the
    // answer, so the duality gap plays no role in the stopping test
    const bool feasibility_mode = cmax == 0.0 && cfmax == 0.0;

    int stagnant = 0;
    double best_prim = 1e300;

    auto block_mul = [](const la::Matrix& a, const la::Matrix& b) { return la::matmul(a, b); };

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        // --- S^{-1} and residuals ---
        std::vector<la::Matrix> schol(nb), sinv(nb);
        for (int b = 0; b < nb; ++b) {
            schol[b] = s[b];
            if (!la::cholesky(schol[b])) {
                sol.status = SdpStatus::stalled;
                sdp_residuals(p, finalize(sol, p, lay, x, s, y, v, &row_scale));
                return sol;
            }
            sinv[b] = dense_inverse_from_cholesky(schol[b]);
        }

        std::vector<double> rp(m);
        par::parallel_for(std::size_t(m), [&](std::size_t k) {
            double lhs = trace_prod(lay.con[k], x);
            for (int q = 0; q < nf; ++q) lhs += fmat(k, q) * v[q];
            rp[k] = rhs[k] - lhs;
        });

        std::vector<la::Matrix> rd(nb);  // Rd = C + S - A*(y)
        for (int b = 0; b < nb; ++b) {
            rd[b] = lay.cmat[b];
            for (std::size_t i = 0; i < rd[b].rows(); ++i)
                for (std::size_t j = 0; j < rd[b].rows(); ++j) rd[b](i, j) += s[b](i, j);
        }
        for (int k = 0; k < m; ++k)
            for (const auto& e : lay.con[k]) rd[e.blk](e.p, e.q) -= y[k] * e.val;

        std::vector<double> rf(nf, 0.0);
        for (int q = 0; q < nf; ++q) {
            double fy = 0.0;
            for (int k = 0; k < m; ++k) fy += fmat(k, q) * y[k];
            rf[q] = p.obj_free[q] - fy;
        }

        double mu = 0.0;
        for (int b = 0; b < nb; ++b)
            for (std::size_t i = 0; i < x[b].rows(); ++i)
                for (std::size_t j = 0; j < x[b].rows(); ++j) mu += x[b](i, j) * s[b](j, i);
        mu /= double(ntot);

        double pobj = 0.0;
        for (int b = 0; b < nb; ++b)
            for (std::size_t i = 0; i < x[b].rows(); ++i)
                for (std::size_t j = 0; j < x[b].rows(); ++j)
                    pobj += lay.cmat[b](i, j) * x[b](j, i);
        for (int q = 0; q < nf; ++q) pobj += p.obj_free[q] * v[q];
        const double dobj = std::inner_product(rhs.begin(), rhs.end(), y.begin(), 0.0);

        double prim_inf = 0.0;
        for (double r : rp) prim_inf = std::max(prim_inf, std::fabs(r));
        prim_inf /= (1.0 + bmax);
        double dual_inf = 0.0;
        for (int b = 0; b < nb; ++b)
            for (std::size_t i = 0; i < rd[b].rows(); ++i)
                for (std::size_t j = 0; j < rd[b].rows(); ++j)
                    dual_inf = std::max(dual_inf, std::fabs(rd[b](i, j)));
        dual_inf /= (1.0 + cmax);
        for (int q = 0; q < nf; ++q)
            dual_inf = std::max(dual_inf, std::fabs(rf[q]) / (1.0 + cfmax));
        const double gap = std::fabs(pobj - dobj) / (1.0 + std::fabs(pobj) + std::fabs(dobj));

        if (opts.iterate_hook) opts.iterate_hook(iter, pobj, dobj, prim_inf, dual_inf);
        if (opts.trace)
            std::fprintf(stderr, "it %3d  mu %.2e  gap %.2e  pinf %.2e  dinf %.2e\n", iter, mu,
                         gap, prim_inf, dual_inf);

        const bool converged = feasibility_mode
                                   ? (prim_inf <= opts.tol && mu <= 1e-4 * (1.0 + bmax))
                                   : (prim_inf <= opts.tol && dual_inf <= opts.tol &&
                                      gap <= opts.tol);
        if (converged) {
            sol.status = SdpStatus::optimal;
            sol.iterations = iter;
            finalize(sol, p, lay, x, s, y, v, &row_scale);
            sdp_residuals(p, sol);
            return sol;
        }

        // divergence heuristic: infeasible problems push the dual unbounded
        if (std::fabs(dobj) > 1e8 && prim_inf > 10 * opts.tol) {
            if (prim_inf > 0.9 * best_prim) ++stagnant;
            if (stagnant >= 20) {
                sol.status = SdpStatus::infeasible;
                sol.iterations = iter;
                finalize(sol, p, lay, x, s, y, v, &row_scale);
                sdp_residuals(p, sol);
                return sol;
            }
        }
        if (pobj > 1e8 && dual_inf > 10 * opts.tol) {
            sol.status = SdpStatus::unbounded;
            sol.iterations = iter;
            finalize(sol, p, lay, x, s, y, v, &row_scale);
            sdp_residuals(p, sol);
            return sol;
        }
        best_prim = std::min(best_prim, prim_inf);

        // --- Schur complement M_kl = sum_b tr(A_k X A_l S^{-1}) ---
        la::Matrix schur(m, m);
        par::parallel_for(std::size_t(m), [&](std::size_t k) {
            for (std::size_t l = k; l < std::size_t(m); ++l) {
                double acc = 0.0;
                const auto& ek = lay.con[k];
                const auto& el = lay.con[l];
                std::size_t ak = 0, al = 0;
                while (ak < ek.size() && al < el.size()) {
                    if (ek[ak].blk < el[al].blk) {
                        ++ak;
                    } else if (ek[ak].blk > el[al].blk) {
                        ++al;
                    } else {
                        const int blk = ek[ak].blk;
                        std::size_t bk = ak, bl = al;
                        while (bk < ek.size() && ek[bk].blk == blk) ++bk;
                        while (bl < el.size() && el[bl].blk == blk) ++bl;
                        const auto& xm = x[blk];
                        const auto& si = sinv[blk];
                        for (std::size_t ik = ak; ik < bk; ++ik)
                            for (std::size_t il = al; il < bl; ++il)
                                acc += ek[ik].val * el[il].val * xm(ek[ik].q, el[il].p) *
                                       si(el[il].q, ek[ik].p);
                        ak = bk;
                        al = bl;
                    }
                }
                schur(k, l) = acc;
                schur(l, k) = acc;
            }
        });

        la::Matrix mchol = schur;
        double ridge = 0.0;
        {
            double dmax = 0.0;
            for (int k = 0; k < m; ++k) dmax = std::max(dmax, schur(k, k));
            double try_ridge = dmax * 1e-14;
            while (!la::cholesky(mchol)) {
                ridge = std::max(try_ridge, ridge * 10);
                try_ridge = ridge * 10;
                mchol = schur;
                for (int k = 0; k < m; ++k) mchol(k, k) += ridge;
                if (ridge > dmax * 1e-4) {
                    sol.status = SdpStatus::stalled;
                    sol.iterations = iter;
                    finalize(sol, p, lay, x, s, y, v, &row_scale);
                    sdp_residuals(p, sol);
                    return sol;
                }
            }
        }

        // W = M^{-1} F and small free-variable Schur complement
        la::Matrix w(m, std::max(nf, 1));
        la::Matrix gchol(std::max(nf, 1), std::max(nf, 1));
        if (nf > 0) {
            for (int k = 0; k < m; ++k)
                for (int q = 0; q < nf; ++q) w(k, q) = fmat(k, q);
            la::cholesky_solve_many(mchol, w);
            la::Matrix g(nf, nf);
            for (int a = 0; a < nf; ++a)
                for (int c = 0; c < nf; ++c) {
                    double acc = 0.0;
                    for (int k = 0; k < m; ++k) acc += fmat(k, a) * w(k, c);
                    g(a, c) = acc;
                }
            for (int a = 0; a < nf; ++a) g(a, a) += 1e-13 * (1.0 + g(a, a));
            gchol = g;
            if (!la::cholesky(gchol)) {
                sol.status = SdpStatus::stalled;
                sol.iterations = iter;
                finalize(sol, p, lay, x, s, y, v);
                sdp_residuals(p, sol);
                return sol;
            }
        }

        // one Newton solve for a given sigma*mu and corrector term K = dXa dSa
        auto newton = [&](double sigmu, const std::vector<la::Matrix>* corr,
                          std::vector<double>& dy, std::vector<double>& dv,
                          std::vector<la::Matrix>& dx, std::vector<la::Matrix>& ds) {
            std::vector<double> h(m);
            // G_b = X Rd S^{-1} (+ corr S^{-1})
            std::vector<la::Matrix> gblk(nb);
            for (int b = 0; b < nb; ++b) {
                la::Matrix t = block_mul(rd[b], sinv[b]);
                gblk[b] = block_mul(x[b], t);
                if (corr) {
                    la::Matrix t2 = block_mul((*corr)[b], sinv[b]);
                    for (std::size_t i = 0; i < gblk[b].rows(); ++i)
                        for (std::size_t j = 0; j < gblk[b].rows(); ++j)
                            gblk[b](i, j) -= t2(i, j);
                }
            }
            par::parallel_for(std::size_t(m), [&](std::size_t k) {
                double acc = -rp[k];
                for (const auto& e : lay.con[k]) {
                    acc += sigmu * e.val * sinv[e.blk](e.q, e.p);
                    acc -= e.val * x[e.blk](e.q, e.p);
                    acc += e.val * gblk[e.blk](e.q, e.p);
                }
                h[k] = acc;
            });

            dy.assign(m, 0.0);
            dv.assign(nf, 0.0);
            // block solve of [M -F; F' 0] [dy; dv] = [h; rf] with iterative
            // refinement against the unridged Schur matrix
            auto kkt_once = [&](const std::vector<double>& hh, const std::vector<double>& rr,
                                std::vector<double>& oy, std::vector<double>& ov) {
                std::vector<double> u = hh;
                la::cholesky_solve(mchol, u);
                if (nf > 0) {
                    std::vector<double> rhsv(nf);
                    for (int q = 0; q < nf; ++q) {
                        double fu = 0.0;
                        for (int k = 0; k < m; ++k) fu += fmat(k, q) * u[k];
                        rhsv[q] = rr[q] - fu;
                    }
                    la::cholesky_solve(gchol, rhsv);
                    ov = rhsv;
                    for (int k = 0; k < m; ++k) {
                        double wd = 0.0;
                        for (int q = 0; q < nf; ++q) wd += w(k, q) * ov[q];
                        oy[k] = u[k] + wd;
                    }
                } else {
                    oy = u;
                }
            };
            std::vector<double> oy(m), ov(nf);
            kkt_once(h, rf, dy, dv);
            for (int round = 0; round < 3; ++round) {
                // residuals of the KKT system
                std::vector<double> r1(m), r2(nf);
                double worst = 0.0;
                par::parallel_for(std::size_t(m), [&](std::size_t k) {
                    double mdy = 0.0;
                    const double* row = schur.row(k);
                    for (int l = 0; l < m; ++l) mdy += row[l] * dy[l];
                    double fdv = 0.0;
                    for (int q = 0; q < nf; ++q) fdv += fmat(k, q) * dv[q];
                    r1[k] = h[k] - (mdy - fdv);
                });
                for (int k = 0; k < m; ++k) worst = std::max(worst, std::fabs(r1[k]));
                for (int q = 0; q < nf; ++q) {
                    double fy = 0.0;
                    for (int k = 0; k < m; ++k) fy += fmat(k, q) * dy[k];
                    r2[q] = rf[q] - fy;
                    worst = std::max(worst, std::fabs(r2[q]));
                }
                double ref = 1.0;
                for (int k = 0; k < m; ++k) ref = std::max(ref, std::fabs(h[k]));
                if (worst <= 1e-13 * ref) break;
                kkt_once(r1, r2, oy, ov);
                for (int k = 0; k < m; ++k) dy[k] += oy[k];
                for (int q = 0; q < nf; ++q) dv[q] += ov[q];
            }

            ds.assign(nb, la::Matrix());
            dx.assign(nb, la::Matrix());
            for (int b = 0; b < nb; ++b) {
                ds[b] = rd[b];
                for (std::size_t i = 0; i < ds[b].rows(); ++i)
                    for (std::size_t j = 0; j < ds[b].rows(); ++j) ds[b](i, j) = -ds[b](i, j);
            }
            for (int k = 0; k < m; ++k)
                for (const auto& e : lay.con[k]) ds[e.blk](e.p, e.q) += dy[k] * e.val;

            for (int b = 0; b < nb; ++b) {
                // dX = sigmu*Sinv - X - X dS Sinv (- K Sinv), symmetrized
                la::Matrix t = block_mul(ds[b], sinv[b]);
                la::Matrix xt = block_mul(x[b], t);
                dx[b] = la::Matrix(lay.bsize[b], lay.bsize[b]);
                for (std::size_t i = 0; i < dx[b].rows(); ++i)
                    for (std::size_t j = 0; j < dx[b].rows(); ++j)
                        dx[b](i, j) = sigmu * sinv[b](i, j) - x[b](i, j) - xt(i, j);
                if (corr) {
                    la::Matrix kc = block_mul((*corr)[b], sinv[b]);
                    for (std::size_t i = 0; i < dx[b].rows(); ++i)
                        for (std::size_t j = 0; j < dx[b].rows(); ++j)
                            dx[b](i, j) -= kc(i, j);
                }
                for (std::size_t i = 0; i < dx[b].rows(); ++i)
                    for (std::size_t j = 0; j < i; ++j) {
                        const double sym = 0.5 * (dx[b](i, j) + dx[b](j, i));
                        dx[b](i, j) = dx[b](j, i) = sym;
                    }
            }
        };

        // predictor
        std::vector<double> dy, dv;
        std::vector<la::Matrix> dx, ds;
        newton(0.0, nullptr, dy, dv, dx, ds);

        double ap = 1.0, ad = 1.0;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, max_step(x[b], dx[b]));
            ad = std::min(ad, max_step(s[b], ds[b]));
        }
        double mu_aff = 0.0;
        for (int b = 0; b < nb; ++b)
            for (std::size_t i = 0; i < x[b].rows(); ++i)
                for (std::size_t j = 0; j < x[b].rows(); ++j)
                    mu_aff += (x[b](i, j) + ap * dx[b](i, j)) * (s[b](j, i) + ad * ds[b](j, i));
        mu_aff /= double(ntot);
        double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3.0);
        sigma = std::clamp(sigma, 1e-8, 1.0);

        // corrector with K = dXa dSa
        std::vector<la::Matrix> corr(nb);
        for (int b = 0; b < nb; ++b) corr[b] = block_mul(dx[b], ds[b]);
        newton(sigma * mu, &corr, dy, dv, dx, ds);

        if (opts.trace) {
            double dev = 0.0;
            for (int k = 0; k < m; ++k) {
                double adx = trace_prod(lay.con[k], dx);
                for (int q = 0; q < nf; ++q) adx += fmat(k, q) * dv[q];
                dev = std::max(dev, std::fabs(adx - rp[k]));
            }
            std::fprintf(stderr, "    corrector linearization dev %.3e\n", dev);
        }

        ap = 1.0;
        ad = 1.0;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, 0.98 * max_step(x[b], dx[b]));
            ad = std::min(ad, 0.98 * max_step(s[b], ds[b]));
        }
        ap = std::min(ap, 1.0);
        ad = std::min(ad, 1.0);

        // keep mu from exploding when one side is pinned to its boundary
        for (int guard = 0; guard < 8; ++guard) {
            double mu_trial = 0.0;
            for (int b = 0; b < nb; ++b)
                for (std::size_t i = 0; i < x[b].rows(); ++i)
                    for (std::size_t j = 0; j < x[b].rows(); ++j)
                        mu_trial +=
                            (x[b](i, j) + ap * dx[b](i, j)) * (s[b](j, i) + ad * ds[b](j, i));
            mu_trial /= double(ntot);
            if (mu_trial <= std::max(2.0 * mu, mu + 0.1 * std::fabs(mu))) break;
            if (ad > ap)
                ad = std::max(0.5 * ad, std::min(ap, ad));
            else
                ap = std::max(0.5 * ap, std::min(ap, ad));
        }

        for (int b = 0; b < nb; ++b)
            for (std::size_t i = 0; i < x[b].rows(); ++i)
                for (std::size_t j = 0; j < x[b].rows(); ++j) {
                    x[b](i, j) += ap * dx[b](i, j);
                    s[b](i, j) += ad * ds[b](i, j);
                }
        for (int q = 0; q < nf; ++q) v[q] += ap * dv[q];
        for (int k = 0; k < m; ++k) y[k] += ad * dy[k];
        if (opts.trace) std::fprintf(stderr, "    sigma %.2e ap %.3f ad %.3f\n", sigma, ap, ad);
        sol.iterations = iter;
    }

    sol.status = SdpStatus::stalled;
    finalize(sol, p, lay, x, s, y, v, &row_scale);
    sdp_residuals(p, sol);
    return sol;
}

} // namespace certify

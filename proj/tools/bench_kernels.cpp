// Benchmark of the OpenMP kernels against their serial reference
// implementations.  Every pair must agree bitwise; the table reports the
// speedup on this machine.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>

#include "certify/bounds.hpp"
#include "certify/cert.hpp"
#include "certify/linalg.hpp"
#include "certify/parallel.hpp"

using namespace certify;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_seconds();
        fn();
        best = std::min(best, now_seconds() - t0);
    }
    return best;
}

void row(const char* name, double serial, double parallel, bool match) {
    std::printf("%-24s %9.3fs %9.3fs %7.2fx   %s\n", name, serial, parallel,
                serial / parallel, match ? "bitwise equal" : "MISMATCH");
}

} // namespace

int main() {
    std::printf("threads: %d\n\n", par::max_threads());
    std::printf("%-24s %10s %10s %8s\n", "kernel", "serial", "parallel", "speedup");

    std::mt19937 rng(1);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // dense Cholesky
    {
        const std::size_t n = 1100;
        la::Matrix base(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) base(i, j) = gauss(rng);
        la::Matrix spd(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += base(i, k) * base(j, k);
                spd(i, j) = spd(j, i) = s + (i == j ? double(n) : 0.0);
            }
        la::Matrix ps, ss;
        const double ts = time_best_of(2, [&] {
            ss = spd;
            la::cholesky_serial(ss);
        });
        const double tp = time_best_of(2, [&] {
            ps = spd;
            la::cholesky(ps);
        });
        bool match = true;
        for (std::size_t i = 0; i < n && match; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                if (ps(i, j) != ss(i, j)) match = false;
        row("cholesky 1100", ts, tp, match);
    }

    // dense matmul
    {
        const std::size_t n = 700;
        la::Matrix a(n, n), b(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                a(i, j) = gauss(rng);
                b(i, j) = gauss(rng);
            }
        la::Matrix rs, rp;
        const double ts = time_best_of(2, [&] { rs = la::matmul_serial(a, b); });
        const double tp = time_best_of(2, [&] { rp = la::matmul(a, b); });
        bool match = true;
        for (std::size_t i = 0; i < n && match; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (rs(i, j) != rp(i, j)) match = false;
        row("matmul 700", ts, tp, match);
    }

    // interval cell sweep
    {
        Expr x1 = Expr::variable(0), x2 = Expr::variable(1);
        Expr e = Expr::binary(
            BinaryOp::mul, x1,
            Expr::unary(UnaryOp::cos,
                        Expr::binary(BinaryOp::add, Expr::pow(x1, 2),
                                     Expr::unary(UnaryOp::sin, x2))));
        std::vector<Interval> box{Interval(-1, 1), Interval(-1, 1)};
        double vs = 0, vp = 0;
        const double ts = time_best_of(2, [&] { vs = bound_sup_abs_serial(e, box, 512); });
        const double tp = time_best_of(2, [&] { vp = bound_sup_abs(e, box, 512); });
        row("interval sweep 512^2", ts, tp, vs == vp);
    }

    // certificate sampling
    {
        auto model = parse_system(
            "states x1; inputs u1;"
            "x1' = -x1 + x1^3 + (-x1 + 1)*u1;"
            "y1 = x1 - x1^2 + (0.5*x1^2 + 1)*u1;"
            "region x1 in [-1, 1]; region u1 in [-1, 1];");
        Certificate cert;
        cert.kind = CertKind::passivity;
        cert.vars = model.all_vars();
        cert.n = 1;
        cert.m = 1;
        cert.p = 1;
        Polynomial v{model.all_vars()};
        v.add_term(MultiIndex{4, 0}, -0.4581);
        v.add_term(MultiIndex{2, 0}, 1.416);
        cert.storage = v;
        cert.supply = make_supply_passivity(1, 1);
        cert.region = model.region;
        double ms = 0, mp = 0;
        const double ts =
            time_best_of(2, [&] { ms = sampled_margin_serial(cert, model, 400000, 42); });
        const double tp =
            time_best_of(2, [&] { mp = sampled_margin_parallel(cert, model, 400000, 42); });
        row("margin sampling 4e5", ts, tp, ms == mp);
    }

    return 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "certify/bounds.hpp"
#include "certify/expr.hpp"
#include "certify/parallel.hpp"

using namespace certify;

namespace {

const char* kExample1 = R"(
# stability example, non-polynomial dynamics
states x1, x2;
inputs;
x1' = x2;
x2' = -2*x2 - x1*cos(x1 + x2);
region x1 in [-1, 1];
region x2 in [-1, 1];
)";

Expr cos_term() {
    // x1*cos(x1+x2)
    Expr x1 = Expr::variable(0), x2 = Expr::variable(1);
    return Expr::binary(BinaryOp::mul, x1,
                        Expr::unary(UnaryOp::cos, Expr::binary(BinaryOp::add, x1, x2)));
}

} // namespace

TEST_CASE("parse example 1") {
    auto model = parse_system(kExample1);
    CHECK(model.n == 2);
    CHECK(model.m == 0);
    CHECK(model.p == 0);
    CHECK(model.region.box[0].lo == -1.0);
    CHECK(model.region.box[1].hi == 1.0);
    const std::vector<double> pt{0.3, -0.2};
    CHECK(model.f[1].eval(pt) ==
          doctest::Approx(-2.0 * -0.2 - 0.3 * std::cos(0.1)).epsilon(1e-14));
}

TEST_CASE("parse trivial linear system") {
    auto model = parse_system("states x1; inputs; x1' = -x1;");
    CHECK(model.n == 1);
    CHECK(model.m == 0);
    CHECK(model.f[0].eval(std::vector<double>{2.0}) == doctest::Approx(-2.0));
}

TEST_CASE("parser round-trip is stable") {
    const char* sources[] = {
        kExample1,
        "states x1; inputs u1; x1' = -x1 + x1^3 + (-x1 + 1)*u1;"
        "y1 = x1 - x1^2 + (0.5*x1^2 + 1)*u1; region x1 in [-1, 1];",
        "states theta, omega; inputs; theta' = omega;"
        "omega' = -sin(theta) - omega; region theta in [-0.5, 0.5];"
        "region omega in [-0.5, 0.5];",
    };
    for (const char* src : sources) {
        auto m1 = parse_system(src);
        auto m2 = parse_system(print_system(m1));
        REQUIRE(m1.n == m2.n);
        REQUIRE(m1.p == m2.p);
        for (std::size_t i = 0; i < m1.n; ++i)
            CHECK(m1.f[i].structurally_equal(m2.f[i]));
        for (std::size_t j = 0; j < m1.p; ++j)
            CHECK(m1.h[j].structurally_equal(m2.h[j]));
        // printing twice is idempotent
        CHECK(print_system(m1) == print_system(m2));
    }
}

TEST_CASE("parser diagnostics") {
    CHECK_THROWS_AS(parse_system("states x1; inputs; x1' = x2;"), ParseError);   // undeclared
    CHECK_THROWS_AS(parse_system("states x1; inputs; x1' = ;"), ParseError);     // syntax
    CHECK_THROWS_AS(parse_system("states x1; inputs;"), ParseError);             // missing eq
    CHECK_THROWS_AS(parse_system("states x1; inputs; x1' = x1 + 1;"), ParseError); // equilibrium
    CHECK_THROWS_AS(parse_system("states x1; inputs; x1' = -x1; region x1 in [0.5, 1];"),
                    ParseError); // origin not interior
    try {
        parse_system("states x1; inputs;\nx1' = x1 *;\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 2);
    }
}

TEST_CASE("symbolic derivative vs central differences") {
    // d/dx1 [x1 cos(x1+x2)] = cos(x1+x2) - x1 sin(x1+x2)
    Expr e = cos_term();
    Expr d1 = e.diff(0);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> unif(-0.9, 0.9);
    const double h = 1e-5;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> z{unif(rng), unif(rng)};
        auto zp = z, zm = z;
        zp[0] += h;
        zm[0] -= h;
        const double fd = (e.eval(zp) - e.eval(zm)) / (2 * h);
        const double sym = d1.eval(z);
        CHECK(sym == doctest::Approx(fd).epsilon(1e-6));
        const double expect = std::cos(z[0] + z[1]) - z[0] * std::sin(z[0] + z[1]);
        CHECK(sym == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(Expr::constant(4.5).diff(0).is_const(0.0));
}

TEST_CASE("interval evaluation basics") {
    std::vector<Interval> box{Interval(-1.0, 1.0)};
    Expr x = Expr::variable(0);

    Interval s = Expr::unary(UnaryOp::sin, x).eval_interval(box);
    CHECK(s.lo >= -1.0);
    CHECK(s.hi <= 1.0);
    CHECK(s.lo <= -0.8414);
    CHECK(s.hi >= 0.8414);

    Interval c = Expr::constant(3.0).eval_interval(box);
    CHECK(c.lo == 3.0);
    CHECK(c.hi == 3.0);

    Interval sq = Expr::pow(x, 2).eval_interval(box);
    CHECK(sq.lo <= 0.0);
    CHECK(sq.hi >= 1.0);

    CHECK_THROWS_AS(Expr::binary(BinaryOp::div, Expr::constant(1.0), x).eval_interval(box),
                    IntervalError);
    CHECK_THROWS_AS(Expr::unary(UnaryOp::log, x).eval_interval(box), IntervalError);
}

TEST_CASE("interval soundness on random expressions") {
    // corpus: a few nested expressions over 2 variables
    Expr x1 = Expr::variable(0), x2 = Expr::variable(1);
    std::vector<Expr> corpus = {
        cos_term(),
        Expr::binary(BinaryOp::mul, Expr::unary(UnaryOp::exp, x2),
                     Expr::binary(BinaryOp::sub, x1, Expr::pow(x2, 3))),
        Expr::unary(UnaryOp::tanh,
                    Expr::binary(BinaryOp::add, Expr::pow(x1, 2),
                                 Expr::unary(UnaryOp::sin, x2))),
        Expr::binary(BinaryOp::div, x1,
                     Expr::binary(BinaryOp::add, Expr::constant(2.0), Expr::pow(x2, 2))),
    };
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int checked = 0;
    for (int rep = 0; rep < 25; ++rep) {
        const double a1 = -2.0 * unif(rng) - 0.01, b1 = 2.0 * unif(rng) + 0.01;
        const double a2 = -2.0 * unif(rng) - 0.01, b2 = 2.0 * unif(rng) + 0.01;
        std::vector<Interval> box{Interval(a1, b1), Interval(a2, b2)};
        for (const auto& e : corpus) {
            const Interval enc = e.eval_interval(box);
            for (int k = 0; k < 1000; ++k) {
                std::vector<double> z{a1 + (b1 - a1) * unif(rng), a2 + (b2 - a2) * unif(rng)};
                const double v = e.eval(z);
                CHECK(enc.lo <= v + 1e-12);
                CHECK(v <= enc.hi + 1e-12);
                ++checked;
            }
        }
    }
    CHECK(checked >= 100000);
}

TEST_CASE("bound_sup_abs reproduces the remainder-table interval bound") {
    // |-3cos(x1+x2) + x1 sin(x1+x2)| over the unit box, whole-box interval
    Expr x1 = Expr::variable(0), x2 = Expr::variable(1);
    Expr s = Expr::binary(BinaryOp::add, x1, x2);
    Expr e = Expr::binary(BinaryOp::add,
                          Expr::binary(BinaryOp::mul, Expr::constant(-3.0),
                                       Expr::unary(UnaryOp::cos, s)),
                          Expr::binary(BinaryOp::mul, x1, Expr::unary(UnaryOp::sin, s)));
    std::vector<Interval> box{Interval(-1, 1), Interval(-1, 1)};
    CHECK(bound_sup_abs(e, box, 1) == doctest::Approx(4.0).epsilon(1e-9));

    CHECK(bound_sup_abs(Expr::constant(-2.5), box, 1) == doctest::Approx(2.5));

    std::vector<Interval> pibox{Interval(-M_PI, M_PI)};
    CHECK(bound_sup_abs(Expr::unary(UnaryOp::sin, Expr::variable(0)), pibox, 8) ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bound_sup_abs monotone in subdivisions and above grid max") {
    Expr e = cos_term();
    std::vector<Interval> box{Interval(-1, 1), Interval(-1, 1)};
    double prev = 1e300;
    for (int s : {1, 2, 4, 8, 16}) {
        const double b = bound_sup_abs(e, box, s);
        CHECK(b <= prev + 1e-12);
        prev = b;
        CHECK(b + 1e-12 >= grid_max_abs(e, box, 41));
    }
}

TEST_CASE("parallel and serial sweeps agree bitwise") {
    Expr e = cos_term();
    std::vector<Interval> box{Interval(-1, 1), Interval(-1, 1)};
    for (int s : {1, 3, 8}) {
        CHECK(bound_sup_abs(e, box, s) == bound_sup_abs_serial(e, box, s));
    }
}

TEST_CASE("lipschitz bounds") {
    std::vector<Interval> unit{Interval(0, 1)};
    CHECK(lipschitz_bound(Expr::variable(0), unit) == doctest::Approx(1.0));

    std::vector<Interval> half{Interval(-0.5, 0.5)};
    const double lsin = lipschitz_bound(Expr::unary(UnaryOp::sin, Expr::variable(0)), half);
    CHECK(lsin <= 1.0 + 1e-12);
    CHECK(lsin >= std::cos(0.5) - 1e-12);

    Expr e = cos_term();
    std::vector<Interval> box{Interval(-0.5, 0.5), Interval(-0.5, 0.5)};
    const double l = lipschitz_bound(e, box);
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    for (int t = 0; t < 10000; ++t) {
        std::vector<double> a{unif(rng), unif(rng)}, b{unif(rng), unif(rng)};
        const double num = std::fabs(e.eval(a) - e.eval(b));
        const double den = std::hypot(a[0] - b[0], a[1] - b[1]);
        CHECK(num <= l * den + 1e-12);
    }
}

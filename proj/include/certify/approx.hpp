#ifndef CERTIFY_APPROX_HPP
#define CERTIFY_APPROX_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "certify/bounds.hpp"
#include "certify/expr.hpp"
#include "certify/poly.hpp"

namespace certify {

struct ApproxError : std::runtime_error {
    explicit ApproxError(const std::string& what) : std::runtime_error(what) {}
};

// One remainder monomial x^beta (over states+inputs) with its uniform bound.
struct RemainderTerm {
    MultiIndex beta;
    double bound = 0.0;
};

enum class RemainderMode { per_beta, uniform };

// Truncated Taylor series of f and h about the origin: the polynomial part
// keeps total degree <= order-1, the dropped tail is written as
// sum_{|beta| = order} R_beta * z^beta with |R_beta| <= bound.
struct TaylorSurrogate {
    int order = 0;
    std::vector<std::string> vars;            // states then inputs
    std::vector<Polynomial> f_poly;           // n components
    std::vector<Polynomial> h_poly;           // p components
    std::vector<std::vector<RemainderTerm>> f_rem;  // bounds r-bar per component
    std::vector<std::vector<RemainderTerm>> h_rem;  // bounds t-bar per component
    RemainderMode mode = RemainderMode::per_beta;
};

TaylorSurrogate taylor_expand(const SystemModel& model, int order);

// Fill in the remainder bounds over the given box.
//   per_beta: bound = sup|D^beta f| / beta!
//   uniform:  bound = max_{|alpha|=|beta|} sup|D^alpha f| / beta!
void taylor_remainder_bounds(const SystemModel& model, TaylorSurrogate& surr,
                             RemainderMode mode, int subdivisions = 1);

enum class BernsteinConvention {
    canonical,  // sample k/mu - 1/2 on [-1/2, 1/2]
    shifted     // sample k/mu on [0, 1]
};

enum class BernsteinErrorMode { lipschitz, empirical };

// Tensor-product Bernstein surrogate on the canonical box, with the affine
// map between original and canonical coordinates recorded.
struct BernsteinSurrogate {
    std::vector<std::string> vars;
    std::vector<std::vector<int>> f_degrees;  // mu, per component x per variable
    std::vector<std::vector<int>> h_degrees;  // eta
    std::vector<Polynomial> f_poly;           // b_i, canonical coordinates
    std::vector<Polynomial> h_poly;           // b'_j
    std::vector<double> f_err;                // eps-bar
    std::vector<double> h_err;                // eps-bar'
    AffineMap to_canonical;                   // x_canonical = scale*x_orig + offset
    BernsteinConvention convention = BernsteinConvention::canonical;
    BernsteinErrorMode error_mode = BernsteinErrorMode::lipschitz;
};

// Expand a single expression over its box: sample on the uniform tensor grid
// (box corners included) and expand the basis products to monomial form.
// The domain box is what distinguishes the canonical [-1/2,1/2] convention
// from the shifted [0,1] one.
Polynomial bernstein_expand_expr(const Expr& e, std::span<const Interval> box,
                                 const std::vector<std::string>& vars,
                                 const std::vector<int>& degrees);

// Whole-model expansion; requires a pure box region centred at the origin
// for the canonical convention.
BernsteinSurrogate bernstein_expand(const SystemModel& model,
                                    const std::vector<int>& mu,
                                    const std::vector<int>& eta,
                                    BernsteinConvention convention = BernsteinConvention::canonical);

void bernstein_error_bound(const SystemModel& model, BernsteinSurrogate& surr,
                           BernsteinErrorMode mode);

// Exact route for models whose dynamics are already polynomial.
struct ExactPolyModel {
    std::vector<std::string> vars;
    std::vector<Polynomial> f_poly;
    std::vector<Polynomial> h_poly;
};

std::optional<ExactPolyModel> detect_polynomial(const SystemModel& model);

enum class ApproxKind { exact_polynomial, taylor, bernstein };

struct ApproxModel {
    ApproxKind kind = ApproxKind::exact_polynomial;
    std::variant<ExactPolyModel, TaylorSurrogate, BernsteinSurrogate> payload;

    const ExactPolyModel& exact() const { return std::get<ExactPolyModel>(payload); }
    const TaylorSurrogate& taylor() const { return std::get<TaylorSurrogate>(payload); }
    const BernsteinSurrogate& bernstein() const { return std::get<BernsteinSurrogate>(payload); }
};

std::string approx_to_json(const ApproxModel& approx);

} // namespace certify

#endif

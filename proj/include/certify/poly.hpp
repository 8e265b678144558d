#ifndef CERTIFY_POLY_HPP
#define CERTIFY_POLY_HPP

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace certify {

struct PolyError : std::runtime_error {
    explicit PolyError(const std::string& what) : std::runtime_error(what) {}
};

// Exponent vector of one monomial; one entry per indeterminate.
struct MultiIndex {
    std::vector<uint32_t> exp;

    MultiIndex() = default;
    explicit MultiIndex(std::size_t nvars) : exp(nvars, 0) {}
    MultiIndex(std::initializer_list<uint32_t> e) : exp(e) {}

    std::size_t size() const { return exp.size(); }
    uint32_t operator[](std::size_t i) const { return exp[i]; }
    uint32_t& operator[](std::size_t i) { return exp[i]; }

    int total_degree() const {
        int d = 0;
        for (auto e : exp) d += static_cast<int>(e);
        return d;
    }
    bool operator==(const MultiIndex& o) const { return exp == o.exp; }
};

// Graded lexicographic order: lower total degree first; within a degree,
// larger exponent on the earlier variable first (so x1 precedes x2).
struct GrlexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const {
        const int da = a.total_degree(), db = b.total_degree();
        if (da != db) return da < db;
        return a.exp > b.exp; // lexicographically larger vector comes first
    }
};

// coefficients with |c| below this are dropped after arithmetic
inline constexpr double kCoeffPurge = 1e-14;

// Sparse multivariate polynomial over an ordered variable list.
// Invariants: no stored zero coefficients, one term per multi-index,
// every multi-index has exactly vars.size() entries.
class Polynomial {
public:
    using TermMap = std::map<MultiIndex, double, GrlexLess>;

    Polynomial() = default;
    explicit Polynomial(std::vector<std::string> vars) : vars_(std::move(vars)) {}

    static Polynomial constant(std::vector<std::string> vars, double c);
    static Polynomial variable(std::vector<std::string> vars, std::size_t index);
    static Polynomial monomial(std::vector<std::string> vars, MultiIndex mi, double c);

    const std::vector<std::string>& vars() const { return vars_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }

    // Zero polynomial (empty term map) reports a negative degree.
    int degree() const;
    int degree_in(std::size_t var) const;
    int min_degree() const;
    int min_degree_in(std::size_t var) const;

    double coeff(const MultiIndex& mi) const;
    void add_term(const MultiIndex& mi, double c); // accumulates, purges zeros

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(double s) const;
    Polynomial operator-() const { return *this * -1.0; }

    Polynomial derivative(std::size_t var) const;
    Polynomial derivative(const std::string& var_name) const;

    double eval(std::span<const double> point) const;

    bool same_vars(const Polynomial& o) const { return vars_ == o.vars_; }

    // Human-readable form, descending graded-lex, coefficients %.6f.
    std::string str() const;

private:
    void check_vars(const Polynomial& o) const;

    std::vector<std::string> vars_;
    TermMap terms_;
};

enum class PolyOp { add, sub, mul };
Polynomial poly_arith(const Polynomial& a, const Polynomial& b, PolyOp op);

// x_new = scale * x_old + offset, per variable; all scales nonzero.
struct AffineMap {
    std::vector<double> scale;
    std::vector<double> offset;

    AffineMap() = default;
    AffineMap(std::vector<double> s, std::vector<double> o);
    static AffineMap identity(std::size_t n);
    AffineMap inverse() const;
    std::vector<double> apply(std::span<const double> x) const;
};

// Substitute x_i -> scale_i * x_i + offset_i, exactly.
Polynomial poly_compose_affine(const Polynomial& p, const AffineMap& map);

// All multi-indices over `nvars` variables with total degree <= max_degree,
// ascending graded-lex; size C(nvars + max_degree, max_degree).
std::vector<MultiIndex> monomial_basis(std::size_t nvars, int max_degree);

// Variant with per-variable caps and a total-degree window [min_total, max].
std::vector<MultiIndex> monomial_basis_box(std::size_t nvars, int max_degree,
                                           const std::vector<int>& var_caps,
                                           int min_total = 0);

uint64_t binomial(unsigned n, unsigned k); // exact up to n = 50, log-gamma above

std::string format_coeff(double c);

} // namespace certify

#endif

#ifndef CERTIFY_SOS_HPP
#define CERTIFY_SOS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "certify/approx.hpp"
#include "certify/sdp.hpp"
#include "certify/supply.hpp"

namespace certify {

struct SosError : std::runtime_error {
    explicit SosError(const std::string& what) : std::runtime_error(what) {}
};

// Polynomial that is affine in scalar decision variables.
struct LinPoly {
    Polynomial base;
    std::map<int, Polynomial> scalar_terms;  // scalar id -> coefficient polynomial

    explicit LinPoly(std::vector<std::string> vars) : base(Polynomial(std::move(vars))) {}
};

// One unknown SOS multiplier s(z) = w'Hw entering a constraint as  + s * factor.
// Factors are normalized to be nonpositive on the admissible set.
struct MultiplierUse {
    int gram_id = -1;
    Polynomial factor;
};

struct GramVar {
    std::string name;
    std::vector<MultiIndex> basis;
};

struct ScalarVar {
    std::string name;
};

// A polynomial constraint  poly + sum_k s_k * factor_k  required SOS.
struct SosTarget {
    std::string name;
    LinPoly poly;
    std::vector<MultiplierUse> mults;
};

enum class VarGroup { state, input, error };

struct SosProblem {
    std::vector<std::string> vars;
    std::vector<VarGroup> groups;
    std::vector<ScalarVar> scalars;
    std::vector<GramVar> mult_grams;
    std::vector<SosTarget> targets;
    int objective_scalar = -1;  // maximize this scalar when >= 0

    // decision polynomial V: scalar per basis monomial (no constant term)
    std::vector<int> v_scalar_ids;
    std::vector<MultiIndex> v_basis;

    int multiplier_count() const { return int(mult_grams.size()); }
    std::string debug_dump() const;
};

enum class TaylorVariant { box, ellipsoid };

struct SosOptions {
    int vdeg = 4;              // degree of the storage/Lyapunov candidate
    int region_mult_deg = 2;   // sdeg
    int error_mult_deg = -1;   // -1 = sized automatically from the degrees
    double lambda = 1e-6;      // strictness margin for phi1, phi2
};

// Local stability programs for unforced systems (m = 0).
SosProblem build_stability_taylor(const TaylorSurrogate& surr, const SystemModel& model,
                                  const SosOptions& opts,
                                  TaylorVariant variant = TaylorVariant::ellipsoid);
SosProblem build_stability_bernstein(const BernsteinSurrogate& surr, const SystemModel& model,
                                     const SosOptions& opts);
SosProblem build_stability_exact(const ExactPolyModel& exact, const SystemModel& model,
                                 const SosOptions& opts);

// Dissipativity programs with a supply rate w(u, y-hat).
SosProblem build_dissipativity_taylor(const TaylorSurrogate& surr, const SystemModel& model,
                                      const SupplyRate& supply, const SosOptions& opts,
                                      TaylorVariant variant = TaylorVariant::ellipsoid);
SosProblem build_dissipativity_bernstein(const BernsteinSurrogate& surr,
                                         const SystemModel& model, const SupplyRate& supply,
                                         const SosOptions& opts);
SosProblem build_dissipativity_exact(const ExactPolyModel& exact, const SystemModel& model,
                                     const SupplyRate& supply, const SosOptions& opts);

// Compiled problem plus the mapping needed to read a solution back.
struct CompiledSos {
    SdpProblem sdp;
    std::vector<int> target_block;              // target -> sdp block
    std::vector<std::vector<MultiIndex>> target_basis;
    std::vector<int> mult_block;                // gram id -> sdp block
};

CompiledSos compile_to_sdp(const SosProblem& prob);

// Gram basis for one SOS target from degree intervals of its support
// (per-variable caps, error-group cap, total-degree window).
std::vector<MultiIndex> target_gram_basis(const SosProblem& prob, const SosTarget& t);

// Expand z' G z over a basis into a polynomial.
Polynomial gram_to_poly(const std::vector<std::string>& vars,
                        const std::vector<MultiIndex>& basis, const la::Matrix& gram);

} // namespace certify

#endif

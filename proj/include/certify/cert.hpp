#ifndef CERTIFY_CERT_HPP
#define CERTIFY_CERT_HPP

#include <optional>
#include <string>
#include <vector>

#include "certify/approx.hpp"
#include "certify/sos.hpp"

namespace certify {

struct CertError : std::runtime_error {
    explicit CertError(const std::string& what) : std::runtime_error(what) {}
};

enum class CertKind { stability, dissipativity, passivity, ofp, ifp, qsr, l2gain };

const char* cert_kind_name(CertKind k);
CertKind cert_kind_from_name(const std::string& s);

enum class Verdict { valid, marginal, invalid };

struct ValidationReport {
    std::vector<double> gram_min_eigs;
    double coeff_residual = 0.0;  // max abs mismatch of the SOS identities
    double sampled_margin = 0.0;  // min inequality slack over the sample set
    int sample_count = 0;
    Verdict verdict = Verdict::invalid;
};

// One solved SOS identity, fully numeric:
//   known + sum_k s_k * factor_k  ==  z' G z,   s_k = w_k' H_k w_k
struct CertTarget {
    std::string name;
    Polynomial known;
    std::vector<std::string> mult_names;
    std::vector<Polynomial> mult_factors;
    std::vector<std::vector<MultiIndex>> mult_bases;
    std::vector<la::Matrix> mult_grams;
    std::vector<MultiIndex> gram_basis;
    la::Matrix gram;
};

struct Certificate {
    int schema_version = 1;
    CertKind kind = CertKind::stability;
    std::vector<std::string> vars;       // problem indeterminates (x, u, errors)
    std::size_t n = 0, m = 0, p = 0;
    Polynomial storage;                  // V in original model coordinates
    std::optional<double> index;         // rho or nu when applicable
    std::optional<double> index_bracket; // bisection bracket width
    std::optional<SupplyRate> supply;
    Region region;                       // original coordinates
    ApproxKind approx_kind = ApproxKind::exact_polynomial;
    std::string approx_note;
    std::vector<CertTarget> targets;
    ValidationReport report;
};

// Assemble a certificate from a solved SOS problem.  `back_map` composes the
// canonical-coordinates storage function back into original coordinates.
Certificate extract_certificate(const SosProblem& prob, const CompiledSos& compiled,
                                const SdpSolution& sol, const SystemModel& model,
                                CertKind kind, const std::optional<SupplyRate>& supply,
                                const std::optional<AffineMap>& back_map);

// Optimized index value from a solved problem with an index objective.
double extract_index(const SdpSolution& sol, const SosProblem& prob);

// Re-check a certificate: (a) every stored SOS identity algebraically via
// Gram reconstruction; (b) V >= 0 and Vdot <= w sampled on the region with
// the true nonlinear dynamics, Halton points, deterministic under `seed`.
ValidationReport validate(Certificate& cert, const SystemModel& model,
                          int samples = 10000, uint64_t seed = 42);

// Serial reference of the sampling sweep (kernel comparison/benchmark).
double sampled_margin_serial(const Certificate& cert, const SystemModel& model, int samples,
                             uint64_t seed);
double sampled_margin_parallel(const Certificate& cert, const SystemModel& model, int samples,
                               uint64_t seed);

std::string certificate_to_json(const Certificate& cert);
Certificate certificate_from_json(const std::string& text);

} // namespace certify

#endif

#ifndef CERTIFY_SDP_HPP
#define CERTIFY_SDP_HPP

#include <functional>
#include <string>
#include <vector>

#include "certify/linalg.hpp"

namespace certify {

struct SdpError : std::runtime_error {
    explicit SdpError(const std::string& what) : std::runtime_error(what) {}
};

enum class BlockKind { psd, diagonal };

struct BlockSpec {
    int size = 0;
    BlockKind kind = BlockKind::psd;
};

// One symmetric coefficient: contributes val to A[i][j] and A[j][i], i <= j.
struct SdpEntry {
    int con = 0;  // constraint index, or -1 for the objective matrix
    int blk = 0;
    int i = 0, j = 0;  // 0-based, i <= j
    double val = 0.0;
};

// maximize  <C, X> + obj_free' v
// s.t.      <A_k, X> + F_k' v = rhs_k   (k = 0..m-1),   X block-diag PSD,  v free
struct SdpProblem {
    std::vector<BlockSpec> blocks;
    int num_free = 0;
    int num_con = 0;
    std::vector<SdpEntry> entries;      // con >= 0: constraint data
    std::vector<SdpEntry> obj_entries;  // con == -1: objective C
    std::vector<std::tuple<int, int, double>> free_entries;  // (con, free idx, coeff)
    std::vector<double> obj_free;
    std::vector<double> rhs;

    // set by presolve when the equalities plus PSD diagonals are inconsistent
    bool structurally_infeasible = false;
    std::string infeasibility_note;

    int total_psd_dim() const;
};

// Pin PSD diagonal entries forced to zero and detect rows that become
// unsatisfiable; records the verdict on the problem itself.
void sdp_presolve(SdpProblem& p);

enum class SdpStatus { optimal, infeasible, unbounded, stalled };

struct SdpSolution {
    SdpStatus status = SdpStatus::stalled;
    std::vector<la::Matrix> x_blocks;   // diagonal blocks stored as size x 1
    std::vector<la::Matrix> s_blocks;
    std::vector<double> y;              // dual vector
    std::vector<double> free_values;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    struct {
        double primal = 0.0;  // ||rhs - A(X) - Fv||_inf / (1 + ||rhs||_inf)
        double dual = 0.0;    // ||C + S - A*(y)||_max / (1 + ||C||_max), plus free part
        double gap = 0.0;     // |pobj - dobj| / (1 + |pobj| + |dobj|)
    } residuals;
    int iterations = 0;
};

struct SdpOptions {
    double tol = 1e-7;
    int max_iter = 200;
    int psd_dim_cap = 400;
    int con_cap = 20000;
    bool trace = false;
    // weak-duality probe for property tests
    std::function<void(int iter, double pobj, double dobj, double prim_inf, double dual_inf)>
        iterate_hook;
};

SdpSolution sdp_solve(const SdpProblem& p, const SdpOptions& opts = {});

// Recompute residuals of a candidate solution from scratch.
void sdp_residuals(const SdpProblem& p, SdpSolution& sol);

double sdp_primal_objective(const SdpProblem& p, const SdpSolution& sol);

// SDPA sparse format (free variables split into a diagonal block).
std::string export_sdpa(const SdpProblem& p);

// Solution text round-trip: objectives, dual vector, then X blocks row-major.
std::string export_solution(const SdpProblem& p, const SdpSolution& sol);
SdpSolution import_solution(const std::string& doc, const SdpProblem& p);

} // namespace certify

#endif

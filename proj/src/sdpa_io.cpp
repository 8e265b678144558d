#include "certify/sdp.hpp"

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace certify {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string export_sdpa(const SdpProblem& p) {
    // free variables become differences of two diagonal entries appended as
    // one extra diagonal block
    const int nblocks = int(p.blocks.size()) + (p.num_free > 0 ? 1 : 0);
    std::string out;
    out += std::to_string(p.num_con) + "\n";
    out += std::to_string(nblocks) + "\n";
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        if (b) out += " ";
        out += std::to_string(p.blocks[b].kind == BlockKind::psd ? p.blocks[b].size
                                                                 : -p.blocks[b].size);
    }
    if (p.num_free > 0) {
        if (!p.blocks.empty()) out += " ";
        out += std::to_string(-2 * p.num_free);
    }
    out += "\n";
    for (int k = 0; k < p.num_con; ++k) {
        if (k) out += " ";
        out += fmt(p.rhs[k]);
    }
    out += "\n";

    auto line = [&](int matno, int blkno, int i, int j, double val) {
        out += std::to_string(matno) + " " + std::to_string(blkno) + " " +
               std::to_string(i) + " " + std::to_string(j) + " " + fmt(val) + "\n";
    };

    const int split_blk = int(p.blocks.size()) + 1;
    for (const auto& e : p.obj_entries) line(0, e.blk + 1, e.i + 1, e.j + 1, e.val);
    for (int q = 0; q < p.num_free; ++q) {
        if (p.obj_free[q] == 0.0) continue;
        line(0, split_blk, 2 * q + 1, 2 * q + 1, p.obj_free[q]);
        line(0, split_blk, 2 * q + 2, 2 * q + 2, -p.obj_free[q]);
    }
    for (const auto& e : p.entries) line(e.con + 1, e.blk + 1, e.i + 1, e.j + 1, e.val);
    for (const auto& [con, idx, val] : p.free_entries) {
        if (val == 0.0) continue;
        line(con + 1, split_blk, 2 * idx + 1, 2 * idx + 1, val);
        line(con + 1, split_blk, 2 * idx + 2, 2 * idx + 2, -val);
    }
    return out;
}

namespace {

struct FloatReader {
    const std::string& doc;
    std::size_t pos = 0;
    int line = 1;

    explicit FloatReader(const std::string& d) : doc(d) {}

    void skip() {
        while (pos < doc.size()) {
            const char c = doc[pos];
            if (c == '*') {  // comment until matching '*' or end of line
                while (pos < doc.size() && doc[pos] != '\n') ++pos;
            } else if (c == '\n') {
                ++line;
                ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
    }

    bool done() {
        skip();
        return pos >= doc.size();
    }

    double next() {
        skip();
        if (pos >= doc.size())
            throw SdpError("solution import: unexpected end of file at line " +
                           std::to_string(line));
        char* end = nullptr;
        const double v = std::strtod(doc.c_str() + pos, &end);
        if (end == doc.c_str() + pos)
            throw SdpError("solution import: parse failure at line " + std::to_string(line));
        pos = std::size_t(end - doc.c_str());
        return v;
    }
};

} // namespace

std::string export_solution(const SdpProblem& p, const SdpSolution& sol) {
    std::string out = "* sdp solution: objectives, dual vector, X blocks, S blocks\n";
    out += fmt(sol.primal_obj) + " " + fmt(sol.dual_obj) + "\n";
    for (int k = 0; k < p.num_con; ++k) out += (k ? " " : "") + fmt(sol.y[k]);
    out += "\n";
    auto dump_blocks = [&](const std::vector<la::Matrix>& blocks) {
        for (std::size_t b = 0; b < p.blocks.size(); ++b) {
            const auto& m = blocks[b];
            for (std::size_t i = 0; i < m.rows(); ++i) {
                for (std::size_t j = 0; j < m.cols(); ++j)
                    out += (j ? " " : "") + fmt(m(i, j));
                out += "\n";
            }
        }
    };
    dump_blocks(sol.x_blocks);
    for (int q = 0; q < p.num_free; ++q) out += (q ? " " : "") + fmt(sol.free_values[q]);
    if (p.num_free > 0) out += "\n";
    dump_blocks(sol.s_blocks);
    return out;
}

SdpSolution import_solution(const std::string& doc, const SdpProblem& p) {
    FloatReader rd(doc);
    SdpSolution sol;
    sol.primal_obj = rd.next();
    sol.dual_obj = rd.next();
    sol.y.resize(p.num_con);
    for (int k = 0; k < p.num_con; ++k) sol.y[k] = rd.next();

    auto read_blocks = [&](std::vector<la::Matrix>& blocks) {
        blocks.resize(p.blocks.size());
        for (std::size_t b = 0; b < p.blocks.size(); ++b) {
            const int n = p.blocks[b].size;
            if (p.blocks[b].kind == BlockKind::psd) {
                blocks[b] = la::Matrix(n, n);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) blocks[b](i, j) = rd.next();
            } else {
                blocks[b] = la::Matrix(n, 1);
                for (int i = 0; i < n; ++i) blocks[b](i, 0) = rd.next();
            }
        }
    };
    read_blocks(sol.x_blocks);
    sol.free_values.resize(p.num_free);
    for (int q = 0; q < p.num_free; ++q) sol.free_values[q] = rd.next();
    if (!rd.done()) read_blocks(sol.s_blocks);

    sdp_residuals(p, sol);
    const double worst = std::max({sol.residuals.primal, sol.residuals.dual,
                                   sol.residuals.gap});
    sol.status = worst <= 1e-6 ? SdpStatus::optimal : SdpStatus::stalled;
    return sol;
}

} // namespace certify

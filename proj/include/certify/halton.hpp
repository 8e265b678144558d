#ifndef CERTIFY_HALTON_HPP
#define CERTIFY_HALTON_HPP

#include <cstdint>
#include <vector>

namespace certify {

// Low-discrepancy Halton point set on [0,1]^dim; the seed offsets the start
// index so distinct seeds give distinct (still deterministic) point sets.
class Halton {
public:
    explicit Halton(std::size_t dim, uint64_t seed = 42);

    // point #i (0-based), component c in [0, 1)
    double coordinate(uint64_t i, std::size_t c) const;
    std::vector<double> point(uint64_t i) const;

    std::size_t dim() const { return bases_.size(); }

private:
    std::vector<uint32_t> bases_;
    uint64_t offset_;
};

} // namespace certify

#endif

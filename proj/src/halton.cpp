#include "certify/halton.hpp"

#include <stdexcept>

namespace certify {

namespace {
constexpr uint32_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
}

Halton::Halton(std::size_t dim, uint64_t seed) : offset_(seed + 1) {
    if (dim > std::size(kPrimes)) throw std::runtime_error("halton: dimension too large");
    bases_.assign(kPrimes, kPrimes + dim);
}

double Halton::coordinate(uint64_t i, std::size_t c) const {
    const uint32_t b = bases_[c];
    uint64_t n = i + offset_;
    double f = 1.0, r = 0.0;
    while (n > 0) {
        f /= b;
        r += f * double(n % b);
        n /= b;
    }
    return r;
}

std::vector<double> Halton::point(uint64_t i) const {
    std::vector<double> p(bases_.size());
    for (std::size_t c = 0; c < bases_.size(); ++c) p[c] = coordinate(i, c);
    return p;
}

} // namespace certify

#ifndef CERTIFY_PARALLEL_HPP
#define CERTIFY_PARALLEL_HPP

#include <cstddef>
#include <vector>
#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace certify::par {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Runtime switch so benchmarks and tests can force the serial path.
inline bool& parallel_enabled() {
    static bool enabled = true;
    return enabled;
}

// Index-space parallel loop. Results must not depend on execution order;
// every site that uses this writes to disjoint locations.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
    if (parallel_enabled() && n > 1) {
        // interleaved chunks: balances triangular loops (row i costing ~i work)
        // without affecting results, since every index writes its own slot
        #pragma omp parallel for schedule(static, 8)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(static_cast<std::size_t>(i));
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

template <class F>
void serial_for(std::size_t n, F&& body) {
    for (std::size_t i = 0; i < n; ++i) body(i);
}

// Deterministic reduction: the index space is cut into a fixed number of
// chunks (independent of the thread count) and chunk results are folded in
// chunk order, so the result is bit-identical for any number of threads.
inline constexpr std::size_t kReduceChunks = 64;

template <class T, class Map, class Fold>
T parallel_reduce(std::size_t n, T init, Map&& map, Fold&& fold) {
    if (n == 0) return init;
    const std::size_t nchunks = std::min<std::size_t>(kReduceChunks, n);
    std::vector<T> partial(nchunks, init);
    parallel_for(nchunks, [&](std::size_t c) {
        const std::size_t lo = n * c / nchunks;
        const std::size_t hi = n * (c + 1) / nchunks;
        T acc = init;
        for (std::size_t i = lo; i < hi; ++i) acc = fold(acc, map(i));
        partial[c] = acc;
    });
    T out = init;
    for (std::size_t c = 0; c < nchunks; ++c) out = fold(out, partial[c]);
    return out;
}

template <class T, class Map, class Fold>
T serial_reduce(std::size_t n, T init, Map&& map, Fold&& fold) {
    // Same chunking as the parallel version so both are bit-identical.
    if (n == 0) return init;
    const std::size_t nchunks = std::min<std::size_t>(kReduceChunks, n);
    std::vector<T> partial(nchunks, init);
    for (std::size_t c = 0; c < nchunks; ++c) {
        const std::size_t lo = n * c / nchunks;
        const std::size_t hi = n * (c + 1) / nchunks;
        T acc = init;
        for (std::size_t i = lo; i < hi; ++i) acc = fold(acc, map(i));
        partial[c] = acc;
    }
    T out = init;
    for (std::size_t c = 0; c < nchunks; ++c) out = fold(out, partial[c]);
    return out;
}

} // namespace certify::par

#endif

#ifndef CERTIFY_BOUNDS_HPP
#define CERTIFY_BOUNDS_HPP

#include <span>
#include <vector>

#include "certify/expr.hpp"

namespace certify {

inline constexpr int kDefaultSubdivisions = 8;
inline constexpr long kMaxCells = 1000000;

// Upper bound on sup |e| over the box, by uniform subdivision (per active
// axis) plus interval evaluation; tightens as `subdivisions` grows.
double bound_sup_abs(const Expr& e, std::span<const Interval> box,
                     int subdivisions = kDefaultSubdivisions);
double bound_sup_abs_serial(const Expr& e, std::span<const Interval> box,
                            int subdivisions = kDefaultSubdivisions);

// 2-norm Lipschitz constant over the box:
// sqrt(sum_j sup|de/dx_j|^2), each factor from bound_sup_abs.
double lipschitz_bound(const Expr& e, std::span<const Interval> box,
                       int subdivisions = kDefaultSubdivisions);

// Plain sampled maximum of |e| on a uniform grid (not a bound; used as the
// oracle floor in tests and for empirical error estimates).
double grid_max_abs(const Expr& e, std::span<const Interval> box, int points_per_axis);

} // namespace certify

#endif

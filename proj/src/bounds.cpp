#include "certify/bounds.hpp"
#include "certify/parallel.hpp"

#include <cmath>
#include <exception>
#include <mutex>

namespace certify {

namespace {

std::vector<std::size_t> active_axes(const Expr& e, std::size_t nvars) {
    std::vector<bool> used(nvars, false);
    e.collect_vars(used);
    std::vector<std::size_t> act;
    for (std::size_t i = 0; i < nvars; ++i)
        if (used[i]) act.push_back(i);
    return act;
}

template <bool Parallel>
double sup_abs_impl(const Expr& e, std::span<const Interval> box, int subdivisions) {
    if (subdivisions < 1) throw IntervalError("bound_sup_abs: subdivisions must be >= 1");
    const auto axes = active_axes(e, box.size());
    long per_axis = subdivisions;
    if (!axes.empty()) {
        while (per_axis > 1 &&
               std::pow(double(per_axis), double(axes.size())) > double(kMaxCells))
            --per_axis;
    }
    long ncells = 1;
    for (std::size_t a = 0; a < axes.size(); ++a) ncells *= per_axis;

    std::exception_ptr error;
    std::mutex error_mu;
    auto cell_value = [&](std::size_t cell) -> double {
        try {
            std::vector<Interval> cell_box(box.begin(), box.end());
            std::size_t rest = cell;
            for (std::size_t a = 0; a < axes.size(); ++a) {
                const std::size_t k = rest % per_axis;
                rest /= per_axis;
                const Interval& whole = box[axes[a]];
                const double w = whole.width() / double(per_axis);
                const double lo = whole.lo + w * double(k);
                const double hi = (k + 1 == std::size_t(per_axis)) ? whole.hi : lo + w;
                cell_box[axes[a]] = Interval(lo, hi);
            }
            return certify::abs(e.eval_interval(cell_box)).hi;
        } catch (...) {
            std::lock_guard<std::mutex> lk(error_mu);
            if (!error) error = std::current_exception();
            return 0.0;
        }
    };
    auto fold = [](double a, double b) { return a > b ? a : b; };
    const double result =
        Parallel ? par::parallel_reduce<double>(std::size_t(ncells), 0.0, cell_value, fold)
                 : par::serial_reduce<double>(std::size_t(ncells), 0.0, cell_value, fold);
    if (error) std::rethrow_exception(error);
    return result;
}

} // namespace

double bound_sup_abs(const Expr& e, std::span<const Interval> box, int subdivisions) {
    return sup_abs_impl<true>(e, box, subdivisions);
}

double bound_sup_abs_serial(const Expr& e, std::span<const Interval> box, int subdivisions) {
    return sup_abs_impl<false>(e, box, subdivisions);
}

double lipschitz_bound(const Expr& e, std::span<const Interval> box, int subdivisions) {
    double sq = 0.0;
    for (std::size_t j = 0; j < box.size(); ++j) {
        const Expr d = e.diff(j);
        if (d.is_const(0.0)) continue;
        const double s = bound_sup_abs(d, box, subdivisions);
        sq += s * s;
    }
    return std::sqrt(sq);
}

double grid_max_abs(const Expr& e, std::span<const Interval> box, int points_per_axis) {
    const auto axes = active_axes(e, box.size());
    long per_axis = std::max(2, points_per_axis);
    if (!axes.empty()) {
        while (per_axis > 2 &&
               std::pow(double(per_axis), double(axes.size())) > double(kMaxCells))
            --per_axis;
    }
    long npoints = 1;
    for (std::size_t a = 0; a < axes.size(); ++a) npoints *= per_axis;

    std::exception_ptr error;
    std::mutex error_mu;
    auto point_value = [&](std::size_t idx) -> double {
        try {
            std::vector<double> pt(box.size());
            for (std::size_t v = 0; v < box.size(); ++v) pt[v] = 0.5 * (box[v].lo + box[v].hi);
            std::size_t rest = idx;
            for (std::size_t a = 0; a < axes.size(); ++a) {
                const std::size_t k = rest % per_axis;
                rest /= per_axis;
                const Interval& whole = box[axes[a]];
                pt[axes[a]] = whole.lo + whole.width() * double(k) / double(per_axis - 1);
            }
            return std::fabs(e.eval(pt));
        } catch (...) {
            std::lock_guard<std::mutex> lk(error_mu);
            if (!error) error = std::current_exception();
            return 0.0;
        }
    };
    auto fold = [](double a, double b) { return a > b ? a : b; };
    const double result =
        par::parallel_reduce<double>(std::size_t(npoints), 0.0, point_value, fold);
    if (error) std::rethrow_exception(error);
    return result;
}

} // namespace certify

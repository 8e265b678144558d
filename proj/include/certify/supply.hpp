#ifndef CERTIFY_SUPPLY_HPP
#define CERTIFY_SUPPLY_HPP

#include <string>
#include <vector>

#include "certify/linalg.hpp"
#include "certify/poly.hpp"

namespace certify {

struct SupplyError : std::runtime_error {
    explicit SupplyError(const std::string& what) : std::runtime_error(what) {}
};

enum class SupplyKind { passivity, ofp, ifp, ifofp, qsr, l2gain };

// Quadratic supply rate w(u, y) = u'Ru + 2 y'Su + y'Qy.  The OFP/IFP index
// can be a fixed number or the optimization objective.
struct SupplyRate {
    SupplyKind kind = SupplyKind::passivity;
    std::size_t m = 0, p = 0;
    la::Matrix Q, S, R;       // p x p, p x m, m x m
    double rho = 0.0;         // OFP index when fixed
    double nu = 0.0;          // IFP index when fixed
    double gamma = 0.0;       // L2 gain
    bool index_is_decision = false;

    // w with the index fixed at `index_value` (used for validation)
    double eval(std::span<const double> u, std::span<const double> y,
                double index_value) const;

    // Known polynomial part of w(u, y_polys) with the index at zero.
    Polynomial base_poly(const std::vector<Polynomial>& y_polys,
                         const std::vector<Polynomial>& u_polys) const;

    // Coefficient polynomial multiplying the decision index
    // (-y'y for OFP, -u'u for IFP); zero polynomial when the index is fixed.
    Polynomial index_coeff_poly(const std::vector<Polynomial>& y_polys,
                                const std::vector<Polynomial>& u_polys) const;
};

SupplyRate make_supply_passivity(std::size_t m, std::size_t p);
SupplyRate make_supply_ofp(std::size_t m, std::size_t p, double rho, bool decision);
SupplyRate make_supply_ifp(std::size_t m, std::size_t p, double nu, bool decision);
SupplyRate make_supply_ifofp(std::size_t m, std::size_t p, double rho, double nu);
SupplyRate make_supply_l2gain(std::size_t m, std::size_t p, double gamma);
SupplyRate make_supply_qsr(la::Matrix Q, la::Matrix S, la::Matrix R);

} // namespace certify

#endif

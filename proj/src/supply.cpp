#include "certify/supply.hpp"

#include <cmath>

namespace certify {

namespace {

void check_symmetric(const la::Matrix& m, const char* name) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::fabs(m(i, j) - m(j, i)) > 1e-12)
                throw SupplyError(std::string(name) + " matrix must be symmetric");
}

} // namespace

double SupplyRate::eval(std::span<const double> u, std::span<const double> y,
                        double index_value) const {
    double w = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) w += u[i] * R(i, j) * u[j];
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < m; ++j) w += 2.0 * y[i] * S(i, j) * u[j];
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) w += y[i] * Q(i, j) * y[j];
    if (index_is_decision) {
        if (kind == SupplyKind::ofp) {
            for (std::size_t i = 0; i < p; ++i) w -= index_value * y[i] * y[i];
        } else if (kind == SupplyKind::ifp) {
            for (std::size_t i = 0; i < m; ++i) w -= index_value * u[i] * u[i];
        }
    }
    return w;
}

Polynomial SupplyRate::base_poly(const std::vector<Polynomial>& y_polys,
                                 const std::vector<Polynomial>& u_polys) const {
    if (y_polys.size() != p || u_polys.size() != m)
        throw SupplyError("supply rate dimension mismatch");
    const auto vars = m > 0 ? u_polys[0].vars() : y_polys.at(0).vars();
    Polynomial w(vars);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (R(i, j) != 0.0) w = w + u_polys[i] * u_polys[j] * R(i, j);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (S(i, j) != 0.0) w = w + y_polys[i] * u_polys[j] * (2.0 * S(i, j));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            if (Q(i, j) != 0.0) w = w + y_polys[i] * y_polys[j] * Q(i, j);
    return w;
}

Polynomial SupplyRate::index_coeff_poly(const std::vector<Polynomial>& y_polys,
                                        const std::vector<Polynomial>& u_polys) const {
    const auto vars = m > 0 ? u_polys.at(0).vars() : y_polys.at(0).vars();
    Polynomial c(vars);
    if (!index_is_decision) return c;
    if (kind == SupplyKind::ofp) {
        for (std::size_t i = 0; i < p; ++i) c = c - y_polys[i] * y_polys[i];
    } else if (kind == SupplyKind::ifp) {
        for (std::size_t i = 0; i < m; ++i) c = c - u_polys[i] * u_polys[i];
    }
    return c;
}

SupplyRate make_supply_passivity(std::size_t m, std::size_t p) {
    if (m != p) throw SupplyError("passivity requires m == p");
    SupplyRate s;
    s.kind = SupplyKind::passivity;
    s.m = m;
    s.p = p;
    s.Q = la::Matrix(p, p);
    s.S = la::Matrix::identity(p, 0.5);
    s.R = la::Matrix(m, m);
    return s;
}

SupplyRate make_supply_ofp(std::size_t m, std::size_t p, double rho, bool decision) {
    SupplyRate s = make_supply_passivity(m, p);
    s.kind = SupplyKind::ofp;
    s.rho = rho;
    s.index_is_decision = decision;
    if (!decision)
        for (std::size_t i = 0; i < p; ++i) s.Q(i, i) = -rho;
    return s;
}

SupplyRate make_supply_ifp(std::size_t m, std::size_t p, double nu, bool decision) {
    SupplyRate s = make_supply_passivity(m, p);
    s.kind = SupplyKind::ifp;
    s.nu = nu;
    s.index_is_decision = decision;
    if (!decision)
        for (std::size_t i = 0; i < m; ++i) s.R(i, i) = -nu;
    return s;
}

SupplyRate make_supply_ifofp(std::size_t m, std::size_t p, double rho, double nu) {
    SupplyRate s = make_supply_passivity(m, p);
    s.kind = SupplyKind::ifofp;
    s.rho = rho;
    s.nu = nu;
    for (std::size_t i = 0; i < p; ++i) s.Q(i, i) = -rho;
    for (std::size_t i = 0; i < m; ++i) s.R(i, i) = -nu;
    return s;
}

SupplyRate make_supply_l2gain(std::size_t m, std::size_t p, double gamma) {
    SupplyRate s;
    s.kind = SupplyKind::l2gain;
    s.m = m;
    s.p = p;
    s.gamma = gamma;
    s.Q = la::Matrix::identity(p, -1.0);
    s.S = la::Matrix(p, m);
    s.R = la::Matrix::identity(m, gamma * gamma);
    return s;
}

SupplyRate make_supply_qsr(la::Matrix Q, la::Matrix S, la::Matrix R) {
    check_symmetric(Q, "Q");
    check_symmetric(R, "R");
    if (S.rows() != Q.rows() || S.cols() != R.rows())
        throw SupplyError("S matrix has inconsistent dimensions");
    SupplyRate s;
    s.kind = SupplyKind::qsr;
    s.p = Q.rows();
    s.m = R.rows();
    s.Q = std::move(Q);
    s.S = std::move(S);
    s.R = std::move(R);
    return s;
}

} // namespace certify

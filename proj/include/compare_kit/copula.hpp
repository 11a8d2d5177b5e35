#pragma once

namespace compare_kit::copula {

// Gumbel (Gumbel-Hougaard) copula
//   C(u,v) = exp(-[(-ln u)^theta + (-ln v)^theta]^(1/theta)),  theta >= 1.
// theta = 1 is independence; theta -> infinity approaches min(u, v).
double gumbel_cdf(double u, double v, double theta);

// dC/du and dC/dv.
double gumbel_du(double u, double v, double theta);
double gumbel_dv(double u, double v, double theta);

// The same quantities parameterised by x = -ln u and y = -ln v, which keeps
// full precision when u or v is close to 1 (cumulative hazards near t = 0).
struct GumbelPoint {
    double value = 0.0;  // C
    double du = 0.0;     // dC/du
    double dv = 0.0;     // dC/dv
};
GumbelPoint gumbel_from_logs(double x, double y, double theta);

// 12 * integral of C over the unit square - 3, by nested quadrature.
double spearman_of_gumbel(double theta);

// Inverse of spearman_of_gumbel on [1, 50]; rho_s must lie in [0, 1).
double gumbel_theta_from_spearman(double rho_s);

// Closed form 1 - 1/theta.
double kendall_of_gumbel(double theta);

}  // namespace compare_kit::copula

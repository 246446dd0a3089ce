#pragma once

#include "katufrac/numerics.hpp"
#include "katufrac/solver.hpp"

namespace katufrac {

/// Implicit example: alpha = beta = 1/2, c = 1 - a, envelope p.
/// Throws DomainError for other orders or theta outside (0, 1].
ProblemSpec example1(double theta, const Params& params);

/// Explicit example: alpha = beta = 1/2, c = 1 - a, b <= e, with
/// p, Phi = e^3, q = p / Phi and the Lipschitz weight phi = p / (tau^{1-gamma} Phi).
ProblemSpec example2(double theta, const Params& params);

/// lambda_phi as printed for example2.
double example2_claimed_lambda();

/// (1/8) tau^{-1/4}, the printed bound on tau^{1/4} (I^{1/2} p)(t) for example1.
double example1_decay_bound(double u);

/// f(t, x) = tau^sigma, c = 0; exact x = Gamma(sigma+1)/Gamma(sigma+alpha+1) tau^{sigma+alpha}.
ProblemSpec manufactured(double sigma, const Params& params);

/// f(t, x) = kappa tau^{1-gamma} x with Phi = 1, phi = kappa and kappa chosen so
/// that the contraction constant on [a, b] equals L. The exact solution is the
/// convergent power series of the linear Volterra equation.
ProblemSpec linear_contraction(double L, const Params& params);

/// f(t, x, y) = p(t) / (1 + |x| + |y|) with p = kappa tau^sigma, sigma in (-1, 0),
/// f(a, ., .) = 0. The weighted envelope decays when sigma < gamma - 1 - alpha.
ProblemSpec attractive_manufactured(double sigma, double kappa, const Params& params);

}  // namespace katufrac

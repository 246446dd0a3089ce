#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "katufrac/numerics.hpp"

namespace katufrac {

/**
 * Product-trapezoidal weights for the Abel kernel on a graded u-mesh.
 *
 * Row j holds w_{j,0..j} with
 *
 *     (1/Gamma(order)) \int_0^{u_j} (u_j - u)^{order-1} g(u) du  ~=  sum_i w_{j,i} g_i
 *
 * for g piecewise linear between nodes. The moments over each interval are
 * evaluated in closed form, switching to a binomial series when the interval
 * is short relative to its distance from u_j (the closed form cancels there).
 *
 * When g_0 is not finite (a sentinel, or an integrable singularity at u = 0)
 * the first interval is integrated against a power law fitted through nodes
 * 1 and 2 instead of the linear interpolant.
 *
 * Immutable after construction; safe to share between threads.
 */
class ProductIntegrator {
public:
    ProductIntegrator(MeshPtr mesh, double order);

    const MeshPtr& mesh() const { return mesh_; }
    double order() const { return order_; }

    /// Applies the integral to samples g (length n+1); node 0 of the result is 0.
    std::vector<double> apply(std::span<const double> g) const;

    /// Weight row j (length j+1).
    std::span<const double> row(std::size_t j) const;

private:
    MeshPtr mesh_;
    double order_;
    std::vector<double> weights_;        // packed lower triangle
    std::vector<std::size_t> offsets_;
    std::vector<double> first_right_;    // right weight of interval 0 in each row
};

/// Katugampola integral of order in (0,1] at every node.
GridFn frac_integral(const GridFn& g, double order, const Params& params);

/// Integral of coef*tau^{mu-1} + h: the power term by its closed form, h by
/// product integration. Node 0 holds the sentinel when mu + order < 1.
GridFn frac_integral_weighted(double coef, double mu, const GridFn& h, double order,
                              const Params& params);

/// Katugampola integral of fn at the single point t_end, via product
/// integration on an n-node graded mesh of [a, t_end]. O(n) work.
double frac_integral_at(const std::function<double(double)>& fn, double order,
                        const Params& params, double t_end, std::size_t n,
                        std::optional<double> grading = std::nullopt);

/// d/du by second-order nonuniform three-point stencils; one-sided at both ends.
std::vector<double> u_derivative(const Mesh& mesh, std::span<const double> values);

/// ^rho D^order g = delta_rho ^rho I^{1-order} g. Node 0 holds the sentinel.
GridFn frac_derivative(const GridFn& g, double order, const Params& params);

/// ^rho D^order of coef*tau^{mu-1} + h.
GridFn frac_derivative_weighted(double coef, double mu, const GridFn& h, double order,
                                const Params& params);

/// Katugampola derivative of g(t) - g(a).
GridFn caputo_derivative(const GridFn& g, double order, const Params& params);

/// I^{beta(1-alpha)} delta_rho I^{(1-beta)(1-alpha)} g. Node 0 holds the sentinel.
GridFn generalized_derivative(const GridFn& g, const Params& params);

/// Generalized derivative of coef*tau^{mu-1} + h. Requires mu >= gamma.
GridFn generalized_derivative_weighted(double coef, double mu, const GridFn& h,
                                       const Params& params);

/// I^{beta(1-alpha)} D^gamma g, with D^gamma evaluated by differentiating g
/// first (g(a) tau^{-gamma}/Gamma(1-gamma) + I^{1-gamma} dg/du). Independent
/// of the route generalized_derivative takes; used to cross-check it.
GridFn remark1_form(const GridFn& g, const Params& params);

GridFn remark1_form_weighted(double coef, double mu, const GridFn& h, const Params& params);

}  // namespace katufrac

#include "katufrac/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace katufrac {

void Params::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("alpha must lie in (0,1)");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw DomainError("beta must lie in [0,1]");
    }
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw DomainError("rho must be positive");
    }
    if (!(a > 0.0) || !(b > a) || !std::isfinite(b)) {
        throw DomainError("interval must satisfy 0 < a < b < inf");
    }
    if (!std::isfinite(c)) {
        throw DomainError("initial value must be finite");
    }
}

Params Params::make(double alpha, double beta, double rho, double a, double b, double c)
{
    Params p{alpha, beta, rho, a, b, c};
    p.validate();
    return p;
}

double gamma_fn(double x)
{
    if (!(x > 0.0)) {
        throw DomainError("gamma_fn requires x > 0");
    }
    return std::tgamma(x);
}

double reciprocal_gamma(double x)
{
    if (x <= 0.0 && x == std::nearbyint(x)) {
        return 0.0;
    }
    if (x > 171.0) {
        return 0.0;
    }
    return 1.0 / std::tgamma(x);
}

double tau(double t, const Params& params)
{
    if (t < params.a) {
        throw DomainError("tau requires t >= a");
    }
    if (t == params.a) {
        return 0.0;
    }
    if (params.rho == 1.0) {
        return t - params.a;
    }
    // a^rho * expm1(rho*log(t/a)) / rho keeps digits when t is close to a
    const double ar = std::pow(params.a, params.rho);
    return ar * std::expm1(params.rho * std::log(t / params.a)) / params.rho;
}

double t_from_tau(double u, const Params& params)
{
    if (u < 0.0) {
        throw DomainError("t_from_tau requires u >= 0");
    }
    if (u == 0.0) {
        return params.a;
    }
    if (params.rho == 1.0) {
        return params.a + u;
    }
    const double ar = std::pow(params.a, params.rho);
    return params.a * std::exp(std::log1p(params.rho * u / ar) / params.rho);
}

double auto_grading(double gamma)
{
    return std::min(5.0, std::max(1.0, 2.0 / gamma));
}

Mesh::Mesh(const Params& params, std::size_t n, double grading)
    : n_(n), grading_(grading), a_(params.a), b_(params.b), rho_(params.rho)
{
    if (n == 0) {
        throw DomainError("mesh needs n >= 1");
    }
    if (!(grading >= 1.0) || !std::isfinite(grading)) {
        throw DomainError("mesh grading must be >= 1");
    }
    if (!(params.a > 0.0) || !(params.b > params.a) || !(params.rho > 0.0)) {
        throw DomainError("mesh needs 0 < a < b and rho > 0");
    }
    const double U = tau(params.b, params);
    u_.resize(n + 1);
    t_.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n);
        u_[i] = grading == 1.0 ? U * frac : U * std::pow(frac, grading);
        t_[i] = t_from_tau(u_[i], params);
    }
    u_[n] = U;
    t_[0] = params.a;
    t_[n] = params.b;
    for (std::size_t i = 1; i <= n; ++i) {
        if (!(u_[i] > u_[i - 1])) {
            std::ostringstream msg;
            msg << "mesh nodes collapse at i=" << i << " (n=" << n << ", grading=" << grading << ")";
            throw DomainError(msg.str());
        }
    }
}

bool Mesh::same_as(const Mesh& other) const
{
    return this == &other ||
           (n_ == other.n_ && a_ == other.a_ && b_ == other.b_ && rho_ == other.rho_ &&
            u_ == other.u_);
}

MeshPtr build_mesh(const Params& params, std::size_t n, std::optional<double> grading)
{
    const double r = grading.value_or(auto_grading(params.gamma()));
    return std::make_shared<const Mesh>(params, n, r);
}

GridFn GridFn::sample(MeshPtr mesh, const std::function<double(double)>& fn)
{
    GridFn g{std::move(mesh), {}};
    g.values.reserve(g.mesh->size());
    for (double t : g.mesh->t()) {
        g.values.push_back(fn(t));
    }
    return g;
}

GridFn GridFn::sample_u(MeshPtr mesh, const std::function<double(double)>& fn)
{
    GridFn g{std::move(mesh), {}};
    g.values.reserve(g.mesh->size());
    for (double u : g.mesh->u()) {
        g.values.push_back(fn(u));
    }
    return g;
}

GridFn GridFn::constant(MeshPtr mesh, double value)
{
    const std::size_t m = mesh->size();
    return GridFn{std::move(mesh), std::vector<double>(m, value)};
}

void GridFn::validate(bool allow_sentinel) const
{
    if (!mesh) {
        throw DomainError("grid function has no mesh");
    }
    if (values.size() != mesh->size()) {
        throw DomainError("grid function length does not match its mesh");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i == 0 && allow_sentinel && std::isnan(values[i])) {
            continue;
        }
        if (!std::isfinite(values[i])) {
            throw DomainError("grid function has a non-finite sample at node " + std::to_string(i));
        }
    }
}

double sup_norm(std::span<const double> v, std::size_t first)
{
    double m = 0.0;
    for (std::size_t i = first; i < v.size(); ++i) {
        if (!std::isnan(v[i])) {
            m = std::max(m, std::abs(v[i]));
        }
    }
    return m;
}

double sup_diff(std::span<const double> a, std::span<const double> b, std::size_t first)
{
    const std::size_t m = std::min(a.size(), b.size());
    double d = 0.0;
    for (std::size_t i = first; i < m; ++i) {
        const double e = a[i] - b[i];
        if (!std::isnan(e)) {
            d = std::max(d, std::abs(e));
        }
    }
    return d;
}

}  // namespace katufrac

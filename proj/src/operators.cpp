#include "katufrac/operators.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace katufrac {

namespace {

constexpr double kSeriesSwitch = 0.5;

struct HatPair {
    double left;
    double right;
};

// Moments of (u_j - u)^{order-1} against the two hat functions on [u_k, u_{k+1}],
// where far = u_j - u_k, near = u_j - u_{k+1}, width = u_{k+1} - u_k.
HatPair hat_moments(double far, double near, double width, double order)
{
    const double x = width / far;
    if (x <= kSeriesSwitch) {
        // (1 - x s)^{order-1} = sum_m c_m (x s)^m,  c_m = (1-order)_m / m!
        double c = 1.0;
        double xm = 1.0;
        double sum_left = 0.0;
        double sum_right = 0.0;
        for (int m = 0; m < 200; ++m) {
            const double term = c * xm;
            const double dm = static_cast<double>(m);
            sum_right += term / (dm + 2.0);
            sum_left += term / ((dm + 1.0) * (dm + 2.0));
            if (term < 1e-18 * sum_right) {
                break;
            }
            c *= (dm + 1.0 - order) / (dm + 1.0);
            xm *= x;
            if (c == 0.0) {
                break;
            }
        }
        const double base = width * std::pow(far, order - 1.0);
        return {base * sum_left, base * sum_right};
    }
    const double far_pow = std::pow(far, order);
    const double near_pow = near > 0.0 ? std::pow(near, order) : 0.0;
    const double zeroth = (far_pow - near_pow) / order;
    const double first = far * zeroth - (far_pow * far - near_pow * near) / (order + 1.0);
    const double right = first / width;
    return {zeroth - right, right};
}

// Fills w[0..j] with the (unnormalized) product-trapezoid weights of row j and
// returns the right weight contributed by interval 0.
double fill_row(std::span<const double> u, std::size_t j, double order, std::span<double> w)
{
    std::fill(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(j + 1), 0.0);
    double first_right = 0.0;
    for (std::size_t k = 0; k < j; ++k) {
        const HatPair hp = hat_moments(u[j] - u[k], u[j] - u[k + 1], u[k + 1] - u[k], order);
        w[k] += hp.left;
        w[k + 1] += hp.right;
        if (k == 0) {
            first_right = hp.right;
        }
    }
    return first_right;
}

// \int_0^{u_1} (u_j - u)^{order-1} (u/u_1)^s du, unnormalized.
double power_first_interval(std::span<const double> u, std::size_t j, double order, double s)
{
    const double u1 = u[1];
    if (j == 1) {
        return std::pow(u1, order) * std::exp(std::lgamma(order) + std::lgamma(s + 1.0) -
                                              std::lgamma(order + s + 1.0));
    }
    const double x = u1 / u[j];
    double c = 1.0;
    double xm = 1.0;
    double sum = 0.0;
    for (int m = 0; m < 400; ++m) {
        const double dm = static_cast<double>(m);
        const double term = c * xm / (dm + s + 1.0);
        sum += term;
        if (std::abs(term) < 1e-18 * std::abs(sum)) {
            break;
        }
        c *= (dm + 1.0 - order) / (dm + 1.0);
        xm *= x;
        if (c == 0.0) {
            break;
        }
    }
    return std::pow(u[j], order - 1.0) * u1 * sum;
}

// Local exponent s of g(u) - base ~ (u/u_1)^s near u = 0, fitted through nodes
// 1 and 2. Returns nullopt when the samples do not follow a power law there.
std::optional<double> fitted_exponent(std::span<const double> u, std::span<const double> g, double base)
{
    if (g.size() < 3) {
        return std::nullopt;
    }
    const double d1 = g[1] - base;
    const double d2 = g[2] - base;
    if (!std::isfinite(d1) || !std::isfinite(d2) || d1 == 0.0 || d2 == 0.0 || (d1 > 0) != (d2 > 0)) {
        return std::nullopt;
    }
    return std::log(d2 / d1) / std::log(u[2] / u[1]);
}

// Contribution of the first interval [0, u_1] to row j when the integrand is
// base + (g_1 - base)(u/u_1)^s there, minus what the linear hat weights give.
// With a non-finite g_0 the integrand is g_1 (u/u_1)^s and the g_0 weight is dropped.
double first_interval_correction(std::span<const double> u, std::span<const double> g, std::size_t j,
                                 double order, double first_right)
{
    const bool finite_start = std::isfinite(g[0]);
    const double base = finite_start ? g[0] : 0.0;
    const auto s = fitted_exponent(u, g, base);
    if (finite_start) {
        if (!s || !(*s > 0.0) || std::abs(*s - 1.0) < 1e-12) {
            return 0.0;
        }
        return (g[1] - base) * (power_first_interval(u, j, order, *s) - first_right);
    }
    const double exponent = s.value_or(0.0);
    if (!(exponent > -1.0)) {
        throw DomainError("integrand is not integrable at t = a (local exponent <= -1)");
    }
    return g[1] * (power_first_interval(u, j, order, exponent) - first_right);
}

void check_order(double order)
{
    if (!(order > 0.0 && order <= 1.0)) {
        throw DomainError("integral order must lie in (0,1]");
    }
}

void check_mesh(const GridFn& g, const Params& params)
{
    if (!g.mesh) {
        throw DomainError("grid function has no mesh");
    }
    const Mesh& m = *g.mesh;
    if (m.a() != params.a || m.b() != params.b || m.rho() != params.rho) {
        throw DomainError("mesh does not discretize the interval of params");
    }
    g.validate(true);
}

void check_derivative_mesh(const Mesh& mesh)
{
    if (mesh.n() < 8) {
        throw DomainError("mesh too coarse for the derivative stencil (n < 8)");
    }
}

std::vector<double> integrate(const MeshPtr& mesh, std::span<const double> values, double order)
{
    if (order == 0.0) {
        return {values.begin(), values.end()};
    }
    return ProductIntegrator(mesh, order).apply(values);
}

// coef * Gamma(mu) / Gamma(mu - shift) * u^{mu - 1 - shift} at i >= 1; the
// power rule for derivative-type operators lowering the exponent by shift.
void add_power_rule(std::vector<double>& out, const Mesh& mesh, double coef, double mu, double shift)
{
    // tau^{shift-1} is annihilated; a fitted exponent this close counts as that power
    if (coef == 0.0 || std::abs(mu - shift) <= 1e-6) {
        return;
    }
    const double k = coef * gamma_fn(mu) * reciprocal_gamma(mu - shift);
    if (k == 0.0) {
        return;
    }
    for (std::size_t i = 1; i < out.size(); ++i) {
        out[i] += k * std::pow(mesh.u(i), mu - 1.0 - shift);
    }
}

// g = base + coef * u^expo + rest, with rest vanishing at nodes 0, 1 and 2.
// The power term is differentiated exactly by every derivative operator, so
// stencils only ever see the remainder.
struct LeadingPower {
    double base = 0.0;
    double coef = 0.0;
    double expo = 1.0;
    std::vector<double> rest;
};

LeadingPower split_leading_power(const Mesh& mesh, std::span<const double> g)
{
    LeadingPower lp;
    const bool finite_start = std::isfinite(g[0]);
    lp.base = finite_start ? g[0] : 0.0;
    lp.rest.assign(g.begin(), g.end());
    for (double& v : lp.rest) {
        v -= lp.base;
    }
    lp.rest[0] = 0.0;
    const auto u = mesh.u();
    const auto s = fitted_exponent(u, g, lp.base);
    if (!finite_start && (!s || !(*s > -1.0) || *s > 0.0)) {
        throw DomainError("samples are singular at t = a without a power law of exponent in (-1, 0]");
    }
    if (!s || (finite_start && !(*s > 0.0)) || *s > 8.0) {
        return lp;
    }
    lp.expo = *s;
    lp.coef = (g[1] - lp.base) / std::pow(u[1], lp.expo);
    for (std::size_t i = 1; i < lp.rest.size(); ++i) {
        lp.rest[i] -= lp.coef * std::pow(u[i], lp.expo);
    }
    lp.rest[1] = 0.0;
    lp.rest[2] = 0.0;
    return lp;
}

}  // namespace

ProductIntegrator::ProductIntegrator(MeshPtr mesh, double order)
    : mesh_(std::move(mesh)), order_(order)
{
    check_order(order);
    const std::size_t n = mesh_->n();
    const auto u = mesh_->u();
    offsets_.resize(n + 2);
    offsets_[0] = 0;
    for (std::size_t j = 0; j <= n; ++j) {
        offsets_[j + 1] = offsets_[j] + j + 1;
    }
    weights_.assign(offsets_[n + 1], 0.0);
    first_right_.assign(n + 1, 0.0);
    const double norm = 1.0 / gamma_fn(order);
    for (std::size_t j = 1; j <= n; ++j) {
        std::span<double> w(weights_.data() + offsets_[j], j + 1);
        first_right_[j] = fill_row(u, j, order, w) * norm;
        for (double& v : w) {
            v *= norm;
        }
    }
}

std::span<const double> ProductIntegrator::row(std::size_t j) const
{
    return {weights_.data() + offsets_[j], j + 1};
}

// For g singular at u = 0 with g ~ c u^s, s in (-1, 0): the fitted power
// law, which is integrated exactly while only g - c u^s is interpolated.
struct SingularPower {
    double coef;
    double expo;
};

std::optional<SingularPower> singular_power(std::span<const double> u, std::span<const double> g)
{
    if (std::isfinite(g[0])) {
        return std::nullopt;
    }
    const auto s = fitted_exponent(u, g, 0.0);
    if (!s || !(*s < 0.0) || !(*s > -1.0)) {
        return std::nullopt;
    }
    return SingularPower{g[1] / std::pow(u[1], *s), *s};
}

std::vector<double> subtract_power(std::span<const double> u, std::span<const double> g,
                                   const SingularPower& sp)
{
    std::vector<double> rem(g.size());
    rem[0] = 0.0;
    rem[1] = 0.0;
    for (std::size_t i = 2; i < g.size(); ++i) {
        rem[i] = g[i] - sp.coef * std::pow(u[i], sp.expo);
    }
    return rem;
}

double power_integral(const SingularPower& sp, double order, double uj)
{
    return sp.coef * gamma_fn(sp.expo + 1.0) / gamma_fn(sp.expo + 1.0 + order) * std::pow(uj, sp.expo + order);
}

std::vector<double> ProductIntegrator::apply(std::span<const double> g) const
{
    const std::size_t n = mesh_->n();
    if (g.size() != n + 1) {
        throw DomainError("sample count does not match the integrator mesh");
    }
    if (n >= 2) {
        if (const auto sp = singular_power(mesh_->u(), g)) {
            std::vector<double> out = apply(subtract_power(mesh_->u(), g, *sp));
            for (std::size_t j = 1; j <= n; ++j) {
                out[j] += power_integral(*sp, order_, mesh_->u(j));
            }
            return out;
        }
    }
    std::vector<double> out(n + 1, 0.0);
    const bool finite_start = std::isfinite(g[0]);
    const std::size_t first = finite_start ? 0 : 1;
    for (std::size_t j = 1; j <= n; ++j) {
        const double* w = weights_.data() + offsets_[j];
        double acc = 0.0;
        for (std::size_t i = first; i <= j; ++i) {
            acc += w[i] * g[i];
        }
        out[j] = acc;
    }
    if (n < 2) {
        if (!finite_start) {
            throw DomainError("a singular integrand needs n >= 2");
        }
        return out;
    }
    const auto u = mesh_->u();
    const double norm = 1.0 / gamma_fn(order_);
    for (std::size_t j = 1; j <= n; ++j) {
        out[j] += norm * first_interval_correction(u, g, j, order_, first_right_[j] / norm);
    }
    return out;
}

// Generalized derivative of the split's power term. tau^{gamma-1} is annihilated;
// a fitted exponent within kSnap of gamma - 1 is taken to be that power.
void add_generalized_power(std::vector<double>& out, const Mesh& mesh, const LeadingPower& lp,
                           const Params& params)
{
    constexpr double kSnap = 1e-6;
    if (lp.coef == 0.0) {
        return;
    }
    const double mu = lp.expo + 1.0;
    const double gamma = params.gamma();
    if (std::abs(mu - gamma) <= kSnap) {
        return;
    }
    if (mu < gamma) {
        throw DomainError("samples behave like tau^s with s < gamma - 1 at t = a");
    }
    add_power_rule(out, mesh, lp.coef, mu, params.alpha);
}

GridFn frac_integral(const GridFn& g, double order, const Params& params)
{
    check_order(order);
    check_mesh(g, params);
    return GridFn{g.mesh, ProductIntegrator(g.mesh, order).apply(g.values)};
}

GridFn frac_integral_weighted(double coef, double mu, const GridFn& h, double order,
                              const Params& params)
{
    if (!(mu > 0.0)) {
        throw DomainError("power exponent mu must be positive");
    }
    GridFn out = frac_integral(h, order, params);
    if (coef == 0.0) {
        return out;
    }
    const double k = coef * gamma_fn(mu) / gamma_fn(mu + order);
    const double e = mu + order - 1.0;
    for (std::size_t i = 1; i < out.size(); ++i) {
        out.values[i] += k * std::pow(out.mesh->u(i), e);
    }
    if (e == 0.0) {
        out.values[0] += k;
    } else if (e < 0.0) {
        out.values[0] = kSentinel;
    }
    return out;
}

double frac_integral_at(const std::function<double(double)>& fn, double order,
                        const Params& params, double t_end, std::size_t n,
                        std::optional<double> grading)
{
    check_order(order);
    Params local = params;
    local.b = t_end;
    const MeshPtr mesh = build_mesh(local, n, grading);
    const auto u = mesh->u();
    std::vector<double> g(mesh->size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = fn(mesh->t(i));
    }
    double singular_part = 0.0;
    if (n >= 2) {
        if (const auto sp = singular_power(u, g)) {
            singular_part = power_integral(*sp, order, u[n]);
            g = subtract_power(u, g, *sp);
        }
    }
    std::vector<double> w(n + 1);
    const double first_right = fill_row(u, n, order, w);
    const std::size_t first = std::isfinite(g[0]) ? 0 : 1;
    double acc = 0.0;
    for (std::size_t i = first; i <= n; ++i) {
        acc += w[i] * g[i];
    }
    if (n >= 2) {
        acc += first_interval_correction(u, g, n, order, first_right);
    }
    return acc / gamma_fn(order) + singular_part;
}

std::vector<double> u_derivative(const Mesh& mesh, std::span<const double> f)
{
    const std::size_t n = mesh.n();
    if (f.size() != n + 1) {
        throw DomainError("sample count does not match the mesh");
    }
    if (n < 2) {
        throw DomainError("derivative stencil needs n >= 2");
    }
    const auto u = mesh.u();
    std::vector<double> d(n + 1);
    for (std::size_t j = 1; j < n; ++j) {
        const double h1 = u[j] - u[j - 1];
        const double h2 = u[j + 1] - u[j];
        d[j] = -h2 / (h1 * (h1 + h2)) * f[j - 1] + (h2 - h1) / (h1 * h2) * f[j] +
               h1 / (h2 * (h1 + h2)) * f[j + 1];
    }
    {
        const double h1 = u[1] - u[0];
        const double h2 = u[2] - u[1];
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
               h1 / (h2 * (h1 + h2)) * f[2];
    }
    {
        const double h1 = u[n - 1] - u[n - 2];
        const double h2 = u[n] - u[n - 1];
        d[n] = h2 / (h1 * (h1 + h2)) * f[n - 2] - (h1 + h2) / (h1 * h2) * f[n - 1] +
               (2.0 * h2 + h1) / (h2 * (h1 + h2)) * f[n];
    }
    return d;
}

GridFn frac_derivative(const GridFn& g, double order, const Params& params)
{
    if (!(order > 0.0 && order < 1.0)) {
        throw DomainError("derivative order must lie in (0,1)");
    }
    check_mesh(g, params);
    check_derivative_mesh(*g.mesh);
    const Mesh& mesh = *g.mesh;
    const LeadingPower lp = split_leading_power(mesh, g.values);
    std::vector<double> out = u_derivative(mesh, integrate(g.mesh, lp.rest, 1.0 - order));
    out[0] = kSentinel;
    add_power_rule(out, mesh, lp.base, 1.0, order);
    add_power_rule(out, mesh, lp.coef, lp.expo + 1.0, order);
    return GridFn{g.mesh, std::move(out)};
}

GridFn frac_derivative_weighted(double coef, double mu, const GridFn& h, double order,
                                const Params& params)
{
    if (!(mu > 0.0)) {
        throw DomainError("power exponent mu must be positive");
    }
    GridFn out = frac_derivative(h, order, params);
    add_power_rule(out.values, *out.mesh, coef, mu, order);
    return out;
}

GridFn caputo_derivative(const GridFn& g, double order, const Params& params)
{
    check_mesh(g, params);
    GridFn shifted = g;
    for (double& v : shifted.values) {
        v -= g.values[0];
    }
    shifted.values[0] = 0.0;
    return frac_derivative(shifted, order, params);
}

GridFn generalized_derivative(const GridFn& g, const Params& params)
{
    params.validate();
    check_mesh(g, params);
    check_derivative_mesh(*g.mesh);
    const Mesh& mesh = *g.mesh;
    const double inner = (1.0 - params.beta) * (1.0 - params.alpha);
    const double outer = params.beta * (1.0 - params.alpha);

    const LeadingPower lp = split_leading_power(mesh, g.values);
    std::vector<double> d = u_derivative(mesh, integrate(g.mesh, lp.rest, inner));
    if (inner > 0.0) {
        // singular at u = 0 in general; the outer integral fits a power law there
        d[0] = kSentinel;
    }
    std::vector<double> out = integrate(g.mesh, d, outer);
    out[0] = kSentinel;
    if (inner > 0.0) {
        // I^outer delta I^inner base = base u^{-alpha} / Gamma(1-alpha)
        add_power_rule(out, mesh, lp.base, 1.0, params.alpha);
    }
    add_generalized_power(out, mesh, lp, params);
    return GridFn{g.mesh, std::move(out)};
}

GridFn generalized_derivative_weighted(double coef, double mu, const GridFn& h,
                                       const Params& params)
{
    if (coef != 0.0 && mu < params.gamma() - 1e-14) {
        throw DomainError("generalized derivative of tau^{mu-1} needs mu >= gamma");
    }
    GridFn out = generalized_derivative(h, params);
    if (coef != 0.0 && std::abs(mu - params.gamma()) > 1e-14) {
        add_power_rule(out.values, *out.mesh, coef, mu, params.alpha);
    }
    return out;
}

GridFn remark1_form(const GridFn& g, const Params& params)
{
    params.validate();
    check_mesh(g, params);
    check_derivative_mesh(*g.mesh);
    const Mesh& mesh = *g.mesh;
    const double gamma = params.gamma();
    const double outer = params.beta * (1.0 - params.alpha);

    // D^gamma g = g(a) u^{-gamma}/Gamma(1-gamma) + I^{1-gamma} dg/du
    const LeadingPower lp = split_leading_power(mesh, g.values);
    std::vector<double> dg = u_derivative(mesh, lp.rest);
    std::vector<double> dgamma = integrate(g.mesh, dg, 1.0 - gamma);
    std::vector<double> out = integrate(g.mesh, dgamma, outer);
    out[0] = kSentinel;
    if (gamma < 1.0) {
        add_power_rule(out, mesh, lp.base, 1.0, params.alpha);
    }
    add_generalized_power(out, mesh, lp, params);
    return GridFn{g.mesh, std::move(out)};
}

GridFn remark1_form_weighted(double coef, double mu, const GridFn& h, const Params& params)
{
    if (coef != 0.0 && mu < params.gamma() - 1e-14) {
        throw DomainError("remark-1 form of tau^{mu-1} needs mu >= gamma");
    }
    GridFn out = remark1_form(h, params);
    if (coef != 0.0 && std::abs(mu - params.gamma()) > 1e-14) {
        add_power_rule(out.values, *out.mesh, coef, mu, params.alpha);
    }
    return out;
}

}  // namespace katufrac

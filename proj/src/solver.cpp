#include "katufrac/solver.hpp"

#include <cmath>
#include <sstream>

#include "katufrac/operators.hpp"

namespace katufrac {

void ProblemSpec::validate() const
{
    params.validate();
    if (kind == ProblemKind::Explicit && !rhs_explicit) {
        throw DomainError("explicit problem '" + name + "' has no f(t, x)");
    }
    if (kind == ProblemKind::Implicit && !rhs_implicit) {
        throw DomainError("implicit problem '" + name + "' has no f(t, x, y)");
    }
}

ProblemSpec ProblemSpec::with_right_end(double b) const
{
    ProblemSpec out = *this;
    out.params.b = b;
    out.params.validate();
    return out;
}

WeightedFn WeightedFn::from_regular(MeshPtr mesh, double gamma, double singular_coef,
                                    std::vector<double> regular)
{
    WeightedFn w;
    w.mesh = std::move(mesh);
    w.gamma = gamma;
    w.singular_coef = singular_coef;
    w.regular = std::move(regular);
    w.y_values.resize(w.regular.size());
    for (std::size_t i = 0; i < w.regular.size(); ++i) {
        const double weight = i == 0 ? (gamma == 1.0 ? 1.0 : 0.0) : std::pow(w.mesh->u(i), 1.0 - gamma);
        w.y_values[i] = singular_coef + weight * w.regular[i];
    }
    return w;
}

double WeightedFn::x(std::size_t i) const
{
    if (i == 0) {
        if (gamma == 1.0) {
            return singular_coef + regular[0];
        }
        return singular_coef == 0.0 ? regular[0] : kSentinel;
    }
    return singular_coef * std::pow(mesh->u(i), gamma - 1.0) + regular[i];
}

std::vector<double> WeightedFn::x_values() const
{
    std::vector<double> out(regular.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x(i);
    }
    return out;
}

namespace {

// One Picard map per problem; holds the integration weights for the solve.
class PicardMap {
public:
    PicardMap(const ProblemSpec& spec, MeshPtr mesh)
        : spec_(spec), mesh_(std::move(mesh)), integrator_(mesh_, spec.params.alpha),
          gamma_(spec.params.gamma()), coef_(spec.params.c / gamma_fn(gamma_))
    {
        spec_.validate();
        const Mesh& m = *mesh_;
        if (m.a() != spec.params.a || m.b() != spec.params.b || m.rho() != spec.params.rho) {
            throw DomainError("mesh does not discretize the interval of problem '" + spec.name + "'");
        }
        weight_.resize(m.size());
        inv_weight_.resize(m.size());
        for (std::size_t i = 1; i < m.size(); ++i) {
            weight_[i] = std::pow(m.u(i), 1.0 - gamma_);
            inv_weight_[i] = std::pow(m.u(i), gamma_ - 1.0);
        }
    }

    double coef() const { return coef_; }
    double gamma() const { return gamma_; }
    const MeshPtr& mesh() const { return mesh_; }

    bool singular_at_a() const { return gamma_ < 1.0 && coef_ != 0.0; }

    // x(a) when it is finite, for the given regular part value at node 0.
    std::optional<double> x_at_a(double regular0) const
    {
        if (singular_at_a() || !std::isfinite(regular0)) {
            return std::nullopt;
        }
        return regular0 + (gamma_ == 1.0 ? coef_ : 0.0);
    }

    double x_at(std::size_t i, double regular_i) const
    {
        return coef_ * inv_weight_[i] + regular_i;
    }

    std::vector<double> y_from_regular(std::span<const double> regular) const
    {
        std::vector<double> y(regular.size());
        y[0] = coef_ + (gamma_ == 1.0 ? regular[0] : 0.0);
        for (std::size_t i = 1; i < y.size(); ++i) {
            y[i] = coef_ + weight_[i] * regular[i];
        }
        return y;
    }

    std::vector<double> regular_from_y(std::span<const double> y) const
    {
        if (y.size() != mesh_->size()) {
            throw DomainError("initial iterate does not match the mesh");
        }
        std::vector<double> r(y.size());
        if (gamma_ == 1.0) {
            r[0] = y[0] - coef_;
        } else {
            r[0] = y[0] == coef_ ? 0.0 : kSentinel;
        }
        for (std::size_t i = 1; i < y.size(); ++i) {
            r[i] = inv_weight_[i] * (y[i] - coef_);
        }
        return r;
    }

    // f(t_i, x_i) for the explicit problem.
    std::vector<double> explicit_rhs(std::span<const double> regular) const
    {
        const Mesh& m = *mesh_;
        std::vector<double> F(m.size());
        const auto xa = x_at_a(regular[0]);
        F[0] = xa ? spec_.rhs_explicit(m.a(), *xa) : kSentinel;
        for (std::size_t i = 1; i < F.size(); ++i) {
            F[i] = spec_.rhs_explicit(m.t(i), x_at(i, regular[i]));
            check_finite(F[i], i);
        }
        return F;
    }

    // g_{k+1} from g_k for the implicit problem; regular = I^alpha g_k.
    std::vector<double> implicit_step(std::span<const double> g, std::span<const double> regular) const
    {
        const Mesh& m = *mesh_;
        std::vector<double> next(m.size());
        const auto xa = x_at_a(regular[0]);
        next[0] = xa && std::isfinite(g[0]) ? spec_.rhs_implicit(m.a(), *xa, g[0]) : kSentinel;
        for (std::size_t i = 1; i < next.size(); ++i) {
            next[i] = spec_.rhs_implicit(m.t(i), x_at(i, regular[i]), g[i]);
            check_finite(next[i], i);
        }
        return next;
    }

    std::vector<double> integrate(std::span<const double> samples) const
    {
        return integrator_.apply(samples);
    }

private:
    void check_finite(double v, std::size_t i) const
    {
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "right-hand side of '" << spec_.name << "' is not finite at t=" << mesh_->t(i);
            throw DomainError(msg.str());
        }
    }

    ProblemSpec spec_;
    MeshPtr mesh_;
    ProductIntegrator integrator_;
    double gamma_;
    double coef_;
    std::vector<double> weight_;      // u^{1-gamma}
    std::vector<double> inv_weight_;  // u^{gamma-1}
};

void check_options(const SolveOptions& options)
{
    if (!(options.tol > 0.0)) {
        throw DomainError("tolerance must be positive");
    }
    if (options.max_iter < 1) {
        throw DomainError("max_iter must be at least 1");
    }
}

double update_norm(std::span<const double> next, std::span<const double> prev)
{
    return sup_diff(next, prev, 0);
}

}  // namespace

SolveReport solve_explicit(const ProblemSpec& spec, MeshPtr mesh, const SolveOptions& options)
{
    if (spec.kind != ProblemKind::Explicit) {
        throw DomainError("solve_explicit needs an explicit problem");
    }
    check_options(options);
    const PicardMap map(spec, std::move(mesh));
    const std::size_t m = map.mesh()->size();

    std::vector<double> regular(m, 0.0);
    if (options.initial) {
        regular = map.regular_from_y(*options.initial);
    }
    std::vector<double> y = map.y_from_regular(regular);
    if (options.initial) {
        y = *options.initial;
    }

    SolveReport report;
    std::vector<double> F;
    for (int k = 1; k <= options.max_iter; ++k) {
        F = map.explicit_rhs(regular);
        std::vector<double> next_regular = map.integrate(F);
        std::vector<double> next_y = map.y_from_regular(next_regular);
        report.final_update_norm = update_norm(next_y, y);
        report.iterations = k;
        regular = std::move(next_regular);
        y = std::move(next_y);
        if (report.final_update_norm <= options.tol) {
            report.converged = true;
            break;
        }
    }
    report.solution = WeightedFn::from_regular(map.mesh(), map.gamma(), map.coef(), std::move(regular));
    report.aux = std::move(F);
    if (map.mesh()->n() >= 8) {
        report.residual_sup = sup_norm(residual(report.solution, spec).values);
    }
    return report;
}

SolveReport solve_implicit(const ProblemSpec& spec, MeshPtr mesh, const SolveOptions& options)
{
    if (spec.kind != ProblemKind::Implicit) {
        throw DomainError("solve_implicit needs an implicit problem");
    }
    check_options(options);
    const PicardMap map(spec, std::move(mesh));
    const std::size_t m = map.mesh()->size();

    std::vector<double> g(m, 0.0);
    if (options.initial) {
        if (options.initial->size() != m) {
            throw DomainError("initial iterate does not match the mesh");
        }
        g = *options.initial;
    }

    SolveReport report;
    std::vector<double> regular = map.integrate(g);
    for (int k = 1; k <= options.max_iter; ++k) {
        std::vector<double> next = map.implicit_step(g, regular);
        report.final_update_norm = update_norm(next, g);
        report.iterations = k;
        g = std::move(next);
        regular = map.integrate(g);
        if (report.final_update_norm <= options.tol) {
            report.converged = true;
            break;
        }
    }
    // defect of the g-equation at the returned iterate
    report.residual_sup = update_norm(map.implicit_step(g, regular), g);
    report.solution = WeightedFn::from_regular(map.mesh(), map.gamma(), map.coef(), std::move(regular));
    report.aux = std::move(g);
    return report;
}

SolveReport solve(const ProblemSpec& spec, MeshPtr mesh, const SolveOptions& options)
{
    return spec.kind == ProblemKind::Explicit ? solve_explicit(spec, std::move(mesh), options)
                                              : solve_implicit(spec, std::move(mesh), options);
}

const SolveReport& require_converged(const SolveReport& report, const std::string& context)
{
    if (!report.converged) {
        std::ostringstream msg;
        msg << context << ": Picard iteration did not converge after " << report.iterations
            << " iterations (last update " << report.final_update_norm << ")";
        throw NonConvergence(msg.str(), report.iterations, report.final_update_norm);
    }
    return report;
}

GridFn residual(const WeightedFn& sol, const ProblemSpec& spec)
{
    spec.validate();
    if (!sol.mesh || sol.regular.size() != sol.mesh->size()) {
        throw DomainError("weighted function does not match its mesh");
    }
    const Params& p = spec.params;
    if (std::abs(sol.gamma - p.gamma()) > 1e-14) {
        throw DomainError("weighted function was built for a different gamma");
    }
    GridFn regular{sol.mesh, sol.regular};
    if (!std::isfinite(regular.values[0])) {
        regular.values[0] = 0.0;
    }
    // the singular part c tau^{gamma-1} is annihilated exactly
    GridFn d = generalized_derivative_weighted(sol.singular_coef, p.gamma(), regular, p);
    GridFn out{sol.mesh, std::vector<double>(sol.mesh->size(), kSentinel)};
    for (std::size_t i = 1; i < out.size(); ++i) {
        const double t = sol.mesh->t(i);
        const double x = sol.x(i);
        const double f = spec.kind == ProblemKind::Explicit ? spec.rhs_explicit(t, x)
                                                            : spec.rhs_implicit(t, x, d.values[i]);
        out.values[i] = std::abs(d.values[i] - f);
    }
    return out;
}

std::vector<double> picard_contraction_trace(const ProblemSpec& spec, MeshPtr mesh,
                                             const WeightedFn& y_a, const WeightedFn& y_b,
                                             int iterations)
{
    const PicardMap map(spec, std::move(mesh));
    const std::size_t m = map.mesh()->size();
    if (y_a.y_values.size() != m || y_b.y_values.size() != m) {
        throw DomainError("initial iterates do not match the mesh");
    }
    std::vector<double> trace;
    if (spec.kind == ProblemKind::Explicit) {
        std::vector<double> ra = map.regular_from_y(y_a.y_values);
        std::vector<double> rb = map.regular_from_y(y_b.y_values);
        trace.push_back(sup_diff(y_a.y_values, y_b.y_values, 0));
        for (int k = 0; k < iterations && trace.back() > 0.0; ++k) {
            ra = map.integrate(map.explicit_rhs(ra));
            rb = map.integrate(map.explicit_rhs(rb));
            trace.push_back(sup_diff(map.y_from_regular(ra), map.y_from_regular(rb), 0));
        }
        return trace;
    }
    std::vector<double> ga = y_a.y_values;
    std::vector<double> gb = y_b.y_values;
    trace.push_back(sup_diff(ga, gb, 0));
    for (int k = 0; k < iterations && trace.back() > 0.0; ++k) {
        ga = map.implicit_step(ga, map.integrate(ga));
        gb = map.implicit_step(gb, map.integrate(gb));
        trace.push_back(sup_diff(ga, gb, 0));
    }
    return trace;
}

}  // namespace katufrac

#include "katufrac/stability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "katufrac/operators.hpp"

namespace katufrac {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kMaxTSpacing = 0.02;
constexpr std::size_t kMinLimitNodes = 4096;
constexpr std::size_t kMaxLimitNodes = std::size_t{1} << 23;

void require(const Envelope& e, const char* what, const ProblemSpec& spec)
{
    if (!e) {
        throw HypothesisError("problem '" + spec.name + "' ships no envelope " + what);
    }
}

// 0 and +-10^k with k evenly spaced in [-3, 3].
std::vector<double> xy_lattice(std::size_t count)
{
    std::vector<double> out{0.0};
    const std::size_t m = std::max<std::size_t>(count, 2);
    for (std::size_t j = 0; j < m; ++j) {
        const double v = std::pow(10.0, -3.0 + 6.0 * static_cast<double>(j) / static_cast<double>(m - 1));
        out.push_back(v);
        out.push_back(-v);
    }
    return out;
}

std::vector<double> node_samples(const Envelope& fn, const Mesh& mesh)
{
    std::vector<double> v(mesh.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = fn(mesh.t(i));
    }
    return v;
}

// lhs - rhs, ignoring disagreements at the level of rounding in either side
double excess(double lhs, double rhs)
{
    return lhs - rhs - 8.0 * kEps * (std::abs(lhs) + std::abs(rhs));
}

double sup_finite(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) {
        if (std::isfinite(x)) {
            m = std::max(m, x);
        }
    }
    return m;
}

}  // namespace

double check_H2(const ProblemSpec& spec, std::size_t t_samples, std::size_t xy_samples)
{
    spec.validate();
    require(spec.envelopes.p, "p", spec);
    if (spec.kind != ProblemKind::Implicit) {
        throw DomainError("H2 concerns implicit problems");
    }
    const MeshPtr mesh = build_mesh(spec.params, std::max<std::size_t>(t_samples, 1), std::nullopt);
    const std::vector<double> xs = xy_lattice(xy_samples);
    double worst = -std::numeric_limits<double>::infinity();
    for (double t : mesh->t()) {
        const double p = spec.envelopes.p(t);
        for (double x : xs) {
            for (double y : xs) {
                const double f = spec.rhs_implicit(t, x, y);
                worst = std::max(worst, excess(std::abs(f) * (1.0 + std::abs(x) + std::abs(y)), p));
            }
        }
    }
    return worst;
}

double check_H4(const ProblemSpec& spec, std::size_t t_samples, std::size_t xy_samples)
{
    spec.validate();
    require(spec.envelopes.p, "p", spec);
    if (spec.kind != ProblemKind::Explicit) {
        throw DomainError("H4 concerns explicit problems");
    }
    const MeshPtr mesh = build_mesh(spec.params, std::max<std::size_t>(t_samples, 1), std::nullopt);
    const std::vector<double> xs = xy_lattice(xy_samples);
    double worst = -std::numeric_limits<double>::infinity();
    for (double t : mesh->t()) {
        const double p = spec.envelopes.p(t);
        for (double x : xs) {
            const double f = spec.rhs_explicit(t, x);
            worst = std::max(worst, excess(std::abs(f) * (1.0 + std::abs(x)), p));
        }
    }
    return worst;
}

double check_H6(const ProblemSpec& spec, const Mesh& mesh)
{
    require(spec.envelopes.p, "p", spec);
    require(spec.envelopes.q, "q", spec);
    require(spec.envelopes.Phi, "Phi", spec);
    double worst = -std::numeric_limits<double>::infinity();
    for (double t : mesh.t()) {
        worst = std::max(worst, excess(spec.envelopes.p(t), spec.envelopes.q(t) * spec.envelopes.Phi(t)));
    }
    return worst;
}

double check_H7(const ProblemSpec& spec, std::size_t t_samples, std::size_t xy_samples)
{
    spec.validate();
    require(spec.envelopes.phi, "phi", spec);
    require(spec.envelopes.Phi, "Phi", spec);
    if (spec.kind != ProblemKind::Explicit) {
        throw DomainError("H7 concerns explicit problems");
    }
    const Params& params = spec.params;
    const MeshPtr mesh = build_mesh(params, std::max<std::size_t>(t_samples, 1), std::nullopt);
    const std::vector<double> xs = xy_lattice(xy_samples);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < mesh->size(); ++i) {
        const double t = mesh->t(i);
        const double lip = std::pow(tau(t, params), 1.0 - params.gamma()) * spec.envelopes.phi(t) *
                           spec.envelopes.Phi(t);
        for (double x : xs) {
            const double fx = spec.rhs_explicit(t, x);
            for (double xb : xs) {
                const double fb = spec.rhs_explicit(t, xb);
                // rounding in f itself is not a Lipschitz violation
                const double slack = 8.0 * kEps * (std::abs(fx) + std::abs(fb));
                const double d = std::abs(fx - fb) - lip * std::abs(x - xb) - slack;
                worst = std::max(worst, d);
            }
        }
    }
    return worst;
}

std::vector<double> check_H2_limit(const ProblemSpec& spec, std::span<const double> t_values)
{
    spec.validate();
    require(spec.envelopes.p, "p", spec);
    const Params& params = spec.params;
    const double r = auto_grading(params.gamma());
    std::vector<double> out;
    out.reserve(t_values.size());
    double prev = params.a;
    for (double t : t_values) {
        if (!(t > prev)) {
            throw DomainError("horizons must be increasing and exceed a");
        }
        prev = t;
        // dt/du = t^{1-rho}; the largest u-step of the graded mesh is about r U / n
        const double U = tau(t, params);
        const double slope = std::max(std::pow(params.a, 1.0 - params.rho), std::pow(t, 1.0 - params.rho));
        const double want = std::ceil(r * U * slope / kMaxTSpacing);
        if (want > static_cast<double>(kMaxLimitNodes)) {
            std::ostringstream msg;
            msg << "horizon t=" << t << " needs more than " << kMaxLimitNodes << " nodes to resolve";
            throw DomainError(msg.str());
        }
        const std::size_t n = std::max(kMinLimitNodes, static_cast<std::size_t>(want));
        const double ip = frac_integral_at(spec.envelopes.p, params.alpha, params, t, n, r);
        out.push_back(std::pow(U, 1.0 - params.gamma()) * ip);
    }
    return out;
}

double estimate_lambda_phi(const Envelope& Phi, const Params& params, const MeshPtr& mesh)
{
    if (!Phi) {
        throw HypothesisError("no envelope Phi supplied");
    }
    if (mesh->a() != params.a || mesh->b() != params.b || mesh->rho() != params.rho) {
        throw DomainError("mesh does not discretize the problem interval");
    }
    std::vector<double> samples = node_samples(Phi, *mesh);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (!(samples[i] > 0.0) || !std::isfinite(samples[i])) {
            std::ostringstream msg;
            msg << "Phi must be positive and finite; Phi(" << mesh->t(i) << ") = " << samples[i];
            throw DomainError(msg.str());
        }
    }
    const ProductIntegrator integrator(mesh, params.alpha);
    const std::vector<double> ip = integrator.apply(samples);
    double lambda = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        lambda = std::max(lambda, ip[i] / samples[i]);
    }
    return lambda;
}

StabilityReport uhr_bound_check(const ProblemSpec& spec, const WeightedFn& x_perturbed,
                                const WeightedFn& x_exact)
{
    spec.validate();
    require(spec.envelopes.Phi, "Phi", spec);
    require(spec.envelopes.q, "q", spec);
    if (!x_perturbed.mesh || !x_exact.mesh || !x_perturbed.mesh->same_as(*x_exact.mesh)) {
        throw DomainError("perturbed and exact solutions live on different meshes");
    }
    const MeshPtr& mesh = x_exact.mesh;
    const Params& params = spec.params;
    const std::vector<double> Phi = node_samples(spec.envelopes.Phi, *mesh);

    const GridFn res = residual(x_perturbed, spec);
    for (std::size_t i = 1; i < mesh->size(); ++i) {
        if (res.values[i] > (1.0 + kResidualSlack) * Phi[i]) {
            std::ostringstream msg;
            msg << "perturbed solution violates |residual| <= Phi at t=" << mesh->t(i) << " ("
                << res.values[i] << " > " << Phi[i] << ")";
            throw HypothesisError(msg.str());
        }
    }

    StabilityReport report;
    report.lambda_phi = estimate_lambda_phi(spec.envelopes.Phi, params, mesh);
    report.q_star = sup_finite(node_samples(spec.envelopes.q, *mesh));
    report.psi_phi = 1.0 + 2.0 * report.q_star * report.lambda_phi;

    if (spec.envelopes.p) {
        const std::vector<double> p = node_samples(spec.envelopes.p, *mesh);
        report.p_sup = sup_finite(p);
        const std::vector<double> ip = ProductIntegrator(mesh, params.alpha).apply(p);
        double ps = 0.0;
        for (std::size_t i = 1; i < ip.size(); ++i) {
            ps = std::max(ps, std::pow(mesh->u(i), 1.0 - params.gamma()) * ip[i]);
        }
        report.p_star = ps;
    }
    if (spec.envelopes.phi) {
        report.phi_star = sup_finite(node_samples(spec.envelopes.phi, *mesh));
        report.L = std::pow(mesh->U(), 1.0 - params.gamma()) * report.phi_star * report.lambda_phi;
    }

    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < mesh->size(); ++i) {
        const double diff = std::abs(x_perturbed.x(i) - x_exact.x(i));
        worst = std::max(worst, diff - report.psi_phi * Phi[i]);
    }
    report.max_violation = worst;
    report.bounds_hold = worst < 0.0;
    return report;
}

WeightedFn make_perturbed_solution(const ProblemSpec& spec, const Envelope& delta, MeshPtr mesh,
                                   const SolveOptions& options)
{
    spec.validate();
    require(spec.envelopes.Phi, "Phi", spec);
    if (!delta) {
        throw DomainError("no perturbation supplied");
    }
    for (std::size_t i = 1; i < mesh->size(); ++i) {
        const double t = mesh->t(i);
        const double d = delta(t);
        const double bound = spec.envelopes.Phi(t);
        if (!std::isfinite(d) || std::abs(d) > bound * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "perturbation exceeds Phi at t=" << t << " (" << d << " vs " << bound << ")";
            throw DomainError(msg.str());
        }
    }
    ProblemSpec perturbed = spec;
    perturbed.name = spec.name + "+delta";
    perturbed.exact = nullptr;
    if (spec.kind == ProblemKind::Explicit) {
        perturbed.rhs_explicit = [f = spec.rhs_explicit, delta](double t, double x) {
            return f(t, x) + delta(t);
        };
    } else {
        perturbed.rhs_implicit = [f = spec.rhs_implicit, delta](double t, double x, double y) {
            return f(t, x, y) + delta(t);
        };
    }
    SolveReport report = solve(perturbed, std::move(mesh), options);
    require_converged(report, "perturbed " + spec.name);
    return std::move(report.solution);
}

AttractivityReport attractivity_experiment(const ProblemSpec& spec, std::span<const double> horizons,
                                           const AttractivityOptions& options)
{
    spec.validate();
    require(spec.envelopes.p, "p", spec);
    if (spec.kind != ProblemKind::Implicit) {
        throw DomainError("attractivity concerns implicit problems");
    }
    if (horizons.empty()) {
        throw DomainError("no horizons given");
    }
    const double h2 = check_H2(spec);
    if (h2 > 1e-12) {
        std::ostringstream msg;
        msg << "H2 fails on the sample lattice (violation " << h2 << ")";
        throw HypothesisError(msg.str());
    }
    const std::vector<double> weighted = check_H2_limit(spec, horizons);

    AttractivityReport report;
    report.bounds_hold = true;
    report.decreasing = true;
    for (std::size_t k = 0; k < horizons.size(); ++k) {
        const ProblemSpec local = spec.with_right_end(horizons[k]);
        const MeshPtr mesh = build_mesh(local.params, options.n, options.grading);
        const std::vector<double> p = node_samples(spec.envelopes.p, *mesh);
        const std::vector<double> ip = ProductIntegrator(mesh, local.params.alpha).apply(p);

        SolveOptions from_zero = options.solve;
        from_zero.initial = std::vector<double>(mesh->size(), 0.0);
        SolveOptions from_p = options.solve;
        from_p.initial = p;
        // both trajectories must share the node-0 convention f(a, ., .) = 0
        if (!std::isfinite((*from_p.initial)[0])) {
            (*from_p.initial)[0] = 0.0;
        }
        const SolveReport x = solve_implicit(local, mesh, from_zero);
        require_converged(x, local.name + " from g = 0");
        const SolveReport x0 = solve_implicit(local, mesh, from_p);
        require_converged(x0, local.name + " from g = p");

        AttractivityRow row;
        row.T = horizons[k];
        row.envelope = 2.0 * ip.back();
        row.weighted_envelope = weighted[k];
        row.max_violation = -std::numeric_limits<double>::infinity();
        double p_star = 0.0;
        for (std::size_t i = 1; i < mesh->size(); ++i) {
            const double diff = std::abs(x.solution.x(i) - x0.solution.x(i));
            row.pair_diff_sup = std::max(row.pair_diff_sup, diff);
            row.max_violation = std::max(row.max_violation, diff - 2.0 * ip[i]);
            p_star = std::max(p_star, std::pow(mesh->u(i), 1.0 - local.params.gamma()) * ip[i]);
        }
        report.ball_radius = 2.0 * p_star;
        report.bounds_hold = report.bounds_hold && row.max_violation <= 0.0;
        if (k > 0 && !(row.weighted_envelope < report.rows.back().weighted_envelope)) {
            report.decreasing = false;
        }
        report.rows.push_back(row);
    }
    return report;
}

ContractionReport contraction_constant(const ProblemSpec& spec, const MeshPtr& mesh)
{
    spec.validate();
    require(spec.envelopes.phi, "phi", spec);
    require(spec.envelopes.Phi, "Phi", spec);
    const Params& params = spec.params;
    ContractionReport report;
    report.lambda_phi = estimate_lambda_phi(spec.envelopes.Phi, params, mesh);
    report.phi_star = sup_finite(node_samples(spec.envelopes.phi, *mesh));
    report.L = std::pow(mesh->U(), 1.0 - params.gamma()) * report.phi_star * report.lambda_phi;
    report.unique = report.L < 1.0;
    if (report.unique) {
        report.bound = [Phi = spec.envelopes.Phi, L = report.L](double t) { return Phi(t) / (1.0 - L); };
    }
    return report;
}

}  // namespace katufrac

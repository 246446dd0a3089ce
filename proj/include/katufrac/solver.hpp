#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "katufrac/numerics.hpp"

namespace katufrac {

enum class ProblemKind { Explicit, Implicit };

using ExplicitRhs = std::function<double(double t, double x)>;
/// y stands for the generalized derivative of x at t.
using ImplicitRhs = std::function<double(double t, double x, double y)>;
using Envelope = std::function<double(double t)>;

/// Optional stability envelopes; an empty std::function means "not supplied".
struct Envelopes {
    Envelope p;    // growth bound of f
    Envelope Phi;  // Rassias control function, > 0
    Envelope q;    // p <= q Phi
    Envelope phi;  // Lipschitz weight
};

/**
 * An initial value problem for the generalized Katugampola derivative:
 *
 *     D^{alpha,beta} x = f(t, x)                 (Explicit)
 *     D^{alpha,beta} x = f(t, x, D^{alpha,beta} x)  (Implicit)
 *     (I^{1-gamma} x)(a+) = params.c
 */
struct ProblemSpec {
    std::string name;
    Params params;
    ProblemKind kind = ProblemKind::Explicit;
    ExplicitRhs rhs_explicit;
    ImplicitRhs rhs_implicit;
    Envelopes envelopes;
    /// Known exact solution x*(t), when the problem is manufactured.
    std::function<double(double)> exact;

    void validate() const;
    /// Same problem on [a, b].
    ProblemSpec with_right_end(double b) const;
};

/**
 * A function in the weighted space C_{gamma,rho}, stored as
 * y(t) = tau(t)^{1-gamma} x(t), which stays continuous at t = a.
 *
 * Also kept: the split x = singular_coef * tau^{gamma-1} + regular, with
 * regular continuous and regular(a) = 0 for solutions; y = singular_coef +
 * tau^{1-gamma} regular.
 */
struct WeightedFn {
    MeshPtr mesh;
    double gamma = 1.0;
    std::vector<double> y_values;
    double singular_coef = 0.0;
    std::vector<double> regular;

    static WeightedFn from_regular(MeshPtr mesh, double gamma, double singular_coef,
                                   std::vector<double> regular);

    /// x(t_i); the sentinel at i = 0 when x is singular there.
    double x(std::size_t i) const;
    std::vector<double> x_values() const;
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iter = 200;
    /// Initial Picard iterate: y samples (Explicit) or g samples (Implicit).
    std::optional<std::vector<double>> initial;
};

struct SolveReport {
    WeightedFn solution;
    int iterations = 0;
    double final_update_norm = 0.0;
    double residual_sup = 0.0;
    bool converged = false;
    /// Last right-hand side samples: f(t, x) (Explicit) or the auxiliary g (Implicit).
    std::vector<double> aux;
};

class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, int iterations, double last_update)
        : std::runtime_error(what), iterations_(iterations), last_update_(last_update)
    {
    }
    int iterations() const { return iterations_; }
    double last_update() const { return last_update_; }

private:
    int iterations_;
    double last_update_;
};

/// Picard iteration on y_{k+1} = c/Gamma(gamma) + tau^{1-gamma} I^alpha f(., tau^{gamma-1} y_k).
/// Never throws NonConvergence; check SolveReport::converged.
SolveReport solve_explicit(const ProblemSpec& spec, MeshPtr mesh, const SolveOptions& options = {});

/// Picard iteration on the auxiliary function
/// g_{k+1} = f(t, c/Gamma(gamma) tau^{gamma-1} + I^alpha g_k, g_k), g_0 = 0.
SolveReport solve_implicit(const ProblemSpec& spec, MeshPtr mesh, const SolveOptions& options = {});

/// Dispatches on spec.kind.
SolveReport solve(const ProblemSpec& spec, MeshPtr mesh, const SolveOptions& options = {});

/// Throws NonConvergence unless report.converged.
const SolveReport& require_converged(const SolveReport& report, const std::string& context);

/// |D^{alpha,beta} x - f(t, x)| at every node; node 0 holds the sentinel.
GridFn residual(const WeightedFn& sol, const ProblemSpec& spec);

/**
 * Weighted sup distance between two Picard trajectories started from y_a and
 * y_b (g samples for Implicit problems), one entry per iteration, starting
 * with the distance of the initial iterates. Stops early once the distance
 * reaches exactly 0.
 */
std::vector<double> picard_contraction_trace(const ProblemSpec& spec, MeshPtr mesh,
                                             const WeightedFn& y_a, const WeightedFn& y_b,
                                             int iterations = 30);

}  // namespace katufrac

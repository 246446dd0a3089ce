#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "katufrac/numerics.hpp"
#include "katufrac/solver.hpp"

namespace katufrac {

/// A hypothesis or precondition of a stability result does not hold
/// (including a missing envelope).
class HypothesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StabilityReport {
    static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

    double lambda_phi = kUnset;
    double q_star = kUnset;
    double p_star = kUnset;        // sup tau^{1-gamma} I^alpha p over the nodes
    double p_sup = kUnset;         // sup p over the nodes
    double phi_star = kUnset;
    double L = kUnset;
    double psi_phi = kUnset;
    bool bounds_hold = false;
    double max_violation = kUnset;
};

/// max over a (t, x, y) lattice of |f|(1+|x|+|y|) - p(t); <= 0 means H2 holds there.
/// t runs over the nodes of an auto-graded mesh with t_samples intervals; x, y over
/// 0 and +-10^k, k log-spaced in [-3, 3] with xy_samples points.
double check_H2(const ProblemSpec& spec, std::size_t t_samples = 64, std::size_t xy_samples = 13);

/// Same for explicit problems: max of |f(t,x)|(1+|x|) - p(t).
double check_H4(const ProblemSpec& spec, std::size_t t_samples = 64, std::size_t xy_samples = 13);

/// max over mesh nodes of p - q Phi.
double check_H6(const ProblemSpec& spec, const Mesh& mesh);

/// max over a lattice of |f(t,x) - f(t,x')| - tau^{1-gamma} phi Phi |x - x'|.
double check_H7(const ProblemSpec& spec, std::size_t t_samples = 64, std::size_t xy_samples = 13);

/// tau(t)^{1-gamma} (I^alpha p)(t) for each t, each on its own fine mesh of [a, t].
std::vector<double> check_H2_limit(const ProblemSpec& spec, std::span<const double> t_values);

/// max over nodes i >= 1 of (I^alpha Phi)(t_i) / Phi(t_i).
double estimate_lambda_phi(const Envelope& Phi, const Params& params, const MeshPtr& mesh);

/// Rassias bound check |x_perturbed - x_exact| <= (1 + 2 q* lambda_phi) Phi at nodes i >= 1.
/// Throws HypothesisError when x_perturbed does not satisfy |residual| <= Phi
/// (to within kResidualSlack).
StabilityReport uhr_bound_check(const ProblemSpec& spec, const WeightedFn& x_perturbed,
                                const WeightedFn& x_exact);

/// Relative slack allowed on the |residual| <= Phi precondition; the residual
/// carries the derivative stencil's error.
inline constexpr double kResidualSlack = 0.15;

/// Solution of the problem with right-hand side f + delta. Throws DomainError
/// when |delta| > Phi at a node, NonConvergence when Picard fails.
WeightedFn make_perturbed_solution(const ProblemSpec& spec, const Envelope& delta, MeshPtr mesh,
                                   const SolveOptions& options = {});

struct AttractivityOptions {
    std::size_t n = 1024;
    std::optional<double> grading;
    SolveOptions solve;
};

struct AttractivityRow {
    double T = 0.0;
    double envelope = 0.0;           // 2 (I^alpha p)(T)
    double weighted_envelope = 0.0;  // tau(T)^{1-gamma} (I^alpha p)(T)
    double pair_diff_sup = 0.0;      // sup over nodes of |x - x0|
    double max_violation = 0.0;      // max over nodes of |x - x0| - 2 (I^alpha p)
};

struct AttractivityReport {
    std::vector<AttractivityRow> rows;
    double ball_radius = 0.0;  // 2 p* on the largest horizon
    bool decreasing = false;
    bool bounds_hold = false;
};

/// Two Picard limits (from g_0 = 0 and g_0 = p) on [a, T] for each horizon T,
/// their distance against 2 I^alpha p, and the weighted envelope ladder.
/// Throws HypothesisError when H2 fails, NonConvergence when a solve fails.
AttractivityReport attractivity_experiment(const ProblemSpec& spec, std::span<const double> horizons,
                                           const AttractivityOptions& options = {});

struct ContractionReport {
    double L = 0.0;
    double phi_star = 0.0;
    double lambda_phi = 0.0;
    bool unique = false;
    /// t -> Phi(t) / (1 - L); empty when L >= 1.
    std::function<double(double)> bound;
};

ContractionReport contraction_constant(const ProblemSpec& spec, const MeshPtr& mesh);

}  // namespace katufrac

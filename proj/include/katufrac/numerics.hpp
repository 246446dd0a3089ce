#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace katufrac {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Marks an unreported value, e.g. a derivative at t = a where the
/// differentiated function is singular. Excluded from every norm.
inline constexpr double kSentinel = std::numeric_limits<double>::quiet_NaN();

/**
 * Problem constants of a Katugampola-type initial value problem.
 *
 * gamma() is always recomputed from alpha and beta.
 */
struct Params {
    double alpha = 0.5;  // order, in (0,1)
    double beta = 0.5;   // type, in [0,1]
    double rho = 1.0;
    double a = 1.0;
    double b = 2.0;
    double c = 0.0;      // initial weighted value (I^{1-gamma} x)(a+)

    double gamma() const { return alpha + beta * (1.0 - alpha); }

    /// Throws DomainError unless 0<alpha<1, 0<=beta<=1, rho>0, 0<a<b.
    void validate() const;

    static Params make(double alpha, double beta, double rho, double a, double b, double c = 0.0);
};

/// Euler gamma function for x > 0.
double gamma_fn(double x);

/// 1/Gamma(x) for every real x; exactly 0 at the poles x = 0, -1, -2, ...
double reciprocal_gamma(double x);

/// (t^rho - a^rho)/rho, exactly 0 at t = a.
double tau(double t, const Params& params);

/// Inverse of tau: the t >= a with tau(t) == u.
double t_from_tau(double u, const Params& params);

/// min(5, max(1, 2/gamma)).
double auto_grading(double gamma);

/**
 * Graded mesh over the transformed variable u = (t^rho - a^rho)/rho.
 *
 * u_i = U (i/n)^r with U = tau(b); t_i is recovered by inverting tau, with
 * t_0 == a and t_n == b exactly. Everything downstream discretizes in u.
 */
class Mesh {
public:
    Mesh(const Params& params, std::size_t n, double grading);

    std::size_t n() const { return n_; }
    std::size_t size() const { return n_ + 1; }
    double grading() const { return grading_; }
    double U() const { return u_.back(); }
    double a() const { return a_; }
    double b() const { return b_; }
    double rho() const { return rho_; }

    std::span<const double> u() const { return u_; }
    std::span<const double> t() const { return t_; }
    double u(std::size_t i) const { return u_[i]; }
    double t(std::size_t i) const { return t_[i]; }

    /// True when both meshes discretize the same interval with the same nodes.
    bool same_as(const Mesh& other) const;

private:
    std::size_t n_;
    double grading_;
    double a_, b_, rho_;
    std::vector<double> u_;
    std::vector<double> t_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// grading == nullopt selects auto_grading(params.gamma()).
MeshPtr build_mesh(const Params& params, std::size_t n, std::optional<double> grading = std::nullopt);

/// Samples of a function on the nodes of a mesh.
struct GridFn {
    MeshPtr mesh;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    /// Samples fn(t_i) at every node.
    static GridFn sample(MeshPtr mesh, const std::function<double(double)>& fn);
    /// Samples fn(u_i) at every node (u = tau(t)).
    static GridFn sample_u(MeshPtr mesh, const std::function<double(double)>& fn);
    static GridFn constant(MeshPtr mesh, double value);

    /// Throws DomainError on length mismatch or non-finite entries
    /// (node 0 may hold the sentinel when allow_sentinel is set).
    void validate(bool allow_sentinel = false) const;
};

/// max |v_i| over i >= first, skipping sentinels.
double sup_norm(std::span<const double> v, std::size_t first = 1);

/// max |a_i - b_i| over i >= first, skipping sentinels.
double sup_diff(std::span<const double> a, std::span<const double> b, std::size_t first = 1);

}  // namespace katufrac

#include "katufrac/problems.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace katufrac {

namespace {

void check_example_params(const Params& params, double theta, const char* name)
{
    params.validate();
    if (params.alpha != 0.5 || params.beta != 0.5) {
        throw DomainError(std::string(name) + " fixes alpha = beta = 1/2");
    }
    if (!(theta > 0.0 && theta <= 1.0)) {
        throw DomainError(std::string(name) + " needs 0 < theta <= 1");
    }
}

// theta (t-a)^{-1/4} sin(t-a) / (64 (1 + sqrt(t-a))), 0 at t = a
double example_numerator(double theta, double a, double t)
{
    if (t <= a) {
        return 0.0;
    }
    const double d = t - a;
    return theta * std::pow(d, -0.25) * std::sin(d) / (64.0 * (1.0 + std::sqrt(d)));
}

}  // namespace

ProblemSpec example1(double theta, const Params& params)
{
    check_example_params(params, theta, "example1");
    ProblemSpec spec;
    spec.name = "example1";
    spec.params = params;
    spec.params.c = 1.0 - params.a;
    spec.kind = ProblemKind::Implicit;
    const double a = params.a;
    spec.rhs_implicit = [theta, a](double t, double x, double y) {
        return example_numerator(theta, a, t) / (1.0 + std::abs(x) + std::abs(y));
    };
    spec.envelopes.p = [theta, a](double t) { return std::abs(example_numerator(theta, a, t)); };
    return spec;
}

ProblemSpec example2(double theta, const Params& params)
{
    check_example_params(params, theta, "example2");
    if (params.b > std::numbers::e) {
        throw DomainError("example2 needs b <= e");
    }
    ProblemSpec spec;
    spec.name = "example2";
    spec.params = params;
    spec.params.c = 1.0 - params.a;
    spec.kind = ProblemKind::Explicit;
    const double a = params.a;
    const Params local = spec.params;
    const double Phi = std::exp(3.0);
    spec.rhs_explicit = [theta, a](double t, double x) {
        return example_numerator(theta, a, t) / (1.0 + std::abs(x));
    };
    spec.envelopes.p = [theta, a](double t) { return std::abs(example_numerator(theta, a, t)); };
    spec.envelopes.Phi = [Phi](double) { return Phi; };
    spec.envelopes.q = [p = spec.envelopes.p, Phi](double t) { return p(t) / Phi; };
    // |1/(1+|x|) - 1/(1+|x'|)| <= |x - x'|, so |f(t,x) - f(t,x')| <= p(t) |x - x'|
    spec.envelopes.phi = [p = spec.envelopes.p, Phi, local](double t) {
        if (t <= local.a) {
            return 0.0;
        }
        return p(t) / (std::pow(tau(t, local), 1.0 - local.gamma()) * Phi);
    };
    return spec;
}

double example2_claimed_lambda()
{
    return 1.0 / gamma_fn(1.5);
}

double example1_decay_bound(double u)
{
    return 0.125 * std::pow(u, -0.25);
}

ProblemSpec manufactured(double sigma, const Params& params)
{
    params.validate();
    if (!(sigma > 0.0)) {
        throw DomainError("manufactured needs sigma > 0");
    }
    ProblemSpec spec;
    std::ostringstream name;
    name << "manufactured(sigma=" << sigma << ")";
    spec.name = name.str();
    spec.params = params;
    spec.params.c = 0.0;
    spec.kind = ProblemKind::Explicit;
    const Params local = spec.params;
    spec.rhs_explicit = [local, sigma](double t, double) { return std::pow(tau(t, local), sigma); };
    const double k = gamma_fn(sigma + 1.0) / gamma_fn(sigma + local.alpha + 1.0);
    spec.exact = [local, sigma, k](double t) { return k * std::pow(tau(t, local), sigma + local.alpha); };
    return spec;
}

ProblemSpec linear_contraction(double L, const Params& params)
{
    params.validate();
    if (!(L > 0.0)) {
        throw DomainError("linear_contraction needs L > 0");
    }
    const double alpha = params.alpha;
    const double gamma = params.gamma();
    const double U = tau(params.b, params);
    // lambda_phi for Phi = 1 is U^alpha / Gamma(alpha+1)
    const double kappa = L * gamma_fn(alpha + 1.0) / std::pow(U, 1.0 - gamma + alpha);

    ProblemSpec spec;
    std::ostringstream name;
    name << "linear_contraction(L=" << L << ")";
    spec.name = name.str();
    spec.params = params;
    spec.kind = ProblemKind::Explicit;
    const Params local = params;
    spec.rhs_explicit = [local, kappa, gamma](double t, double x) {
        return kappa * std::pow(tau(t, local), 1.0 - gamma) * x;
    };
    spec.envelopes.Phi = [](double) { return 1.0; };
    spec.envelopes.phi = [kappa](double) { return kappa; };
    spec.exact = [local, kappa, alpha, gamma](double t) {
        const double u = tau(t, local);
        double mu = gamma;
        double coef = local.c / gamma_fn(gamma);
        double sum = 0.0;
        for (int k = 0; k < 400; ++k) {
            const double term = coef * std::pow(u, mu - 1.0);
            sum += term;
            if (k > 4 && std::abs(term) <= 1e-18 * std::abs(sum)) {
                break;
            }
            coef *= kappa * std::exp(std::lgamma(mu - gamma + 1.0) - std::lgamma(mu - gamma + 1.0 + alpha));
            mu += 1.0 - gamma + alpha;
        }
        return sum;
    };
    return spec;
}

ProblemSpec attractive_manufactured(double sigma, double kappa, const Params& params)
{
    params.validate();
    if (!(sigma > -1.0 && sigma < 0.0)) {
        throw DomainError("attractive_manufactured needs sigma in (-1, 0)");
    }
    if (!(kappa > 0.0)) {
        throw DomainError("attractive_manufactured needs kappa > 0");
    }
    ProblemSpec spec;
    std::ostringstream name;
    name << "attractive_manufactured(sigma=" << sigma << ")";
    spec.name = name.str();
    spec.params = params;
    spec.kind = ProblemKind::Implicit;
    const Params local = params;
    spec.envelopes.p = [local, sigma, kappa](double t) {
        return t <= local.a ? std::numeric_limits<double>::infinity()
                            : kappa * std::pow(tau(t, local), sigma);
    };
    spec.rhs_implicit = [local, sigma, kappa](double t, double x, double y) {
        if (t <= local.a) {
            return 0.0;
        }
        return kappa * std::pow(tau(t, local), sigma) / (1.0 + std::abs(x) + std::abs(y));
    };
    return spec;
}

}  // namespace katufrac

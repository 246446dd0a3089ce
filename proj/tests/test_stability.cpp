#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "katufrac/operators.hpp"
#include "katufrac/problems.hpp"
#include "katufrac/solver.hpp"
#include "katufrac/stability.hpp"
#include "oracles.hpp"

using namespace katufrac;

namespace {

const double kE = std::numbers::e;

ProblemSpec implicit_with(const Params& p, ImplicitRhs f, Envelope env)
{
    ProblemSpec s;
    s.name = "custom";
    s.params = p;
    s.kind = ProblemKind::Implicit;
    s.rhs_implicit = std::move(f);
    s.envelopes.p = std::move(env);
    return s;
}

double max_pair_diff(const WeightedFn& x, const WeightedFn& y)
{
    double worst = 0.0;
    for (std::size_t i = 1; i < x.mesh->size(); ++i) {
        worst = std::max(worst, std::abs(x.x(i) - y.x(i)));
    }
    return worst;
}

}  // namespace

TEST_CASE("H2 lattice")
{
    const Params p = Params::make(0.5, 0.5, 1.0, 1.0, kE);
    CHECK(check_H2(example1(1.0, p)) <= 1e-12);
    CHECK(check_H2(example1(0.3, p)) <= 1e-12);

    const ProblemSpec zero = implicit_with(
        p, [](double, double, double) { return 0.0; }, [](double) { return 0.0; });
    CHECK(check_H2(zero) == 0.0);

    const ProblemSpec e1 = example1(1.0, p);
    const Envelope env = e1.envelopes.p;
    const ProblemSpec twice = implicit_with(
        p, [env](double t, double x, double y) { return 2.0 * env(t) / (1.0 + std::abs(x) + std::abs(y)); }, env);
    const MeshPtr m = build_mesh(p, 64);
    double sup_p = 0.0;
    for (std::size_t i = 0; i <= 64; ++i) {
        sup_p = std::max(sup_p, env(m->t(i)));
    }
    CHECK(check_H2(twice) == doctest::Approx(sup_p).epsilon(1e-12));

    ProblemSpec bare = e1;
    bare.envelopes.p = nullptr;
    CHECK_THROWS_AS(check_H2(bare), HypothesisError);
    CHECK_THROWS_AS(check_H2(example2(1.0, p)), DomainError);
}

TEST_CASE("H4 and H6 on example2")
{
    const ProblemSpec spec = example2(1.0, Params::make(0.5, 0.5, 1.0, 1.0, kE));
    CHECK(check_H4(spec) <= 1e-12);
    CHECK(check_H6(spec, *build_mesh(spec.params, 256)) <= 1e-12);
}

TEST_CASE("H7 on the linear problem and example2")
{
    CHECK(check_H7(linear_contraction(0.5, Params::make(0.5, 0.5, 1.0, 1.0, 2.0, 1.0))) <= 0.0);
    CHECK(check_H7(example2(1.0, Params::make(0.5, 0.5, 1.0, 1.0, kE))) <= 0.0);
}

TEST_CASE("weighted integral of p at single horizons")
{
    const Params p = Params::make(0.5, 0.5, 1.0, 1.0, kE);

    SUBCASE("p = 0 gives zeros")
    {
        const ProblemSpec zero = implicit_with(
            p, [](double, double, double) { return 0.0; }, [](double) { return 0.0; });
        const std::vector<double> t{2.0, 5.0, 50.0};
        for (double v : check_H2_limit(zero, t)) {
            CHECK(v == 0.0);
        }
    }
    SUBCASE("power envelope decays at the closed-form rate")
    {
        const double sigma = -0.875;
        const ProblemSpec s = attractive_manufactured(sigma, 1.0, p);
        const std::vector<double> t{11.0, 101.0, 1001.0};
        const std::vector<double> got = check_H2_limit(s, t);
        const double k = std::tgamma(sigma + 1.0) / std::tgamma(sigma + 1.5);
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double u = t[j] - 1.0;
            CHECK(got[j] == doctest::Approx(k * std::pow(u, sigma + 0.5 + 0.25)).epsilon(1e-2));
        }
        CHECK(got[2] < got[1]);
        CHECK(got[1] < got[0]);
    }
    SUBCASE("example1 envelope against quadrature in t")
    {
        const ProblemSpec s = example1(1.0, p);
        const std::vector<double> t{2.0, 6.0};
        const std::vector<double> got = check_H2_limit(s, t);
        for (std::size_t j = 0; j < t.size(); ++j) {
            auto g = [](double, double d) {
                return std::pow(d, -0.25) * std::abs(std::sin(d)) / (64.0 * (1.0 + std::sqrt(d)));
            };
            const double want =
                std::pow(t[j] - 1.0, 0.25) * oracle::katugampola_integral(g, 0.5, 1.0, 1.0, t[j]);
            CHECK(got[j] == doctest::Approx(want).epsilon(1e-6));
        }
    }
    SUBCASE("horizons must increase")
    {
        const std::vector<double> t{5.0, 3.0};
        CHECK_THROWS_AS(check_H2_limit(example1(1.0, p), t), DomainError);
    }
}

TEST_CASE("lambda_phi estimates")
{
    SUBCASE("constant Phi")
    {
        const Params p = Params::make(0.3, 0.5, 2.0, 1.0, 2.0);
        const MeshPtr m = build_mesh(p, 1024);
        const double want = std::pow(m->U(), 0.3) / std::tgamma(1.3);
        CHECK(estimate_lambda_phi([](double) { return 1.0; }, p, m) == doctest::Approx(want).epsilon(1e-8));
    }
    SUBCASE("power Phi")
    {
        const Params p = Params::make(0.5, 0.5, 1.0, 1.0, 3.0);
        const MeshPtr m = build_mesh(p, 2048);
        const double mu = 1.5;
        auto Phi = [p, mu](double t) { return std::pow(tau(t, p), mu); };
        const double want = std::tgamma(mu + 1.0) / std::tgamma(mu + 1.5) * std::pow(m->U(), 0.5);
        CHECK(estimate_lambda_phi(Phi, p, m) == doctest::Approx(want).epsilon(1e-4));
    }
    SUBCASE("example2 Phi where tau(b) <= 1")
    {
        const Params p = Params::make(0.5, 0.5, 1.0, 1.8, kE);
        const ProblemSpec s = example2(1.0, p);
        CHECK(estimate_lambda_phi(s.envelopes.Phi, p, build_mesh(p, 1024)) <= example2_claimed_lambda() + 1e-6);
    }
    SUBCASE("monotone in b")
    {
        auto Phi = [](double t) { return 1.0 + std::sin(3.0 * t) * 0.5; };
        double last = 0.0;
        for (double b : {1.5, 2.0, 2.5, 3.0}) {
            const Params p = Params::make(0.6, 0.2, 1.0, 1.0, b);
            const double est = estimate_lambda_phi(Phi, p, build_mesh(p, 512, 1.0));
            CHECK(est >= last);
            last = est;
        }
    }
    SUBCASE("non-positive Phi is rejected")
    {
        const Params p = Params::make(0.5, 0.5, 1.0, 1.0, 2.0);
        CHECK_THROWS_AS(estimate_lambda_phi([](double t) { return 1.5 - t; }, p, build_mesh(p, 64)), DomainError);
    }
}

TEST_CASE("Rassias bound check")
{
    const ProblemSpec spec = example2(1.0, Params::make(0.5, 0.5, 1.0, 1.0, kE));
    const MeshPtr m = build_mesh(spec.params, 1024);
    const SolveReport exact = solve(spec, m);
    REQUIRE(exact.converged);

    SUBCASE("identical solutions")
    {
        const StabilityReport r = uhr_bound_check(spec, exact.solution, exact.solution);
        CHECK(r.bounds_hold);
        CHECK(r.max_violation == doctest::Approx(-r.psi_phi * std::exp(3.0)).epsilon(1e-14));
        CHECK(r.psi_phi == 1.0 + 2.0 * r.q_star * r.lambda_phi);
        CHECK(r.psi_phi >= 1.0);
        CHECK(r.L >= 0.0);
    }
    SUBCASE("oscillating perturbation")
    {
        const Params prm = spec.params;
        auto delta = [prm](double t) { return std::exp(3.0) * std::sin(5.0 * tau(t, prm)); };
        const WeightedFn xp = make_perturbed_solution(spec, delta, m);
        const StabilityReport r = uhr_bound_check(spec, xp, exact.solution);
        CHECK(r.bounds_hold);
        CHECK(r.max_violation < 0.0);
    }
    SUBCASE("delta = Phi exceeds psi Phi but not lambda (1 + 2 q*) Phi")
    {
        auto delta = [](double) { return std::exp(3.0); };
        const WeightedFn xp = make_perturbed_solution(spec, delta, m);
        const StabilityReport r = uhr_bound_check(spec, xp, exact.solution);
        CHECK_FALSE(r.bounds_hold);
        const double corrected = r.lambda_phi * (1.0 + 2.0 * r.q_star) * std::exp(3.0);
        CHECK(max_pair_diff(xp, exact.solution) <= corrected);
    }
    SUBCASE("an input that is not a witness is refused")
    {
        auto delta = [](double t) { return 0.5 * std::exp(3.0) * t; };
        ProblemSpec wide = spec;
        wide.envelopes.Phi = [](double) { return 1e6; };
        const WeightedFn far = make_perturbed_solution(wide, delta, m);
        CHECK_THROWS_AS(uhr_bound_check(spec, far, exact.solution), HypothesisError);
    }
    SUBCASE("missing envelopes")
    {
        ProblemSpec bare = spec;
        bare.envelopes.Phi = nullptr;
        CHECK_THROWS_AS(uhr_bound_check(bare, exact.solution, exact.solution), HypothesisError);
    }
}

TEST_CASE("constant perturbation with closed-form difference")
{
    // f = w(t) does not depend on x, so x - x_exact = I^alpha delta = 0.01 tau^alpha / Gamma(1 + alpha)
    const Params p = Params::make(0.5, 0.25, 1.5, 1.0, 2.0, 0.4);
    ProblemSpec s;
    s.name = "w";
    s.params = p;
    s.rhs_explicit = [](double t, double) { return std::sin(t); };
    s.envelopes.Phi = [](double) { return 1.0; };
    s.envelopes.q = [](double) { return 0.0; };
    const MeshPtr m = build_mesh(p, 2048);
    const SolveReport exact = solve(s, m);
    const WeightedFn xp = make_perturbed_solution(s, [](double) { return 0.01; }, m);
    for (std::size_t i = 1; i <= 2048; ++i) {
        const double want = 0.01 * std::pow(m->u(i), 0.5) / std::tgamma(1.5);
        CHECK(std::abs((xp.x(i) - exact.solution.x(i)) - want) <= 1e-6);
    }
    const StabilityReport r = uhr_bound_check(s, xp, exact.solution);
    CHECK(r.psi_phi == 1.0);
    CHECK(r.bounds_hold);

    // with Phi = 1 the witness also satisfies the eps form
    const GridFn res = residual(xp, s);
    for (std::size_t i = 1; i <= 2048; ++i) {
        CHECK(res[i] <= (1.0 + kResidualSlack) * 0.01);
    }
}

TEST_CASE("perturbed solutions")
{
    const ProblemSpec spec = example2(1.0, Params::make(0.5, 0.5, 1.0, 1.0, 2.0));
    const MeshPtr m = build_mesh(spec.params, 512);
    const WeightedFn same = make_perturbed_solution(spec, [](double) { return 0.0; }, m);
    CHECK(same.y_values == solve(spec, m).solution.y_values);
    CHECK_THROWS_AS(make_perturbed_solution(spec, [](double) { return 2.0 * std::exp(3.0); }, m), DomainError);

    const WeightedFn at_phi = make_perturbed_solution(spec, spec.envelopes.Phi, build_mesh(spec.params, 2048));
    const GridFn res = residual(at_phi, spec);
    for (std::size_t i = 1; i <= 2048; i += 31) {
        CHECK(std::abs(res[i] - std::exp(3.0)) <= 0.15 * std::exp(3.0));
    }
}

TEST_CASE("attractivity")
{
    SUBCASE("f = 0")
    {
        const Params p = Params::make(0.5, 0.5, 1.0, 1.0, 2.0, 0.5);
        const ProblemSpec zero = implicit_with(
            p, [](double, double, double) { return 0.0; }, [](double) { return 0.0; });
        const std::vector<double> h{5.0};
        AttractivityOptions opts;
        opts.n = 256;
        const AttractivityReport r = attractivity_experiment(zero, h, opts);
        REQUIRE(r.rows.size() == 1);
        CHECK(r.rows[0].pair_diff_sup == 0.0);
        CHECK(r.decreasing);
        CHECK(r.bounds_hold);
    }
    SUBCASE("manufactured decaying envelope")
    {
        const Params p = Params::make(0.5, 0.5, 1.0, 1.0, 2.0, 0.0);
        const ProblemSpec s = attractive_manufactured(-0.875, 0.01, p);
        const std::vector<double> h{11.0, 101.0, 1001.0};
        AttractivityOptions opts;
        opts.grading = 1.0;
        const AttractivityReport r = attractivity_experiment(s, h, opts);
        CHECK(r.decreasing);
        CHECK(r.bounds_hold);
        const double k = 0.01 * std::tgamma(0.125) / std::tgamma(0.625);
        for (const AttractivityRow& row : r.rows) {
            const double closed = k * std::pow(row.T - 1.0, -0.125);
            CHECK(row.weighted_envelope <= 2.0 * closed);
            CHECK(row.weighted_envelope >= 0.5 * closed);
            CHECK(row.pair_diff_sup <= row.envelope);
            CHECK(row.max_violation <= 0.0);
        }
        CHECK(r.ball_radius > 0.0);
    }
    SUBCASE("failing H2 is a hypothesis error")
    {
        const Params p = Params::make(0.5, 0.5, 1.0, 1.0, 2.0);
        const ProblemSpec bad = implicit_with(
            p, [](double, double, double) { return 1.0; }, [](double) { return 0.5; });
        const std::vector<double> h{3.0};
        CHECK_THROWS_AS(attractivity_experiment(bad, h), HypothesisError);
    }
}

TEST_CASE("contraction constant")
{
    SUBCASE("phi = 0")
    {
        ProblemSpec s = example2(1.0, Params::make(0.5, 0.5, 1.0, 1.0, 2.0));
        s.envelopes.phi = [](double) { return 0.0; };
        const ContractionReport r = contraction_constant(s, build_mesh(s.params, 128));
        CHECK(r.L == 0.0);
        CHECK(r.unique);
        CHECK(r.bound(1.5) == std::exp(3.0));
    }
    SUBCASE("linear problem with L = 1/2")
    {
        const ProblemSpec s = linear_contraction(0.5, Params::make(0.5, 0.5, 1.0, 1.0, 2.0, 1.0));
        const ContractionReport r = contraction_constant(s, build_mesh(s.params, 2048));
        CHECK(std::abs(r.L - 0.5) <= 1e-6);
        CHECK(r.unique);
        CHECK(r.bound(1.7) == doctest::Approx(2.0));
    }
    SUBCASE("L >= 1 is inconclusive")
    {
        const ProblemSpec s = linear_contraction(1.5, Params::make(0.5, 0.5, 1.0, 1.0, 2.0, 1.0));
        const ContractionReport r = contraction_constant(s, build_mesh(s.params, 512));
        CHECK_FALSE(r.unique);
        CHECK_FALSE(static_cast<bool>(r.bound));
    }
    SUBCASE("example2 with small theta")
    {
        const ProblemSpec s = example2(0.05, Params::make(0.5, 0.5, 1.0, 1.0, kE));
        const MeshPtr m = build_mesh(s.params, 1024);
        const ContractionReport r = contraction_constant(s, m);
        CHECK(r.L < 1.0);
        const SolveReport exact = solve(s, m);
        const Params prm = s.params;
        const WeightedFn xp =
            make_perturbed_solution(s, [prm](double t) { return 0.5 * std::exp(3.0) * std::cos(tau(t, prm)); }, m);
        for (std::size_t i = 1; i <= 1024; ++i) {
            CHECK(std::abs(xp.x(i) - exact.solution.x(i)) <= r.bound(m->t(i)));
        }
    }
    SUBCASE("missing envelopes")
    {
        const ProblemSpec s = example1(1.0, Params::make(0.5, 0.5, 1.0, 1.0, 2.0));
        CHECK_THROWS_AS(contraction_constant(s, build_mesh(s.params, 64)), HypothesisError);
    }
}

TEST_CASE("linear problem under an admissible perturbation")
{
    const ProblemSpec s = linear_contraction(0.5, Params::make(0.5, 0.5, 1.0, 1.0, 2.0, 1.0));
    const MeshPtr m = build_mesh(s.params, 1024);
    const SolveReport exact = solve(s, m);
    const Params prm = s.params;
    const WeightedFn xp = make_perturbed_solution(s, [prm](double t) { return std::sin(5.0 * tau(t, prm)); }, m);
    const ContractionReport c = contraction_constant(s, m);
    for (std::size_t i = 1; i <= 1024; ++i) {
        CHECK(std::abs(xp.x(i) - exact.solution.x(i)) <= c.bound(m->t(i)));
    }
}

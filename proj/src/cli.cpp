#include "katufrac/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "katufrac/operators.hpp"
#include "katufrac/problems.hpp"
#include "katufrac/solver.hpp"
#include "katufrac/stability.hpp"

namespace katufrac::cli {

namespace {

// Raised for flag values that parse but make no sense together.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kHypothesisTol = 1e-12;

struct ProblemFlags {
    std::string name;
    double alpha = 0.5;
    double beta = 0.5;
    double rho = 1.0;
    double a = 1.0;
    double b = 2.0;
    double c = 1.0;
    double theta = 1.0;
    std::optional<double> sigma;
    double L = 0.5;
    double kappa = 0.01;
    std::size_t n = 1024;
    std::optional<double> grading;
    double tol = 1e-10;
    int max_iter = 200;
    std::string out;
};

void add_problem_flags(CLI::App* cmd, ProblemFlags& f, bool with_b)
{
    cmd->add_option("--n", f.n, "mesh intervals")->capture_default_str();
    cmd->add_option("--grading", f.grading, "mesh grading r >= 1 (default min(5, max(1, 2/gamma)))");
    cmd->add_option("--tol", f.tol, "Picard tolerance")->capture_default_str();
    cmd->add_option("--max-iter", f.max_iter, "Picard iteration cap")->capture_default_str();
    cmd->add_option("--theta", f.theta, "theta of example1/example2")->capture_default_str();
    cmd->add_option("--sigma", f.sigma, "power of the manufactured right-hand sides");
    cmd->add_option("--alpha", f.alpha, "order alpha (manufactured problems)")->capture_default_str();
    cmd->add_option("--beta", f.beta, "type beta (manufactured problems)")->capture_default_str();
    cmd->add_option("--rho", f.rho, "rho")->capture_default_str();
    cmd->add_option("--a", f.a, "left end a")->capture_default_str();
    if (with_b) {
        cmd->add_option("--b", f.b, "right end b")->capture_default_str();
    }
    cmd->add_option("--c", f.c, "initial value (linear problem)")->capture_default_str();
    cmd->add_option("--L", f.L, "contraction constant (linear problem)")->capture_default_str();
    cmd->add_option("--kappa", f.kappa, "scale of p (attractive problem)")->capture_default_str();
}

void check_solver_flags(const ProblemFlags& f)
{
    if (f.n < 8) {
        throw UsageError("--n must be at least 8");
    }
    if (!(f.tol > 0.0)) {
        throw UsageError("--tol must be positive");
    }
    if (f.max_iter < 1) {
        throw UsageError("--max-iter must be at least 1");
    }
    if (f.grading && !(*f.grading >= 1.0)) {
        throw UsageError("--grading must be >= 1");
    }
}

ProblemSpec make_problem(const ProblemFlags& f)
{
    Params p{f.alpha, f.beta, f.rho, f.a, f.b, f.c};
    if (f.name == "example1" || f.name == "example2") {
        p.alpha = 0.5;
        p.beta = 0.5;
        p.validate();
        return f.name == "example1" ? example1(f.theta, p) : example2(f.theta, p);
    }
    p.validate();
    if (f.name == "manufactured") {
        return manufactured(f.sigma.value_or(1.0), p);
    }
    if (f.name == "linear") {
        return linear_contraction(f.L, p);
    }
    if (f.name == "attractive") {
        return attractive_manufactured(f.sigma.value_or(-0.875), f.kappa, p);
    }
    throw UsageError("unknown problem '" + f.name + "'");
}

SolveOptions solve_options(const ProblemFlags& f)
{
    SolveOptions o;
    o.tol = f.tol;
    o.max_iter = f.max_iter;
    return o;
}

std::filesystem::path output_path(const std::string& flag, const std::string& file)
{
    if (!flag.empty()) {
        return flag;
    }
    const char* dir = std::getenv("KATUFRAC_OUT_DIR");
    return std::filesystem::path(dir && *dir ? dir : ".") / file;
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    file << text;
    if (!file) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

// ---- identities -------------------------------------------------------

struct IdentityRow {
    std::string identity;
    std::string params;
    double error;
};

std::string describe(std::initializer_list<std::pair<const char*, double>> kv)
{
    std::ostringstream s;
    bool first = true;
    for (const auto& [k, v] : kv) {
        s << (first ? "" : " ") << k << '=' << v;
        first = false;
    }
    return s.str();
}

double relative_sup(std::span<const double> got, std::span<const double> want)
{
    const double scale = sup_norm(want);
    return sup_diff(got, want) / (scale > 0.0 ? scale : 1.0);
}

std::vector<IdentityRow> identity_sweep(std::size_t n)
{
    std::vector<IdentityRow> rows;
    const double a = 1.0;
    const double b = 3.0;

    for (double alpha : {0.3, 0.5, 0.8}) {
        for (double rho : {0.5, 1.0, 2.0}) {
            const Params p = Params::make(alpha, 0.5, rho, a, b);
            const MeshPtr mesh = build_mesh(p, n, std::nullopt);
            for (double sigma : {0.5, 1.0, 2.0}) {
                const GridFn g = GridFn::sample_u(mesh, [&](double u) { return std::pow(u, sigma); });
                const GridFn got = frac_integral(g, alpha, p);
                const double k = gamma_fn(sigma + 1.0) / gamma_fn(sigma + alpha + 1.0);
                const GridFn want =
                    GridFn::sample_u(mesh, [&](double u) { return k * std::pow(u, sigma + alpha); });
                rows.push_back({"integral of tau^sigma",
                                describe({{"alpha", alpha}, {"rho", rho}, {"sigma", sigma}}),
                                relative_sup(got.values, want.values)});
            }
        }
    }

    for (double alpha : {0.3, 0.5, 0.8}) {
        for (double rho : {1.0, 2.0}) {
            const Params p = Params::make(alpha, 0.0, rho, a, b);
            const MeshPtr mesh = build_mesh(p, n, std::nullopt);
            const GridFn g = GridFn::sample_u(
                mesh, [&](double u) { return u == 0.0 ? kSentinel : std::pow(u, alpha - 1.0); });
            const GridFn d = frac_derivative(g, alpha, p);
            double worst = 0.0;
            for (std::size_t i = 1; i < d.size(); ++i) {
                worst = std::max(worst, std::abs(std::pow(mesh->u(i), 1.0 - alpha) * d.values[i]));
            }
            rows.push_back({"D^alpha tau^{alpha-1} = 0", describe({{"alpha", alpha}, {"rho", rho}}), worst});
        }
    }

    std::mt19937_64 rng(20240531);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 3; ++k) {
        const double a1 = 0.05 + 0.85 * unit(rng);
        const double a2 = 0.05 + (0.95 - a1 - 0.05) * unit(rng);
        const Params p = Params::make(0.5, 0.5, 1.0, a, b);
        const MeshPtr mesh = build_mesh(p, n, 1.0);
        const GridFn g = GridFn::sample_u(mesh, [](double u) { return std::sin(u) + 1.0; });
        const GridFn twice = frac_integral(frac_integral(g, a1, p), a2, p);
        const GridFn once = frac_integral(g, a1 + a2, p);
        rows.push_back({"semigroup I^a2 I^a1 = I^{a1+a2}", describe({{"a1", a1}, {"a2", a2}}),
                        relative_sup(twice.values, once.values)});
    }

    for (double alpha : {0.5, 0.8}) {
        for (double beta : {0.25, 0.75}) {
            const Params p = Params::make(alpha, beta, 1.0, a, b);
            const MeshPtr mesh = build_mesh(p, n, std::nullopt);
            const GridFn g = GridFn::sample_u(mesh, [](double u) { return std::sin(u) + 1.0; });
            const GridFn lhs = generalized_derivative(g, p);
            const GridFn rhs = remark1_form(g, p);
            rows.push_back({"generalized = I^{beta(1-alpha)} D^gamma",
                            describe({{"alpha", alpha}, {"beta", beta}}), sup_diff(lhs.values, rhs.values)});

            const double gamma = p.gamma();
            const GridFn s = GridFn::sample_u(
                mesh, [&](double u) { return u == 0.0 ? kSentinel : std::pow(u, gamma - 1.0); });
            const GridFn ds = generalized_derivative(s, p);
            rows.push_back({"D^{alpha,beta} tau^{gamma-1} = 0", describe({{"alpha", alpha}, {"beta", beta}}),
                            sup_norm(ds.values)});
        }
    }
    return rows;
}

int cmd_identities(double tol, long long n, std::ostream& out)
{
    if (n < 8) {
        throw UsageError("--n must be at least 8");
    }
    if (!(tol > 0.0)) {
        throw UsageError("--tol must be positive");
    }
    const std::vector<IdentityRow> rows = identity_sweep(static_cast<std::size_t>(n));
    bool all = true;
    out << std::left << std::setw(42) << "identity" << std::setw(36) << "params" << std::setw(26)
        << "max error" << "status\n";
    for (const auto& r : rows) {
        const bool pass = r.error <= tol;
        all = all && pass;
        out << std::left << std::setw(42) << r.identity << std::setw(36) << r.params << std::setw(26)
            << format_number(r.error) << (pass ? "pass" : "FAIL") << '\n';
    }
    out << (all ? "all identities hold" : "identity failures") << " at tol=" << format_number(tol)
        << " n=" << n << '\n';
    return all ? kOk : kBoundViolated;
}

// ---- solve -----------------------------------------------------------------

int cmd_solve(const ProblemFlags& f, std::ostream& out)
{
    check_solver_flags(f);
    const ProblemSpec spec = make_problem(f);
    const MeshPtr mesh = build_mesh(spec.params, f.n, f.grading);
    const SolveReport report = solve(spec, mesh, solve_options(f));
    const GridFn res = residual(report.solution, spec);

    std::ostringstream csv;
    if (!report.converged) {
        csv << "# nonconverged\n";
    }
    csv << "t,u,tau,y,x,residual\n";
    for (std::size_t i = 0; i < mesh->size(); ++i) {
        const double t = mesh->t(i);
        csv << format_number(t) << ',' << format_number(mesh->u(i)) << ',' << format_number(tau(t, spec.params))
            << ',' << format_number(report.solution.y_values[i]) << ','
            << (i == 0 ? "" : format_number(report.solution.x(i))) << ','
            << (i == 0 ? "" : format_number(res.values[i])) << '\n';
    }
    const auto path = output_path(f.out, f.name + ".csv");
    write_file(path, csv.str());

    out << "problem: " << spec.name << '\n'
        << "n: " << f.n << '\n'
        << "iterations: " << report.iterations << '\n'
        << "final_update_norm: " << format_number(report.final_update_norm) << '\n'
        << "residual_sup: " << format_number(report.residual_sup) << '\n'
        << "converged: " << (report.converged ? "true" : "false") << '\n';
    if (spec.exact) {
        double err = 0.0;
        for (std::size_t i = 1; i < mesh->size(); ++i) {
            err = std::max(err, std::abs(report.solution.x(i) - spec.exact(mesh->t(i))));
        }
        out << "max_abs_error: " << format_number(err) << '\n';
    }
    out << "csv: " << path.string() << '\n';
    if (!report.converged) {
        require_converged(report, spec.name);
    }
    return kOk;
}

// ---- stability ---------------------------------------------------------------

struct StabilityFlags {
    std::string perturb = "sine";
    double eps = 0.01;
    bool unit_phi = false;
};

int cmd_stability(const ProblemFlags& f, const StabilityFlags& s, std::ostream& out)
{
    check_solver_flags(f);
    ProblemSpec spec = make_problem(f);
    if (s.unit_phi) {
        spec.envelopes.Phi = [](double) { return 1.0; };
        if (spec.envelopes.p) {
            spec.envelopes.q = spec.envelopes.p;
        }
    }
    if (!spec.envelopes.Phi || !spec.envelopes.q) {
        throw HypothesisError("problem '" + spec.name + "' ships no envelopes Phi and q");
    }
    const MeshPtr mesh = build_mesh(spec.params, f.n, f.grading);
    if (spec.envelopes.p) {
        const double h4 = spec.kind == ProblemKind::Explicit ? check_H4(spec) : check_H2(spec);
        const double h6 = check_H6(spec, *mesh);
        out << "growth_hypothesis_violation: " << format_number(h4) << '\n'
            << "H6_violation: " << format_number(h6) << '\n';
        if (h4 > kHypothesisTol || h6 > kHypothesisTol) {
            throw HypothesisError("growth hypotheses fail on the sample lattice");
        }
    }

    Envelope delta;
    const Envelope Phi = spec.envelopes.Phi;
    const Params params = spec.params;
    if (s.perturb == "phi") {
        delta = Phi;
    } else if (s.perturb == "sine") {
        delta = [Phi, params](double t) { return Phi(t) * std::sin(5.0 * tau(t, params)); };
    } else {
        delta = [eps = s.eps](double) { return eps; };
    }

    const SolveReport exact = solve(spec, mesh, solve_options(f));
    require_converged(exact, spec.name);
    const WeightedFn perturbed = make_perturbed_solution(spec, delta, mesh, solve_options(f));
    const StabilityReport report = uhr_bound_check(spec, perturbed, exact.solution);

    out << "problem: " << spec.name << '\n'
        << "perturbation: " << s.perturb << '\n'
        << "lambda_phi: " << format_number(report.lambda_phi) << '\n';
    if (f.name == "example2") {
        out << "lambda_phi_claimed: " << format_number(example2_claimed_lambda()) << '\n';
    }
    out << "q_star: " << format_number(report.q_star) << '\n'
        << "p_star: " << format_number(report.p_star) << '\n'
        << "p_sup: " << format_number(report.p_sup) << '\n'
        << "phi_star: " << format_number(report.phi_star) << '\n'
        << "L: " << format_number(report.L) << '\n'
        << "psi_phi: " << format_number(report.psi_phi) << '\n'
        << "bounds_hold: " << (report.bounds_hold ? "true" : "false") << '\n'
        << "max_violation: " << format_number(report.max_violation) << '\n';
    return report.bounds_hold ? kOk : kBoundViolated;
}

// ---- attractivity -------------------------------------------------------------

int cmd_attractivity(const ProblemFlags& f, const std::vector<double>& horizons, std::ostream& out)
{
    check_solver_flags(f);
    if (horizons.empty()) {
        throw UsageError("--horizons needs at least one value");
    }
    const ProblemSpec spec = make_problem(f);
    if (spec.kind != ProblemKind::Implicit || !spec.envelopes.p) {
        throw HypothesisError("attractivity needs an implicit problem with envelope p");
    }
    std::vector<double> ts;
    double prev = 0.0;
    for (double h : horizons) {
        if (!(h > prev)) {
            throw UsageError("--horizons must be positive and increasing (values of tau(T))");
        }
        prev = h;
        ts.push_back(t_from_tau(h, spec.params));
    }
    AttractivityOptions options;
    options.n = f.n;
    options.grading = f.grading;
    if (!options.grading && f.name == "attractive") {
        // keeps p(t_1) moderate, where the implicit map is least contractive
        options.grading = 1.0;
    }
    options.solve = solve_options(f);
    const AttractivityReport report = attractivity_experiment(spec, ts, options);

    std::ostringstream csv;
    csv << "T,envelope,weighted_envelope,pair_diff_sup\n";
    for (const auto& r : report.rows) {
        csv << format_number(r.T) << ',' << format_number(r.envelope) << ','
            << format_number(r.weighted_envelope) << ',' << format_number(r.pair_diff_sup) << '\n';
    }
    const auto path = output_path(f.out, "attractivity_" + f.name + ".csv");
    write_file(path, csv.str());

    out << "problem: " << spec.name << '\n';
    for (const auto& r : report.rows) {
        out << "T=" << format_number(r.T) << " weighted_envelope=" << format_number(r.weighted_envelope)
            << " pair_diff_sup=" << format_number(r.pair_diff_sup)
            << " max_violation=" << format_number(r.max_violation) << '\n';
    }
    out << "ball_radius: " << format_number(report.ball_radius) << '\n'
        << "decreasing: " << (report.decreasing ? "true" : "false") << '\n'
        << "bounds_hold: " << (report.bounds_hold ? "true" : "false") << '\n'
        << "csv: " << path.string() << '\n';
    return report.decreasing && report.bounds_hold ? kOk : kBoundViolated;
}

}  // namespace

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Katugampola fractional operators, IVP solvers and stability checks", "katufrac"};
    app.require_subcommand(1);

    double id_tol = 1e-4;
    long long id_n = 2048;
    auto* identities = app.add_subcommand("identities", "run the operator identity sweep");
    identities->add_option("--tol", id_tol, "pass threshold")->capture_default_str();
    identities->add_option("--n", id_n, "mesh intervals")->capture_default_str();

    const std::vector<std::string> catalog{"example1", "example2", "manufactured", "linear", "attractive"};

    ProblemFlags solve_flags;
    auto* solve_cmd = app.add_subcommand("solve", "solve a catalog problem and write a CSV");
    solve_cmd->add_option("problem", solve_flags.name, "problem name")->required()->check(CLI::IsMember(catalog));
    add_problem_flags(solve_cmd, solve_flags, true);
    solve_cmd->add_option("--out", solve_flags.out, "CSV path (default $KATUFRAC_OUT_DIR/<problem>.csv)");

    ProblemFlags stab_flags;
    StabilityFlags stab_extra;
    auto* stab_cmd = app.add_subcommand("stability", "Ulam-Hyers-Rassias bound check");
    stab_cmd->add_option("problem", stab_flags.name, "problem name")->required()->check(CLI::IsMember(catalog));
    add_problem_flags(stab_cmd, stab_flags, true);
    stab_cmd->add_option("--perturb", stab_extra.perturb, "perturbation: phi, sine or const")
        ->capture_default_str()
        ->check(CLI::IsMember({"phi", "sine", "const"}));
    stab_cmd->add_option("--eps", stab_extra.eps, "size of the const perturbation")->capture_default_str();
    stab_cmd->add_flag("--unit-phi", stab_extra.unit_phi, "replace Phi by 1 (and q by p)");

    ProblemFlags attr_flags;
    std::vector<double> horizons{10.0, 100.0, 1000.0};
    auto* attr_cmd = app.add_subcommand("attractivity", "local attractivity across a horizon ladder");
    attr_cmd->add_option("problem", attr_flags.name, "problem name")->required()->check(CLI::IsMember(catalog));
    add_problem_flags(attr_cmd, attr_flags, false);
    attr_cmd->add_option("--horizons", horizons, "comma-separated values of tau(T)")->delimiter(',');
    attr_cmd->add_option("--out", attr_flags.out,
                         "CSV path (default $KATUFRAC_OUT_DIR/attractivity_<problem>.csv)");

    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.emplace_back("katufrac");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : storage) {
        argv.push_back(s.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (identities->parsed()) {
            return cmd_identities(id_tol, id_n, out);
        }
        if (solve_cmd->parsed()) {
            return cmd_solve(solve_flags, out);
        }
        if (stab_cmd->parsed()) {
            return cmd_stability(stab_flags, stab_extra, out);
        }
        return cmd_attractivity(attr_flags, horizons, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        err << "invalid parameters: " << e.what() << '\n';
        return kUsage;
    } catch (const HypothesisError& e) {
        err << "hypothesis not met: " << e.what() << '\n';
        return kHypothesisUnmet;
    } catch (const NonConvergence& e) {
        err << "no convergence: " << e.what() << '\n';
        return kNonConvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInternal;
    }
}

}  // namespace katufrac::cli

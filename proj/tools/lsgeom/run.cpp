#include "lsgeom/run.hpp"

#include "lsgeom/errors.hpp"
#include "lsgeom/geometry.hpp"
#include "lsgeom/io.hpp"
#include "lsgeom/path_inference.hpp"
#include "lsgeom/risk_dof.hpp"
#include "lsgeom/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace lsgeom::cli {

namespace {

using Json = nlohmann::ordered_json;

Json to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json to_json(const MeanEstimate& m) { return Json{{"mean", m.mean}, {"std_error", m.std_error}}; }

/// Options shared by every subcommand.
struct Common {
    std::uint64_t seed = 0;
    std::uint64_t mc_samples = 100000;
    unsigned threads = 0;
    std::string out;

    McOptions mc() const { return {mc_samples, seed, threads}; }
};

struct Outcome {
    Json config;
    Json result;
    int code = kSuccess;
};

std::vector<double> parse_list(const std::string& text, const std::string& field)
{
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidArgument(field + ": cannot parse '" + item + "' as a number");
        }
    }
    if (values.empty()) throw InvalidArgument(field + ": empty list");
    return values;
}

/// "square", "disk[:r]" or "polygon:x,y;x,y;...".
ConvexBody2D parse_body(const std::string& text)
{
    if (text == "square") return ConvexBody2D::unit_square();
    if (text == "disk") return ConvexBody2D::disk(1.0);
    if (text.rfind("disk:", 0) == 0) return ConvexBody2D::disk(parse_list(text.substr(5), "--body").at(0));
    if (text.rfind("polygon:", 0) == 0) {
        std::vector<Point2> vertices;
        std::stringstream ss(text.substr(8));
        std::string pair;
        while (std::getline(ss, pair, ';')) {
            const auto xy = parse_list(pair, "--body");
            if (xy.size() != 2) throw InvalidArgument("--body: polygon vertices need two coordinates");
            vertices.emplace_back(xy[0], xy[1]);
        }
        return ConvexBody2D::polygon(std::move(vertices));
    }
    throw InvalidArgument("--body: unknown body '" + text + "' (expected square, disk[:r] or polygon:x,y;...)");
}

std::vector<double> parse_grid(const std::string& text)
{
    const auto first = text.find(':');
    const auto second = text.find(':', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos) {
        throw InvalidArgument("--grid: expected start:stop:count");
    }
    const double a = parse_list(text.substr(0, first), "--grid").at(0);
    const double b = parse_list(text.substr(first + 1, second - first - 1), "--grid").at(0);
    const double count = parse_list(text.substr(second + 1), "--grid").at(0);
    if (!(count >= 1.0) || count != std::floor(count)) throw InvalidArgument("--grid: count must be a positive integer");
    const auto n = static_cast<std::size_t>(count);
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return grid;
}

Json solution_json(const Solution& s)
{
    return Json{{"beta", to_json(s.beta_hat)},
                {"u", to_json(s.u_hat)},
                {"mu_hat", to_json(s.mu_hat)},
                {"objective", s.objective},
                {"duality_gap", s.duality_gap},
                {"kkt_residual", s.kkt_residual},
                {"iterations", s.iterations},
                {"status", s.converged() ? "converged" : "max_iterations"}};
}

std::string timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream os;
    os << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream file(path);
    if (!file) throw IoError("cannot write " + path);
    file << text;
    if (!file) throw IoError("write failed for " + path);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Penalized least squares and Gaussian geometry toolkit", "lsgeom"};
    app.require_subcommand(1);
    app.set_version_flag("--version", LSGEOM_VERSION);

    Common common;
    auto add_common = [&](CLI::App* sub, bool stochastic) {
        sub->add_option("--out", common.out, "Result document path (stdout when omitted)");
        sub->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
        if (stochastic) {
            sub->add_option("--seed", common.seed, "Root seed")->capture_default_str();
            sub->add_option("--mc-samples", common.mc_samples, "Monte Carlo samples")->capture_default_str();
        }
    };

    std::string x_path;
    std::string y_path;
    std::string penalty_text = "box";
    double lambda = 0.0;
    std::optional<double> sigma;

    // solve
    std::string step = "spectral";
    double alpha = 1.0;
    bool no_accel = false;
    double tol_gap = 1e-10;
    std::size_t max_iter = 100000;
    auto* solve_cmd = app.add_subcommand("solve", "Solve the penalized least-squares problem");
    solve_cmd->add_option("--x", x_path, "Design CSV")->required();
    solve_cmd->add_option("--y", y_path, "Response CSV")->required();
    solve_cmd->add_option("--penalty", penalty_text, "Penalty set K")->capture_default_str();
    solve_cmd->add_option("--lambda", lambda, "Penalty level")->required()->check(CLI::NonNegativeNumber);
    solve_cmd->add_option("--sigma", sigma, "Noise scale")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--step", step, "Step rule")->check(CLI::IsMember({"spectral", "fixed", "backtracking"}));
    solve_cmd->add_option("--alpha", alpha, "Step size for --step fixed")->check(CLI::PositiveNumber);
    solve_cmd->add_flag("--no-accel", no_accel, "Plain proximal gradient");
    solve_cmd->add_option("--tol-gap", tol_gap, "Duality-gap tolerance")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--max-iter", max_iter, "Iteration cap")->check(CLI::PositiveNumber);
    add_common(solve_cmd, false);

    // path
    std::size_t max_steps = 1000;
    auto* path_cmd = app.add_subcommand("path", "LASSO solution path");
    path_cmd->add_option("--x", x_path, "Design CSV")->required();
    path_cmd->add_option("--y", y_path, "Response CSV")->required();
    path_cmd->add_option("--max-steps", max_steps, "Maximum number of knots")->check(CLI::PositiveNumber);
    add_common(path_cmd, false);

    // covtest
    std::size_t k = 1;
    bool calibrate = false;
    auto* cov_cmd = app.add_subcommand("covtest", "Covariance test at a LASSO knot");
    cov_cmd->add_option("--x", x_path, "Design CSV")->required();
    cov_cmd->add_option("--y", y_path, "Response CSV")->required();
    cov_cmd->add_option("--sigma", sigma, "Noise scale")->required()->check(CLI::PositiveNumber);
    cov_cmd->add_option("--k", k, "Knot index (1-based)")->check(CLI::PositiveNumber);
    cov_cmd->add_flag("--calibrate", calibrate, "Also simulate the null distribution");
    add_common(cov_cmd, true);

    // dof
    std::optional<double> fd_step;
    auto* dof_cmd = app.add_subcommand("dof", "Degrees of freedom and SURE");
    dof_cmd->add_option("--x", x_path, "Design CSV")->required();
    dof_cmd->add_option("--y", y_path, "Response CSV")->required();
    dof_cmd->add_option("--penalty", penalty_text, "Penalty set K (Box or cone)")->capture_default_str();
    dof_cmd->add_option("--lambda", lambda, "Penalty level")->required()->check(CLI::NonNegativeNumber);
    dof_cmd->add_option("--sigma", sigma, "Noise scale, enables SURE")->check(CLI::PositiveNumber);
    dof_cmd->add_option("--fd-step", fd_step, "Also report the finite-difference divergence")
        ->check(CLI::PositiveNumber);
    add_common(dof_cmd, false);

    // width
    std::string body_text;
    std::string points_path;
    Index width_dimension = 0;
    auto* width_cmd = app.add_subcommand("width", "Gaussian width and L1");
    auto* width_penalty = width_cmd->add_option("--penalty", penalty_text, "Bounded penalty set");
    auto* width_dim = width_cmd->add_option("--dim", width_dimension, "Dimension for --penalty");
    auto* width_body = width_cmd->add_option("--body", body_text, "Planar body: square, disk[:r], polygon:x,y;...");
    auto* width_points = width_cmd->add_option("--points", points_path, "CSV whose columns are points (convex hull)");
    width_penalty->excludes(width_body)->excludes(width_points)->needs(width_dim);
    width_body->excludes(width_points);
    add_common(width_cmd, true);

    // tube
    std::string radii_text;
    auto* tube_cmd = app.add_subcommand("tube", "Tube volumes and Steiner fit of a planar body");
    tube_cmd->add_option("--body", body_text, "square, disk[:r] or polygon:x,y;...")->required();
    tube_cmd->add_option("--radii", radii_text, "Comma-separated radii; three or more add a Steiner fit")->required();
    add_common(tube_cmd, true);

    // cone
    std::string cone_text;
    std::optional<double> u_level;
    auto* cone_cmd = app.add_subcommand("cone", "Conic intrinsic volumes and sup-tail check");
    cone_cmd->add_option("--cone", cone_text, "cone:s1,...,sp (s in +,-,0) or subspace:k,n")->required();
    cone_cmd->add_option("--u", u_level, "Threshold for the sup-tail check")->check(CLI::PositiveNumber);
    add_common(cone_cmd, true);

    // ecdensity
    int j_index = 0;
    double u_value = 0.0;
    auto* ec_cmd = app.add_subcommand("ecdensity", "EC density rho_j(u)");
    ec_cmd->add_option("--j", j_index, "Index j >= 0")->required()->check(CLI::NonNegativeNumber);
    ec_cmd->add_option("--u", u_value, "Level u")->required();
    add_common(ec_cmd, false);

    // critradius
    std::string kernel_name = "squared_exponential";
    double length_scale = 1.0;
    std::string grid_text = "0:3:200";
    std::optional<double> delta;
    auto* crit_cmd = app.add_subcommand("critradius", "Critical radius of a smooth unit-variance process");
    crit_cmd->add_option("--kernel", kernel_name, "Kernel")
        ->check(CLI::IsMember({"cosine", "squared_exponential"}))
        ->capture_default_str();
    crit_cmd->add_option("--length-scale", length_scale, "Squared-exponential length scale")
        ->check(CLI::PositiveNumber);
    crit_cmd->add_option("--grid", grid_text, "start:stop:count")->capture_default_str();
    crit_cmd->add_option("--delta", delta, "Diagonal exclusion (default two grid spacings)")
        ->check(CLI::PositiveNumber);
    add_common(crit_cmd, false);

    std::vector<std::string> argv_store{"lsgeom"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForVersion&) {
        out << LSGEOM_VERSION << '\n';
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "lsgeom: " << e.what() << '\n';
        return kValidation;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    Outcome o;

    try {
        auto load_problem = [&]() {
            Matrix X = read_matrix_csv(x_path);
            Vector y = read_vector_csv(y_path);
            if (y.size() != X.rows()) {
                throw DimensionError("--y: " + y_path + " has " + std::to_string(y.size()) + " rows but --x " +
                                     x_path + " has " + std::to_string(X.rows()));
            }
            return RegressionProblem(std::move(X), std::move(y), sigma);
        };

        if (command == "solve") {
            const RegressionProblem problem = load_problem();
            const PenaltySpec K = parse_penalty(penalty_text, problem.features());
            SolverConfig config;
            if (step == "fixed") config.step_rule = FixedStep{alpha};
            else if (step == "backtracking") config.step_rule = BacktrackingStep{};
            config.accelerated = !no_accel;
            config.tol_gap = tol_gap;
            config.max_iter = max_iter;
            o.config = {{"x", x_path}, {"y", y_path}, {"penalty", K.describe()}, {"lambda", lambda},
                        {"step", step}, {"accelerated", config.accelerated}, {"tol_gap", tol_gap},
                        {"max_iter", max_iter}};
            if (sigma) o.config["sigma"] = *sigma;
            const Solution s = solve(problem, K, lambda, config);
            o.result = solution_json(s);
            if (!s.converged()) o.code = kNotConverged;
        } else if (command == "path") {
            const RegressionProblem problem = load_problem();
            o.config = {{"x", x_path}, {"y", y_path}, {"max_steps", max_steps}};
            const LassoPath p = lasso_path(problem.design(), problem.response(), max_steps);
            Json events = Json::array();
            for (std::size_t i = 0; i < p.knots.size(); ++i) {
                events.push_back({{"lambda", p.knots[i]},
                                  {"kind", p.events[i].kind == PathEventKind::add ? "add" : "drop"},
                                  {"variable", p.events[i].variable},
                                  {"active", p.active_sets[i]},
                                  {"signs", p.signs[i]}});
            }
            o.result = {{"knots", p.knots}, {"events", events}, {"complete", p.complete},
                        {"lambda_floor", p.lambda_floor()}, {"warnings", p.warnings}};
        } else if (command == "covtest") {
            const RegressionProblem problem = load_problem();
            const double sigma_sq = *sigma * *sigma;
            o.config = {{"x", x_path}, {"y", y_path}, {"sigma", *sigma}, {"k", k}, {"calibrate", calibrate}};
            const LassoPath p = lasso_path(problem.design(), problem.response(), k + 1);
            const CovTestResult t = covariance_statistic(p, problem.design(), problem.response(), k, sigma_sq);
            o.result = {{"k", k}, {"statistic", t.statistic}, {"p_value", t.p_value},
                        {"knot_form", covariance_statistic_knot_form(p, k, sigma_sq)},
                        {"knots", std::vector<double>(p.knots.begin(), p.knots.end())}};
            if (calibrate) {
                o.config["seed"] = common.seed;
                o.config["mc_samples"] = common.mc_samples;
                const NullCalibration null = null_calibration(problem.design(), *sigma, k, common.mc());
                o.result["null"] = {{"ks_distance_exp1", null.ks_distance},
                                    {"mean", null.mean},
                                    {"std_error", null.std_error},
                                    {"resampled", null.resampled},
                                    {"empirical_p_value", 1.0 - null.empirical_cdf(t.statistic)}};
            }
        } else if (command == "dof") {
            const RegressionProblem problem = load_problem();
            const PenaltySpec K = parse_penalty(penalty_text, problem.features());
            o.config = {{"x", x_path}, {"y", y_path}, {"penalty", K.describe()}, {"lambda", lambda}};
            if (sigma) o.config["sigma"] = *sigma;
            if (fd_step) o.config["fd_step"] = *fd_step;
            const Solution s = solve(problem, K, lambda);
            if (!s.converged()) {
                o.result = {{"fit", solution_json(s)}};
                o.code = kNotConverged;
            } else {
                const DofEstimate d = dof_polyhedral(problem, K, lambda, s);
                o.result = {{"dof", d.dof}, {"method", to_string(d.method)}, {"active", d.detail},
                            {"generic", d.generic}, {"fit", solution_json(s)}};
                if (sigma) o.result["sure"] = sure_risk(problem.response(), s.mu_hat, d.dof, *sigma * *sigma);
                if (fd_step) {
                    if (!d.generic) throw InvalidArgument("--fd-step: y lies on a stratum boundary; finite differences refused");
                    const DofEstimate fd = divergence_fd(solver_fit_map(problem.design(), K, lambda),
                                                         problem.response(), *fd_step, common.threads);
                    o.result["finite_difference"] = fd.dof;
                }
            }
        } else if (command == "width") {
            o.config = {{"seed", common.seed}, {"mc_samples", common.mc_samples}};
            GaussianWidth w;
            if (!body_text.empty()) {
                o.config["body"] = body_text;
                w = gaussian_width(parse_body(body_text), common.mc());
            } else if (!points_path.empty()) {
                o.config["points"] = points_path;
                w = gaussian_width(read_matrix_csv(points_path), common.mc());
            } else if (*width_penalty) {
                const PenaltySpec K = parse_penalty(penalty_text, width_dimension);
                o.config["penalty"] = K.describe();
                w = gaussian_width(K, common.mc());
            } else {
                throw InvalidArgument("width: one of --penalty, --body or --points is required");
            }
            o.result = {{"mean", w.mean}, {"std_error", w.std_error}, {"L1", w.intrinsic_volume_1},
                        {"L1_std_error", w.intrinsic_volume_1_std_error}};
        } else if (command == "tube") {
            const ConvexBody2D body = parse_body(body_text);
            const std::vector<double> radii = parse_list(radii_text, "--radii");
            o.config = {{"body", body_text}, {"radii", radii}, {"seed", common.seed},
                        {"mc_samples", common.mc_samples}};
            Json tubes = Json::array();
            for (std::size_t i = 0; i < radii.size(); ++i) {
                McOptions mc = common.mc();
                mc.seed = child_key(derive_key(common.seed, "tube"), i);
                const TubeVolume tv = tube_volume_mc(body, radii[i], mc);
                tubes.push_back({{"r", radii[i]}, {"volume", tv.volume}, {"std_error", tv.std_error}});
            }
            const IntrinsicVolumeEstimate exact = exact_intrinsic_volumes(body);
            o.result = {{"tubes", tubes}, {"exact_intrinsic_volumes", to_json(exact.values)}};
            if (radii.size() >= 3) {
                const IntrinsicVolumeEstimate fit = steiner_fit(body, radii, common.mc());
                o.result["steiner_fit"] = {{"values", to_json(fit.values)}, {"std_errors", to_json(fit.std_errors)}};
            }
        } else if (command == "cone") {
            std::optional<ConeDescriptor> cone;
            if (cone_text.rfind("subspace:", 0) == 0) {
                const auto kn = parse_list(cone_text.substr(9), "--cone");
                if (kn.size() != 2 || kn[0] < 0 || kn[1] < 1 || kn[0] > kn[1] || kn[0] != std::floor(kn[0]) ||
                    kn[1] != std::floor(kn[1])) {
                    throw InvalidArgument("--cone: subspace:k,n needs integers 0 <= k <= n, n >= 1");
                }
                const auto n = static_cast<Index>(kn[1]);
                cone = ConeDescriptor::subspace(Matrix::Identity(n, n).leftCols(static_cast<Index>(kn[0])));
            } else {
                if (cone_text.rfind("cone:", 0) != 0) throw InvalidArgument("--cone: expected cone:... or subspace:k,n");
                const auto commas = std::count(cone_text.begin(), cone_text.end(), ',');
                cone = ConeDescriptor::from_penalty(parse_penalty(cone_text, static_cast<Index>(commas + 1)));
            }
            o.config = {{"cone", cone_text}, {"seed", common.seed}, {"mc_samples", common.mc_samples}};
            const IntrinsicVolumeEstimate est = conic_intrinsic_volumes(*cone, common.mc());
            const Vector exact = cone->exact_weights();
            const Vector lkc = spherical_intrinsic_volumes(std::span<const double>(exact.data(), exact.size()));
            o.result = {{"weights", to_json(est.values)}, {"weights_std_error", to_json(est.std_errors)},
                        {"exact_weights", to_json(exact)}, {"sphere_intrinsic_volumes", to_json(lkc)},
                        {"chi_bar_mean", chi_bar_mean(std::span<const double>(exact.data(), exact.size()))}};
            if (u_level) {
                o.config["u"] = *u_level;
                McOptions mc = common.mc();
                mc.seed = derive_key(common.seed, "cone_sup");
                const SupTailValidation v = sup_mc_validate(*cone, *u_level, mc);
                o.result["sup_tail"] = {{"empirical", v.empirical}, {"std_error", v.std_error},
                                        {"ec_approx", v.approx}, {"gap", v.gap},
                                        {"chi_bar_tail", chi_bar_tail(std::span<const double>(exact.data(), exact.size()), *u_level)}};
            }
        } else if (command == "ecdensity") {
            o.config = {{"j", j_index}, {"u", u_value}};
            o.result = {{"value", ec_density(j_index, u_value)}};
        } else if (command == "critradius") {
            const KernelSpec kernel =
                kernel_name == "cosine" ? KernelSpec::cosine() : KernelSpec::squared_exponential(length_scale);
            const std::vector<double> grid = parse_grid(grid_text);
            o.config = {{"kernel", kernel_name}, {"grid", grid_text}};
            if (kernel_name != "cosine") o.config["length_scale"] = length_scale;
            if (delta) o.config["delta"] = *delta;
            const CriticalRadiusEstimate c = critical_radius_process(kernel, grid, delta);
            o.result = {{"cot_sq", c.cot_sq}, {"r_c", c.r_c}, {"delta", c.delta},
                        {"admissible_pairs", c.admissible_pairs}};
            o.result["argmax_pair"] = c.argmax_pair ? Json{c.argmax_pair->first, c.argmax_pair->second} : Json();
        }
    } catch (const InvalidArgument& e) {
        err << "lsgeom " << command << ": " << e.what() << '\n';
        return kValidation;
    } catch (const IoError& e) {
        err << "lsgeom " << command << ": " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "lsgeom " << command << ": " << e.what() << '\n';
        return kFailure;
    }

    const Json doc{{"command", command}, {"config", o.config}, {"result", o.result}, {"version", LSGEOM_VERSION}};
    const std::string text = doc.dump(2) + "\n";
    try {
        if (common.out.empty()) {
            out << text;
        } else {
            write_text(common.out, text);
            const Json meta{{"timestamp", timestamp()}, {"threads", resolve_threads(common.threads)}};
            write_text(common.out + ".meta.json", meta.dump(2) + "\n");
        }
    } catch (const IoError& e) {
        err << "lsgeom " << command << ": --out: " << e.what() << '\n';
        return kValidation;
    }
    if (o.code == kNotConverged) err << "lsgeom " << command << ": did not converge; best iterate written\n";
    return o.code;
}

}  // namespace lsgeom::cli

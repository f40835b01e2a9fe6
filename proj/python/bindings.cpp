#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lsgeom/errors.hpp"
#include "lsgeom/geometry.hpp"
#include "lsgeom/path_inference.hpp"
#include "lsgeom/projection.hpp"
#include "lsgeom/risk_dof.hpp"
#include "lsgeom/solver.hpp"

namespace py = pybind11;
using namespace lsgeom;

namespace {

McOptions mc_options(std::uint64_t samples, std::uint64_t seed, unsigned threads)
{
    return {samples, seed, threads};
}

py::dict solution_dict(const Solution& s)
{
    py::dict d;
    d["beta"] = s.beta_hat;
    d["u"] = s.u_hat;
    d["mu_hat"] = s.mu_hat;
    d["objective"] = s.objective;
    d["duality_gap"] = s.duality_gap;
    d["kkt_residual"] = s.kkt_residual;
    d["iterations"] = s.iterations;
    d["converged"] = s.converged();
    return d;
}

SolverConfig make_config(const std::string& step, double alpha, bool accelerated, double tol_gap,
                         std::size_t max_iter)
{
    SolverConfig c;
    if (step == "fixed") c.step_rule = FixedStep{alpha};
    else if (step == "backtracking") c.step_rule = BacktrackingStep{};
    else if (step != "spectral") throw InvalidArgument("step must be spectral, fixed or backtracking");
    c.accelerated = accelerated;
    c.tol_gap = tol_gap;
    c.max_iter = max_iter;
    return c;
}

std::span<const double> as_span(const std::vector<double>& v) { return {v.data(), v.size()}; }

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Penalized least squares, LASSO path inference and Gaussian geometry";
    m.attr("__version__") = LSGEOM_VERSION;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<PathError>(m, "PathError", base.ptr());
    py::register_exception<InfeasibleDual>(m, "InfeasibleDual", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<PenaltySpec>(m, "Penalty")
        .def(py::init(&parse_penalty), py::arg("text"), py::arg("dimension"))
        .def_property_readonly("dimension", &PenaltySpec::dimension)
        .def_property_readonly("is_cone", &PenaltySpec::is_cone)
        .def("__repr__", [](const PenaltySpec& k) { return "Penalty('" + k.describe() + "')"; })
        .def("__str__", &PenaltySpec::describe);

    m.def("support_function", &support_function, py::arg("beta"), py::arg("K"));
    m.def(
        "project",
        [](const Vector& v, const PenaltySpec& K, double t) {
            const ProjectionResult p = project_scaled(v, K, t);
            return py::make_tuple(p.point, p.face_dimension);
        },
        py::arg("v"), py::arg("K"), py::arg("t") = 1.0, "Projection onto tK and the face dimension (None for l2).");
    m.def("prox", &prox_penalty, py::arg("v"), py::arg("K"), py::arg("t"));

    m.def(
        "solve",
        [](const Matrix& X, const Vector& y, const PenaltySpec& K, double lambda, const std::string& step,
           double alpha, bool accelerated, double tol_gap, std::size_t max_iter) {
            const SolverConfig c = make_config(step, alpha, accelerated, tol_gap, max_iter);
            Solution s;
            {
                py::gil_scoped_release release;
                s = solve(RegressionProblem(X, y), K, lambda, c);
            }
            return solution_dict(s);
        },
        py::arg("X"), py::arg("y"), py::arg("K"), py::arg("lam"), py::arg("step") = "spectral", py::arg("alpha") = 1.0,
        py::arg("accelerated") = true, py::arg("tol_gap") = 1e-10, py::arg("max_iter") = 100000);
    m.def(
        "duality_gap",
        [](const Matrix& X, const Vector& y, const PenaltySpec& K, double lambda, const Vector& beta, const Vector& u) {
            return duality_gap(RegressionProblem(X, y), K, lambda, beta, u);
        },
        py::arg("X"), py::arg("y"), py::arg("K"), py::arg("lam"), py::arg("beta"), py::arg("u"));

    m.def(
        "lasso_path",
        [](const Matrix& X, const Vector& y, std::size_t max_steps) {
            const LassoPath p = lasso_path(X, y, max_steps);
            py::dict d;
            d["knots"] = p.knots;
            d["active_sets"] = p.active_sets;
            d["signs"] = p.signs;
            d["complete"] = p.complete;
            d["warnings"] = p.warnings;
            return d;
        },
        py::arg("X"), py::arg("y"), py::arg("max_steps") = 1000);
    m.def(
        "lasso_coefficients",
        [](const Matrix& X, const Vector& y, double lambda) {
            return lasso_path(X, y, 16 * static_cast<std::size_t>(X.cols() + 1)).coefficients(lambda);
        },
        py::arg("X"), py::arg("y"), py::arg("lam"), "beta(lam) read off the exact LASSO path.");
    m.def(
        "covariance_test",
        [](const Matrix& X, const Vector& y, double sigma, std::size_t k) {
            const LassoPath p = lasso_path(X, y, k + 1);
            const CovTestResult t = covariance_statistic(p, X, y, k, sigma * sigma);
            return py::make_tuple(t.statistic, t.p_value);
        },
        py::arg("X"), py::arg("y"), py::arg("sigma"), py::arg("k") = 1, "(T_k, exp(-T_k)).");
    m.def("ks_distance_exp1", &ks_distance_exp1, py::arg("sample"));

    m.def("ec_density", &ec_density, py::arg("j"), py::arg("u"));
    m.def("hermite", &hermite, py::arg("j"), py::arg("u"));
    m.def(
        "sup_tail_approx", [](const std::vector<double>& l, double u) { return sup_tail_approx(as_span(l), u); },
        py::arg("intrinsic_volumes"), py::arg("u"));
    m.def(
        "chi_bar_tail", [](const std::vector<double>& w, double u) { return chi_bar_tail(as_span(w), u); },
        py::arg("weights"), py::arg("u"));
    m.def(
        "spherical_intrinsic_volumes",
        [](const std::vector<double>& w) { return spherical_intrinsic_volumes(as_span(w)); }, py::arg("weights"));

    m.def(
        "gaussian_width",
        [](const PenaltySpec& K, std::uint64_t samples, std::uint64_t seed, unsigned threads) {
            const GaussianWidth w = gaussian_width(K, mc_options(samples, seed, threads));
            return py::make_tuple(w.mean, w.std_error, w.intrinsic_volume_1);
        },
        py::arg("K"), py::arg("mc_samples") = 100000, py::arg("seed") = 0, py::arg("threads") = 1,
        "(mean, std_error, L1) of h_K(g).");
    m.def(
        "gaussian_width_points",
        [](const Matrix& points, std::uint64_t samples, std::uint64_t seed, unsigned threads) {
            const GaussianWidth w = gaussian_width(points, mc_options(samples, seed, threads));
            return py::make_tuple(w.mean, w.std_error, w.intrinsic_volume_1);
        },
        py::arg("points"), py::arg("mc_samples") = 100000, py::arg("seed") = 0, py::arg("threads") = 1,
        "Width of the convex hull of the columns of points.");

    py::class_<ConvexBody2D>(m, "ConvexBody2D")
        .def_static(
            "polygon",
            [](const std::vector<std::pair<double, double>>& v) {
                std::vector<Point2> pts;
                for (const auto& [x, y] : v) pts.emplace_back(x, y);
                return ConvexBody2D::polygon(std::move(pts));
            },
            py::arg("vertices"))
        .def_static("disk", [](double r) { return ConvexBody2D::disk(r); }, py::arg("radius") = 1.0)
        .def_static("unit_square", &ConvexBody2D::unit_square)
        .def_property_readonly("area", &ConvexBody2D::area)
        .def_property_readonly("perimeter", &ConvexBody2D::perimeter)
        .def("distance", [](const ConvexBody2D& b, double x, double y) { return b.distance(Point2(x, y)); });

    m.def(
        "tube_volume",
        [](const ConvexBody2D& body, double r, std::uint64_t samples, std::uint64_t seed, unsigned threads) {
            const TubeVolume tv = tube_volume_mc(body, r, mc_options(samples, seed, threads));
            return py::make_tuple(tv.volume, tv.std_error);
        },
        py::arg("body"), py::arg("r"), py::arg("mc_samples") = 100000, py::arg("seed") = 0, py::arg("threads") = 1);
    m.def(
        "steiner_fit",
        [](const ConvexBody2D& body, const std::vector<double>& radii, std::uint64_t samples, std::uint64_t seed,
           unsigned threads) {
            const IntrinsicVolumeEstimate e = steiner_fit(body, as_span(radii), mc_options(samples, seed, threads));
            return py::make_tuple(e.values, e.std_errors);
        },
        py::arg("body"), py::arg("radii"), py::arg("mc_samples") = 100000, py::arg("seed") = 0,
        py::arg("threads") = 1);
    m.def(
        "conic_intrinsic_volumes",
        [](const PenaltySpec& cone, std::uint64_t samples, std::uint64_t seed, unsigned threads) {
            const IntrinsicVolumeEstimate e =
                conic_intrinsic_volumes(ConeDescriptor::from_penalty(cone), mc_options(samples, seed, threads));
            return py::make_tuple(e.values, e.std_errors);
        },
        py::arg("cone"), py::arg("mc_samples") = 100000, py::arg("seed") = 0, py::arg("threads") = 1);
    m.def(
        "sup_mc_validate",
        [](const PenaltySpec& cone, double u, std::uint64_t samples, std::uint64_t seed, unsigned threads) {
            const SupTailValidation v =
                sup_mc_validate(ConeDescriptor::from_penalty(cone), u, mc_options(samples, seed, threads));
            return py::make_tuple(v.empirical, v.std_error, v.approx, v.gap);
        },
        py::arg("cone"), py::arg("u"), py::arg("mc_samples") = 100000, py::arg("seed") = 0, py::arg("threads") = 1);

    m.def(
        "critical_radius",
        [](const std::string& kernel, const std::vector<double>& grid, std::optional<double> delta,
           double length_scale) {
            KernelSpec k;
            if (kernel == "cosine") k = KernelSpec::cosine();
            else if (kernel == "squared_exponential") k = KernelSpec::squared_exponential(length_scale);
            else throw InvalidArgument("kernel must be cosine or squared_exponential");
            const CriticalRadiusEstimate c = critical_radius_process(k, as_span(grid), delta);
            return py::make_tuple(c.cot_sq, c.r_c);
        },
        py::arg("kernel"), py::arg("grid"), py::arg("delta") = py::none(), py::arg("length_scale") = 1.0,
        "(cot^2 r_c, r_c).");

    m.def(
        "dof_polyhedral",
        [](const Matrix& X, const Vector& y, const PenaltySpec& K, double lambda) {
            const RegressionProblem problem(X, y);
            const Solution s = solve(problem, K, lambda);
            const DofEstimate d = dof_polyhedral(problem, K, lambda, s);
            return py::make_tuple(d.dof, d.generic);
        },
        py::arg("X"), py::arg("y"), py::arg("K"), py::arg("lam"), "(dof, generic) of the fitted values.");
    m.def(
        "divergence_fd",
        [](const std::function<Vector(const Vector&)>& fit, const Vector& y, double h) {
            return divergence_fd(fit, y, h, 1).dof;
        },
        py::arg("fit"), py::arg("y"), py::arg("h") = 1e-5);
    m.def("sure_risk", &sure_risk, py::arg("y"), py::arg("mu_hat"), py::arg("dof"), py::arg("sigma_sq"));
}

#include "lsgeom/core_model.hpp"

#include "lsgeom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lsgeom {

namespace detail {

void require_dimension(Index actual, Index expected, const char* what)
{
    if (actual != expected) {
        std::ostringstream msg;
        msg << what << " has dimension " << actual << ", expected " << expected;
        throw DimensionError(msg.str());
    }
}

void require_finite(const Vector& v, const char* what)
{
    if (!v.allFinite()) throw InvalidArgument(std::string(what) + " contains non-finite entries");
}

}  // namespace detail

RegressionProblem::RegressionProblem(Matrix design, Vector response, std::optional<double> sigma)
    : design_(std::move(design)), response_(std::move(response)), sigma_(sigma)
{
    if (design_.rows() < 1 || design_.cols() < 1) throw DimensionError("design matrix must be at least 1x1");
    detail::require_dimension(response_.size(), design_.rows(), "response");
    if (!design_.allFinite()) throw InvalidArgument("design contains non-finite entries");
    detail::require_finite(response_, "response");
    if (sigma_ && !(*sigma_ > 0.0 && std::isfinite(*sigma_))) throw InvalidArgument("sigma must be positive and finite");
}

PenaltySpec::PenaltySpec(Kind kind, Index dimension) : kind_(std::move(kind)), dimension_(dimension)
{
    if (dimension_ < 1) throw InvalidArgument("penalty dimension must be at least 1");
}

PenaltySpec PenaltySpec::box(Vector radii)
{
    if (radii.size() < 1) throw InvalidArgument("box needs at least one radius");
    for (Index j = 0; j < radii.size(); ++j) {
        if (!(radii[j] > 0.0) || !std::isfinite(radii[j])) {
            throw InvalidArgument("box radius " + std::to_string(j) + " must be positive and finite");
        }
    }
    const Index p = radii.size();
    return PenaltySpec(Box{std::move(radii)}, p);
}

PenaltySpec PenaltySpec::unit_box(Index dimension)
{
    if (dimension < 1) throw InvalidArgument("penalty dimension must be at least 1");
    return box(Vector::Ones(dimension));
}

PenaltySpec PenaltySpec::product_l2_balls(std::vector<std::vector<Index>> groups, Vector radii)
{
    if (groups.empty()) throw InvalidArgument("product of l2 balls needs at least one group");
    detail::require_dimension(radii.size(), static_cast<Index>(groups.size()), "group radii");

    Index p = 0;
    for (const auto& g : groups) {
        if (g.empty()) throw InvalidArgument("groups must be non-empty");
        p += static_cast<Index>(g.size());
    }
    std::vector<Index> group_of(static_cast<std::size_t>(p), -1);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        if (!(radii[static_cast<Index>(gi)] > 0.0) || !std::isfinite(radii[static_cast<Index>(gi)])) {
            throw InvalidArgument("group radius " + std::to_string(gi) + " must be positive and finite");
        }
        for (Index j : groups[gi]) {
            if (j < 0 || j >= p) throw InvalidArgument("group index " + std::to_string(j) + " out of range");
            if (group_of[static_cast<std::size_t>(j)] != -1) {
                throw InvalidArgument("coordinate " + std::to_string(j) + " appears in two groups");
            }
            group_of[static_cast<std::size_t>(j)] = static_cast<Index>(gi);
        }
    }
    PenaltySpec spec(ProductL2Balls{std::move(groups), std::move(radii)}, p);
    spec.group_of_ = std::move(group_of);
    return spec;
}

PenaltySpec PenaltySpec::l2_ball(Index dimension, double radius)
{
    if (dimension < 1) throw InvalidArgument("penalty dimension must be at least 1");
    std::vector<Index> all(static_cast<std::size_t>(dimension));
    for (Index j = 0; j < dimension; ++j) all[static_cast<std::size_t>(j)] = j;
    return product_l2_balls({std::move(all)}, Vector::Constant(1, radius));
}

PenaltySpec PenaltySpec::orthant_cone(std::vector<ConeSign> signs)
{
    if (signs.empty()) throw InvalidArgument("orthant cone needs at least one coordinate");
    const auto p = static_cast<Index>(signs.size());
    return PenaltySpec(OrthantCone{std::move(signs)}, p);
}

namespace {

void write_list(std::ostringstream& os, const Vector& v)
{
    for (Index j = 0; j < v.size(); ++j) {
        if (j) os << ',';
        os << v[j];
    }
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

double parse_number(const std::string& s, const std::string& context)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("penalty: cannot parse number '" + s + "' in " + context);
    }
}

}  // namespace

std::string PenaltySpec::describe() const
{
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Box>) {
                os << "box:";
                write_list(os, k.radii);
            } else if constexpr (std::is_same_v<T, ProductL2Balls>) {
                os << "l2groups:";
                for (std::size_t g = 0; g < k.groups.size(); ++g) {
                    if (g) os << '|';
                    for (std::size_t i = 0; i < k.groups[g].size(); ++i) {
                        if (i) os << ',';
                        os << k.groups[g][i];
                    }
                }
                os << '@';
                write_list(os, k.radii);
            } else {
                os << "cone:";
                for (std::size_t j = 0; j < k.signs.size(); ++j) {
                    if (j) os << ',';
                    os << (k.signs[j] == ConeSign::nonnegative ? '+' : k.signs[j] == ConeSign::nonpositive ? '-' : '0');
                }
            }
        },
        kind_);
    return os.str();
}

PenaltySpec parse_penalty(const std::string& text, Index dimension)
{
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string body = colon == std::string::npos ? std::string() : text.substr(colon + 1);

    if (head == "box") {
        if (body.empty()) return PenaltySpec::unit_box(dimension);
        const auto items = split(body, ',');
        if (items.size() == 1) return PenaltySpec::box(Vector::Constant(dimension, parse_number(items[0], text)));
        Vector radii(static_cast<Index>(items.size()));
        for (std::size_t j = 0; j < items.size(); ++j) radii[static_cast<Index>(j)] = parse_number(items[j], text);
        detail::require_dimension(radii.size(), dimension, "box radii");
        return PenaltySpec::box(std::move(radii));
    }
    if (head == "l2") {
        const double r = body.empty() ? 1.0 : parse_number(body, text);
        return PenaltySpec::l2_ball(dimension, r);
    }
    if (head == "l2groups") {
        const auto at = body.find('@');
        const std::string group_text = body.substr(0, at);
        std::vector<std::vector<Index>> groups;
        for (const auto& g : split(group_text, '|')) {
            std::vector<Index> members;
            for (const auto& item : split(g, ',')) {
                const double v = parse_number(item, text);
                if (v != std::floor(v)) throw InvalidArgument("penalty: group index '" + item + "' is not an integer");
                members.push_back(static_cast<Index>(v));
            }
            groups.push_back(std::move(members));
        }
        Vector radii = Vector::Ones(static_cast<Index>(groups.size()));
        if (at != std::string::npos) {
            const auto items = split(body.substr(at + 1), ',');
            if (items.size() == 1) {
                radii.setConstant(parse_number(items[0], text));
            } else {
                detail::require_dimension(static_cast<Index>(items.size()), radii.size(), "group radii");
                for (std::size_t g = 0; g < items.size(); ++g) radii[static_cast<Index>(g)] = parse_number(items[g], text);
            }
        }
        auto spec = PenaltySpec::product_l2_balls(std::move(groups), std::move(radii));
        detail::require_dimension(spec.dimension(), dimension, "l2 group partition");
        return spec;
    }
    if (head == "nonneg" || head == "nonpos") {
        const auto s = head == "nonneg" ? ConeSign::nonpositive : ConeSign::nonnegative;
        return PenaltySpec::orthant_cone(std::vector<ConeSign>(static_cast<std::size_t>(dimension), s));
    }
    if (head == "cone") {
        std::vector<ConeSign> signs;
        for (const auto& item : split(body, ',')) {
            if (item == "+") signs.push_back(ConeSign::nonnegative);
            else if (item == "-") signs.push_back(ConeSign::nonpositive);
            else if (item == "0") signs.push_back(ConeSign::free);
            else throw InvalidArgument("penalty: cone sign '" + item + "' must be one of +, -, 0");
        }
        if (signs.size() == 1 && dimension > 1) signs.assign(static_cast<std::size_t>(dimension), signs.front());
        detail::require_dimension(static_cast<Index>(signs.size()), dimension, "cone sign pattern");
        return PenaltySpec::orthant_cone(std::move(signs));
    }
    throw InvalidArgument("penalty: unknown kind '" + head + "' (expected box, l2, l2groups, cone, nonneg, nonpos)");
}

double support_function(const Vector& beta, const PenaltySpec& K)
{
    detail::require_dimension(beta.size(), K.dimension(), "beta");
    detail::require_finite(beta, "beta");
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, PenaltySpec::Box>) {
                return k.radii.dot(beta.cwiseAbs());
            } else if constexpr (std::is_same_v<T, PenaltySpec::ProductL2Balls>) {
                double h = 0.0;
                for (std::size_t g = 0; g < k.groups.size(); ++g) {
                    double sq = 0.0;
                    for (Index j : k.groups[g]) sq += beta[j] * beta[j];
                    h += k.radii[static_cast<Index>(g)] * std::sqrt(sq);
                }
                return h;
            } else {
                // sup over K_j of u_j beta_j is 0 when beta_j points into the polar ray, else unbounded.
                for (Index j = 0; j < beta.size(); ++j) {
                    const double b = beta[j];
                    switch (k.signs[static_cast<std::size_t>(j)]) {
                    case ConeSign::nonpositive:
                        if (b < 0.0) return kInfinity;
                        break;
                    case ConeSign::nonnegative:
                        if (b > 0.0) return kInfinity;
                        break;
                    case ConeSign::free:
                        if (b != 0.0) return kInfinity;
                        break;
                    }
                }
                return 0.0;
            }
        },
        K.kind());
}

double polar_gauge(const Vector& v, const PenaltySpec& K)
{
    detail::require_dimension(v.size(), K.dimension(), "v");
    detail::require_finite(v, "v");
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, PenaltySpec::Box>) {
                return v.cwiseAbs().cwiseQuotient(k.radii).maxCoeff();
            } else if constexpr (std::is_same_v<T, PenaltySpec::ProductL2Balls>) {
                double g_max = 0.0;
                for (std::size_t g = 0; g < k.groups.size(); ++g) {
                    double sq = 0.0;
                    for (Index j : k.groups[g]) sq += v[j] * v[j];
                    g_max = std::max(g_max, std::sqrt(sq) / k.radii[static_cast<Index>(g)]);
                }
                return g_max;
            } else {
                // Polar of the polar cone is K itself: gauge is 0 on K, infinite elsewhere.
                for (Index j = 0; j < v.size(); ++j) {
                    const auto s = k.signs[static_cast<std::size_t>(j)];
                    if ((s == ConeSign::nonpositive && v[j] > 0.0) || (s == ConeSign::nonnegative && v[j] < 0.0)) {
                        return kInfinity;
                    }
                }
                return 0.0;
            }
        },
        K.kind());
}

double objective_value(const RegressionProblem& problem, const PenaltySpec& K, double lambda, const Vector& beta)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be nonnegative and finite");
    detail::require_dimension(beta.size(), problem.features(), "beta");
    detail::require_dimension(K.dimension(), problem.features(), "penalty");
    detail::require_finite(beta, "beta");

    const double loss = 0.5 * (problem.response() - problem.design() * beta).squaredNorm();
    if (lambda == 0.0) return loss;
    const double h = support_function(beta, K);
    if (std::isinf(h)) return kInfinity;
    return loss + lambda * h;
}

}  // namespace lsgeom

#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dhlab/box.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/model.hpp"
#include "dhlab/smith.hpp"

namespace dhlab::catalog {

using model::HamiltonianModel;
using model::Vector;

/// Closed-form density a catalog model is expected to have inside its default grid.
struct ExpectedDensity {
    std::string form;                 // "constant", "linear", "tent"
    std::vector<double> coefficients;  // constant: {c}; linear: {c0, c1}; tent: {peak, slope}
    std::string source;
};

struct CatalogEntry {
    std::string name;
    std::string description;
    HamiltonianModel model;
    Box default_grid;
    bool expect_valid = true;
    std::optional<ExpectedDensity> expected;
};

/// Signed permutation matrix from entries p_i = +-(j+1), meaning (G x)_i = +-x_j.
inline IntMatrix perm_spec_matrix(const std::vector<int>& spec)
{
    const auto dim = static_cast<Eigen::Index>(spec.size());
    IntMatrix g = IntMatrix::Zero(dim, dim);
    std::set<int> seen;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const int e = spec[static_cast<std::size_t>(i)];
        const int j = std::abs(e) - 1;
        if (e == 0 || j >= dim || !seen.insert(j).second) throw ConfigError("perm-spec is not a signed permutation");
        g(i, j) = e > 0 ? 1 : -1;
    }
    return g;
}

namespace detail {

inline IntMatrix weights(std::initializer_list<std::initializer_list<std::int64_t>> rows)
{
    IntMatrix W(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (auto v : r) W(i, j++) = v;
        ++i;
    }
    return W;
}

inline HamiltonianModel torus(const std::string& id, const IntMatrix& W, const Box& win)
{
    return {id, model::make_torus_model(W, Vector::Zero(W.rows()), win)};
}

inline ExpectedDensity linear(double slope, std::string source) { return {"linear", {0.0, slope}, std::move(source)}; }

}  // namespace detail

inline constexpr double kDefaultArea = 3.0;

/// All catalog entries; `area` overrides the leaf area of "surface_product".
inline std::vector<CatalogEntry> entries(std::optional<double> area = std::nullopt)
{
    using detail::weights;
    const double two_pi = model::kTwoPi;
    const double four_pi2 = two_pi * two_pi;
    const Box unit = Box::interval(0.0, 1.0);
    const Box inner = Box::interval(0.05, 0.95);
    std::vector<CatalogEntry> out;

    out.push_back({"disc", "C with the rotation action, W = [[1]]", detail::torus("disc", weights({{1}}), unit), inner, true,
                   ExpectedDensity{"constant", {two_pi}, "disc area"}});
    out.push_back({"hopf", "C^2 with the diagonal circle action, W = [[1,1]]", detail::torus("hopf", weights({{1, 1}}), unit),
                   inner, true, detail::linear(four_pi2, "derivative of the 4-ball volume")});
    out.push_back({"weighted", "C^2 with weights (1,2)", detail::torus("weighted", weights({{1, 2}}), unit), inner, true,
                   detail::linear(2.0 * std::pow(std::numbers::pi, 2), "iterated convolution")});

    HamiltonianModel sphere{"sphere", model::make_sphere_product(1, Box::interval(-1.0, 1.0))};
    out.push_back({"sphere", "round sphere, height function", sphere, Box::interval(-0.9, 0.9), true,
                   ExpectedDensity{"constant", {two_pi}, "cylinder projection"}});
    HamiltonianModel tent{"tent", model::make_sphere_product(2, Box::interval(-2.0, 2.0))};
    out.push_back({"tent", "two spheres, diagonal circle action", tent, Box::interval(-1.9, 1.9), true,
                   ExpectedDensity{"tent", {2.0 * four_pi2, four_pi2}, "convolution of two uniform densities"}});

    const double a = area.value_or(kDefaultArea);
    if (!(a > 0.0)) throw ConfigError("surface area must be positive");
    HamiltonianModel surface{"surface_product",
                             model::SurfaceProduct{{a}, model::make_torus_model(weights({{1}}), Vector::Zero(1), unit)}};
    out.push_back({"surface_product", "closed surface times C, pair groupoid on the surface", surface, inner, true,
                   ExpectedDensity{"constant", {a * two_pi}, "product of area and disc area"}});
    HamiltonianModel surface_hopf{"surface_product_hopf",
                                  model::SurfaceProduct{{2.0}, model::make_torus_model(weights({{1, 1}}), Vector::Zero(1), unit)}};
    out.push_back({"surface_product_hopf", "surface of area 2 times C^2 with the diagonal action", surface_hopf, inner, true,
                   detail::linear(2.0 * four_pi2, "product of area and ball-volume derivative")});

    HamiltonianModel swap{"swap_quotient",
                          model::SymmetryQuotient{model::make_torus_model(weights({{1, 1}}), Vector::Zero(1), unit), 2,
                                                  {perm_spec_matrix({3, 4, 1, 2})}}};
    out.push_back({"swap_quotient", "C^2 with the diagonal action extended by the coordinate swap", swap, inner, true,
                   detail::linear(four_pi2, "derivative of the 4-ball volume")});

    out.push_back({"ineffective_reject", "C with weight 2: the subgroup of order 2 acts trivially",
                   detail::torus("ineffective_reject", weights({{2}}), unit), inner, false, std::nullopt});
    out.push_back({"rank2", "C^2 with the standard 2-torus action", detail::torus("rank2", weights({{1, 0}, {0, 1}}), Box::cube(2, 0.0, 1.0)),
                   Box::cube(2, 0.05, 0.95), true, ExpectedDensity{"constant", {four_pi2}, "product of two disc areas"}});
    return out;
}

inline std::vector<std::string> names()
{
    std::vector<std::string> out;
    for (const auto& e : entries()) out.push_back(e.name);
    return out;
}

inline CatalogEntry catalog_entry(const std::string& name, std::optional<double> area = std::nullopt)
{
    for (auto& e : entries(area)) {
        if (e.name == name) return e;
    }
    std::string known;
    for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown model '" + name + "'; catalog: " + known);
}

inline HamiltonianModel catalog_get(const std::string& name, std::optional<double> area = std::nullopt)
{
    return catalog_entry(name, area).model;
}

/// Expected density at t for entries that carry a closed form.
inline double expected_density(const ExpectedDensity& e, const Vector& t)
{
    const auto& c = e.coefficients;
    if (e.form == "constant") return c.at(0);
    if (e.form == "linear") return c.at(0) + c.at(1) * t(0);
    if (e.form == "tent") return std::max(0.0, c.at(0) - c.at(1) * std::abs(t(0)));
    throw ConfigError("unknown expected-density form '" + e.form + "'");
}

// ---- JSON model config ----------------------------------------------------

/**
 * Model from a JSON config with fields type, n, q, weights, offset, window,
 * area, group. Unknown fields are rejected.
 */
inline HamiltonianModel model_from_json(const nlohmann::json& j, const std::string& id = "custom")
{
    static const std::set<std::string> allowed{"type", "n", "q", "weights", "offset", "window", "area", "group"};
    if (!j.is_object()) throw ConfigError("model config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown model config field '" + key + "'");
    }
    if (!j.contains("type")) throw ConfigError("model config needs a 'type'");
    const std::string type = j.at("type").get<std::string>();

    try {
        const int q = j.value("q", 1);
        const int n = j.value("n", 1);
        if (q < 1 || n < 1) throw ConfigError("n and q must be positive");
        Vector offset = Vector::Zero(q);
        if (j.contains("offset")) {
            const auto o = j.at("offset").get<std::vector<double>>();
            if (static_cast<int>(o.size()) != q) throw ConfigError("offset must have q entries");
            offset = Eigen::Map<const Vector>(o.data(), q);
        }
        if (!j.contains("window")) throw ConfigError("model config needs a 'window'");
        const auto w = j.at("window").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(w.size()) != q) throw ConfigError("window needs one [lo, hi] pair per axis");
        Vector lo(q), hi(q);
        for (int i = 0; i < q; ++i) {
            if (w[static_cast<std::size_t>(i)].size() != 2) throw ConfigError("window entries must be [lo, hi]");
            lo(i) = w[static_cast<std::size_t>(i)][0];
            hi(i) = w[static_cast<std::size_t>(i)][1];
        }
        const Box win(lo, hi);

        if (type == "sphere") {
            if (q != 1) throw ConfigError("sphere models have q = 1");
            return {id, model::make_sphere_product(n, win, offset(0))};
        }

        if (!j.contains("weights")) throw ConfigError("model config needs 'weights'");
        const auto rows = j.at("weights").get<std::vector<std::vector<std::int64_t>>>();
        if (static_cast<int>(rows.size()) != q) throw ConfigError("weights must have q rows");
        IntMatrix W(q, n);
        for (int i = 0; i < q; ++i) {
            if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != n) throw ConfigError("weights must have n columns");
            for (int k = 0; k < n; ++k) W(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
        model::TorusWeightModel t = model::make_torus_model(W, offset, win);

        if (type == "torus_weight") return {id, t};
        if (type == "surface_product") {
            const double area = j.value("area", 1.0);
            if (!(area > 0.0)) throw ConfigError("area must be positive");
            return {id, model::SurfaceProduct{{area}, t}};
        }
        if (type == "symmetry_quotient") {
            model::SymmetryQuotient s{t, 1, {}};
            for (const auto& spec : j.value("group", nlohmann::json::array())) {
                const IntMatrix g = perm_spec_matrix(spec.get<std::vector<int>>());
                if (g.rows() != 2 * n) throw ConfigError("perm-spec must act on the 2n real coordinates");
                s.generators.push_back(g);
            }
            s.group_order = static_cast<int>(model::enumerate_group(s.generators, 2 * n).size());
            return {id, s};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed model config: ") + e.what());
    }
    throw ConfigError("unknown model type '" + type + "'");
}

inline HamiltonianModel model_from_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("model config is not valid JSON: " + std::string(e.what()));
    }
    std::string id = path;
    if (auto slash = id.find_last_of('/'); slash != std::string::npos) id = id.substr(slash + 1);
    if (auto dot = id.rfind('.'); dot != std::string::npos) id = id.substr(0, dot);
    return model_from_json(j, id);
}

}  // namespace dhlab::catalog

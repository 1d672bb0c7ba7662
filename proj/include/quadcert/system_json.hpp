#pragma once

// JSON interchange for quadratic systems:
//
//   {"n": 1, "k": 1, "complex": false,
//    "quad": [[m, i, j, l, c_re, c_im], ...],
//    "lin":  [[m, i, j, c_re, c_im], ...],
//    "const_k0": [...],            n entries
//    "const_k1": [[...], ...],     n rows of k entries
//    "x_star": [...], "u_star": [...]}     optional nominal point
//
// Scalars in const_k0, const_k1, x_star and u_star are either a number or a
// [re, im] pair. "complex": true selects the Q(x, conj(x), u) form.

#include "quadcert/errors.hpp"
#include "quadcert/linalg.hpp"
#include "quadcert/quadform.hpp"

#include "json.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace quadcert {

struct SystemDescription {
    QuadraticSystem system;
    std::optional<Vector> x_star;
    std::optional<Vector> u_star;
};

namespace detail {

inline Complex json_scalar(const nlohmann::json& v, const char* where) {
    if (v.is_number()) {
        return {v.get<double>(), 0.0};
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw FormatError(std::string("system JSON: ") + where + " entries must be a number or [re, im]");
}

inline Vector json_vector(const nlohmann::json& v, std::size_t expected, const char* where) {
    if (!v.is_array() || v.size() != expected) {
        throw FormatError(std::string("system JSON: ") + where + " must be an array of " +
                          std::to_string(expected) + " entries");
    }
    Vector out;
    out.reserve(expected);
    for (const auto& e : v) {
        out.push_back(json_scalar(e, where));
    }
    return out;
}

inline std::size_t json_index(const nlohmann::json& v, const char* where) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw FormatError(std::string("system JSON: ") + where + " indices must be nonnegative integers");
    }
    return v.get<std::size_t>();
}

inline nlohmann::json scalar_json(Complex z) {
    if (z.imag() == 0.0) {
        return z.real();
    }
    return nlohmann::json::array({z.real(), z.imag()});
}

} // namespace detail

inline SystemDescription system_from_json(const nlohmann::json& j) {
    using detail::json_index;
    if (!j.is_object()) {
        throw FormatError("system JSON: top level must be an object");
    }
    for (const char* key : {"n", "k"}) {
        if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 0) {
            throw FormatError(std::string("system JSON: missing or invalid \"") + key + "\"");
        }
    }
    const auto n = j["n"].get<std::size_t>();
    const auto k = j["k"].get<std::size_t>();
    const bool conj = j.value("complex", false);

    std::vector<QuadTerm> quad;
    for (const auto& t : j.value("quad", nlohmann::json::array())) {
        if (!t.is_array() || (t.size() != 6 && t.size() != 5)) {
            throw FormatError("system JSON: quad entries are [m, i, j, l, c_re, c_im]");
        }
        const double im = t.size() == 6 ? t[5].get<double>() : 0.0;
        quad.push_back({json_index(t[0], "quad"), json_index(t[1], "quad"), json_index(t[2], "quad"),
                        json_index(t[3], "quad"), Complex(t[4].get<double>(), im)});
    }
    std::vector<LinTerm> lin;
    for (const auto& t : j.value("lin", nlohmann::json::array())) {
        if (!t.is_array() || (t.size() != 5 && t.size() != 4)) {
            throw FormatError("system JSON: lin entries are [m, i, j, c_re, c_im]");
        }
        const double im = t.size() == 5 ? t[4].get<double>() : 0.0;
        lin.push_back({json_index(t[0], "lin"), json_index(t[1], "lin"), json_index(t[2], "lin"),
                       Complex(t[3].get<double>(), im)});
    }
    Vector k0 = j.contains("const_k0") ? detail::json_vector(j["const_k0"], n, "const_k0")
                                       : Vector(n);
    DenseMatrix k1(n, k);
    if (j.contains("const_k1")) {
        const auto& rows = j["const_k1"];
        if (!rows.is_array() || rows.size() != n) {
            throw FormatError("system JSON: const_k1 must have n rows");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const Vector row = detail::json_vector(rows[i], k, "const_k1 row");
            for (std::size_t m = 0; m < k; ++m) {
                k1(i, m) = row[m];
            }
        }
    }

    SystemDescription d{
        QuadraticSystem(n, k, conj, std::move(quad), std::move(lin), std::move(k0), std::move(k1)),
        std::nullopt, std::nullopt};
    if (j.contains("x_star")) {
        d.x_star = detail::json_vector(j["x_star"], n, "x_star");
    }
    if (j.contains("u_star")) {
        d.u_star = detail::json_vector(j["u_star"], k, "u_star");
    }
    return d;
}

inline SystemDescription system_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("system JSON: ") + e.what());
    }
    try {
        return system_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("system JSON: ") + e.what());
    }
}

inline nlohmann::json system_to_json(const QuadraticSystem& sys) {
    nlohmann::json j;
    j["n"] = sys.n();
    j["k"] = sys.k();
    j["complex"] = sys.conjugates();
    j["quad"] = nlohmann::json::array();
    for (const auto& t : sys.quad_terms()) {
        j["quad"].push_back({t.slot, t.out, t.left, t.right, t.coef.real(), t.coef.imag()});
    }
    j["lin"] = nlohmann::json::array();
    for (const auto& t : sys.lin_terms()) {
        j["lin"].push_back({t.slot, t.out, t.in, t.coef.real(), t.coef.imag()});
    }
    j["const_k0"] = nlohmann::json::array();
    for (const auto& z : sys.k0()) {
        j["const_k0"].push_back(detail::scalar_json(z));
    }
    j["const_k1"] = nlohmann::json::array();
    for (std::size_t i = 0; i < sys.n(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t m = 0; m < sys.k(); ++m) {
            row.push_back(detail::scalar_json(sys.k1()(i, m)));
        }
        j["const_k1"].push_back(std::move(row));
    }
    return j;
}

} // namespace quadcert

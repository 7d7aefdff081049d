#ifndef BAUMBOTT_FIELD_IO_HPP
#define BAUMBOTT_FIELD_IO_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "baumbott/foliation.hpp"

namespace baumbott {

/// On-disk description of a polynomial field. Coefficient lists follow the
/// monomial order [1, x, y, x^2, xy, y^2, ...] (graded, x-power descending
/// inside each degree); each complex entry is a two-element [re, im] array.
struct FieldFile {
    int degree = 0;
    std::vector<cplx> P, Q;
    std::optional<std::string> label;
    std::optional<std::uint64_t> seed;
};

namespace detail {

inline nlohmann::json complex_list_json(const std::vector<cplx>& c) {
    nlohmann::json a = nlohmann::json::array();
    for (const cplx& z : c) a.push_back({z.real(), z.imag()});
    return a;
}

inline std::vector<cplx> complex_list_from_json(const nlohmann::json& a, const char* name) {
    if (!a.is_array())
        throw error(errc::parse_error, std::string(name) + " must be a list of [re, im] pairs");
    std::vector<cplx> out;
    out.reserve(a.size());
    for (const auto& e : a) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw error(errc::parse_error, std::string(name) + " entries must be [re, im] pairs");
        const double re = e[0].get<double>(), im = e[1].get<double>();
        if (!std::isfinite(re) || !std::isfinite(im))
            throw error(errc::parse_error, std::string(name) + " entries must be finite");
        out.emplace_back(re, im);
    }
    return out;
}

/// FNV-1a over a byte string; good enough to fingerprint inputs in reports.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace detail

inline nlohmann::json field_file_json(const FieldFile& f) {
    nlohmann::json j;
    j["degree"] = f.degree;
    j["P"] = detail::complex_list_json(f.P);
    j["Q"] = detail::complex_list_json(f.Q);
    if (f.label) j["label"] = *f.label;
    if (f.seed) j["seed"] = *f.seed;
    return j;
}

inline FieldFile field_file_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw error(errc::parse_error, "field file must be a JSON object");
    if (!j.contains("degree") || !j["degree"].is_number_integer())
        throw error(errc::parse_error, "field file needs an integer degree");
    FieldFile f;
    f.degree = j["degree"].get<int>();
    if (f.degree < 1 || f.degree > 64)
        throw error(errc::dimension_mismatch, "degree out of range");
    if (!j.contains("P") || !j.contains("Q"))
        throw error(errc::parse_error, "field file needs P and Q coefficient lists");
    f.P = detail::complex_list_from_json(j["P"], "P");
    f.Q = detail::complex_list_from_json(j["Q"], "Q");
    const size_t want = BiPoly::size_for(f.degree);
    if (f.P.size() != want || f.Q.size() != want)
        throw error(errc::dimension_mismatch, "coefficient list length does not match degree");
    if (j.contains("label")) {
        if (!j["label"].is_string()) throw error(errc::parse_error, "label must be a string");
        f.label = j["label"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
            throw error(errc::parse_error, "seed must be an integer");
        f.seed = j["seed"].get<std::uint64_t>();
    }
    return f;
}

inline FieldFile to_field_file(const VectorField& v, std::optional<std::string> label = {},
                               std::optional<std::uint64_t> seed = {}) {
    FieldFile f;
    f.degree = v.degree();
    BiPoly P = v.P(), Q = v.Q();  // re-embed at the field degree so lengths agree
    BiPoly Pd(f.degree), Qd(f.degree);
    for (int d = 0; d <= f.degree; ++d)
        for (int j = 0; j <= d; ++j) {
            Pd.set_coeff(d - j, j, P.coeff(d - j, j));
            Qd.set_coeff(d - j, j, Q.coeff(d - j, j));
        }
    f.P = Pd.coeffs();
    f.Q = Qd.coeffs();
    f.label = std::move(label);
    f.seed = seed;
    return f;
}

inline VectorField to_vector_field(const FieldFile& f) {
    return VectorField(BiPoly(f.degree, f.P), BiPoly(f.degree, f.Q));
}

inline FieldFile read_field_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(errc::parse_error, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // translate the byte offset into a line/column pair
        size_t line = 1, col = 1;
        for (size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << path << ":" << line << ":" << col << ": " << e.what();
        throw error(errc::parse_error, msg.str());
    }
    return field_file_from_json(j);
}

inline VectorField parse_field_file(const std::string& path) {
    return to_vector_field(read_field_file(path));
}

inline void write_field_file(const std::string& path, const VectorField& v,
                             std::optional<std::string> label = {},
                             std::optional<std::uint64_t> seed = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error(errc::parse_error, "cannot write " + path);
    out << field_file_json(to_field_file(v, std::move(label), seed)).dump(2) << "\n";
}

/// Stable fingerprint of a field, used to tag reports.
inline std::string field_digest(const VectorField& v) {
    return detail::fnv1a_hex(field_file_json(to_field_file(v)).dump());
}

}  // namespace baumbott

#endif  // BAUMBOTT_FIELD_IO_HPP

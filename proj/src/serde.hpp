#pragma once

// Internal serialization helpers shared by the io and benchmark writers.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "cosparse/errors.hpp"
#include "cosparse/train.hpp"

namespace cosparse {
namespace serde {

// Nine significant digits: short enough to stay stable through a
// print -> parse -> print round trip at file level.
inline std::string nine_digits(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write '" + path + "'");
    return out;
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (true) {
        const std::size_t comma = line.find(',', begin);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(begin));
            return fields;
        }
        fields.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
}

inline double parse_double(const std::string& field, const std::string& where) {
    double v = 0.0;
    const auto r = std::from_chars(field.data(), field.data() + field.size(), v);
    if (r.ec != std::errc() || r.ptr != field.data() + field.size())
        throw ParseError(where + ": bad value '" + field + "'");
    return v;
}

inline nlohmann::json parse_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string(what) + " '" + path + "': " + e.what());
    }
}

inline std::string csv_safe(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c == ',' || c == '\n' || c == '\r') c = '_';
    return out;
}

inline const char* bregman_variant_name(BregmanVariant v) {
    return v == BregmanVariant::standard ? "standard" : "reflected";
}
inline const char* incoherence_variant_name(IncoherenceVariant v) {
    return v == IncoherenceVariant::gram_dxd ? "gram_dxd" : "cross_gram_pxp";
}
inline const char* b_init_name(BregmanInit v) {
    return v == BregmanInit::ones ? "ones" : "zeros";
}

// `context` should name the offending field, e.g. "artifacts field 'b_init'".
template <typename T, typename Err>
T enum_from_name(const std::string& s, const std::string& context) {
    if constexpr (std::is_same_v<T, BregmanVariant>) {
        if (s == "standard") return BregmanVariant::standard;
        if (s == "reflected") return BregmanVariant::reflected;
    } else if constexpr (std::is_same_v<T, IncoherenceVariant>) {
        if (s == "gram_dxd") return IncoherenceVariant::gram_dxd;
        if (s == "cross_gram_pxp") return IncoherenceVariant::cross_gram_pxp;
    } else {
        if (s == "ones") return BregmanInit::ones;
        if (s == "zeros") return BregmanInit::zeros;
    }
    throw Err(context + " has unknown value '" + s + "'");
}

inline nlohmann::ordered_json hyper_to_json(const Hyperparams& h) {
    nlohmann::ordered_json j;
    j["lambda"] = h.lambda;
    j["mu"] = h.mu;
    j["eta"] = h.eta;
    j["gamma"] = h.gamma;
    j["atoms"] = h.atoms;
    j["max_outer"] = h.max_outer;
    j["tol"] = h.tol;
    j["ls_eps"] = h.ls_eps;
    j["seed"] = h.seed;
    j["bregman_variant"] = bregman_variant_name(h.bregman_variant);
    j["incoherence_variant"] = incoherence_variant_name(h.incoherence_variant);
    j["b_init"] = b_init_name(h.b_init);
    return j;
}

}  // namespace serde
}  // namespace cosparse

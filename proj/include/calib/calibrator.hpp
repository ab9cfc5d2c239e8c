#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "calib/binning.hpp"
#include "calib/calibration_point.hpp"
#include "calib/enir.hpp"
#include "calib/error.hpp"
#include "calib/isotonic.hpp"
#include "calib/platt.hpp"

namespace calib {

/// Pass-through map for the uncalibrated (Raw) scenario.
struct IdentityModel {};

using Calibrator =
    std::variant<IdentityModel, IsotonicModel, EnirModel, PlattModel, BinningModel>;

/// Maps a classifier score to a calibrated probability. Step-function models
/// clamp outside their training range; Platt evaluates the sigmoid; the
/// identity returns the score itself.
inline double calibrate(const Calibrator& model, double score) {
    if (!std::isfinite(score)) throw Error("calibrate: non-finite score");
    return std::visit(
        [score](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, IdentityModel>)
                return std::clamp(score, 0.0, 1.0);
            else
                return m.predict(score);
        },
        model);
}

inline std::vector<double> calibrate_all(const Calibrator& model,
                                         const std::vector<double>& scores) {
    std::vector<double> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(calibrate(model, s));
    return out;
}

inline std::string calibrator_kind(const Calibrator& model) {
    struct Visitor {
        std::string operator()(const IdentityModel&) const { return "identity"; }
        std::string operator()(const IsotonicModel&) const { return "isotonic"; }
        std::string operator()(const EnirModel&) const { return "enir"; }
        std::string operator()(const PlattModel&) const { return "platt"; }
        std::string operator()(const BinningModel&) const { return "binning"; }
    };
    return std::visit(Visitor{}, model);
}

// --- JSON form: {"kind": <tag>, ...parameter arrays...} -------------------

inline nlohmann::ordered_json calibrator_to_json(const Calibrator& model) {
    nlohmann::ordered_json j;
    j["kind"] = calibrator_kind(model);
    if (const auto* iso = std::get_if<IsotonicModel>(&model)) {
        j["boundaries"] = iso->upper_boundaries;
        j["values"] = iso->block_values;
    } else if (const auto* enir = std::get_if<EnirModel>(&model)) {
        j["boundaries"] = enir->boundaries;
        nlohmann::ordered_json members = nlohmann::ordered_json::array();
        for (const auto& m : enir->members) {
            nlohmann::ordered_json jm;
            jm["values"] = m.values;
            jm["lambda"] = m.lambda;
            jm["df"] = m.df;
            jm["bic"] = m.bic;
            jm["weight"] = m.weight;
            members.push_back(std::move(jm));
        }
        j["members"] = std::move(members);
    } else if (const auto* platt = std::get_if<PlattModel>(&model)) {
        j["a"] = platt->a;
        j["b"] = platt->b;
    } else if (const auto* bin = std::get_if<BinningModel>(&model)) {
        j["edges"] = bin->edges;
        j["values"] = bin->values;
    }
    return j;
}

inline Calibrator calibrator_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") return IdentityModel{};
    if (kind == "isotonic") {
        IsotonicModel m;
        m.upper_boundaries = j.at("boundaries").get<std::vector<double>>();
        m.block_values = j.at("values").get<std::vector<double>>();
        return m;
    }
    if (kind == "enir") {
        EnirModel m;
        m.boundaries = j.at("boundaries").get<std::vector<double>>();
        for (const auto& jm : j.at("members")) {
            EnirModel::Member mem;
            mem.values = jm.at("values").get<std::vector<double>>();
            mem.lambda = jm.at("lambda").get<double>();
            mem.df = jm.at("df").get<std::size_t>();
            mem.bic = jm.at("bic").get<double>();
            mem.weight = jm.at("weight").get<double>();
            m.members.push_back(std::move(mem));
        }
        m.blended.assign(m.boundaries.size() + 1, 0.0);
        for (const auto& mem : m.members)
            for (std::size_t i = 0; i < m.blended.size(); ++i)
                m.blended[i] += mem.weight * mem.values[i];
        return m;
    }
    if (kind == "platt")
        return PlattModel{j.at("a").get<double>(), j.at("b").get<double>()};
    if (kind == "binning") {
        BinningModel m;
        m.edges = j.at("edges").get<std::vector<double>>();
        m.values = j.at("values").get<std::vector<double>>();
        return m;
    }
    throw DataError("unknown calibrator kind: " + kind);
}

inline void save_calibrator(const Calibrator& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << calibrator_to_json(model).dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

inline Calibrator load_calibrator(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    nlohmann::json j;
    in >> j;
    return calibrator_from_json(j);
}

}  // namespace calib

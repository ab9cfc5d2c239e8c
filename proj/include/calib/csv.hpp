#pragma once

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "calib/dataset.hpp"
#include "calib/error.hpp"

namespace calib {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace detail

/// Loads a comma-separated file with a header row. The label column is
/// matched by exact header text; every other column is a numeric feature.
/// Rows containing an empty cell are dropped (complete-case analysis); a
/// non-empty cell that does not parse as a number is an error. The file must
/// carry exactly two distinct label values, one of them `positive_label`.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::string& positive_label) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    auto header = detail::split_csv_line(line);
    for (auto& h : header) h = detail::trim(h);

    std::size_t label_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == label_column) label_idx = j;
    if (label_idx == header.size())
        throw DataError("label column '" + label_column + "' not found in " + path);
    if (header.size() < 2)
        throw DataError("no feature columns in " + path);

    std::vector<std::string> feature_names;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != label_idx) feature_names.push_back(header[j]);

    std::vector<double> features;
    std::vector<std::string> raw_labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        bool missing = false;
        for (auto& c : cells) {
            c = detail::trim(c);
            if (c.empty()) missing = true;
        }
        if (missing) continue;  // complete cases only

        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (j == label_idx) continue;
            double v;
            if (!detail::parse_double(cells[j], v))
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": non-numeric feature cell '" + cells[j] +
                                "' in column '" + header[j] + "'");
            features.push_back(v);
        }
        raw_labels.push_back(cells[label_idx]);
    }
    if (raw_labels.empty())
        throw DataError("no usable data rows in " + path);

    std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    if (distinct.size() != 2) {
        std::string seen;
        for (const auto& v : distinct) seen += (seen.empty() ? "" : ", ") + v;
        throw DataError("label column must be binary; found " +
                        std::to_string(distinct.size()) + " distinct values {" +
                        seen + "} in " + path);
    }
    if (!distinct.count(positive_label))
        throw DataError("positive label '" + positive_label +
                        "' does not occur in column '" + label_column + "' of " +
                        path);

    std::vector<int> labels;
    labels.reserve(raw_labels.size());
    for (const auto& v : raw_labels) labels.push_back(v == positive_label ? 1 : 0);
    return Dataset(std::move(features), std::move(labels),
                   std::move(feature_names), path);
}

inline void write_dataset_csv(const Dataset& ds, const std::string& path,
                              const std::string& label_column = "label") {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (const auto& name : ds.feature_names()) out << name << ',';
    out << label_column << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        for (double v : ds.row(i)) out << v << ',';
        out << ds.labels()[i] << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace calib

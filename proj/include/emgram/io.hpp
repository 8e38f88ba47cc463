#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emgram/model.hpp"
#include "emgram/types.hpp"

namespace emgram {

/// Matrix to CSV with 17 significant digits (lossless double round-trip).
inline void write_csv(const Matrix& m, const std::string& path,
                      const std::vector<std::string>& header = {}) {
    std::ofstream out(path);
    if (!out) throw config_error("write_csv: cannot open " + path);
    char buf[64];
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j) out << ',';
            out << header[j];
        }
        out << '\n';
    }
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw config_error("write_csv: write failure on " + path);
}

/// CSV to matrix; a non-numeric first line is treated as a header and
/// skipped. All rows must have equal width.
inline Matrix read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("read_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
                if (pos != cell.size() && cell.find_first_not_of(" \t\r", pos) !=
                                              std::string::npos) {
                    numeric = false;
                }
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;  // header line
            }
            throw config_error("read_csv: non-numeric data in " + path);
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw config_error("read_csv: ragged rows in " + path);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw config_error("read_csv: empty file " + path);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

/// Load a linear system from a JSON descriptor
/// {"A": "a.csv", "B": "b.csv", "C": "c.csv", "F": optional, "dims": [M,N,Q,P]};
/// CSV paths are resolved relative to the descriptor's directory.
inline LinearSystem load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("load_system: cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw config_error("load_system: invalid JSON in " + path + ": " + e.what());
    }
    const auto dir = std::filesystem::path(path).parent_path();
    auto resolve = [&dir](const std::string& rel) {
        std::filesystem::path p(rel);
        return p.is_absolute() ? p.string() : (dir / p).string();
    };
    for (const char* key : {"A", "B", "C", "dims"}) {
        if (!doc.contains(key)) {
            throw config_error(std::string("load_system: missing key \"") + key + "\"");
        }
    }
    LinearSystem sys;
    sys.A = read_csv(resolve(doc["A"].get<std::string>()));
    sys.B = read_csv(resolve(doc["B"].get<std::string>()));
    sys.C = read_csv(resolve(doc["C"].get<std::string>()));
    if (doc.contains("F") && !doc["F"].is_null()) {
        sys.F = read_csv(resolve(doc["F"].get<std::string>()));
    }
    const auto dims = doc["dims"];
    if (!dims.is_array() || dims.size() != 4) {
        throw config_error("load_system: dims must be [M,N,Q,P]");
    }
    sys.check();
    if (sys.inputs() != dims[0].get<Index>() || sys.states() != dims[1].get<Index>() ||
        sys.outputs() != dims[2].get<Index>() || sys.params() != dims[3].get<Index>()) {
        throw config_error("load_system: dims entry disagrees with matrix shapes");
    }
    return sys;
}

inline void write_json(const nlohmann::json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("write_json: cannot open " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw config_error("write_json: write failure on " + path);
}

}  // namespace emgram

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankfolio/core_model.hpp"

namespace rankfolio::io {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("could not parse " + what + " from '" + s + "'");
    }
}

/// Shortest round-trippable decimal representation.
inline std::string format_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace detail

/**
 * Reads a panel CSV: header `date,<asset_1>,...,<asset_n>`, one row per
 * period, cells are decimal simple returns.
 */
inline core_model::ReturnsPanel read_panel_csv(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.size() < 3) throw std::runtime_error("panel CSV needs a header and at least 2 rows: " + path);
    auto header = detail::split(lines[0], ',');
    if (header.size() < 2 || header[0] != "date")
        throw std::runtime_error("panel CSV header must start with 'date': " + path);
    const std::size_t n = header.size() - 1;

    std::vector<std::string> dates;
    std::vector<std::vector<double>> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string t = detail::trim(lines[li]);
        if (t.empty()) continue;
        auto cells = detail::split(t, ',');
        if (cells.size() != n + 1)
            throw std::runtime_error("panel CSV row " + std::to_string(li + 1) + " has wrong cell count");
        dates.push_back(cells[0]);
        std::vector<double> row;
        row.reserve(n);
        for (std::size_t j = 1; j < cells.size(); ++j)
            row.push_back(detail::parse_double(cells[j], "return"));
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < n; ++j)
            m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    return core_model::ReturnsPanel(std::move(dates),
                                    std::vector<std::string>(header.begin() + 1, header.end()),
                                    std::move(m));
}

/// Reads total-return index levels in the same layout and converts them to
/// simple returns r_t = I_t / I_{t-1} - 1 (the first level row is consumed).
inline core_model::ReturnsPanel read_levels_csv(const std::string& path) {
    const auto panel_like = [&] {
        const auto lines = detail::read_lines(path);
        if (lines.size() < 4)
            throw std::runtime_error("levels CSV needs a header and at least 3 rows: " + path);
        return lines;
    }();
    auto header = detail::split(panel_like[0], ',');
    if (header.size() < 2 || header[0] != "date")
        throw std::runtime_error("levels CSV header must start with 'date': " + path);
    const std::size_t n = header.size() - 1;

    std::vector<std::string> dates;
    std::vector<std::vector<double>> levels;
    for (std::size_t li = 1; li < panel_like.size(); ++li) {
        const std::string t = detail::trim(panel_like[li]);
        if (t.empty()) continue;
        auto cells = detail::split(t, ',');
        if (cells.size() != n + 1)
            throw std::runtime_error("levels CSV row " + std::to_string(li + 1) + " has wrong cell count");
        dates.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t j = 1; j < cells.size(); ++j) {
            const double v = detail::parse_double(cells[j], "index level");
            if (!(v > 0.0)) throw std::runtime_error("levels CSV: nonpositive index level");
            row.push_back(v);
        }
        levels.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(levels.size()) - 1, static_cast<Eigen::Index>(n));
    std::vector<std::string> ret_dates;
    for (std::size_t t = 1; t < levels.size(); ++t) {
        ret_dates.push_back(dates[t]);
        for (std::size_t j = 0; j < n; ++j)
            m(static_cast<Eigen::Index>(t - 1), static_cast<Eigen::Index>(j)) =
                levels[t][j] / levels[t - 1][j] - 1.0;
    }
    return core_model::ReturnsPanel(std::move(ret_dates),
                                    std::vector<std::string>(header.begin() + 1, header.end()),
                                    std::move(m));
}

inline void write_panel_csv(const core_model::ReturnsPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "date";
    for (const auto& id : panel.asset_ids) out << ',' << id;
    out << '\n';
    for (Eigen::Index t = 0; t < panel.periods(); ++t) {
        out << panel.dates[static_cast<std::size_t>(t)];
        for (Eigen::Index j = 0; j < panel.assets(); ++j)
            out << ',' << detail::format_full(panel.returns(t, j));
        out << '\n';
    }
}

/// Plain numeric CSV (no header): one row per line, comma separated.
inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    const auto lines = detail::read_lines(path);
    std::vector<std::vector<double>> rows;
    for (const auto& line : lines) {
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        auto cells = detail::split(t, ',');
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(detail::parse_double(c, "matrix entry"));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("matrix CSV has ragged rows: " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("matrix CSV is empty: " + path);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

/**
 * Order file: one total order per line, comma-separated asset ids listed
 * best-first. Returns the token lines; mapping onto indices is done against
 * either a panel's asset ids or the sorted unique ids of the file itself.
 */
inline std::vector<std::vector<std::string>> read_order_lines(const std::string& path) {
    const auto lines = detail::read_lines(path);
    std::vector<std::vector<std::string>> out;
    for (const auto& line : lines) {
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.push_back(detail::split(t, ','));
    }
    if (out.empty()) throw std::runtime_error("order file is empty: " + path);
    return out;
}

/// Maps one order line onto a TotalOrder given the asset id universe.
inline core_model::TotalOrder order_from_tokens(const std::vector<std::string>& tokens,
                                                const std::vector<std::string>& asset_ids) {
    if (tokens.size() != asset_ids.size())
        throw std::runtime_error("order line has " + std::to_string(tokens.size()) + " ids, expected " +
                                 std::to_string(asset_ids.size()));
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < asset_ids.size(); ++i) index[asset_ids[i]] = static_cast<int>(i);
    std::vector<int> assets;
    assets.reserve(tokens.size());
    for (const auto& t : tokens) {
        auto it = index.find(t);
        if (it == index.end()) throw std::runtime_error("unknown asset id in order file: '" + t + "'");
        assets.push_back(it->second);
    }
    return core_model::TotalOrder::from_assets_by_rank(assets);
}

/// Asset universe of a standalone order file: sorted unique ids of the
/// first line (every line must then be a permutation of it).
inline std::vector<std::string> order_file_universe(const std::vector<std::vector<std::string>>& lines) {
    std::vector<std::string> ids = lines.front();
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw std::runtime_error("order file: duplicate asset id on a line");
    return ids;
}

/// Flat key-value experiment configuration.
struct GridConfigFile {
    std::vector<int> ks;
    std::vector<double> ds;
    std::vector<double> cs;
    std::vector<std::string> methods;
    double delta = 3.0;
    std::uint64_t seed = 0;
    bool resample_views_monthly = true;
    bool annualize_sr = true;
    std::string rf = "0";  // scalar value or path to a one-column CSV
};

inline GridConfigFile parse_grid_config(const std::string& path) {
    static const std::set<std::string> known{"ks",   "ds",   "cs",
                                             "methods", "delta", "seed",
                                             "resample_views_monthly", "annualize_sr", "rf"};
    GridConfigFile cfg;
    for (const auto& raw : detail::read_lines(path)) {
        const std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("grid config: expected key = value, got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (!known.count(key)) throw std::runtime_error("grid config: unknown key '" + key + "'");
        if (key == "ks") {
            cfg.ks.clear();
            for (const auto& t : detail::split(val, ','))
                cfg.ks.push_back(static_cast<int>(detail::parse_double(t, "ks")));
        } else if (key == "ds") {
            cfg.ds.clear();
            for (const auto& t : detail::split(val, ',')) cfg.ds.push_back(detail::parse_double(t, "ds"));
        } else if (key == "cs") {
            cfg.cs.clear();
            for (const auto& t : detail::split(val, ',')) cfg.cs.push_back(detail::parse_double(t, "cs"));
        } else if (key == "methods") {
            cfg.methods = detail::split(val, ',');
        } else if (key == "delta") {
            cfg.delta = detail::parse_double(val, "delta");
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(std::stoull(val));
        } else if (key == "resample_views_monthly") {
            cfg.resample_views_monthly = (val == "true" || val == "1");
        } else if (key == "annualize_sr") {
            cfg.annualize_sr = (val == "true" || val == "1");
        } else if (key == "rf") {
            cfg.rf = val;
        }
    }
    return cfg;
}

}  // namespace rankfolio::io

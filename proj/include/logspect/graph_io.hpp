#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "logspect/graphs.hpp"

namespace logspect {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline double parse_double(const std::string& tok, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw ParseError(line, "not a number: '" + tok + "'");
    }
    if (used != tok.size()) throw ParseError(line, "trailing characters in '" + tok + "'");
    return v;
}

inline long long parse_int(const std::string& tok, std::size_t line) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(tok, &used);
    } catch (const std::exception&) {
        throw ParseError(line, "not an integer: '" + tok + "'");
    }
    if (used != tok.size()) throw ParseError(line, "trailing characters in '" + tok + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

}  // namespace detail

/// How readers treat entries where (i,j) and (j,i) disagree.
enum class SymmetryPolicy { Reject, Symmetrize };

/// Edge-list text format:
///
///     # m=<nodes>
///     i j w
///
/// 0-based indices with i < j, one edge per line, zero-weight pairs omitted.
inline void write_graph(std::ostream& out, const AdjacencyMatrix& g) {
    const Index m = g.nodes();
    out << "# m=" << m << '\n';
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j) {
            const double w = g.weight(i, j);
            if (w != 0.0) out << i << ' ' << j << ' ' << detail::format_double(w) << '\n';
        }
}

inline void write_graph(const AdjacencyMatrix& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_graph(out, g);
    if (!out) throw Error("write failed for '" + path + "'");
}

/// Parses the edge-list format. A pair given twice (as i j and j i) with
/// different weights is asymmetric: rejected unless the policy averages it.
inline AdjacencyMatrix read_graph(std::istream& in, SymmetryPolicy policy = SymmetryPolicy::Reject) {
    std::string raw;
    std::size_t line = 0;
    Index m = -1;
    std::map<std::pair<Index, Index>, std::pair<double, double>> seen;  // (lo,hi) -> (w_lo_hi, w_hi_lo)
    std::map<std::pair<Index, Index>, std::pair<bool, bool>> present;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = detail::trim(raw);
        if (s.empty()) continue;
        if (s[0] == '#') {
            const auto pos = s.find("m=");
            if (m < 0 && pos != std::string::npos) {
                auto tok = detail::split_ws(s.substr(pos + 2));
                if (tok.empty()) throw ParseError(line, "empty node count in header");
                m = detail::parse_int(tok[0], line);
                if (m < 1) throw ParseError(line, "node count must be positive");
            }
            continue;
        }
        if (m < 0) throw ParseError(line, "missing '# m=<nodes>' header before first edge");
        const auto tok = detail::split_ws(s);
        if (tok.size() != 3) throw ParseError(line, "expected 'i j w'");
        const long long i = detail::parse_int(tok[0], line);
        const long long j = detail::parse_int(tok[1], line);
        const double w = detail::parse_double(tok[2], line);
        if (i < 0 || j < 0 || i >= m || j >= m) throw ParseError(line, "node index out of range");
        if (i == j) throw ParseError(line, "self-loop not allowed");
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("line " + std::to_string(line) + ": negative or non-finite weight");
        const std::pair<Index, Index> key{std::min<Index>(i, j), std::max<Index>(i, j)};
        auto& slot = seen[key];
        auto& flags = present[key];
        const bool upper = i < j;
        bool& have = upper ? flags.first : flags.second;
        double& val = upper ? slot.first : slot.second;
        if (have) throw ParseError(line, "duplicate edge");
        have = true;
        val = w;
    }
    if (m < 0) throw ParseError(line, "missing '# m=<nodes>' header");
    Vector wts = Vector::Zero(pair_count(m));
    for (const auto& [key, vals] : seen) {
        const auto flags = present.at(key);
        double w = flags.first ? vals.first : vals.second;
        if (flags.first && flags.second && vals.first != vals.second) {
            if (policy == SymmetryPolicy::Reject)
                throw ValidationError("asymmetric weights for pair (" + std::to_string(key.first) + "," +
                                      std::to_string(key.second) + "); pass --symmetrize to average");
            w = 0.5 * (vals.first + vals.second);
        }
        wts[pair_index(m, key.first, key.second)] = w;
    }
    return AdjacencyMatrix(m, std::move(wts));
}

inline AdjacencyMatrix read_graph(const std::string& path, SymmetryPolicy policy = SymmetryPolicy::Reject) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_graph(in, policy);
}

/// Dense comma-separated matrix, one row per line; '#' lines are comments.
inline void write_dense_csv(std::ostream& out, const Matrix& X, const std::string& header = {}) {
    if (!header.empty()) out << "# " << header << '\n';
    for (Index i = 0; i < X.rows(); ++i) {
        for (Index j = 0; j < X.cols(); ++j) {
            if (j) out << ',';
            out << detail::format_double(X(i, j));
        }
        out << '\n';
    }
}

inline Matrix read_dense_csv(std::istream& in, std::string* header = nullptr) {
    std::string raw;
    std::size_t line = 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = detail::trim(raw);
        if (s.empty()) continue;
        if (s[0] == '#') {
            if (header && header->empty()) *header = detail::trim(s.substr(1));
            continue;
        }
        std::vector<double> row;
        for (const auto& tok : detail::split(s, ',')) row.push_back(detail::parse_double(tok, line));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(line, "row has " + std::to_string(row.size()) + " columns, expected " +
                                       std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix X(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < X.rows(); ++i)
        for (Index j = 0; j < X.cols(); ++j) X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return X;
}

inline void write_graph_csv(const AdjacencyMatrix& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_dense_csv(out, g.dense(), "m=" + std::to_string(g.nodes()));
}

inline AdjacencyMatrix read_graph_csv(std::istream& in, SymmetryPolicy policy = SymmetryPolicy::Reject) {
    Matrix X = read_dense_csv(in);
    if (X.rows() != X.cols()) throw ShapeError("dense adjacency CSV must be square");
    if ((X.array() < 0.0).any()) throw ValidationError("negative weight in adjacency CSV");
    if (policy == SymmetryPolicy::Symmetrize) X = (0.5 * (X + X.transpose())).eval();
    return AdjacencyMatrix::from_dense(X);
}

inline AdjacencyMatrix read_graph_csv(const std::string& path, SymmetryPolicy policy = SymmetryPolicy::Reject) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_graph_csv(in, policy);
}

}  // namespace logspect

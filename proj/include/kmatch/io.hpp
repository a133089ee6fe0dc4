#ifndef KMATCH_IO_HPP
#define KMATCH_IO_HPP

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kmatch/certify.hpp"
#include "kmatch/error.hpp"
#include "kmatch/graph.hpp"
#include "kmatch/tinf.hpp"

namespace kmatch {

struct GraphFile {
    MultiGraph graph;
    int k = 0;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

template <class T>
T parse_number(std::string_view tok, std::size_t line_no, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + std::string(tok) + "'");
    return value;
}

inline std::string fmt_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

inline nlohmann::json json_double(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

} // namespace detail

/// `p kmatch <n> <m> <k>` then m lines `e <u> <v>`; blank lines and `c` comments are skipped.
inline void write_graph(std::ostream& os, const MultiGraph& g, int k) {
    os << "p kmatch " << g.num_vertices() << ' ' << g.num_edges() << ' ' << k << '\n';
    for (auto [u, v] : g.edge_list()) os << "e " << u << ' ' << v << '\n';
}

inline GraphFile read_graph(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    std::uint64_t n = 0, m = 0;
    GraphFile out;
    std::vector<VertexPair> edges;
    while (std::getline(is, line)) {
        ++line_no;
        auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0] == "c") continue;
        if (!header) {
            if (tok.size() != 5 || tok[0] != "p" || tok[1] != "kmatch")
                throw ParseError("line " + std::to_string(line_no) + ": expected 'p kmatch <n> <m> <k>'");
            n = detail::parse_number<std::uint64_t>(tok[2], line_no, "vertex count");
            m = detail::parse_number<std::uint64_t>(tok[3], line_no, "edge count");
            out.k = detail::parse_number<int>(tok[4], line_no, "k");
            if (n > 0xffffffffULL) throw ParseError("line " + std::to_string(line_no) + ": too many vertices");
            header = true;
            edges.reserve(m);
            continue;
        }
        if (tok.size() != 3 || tok[0] != "e")
            throw ParseError("line " + std::to_string(line_no) + ": expected 'e <u> <v>'");
        auto u = detail::parse_number<std::uint64_t>(tok[1], line_no, "vertex");
        auto v = detail::parse_number<std::uint64_t>(tok[2], line_no, "vertex");
        if (u >= n || v >= n) throw ParseError("line " + std::to_string(line_no) + ": vertex out of range");
        edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
    }
    if (!header) throw ParseError("line " + std::to_string(line_no) + ": missing header");
    if (edges.size() != m)
        throw ParseError("line " + std::to_string(line_no) + ": header promises " + std::to_string(m) + " edges, found " +
                         std::to_string(edges.size()));
    out.graph = MultiGraph::from_edge_list(n, edges);
    return out;
}

inline void write_matching(std::ostream& os, const std::vector<VertexPair>& m) {
    for (auto [u, v] : m) os << u << ' ' << v << '\n';
}

inline std::vector<VertexPair> read_matching(std::istream& is) {
    std::vector<VertexPair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0] == "c") continue;
        if (tok.size() != 2) throw ParseError("line " + std::to_string(line_no) + ": expected '<u> <v>'");
        out.emplace_back(detail::parse_number<Vertex>(tok[0], line_no, "vertex"), detail::parse_number<Vertex>(tok[1], line_no, "vertex"));
    }
    return out;
}

// ---------------------------------------------------------------- CSV / JSON lines

/// Rows of one table, written either as CSV or as one JSON object per line.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<nlohmann::json>> rows;

    void write_csv(std::ostream& os) const {
        for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) os << ',';
                const auto& cell = row[i];
                if (cell.is_null())
                    os << "nan";
                else if (cell.is_string())
                    os << cell.get<std::string>();
                else if (cell.is_number_float())
                    os << detail::fmt_double(cell.get<double>());
                else
                    os << cell.dump();
            }
            os << '\n';
        }
    }

    void write_jsonl(std::ostream& os) const {
        for (const auto& row : rows) {
            nlohmann::json obj = nlohmann::json::object();
            for (std::size_t i = 0; i < header.size() && i < row.size(); ++i) obj[header[i]] = row[i];
            os << obj.dump() << '\n';
        }
    }
};

/// Columns t,m,zeta,index,s,mult,h,p1..p{k+1}.
inline Table trace_table(const TinfTrace& tr) {
    Table t;
    t.header = {"t", "m", "zeta", "index", "s", "mult", "h"};
    for (int i = 1; i <= tr.k + 1; ++i) t.header.push_back("p" + std::to_string(i));
    for (const auto& r : tr.rows) {
        std::vector<nlohmann::json> row{r.t, r.m, r.zeta, r.index, r.s, r.mult, r.h};
        for (int i = 0; i <= tr.k; ++i) row.push_back(detail::json_double(i < static_cast<int>(r.p.size()) ? r.p[i] : NAN));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Columns name,r,d,worst_margin,argmin_lambda,value; absent r or d is left empty.
inline Table certificate_table(const CertReport& rep) {
    Table t;
    t.header = {"name", "r", "d", "worst_margin", "argmin_lambda", "value"};
    auto opt_int = [](int x) -> nlohmann::json { return x > 0 ? nlohmann::json(x) : nlohmann::json(""); };
    for (const auto& r : rep.rows)
        t.rows.push_back({r.name, opt_int(r.r), opt_int(r.d), detail::json_double(r.worst_margin),
                          detail::json_double(r.argmin_lambda), detail::json_double(r.value)});
    return t;
}

/// Parses certificate CSV back into rows (used by tests and downstream tooling).
inline std::vector<CertRow> read_certificate_csv(std::istream& is) {
    std::vector<CertRow> out;
    std::string line;
    std::size_t line_no = 0;
    auto num = [&](const std::string& s) { return s == "nan" || s.empty() ? NAN : std::stod(s); };
    while (std::getline(is, line)) {
        if (++line_no == 1) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != 6) throw ParseError("line " + std::to_string(line_no) + ": expected 6 columns");
        CertRow r;
        r.name = cells[0];
        r.r = cells[1].empty() ? 0 : std::stoi(cells[1]);
        r.d = cells[2].empty() ? 0 : std::stoi(cells[2]);
        r.worst_margin = num(cells[3]);
        r.argmin_lambda = num(cells[4]);
        r.value = num(cells[5]);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace kmatch

#endif

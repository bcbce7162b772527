#pragma once

// CSV emission and ingestion. Numbers are written in the shortest form that
// parses back to the identical double.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "arcplant/arc_circuit.hpp"
#include "arcplant/errors.hpp"
#include "arcplant/identification.hpp"
#include "arcplant/sim_engine.hpp"

namespace arcplant::io {

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) return std::nullopt;
    return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Numeric table with a named header. Lines starting with '#' and blank
/// lines are ignored.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        throw DataError("missing column '" + std::string(name) + "'");
    }

    std::vector<double> column(std::string_view name) const {
        const std::size_t idx = index_of(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[idx]);
        return out;
    }
};

inline Table read_table(std::istream& in, const std::string& source) {
    Table table;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto fields = split(body, ',');
        if (!have_header) {
            for (auto f : fields) table.columns.emplace_back(f);
            have_header = true;
            continue;
        }
        if (fields.size() != table.columns.size()) {
            throw DataError(source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns.size()) + " fields, got " + std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (auto f : fields) {
            const auto v = parse_double(f);
            if (!v) throw DataError(source + ":" + std::to_string(line_no) + ": not a number: '" + std::string(f) + "'");
            row.push_back(*v);
        }
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw DataError(source + ": no header line");
    return table;
}

inline Table read_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_table(in, path);
}

inline constexpr std::string_view kSweepHeader = "L_mm,Ua_V,I_A,Z_ohm";
inline constexpr std::string_view kTrajectoryHeader = "t_s,u_V,L_mm,v_mm_s,Ua_V,I_A,Z_ohm";

inline void write_sweep_csv(std::ostream& out, const std::vector<arc::ArcOperatingPoint>& points) {
    out << kSweepHeader << '\n';
    for (const auto& p : points) {
        out << format_double(p.L) << ',' << format_double(p.Ua) << ',' << format_double(p.I) << ','
            << format_double(p.Z) << '\n';
    }
}

inline void write_trajectory_csv(std::ostream& out, const sim::Trajectory& traj) {
    out << kTrajectoryHeader << '\n';
    for (const auto& s : traj.samples) {
        out << format_double(s.t) << ',' << format_double(s.u) << ',' << format_double(s.L) << ','
            << format_double(s.v) << ',' << format_double(s.Ua) << ',' << format_double(s.I) << ','
            << format_double(s.Z) << '\n';
    }
}

namespace detail {
inline void expect_header(const Table& t, std::string_view header, const std::string& source) {
    std::string joined;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) joined += ',';
        joined += t.columns[i];
    }
    if (joined != header) {
        throw DataError(source + ": expected header '" + std::string(header) + "', got '" + joined + "'");
    }
}
}  // namespace detail

inline std::vector<sim::Sample> read_trajectory_csv(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source);
    detail::expect_header(t, kTrajectoryHeader, source);
    std::vector<sim::Sample> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) out.push_back({r[0], r[1], r[2], r[3], r[4], r[5], r[6]});
    return out;
}

inline std::vector<arc::ArcOperatingPoint> read_sweep_csv(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source);
    detail::expect_header(t, kSweepHeader, source);
    std::vector<arc::ArcOperatingPoint> out;
    for (const auto& r : t.rows) out.push_back({r[0], r[1], r[2], r[3]});
    return out;
}

/// Field data: header `t_s,<channel>` with channel in {v_mm_s, L_mm, I_A}.
inline ident::FieldSeries read_field_series(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source);
    if (t.columns.size() != 2 || t.columns[0] != "t_s") {
        throw DataError(source + ": field data must have header 't_s,<channel>'");
    }
    const auto channel = ident::parse_channel(t.columns[1]);
    if (!channel) {
        throw DataError(source + ": unknown channel '" + t.columns[1] + "' (expected v_mm_s, L_mm or I_A)");
    }
    ident::FieldSeries fs;
    fs.channel = *channel;
    fs.t = t.column("t_s");
    fs.y = t.column(t.columns[1]);
    return fs;
}

inline ident::FieldSeries read_field_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open field data '" + path + "'");
    return read_field_series(in, path);
}

inline void write_field_series(std::ostream& out, const ident::FieldSeries& fs) {
    out << "t_s," << ident::to_string(fs.channel) << '\n';
    for (std::size_t i = 0; i < fs.t.size(); ++i) out << format_double(fs.t[i]) << ',' << format_double(fs.y[i]) << '\n';
}

/// Tap table: header `tap,Xr_ohm,XT_ohm`.
inline arc::TapTable read_tap_table(std::istream& in, const std::string& source) {
    Table t;
    try {
        t = read_table(in, source);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    if (t.columns != std::vector<std::string>{"tap", "Xr_ohm", "XT_ohm"}) {
        throw ConfigError(source + ": tap table header must be 'tap,Xr_ohm,XT_ohm'");
    }
    arc::TapTable table;
    for (const auto& r : t.rows) {
        if (r[0] != std::floor(r[0])) throw ConfigError(source + ": tap index must be an integer");
        table.add(static_cast<int>(r[0]), {r[1], r[2]});
    }
    return table;
}

inline arc::TapTable read_tap_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tap table '" + path + "'");
    return read_tap_table(in, path);
}

}  // namespace arcplant::io

#pragma once

// CSV and JSON output. Every CSV starts with a schema line "# mobrate-<kind> v<N>" followed by a
// header row; numbers use the shortest round-trip form so reruns are byte-identical.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mobrate/geometry.hpp"
#include "mobrate/sharing.hpp"
#include "mobrate/stats.hpp"
#include "mobrate/trace.hpp"

namespace mobrate {

inline std::string format_number(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::string_view kind, int version,
              const std::vector<std::string>& columns)
        : out_(path), columns_(columns.size()) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        out_ << "# mobrate-" << kind << " v" << version << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    // Extra "# key=value" lines must come before any row.
    void comment(std::string_view text) { out_ << "# " << text << "\n"; }

    template <class... T>
    void row(const T&... cells) {
        static_assert(sizeof...(T) > 0);
        if (sizeof...(T) != columns_) throw std::logic_error("csv row width mismatch");
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << "\n";
    }

private:
    static std::string cell(double x) { return format_number(x); }
    static std::string cell(float x) { return format_number(x); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(bool b) { return b ? "1" : "0"; }
    template <class I>
        requires std::is_integral_v<I>
    static std::string cell(I i) { return std::to_string(i); }

    std::ofstream out_;
    std::size_t columns_;
};

// ---------------------------------------------------------------- traces

inline void write_sampled_trace(const std::filesystem::path& path, const SampledTrace& trace, std::string_view kind) {
    CsvWriter w(path, kind, 1, {"time", "value"});
    for (std::size_t k = 0; k < trace.values.size(); ++k) w.row(trace.time(k), trace.values[k]);
}

inline void write_step_trace(const std::filesystem::path& path, const StepTrace& trace, std::string_view kind) {
    CsvWriter w(path, kind, 1, {"time", "value"});
    w.row(trace.t_begin, trace.initial);
    for (std::size_t k = 0; k < trace.times.size(); ++k) w.row(trace.times[k], trace.values[k]);
}

// One row per up/down crossing in time order.
inline void write_crossings(const std::filesystem::path& path, const CrossingRecord& rec) {
    CsvWriter w(path, "crossings", 1, {"time", "direction"});
    w.comment("level=" + format_number(rec.level()) + " t_begin=" + format_number(rec.t_begin()) +
              " t_end=" + format_number(rec.t_end()) + " initial_on=" + (rec.initial_on() ? "1" : "0"));
    const auto& up = rec.up_times();
    const auto& down = rec.down_times();
    std::size_t i = 0, j = 0;
    while (i < up.size() || j < down.size()) {
        if (j >= down.size() || (i < up.size() && up[i] < down[j])) w.row(up[i++], "up");
        else w.row(down[j++], "down");
    }
}

inline nlohmann::json crossings_json(const CrossingRecord& rec) {
    return {{"level", rec.level()},         {"t_begin", rec.t_begin()}, {"t_end", rec.t_end()},
            {"initial_on", rec.initial_on()}, {"up", rec.up_times()},     {"down", rec.down_times()}};
}

// ---------------------------------------------------------------- fields

inline void write_field(const std::filesystem::path& path, const std::vector<Point>& pts, std::uint64_t seed,
                        const Window& w) {
    CsvWriter out(path, "field", 1, {"x", "y"});
    out.comment("seed=" + std::to_string(seed) + " window=" + format_number(w.xmin) + "," + format_number(w.ymin) + "," +
                format_number(w.xmax) + "," + format_number(w.ymax));
    for (const auto& p : pts) out.row(p.x, p.y);
}

struct LoadedField {
    std::uint64_t seed = 0;
    Window window;
    std::vector<Point> points;
};

inline LoadedField read_field(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    LoadedField f;
    std::string line;
    if (!std::getline(in, line) || line != "# mobrate-field v1") throw std::runtime_error("not a mobrate-field v1 file");
    if (!std::getline(in, line) || line != "x,y") throw std::runtime_error("bad field header");
    if (!std::getline(in, line) || line.rfind("# seed=", 0) != 0) throw std::runtime_error("missing field metadata");
    unsigned long long seed = 0;
    if (std::sscanf(line.c_str(), "# seed=%llu window=%lf,%lf,%lf,%lf", &seed, &f.window.xmin, &f.window.ymin,
                    &f.window.xmax, &f.window.ymax) != 5)
        throw std::runtime_error("bad field metadata");
    f.seed = seed;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        Point p;
        const char* b = line.data();
        const char* e = b + line.size();
        if (comma == std::string::npos || std::from_chars(b, b + comma, p.x).ptr != b + comma ||
            std::from_chars(b + comma + 1, e, p.y).ptr != e)
            throw std::runtime_error("bad field row: " + line);
        f.points.push_back(p);
    }
    return f;
}

// ---------------------------------------------------------------- reports

inline nlohmann::json ks_json(const KSReport& r) {
    return {{"n", r.n},
            {"statistic", r.statistic},
            {"critical", r.critical},
            {"pass", r.pass},
            {"reference", r.reference}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

} // namespace mobrate

#pragma once

// Trend chart (SVG) and per-discipline table (CSV) built from OACA rows.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "oaca/error.hpp"
#include "oaca/io.hpp"
#include "oaca/metrics.hpp"
#include "oaca/record.hpp"

namespace oaca {

struct TrendPoint {
    int year = 0;
    double oaca_pct = 0.0;
    friend bool operator==(const TrendPoint&, const TrendPoint&) = default;
};

struct TrendSeries {
    Route route = Route::FullGoldOA;
    bool adjusted = false;
    std::vector<TrendPoint> points;
};

inline std::string series_label(const TrendSeries& s) {
    return std::string(s.route == Route::FullGoldOA ? "Full OA" : "Hybrid OA") +
           (s.adjusted ? " (raked controls)" : " (all non-OA)");
}

/// One series per (route, baseline) from the per-year rows, routes first.
inline std::vector<TrendSeries> trend_series(std::span<const OacaResult> rows) {
    std::map<std::pair<int, int>, TrendSeries> by_key;
    for (const auto& r : rows) {
        if (r.slice != SliceKind::PerYear) continue;
        long long year = 0;
        if (!parse_int(r.label, year)) throw MalformedLine(0, "per-year row with label '" + r.label + "'");
        auto& s = by_key[{static_cast<int>(r.route), r.adjusted ? 0 : 1}];
        s.route = r.route;
        s.adjusted = r.adjusted;
        s.points.push_back({static_cast<int>(year), r.oaca_pct});
    }
    std::vector<TrendSeries> out;
    for (auto& [key, s] : by_key) {
        std::sort(s.points.begin(), s.points.end(), [](const auto& a, const auto& b) { return a.year < b.year; });
        out.push_back(std::move(s));
    }
    return out;
}

namespace detail {

inline void check_series(std::span<const TrendSeries> series) {
    if (series.empty()) throw EmptySeries("no series to chart");
    if (series.size() > 4) throw EmptySeries("at most four series per chart");
    const auto& ref = series.front().points;
    if (ref.empty()) throw EmptySeries("series without points");
    for (std::size_t i = 1; i < ref.size(); ++i)
        if (ref[i].year != ref[i - 1].year + 1) throw EmptySeries("years must be consecutive, one point per year");
    for (const auto& s : series) {
        if (s.points.size() != ref.size()) throw EmptySeries("series cover different year ranges");
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (s.points[i].year != ref[i].year) throw EmptySeries("series cover different year ranges");
            if (!std::isfinite(s.points[i].oaca_pct)) throw EmptySeries("non-finite OACA value");
        }
    }
}

inline double nice_step(double range) {
    const double raw = range / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    const double nice = f <= 1.0 ? 1.0 : f <= 2.0 ? 2.0 : f <= 5.0 ? 5.0 : 10.0;
    return nice * mag;
}

inline std::string series_color(const TrendSeries& s) {
    if (s.route == Route::FullGoldOA) return s.adjusted ? "#1f4e9c" : "#8fb0e3";
    return s.adjusted ? "#b03a2e" : "#e6a39b";
}

}  // namespace detail

/// Standalone SVG line chart with axes, a dashed zero line and a legend.
/// Adjusted series are solid, naive series dashed.
inline std::string trend_chart_svg(std::span<const TrendSeries> series, const std::string& title = "OACA, all disciplines") {
    detail::check_series(series);
    constexpr double width = 760, height = 420;
    constexpr double left = 64, right = 210, top = 40, bottom = 56;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double lo = 0.0, hi = 0.0;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            lo = std::min(lo, p.oaca_pct);
            hi = std::max(hi, p.oaca_pct);
        }
    if (hi - lo < 1e-9) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double step = detail::nice_step(hi - lo);
    lo = std::floor(lo / step) * step;
    hi = std::ceil(hi / step) * step;

    const auto& years = series.front().points;
    const int y0 = years.front().year, y1 = years.back().year;
    auto x_of = [&](int year) {
        return y1 == y0 ? left + plot_w / 2 : left + plot_w * (year - y0) / static_cast<double>(y1 - y0);
    };
    auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
    auto num = [](double v) { return format_fixed(v, 2); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    svg += "<text x=\"" + num(left) + "\" y=\"24\" font-size=\"15\">" + title + "</text>\n";

    // grid and y ticks
    const int n_ticks = static_cast<int>(std::llround((hi - lo) / step));
    for (int i = 0; i <= n_ticks; ++i) {
        const double v = lo + step * i;
        const double y = y_of(v);
        svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left + plot_w) + "\" y2=\"" + num(y) +
               "\" stroke=\"#e5e5e5\"/>\n";
        svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
               format_fixed(std::abs(v) < step * 1e-9 ? 0.0 : v, step < 1.0 ? 1 : 0) + "%</text>\n";
    }
    // x ticks
    for (const auto& p : years) {
        const double x = x_of(p.year);
        svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" + num(x) + "\" y2=\"" +
               num(top + plot_h + 5) + "\" stroke=\"#333333\"/>\n";
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(top + plot_h + 20) + "\" text-anchor=\"middle\">" +
               std::to_string(p.year) + "</text>\n";
    }
    // axes
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" +
           num(top + plot_h) + "\" stroke=\"#333333\"/>\n";
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" + num(left + plot_w) + "\" y2=\"" +
           num(top + plot_h) + "\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + num(left + plot_w / 2) + "\" y=\"" + num(height - 12) +
           "\" text-anchor=\"middle\">Publication year</text>\n";
    svg += "<text x=\"16\" y=\"" + num(top + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           num(top + plot_h / 2) + ")\">OACA (%)</text>\n";
    // zero line
    svg += "<line class=\"zero\" x1=\"" + num(left) + "\" y1=\"" + num(y_of(0.0)) + "\" x2=\"" + num(left + plot_w) +
           "\" y2=\"" + num(y_of(0.0)) + "\" stroke=\"#000000\" stroke-dasharray=\"2 3\"/>\n";

    for (const auto& s : series) {
        std::string pts;
        for (const auto& p : s.points) {
            if (!pts.empty()) pts += ' ';
            pts += num(x_of(p.year)) + "," + num(y_of(p.oaca_pct));
        }
        svg += "<polyline class=\"series\" fill=\"none\" stroke=\"" + detail::series_color(s) +
               "\" stroke-width=\"2\"" + (s.adjusted ? "" : " stroke-dasharray=\"6 4\"") + " points=\"" + pts +
               "\"/>\n";
    }
    // legend
    double ly = top + 10;
    for (const auto& s : series) {
        const double lx = left + plot_w + 16;
        svg += "<g class=\"legend\"><line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 24) +
               "\" y2=\"" + num(ly) + "\" stroke=\"" + detail::series_color(s) + "\" stroke-width=\"2\"" +
               (s.adjusted ? "" : " stroke-dasharray=\"6 4\"") + "/><text x=\"" + num(lx + 30) + "\" y=\"" +
               num(ly + 4) + "\">" + series_label(s) + "</text></g>\n";
        ly += 20;
    }
    svg += "</svg>\n";
    return svg;
}

inline void render_trend_chart(std::span<const TrendSeries> series, const std::filesystem::path& out) {
    write_file_atomic(out, trend_chart_svg(series));
}

struct DisciplineTable {
    std::string csv;
    /// One entry per ERC panel absent from the rows.
    std::vector<std::string> missing_disciplines;
};

/// Adjusted per-discipline-period rows pivoted to one line per discipline,
/// columns <route>_<period> in route then period order.
inline DisciplineTable discipline_table(std::span<const OacaResult> rows) {
    std::set<std::pair<int, std::string>> columns;  // (route, period)
    std::map<std::pair<int, std::pair<int, std::string>>, double> cell;  // (discipline, column) -> oaca
    std::set<int> present;
    for (const auto& r : rows) {
        if (r.slice != SliceKind::PerDisciplinePeriod || !r.adjusted) continue;
        const auto colon = r.label.find(':');
        if (colon == std::string::npos) throw MalformedLine(0, "discipline-period label '" + r.label + "'");
        auto d = parse_discipline(r.label.substr(0, colon));
        if (!d) throw UnknownEnumValue("discipline", r.label.substr(0, colon));
        std::pair<int, std::string> col{static_cast<int>(r.route), r.label.substr(colon + 1)};
        columns.insert(col);
        cell[{d->index, col}] = r.oaca_pct;
        present.insert(d->index);
    }
    DisciplineTable t;
    t.csv = "discipline";
    for (const auto& [route, period] : columns)
        t.csv += "," + std::string(to_string(static_cast<Route>(route))) + "_" + period;
    t.csv += "\n";
    for (auto d : all_disciplines()) {
        if (!present.count(d.index)) {
            t.missing_disciplines.push_back(to_string(d));
            continue;
        }
        t.csv += to_string(d);
        for (const auto& col : columns) {
            t.csv += ",";
            auto it = cell.find({d.index, col});
            if (it != cell.end()) t.csv += format_double(it->second);
        }
        t.csv += "\n";
    }
    return t;
}

inline std::vector<std::string> render_discipline_table(std::span<const OacaResult> rows,
                                                        const std::filesystem::path& out) {
    auto t = discipline_table(rows);
    write_file_atomic(out, t.csv);
    return t.missing_disciplines;
}

}  // namespace oaca

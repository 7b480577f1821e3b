#include "proxvi/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "proxvi/errors.hpp"

namespace proxvi {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 640.0;  // legend lives to the right of this
constexpr double kTop = 30.0;
constexpr double kBottom = 450.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Series {
    std::string run_id;
    std::string algo;
    std::vector<std::pair<double, double>> points; // (score_calls, value)
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

} // namespace

std::string render_convergence_svg(const std::vector<TraceRow>& rows,
                                   const std::string& metric) {
    std::vector<Series> series;
    std::map<std::string, std::size_t> index_of;
    std::vector<std::string> seen_runs;
    for (const TraceRow& row : rows) {
        auto it = index_of.find(row.run_id);
        if (it == index_of.end()) {
            it = index_of.emplace(row.run_id, series.size()).first;
            series.push_back({row.run_id, row.algo, {}});
        }
        if (row.metric == metric && std::isfinite(row.value))
            series[it->second].points.emplace_back(static_cast<double>(row.score_calls),
                                                   row.value);
    }
    if (series.empty()) throw MetricMissing("no trace rows to plot");
    for (const Series& s : series)
        if (s.points.empty())
            throw MetricMissing("run " + s.run_id + " has no '" + metric + "' rows");
    for (Series& s : series) std::sort(s.points.begin(), s.points.end());

    double xmin = series[0].points.front().first, xmax = xmin;
    double ymin = series[0].points.front().second, ymax = ymin;
    bool all_positive = true;
    for (const Series& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
            if (y <= 0.0) all_positive = false;
        }
    const bool log_y = all_positive;
    auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
    double tlo = ty(ymin), thi = ty(ymax);
    if (thi - tlo < 1e-12) {
        tlo -= 0.5;
        thi += 0.5;
    }
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;

    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft); };
    auto py = [&](double y) {
        return kBottom - (ty(y) - tlo) / (thi - tlo) * (kBottom - kTop);
    };

    std::map<std::string, const char*> color_of;
    std::vector<std::string> algo_order;
    for (const Series& s : series)
        if (!color_of.count(s.algo)) {
            color_of[s.algo] = kPalette[algo_order.size() % std::size(kPalette)];
            algo_order.push_back(s.algo);
        }

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
        << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kBottom << "\" stroke=\"black\"/>\n";

    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double frac = static_cast<double>(i) / ticks;
        const double x = xmin + frac * (xmax - xmin);
        const double gx = px(x);
        out << "<line x1=\"" << fmt(gx) << "\" y1=\"" << kBottom << "\" x2=\"" << fmt(gx)
            << "\" y2=\"" << kBottom + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(gx) << "\" y=\"" << kBottom + 20
            << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_tick(x) << "</text>\n";
        const double t = tlo + frac * (thi - tlo);
        const double yv = log_y ? std::pow(10.0, t) : t;
        const double gy = kBottom - frac * (kBottom - kTop);
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt(gy) << "\" x2=\"" << kLeft
            << "\" y2=\"" << fmt(gy) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(gy + 4)
            << "\" font-size=\"11\" text-anchor=\"end\">" << fmt_tick(yv) << "</text>\n";
    }
    out << "<text x=\"" << fmt((kLeft + kRight) / 2) << "\" y=\"" << kBottom + 38
        << "\" font-size=\"13\" text-anchor=\"middle\">score calls</text>\n";
    out << "<text x=\"18\" y=\"" << fmt((kTop + kBottom) / 2)
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << fmt((kTop + kBottom) / 2) << ")\">" << metric << (log_y ? " (log scale)" : "")
        << "</text>\n";

    for (const Series& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << color_of[s.algo]
            << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (const auto& [x, y] : s.points) {
            if (!first) out << ' ';
            out << fmt(px(x)) << ',' << fmt(py(y));
            first = false;
        }
        out << "\"/>\n";
    }

    double ly = kTop + 10;
    for (const std::string& algo : algo_order) {
        out << "<line x1=\"" << kRight + 14 << "\" y1=\"" << fmt(ly) << "\" x2=\""
            << kRight + 44 << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color_of[algo]
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kRight + 50 << "\" y=\"" << fmt(ly + 4)
            << "\" font-size=\"12\" class=\"legend\">" << algo << "</text>\n";
        ly += 18;
    }
    out << "</svg>\n";
    return out.str();
}

void render_convergence_svg(const std::vector<TraceRow>& rows, const std::string& metric,
                            const std::filesystem::path& path) {
    const std::string svg = render_convergence_svg(rows, metric);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << svg;
    if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace proxvi

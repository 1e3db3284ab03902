#include "cbfpred/svg.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace cbfpred {

namespace {

void fmt(std::string& out, double v) {
    // Two decimals is plenty at pixel scale and keeps the bytes stable.
    char buf[32];
    const double r = std::round(v * 100.0) / 100.0;
    const auto res = std::to_chars(buf, buf + sizeof buf, r == 0.0 ? 0.0 : r,
                                   std::chars_format::fixed, 2);
    out.append(buf, res.ptr);
}

struct Mapper {
    double x0, y1, scale;
    double px(double wx) const { return (wx - x0) * scale; }
    double py(double wy) const { return (y1 - wy) * scale; }
};

void attr(std::string& out, const char* name, double v) {
    out += ' ';
    out += name;
    out += "=\"";
    fmt(out, v);
    out += '"';
}

}  // namespace

void write_trajectory_svg(const std::string& path, const ScenarioConfig& scn,
                          const RunLog* main_log, const RunLog* overlay_log) {
    double wx0 = scn.grid.x_min, wx1 = scn.grid.x_max;
    double wy0 = scn.grid.y_min, wy1 = scn.grid.y_max;
    auto grow = [&](const RunLog* log) {
        if (!log) return;
        for (const StepRecord& r : log->records) {
            wx0 = std::min(wx0, r.state.x);
            wx1 = std::max(wx1, r.state.x);
            wy0 = std::min(wy0, r.state.y);
            wy1 = std::max(wy1, r.state.y);
        }
    };
    grow(main_log);
    grow(overlay_log);
    const double margin = 2.0;
    wx0 -= margin;
    wx1 += margin;
    wy0 -= margin;
    wy1 += margin;

    const double scale = 20.0;  // px per meter
    const Mapper m{wx0, wy1, scale};
    const double width = (wx1 - wx0) * scale, height = (wy1 - wy0) * scale;

    std::string s;
    s.reserve(1 << 16);
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
    fmt(s, width);
    s += "\" height=\"";
    fmt(s, height);
    s += "\" viewBox=\"0 0 ";
    fmt(s, width);
    s += ' ';
    fmt(s, height);
    s += "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

    // Reference line.
    s += "<line";
    attr(s, "x1", m.px(wx0 + margin));
    attr(s, "y1", m.py(scn.nominal.y_ref));
    attr(s, "x2", m.px(wx1 - margin));
    attr(s, "y2", m.py(scn.nominal.y_ref));
    s += " stroke=\"#d32f2f\" stroke-width=\"2\"/>\n";

    // Computed-region boundary and obstacles.
    for (const Circle& c : scn.obstacles.circles) {
        s += "<circle";
        attr(s, "cx", m.px(c.cx));
        attr(s, "cy", m.py(c.cy));
        attr(s, "r", (c.radius + scn.grid.mask_threshold) * scale);
        s += " fill=\"none\" stroke=\"#2e7d32\" stroke-width=\"1.5\" "
             "stroke-dasharray=\"8 6\"/>\n";
    }
    for (const Circle& c : scn.obstacles.circles) {
        s += "<circle";
        attr(s, "cx", m.px(c.cx));
        attr(s, "cy", m.py(c.cy));
        attr(s, "r", c.radius * scale);
        s += " fill=\"#d7d7d7\" stroke=\"#444444\" stroke-width=\"1.5\"/>\n";
    }

    auto polyline = [&](const RunLog& log, const char* color, double width_px) {
        if (log.records.empty()) return;
        s += "<polyline points=\"";
        for (const StepRecord& r : log.records) {
            fmt(s, m.px(r.state.x));
            s += ',';
            fmt(s, m.py(r.state.y));
            s += ' ';
        }
        fmt(s, m.px(log.final_state.x));
        s += ',';
        fmt(s, m.py(log.final_state.y));
        s += "\" fill=\"none\" stroke=\"";
        s += color;
        s += "\" stroke-width=\"";
        fmt(s, width_px);
        s += "\"/>\n";
    };

    if (overlay_log) polyline(*overlay_log, "#9e9e9e", 2.5);
    if (main_log) {
        polyline(*main_log, "#1565c0", 3.0);
        // Heading ticks roughly once per simulated second.
        const std::size_t n = main_log->records.size();
        std::size_t stride = 1;
        if (n > 1) {
            const double total_t = main_log->records.back().t - main_log->records.front().t;
            if (total_t > 0.0)
                stride = std::max<std::size_t>(
                    1, static_cast<std::size_t>(static_cast<double>(n - 1) / total_t));
        }
        for (std::size_t i = 0; i < n; i += stride) {
            const StepRecord& r = main_log->records[i];
            const double tick = 0.6;
            s += "<line";
            attr(s, "x1", m.px(r.state.x));
            attr(s, "y1", m.py(r.state.y));
            attr(s, "x2", m.px(r.state.x + tick * std::cos(r.state.psi)));
            attr(s, "y2", m.py(r.state.y + tick * std::sin(r.state.psi)));
            s += " stroke=\"#1565c0\" stroke-width=\"1\"/>\n";
        }
        const StepRecord& first = main_log->records.front();
        s += "<circle";
        attr(s, "cx", m.px(first.state.x));
        attr(s, "cy", m.py(first.state.y));
        s += " r=\"4\" fill=\"#1565c0\"/>\n";
    }

    if (!scn.name.empty()) {
        s += "<text x=\"8\" y=\"18\" font-family=\"monospace\" font-size=\"14\" "
             "fill=\"#333333\">";
        s += scn.name;
        s += "</text>\n";
    }
    s += "</svg>\n";

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("svg: cannot open '" + path + "'");
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw FormatError("svg: write failed for '" + path + "'");
}

}  // namespace cbfpred

#include "core/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace efn::eval {

namespace {

std::string fmt(double v) {
    if (v < 0.0) return "";  // sentinel for "not applicable"
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "report: cannot open '" + path + "'");
    f << content;
    require(f.good(), "report: write failed for '" + path + "'");
}

// minimal bar chart; categories in given order, values in [0,1]
std::string svg_bars(const std::string& title,
                     const std::vector<std::pair<std::string, double>>& bars) {
    const int w = 640, h = 400, margin = 60;
    const int plot_w = w - 2 * margin, plot_h = h - 2 * margin;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
       << h << "\">\n";
    os << "<text x=\"" << w / 2 << "\" y=\"30\" text-anchor=\"middle\" font-size=\"16\">"
       << title << "</text>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin
       << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
       << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
    const int n = static_cast<int>(bars.size());
    const double slot = static_cast<double>(plot_w) / n;
    for (int i = 0; i < n; ++i) {
        const double v = std::clamp(bars[i].second, 0.0, 1.0);
        const double bh = v * plot_h;
        const double x = margin + i * slot + slot * 0.15;
        const double y = h - margin - bh;
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                      "fill=\"#4878a8\"/>\n",
                      x, y, slot * 0.7, bh);
        os << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%d\" text-anchor=\"middle\" "
                      "font-size=\"12\">%s</text>\n",
                      margin + (i + 0.5) * slot, h - margin + 20, bars[i].first.c_str());
        os << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
                      "font-size=\"12\">%.3f</text>\n",
                      margin + (i + 0.5) * slot, y - 6, v);
        os << buf;
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_line(const std::string& title,
                     const std::vector<std::pair<double, double>>& points) {
    const int w = 640, h = 400, margin = 60;
    const int plot_w = w - 2 * margin, plot_h = h - 2 * margin;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
       << h << "\">\n";
    os << "<text x=\"" << w / 2 << "\" y=\"30\" text-anchor=\"middle\" font-size=\"16\">"
       << title << "</text>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin
       << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
       << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
    double xmin = points.front().first, xmax = points.back().first;
    if (xmax <= xmin) xmax = xmin + 1.0;
    std::ostringstream path;
    for (size_t i = 0; i < points.size(); ++i) {
        const double px =
            margin + (points[i].first - xmin) / (xmax - xmin) * plot_w;
        const double py = h - margin - std::clamp(points[i].second, 0.0, 1.0) * plot_h;
        path << (i == 0 ? "M" : "L") << px << " " << py << " ";
        char buf[256];
        std::snprintf(buf, sizeof(buf), "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"4\" "
                                        "fill=\"#a84848\"/>\n", px, py);
        os << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%d\" text-anchor=\"middle\" "
                      "font-size=\"12\">%.1f</text>\n",
                      px, h - margin + 20, points[i].first);
        os << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
                      "font-size=\"12\">%.3f</text>\n",
                      px, py - 10, points[i].second);
        os << buf;
    }
    os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"#a84848\" "
       << "stroke-width=\"2\"/>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace

std::string report_csv(const ExperimentReport& report) {
    std::ostringstream os;
    os << "experiment,subject_id,ratio,phases,condition,n_epochs,tp,tn,fp,fn,"
          "accuracy,p_lle,seed\n";
    for (const auto& r : report.rows) {
        os << r.experiment << ",";
        if (r.subject_id >= 0) os << r.subject_id;
        os << "," << fmt(r.ratio) << "," << r.phases << "," << r.condition << ","
           << r.n_epochs << "," << r.tp << "," << r.tn << "," << r.fp << "," << r.fn
           << "," << fmt(r.acc) << "," << fmt(r.p_lle) << "," << r.seed << "\n";
    }
    return os.str();
}

int emit_report(const ExperimentReport& report, const std::string& out_dir,
                const std::string& basename) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/" + basename + ".csv", report_csv(report));

    std::set<std::string> families;
    for (const auto& r : report.rows) families.insert(r.experiment);

    int charts = 0;
    for (const auto& fam : families) {
        std::string svg;
        if (fam == "ratio_sweep") {
            std::map<double, std::pair<double, int>> by_ratio;
            for (const auto& r : report.rows)
                if (r.experiment == fam && r.acc >= 0.0) {
                    by_ratio[r.ratio].first += r.acc;
                    by_ratio[r.ratio].second += 1;
                }
            std::vector<std::pair<double, double>> pts;
            for (const auto& [ratio, agg] : by_ratio)
                pts.emplace_back(ratio, agg.first / agg.second);
            svg = svg_line("mean accuracy vs training ratio", pts);
        } else if (fam == "lle") {
            std::vector<std::pair<std::string, double>> bars;
            for (const auto& r : report.rows)
                if (r.experiment == fam && r.p_lle >= 0.0)
                    bars.emplace_back(r.condition, r.p_lle);
            svg = svg_bars("fraction classified as low listening effort", bars);
        } else {  // ablation and other accuracy families: mean per phases tag
            std::map<std::string, std::pair<double, int>> by_phase;
            for (const auto& r : report.rows)
                if (r.experiment == fam && r.acc >= 0.0) {
                    by_phase[r.phases].first += r.acc;
                    by_phase[r.phases].second += 1;
                }
            std::vector<std::pair<std::string, double>> bars;
            for (const auto& [phases, agg] : by_phase)
                bars.emplace_back("P" + phases, agg.first / agg.second);
            svg = svg_bars(fam + ": mean accuracy per configuration", bars);
        }
        write_file(out_dir + "/" + basename + "_" + fam + ".svg", svg);
        ++charts;
    }
    return charts;
}

}  // namespace efn::eval

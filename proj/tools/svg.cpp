#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace cpo::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400, kMargin = 50;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

void header(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
       << escape(title) << "</text>\n";
}

} // namespace

std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values) {
    std::ostringstream os;
    header(os, title);
    const double top = std::max(1e-300, *std::max_element(values.begin(), values.end(), [](double a, double b) {
        return a < b;
    }));
    const double plot_w = kWidth - 2 * kMargin, plot_h = kHeight - 2 * kMargin;
    const double slot = plot_w / static_cast<double>(std::max<std::size_t>(values.size(), 1));
    os << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
       << kHeight - kMargin << "\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double h = values[i] > 0 ? plot_h * values[i] / top : 0.0;
        const double x = kMargin + slot * static_cast<double>(i) + 0.1 * slot;
        os << "<rect class=\"bar\" x=\"" << num(x) << "\" y=\"" << num(kHeight - kMargin - h) << "\" width=\""
           << num(0.8 * slot) << "\" height=\"" << num(h) << "\" fill=\"steelblue\" data-label=\""
           << escape(labels[i]) << "\" data-value=\"" << num(values[i]) << "\"><title>" << escape(labels[i]) << ": "
           << num(values[i]) << "</title></rect>\n";
        if (values.size() <= 32)
            os << "<text x=\"" << num(x + 0.4 * slot) << "\" y=\"" << kHeight - kMargin + 14
               << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << escape(labels[i])
               << "</text>\n";
    }
    os << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
       << "font-size=\"10\">" << num(top) << "</text>\n</svg>\n";
    return os.str();
}

std::string scatter(const std::string& title, const std::vector<Series>& series) {
    std::ostringstream os;
    header(os, title);
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series)
        for (Index j = 0; j < s.points.cols(); ++j) {
            xmin = std::min(xmin, s.points(0, j));
            xmax = std::max(xmax, s.points(0, j));
            ymin = std::min(ymin, s.points(1, j));
            ymax = std::max(ymax, s.points(1, j));
        }
    if (!(xmax > xmin)) {
        xmin -= 1;
        xmax += 1;
    }
    if (!(ymax > ymin)) {
        ymin -= 1;
        ymax += 1;
    }
    const double span = std::max(xmax - xmin, ymax - ymin);
    const double scale = std::min(kWidth, kHeight) - 2 * kMargin;
    auto px = [&](double v) { return kMargin + (v - xmin) / span * scale; };
    auto py = [&](double v) { return kHeight - kMargin - (v - ymin) / span * scale; };
    double legend_y = kMargin;
    for (const auto& s : series) {
        os << "<g class=\"series\" data-label=\"" << escape(s.label) << "\" fill=\"" << s.color << "\">\n";
        for (Index j = 0; j < s.points.cols(); ++j)
            os << "<circle cx=\"" << num(px(s.points(0, j))) << "\" cy=\"" << num(py(s.points(1, j))) << "\" r=\""
               << num(s.radius) << "\"/>\n";
        os << "</g>\n<text x=\"" << kWidth - kMargin - 100 << "\" y=\"" << legend_y << "\" fill=\"" << s.color
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(s.label) << "</text>\n";
        legend_y += 16;
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace cpo::svg

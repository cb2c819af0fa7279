#include "svg.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace coevo::cli {
namespace {

constexpr double kMargin = 0.5;
constexpr double kPixelsPerUnit = 40.0;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x == 0.0 ? 0.0 : x);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string chain_svg(const shape::BrickChain& chain, const std::string& caption) {
    const std::vector<shape::Rectangle> rects = shape::chain_vertices(chain);
    double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
    double max_x = -min_x, max_y = -min_x;
    for (const shape::Rectangle& r : rects) {
        for (const Vec2& p : r) {
            min_x = std::min(min_x, p.x);
            min_y = std::min(min_y, p.y);
            max_x = std::max(max_x, p.x);
            max_y = std::max(max_y, p.y);
        }
    }
    const double w = max_x - min_x + 2 * kMargin;
    const double h = max_y - min_y + 2 * kMargin;

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w * kPixelsPerUnit) + "\" height=\"" +
                      num(h * kPixelsPerUnit) + "\" viewBox=\"" + num(min_x - kMargin) + " " + num(-max_y - kMargin) +
                      " " + num(w) + " " + num(h) + "\">\n";
    if (!caption.empty()) out += "  <title>" + escape(caption) + "</title>\n";
    out += "  <g transform=\"scale(1,-1)\" fill=\"#c8793c\" stroke=\"#3b2412\" stroke-width=\"0.02\">\n";
    for (const shape::Rectangle& r : rects) {
        out += "    <polygon points=\"";
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += ' ';
            out += num(r[i].x) + "," + num(r[i].y);
        }
        out += "\"/>\n";
    }
    out += "  </g>\n</svg>\n";
    return out;
}

}  // namespace coevo::cli

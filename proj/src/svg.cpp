#include "causalstab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace cstab {

namespace {

constexpr int kPanelWidth = 360;
constexpr int kPanelHeight = 300;
constexpr int kMarginLeft = 55;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 45;
constexpr int kPanelGap = 70;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Panel {
  int x0;
  double alpha_max;

  double sx(double alpha) const {
    return x0 + alpha / alpha_max * kPanelWidth;
  }
  double sy(double value) const {
    return kMarginTop + (1.0 - value) * kPanelHeight;
  }
};

}  // namespace

std::string render_results_svg(const std::vector<ResultRow>& table) {
  // Stable method order: first appearance in the table.
  std::vector<std::string> methods;
  for (const auto& row : table) {
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) {
      methods.push_back(row.method);
    }
  }
  double alpha_max = 0.0;
  for (const auto& row : table) alpha_max = std::max(alpha_max, row.alpha);
  if (alpha_max <= 0.0) alpha_max = 0.5;

  const int width = kMarginLeft * 2 + kPanelWidth * 2 + kPanelGap + 130;
  const int height = kMarginTop + kPanelHeight + kMarginBottom;
  Panel tpr_panel{kMarginLeft, alpha_max};
  Panel fdr_panel{kMarginLeft + kPanelWidth + kPanelGap, alpha_max};

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto draw_axes = [&](const Panel& panel, const std::string& title) {
    const double x0 = panel.x0;
    const double x1 = panel.x0 + kPanelWidth;
    const double y0 = kMarginTop;
    const double y1 = kMarginTop + kPanelHeight;
    svg += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" +
           std::to_string(kPanelWidth) + "\" height=\"" + std::to_string(kPanelHeight) +
           "\" fill=\"none\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(y0 - 12) +
           "\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
    for (int i = 0; i <= 5; ++i) {
      const double frac = i / 5.0;
      const double gx = x0 + frac * kPanelWidth;
      const double gy = y1 - frac * kPanelHeight;
      svg += "<line x1=\"" + num(gx) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(gx) +
             "\" y2=\"" + num(y1 + 5) + "\" stroke=\"#333333\"/>\n";
      svg += "<text x=\"" + num(gx) + "\" y=\"" + num(y1 + 20) +
             "\" text-anchor=\"middle\" font-size=\"11\">" + num(frac * panel.alpha_max) +
             "</text>\n";
      svg += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(gy) + "\" x2=\"" + num(x0) +
             "\" y2=\"" + num(gy) + "\" stroke=\"#333333\"/>\n";
      svg += "<text x=\"" + num(x0 - 9) + "\" y=\"" + num(gy + 4) +
             "\" text-anchor=\"end\" font-size=\"11\">" + num(frac) + "</text>\n";
    }
    svg += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(y1 + 38) +
           "\" text-anchor=\"middle\" font-size=\"13\">nominal level</text>\n";
  };

  draw_axes(tpr_panel, "Mean TPR");
  draw_axes(fdr_panel, "Mean FDR");

  // Perfect-control diagonal on the FDR panel.
  svg += "<line x1=\"" + num(fdr_panel.sx(0.0)) + "\" y1=\"" + num(fdr_panel.sy(0.0)) +
         "\" x2=\"" + num(fdr_panel.sx(alpha_max)) + "\" y2=\"" +
         num(fdr_panel.sy(std::min(alpha_max, 1.0))) +
         "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const std::string color = kPalette[mi % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string tpr_points, fdr_points;
    for (const auto& row : table) {
      if (row.method != methods[mi]) continue;
      tpr_points += num(tpr_panel.sx(row.alpha)) + "," +
                    num(tpr_panel.sy(std::clamp(row.mean_tpr, 0.0, 1.0))) + " ";
      fdr_points += num(fdr_panel.sx(row.alpha)) + "," +
                    num(fdr_panel.sy(std::clamp(row.mean_fdr, 0.0, 1.0))) + " ";
    }
    for (const std::string& pts : {tpr_points, fdr_points}) {
      svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.8\"/>\n";
    }
    // Legend to the right of the FDR panel.
    const double lx = fdr_panel.x0 + kPanelWidth + 15;
    const double ly = kMarginTop + 16 + 20.0 * static_cast<double>(mi);
    svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(lx + 22) +
           "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(lx + 28) + "\" y=\"" + num(ly) + "\" font-size=\"12\">" +
           methods[mi] + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace cstab

// Copyright 2026 The miaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "miaudit/svg_plot.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace miaudit {
namespace {

constexpr double kWidth = 520.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr double kMinDecade = -3.0;

double ToPixelX(double v) {
  const double d = std::clamp(std::log10(std::max(v, 1e-300)), kMinDecade, 0.0);
  return kLeft + (d - kMinDecade) / -kMinDecade * (kWidth - kLeft - kRight);
}

double ToPixelY(double v) {
  const double d = std::clamp(std::log10(std::max(v, 1e-300)), kMinDecade, 0.0);
  return kHeight - kBottom - (d - kMinDecade) / -kMinDecade * (kHeight - kTop - kBottom);
}

std::string Escape(const std::string& s) {
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

}  // namespace

std::string RenderLogLogRoc(const std::string& title,
                            std::span<const PlotSeries> series) {
  std::string svg = absl::StrFormat(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
      "viewBox=\"0 0 %.0f %.0f\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
      kWidth, kHeight, kWidth, kHeight);
  absl::StrAppendFormat(&svg,
                        "<text x=\"%.1f\" y=\"22\" text-anchor=\"middle\" "
                        "font-size=\"14\">%s</text>\n",
                        (kLeft + kWidth - kRight) / 2, Escape(title));
  // Grid and tick labels at each decade.
  for (int d = -3; d <= 0; ++d) {
    const double v = std::pow(10.0, d);
    const double x = ToPixelX(v);
    const double y = ToPixelY(v);
    absl::StrAppendFormat(&svg,
                          "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                          "stroke=\"#ddd\"/>\n",
                          x, kTop, x, kHeight - kBottom);
    absl::StrAppendFormat(&svg,
                          "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                          "stroke=\"#ddd\"/>\n",
                          kLeft, y, kWidth - kRight, y);
    absl::StrAppendFormat(&svg,
                          "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">1e%d</text>\n",
                          x, kHeight - kBottom + 18, d);
    absl::StrAppendFormat(&svg,
                          "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">1e%d</text>\n",
                          kLeft - 6, y + 4, d);
  }
  absl::StrAppendFormat(&svg,
                        "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                        "fill=\"none\" stroke=\"black\"/>\n",
                        kLeft, kTop, kWidth - kLeft - kRight, kHeight - kTop - kBottom);
  absl::StrAppendFormat(&svg,
                        "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">FPR</text>\n",
                        (kLeft + kWidth - kRight) / 2, kHeight - 18);
  absl::StrAppendFormat(&svg,
                        "<text x=\"18\" y=\"%.1f\" text-anchor=\"middle\" "
                        "transform=\"rotate(-90 18 %.1f)\">TPR</text>\n",
                        (kTop + kHeight - kBottom) / 2, (kTop + kHeight - kBottom) / 2);
  absl::StrAppendFormat(&svg,
                        "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                        "stroke=\"gray\" stroke-dasharray=\"2,3\"/>\n",
                        ToPixelX(1e-3), ToPixelY(1e-3), ToPixelX(1.0), ToPixelY(1.0));

  double legend_y = kTop + 10;
  for (const PlotSeries& s : series) {
    std::string points;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] <= 0.0 && s.y[i] <= 0.0) continue;
      absl::StrAppendFormat(&points, "%.2f,%.2f ", ToPixelX(s.x[i]), ToPixelY(s.y[i]));
    }
    absl::StrAppendFormat(&svg,
                          "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\"%s "
                          "points=\"%s\"/>\n",
                          s.color, s.dashed ? " stroke-dasharray=\"6,4\"" : "", points);
    for (const ErrorBar& bar : s.error_bars) {
      const double x = ToPixelX(bar.x);
      absl::StrAppendFormat(&svg,
                            "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                            "stroke=\"%s\"/>\n",
                            x, ToPixelY(bar.lo), x, ToPixelY(bar.hi), s.color);
    }
    absl::StrAppendFormat(&svg,
                          "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                          "stroke=\"%s\" stroke-width=\"2\"%s/>\n"
                          "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n",
                          kWidth - kRight + 10, legend_y, kWidth - kRight + 35, legend_y,
                          s.color, s.dashed ? " stroke-dasharray=\"6,4\"" : "",
                          kWidth - kRight + 40, legend_y + 4, Escape(s.label));
    legend_y += 18;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace miaudit

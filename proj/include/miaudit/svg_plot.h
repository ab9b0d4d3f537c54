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

#ifndef MIAUDIT_SVG_PLOT_H_
#define MIAUDIT_SVG_PLOT_H_

#include <span>
#include <string>
#include <vector>

namespace miaudit {

struct ErrorBar {
  double x = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct PlotSeries {
  std::string label;
  std::string color = "#1f77b4";
  bool dashed = false;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<ErrorBar> error_bars;
};

// Self-contained log-log ROC plot over [1e-3, 1] on both axes with the
// chance diagonal. Points outside the range are clipped to the border.
std::string RenderLogLogRoc(const std::string& title,
                            std::span<const PlotSeries> series);

}  // namespace miaudit

#endif  // MIAUDIT_SVG_PLOT_H_

/* Copyright 2026 The vsrcap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Static SVG figures and the TSV reader used to feed them.

#ifndef VSRCAP_PLOT_HPP_
#define VSRCAP_PLOT_HPP_

#include <string>
#include <utility>
#include <vector>

namespace vsrcap {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Numeric values of a named column; throws kInvalidInput when absent.
  std::vector<double> column(const std::string& name) const;
};

Table parse_tsv(const std::string& text);
Table read_tsv(const std::string& path);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series);
std::string bar_chart_svg(const std::string& title,
                          const std::vector<std::pair<std::string, double>>& bars);
std::string scatter_svg(const std::string& title, const std::string& x_label,
                        const std::string& y_label, const std::vector<double>& x,
                        const std::vector<double>& y);

}  // namespace vsrcap

#endif  // VSRCAP_PLOT_HPP_

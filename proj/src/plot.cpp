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

#include "vsrcap/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vsrcap/error.hpp"

namespace vsrcap {

namespace {

constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const {
    return kLeft + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * (kW - kLeft - kRight);
  }
  double py(double y) const {
    return kH - kBottom - (y1 > y0 ? (y - y0) / (y1 - y0) : 0.5) * (kH - kTop - kBottom);
  }
};

Frame frame_of(const std::vector<double>& xs, const std::vector<double>& ys) {
  Frame f{0, 1, 0, 1};
  if (!xs.empty()) {
    f.x0 = *std::min_element(xs.begin(), xs.end());
    f.x1 = *std::max_element(xs.begin(), xs.end());
  }
  if (!ys.empty()) {
    f.y0 = std::min(0.0, *std::min_element(ys.begin(), ys.end()));
    f.y1 = *std::max_element(ys.begin(), ys.end());
  }
  if (f.x1 <= f.x0) f.x1 = f.x0 + 1;
  if (f.y1 <= f.y0) f.y1 = f.y0 + 1;
  return f;
}

std::string open_svg(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" +
         num(kH) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
         "<text x=\"" + num(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(title) + "</text>\n";
}

std::string axes(const Frame& f, const std::string& xl, const std::string& yl) {
  std::string s;
  const double bx = kH - kBottom, rx = kW - kRight;
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(bx) + "\" x2=\"" + num(rx) + "\" y2=\"" +
       num(bx) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
       "\" y2=\"" + num(bx) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = f.x0 + (f.x1 - f.x0) * k / 4.0, y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    s += "<text x=\"" + num(f.px(x)) + "\" y=\"" + num(bx + 16) +
         "\" text-anchor=\"middle\">" + num(x) + "</text>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(f.py(y) + 4) +
         "\" text-anchor=\"end\">" + num(y) + "</text>\n";
  }
  s += "<text x=\"" + num((kLeft + rx) / 2) + "\" y=\"" + num(kH - 12) +
       "\" text-anchor=\"middle\">" + escape(xl) + "</text>\n";
  s += "<text x=\"16\" y=\"" + num((kTop + bx) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num((kTop + bx) / 2) + ")\">" + escape(yl) + "</text>\n";
  return s;
}

}  // namespace

std::vector<double> Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorCode::kInvalidInput, "no column " + name);
  const auto k = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  for (const auto& r : rows) {
    if (k >= r.size()) throw Error(ErrorCode::kParseError, "short row in column " + name);
    out.push_back(std::stod(r[k]));
  }
  return out;
}

Table parse_tsv(const std::string& text) {
  Table t;
  std::istringstream is(text);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

Table read_tsv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_tsv(ss.str());
}

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series) {
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  const Frame f = frame_of(xs, ys);
  std::string out = open_svg(title) + axes(f, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % 6];
    std::string pts;
    for (std::size_t i = 0; i < series[k].x.size() && i < series[k].y.size(); ++i) {
      pts += num(f.px(series[k].x[i])) + "," + num(f.py(series[k].y[i])) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    const double ly = kTop + 18.0 * static_cast<double>(k);
    out += "<rect x=\"" + num(kW - kRight + 12) + "\" y=\"" + num(ly) +
           "\" width=\"12\" height=\"12\" fill=\"" + color + "\"/>\n";
    out += "<text x=\"" + num(kW - kRight + 30) + "\" y=\"" + num(ly + 10) + "\">" +
           escape(series[k].name) + "</text>\n";
  }
  return out + "</svg>\n";
}

std::string bar_chart_svg(const std::string& title,
                          const std::vector<std::pair<std::string, double>>& bars) {
  std::vector<double> ys;
  for (const auto& b : bars) ys.push_back(b.second);
  ys.push_back(1.0);
  Frame f = frame_of({0.0, static_cast<double>(bars.size())}, ys);
  std::string out = open_svg(title);
  const double slot = (kW - kLeft - kRight) / std::max<double>(1.0, static_cast<double>(bars.size()));
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kH - kBottom) + "\" x2=\"" +
         num(kW - kRight) + "\" y2=\"" + num(kH - kBottom) + "\" stroke=\"black\"/>\n";
  for (std::size_t k = 0; k < bars.size(); ++k) {
    const double x = kLeft + slot * static_cast<double>(k) + slot * 0.15;
    const double top = f.py(bars[k].second);
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(slot * 0.7) +
           "\" height=\"" + num(kH - kBottom - top) + "\" fill=\"" + kColors[k % 6] + "\"/>\n";
    out += "<text x=\"" + num(x + slot * 0.35) + "\" y=\"" + num(top - 4) +
           "\" text-anchor=\"middle\">" + num(bars[k].second) + "</text>\n";
    out += "<text x=\"" + num(x + slot * 0.35) + "\" y=\"" + num(kH - kBottom + 16) +
           "\" text-anchor=\"middle\">" + escape(bars[k].first) + "</text>\n";
  }
  return out + "</svg>\n";
}

std::string scatter_svg(const std::string& title, const std::string& x_label,
                        const std::string& y_label, const std::vector<double>& x,
                        const std::vector<double>& y) {
  const Frame f = frame_of(x, y);
  std::string out = open_svg(title) + axes(f, x_label, y_label);
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    out += "<circle cx=\"" + num(f.px(x[i])) + "\" cy=\"" + num(f.py(y[i])) +
           "\" r=\"3\" fill=\"" + kColors[0] + "\" fill-opacity=\"0.6\"/>\n";
  }
  return out + "</svg>\n";
}

}  // namespace vsrcap

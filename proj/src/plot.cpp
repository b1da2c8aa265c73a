#include "mfh/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

#include "mfh/core.hpp"
#include "mfh/error.hpp"
#include "mfh/io.hpp"

namespace mfh {

namespace {

constexpr double kW = 640, kH = 420, kL = 70, kR = 20, kT = 40, kB = 50;

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double cell(const std::vector<std::string>& row, std::size_t col, int row_no) {
  if (col >= row.size())
    throw MalformedCsv("row " + std::to_string(row_no) + ": no column " + std::to_string(col));
  const std::string& s = row[col];
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw MalformedCsv("row " + std::to_string(row_no) + ": non-numeric token '" + s + "'");
  return v;
}

std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, p);
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

struct Axis {
  double lo, hi;
  bool log;
  std::vector<std::pair<double, std::string>> ticks;
};

Axis make_axis(const std::vector<double>& v, bool log) {
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  Axis a{lo, hi, log, {}};
  if (log) {
    a.lo = std::floor(lo);
    a.hi = std::ceil(hi);
    if (a.hi == a.lo) a.hi = a.lo + 1;
    const int step = std::max(1, static_cast<int>(std::ceil((a.hi - a.lo) / 8)));
    for (int k = static_cast<int>(a.lo); k <= a.hi; k += step) a.ticks.push_back({k, "2^" + std::to_string(k)});
  } else {
    if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double raw = (hi - lo) / 6;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    a.lo = std::floor(lo / step) * step;
    a.hi = std::ceil(hi / step) * step;
    for (double t = a.lo; t <= a.hi + step * 1e-9; t += step) {
      const double r = std::abs(t) < step * 1e-9 ? 0.0 : t;
      a.ticks.push_back({r, format_double(std::round(r / step) * step)});
    }
  }
  return a;
}

}  // namespace

std::string render_svg(const std::string& csv_text, const PlotStyle& style) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<std::string> header;
  std::vector<double> xs, ys;
  int row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    auto row = split(line);
    if (header.empty()) {
      header = row;
      continue;
    }
    double x = cell(row, style.x_col, row_no);
    double y = cell(row, style.y_col, row_no);
    if (style.log_x) {
      if (x <= 0) throw MalformedCsv("row " + std::to_string(row_no) + ": non-positive value on a log axis");
      x = std::log2(x);
    }
    if (style.log_y) {
      if (y <= 0) throw MalformedCsv("row " + std::to_string(row_no) + ": non-positive value on a log axis");
      y = std::log2(y);
    }
    xs.push_back(x);
    ys.push_back(y);
  }
  if (header.size() < 2) throw MalformedCsv("row 1: need at least two columns");
  if (style.x_col >= header.size() || style.y_col >= header.size())
    throw MalformedCsv("row 1: selected column missing from the header");
  if (xs.empty()) throw MalformedCsv("row 2: no data rows");

  const Axis ax = make_axis(xs, style.log_x), ay = make_axis(ys, style.log_y);
  auto px = [&](double x) { return kL + (x - ax.lo) / (ax.hi - ax.lo) * (kW - kL - kR); };
  auto py = [&](double y) { return kH - kB - (y - ay.lo) / (ay.hi - ay.lo) * (kH - kT - kB); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW
    << " " << kH << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty())
    o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(style.title)
      << "</text>\n";
  o << "<g stroke=\"black\" fill=\"none\"><line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR
    << "\" y2=\"" << kH - kB << "\"/><line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\""
    << kH - kB << "\"/></g>\n";
  for (const auto& [v, label] : ax.ticks)
    o << "<g class=\"xtick\"><line x1=\"" << num(px(v)) << "\" y1=\"" << kH - kB << "\" x2=\"" << num(px(v))
      << "\" y2=\"" << kH - kB + 5 << "\" stroke=\"black\"/><text x=\"" << num(px(v)) << "\" y=\"" << kH - kB + 18
      << "\" text-anchor=\"middle\">" << label << "</text></g>\n";
  for (const auto& [v, label] : ay.ticks)
    o << "<g class=\"ytick\"><line x1=\"" << kL - 5 << "\" y1=\"" << num(py(v)) << "\" x2=\"" << kL << "\" y2=\""
      << num(py(v)) << "\" stroke=\"black\"/><text x=\"" << kL - 8 << "\" y=\"" << num(py(v) + 4)
      << "\" text-anchor=\"end\">" << label << "</text></g>\n";
  o << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">"
    << escape(header[style.x_col]) << "</text>\n";
  o << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (kT + kH - kB) / 2 << ")\">" << escape(header[style.y_col]) << "</text>\n";

  o << "<path class=\"curve\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" d=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) o << (i ? " L" : "M") << num(px(xs[i])) << " " << num(py(ys[i]));
  o << "\"/>\n";

  if (style.fit && xs.size() >= 2) {
    const auto f = fit_line(xs, ys);
    const double x0 = *std::min_element(xs.begin(), xs.end()), x1 = *std::max_element(xs.begin(), xs.end());
    o << "<line class=\"fit\" x1=\"" << num(px(x0)) << "\" y1=\"" << num(py(f.intercept + f.slope * x0)) << "\" x2=\""
      << num(px(x1)) << "\" y2=\"" << num(py(f.intercept + f.slope * x1))
      << "\" stroke=\"#c0392b\" stroke-dasharray=\"5,3\"/>\n";
    o << "<text x=\"" << kW - kR << "\" y=\"" << kT - 4 << "\" text-anchor=\"end\" fill=\"#c0392b\">slope "
      << format_double(std::round(f.slope * 1e4) / 1e4) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void emit_plot(const std::filesystem::path& csv, const PlotStyle& style, const std::filesystem::path& svg) {
  write_text(svg, render_svg(read_text(csv), style));
}

}  // namespace mfh

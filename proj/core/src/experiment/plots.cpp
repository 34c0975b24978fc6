#include "insitu/experiment/plots.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "insitu/errors.hpp"

namespace insitu::experiment {

namespace {

namespace fs = std::filesystem;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

double parse_double(std::string_view s, bool* ok) {
  if (s == "nan" || s == "-nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  *ok = ec == std::errc() && p == s.data() + s.size() && !s.empty();
  return v;
}

template <typename T>
T parse_uint(std::string_view s, bool* ok) {
  T v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  *ok = ec == std::errc() && p == s.data() + s.size() && !s.empty();
  return v;
}

double column_value(const rl::RoundRecord& r, const std::string& column) {
  if (column == "mean_reward") return r.mean_reward;
  if (column == "metric") return r.metric;
  if (column == "sigma") return r.sigma;
  if (column == "kl") return r.kl;
  throw ConfigError("no plottable column '" + column + "'");
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

Series parse_metrics_csv(std::string_view text, std::string label, std::string_view source) {
  Series s;
  s.label = std::move(label);
  std::size_t line_no = 0;
  bool header_seen = false;
  auto fail = [&](const std::string& what) {
    throw FormatError(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != rl::kHistoryCsvHeader) {
        fail("expected header '" + std::string(rl::kHistoryCsvHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 7) fail("expected 7 columns, got " + std::to_string(cols.size()));
    rl::RoundRecord r;
    bool ok[7];
    r.round = parse_uint<std::size_t>(cols[0], &ok[0]);
    r.measurements = parse_uint<std::uint64_t>(cols[1], &ok[1]);
    ok[2] = ok[3] = ok[4] = ok[5] = ok[6] = true;
    r.seconds = parse_double(cols[2], &ok[2]);
    r.mean_reward = parse_double(cols[3], &ok[3]);
    r.metric = parse_double(cols[4], &ok[4]);
    r.sigma = parse_double(cols[5], &ok[5]);
    r.kl = parse_double(cols[6], &ok[6]);
    for (int i = 0; i < 7; ++i) {
      if (!ok[i]) fail("bad number '" + std::string(cols[i]) + "' in column " + std::to_string(i + 1));
    }
    s.records.push_back(r);
  }
  if (!header_seen) {
    line_no = 1;
    fail("empty file (missing header)");
  }
  return s;
}

Series read_metrics_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string label = path.parent_path().filename().string();
  if (path.filename() != "metrics.csv" || label.empty()) label = path.stem().string();
  return parse_metrics_csv(buf.str(), std::move(label), path.string());
}

std::vector<std::string> plotted_columns() { return {"metric", "mean_reward", "sigma", "kl"}; }

std::string render_svg(const std::vector<Series>& series, const std::string& column, XAxis x) {
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 160, kTop = 30, kBottom = 50;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;

  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool any = false;
  auto xval = [&](const rl::RoundRecord& r) {
    return x == XAxis::kMeasurements ? static_cast<double>(r.measurements) : r.seconds;
  };
  for (const Series& s : series) {
    for (const auto& r : s.records) {
      const double yv = column_value(r, column);
      const double xv = xval(r);
      if (!std::isfinite(yv) || !std::isfinite(xv)) continue;
      if (!any) {
        xmin = xmax = xv;
        ymin = ymax = yv;
        any = true;
      }
      xmin = std::min(xmin, xv);
      xmax = std::max(xmax, xv);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  }
  if (!any) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  auto px = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return kTop + ph - (v - ymin) / (ymax - ymin) * ph; };

  const std::string xlabel = x == XAxis::kMeasurements ? "measurements" : "seconds";
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
    << escape(column) << " vs " << xlabel << "</text>\n";
  // axes
  o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(kLeft + pw)
    << "\" y2=\"" << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
    << "\" y2=\"" << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    o << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 16)
      << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 4)
      << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
  }
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kH - 10)
    << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  o << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << num(kTop + ph / 2) << ")\">" << escape(column) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    std::string points;
    for (const auto& r : series[i].records) {
      const double yv = column_value(r, column);
      const double xv = xval(r);
      if (!std::isfinite(yv) || !std::isfinite(xv)) continue;
      if (!points.empty()) points += ' ';
      points += num(px(xv)) + "," + num(py(yv));
    }
    o << "<g>\n";
    if (!points.empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << points << "\"/>\n";
    }
    const double ly = kTop + 14.0 * static_cast<double>(i) + 6;
    o << "<line x1=\"" << num(kLeft + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\""
      << num(kLeft + pw + 30) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(kLeft + pw + 34) << "\" y=\"" << num(ly + 4) << "\">"
      << escape(series[i].label) << "</text>\n";
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<fs::path> emit_plots(const std::vector<fs::path>& csv_paths, const fs::path& out_dir) {
  std::vector<Series> series;
  for (const auto& p : csv_paths) series.push_back(read_metrics_csv(p));
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (const std::string& column : plotted_columns()) {
    for (XAxis x : {XAxis::kMeasurements, XAxis::kSeconds}) {
      const fs::path out = out_dir / (column + (x == XAxis::kMeasurements ? "_vs_measurements.svg"
                                                                          : "_vs_seconds.svg"));
      std::ofstream f(out, std::ios::binary);
      f << render_svg(series, column, x);
      if (!f) throw FormatError("cannot write " + out.string());
      written.push_back(out);
    }
  }
  return written;
}

}  // namespace insitu::experiment

#include "punchline/report.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

namespace punchline {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

fs::path with_suffix(const fs::path& stem, const char* suffix) { return fs::path(stem.string() + suffix); }

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Frame {
  double width = 720, height = 440, left = 70, right = 170, top = 40, bottom = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void axes(std::ostream& svg, const Frame& f, const std::string& title, const std::string& x_label,
          const std::string& y_label, bool numeric_x) {
  svg << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";
  svg << "<line x1=\"" << f.left << "\" y1=\"" << f.height - f.bottom << "\" x2=\"" << f.width - f.right
      << "\" y2=\"" << f.height - f.bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\"" << f.height - f.bottom
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 5.0;
    svg << "<text x=\"" << f.left - 6 << "\" y=\"" << f.py(y) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
        << format_number(std::round(y * 1000) / 1000) << "</text>\n";
    svg << "<line x1=\"" << f.left << "\" y1=\"" << f.py(y) << "\" x2=\"" << f.width - f.right << "\" y2=\""
        << f.py(y) << "\" stroke=\"#ddd\"/>\n";
    if (numeric_x) {
      const double x = f.x0 + (f.x1 - f.x0) * i / 5.0;
      svg << "<text x=\"" << f.px(x) << "\" y=\"" << f.height - f.bottom + 16
          << "\" text-anchor=\"middle\" font-size=\"11\">" << format_number(std::round(x * 1000) / 1000)
          << "</text>\n";
    }
  }
  svg << "<text x=\"" << (f.left + f.width - f.right) / 2 << "\" y=\"" << f.height - 18
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << (f.top + f.height - f.bottom) / 2
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(y_label) << "</text>\n";
}

void legend(std::ostream& svg, const Frame& f, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = f.top + 10 + 18.0 * static_cast<double>(i);
    svg << "<rect x=\"" << f.width - f.right + 12 << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\""
        << kPalette[i % kPalette.size()] << "\"/>\n";
    svg << "<text x=\"" << f.width - f.right + 30 << "\" y=\"" << y + 1 << "\" font-size=\"11\">"
        << xml_escape(names[i]) << "</text>\n";
  }
}

}  // namespace

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_field(header[i]);
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::invalid_argument("CSV row width differs from the header");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << '\n';
  }
}

void write_json(const fs::path& path, const Json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json to_json(const MetricsReport& r) {
  Json j = {{"name", r.name}, {"stratum", r.stratum}, {"n", r.n}, {"omitted", r.omitted}};
  if (!r.omitted) {
    j["point_estimate"] = number(r.point_estimate);
    j["ci_low"] = number(r.ci_low);
    j["ci_high"] = number(r.ci_high);
  }
  return j;
}

Json to_json(const TTestResult& t) {
  return {{"t", number(t.t)},          {"df", number(t.df)},
          {"p_value", number(t.p_value)}, {"defined", t.defined},
          {"significant", t.significant}, {"mean_difference", number(t.mean_difference)},
          {"n", t.n}};
}

Json to_json(const HeadMatrix& m) {
  Json rows = Json::array();
  for (int l = 0; l < m.layers; ++l) {
    for (int h = 0; h < m.heads; ++h) rows.push_back({{"layer", l + 1}, {"head", h + 1}, {"value", number(m.at(l, h))}});
  }
  return rows;
}

void write_head_matrix_csv(const fs::path& path, const HeadMatrix& m) {
  std::vector<std::vector<std::string>> rows;
  for (int l = 0; l < m.layers; ++l) {
    for (int h = 0; h < m.heads; ++h) {
      rows.push_back({std::to_string(l + 1), std::to_string(h + 1), format_number(m.at(l, h))});
    }
  }
  write_csv(path, {"layer", "head", "value"}, rows);
}

void emit_heatmap(const fs::path& stem, const HeadMatrix& m, const std::string& title) {
  write_head_matrix_csv(with_suffix(stem, ".csv"), m);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const double v : m.values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  const double cell = 30, left = 60, top = 50;
  const double width = left + cell * m.heads + 120, height = top + cell * m.layers + 50;
  auto svg = open_out(with_suffix(stem, ".svg"));
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";
  for (int l = 0; l < m.layers; ++l) {
    svg << "<text x=\"" << left - 8 << "\" y=\"" << top + cell * l + cell / 2 + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << l + 1 << "</text>\n";
    for (int h = 0; h < m.heads; ++h) {
      const double v = m.at(l, h);
      const double s = std::isfinite(v) ? (v - lo) / (hi - lo) : 0.0;
      const int g = static_cast<int>(std::lround(255 * (1.0 - s)));
      svg << "<rect x=\"" << left + cell * h << "\" y=\"" << top + cell * l << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"rgb(255," << g << ',' << g << ")\" stroke=\"#eee\"><title>"
          << l + 1 << '-' << h + 1 << ": " << format_number(v) << "</title></rect>\n";
    }
  }
  for (int h = 0; h < m.heads; ++h) {
    svg << "<text x=\"" << left + cell * h + cell / 2 << "\" y=\"" << top + cell * m.layers + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << h + 1 << "</text>\n";
  }
  svg << "<text x=\"" << left + cell * m.heads / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\" font-size=\"12\">head</text>\n";
  svg << "<text transform=\"translate(16," << top + cell * m.layers / 2
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">layer</text>\n";
  svg << "<text x=\"" << left + cell * m.heads + 12 << "\" y=\"" << top + 10 << "\" font-size=\"11\">max "
      << format_number(hi) << "</text>\n";
  svg << "<text x=\"" << left + cell * m.heads + 12 << "\" y=\"" << top + 26 << "\" font-size=\"11\">min "
      << format_number(lo) << "</text>\n";
  svg << "</svg>\n";
}

void emit_line_plot(const fs::path& stem, const std::string& title, const std::string& x_label,
                    const std::string& y_label, std::span<const PlotSeries> series) {
  std::vector<std::vector<std::string>> rows;
  Frame f;
  f.x0 = f.y0 = std::numeric_limits<double>::infinity();
  f.x1 = f.y1 = -f.x0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot series x/y lengths differ");
    const bool bars = !s.low.empty();
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double lo = bars ? s.low[i] : s.y[i], hi = bars ? s.high[i] : s.y[i];
      rows.push_back({s.name, format_number(s.x[i]), format_number(s.y[i]), format_number(lo), format_number(hi)});
      if (!std::isfinite(s.y[i])) continue;
      f.x0 = std::min(f.x0, s.x[i]);
      f.x1 = std::max(f.x1, s.x[i]);
      f.y0 = std::min({f.y0, s.y[i], lo});
      f.y1 = std::max({f.y1, s.y[i], hi});
    }
  }
  write_csv(with_suffix(stem, ".csv"), {"series", "x", "y", "low", "high"}, rows);
  if (!std::isfinite(f.x0)) f.x0 = 0, f.x1 = 1, f.y0 = 0, f.y1 = 1;
  if (!(f.x1 > f.x0)) f.x1 = f.x0 + 1;
  const double pad = (f.y1 - f.y0) * 0.05 + 1e-9;
  f.y0 -= pad;
  f.y1 += pad;

  auto svg = open_out(with_suffix(stem, ".svg"));
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
      << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  axes(svg, f, title, x_label, y_label, true);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % kPalette.size()];
    names.push_back(s.name);
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.y[i])) svg << f.px(s.x[i]) << ',' << f.py(s.y[i]) << ' ';
    }
    svg << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      svg << "<circle cx=\"" << f.px(s.x[i]) << "\" cy=\"" << f.py(s.y[i]) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
      if (!s.low.empty()) {
        svg << "<line x1=\"" << f.px(s.x[i]) << "\" y1=\"" << f.py(s.low[i]) << "\" x2=\"" << f.px(s.x[i])
            << "\" y2=\"" << f.py(s.high[i]) << "\" stroke=\"" << color << "\"/>\n";
      }
    }
  }
  legend(svg, f, names);
  svg << "</svg>\n";
}

void emit_bar_chart(const fs::path& stem, const std::string& title, const std::string& y_label,
                    std::span<const BarValue> bars) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> groups, series;
  Frame f;
  f.y0 = 0.0;
  f.y1 = 0.0;
  for (const auto& b : bars) {
    rows.push_back({b.group, b.series, format_number(b.value), format_number(b.low), format_number(b.high)});
    if (std::find(groups.begin(), groups.end(), b.group) == groups.end()) groups.push_back(b.group);
    if (std::find(series.begin(), series.end(), b.series) == series.end()) series.push_back(b.series);
    if (std::isfinite(b.high)) f.y1 = std::max(f.y1, b.high);
    if (std::isfinite(b.value)) f.y1 = std::max(f.y1, b.value);
    if (std::isfinite(b.low)) f.y0 = std::min(f.y0, b.low);
  }
  write_csv(with_suffix(stem, ".csv"), {"group", "series", "value", "low", "high"}, rows);
  if (!(f.y1 > f.y0)) f.y1 = f.y0 + 1;
  f.y1 += (f.y1 - f.y0) * 0.05;
  f.x0 = 0;
  f.x1 = std::max<double>(1, static_cast<double>(groups.size()));

  auto svg = open_out(with_suffix(stem, ".svg"));
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
      << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  axes(svg, f, title, "", y_label, false);
  const double group_w = f.px(1) - f.px(0);
  const double bar_w = group_w * 0.8 / std::max<double>(1, static_cast<double>(series.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    svg << "<text x=\"" << f.px(static_cast<double>(g) + 0.5) << "\" y=\"" << f.height - f.bottom + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << xml_escape(groups[g]) << "</text>\n";
  }
  for (const auto& b : bars) {
    const auto g = static_cast<double>(std::find(groups.begin(), groups.end(), b.group) - groups.begin());
    const auto k = static_cast<std::size_t>(std::find(series.begin(), series.end(), b.series) - series.begin());
    if (!std::isfinite(b.value)) continue;
    const double x = f.px(g) + group_w * 0.1 + bar_w * static_cast<double>(k);
    const double y = f.py(std::max(b.value, 0.0)), y_zero = f.py(std::min(b.value, 0.0));
    svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w * 0.9 << "\" height=\"" << y_zero - y
        << "\" fill=\"" << kPalette[k % kPalette.size()] << "\"/>\n";
    if (b.high > b.low) {
      svg << "<line x1=\"" << x + bar_w * 0.45 << "\" y1=\"" << f.py(b.low) << "\" x2=\"" << x + bar_w * 0.45
          << "\" y2=\"" << f.py(b.high) << "\" stroke=\"black\"/>\n";
    }
  }
  legend(svg, f, series);
  svg << "</svg>\n";
}

// ---------------------------------------------------------------------------

fs::path output_root() {
  if (const char* env = std::getenv("PUNCHLINE_OUTPUT_ROOT"); env && *env) return env;
  return fs::current_path() / "punchline-out";
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

Json RunManifest::to_json() const {
  Json seeds_json = Json::object();
  for (const auto& [k, v] : seeds) seeds_json[k] = v;
  return {{"command", command},
          {"argv", argv},
          {"config", config},
          {"data_hash", data_hash},
          {"seeds", seeds_json},
          {"artifacts", artifacts},
          {"metrics", metrics},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"exit_status", exit_status}};
}

fs::path write_manifest(const RunManifest& manifest, const fs::path& dir) {
  const fs::path mdir = dir / "manifests";
  fs::create_directories(mdir);
  std::string stamp = manifest.finished_at.empty() ? utc_timestamp() : manifest.finished_at;
  std::replace(stamp.begin(), stamp.end(), ':', '-');
  const std::string text = manifest.to_json().dump(2) + "\n";
  for (int n = 0; n < 10000; ++n) {
    const fs::path path = mdir / (stamp + "-" + manifest.command + (n ? "-" + std::to_string(n) : "") + ".json");
    // "x": fail instead of replacing an existing manifest.
    std::FILE* f = std::fopen(path.c_str(), "wx");
    if (!f) {
      if (fs::exists(path)) continue;
      throw std::runtime_error("cannot create manifest '" + path.string() + "'");
    }
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    std::fclose(f);
    if (!ok) throw std::runtime_error("failed writing manifest '" + path.string() + "'");
    return path;
  }
  throw std::runtime_error("could not find a free manifest name in '" + mdir.string() + "'");
}

}  // namespace punchline

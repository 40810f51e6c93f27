#pragma once

// Report emission: CSV tables, JSON documents, SVG plots (each written
// next to the CSV it is drawn from) and append-only run manifests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "punchline/attention.hpp"
#include "punchline/evaluation.hpp"

namespace punchline {

using Json = nlohmann::ordered_json;

// Shortest round-trippable-enough decimal ("%.10g"); NaN prints as "nan".
std::string format_number(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void write_json(const std::filesystem::path& path, const Json& doc);

Json to_json(const MetricsReport& r);
Json to_json(const TTestResult& t);
Json to_json(const HeadMatrix& m);  // 1-based {"layer","head","value"} rows

// (layer, head, value) with 1-based indices.
void write_head_matrix_csv(const std::filesystem::path& path, const HeadMatrix& m);

// `stem` + ".csv" and `stem` + ".svg".
void emit_heatmap(const std::filesystem::path& stem, const HeadMatrix& m, const std::string& title);

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
  std::vector<double> low, high;  // optional error bars, same length as y
};

void emit_line_plot(const std::filesystem::path& stem, const std::string& title, const std::string& x_label,
                    const std::string& y_label, std::span<const PlotSeries> series);

struct BarValue {
  std::string group;
  std::string series;
  double value = 0.0;
  double low = 0.0, high = 0.0;  // equal to value when there is no interval
};

void emit_bar_chart(const std::filesystem::path& stem, const std::string& title, const std::string& y_label,
                    std::span<const BarValue> bars);

// ---------------------------------------------------------------------------

// $PUNCHLINE_OUTPUT_ROOT, else ./punchline-out.
std::filesystem::path output_root();
std::string utc_timestamp();

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  Json config = Json::object();
  std::string data_hash;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> artifacts;
  Json metrics = Json::object();
  std::string started_at;
  std::string finished_at;
  int exit_status = 0;

  Json to_json() const;
};

// Writes into `dir`/manifests under a fresh name; an existing manifest is
// never overwritten.
std::filesystem::path write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

}  // namespace punchline

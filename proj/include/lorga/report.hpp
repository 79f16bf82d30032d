#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lorga/train.hpp"

namespace lorga::report {

// step,loss,lr rows with full double precision.
void write_metrics_csv(const train::MetricsLog& log, const std::string& path);

void write_json(const nlohmann::json& j, const std::string& path);

void write_two_column_csv(const std::string& path, const std::string& header_x,
                          const std::string& header_y, const std::vector<double>& xs,
                          const std::vector<double>& ys);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal self-contained SVG line chart: axes, polylines, legend.
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<Series>& series, bool log_y = false);

}  // namespace lorga::report

#include "lorga/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace lorga::report {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.precision(std::numeric_limits<double>::max_digits10);
  return os;
}

}  // namespace

void write_metrics_csv(const train::MetricsLog& log, const std::string& path) {
  auto os = open_out(path);
  os << "step,loss,lr\n";
  for (const auto& rec : log.records)
    os << rec.step << "," << rec.loss << "," << rec.lr << "\n";
}

void write_json(const nlohmann::json& j, const std::string& path) {
  auto os = open_out(path);
  os << j.dump(2) << "\n";
}

void write_two_column_csv(const std::string& path, const std::string& header_x,
                          const std::string& header_y, const std::vector<double>& xs,
                          const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("write_two_column_csv: length mismatch");
  auto os = open_out(path);
  os << header_x << "," << header_y << "\n";
  for (std::size_t i = 0; i < xs.size(); ++i) os << xs[i] << "," << ys[i] << "\n";
}

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<Series>& series, bool log_y) {
  const int width = 720, height = 480;
  const int ml = 60, mr = 20, mt = 40, mb = 40;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      double yy = log_y ? (y > 0 ? std::log10(y) : std::nan("")) : y;
      if (std::isnan(yy)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, yy);
      ymax = std::max(ymax, yy);
    }
  if (!(xmin < xmax)) xmax = xmin + 1.0;
  if (!(ymin < ymax)) ymax = ymin + 1.0;

  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  auto py = [&](double y) {
    double yy = log_y ? std::log10(y) : y;
    return height - mb - (yy - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                 "#d62728", "#9467bd", "#8c564b"};
  auto os = open_out(path);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
     << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
     << height - mb << "\" stroke=\"black\"/>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    os << "<polyline fill=\"none\" stroke=\"" << colors[i % 6] << "\" points=\"";
    for (auto [x, y] : series[i].points) {
      if (log_y && y <= 0) continue;
      os << px(x) << "," << py(y) << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << width - mr - 150 << "\" y=\"" << mt + 16 * (i + 1)
       << "\" fill=\"" << colors[i % 6]
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[i].name
       << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace lorga::report

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tubeflow {

// Deterministic CSV writer: fixed column order, fixed formatting
// (%.12g per numeric cell), '\n' line endings.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& cells);
  ~CsvWriter();

 private:
  std::string path_;
  std::string buf_;
  size_t ncols_;
};

std::string format_num(double v);

// FNV-1a 64-bit hash of a string (config fingerprinting).
std::uint64_t fnv1a(const std::string& text);

// Minimal SVG line-plot emitter: one polyline per series over shared axes.
struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series, bool logx = false,
                    bool logy = false);

}  // namespace tubeflow

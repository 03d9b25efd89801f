#include "tubeflow/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tubeflow {

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : path_(path), ncols_(columns.size()) {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += columns[i];
  }
  buf_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != ncols_)
    throw std::invalid_argument("CsvWriter: column count mismatch");
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += format_num(values[i]);
  }
  buf_ += '\n';
}

void CsvWriter::row_mixed(const std::vector<std::string>& cells) {
  if (cells.size() != ncols_)
    throw std::invalid_argument("CsvWriter: column count mismatch");
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
}

CsvWriter::~CsvWriter() {
  std::ofstream out(path_, std::ios::binary);
  out << buf_;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<SvgSeries>& series, bool logx,
                    bool logy) {
  const int W = 640, H = 420, ML = 60, MR = 20, MT = 40, MB = 40;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto tx = [&](double v) { return logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return logy ? std::log10(v) : v; };
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto px = [&](double v) {
    return ML + (tx(v) - xmin) / (xmax - xmin) * (W - ML - MR);
  };
  auto py = [&](double v) {
    return H - MB - (ty(v) - ymin) / (ymax - ymin) * (H - MT - MB);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};
  std::ofstream out(path, std::ios::binary);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title
      << "</text>\n";
  out << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR
      << "\" y2=\"" << H - MB << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML
      << "\" y2=\"" << H - MB << "\" stroke=\"black\"/>\n";
  int ci = 0;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[ci % 6]
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << format_num(px(s.x[i])) << ',' << format_num(py(s.y[i])) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << W - MR - 150 << "\" y=\"" << MT + 16 * (ci + 1)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
        << colors[ci % 6] << "\">" << s.label << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace tubeflow

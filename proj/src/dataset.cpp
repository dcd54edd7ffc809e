#include "nlcolor/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace nlcolor {

const std::array<std::string, kNumPredictors> kPredictorNames = {
    "alan", "alan_mean_diff", "alan_max_diff", "hbase_mean", "hbase_sd"};

Band parse_band(const std::string& s) {
  if (s == "R" || s == "r" || s == "red") return Band::R;
  if (s == "G" || s == "g" || s == "green") return Band::G;
  if (s == "B" || s == "b" || s == "blue") return Band::B;
  throw Error("unknown band '" + s + "' (expected R, G or B)");
}

bool Dataset::has_band(Band b) const {
  return !observations.empty() &&
         std::all_of(observations.begin(), observations.end(),
                     [b](const Observation& o) { return o.band(b).has_value(); });
}

std::pair<RasterGrid, RasterGrid> neighborhood_diffs(const RasterGrid& grid) {
  if (grid.ncols < 2 || grid.nrows < 2)
    throw Error("neighborhood_diffs: grid must be at least 2x2");
  RasterGrid mean_d(grid.ncols, grid.nrows), max_d(grid.ncols, grid.nrows);
  mean_d.xll = max_d.xll = grid.xll;
  mean_d.yll = max_d.yll = grid.yll;
  mean_d.cellsize = max_d.cellsize = grid.cellsize;
  mean_d.nodata_value = max_d.nodata_value = grid.nodata_value;

  for (int r = 0; r < grid.nrows; ++r) {
    for (int c = 0; c < grid.ncols; ++c) {
      if (grid.is_nodata(r, c)) {
        mean_d.set_nodata(r, c);
        max_d.set_nodata(r, c);
        continue;
      }
      double v = grid.at(r, c);
      double sum = 0.0, nmin = 0.0;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= grid.nrows || cc < 0 || cc >= grid.ncols) continue;
          if (grid.is_nodata(rr, cc)) continue;
          double nb = grid.at(rr, cc);
          sum += nb;
          nmin = (n == 0) ? nb : std::min(nmin, nb);
          ++n;
        }
      }
      if (n == 0) {
        mean_d.set_nodata(r, c);
        max_d.set_nodata(r, c);
      } else {
        mean_d.at(r, c) = v - sum / n;
        max_d.at(r, c) = v - nmin;
      }
    }
  }
  return {mean_d, max_d};
}

Dataset assemble(const RasterGrid& alan, const RasterGrid& hbase_mean,
                 const RasterGrid& hbase_sd,
                 const RasterGrid* band_r, const RasterGrid* band_g, const RasterGrid* band_b,
                 const RasterGrid* mask, const std::string& name) {
  auto check = [&](const RasterGrid* g, const char* what) {
    if (g && !alan.same_geometry(*g))
      throw Error(std::string("assemble: ") + what + " grid geometry differs from ALAN grid");
  };
  check(&hbase_mean, "hbase_mean");
  check(&hbase_sd, "hbase_sd");
  check(band_r, "red");
  check(band_g, "green");
  check(band_b, "blue");
  check(mask, "mask");

  auto [mean_d, max_d] = neighborhood_diffs(alan);

  Dataset ds;
  ds.name = name;
  for (int r = 0; r < alan.nrows; ++r) {
    for (int c = 0; c < alan.ncols; ++c) {
      if (alan.is_nodata(r, c) || mean_d.is_nodata(r, c) || max_d.is_nodata(r, c) ||
          hbase_mean.is_nodata(r, c) || hbase_sd.is_nodata(r, c))
        continue;
      if (mask && (mask->is_nodata(r, c) || mask->at(r, c) == 0.0)) continue;
      Observation o;
      o.row = r;
      o.col = c;
      o.alan = alan.at(r, c);
      o.alan_mean_diff = mean_d.at(r, c);
      o.alan_max_diff = max_d.at(r, c);
      o.hbase_mean = hbase_mean.at(r, c);
      o.hbase_sd = hbase_sd.at(r, c);
      if (band_r && !band_r->is_nodata(r, c)) o.red = band_r->at(r, c);
      if (band_g && !band_g->is_nodata(r, c)) o.green = band_g->at(r, c);
      if (band_b && !band_b->is_nodata(r, c)) o.blue = band_b->at(r, c);
      ds.observations.push_back(o);
    }
  }
  return ds;
}

namespace {

const char* kCsvHeader = "row,col,alan,alan_mean_diff,alan_max_diff,hbase_mean,hbase_sd,red,green,blue";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_field(const std::string& tok, const std::string& col, const std::string& path,
                   int line_no) {
  double v;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw Error(path + ":" + std::to_string(line_no) + ": non-numeric field '" + tok +
                "' in column " + col);
  return v;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  auto header = split_csv_line(line);
  const std::vector<std::string> required = {"row", "col", "alan", "alan_mean_diff",
                                             "alan_max_diff", "hbase_mean", "hbase_sd",
                                             "red", "green", "blue"};
  std::vector<int> col_idx(required.size(), -1);
  for (size_t i = 0; i < header.size(); ++i) {
    for (size_t j = 0; j < required.size(); ++j)
      if (header[i] == required[j]) col_idx[j] = static_cast<int>(i);
  }
  for (size_t j = 0; j < required.size(); ++j)
    if (col_idx[j] < 0) throw Error(path + ": missing required column '" + required[j] + "'");

  Dataset ds;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() < header.size())
      throw Error(path + ":" + std::to_string(line_no) + ": too few fields");
    auto field = [&](int j) -> const std::string& { return f[col_idx[j]]; };
    Observation o;
    o.row = static_cast<int>(parse_field(field(0), required[0], path, line_no));
    o.col = static_cast<int>(parse_field(field(1), required[1], path, line_no));
    o.alan = parse_field(field(2), required[2], path, line_no);
    o.alan_mean_diff = parse_field(field(3), required[3], path, line_no);
    o.alan_max_diff = parse_field(field(4), required[4], path, line_no);
    o.hbase_mean = parse_field(field(5), required[5], path, line_no);
    o.hbase_sd = parse_field(field(6), required[6], path, line_no);
    if (!field(7).empty()) o.red = parse_field(field(7), required[7], path, line_no);
    if (!field(8).empty()) o.green = parse_field(field(8), required[8], path, line_no);
    if (!field(9).empty()) o.blue = parse_field(field(9), required[9], path, line_no);
    ds.observations.push_back(o);
  }
  return ds;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file: " + path);
  out << kCsvHeader << "\n";
  for (const auto& o : ds.observations) {
    out << o.row << ',' << o.col << ',' << format_double(o.alan) << ','
        << format_double(o.alan_mean_diff) << ',' << format_double(o.alan_max_diff) << ','
        << format_double(o.hbase_mean) << ',' << format_double(o.hbase_sd) << ',';
    if (o.red) out << format_double(*o.red);
    out << ',';
    if (o.green) out << format_double(*o.green);
    out << ',';
    if (o.blue) out << format_double(*o.blue);
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace nlcolor

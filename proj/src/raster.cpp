#include "nlcolor/raster.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nlcolor {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool parse_number(const std::string& tok, double& out) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
  throw Error(path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

RasterGrid read_ascii_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open grid file: " + path);

  RasterGrid g;
  bool have_ncols = false, have_nrows = false, have_xll = false, have_yll = false,
       have_cell = false;
  int line_no = 0;
  std::string line;

  // header: key/value lines until the first token that is not a known key
  std::vector<std::string> pending_tokens;
  int pending_line = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;  // blank line
    std::string lk = lower(key);
    double val = 0.0;
    std::string tok;
    if (lk == "ncols" || lk == "nrows" || lk == "xllcorner" || lk == "yllcorner" ||
        lk == "cellsize" || lk == "nodata_value") {
      if (!(ls >> tok) || !parse_number(tok, val))
        fail(path, line_no, "header key '" + key + "' has no numeric value");
      std::string extra;
      if (ls >> extra) fail(path, line_no, "trailing token '" + extra + "' after header value");
      if (lk == "ncols") { g.ncols = static_cast<int>(val); have_ncols = true; }
      else if (lk == "nrows") { g.nrows = static_cast<int>(val); have_nrows = true; }
      else if (lk == "xllcorner") { g.xll = val; have_xll = true; }
      else if (lk == "yllcorner") { g.yll = val; have_yll = true; }
      else if (lk == "cellsize") { g.cellsize = val; have_cell = true; }
      else g.nodata_value = val;
    } else {
      // first data line
      pending_tokens.push_back(key);
      while (ls >> tok) pending_tokens.push_back(tok);
      pending_line = line_no;
      break;
    }
  }

  if (!have_ncols || !have_nrows || !have_xll || !have_yll || !have_cell)
    fail(path, line_no, "incomplete header (need ncols, nrows, xllcorner, yllcorner, cellsize)");
  if (g.ncols < 1 || g.nrows < 1) fail(path, line_no, "ncols and nrows must be >= 1");
  if (g.cellsize <= 0) fail(path, line_no, "cellsize must be > 0");

  size_t expected = g.cell_count();
  g.values.reserve(expected);
  auto consume = [&](const std::string& tok, int at_line) {
    double v;
    if (!parse_number(tok, v)) fail(path, at_line, "non-numeric value token '" + tok + "'");
    if (g.values.size() >= expected)
      fail(path, at_line, "more than " + std::to_string(expected) + " values in grid body");
    g.values.push_back(v);
  };
  for (const auto& t : pending_tokens) consume(t, pending_line);
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) consume(tok, line_no);
  }
  if (g.values.size() != expected)
    fail(path, line_no,
         "value count mismatch: header declares " + std::to_string(expected) + " cells but " +
             std::to_string(g.values.size()) + " values present");

  for (int r = 0; r < g.nrows; ++r)
    for (int c = 0; c < g.ncols; ++c)
      if (!g.is_nodata(r, c) && !std::isfinite(g.at(r, c)))
        throw Error(path + ": non-finite value at row " + std::to_string(r) + " col " +
                    std::to_string(c));
  return g;
}

void write_ascii_grid(const RasterGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write grid file: " + path);
  out << "ncols " << grid.ncols << "\n";
  out << "nrows " << grid.nrows << "\n";
  out << "xllcorner " << format_double(grid.xll) << "\n";
  out << "yllcorner " << format_double(grid.yll) << "\n";
  out << "cellsize " << format_double(grid.cellsize) << "\n";
  out << "NODATA_value " << format_double(grid.nodata_value) << "\n";
  for (int r = 0; r < grid.nrows; ++r) {
    for (int c = 0; c < grid.ncols; ++c) {
      if (c) out << ' ';
      out << format_double(grid.at(r, c));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

std::pair<RasterGrid, RasterGrid> aggregate_to_grid(const RasterGrid& src,
                                                    const RasterGrid& target_geometry) {
  if (src.cellsize > target_geometry.cellsize + 1e-12)
    throw Error("aggregate_to_grid: source cellsize exceeds target cellsize");

  const RasterGrid& t = target_geometry;
  double tx0 = t.xll, ty0 = t.yll;
  double tx1 = t.xll + t.ncols * t.cellsize, ty1 = t.yll + t.nrows * t.cellsize;
  double sx0 = src.xll, sy0 = src.yll;
  double sx1 = src.xll + src.ncols * src.cellsize, sy1 = src.yll + src.nrows * src.cellsize;
  if (sx1 <= tx0 || sx0 >= tx1 || sy1 <= ty0 || sy0 >= ty1)
    throw Error("aggregate_to_grid: source and target extents are disjoint");

  std::vector<double> sum(t.cell_count(), 0.0), sumsq(t.cell_count(), 0.0);
  std::vector<long> cnt(t.cell_count(), 0);

  for (int r = 0; r < src.nrows; ++r) {
    double y = src.cell_y(r);
    if (y <= ty0 || y >= ty1) continue;
    int tr = t.nrows - 1 - static_cast<int>(std::floor((y - ty0) / t.cellsize));
    if (tr < 0 || tr >= t.nrows) continue;
    for (int c = 0; c < src.ncols; ++c) {
      if (src.is_nodata(r, c)) continue;
      double x = src.cell_x(c);
      if (x <= tx0 || x >= tx1) continue;
      int tc = static_cast<int>(std::floor((x - tx0) / t.cellsize));
      if (tc < 0 || tc >= t.ncols) continue;
      size_t idx = static_cast<size_t>(tr) * t.ncols + tc;
      double v = src.at(r, c);
      sum[idx] += v;
      sumsq[idx] += v * v;
      cnt[idx] += 1;
    }
  }

  RasterGrid means(t.ncols, t.nrows), sds(t.ncols, t.nrows);
  means.xll = sds.xll = t.xll;
  means.yll = sds.yll = t.yll;
  means.cellsize = sds.cellsize = t.cellsize;
  means.nodata_value = sds.nodata_value = t.nodata_value;
  for (size_t i = 0; i < t.cell_count(); ++i) {
    if (cnt[i] == 0) {
      means.values[i] = means.nodata_value;
      sds.values[i] = sds.nodata_value;
    } else {
      double m = sum[i] / cnt[i];
      double var = std::max(0.0, sumsq[i] / cnt[i] - m * m);
      means.values[i] = m;
      sds.values[i] = std::sqrt(var);
    }
  }
  return {means, sds};
}

void write_rgb_ppm(const RasterGrid& r, const RasterGrid& g, const RasterGrid& b,
                   const std::string& path) {
  if (!r.same_geometry(g) || !r.same_geometry(b))
    throw Error("write_rgb_ppm: band grids do not share geometry");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image file: " + path);
  out << "P6\n" << r.ncols << " " << r.nrows << "\n255\n";
  auto to_byte = [](double v) {
    if (v < 0.0) return static_cast<unsigned char>(0);
    if (v > 255.0) return static_cast<unsigned char>(255);
    return static_cast<unsigned char>(std::lround(v));
  };
  std::vector<unsigned char> row(static_cast<size_t>(r.ncols) * 3);
  for (int y = 0; y < r.nrows; ++y) {
    for (int x = 0; x < r.ncols; ++x) {
      bool nodata = r.is_nodata(y, x) || g.is_nodata(y, x) || b.is_nodata(y, x);
      row[3 * x + 0] = nodata ? 255 : to_byte(r.at(y, x));
      row[3 * x + 1] = nodata ? 255 : to_byte(g.at(y, x));
      row[3 * x + 2] = nodata ? 255 : to_byte(b.at(y, x));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace nlcolor

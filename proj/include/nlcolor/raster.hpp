#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nlcolor {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Georeferenced single-band grid. Rows are stored north to south
/// (row 0 is the top row), values row-major.
struct RasterGrid {
  int ncols = 0;
  int nrows = 0;
  double xll = 0.0;
  double yll = 0.0;
  double cellsize = 1.0;
  double nodata_value = -9999.0;
  std::vector<double> values;

  RasterGrid() = default;
  RasterGrid(int cols, int rows, double fill = 0.0)
      : ncols(cols), nrows(rows), values(static_cast<size_t>(cols) * rows, fill) {}

  double& at(int row, int col) { return values[static_cast<size_t>(row) * ncols + col]; }
  double at(int row, int col) const { return values[static_cast<size_t>(row) * ncols + col]; }

  bool is_nodata(int row, int col) const {
    double v = at(row, col);
    return v == nodata_value || std::isnan(v);
  }
  void set_nodata(int row, int col) { at(row, col) = nodata_value; }

  // center of cell (row, col) in map coordinates
  double cell_x(int col) const { return xll + (col + 0.5) * cellsize; }
  double cell_y(int row) const { return yll + (nrows - row - 0.5) * cellsize; }

  bool same_geometry(const RasterGrid& o, double tol = 1e-9) const {
    return ncols == o.ncols && nrows == o.nrows &&
           std::abs(xll - o.xll) <= tol && std::abs(yll - o.yll) <= tol &&
           std::abs(cellsize - o.cellsize) <= tol;
  }

  size_t cell_count() const { return static_cast<size_t>(ncols) * nrows; }
};

struct GridStats {
  double mean = 0.0;
  double sd = 0.0;  // population SD (divisor n)
  long count = 0;
};

/// Plain-text grid format: ncols/nrows/xllcorner/yllcorner/cellsize and an
/// optional NODATA_value header, keys case-insensitive, followed by
/// ncols*nrows whitespace-separated values. Errors carry 1-based line numbers.
RasterGrid read_ascii_grid(const std::string& path);
void write_ascii_grid(const RasterGrid& grid, const std::string& path);

/// Per-target-cell mean and population SD over all non-nodata source cells
/// whose centers fall inside the target cell. Zero contributors -> nodata.
std::pair<RasterGrid, RasterGrid> aggregate_to_grid(const RasterGrid& src,
                                                    const RasterGrid& target_geometry);

/// Binary PPM (P6), each band clamped to [0,255]; nodata pixels white.
void write_rgb_ppm(const RasterGrid& r, const RasterGrid& g, const RasterGrid& b,
                   const std::string& path);

/// Canonical double formatting used by every text output (round-trips exactly).
std::string format_double(double v);

}  // namespace nlcolor

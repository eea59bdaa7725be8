#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace irkit {

class PdnGraph;

// Pixel raster over the chip, origin at DBU (0,0).
struct GridSpec {
  double pixel_pitch = 1.0;  // microns per pixel
  int width = 1;
  int height = 1;
  int dbu_per_micron = 2000;

  // Smallest grid covering the graph extent at the given pitch.
  static GridSpec for_graph(const PdnGraph& g, double pitch_um = 1.0);

  // Pixel column / row containing a DBU coordinate, clamped to the grid.
  int column_of(std::int64_t x_dbu) const;
  int row_of(std::int64_t y_dbu) const;

  bool operator==(const GridSpec&) const = default;
};

// 2-D map of values in row-major order. Values live in memory as doubles so
// that downstream tolerance checks are not limited by storage precision; the
// file formats carry 32-bit floats.
class ScalarGrid {
 public:
  ScalarGrid() = default;
  ScalarGrid(int width, int height, std::string units = {}, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  const std::string& units() const { return units_; }
  void set_units(std::string u) { units_ = std::move(u); }

  double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const ScalarGrid& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

  double min() const;
  double max() const;
  double sum() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
  std::string units_;
};

// Bilinear resampling with pixel-centre alignment.
ScalarGrid resize_bilinear(const ScalarGrid& in, int width, int height);

// "SGRD" | u32 width | u32 height | f32[width*height] | units (to EOF), little endian.
void write_sgrd(const ScalarGrid& g, std::ostream& out);
ScalarGrid read_sgrd(std::istream& in);
void write_sgrd_file(const ScalarGrid& g, const std::string& path);
ScalarGrid read_sgrd_file(const std::string& path);

// One row per line, comma separated, values rounded to f32.
void write_csv(const ScalarGrid& g, std::ostream& out);
ScalarGrid read_csv(std::istream& in, std::string units = {});
void write_csv_file(const ScalarGrid& g, const std::string& path);

// Binary 8-bit PGM, min-max normalized.
void write_pgm(const ScalarGrid& g, std::ostream& out);
void write_pgm_file(const ScalarGrid& g, const std::string& path);

// Dispatches on extension: .sgrd or .csv.
ScalarGrid read_grid_file(const std::string& path);

}  // namespace irkit

#include "irkit/grid.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <sstream>

#include "irkit/errors.hpp"
#include "irkit/netlist.hpp"

namespace irkit {

namespace {

int pixel_index(std::int64_t dbu, int dbu_per_micron, double pitch, int limit) {
  const double um = static_cast<double>(dbu) / static_cast<double>(dbu_per_micron);
  // Nudge so that coordinates sitting exactly on a pixel boundary land in
  // the upper pixel despite rounding in um / pitch.
  const auto p = static_cast<std::int64_t>(std::floor(um / pitch + 1e-9));
  return static_cast<int>(std::clamp<std::int64_t>(p, 0, limit - 1));
}

}  // namespace

GridSpec GridSpec::for_graph(const PdnGraph& g, double pitch_um) {
  if (!(pitch_um > 0.0)) throw ConfigError("pixel pitch must be positive");
  GridSpec s;
  s.pixel_pitch = pitch_um;
  s.dbu_per_micron = g.dbu_per_micron();
  const auto& ext = g.extent();
  auto cells = [&](std::int64_t max_dbu) {
    const double um = g.to_microns(std::max<std::int64_t>(max_dbu, 0));
    return static_cast<int>(std::floor(um / pitch_um + 1e-9)) + 1;
  };
  s.width = ext.empty ? 1 : cells(ext.max_x);
  s.height = ext.empty ? 1 : cells(ext.max_y);
  return s;
}

int GridSpec::column_of(std::int64_t x_dbu) const {
  return pixel_index(x_dbu, dbu_per_micron, pixel_pitch, width);
}

int GridSpec::row_of(std::int64_t y_dbu) const {
  return pixel_index(y_dbu, dbu_per_micron, pixel_pitch, height);
}

ScalarGrid::ScalarGrid(int width, int height, std::string units, double fill)
    : width_(width), height_(height), units_(std::move(units)) {
  if (width < 1 || height < 1) throw DimensionError("grid dimensions must be at least 1x1");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

double ScalarGrid::min() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double ScalarGrid::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double ScalarGrid::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

ScalarGrid resize_bilinear(const ScalarGrid& in, int width, int height) {
  ScalarGrid out(width, height, in.units());
  const double sx = static_cast<double>(in.width()) / width;
  const double sy = static_cast<double>(in.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, in.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, in.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, in.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, in.width() - 1);
      const double tx = fx - x0;
      const double top = in.at(x0, y0) * (1 - tx) + in.at(x1, y0) * tx;
      const double bot = in.at(x0, y1) * (1 - tx) + in.at(x1, y1) * tx;
      out.at(x, y) = top * (1 - ty) + bot * ty;
    }
  }
  return out;
}

// ------------------------------------------------------------------- SGRD

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("truncated SGRD stream");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string format_float(float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void write_sgrd(const ScalarGrid& g, std::ostream& out) {
  out.write("SGRD", 4);
  put_u32(out, static_cast<std::uint32_t>(g.width()));
  put_u32(out, static_cast<std::uint32_t>(g.height()));
  for (double v : g.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  out << g.units();
}

ScalarGrid read_sgrd(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SGRD", 4) != 0) {
    throw Error("not an SGRD stream");
  }
  const auto w = get_u32(in);
  const auto h = get_u32(in);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) throw Error("bad SGRD dimensions");
  ScalarGrid g(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::bit_cast<float>(get_u32(in));
  g.set_units(std::string(std::istreambuf_iterator<char>(in), {}));
  return g;
}

void write_sgrd_file(const ScalarGrid& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_sgrd(g, out);
}

ScalarGrid read_sgrd_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_sgrd(in);
}

void write_csv(const ScalarGrid& g, std::ostream& out) {
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      if (x) out << ',';
      out << format_float(static_cast<float>(g.at(x, y)));
    }
    out << '\n';
  }
}

ScalarGrid read_csv(std::istream& in, std::string units) {
  std::vector<double> values;
  int width = -1;
  int height = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int count = 0;
    std::string_view rest(line);
    while (true) {
      auto comma = rest.find(',');
      auto field = rest.substr(0, comma);
      while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw Error("malformed CSV value '" + std::string(field) + "' on row " +
                    std::to_string(height + 1));
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (width >= 0 && count != width) throw DimensionError("ragged CSV grid");
    width = count;
    ++height;
  }
  if (height == 0) throw Error("empty CSV grid");
  ScalarGrid g(width, height, std::move(units));
  std::copy(values.begin(), values.end(), g.values().begin());
  return g;
}

void write_csv_file(const ScalarGrid& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  write_csv(g, out);
}

void write_pgm(const ScalarGrid& g, std::ostream& out) {
  out << "P5\n" << g.width() << ' ' << g.height() << "\n255\n";
  const double lo = g.min();
  const double span = g.max() - lo;
  std::string row(static_cast<std::size_t>(g.width()), '\0');
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      const double t = span > 0.0 ? (g.at(x, y) - lo) / span : 0.0;
      row[x] = static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void write_pgm_file(const ScalarGrid& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_pgm(g, out);
}

ScalarGrid read_grid_file(const std::string& path) {
  auto ends_with = [&path](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".csv")) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_csv(in, "V");
  }
  return read_sgrd_file(path);
}

}  // namespace irkit

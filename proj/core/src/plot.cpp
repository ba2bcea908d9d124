#include "pgm/plot.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "pgm/errors.hpp"

namespace pgm {
namespace plot {

namespace {

// ---- Bitmap font -------------------------------------------------------------------

/// 5x7 glyph: seven rows, low five bits per row, most significant bit leftmost.
using Glyph = std::array<std::uint8_t, 7>;

constexpr Glyph kBlank = {0, 0, 0, 0, 0, 0, 0};

const Glyph& glyph_for(char c) {
  static const std::array<Glyph, 26> letters = {{
      {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // A
      {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},  // B
      {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E},  // C
      {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E},  // D
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F},  // E
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},  // F
      {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0E},  // G
      {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // H
      {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // I
      {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},  // J
      {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},  // K
      {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},  // L
      {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11},  // M
      {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11},  // N
      {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // O
      {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},  // P
      {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D},  // Q
      {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},  // R
      {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E},  // S
      {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // T
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // U
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},  // V
      {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11},  // W
      {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},  // X
      {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04},  // Y
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},  // Z
  }};
  static const std::array<Glyph, 10> digits = {{
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
      {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
      {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
      {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
      {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
  }};
  static const Glyph period = {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C};
  static const Glyph comma = {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08};
  static const Glyph minus = {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00};
  static const Glyph plus = {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00};
  static const Glyph lparen = {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02};
  static const Glyph rparen = {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08};
  static const Glyph underscore = {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F};
  static const Glyph percent = {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03};
  static const Glyph colon = {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00};
  static const Glyph equals = {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00};
  static const Glyph slash = {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10};

  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u >= 'A' && u <= 'Z') return letters[static_cast<std::size_t>(u - 'A')];
  if (u >= '0' && u <= '9') return digits[static_cast<std::size_t>(u - '0')];
  switch (u) {
    case '.': return period;
    case ',': return comma;
    case '-': return minus;
    case '+': return plus;
    case '(': return lparen;
    case ')': return rparen;
    case '_': return underscore;
    case '%': return percent;
    case ':': return colon;
    case '=': return equals;
    case '/': return slash;
    default: return kBlank;
  }
}

constexpr int kGlyphWidth = 5;
constexpr int kGlyphHeight = 7;
constexpr int kGlyphAdvance = 6;  // one blank column between glyphs

// ---- PNG encoding ------------------------------------------------------------------

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void write_chunk(std::ofstream& out, const char* type, const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> buf;
  append_u32(buf, static_cast<std::uint32_t>(payload.size()));
  buf.insert(buf.end(), type, type + 4);
  buf.insert(buf.end(), payload.begin(), payload.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, buf.data() + 4, static_cast<uInt>(buf.size() - 4));
  append_u32(buf, static_cast<std::uint32_t>(crc));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

// ---- Axis ticks --------------------------------------------------------------------

double nice_number(double x, bool round_mode) {
  const double expv = std::floor(std::log10(x));
  const double f = x / std::pow(10.0, expv);
  double nf;
  if (round_mode) {
    if (f < 1.5) nf = 1.0;
    else if (f < 3.0) nf = 2.0;
    else if (f < 7.0) nf = 5.0;
    else nf = 10.0;
  } else {
    if (f <= 1.0) nf = 1.0;
    else if (f <= 2.0) nf = 2.0;
    else if (f <= 5.0) nf = 5.0;
    else nf = 10.0;
  }
  return nf * std::pow(10.0, expv);
}

/// Tick positions covering [lo, hi] at round values; roughly `target` of them.
std::vector<double> loose_ticks(double lo, double hi, int target) {
  if (!(hi > lo)) return {lo};
  const double range = nice_number(hi - lo, false);
  const double step = nice_number(range / std::max(1, target - 1), true);
  const double tick_lo = std::floor(lo / step) * step;
  const double tick_hi = std::ceil(hi / step) * step;
  std::vector<double> ticks;
  for (double t = tick_lo; t <= tick_hi + 0.5 * step; t += step) {
    // Snap values that should be zero (avoids labels like "1.2E-16").
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  }
  return ticks;
}

std::string format_tick(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// ---- Chart geometry ----------------------------------------------------------------

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};

AxisRange padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::max(1.0, std::abs(lo)) * 0.5;
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

// ---- Canvas ------------------------------------------------------------------------

Rgb series_color(std::size_t index) {
  static const std::array<Rgb, 6> palette = {{
      {31, 119, 180},   // blue
      {214, 39, 40},    // red
      {44, 160, 44},    // green
      {255, 127, 14},   // orange
      {148, 103, 189},  // purple
      {140, 86, 75},    // brown
  }};
  return palette[index % palette.size()];
}

Canvas::Canvas(int width, int height, Rgb background) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw InvalidArgument("canvas dimensions must be positive");
  data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) set_pixel(x, y, background);
}

void Canvas::set_pixel(int x, int y, Rgb color) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  const std::size_t at = (static_cast<std::size_t>(y) * width_ + x) * 3;
  data_[at] = color.r;
  data_[at + 1] = color.g;
  data_[at + 2] = color.b;
}

Rgb Canvas::pixel(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_)
    throw InvalidArgument("pixel coordinates out of range");
  const std::size_t at = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {data_[at], data_[at + 1], data_[at + 2]};
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb color) {
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) set_pixel(x, y, color);
}

void Canvas::draw_line(int x0, int y0, int x1, int y1, Rgb color) {
  // Bresenham over the dominant axis; handles all octants.
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set_pixel(x0, y0, color);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::draw_text(int x, int y, const std::string& text, Rgb color, int scale) {
  int cx = x;
  for (const char c : text) {
    const Glyph& g = glyph_for(c);
    for (int row = 0; row < kGlyphHeight; ++row)
      for (int col = 0; col < kGlyphWidth; ++col)
        if (g[static_cast<std::size_t>(row)] & (1 << (kGlyphWidth - 1 - col)))
          fill_rect(cx + col * scale, y + row * scale, cx + col * scale + scale - 1,
                    y + row * scale + scale - 1, color);
    cx += kGlyphAdvance * scale;
  }
}

void Canvas::save_png(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open PNG output file: " + path);

  static const std::uint8_t signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  out.write(reinterpret_cast<const char*>(signature), 8);

  std::vector<std::uint8_t> ihdr;
  append_u32(ihdr, static_cast<std::uint32_t>(width_));
  append_u32(ihdr, static_cast<std::uint32_t>(height_));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor RGB
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  write_chunk(out, "IHDR", ihdr);

  // Raw image stream: each scanline prefixed with filter byte 0 (None).
  const std::size_t row_bytes = static_cast<std::size_t>(width_) * 3;
  std::vector<std::uint8_t> raw;
  raw.reserve((row_bytes + 1) * static_cast<std::size_t>(height_));
  for (int y = 0; y < height_; ++y) {
    raw.push_back(0);
    const std::size_t at = static_cast<std::size_t>(y) * row_bytes;
    raw.insert(raw.end(), data_.begin() + static_cast<std::ptrdiff_t>(at),
               data_.begin() + static_cast<std::ptrdiff_t>(at + row_bytes));
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  const int rc = compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                           Z_BEST_COMPRESSION);
  if (rc != Z_OK) throw IoError("PNG compression failed for: " + path);
  compressed.resize(bound);
  write_chunk(out, "IDAT", compressed);
  write_chunk(out, "IEND", {});
  if (!out) throw IoError("failed writing PNG file: " + path);
}

int text_width(const std::string& text, int scale) {
  if (text.empty()) return 0;
  return static_cast<int>(text.size()) * kGlyphAdvance * scale - scale;
}

// ---- Chart rendering ---------------------------------------------------------------

void render_chart(const ChartSpec& spec, const std::string& path) {
  if (spec.series.empty()) throw InvalidArgument("chart needs at least one series");

  const Rgb white{255, 255, 255};
  const Rgb ink{30, 30, 30};
  const Rgb grid{222, 222, 222};

  Canvas canvas(spec.width, spec.height, white);

  const int left = 78;
  const int right = spec.width - 24;
  const int top = 46;
  const int bottom = spec.height - 58;
  const int plot_w = right - left;
  const int plot_h = bottom - top;
  if (plot_w < 40 || plot_h < 40) throw InvalidArgument("chart dimensions too small");

  // Value transform for the y axis.
  const bool log_y = spec.log_y;
  const auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  const auto y_ok = [&](double v) { return std::isfinite(v) && (!log_y || v > 0.0); };

  // Data extents.
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -std::numeric_limits<double>::infinity();
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size())
      throw InvalidArgument("series '" + s.label + "' has mismatched x/y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !y_ok(s.y[i])) continue;
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, ty(s.y[i]));
      y_hi = std::max(y_hi, ty(s.y[i]));
    }
  }
  if (std::isfinite(spec.h_line) && y_ok(spec.h_line)) {
    y_lo = std::min(y_lo, ty(spec.h_line));
    y_hi = std::max(y_hi, ty(spec.h_line));
  }
  if (!std::isfinite(x_lo) || !std::isfinite(y_lo)) {
    x_lo = 0.0;
    x_hi = 1.0;
    y_lo = 0.0;
    y_hi = 1.0;
  }
  const AxisRange xr = padded(x_lo, x_hi);
  const AxisRange yr = padded(y_lo, y_hi);

  const auto px = [&](double x) {
    return left + static_cast<int>(std::lround((x - xr.lo) / (xr.hi - xr.lo) * plot_w));
  };
  const auto py = [&](double yt) {
    return top + plot_h - static_cast<int>(std::lround((yt - yr.lo) / (yr.hi - yr.lo) * plot_h));
  };

  // Gridlines and tick labels.
  for (const double t : loose_ticks(xr.lo, xr.hi, 7)) {
    if (t < xr.lo || t > xr.hi) continue;
    const int x = px(t);
    canvas.draw_line(x, top, x, bottom, grid);
    const std::string label = format_tick(t);
    canvas.draw_text(x - text_width(label) / 2, bottom + 8, label, ink);
  }
  for (const double t : loose_ticks(yr.lo, yr.hi, 6)) {
    if (t < yr.lo || t > yr.hi) continue;
    const int y = py(t);
    canvas.draw_line(left, y, right, y, grid);
    const std::string label = log_y ? "1E" + format_tick(t) : format_tick(t);
    canvas.draw_text(left - text_width(label) - 8, y - kGlyphHeight / 2, label, ink);
  }

  // Frame.
  canvas.draw_line(left, top, left, bottom, ink);
  canvas.draw_line(left, bottom, right, bottom, ink);
  canvas.draw_line(right, top, right, bottom, ink);
  canvas.draw_line(left, top, right, top, ink);

  // Optional horizontal reference line, dashed.
  if (std::isfinite(spec.h_line) && y_ok(spec.h_line) && ty(spec.h_line) >= yr.lo &&
      ty(spec.h_line) <= yr.hi) {
    const int y = py(ty(spec.h_line));
    for (int x = left; x < right; x += 10)
      canvas.draw_line(x, y, std::min(x + 5, right), y, ink);
    if (!spec.h_line_label.empty())
      canvas.draw_text(right - text_width(spec.h_line_label) - 4, y - kGlyphHeight - 3,
                       spec.h_line_label, ink);
  }

  // Series polylines; non-plottable samples break the line.
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    const Rgb color = series_color(si);
    bool have_prev = false;
    int prev_x = 0;
    int prev_y = 0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !y_ok(s.y[i])) {
        have_prev = false;
        continue;
      }
      const int cx = px(s.x[i]);
      const int cy = py(ty(s.y[i]));
      if (have_prev) {
        canvas.draw_line(prev_x, prev_y, cx, cy, color);
        canvas.draw_line(prev_x, prev_y + 1, cx, cy + 1, color);  // 2 px stroke
      }
      prev_x = cx;
      prev_y = cy;
      have_prev = true;
    }
  }

  // Legend, top-right inside the plot box.
  {
    int ly = top + 8;
    int max_label = 0;
    for (const auto& s : spec.series) max_label = std::max(max_label, text_width(s.label));
    const int lx = right - max_label - 40;
    for (std::size_t si = 0; si < spec.series.size(); ++si) {
      const auto& s = spec.series[si];
      canvas.fill_rect(lx, ly + 2, lx + 22, ly + 4, series_color(si));
      canvas.draw_text(lx + 28, ly, s.label, ink);
      ly += kGlyphHeight + 5;
    }
  }

  // Title and axis labels.
  canvas.draw_text((spec.width - text_width(spec.title, 2)) / 2, 12, spec.title, ink, 2);
  canvas.draw_text((left + right - text_width(spec.x_label)) / 2, spec.height - 22, spec.x_label,
                   ink);
  canvas.draw_text(8, top - 20, spec.y_label + (log_y ? " (LOG SCALE)" : ""), ink);

  canvas.save_png(path);
}

}  // namespace plot
}  // namespace pgm

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pgm {
namespace plot {

/// 24-bit color.
struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
};

/// Fixed palette cycled across chart series.
[[nodiscard]] Rgb series_color(std::size_t index);

/// In-memory RGB raster with simple drawing primitives.
class Canvas {
 public:
  Canvas(int width, int height, Rgb background);

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }

  void set_pixel(int x, int y, Rgb color);
  [[nodiscard]] Rgb pixel(int x, int y) const;

  void fill_rect(int x0, int y0, int x1, int y1, Rgb color);
  void draw_line(int x0, int y0, int x1, int y1, Rgb color);

  /// Draws 5x7 uppercase bitmap text; unknown glyphs render as blanks.
  void draw_text(int x, int y, const std::string& text, Rgb color, int scale = 1);

  /// Encodes the raster as an 8-bit RGB PNG.
  void save_png(const std::string& path) const;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// Width in pixels of a string rendered by Canvas::draw_text.
[[nodiscard]] int text_width(const std::string& text, int scale = 1);

/// One chart series: y value per x sample; NaN entries leave gaps.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line-chart description rendered by render_chart.
struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool log_y = false;
  /// Optional dashed horizontal reference line (e.g. a threshold), drawn when finite.
  double h_line = std::numeric_limits<double>::quiet_NaN();
  std::string h_line_label;
  int width = 900;
  int height = 560;
};

/// Renders a multi-series line chart with axes, ticks, and a legend to a PNG file.
void render_chart(const ChartSpec& spec, const std::string& path);

}  // namespace plot
}  // namespace pgm

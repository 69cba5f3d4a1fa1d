// Copyright (c) 2026 mds contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mds::svg {

/// Just enough SVG to draw score curves and histograms.
class Canvas {
 public:
  Canvas(double width, double height);

  void line(double x1, double y1, double x2, double y2, const std::string& color,
            double stroke_width = 1.0, const std::string& dash = "");
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double stroke_width = 1.0);
  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0);
  void text(double x, double y, const std::string& s, double size = 11.0,
            const std::string& color = "#333", const std::string& anchor = "start");

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  double width_, height_;
  std::string body_;
};

}  // namespace mds::svg

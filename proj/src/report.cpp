#include "dctps/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace dctps {

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp + "'");
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw ConfigError("cannot move '" + tmp + "' to '" + path + "'");
}

std::string format_double(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

namespace {

struct Mapper {
  double lo, hi, out_lo, out_hi;
  double operator()(double v) const {
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
  }
};

}  // namespace

std::string svg_snapshot_plot(const Vector& positions_km, const Vector& u_s_kv,
                              const Vector& i_s_nd_ka, const Vector& i_s_cc_ka,
                              const std::string& title) {
  const int n = static_cast<int>(positions_km.size());
  const double width = 900, height = 460;
  const double left = 70, right = 830, top = 50, bottom = 400;

  double i_min = 0.0, i_max = 0.0;
  for (int i = 0; i < n; ++i) {
    i_min = std::min({i_min, i_s_nd_ka(i), i_s_cc_ka(i)});
    i_max = std::max({i_max, i_s_nd_ka(i), i_s_cc_ka(i)});
  }
  if (i_max - i_min < 1e-9) {
    i_min -= 1.0;
    i_max += 1.0;
  }
  double u_min = u_s_kv.minCoeff(), u_max = u_s_kv.maxCoeff();
  if (u_max - u_min < 1e-6) {
    u_min -= 0.01;
    u_max += 0.01;
  }
  const Mapper x{-0.5, n - 0.5, left, right};
  const Mapper yi{i_min, i_max, bottom, top};
  const Mapper yu{u_min, u_max, bottom, top};

  std::string s;
  char buf[512];
  const auto put = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    s += buf;
  };
  put("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
      "viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" font-size=\"12\">\n",
      width, height, width, height);
  put("<text x=\"%g\" y=\"24\" font-size=\"16\">%s</text>\n", left, title.c_str());
  put("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#999\"/>\n", left, yi(0.0), right,
      yi(0.0));
  put("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#333\"/>\n", left, top, left,
      bottom);
  put("<text x=\"8\" y=\"%g\" fill=\"#333\">kA</text>\n", 0.5 * (top + bottom));
  put("<text x=\"%g\" y=\"%g\" fill=\"#c33\">kV</text>\n", right + 20, 0.5 * (top + bottom));

  const double bw = (right - left) / n * 0.32;
  for (int i = 0; i < n; ++i) {
    const double cx = x(static_cast<double>(i));
    const double y0 = yi(0.0);
    const double ynd = yi(i_s_nd_ka(i));
    put("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"#4a7fb5\"/>\n", cx - bw,
        std::min(y0, ynd), bw * 0.9, std::abs(ynd - y0));
    const double ycc = yi(i_s_cc_ka(i));
    put("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"#e0a33c\"/>\n", cx + 0.1 * bw,
        std::min(y0, ycc), bw * 0.9, std::abs(ycc - y0));
    put("<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" font-size=\"10\">%d</text>\n", cx,
        bottom + 16, i + 1);
  }
  s += "<polyline fill=\"none\" stroke=\"#c33\" stroke-width=\"2\" points=\"";
  for (int i = 0; i < n; ++i) put("%g,%g ", x(static_cast<double>(i)), yu(u_s_kv(i)));
  s += "\"/>\n";
  put("<rect x=\"%g\" y=\"%g\" width=\"12\" height=\"12\" fill=\"#4a7fb5\"/>"
      "<text x=\"%g\" y=\"%g\">natural current</text>\n",
      left, height - 30.0, left + 18, height - 20.0);
  put("<rect x=\"%g\" y=\"%g\" width=\"12\" height=\"12\" fill=\"#e0a33c\"/>"
      "<text x=\"%g\" y=\"%g\">coordinated current</text>\n",
      left + 160, height - 30.0, left + 178, height - 20.0);
  put("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#c33\" stroke-width=\"2\"/>"
      "<text x=\"%g\" y=\"%g\">voltage order</text>\n",
      left + 360, height - 24.0, left + 372, height - 24.0, left + 378, height - 20.0);
  s += "</svg>\n";
  return s;
}

}  // namespace dctps

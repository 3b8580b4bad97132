// Output helpers: atomic file writes, CSV schema tags, SVG snapshot plots.
#pragma once

#include <string>
#include <vector>

#include "dctps/types.hpp"

namespace dctps {

/// Writes through a temporary file and renames, so reruns replace outputs
/// atomically.
void write_file_atomic(const std::string& path, const std::string& content);

/// Compact numeric formatting shared by all CSV writers.
std::string format_double(double value);

/// Bar/line chart of per-substation quantities: current bars for the natural
/// and coordinated components and a voltage polyline on a second axis.
std::string svg_snapshot_plot(const Vector& positions_km, const Vector& u_s_kv,
                              const Vector& i_s_nd_ka, const Vector& i_s_cc_ka,
                              const std::string& title);

}  // namespace dctps

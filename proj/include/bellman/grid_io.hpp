#pragma once

#include <iosfwd>
#include <string>

#include "bellman/mesh.hpp"

namespace bellman {

/// Shortest locale-independent round-trip decimal rendering of v.
std::string format_double(double v);

/// CSV interchange dump: one numeric header row
///   T,tau,h,d,d1,R,<direction components row-major>,<origin components>
/// followed by rows  j,i_1..i_d1,value.
void write_grid_csv(std::ostream& os, const GridFunction& u);
void write_grid_csv(const std::string& path, const GridFunction& u);

GridFunction read_grid_csv(std::istream& is);
GridFunction read_grid_csv_file(const std::string& path);

}  // namespace bellman

#pragma once

#include "dtrti/dtr.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dtrti::csvio {

/// Formats a double with 6 significant digits (the file-format contract).
std::string format_num(double v);

/// Writes header s1,a1,s2,a2,y and one row per trajectory.
void write_trajectories(std::ostream& os, std::span<const dtr::Trajectory> data);

/// Parses a trajectory CSV; throws std::runtime_error with a line number on
/// malformed input. '#' lines are comments.
std::vector<dtr::Trajectory> read_trajectories(std::istream& is);

std::vector<dtr::Trajectory> read_trajectories_file(const std::string& path);
void write_trajectories_file(const std::string& path, std::span<const dtr::Trajectory> data);

} // namespace dtrti::csvio

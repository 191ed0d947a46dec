#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ava {

// Minimal static line chart: one polyline per series over shared x values.
void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<double>& xs,
                     const std::vector<std::pair<std::string, std::vector<double>>>& series);

}  // namespace ava

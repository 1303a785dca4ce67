#pragma once

#include <lapnet/mesh.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace lapnet {

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed 20-entry label palette; label k uses entry k mod 20.
inline constexpr std::array<Rgb, 20> kLabelPalette{{
    {230, 25, 75},   {60, 180, 75},   {255, 225, 25},  {0, 130, 200},   {245, 130, 48},
    {145, 30, 180},  {70, 240, 240},  {240, 50, 230},  {210, 245, 60},  {250, 190, 212},
    {0, 128, 128},   {220, 190, 255}, {170, 110, 40},  {255, 250, 200}, {128, 0, 0},
    {170, 255, 195}, {128, 128, 0},   {255, 215, 180}, {0, 0, 128},     {128, 128, 128},
}};

/// Throws ArgumentError for negative labels.
Rgb label_color(int label);

/// ASCII PLY with float positions and uchar per-vertex colors from the label palette.
void write_ply(std::ostream& out, const Mesh& mesh, const std::vector<int>& labels);
void save_ply(const std::filesystem::path& path, const Mesh& mesh, const std::vector<int>& labels);

} // namespace lapnet

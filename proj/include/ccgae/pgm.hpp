#ifndef CCGAE_PGM_HPP_
#define CCGAE_PGM_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ccgae/core.hpp"
#include "ccgae/io.hpp"

namespace ccgae {

inline constexpr std::uint8_t kBorderGray = 128;

/// Pixel byte for a value: clamp to [0,1], scale by 255, round half up.
inline std::uint8_t pixel_byte(double v) {
	return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

struct GridGeometry {
	std::size_t columns = 0;  // tiles per row
	std::size_t rows = 0;     // tile rows
	std::size_t width = 0;    // pixels
	std::size_t height = 0;
};

/// Tiles are placed row-major with a 1-pixel border between neighbours. A
/// grid never has more columns than tiles.
inline GridGeometry grid_geometry(std::size_t tiles, std::size_t tile_rows, std::size_t tile_cols,
		std::size_t grid_cols) {
	if (tiles == 0 || tile_rows == 0 || tile_cols == 0 || grid_cols == 0) {
		throw DimensionError("pgm grid: tile count, tile geometry and grid columns must be positive");
	}
	GridGeometry g;
	g.columns = std::min(grid_cols, tiles);
	g.rows = (tiles + g.columns - 1) / g.columns;
	g.width = g.columns * tile_cols + (g.columns - 1);
	g.height = g.rows * tile_rows + (g.rows - 1);
	return g;
}

/// Binary PGM (P5, maxval 255) of the vectors laid out as a tile grid. Unused
/// slots in the last grid row are filled with the border gray.
inline Bytes render_pgm_grid(const std::vector<DenseVector>& vectors, std::size_t tile_rows,
		std::size_t tile_cols, std::size_t grid_cols) {
	const GridGeometry g = grid_geometry(vectors.size(), tile_rows, tile_cols, grid_cols);
	for (const auto& v : vectors) {
		require_len(v, static_cast<Eigen::Index>(tile_rows * tile_cols), "pgm grid: tile");
	}
	std::vector<std::uint8_t> pixels(g.width * g.height, kBorderGray);
	for (std::size_t t = 0; t < vectors.size(); ++t) {
		const std::size_t top = (t / g.columns) * (tile_rows + 1);
		const std::size_t left = (t % g.columns) * (tile_cols + 1);
		for (std::size_t r = 0; r < tile_rows; ++r) {
			for (std::size_t c = 0; c < tile_cols; ++c) {
				pixels[(top + r) * g.width + left + c] =
						pixel_byte(vectors[t][static_cast<Eigen::Index>(r * tile_cols + c)]);
			}
		}
	}
	const std::string header = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
	Bytes out(header.begin(), header.end());
	out.insert(out.end(), pixels.begin(), pixels.end());
	return out;
}

inline void write_pgm_grid(const std::vector<DenseVector>& vectors, std::size_t tile_rows,
		std::size_t tile_cols, std::size_t grid_cols, const std::filesystem::path& out_path) {
	write_file(out_path, render_pgm_grid(vectors, tile_rows, tile_cols, grid_cols));
}

}  // namespace ccgae

#endif  // CCGAE_PGM_HPP_

#ifndef CCGAE_DATA_IO_HPP_
#define CCGAE_DATA_IO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ccgae/core.hpp"
#include "ccgae/io.hpp"

namespace ccgae {

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

struct Dataset {
	DenseMatrix examples;                // n_examples x n_X, entries in [0,1]
	std::vector<std::uint32_t> labels;   // one per row
	std::size_t n_classes = 0;

	std::size_t size() const { return labels.size(); }
	Eigen::Index n_x() const { return examples.cols(); }

	void validate() const {
		if (static_cast<std::size_t>(examples.rows()) != labels.size()) {
			throw FormatError(FormatError::Kind::Invalid, "dataset: " + std::to_string(examples.rows()) +
					" examples but " + std::to_string(labels.size()) + " labels");
		}
		for (auto l : labels) {
			if (l >= n_classes) {
				throw FormatError(FormatError::Kind::Invalid, "dataset: label " + std::to_string(l) +
						" out of range for " + std::to_string(n_classes) + " classes");
			}
		}
		if (examples.size() > 0 && (examples.minCoeff() < 0.0 || examples.maxCoeff() > 1.0)) {
			throw FormatError(FormatError::Kind::Invalid, "dataset: pixel values outside [0,1]");
		}
	}
};

/// Parses IDX image data (magic 2051, big-endian count/rows/cols, then one
/// unsigned byte per pixel). Pixels are scaled by 1/255.
inline DenseMatrix parse_idx_images(std::span<const std::uint8_t> data, const std::string& origin,
		std::uint32_t* rows_out = nullptr, std::uint32_t* cols_out = nullptr) {
	ByteReader in(data, origin);
	in.need(4, "header");
	const std::uint32_t magic = in.u32be();
	if (magic != kIdxImageMagic) {
		throw FormatError(FormatError::Kind::WrongMagic, origin + ": wrong magic " + std::to_string(magic) +
				" (expected " + std::to_string(kIdxImageMagic) + ")");
	}
	const std::uint64_t count = in.u32be();
	const std::uint64_t rows = in.u32be();
	const std::uint64_t cols = in.u32be();
	const std::uint64_t pixels = rows * cols;
	constexpr std::uint64_t limit = std::numeric_limits<std::int32_t>::max();
	if (pixels > limit || (pixels != 0 && count > limit / pixels)) {
		throw FormatError(FormatError::Kind::DimensionOverflow, origin + ": dimensions overflow (" +
				std::to_string(count) + " x " + std::to_string(rows) + " x " + std::to_string(cols) + ")");
	}
	const auto payload = in.take(count * pixels, "pixel payload");
	in.expect_end();
	DenseMatrix m(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
	for (std::size_t i = 0; i < payload.size(); ++i) {
		m.data()[i] = payload[i] / 255.0;
	}
	if (rows_out) *rows_out = static_cast<std::uint32_t>(rows);
	if (cols_out) *cols_out = static_cast<std::uint32_t>(cols);
	return m;
}

inline DenseMatrix load_idx_images(const std::filesystem::path& path) {
	const Bytes data = read_file(path);
	return parse_idx_images(data, path.string());
}

inline std::vector<std::uint32_t> parse_idx_labels(std::span<const std::uint8_t> data,
		const std::string& origin) {
	ByteReader in(data, origin);
	in.need(4, "header");
	const std::uint32_t magic = in.u32be();
	if (magic != kIdxLabelMagic) {
		throw FormatError(FormatError::Kind::WrongMagic, origin + ": wrong magic " + std::to_string(magic) +
				" (expected " + std::to_string(kIdxLabelMagic) + ")");
	}
	const std::uint32_t count = in.u32be();
	const auto payload = in.take(count, "label payload");
	in.expect_end();
	return {payload.begin(), payload.end()};
}

inline std::vector<std::uint32_t> load_idx_labels(const std::filesystem::path& path) {
	const Bytes data = read_file(path);
	return parse_idx_labels(data, path.string());
}

/// Encodes images in [0,1] as IDX bytes, rounding v * 255 to nearest.
inline Bytes encode_idx_images(const DenseMatrix& images, std::uint32_t rows, std::uint32_t cols) {
	if (static_cast<std::uint64_t>(rows) * cols != static_cast<std::uint64_t>(images.cols())) {
		throw DimensionError("encode_idx_images: " + std::to_string(rows) + "x" + std::to_string(cols) +
				" does not match row length " + std::to_string(images.cols()));
	}
	ByteWriter out;
	out.u32be(kIdxImageMagic);
	out.u32be(static_cast<std::uint32_t>(images.rows()));
	out.u32be(rows);
	out.u32be(cols);
	for (Eigen::Index i = 0; i < images.size(); ++i) {
		out.u8(static_cast<std::uint8_t>(std::lround(std::clamp(images.data()[i], 0.0, 1.0) * 255.0)));
	}
	return out.take();
}

inline Bytes encode_idx_labels(const std::vector<std::uint32_t>& labels) {
	ByteWriter out;
	out.u32be(kIdxLabelMagic);
	out.u32be(static_cast<std::uint32_t>(labels.size()));
	for (auto l : labels) {
		if (l > 255) {
			throw std::invalid_argument("encode_idx_labels: label " + std::to_string(l) + " exceeds a byte");
		}
		out.u8(static_cast<std::uint8_t>(l));
	}
	return out.take();
}

/// entry >= threshold -> 1, else 0
inline DenseMatrix binarize(const DenseMatrix& m, double threshold = 0.5) {
	return (m.array() >= threshold).cast<double>().matrix();
}

inline DenseVector one_hot(std::size_t label, std::size_t n_classes) {
	if (label >= n_classes) {
		throw std::out_of_range("one_hot: label " + std::to_string(label) + " out of range for " +
				std::to_string(n_classes) + " classes");
	}
	DenseVector v = DenseVector::Zero(static_cast<Eigen::Index>(n_classes));
	v[static_cast<Eigen::Index>(label)] = 1.0;
	return v;
}

/// A seeded permutation of [0, n) cut into consecutive slices of batch_size;
/// the last slice keeps the remainder.
inline std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size, Rng& rng) {
	if (n == 0) {
		throw std::invalid_argument("minibatches: empty dataset");
	}
	if (batch_size == 0) {
		throw std::invalid_argument("minibatches: batch size must be >= 1");
	}
	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), std::size_t{0});
	std::shuffle(order.begin(), order.end(), rng);
	std::vector<std::vector<std::size_t>> out;
	for (std::size_t start = 0; start < n; start += batch_size) {
		const std::size_t stop = std::min(n, start + batch_size);
		out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
				order.begin() + static_cast<std::ptrdiff_t>(stop));
	}
	return out;
}

inline std::vector<std::vector<std::size_t>> minibatches(const Dataset& d, std::size_t batch_size, Rng& rng) {
	return minibatches(d.size(), batch_size, rng);
}

/// Pairs IDX images and labels. n_classes = 0 means max label + 1.
inline Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
		std::size_t n_classes = 0) {
	Dataset d;
	d.examples = load_idx_images(images);
	d.labels = load_idx_labels(labels);
	if (d.labels.size() != static_cast<std::size_t>(d.examples.rows())) {
		throw FormatError(FormatError::Kind::Invalid, images.string() + " has " +
				std::to_string(d.examples.rows()) + " images but " + labels.string() + " has " +
				std::to_string(d.labels.size()) + " labels");
	}
	const std::size_t seen = d.labels.empty() ? 0 : *std::max_element(d.labels.begin(), d.labels.end()) + 1;
	d.n_classes = n_classes == 0 ? seen : n_classes;
	d.validate();
	return d;
}

// Raw-matrix container "CCRAW1": n_examples, n_X, n_classes (u32 LE), the
// pixels as f64 LE row-major, then one u32 LE label per example.

inline Bytes encode_raw(const Dataset& d) {
	d.validate();
	ByteWriter out;
	out.magic("CCRAW1");
	out.u32le(static_cast<std::uint32_t>(d.examples.rows()));
	out.u32le(static_cast<std::uint32_t>(d.examples.cols()));
	out.u32le(static_cast<std::uint32_t>(d.n_classes));
	out.f64le(std::span<const double>(d.examples.data(), static_cast<std::size_t>(d.examples.size())));
	for (auto l : d.labels) {
		out.u32le(l);
	}
	return out.take();
}

inline Dataset parse_raw(std::span<const std::uint8_t> data, const std::string& origin) {
	ByteReader in(data, origin);
	in.expect_magic("CCRAW1");
	const std::uint64_t n = in.u32le();
	const std::uint64_t n_x = in.u32le();
	Dataset d;
	d.n_classes = in.u32le();
	if (n * n_x > (std::uint64_t{1} << 31)) {
		throw FormatError(FormatError::Kind::DimensionOverflow, origin + ": dimensions overflow");
	}
	in.need(n * n_x * 8 + n * 4, "payload");
	d.examples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_x));
	in.f64le(std::span<double>(d.examples.data(), static_cast<std::size_t>(d.examples.size())));
	d.labels.resize(n);
	for (auto& l : d.labels) {
		l = in.u32le();
	}
	in.expect_end();
	d.validate();
	return d;
}

inline Dataset load_raw(const std::filesystem::path& path) {
	const Bytes data = read_file(path);
	return parse_raw(data, path.string());
}

inline void save_raw(const std::filesystem::path& path, const Dataset& d) {
	write_file(path, encode_raw(d));
}

/// Keeps at most per_class examples of each class, in file order.
inline Dataset take_per_class(const Dataset& d, std::size_t per_class) {
	std::vector<std::size_t> counts(d.n_classes, 0);
	std::vector<Eigen::Index> keep;
	for (std::size_t i = 0; i < d.size(); ++i) {
		if (counts[d.labels[i]]++ < per_class) {
			keep.push_back(static_cast<Eigen::Index>(i));
		}
	}
	Dataset out;
	out.n_classes = d.n_classes;
	out.examples = d.examples(keep, Eigen::all);
	for (auto i : keep) {
		out.labels.push_back(d.labels[static_cast<std::size_t>(i)]);
	}
	return out;
}

}  // namespace ccgae

#endif  // CCGAE_DATA_IO_HPP_

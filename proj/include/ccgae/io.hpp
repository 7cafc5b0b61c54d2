#ifndef CCGAE_IO_HPP_
#define CCGAE_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

namespace ccgae {

/// Error raised by every file loader and writer. kind distinguishes the
/// failure so callers (and tests) can tell a bad header from a short file.
class FormatError : public std::runtime_error {
public:
	enum class Kind { Io, WrongMagic, Truncated, DimensionOverflow, Invalid };

	FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

	Kind kind() const { return kind_; }

private:
	Kind kind_;
};

using Bytes = std::vector<std::uint8_t>;

inline bool is_gzip(std::span<const std::uint8_t> data) {
	return data.size() >= 2 && data[0] == 0x1f && data[1] == 0x8b;
}

inline Bytes gunzip(std::span<const std::uint8_t> data, const std::string& origin) {
	z_stream zs{};
	if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
		throw FormatError(FormatError::Kind::Io, origin + ": inflateInit failed");
	}
	zs.next_in = const_cast<Bytef*>(data.data());
	zs.avail_in = static_cast<uInt>(data.size());
	Bytes out;
	std::uint8_t chunk[1 << 16];
	int rc = Z_OK;
	while (rc != Z_STREAM_END) {
		zs.next_out = chunk;
		zs.avail_out = sizeof(chunk);
		rc = inflate(&zs, Z_NO_FLUSH);
		if (rc != Z_OK && rc != Z_STREAM_END) {
			inflateEnd(&zs);
			throw FormatError(FormatError::Kind::Truncated, origin + ": corrupt or truncated gzip stream");
		}
		out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
		if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
			inflateEnd(&zs);
			throw FormatError(FormatError::Kind::Truncated, origin + ": truncated gzip stream");
		}
	}
	inflateEnd(&zs);
	return out;
}

/// Reads a whole file. Content starting with the gzip magic is inflated.
inline Bytes read_file(const std::filesystem::path& path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
	}
	Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
	if (is_gzip(data)) {
		return gunzip(data, path.string());
	}
	return data;
}

/// Writes bytes via a temporary file so a failed write never leaves a partial
/// artifact at path.
inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
	auto tmp = path;
	tmp += ".tmp";
	{
		std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
		if (!out) {
			throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
		}
		out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
		if (!out) {
			throw FormatError(FormatError::Kind::Io, "write failed: " + path.string());
		}
	}
	std::error_code ec;
	std::filesystem::rename(tmp, path, ec);
	if (ec) {
		throw FormatError(FormatError::Kind::Io, "cannot move " + tmp.string() + " to " + path.string());
	}
}

/// Append-only little-endian encoder.
class ByteWriter {
public:
	void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
	void u8(std::uint8_t v) { bytes_.push_back(v); }

	void u32le(std::uint32_t v) {
		for (int i = 0; i < 4; ++i) {
			bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
		}
	}

	void u32be(std::uint32_t v) {
		for (int i = 3; i >= 0; --i) {
			bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
		}
	}

	void f64le(double v) {
		const auto bits = std::bit_cast<std::uint64_t>(v);
		for (int i = 0; i < 8; ++i) {
			bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
		}
	}

	void f64le(std::span<const double> vs) {
		for (double v : vs) {
			f64le(v);
		}
	}

	const Bytes& bytes() const { return bytes_; }
	Bytes take() { return std::move(bytes_); }

private:
	Bytes bytes_;
};

/// Bounds-checked decoder; running past the end raises Truncated.
class ByteReader {
public:
	ByteReader(std::span<const std::uint8_t> data, std::string origin)
		: data_(data), origin_(std::move(origin)) {}

	std::size_t remaining() const { return data_.size() - pos_; }

	void expect_magic(std::string_view m) {
		need(m.size(), "magic");
		if (std::memcmp(data_.data() + pos_, m.data(), m.size()) != 0) {
			throw FormatError(FormatError::Kind::WrongMagic,
					origin_ + ": wrong magic (expected " + std::string(m) + ")");
		}
		pos_ += m.size();
	}

	std::uint8_t u8() {
		need(1, "byte");
		return data_[pos_++];
	}

	std::uint32_t u32le() {
		need(4, "u32");
		std::uint32_t v = 0;
		for (int i = 0; i < 4; ++i) {
			v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
		}
		return v;
	}

	std::uint32_t u32be() {
		need(4, "u32");
		std::uint32_t v = 0;
		for (int i = 0; i < 4; ++i) {
			v = (v << 8) | data_[pos_++];
		}
		return v;
	}

	double f64le() {
		need(8, "f64");
		std::uint64_t bits = 0;
		for (int i = 0; i < 8; ++i) {
			bits |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
		}
		return std::bit_cast<double>(bits);
	}

	void f64le(std::span<double> out) {
		need(out.size() * 8, "f64 block");
		for (double& v : out) {
			v = f64le();
		}
	}

	std::span<const std::uint8_t> take(std::size_t n, const char* what) {
		need(n, what);
		auto s = data_.subspan(pos_, n);
		pos_ += n;
		return s;
	}

	void expect_end() const {
		if (pos_ != data_.size()) {
			throw FormatError(FormatError::Kind::Invalid,
					origin_ + ": " + std::to_string(data_.size() - pos_) + " trailing bytes");
		}
	}

	void need(std::size_t n, const char* what) const {
		if (data_.size() - pos_ < n) {
			throw FormatError(FormatError::Kind::Truncated, origin_ + ": truncated while reading " + what);
		}
	}

private:
	std::span<const std::uint8_t> data_;
	std::string origin_;
	std::size_t pos_ = 0;
};

}  // namespace ccgae

#endif  // CCGAE_IO_HPP_

#ifndef CCGAE_CHECKPOINT_HPP_
#define CCGAE_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <variant>

#include "ccgae/core.hpp"
#include "ccgae/io.hpp"
#include "ccgae/models.hpp"

namespace ccgae {

// Checkpoint layouts. Integers are u32 LE, enums single bytes, parameters
// f64 LE row-major.
//
//   CCGAE1  n_X n_Y n_F n_H  s_H s_O loss  Wx Wy Wh b_h b_x
//   CCDAE1  n_X n_H          s_H s_O loss tied  W b b_out [W_out]

inline constexpr std::string_view kGaeMagic = "CCGAE1";
inline constexpr std::string_view kDaeMagic = "CCDAE1";

struct GaeCheckpoint {
	GaeParams params;
	LossKind loss = LossKind::CrossEntropy;
};

struct DaeCheckpoint {
	DaeParams params;
	LossKind loss = LossKind::CrossEntropy;
};

using Checkpoint = std::variant<GaeCheckpoint, DaeCheckpoint>;

namespace detail {

inline Activation activation_byte(std::uint8_t b, const std::string& origin) {
	if (b > static_cast<std::uint8_t>(Activation::ReLU)) {
		throw FormatError(FormatError::Kind::Invalid, origin + ": bad activation code " + std::to_string(b));
	}
	return static_cast<Activation>(b);
}

inline LossKind loss_byte(std::uint8_t b, const std::string& origin) {
	if (b > static_cast<std::uint8_t>(LossKind::CrossEntropy)) {
		throw FormatError(FormatError::Kind::Invalid, origin + ": bad loss code " + std::to_string(b));
	}
	return static_cast<LossKind>(b);
}

template<typename Params>
void write_blocks(ByteWriter& out, const Params& p) {
	for (const auto& block : p.blocks()) {
		out.f64le(block.values);
	}
}

template<typename Params>
void read_blocks(ByteReader& in, Params& p) {
	for (auto& block : p.blocks()) {
		in.f64le(block.values);
	}
}

inline std::uint32_t dim32(Eigen::Index n) { return static_cast<std::uint32_t>(n); }

inline void check_dims(std::uint64_t product, const std::string& origin) {
	if (product > (std::uint64_t{1} << 31)) {
		throw FormatError(FormatError::Kind::DimensionOverflow, origin + ": dimensions overflow");
	}
}

}  // namespace detail

inline Bytes encode_checkpoint(const GaeParams& p, LossKind loss) {
	p.validate();
	ByteWriter out;
	out.magic(kGaeMagic);
	out.u32le(detail::dim32(p.n_x()));
	out.u32le(detail::dim32(p.n_y()));
	out.u32le(detail::dim32(p.n_f()));
	out.u32le(detail::dim32(p.n_h()));
	out.u8(static_cast<std::uint8_t>(p.s_h));
	out.u8(static_cast<std::uint8_t>(p.s_o));
	out.u8(static_cast<std::uint8_t>(loss));
	detail::write_blocks(out, p);
	return out.take();
}

inline Bytes encode_checkpoint(const DaeParams& p, LossKind loss) {
	p.validate();
	ByteWriter out;
	out.magic(kDaeMagic);
	out.u32le(detail::dim32(p.n_x()));
	out.u32le(detail::dim32(p.n_h()));
	out.u8(static_cast<std::uint8_t>(p.s_h));
	out.u8(static_cast<std::uint8_t>(p.s_o));
	out.u8(static_cast<std::uint8_t>(loss));
	out.u8(p.tied ? 1 : 0);
	detail::write_blocks(out, p);
	return out.take();
}

inline Checkpoint parse_checkpoint(std::span<const std::uint8_t> data, const std::string& origin) {
	ByteReader in(data, origin);
	in.need(6, "magic");
	const std::string_view magic(reinterpret_cast<const char*>(data.data()), 6);
	if (magic == kGaeMagic) {
		in.expect_magic(kGaeMagic);
		GaeDims d;
		d.n_x = in.u32le();
		d.n_y = in.u32le();
		d.n_f = in.u32le();
		d.n_h = in.u32le();
		detail::check_dims(static_cast<std::uint64_t>(d.n_f) * (d.n_x + d.n_y + d.n_h), origin);
		const Activation s_h = detail::activation_byte(in.u8(), origin);
		const Activation s_o = detail::activation_byte(in.u8(), origin);
		const LossKind loss = detail::loss_byte(in.u8(), origin);
		in.need(8 * static_cast<std::size_t>(d.n_f * (d.n_x + d.n_y + d.n_h) + d.n_h + d.n_x), "parameters");
		GaeCheckpoint ck{GaeParams::zeros(d, s_h, s_o), loss};
		detail::read_blocks(in, ck.params);
		in.expect_end();
		return ck;
	}
	if (magic == kDaeMagic) {
		in.expect_magic(kDaeMagic);
		const Eigen::Index n_x = in.u32le();
		const Eigen::Index n_h = in.u32le();
		detail::check_dims(static_cast<std::uint64_t>(n_x) * n_h, origin);
		const Activation s_h = detail::activation_byte(in.u8(), origin);
		const Activation s_o = detail::activation_byte(in.u8(), origin);
		const LossKind loss = detail::loss_byte(in.u8(), origin);
		const std::uint8_t tied = in.u8();
		if (tied > 1) {
			throw FormatError(FormatError::Kind::Invalid, origin + ": bad tied flag");
		}
		in.need(8 * static_cast<std::size_t>(n_x * n_h * (tied ? 1 : 2) + n_x + n_h), "parameters");
		DaeCheckpoint ck{DaeParams::zeros(n_x, n_h, tied == 1, s_h, s_o), loss};
		detail::read_blocks(in, ck.params);
		in.expect_end();
		return ck;
	}
	throw FormatError(FormatError::Kind::WrongMagic, origin + ": wrong magic (expected " +
			std::string(kGaeMagic) + " or " + std::string(kDaeMagic) + ")");
}

template<typename Params>
void save_checkpoint(const std::filesystem::path& path, const Params& p, LossKind loss) {
	write_file(path, encode_checkpoint(p, loss));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
	const Bytes data = read_file(path);
	return parse_checkpoint(data, path.string());
}

inline GaeCheckpoint load_gae_checkpoint(const std::filesystem::path& path) {
	auto ck = load_checkpoint(path);
	if (auto* g = std::get_if<GaeCheckpoint>(&ck)) {
		return std::move(*g);
	}
	throw FormatError(FormatError::Kind::WrongMagic, path.string() + ": not a gated autoencoder checkpoint");
}

}  // namespace ccgae

#endif  // CCGAE_CHECKPOINT_HPP_

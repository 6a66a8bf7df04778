#include "llnsim/lowpan/codec.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace llnsim::lowpan {

namespace {

constexpr std::uint8_t kTfElidedBit = 0x20;
constexpr std::uint8_t kNhElidedBit = 0x10;
constexpr std::uint8_t kReservedMask = 0x0f;
constexpr std::uint32_t kFlowLabelMask = 0x000f'ffff;

bool src_elided(Mode m) { return m == Mode::partly_src || m == Mode::fully_compressed; }
bool dst_elided(Mode m) { return m == Mode::partly_dst || m == Mode::fully_compressed; }

void check_valid(const Ipv6Header& h) {
    if (h.version != 6) {
        throw CodecError(CodecError::Kind::malformed_header, fmt::format("IPv6 version {} != 6", h.version));
    }
    if (h.flow_label > kFlowLabelMask) {
        throw CodecError(CodecError::Kind::malformed_header, "flow label exceeds 20 bits");
    }
}

}  // namespace

const char* to_string(Mode m) {
    switch (m) {
        case Mode::uncompressed: return "uncompressed";
        case Mode::partly_src: return "partly_src";
        case Mode::partly_dst: return "partly_dst";
        case Mode::fully_compressed: return "fully_compressed";
    }
    return "?";
}

std::array<std::uint8_t, kIpv6HeaderSize> serialize(const Ipv6Header& h) {
    if (h.version > 0x0f) throw CodecError(CodecError::Kind::malformed_header, "version exceeds 4 bits");
    if (h.flow_label > kFlowLabelMask) throw CodecError(CodecError::Kind::malformed_header, "flow label exceeds 20 bits");
    std::array<std::uint8_t, kIpv6HeaderSize> out{};
    out[0] = static_cast<std::uint8_t>((h.version << 4) | (h.traffic_class >> 4));
    out[1] = static_cast<std::uint8_t>(((h.traffic_class & 0x0f) << 4) | ((h.flow_label >> 16) & 0x0f));
    out[2] = static_cast<std::uint8_t>((h.flow_label >> 8) & 0xff);
    out[3] = static_cast<std::uint8_t>(h.flow_label & 0xff);
    out[4] = static_cast<std::uint8_t>(h.payload_length >> 8);
    out[5] = static_cast<std::uint8_t>(h.payload_length & 0xff);
    out[6] = h.next_header;
    out[7] = h.hop_limit;
    std::copy(h.src.bytes.begin(), h.src.bytes.end(), out.begin() + 8);
    std::copy(h.dst.bytes.begin(), h.dst.bytes.end(), out.begin() + 24);
    return out;
}

Ipv6Header parse_ipv6_header(std::span<const std::uint8_t> o) {
    if (o.size() != kIpv6HeaderSize) {
        throw CodecError(CodecError::Kind::truncated, fmt::format("IPv6 header must be 40 octets, got {}", o.size()));
    }
    Ipv6Header h;
    h.version = o[0] >> 4;
    h.traffic_class = static_cast<std::uint8_t>(((o[0] & 0x0f) << 4) | (o[1] >> 4));
    h.flow_label = (static_cast<std::uint32_t>(o[1] & 0x0f) << 16) | (static_cast<std::uint32_t>(o[2]) << 8) | o[3];
    h.payload_length = static_cast<std::uint16_t>((o[4] << 8) | o[5]);
    h.next_header = o[6];
    h.hop_limit = o[7];
    std::copy(o.begin() + 8, o.begin() + 24, h.src.bytes.begin());
    std::copy(o.begin() + 24, o.begin() + 40, h.dst.bytes.begin());
    return h;
}

Mode select_mode(const Ipv6Address& src, const Ipv6Address& dst, const MacContext& ctx, bool intra_network) {
    const bool src_ok = derivable_from_mac(src, ctx.shared_prefix, ctx.src_mac);
    const bool dst_ok = derivable_from_mac(dst, ctx.shared_prefix, ctx.dst_mac);
    if (src_ok && dst_ok) return intra_network ? Mode::fully_compressed : Mode::partly_dst;
    if (src_ok) return Mode::partly_src;
    if (dst_ok) return Mode::partly_dst;
    return Mode::uncompressed;
}

CompressedHeader compress(const Ipv6Header& h, const MacContext& ctx, bool intra_network) {
    check_valid(h);

    CompressedHeader c;
    c.mode = select_mode(h.src, h.dst, ctx, intra_network);
    c.elided.traffic_class_flow_label = h.traffic_class == 0 && h.flow_label == 0;
    c.elided.next_header = h.next_header == kNextHeaderUdp;
    c.elided.src_iid = src_elided(c.mode);
    c.elided.dst_iid = dst_elided(c.mode);

    auto& out = c.inline_bytes;
    std::uint8_t dispatch = static_cast<std::uint8_t>(static_cast<std::uint8_t>(c.mode) << 6);
    if (c.elided.traffic_class_flow_label) dispatch |= kTfElidedBit;
    if (c.elided.next_header) dispatch |= kNhElidedBit;
    out.push_back(dispatch);

    if (!c.elided.traffic_class_flow_label) {
        out.push_back(h.traffic_class);
        out.push_back(static_cast<std::uint8_t>((h.flow_label >> 16) & 0x0f));
        out.push_back(static_cast<std::uint8_t>((h.flow_label >> 8) & 0xff));
        out.push_back(static_cast<std::uint8_t>(h.flow_label & 0xff));
    }
    if (!c.elided.next_header) out.push_back(h.next_header);
    out.push_back(h.hop_limit);
    if (!c.elided.src_iid) out.insert(out.end(), h.src.bytes.begin(), h.src.bytes.end());
    if (!c.elided.dst_iid) out.insert(out.end(), h.dst.bytes.begin(), h.dst.bytes.end());
    return c;
}

Decoded decompress(std::span<const std::uint8_t> in, const MacContext& ctx) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n, const char* field) {
        if (in.size() - pos < n) {
            throw CodecError(CodecError::Kind::truncated,
                             fmt::format("truncated compressed header: {} needs {} octet(s) at offset {}", field, n, pos));
        }
    };

    need(1, "dispatch");
    const std::uint8_t dispatch = in[pos++];
    if (dispatch & kReservedMask) {
        throw CodecError(CodecError::Kind::reserved_bits, fmt::format("reserved dispatch bits set: 0x{:02x}", dispatch));
    }
    const Mode mode = static_cast<Mode>(dispatch >> 6);

    Ipv6Header h;
    h.version = 6;
    if (!(dispatch & kTfElidedBit)) {
        need(4, "traffic class/flow label");
        h.traffic_class = in[pos];
        if (in[pos + 1] & 0xf0) {
            throw CodecError(CodecError::Kind::reserved_bits, "nonzero padding before flow label");
        }
        h.flow_label = (static_cast<std::uint32_t>(in[pos + 1]) << 16) | (static_cast<std::uint32_t>(in[pos + 2]) << 8) |
                       in[pos + 3];
        if (h.traffic_class == 0 && h.flow_label == 0) {
            throw CodecError(CodecError::Kind::length_mismatch, "zero traffic class/flow label carried inline");
        }
        pos += 4;
    }
    if (dispatch & kNhElidedBit) {
        h.next_header = kNextHeaderUdp;
    } else {
        need(1, "next header");
        h.next_header = in[pos++];
        if (h.next_header == kNextHeaderUdp) {
            throw CodecError(CodecError::Kind::length_mismatch, "UDP next header carried inline");
        }
    }
    need(1, "hop limit");
    h.hop_limit = in[pos++];

    if (src_elided(mode)) {
        h.src = address_from_mac(ctx.shared_prefix, ctx.src_mac);
    } else {
        need(16, "source address");
        std::copy(in.begin() + pos, in.begin() + pos + 16, h.src.bytes.begin());
        pos += 16;
    }
    if (dst_elided(mode)) {
        h.dst = address_from_mac(ctx.shared_prefix, ctx.dst_mac);
    } else {
        need(16, "destination address");
        std::copy(in.begin() + pos, in.begin() + pos + 16, h.dst.bytes.begin());
        pos += 16;
    }

    if (ctx.frame_payload_length < pos) {
        throw CodecError(CodecError::Kind::length_mismatch,
                         fmt::format("frame payload length {} shorter than compressed header {}", ctx.frame_payload_length, pos));
    }
    const std::size_t payload = ctx.frame_payload_length - pos;
    if (payload > 0xffff) {
        throw CodecError(CodecError::Kind::length_mismatch, "reconstructed payload length exceeds 16 bits");
    }
    h.payload_length = static_cast<std::uint16_t>(payload);
    return Decoded{h, pos};
}

Ipv6Header decompress(const CompressedHeader& c, const MacContext& ctx) {
    auto d = decompress(std::span<const std::uint8_t>(c.inline_bytes), ctx);
    if (d.consumed != c.inline_bytes.size()) {
        throw CodecError(CodecError::Kind::length_mismatch,
                         fmt::format("{} trailing octet(s) after compressed header", c.inline_bytes.size() - d.consumed));
    }
    if (static_cast<Mode>(c.inline_bytes[0] >> 6) != c.mode) {
        throw CodecError(CodecError::Kind::length_mismatch, "mode field disagrees with dispatch octet");
    }
    return d.header;
}

}  // namespace llnsim::lowpan

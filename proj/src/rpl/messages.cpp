#include "llnsim/rpl/messages.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace llnsim::rpl {

namespace {

enum Code : std::uint8_t { kDis = 0x00, kDio = 0x01, kDao = 0x02, kDaoAck = 0x03 };

constexpr std::uint8_t kDisSolicitedFlag = 0x01;
constexpr std::uint8_t kDaoAckRequested = 0x80;
constexpr std::uint8_t kDaoNoPath = 0x01;

constexpr std::size_t kIcmpHeader = 4;
constexpr std::size_t kDaoBodySize = 22;
constexpr std::size_t kDaoAckBodySize = 6;

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    void addr(const lowpan::Ipv6Address& a) { out_.insert(out_.end(), a.bytes.begin(), a.bytes.end()); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    lowpan::Ipv6Address addr() {
        need(16);
        lowpan::Ipv6Address a;
        std::copy(in_.begin() + pos_, in_.begin() + pos_ + 16, a.bytes.begin());
        pos_ += 16;
        return a;
    }
    void finish(const char* what) const {
        if (pos_ != in_.size()) {
            throw ControlCodecError(fmt::format("{}: {} trailing octet(s)", what, in_.size() - pos_));
        }
    }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw ControlCodecError(fmt::format("truncated RPL message at offset {}", pos_));
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void header(Writer& w, Code code) {
    w.u8(kIcmpv6RplType);
    w.u8(code);
    w.u16(0);
}

struct Encoder {
    Writer& w;

    void operator()(const DioMessage& m) const {
        header(w, kDio);
        w.u8(m.rpl_instance_id);
        w.u8(m.version_number);
        w.u16(m.rank);
        w.u8(static_cast<std::uint8_t>((m.grounded ? 0x80 : 0) | (m.o_flag ? 0x40 : 0) | (m.mop.value() << 3) |
                                       m.prf.value()));
        w.u8(m.dtsn);
        w.u8(m.flags);
        w.u8(m.reserved);
        w.addr(m.dodag_id);
    }
    void operator()(const DisMessage& m) const {
        header(w, kDis);
        w.u8(m.solicited_dodag_id ? kDisSolicitedFlag : 0);
        w.u8(0);
        w.u16(m.sender);
        if (m.solicited_dodag_id) w.addr(*m.solicited_dodag_id);
    }
    void operator()(const DaoMessage& m) const {
        header(w, kDao);
        w.u8(m.rpl_instance_id);
        w.u8(static_cast<std::uint8_t>(kDaoAckRequested | (m.no_path ? kDaoNoPath : 0)));
        w.u8(0);
        w.u8(m.sequence);
        w.u16(m.sender);
        w.addr(m.target);
    }
    void operator()(const DaoAckMessage& m) const {
        header(w, kDaoAck);
        w.u8(m.rpl_instance_id);
        w.u8(0);
        w.u8(m.sequence);
        w.u8(m.status);
        w.u16(m.responder);
    }
};

}  // namespace

const char* kind_name(const ControlMessage& msg) {
    switch (msg.index()) {
        case 0: return "dio";
        case 1: return "dis";
        case 2: return "dao";
        case 3: return "dao_ack";
    }
    return "?";
}

std::vector<std::uint8_t> encode_control(const ControlMessage& msg) {
    Writer w;
    std::visit(Encoder{w}, msg);
    return w.take();
}

ControlMessage decode_control(std::span<const std::uint8_t> octets) {
    if (octets.size() < kIcmpHeader) throw ControlCodecError("truncated ICMPv6 header");
    if (octets[0] != kIcmpv6RplType) throw ControlCodecError(fmt::format("ICMPv6 type {} is not RPL", octets[0]));
    Reader r(octets.subspan(kIcmpHeader));

    switch (octets[1]) {
        case kDio: {
            DioMessage m;
            m.rpl_instance_id = r.u8();
            m.version_number = r.u8();
            m.rank = r.u16();
            const std::uint8_t gmp = r.u8();
            m.grounded = gmp & 0x80;
            m.o_flag = gmp & 0x40;
            m.mop = Mop((gmp >> 3) & 0x07);
            m.prf = Prf(gmp & 0x07);
            m.dtsn = r.u8();
            m.flags = r.u8();
            m.reserved = r.u8();
            m.dodag_id = r.addr();
            r.finish("DIO");
            return m;
        }
        case kDis: {
            DisMessage m;
            const std::uint8_t flags = r.u8();
            if (flags & ~kDisSolicitedFlag) throw ControlCodecError("DIS: unknown flag bits");
            if (r.u8() != 0) throw ControlCodecError("DIS: reserved octet nonzero");
            m.sender = r.u16();
            if (flags & kDisSolicitedFlag) m.solicited_dodag_id = r.addr();
            r.finish("DIS");
            return m;
        }
        case kDao: {
            DaoMessage m;
            m.rpl_instance_id = r.u8();
            const std::uint8_t flags = r.u8();
            if ((flags & ~(kDaoAckRequested | kDaoNoPath)) || !(flags & kDaoAckRequested)) {
                throw ControlCodecError("DAO: unexpected flag bits");
            }
            m.no_path = flags & kDaoNoPath;
            if (r.u8() != 0) throw ControlCodecError("DAO: reserved octet nonzero");
            m.sequence = r.u8();
            m.sender = r.u16();
            m.target = r.addr();
            r.finish("DAO");
            return m;
        }
        case kDaoAck: {
            DaoAckMessage m;
            m.rpl_instance_id = r.u8();
            if (r.u8() != 0) throw ControlCodecError("DAO-ACK: reserved octet nonzero");
            m.sequence = r.u8();
            m.status = r.u8();
            m.responder = r.u16();
            r.finish("DAO-ACK");
            return m;
        }
        default: throw ControlCodecError(fmt::format("unknown RPL code 0x{:02x}", octets[1]));
    }
}

}  // namespace llnsim::rpl

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "llnsim/common/types.hpp"
#include "llnsim/lowpan/address.hpp"

namespace llnsim::rpl {

/// Unsigned value restricted to `Bits` bits; out-of-range construction throws.
template <unsigned Bits>
class BitField {
public:
    static constexpr unsigned kMax = (1u << Bits) - 1;

    constexpr BitField() = default;
    constexpr explicit BitField(unsigned v) : value_(static_cast<std::uint8_t>(v)) {
        if (v > kMax) throw std::out_of_range("value " + std::to_string(v) + " exceeds " + std::to_string(Bits) + " bits");
    }

    constexpr unsigned value() const { return value_; }

    friend constexpr bool operator==(BitField, BitField) = default;

private:
    std::uint8_t value_ = 0;
};

using Mop = BitField<3>;
using Prf = BitField<3>;

/// Storing mode of operation without multicast.
inline constexpr unsigned kMopStoring = 2;

inline constexpr std::uint8_t kIcmpv6RplType = 155;

/*
 * DIO body, 24 octets:
 *
 *   0                   1                   2                   3
 *   +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 *   | RPLInstanceID |Version Number |             Rank              |
 *   +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 *   |G|O| MOP | Prf |     DTSN      |     Flags     |   Reserved    |
 *   +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
 *   |                       DODAGID (128 bits)                      |
 */
struct DioMessage {
    std::uint8_t rpl_instance_id = 0;
    std::uint8_t version_number = 0;
    std::uint16_t rank = 0;
    bool grounded = false;
    bool o_flag = false;
    Mop mop{kMopStoring};
    Prf prf{0};
    std::uint8_t dtsn = 0;
    std::uint8_t flags = 0;
    std::uint8_t reserved = 0;
    lowpan::Ipv6Address dodag_id;

    friend bool operator==(const DioMessage&, const DioMessage&) = default;
};

struct DisMessage {
    MoteId sender = 0;
    std::optional<lowpan::Ipv6Address> solicited_dodag_id;

    friend bool operator==(const DisMessage&, const DisMessage&) = default;
};

struct DaoMessage {
    std::uint8_t rpl_instance_id = 0;
    MoteId sender = 0;
    lowpan::Ipv6Address target;
    std::uint8_t sequence = 0;
    /// Withdraws the route to `target` through `sender`; not acknowledged.
    bool no_path = false;

    friend bool operator==(const DaoMessage&, const DaoMessage&) = default;
};

struct DaoAckMessage {
    std::uint8_t rpl_instance_id = 0;
    MoteId responder = 0;
    std::uint8_t sequence = 0;
    std::uint8_t status = 0;

    friend bool operator==(const DaoAckMessage&, const DaoAckMessage&) = default;
};

using ControlMessage = std::variant<DioMessage, DisMessage, DaoMessage, DaoAckMessage>;

const char* kind_name(const ControlMessage& msg);

class ControlCodecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDioBodySize = 24;

/// ICMPv6 RPL message: type 155, code (DIS 0, DIO 1, DAO 2, DAO-ACK 3),
/// two checksum octets (left zero; frames carry no pseudo-header), body.
std::vector<std::uint8_t> encode_control(const ControlMessage& msg);

/// Inverse of encode_control. Throws ControlCodecError on truncation,
/// unknown codes, trailing octets or nonzero reserved bits.
ControlMessage decode_control(std::span<const std::uint8_t> octets);

}  // namespace llnsim::rpl

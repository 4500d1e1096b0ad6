#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace augur {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;
using Hash160 = std::array<uint8_t, 20>;
using Hash256 = std::array<uint8_t, 32>;
using PublicKey = std::array<uint8_t, 33>;
/// Compact r||s encoding, 32 bytes each, low-s normalized.
using Signature = std::array<uint8_t, 64>;

inline ByteView as_bytes(std::string_view s)
{
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

Hash256 sha256(ByteView data);
Hash256 double_sha256(ByteView data);
/// RIPEMD160(SHA256(data)).
Hash160 hash160(ByteView data);
inline Hash160 hash160(std::string_view s) { return hash160(as_bytes(s)); }

Hash256 hmac_sha256(ByteView key, ByteView data);

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);
Hash160 hash160_from_hex(std::string_view hex);

std::string base58_encode(ByteView data);
Bytes base58_decode(std::string_view text);

/// Address version bytes. User addresses start with '1'; event and market
/// addresses get their own prefixes so address classes are distinguishable.
enum class AddressVersion : uint8_t {
    User = 0x00,
    Event = 0x23,
    Market = 0x32,
};

class AddressError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string encode_address(const Hash160& digest, uint8_t version);
inline std::string encode_address(const Hash160& digest, AddressVersion version)
{
    return encode_address(digest, static_cast<uint8_t>(version));
}

struct DecodedAddress {
    uint8_t version = 0;
    Hash160 digest{};
};

/// Throws AddressError on bad alphabet, length, or checksum.
DecodedAddress decode_address(std::string_view encoded);

class KeyPair {
public:
    /// Throws std::invalid_argument unless 0 < secret < n.
    static KeyPair from_secret(const Hash256& secret);

    /// Deterministic key from a seed string: SHA256(seed), re-hashed until
    /// it lands in the valid scalar range. Used by the simulator wallet.
    static KeyPair derive(std::string_view seed);

    const Hash256& secret() const { return secret_; }
    const PublicKey& public_key() const { return public_key_; }
    Hash160 key_hash() const { return hash160(public_key_); }
    std::string address() const { return encode_address(key_hash(), AddressVersion::User); }

    /// ECDSA over SHA256(msg) with an RFC 6979 nonce.
    Signature sign(ByteView msg) const;

private:
    KeyPair() = default;

    Hash256 secret_{};
    PublicKey public_key_{};
};

/// Returns false on any mismatch or malformed key/signature.
bool verify_signature(ByteView msg, const Signature& sig, ByteView public_key);

/// RFC 6979 nonce for a 256-bit group order (exposed for tests).
Hash256 rfc6979_nonce(const Hash256& secret, const Hash256& digest, const Hash256& order);

}  // namespace augur

#include "augur/crypto.hpp"

#include <algorithm>
#include <memory>

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>

// RIPEMD160 lives in the legacy provider under OpenSSL 3, so the EVP route
// fails by default. The one-shot function is deprecated but self-contained.
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wdeprecated-declarations"
#include <openssl/ripemd.h>

namespace augur {

namespace {

Hash160 ripemd160(ByteView data)
{
    Hash160 out{};
    RIPEMD160(data.data(), data.size(), out.data());
    return out;
}

}  // namespace
}  // namespace augur
#pragma GCC diagnostic pop

namespace augur {

namespace {

struct BnDeleter {
    void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
struct BnCtxDeleter {
    void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};
struct PointDeleter {
    void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
struct GroupDeleter {
    void operator()(EC_GROUP* g) const { EC_GROUP_free(g); }
};

using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, PointDeleter>;
using GroupPtr = std::unique_ptr<EC_GROUP, GroupDeleter>;

BnPtr new_bn()
{
    BnPtr b(BN_new());
    if (!b)
        throw std::bad_alloc();
    return b;
}

BnPtr bn_from(ByteView bytes)
{
    BnPtr b(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
    if (!b)
        throw std::bad_alloc();
    return b;
}

Hash256 bn_to_32(const BIGNUM* b)
{
    Hash256 out{};
    if (BN_bn2binpad(b, out.data(), static_cast<int>(out.size())) != 32)
        throw std::runtime_error("bignum exceeds 256 bits");
    return out;
}

// secp256k1 parameters, created once. EC_GROUP is safe to share read-only.
struct Curve {
    GroupPtr group;
    BnPtr order;
    BnPtr half_order;
    Hash256 order_bytes{};

    Curve()
        : group(EC_GROUP_new_by_curve_name(NID_secp256k1)), order(new_bn()), half_order(new_bn())
    {
        if (!group)
            throw std::runtime_error("secp256k1 unavailable");
        if (!EC_GROUP_get_order(group.get(), order.get(), nullptr))
            throw std::runtime_error("secp256k1 order");
        BN_rshift1(half_order.get(), order.get());
        order_bytes = bn_to_32(order.get());
    }
};

const Curve& curve()
{
    static const Curve c;
    return c;
}

bool in_scalar_range(const Hash256& v, const Hash256& order)
{
    const bool nonzero = std::any_of(v.begin(), v.end(), [](uint8_t b) { return b != 0; });
    return nonzero && std::lexicographical_compare(v.begin(), v.end(), order.begin(), order.end());
}

Hash256 hmac(const Hash256& key, std::initializer_list<ByteView> parts)
{
    Bytes msg;
    for (auto p : parts)
        msg.insert(msg.end(), p.begin(), p.end());
    return hmac_sha256(key, msg);
}

PublicKey derive_public(const Hash256& secret)
{
    const Curve& c = curve();
    BnCtxPtr ctx(BN_CTX_new());
    BnPtr d = bn_from(secret);
    PointPtr p(EC_POINT_new(c.group.get()));
    if (!ctx || !p || !EC_POINT_mul(c.group.get(), p.get(), d.get(), nullptr, nullptr, ctx.get()))
        throw std::runtime_error("public key derivation failed");
    PublicKey out{};
    if (EC_POINT_point2oct(c.group.get(), p.get(), POINT_CONVERSION_COMPRESSED, out.data(), out.size(), ctx.get())
        != out.size())
        throw std::runtime_error("public key serialization failed");
    return out;
}

constexpr std::string_view kBase58Alphabet = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

}  // namespace

Hash256 sha256(ByteView data)
{
    Hash256 out{};
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) || len != out.size())
        throw std::runtime_error("sha256 failed");
    return out;
}

Hash256 double_sha256(ByteView data)
{
    const Hash256 first = sha256(data);
    return sha256(first);
}

Hash160 hash160(ByteView data)
{
    const Hash256 inner = sha256(data);
    return ripemd160(inner);
}

Hash256 hmac_sha256(ByteView key, ByteView data)
{
    Hash256 out{};
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len))
        throw std::runtime_error("hmac failed");
    return out;
}

std::string to_hex(ByteView data)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xf]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    auto nibble = [&](char c) -> uint8_t {
        if (c >= '0' && c <= '9')
            return static_cast<uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f')
            return static_cast<uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F')
            return static_cast<uint8_t>(c - 'A' + 10);
        throw std::invalid_argument("invalid hex digit in: " + std::string(hex));
    };
    if (hex.size() % 2 != 0)
        throw std::invalid_argument("odd-length hex string");
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    return out;
}

Hash160 hash160_from_hex(std::string_view hex)
{
    const Bytes b = from_hex(hex);
    if (b.size() != 20)
        throw std::invalid_argument("expected 20-byte hex digest: " + std::string(hex));
    Hash160 out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

std::string base58_encode(ByteView data)
{
    size_t zeros = 0;
    while (zeros < data.size() && data[zeros] == 0)
        ++zeros;

    // Base-256 to base-58 long division, little-endian digit buffer.
    std::vector<uint8_t> digits((data.size() - zeros) * 138 / 100 + 1, 0);
    size_t length = 0;
    for (size_t i = zeros; i < data.size(); ++i) {
        int carry = data[i];
        size_t j = 0;
        for (auto it = digits.rbegin(); (carry != 0 || j < length) && it != digits.rend(); ++it, ++j) {
            carry += 256 * (*it);
            *it = static_cast<uint8_t>(carry % 58);
            carry /= 58;
        }
        length = j;
    }
    auto it = digits.begin() + static_cast<std::ptrdiff_t>(digits.size() - length);
    while (it != digits.end() && *it == 0)
        ++it;

    std::string out(zeros, '1');
    for (; it != digits.end(); ++it)
        out.push_back(kBase58Alphabet[*it]);
    return out;
}

Bytes base58_decode(std::string_view text)
{
    size_t zeros = 0;
    while (zeros < text.size() && text[zeros] == '1')
        ++zeros;

    std::vector<uint8_t> b256((text.size() - zeros) * 733 / 1000 + 1, 0);
    size_t length = 0;
    for (size_t i = zeros; i < text.size(); ++i) {
        const auto pos = kBase58Alphabet.find(text[i]);
        if (pos == std::string_view::npos)
            throw AddressError("invalid base58 character");
        int carry = static_cast<int>(pos);
        size_t j = 0;
        for (auto it = b256.rbegin(); (carry != 0 || j < length) && it != b256.rend(); ++it, ++j) {
            carry += 58 * (*it);
            *it = static_cast<uint8_t>(carry % 256);
            carry /= 256;
        }
        length = j;
    }
    auto it = b256.begin() + static_cast<std::ptrdiff_t>(b256.size() - length);
    while (it != b256.end() && *it == 0)
        ++it;

    Bytes out(zeros, 0);
    out.insert(out.end(), it, b256.end());
    return out;
}

std::string encode_address(const Hash160& digest, uint8_t version)
{
    Bytes payload;
    payload.reserve(25);
    payload.push_back(version);
    payload.insert(payload.end(), digest.begin(), digest.end());
    const Hash256 check = double_sha256(payload);
    payload.insert(payload.end(), check.begin(), check.begin() + 4);
    return base58_encode(payload);
}

DecodedAddress decode_address(std::string_view encoded)
{
    const Bytes raw = base58_decode(encoded);
    if (raw.size() != 25)
        throw AddressError("address has wrong length");
    const Hash256 check = double_sha256(ByteView(raw).first(21));
    if (!std::equal(check.begin(), check.begin() + 4, raw.begin() + 21))
        throw AddressError("address checksum mismatch");
    DecodedAddress out;
    out.version = raw[0];
    std::copy(raw.begin() + 1, raw.begin() + 21, out.digest.begin());
    return out;
}

Hash256 rfc6979_nonce(const Hash256& secret, const Hash256& digest, const Hash256& order)
{
    // qlen == hlen == 256, so bits2int is the identity and bits2octets is a
    // single conditional subtraction of the order.
    Hash256 h1 = digest;
    if (!std::lexicographical_compare(h1.begin(), h1.end(), order.begin(), order.end())) {
        BnCtxPtr ctx(BN_CTX_new());
        BnPtr h = bn_from(h1);
        BnPtr q = bn_from(order);
        BN_sub(h.get(), h.get(), q.get());
        h1 = bn_to_32(h.get());
    }

    Hash256 v;
    v.fill(0x01);
    Hash256 k{};
    const uint8_t zero = 0x00;
    const uint8_t one = 0x01;
    k = hmac(k, {v, ByteView(&zero, 1), secret, h1});
    v = hmac_sha256(k, v);
    k = hmac(k, {v, ByteView(&one, 1), secret, h1});
    v = hmac_sha256(k, v);
    for (;;) {
        v = hmac_sha256(k, v);
        if (in_scalar_range(v, order))
            return v;
        k = hmac(k, {v, ByteView(&zero, 1)});
        v = hmac_sha256(k, v);
    }
}

KeyPair KeyPair::from_secret(const Hash256& secret)
{
    if (!in_scalar_range(secret, curve().order_bytes))
        throw std::invalid_argument("private key outside secp256k1 scalar range");
    KeyPair kp;
    kp.secret_ = secret;
    kp.public_key_ = derive_public(secret);
    return kp;
}

KeyPair KeyPair::derive(std::string_view seed)
{
    Hash256 candidate = sha256(as_bytes(seed));
    while (!in_scalar_range(candidate, curve().order_bytes))
        candidate = sha256(candidate);
    return from_secret(candidate);
}

Signature KeyPair::sign(ByteView msg) const
{
    const Curve& c = curve();
    const Hash256 digest = sha256(msg);
    const Hash256 nonce = rfc6979_nonce(secret_, digest, c.order_bytes);

    BnCtxPtr ctx(BN_CTX_new());
    BnPtr k = bn_from(nonce);
    BnPtr d = bn_from(secret_);
    BnPtr z = bn_from(digest);
    PointPtr rp(EC_POINT_new(c.group.get()));
    BnPtr x = new_bn();
    BnPtr r = new_bn();
    BnPtr s = new_bn();
    BnPtr kinv = new_bn();
    if (!ctx || !rp)
        throw std::bad_alloc();

    bool ok = EC_POINT_mul(c.group.get(), rp.get(), k.get(), nullptr, nullptr, ctx.get())
        && EC_POINT_get_affine_coordinates(c.group.get(), rp.get(), x.get(), nullptr, ctx.get())
        && BN_nnmod(r.get(), x.get(), c.order.get(), ctx.get())
        && BN_mod_inverse(kinv.get(), k.get(), c.order.get(), ctx.get())
        // s = k^-1 (z + r d) mod n
        && BN_mod_mul(s.get(), r.get(), d.get(), c.order.get(), ctx.get())
        && BN_mod_add(s.get(), s.get(), z.get(), c.order.get(), ctx.get())
        && BN_mod_mul(s.get(), s.get(), kinv.get(), c.order.get(), ctx.get());
    if (!ok || BN_is_zero(r.get()) || BN_is_zero(s.get()))
        throw std::runtime_error("ecdsa signing failed");
    if (BN_cmp(s.get(), c.half_order.get()) > 0)
        BN_sub(s.get(), c.order.get(), s.get());

    Signature sig{};
    const Hash256 rb = bn_to_32(r.get());
    const Hash256 sb = bn_to_32(s.get());
    std::copy(rb.begin(), rb.end(), sig.begin());
    std::copy(sb.begin(), sb.end(), sig.begin() + 32);
    return sig;
}

bool verify_signature(ByteView msg, const Signature& sig, ByteView public_key)
{
    const Curve& c = curve();
    BnCtxPtr ctx(BN_CTX_new());
    PointPtr q(EC_POINT_new(c.group.get()));
    if (!ctx || !q)
        return false;
    if (public_key.size() != 33
        || !EC_POINT_oct2point(c.group.get(), q.get(), public_key.data(), public_key.size(), ctx.get()))
        return false;

    BnPtr r = bn_from(ByteView(sig).first(32));
    BnPtr s = bn_from(ByteView(sig).subspan(32));
    if (BN_is_zero(r.get()) || BN_is_zero(s.get()) || BN_cmp(r.get(), c.order.get()) >= 0
        || BN_cmp(s.get(), c.order.get()) >= 0)
        return false;

    const Hash256 digest = sha256(msg);
    BnPtr z = bn_from(digest);
    BnPtr w = new_bn();
    BnPtr u1 = new_bn();
    BnPtr u2 = new_bn();
    BnPtr x = new_bn();
    BnPtr v = new_bn();
    PointPtr point(EC_POINT_new(c.group.get()));
    if (!point)
        return false;
    bool ok = BN_mod_inverse(w.get(), s.get(), c.order.get(), ctx.get())
        && BN_mod_mul(u1.get(), z.get(), w.get(), c.order.get(), ctx.get())
        && BN_mod_mul(u2.get(), r.get(), w.get(), c.order.get(), ctx.get())
        && EC_POINT_mul(c.group.get(), point.get(), u1.get(), q.get(), u2.get(), ctx.get());
    if (!ok || EC_POINT_is_at_infinity(c.group.get(), point.get()))
        return false;
    if (!EC_POINT_get_affine_coordinates(c.group.get(), point.get(), x.get(), nullptr, ctx.get())
        || !BN_nnmod(v.get(), x.get(), c.order.get(), ctx.get()))
        return false;
    return BN_cmp(v.get(), r.get()) == 0;
}

}  // namespace augur

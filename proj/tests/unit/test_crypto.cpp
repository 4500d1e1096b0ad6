#include <doctest.h>

#include <random>

#include "augur/crypto.hpp"

using namespace augur;

namespace {

Hash256 secret_of(uint64_t low)
{
    Hash256 s{};
    for (int i = 0; i < 8; ++i)
        s[31 - i] = static_cast<uint8_t>(low >> (8 * i));
    return s;
}

Hash256 counting_secret()
{
    Hash256 s{};
    for (int i = 0; i < 32; ++i)
        s[i] = static_cast<uint8_t>(31 - i);
    return s;
}

}  // namespace

TEST_CASE("hash functions match reference vectors")
{
    CHECK(to_hex(sha256(as_bytes(""))) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(sha256(as_bytes("abc"))) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(double_sha256(as_bytes("abc"))) ==
          "4f8b42c22dd3729b519ba6f68d2da7cc5b2d606d05daed5ad5128cc03e6c6358");
    CHECK(to_hex(hash160(std::string_view(""))) == "b472a266d0bd89c13706a4132ccfb16f7c3b9fcb");
    CHECK(to_hex(hash160(std::string_view("abc"))) == "bb1be98c142444d7a56aa3981c3942a978e4dc33");
    CHECK(hash160(std::string_view("a")) != hash160(std::string_view("b")));
    CHECK(to_hex(hmac_sha256(as_bytes("key"), as_bytes("The quick brown fox jumps over the lazy dog"))) ==
          "f7bc83f430538424b13298e6aa6fb143ef4d59a14946175997479dbc2d1a3cd8");
}

TEST_CASE("base58 encoding")
{
    CHECK(base58_encode(from_hex("0000ff")) == "115Q");
    CHECK(base58_encode(as_bytes("hello world")) == "StV1DL6CwTryKyV");
    CHECK(base58_decode("StV1DL6CwTryKyV") == Bytes{'h', 'e', 'l', 'l', 'o', ' ', 'w', 'o', 'r', 'l', 'd'});
    CHECK_THROWS(base58_decode("0OIl"));
}

TEST_CASE("addresses carry a version and a checksum")
{
    const Hash160 zero{};
    const std::string z = encode_address(zero, AddressVersion::User);
    CHECK(z.rfind("1111111111", 0) == 0);

    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k) {
        Hash160 d;
        for (auto& b : d)
            b = static_cast<uint8_t>(rng());
        for (auto v : {AddressVersion::User, AddressVersion::Event, AddressVersion::Market}) {
            const auto enc = encode_address(d, v);
            const auto dec = decode_address(enc);
            CHECK(dec.digest == d);
            CHECK(dec.version == static_cast<uint8_t>(v));
        }
    }

    const std::string good = "1BgGZ9tcN4rm9KBzDn7KprQz87SZ26SAMH";
    for (size_t i = 1; i < good.size(); ++i) {
        std::string bad = good;
        bad[i] = bad[i] == '2' ? '3' : '2';
        CHECK_THROWS_AS(decode_address(bad), AddressError);
    }
}

TEST_CASE("keys, addresses and signatures match an independent implementation")
{
    const auto one = KeyPair::from_secret(secret_of(1));
    CHECK(to_hex(one.public_key()) == "0279be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798");
    CHECK(to_hex(one.key_hash()) == "751e76e8199196d454941c45d1b3a323f1433bd6");
    CHECK(one.address() == "1BgGZ9tcN4rm9KBzDn7KprQz87SZ26SAMH");
    CHECK(encode_address(one.key_hash(), AddressVersion::Event) == "FGWP1xKhDP5RmV525TmUoEwX9mTZwp3sJn");
    CHECK(encode_address(one.key_hash(), AddressVersion::Market) == "MJaRnao1s62a2zAKSkmG582KbLKianqb7v");
    CHECK(to_hex(one.sign(as_bytes("augur"))) ==
          "838e269161b1b407ee91775f98b17ef3c38c3e20d19d797e372525b0b2871e23"
          "71dc36ce43513a5e67b51e151b3b4e446970219a9e96e5377a6e9c2b9a0f38fc");

    const auto k = KeyPair::from_secret(counting_secret());
    CHECK(k.address() == "1CgoB7Y9Bv2PYGwdVfdX9rvJ3vD3yXv9G1");
    CHECK(to_hex(k.sign(as_bytes("augur"))) ==
          "df404391aa10733fcd17dfb6d16ceb81248383c21797f8571395a84f47527b6e"
          "08502a07151d20422341fc4aa7e60b623fb7fdf4659950b67dbb922f78a799f9");

    CHECK(KeyPair::derive("actor:alice").address() == "182znhvJTa8M1g4gSAJfVuAr9phAtYj3pp");
    CHECK_THROWS(KeyPair::from_secret(Hash256{}));
}

TEST_CASE("signatures verify only for the signed message and key")
{
    const auto a = KeyPair::derive("a");
    const auto b = KeyPair::derive("b");
    const Signature sig = a.sign(as_bytes("pay 5"));
    CHECK(verify_signature(as_bytes("pay 5"), sig, a.public_key()));
    CHECK_FALSE(verify_signature(as_bytes("pay 5"), sig, b.public_key()));
    CHECK(a.sign(as_bytes("pay 5")) == sig);

    std::mt19937_64 rng(11);
    for (int k = 0; k < 100; ++k) {
        Bytes msg(1 + rng() % 64);
        for (auto& x : msg)
            x = static_cast<uint8_t>(rng());
        const Signature s = a.sign(msg);
        REQUIRE(verify_signature(msg, s, a.public_key()));
        Bytes flipped = msg;
        flipped[rng() % flipped.size()] ^= static_cast<uint8_t>(1u << (rng() % 8));
        CHECK_FALSE(verify_signature(flipped, s, a.public_key()));
    }

    Signature high = sig;
    high[40] ^= 0x01;
    CHECK_FALSE(verify_signature(as_bytes("pay 5"), high, a.public_key()));
    CHECK_FALSE(verify_signature(as_bytes("pay 5"), sig, Bytes(33, 0x02)));
}

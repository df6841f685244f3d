#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <string>

#include "agc/bytes.hpp"
#include "agc/errors.hpp"

namespace agc {

// Hash algorithm identifiers carried in serialized circuits so the scheme can
// be swapped without a format change.
inline constexpr uint8_t kHashSha256 = 1;

using Digest = std::array<uint8_t, 32>;

inline Digest sha256(std::span<const uint8_t> data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size())
        fail(Errc::internal, "sha256 failed");
    return out;
}

// Incremental SHA-256, used for session transcript hashes.
class Sha256Stream {
  public:
    Sha256Stream() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            fail(Errc::internal, "sha256 init failed");
    }

    void update(std::span<const uint8_t> data) {
        if (EVP_DigestUpdate(ctx_.get(), data.data(), data.size()) != 1)
            fail(Errc::internal, "sha256 update failed");
    }

    Digest finish() const {
        // finish on a copy so the stream can keep accumulating
        Digest out{};
        unsigned int len = 0;
        std::unique_ptr<EVP_MD_CTX, Deleter> copy(EVP_MD_CTX_new());
        if (!copy || EVP_MD_CTX_copy_ex(copy.get(), ctx_.get()) != 1 ||
            EVP_DigestFinal_ex(copy.get(), out.data(), &len) != 1)
            fail(Errc::internal, "sha256 final failed");
        return out;
    }

  private:
    struct Deleter {
        void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
    };
    std::unique_ptr<EVP_MD_CTX, Deleter> ctx_;
};

// Expands `material` into `out` via counter-mode SHA-256. This is the random
// oracle used to encrypt garbled rows; it is keyless by design (the secrecy
// lives in the input labels).
inline void prf_stream(std::span<const uint8_t> material, std::span<uint8_t> out) {
    Bytes block(material.begin(), material.end());
    block.resize(material.size() + 4);
    size_t off = 0;
    uint32_t ctr = 0;
    while (off < out.size()) {
        for (int i = 0; i < 4; ++i) block[material.size() + i] = uint8_t(ctr >> (8 * i));
        Digest d = sha256(block);
        size_t n = std::min(out.size() - off, d.size());
        std::memcpy(out.data() + off, d.data(), n);
        off += n;
        ++ctr;
    }
}

// Deterministic byte generator seeded from arbitrary input. All garbler
// randomness flows through this so a fixed seed reproduces a circuit
// bit-for-bit.
class DetRng {
  public:
    explicit DetRng(std::span<const uint8_t> seed) {
        ByteWriter w;
        w.str("agc-rng-v1");
        w.bytes(seed);
        key_ = sha256(w.data());
    }

    void fill(std::span<uint8_t> out) {
        size_t off = 0;
        while (off < out.size()) {
            if (avail_ == 0) refill();
            size_t n = std::min(out.size() - off, avail_);
            std::memcpy(out.data() + off, buf_.data() + (buf_.size() - avail_), n);
            avail_ -= n;
            off += n;
        }
    }

    uint32_t next_u32() {
        uint8_t b[4];
        fill(b);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
        return v;
    }

    uint64_t next_u64() {
        uint64_t lo = next_u32();
        uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    // Unbiased uniform draw in [0, bound) by rejection sampling.
    uint32_t uniform(uint32_t bound) {
        require(bound > 0, Errc::internal, "uniform(0)");
        uint64_t limit = (uint64_t(1) << 32) / bound * bound;
        for (;;) {
            uint64_t v = next_u32();
            if (v < limit) return uint32_t(v % bound);
        }
    }

  private:
    void refill() {
        ByteWriter w;
        w.bytes(key_);
        w.u64(counter_++);
        buf_ = sha256(w.data());
        avail_ = buf_.size();
    }

    Digest key_{};
    Digest buf_{};
    size_t avail_ = 0;
    uint64_t counter_ = 0;
};

inline Bytes seed_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace agc

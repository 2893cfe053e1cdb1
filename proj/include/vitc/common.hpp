#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vitc {

/// Shape or dimension disagreement between tensors.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// Contract violation on values (bad axis, out-of-range label, non-scalar loss, ...).
class ValueError : public std::runtime_error {
public:
    explicit ValueError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or unreadable on-disk artifact (bad magic, version, header).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Artifact is well-formed but inconsistent (payload length, checksum, inventory).
class IntegrityError : public std::runtime_error {
public:
    explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

/// Checkpoint/config/dataset disagree with each other.
class MismatchError : public std::runtime_error {
public:
    explicit MismatchError(const std::string& what) : std::runtime_error(what) {}
};

/// File system failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Training produced a non-finite loss; carries step and LR context.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64: cheap, well-mixed 64-bit hash used to derive independent
// sub-seeds (per tensor, per sample, per variant) from one master seed.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t a) { return splitmix64(seed ^ splitmix64(a)); }

inline uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b) {
    return splitmix64(mix_seed(seed, a) ^ splitmix64(b + 0x517cc1b727220a95ULL));
}

inline uint64_t hash_string(const std::string& s) {
    // FNV-1a 64-bit
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace vitc

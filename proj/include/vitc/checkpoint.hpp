#pragma once

// Weight serialization in the VITC container: magic "VITC", version,
// length-prefixed UTF-8 text header (config line, metadata lines, one
// tensor line per entry: name\tdtype\tshape-csv\toffset\tcrc32), then a
// raw little-endian float32 payload. Loads validate magic/version,
// payload length, per-tensor checksums, and the config-implied tensor
// inventory; nothing loads partially.

#include <cstdint>
#include <map>
#include <string>

#include "vitc/vit.hpp"

namespace vitc::ckpt {

struct Checkpoint {
    uint32_t version = 1;
    vit::ViTConfig config;
    vit::ModelParams<float> params;
    std::map<std::string, std::string> metadata; // seed, source, step, ...
};

/// IEEE CRC-32 (reflected, poly 0xEDB88320).
uint32_t crc32(const void* data, size_t len, uint32_t seed = 0);

/// Atomic write (temp file + rename).
void save(const vit::ModelParams<float>& params, const std::map<std::string, std::string>& metadata,
          const std::string& path);

/// Throws FormatError on bad magic/version/header, IntegrityError on
/// payload-length or checksum mismatch, MismatchError on inventory
/// violations (each names the offending tensor).
Checkpoint load(const std::string& path);

/// Name-mapping table applied to external tensor names on import. The
/// default table covers the published ViT naming scheme; internal names
/// pass through unchanged.
const std::map<std::string, std::string>& default_rename_table();

/// Import weights from a VITC file whose head (and tensor naming) may
/// differ from the expected config. Every non-head tensor must be present
/// with the exact shape; a positional-embedding length mismatch is an
/// error, not an interpolation. A mismatched head is replaced via
/// adapt_head.
vit::ModelParams<float> import_external(const std::string& path, const vit::ViTConfig& expected,
                                        const std::map<std::string, std::string>& rename = default_rename_table());

/// Replace the classification head for a new class count. The head is
/// zero-initialized (weight and bias), which pins the initial
/// cross-entropy at ln(num_classes); `seed` is reserved for alternative
/// init schemes and unused by the zero init.
vit::ModelParams<float> adapt_head(const vit::ModelParams<float>& params, int new_num_classes, uint64_t seed = 0);

} // namespace vitc::ckpt

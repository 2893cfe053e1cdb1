#include "vitc/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "vitc/common.hpp"

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

namespace fs = std::filesystem;

namespace vitc::ckpt {

namespace {

constexpr char kMagic[4] = {'V', 'I', 'T', 'C'};
constexpr uint32_t kVersion = 1;

std::array<uint32_t, 256> make_crc_table() {
    std::array<uint32_t, 256> table{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

std::string config_line(const vit::ViTConfig& c) {
    std::ostringstream os;
    os << "config\timage_size=" << c.image_size << "\tpatch_size=" << c.patch_size << "\tlayers=" << c.layers
       << "\thidden_d=" << c.hidden_d << "\tmlp_size=" << c.mlp_size << "\theads=" << c.heads
       << "\tnum_classes=" << c.num_classes << "\tchannels=" << c.channels << "\tdropout=" << c.dropout;
    return os.str();
}

vit::ViTConfig parse_config_line(const std::string& line) {
    vit::ViTConfig c;
    std::istringstream is(line);
    std::string field;
    std::getline(is, field, '\t'); // "config"
    while (std::getline(is, field, '\t')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw FormatError("malformed config field '" + field + "'");
        const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "image_size") c.image_size = std::stoi(val);
        else if (key == "patch_size") c.patch_size = std::stoi(val);
        else if (key == "layers") c.layers = std::stoi(val);
        else if (key == "hidden_d") c.hidden_d = std::stoi(val);
        else if (key == "mlp_size") c.mlp_size = std::stoi(val);
        else if (key == "heads") c.heads = std::stoi(val);
        else if (key == "num_classes") c.num_classes = std::stoi(val);
        else if (key == "channels") c.channels = std::stoi(val);
        else if (key == "dropout") c.dropout = std::stod(val);
        else throw FormatError("unknown config field '" + key + "'");
    }
    return c;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string f;
    while (std::getline(is, f, '\t')) out.push_back(f);
    return out;
}

struct TensorEntry {
    std::string name;
    core::Shape shape;
    uint64_t offset = 0;
    uint32_t crc = 0;
};

} // namespace

uint32_t crc32(const void* data, size_t len, uint32_t seed) {
    static const auto table = make_crc_table();
    uint32_t c = seed ^ 0xFFFFFFFFu;
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void save(const vit::ModelParams<float>& params, const std::map<std::string, std::string>& metadata,
          const std::string& path) {
    params.validate();

    std::ostringstream header;
    header << config_line(params.config) << "\n";
    for (const auto& [key, value] : metadata) {
        if (key.find('\t') != std::string::npos || key.find('\n') != std::string::npos ||
            value.find('\t') != std::string::npos || value.find('\n') != std::string::npos)
            throw ValueError("metadata keys/values must not contain tabs or newlines: '" + key + "'");
        header << "meta\t" << key << "\t" << value << "\n";
    }
    uint64_t offset = 0;
    for (const auto& [name, tensor] : params.tensors) {
        const auto bytes = static_cast<size_t>(tensor.numel()) * sizeof(float);
        const uint32_t crc = crc32(tensor.data().data(), bytes);
        header << name << "\tf32\t";
        for (size_t i = 0; i < tensor.shape().size(); ++i) {
            if (i) header << ',';
            header << tensor.shape()[i];
        }
        header << "\t" << offset << "\t" << std::hex << crc << std::dec << "\n";
        offset += bytes;
    }
    const std::string header_text = header.str();

    const fs::path target(path);
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint '" + path + "'");
        out.write(kMagic, 4);
        const uint32_t version = kVersion;
        const uint32_t header_len = static_cast<uint32_t>(header_text.size());
        out.write(reinterpret_cast<const char*>(&version), 4);
        out.write(reinterpret_cast<const char*>(&header_len), 4);
        out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
        for (const auto& [name, tensor] : params.tensors)
            out.write(reinterpret_cast<const char*>(tensor.data().data()),
                      static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
        if (!out) throw IoError("short write to checkpoint '" + path + "'");
    }
    fs::rename(tmp, target);
}

namespace {

Checkpoint load_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint '" + path + "'");

    char magic[4];
    uint32_t version = 0, header_len = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&header_len), 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("'" + path + "' is not a VITC checkpoint (bad magic)");
    if (version != kVersion)
        throw FormatError("unsupported VITC version " + std::to_string(version) + " in '" + path + "'");

    std::string header_text(header_len, '\0');
    in.read(header_text.data(), header_len);
    if (!in) throw FormatError("truncated VITC header in '" + path + "'");

    Checkpoint ck;
    bool have_config = false;
    std::vector<TensorEntry> entries;
    std::istringstream hs(header_text);
    std::string line;
    while (std::getline(hs, line)) {
        if (line.empty()) continue;
        if (line.rfind("config\t", 0) == 0) {
            ck.config = parse_config_line(line);
            have_config = true;
        } else if (line.rfind("meta\t", 0) == 0) {
            const auto fields = split_tabs(line);
            if (fields.size() != 3) throw FormatError("malformed meta line '" + line + "'");
            ck.metadata[fields[1]] = fields[2];
        } else {
            const auto fields = split_tabs(line);
            if (fields.size() != 5) throw FormatError("malformed tensor line '" + line + "'");
            if (fields[1] != "f32") throw FormatError("unsupported dtype '" + fields[1] + "' for '" + fields[0] + "'");
            TensorEntry e;
            e.name = fields[0];
            try {
                std::istringstream ss(fields[2]);
                std::string dim;
                while (std::getline(ss, dim, ',')) e.shape.push_back(std::stoll(dim));
                e.offset = std::stoull(fields[3]);
                e.crc = static_cast<uint32_t>(std::stoul(fields[4], nullptr, 16));
            } catch (const std::exception&) {
                throw FormatError("malformed tensor line '" + line + "'");
            }
            entries.push_back(std::move(e));
        }
    }
    if (!have_config) throw FormatError("missing config line in '" + path + "'");

    uint64_t payload_len = 0;
    for (const auto& e : entries) payload_len += static_cast<uint64_t>(core::shape_numel(e.shape)) * sizeof(float);
    in.seekg(0, std::ios::end);
    const uint64_t actual = static_cast<uint64_t>(in.tellg()) - (12 + header_len);
    if (actual != payload_len)
        throw IntegrityError("payload length mismatch in '" + path + "': expected " + std::to_string(payload_len) +
                             " bytes, found " + std::to_string(actual));
    for (const auto& e : entries) {
        const uint64_t bytes = static_cast<uint64_t>(core::shape_numel(e.shape)) * sizeof(float);
        if (e.offset + bytes > payload_len)
            throw IntegrityError("tensor '" + e.name + "' extends past the payload in '" + path + "'");
    }

    ck.params.config = ck.config;
    for (const auto& e : entries) {
        core::Tensor<float> t(e.shape);
        in.seekg(static_cast<std::streamoff>(12 + header_len + e.offset));
        in.read(reinterpret_cast<char*>(t.data().data()),
                static_cast<std::streamsize>(t.numel() * sizeof(float)));
        if (!in) throw IntegrityError("truncated payload for tensor '" + e.name + "' in '" + path + "'");
        const uint32_t crc = crc32(t.data().data(), static_cast<size_t>(t.numel()) * sizeof(float));
        if (crc != e.crc)
            throw IntegrityError("checksum mismatch for tensor '" + e.name + "' in '" + path + "'");
        ck.params.tensors.emplace(e.name, std::move(t));
    }
    return ck;
}

} // namespace

Checkpoint load(const std::string& path) {
    Checkpoint ck = load_raw(path);
    // strict inventory: no silent partial loads
    ck.params.validate();
    return ck;
}

const std::map<std::string, std::string>& default_rename_table() {
    // Converted checkpoints from the published ViT release may carry
    // these names; see README for the full mapping documentation.
    static const std::map<std::string, std::string> table = {
        {"cls", "class_token"},
        {"embedding.weight", "patch_embed.weight"},
        {"embedding.bias", "patch_embed.bias"},
        {"pos_embedding", "pos_embed"},
        {"encoder_norm.scale", "final_norm.gamma"},
        {"encoder_norm.bias", "final_norm.beta"},
        {"head.kernel", "head.weight"},
    };
    return table;
}

vit::ModelParams<float> import_external(const std::string& path, const vit::ViTConfig& expected,
                                        const std::map<std::string, std::string>& rename) {
    expected.validate();

    // Raw read without internal-inventory validation: the head (and the
    // tensor naming scheme) may legitimately differ.
    Checkpoint external = load_raw(path);

    auto renamed = [&](const std::string& name) {
        const auto it = rename.find(name);
        return it == rename.end() ? name : it->second;
    };
    std::map<std::string, core::Tensor<float>> source;
    for (auto& [name, tensor] : external.params.tensors) source.emplace(renamed(name), std::move(tensor));

    vit::ModelParams<float> out;
    out.config = expected;
    const auto inv = vit::inventory(expected);
    bool head_matches = true;
    for (const auto& [name, shape] : inv) {
        const bool is_head = name.rfind("head.", 0) == 0;
        auto it = source.find(name);
        if (it == source.end()) {
            if (is_head) {
                head_matches = false;
                continue;
            }
            throw MismatchError("import: missing tensor '" + name + "' in '" + path + "'");
        }
        if (it->second.shape() != shape) {
            if (is_head) {
                head_matches = false;
                continue;
            }
            if (name == "pos_embed")
                throw MismatchError("import: positional embedding is " + core::shape_str(it->second.shape()) +
                                    " but the target expects " + core::shape_str(shape) +
                                    " (sequence lengths must match; no interpolation)");
            throw MismatchError("import: tensor '" + name + "' has shape " + core::shape_str(it->second.shape()) +
                                ", expected " + core::shape_str(shape));
        }
        if (!is_head) out.tensors.emplace(name, it->second.clone());
    }

    if (head_matches) {
        out.tensors.emplace("head.weight", source.at("head.weight").clone());
        out.tensors.emplace("head.bias", source.at("head.bias").clone());
        out.validate();
        return out;
    }
    // fill placeholder head, then re-initialize it for the target classes
    out.tensors.emplace("head.weight", core::Tensor<float>({expected.hidden_d, expected.num_classes}));
    out.tensors.emplace("head.bias", core::Tensor<float>({expected.num_classes}));
    return adapt_head(out, expected.num_classes);
}

vit::ModelParams<float> adapt_head(const vit::ModelParams<float>& params, int new_num_classes, uint64_t seed) {
    (void)seed; // zero init is deterministic; reserved for future schemes
    if (new_num_classes <= 0) throw ValueError("adapt_head: class count must be positive");
    vit::ModelParams<float> out;
    out.config = params.config;
    out.config.num_classes = new_num_classes;
    for (const auto& [name, tensor] : params.tensors) {
        if (name.rfind("head.", 0) == 0) continue;
        out.tensors.emplace(name, tensor.clone());
    }
    out.tensors.emplace("head.weight", core::Tensor<float>({params.config.hidden_d, new_num_classes}));
    out.tensors.emplace("head.bias", core::Tensor<float>({new_num_classes}));
    out.validate();
    return out;
}

} // namespace vitc::ckpt

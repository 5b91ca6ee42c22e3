#include "glr/weights.hpp"

#include "glr/error.hpp"
#include "glr/scripted_model.hpp"
#include "glr/toy_transformer.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace glr {

namespace {

constexpr const char* kFormatTag = "glr-weights-v1";

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        n *= d;
    }
    return n;
}

bool parse_unsigned(const std::string& text, std::size_t& out) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
        return false;
    }
    out = static_cast<std::size_t>(std::stoull(text));
    return true;
}

struct ManifestEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
};

} // namespace

std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
    std::filesystem::path blob = manifest;
    blob.replace_extension(".bin");
    return blob;
}

void write_weight_files(const std::filesystem::path& manifest, const WeightBundle& bundle) {
    const std::filesystem::path blob = blob_path_for(manifest);
    if (blob == manifest) {
        throw Error(ErrorKind::invalid_parameter, "manifest path must not end in .bin");
    }
    std::ofstream text(manifest, std::ios::binary);
    std::ofstream data(blob, std::ios::binary);
    if (!text || !data) {
        throw Error(ErrorKind::io, "cannot write weights to " + manifest.string());
    }
    text << "# format " << kFormatTag << "\n";
    text << "# blob " << blob.filename().string() << "\n";
    for (const auto& [key, value] : bundle.metadata) {
        text << "# " << key << " " << value << "\n";
    }
    std::set<std::string> seen;
    std::size_t offset = 0;
    for (const NamedTensor& t : bundle.tensors) {
        if (!seen.insert(t.name).second) {
            throw Error(ErrorKind::format, "duplicate tensor name '" + t.name + "'");
        }
        if (element_count(t.shape) != t.data.size()) {
            throw Error(ErrorKind::shape_mismatch, "tensor '" + t.name + "' data does not match its shape");
        }
        text << t.name;
        for (std::size_t d : t.shape) {
            text << " " << d;
        }
        text << " " << offset << "\n";
        for (float v : t.data) {
            const auto bits = std::bit_cast<std::uint32_t>(v);
            const char bytes[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                                   static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
            data.write(bytes, 4);
        }
        offset += 4 * t.data.size();
    }
    if (!text || !data) {
        throw Error(ErrorKind::io, "failed writing weights to " + manifest.string());
    }
}

WeightBundle read_weight_files(const std::filesystem::path& manifest) {
    std::ifstream text(manifest);
    if (!text) {
        throw Error(ErrorKind::io, "cannot open weight manifest " + manifest.string());
    }
    WeightBundle bundle;
    std::vector<ManifestEntry> entries;
    std::set<std::string> names;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(text, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        if (line.front() == '#') {
            std::string hash, key, value;
            fields >> hash >> key;
            std::getline(fields >> std::ws, value);
            if (!key.empty()) {
                bundle.metadata[key] = value;
            }
            continue;
        }
        std::vector<std::string> tokens;
        for (std::string tok; fields >> tok;) {
            tokens.push_back(tok);
        }
        if (tokens.size() < 3) {
            throw Error(ErrorKind::format, "manifest line " + std::to_string(line_no) + ": expected name, dims, offset");
        }
        ManifestEntry entry;
        entry.name = tokens.front();
        for (std::size_t i = 1; i + 1 < tokens.size(); ++i) {
            std::size_t dim = 0;
            if (!parse_unsigned(tokens[i], dim) || dim == 0) {
                throw Error(ErrorKind::format, "tensor '" + entry.name + "' has invalid dimension '" + tokens[i] + "'");
            }
            entry.shape.push_back(dim);
        }
        if (!parse_unsigned(tokens.back(), entry.offset)) {
            throw Error(ErrorKind::format, "tensor '" + entry.name + "' has invalid offset '" + tokens.back() + "'");
        }
        if (!names.insert(entry.name).second) {
            throw Error(ErrorKind::format, "duplicate tensor name '" + entry.name + "'");
        }
        entries.push_back(std::move(entry));
    }
    if (auto it = bundle.metadata.find("format"); it == bundle.metadata.end() || it->second != kFormatTag) {
        throw Error(ErrorKind::format, "manifest is missing '# format " + std::string(kFormatTag) + "'");
    }
    if (entries.empty()) {
        throw Error(ErrorKind::format, "manifest lists no tensors");
    }

    std::filesystem::path blob_path = blob_path_for(manifest);
    if (auto it = bundle.metadata.find("blob"); it != bundle.metadata.end()) {
        blob_path = manifest.parent_path() / it->second;
    }
    std::ifstream blob(blob_path, std::ios::binary);
    if (!blob) {
        throw Error(ErrorKind::io, "cannot open weight blob " + blob_path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());

    std::size_t expected_offset = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const ManifestEntry& e = entries[i];
        if (e.offset != expected_offset) {
            const std::string& culprit = i == 0 ? e.name : entries[i - 1].name;
            throw Error(ErrorKind::shape_mismatch,
                        "tensor '" + culprit + "': declared shape disagrees with byte offsets (expected offset " +
                            std::to_string(expected_offset) + ", found " + std::to_string(e.offset) + ")");
        }
        expected_offset = e.offset + 4 * element_count(e.shape);
    }
    if (bytes.size() < expected_offset) {
        throw Error(ErrorKind::truncated_blob, "blob ends at byte " + std::to_string(bytes.size()) + " inside tensor '" +
                                                   entries.back().name + "' (needs " +
                                                   std::to_string(expected_offset) + ")");
    }
    if (bytes.size() > expected_offset) {
        throw Error(ErrorKind::shape_mismatch, "tensor '" + entries.back().name + "': blob has " +
                                                   std::to_string(bytes.size() - expected_offset) +
                                                   " bytes beyond the declared shapes");
    }

    bundle.metadata.erase("format");
    bundle.metadata.erase("blob");
    for (const ManifestEntry& e : entries) {
        NamedTensor t{e.name, e.shape, std::vector<float>(element_count(e.shape))};
        for (std::size_t j = 0; j < t.data.size(); ++j) {
            const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + e.offset + 4 * j);
            const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                       (static_cast<std::uint32_t>(p[2]) << 16) |
                                       (static_cast<std::uint32_t>(p[3]) << 24);
            t.data[j] = std::bit_cast<float>(bits);
        }
        bundle.tensors.push_back(std::move(t));
    }
    return bundle;
}

void save_weights(const Model& model, const std::filesystem::path& manifest) {
    write_weight_files(manifest, model.export_weights());
}

std::unique_ptr<Model> load_weights(const std::filesystem::path& manifest) {
    WeightBundle bundle = read_weight_files(manifest);
    const auto kind = bundle.metadata.find("kind");
    if (kind == bundle.metadata.end()) {
        throw Error(ErrorKind::format, "manifest has no '# kind' line");
    }
    if (kind->second == "toy_transformer") {
        return ToyTransformer::from_weights(bundle);
    }
    if (kind->second == "scripted_linear") {
        return ScriptedModel::from_weights(bundle);
    }
    throw Error(ErrorKind::format, "unknown model kind '" + kind->second + "'");
}

} // namespace glr

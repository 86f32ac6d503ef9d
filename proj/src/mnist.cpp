#include "evoxel/mnist.hpp"

#include "evoxel/rng.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace evoxel::mnist {

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t off) {
    return (static_cast<std::uint32_t>(bytes[off]) << 24) | (static_cast<std::uint32_t>(bytes[off + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[off + 2]) << 8) | static_cast<std::uint32_t>(bytes[off + 3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

} // namespace

std::vector<Image> parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16) throw TruncatedFile("IDX image header needs 16 bytes, got " + std::to_string(bytes.size()));
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != kImageMagic) throw BadMagic(magic);
    const std::size_t count = read_be32(bytes, 4);
    const std::size_t rows = read_be32(bytes, 8);
    const std::size_t cols = read_be32(bytes, 12);
    const std::size_t expected = 16 + count * rows * cols;
    if (bytes.size() != expected) {
        throw TruncatedFile("IDX image payload: expected " + std::to_string(expected) + " bytes, got " +
                            std::to_string(bytes.size()));
    }
    std::vector<Image> images(count);
    std::size_t off = 16;
    for (std::size_t i = 0; i < count; ++i) {
        Image& img = images[i];
        img.width = static_cast<int>(cols);
        img.height = static_cast<int>(rows);
        img.pixels.resize(rows * cols);
        for (std::size_t p = 0; p < rows * cols; ++p) img.pixels[p] = bytes[off + p] / 255.0;
        off += rows * cols;
    }
    return images;
}

std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8) throw TruncatedFile("IDX label header needs 8 bytes, got " + std::to_string(bytes.size()));
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != kLabelMagic) throw BadMagic(magic);
    const std::size_t count = read_be32(bytes, 4);
    if (bytes.size() != 8 + count) {
        throw TruncatedFile("IDX label payload: expected " + std::to_string(8 + count) + " bytes, got " +
                            std::to_string(bytes.size()));
    }
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) {
        const int v = bytes[8 + i];
        if (v > 9) throw LabelOutOfRange("label " + std::to_string(v) + " at index " + std::to_string(i));
        labels[i] = v;
    }
    return labels;
}

std::vector<std::uint8_t> serialize_idx_images(const std::vector<Image>& images) {
    std::vector<std::uint8_t> out;
    const int rows = images.empty() ? 0 : images.front().height;
    const int cols = images.empty() ? 0 : images.front().width;
    write_be32(out, kImageMagic);
    write_be32(out, static_cast<std::uint32_t>(images.size()));
    write_be32(out, static_cast<std::uint32_t>(rows));
    write_be32(out, static_cast<std::uint32_t>(cols));
    for (const Image& img : images) {
        for (double p : img.pixels) out.push_back(static_cast<std::uint8_t>(std::lround(p * 255.0)));
    }
    return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const std::vector<int>& labels) {
    std::vector<std::uint8_t> out;
    write_be32(out, kLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) out.push_back(static_cast<std::uint8_t>(l));
    return out;
}

Image downscale14(const Image& img) {
    if (img.width != 28 || img.height != 28) {
        throw WrongSize("downscale14 expects 28x28, got " + std::to_string(img.width) + "x" +
                        std::to_string(img.height));
    }
    Image out;
    out.width = 14;
    out.height = 14;
    out.pixels.resize(14 * 14);
    for (int r = 0; r < 14; ++r)
        for (int c = 0; c < 14; ++c) out.at(r, c) = img.at(2 * r, 2 * c);
    return out;
}

std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TruncatedFile("cannot open " + path);
    std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) {
        std::vector<std::uint8_t> inflated;
        std::array<std::uint8_t, 1 << 16> chunk;
        z_stream zs{};
        if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw TruncatedFile("zlib init failed for " + path);
        zs.next_in = raw.data();
        zs.avail_in = static_cast<uInt>(raw.size());
        int ret = Z_OK;
        do {
            zs.next_out = chunk.data();
            zs.avail_out = static_cast<uInt>(chunk.size());
            ret = inflate(&zs, Z_NO_FLUSH);
            if (ret != Z_OK && ret != Z_STREAM_END) {
                inflateEnd(&zs);
                throw TruncatedFile("gzip inflate failed for " + path);
            }
            inflated.insert(inflated.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
        } while (ret != Z_STREAM_END);
        inflateEnd(&zs);
        return inflated;
    }
    return raw;
}

LabeledSet load_set(const std::string& data_dir, const std::string& stem, const std::string& split_tag) {
    namespace fs = std::filesystem;
    auto find = [&](const std::string& base) -> std::string {
        const fs::path plain = fs::path(data_dir) / base;
        if (fs::exists(plain)) return plain.string();
        const fs::path gz = fs::path(data_dir) / (base + ".gz");
        if (fs::exists(gz)) return gz.string();
        throw TruncatedFile("data file not found: " + plain.string() + "[.gz]");
    };
    LabeledSet set;
    set.images = parse_idx_images(read_file_maybe_gzip(find(stem + "-images-idx3-ubyte")));
    set.labels = parse_idx_labels(read_file_maybe_gzip(find(stem + "-labels-idx1-ubyte")));
    set.split = split_tag;
    if (set.images.size() != set.labels.size()) {
        throw TruncatedFile("image/label count mismatch: " + std::to_string(set.images.size()) + " vs " +
                            std::to_string(set.labels.size()));
    }
    return set;
}

std::string resolve_data_dir(const std::string& override_dir) {
    if (!override_dir.empty()) return override_dir;
    if (const char* env = std::getenv("EVOXEL_DATA_DIR"); env != nullptr && *env != '\0') return env;
    return "data";
}

namespace {

std::vector<std::size_t> indices_of_class(const LabeledSet& set, int cls) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set.labels[i] == cls) out.push_back(i);
    return out;
}

Image to14(const Image& img) { return img.width == 14 ? img : downscale14(img); }

} // namespace

TrainingExamples select_training_examples(const LabeledSet& set, const std::vector<int>& classes,
                                          std::uint64_t seed) {
    TrainingExamples out;
    out.classes = classes;
    Rng rng(derive_seed(seed, 0x7261696e));
    for (int cls : classes) {
        const auto pool = indices_of_class(set, cls);
        if (pool.empty()) throw ClassAbsent(cls);
        const std::size_t pick = pool[rng.uniform_index(pool.size())];
        out.images.push_back(to14(set.images[pick]));
        out.source_indices.push_back(pick);
    }
    return out;
}

LabeledSet build_eval_set(const LabeledSet& set, const std::vector<int>& classes, std::size_t total,
                          std::uint64_t seed, const std::vector<std::size_t>& excluded_indices) {
    if (classes.empty() || total % classes.size() != 0) {
        throw NotDivisible(std::to_string(total) + " images cannot be divided evenly between " +
                           std::to_string(classes.size()) + " classes");
    }
    const std::size_t per_class = total / classes.size();
    LabeledSet out;
    out.split = set.split;
    Rng rng(derive_seed(seed, 0x6576616c));
    for (int cls : classes) {
        auto pool = indices_of_class(set, cls);
        std::erase_if(pool, [&](std::size_t idx) {
            return std::find(excluded_indices.begin(), excluded_indices.end(), idx) != excluded_indices.end();
        });
        if (pool.size() < per_class) {
            throw InsufficientImages("class " + std::to_string(cls) + " has " + std::to_string(pool.size()) +
                                     " images, need " + std::to_string(per_class));
        }
        // Fisher-Yates prefix shuffle for the first per_class picks.
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t j = i + rng.uniform_index(pool.size() - i);
            std::swap(pool[i], pool[j]);
            out.images.push_back(to14(set.images[pool[i]]));
            out.labels.push_back(cls);
        }
    }
    return out;
}

} // namespace evoxel::mnist

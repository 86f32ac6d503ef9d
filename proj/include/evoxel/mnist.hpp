#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evoxel::mnist {

struct BadMagic : std::runtime_error {
    explicit BadMagic(std::uint32_t got) : std::runtime_error("bad IDX magic: " + std::to_string(got)) {}
};
struct TruncatedFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LabelOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WrongSize : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ClassAbsent : std::runtime_error {
    explicit ClassAbsent(int cls) : std::runtime_error("class absent from set: " + std::to_string(cls)) {}
};
struct InsufficientImages : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotDivisible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Grayscale image with intensities in [0,1] (raw byte / 255), row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

struct LabeledSet {
    std::vector<Image> images;
    std::vector<int> labels;
    std::string split; // "train" or "test"

    std::size_t size() const { return images.size(); }
};

/// Parses an IDX image container (magic 0x00000803).
std::vector<Image> parse_idx_images(const std::vector<std::uint8_t>& bytes);

/// Parses an IDX label container (magic 0x00000801); labels must be 0..9.
std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes);

/// Re-encodes images into IDX bytes (inverse of parse_idx_images).
std::vector<std::uint8_t> serialize_idx_images(const std::vector<Image>& images);
std::vector<std::uint8_t> serialize_idx_labels(const std::vector<int>& labels);

/// 28x28 -> 14x14 by keeping even-indexed rows and columns.
Image downscale14(const Image& img);

/// Reads a file, transparently inflating gzip (1f 8b) payloads.
std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path);

/// Loads images+labels from a data directory. Looks for `<stem>-images-idx3-ubyte`
/// and `<stem>-labels-idx1-ubyte`, plain or with a .gz suffix.
LabeledSet load_set(const std::string& data_dir, const std::string& stem, const std::string& split_tag);

/// Data directory resolution: explicit arg if non-empty, else $EVOXEL_DATA_DIR, else "data".
std::string resolve_data_dir(const std::string& override_dir = "");

/// Picks one image per requested class, deterministically from the seed,
/// and downscales to 14x14. Also reports the source indices so callers can
/// exclude them from evaluation sets.
struct TrainingExamples {
    std::vector<Image> images;  // one per class, 14x14, in class-list order
    std::vector<int> classes;
    std::vector<std::size_t> source_indices;
};
TrainingExamples select_training_examples(const LabeledSet& set, const std::vector<int>& classes,
                                          std::uint64_t seed);

/// Builds a held-out evaluation set of `total` images evenly divided between
/// classes, disjoint from `excluded_indices`, downscaled to 14x14.
LabeledSet build_eval_set(const LabeledSet& set, const std::vector<int>& classes, std::size_t total,
                          std::uint64_t seed, const std::vector<std::size_t>& excluded_indices = {});

} // namespace evoxel::mnist

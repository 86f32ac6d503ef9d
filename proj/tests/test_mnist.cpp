#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evoxel/mnist.hpp"

#include <algorithm>
#include <numeric>

using namespace evoxel;

namespace {

std::vector<std::uint8_t> idx_image_header(std::uint32_t magic, std::uint32_t n, std::uint32_t rows,
                                           std::uint32_t cols) {
    std::vector<std::uint8_t> b;
    for (std::uint32_t v : {magic, n, rows, cols}) {
        b.push_back(static_cast<std::uint8_t>(v >> 24));
        b.push_back(static_cast<std::uint8_t>(v >> 16));
        b.push_back(static_cast<std::uint8_t>(v >> 8));
        b.push_back(static_cast<std::uint8_t>(v));
    }
    return b;
}

mnist::LabeledSet official_test_set() {
    return mnist::load_set(mnist::resolve_data_dir(), "t10k", "test");
}

} // namespace

TEST_CASE("parse_idx_images: zero payload") {
    auto bytes = idx_image_header(0x803, 1, 28, 28);
    bytes.resize(bytes.size() + 784, 0);
    const auto images = mnist::parse_idx_images(bytes);
    REQUIRE(images.size() == 1);
    CHECK(images[0].width == 28);
    CHECK(images[0].height == 28);
    for (double p : images[0].pixels) CHECK(p == 0.0);
}

TEST_CASE("parse_idx_images: wrong magic") {
    auto bytes = idx_image_header(0x801, 1, 28, 28);
    bytes.resize(bytes.size() + 784, 0);
    CHECK_THROWS_AS(mnist::parse_idx_images(bytes), mnist::BadMagic);
}

TEST_CASE("parse_idx_images: truncated payload") {
    auto bytes = idx_image_header(0x803, 2, 28, 28);
    bytes.resize(bytes.size() + 784, 0); // one image short
    CHECK_THROWS_AS(mnist::parse_idx_images(bytes), mnist::TruncatedFile);
}

TEST_CASE("parse_idx_labels: small inline file") {
    std::vector<std::uint8_t> bytes = {0, 0, 8, 1, 0, 0, 0, 3, 0, 1, 0};
    const auto labels = mnist::parse_idx_labels(bytes);
    CHECK(labels == std::vector<int>{0, 1, 0});
}

TEST_CASE("parse_idx_labels: 2-byte file is truncated") {
    std::vector<std::uint8_t> bytes = {0, 0};
    CHECK_THROWS_AS(mnist::parse_idx_labels(bytes), mnist::TruncatedFile);
}

TEST_CASE("parse_idx_labels: label out of range") {
    std::vector<std::uint8_t> bytes = {0, 0, 8, 1, 0, 0, 0, 1, 12};
    CHECK_THROWS_AS(mnist::parse_idx_labels(bytes), mnist::LabelOutOfRange);
}

TEST_CASE("official test files parse to 10000 consistent records") {
    const auto set = official_test_set();
    REQUIRE(set.images.size() == 10000);
    REQUIRE(set.labels.size() == 10000);
    CHECK(set.images[0].width == 28);
    CHECK(set.images[0].height == 28);

    // Cross-checked against an independent reader of the same files.
    const std::vector<int> expected_hist = {980, 1135, 1032, 1010, 982, 892, 958, 1028, 974, 1009};
    std::vector<int> hist(10, 0);
    for (int l : set.labels) ++hist[l];
    CHECK(hist == expected_hist);
    CHECK(set.labels[0] == 7);

    const double sum = std::accumulate(set.images[0].pixels.begin(), set.images[0].pixels.end(), 0.0);
    CHECK(sum == doctest::Approx(18454.0 / 255.0).epsilon(1e-12));
    CHECK(set.images[0].pixels[203] == doctest::Approx(185.0 / 255.0).epsilon(1e-12));

    for (const auto& img : set.images) {
        const auto [mn, mx] = std::minmax_element(img.pixels.begin(), img.pixels.end());
        REQUIRE(*mn >= 0.0);
        REQUIRE(*mx <= 1.0);
    }
}

TEST_CASE("IDX round-trip is byte-identical") {
    const auto set = official_test_set();
    std::vector<mnist::Image> subset(set.images.begin(), set.images.begin() + 50);
    const auto bytes = mnist::serialize_idx_images(subset);
    const auto reparsed = mnist::parse_idx_images(bytes);
    CHECK(mnist::serialize_idx_images(reparsed) == bytes);

    std::vector<int> labels(set.labels.begin(), set.labels.begin() + 50);
    const auto lbytes = mnist::serialize_idx_labels(labels);
    CHECK(mnist::parse_idx_labels(lbytes) == labels);
}

TEST_CASE("downscale14 keeps even indices") {
    mnist::Image img;
    img.width = img.height = 28;
    img.pixels.assign(784, 1.0);
    auto out = mnist::downscale14(img);
    CHECK(out.width == 14);
    CHECK(out.height == 14);
    for (double p : out.pixels) CHECK(p == 1.0);

    img.pixels.assign(784, 0.0);
    img.at(0, 1) = 1.0; // odd column: dropped
    out = mnist::downscale14(img);
    for (double p : out.pixels) CHECK(p == 0.0);

    img.pixels.assign(784, 0.0);
    img.at(2, 2) = 1.0;
    out = mnist::downscale14(img);
    for (int r = 0; r < 14; ++r)
        for (int c = 0; c < 14; ++c) CHECK(out.at(r, c) == (r == 1 && c == 1 ? 1.0 : 0.0));
}

TEST_CASE("downscale14 rejects wrong sizes") {
    mnist::Image img;
    img.width = img.height = 14;
    img.pixels.assign(196, 0.0);
    CHECK_THROWS_AS(mnist::downscale14(img), mnist::WrongSize);
}

TEST_CASE("downscale14 is idempotent in effect") {
    // Re-applying the even-index selection to an upscaled output reproduces it.
    const auto set = official_test_set();
    const auto small = mnist::downscale14(set.images[0]);
    mnist::Image up;
    up.width = up.height = 28;
    up.pixels.assign(784, 0.0);
    for (int r = 0; r < 14; ++r)
        for (int c = 0; c < 14; ++c) up.at(2 * r, 2 * c) = small.at(r, c);
    CHECK(mnist::downscale14(up).pixels == small.pixels);
}

TEST_CASE("select_training_examples is deterministic and validates classes") {
    const auto set = official_test_set();
    const auto a = mnist::select_training_examples(set, {0, 1}, 7);
    const auto b = mnist::select_training_examples(set, {0, 1}, 7);
    REQUIRE(a.images.size() == 2);
    CHECK(a.source_indices == b.source_indices);
    CHECK(a.images[0].pixels == b.images[0].pixels);
    CHECK(a.images[0].width == 14);
    CHECK(set.labels[a.source_indices[0]] == 0);
    CHECK(set.labels[a.source_indices[1]] == 1);

    const auto four = mnist::select_training_examples(set, {0, 1, 2, 3}, 3);
    REQUIRE(four.images.size() == 4);
    CHECK(four.classes == std::vector<int>{0, 1, 2, 3});

    mnist::LabeledSet tiny;
    tiny.images.push_back(set.images[0]);
    tiny.labels.push_back(7);
    CHECK_THROWS_AS(mnist::select_training_examples(tiny, {9}, 1), mnist::ClassAbsent);
}

TEST_CASE("build_eval_set splits evenly and excludes the training picks") {
    const auto set = official_test_set();
    const auto train = mnist::select_training_examples(set, {0, 1}, 7);
    const auto eval = mnist::build_eval_set(set, {0, 1}, 1000, 7, train.source_indices);
    REQUIRE(eval.size() == 1000);
    int zeros = 0;
    int ones = 0;
    for (int l : eval.labels) (l == 0 ? zeros : ones)++;
    CHECK(zeros == 500);
    CHECK(ones == 500);
    for (const auto& img : eval.images) {
        CHECK(img.width == 14);
        // Training examples must not appear in the eval set.
        CHECK(img.pixels != train.images[0].pixels);
        CHECK(img.pixels != train.images[1].pixels);
    }

    const auto eval4 = mnist::build_eval_set(set, {0, 1, 2, 3}, 1000, 3);
    std::vector<int> hist(4, 0);
    for (int l : eval4.labels) ++hist[l];
    CHECK(hist == std::vector<int>{250, 250, 250, 250});

    CHECK_THROWS_AS(mnist::build_eval_set(set, {0, 1}, 3, 1), mnist::NotDivisible);
    CHECK_THROWS_AS(mnist::build_eval_set(set, {0, 1}, 4000, 1), mnist::InsufficientImages);
}

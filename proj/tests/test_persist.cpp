#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evoxel/persist.hpp"

#include <filesystem>
#include <fstream>

using namespace evoxel;

namespace {

Archive sample_archive(std::uint64_t seed) {
    RunConfig cfg;
    cfg.generations = 17;
    cfg.parents = 6;
    cfg.classes = {0, 1};
    cfg.master_seed = seed;
    cfg.init_budget = 120;
    const RolloutFn stub = [](const Body& body) -> std::optional<EvalResult> {
        EvalResult res;
        res.per_image.push_back({0, -0.1 * (body.descriptors().n_total % 7 + 1)});
        res.per_image.push_back({1, 0.2});
        return res;
    };
    return init_archive(cfg, stub);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("checkpoint round-trips structurally") {
    const Archive a = sample_archive(404);
    REQUIRE(a.filled() >= 5);
    const std::string path = temp_path("evoxel_ckpt_test.json");
    persist::save_checkpoint(a, path);
    const Archive b = persist::load_checkpoint(path);

    CHECK(b.generation() == a.generation());
    CHECK(b.config().master_seed == a.config().master_seed);
    CHECK(b.config().parents == a.config().parents);
    REQUIRE(b.cells().size() == a.cells().size());
    auto ia = a.cells().begin();
    auto ib = b.cells().begin();
    for (; ia != a.cells().end(); ++ia, ++ib) {
        CHECK(ia->first == ib->first);
        CHECK(ia->second.genome == ib->second.genome);
        CHECK(ia->second.fitness == ib->second.fitness);
        CHECK(ia->second.descriptors == ib->second.descriptors);
        CHECK(ia->second.eval_seed == ib->second.eval_seed);
    }
    std::filesystem::remove(path);
}

TEST_CASE("re-serialization is byte-identical") {
    const Archive a = sample_archive(911);
    const std::string text = persist::encode_checkpoint(a);
    const Archive b = persist::decode_checkpoint(text);
    CHECK(persist::encode_checkpoint(b) == text);
}

TEST_CASE("truncated and corrupt envelopes are rejected") {
    const Archive a = sample_archive(5);
    const std::string text = persist::encode_checkpoint(a);
    CHECK_THROWS_AS(persist::decode_checkpoint(text.substr(0, text.size() / 2)), persist::CorruptEnvelope);
    CHECK_THROWS_AS(persist::decode_checkpoint(""), persist::CorruptEnvelope);
    CHECK_THROWS_AS(persist::decode_checkpoint("{\"version\":1}"), persist::CorruptEnvelope);
}

TEST_CASE("unknown version is rejected") {
    const Archive a = sample_archive(6);
    std::string text = persist::encode_checkpoint(a);
    // Top-level keys sort alphabetically, so the envelope version is the
    // last "version" in the dump (genomes embed their own).
    const auto pos = text.rfind("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 12, "\"version\": 999");
    CHECK_THROWS_AS(persist::decode_checkpoint(text), persist::VersionMismatch);
}

TEST_CASE("descriptor tampering is caught on load") {
    const Archive a = sample_archive(7);
    std::string text = persist::encode_checkpoint(a);
    // Flip a stored descriptor triple to something the genome cannot develop to.
    const auto pos = text.find("\"descriptors\"");
    REQUIRE(pos != std::string::npos);
    const auto open = text.find('[', pos);
    const auto close = text.find(']', open);
    text.replace(open, close - open + 1, "[123,45,6]");
    CHECK_THROWS_AS(persist::decode_checkpoint(text), persist::CorruptEnvelope);
}

TEST_CASE("missing file raises IOFailure") {
    CHECK_THROWS_AS(persist::load_checkpoint(temp_path("does_not_exist_evoxel.json")), persist::IOFailure);
}

TEST_CASE("run config round-trips") {
    RunConfig cfg;
    cfg.generations = 123;
    cfg.parents = 21;
    cfg.mode = TaskMode::FourDigit;
    cfg.classes = {0, 1, 2, 3};
    cfg.master_seed = 0xfeedface;
    cfg.eval.world.gravity = 3.7;
    cfg.eval.actuation.frequency = 1.25;
    const RunConfig back = persist::decode_run_config(persist::encode_run_config(cfg));
    CHECK(back.generations == cfg.generations);
    CHECK(back.parents == cfg.parents);
    CHECK(back.mode == cfg.mode);
    CHECK(back.classes == cfg.classes);
    CHECK(back.master_seed == cfg.master_seed);
    CHECK(back.eval.world.gravity == cfg.eval.world.gravity);
    CHECK(back.eval.actuation.frequency == cfg.eval.actuation.frequency);
}

#include "evoxel/persist.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace evoxel::persist {

namespace {

using nlohmann::json;

json config_to_json(const RunConfig& cfg) {
    json j;
    j["generations"] = cfg.generations;
    j["parents"] = cfg.parents;
    j["mode"] = cfg.mode == TaskMode::FourDigit ? "four-digit" : "two-class";
    j["classes"] = cfg.classes;
    j["master_seed"] = cfg.master_seed;
    j["data_seed"] = cfg.data_seed;
    j["init_budget"] = cfg.init_budget;
    j["checkpoint_interval"] = cfg.checkpoint_interval;
    j["archive_capacity"] = cfg.archive_capacity;
    j["eval"] = {
        {"cycles_per_image", cfg.eval.cycles_per_image},
        {"settle_cycles", cfg.eval.settle_cycles},
        {"actuation",
         {{"amplitude", cfg.eval.actuation.amplitude},
          {"frequency", cfg.eval.actuation.frequency},
          {"sensor_gain", cfg.eval.actuation.sensor_gain}}},
        {"world",
         {{"gravity", cfg.eval.world.gravity},
          {"dt", cfg.eval.world.dt},
          {"substeps", cfg.eval.world.substeps},
          {"ground_y", cfg.eval.world.ground_y},
          {"friction", cfg.eval.world.friction},
          {"contact_stiffness", cfg.eval.world.contact_stiffness},
          {"tangential_damping", cfg.eval.world.tangential_damping},
          {"voxel_mass", cfg.eval.world.voxel_mass},
          {"stiffness_rigid", cfg.eval.world.stiffness_rigid},
          {"stiffness_soft", cfg.eval.world.stiffness_soft},
          {"diagonal_stiffness_factor", cfg.eval.world.diagonal_stiffness_factor},
          {"damping_ratio", cfg.eval.world.damping_ratio}}},
    };
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    cfg.generations = j.at("generations").get<int>();
    cfg.parents = j.at("parents").get<int>();
    cfg.mode = j.at("mode").get<std::string>() == "four-digit" ? TaskMode::FourDigit : TaskMode::TwoClass;
    cfg.classes = j.at("classes").get<std::vector<int>>();
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    cfg.data_seed = j.at("data_seed").get<std::uint64_t>();
    cfg.init_budget = j.at("init_budget").get<int>();
    cfg.checkpoint_interval = j.at("checkpoint_interval").get<int>();
    cfg.archive_capacity = j.at("archive_capacity").get<int>();
    const json& e = j.at("eval");
    cfg.eval.cycles_per_image = e.at("cycles_per_image").get<int>();
    cfg.eval.settle_cycles = e.at("settle_cycles").get<int>();
    const json& a = e.at("actuation");
    cfg.eval.actuation.amplitude = a.at("amplitude").get<double>();
    cfg.eval.actuation.frequency = a.at("frequency").get<double>();
    cfg.eval.actuation.sensor_gain = a.at("sensor_gain").get<double>();
    const json& w = e.at("world");
    cfg.eval.world.gravity = w.at("gravity").get<double>();
    cfg.eval.world.dt = w.at("dt").get<double>();
    cfg.eval.world.substeps = w.at("substeps").get<int>();
    cfg.eval.world.ground_y = w.at("ground_y").get<double>();
    cfg.eval.world.friction = w.at("friction").get<double>();
    cfg.eval.world.contact_stiffness = w.at("contact_stiffness").get<double>();
    cfg.eval.world.tangential_damping = w.at("tangential_damping").get<double>();
    cfg.eval.world.voxel_mass = w.at("voxel_mass").get<double>();
    cfg.eval.world.stiffness_rigid = w.at("stiffness_rigid").get<double>();
    cfg.eval.world.stiffness_soft = w.at("stiffness_soft").get<double>();
    cfg.eval.world.diagonal_stiffness_factor = w.at("diagonal_stiffness_factor").get<double>();
    cfg.eval.world.damping_ratio = w.at("damping_ratio").get<double>();
    return cfg;
}

} // namespace

std::string encode_run_config(const RunConfig& cfg) { return config_to_json(cfg).dump(2); }

RunConfig decode_run_config(const std::string& text) {
    try {
        return config_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw CorruptEnvelope(std::string("run config: ") + e.what());
    }
}

std::string encode_checkpoint(const Archive& archive) {
    json j;
    j["version"] = kCheckpointVersion;
    j["config"] = config_to_json(archive.config());
    j["master_seed"] = archive.config().master_seed;
    j["generation"] = archive.generation();
    auto& cells = j["cells"] = json::array();
    for (const auto& [key, elite] : archive.cells()) {
        json c;
        c["bins"] = {key.bins.muscle, key.bins.sensor, key.bins.total};
        c["task"] = key.task;
        c["fitness"] = elite.fitness;
        c["descriptors"] = {elite.descriptors.n_muscle, elite.descriptors.n_sensor, elite.descriptors.n_total};
        c["generation"] = elite.generation;
        c["eval_seed"] = elite.eval_seed;
        c["genome"] = json::parse(elite.genome.serialize());
        cells.push_back(c);
    }
    return j.dump(2);
}

Archive decode_checkpoint(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw CorruptEnvelope(std::string("checkpoint parse: ") + e.what());
    }
    try {
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion) throw VersionMismatch(version);
        Archive archive(config_from_json(j.at("config")));
        archive.set_generation(j.at("generation").get<int>());
        for (const auto& c : j.at("cells")) {
            Elite elite;
            elite.genome = Genome::deserialize(c.at("genome").dump());
            elite.fitness = c.at("fitness").get<double>();
            elite.task = c.at("task").get<int>();
            elite.generation = c.at("generation").get<int>();
            elite.eval_seed = c.at("eval_seed").get<std::uint64_t>();
            const auto desc = c.at("descriptors").get<std::vector<int>>();
            if (desc.size() != 3) throw CorruptEnvelope("descriptors must have 3 entries");
            elite.descriptors = {desc[0], desc[1], desc[2]};
            // The genome must still develop to the stored descriptors.
            const Body body = develop(elite.genome);
            if (!(body.descriptors() == elite.descriptors))
                throw CorruptEnvelope("stored descriptors do not match the developed genome");
            const auto bins = c.at("bins").get<std::vector<int>>();
            if (bins.size() != 3 || !(BinIndex{bins[0], bins[1], bins[2]} == bin_index(elite.descriptors)))
                throw CorruptEnvelope("stored bins do not match the descriptors");
            archive.restore(elite);
        }
        return archive;
    } catch (const json::exception& e) {
        throw CorruptEnvelope(std::string("checkpoint fields: ") + e.what());
    } catch (const GenomeParseError& e) {
        throw CorruptEnvelope(std::string("checkpoint genome: ") + e.what());
    } catch (const EmptyBody&) {
        throw CorruptEnvelope("checkpoint genome develops to an empty body");
    }
}

void save_checkpoint(const Archive& archive, const std::string& path) {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IOFailure("cannot write " + tmp);
        out << encode_checkpoint(archive);
        if (!out) throw IOFailure("short write to " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IOFailure("rename " + tmp + " -> " + path + ": " + ec.message());
}

Archive load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOFailure("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(text);
}

} // namespace evoxel::persist

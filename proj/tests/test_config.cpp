#include <doctest.h>

#include <fstream>

#include "gazefield/config.hpp"
#include "gazefield/error.hpp"
#include "oracles.hpp"

using namespace gazefield;
using nlohmann::json;

namespace {

std::filesystem::path write_config(const std::string& name, const std::string& text) {
    const auto dir = oracle::temp_dir("config_" + name);
    std::ofstream(dir / "c.json") << text;
    return dir / "c.json";
}

}  // namespace

TEST_CASE("every command has defaults; unknown commands are rejected") {
    for (const char* c : {"gen-data", "train", "eval", "field", "gradcheck"}) {
        const auto d = config::defaults_for(c);
        CHECK(d["command"] == c);
        CHECK(d["seed"] == 0);
    }
    CHECK(config::defaults_for("train")["train"]["lr"] == 1e-4);
    CHECK(config::defaults_for("gen-data")["train_count"] == 2000);
    CHECK_THROWS_AS(config::defaults_for("dance"), ConfigError);
}

TEST_CASE("file, flags and --set layer in order") {
    const auto file = write_config("layers", R"({"seed": 4, "out": "from_file", "train": {"lr": 0.01, "batch_size": 8}})");
    config::Overrides o;
    o.file = file;
    auto c = config::resolve("train", o);
    CHECK(c["seed"] == 4);
    CHECK(c["out"] == "from_file");
    CHECK(c["train"]["lr"] == 0.01);
    CHECK(c["train"]["batch_size"] == 8);
    CHECK(c["train"]["stage1_epochs"] == 5);

    o.seed = 9;
    o.out = "from_flag";
    o.sets = {"train.lr=0.5", "seed=11"};
    c = config::resolve("train", o);
    CHECK(c["seed"] == 11);
    CHECK(c["out"] == "from_flag");
    CHECK(c["train"]["lr"] == 0.5);
    CHECK(c["train"]["batch_size"] == 8);
}

TEST_CASE("unknown keys are rejected at any depth") {
    config::Overrides o;
    o.file = write_config("unknown", R"({"train": {"learning_rate": 0.1}})");
    CHECK_THROWS_AS(config::resolve("train", o), ConfigError);
    o.file = write_config("unknown_top", R"({"colour": "red"})");
    CHECK_THROWS_AS(config::resolve("train", o), ConfigError);
    o.file.reset();
    o.sets = {"train.model.direction.width=3"};
    CHECK_THROWS_AS(config::resolve("train", o), ConfigError);
}

TEST_CASE("malformed files and assignments are config errors") {
    config::Overrides o;
    o.file = write_config("bad_json", "{ nope");
    CHECK_THROWS_AS(config::resolve("train", o), ConfigError);
    o.file = "/nonexistent/c.json";
    CHECK_THROWS_AS(config::resolve("train", o), ConfigError);
    o.file.reset();
    o.sets = {"no_equals"};
    CHECK_THROWS_AS(config::resolve("train", o), ConfigError);
    o.sets = {"seed=-2"};
    CHECK_THROWS_AS(config::resolve("train", o), ConfigError);
    o.sets = {"seed=\"x\""};
    CHECK_THROWS_AS(config::resolve("train", o), ConfigError);
}

TEST_CASE("--set values parse as JSON and fall back to strings") {
    json c = config::defaults_for("field");
    config::apply_set(c, "gammas=[3,1]");
    CHECK(c["gammas"] == json::array({3, 1}));
    config::apply_set(c, "out=some/dir");
    CHECK(c["out"] == "some/dir");
    config::apply_set(c, "size=32");
    CHECK(c["size"].is_number_integer());
    config::apply_set(c, "head.0=0.25");
    CHECK(c["head"][0] == 0.25);
    CHECK_THROWS_AS(config::apply_set(c, "a..b=1"), ConfigError);
}

TEST_CASE("typed configs round-trip through JSON") {
    train::TrainConfig t;
    t.lr = 0.003;
    t.mid_layer_supervision = false;
    t.model.gammas = {1.0};
    t.model.direction.embedding = 12;
    const auto back = config::train_config_from(config::to_json(t), 17);
    CHECK(back.lr == 0.003);
    CHECK_FALSE(back.mid_layer_supervision);
    CHECK(back.model.gammas == std::vector<double>{1.0});
    CHECK(back.model.direction.embedding == 12);
    CHECK(back.seed == 17);

    data::SyntheticSceneSpec s;
    s.object_count = 6;
    const auto sb = config::scene_spec_from(config::to_json(s), 5);
    CHECK(sb.object_count == 6);
    CHECK(sb.seed == 5);

    CHECK_THROWS_AS(config::train_config_from(json{{"lr", "fast"}}, 0), ConfigError);
    CHECK_THROWS_AS(config::train_config_from(json{{"batch_size", 0}}, 0), ConfigError);
    CHECK_THROWS_AS(config::model_config_from(json{{"heatmap_resolution", 12}}), ConfigError);
}

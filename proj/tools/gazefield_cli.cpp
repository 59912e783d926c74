// gazefield: command-line front end (gen-data, train, eval, field, gradcheck).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gazefield/commands.hpp"
#include "gazefield/config.hpp"

namespace {

using gazefield::config::Overrides;

struct Shared {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> sets;
};

void add_shared(CLI::App* cmd, Shared& s) {
    cmd->add_option("--config", s.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", s.seed, "Master seed");
    cmd->add_option("--out", s.out, "Output directory");
    cmd->add_option("--set", s.sets, "Override a config key (dotted.key=value), repeatable");
}

/// JSON array with round-trip precision.
std::string join_numbers(const std::vector<double>& v) { return nlohmann::json(v).dump(); }

/// JSON string literal, so paths with quotes or backslashes survive --set parsing.
std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage gaze following with differentiable gaze direction fields"};
    app.require_subcommand(1);
    Shared shared;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    add_shared(gen, shared);

    auto* train = app.add_subcommand("train", "Run the staged training schedule");
    add_shared(train, shared);
    std::string train_data;
    train->add_option("--data", train_data, "Dataset directory (shorthand for --set data=DIR)");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    add_shared(eval, shared);
    std::string eval_data, checkpoint;
    bool oracle = false;
    eval->add_option("--data", eval_data, "Dataset directory");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file");
    eval->add_flag("--oracle", oracle, "Score ground-truth heatmaps instead of a model");

    auto* field = app.add_subcommand("field", "Dump gaze direction fields as CSV");
    add_shared(field, shared);
    std::vector<double> head, dir, gammas;
    std::optional<std::size_t> size;
    field->add_option("--head", head, "Head position X Y")->expected(2);
    field->add_option("--dir", dir, "Gaze direction X Y")->expected(2);
    field->add_option("--size", size, "Grid size");
    field->add_option("--gammas", gammas, "Cone exponents")->delimiter(',');

    auto* grad = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
    add_shared(grad, shared);
    std::string fault;
    grad->add_option("--fault", fault, "Corrupt one op's gradient, OP[:FACTOR] (test hook)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : gazefield::cli::kExitConfig;
    }

    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    Overrides overrides;
    if (!shared.config.empty()) overrides.file = shared.config;
    overrides.seed = shared.seed;
    if (!shared.out.empty()) overrides.out = shared.out;
    // Shorthand flags go first so an explicit --set still wins.
    if (!train_data.empty()) overrides.sets.push_back("data=" + json_string(train_data));
    if (!eval_data.empty()) overrides.sets.push_back("data=" + json_string(eval_data));
    if (!checkpoint.empty()) overrides.sets.push_back("checkpoint=" + json_string(checkpoint));
    if (oracle) overrides.sets.push_back("oracle=true");
    if (!head.empty()) overrides.sets.push_back("head=" + join_numbers(head));
    if (!dir.empty()) overrides.sets.push_back("dir=" + join_numbers(dir));
    if (size) overrides.sets.push_back("size=" + std::to_string(*size));
    if (!gammas.empty()) overrides.sets.push_back("gammas=" + join_numbers(gammas));
    if (!fault.empty()) {
        const auto colon = fault.find(':');
        const std::string op = fault.substr(0, colon);
        const std::string factor = colon == std::string::npos ? "1.5" : fault.substr(colon + 1);
        overrides.sets.push_back("fault={\"op\":\"" + op + "\",\"factor\":" + factor + "}");
    }
    overrides.sets.insert(overrides.sets.end(), shared.sets.begin(), shared.sets.end());

    try {
        const auto config = gazefield::config::resolve(name, overrides);
        if (name == "gen-data") gazefield::cli::gen_data(config, std::cout);
        if (name == "train") gazefield::cli::train(config, std::cout);
        if (name == "eval") gazefield::cli::eval(config, std::cout);
        if (name == "field") gazefield::cli::field(config, std::cout);
        if (name == "gradcheck" && !gazefield::cli::gradcheck(config, std::cout)) {
            return gazefield::cli::kExitNumeric;
        }
    } catch (const std::exception& e) {
        std::cerr << "gazefield " << name << ": " << e.what() << "\n";
        return gazefield::cli::exit_code_for(e);
    }
    return gazefield::cli::kExitOk;
}

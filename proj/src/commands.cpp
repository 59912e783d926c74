#include "gazefield/commands.hpp"

#include <cstdio>
#include <iomanip>

#include "gazefield/checkpoint.hpp"
#include "gazefield/config.hpp"
#include "gazefield/direction_field.hpp"
#include "gazefield/error.hpp"
#include "gazefield/gradcheck.hpp"
#include "gazefield/heatmap.hpp"
#include "gazefield/train.hpp"

namespace gazefield::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

fs::path out_dir(const json& config) {
    const fs::path out = config.at("out").get<std::string>();
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw DataError("cannot create output directory " + out.string() + ": " + ec.message());
    return out;
}

/// Echoes the resolved configuration before any work starts.
fs::path begin(const json& config) {
    const fs::path out = out_dir(config);
    write_file_atomic(out / "config.json", config.dump(2) + "\n");
    return out;
}

std::uint64_t seed_of(const json& config) { return config.at("seed").get<std::uint64_t>(); }

NormalizedPoint point_of(const json& j, const char* key) {
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError(std::string(key) + " needs two numbers");
    return {v[0], v[1]};
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const DataError*>(&e)) return kExitData;
    if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
    return kExitFailure;
}

void gen_data(const json& config, std::ostream& log) {
    const fs::path out = begin(config);
    const auto spec = config::scene_spec_from(config.at("scene"), seed_of(config));
    std::vector<data::GazeAnnotationRecord> records;
    const std::pair<const char*, std::size_t> splits[] = {{"train", config.at("train_count").get<std::size_t>()},
                                                          {"test", config.at("test_count").get<std::size_t>()}};
    fs::create_directories(out / "images");
    for (const auto& [split, count] : splits) {
        for (std::size_t i = 0; i < count; ++i) {
            auto scene = data::generate_scene(spec, i, split);
            write_pnm(out / scene.record.image, scene.image);
            records.push_back(std::move(scene.record));
        }
    }
    data::save_annotations(out / "annotations.jsonl", records);
    log << "wrote " << splits[0].second << " train and " << splits[1].second << " test scenes to " << out.string()
        << "\n";
}

std::vector<data::GazeSample> load_split(const fs::path& dir, const std::string& split,
                                         const data::SampleOptions& options, std::size_t* skipped) {
    const auto records = data::load_annotations(dir / "annotations.jsonl");
    std::vector<data::GazeSample> samples;
    std::size_t skip = 0;
    for (const auto& r : records) {
        if (r.split != split) continue;
        const Image image = read_image(dir / r.image);
        if (image.width != r.width || image.height != r.height) {
            throw DataError(r.image + ": image is " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) + " but the annotation says " + std::to_string(r.width) +
                            "x" + std::to_string(r.height));
        }
        if (auto s = data::make_sample(r, image, options)) {
            samples.push_back(std::move(*s));
        } else {
            ++skip;
        }
    }
    if (skipped) *skipped = skip;
    return samples;
}

void train(const json& config, std::ostream& log) {
    const fs::path out = begin(config);
    const auto cfg = config::train_config_from(config.at("train"), seed_of(config));
    const data::SampleOptions options{cfg.model.scene_resolution, cfg.model.direction.crop_resolution};
    std::size_t skipped = 0;
    const auto samples = load_split(config.at("data").get<std::string>(), "train", options, &skipped);
    if (skipped) log << "warning: skipped " << skipped << " sample(s) whose gaze point is the head position\n";
    if (samples.empty()) throw DataError("no training samples in " + config.at("data").get<std::string>());
    log << "training on " << samples.size() << " samples, batch size " << cfg.batch_size << ", lr " << cfg.lr
        << (cfg.mid_layer_supervision ? "" : ", without mid-layer supervision") << "\n";

    const json meta{{"model", config::to_json(cfg.model)}, {"train", config::to_json(cfg)}, {"seed", cfg.seed}};
    train::TrainHooks hooks;
    hooks.on_epoch = [&](const train::LogRow& r) {
        log << "stage " << r.stage << " epoch " << r.epoch << std::fixed << std::setprecision(5);
        if (r.loss_d) log << " loss_d " << *r.loss_d;
        if (r.loss_h) log << " loss_h " << *r.loss_h;
        log << " loss " << r.loss << std::setprecision(1) << " (" << r.seconds << " s)\n" << std::defaultfloat;
    };
    hooks.on_stage_end = [&](int stage, const model::GazeModel& net) {
        save_checkpoint(out / "checkpoints" / ("stage" + std::to_string(stage) + ".json"), net.parameters(), meta);
    };
    const auto result = train::train_staged(samples, cfg, hooks);
    write_file_atomic(out / "train_log.csv", train::log_csv(result.log));
    save_checkpoint(out / "model.json", result.model.parameters(), meta);
    log << "saved " << (out / "model.json").string() << "\n";
}

json report_json(const metrics::MetricReport& r) {
    json curve = json::array();
    for (const auto& p : r.curve) curve.push_back({{"threshold", p.threshold}, {"fraction", p.fraction}});
    return {{"count", r.samples.size()}, {"auc", r.auc},
            {"dist", r.dist},           {"mdist", r.mdist},
            {"ang", r.ang},             {"mang", r.mang},
            {"ang_missing", r.ang_missing}, {"mang_missing", r.mang_missing},
            {"curve", curve}};
}

std::string per_sample_csv(const metrics::MetricReport& r, const std::vector<data::GazeSample>& samples) {
    std::string out = "index,id,pred_x,pred_y,auc,dist,mdist,ang,mang\n";
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        const auto& s = r.samples[i];
        out += std::to_string(i) + "," + (i < samples.size() ? samples[i].id : "") + "," + num(s.pred.x) + "," +
               num(s.pred.y) + "," + num(s.auc) + "," + num(s.dist) + "," + num(s.mdist) + "," + opt_num(s.ang) + "," +
               opt_num(s.mang) + "\n";
    }
    return out;
}

void eval(const json& config, std::ostream& log) {
    const fs::path out = begin(config);
    const bool oracle = config.at("oracle").get<bool>();
    const std::string split = config.at("split").get<std::string>();
    const fs::path data_dir = config.at("data").get<std::string>();

    metrics::MetricReport report;
    std::vector<data::GazeSample> samples;
    if (oracle) {
        // Ground-truth heatmaps as predictions: the maximum over per-annotation Gaussians.
        samples = load_split(data_dir, split, {});
        std::vector<heatmap::Heatmap> maps;
        const auto res = config.at("oracle_resolution").get<std::size_t>();
        if (res < 2) throw ConfigError("oracle_resolution must be >= 2");
        for (const auto& s : samples) {
            heatmap::Heatmap m{res, res,
                               std::vector<double>(res * res, 0.0)};
            for (const auto& g : s.gaze) {
                const auto one = heatmap::encode_gt(g, res, res);
                for (std::size_t k = 0; k < m.values.size(); ++k) m.values[k] = std::max(m.values[k], one.values[k]);
            }
            maps.push_back(std::move(m));
        }
        report = train::evaluate_heatmaps(maps, samples);
    } else {
        const fs::path ckpt = config.at("checkpoint").get<std::string>();
        if (!fs::exists(ckpt)) throw DataError("checkpoint not found: " + ckpt.string());
        json meta;
        const auto params = load_checkpoint(ckpt, &meta);
        if (!meta.contains("model")) throw DataError(ckpt.string() + ": checkpoint carries no model configuration");
        model::GazeModel net(config::model_config_from(meta.at("model")));
        load_into(params, net.parameters());
        const auto& m = net.config();
        samples = load_split(data_dir, split, {m.scene_resolution, m.direction.crop_resolution});
        report = train::evaluate(net, samples);
    }
    if (samples.empty()) throw DataError("no '" + split + "' samples in " + data_dir.string());

    write_file_atomic(out / "per_sample.csv", per_sample_csv(report, samples));
    write_file_atomic(out / "metrics.json", report_json(report).dump(2) + "\n");
    std::string curve = "threshold,fraction\n";
    for (const auto& p : report.curve) curve += num(p.threshold) + "," + num(p.fraction) + "\n";
    write_file_atomic(out / "curve.csv", curve);

    log << std::fixed << std::setprecision(4) << "samples " << report.samples.size() << "  AUC " << report.auc
        << "  Dist " << report.dist << "  MDist " << report.mdist << std::setprecision(2) << "  Ang " << report.ang
        << "  MAng " << report.mang << std::defaultfloat << "\n";
    if (report.ang_missing) {
        log << "warning: " << report.ang_missing << " prediction(s) on the head position left out of Ang\n";
    }
}

void field(const json& config, std::ostream& log) {
    const fs::path out = begin(config);
    const auto head = point_of(config, "head");
    const auto d = point_of(config, "dir");
    const Direction dir{d.x, d.y};
    if (dir.is_zero()) throw ConfigError("dir must not be the zero vector");
    const auto size = config.at("size").get<std::size_t>();
    if (size < 2) throw ConfigError("size must be >= 2");
    const auto gammas = config.at("gammas").get<std::vector<double>>();
    try {
        field::validate_gammas(gammas);
    } catch (const NumericError& e) {
        throw ConfigError(e.what());
    }
    const auto stack = field::build_field_stack(head, dir, size, size, gammas);
    for (std::size_t k = 0; k < gammas.size(); ++k) {
        char name[64], header[160];
        std::snprintf(name, sizeof name, "field_gamma%g.csv", gammas[k]);
        std::snprintf(header, sizeof header, "# head=%.17g,%.17g dir=%.17g,%.17g gamma=%.17g\n", head.x, head.y,
                      dir.dx, dir.dy, gammas[k]);
        std::string text = header;
        for (std::size_t r = 0; r < size; ++r) {
            for (std::size_t c = 0; c < size; ++c) text += (c ? "," : "") + num(stack.at(k, r, c));
            text += "\n";
        }
        write_file_atomic(out / name, text);
        log << "wrote " << (out / name).string() << "\n";
    }
}

bool gradcheck(const json& config, std::ostream& log) {
    const fs::path out = begin(config);
    gradcheck::Options options;
    options.seed = seed_of(config);
    options.step = config.at("step").get<double>();
    options.max_coords = config.at("max_coords").get<std::size_t>();
    const json fault = config.value("fault", json());
    if (!fault.is_null()) {
        const auto op = fault.is_object() ? fault.value("op", "") : "";
        const auto kind = op_from_name(op);
        if (!kind) throw ConfigError("fault.op must name an op kind, got '" + op + "'");
        options.fault = std::make_pair(*kind, fault.value("factor", 1.5));
    }
    const auto results = gradcheck::run_suite(options);
    json rows = json::array();
    bool ok = true;
    for (const auto& r : results) {
        ok = ok && r.passed;
        log << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(22) << r.name << " rel_error "
            << std::scientific << std::setprecision(3) << r.rel_error << " (tol " << r.tolerance << ")\n"
            << std::defaultfloat;
        rows.push_back({{"name", r.name}, {"rel_error", r.rel_error}, {"tolerance", r.tolerance}, {"passed", r.passed}});
    }
    write_file_atomic(out / "gradcheck.json", json{{"passed", ok}, {"checks", rows}}.dump(2) + "\n");
    log << (ok ? "all gradient checks passed\n" : "gradient check FAILED\n");
    return ok;
}

}  // namespace gazefield::cli

// vitc: Vision Transformer image classifier.
//
// Subcommands mirror the pipeline stages: split, train, eval, attend.
// Exit codes: 0 success, 2 usage error, 3 numeric failure during
// training, 4 checkpoint/config/dataset mismatch.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vitc/augment.hpp"
#include "vitc/checkpoint.hpp"
#include "vitc/common.hpp"
#include "vitc/dataset.hpp"
#include "vitc/evaluator.hpp"
#include "vitc/imageio.hpp"
#include "vitc/rollout.hpp"
#include "vitc/trainer.hpp"
#include "vitc/vit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitMismatch = 4;

struct SplitArgs {
    std::string root, out = "split.manifest";
    std::string fractions = "0.85,0.15";
    double val_from_train = 0.15;
    std::string counts;
    uint64_t seed = 0;
    bool stratified = true;
};

struct ModelArgs {
    std::string preset = "b16";
    int image_size = -1, patch_size = -1, layers = -1, hidden_d = -1, mlp_size = -1, heads = -1;
    double dropout = 0.0;

    vitc::vit::ViTConfig build(int num_classes) const {
        vitc::vit::ViTConfig cfg;
        if (preset == "b16") cfg = vitc::vit::ViTConfig::b16(num_classes);
        else if (preset == "l16") cfg = vitc::vit::ViTConfig::l16(num_classes);
        else if (preset == "tiny") cfg = vitc::vit::ViTConfig::tiny(num_classes);
        else throw vitc::ValueError("unknown preset '" + preset + "' (expected b16, l16, or tiny)");
        if (image_size > 0) cfg.image_size = image_size;
        if (patch_size > 0) cfg.patch_size = patch_size;
        if (layers > 0) cfg.layers = layers;
        if (hidden_d > 0) cfg.hidden_d = hidden_d;
        if (mlp_size > 0) cfg.mlp_size = mlp_size;
        if (heads > 0) cfg.heads = heads;
        cfg.dropout = dropout;
        cfg.num_classes = num_classes;
        cfg.validate();
        return cfg;
    }
};

struct TrainArgs {
    std::string root, manifest, out_dir = "run";
    ModelArgs model;
    std::string pretrained;
    bool from_scratch = false;
    bool augment = false;
    int64_t steps = 10000;
    int batch = 32;
    double lr = 0.03;
    double momentum = 0.9;
    int eval_interval = 100;
    int patience = 10;
    int warmup = 0;
    bool freeze_encoder = false;
    uint64_t seed = 0;
    int workers = 1;
    // augmentation ranges
    double aug_rotation = 30.0;
    double aug_hflip_p = 0.5;
    bool aug_hsv = true;
    double aug_brightness = 0.2;
    double aug_contrast_min = 0.8, aug_contrast_max = 1.25;
    double aug_shift = 0.1;
    double aug_scale_min = 0.9, aug_scale_max = 1.1;
};

struct EvalArgs {
    std::string root, manifest, checkpoint, out_dir = "eval";
    std::string split = "test";
    int batch = 32;
    int workers = 1;
};

struct AttendArgs {
    std::string checkpoint, out_dir = "attend";
    std::vector<std::string> images;
};

/// Expand `--config <file>` (key=value text, # comments) into
/// `--key=value` tokens placed right before the user's own flags, so
/// explicit flags override the file under the take-last policy.
std::vector<std::string> expand_config_tokens(int argc, char** argv) {
    std::vector<std::string> raw(argv + 1, argv + argc);
    std::string config_path;
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == "--config" && i + 1 < raw.size()) config_path = raw[i + 1];
        else if (raw[i].rfind("--config=", 0) == 0) config_path = raw[i].substr(9);
    }
    if (config_path.empty()) return raw;

    std::ifstream in(config_path);
    if (!in) throw vitc::IoError("cannot read config file '" + config_path + "'");
    std::vector<std::string> injected;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        size_t start = 0;
        while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) start++;
        line = line.substr(start);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw vitc::ValueError("config file '" + config_path + "' line " + std::to_string(lineno) +
                                   ": expected key=value");
        const std::string key = line.substr(0, eq);
        if (key == "config")
            throw vitc::ValueError("config files cannot nest via a 'config' key");
        injected.push_back("--" + key + "=" + line.substr(eq + 1));
    }

    // place injected tokens right after the subcommand name
    std::vector<std::string> out;
    size_t sub_pos = 0;
    while (sub_pos < raw.size() && raw[sub_pos].rfind("-", 0) == 0) sub_pos++;
    for (size_t i = 0; i <= sub_pos && i < raw.size(); ++i) out.push_back(raw[i]);
    out.insert(out.end(), injected.begin(), injected.end());
    for (size_t i = sub_pos + 1; i < raw.size(); ++i) out.push_back(raw[i]);
    return out;
}

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<int64_t> parse_csv_ints(const std::string& s) {
    std::vector<int64_t> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stoll(item));
    return out;
}

void resize_all(std::vector<vitc::data::Sample>& samples, int size) {
    for (auto& s : samples) s.pixels = vitc::data::resize_bilinear(s.pixels, size, size);
}

int run_split(const SplitArgs& args) {
    const auto listing = vitc::data::list_dataset(args.root);

    vitc::data::SplitSpec spec;
    spec.seed = args.seed;
    spec.stratified = args.stratified;
    if (!args.counts.empty()) {
        const auto counts = parse_csv_ints(args.counts);
        if (counts.size() != 3) throw vitc::ValueError("--counts expects train,val,test");
        spec.mode = vitc::data::SplitMode::Counts;
        spec.count_train = counts[0];
        spec.count_val = counts[1];
        spec.count_test = counts[2];
    } else {
        const auto fracs = parse_csv_doubles(args.fractions);
        if (fracs.size() != 2) throw vitc::ValueError("--fractions expects train,test");
        spec.mode = vitc::data::SplitMode::Fractions;
        spec.test_fraction = fracs[1];
        spec.val_from_train = args.val_from_train;
    }

    const auto manifest = vitc::data::split_dataset(listing, spec);
    manifest.save(args.out);

    // per-split per-class counts
    const auto& names = listing.catalog.names;
    auto count_by_class = [&](const std::vector<std::string>& paths) {
        std::vector<int64_t> counts(names.size(), 0);
        for (const auto& p : paths) {
            const std::string cls = p.substr(0, p.find('/'));
            const auto it = std::find(names.begin(), names.end(), cls);
            if (it != names.end()) counts[static_cast<size_t>(it - names.begin())]++;
        }
        return counts;
    };
    const auto tr = count_by_class(manifest.train), va = count_by_class(manifest.val),
               te = count_by_class(manifest.test);
    std::cout << std::left << std::setw(16) << "class" << std::right << std::setw(8) << "train" << std::setw(8)
              << "val" << std::setw(8) << "test\n";
    for (size_t c = 0; c < names.size(); ++c)
        std::cout << std::left << std::setw(16) << names[c] << std::right << std::setw(8) << tr[c] << std::setw(8)
                  << va[c] << std::setw(8) << te[c] << "\n";
    std::cout << std::left << std::setw(16) << "total" << std::right << std::setw(8) << manifest.train.size()
              << std::setw(8) << manifest.val.size() << std::setw(8) << manifest.test.size() << "\n";
    std::cout << "manifest written to " << args.out << "\n";
    return kExitOk;
}

json config_to_json(const vitc::vit::ViTConfig& cfg) {
    return json{{"image_size", cfg.image_size}, {"patch_size", cfg.patch_size}, {"layers", cfg.layers},
                {"hidden_d", cfg.hidden_d},     {"mlp_size", cfg.mlp_size},     {"heads", cfg.heads},
                {"num_classes", cfg.num_classes}, {"channels", cfg.channels},   {"dropout", cfg.dropout}};
}

int run_train(const TrainArgs& args) {
    if (args.pretrained.empty() && !args.from_scratch)
        throw vitc::ValueError("choose --pretrained <checkpoint> or --from-scratch");
    if (!args.pretrained.empty() && args.from_scratch)
        throw vitc::ValueError("--pretrained and --from-scratch are mutually exclusive");

    const auto listing = vitc::data::list_dataset(args.root);
    const int num_classes = listing.catalog.num_classes();
    const auto cfg = args.model.build(num_classes);

    const auto manifest = vitc::data::SplitManifest::load(args.manifest);
    if (manifest.train.empty()) throw vitc::ValueError("manifest has an empty train split");

    std::cout << "loading " << manifest.train.size() << " train / " << manifest.val.size() << " val images\n";
    auto train_samples = vitc::data::load_paths(args.root, listing.catalog.names, manifest.train, args.workers);
    auto val_samples = vitc::data::load_paths(args.root, listing.catalog.names, manifest.val, args.workers);
    resize_all(train_samples, cfg.image_size);
    resize_all(val_samples, cfg.image_size);

    vitc::aug::AugmentSpec aug_spec;
    aug_spec.rotation_max_degrees = args.aug_rotation;
    aug_spec.hflip_probability = args.aug_hflip_p;
    aug_spec.hsv_enabled = args.aug_hsv;
    aug_spec.brightness_delta_max = args.aug_brightness;
    aug_spec.contrast_factor_min = args.aug_contrast_min;
    aug_spec.contrast_factor_max = args.aug_contrast_max;
    aug_spec.shift_max_fraction = args.aug_shift;
    aug_spec.scale_min = args.aug_scale_min;
    aug_spec.scale_max = args.aug_scale_max;
    aug_spec.seed = args.seed;
    if (args.augment) {
        train_samples = vitc::aug::augment_dataset(train_samples, aug_spec, args.workers);
        std::cout << "augmented train split to " << train_samples.size() << " samples\n";
    }

    vitc::vit::ModelParams<float> params;
    if (!args.pretrained.empty()) {
        params = vitc::ckpt::import_external(args.pretrained, cfg);
        std::cout << "imported pretrained weights from " << args.pretrained << "\n";
    } else {
        params = vitc::vit::init_params<float>(cfg, args.seed);
    }

    vitc::train::TrainConfig tcfg;
    tcfg.total_steps = args.steps;
    tcfg.batch_size = args.batch;
    tcfg.base_lr = args.lr;
    tcfg.momentum = args.momentum;
    tcfg.eval_interval_steps = args.eval_interval;
    tcfg.early_stop_patience_evals = args.patience;
    tcfg.warmup_steps = args.warmup;
    tcfg.freeze_encoder = args.freeze_encoder;
    tcfg.seed = args.seed;

    fs::create_directories(args.out_dir);

    // effective-config echo, sufficient to repeat the run exactly
    json run;
    run["command"] = "train";
    run["root"] = args.root;
    run["manifest"] = args.manifest;
    run["out_dir"] = args.out_dir;
    run["preset"] = args.model.preset;
    run["model"] = config_to_json(cfg);
    run["pretrained"] = args.pretrained;
    run["from_scratch"] = args.from_scratch;
    run["augment"] = args.augment;
    run["augment_spec"] = json{{"rotation_max_degrees", aug_spec.rotation_max_degrees},
                               {"hflip_probability", aug_spec.hflip_probability},
                               {"hsv_enabled", aug_spec.hsv_enabled},
                               {"hue_delta_max", aug_spec.hue_delta_max},
                               {"sat_delta_max", aug_spec.sat_delta_max},
                               {"brightness_delta_max", aug_spec.brightness_delta_max},
                               {"contrast_factor_range", {aug_spec.contrast_factor_min, aug_spec.contrast_factor_max}},
                               {"shift_max_fraction", aug_spec.shift_max_fraction},
                               {"scale_range", {aug_spec.scale_min, aug_spec.scale_max}},
                               {"seed", aug_spec.seed}};
    run["train"] = json{{"total_steps", tcfg.total_steps},
                        {"batch_size", tcfg.batch_size},
                        {"base_lr", tcfg.base_lr},
                        {"momentum", tcfg.momentum},
                        {"eval_interval_steps", tcfg.eval_interval_steps},
                        {"early_stop_patience_evals", tcfg.early_stop_patience_evals},
                        {"warmup_steps", tcfg.warmup_steps},
                        {"freeze_encoder", tcfg.freeze_encoder},
                        {"seed", tcfg.seed}};
    run["workers"] = args.workers;
    {
        std::ofstream rf(fs::path(args.out_dir) / "run.json");
        rf << run.dump(2) << "\n";
    }

    const auto result = vitc::train::train(params, train_samples, val_samples, tcfg, nullptr, &std::cout);

    const std::string ckpt_path = (fs::path(args.out_dir) / "checkpoint.vitc").string();
    vitc::ckpt::save(result.best_params,
                     {{"seed", std::to_string(args.seed)},
                      {"source", args.pretrained.empty() ? "scratch" : args.pretrained},
                      {"step", std::to_string(result.best_step)},
                      {"val_accuracy", std::to_string(result.best_val_accuracy)}},
                     ckpt_path);
    vitc::train::write_history_csv((fs::path(args.out_dir) / "history.csv").string(), result.history);

    std::cout << "steps_run=" << result.steps_run << (result.early_stopped ? " (early stop)" : "") << "\n";
    std::cout << "best_val_accuracy=" << result.best_val_accuracy << " at step " << result.best_step << "\n";
    std::cout << "checkpoint written to " << ckpt_path << "\n";
    return kExitOk;
}

int run_eval(const EvalArgs& args) {
    const auto ck = vitc::ckpt::load(args.checkpoint);

    const auto listing = vitc::data::list_dataset(args.root);
    if (listing.catalog.num_classes() != ck.config.num_classes)
        throw vitc::MismatchError("dataset has " + std::to_string(listing.catalog.num_classes()) +
                                  " classes but the checkpoint expects " + std::to_string(ck.config.num_classes));

    const auto manifest = vitc::data::SplitManifest::load(args.manifest);
    const std::vector<std::string>* paths = nullptr;
    if (args.split == "test") paths = &manifest.test;
    else if (args.split == "val") paths = &manifest.val;
    else if (args.split == "train") paths = &manifest.train;
    else throw vitc::ValueError("--split must be train, val, or test");
    if (paths->empty()) throw vitc::ValueError("manifest split '" + args.split + "' is empty");

    auto samples = vitc::data::load_paths(args.root, listing.catalog.names, *paths, args.workers);
    resize_all(samples, ck.config.image_size);

    const auto pred = vitc::eval::predict(ck.params, samples, args.batch);
    std::vector<int> truth;
    truth.reserve(samples.size());
    for (const auto& s : samples) truth.push_back(s.label);

    const auto cm = vitc::eval::confusion(truth, pred.labels, ck.config.num_classes);
    const auto rep = vitc::eval::report(cm);

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    vitc::eval::write_report_text((out / "report.txt").string(), rep, listing.catalog.names);
    vitc::eval::write_report_kv((out / "report.kv").string(), rep, listing.catalog.names);
    vitc::eval::write_confusion_csv((out / "confusion_counts.csv").string(), cm, listing.catalog.names);
    vitc::eval::write_confusion_normalized_csv((out / "confusion_normalized.csv").string(), cm,
                                               listing.catalog.names);

    std::cout << "evaluated " << samples.size() << " samples from split '" << args.split << "'\n";
    std::cout << "reports written to " << args.out_dir << "\n";
    std::cout << "accuracy=" << rep.accuracy << std::endl;
    return kExitOk;
}

int run_attend(const AttendArgs& args) {
    const auto ck = vitc::ckpt::load(args.checkpoint);
    fs::create_directories(args.out_dir);

    int failures = 0;
    for (const auto& image_path : args.images) {
        try {
            vitc::core::TensorF pixels = vitc::img::decode_image(image_path);
            pixels = vitc::data::resize_bilinear(pixels, ck.config.image_size, ck.config.image_size);

            vitc::vit::AttentionTrace<float> trace;
            vitc::core::NoGradGuard ng;
            vitc::vit::forward(vitc::data::standardize(pixels), ck.params, &trace);
            const auto map = vitc::rollout::rollout(trace);

            const std::string stem = fs::path(image_path).stem().string();
            const std::string png = (fs::path(args.out_dir) / (stem + ".rollout.png")).string();
            const std::string csv = (fs::path(args.out_dir) / (stem + ".rollout.csv")).string();
            vitc::rollout::overlay(map.grid_scaled, map.grid_side, pixels, png);
            vitc::rollout::write_grid_csv(map.grid_raw, map.grid_side, csv);
            std::cout << image_path << " -> " << png << ", " << csv << "\n";
        } catch (const std::exception& e) {
            std::cerr << "warning: failed on '" << image_path << "': " << e.what() << "\n";
            failures++;
        }
    }
    if (failures == static_cast<int>(args.images.size())) {
        std::cerr << "error: all inputs failed\n";
        return 1;
    }
    return kExitOk;
}

void add_model_options(CLI::App* app, ModelArgs& model) {
    app->add_option("--preset", model.preset, "Model preset: b16, l16, or tiny")->default_str("b16");
    app->add_option("--image-size", model.image_size, "Input side length (overrides preset)");
    app->add_option("--patch-size", model.patch_size, "Patch side length (overrides preset)");
    app->add_option("--layers", model.layers, "Encoder depth (overrides preset)");
    app->add_option("--hidden", model.hidden_d, "Embedding width (overrides preset)");
    app->add_option("--mlp", model.mlp_size, "MLP hidden width (overrides preset)");
    app->add_option("--heads", model.heads, "Attention heads (overrides preset)");
    app->add_option("--dropout", model.dropout, "Dropout rate (default off)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vitc: Vision Transformer image classifier"};
    app.require_subcommand(1);

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Partition a dataset into train/val/test");
    split->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    split->add_option("--root", split_args.root, "Dataset root (one directory per class)")->required();
    split->add_option("--out", split_args.out, "Manifest output path");
    split->add_option("--fractions", split_args.fractions, "train,test fractions (default 0.85,0.15)");
    split->add_option("--val-from-train", split_args.val_from_train,
                      "Fraction of the train pool used for validation");
    split->add_option("--counts", split_args.counts, "Exact train,val,test counts (overrides fractions)");
    split->add_option("--seed", split_args.seed, "Shuffle seed");
    split->add_flag("--stratified,!--no-stratified", split_args.stratified, "Preserve class proportions");
    std::string split_cfg;
    split->add_option("--config", split_cfg, "key=value config file (flags override it)");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train or fine-tune a model");
    train->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    train->add_option("--root", train_args.root, "Dataset root")->required();
    train->add_option("--manifest", train_args.manifest, "Split manifest")->required();
    train->add_option("--out-dir", train_args.out_dir, "Output directory");
    add_model_options(train, train_args.model);
    train->add_option("--pretrained", train_args.pretrained, "Import weights from a VITC checkpoint");
    train->add_flag("--from-scratch", train_args.from_scratch, "Random initialization");
    train->add_flag("--augment,!--no-augment", train_args.augment, "Five-fold training-set augmentation");
    train->add_option("--steps", train_args.steps, "Total optimizer steps");
    train->add_option("--lr", train_args.lr, "Base learning rate");
    train->add_option("--batch", train_args.batch, "Batch size");
    train->add_option("--momentum", train_args.momentum, "SGD momentum");
    train->add_option("--eval-interval", train_args.eval_interval, "Steps between validation evals");
    train->add_option("--patience", train_args.patience, "Early-stop patience in evals");
    train->add_option("--warmup", train_args.warmup, "Linear warmup steps (default 0)");
    train->add_flag("--freeze-encoder", train_args.freeze_encoder, "Train only the classification head");
    train->add_option("--seed", train_args.seed, "Master seed for all randomness");
    train->add_option("--workers", train_args.workers, "Data loading/augmentation threads");
    train->add_option("--aug-rotation", train_args.aug_rotation, "Max rotation degrees");
    train->add_option("--aug-hflip-p", train_args.aug_hflip_p, "Horizontal flip probability");
    train->add_flag("--aug-hsv,!--no-aug-hsv", train_args.aug_hsv, "HSV jitter");
    train->add_option("--aug-brightness", train_args.aug_brightness, "Max brightness delta");
    train->add_option("--aug-contrast-min", train_args.aug_contrast_min, "Contrast factor lower bound");
    train->add_option("--aug-contrast-max", train_args.aug_contrast_max, "Contrast factor upper bound");
    train->add_option("--aug-shift", train_args.aug_shift, "Max shift fraction");
    train->add_option("--aug-scale-min", train_args.aug_scale_min, "Scale lower bound");
    train->add_option("--aug-scale-max", train_args.aug_scale_max, "Scale upper bound");
    std::string train_cfg;
    train->add_option("--config", train_cfg, "key=value config file (flags override it)");

    EvalArgs eval_args;
    auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
    evalc->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    evalc->add_option("--root", eval_args.root, "Dataset root")->required();
    evalc->add_option("--manifest", eval_args.manifest, "Split manifest")->required();
    evalc->add_option("--checkpoint", eval_args.checkpoint, "VITC checkpoint")->required();
    evalc->add_option("--out-dir", eval_args.out_dir, "Output directory");
    evalc->add_option("--split", eval_args.split, "Which split to evaluate (default test)");
    evalc->add_option("--batch", eval_args.batch, "Batch size");
    evalc->add_option("--workers", eval_args.workers, "Data loading threads");
    std::string eval_cfg;
    evalc->add_option("--config", eval_cfg, "key=value config file (flags override it)");

    AttendArgs attend_args;
    auto* attend = app.add_subcommand("attend", "Render attention-rollout overlays");
    attend->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    attend->add_option("--checkpoint", attend_args.checkpoint, "VITC checkpoint")->required();
    attend->add_option("--out-dir", attend_args.out_dir, "Output directory");
    attend->add_option("images", attend_args.images, "Input images")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    std::string attend_cfg;
    attend->add_option("--config", attend_cfg, "key=value config file (flags override it)");

    try {
        std::vector<std::string> tokens = expand_config_tokens(argc, argv);
        std::reverse(tokens.begin(), tokens.end());
        app.parse(std::move(tokens));
    } catch (const vitc::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const vitc::ValueError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help/--version
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (split->parsed()) return run_split(split_args);
        if (train->parsed()) return run_train(train_args);
        if (evalc->parsed()) return run_eval(eval_args);
        if (attend->parsed()) return run_attend(attend_args);
        return kExitUsage;
    } catch (const vitc::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const vitc::MismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMismatch;
    } catch (const vitc::IntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMismatch;
    } catch (const vitc::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMismatch;
    } catch (const vitc::ValueError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

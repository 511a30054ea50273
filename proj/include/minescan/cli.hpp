#ifndef MINESCAN_CLI_HPP
#define MINESCAN_CLI_HPP

#include "minescan/config.hpp"
#include "minescan/error.hpp"
#include "minescan/filter.hpp"
#include "minescan/mlp.hpp"
#include "minescan/pipeline.hpp"
#include "minescan/raster.hpp"
#include "minescan/roi.hpp"
#include "minescan/segment.hpp"
#include "minescan/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace minescan::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, failure = 1, usage = 2 };

inline void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(path.string() + ": cannot open for writing");
    out << text;
    if (!out)
        throw IoError(path.string() + ": write failed");
}

inline std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(path.string() + ": cannot open");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fs::path classes_path(const fs::path& model) { return fs::path(model.string() + ".classes"); }

/// Settings the model was trained with, so classification extracts features
/// the same way.
inline fs::path config_path(const fs::path& model) { return fs::path(model.string() + ".config"); }

/// Overrides written next to the reference suite. Both knobs are outside the
/// fixed training parameters (layers, units, momentum, rate, error target):
/// a steeper sigmoid with a larger input divisor keeps hidden units in their
/// responsive range while speeding up the final approach to the error target.
inline constexpr std::string_view reference_experiment_config = "# settings for the reference suite\n"
                                                                "slope = 4\n"
                                                                "scale_factor = 32\n";

/// Distinct colours for label maps: hue steps by the golden angle.
inline Rgb palette_color(std::size_t index)
{
    const double hue = std::fmod(double(index) * 137.50776405, 360.0) / 60.0;
    const double x = 1.0 - std::abs(std::fmod(hue, 2.0) - 1.0);
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hue)) {
    case 0: r = 1; g = x; break;
    case 1: r = x; g = 1; break;
    case 2: g = 1; b = x; break;
    case 3: g = x; b = 1; break;
    case 4: r = x; b = 1; break;
    default: r = 1; b = x; break;
    }
    auto byte = [](double v) { return static_cast<std::uint8_t>(std::lround(55.0 + 200.0 * v)); };
    return {byte(r), byte(g), byte(b)};
}

// ---------------------------------------------------------------------------
// Commands. Each takes a fully resolved Config plus its own arguments and
// returns an exit code; errors propagate as minescan::Error.

inline int cmd_filter(FilterKind kind, const fs::path& in, const fs::path& out, std::ostream& log)
{
    save_ppm(apply_filter(load_ppm(in), kind), out);
    log << "wrote " << out.string() << '\n';
    return ok;
}

inline int cmd_segment(const Config& config, const fs::path& in, const fs::path& out_dir,
                       std::optional<FilterKind> filter, bool write_crops, std::ostream& log)
{
    RgbImage image = load_ppm(in);
    if (filter)
        image = apply_filter(image, *filter);
    const SegmentResult seg = kmeans_segment(image, config.pipeline.seg);
    fs::create_directories(out_dir);

    const auto objects = extract_objects(image, seg);
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const fs::path path = out_dir / ("object_" + std::to_string(i) + ".ppm");
        save_ppm(objects[i], path);
        if (write_crops) {
            try {
                save_ppm(crop(objects[i], find_roi(objects[i], config.pipeline.blank_level)),
                         out_dir / ("object_" + std::to_string(i) + "_crop.ppm"));
            } catch (const NoContentError&) {
                log << "object " << i << " has no content above blank level; no crop written\n";
            }
        }
    }
    RgbImage label_map(image.width(), image.height());
    for (std::size_t i = 0; i < seg.labels.size(); ++i)
        label_map.pixels()[i] = palette_color(seg.labels[i]);
    save_ppm(label_map, out_dir / "labels.ppm");

    log << "clusters: " << seg.k() << "  iterations: " << seg.iterations
        << (seg.converged ? "  (converged)" : "  (iteration cap reached)") << '\n';
    return ok;
}

inline int cmd_train(const Config& config, const fs::path& manifest_path, const fs::path& model_path,
                     const fs::path& curve_path, std::ostream& log)
{
    const Manifest manifest = load_manifest(manifest_path);
    std::vector<LabeledImage> images;
    images.reserve(manifest.entries.size());
    for (const ManifestEntry& e : manifest.entries) {
        try {
            images.push_back({load_ppm(e.path), e.class_index, e.path.string()});
        } catch (const Error& ex) {
            throw PipelineError(manifest_path.string() + ": " + ex.what());
        }
    }
    const std::size_t classes = manifest.classes.size();
    const std::vector<Sample> samples = build_training_set(images, classes, config.pipeline);

    Network net = init_network(network_shape(config, classes), config.slope, config.init_seed);
    const TrainingReport report = train(net, samples, config.train);

    save_model(net, model_path);
    write_text(config_path(model_path), render_config(config));
    std::string names;
    for (const ClassSpec& c : manifest.classes)
        names += c.name + '\n';
    write_text(classes_path(model_path), names);
    write_text(curve_path, render_curve(report));

    log << "samples: " << samples.size() << "  classes: " << classes << '\n'
        << "outcome: " << to_string(report.outcome) << "  epochs: " << report.epochs_run;
    if (!report.mse_history.empty())
        log << "  final mse: " << report.mse_history.back();
    log << '\n' << "wrote " << model_path.string() << " and " << curve_path.string() << '\n';
    return report.outcome == TrainOutcome::diverged ? failure : ok;
}

inline std::vector<ClassSpec> load_class_names(const fs::path& model_path, std::size_t outputs)
{
    std::vector<ClassSpec> classes;
    const fs::path path = classes_path(model_path);
    if (fs::exists(path)) {
        std::istringstream in(read_text(path));
        std::string line;
        while (std::getline(in, line))
            if (!line.empty())
                classes.push_back({classes.size(), line});
    }
    if (classes.empty())
        for (std::size_t i = 0; i < outputs; ++i)
            classes.push_back({i, "class" + std::to_string(i)});
    if (classes.size() != outputs)
        throw ModelFormatError(path.string() + ": lists " + std::to_string(classes.size()) +
                               " classes but the model has " + std::to_string(outputs) + " outputs");
    return classes;
}

inline int cmd_classify(const Config& config, const fs::path& model_path, const fs::path& in,
                        const fs::path& out, const fs::path& report_path, std::ostream& stdout_stream,
                        std::ostream& log)
{
    const Network net = load_model(model_path);
    if (net.input_size() != feature_length)
        throw ModelFormatError(model_path.string() + ": model expects " + std::to_string(net.input_size()) +
                               " inputs, features have " + std::to_string(feature_length));
    const auto classes = load_class_names(model_path, net.output_size());
    const RgbImage scene = load_ppm(in);
    const std::vector<Detection> detections = classify_scene(net, scene, config.pipeline);

    save_ppm(annotate(scene, detections), out);
    const std::string report = render_report(detections, classes);
    write_text(report_path, report);
    stdout_stream << report;
    log << detections.size() << " detection(s); wrote " << out.string() << " and " << report_path.string()
        << '\n';
    return ok;
}

inline void write_scene(const SyntheticScene& scene, const fs::path& ppm)
{
    save_ppm(scene.image, ppm);
    fs::path truth = ppm;
    truth.replace_extension(".truth.txt");
    write_text(truth, render_ground_truth(scene));
}

inline int cmd_synth_suite(const fs::path& out_dir, std::ostream& log)
{
    const ReferenceSuite suite = reference_suite();
    fs::create_directories(out_dir / "train");
    std::string manifest;
    for (const NamedScene& s : suite.training) {
        const SyntheticScene scene = gen_synthetic_scene(s.spec, s.seed);
        const fs::path rel = fs::path("train") / (s.name + ".ppm");
        write_scene(scene, out_dir / rel);
        manifest += rel.generic_string() + '\t' + std::string(to_string(scene.objects.front().shape)) + '\n';
    }
    write_text(out_dir / "manifest.tsv", manifest);
    write_text(out_dir / "experiment.cfg", std::string(reference_experiment_config));
    for (const NamedScene& s : suite.tests)
        write_scene(gen_synthetic_scene(s.spec, s.seed), out_dir / (s.name + ".ppm"));
    log << "wrote " << suite.training.size() << " training images, manifest.tsv, experiment.cfg and " << suite.tests.size()
        << " test scenes to " << out_dir.string() << '\n';
    return ok;
}

inline int cmd_synth_spec(const fs::path& spec_path, const fs::path& out, std::uint64_t seed, std::ostream& log)
{
    const SceneSpec spec = parse_scene_spec(read_text(spec_path));
    const SyntheticScene scene = gen_synthetic_scene(spec, seed);
    if (out.has_parent_path())
        fs::create_directories(out.parent_path());
    write_scene(scene, out);
    log << "wrote " << out.string() << " with " << scene.objects.size() << " object(s)\n";
    return ok;
}

/// Random [8,5,3]-style networks with weights in [-1,1], random inputs in
/// [0,1] and one-hot targets. Returns the worst relative error found.
inline double run_gradient_checks(const std::vector<std::size_t>& shape, std::size_t nets, double eps,
                                  std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> weight(-1.0, 1.0);
    std::uniform_real_distribution<double> input(0.0, 1.0);
    double worst = 0.0;
    for (std::size_t n = 0; n < nets; ++n) {
        Network net = init_network(shape, 1.0, rng());
        for (Matrix& w : net.weights)
            for (double& v : w.data)
                v = weight(rng);
        Sample s;
        s.input.resize(shape.front());
        for (double& v : s.input)
            v = input(rng);
        s.desired = one_hot(static_cast<std::size_t>(rng() % shape.back()), shape.back());
        worst = std::max(worst, gradient_check(net, s, eps));
    }
    return worst;
}

inline constexpr double gradcheck_tolerance = 1e-4;

inline int cmd_gradcheck(std::size_t nets, double eps, std::uint64_t seed, std::ostream& out)
{
    const double worst = run_gradient_checks({8, 5, 3}, nets, eps, seed);
    out << "max relative error: " << worst << " over " << nets << " network(s)\n";
    return worst < gradcheck_tolerance ? ok : failure;
}

// ---------------------------------------------------------------------------

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"minescan: filter, segment, train and classify objects in colour images"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_file;
    app.add_option("--config", config_file, "key = value config file (overrides $MINESCAN_CONFIG)");

    const std::vector<std::string> kinds{"mean", "median", "gaussian"};

    std::string kind, in, out_path, out_dir, manifest, model, curve, report, spec;
    std::string seg_filter;
    std::optional<double> threshold, spatial_weight;
    std::optional<std::size_t> max_epochs;
    std::optional<std::uint64_t> seed;
    bool crops = false;
    std::string suite;
    std::size_t nets = 20;
    double eps = 1e-5;
    std::uint64_t synth_seed = 1;
    std::uint64_t check_seed = 1;

    auto* filter = app.add_subcommand("filter", "denoise a PPM image");
    filter->add_option("--kind", kind, "mean | median | gaussian")->required()->check(CLI::IsMember(kinds));
    filter->add_option("--in", in, "input PPM")->required();
    filter->add_option("--out", out_path, "output PPM")->required();

    auto* segment = app.add_subcommand("segment", "SCS-seeded K-means segmentation");
    segment->add_option("--in", in, "input PPM")->required();
    segment->add_option("--out-dir", out_dir, "directory for object and label-map PPMs")->required();
    segment->add_option("--threshold", threshold, "SCS seed threshold (default 85)");
    segment->add_option("--spatial-weight", spatial_weight, "weight of X,Y in the distance");
    segment->add_option("--filter", seg_filter, "denoise before segmenting")->check(CLI::IsMember(kinds));
    segment->add_flag("--crop", crops, "also write ROI-cropped objects");

    auto* train_cmd = app.add_subcommand("train", "build a training set and train the network");
    train_cmd->add_option("--manifest", manifest, "lines of '<ppm path>\\t<class name>'")->required();
    train_cmd->add_option("--model", model, "checkpoint to write");
    train_cmd->add_option("--curve", curve, "epoch,mse CSV to write");
    train_cmd->add_option("--max-epochs", max_epochs, "epoch cap");
    train_cmd->add_option("--seed", seed, "sample-order seed");

    auto* classify = app.add_subcommand("classify", "detect and classify objects in a scene");
    classify->add_option("--model", model, "trained checkpoint");
    classify->add_option("--in", in, "scene PPM")->required();
    classify->add_option("--out", out_path, "annotated PPM")->required();
    classify->add_option("--report", report, "detection report (default <out>.txt)");

    auto* synth = app.add_subcommand("synth", "render synthetic scenes");
    synth->add_option("--suite", suite, "named scene suite")->check(CLI::IsMember({"paper"}));
    synth->add_option("--spec", spec, "scene description file");
    synth->add_option("--out-dir", out_dir, "output directory for --suite");
    synth->add_option("--out", out_path, "output PPM for --spec");
    synth->add_option("--seed", synth_seed, "noise seed for --spec");

    auto* gradcheck = app.add_subcommand("gradcheck", "compare backprop against finite differences");
    gradcheck->add_option("--eps", eps, "finite-difference step")->check(CLI::PositiveNumber);
    gradcheck->add_option("--nets", nets, "number of random networks");
    gradcheck->add_option("--seed", check_seed, "random seed");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        err << "run with --help for usage\n";
        return usage;
    }

    try {
        // --config wins over $MINESCAN_CONFIG; either is applied on top of `base`.
        auto user_config = [&](Config base) {
            if (!config_file.empty())
                return load_config(config_file, std::move(base));
            if (const char* env = std::getenv("MINESCAN_CONFIG"); env && *env)
                return load_config(env, std::move(base));
            return base;
        };
        Config config = user_config({});

        if (filter->parsed())
            return cmd_filter(parse_filter_kind(kind), in, out_path, err);

        if (segment->parsed()) {
            if (threshold)
                set_config_value(config, "threshold", std::to_string(*threshold));
            if (spatial_weight)
                set_config_value(config, "spatial_weight", std::to_string(*spatial_weight));
            std::optional<FilterKind> pre;
            if (!seg_filter.empty())
                pre = parse_filter_kind(seg_filter);
            return cmd_segment(config, in, out_dir, pre, crops, err);
        }

        if (train_cmd->parsed()) {
            if (max_epochs)
                config.train.max_epochs = *max_epochs;
            if (seed)
                config.train.rng_seed = *seed;
            const fs::path model_path = !model.empty()             ? fs::path(model)
                                        : !config.model_path.empty() ? fs::path(config.model_path)
                                                                     : fs::path("minescan.model");
            const fs::path curve_path = !curve.empty()             ? fs::path(curve)
                                        : !config.curve_path.empty() ? fs::path(config.curve_path)
                                                                     : fs::path(model_path.string() + ".mse.csv");
            return cmd_train(config, manifest, model_path, curve_path, err);
        }

        if (classify->parsed()) {
            const fs::path model_path = !model.empty()             ? fs::path(model)
                                        : !config.model_path.empty() ? fs::path(config.model_path)
                                                                     : fs::path("minescan.model");
            if (fs::exists(config_path(model_path)))
                config = user_config(load_config(config_path(model_path)));
            const fs::path report_path = !report.empty()             ? fs::path(report)
                                         : !config.report_path.empty() ? fs::path(config.report_path)
                                                                       : fs::path(out_path + ".txt");
            return cmd_classify(config, model_path, in, out_path, report_path, out, err);
        }

        if (synth->parsed()) {
            if (!suite.empty() == !spec.empty()) {
                err << "usage error: synth needs exactly one of --suite or --spec\n";
                return usage;
            }
            if (!suite.empty()) {
                if (out_dir.empty()) {
                    err << "usage error: --suite needs --out-dir\n";
                    return usage;
                }
                return cmd_synth_suite(out_dir, err);
            }
            if (out_path.empty()) {
                err << "usage error: --spec needs --out\n";
                return usage;
            }
            return cmd_synth_spec(spec, out_path, synth_seed, err);
        }

        if (gradcheck->parsed())
            return cmd_gradcheck(nets, eps, check_seed, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return failure;
    }
    return usage;
}

} // namespace minescan::cli

#endif

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
//
// usage: acceptance [work_dir]

#include "minescan/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace minescan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// 1. Backprop against central differences.

Outcome gradient_oracle()
{
    const auto t0 = Clock::now();
    const double worst = cli::run_gradient_checks({8, 5, 3}, 20, 1e-5, 2024);
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 10.0,
            "max relative error " + fmt("%.3g", worst) + " over 20 nets, " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 2. Filters against a direct per-pixel reference.

std::uint8_t padded(const RgbImage& img, long x, long y, int channel)
{
    x = std::clamp<long>(x, 0, long(img.width()) - 1);
    y = std::clamp<long>(y, 0, long(img.height()) - 1);
    const Rgb p = img.at(std::size_t(x), std::size_t(y));
    return channel == 0 ? p.r : channel == 1 ? p.g : p.b;
}

RgbImage reference_filter(const RgbImage& img, FilterKind kind)
{
    static const int box[9] = {1, 1, 1, 1, 1, 1, 1, 1, 1};
    static const int gauss[9] = {1, 2, 1, 2, 4, 2, 1, 2, 1};
    RgbImage out(img.width(), img.height());
    for (long y = 0; y < long(img.height()); ++y)
        for (long x = 0; x < long(img.width()); ++x) {
            std::uint8_t v[3];
            for (int c = 0; c < 3; ++c) {
                int window[9];
                int k = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        window[k++] = padded(img, x + dx, y + dy, c);
                if (kind == FilterKind::median) {
                    std::sort(window, window + 9);
                    v[c] = std::uint8_t(window[4]);
                    continue;
                }
                const int* w = kind == FilterKind::mean ? box : gauss;
                const int divisor = kind == FilterKind::mean ? 9 : 16;
                int sum = 0;
                for (int i = 0; i < 9; ++i)
                    sum += w[i] * window[i];
                // round half up: add half the divisor before integer division
                v[c] = std::uint8_t(std::min(255, (2 * sum + divisor) / (2 * divisor)));
            }
            out.at(std::size_t(x), std::size_t(y)) = {v[0], v[1], v[2]};
        }
    return out;
}

Outcome filter_correctness()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> byte(0, 255);
    std::size_t mismatches = 0;
    for (int n = 0; n < 50; ++n) {
        RgbImage img(16, 16);
        for (Rgb& p : img.pixels())
            p = {std::uint8_t(byte(rng)), std::uint8_t(byte(rng)), std::uint8_t(byte(rng))};
        for (FilterKind k : {FilterKind::mean, FilterKind::median, FilterKind::gaussian})
            if (apply_filter(img, k) != reference_filter(img, k))
                ++mismatches;
    }
    const double secs = seconds_since(t0);
    return {mismatches == 0 && secs < 5.0,
            std::to_string(mismatches) + " mismatching outputs of 150, " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 3. HSI ranges and scale invariance.

Outcome hsi_properties()
{
    const auto t0 = Clock::now();
    std::size_t range_violations = 0;
    double worst_drift = 0.0;
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b)
            for (int c = 0; c < 16; ++c) {
                const HsiPixel base = rgb_to_hsi({std::uint8_t(17 * a), std::uint8_t(17 * b), std::uint8_t(17 * c)});
                if (base.h < 0 || base.h > 360 || base.s < 0 || base.s > 100 || base.i < 0 || base.i > 255)
                    ++range_violations;
                if (a + b + c == 0)
                    continue;
                // exact multiples of (a,b,c) are the same colour at other intensities
                for (int k = 1; k <= 17; ++k) {
                    const HsiPixel s = rgb_to_hsi({std::uint8_t(k * a), std::uint8_t(k * b), std::uint8_t(k * c)});
                    double dh = std::abs(s.h - base.h);
                    dh = std::min(dh, 360.0 - dh);
                    worst_drift = std::max({worst_drift, dh, std::abs(s.s - base.s)});
                }
            }
    const double secs = seconds_since(t0);
    return {range_violations == 0 && worst_drift <= 1.0 && secs < 5.0,
            std::to_string(range_violations) + " range violations, max H/S drift " + fmt("%.3g", worst_drift) + ", " +
                fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 4. K-means on generated three-blob scenes.

// Best one-to-one matching between predicted and true labels, by brute force
// over assignments (k is tiny).
std::size_t best_matching(const std::vector<std::vector<std::size_t>>& joint)
{
    const std::size_t kp = joint.size();
    const std::size_t kt = joint.empty() ? 0 : joint[0].size();
    std::size_t best = 0;
    std::vector<bool> used(kt, false);
    std::function<void(std::size_t, std::size_t)> go = [&](std::size_t p, std::size_t acc) {
        if (p == kp) {
            best = std::max(best, acc);
            return;
        }
        go(p + 1, acc); // predicted cluster left unmatched
        for (std::size_t t = 0; t < kt; ++t)
            if (!used[t]) {
                used[t] = true;
                go(p + 1, acc + joint[p][t]);
                used[t] = false;
            }
    };
    go(0, 0);
    return best;
}

Outcome kmeans_quality()
{
    const auto t0 = Clock::now();
    const Rgb palette[3] = {{40, 150, 215}, {200, 50, 60}, {60, 170, 70}};
    double worst_agreement = 1.0;
    std::size_t objective_increases = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        SceneSpec spec;
        spec.noise = 8;
        // rejection-sample positions until three objects fit without touching
        for (;;) {
            spec.objects.clear();
            for (int i = 0; i < 3; ++i) {
                ObjectSpec o;
                o.shape = i == 1 ? Archetype::square : Archetype::disc;
                o.radius = 7;
                o.color = palette[i];
                o.cx = std::uniform_real_distribution<double>(8, 55)(rng);
                o.cy = std::uniform_real_distribution<double>(8, 39)(rng);
                spec.objects.push_back(o);
            }
            try {
                gen_synthetic_scene(spec, seed);
                break;
            } catch (const SpecError&) {
            }
        }
        const SyntheticScene scene = gen_synthetic_scene(spec, seed);
        const SegmentResult seg = kmeans_segment(scene.image);

        std::vector<std::vector<std::size_t>> joint(seg.k(), std::vector<std::size_t>(4, 0));
        for (std::size_t i = 0; i < seg.labels.size(); ++i)
            ++joint[seg.labels[i]][scene.labels[i]];
        const double agreement = double(best_matching(joint)) / double(seg.labels.size());
        worst_agreement = std::min(worst_agreement, agreement);

        const auto& h = seg.objective_history;
        for (std::size_t i = 1; i < h.size(); ++i)
            if (h[i] > h[i - 1] * (1.0 + 1e-9))
                ++objective_increases;
    }
    const double secs = seconds_since(t0);
    return {worst_agreement >= 0.95 && objective_increases == 0 && secs < 30.0,
            "worst agreement " + fmt("%.4f", worst_agreement) + ", " + std::to_string(objective_increases) +
                " objective increases, " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 5. End-to-end run through the command-line front end.

struct ReportLine {
    std::string name;
    double factor = 0.0;
    Rect rect;
};

std::vector<ReportLine> parse_report(const std::string& text)
{
    std::vector<ReportLine> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        ReportLine r;
        std::getline(fields, r.name, '\t');
        fields >> r.factor >> r.rect.x1 >> r.rect.y1 >> r.rect.x2 >> r.rect.y2;
        out.push_back(r);
    }
    return out;
}

struct TruthLine {
    std::string shape;
    Rect rect;
};

std::vector<TruthLine> parse_truth(const std::string& text)
{
    std::vector<TruthLine> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string cls;
        TruthLine t;
        std::getline(fields, cls, '\t');
        std::getline(fields, t.shape, '\t');
        fields >> t.rect.x1 >> t.rect.y1 >> t.rect.x2 >> t.rect.y2;
        out.push_back(t);
    }
    return out;
}

struct Match {
    const TruthLine* truth = nullptr;
    const ReportLine* detection = nullptr;
};

// Greedy IoU matching, threshold 0.5.
std::vector<Match> match(const std::vector<TruthLine>& truth, const std::vector<ReportLine>& dets,
                         std::size_t& unmatched_detections)
{
    std::vector<Match> out;
    std::vector<bool> taken(dets.size(), false);
    for (const TruthLine& t : truth) {
        Match m{&t, nullptr};
        double best = 0.5;
        std::size_t pick = dets.size();
        for (std::size_t i = 0; i < dets.size(); ++i)
            if (!taken[i] && iou(t.rect, dets[i].rect) >= best) {
                best = iou(t.rect, dets[i].rect);
                pick = i;
            }
        if (pick < dets.size()) {
            taken[pick] = true;
            m.detection = &dets[pick];
        }
        out.push_back(m);
    }
    unmatched_detections = static_cast<std::size_t>(std::count(taken.begin(), taken.end(), false));
    return out;
}

struct RunArtifacts {
    std::vector<fs::path> files; // compared byte-for-byte by the determinism check
};

int cli(std::vector<std::string> args, std::string* err_text = nullptr)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (err_text)
        *err_text = err.str();
    return code;
}

Outcome end_to_end(const fs::path& dir, RunArtifacts& artifacts)
{
    const auto t0 = Clock::now();
    fs::remove_all(dir);
    std::vector<std::string> problems;

    if (cli({"synth", "--suite", "paper", "--out-dir", dir.string()}) != 0)
        return {false, "synth failed"};

    // Same layout as the rotated scene, without the rotation, for comparison.
    const ReferenceSuite suite = reference_suite();
    for (const NamedScene& s : suite.tests)
        if (s.name == "rotated") {
            SceneSpec upright = s.spec;
            for (ObjectSpec& o : upright.objects)
                o.rotate_deg = 0.0;
            const SyntheticScene scene = gen_synthetic_scene(upright, s.seed);
            save_ppm(scene.image, dir / "upright.ppm");
            std::ofstream(dir / "upright.truth.txt") << render_ground_truth(scene);
        }

    const fs::path model = dir / "model.txt";
    std::string train_log;
    const int train_code =
        cli({"train", "--config", (dir / "experiment.cfg").string(), "--manifest",
             (dir / "manifest.tsv").string(), "--model", model.string()},
            &train_log);
    const std::string curve = slurp(model.string() + ".mse.csv");
    const std::size_t epochs = static_cast<std::size_t>(std::count(curve.begin(), curve.end(), '\n')) - 1;
    const bool converged = train_code == 0 && train_log.find("outcome: converged") != std::string::npos;
    std::string final_mse = "?";
    if (const auto cut = curve.find_last_of(',', curve.size() - 2); cut != std::string::npos)
        final_mse = curve.substr(cut + 1, curve.size() - cut - 2);
    if (!converged || epochs > 20000)
        problems.push_back("training did not converge (" + std::to_string(epochs) + " epochs, final mse " +
                           final_mse + ")");
    artifacts.files = {model, model.string() + ".mse.csv", model.string() + ".classes", model.string() + ".config"};

    std::size_t correct = 0, denominator = 0;
    std::map<std::string, std::vector<Match>> matched;
    std::map<std::string, std::vector<ReportLine>> reports;
    std::map<std::string, std::vector<TruthLine>> truths;
    std::string factors;
    for (const std::string name : {"two_objects", "displaced", "rotated", "covered", "upright"}) {
        const fs::path annotated = dir / (name + "_annotated.ppm");
        const fs::path report = dir / (name + "_report.txt");
        if (cli({"classify", "--model", model.string(), "--in", (dir / (name + ".ppm")).string(), "--out",
                 annotated.string(), "--report", report.string()}) != 0) {
            problems.push_back("classify failed on " + name);
            continue;
        }
        artifacts.files.push_back(annotated);
        artifacts.files.push_back(report);
        reports[name] = parse_report(slurp(report));
        truths[name] = parse_truth(slurp(dir / (name + ".truth.txt")));
        std::size_t extra = 0;
        matched[name] = match(truths[name], reports[name], extra);
        factors += " " + name + "[";
        for (const Match& m : matched[name]) {
            factors += m.truth->shape + "=";
            factors += m.detection ? m.detection->name + ":" + fmt("%.1f", m.detection->factor) : "missed";
            factors += m.truth == &truths[name].back() ? "" : ",";
        }
        factors += "]";
        if (name == "upright")
            continue; // reference only, not part of the suite
        denominator += truths[name].size() + extra;
        for (const Match& m : matched[name])
            if (m.detection && m.detection->name == m.truth->shape)
                ++correct;
    }

    auto find = [&](const std::string& scene, const std::string& shape) -> const ReportLine* {
        for (const Match& m : matched[scene])
            if (m.truth->shape == shape)
                return m.detection;
        return nullptr;
    };
    for (const std::string scene : {"two_objects", "displaced"})
        for (const std::string shape : {"disc", "square"}) {
            const ReportLine* d = find(scene, shape);
            if (!d || d->name != shape || d->factor < 90.0)
                problems.push_back(scene + ": " + shape + " not detected as " + shape + " with factor >= 90");
        }
    const ReportLine* rotated = find("rotated", "square");
    const ReportLine* upright = find("upright", "square");
    if (!rotated || rotated->name != "square")
        problems.push_back("rotated: square misclassified");
    else if (!upright || !(rotated->factor < upright->factor))
        problems.push_back("rotated: factor " + fmt("%.1f", rotated->factor) + " not below upright " +
                           (upright ? fmt("%.1f", upright->factor) : std::string("(missing)")));
    for (const std::string shape : {"disc", "square"}) {
        const ReportLine* d = find("covered", shape);
        if (!d || d->name != shape)
            problems.push_back("covered: " + shape + " misclassified");
    }
    const double rate = denominator ? double(correct) / double(denominator) : 0.0;
    if (rate < 0.9)
        problems.push_back("success rate " + fmt("%.2f", rate));

    const double secs = seconds_since(t0);
    if (secs >= 300.0)
        problems.push_back("runtime " + fmt("%.0f", secs) + " s exceeds 300 s");

    std::string detail = "epochs " + std::to_string(epochs) + ", final mse " + final_mse + ", success rate " +
                         fmt("%.2f", rate) + ", " + fmt("%.0f", secs) + " s;" + factors;
    for (const std::string& p : problems)
        detail += "\n      - " + p;
    return {problems.empty(), detail};
}

// ---------------------------------------------------------------------------
// 6. Determinism: a second identical run reproduces every artefact.

Outcome determinism(const fs::path& dir_a, const RunArtifacts& first, const fs::path& dir_b)
{
    RunArtifacts second;
    end_to_end(dir_b, second);
    if (first.files.empty() || first.files.size() != second.files.size())
        return {false, "runs produced different artefact sets"};
    std::size_t differing = 0;
    std::string names;
    for (std::size_t i = 0; i < first.files.size(); ++i) {
        const std::string a = slurp(first.files[i]);
        const std::string b = slurp(second.files[i]);
        if (a.empty() || a != b) {
            ++differing;
            names += " " + fs::relative(first.files[i], dir_a).string();
        }
    }
    return {differing == 0, std::to_string(first.files.size() - differing) + "/" +
                                std::to_string(first.files.size()) + " artefacts byte-identical" +
                                (differing ? ";" + names : std::string())};
}

// ---------------------------------------------------------------------------
// 7. ROI on sparse random images.

Outcome roi_properties()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(99);
    std::size_t failures = 0;
    for (int n = 0; n < 200; ++n) {
        const std::size_t w = std::uniform_int_distribution<std::size_t>(1, 48)(rng);
        const std::size_t h = std::uniform_int_distribution<std::size_t>(1, 48)(rng);
        RgbImage img(w, h, blank_color);
        std::bernoulli_distribution lit(0.03);
        std::uniform_int_distribution<int> byte(1, 255);
        for (Rgb& p : img.pixels())
            if (lit(rng))
                p = {std::uint8_t(byte(rng)), std::uint8_t(byte(rng) % 2), 0};
        const std::size_t forced = std::uniform_int_distribution<std::size_t>(0, w * h - 1)(rng);
        img.pixels()[forced] = {0, 0, 1};

        const Rect r = find_roi(img);
        const RgbImage c = crop(img, r);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                if (img.at(x, y) != blank_color && !r.contains(x, y))
                    ++failures;
        auto row_lit = [&](std::size_t y) {
            for (std::size_t x = 0; x < c.width(); ++x)
                if (c.at(x, y) != blank_color)
                    return true;
            return false;
        };
        auto col_lit = [&](std::size_t x) {
            for (std::size_t y = 0; y < c.height(); ++y)
                if (c.at(x, y) != blank_color)
                    return true;
            return false;
        };
        if (!row_lit(0) || !row_lit(c.height() - 1) || !col_lit(0) || !col_lit(c.width() - 1))
            ++failures;
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 5.0, std::to_string(failures) + " failures on 200 images, " + fmt("%.2f", secs) + " s"};
}

void print(int id, const char* title, const Outcome& o)
{
    std::cout << "CRITERION " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << title << ": " << o.detail
              << std::endl;
}

} // namespace

int main(int argc, char** argv)
{
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "minescan_acceptance";
    fs::create_directories(work);

    bool all = true;
    auto record = [&](int id, const char* title, const Outcome& o) {
        print(id, title, o);
        all = all && o.pass;
    };

    record(1, "gradient oracle", gradient_oracle());
    record(2, "filter correctness", filter_correctness());
    record(3, "HSI properties", hsi_properties());
    record(4, "k-means on three-blob scenes", kmeans_quality());
    RunArtifacts first;
    record(5, "end-to-end synthetic experiment", end_to_end(work / "run1", first));
    record(6, "determinism", determinism(work / "run1", first, work / "run2"));
    record(7, "ROI on sparse images", roi_properties());

    std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
    return all ? 0 : 1;
}

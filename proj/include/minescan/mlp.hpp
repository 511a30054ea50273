#ifndef MINESCAN_MLP_HPP
#define MINESCAN_MLP_HPP

#include "minescan/error.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace minescan {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// One matrix per connection layer, shaped like Network::weights.
using WeightSet = std::vector<Matrix>;
using Activations = std::vector<std::vector<double>>;

/// Fully connected feedforward network with sigmoid units.
///
/// layer_sizes[0] counts the raw inputs, including the bias entry the feature
/// vector already carries. Hidden layers get an extra constant-1 activation,
/// so weights[l] is layer_sizes[l+1] x (layer_sizes[l] + (l > 0 ? 1 : 0)); the
/// last column of every non-first layer holds the unit offsets.
struct Network {
    std::vector<std::size_t> layer_sizes;
    WeightSet weights;
    double slope = 1.0;

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t weight_count() const
    {
        std::size_t n = 0;
        for (const Matrix& w : weights)
            n += w.data.size();
        return n;
    }

    friend bool operator==(const Network&, const Network&) = default;
};

inline std::size_t fan_in(const std::vector<std::size_t>& sizes, std::size_t layer)
{
    return sizes[layer] + (layer > 0 ? 1 : 0);
}

inline WeightSet zero_weights_like(const Network& net)
{
    WeightSet out;
    out.reserve(net.weights.size());
    for (const Matrix& w : net.weights)
        out.emplace_back(w.rows, w.cols, 0.0);
    return out;
}

inline constexpr double init_weight_min = 0.01;
inline constexpr double init_weight_max = 0.03;

/// All weights drawn uniformly from [0.01, 0.03) with a generator seeded by
/// `seed`; the same seed always yields the same network.
inline Network init_network(const std::vector<std::size_t>& layer_sizes, double slope, std::uint64_t seed)
{
    if (layer_sizes.size() < 2)
        throw ShapeError("a network needs an input and an output layer");
    for (std::size_t s : layer_sizes)
        if (s == 0)
            throw ShapeError("layer sizes must be at least 1");
    if (!(slope > 0.0))
        throw ShapeError("sigmoid slope must be positive");

    Network net;
    net.layer_sizes = layer_sizes;
    net.slope = slope;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(init_weight_min, init_weight_max);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        Matrix w(layer_sizes[l + 1], fan_in(layer_sizes, l));
        for (double& v : w.data)
            v = dist(rng);
        net.weights.push_back(std::move(w));
    }
    return net;
}

inline double sigmoid(double v, double slope) { return 1.0 / (1.0 + std::exp(-slope * v)); }

namespace detail {

// Four partial sums keep the long input-layer dot products from being latency
// bound; the summation order is fixed so results stay reproducible.
inline double dot(const double* a, const double* b, std::size_t n)
{
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i)
        s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

inline void check_shapes(const Network& net, const WeightSet& other, const char* what)
{
    if (other.size() != net.weights.size())
        throw ShapeError(std::string(what) + ": layer count mismatch");
    for (std::size_t l = 0; l < other.size(); ++l)
        if (other[l].rows != net.weights[l].rows || other[l].cols != net.weights[l].cols)
            throw ShapeError(std::string(what) + ": matrix shape mismatch at layer " + std::to_string(l));
}

} // namespace detail

/// Activations of every layer; element 0 is the input itself.
inline Activations forward(const Network& net, std::span<const double> input)
{
    if (input.size() != net.input_size())
        throw ShapeError("input length " + std::to_string(input.size()) + " != " +
                         std::to_string(net.input_size()));
    Activations acts;
    acts.reserve(net.layer_sizes.size());
    acts.emplace_back(input.begin(), input.end());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const Matrix& w = net.weights[l];
        const std::vector<double>& prev = acts.back();
        const bool offset = l > 0;
        std::vector<double> out(w.rows);
        for (std::size_t j = 0; j < w.rows; ++j) {
            const double* row = w.data.data() + j * w.cols;
            double v = detail::dot(row, prev.data(), prev.size());
            if (offset)
                v += row[w.cols - 1];
            out[j] = sigmoid(v, net.slope);
            assert(std::isfinite(out[j]));
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

inline std::vector<double> predict(const Network& net, std::span<const double> input)
{
    return forward(net, input).back();
}

/// Half the summed squared output error of one sample.
inline double sample_mse(std::span<const double> output, std::span<const double> desired)
{
    if (output.size() != desired.size())
        throw ShapeError("output and desired vectors differ in length");
    double sum = 0.0;
    for (std::size_t j = 0; j < output.size(); ++j) {
        const double e = output[j] - desired[j];
        sum += e * e;
    }
    return 0.5 * sum;
}

/// Gradient of the per-sample error with respect to every weight, written into
/// `grads` (resized on first use).
inline void backward_into(const Network& net, const Activations& acts, std::span<const double> desired,
                          WeightSet& grads)
{
    if (acts.size() != net.layer_sizes.size())
        throw ShapeError("activation set does not match the network depth");
    for (std::size_t l = 0; l < acts.size(); ++l)
        if (acts[l].size() != net.layer_sizes[l])
            throw ShapeError("activation width mismatch at layer " + std::to_string(l));
    if (desired.size() != net.output_size())
        throw ShapeError("desired length " + std::to_string(desired.size()) + " != " +
                         std::to_string(net.output_size()));
    if (grads.size() != net.weights.size())
        grads = zero_weights_like(net);

    const double a = net.slope;
    std::vector<double> delta(net.output_size());
    const std::vector<double>& out = acts.back();
    for (std::size_t j = 0; j < delta.size(); ++j)
        delta[j] = (out[j] - desired[j]) * a * out[j] * (1.0 - out[j]);

    for (std::size_t l = net.weights.size(); l-- > 0;) {
        const Matrix& w = net.weights[l];
        const std::vector<double>& prev = acts[l];
        const bool offset = l > 0;
        Matrix& g = grads[l];
        for (std::size_t j = 0; j < w.rows; ++j) {
            double* grow = g.data.data() + j * g.cols;
            const double dj = delta[j];
            for (std::size_t i = 0; i < prev.size(); ++i)
                grow[i] = dj * prev[i];
            if (offset)
                grow[g.cols - 1] = dj;
        }
        if (l == 0)
            break;
        std::vector<double> below(prev.size(), 0.0);
        for (std::size_t j = 0; j < w.rows; ++j) {
            const double* row = w.data.data() + j * w.cols;
            for (std::size_t i = 0; i < prev.size(); ++i)
                below[i] += row[i] * delta[j];
        }
        for (std::size_t i = 0; i < prev.size(); ++i)
            below[i] *= a * prev[i] * (1.0 - prev[i]);
        delta = std::move(below);
    }
}

inline WeightSet backward(const Network& net, const Activations& acts, std::span<const double> desired)
{
    WeightSet grads;
    backward_into(net, acts, desired, grads);
    return grads;
}

/// Momentum step: delta = -lr*grad + momentum*previous delta; w += delta.
/// `prev_deltas` is replaced by the deltas just applied (zeros if empty).
inline void apply_update(Network& net, const WeightSet& grads, WeightSet& prev_deltas, double learning_rate,
                         double momentum)
{
    detail::check_shapes(net, grads, "apply_update gradients");
    if (prev_deltas.empty())
        prev_deltas = zero_weights_like(net);
    detail::check_shapes(net, prev_deltas, "apply_update previous deltas");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        double* w = net.weights[l].data.data();
        double* d = prev_deltas[l].data.data();
        const double* g = grads[l].data.data();
        const std::size_t n = net.weights[l].data.size();
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = -learning_rate * g[i] + momentum * d[i];
            w[i] += d[i];
        }
    }
}

struct Sample {
    std::vector<double> input;
    std::vector<double> desired;
};

inline std::vector<double> one_hot(std::size_t index, std::size_t count)
{
    if (index >= count)
        throw BoundsError("class index " + std::to_string(index) + " out of range for " +
                          std::to_string(count) + " classes");
    std::vector<double> v(count, 0.0);
    v[index] = 1.0;
    return v;
}

struct TrainParams {
    double learning_rate = 0.01;
    double momentum = 0.2;
    double mse_target = 1e-5;
    std::size_t max_epochs = 20000;
    std::size_t divergence_window = 50;
    double divergence_factor = 10.0;
    std::uint64_t rng_seed = 1;

    friend bool operator==(const TrainParams&, const TrainParams&) = default;
};

enum class TrainOutcome { converged, diverged, epoch_limit };

inline std::string_view to_string(TrainOutcome o)
{
    switch (o) {
    case TrainOutcome::converged: return "converged";
    case TrainOutcome::diverged: return "diverged";
    case TrainOutcome::epoch_limit: return "epoch-limit";
    }
    return "?";
}

struct TrainingReport {
    std::size_t epochs_run = 0;
    std::vector<double> mse_history;
    TrainOutcome outcome = TrainOutcome::epoch_limit;
};

/// Mutable per-run training state: the shuffling generator, momentum history
/// and scratch buffers.
struct TrainState {
    explicit TrainState(std::uint64_t seed) : rng(seed) {}

    std::mt19937_64 rng;
    WeightSet prev_deltas;
    std::vector<std::vector<double>> deltas;
    std::vector<std::size_t> order;
};

namespace detail {

// backward() followed by apply_update() without materialising the gradient
// matrices. Per weight it evaluates the same expressions in the same order,
// so the result is bit-identical to the two-call path.
inline void fused_step(Network& net, const Activations& acts, std::span<const double> desired,
                       double learning_rate, double momentum, std::vector<std::vector<double>>& deltas,
                       WeightSet& prev_deltas)
{
    if (desired.size() != net.output_size())
        throw ShapeError("desired length does not match the output layer");
    const std::size_t layers = net.weights.size();
    const double a = net.slope;
    deltas.resize(layers);

    const std::vector<double>& out = acts.back();
    deltas[layers - 1].resize(out.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        deltas[layers - 1][j] = (out[j] - desired[j]) * a * out[j] * (1.0 - out[j]);
    for (std::size_t l = layers - 1; l > 0; --l) {
        const Matrix& w = net.weights[l];
        const std::vector<double>& prev = acts[l];
        std::vector<double>& below = deltas[l - 1];
        below.assign(prev.size(), 0.0);
        for (std::size_t j = 0; j < w.rows; ++j) {
            const double* row = w.data.data() + j * w.cols;
            for (std::size_t i = 0; i < prev.size(); ++i)
                below[i] += row[i] * deltas[l][j];
        }
        for (std::size_t i = 0; i < prev.size(); ++i)
            below[i] *= a * prev[i] * (1.0 - prev[i]);
    }

    for (std::size_t l = 0; l < layers; ++l) {
        Matrix& w = net.weights[l];
        Matrix& d = prev_deltas[l];
        const std::vector<double>& prev = acts[l];
        const bool offset = l > 0;
        for (std::size_t j = 0; j < w.rows; ++j) {
            double* wr = w.data.data() + j * w.cols;
            double* dr = d.data.data() + j * d.cols;
            const double dj = deltas[l][j];
            for (std::size_t i = 0; i < prev.size(); ++i) {
                dr[i] = -learning_rate * (dj * prev[i]) + momentum * dr[i];
                wr[i] += dr[i];
            }
            if (offset) {
                const std::size_t c = w.cols - 1;
                dr[c] = -learning_rate * dj + momentum * dr[c];
                wr[c] += dr[c];
            }
        }
    }
}

} // namespace detail

/// One online pass: samples in a fresh permutation, weights updated after
/// each. Returns the mean per-sample error seen during the pass.
inline double train_epoch(Network& net, std::span<const Sample> samples, const TrainParams& params,
                          TrainState& state)
{
    if (samples.empty())
        throw ShapeError("training needs at least one sample");
    state.order.resize(samples.size());
    std::iota(state.order.begin(), state.order.end(), std::size_t{0});
    std::shuffle(state.order.begin(), state.order.end(), state.rng);

    if (state.prev_deltas.empty())
        state.prev_deltas = zero_weights_like(net);
    detail::check_shapes(net, state.prev_deltas, "train_epoch momentum state");

    double total = 0.0;
    for (std::size_t idx : state.order) {
        const Sample& s = samples[idx];
        const Activations acts = forward(net, s.input);
        total += sample_mse(acts.back(), s.desired);
        detail::fused_step(net, acts, s.desired, params.learning_rate, params.momentum, state.deltas,
                           state.prev_deltas);
    }
    return total / static_cast<double>(samples.size());
}

/// Flags divergence: the epoch error has stayed at least `factor` times above
/// its running minimum for `window` consecutive epochs, or is not finite.
/// A window of 0 disables the ratio test.
class DivergenceMonitor {
public:
    DivergenceMonitor(double factor, std::size_t window) : factor_(factor), window_(window) {}

    /// Feeds one epoch error; returns true once divergence is established.
    bool update(double mse)
    {
        if (!std::isfinite(mse))
            return true;
        best_ = std::min(best_, mse);
        above_ = mse >= factor_ * best_ ? above_ + 1 : 0;
        return window_ > 0 && above_ >= window_;
    }

    double best() const noexcept { return best_; }

private:
    double factor_;
    std::size_t window_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t above_ = 0;
};

/// Repeats epochs until the epoch error drops below mse_target, the
/// divergence monitor fires, or max_epochs is reached. `on_epoch(epoch, mse)`
/// runs after every epoch.
template <class EpochCallback>
TrainingReport train(Network& net, std::span<const Sample> samples, const TrainParams& params,
                     EpochCallback&& on_epoch)
{
    if (!(params.learning_rate >= 0.0) || !(params.momentum >= 0.0 && params.momentum < 1.0))
        throw ConfigError("learning rate must be >= 0 and momentum in [0,1)");
    TrainState state(params.rng_seed);
    DivergenceMonitor monitor(params.divergence_factor, params.divergence_window);
    TrainingReport report;
    for (std::size_t epoch = 1; epoch <= params.max_epochs; ++epoch) {
        const double mse = train_epoch(net, samples, params, state);
        report.mse_history.push_back(mse);
        report.epochs_run = epoch;
        on_epoch(epoch, mse);
        if (std::isfinite(mse) && mse < params.mse_target) {
            report.outcome = TrainOutcome::converged;
            return report;
        }
        if (monitor.update(mse)) {
            report.outcome = TrainOutcome::diverged;
            return report;
        }
    }
    report.outcome = TrainOutcome::epoch_limit;
    return report;
}

inline TrainingReport train(Network& net, std::span<const Sample> samples, const TrainParams& params)
{
    return train(net, samples, params, [](std::size_t, double) {});
}

/// Largest relative disagreement between backward() and central finite
/// differences of the per-sample error, taken over every weight.
inline double gradient_check(const Network& net, const Sample& sample, double eps = 1e-5)
{
    if (!(eps > 0.0))
        throw ConfigError("finite-difference step must be positive");
    const WeightSet analytic = backward(net, forward(net, sample.input), sample.desired);
    Network probe = net;
    auto error_at = [&]() { return sample_mse(predict(probe, sample.input), sample.desired); };

    double worst = 0.0;
    for (std::size_t l = 0; l < probe.weights.size(); ++l) {
        for (std::size_t i = 0; i < probe.weights[l].data.size(); ++i) {
            double& w = probe.weights[l].data[i];
            const double saved = w;
            w = saved + eps;
            const double up = error_at();
            w = saved - eps;
            const double down = error_at();
            w = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double exact = analytic[l].data[i];
            const double scale = std::max({std::abs(exact), std::abs(numeric), 1e-12});
            worst = std::max(worst, std::abs(exact - numeric) / scale);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

inline constexpr std::string_view model_magic = "MINESCAN-MLP v1";

namespace detail {

inline void append_double(std::string& out, double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

inline std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r')
            ++i;
        if (i > start)
            tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

template <class T>
T parse_token(std::string_view token, const std::string& context)
{
    T value{};
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw ModelFormatError(context + ": cannot parse '" + std::string(token) + "'");
    return value;
}

} // namespace detail

/// Text checkpoint: magic line, then "<slope> <size0> <size1> ...", then one
/// line per weight-matrix row. Doubles are written in shortest round-trip
/// form, so load_model(save_model(n)) reproduces n bit for bit.
inline std::string render_model(const Network& net)
{
    std::string out(model_magic);
    out += '\n';
    detail::append_double(out, net.slope);
    for (std::size_t s : net.layer_sizes) {
        out += ' ';
        out += std::to_string(s);
    }
    out += '\n';
    for (const Matrix& w : net.weights) {
        for (std::size_t r = 0; r < w.rows; ++r) {
            for (std::size_t c = 0; c < w.cols; ++c) {
                if (c)
                    out += ' ';
                detail::append_double(out, w(r, c));
            }
            out += '\n';
        }
    }
    return out;
}

inline Network parse_model(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    if (lines.empty() || lines[0] != model_magic)
        throw ModelVersionError("checkpoint does not start with '" + std::string(model_magic) + "'");
    if (lines.size() < 2)
        throw ModelFormatError("checkpoint is missing the shape line");

    const auto head = detail::split_ws(lines[1]);
    if (head.size() < 3)
        throw ModelFormatError("shape line needs a slope and at least two layer sizes");
    Network net;
    net.slope = detail::parse_token<double>(head[0], "slope");
    for (std::size_t i = 1; i < head.size(); ++i)
        net.layer_sizes.push_back(detail::parse_token<std::size_t>(head[i], "layer size"));
    for (std::size_t s : net.layer_sizes)
        if (s == 0)
            throw ModelFormatError("zero layer size in checkpoint");

    std::size_t line = 2;
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        Matrix w(net.layer_sizes[l + 1], fan_in(net.layer_sizes, l));
        for (std::size_t r = 0; r < w.rows; ++r, ++line) {
            const std::string context = "checkpoint line " + std::to_string(line + 1);
            if (line >= lines.size())
                throw ModelFormatError(context + ": unexpected end of file");
            const auto tokens = detail::split_ws(lines[line]);
            if (tokens.size() != w.cols)
                throw ModelFormatError(context + ": expected " + std::to_string(w.cols) + " weights, found " +
                                       std::to_string(tokens.size()));
            for (std::size_t c = 0; c < w.cols; ++c)
                w(r, c) = detail::parse_token<double>(tokens[c], context);
        }
        net.weights.push_back(std::move(w));
    }
    for (; line < lines.size(); ++line)
        if (!detail::split_ws(lines[line]).empty())
            throw ModelFormatError("trailing data after the last weight row");
    return net;
}

inline void save_model(const Network& net, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(path.string() + ": cannot open for writing");
    out << render_model(net);
    if (!out)
        throw IoError(path.string() + ": write failed");
}

inline Network load_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(path.string() + ": cannot open checkpoint");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

} // namespace minescan

#endif

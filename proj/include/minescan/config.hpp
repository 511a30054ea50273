#ifndef MINESCAN_CONFIG_HPP
#define MINESCAN_CONFIG_HPP

#include "minescan/error.hpp"
#include "minescan/mlp.hpp"
#include "minescan/pipeline.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace minescan {

/// Every tunable of the toolchain. Defaults are the operating point used for
/// the reference experiment: one hidden layer of 90 units, momentum 0.2,
/// learning rate 0.01, stop at epoch error 1e-5, segmentation threshold 85.
struct Config {
    PipelineConfig pipeline;
    std::vector<std::size_t> hidden_layers{90};
    double slope = 1.0;
    std::uint64_t init_seed = 1;
    TrainParams train;
    std::string model_path;
    std::string curve_path;
    std::string report_path;

    friend bool operator==(const Config&, const Config&) = default;
};

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_config_number(const std::string& key, const std::string& value)
{
    T out{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    return out;
}

inline std::string format_double(double v)
{
    std::string s;
    append_double(s, v);
    return s;
}

inline std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value)
{
    std::vector<std::size_t> out;
    if (value.empty() || value == "none")
        return out;
    std::stringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto n = parse_config_number<std::size_t>(key, trim(item));
        if (n == 0)
            throw ConfigError("config key '" + key + "': layer sizes must be positive");
        out.push_back(n);
    }
    return out;
}

} // namespace detail

/// Applies one `key = value` setting. Unknown keys and out-of-range values
/// are rejected.
inline void set_config_value(Config& c, const std::string& key, const std::string& value)
{
    using detail::parse_config_number;
    auto real = [&] { return parse_config_number<double>(key, value); };
    auto count = [&] { return parse_config_number<std::size_t>(key, value); };
    auto positive = [&](double v) {
        if (!(v > 0.0))
            throw ConfigError("config key '" + key + "' must be positive");
        return v;
    };

    if (key == "filter_kind") c.pipeline.filter = parse_filter_kind(value);
    else if (key == "threshold") {
        c.pipeline.seg.threshold = real();
        if (c.pipeline.seg.threshold < 0.0)
            throw ConfigError("threshold must be non-negative");
    }
    else if (key == "spatial_weight") {
        c.pipeline.seg.spatial_weight = real();
        if (c.pipeline.seg.spatial_weight < 0.0)
            throw ConfigError("spatial_weight must be non-negative");
    }
    else if (key == "max_iter") {
        c.pipeline.seg.max_iter = count();
        if (c.pipeline.seg.max_iter == 0)
            throw ConfigError("max_iter must be at least 1");
    }
    else if (key == "max_k") {
        c.pipeline.seg.max_k = count();
        if (c.pipeline.seg.max_k == 0)
            throw ConfigError("max_k must be at least 1");
    }
    else if (key == "blank_level") c.pipeline.blank_level = parse_config_number<std::uint64_t>(key, value);
    else if (key == "background_cover") {
        c.pipeline.background_cover = real();
        if (c.pipeline.background_cover < 0.0 || c.pipeline.background_cover > 1.0)
            throw ConfigError("background_cover must be in [0,1]");
    }
    else if (key == "aggregate") c.pipeline.features.aggregate = parse_aggregate(value);
    else if (key == "hue_weight") {
        c.pipeline.features.hue_weight = real();
        if (c.pipeline.features.hue_weight < 0.0 || c.pipeline.features.hue_weight > 1.0)
            throw ConfigError("hue_weight must be in [0,1]");
    }
    else if (key == "scale_factor") c.pipeline.features.scale_factor = positive(real());
    else if (key == "bias") c.pipeline.features.bias = real();
    else if (key == "hidden_layers") c.hidden_layers = detail::parse_size_list(key, value);
    else if (key == "slope") c.slope = positive(real());
    else if (key == "init_seed") c.init_seed = parse_config_number<std::uint64_t>(key, value);
    else if (key == "learning_rate") c.train.learning_rate = positive(real());
    else if (key == "momentum") {
        c.train.momentum = real();
        if (c.train.momentum < 0.0 || c.train.momentum >= 1.0)
            throw ConfigError("momentum must be in [0,1)");
    }
    else if (key == "mse_target") c.train.mse_target = positive(real());
    else if (key == "max_epochs") c.train.max_epochs = count();
    else if (key == "divergence_window") c.train.divergence_window = count();
    else if (key == "divergence_factor") c.train.divergence_factor = positive(real());
    else if (key == "seed") c.train.rng_seed = parse_config_number<std::uint64_t>(key, value);
    else if (key == "model_path") c.model_path = value;
    else if (key == "curve_path") c.curve_path = value;
    else if (key == "report_path") c.report_path = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

inline Config parse_config(std::string_view text, Config base = {})
{
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#')
            continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(number) + ": expected 'key = value'");
        set_config_value(base, detail::trim(stripped.substr(0, eq)), detail::trim(stripped.substr(eq + 1)));
    }
    return base;
}

inline std::string render_config(const Config& c)
{
    using detail::format_double;
    std::string hidden;
    for (std::size_t i = 0; i < c.hidden_layers.size(); ++i)
        hidden += (i ? "," : "") + std::to_string(c.hidden_layers[i]);
    if (hidden.empty())
        hidden = "none";

    std::ostringstream out;
    out << "filter_kind = " << to_string(c.pipeline.filter) << '\n'
        << "threshold = " << format_double(c.pipeline.seg.threshold) << '\n'
        << "spatial_weight = " << format_double(c.pipeline.seg.spatial_weight) << '\n'
        << "max_iter = " << c.pipeline.seg.max_iter << '\n'
        << "max_k = " << c.pipeline.seg.max_k << '\n'
        << "blank_level = " << c.pipeline.blank_level << '\n'
        << "background_cover = " << format_double(c.pipeline.background_cover) << '\n'
        << "aggregate = " << to_string(c.pipeline.features.aggregate) << '\n'
        << "hue_weight = " << format_double(c.pipeline.features.hue_weight) << '\n'
        << "scale_factor = " << format_double(c.pipeline.features.scale_factor) << '\n'
        << "bias = " << format_double(c.pipeline.features.bias) << '\n'
        << "hidden_layers = " << hidden << '\n'
        << "slope = " << format_double(c.slope) << '\n'
        << "init_seed = " << c.init_seed << '\n'
        << "learning_rate = " << format_double(c.train.learning_rate) << '\n'
        << "momentum = " << format_double(c.train.momentum) << '\n'
        << "mse_target = " << format_double(c.train.mse_target) << '\n'
        << "max_epochs = " << c.train.max_epochs << '\n'
        << "divergence_window = " << c.train.divergence_window << '\n'
        << "divergence_factor = " << format_double(c.train.divergence_factor) << '\n'
        << "seed = " << c.train.rng_seed << '\n'
        << "model_path = " << c.model_path << '\n'
        << "curve_path = " << c.curve_path << '\n'
        << "report_path = " << c.report_path << '\n';
    return out.str();
}

inline Config load_config(const std::filesystem::path& path, Config base = {})
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(path.string() + ": cannot open config file");
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, std::move(base));
}

/// Layer sizes for a network with `classes` outputs over the 4,097-entry
/// feature vector.
inline std::vector<std::size_t> network_shape(const Config& c, std::size_t classes)
{
    std::vector<std::size_t> sizes{feature_length};
    sizes.insert(sizes.end(), c.hidden_layers.begin(), c.hidden_layers.end());
    sizes.push_back(classes);
    return sizes;
}

} // namespace minescan

#endif

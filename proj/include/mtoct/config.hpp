#ifndef MTOCT_CONFIG_HPP
#define MTOCT_CONFIG_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mtoct/engine.hpp"
#include "mtoct/fixture.hpp"

namespace mtoct {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ExperimentConfig {
    std::filesystem::path data_dir;
    std::vector<std::string> regions = default_regions();
    char task_set = 'A';
    std::vector<Method> methods{Method::stp, Method::mtoct};
    std::size_t runs = 10;
    std::size_t max_iter_stp = 20000;
    std::size_t max_iter_mtoct = 10000;
    std::size_t n_f = 24;
    std::size_t n_h = 10;
    TransferConfig transfer;
    AdamHyper adam;
    std::uint64_t master_seed = 0;
    std::filesystem::path output_dir = "results";
    NormalizationFit normalization = NormalizationFit::full;
    ExecutionMode execution = ExecutionMode::sequential;
    std::size_t workers = 1;

    std::size_t task_count() const { return regions.size() * set_horizons(task_set).size(); }

    EngineConfig engine(Method m) const {
        EngineConfig e;
        e.method = m;
        e.max_iter = m == Method::stp ? max_iter_stp : max_iter_mtoct;
        e.transfer = transfer;
        e.adam = adam;
        e.n_h = n_h;
        e.runs = runs;
        e.master_seed = master_seed;
        e.execution = execution;
        e.workers = workers;
        return e;
    }

    /// Throws ConfigError naming the first invalid field.
    void validate() const {
        if (data_dir.empty()) throw ConfigError("data_dir", "is required");
        if (regions.empty()) throw ConfigError("regions", "must list at least one region");
        if (methods.empty()) throw ConfigError("methods", "must list STP and/or MTO-CT");
        if (runs < 1) throw ConfigError("runs", "must be >= 1");
        if (max_iter_stp < 1) throw ConfigError("max_iter_stp", "must be >= 1");
        if (max_iter_mtoct < 1) throw ConfigError("max_iter_mtoct", "must be >= 1");
        if (n_f < 1) throw ConfigError("n_f", "must be >= 1");
        if (n_h < 1) throw ConfigError("n_h", "must be >= 1");
        const auto max_h = static_cast<std::size_t>(set_horizons(task_set).back());
        if (n_f + max_h > kSlotsPerDay)
            throw ConfigError("n_f", "n_f + largest horizon (" + std::to_string(max_h) + ") exceeds 48");
        if (workers < 1) throw ConfigError("workers", "must be >= 1");
        if (!(adam.lr > 0.0)) throw ConfigError("lr", "must be positive");
        if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("beta1", "must lie in [0, 1)");
        if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("beta2", "must lie in [0, 1)");
        if (!(adam.eps > 0.0)) throw ConfigError("adam_eps", "must be positive");
        const bool uses_transfer =
            std::find(methods.begin(), methods.end(), Method::mtoct) != methods.end();
        if (uses_transfer) {
            try {
                transfer.validate(task_count());
            } catch (const std::invalid_argument& e) {
                const std::string msg = e.what();
                const auto colon = msg.find(':');
                throw ConfigError(msg.substr(0, colon), msg.substr(colon + 2));
            }
        }
    }
};

namespace detail {

inline std::string join(const std::vector<std::string>& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + items[i];
    return s;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    for (auto part : split_csv(v))
        if (!part.empty()) out.emplace_back(part);
    return out;
}

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

/// Full key=value rendering; parsing it back yields the same configuration.
inline std::vector<std::pair<std::string, std::string>> to_key_values(const ExperimentConfig& c) {
    std::vector<std::string> methods;
    for (auto m : c.methods) methods.emplace_back(method_name(m));
    auto d = detail::fmt_double;
    return {
        {"data_dir", c.data_dir.string()},
        {"regions", detail::join(c.regions)},
        {"task_set", std::string(1, c.task_set)},
        {"methods", detail::join(methods)},
        {"runs", std::to_string(c.runs)},
        {"max_iter_stp", std::to_string(c.max_iter_stp)},
        {"max_iter_mtoct", std::to_string(c.max_iter_mtoct)},
        {"n_f", std::to_string(c.n_f)},
        {"n_h", std::to_string(c.n_h)},
        {"F", d(c.transfer.F)},
        {"CR", d(c.transfer.CR)},
        {"n_s", std::to_string(c.transfer.n_s)},
        {"alpha", d(c.transfer.alpha)},
        {"q_init", d(c.transfer.q_init)},
        {"eps_reward", d(c.transfer.eps_reward)},
        {"forced_crossover_dimension", c.transfer.forced_dimension ? "true" : "false"},
        {"lr", d(c.adam.lr)},
        {"beta1", d(c.adam.beta1)},
        {"beta2", d(c.adam.beta2)},
        {"adam_eps", d(c.adam.eps)},
        {"master_seed", std::to_string(c.master_seed)},
        {"output_dir", c.output_dir.string()},
        {"normalization", c.normalization == NormalizationFit::full ? "full" : "train_only"},
        {"execution", c.execution == ExecutionMode::sequential ? "sequential" : "snapshot_parallel"},
        {"workers", std::to_string(c.workers)},
    };
}

inline std::string render_config(const ExperimentConfig& c) {
    std::string s;
    for (const auto& [k, v] : to_key_values(c)) s += k + "=" + v + "\n";
    return s;
}

/// Parses key=value text. '#' starts a comment; unknown keys are errors.
/// Relative paths are resolved against `base_dir`.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig c;
    auto to_size = [](const std::string& k, const std::string& v) {
        std::size_t out = 0;
        if (!detail::parse_int(std::string_view(v), out)) throw ConfigError(k, "expected a non-negative integer, got '" + v + "'");
        return out;
    };
    auto to_real = [](const std::string& k, const std::string& v) {
        double out = 0;
        if (!detail::parse_double(v, out)) throw ConfigError(k, "expected a number, got '" + v + "'");
        return out;
    };
    auto to_path = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_relative() && !base_dir.empty() ? (base_dir / p).lexically_normal() : p;
    };

    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"data_dir", [&](auto&, auto& v) { c.data_dir = to_path(v); }},
        {"regions", [&](auto&, auto& v) { c.regions = detail::split_list(v); }},
        {"task_set",
         [&](auto& k, auto& v) {
             if (v != "A" && v != "B") throw ConfigError(k, "expected A or B, got '" + v + "'");
             c.task_set = v[0];
         }},
        {"methods",
         [&](auto& k, auto& v) {
             c.methods.clear();
             for (const auto& m : detail::split_list(v)) {
                 try {
                     c.methods.push_back(parse_method(m));
                 } catch (const std::invalid_argument& e) {
                     throw ConfigError(k, e.what());
                 }
             }
         }},
        {"runs", [&](auto& k, auto& v) { c.runs = to_size(k, v); }},
        {"max_iter_stp", [&](auto& k, auto& v) { c.max_iter_stp = to_size(k, v); }},
        {"max_iter_mtoct", [&](auto& k, auto& v) { c.max_iter_mtoct = to_size(k, v); }},
        {"n_f", [&](auto& k, auto& v) { c.n_f = to_size(k, v); }},
        {"n_h", [&](auto& k, auto& v) { c.n_h = to_size(k, v); }},
        {"F", [&](auto& k, auto& v) { c.transfer.F = to_real(k, v); }},
        {"CR", [&](auto& k, auto& v) { c.transfer.CR = to_real(k, v); }},
        {"n_s", [&](auto& k, auto& v) { c.transfer.n_s = to_size(k, v); }},
        {"alpha", [&](auto& k, auto& v) { c.transfer.alpha = to_real(k, v); }},
        {"q_init", [&](auto& k, auto& v) { c.transfer.q_init = to_real(k, v); }},
        {"eps_reward", [&](auto& k, auto& v) { c.transfer.eps_reward = to_real(k, v); }},
        {"forced_crossover_dimension",
         [&](auto& k, auto& v) {
             if (v != "true" && v != "false") throw ConfigError(k, "expected true or false");
             c.transfer.forced_dimension = v == "true";
         }},
        {"lr", [&](auto& k, auto& v) { c.adam.lr = to_real(k, v); }},
        {"beta1", [&](auto& k, auto& v) { c.adam.beta1 = to_real(k, v); }},
        {"beta2", [&](auto& k, auto& v) { c.adam.beta2 = to_real(k, v); }},
        {"adam_eps", [&](auto& k, auto& v) { c.adam.eps = to_real(k, v); }},
        {"master_seed",
         [&](auto& k, auto& v) {
             if (!detail::parse_int(std::string_view(v), c.master_seed)) throw ConfigError(k, "expected an unsigned integer");
         }},
        {"output_dir", [&](auto&, auto& v) { c.output_dir = to_path(v); }},
        {"normalization",
         [&](auto& k, auto& v) {
             if (v == "full") c.normalization = NormalizationFit::full;
             else if (v == "train_only") c.normalization = NormalizationFit::train_only;
             else throw ConfigError(k, "expected full or train_only");
         }},
        {"execution",
         [&](auto& k, auto& v) {
             if (v == "sequential") c.execution = ExecutionMode::sequential;
             else if (v == "snapshot_parallel") c.execution = ExecutionMode::snapshot_parallel;
             else throw ConfigError(k, "expected sequential or snapshot_parallel");
         }},
        {"workers", [&](auto& k, auto& v) { c.workers = to_size(k, v); }},
    };

    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected key=value");
        const std::string key(detail::trim(body.substr(0, eq)));
        const std::string value(detail::trim(body.substr(eq + 1)));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(key, "unknown key (line " + std::to_string(line_no) + ")");
        if (seen.count(key)) throw ConfigError(key, "given twice (line " + std::to_string(line_no) + ")");
        seen[key] = line_no;
        it->second(key, value);
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    return parse_config(in, std::filesystem::absolute(path).parent_path());
}

}  // namespace mtoct

#endif

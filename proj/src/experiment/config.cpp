#include "gstuda/experiment/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace gstuda::experiment {

const char* to_string(Method m) noexcept {
    switch (m) {
    case Method::no_uda: return "no_uda";
    case Method::ac_gst: return "ac_gst";
    case Method::ac_gst_no_attn: return "ac_gst_no_attn";
    case Method::ac_gst_c: return "ac_gst_c";
    case Method::bm_gst: return "bm_gst";
    case Method::bm_gst_a: return "bm_gst_a";
    case Method::bm_gst_e: return "bm_gst_e";
    case Method::target_supervised: return "target_supervised";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    for (Method m : kAllMethods)
        if (s == to_string(m)) return m;
    throw InvalidArgument("unknown method '" + s + "'");
}

TrainConfig method_config(Method m, const TrainConfig& base) {
    TrainConfig c = base;
    c.uncertainty_mode = UncertaintyMode::both;
    switch (m) {
    case Method::no_uda: c.rounds = 0; break;
    case Method::ac_gst: c.mask_mode = MaskMode::attentive; break;
    case Method::ac_gst_no_attn: c.mask_mode = MaskMode::continuous; break;
    case Method::ac_gst_c: c.mask_mode = MaskMode::attentive_binary; break;
    case Method::bm_gst: c.mask_mode = MaskMode::binary; break;
    case Method::bm_gst_a:
        c.mask_mode = MaskMode::binary;
        c.uncertainty_mode = UncertaintyMode::epistemic_only;
        break;
    case Method::bm_gst_e:
        c.mask_mode = MaskMode::binary;
        c.uncertainty_mode = UncertaintyMode::aleatoric_only;
        break;
    case Method::target_supervised: break;
    }
    return c;
}

ExperimentConfig::ExperimentConfig() {
    task.phantom.seed = 7;
    task.source_shift.noise_sigma = 4.0;
    task.source_shift.seed = 11;
    // moderate shift: every appearance parameter moves a little
    task.target_shift.tag_period = 5.0;
    task.target_shift.tag_contrast = 0.5;
    task.target_shift.gamma = 1.3;
    task.target_shift.brightness_offset = 6.0;
    task.target_shift.noise_sigma = 6.0;
    task.target_shift.seed = 12;
    methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
    seeds = {0, 1, 2};
    output_dir = "runs/default";
}

void ExperimentConfig::validate() const {
    task.phantom.validate();
    task.source_shift.validate();
    task.target_shift.validate();
    if (task.n_source_subjects == 0 || task.source_slices_per_subject == 0)
        throw InvalidArgument("task: source set is empty");
    if (task.n_target_subjects == 0 || task.target_slices_per_subject == 0)
        throw InvalidArgument("task: target set is empty");
    train.validate();
    if (methods.empty()) throw InvalidArgument("methods must not be empty");
    if (seeds.empty()) throw InvalidArgument("seeds must not be empty");
    for (double b : sweep_beta)
        if (!(b > 0.0)) throw InvalidArgument("sweep.beta values must be positive");
    for (auto k : sweep_K)
        if (k < 2) throw InvalidArgument("sweep.K values must be >= 2");
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw InvalidArgument("expected a number, got '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw InvalidArgument("expected a nonnegative integer, got '" + s + "'");
    return v;
}

std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(to_u64(s)); }

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw InvalidArgument("expected true or false, got '" + s + "'");
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& v, auto&& f) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
    return out;
}

struct Field {
    std::string key;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define GSTUDA_REAL(KEY, PATH) \
    Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.PATH = to_double(v); }, \
          [](const ExperimentConfig& c) { return fmt::format("{}", c.PATH); }}
#define GSTUDA_SIZE(KEY, PATH) \
    Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.PATH = to_size(v); }, \
          [](const ExperimentConfig& c) { return fmt::format("{}", c.PATH); }}
#define GSTUDA_U64(KEY, PATH) \
    Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.PATH = to_u64(v); }, \
          [](const ExperimentConfig& c) { return fmt::format("{}", c.PATH); }}
#define GSTUDA_BOOL(KEY, PATH) \
    Field{KEY, [](ExperimentConfig& c, const std::string& v) { c.PATH = to_bool(v); }, \
          [](const ExperimentConfig& c) { return fmt_bool(c.PATH); }}
#define GSTUDA_SHIFT(PREFIX, S)                                            \
    GSTUDA_REAL(PREFIX ".tag_period", task.S.tag_period),                  \
    GSTUDA_REAL(PREFIX ".tag_contrast", task.S.tag_contrast),              \
    GSTUDA_REAL(PREFIX ".gamma", task.S.gamma),                            \
    GSTUDA_REAL(PREFIX ".brightness_offset", task.S.brightness_offset),    \
    GSTUDA_REAL(PREFIX ".noise_sigma", task.S.noise_sigma),                \
    GSTUDA_REAL(PREFIX ".background_level", task.S.background_level),      \
    GSTUDA_U64(PREFIX ".seed", task.S.seed)

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        GSTUDA_SIZE("task.height", task.phantom.height),
        GSTUDA_SIZE("task.width", task.phantom.width),
        GSTUDA_SIZE("task.n_blobs", task.phantom.n_blobs),
        GSTUDA_REAL("task.blob_scale", task.phantom.blob_scale),
        GSTUDA_U64("task.phantom_seed", task.phantom.seed),
        GSTUDA_SIZE("task.n_source_subjects", task.n_source_subjects),
        GSTUDA_SIZE("task.source_slices", task.source_slices_per_subject),
        GSTUDA_SIZE("task.n_target_subjects", task.n_target_subjects),
        GSTUDA_SIZE("task.target_slices", task.target_slices_per_subject),
        GSTUDA_SHIFT("source", source_shift),
        GSTUDA_SHIFT("target", target_shift),
        GSTUDA_REAL("train.learning_rate", train.learning_rate),
        GSTUDA_REAL("train.momentum_beta1", train.momentum_beta1),
        GSTUDA_REAL("train.momentum_beta2", train.momentum_beta2),
        GSTUDA_SIZE("train.batch_size", train.batch_size),
        GSTUDA_SIZE("train.K", train.K),
        GSTUDA_REAL("train.beta", train.beta),
        Field{"train.mask_mode",
              [](ExperimentConfig& c, const std::string& v) { c.train.mask_mode = mask_mode_from_string(v); },
              [](const ExperimentConfig& c) { return std::string(to_string(c.train.mask_mode)); }},
        Field{"train.uncertainty_mode",
              [](ExperimentConfig& c, const std::string& v) {
                  c.train.uncertainty_mode = uncertainty_mode_from_string(v);
              },
              [](const ExperimentConfig& c) { return std::string(to_string(c.train.uncertainty_mode)); }},
        GSTUDA_SIZE("train.rounds", train.rounds),
        GSTUDA_SIZE("train.iters_per_round", train.iters_per_round),
        GSTUDA_SIZE("train.pretrain_epochs", train.pretrain_epochs),
        GSTUDA_SIZE("train.depth", train.arch.depth),
        GSTUDA_SIZE("train.base_channels", train.arch.base_channels),
        GSTUDA_REAL("train.dropout_rate", train.arch.dropout_rate),
        GSTUDA_SIZE("train.attention_depth", train.attention_arch.depth),
        GSTUDA_SIZE("train.attention_base_channels", train.attention_arch.base_channels),
        GSTUDA_REAL("train.rho_start", train.rho_start),
        GSTUDA_REAL("train.rho_end", train.rho_end),
        GSTUDA_BOOL("train.rho_per_round", train.rho_per_round),
        GSTUDA_BOOL("train.mask_outside_norm", train.mask_outside_norm),
        GSTUDA_REAL("train.attention_floor_lambda", train.attention_floor_lambda),
        GSTUDA_REAL("train.attention_floor_target", train.attention_floor_target),
        GSTUDA_REAL("train.uncertainty_scale", train.uncertainty_scale),
        GSTUDA_REAL("train.intensity_scale", train.intensity_scale),
        GSTUDA_SIZE("train.probe_slice", train.probe_slice),
        GSTUDA_BOOL("train.holdout_probe", train.holdout_probe),
        GSTUDA_SIZE("train.threads", train.threads),
        Field{"methods", [](ExperimentConfig& c, const std::string& v) { c.methods = parse_method_list(v); },
              [](const ExperimentConfig& c) {
                  return join(c.methods, [](Method m) { return std::string(to_string(m)); });
              }},
        Field{"seeds", [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_seed_list(v); },
              [](const ExperimentConfig& c) {
                  return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
              }},
        Field{"output_dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
              [](const ExperimentConfig& c) { return c.output_dir.string(); }},
        Field{"sweep.beta",
              [](ExperimentConfig& c, const std::string& v) {
                  c.sweep_beta.clear();
                  for (const auto& s : split_csv(v)) c.sweep_beta.push_back(to_double(s));
              },
              [](const ExperimentConfig& c) {
                  return join(c.sweep_beta, [](double b) { return fmt::format("{}", b); });
              }},
        Field{"sweep.K",
              [](ExperimentConfig& c, const std::string& v) {
                  c.sweep_K.clear();
                  for (const auto& s : split_csv(v)) c.sweep_K.push_back(to_size(s));
              },
              [](const ExperimentConfig& c) {
                  return join(c.sweep_K, [](std::size_t k) { return std::to_string(k); });
              }},
        GSTUDA_BOOL("save_checkpoints", save_checkpoints),
    };
    return table;
}

#undef GSTUDA_REAL
#undef GSTUDA_SIZE
#undef GSTUDA_U64
#undef GSTUDA_BOOL
#undef GSTUDA_SHIFT

} // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> out;
    for (const auto& s : split_csv(csv)) out.push_back(to_u64(s));
    if (out.empty()) throw InvalidArgument("seed list is empty");
    return out;
}

std::vector<Method> parse_method_list(const std::string& csv) {
    std::vector<Method> out;
    for (const auto& s : split_csv(csv)) {
        const Method m = method_from_string(s);
        if (std::find(out.begin(), out.end(), m) != out.end()) throw InvalidArgument("duplicate method '" + s + "'");
        out.push_back(m);
    }
    if (out.empty()) throw InvalidArgument("method list is empty");
    return out;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    std::set<std::string> seen;
    while (std::getline(in, raw)) {
        ++lineno;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(origin, lineno, "expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const auto& table = fields();
        auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
        if (it == table.end()) throw ConfigError(origin, lineno, "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(origin, lineno, "duplicate key '" + key + "'");
        try {
            it->set(cfg, value);
        } catch (const InvalidArgument& e) {
            throw ConfigError(origin, lineno, key + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(origin, 0, e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), file.string());
}

std::string resolved_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
    return out;
}

} // namespace gstuda::experiment

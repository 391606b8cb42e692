#include "clnas/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "clnas/errors.hpp"
#include "clnas/rng.hpp"

namespace clnas {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

long long parse_ll(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (errno != 0 || end == v.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
    return x;
}

int parse_int(const std::string& key, const std::string& v) {
    long long x = parse_ll(key, v);
    if (x < -2147483647LL || x > 2147483647LL)
        throw ConfigError("config key '" + key + "': integer out of range: " + v);
    return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (errno != 0 || end == v.c_str() || *end != '\0' || !v.empty() && v[0] == '-')
        throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

double parse_double(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (errno != 0 || end == v.c_str() || *end != '\0')
        throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

} // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") seed = parse_u64(key, value);
    else if (key == "tasks") tasks = parse_int(key, value);
    else if (key == "mode") mode = value;
    else if (key == "dataset") dataset = value;
    else if (key == "data_dir") data_dir = value;
    else if (key == "transform") transform = value;
    else if (key == "train_per_task") train_per_task = parse_int(key, value);
    else if (key == "valid_per_task") valid_per_task = parse_int(key, value);
    else if (key == "test_per_task") test_per_task = parse_int(key, value);
    else if (key == "blob_dim") blob_dim = parse_int(key, value);
    else if (key == "blob_classes") blob_classes = parse_int(key, value);
    else if (key == "blob_separation") blob_separation = parse_double(key, value);
    else if (key == "layers") layers = value;
    else if (key == "initial_widths") initial_widths = value;
    else if (key == "max_new_per_layer") max_new_per_layer = parse_int(key, value);
    else if (key == "episodes") episodes = parse_int(key, value);
    else if (key == "steps") steps = parse_int(key, value);
    else if (key == "explore_p") explore_p = parse_double(key, value);
    else if (key == "alpha") alpha = parse_double(key, value);
    else if (key == "sample_actions") sample_actions = parse_bool(key, value);
    else if (key == "controller_hidden") controller_hidden = parse_int(key, value);
    else if (key == "controller_lr") controller_lr = parse_double(key, value);
    else if (key == "baseline_beta") baseline_beta = parse_double(key, value);
    else if (key == "epochs") epochs = parse_int(key, value);
    else if (key == "batch") batch = parse_int(key, value);
    else if (key == "lr") lr = parse_double(key, value);
    else if (key == "out") out = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

void ExperimentConfig::validate() const {
    if (mode != "cleas" && mode != "cleas-c" && mode != "reuse-all" &&
        mode != "standard-controller")
        throw ConfigError("config key 'mode': unknown mode '" + mode + "'");
    if (dataset != "synth-digits" && dataset != "mnist" && dataset != "blobs")
        throw ConfigError("config key 'dataset': unknown dataset '" + dataset + "'");
    if (transform != "permute" && transform != "rotate" && transform != "class-split" &&
        transform != "none")
        throw ConfigError("config key 'transform': unknown transform '" + transform + "'");
    if (dataset == "mnist" && data_dir.empty())
        throw ConfigError("config key 'data_dir': required when dataset = mnist");
    if (tasks < 1) throw ConfigError("config key 'tasks': must be >= 1");
    if (train_per_task < 1 || valid_per_task < 1 || test_per_task < 1)
        throw ConfigError("config: per-task split sizes must be >= 1");
    if (episodes < 1) throw ConfigError("config key 'episodes': must be >= 1");
    if (steps < 1) throw ConfigError("config key 'steps': must be >= 1");
    if (!(explore_p >= 0.0 && explore_p <= 1.0))
        throw ConfigError("config key 'explore_p': must be in [0, 1]");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw ConfigError("config key 'alpha': must be finite and >= 0");
    if (controller_hidden < 1) throw ConfigError("config key 'controller_hidden': must be >= 1");
    if (!(controller_lr > 0.0)) throw ConfigError("config key 'controller_lr': must be > 0");
    if (!(baseline_beta >= 0.0 && baseline_beta < 1.0))
        throw ConfigError("config key 'baseline_beta': must be in [0, 1)");
    if (epochs < 0) throw ConfigError("config key 'epochs': must be >= 0");
    if (batch < 1) throw ConfigError("config key 'batch': must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("config key 'lr': must be > 0");
    if (blob_dim < 1 || blob_classes < 1)
        throw ConfigError("config: blob_dim and blob_classes must be >= 1");
    if (!(blob_separation > 0.0))
        throw ConfigError("config key 'blob_separation': must be > 0");
    // Structural checks (layer syntax, widths, geometry) live in spec_from_config.
    spec_from_config(*this);
    initial_widths_from_config(*this);
}

std::string ExperimentConfig::snapshot() const {
    std::ostringstream os;
    os << "alpha = " << fmt_double(alpha) << "\n";
    os << "baseline_beta = " << fmt_double(baseline_beta) << "\n";
    os << "batch = " << batch << "\n";
    os << "blob_classes = " << blob_classes << "\n";
    os << "blob_dim = " << blob_dim << "\n";
    os << "blob_separation = " << fmt_double(blob_separation) << "\n";
    os << "controller_hidden = " << controller_hidden << "\n";
    os << "controller_lr = " << fmt_double(controller_lr) << "\n";
    os << "data_dir = " << data_dir << "\n";
    os << "dataset = " << dataset << "\n";
    os << "epochs = " << epochs << "\n";
    os << "episodes = " << episodes << "\n";
    os << "explore_p = " << fmt_double(explore_p) << "\n";
    os << "initial_widths = " << initial_widths << "\n";
    os << "layers = " << layers << "\n";
    os << "lr = " << fmt_double(lr) << "\n";
    os << "max_new_per_layer = " << max_new_per_layer << "\n";
    os << "mode = " << mode << "\n";
    os << "out = " << out << "\n";
    os << "sample_actions = " << (sample_actions ? "true" : "false") << "\n";
    os << "seed = " << seed << "\n";
    os << "steps = " << steps << "\n";
    os << "tasks = " << tasks << "\n";
    os << "test_per_task = " << test_per_task << "\n";
    os << "train_per_task = " << train_per_task << "\n";
    os << "transform = " << transform << "\n";
    os << "valid_per_task = " << valid_per_task << "\n";
    return os.str();
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text,
                                              const std::vector<std::string>& overrides) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    for (const std::string& ov : overrides) {
        std::size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + ov + "': expected key=value");
        cfg.set(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path,
                                              const std::vector<std::string>& overrides) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_text(ss.str(), overrides);
}

HyperNetSpec spec_from_config(const ExperimentConfig& cfg) {
    HyperNetSpec spec;
    for (const std::string& tok : split_commas(cfg.layers)) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : tok)
            if (c == ':') {
                parts.push_back(cur);
                cur.clear();
            } else
                cur.push_back(c);
        parts.push_back(cur);
        if (parts.empty() || parts[0].empty())
            throw ConfigError("config key 'layers': bad entry '" + tok + "'");
        HyperLayerSpec ls;
        if (parts[0] == "dense") {
            if (parts.size() != 2)
                throw ConfigError("config key 'layers': dense entry needs 'dense:capacity', got '" +
                                  tok + "'");
            ls.kind = LayerKind::Dense;
            ls.capacity = parse_int("layers", parts[1]);
        } else if (parts[0] == "conv") {
            if (parts.size() != 3)
                throw ConfigError(
                    "config key 'layers': conv entry needs 'conv:capacity:kernel', got '" + tok +
                    "'");
            ls.kind = LayerKind::Conv;
            ls.capacity = parse_int("layers", parts[1]);
            ls.k = parse_int("layers", parts[2]);
        } else {
            throw ConfigError("config key 'layers': unknown layer kind '" + parts[0] + "'");
        }
        spec.layers.push_back(ls);
    }
    if (cfg.dataset == "blobs") {
        if (spec.conv_layers() > 0)
            throw ConfigError("config: conv layers require an image dataset, not blobs");
        spec.input_dim = cfg.blob_dim;
        spec.classes = cfg.blob_classes;
    } else {
        spec.input_dim = 28 * 28;
        spec.input_channels = 1;
        spec.input_h = 28;
        spec.input_w = 28;
        spec.classes = 10;
    }
    if (cfg.transform == "class-split") {
        if (spec.classes % cfg.tasks != 0)
            throw ConfigError("config: class-split needs tasks to divide " +
                              std::to_string(spec.classes) + " classes");
        spec.classes /= cfg.tasks;
    }
    spec.max_new_per_layer = cfg.max_new_per_layer;
    spec.validate();
    return spec;
}

std::vector<int> initial_widths_from_config(const ExperimentConfig& cfg) {
    HyperNetSpec spec = spec_from_config(cfg);
    std::vector<int> widths;
    for (const std::string& tok : split_commas(cfg.initial_widths))
        widths.push_back(parse_int("initial_widths", tok));
    if (static_cast<int>(widths.size()) != spec.depth())
        throw ConfigError("config key 'initial_widths': expected " + std::to_string(spec.depth()) +
                          " entries, got " + std::to_string(widths.size()));
    for (int i = 0; i < spec.depth(); ++i)
        if (widths[i] < 1 || widths[i] > spec.layers[i].capacity)
            throw ConfigError("config key 'initial_widths': layer " + std::to_string(i + 1) +
                              " width " + std::to_string(widths[i]) + " outside [1, " +
                              std::to_string(spec.layers[i].capacity) + "]");
    return widths;
}

std::vector<TaskDataset> datasets_from_config(const ExperimentConfig& cfg) {
    SplitSizes sizes{cfg.train_per_task, cfg.valid_per_task, cfg.test_per_task};
    std::vector<TaskDataset> tasks;

    if (cfg.dataset == "blobs") {
        if (cfg.transform != "none")
            throw ConfigError("config: dataset blobs supports only transform = none");
        int train_pc = (cfg.train_per_task + cfg.valid_per_task + cfg.blob_classes - 1) /
                       cfg.blob_classes;
        int test_pc = (cfg.test_per_task + cfg.blob_classes - 1) / cfg.blob_classes;
        for (int t = 1; t <= cfg.tasks; ++t) {
            std::uint64_t s = Rng::stream(cfg.seed, "blobs", t).next_u64();
            BasePool pool = synth_blobs(cfg.blob_classes, cfg.blob_dim, train_pc, test_pc,
                                        cfg.blob_separation, s);
            tasks.push_back(plain_task(pool, t, cfg.seed, sizes));
        }
        return tasks;
    }

    BasePool pool;
    if (cfg.dataset == "synth-digits") {
        int train_pc = (cfg.train_per_task + cfg.valid_per_task + 9) / 10;
        int test_pc = (cfg.test_per_task + 9) / 10;
        if (cfg.transform == "class-split") {
            // Splitting by class cuts the pool per task; generate enough of each digit.
            train_pc = cfg.tasks * ((cfg.train_per_task + cfg.valid_per_task + 9) / 10);
            test_pc = cfg.tasks * ((cfg.test_per_task + 9) / 10);
        }
        pool = synth_digits(train_pc, test_pc, Rng::stream(cfg.seed, "digits", 0).next_u64());
    } else {
        pool = load_idx_pool(cfg.data_dir);
    }

    if (cfg.transform == "class-split") {
        std::vector<TaskDataset> split = class_split(pool, cfg.tasks, cfg.seed, sizes);
        return split;
    }
    for (int t = 1; t <= cfg.tasks; ++t) {
        if (cfg.transform == "permute")
            tasks.push_back(permute_task(pool, t, cfg.seed, sizes));
        else if (cfg.transform == "rotate")
            tasks.push_back(rotate_task(pool, t, cfg.tasks, cfg.seed, sizes));
        else
            tasks.push_back(plain_task(pool, t, cfg.seed, sizes));
    }
    return tasks;
}

} // namespace clnas

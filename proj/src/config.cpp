#include "starseg/config.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "starseg/errors.hpp"
#include "starseg/fusion.hpp"

namespace starseg {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split_csv(s)) out.push_back(std::stoi(tok));
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& tok : split_csv(s)) out.push_back(std::stod(tok));
    return out;
}

void load_into(PipelineConfig& cfg, const std::string& path, int depth) {
    if (depth > 8)
        throw std::invalid_argument("config: include nesting too deep at " + path);
    std::ifstream in(path);
    if (!in) throw io_error("config: cannot open " + path);
    const std::filesystem::path dir = std::filesystem::path(path).parent_path();

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.rfind("include ", 0) == 0) {
            std::filesystem::path inc(trim(line.substr(8)));
            if (inc.is_relative()) inc = dir / inc;
            load_into(cfg, inc.string(), depth + 1);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at " + path +
                                        ":" + std::to_string(lineno));
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

}  // namespace

std::vector<double> PipelineConfig::resolved_viewpoints() const {
    return viewpoints.empty() ? ViewpointSet::thirds().offsets : viewpoints;
}

DatasetConfig PipelineConfig::dataset_config() const {
    DatasetConfig dc;
    dc.n_train = n_train;
    dc.n_test = n_test;
    dc.width = width;
    dc.height = height;
    dc.seed = seed;
    dc.ranges.arc_span_max = arc_span_max_deg * std::numbers::pi / 180.0;
    return dc;
}

void PipelineConfig::validate() const {
    if (scales.empty())
        throw std::invalid_argument("config: at least one scale required");
    for (int s : scales)
        if (s < 1 || n_angle % s != 0)
            throw std::invalid_argument("config: scale " + std::to_string(s) +
                                        " does not divide n_angle " +
                                        std::to_string(n_angle));
    if (epochs.size() != scales.size())
        throw std::invalid_argument("config: epochs must list one entry per scale");
    if (learning_rate <= 0.0)
        throw std::invalid_argument("config: learning_rate must be positive");
    if (hidden < 1)
        throw std::invalid_argument("config: hidden must be >= 1");
    if (n_angle < 4 || n_radius < 4)
        throw std::invalid_argument("config: polar dims must be >= 4");
    if (n_train < 1 || n_test < 0 || width < 8 || height < 8)
        throw std::invalid_argument("config: invalid dataset dims");
    if (arc_span_max_deg < 0.0 || arc_span_max_deg > 75.0)
        throw std::invalid_argument("config: arc_span_max_deg outside [0, 75]");
    if (variance_kept <= 0.0 || variance_kept > 1.0)
        throw std::invalid_argument("config: variance_kept outside (0, 1]");
}

void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value) {
    try {
        if (key == "scales") cfg.scales = parse_int_list(value);
        else if (key == "n_angle") cfg.n_angle = std::stoi(value);
        else if (key == "n_radius") cfg.n_radius = std::stoi(value);
        else if (key == "viewpoints") cfg.viewpoints = parse_double_list(value);
        else if (key == "hidden") cfg.hidden = std::stoi(value);
        else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
        else if (key == "rms_decay") cfg.rms_decay = std::stod(value);
        else if (key == "rms_epsilon") cfg.rms_epsilon = std::stod(value);
        else if (key == "clip_norm") cfg.clip_norm = std::stod(value);
        else if (key == "init_std") cfg.init_std = std::stod(value);
        else if (key == "epochs") cfg.epochs = parse_int_list(value);
        else if (key == "uniform_init_value") cfg.uniform_init_value = std::stod(value);
        else if (key == "n_train") cfg.n_train = std::stoi(value);
        else if (key == "n_test") cfg.n_test = std::stoi(value);
        else if (key == "width") cfg.width = std::stoi(value);
        else if (key == "height") cfg.height = std::stoi(value);
        else if (key == "arc_span_max_deg") cfg.arc_span_max_deg = std::stod(value);
        else if (key == "variance_kept") cfg.variance_kept = std::stod(value);
        else if (key == "asm_iters") cfg.asm_iters = std::stoi(value);
        else if (key == "profile_len") cfg.profile_len = std::stoi(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "jobs") cfg.jobs = std::stoi(value);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad value for '" + key + "': " + value);
    }
}

PipelineConfig load_config(const std::string& path) {
    PipelineConfig cfg;
    load_into(cfg, path, 0);
    return cfg;
}

std::string dump_config(const PipelineConfig& cfg) {
    std::ostringstream out;
    out << std::setprecision(17);
    auto list_int = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    out << "scales = " << list_int(cfg.scales) << "\n";
    if (!cfg.viewpoints.empty()) {
        out << "viewpoints = ";
        for (std::size_t i = 0; i < cfg.viewpoints.size(); ++i)
            out << (i ? "," : "") << cfg.viewpoints[i];
        out << "\n";
    }
    out << "n_angle = " << cfg.n_angle << "\n";
    out << "n_radius = " << cfg.n_radius << "\n";
    out << "hidden = " << cfg.hidden << "\n";
    out << "learning_rate = " << cfg.learning_rate << "\n";
    out << "rms_decay = " << cfg.rms_decay << "\n";
    out << "rms_epsilon = " << cfg.rms_epsilon << "\n";
    out << "clip_norm = " << cfg.clip_norm << "\n";
    out << "init_std = " << cfg.init_std << "\n";
    out << "epochs = " << list_int(cfg.epochs) << "\n";
    out << "uniform_init_value = " << cfg.uniform_init_value << "\n";
    out << "n_train = " << cfg.n_train << "\n";
    out << "n_test = " << cfg.n_test << "\n";
    out << "width = " << cfg.width << "\n";
    out << "height = " << cfg.height << "\n";
    out << "arc_span_max_deg = " << cfg.arc_span_max_deg << "\n";
    out << "variance_kept = " << cfg.variance_kept << "\n";
    out << "asm_iters = " << cfg.asm_iters << "\n";
    out << "profile_len = " << cfg.profile_len << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "jobs = " << cfg.jobs << "\n";
    return out.str();
}

}  // namespace starseg

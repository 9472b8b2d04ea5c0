#include "core/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "core/common.hpp"

namespace efn {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        require(pos == v.size(), "config: bad number for '" + key + "': " + v);
        return x;
    } catch (const EfnError&) {
        throw;
    } catch (...) {
        fail("config: bad number for '" + key + "': " + v);
    }
}

int to_int(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    const int i = static_cast<int>(x);
    require(static_cast<double>(i) == x, "config: '" + key + "' must be an integer");
    return i;
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        uint64_t x = std::stoull(v, &pos);
        require(pos == v.size(), "config: bad seed for '" + key + "': " + v);
        return x;
    } catch (const EfnError&) {
        throw;
    } catch (...) {
        fail("config: bad seed for '" + key + "': " + v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail("config: '" + key + "' must be true/false");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    require(!out.empty(), "config: '" + key + "' must be a nonempty list");
    return out;
}

std::string list_text(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += num(v[i]);
    }
    return out;
}

std::string conv_text(const std::vector<model::ConvSpec>& conv) {
    std::string out;
    for (size_t i = 0; i < conv.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(conv[i].out_channels);
    }
    return out;
}

}  // namespace

void RunConfig::validate() const {
    synth.validate();
    filter.validate(synth.fs);
    require(downsample_factor >= 1, "config: downsample_factor must be >= 1");
    model.validate();
    require(p1_epochs >= 0 && p2_epochs >= 0 && p3_epochs >= 0,
            "config: phase budgets must be >= 0");
    require(batch_size >= 1, "config: batch_size must be >= 1");
    require(lr > 0.0, "config: lr must be > 0");
    require(lambda >= 0.0, "config: lambda must be >= 0");
    require(replay_capacity >= 0, "config: replay_capacity must be >= 0");
    require(mask_ratio >= 0.0 && mask_ratio <= 1.0, "config: mask_ratio out of [0,1]");
    require(mask_span >= 1, "config: mask_span must be >= 1");
    for (double r : ratios)
        require(r >= 0.0 && r < 1.0, "config: ratios must lie in [0,1)");
    require(eval_ratio >= 0.0 && eval_ratio < 1.0, "config: eval_ratio out of [0,1)");
    require(fdr_q > 0.0 && fdr_q < 1.0, "config: fdr_q out of (0,1)");
}

std::string RunConfig::echo() const {
    std::ostringstream os;
    os << "n_source_subjects = " << synth.n_source_subjects << "\n";
    os << "n_target_subjects = " << synth.n_target_subjects << "\n";
    os << "epochs_per_condition = " << synth.epochs_per_condition << "\n";
    os << "fs = " << num(synth.fs) << "\n";
    os << "power_clean = " << num(synth.condition_power[0]) << "\n";
    os << "power_noisy = " << num(synth.condition_power[1]) << "\n";
    os << "power_mmse = " << num(synth.condition_power[2]) << "\n";
    os << "power_transformer = " << num(synth.condition_power[3]) << "\n";
    os << "subject_sigma = " << num(synth.subject_sigma) << "\n";
    os << "alpha_freq_lo = " << num(synth.alpha_freq_lo) << "\n";
    os << "alpha_freq_hi = " << num(synth.alpha_freq_hi) << "\n";
    os << "pink_level = " << num(synth.pink_level) << "\n";
    os << "white_level = " << num(synth.white_level) << "\n";
    os << "noise_sigma = " << num(synth.noise_sigma) << "\n";
    os << "filter_order = " << filter.order << "\n";
    os << "pass_lo_hz = " << num(filter.pass_lo_hz) << "\n";
    os << "pass_hi_hz = " << num(filter.pass_hi_hz) << "\n";
    os << "stop_lo_hz = " << num(filter.stop_lo_hz) << "\n";
    os << "stop_hi_hz = " << num(filter.stop_hi_hz) << "\n";
    os << "stop_atten_db = " << num(filter.stop_atten_db) << "\n";
    os << "downsample_factor = " << downsample_factor << "\n";
    os << "conv_channels = " << conv_text(model.conv) << "\n";
    os << "hidden = " << model.hidden << "\n";
    os << "p1_epochs = " << p1_epochs << "\n";
    os << "p2_epochs = " << p2_epochs << "\n";
    os << "p3_epochs = " << p3_epochs << "\n";
    os << "batch_size = " << batch_size << "\n";
    os << "lr = " << num(lr) << "\n";
    os << "lambda = " << num(lambda) << "\n";
    os << "replay_capacity = " << replay_capacity << "\n";
    os << "mask_ratio = " << num(mask_ratio) << "\n";
    os << "mask_span = " << mask_span << "\n";
    os << "ssl_masked_only = " << (ssl_masked_only ? "true" : "false") << "\n";
    os << "ratios = " << list_text(ratios) << "\n";
    os << "eval_ratio = " << num(eval_ratio) << "\n";
    os << "fdr_q = " << num(fdr_q) << "\n";
    os << "seed = " << seed << "\n";
    return os.str();
}

RunConfig RunConfig::parse_text(const std::string& text) {
    RunConfig cfg;
    std::map<std::string, int> seen;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        require(eq != std::string::npos,
                "config: line " + std::to_string(lineno) + " is not key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        require(!key.empty() && !val.empty(),
                "config: empty key or value at line " + std::to_string(lineno));
        require(++seen[key] == 1, "config: duplicate key '" + key + "'");

        if (key == "n_source_subjects") cfg.synth.n_source_subjects = to_int(key, val);
        else if (key == "n_target_subjects") cfg.synth.n_target_subjects = to_int(key, val);
        else if (key == "epochs_per_condition") cfg.synth.epochs_per_condition = to_int(key, val);
        else if (key == "fs") cfg.synth.fs = to_double(key, val);
        else if (key == "power_clean") cfg.synth.condition_power[0] = to_double(key, val);
        else if (key == "power_noisy") cfg.synth.condition_power[1] = to_double(key, val);
        else if (key == "power_mmse") cfg.synth.condition_power[2] = to_double(key, val);
        else if (key == "power_transformer") cfg.synth.condition_power[3] = to_double(key, val);
        else if (key == "subject_sigma") cfg.synth.subject_sigma = to_double(key, val);
        else if (key == "alpha_freq_lo") cfg.synth.alpha_freq_lo = to_double(key, val);
        else if (key == "alpha_freq_hi") cfg.synth.alpha_freq_hi = to_double(key, val);
        else if (key == "pink_level") cfg.synth.pink_level = to_double(key, val);
        else if (key == "white_level") cfg.synth.white_level = to_double(key, val);
        else if (key == "noise_sigma") cfg.synth.noise_sigma = to_double(key, val);
        else if (key == "filter_order") cfg.filter.order = to_int(key, val);
        else if (key == "pass_lo_hz") cfg.filter.pass_lo_hz = to_double(key, val);
        else if (key == "pass_hi_hz") cfg.filter.pass_hi_hz = to_double(key, val);
        else if (key == "stop_lo_hz") cfg.filter.stop_lo_hz = to_double(key, val);
        else if (key == "stop_hi_hz") cfg.filter.stop_hi_hz = to_double(key, val);
        else if (key == "stop_atten_db") cfg.filter.stop_atten_db = to_double(key, val);
        else if (key == "downsample_factor") cfg.downsample_factor = to_int(key, val);
        else if (key == "conv_channels") {
            const auto chans = to_list(key, val);
            require(chans.size() == cfg.model.conv.size(),
                    "config: conv_channels must list " +
                        std::to_string(cfg.model.conv.size()) + " values");
            for (size_t i = 0; i < chans.size(); ++i)
                cfg.model.conv[i].out_channels = to_int(key, num(chans[i]));
        }
        else if (key == "hidden") cfg.model.hidden = to_int(key, val);
        else if (key == "p1_epochs") cfg.p1_epochs = to_int(key, val);
        else if (key == "p2_epochs") cfg.p2_epochs = to_int(key, val);
        else if (key == "p3_epochs") cfg.p3_epochs = to_int(key, val);
        else if (key == "batch_size") cfg.batch_size = to_int(key, val);
        else if (key == "lr") cfg.lr = to_double(key, val);
        else if (key == "lambda") cfg.lambda = to_double(key, val);
        else if (key == "replay_capacity") cfg.replay_capacity = to_int(key, val);
        else if (key == "mask_ratio") cfg.mask_ratio = to_double(key, val);
        else if (key == "mask_span") cfg.mask_span = to_int(key, val);
        else if (key == "ssl_masked_only") cfg.ssl_masked_only = to_bool(key, val);
        else if (key == "ratios") cfg.ratios = to_list(key, val);
        else if (key == "eval_ratio") cfg.eval_ratio = to_double(key, val);
        else if (key == "fdr_q") cfg.fdr_q = to_double(key, val);
        else if (key == "seed") cfg.seed = to_u64(key, val);
        else fail("config: unknown key '" + key + "'");
    }

    // derived dims follow from the preprocessing chain
    const int raw_n = dsp::RawEpoch::samples_for(cfg.synth.fs);
    const int dec_n = (raw_n + cfg.downsample_factor - 1) / cfg.downsample_factor;
    cfg.model.in_w = dsp::input_map_columns(dec_n);
    cfg.model.lr = cfg.lr;
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    return parse_text(read_text_file(path));
}

train::TrainBudget RunConfig::budget(int epochs) const {
    return {epochs, batch_size, lr};
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "cannot open '" + path + "' for writing");
    f << content;
    require(f.good(), "write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace efn

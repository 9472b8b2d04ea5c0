#include "core/model.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/rng.hpp"

namespace efn::model {

std::vector<int> ModelConfig::stage_widths() const {
    std::vector<int> w;
    int cur = in_w;
    w.push_back(cur);
    for (const auto& l : conv) {
        cur = cur / l.pool_w;
        w.push_back(cur);
    }
    return w;
}

void ModelConfig::validate() const {
    require(in_h > 0 && in_w > 0, "model config: bad input dims");
    require(!conv.empty(), "model config: need at least one conv layer");
    require(hidden > 0, "model config: hidden width must be positive");
    for (const auto& l : conv) {
        require(l.out_channels > 0 && l.kh > 0 && l.kw > 0 && l.pool_w >= 1,
                "model config: bad conv spec");
        require(l.kh % 2 == 1 && l.kw % 2 == 1, "model config: kernels must be odd for same padding");
    }
    require(feature_width() > 0, "model config: input too narrow for the pooling chain");
}

std::string ModelConfig::to_text() const {
    std::ostringstream os;
    os << "in_h=" << in_h << "\n";
    os << "in_w=" << in_w << "\n";
    for (size_t i = 0; i < conv.size(); ++i)
        os << "conv" << i << "=" << conv[i].out_channels << "," << conv[i].kh << ","
           << conv[i].kw << "," << conv[i].pool_w << "\n";
    os << "hidden=" << hidden << "\n";
    os << "seed=" << seed << "\n";
    os << "epochs=" << epochs << "\n";
    char lrbuf[64];
    std::snprintf(lrbuf, sizeof(lrbuf), "%.17g", lr);
    os << "lr=" << lrbuf << "\n";
    return os.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
    ModelConfig cfg;
    cfg.conv.clear();
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, "model config: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "in_h") cfg.in_h = std::stoi(val);
        else if (key == "in_w") cfg.in_w = std::stoi(val);
        else if (key.rfind("conv", 0) == 0) {
            ConvSpec s{};
            if (std::sscanf(val.c_str(), "%d,%d,%d,%d", &s.out_channels, &s.kh, &s.kw,
                            &s.pool_w) != 4)
                fail("model config: malformed conv spec '" + val + "'");
            cfg.conv.push_back(s);
        } else if (key == "hidden") cfg.hidden = std::stoi(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "epochs") cfg.epochs = std::stoi(val);
        else if (key == "lr") cfg.lr = std::stod(val);
        else fail("model config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

namespace {

tc::Tensor he_uniform(Rng& rng, std::vector<int> shape, int fan_in) {
    tc::Tensor t(shape);
    const double limit = std::sqrt(6.0 / fan_in);
    for (auto& v : *t.data) v = static_cast<float>(rng.uniform(-limit, limit));
    return t;
}

void add_conv(tc::ParamSet& ps, Rng& rng, const std::string& name, int cout, int cin,
              int kh, int kw) {
    ps.add(name + ".w", he_uniform(rng, {cout, cin, kh, kw}, cin * kh * kw));
    ps.add(name + ".b", tc::Tensor({cout}));
}

void add_dense(tc::ParamSet& ps, Rng& rng, const std::string& name, int m, int n) {
    ps.add(name + ".w", he_uniform(rng, {m, n}, n));
    ps.add(name + ".b", tc::Tensor({m}));
}

}  // namespace

tc::ParamSet init_encoder(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(Rng::derive(seed, 0xE0C0DE));
    tc::ParamSet ps;
    int cin = 1;
    for (size_t i = 0; i < cfg.conv.size(); ++i) {
        add_conv(ps, rng, "enc.conv" + std::to_string(i), cfg.conv[i].out_channels, cin,
                 cfg.conv[i].kh, cfg.conv[i].kw);
        cin = cfg.conv[i].out_channels;
    }
    return ps;
}

tc::ParamSet init_decoder(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(Rng::derive(seed, 0xDEC0DE));
    tc::ParamSet ps;
    // mirror of the encoder: channel counts walk back down to 1
    const size_t n = cfg.conv.size();
    int cin = cfg.conv.back().out_channels;
    for (size_t i = 0; i < n; ++i) {
        const int cout = (i + 1 < n) ? cfg.conv[n - 2 - i].out_channels : 1;
        const auto& mirror = cfg.conv[n - 1 - i];
        add_conv(ps, rng, "dec.conv" + std::to_string(i), cout, cin, mirror.kh, mirror.kw);
        cin = cout;
    }
    return ps;
}

tc::ParamSet init_classifier(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Rng rng(Rng::derive(seed, 0xC1A55));
    tc::ParamSet ps;
    add_dense(ps, rng, "cls.fc0", cfg.hidden, cfg.feature_dim());
    add_dense(ps, rng, "cls.fc1", 1, cfg.hidden);
    return ps;
}

tc::Tensor forward_encoder(tc::Tape* tape, const tc::Tensor& x, tc::ParamSet& enc,
                           const ModelConfig& cfg) {
    require(x.shape == std::vector<int>({1, cfg.in_h, cfg.in_w}),
            "encoder: input shape mismatch");
    tc::Tensor cur = x;
    for (size_t i = 0; i < cfg.conv.size(); ++i) {
        const auto& l = cfg.conv[i];
        const std::string name = "enc.conv" + std::to_string(i);
        cur = tc::conv2d(tape, cur, enc.at(name + ".w"), enc.at(name + ".b"), 1, 1,
                         (l.kh - 1) / 2, (l.kw - 1) / 2);
        cur = tc::relu(tape, cur);
        if (l.pool_w > 1) cur = tc::max_pool2d(tape, cur, 1, l.pool_w);
    }
    return cur;
}

tc::Tensor forward_decoder(tc::Tape* tape, const tc::Tensor& features, tc::ParamSet& dec,
                           const ModelConfig& cfg) {
    const auto widths = cfg.stage_widths();
    const size_t n = cfg.conv.size();
    tc::Tensor cur = features;
    for (size_t i = 0; i < n; ++i) {
        // undo pooling stage n-1-i, then convolve
        cur = tc::upsample_w(tape, cur, widths[n - 1 - i]);
        const auto& mirror = cfg.conv[n - 1 - i];
        const std::string name = "dec.conv" + std::to_string(i);
        cur = tc::conv2d(tape, cur, dec.at(name + ".w"), dec.at(name + ".b"), 1, 1,
                         (mirror.kh - 1) / 2, (mirror.kw - 1) / 2);
        if (i + 1 < n) cur = tc::relu(tape, cur);  // last layer stays linear
    }
    return cur;
}

tc::Tensor forward_classifier(tc::Tape* tape, const tc::Tensor& features,
                              tc::ParamSet& cls, const ModelConfig& cfg) {
    tc::Tensor flat = tc::reshape(tape, features, {cfg.feature_dim()});
    tc::Tensor h = tc::dense(tape, flat, cls.at("cls.fc0.w"), cls.at("cls.fc0.b"));
    h = tc::relu(tape, h);
    tc::Tensor o = tc::dense(tape, h, cls.at("cls.fc1.w"), cls.at("cls.fc1.b"));
    return tc::sigmoid(tape, o);
}

tc::Tensor input_tensor(const dsp::InputMap& map) {
    tc::Tensor t({1, map.n_channels, map.n_cols});
    std::memcpy(t.ptr(), map.data.data(), map.data.size() * sizeof(float));
    return t;
}

double predict_prob(tc::ParamSet& enc, tc::ParamSet& cls, const ModelConfig& cfg,
                    const dsp::InputMap& map) {
    tc::Tensor x = input_tensor(map);
    tc::Tensor f = forward_encoder(nullptr, x, enc, cfg);
    tc::Tensor p = forward_classifier(nullptr, f, cls, cfg);
    return p.ptr()[0];
}

MaskedInput mask_input(const dsp::InputMap& x, const MaskSpec& spec) {
    require(spec.ratio >= 0.0 && spec.ratio < 1.0, "mask: ratio out of range");
    require(spec.span >= 1, "mask: span must be >= 1");
    const int l = x.n_cols;
    int target_cols = static_cast<int>(std::lround(spec.ratio * l));
    if (target_cols < spec.span) target_cols = spec.span;  // at least one span

    // non-overlapping span grid, shuffled; take spans until the target is met
    std::vector<int> starts;
    for (int s = 0; s + spec.span <= l; s += spec.span) starts.push_back(s);
    require(!starts.empty(), "mask: span longer than the map");
    Rng rng(spec.seed);
    rng.shuffle(starts);
    const int n_spans = std::min<int>((target_cols + spec.span - 1) / spec.span,
                                      static_cast<int>(starts.size()));

    std::vector<uint8_t> col_mask(l, 0);
    for (int i = 0; i < n_spans; ++i)
        for (int j = 0; j < spec.span; ++j) col_mask[starts[i] + j] = 1;

    MaskedInput out;
    out.masked = x;
    out.cell_mask.assign(static_cast<size_t>(x.n_channels) * l, 0);
    for (int c = 0; c < x.n_channels; ++c) {
        float* row = out.masked.row(c);
        uint8_t* m = out.cell_mask.data() + static_cast<size_t>(c) * l;
        for (int j = 0; j < l; ++j) {
            if (col_mask[j]) {
                row[j] = 0.0f;
                m[j] = 1;
            }
        }
    }
    return out;
}

// ---- checkpoint I/O --------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'E', 'F', 'N', 'T'};
constexpr uint16_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    std::vector<char> buf;
    auto put = [&](const void* p, size_t n) {
        const auto* b = static_cast<const char*>(p);
        buf.insert(buf.end(), b, b + n);
    };
    auto put_u16 = [&](uint16_t v) { put(&v, 2); };
    auto put_u32 = [&](uint32_t v) { put(&v, 4); };

    put(kMagic, 4);
    put_u16(kVersion);
    const uint8_t phase = c.phase;
    put(&phase, 1);
    const std::string cfg = c.config.to_text();
    put_u32(static_cast<uint32_t>(cfg.size()));
    put(cfg.data(), cfg.size());
    put_u32(static_cast<uint32_t>(c.params.size()));
    for (const auto& [name, t] : c.params) {
        put_u32(static_cast<uint32_t>(name.size()));
        put(name.data(), name.size());
        const uint8_t rank = static_cast<uint8_t>(t.shape.size());
        put(&rank, 1);
        for (int d : t.shape) put_u32(static_cast<uint32_t>(d));
        put(t.data->data(), t.data->size() * sizeof(float));
    }
    const uint32_t crc = static_cast<uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "save_checkpoint: cannot open '" + path + "'");
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    f.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    require(f.good(), "save_checkpoint: write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "load_checkpoint: cannot open '" + path + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
    require(bytes.size() > 4 + sizeof(uint32_t), "checkpoint: truncated");
    uint32_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    bytes.resize(bytes.size() - 4);
    const uint32_t crc = static_cast<uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
    require(crc == stored, "checkpoint: checksum failure");

    size_t pos = 0;
    auto get = [&](void* p, size_t n) {
        require(pos + n <= bytes.size(), "checkpoint: truncated");
        std::memcpy(p, bytes.data() + pos, n);
        pos += n;
    };
    auto get_u16 = [&] { uint16_t v; get(&v, 2); return v; };
    auto get_u32 = [&] { uint32_t v; get(&v, 4); return v; };

    char magic[4];
    get(magic, 4);
    require(std::memcmp(magic, kMagic, 4) == 0, "checkpoint: bad magic");
    require(get_u16() == kVersion, "checkpoint: unsupported version");

    Checkpoint c;
    get(&c.phase, 1);
    const uint32_t cfg_len = get_u32();
    std::string cfg(cfg_len, '\0');
    get(cfg.data(), cfg_len);
    c.config = ModelConfig::from_text(cfg);

    const uint32_t n_tensors = get_u32();
    for (uint32_t i = 0; i < n_tensors; ++i) {
        const uint32_t name_len = get_u32();
        std::string name(name_len, '\0');
        get(name.data(), name_len);
        uint8_t rank;
        get(&rank, 1);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(get_u32());
        tc::Tensor t(shape);
        get(t.ptr(), t.data->size() * sizeof(float));
        c.params.add(name, std::move(t));
    }
    return c;
}

tc::ParamSet extract_prefixed(const tc::ParamSet& all, const std::string& prefix) {
    tc::ParamSet out;
    for (const auto& [name, t] : all)
        if (name.rfind(prefix, 0) == 0) out.add(name, t.clone());
    return out;
}

}  // namespace efn::model

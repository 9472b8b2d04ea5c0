#include "core/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>

#include "core/rng.hpp"

namespace efn::data {

std::optional<int> label_for(dsp::Condition c) {
    if (c == dsp::Condition::Clean) return 0;
    if (c == dsp::Condition::Noisy) return 1;
    return std::nullopt;
}

namespace {

constexpr char kMagic[4] = {'E', 'E', 'G', 'E'};
constexpr uint16_t kVersion = 1;

class ByteWriter {
public:
    template <typename T>
    void put(T v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void put_bytes(const void* p, size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    const std::vector<char>& bytes() const { return buf_; }

private:
    std::vector<char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<char> b) : buf_(std::move(b)) {}
    template <typename T>
    T get() {
        require(pos_ + sizeof(T) <= buf_.size(), "dataset file: truncated");
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void get_bytes(void* p, size_t n) {
        require(pos_ + n <= buf_.size(), "dataset file: truncated");
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    size_t pos() const { return pos_; }
    const std::vector<char>& bytes() const { return buf_; }

private:
    std::vector<char> buf_;
    size_t pos_ = 0;
};

uint32_t crc_of(const void* p, size_t n) {
    return static_cast<uint32_t>(
        ::crc32(0L, static_cast<const Bytef*>(p), static_cast<uInt>(n)));
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<EpochRecord>& records) {
    bool is_map = false;
    uint16_t n_channels = dsp::kNumChannels;
    uint32_t n_cols = 0;
    float fs = 0.0f;
    if (!records.empty()) {
        const auto& r0 = records.front();
        is_map = r0.is_map;
        n_channels = static_cast<uint16_t>(is_map ? r0.map.n_channels : r0.raw.n_channels);
        n_cols = static_cast<uint32_t>(is_map ? r0.map.n_cols : r0.raw.n_samples);
        fs = static_cast<float>(is_map ? 200.0 : r0.raw.fs);
    }

    ByteWriter w;
    w.put_bytes(kMagic, 4);
    w.put<uint16_t>(kVersion);
    w.put<uint16_t>(is_map ? 1 : 0);
    w.put<uint32_t>(static_cast<uint32_t>(records.size()));
    w.put<uint16_t>(n_channels);
    w.put<uint32_t>(n_cols);
    w.put<float>(fs);

    for (const auto& r : records) {
        require(r.is_map == is_map, "write_dataset: mixed raw/map records");
        const auto* payload = r.is_map ? r.map.data.data() : r.raw.data.data();
        const size_t count = r.is_map ? r.map.data.size() : r.raw.data.size();
        require(count == static_cast<size_t>(n_channels) * n_cols,
                "write_dataset: inconsistent epoch shape");
        w.put<uint16_t>(static_cast<uint16_t>(r.subject_id));
        w.put<uint8_t>(static_cast<uint8_t>(r.is_map ? r.map.condition : r.raw.condition));
        w.put<uint8_t>(r.label == kNoLabel ? 255 : static_cast<uint8_t>(r.label));
        w.put_bytes(payload, count * sizeof(float));
    }

    const uint32_t crc = crc_of(w.bytes().data(), w.bytes().size());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "write_dataset: cannot open '" + path + "'");
    f.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    f.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    require(f.good(), "write_dataset: write failed for '" + path + "'");
}

std::vector<EpochRecord> read_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "read_dataset: cannot open '" + path + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
    require(bytes.size() >= 4 + sizeof(uint32_t), "dataset file: truncated");

    const uint32_t stored_crc = [&] {
        uint32_t c;
        std::memcpy(&c, bytes.data() + bytes.size() - sizeof(uint32_t), sizeof(uint32_t));
        return c;
    }();
    bytes.resize(bytes.size() - sizeof(uint32_t));
    require(crc_of(bytes.data(), bytes.size()) == stored_crc,
            "dataset file: checksum failure");

    ByteReader r(std::move(bytes));
    char magic[4];
    r.get_bytes(magic, 4);
    require(std::memcmp(magic, kMagic, 4) == 0, "dataset file: bad magic");
    require(r.get<uint16_t>() == kVersion, "dataset file: unsupported version");
    const bool is_map = (r.get<uint16_t>() & 1) != 0;
    const uint32_t n_epochs = r.get<uint32_t>();
    const uint16_t n_channels = r.get<uint16_t>();
    const uint32_t n_cols = r.get<uint32_t>();
    const float fs = r.get<float>();

    std::vector<EpochRecord> records;
    records.reserve(n_epochs);
    for (uint32_t i = 0; i < n_epochs; ++i) {
        EpochRecord rec;
        rec.subject_id = r.get<uint16_t>();
        const uint8_t cond = r.get<uint8_t>();
        require(cond <= 3, "dataset file: bad condition code");
        const uint8_t lab = r.get<uint8_t>();
        rec.condition = static_cast<dsp::Condition>(cond);
        rec.label = (lab == 255) ? kNoLabel : static_cast<int>(lab);
        rec.is_map = is_map;
        std::vector<float> payload(static_cast<size_t>(n_channels) * n_cols);
        r.get_bytes(payload.data(), payload.size() * sizeof(float));
        if (is_map) {
            rec.map.subject_id = rec.subject_id;
            rec.map.condition = static_cast<dsp::Condition>(cond);
            rec.map.n_channels = n_channels;
            rec.map.n_cols = static_cast<int>(n_cols);
            rec.map.data = std::move(payload);
        } else {
            rec.raw.subject_id = rec.subject_id;
            rec.raw.condition = static_cast<dsp::Condition>(cond);
            rec.raw.n_channels = n_channels;
            rec.raw.n_samples = static_cast<int>(n_cols);
            rec.raw.fs = fs;
            rec.raw.data = std::move(payload);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<SubjectDataset> group_by_subject(std::vector<EpochRecord> records) {
    std::map<int, SubjectDataset> by_id;
    for (auto& r : records) {
        auto& s = by_id[r.subject_id];
        s.subject_id = r.subject_id;
        s.records.push_back(std::move(r));
    }
    std::vector<SubjectDataset> out;
    out.reserve(by_id.size());
    for (auto& [_, s] : by_id) out.push_back(std::move(s));
    return out;
}

std::vector<EpochRecord> flatten(const std::vector<SubjectDataset>& subjects) {
    std::vector<EpochRecord> out;
    for (const auto& s : subjects)
        out.insert(out.end(), s.records.begin(), s.records.end());
    return out;
}

Split split_by_ratio(const SubjectDataset& subject, double ratio, uint64_t seed) {
    require(ratio >= 0.0 && ratio < 1.0, "split_by_ratio: ratio must be in [0,1)");
    Split out;
    for (const auto cond : {dsp::Condition::Clean, dsp::Condition::Noisy}) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < subject.records.size(); ++i) {
            const auto& r = subject.records[i];
            const auto c = r.is_map ? r.map.condition : r.raw.condition;
            if (c == cond && r.labeled()) idx.push_back(i);
        }
        Rng rng(Rng::derive(seed, static_cast<uint64_t>(cond)));
        rng.shuffle(idx);
        const size_t n_train = static_cast<size_t>(ratio * static_cast<double>(idx.size()));
        for (size_t i = 0; i < idx.size(); ++i) {
            auto& dst = (i < n_train) ? out.train : out.test;
            dst.push_back(subject.records[idx[i]]);
        }
    }
    return out;
}

std::vector<Fold> kfold(const std::vector<EpochRecord>& records, int k, uint64_t seed) {
    require(k >= 2, "kfold: k must be >= 2");
    require(static_cast<int>(records.size()) >= k, "kfold: too few records");
    // stratified: deal each label class round-robin across folds
    std::vector<std::vector<size_t>> fold_members(k);
    for (int label : {0, 1, kNoLabel}) {
        std::vector<size_t> idx;
        for (size_t i = 0; i < records.size(); ++i)
            if (records[i].label == label) idx.push_back(i);
        Rng rng(Rng::derive(seed, static_cast<uint64_t>(label + 2)));
        rng.shuffle(idx);
        for (size_t i = 0; i < idx.size(); ++i)
            fold_members[i % k].push_back(idx[i]);
    }
    std::vector<Fold> folds(k);
    for (int f = 0; f < k; ++f) {
        for (int g = 0; g < k; ++g) {
            auto& dst = (g == f) ? folds[f].val : folds[f].train;
            for (size_t i : fold_members[g]) dst.push_back(records[i]);
        }
    }
    return folds;
}

void ReplayBuffer::add_task(const std::vector<ReplaySample>& task_samples, int subject_id) {
    std::vector<size_t> idx(task_samples.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(Rng::derive(seed_, static_cast<uint64_t>(subject_id), 0x5eed));
    rng.shuffle(idx);
    const size_t keep = std::min(static_cast<size_t>(capacity_), idx.size());
    for (size_t i = 0; i < keep; ++i) store_.push_back(task_samples[idx[i]]);
}

std::vector<ReplaySample> ReplayBuffer::sample(int m, uint64_t seed) const {
    require(!store_.empty(), "replay: sampling from empty buffer");
    Rng rng(seed);
    std::vector<ReplaySample> out;
    out.reserve(m);
    if (static_cast<size_t>(m) > store_.size()) {
        for (int i = 0; i < m; ++i)
            out.push_back(store_[rng.below(store_.size())]);
    } else {
        std::vector<size_t> idx(store_.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        for (int i = 0; i < m; ++i) out.push_back(store_[idx[i]]);
    }
    return out;
}

int ReplayBuffer::count_for_subject(int subject_id) const {
    int n = 0;
    for (const auto& s : store_)
        if (s.subject_id == subject_id) ++n;
    return n;
}

}  // namespace efn::data

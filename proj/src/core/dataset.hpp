#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/dsp.hpp"

namespace efn::data {

inline constexpr int kNoLabel = -1;

// One epoch plus its metadata; payload is either a raw segment or a built
// input map, never both.
struct EpochRecord {
    int subject_id = 0;
    dsp::Condition condition = dsp::Condition::Clean;
    int label = kNoLabel;  // 0 = LLE/clean, 1 = HLE/noisy
    bool is_map = false;
    dsp::RawEpoch raw;
    dsp::InputMap map;

    bool labeled() const { return label != kNoLabel; }
};

// 0 for clean, 1 for noisy, none otherwise
std::optional<int> label_for(dsp::Condition c);

struct SubjectDataset {
    int subject_id = 0;
    std::vector<EpochRecord> records;
};

// Ordered per-subject datasets for incremental learning.
using TaskSequence = std::vector<SubjectDataset>;

// ---- EEGE file format -------------------------------------------------
// little-endian: magic "EEGE", version u16 = 1, flags u16 (bit 0: input-map
// payload), n_epochs u32, n_channels u16, n_cols u32, fs_hz f32, then per
// epoch: subject_id u16, condition u8, label u8 (255 = none), payload
// n_channels * n_cols f32 row-major; trailing CRC32 over all preceding bytes.

void write_dataset(const std::string& path, const std::vector<EpochRecord>& records);
std::vector<EpochRecord> read_dataset(const std::string& path);

std::vector<SubjectDataset> group_by_subject(std::vector<EpochRecord> records);
std::vector<EpochRecord> flatten(const std::vector<SubjectDataset>& subjects);

// ---- splits ------------------------------------------------------------

struct Split {
    std::vector<EpochRecord> train, test;
};

// Stratified per condition over the labeled epochs only: floor(ratio * count)
// of each labeled condition go to train, the remainder to test.
Split split_by_ratio(const SubjectDataset& subject, double ratio, uint64_t seed);

struct Fold {
    std::vector<EpochRecord> train, val;
};

// label-stratified k-fold with disjoint, covering validation sets
std::vector<Fold> kfold(const std::vector<EpochRecord>& records, int k, uint64_t seed);

// ---- replay buffer -------------------------------------------------------

struct ReplaySample {
    dsp::InputMap map;
    int label = 0;
    int subject_id = 0;
};

// Bounded store of past-task samples. Only samples from tasks before the
// current one are ever inside.
class ReplayBuffer {
public:
    explicit ReplayBuffer(int capacity_per_subject, uint64_t seed)
        : capacity_(capacity_per_subject), seed_(seed) {}

    // retains up to capacity samples of this task via seeded uniform subsampling
    void add_task(const std::vector<ReplaySample>& task_samples, int subject_id);

    // m draws, uniform without replacement; with replacement when m > size
    std::vector<ReplaySample> sample(int m, uint64_t seed) const;

    size_t size() const { return store_.size(); }
    int count_for_subject(int subject_id) const;

private:
    int capacity_;
    uint64_t seed_;
    std::vector<ReplaySample> store_;
};

}  // namespace efn::data

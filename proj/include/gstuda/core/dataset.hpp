#pragma once

#include "gstuda/core/image_grid.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gstuda {

struct PairedSample {
    ImageGrid input;
    ImageGrid target;
    std::string subject_id;

    PairedSample(ImageGrid in, ImageGrid tgt, std::string subject);
};

struct OracleAccess;

/// Unlabeled target-domain slice. The ground truth, when present, is kept
/// private: training code has no accessor for it. Evaluation and
/// persistence reach it through OracleAccess.
class UnpairedSample {
public:
    UnpairedSample(ImageGrid in, std::string subject, std::optional<ImageGrid> hidden_target = std::nullopt);

    const ImageGrid& input() const noexcept { return input_; }
    const std::string& subject_id() const noexcept { return subject_id_; }
    bool has_hidden_target() const noexcept { return hidden_target_.has_value(); }

private:
    friend struct OracleAccess;
    ImageGrid input_;
    std::string subject_id_;
    std::optional<ImageGrid> hidden_target_;
};

enum class DomainTag { source, target };

const char* to_string(DomainTag tag) noexcept;
DomainTag domain_tag_from_string(const std::string& s);

class Dataset {
public:
    Dataset(std::vector<PairedSample> samples, std::uint64_t seed);
    Dataset(std::vector<UnpairedSample> samples, std::uint64_t seed);

    DomainTag domain_tag() const noexcept;
    std::size_t size() const noexcept;
    bool empty() const noexcept { return size() == 0; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }

    const ImageGrid& input(std::size_t i) const;
    const std::string& subject_id(std::size_t i) const;

    /// Source-domain access. Throws when called on a target dataset.
    const std::vector<PairedSample>& paired() const;
    /// Target-domain access. Throws when called on a source dataset.
    const std::vector<UnpairedSample>& unpaired() const;

    /// Extra key/value notes written into the persisted manifest.
    std::vector<std::pair<std::string, std::string>> notes;

private:
    std::variant<std::vector<PairedSample>, std::vector<UnpairedSample>> samples_;
    std::uint64_t seed_;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
};

/// Deterministically shuffled partition of [0, ds.size()) into batches.
/// The order is a pure function of (ds.seed(), epoch_seed); the last batch
/// may be short.
std::vector<std::vector<std::size_t>> batch_iter(const Dataset& ds, std::size_t batch_size,
                                                 std::uint64_t epoch_seed);

/// Endless batch source cycling through epochs epoch_base, epoch_base+1, ...
class BatchStream {
public:
    BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_base);
    std::vector<std::size_t> next();
    std::uint64_t epoch() const noexcept { return epoch_; }

private:
    const Dataset* ds_;
    std::size_t batch_size_;
    std::uint64_t epoch_;
    std::vector<std::vector<std::size_t>> current_;
    std::size_t cursor_ = 0;
};

} // namespace gstuda

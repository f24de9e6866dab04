#include "gstuda/core/dataset.hpp"

#include "gstuda/core/errors.hpp"
#include "gstuda/core/oracle_access.hpp"
#include "gstuda/core/rng.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace gstuda {

PairedSample::PairedSample(ImageGrid in, ImageGrid tgt, std::string subject)
    : input(std::move(in)), target(std::move(tgt)), subject_id(std::move(subject)) {
    require_same_shape(input, target, "PairedSample");
}

UnpairedSample::UnpairedSample(ImageGrid in, std::string subject, std::optional<ImageGrid> hidden_target)
    : input_(std::move(in)), subject_id_(std::move(subject)), hidden_target_(std::move(hidden_target)) {
    if (hidden_target_) require_same_shape(input_, *hidden_target_, "UnpairedSample");
}

const ImageGrid& OracleAccess::hidden_target(const UnpairedSample& s) {
    if (!s.hidden_target_) throw InvalidArgument("sample '" + s.subject_id_ + "' has no hidden target");
    return *s.hidden_target_;
}

const char* to_string(DomainTag tag) noexcept { return tag == DomainTag::source ? "source" : "target"; }

DomainTag domain_tag_from_string(const std::string& s) {
    if (s == "source") return DomainTag::source;
    if (s == "target") return DomainTag::target;
    throw InvalidArgument("unknown domain tag '" + s + "'");
}

namespace {

template <class Sample>
const ImageGrid& input_of(const Sample& s) {
    if constexpr (std::is_same_v<Sample, PairedSample>) return s.input;
    else return s.input();
}

template <class Sample>
void shape_of(const std::vector<Sample>& samples, std::size_t& h, std::size_t& w) {
    if (samples.empty()) return;
    h = input_of(samples.front()).height();
    w = input_of(samples.front()).width();
    for (const auto& s : samples) {
        const auto& in = input_of(s);
        if (in.height() != h || in.width() != w) throw DimensionMismatch("Dataset: samples differ in shape");
    }
}

} // namespace

Dataset::Dataset(std::vector<PairedSample> samples, std::uint64_t seed) : samples_(std::move(samples)), seed_(seed) {
    shape_of(std::get<0>(samples_), height_, width_);
}

Dataset::Dataset(std::vector<UnpairedSample> samples, std::uint64_t seed)
    : samples_(std::move(samples)), seed_(seed) {
    shape_of(std::get<1>(samples_), height_, width_);
}

DomainTag Dataset::domain_tag() const noexcept {
    return samples_.index() == 0 ? DomainTag::source : DomainTag::target;
}

std::size_t Dataset::size() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, samples_);
}

const ImageGrid& Dataset::input(std::size_t i) const {
    return std::visit([i](const auto& v) -> const ImageGrid& { return input_of(v.at(i)); }, samples_);
}

const std::string& Dataset::subject_id(std::size_t i) const {
    if (samples_.index() == 0) return std::get<0>(samples_).at(i).subject_id;
    return std::get<1>(samples_).at(i).subject_id();
}

const std::vector<PairedSample>& Dataset::paired() const {
    if (samples_.index() != 0) throw InvalidArgument("Dataset: paired() on a target-domain dataset");
    return std::get<0>(samples_);
}

const std::vector<UnpairedSample>& Dataset::unpaired() const {
    if (samples_.index() != 1) throw InvalidArgument("Dataset: unpaired() on a source-domain dataset");
    return std::get<1>(samples_);
}

std::vector<std::vector<std::size_t>> batch_iter(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_seed) {
    if (batch_size == 0) throw InvalidArgument("batch_iter: batch_size must be >= 1");
    if (ds.empty()) throw InvalidArgument("batch_iter: dataset is empty");

    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_indices(order, derive_seed({ds.seed(), epoch_seed}));

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

BatchStream::BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_base)
    : ds_(&ds), batch_size_(batch_size), epoch_(epoch_base) {
    current_ = batch_iter(ds, batch_size, epoch_);
}

std::vector<std::size_t> BatchStream::next() {
    if (cursor_ == current_.size()) {
        ++epoch_;
        current_ = batch_iter(*ds_, batch_size_, epoch_);
        cursor_ = 0;
    }
    return current_[cursor_++];
}

} // namespace gstuda

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gstuda::nn {

/// Named parameter tensors packed into one flat buffer.
template <class T>
class ParamSet {
public:
    struct Entry {
        std::string name;
        std::vector<std::size_t> shape;
        std::size_t offset = 0;
        std::size_t size = 0;
    };

    std::size_t add(std::string name, std::vector<std::size_t> shape) {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        entries_.push_back({std::move(name), std::move(shape), values_.size(), n});
        values_.resize(values_.size() + n, T(0));
        return entries_.back().offset;
    }

    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    T* data() noexcept { return values_.data(); }
    const T* data() const noexcept { return values_.data(); }
    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    const Entry* find(const std::string& name) const noexcept {
        for (const auto& e : entries_)
            if (e.name == name) return &e;
        return nullptr;
    }

private:
    std::vector<Entry> entries_;
    std::vector<T> values_;
};

} // namespace gstuda::nn

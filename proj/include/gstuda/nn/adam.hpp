#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace gstuda::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adaptive-moment optimizer state for one flat parameter buffer.
template <class T>
class Adam {
public:
    Adam() = default;
    Adam(std::size_t size, AdamConfig config) : config_(config), m_(size, 0.0), v_(size, 0.0) {}

    void step(std::span<T> params, std::span<const T> grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
        const double lr = config_.learning_rate * std::sqrt(c2) / c1;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = static_cast<double>(grad[i]);
            m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
            v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
            params[i] -= static_cast<T>(lr * m_[i] / (std::sqrt(v_[i]) + config_.epsilon * std::sqrt(c2)));
        }
    }

    std::size_t steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return config_; }

private:
    AdamConfig config_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

} // namespace gstuda::nn

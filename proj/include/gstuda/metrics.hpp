#pragma once

#include "gstuda/core/dataset.hpp"
#include "gstuda/core/image_grid.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gstuda {

inline constexpr double kPsnrCap = 100.0;
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean absolute error per pixel.
double l1(const ImageGrid& pred, const ImageGrid& truth);

/// Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5).
/// Both images are mapped to [0, 1] with the truth's range metadata, so
/// C1 = 0.01^2, C2 = 0.03^2 in those units.
double ssim(const ImageGrid& pred, const ImageGrid& truth);

/// 10 log10(L^2 / MSE) with L the truth's range span; kPsnrCap when MSE = 0.
double psnr(const ImageGrid& pred, const ImageGrid& truth);

struct TTestResult {
    double t = 0.0;
    double p = 0.5;
    std::size_t df = 0;
    /// Differences had zero variance; t is 0 or +-inf and p is 0.5, 0 or 1.
    bool degenerate = false;
};

/// Paired t-test of H1: mean(a - b) > 0.
TTestResult paired_ttest_one_tailed(const std::vector<double>& a, const std::vector<double>& b);

struct SampleMetrics {
    double l1 = 0.0;
    double ssim = 0.0;
    double psnr = 0.0;
};

struct MethodMetrics {
    std::vector<SampleMetrics> per_sample; // index-aligned with the target dataset
    SampleMetrics mean;
};

enum class Metric { l1, ssim, psnr };
const char* to_string(Metric m) noexcept;
inline constexpr Metric kAllMetrics[] = {Metric::l1, Metric::ssim, Metric::psnr};
double value_of(const SampleMetrics& s, Metric m) noexcept;
/// true when smaller is better.
inline bool lower_is_better(Metric m) noexcept { return m == Metric::l1; }

struct MetricsReport {
    std::vector<std::string> order; // row order
    std::map<std::string, MethodMetrics> per_method;
    std::string fingerprint;
};

/// Scores predictions against the dataset's hidden targets. Throws when a
/// slice has no hidden target or a prediction list has the wrong length.
MethodMetrics score(const std::vector<ImageGrid>& predictions, const Dataset& target);

MetricsReport evaluate(const std::vector<std::pair<std::string, std::vector<ImageGrid>>>& predictions,
                       const Dataset& target, std::string fingerprint = {});

/// Mean and sample SD over repeated runs (seeds) of each method.
struct AggregateRow {
    std::string method;
    Metric metric;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t runs = 0;
};

struct SignificanceRow {
    std::string reference;
    std::string other;
    Metric metric;
    TTestResult test;
    std::size_t n = 0;
};

/// reports[i] is one seed. Rows follow method_order.
std::vector<AggregateRow> aggregate(const std::vector<MetricsReport>& reports,
                                    const std::vector<std::string>& method_order);

/// One-tailed paired tests of reference against every other method, per
/// metric, oriented so that H1 is "reference is better". Per-slice values of
/// all seeds are pooled (pairs stay aligned on seed and slice).
std::vector<SignificanceRow> significance(const std::vector<MetricsReport>& reports, const std::string& reference,
                                          const std::vector<std::string>& method_order);

void write_report_csv(const std::filesystem::path& file, const std::vector<AggregateRow>& rows);
void write_report_md(const std::filesystem::path& file, const std::vector<AggregateRow>& rows,
                     const std::vector<std::string>& method_order);
void write_significance_csv(const std::filesystem::path& file, const std::vector<SignificanceRow>& rows);

} // namespace gstuda

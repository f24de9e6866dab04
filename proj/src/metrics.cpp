#include "gstuda/metrics.hpp"

#include "gstuda/core/errors.hpp"
#include "gstuda/core/oracle_access.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#include <cmath>
#include <limits>

namespace gstuda {

double l1(const ImageGrid& pred, const ImageGrid& truth) {
    require_same_shape(pred, truth, "l1");
    double s = 0.0;
    for (std::size_t n = 0; n < pred.size(); ++n) s += std::abs(pred[n] - truth[n]);
    return s / static_cast<double>(pred.size());
}

double psnr(const ImageGrid& pred, const ImageGrid& truth) {
    require_same_shape(pred, truth, "psnr");
    double mse = 0.0;
    for (std::size_t n = 0; n < pred.size(); ++n) mse += (pred[n] - truth[n]) * (pred[n] - truth[n]);
    mse /= static_cast<double>(pred.size());
    if (mse == 0.0) return kPsnrCap;
    const double L = truth.range_span();
    return std::min(kPsnrCap, 10.0 * std::log10(L * L / mse));
}

namespace {

std::vector<double> gaussian_window() {
    std::vector<double> w(kSsimWindow);
    const double c = (static_cast<double>(kSsimWindow) - 1.0) / 2.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < kSsimWindow; ++i) {
        const double d = static_cast<double>(i) - c;
        w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += w[i];
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Valid-mode separable filter: rows first, then columns.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t H, std::size_t W,
                                 const std::vector<double>& w) {
    const std::size_t k = w.size(), oh = H - k + 1, ow = W - k + 1;
    std::vector<double> tmp(H * ow, 0.0), out(oh * ow, 0.0);
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += w[j] * img[r * W + c + j];
            tmp[r * ow + c] = s;
        }
    for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < k; ++i) s += w[i] * tmp[(r + i) * ow + c];
            out[r * ow + c] = s;
        }
    return out;
}

} // namespace

double ssim(const ImageGrid& pred, const ImageGrid& truth) {
    require_same_shape(pred, truth, "ssim");
    const std::size_t H = truth.height(), W = truth.width();
    if (H < kSsimWindow || W < kSsimWindow) throw InvalidArgument("ssim: image smaller than the 11x11 window");
    const double lo = truth.range_lo(), span = truth.range_span();
    const std::size_t N = truth.size();
    std::vector<double> x(N), y(N), xx(N), yy(N), xy(N);
    for (std::size_t n = 0; n < N; ++n) {
        x[n] = (pred[n] - lo) / span;
        y[n] = (truth[n] - lo) / span;
        xx[n] = x[n] * x[n];
        yy[n] = y[n] * y[n];
        xy[n] = x[n] * y[n];
    }
    const auto w = gaussian_window();
    const auto mx = filter_valid(x, H, W, w), my = filter_valid(y, H, W, w);
    const auto sxx = filter_valid(xx, H, W, w), syy = filter_valid(yy, H, W, w), sxy = filter_valid(xy, H, W, w);
    constexpr double C1 = 0.01 * 0.01, C2 = 0.03 * 0.03;
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + C1) * (2.0 * cxy + C2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + C1) * (vx + vy + C2));
    }
    return total / static_cast<double>(mx.size());
}

TTestResult paired_ttest_one_tailed(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("paired_ttest_one_tailed: arrays differ in length");
    if (a.size() < 2) throw InvalidArgument("paired_ttest_one_tailed: need at least two pairs");
    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    TTestResult r;
    r.df = n - 1;
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
        r.degenerate = true;
        if (mean > 0.0) {
            r.t = std::numeric_limits<double>::infinity();
            r.p = 0.0;
        } else if (mean < 0.0) {
            r.t = -std::numeric_limits<double>::infinity();
            r.p = 1.0;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const boost::math::students_t dist(static_cast<double>(r.df));
    r.p = boost::math::cdf(boost::math::complement(dist, r.t));
    return r;
}

const char* to_string(Metric m) noexcept {
    switch (m) {
    case Metric::l1: return "l1";
    case Metric::ssim: return "ssim";
    case Metric::psnr: return "psnr";
    }
    return "?";
}

double value_of(const SampleMetrics& s, Metric m) noexcept {
    switch (m) {
    case Metric::l1: return s.l1;
    case Metric::ssim: return s.ssim;
    case Metric::psnr: return s.psnr;
    }
    return 0.0;
}

MethodMetrics score(const std::vector<ImageGrid>& predictions, const Dataset& target) {
    if (target.domain_tag() != DomainTag::target) throw InvalidArgument("score: expected a target dataset");
    const auto& samples = target.unpaired();
    if (predictions.size() != samples.size())
        throw DimensionMismatch("score: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(samples.size()) + " slices");
    MethodMetrics mm;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ImageGrid& truth = OracleAccess::hidden_target(samples[i]);
        SampleMetrics s{l1(predictions[i], truth), ssim(predictions[i], truth), psnr(predictions[i], truth)};
        mm.mean.l1 += s.l1;
        mm.mean.ssim += s.ssim;
        mm.mean.psnr += s.psnr;
        mm.per_sample.push_back(s);
    }
    const double n = static_cast<double>(samples.size());
    mm.mean.l1 /= n;
    mm.mean.ssim /= n;
    mm.mean.psnr /= n;
    return mm;
}

MetricsReport evaluate(const std::vector<std::pair<std::string, std::vector<ImageGrid>>>& predictions,
                       const Dataset& target, std::string fingerprint) {
    MetricsReport rep;
    rep.fingerprint = std::move(fingerprint);
    for (const auto& [name, preds] : predictions) {
        if (rep.per_method.count(name)) throw InvalidArgument("evaluate: duplicate method '" + name + "'");
        rep.order.push_back(name);
        rep.per_method.emplace(name, score(preds, target));
    }
    return rep;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsReport>& reports,
                                    const std::vector<std::string>& method_order) {
    std::vector<AggregateRow> rows;
    for (const auto& method : method_order)
        for (Metric m : kAllMetrics) {
            std::vector<double> v;
            for (const auto& r : reports) {
                auto it = r.per_method.find(method);
                if (it != r.per_method.end()) v.push_back(value_of(it->second.mean, m));
            }
            if (v.empty()) continue;
            AggregateRow row{method, m, 0.0, 0.0, v.size()};
            for (double x : v) row.mean += x;
            row.mean /= static_cast<double>(v.size());
            if (v.size() > 1) {
                double ss = 0.0;
                for (double x : v) ss += (x - row.mean) * (x - row.mean);
                row.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            }
            rows.push_back(row);
        }
    return rows;
}

std::vector<SignificanceRow> significance(const std::vector<MetricsReport>& reports, const std::string& reference,
                                          const std::vector<std::string>& method_order) {
    std::vector<SignificanceRow> rows;
    for (const auto& other : method_order) {
        if (other == reference) continue;
        for (Metric m : kAllMetrics) {
            std::vector<double> ref, oth;
            for (const auto& r : reports) {
                auto a = r.per_method.find(reference), b = r.per_method.find(other);
                if (a == r.per_method.end() || b == r.per_method.end()) continue;
                for (std::size_t i = 0; i < a->second.per_sample.size(); ++i) {
                    ref.push_back(value_of(a->second.per_sample[i], m));
                    oth.push_back(value_of(b->second.per_sample[i], m));
                }
            }
            if (ref.size() < 2) continue;
            const auto t = lower_is_better(m) ? paired_ttest_one_tailed(oth, ref) : paired_ttest_one_tailed(ref, oth);
            rows.push_back({reference, other, m, t, ref.size()});
        }
    }
    return rows;
}

void write_report_csv(const std::filesystem::path& file, const std::vector<AggregateRow>& rows) {
    auto out = fmt::output_file(file.string());
    out.print("method,metric,mean,sd,runs\n");
    for (const auto& r : rows) out.print("{},{},{:.6f},{:.6f},{}\n", r.method, to_string(r.metric), r.mean, r.sd, r.runs);
}

void write_report_md(const std::filesystem::path& file, const std::vector<AggregateRow>& rows,
                     const std::vector<std::string>& method_order) {
    auto out = fmt::output_file(file.string());
    out.print("| Method | L1 (lower better) | SSIM | PSNR (dB) |\n|---|---|---|---|\n");
    for (const auto& method : method_order) {
        std::string cells[3];
        bool any = false;
        for (const auto& r : rows) {
            if (r.method != method) continue;
            any = true;
            const int col = r.metric == Metric::l1 ? 0 : r.metric == Metric::ssim ? 1 : 2;
            cells[col] = r.metric == Metric::ssim ? fmt::format("{:.4f} ± {:.4f}", r.mean, r.sd)
                                                  : fmt::format("{:.2f} ± {:.2f}", r.mean, r.sd);
        }
        if (any) out.print("| {} | {} | {} | {} |\n", method, cells[0], cells[1], cells[2]);
    }
}

void write_significance_csv(const std::filesystem::path& file, const std::vector<SignificanceRow>& rows) {
    auto out = fmt::output_file(file.string());
    out.print("reference,other,metric,n,t,p,degenerate\n");
    for (const auto& r : rows)
        out.print("{},{},{},{},{:.6g},{:.6g},{}\n", r.reference, r.other, to_string(r.metric), r.n, r.test.t, r.test.p,
                  r.test.degenerate ? 1 : 0);
}

} // namespace gstuda

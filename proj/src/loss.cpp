#include "gstuda/loss.hpp"

namespace gstuda {

double source_loss(const ImageGrid& pred, const ImageGrid& label) {
    require_same_shape(pred, label, "source_loss");
    return source_term(pred.values(), label.values(), 1.0 / static_cast<double>(pred.size()));
}

TargetLoss target_loss(const ImageGrid& pred, const ImageGrid& logvar, const ImageGrid& pseudo,
                       const ReliabilityMask& mask, double beta, bool mask_outside_norm) {
    require_same_shape(pred, logvar, "target_loss");
    require_same_shape(pred, pseudo, "target_loss");
    require_same_shape(pred, mask.weights, "target_loss");
    LossOptions opt;
    opt.beta = beta;
    opt.mask_outside_norm = mask_outside_norm;
    const auto t = target_term(pred.values(), logvar.values(), pseudo.values(), mask.weights.values(), opt,
                               1.0 / static_cast<double>(pred.size()));
    return {t.data + beta * t.logvar, t.data, t.logvar};
}

LossBreakdown gst_total(std::span<const SourceItem> source, std::span<const TargetItem> target,
                        const LossOptions& options) {
    if (source.empty() && target.empty()) throw InvalidArgument("gst_total: both batches are empty");
    if (source.empty() && !options.allow_empty_source)
        throw InvalidArgument("gst_total: empty source batch requires allow_empty_source");
    if (target.empty() && !options.allow_empty_target)
        throw InvalidArgument("gst_total: empty target batch requires allow_empty_target");

    LossBreakdown b;
    b.beta = options.beta;
    for (const auto& s : source) {
        require_same_shape(*s.pred, *s.label, "gst_total source");
        const double scale = 1.0 / static_cast<double>(source.size() * s.pred->size());
        const double L = options.intensity_scale;
        b.source_mse += source_term(s.pred->values(), s.label->values(), scale * L * L);
    }
    for (const auto& t : target) {
        require_same_shape(*t.pred, *t.logvar, "gst_total target");
        require_same_shape(*t.pred, *t.pseudo, "gst_total target");
        require_same_shape(*t.pred, t.mask->weights, "gst_total target");
        const double scale = 1.0 / static_cast<double>(target.size() * t.pred->size());
        const auto v = target_term(t.pred->values(), t.logvar->values(), t.pseudo->values(), t.mask->weights.values(),
                                   options, scale);
        b.target_data_term += v.data;
        b.target_logvar_term += v.logvar;
    }
    b.finalize();
    return b;
}

} // namespace gstuda

#include "gstuda/trainer.hpp"

#include "gstuda/core/errors.hpp"
#include "gstuda/core/rng.hpp"
#include "gstuda/kernels/fp_mode.hpp"
#include "gstuda/nn/checkpoint.hpp"
#include "gstuda/objective.hpp"
#include "gstuda/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace gstuda {

const char* to_string(MaskMode m) noexcept {
    switch (m) {
    case MaskMode::binary: return "binary";
    case MaskMode::continuous: return "continuous";
    case MaskMode::attentive: return "attentive";
    case MaskMode::attentive_binary: return "attentive_binary";
    }
    return "?";
}

const char* to_string(UncertaintyMode m) noexcept {
    switch (m) {
    case UncertaintyMode::both: return "both";
    case UncertaintyMode::epistemic_only: return "epistemic_only";
    case UncertaintyMode::aleatoric_only: return "aleatoric_only";
    }
    return "?";
}

MaskMode mask_mode_from_string(const std::string& s) {
    for (auto m : {MaskMode::binary, MaskMode::continuous, MaskMode::attentive, MaskMode::attentive_binary})
        if (s == to_string(m)) return m;
    throw InvalidArgument("unknown mask mode '" + s + "'");
}

UncertaintyMode uncertainty_mode_from_string(const std::string& s) {
    for (auto m : {UncertaintyMode::both, UncertaintyMode::epistemic_only, UncertaintyMode::aleatoric_only})
        if (s == to_string(m)) return m;
    throw InvalidArgument("unknown uncertainty mode '" + s + "'");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
    if (!(momentum_beta1 >= 0.0 && momentum_beta1 < 1.0)) throw InvalidArgument("momentum_beta1 must be in [0,1)");
    if (!(momentum_beta2 >= 0.0 && momentum_beta2 < 1.0)) throw InvalidArgument("momentum_beta2 must be in [0,1)");
    if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
    if (K < 2) throw InvalidArgument("K must be >= 2");
    if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
    if (!(attention_floor_lambda >= 0.0)) throw InvalidArgument("attention_floor_lambda must be nonnegative");
    if (!(attention_floor_target >= 0.0 && attention_floor_target <= 1.0))
        throw InvalidArgument("attention_floor_target must be in [0,1]");
    if (!(uncertainty_scale >= 0.0)) throw InvalidArgument("uncertainty_scale must be nonnegative");
    if (!(intensity_scale >= 0.0)) throw InvalidArgument("intensity_scale must be nonnegative");
    if (threads == 0) throw InvalidArgument("threads must be positive");
    RhoSchedule{rho_start, rho_end, 1}.validate();
    arch.unet().validate();
    attention_arch.unet().validate();
}

nn::AdamConfig TrainConfig::adam() const { return {learning_rate, momentum_beta1, momentum_beta2, 1e-8}; }

std::string TrainConfig::describe() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "train.learning_rate=" << learning_rate << '\n'
       << "train.momentum_beta1=" << momentum_beta1 << '\n'
       << "train.momentum_beta2=" << momentum_beta2 << '\n'
       << "train.batch_size=" << batch_size << '\n'
       << "train.K=" << K << '\n'
       << "train.beta=" << beta << '\n'
       << "train.mask_mode=" << to_string(mask_mode) << '\n'
       << "train.uncertainty_mode=" << to_string(uncertainty_mode) << '\n'
       << "train.rounds=" << rounds << '\n'
       << "train.iters_per_round=" << iters_per_round << '\n'
       << "train.pretrain_epochs=" << pretrain_epochs << '\n'
       << "train.seed=" << seed << '\n'
       << "train.depth=" << arch.depth << '\n'
       << "train.base_channels=" << arch.base_channels << '\n'
       << "train.dropout_rate=" << arch.dropout_rate << '\n'
       << "train.attention_depth=" << attention_arch.depth << '\n'
       << "train.attention_base_channels=" << attention_arch.base_channels << '\n'
       << "train.rho_start=" << rho_start << '\n'
       << "train.rho_end=" << rho_end << '\n'
       << "train.rho_per_round=" << (rho_per_round ? "true" : "false") << '\n'
       << "train.mask_outside_norm=" << (mask_outside_norm ? "true" : "false") << '\n'
       << "train.attention_floor_lambda=" << attention_floor_lambda << '\n'
       << "train.attention_floor_target=" << attention_floor_target << '\n'
       << "train.uncertainty_scale=" << uncertainty_scale << '\n'
       << "train.intensity_scale=" << intensity_scale << '\n'
       << "train.probe_slice=" << probe_slice << '\n'
       << "train.holdout_probe=" << (holdout_probe ? "true" : "false") << '\n'
       << "train.threads=" << threads << '\n';
    return os.str();
}

namespace {

std::vector<ImageGrid> normalized_inputs(const Dataset& ds) {
    std::vector<ImageGrid> out;
    out.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(ds.input(i).normalized());
    return out;
}

std::vector<ImageGrid> normalized_labels(const Dataset& ds) {
    std::vector<ImageGrid> out;
    for (const auto& s : ds.paired()) out.push_back(s.target.normalized());
    return out;
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            const kernels::ScopedFlushDenormals ftz;
            try {
                for (std::size_t i = t; i < n; i += threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    pool.clear();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double loss_units(const TrainConfig& cfg, const Dataset& ds) {
    if (cfg.intensity_scale > 0.0) return cfg.intensity_scale;
    return ds.size() > 0 ? ds.input(0).range_span() : 1.0;
}

bool all_finite(std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

} // namespace

PretrainResult pretrain(TranslatorModel& model, const Dataset& source, const TrainConfig& cfg, const TrainerIo& io) {
    cfg.validate();
    if (source.domain_tag() != DomainTag::source) throw InvalidArgument("pretrain: source dataset must be paired");
    const kernels::ScopedFlushDenormals ftz;
    PretrainResult result;
    if (cfg.pretrain_epochs == 0) return result;

    const auto inputs = normalized_inputs(source);
    const auto labels = normalized_labels(source);
    auto& params = model.net().params();
    nn::Adam<float> opt(params.size(), cfg.adam());
    std::vector<float> grad(params.size());
    std::vector<float> last_good(params.values().begin(), params.values().end());

    ObjectiveOptions opt_obj;
    opt_obj.loss.beta = cfg.beta;
    opt_obj.loss.intensity_scale = loss_units(cfg, source);
    opt_obj.calibrate_source_logvar = true;
    opt_obj.stochastic = true;

    for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        const auto batches = batch_iter(source, cfg.batch_size, derive_seed({cfg.seed, 0x7072, epoch}));
        double sum = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            std::vector<SourceExample> items;
            for (auto i : batches[b]) items.push_back({&inputs[i], &labels[i]});
            std::fill(grad.begin(), grad.end(), 0.0f);
            opt_obj.dropout_seed = derive_seed({cfg.seed, 0x7072, epoch, b});
            LossBreakdown lb;
            try {
                lb = gst_objective<float>(model, nullptr, items, {}, opt_obj, grad, {});
            } catch (const NonFiniteLoss&) {
                std::copy(last_good.begin(), last_good.end(), params.values().begin());
                throw;
            }
            opt.step(params.values(), grad);
            if (!all_finite(params.values())) {
                std::copy(last_good.begin(), last_good.end(), params.values().begin());
                throw NonFiniteLoss("pretrain.parameters");
            }
            sum += lb.source_mse;
        }
        std::copy(params.values().begin(), params.values().end(), last_good.begin());
        result.epoch_loss.push_back(sum / static_cast<double>(batches.size()));
    }
    if (io.enabled()) {
        std::filesystem::create_directories(io.dir);
        save_checkpoint(io.dir / "pretrain.ckpt", model);
        std::ofstream log(io.dir / "pretrain_log.csv");
        log << "epoch,source_mse\n" << std::setprecision(10);
        for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) log << e << ',' << result.epoch_loss[e] << '\n';
    }
    return result;
}

AdaptationState make_state(const TranslatorModel& model, const AttentionModel* attention, const TrainConfig& cfg) {
    AdaptationState s;
    s.optimizer_w = nn::Adam<float>(model.net().params().size(), cfg.adam());
    if (attention) s.optimizer_theta = nn::Adam<float>(attention->net().params().size(), cfg.adam());
    return s;
}

double current_rho(const TrainConfig& cfg, const AdaptationState& state) {
    if (cfg.rho_per_round) {
        if (cfg.rounds <= 1) return cfg.rho_start;
        return rho_at({cfg.rho_start, cfg.rho_end, cfg.rounds - 1}, state.round);
    }
    const std::size_t total = std::max<std::size_t>(1, cfg.rounds * cfg.iters_per_round);
    return rho_at({cfg.rho_start, cfg.rho_end, total}, state.iter);
}

void step1_generate(const TranslatorModel& model, const AttentionModel* attention, const Dataset& target,
                    const TrainConfig& cfg, AdaptationState& state) {
    cfg.validate();
    if (uses_attention(cfg.mask_mode) && attention == nullptr)
        throw InvalidArgument("step1_generate: mask mode requires an attention model");
    const std::size_t T = target.size();
    const auto inputs = normalized_inputs(target);
    const double L = loss_units(cfg, target);
    std::vector<UncertaintyMaps> maps(T);
    parallel_for(T, cfg.threads, [&](std::size_t i) {
        const auto ens = mc_ensemble(model, inputs[i], cfg.K, derive_seed({cfg.seed, 0x5731, state.round, i}));
        ImageGrid ue = epistemic(ens);
        for (auto& v : ue.values()) v *= L * L; // same units as sigma^2
        ImageGrid ua = aleatoric(ens);
        if (cfg.uncertainty_mode == UncertaintyMode::epistemic_only) ua = ImageGrid(ua.height(), ua.width(), ua.range_lo(), ua.range_hi());
        if (cfg.uncertainty_mode == UncertaintyMode::aleatoric_only) ue = ImageGrid(ue.height(), ue.width(), ue.range_lo(), ue.range_hi());
        maps[i] = total(ue, ua, ensemble_mean(ens));
    });

    double sum_u = 0.0;
    std::size_t count = 0;
    for (const auto& m : maps) {
        for (double v : m.total.values()) sum_u += v;
        count += m.total.size();
    }
    const double mean_u = sum_u / static_cast<double>(count);
    if (state.uncertainty_scale <= 0.0)
        state.uncertainty_scale = cfg.uncertainty_scale > 0.0 ? cfg.uncertainty_scale : (mean_u > 0.0 ? mean_u : 1.0);

    const double rho = current_rho(cfg, state);
    state.pseudo_labels.clear();
    state.base_masks.clear();
    state.masks.clear();
    state.uncertainty.clear();
    double mask_sum = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
        const ImageGrid& u = maps[i].total;
        ReliabilityMask base;
        if (cfg.mask_mode == MaskMode::binary || cfg.mask_mode == MaskMode::attentive_binary) {
            base = binary_mask(u, rho);
        } else {
            ImageGrid scaled = u;
            for (auto& v : scaled.values()) v /= state.uncertainty_scale;
            base = continuous_mask(scaled);
        }
        ReliabilityMask eff = uses_attention(cfg.mask_mode) ? attentive_mask(attention->attend(inputs[i]), base) : base;
        mask_sum += eff.weights.mean();
        state.pseudo_labels.push_back(maps[i].mean_prediction);
        state.base_masks.push_back(std::move(base));
        state.masks.push_back(std::move(eff));
        state.uncertainty.push_back(u);
    }
    RoundRecord rec;
    rec.round = state.round;
    rec.rho = rho;
    rec.mean_u = mean_u;
    rec.probe_u = cfg.probe_slice < T ? maps[cfg.probe_slice].total.mean() : 0.0;
    rec.mean_mask = mask_sum / static_cast<double>(T);
    state.history.push_back(rec);
}

void step2_retrain(TranslatorModel& model, AttentionModel* attention, const Dataset& source, const Dataset& target,
                   const TrainConfig& cfg, AdaptationState& state) {
    cfg.validate();
    const bool attend = uses_attention(cfg.mask_mode);
    if (attend && attention == nullptr) throw InvalidArgument("step2_retrain: mask mode requires an attention model");
    if (state.pseudo_labels.size() != target.size())
        throw InvalidArgument("step2_retrain: state holds no pseudo labels for this target set");

    const auto src_in = normalized_inputs(source);
    const auto src_lab = normalized_labels(source);
    const auto tgt_in = normalized_inputs(target);

    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < target.size(); ++i)
        if (!(cfg.holdout_probe && i == cfg.probe_slice && target.size() > 1)) train_idx.push_back(i);

    auto& pw = model.net().params();
    std::vector<float> gw(pw.size()), gt(attend ? attention->net().params().size() : 0);
    ObjectiveOptions oo;
    oo.loss.beta = cfg.beta;
    oo.loss.intensity_scale = loss_units(cfg, source);
    oo.loss.mask_outside_norm = cfg.mask_outside_norm;
    oo.use_attention = attend;
    oo.attention_floor_lambda = cfg.attention_floor_lambda;
    oo.attention_floor_target = cfg.attention_floor_target;

    BatchStream src_stream(source, cfg.batch_size, derive_seed({cfg.seed, 0x5332, state.round}));
    std::uint64_t shuffles = 0;
    const double rho = state.history.empty() ? current_rho(cfg, state) : state.history.back().rho;
    const double mean_u = state.history.empty() ? 0.0 : state.history.back().mean_u;

    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    for (std::size_t it = 0; it < cfg.iters_per_round; ++it) {
        std::vector<SourceExample> s_items;
        for (auto i : src_stream.next()) s_items.push_back({&src_in[i], &src_lab[i]});
        std::vector<TargetExample> t_items;
        const std::size_t tb = std::min(cfg.batch_size, train_idx.size());
        for (std::size_t k = 0; k < tb; ++k) {
            if (cursor == order.size()) {
                order = train_idx;
                shuffle_indices(order, derive_seed({cfg.seed, 0x5454, state.round, shuffles++}));
                cursor = 0;
            }
            const std::size_t i = order[cursor++];
            t_items.push_back({&tgt_in[i], &state.pseudo_labels[i], &state.base_masks[i].weights});
        }
        std::fill(gw.begin(), gw.end(), 0.0f);
        std::fill(gt.begin(), gt.end(), 0.0f);
        const LossBreakdown lb = gst_objective<float>(model, attention, s_items, t_items, oo, gw, gt);
        state.optimizer_w.step(pw.values(), gw);
        if (attend) state.optimizer_theta.step(attention->net().params().values(), gt);
        if (!all_finite(pw.values())) throw NonFiniteLoss("step2.parameters");
        state.log.push_back({state.iter, lb, rho, mean_u});
        ++state.iter;
    }
}

AdaptationState adapt(TranslatorModel& model, AttentionModel* attention, const Dataset& source, const Dataset& target,
                      const TrainConfig& cfg, const TrainerIo& io) {
    cfg.validate();
    if (target.domain_tag() != DomainTag::target) throw InvalidArgument("adapt: target dataset must be unpaired");
    if (uses_attention(cfg.mask_mode) && attention == nullptr)
        throw InvalidArgument("adapt: mask mode requires an attention model");
    AttentionModel* attn = uses_attention(cfg.mask_mode) ? attention : nullptr;
    const kernels::ScopedFlushDenormals ftz;
    AdaptationState state = make_state(model, attn, cfg);
    if (cfg.rounds == 0) return state;
    if (io.enabled()) std::filesystem::create_directories(io.dir);

    for (std::size_t r = 0; r < cfg.rounds; ++r) {
        state.round = r;
        step1_generate(model, attn, target, cfg, state);
        step2_retrain(model, attn, source, target, cfg, state);
        if (io.enabled()) {
            save_checkpoint(io.dir / ("round_" + std::to_string(r) + ".ckpt"), model);
            if (attn) save_checkpoint(io.dir / ("round_" + std::to_string(r) + ".attn.ckpt"), *attn);
        }
    }
    // Closing measurement with the adapted weights; masks are not used afterwards.
    state.round = cfg.rounds;
    AdaptationState probe = make_state(model, nullptr, cfg);
    probe.round = cfg.rounds;
    probe.iter = state.iter;
    probe.uncertainty_scale = state.uncertainty_scale;
    TrainConfig measure = cfg;
    if (uses_attention(measure.mask_mode))
        measure.mask_mode = measure.mask_mode == MaskMode::attentive ? MaskMode::continuous : MaskMode::binary;
    measure.rho_per_round = false;
    probe.iter = std::min(probe.iter, std::max<std::size_t>(1, cfg.rounds * cfg.iters_per_round));
    step1_generate(model, nullptr, target, measure, probe);
    state.history.push_back(probe.history.back());

    if (io.enabled()) {
        write_training_log(io.dir / "train_log.csv", state.log);
        std::ofstream h(io.dir / "uncertainty_history.csv");
        h << "round,rho,mean_u,probe_u,mean_mask\n" << std::setprecision(10);
        for (const auto& rec : state.history)
            h << rec.round << ',' << rec.rho << ',' << rec.mean_u << ',' << rec.probe_u << ',' << rec.mean_mask << '\n';
        std::ofstream m(io.dir / "adaptation_manifest.txt");
        m << cfg.describe() << "uncertainty_scale_resolved=" << std::setprecision(17) << state.uncertainty_scale << '\n';
    }
    return state;
}

void train_supervised(TranslatorModel& model, const Dataset& source, const Dataset& target_paired,
                      const TrainConfig& cfg) {
    cfg.validate();
    const kernels::ScopedFlushDenormals ftz;
    const auto src_in = normalized_inputs(source);
    const auto src_lab = normalized_labels(source);
    const auto tgt_in = normalized_inputs(target_paired);
    const auto tgt_lab = normalized_labels(target_paired);
    auto& pw = model.net().params();
    nn::Adam<float> opt(pw.size(), cfg.adam());
    std::vector<float> gw(pw.size());
    ObjectiveOptions oo;
    oo.loss.beta = cfg.beta;
    oo.loss.intensity_scale = loss_units(cfg, source);
    BatchStream s(source, cfg.batch_size, derive_seed({cfg.seed, 0x5355, 1}));
    BatchStream t(target_paired, cfg.batch_size, derive_seed({cfg.seed, 0x5355, 2}));
    for (std::size_t it = 0; it < cfg.rounds * cfg.iters_per_round; ++it) {
        std::vector<SourceExample> items;
        for (auto i : s.next()) items.push_back({&src_in[i], &src_lab[i]});
        for (auto i : t.next()) items.push_back({&tgt_in[i], &tgt_lab[i]});
        std::fill(gw.begin(), gw.end(), 0.0f);
        gst_objective<float>(model, nullptr, items, {}, oo, gw, {});
        opt.step(pw.values(), gw);
        if (!all_finite(pw.values())) throw NonFiniteLoss("supervised.parameters");
    }
}

ImageGrid predict(const TranslatorModel& model, const ImageGrid& x) {
    const auto out = model.forward(x.normalized(), false, 0);
    std::vector<double> v(out.mean.values().begin(), out.mean.values().end());
    for (auto& e : v) e = x.range_lo() + e * x.range_span();
    return ImageGrid(x.height(), x.width(), std::move(v), x.range_lo(), x.range_hi());
}

void write_training_log(const std::filesystem::path& file, const std::vector<LogRow>& log) {
    std::ofstream os(file);
    if (!os) throw IoError("cannot write " + file.string());
    os << "iter,source_mse,target_data_term,target_logvar_term,total,rho,mean_u\n" << std::setprecision(10);
    for (const auto& r : log)
        os << r.iter << ',' << r.loss.source_mse << ',' << r.loss.target_data_term << ',' << r.loss.target_logvar_term
           << ',' << r.loss.total << ',' << r.rho << ',' << r.mean_u << '\n';
}

} // namespace gstuda

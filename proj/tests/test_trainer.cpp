#include "gstuda/core/errors.hpp"
#include "gstuda/nn/checkpoint.hpp"
#include "gstuda/objective.hpp"
#include "gstuda/synth/synth.hpp"
#include "gstuda/trainer.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

using namespace gstuda;

namespace {

synth::Task tiny_task() {
    synth::TaskSpec spec;
    spec.phantom.height = 16;
    spec.phantom.width = 16;
    spec.n_source_subjects = 2;
    spec.source_slices_per_subject = 3;
    spec.target_slices_per_subject = 5;
    spec.target_shift.gamma = 1.3;
    spec.target_shift.noise_sigma = 4.0;
    spec.target_shift.seed = 3;
    return synth::build_task(spec);
}

TrainConfig tiny_config() {
    TrainConfig c;
    c.arch.depth = 2;
    c.arch.base_channels = 4;
    c.attention_arch.depth = 2;
    c.attention_arch.base_channels = 2;
    c.batch_size = 4;
    c.K = 4;
    c.rounds = 2;
    c.iters_per_round = 3;
    c.pretrain_epochs = 2;
    c.seed = 17;
    return c;
}

std::vector<float> params_of(const TranslatorModel& m) {
    return {m.net().params().values().begin(), m.net().params().values().end()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("defaults follow the published settings") {
    const TrainConfig c;
    CHECK(c.learning_rate == 1e-3);
    CHECK(c.momentum_beta1 == 0.5);
    CHECK(c.batch_size == 16);
    CHECK(c.K == 20);
    CHECK(c.beta == 1.0);
    CHECK(c.rho_start == 0.30);
    CHECK(c.rho_end == 0.80);
    CHECK_NOTHROW(c.validate());
    TrainConfig bad = c;
    bad.K = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = c;
    bad.beta = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    CHECK(mask_mode_from_string("attentive_binary") == MaskMode::attentive_binary);
    CHECK_THROWS_AS(mask_mode_from_string("nope"), InvalidArgument);
    CHECK(uncertainty_mode_from_string(to_string(UncertaintyMode::aleatoric_only)) == UncertaintyMode::aleatoric_only);
}

TEST_CASE("pretraining with zero epochs leaves the model unchanged") {
    const auto task = tiny_task();
    TrainConfig c = tiny_config();
    c.pretrain_epochs = 0;
    TranslatorModel m(c.arch, 1);
    const auto before = params_of(m);
    CHECK(pretrain(m, task.source, c).epoch_loss.empty());
    CHECK(params_of(m) == before);
    CHECK_THROWS_AS(pretrain(m, task.target, tiny_config()), InvalidArgument);
}

TEST_CASE("pretraining is deterministic and writes its artifacts") {
    const auto task = tiny_task();
    const TrainConfig c = tiny_config();
    const auto dir = test::scratch_dir("pretrain");
    TranslatorModel a(c.arch, 1), b(c.arch, 1);
    const auto ra = pretrain(a, task.source, c, {dir});
    const auto rb = pretrain(b, task.source, c);
    CHECK(ra.epoch_loss.size() == 2);
    CHECK(ra.epoch_loss == rb.epoch_loss);
    CHECK(params_of(a) == params_of(b));
    CHECK(params_of(load_translator(dir / "pretrain.ckpt")) == params_of(a));
    CHECK(std::filesystem::exists(dir / "pretrain_log.csv"));
}

TEST_CASE("rounds = 0 returns the input model") {
    const auto task = tiny_task();
    TrainConfig c = tiny_config();
    c.rounds = 0;
    TranslatorModel m(c.arch, 1);
    AttentionModel a(c.attention_arch, 2);
    const auto before = params_of(m);
    const auto st = adapt(m, &a, task.source, task.target, c);
    CHECK(params_of(m) == before);
    CHECK(st.history.empty());
    CHECK(st.log.empty());
}

TEST_CASE("binary masks at the schedule start keep floor(0.3 N) pixels") {
    const auto task = tiny_task();
    TrainConfig c = tiny_config();
    c.mask_mode = MaskMode::binary;
    TranslatorModel m(c.arch, 1);
    AdaptationState st = make_state(m, nullptr, c);
    CHECK(current_rho(c, st) == doctest::Approx(0.30));
    step1_generate(m, nullptr, task.target, c, st);
    REQUIRE(st.masks.size() == task.target.size());
    for (const auto& mask : st.masks) {
        double s = 0.0;
        for (double w : mask.weights.values()) s += w;
        CHECK(s == std::floor(0.30 * 256.0));
    }
    st.iter = c.rounds * c.iters_per_round;
    CHECK(current_rho(c, st) == doctest::Approx(0.80));
    c.rho_per_round = true;
    st.round = c.rounds - 1;
    CHECK(current_rho(c, st) == doctest::Approx(0.80));
}

TEST_CASE("zero uncertainty saturates the masks") {
    const auto task = tiny_task();
    TrainConfig c = tiny_config();
    c.arch.dropout_rate = 0.0;
    c.uncertainty_mode = UncertaintyMode::epistemic_only;
    TranslatorModel m(c.arch, 1);
    for (MaskMode mode : {MaskMode::binary, MaskMode::continuous}) {
        c.mask_mode = mode;
        AdaptationState st = make_state(m, nullptr, c);
        step1_generate(m, nullptr, task.target, c, st);
        for (const auto& u : st.uncertainty) CHECK(u.max() == 0.0);
        if (mode == MaskMode::continuous)
            for (const auto& mask : st.masks) CHECK(mask.weights.min() == 1.0);
        // Pseudo labels equal the deterministic prediction when dropout is off.
        const auto det = m.forward(task.target.input(1).normalized(), false, 0).mean;
        CHECK(test::vec(st.pseudo_labels[1]) == test::vec(det));
    }
}

TEST_CASE("uncertainty modes zero the excluded component") {
    const auto task = tiny_task();
    TrainConfig c = tiny_config();
    c.mask_mode = MaskMode::continuous;
    TranslatorModel m(c.arch, 1);
    AdaptationState both = make_state(m, nullptr, c), epi = both, ale = both;
    step1_generate(m, nullptr, task.target, c, both);
    c.uncertainty_mode = UncertaintyMode::epistemic_only;
    step1_generate(m, nullptr, task.target, c, epi);
    c.uncertainty_mode = UncertaintyMode::aleatoric_only;
    step1_generate(m, nullptr, task.target, c, ale);
    for (std::size_t n = 0; n < both.uncertainty[0].size(); ++n)
        CHECK(both.uncertainty[0][n] == doctest::Approx(epi.uncertainty[0][n] + ale.uncertainty[0][n]).epsilon(1e-12));
}

TEST_CASE("attentive and continuous runs share step 1 up to the attention product") {
    const auto task = tiny_task();
    TrainConfig c = tiny_config();
    TranslatorModel m(c.arch, 1);
    AttentionModel a(c.attention_arch, 2);
    c.mask_mode = MaskMode::continuous;
    AdaptationState cont = make_state(m, nullptr, c);
    step1_generate(m, nullptr, task.target, c, cont);
    c.mask_mode = MaskMode::attentive;
    AdaptationState att = make_state(m, &a, c);
    step1_generate(m, &a, task.target, c, att);
    for (std::size_t i = 0; i < task.target.size(); ++i) {
        CHECK(test::vec(cont.pseudo_labels[i]) == test::vec(att.pseudo_labels[i]));
        CHECK(test::vec(cont.base_masks[i].weights) == test::vec(att.base_masks[i].weights));
        CHECK(test::vec(cont.masks[i].weights) != test::vec(att.masks[i].weights));
    }
}

TEST_CASE("pseudo labels and masks are fixed during step 2") {
    const auto task = tiny_task();
    TrainConfig c = tiny_config();
    TranslatorModel m(c.arch, 1);
    AttentionModel a(c.attention_arch, 2);
    AdaptationState st = make_state(m, &a, c);
    step1_generate(m, &a, task.target, c, st);
    const auto labels = st.pseudo_labels;
    const auto base = st.base_masks;
    const auto eff = st.masks;
    const auto before = params_of(m);
    step2_retrain(m, &a, task.source, task.target, c, st);
    CHECK(params_of(m) != before);
    CHECK(st.log.size() == c.iters_per_round);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CHECK(test::vec(st.pseudo_labels[i]) == test::vec(labels[i]));
        CHECK(test::vec(st.base_masks[i].weights) == test::vec(base[i].weights));
        CHECK(test::vec(st.masks[i].weights) == test::vec(eff[i].weights));
    }
}

TEST_CASE("zero masks give the attention network no gradient") {
    const auto task = tiny_task();
    const TrainConfig c = tiny_config();
    BasicTranslator<double> tr(c.arch, 1);
    BasicAttention<double> at(c.attention_arch, 2);
    const ImageGrid xs = task.source.input(0).normalized();
    const ImageGrid ys = task.source.paired()[0].target.normalized();
    const ImageGrid xt = task.target.input(0).normalized();
    const ImageGrid zero(16, 16, 0.0, 1.0);
    const std::vector<SourceExample> src{{&xs, &ys}};
    const std::vector<TargetExample> tgt{{&xt, &xt, &zero}};
    ObjectiveOptions o;
    o.use_attention = true;
    o.attention_floor_lambda = 0.0;
    std::vector<double> gw(tr.net().params().size()), gt(at.net().params().size());
    gst_objective<double>(tr, &at, src, tgt, o, gw, gt);
    for (double g : gt) CHECK(g == 0.0);

    // The mean head sees only the source residual.
    std::vector<double> gw_src(gw.size()), none;
    gst_objective<double>(tr, nullptr, src, {}, {}, gw_src, none);
    const auto* head = tr.net().params().find("head.weight");
    REQUIRE(head != nullptr);
    for (std::size_t k = 0; k < head->size; ++k)
        CHECK(gw[head->offset + k] == doctest::Approx(gw_src[head->offset + k]).epsilon(1e-12));
}

TEST_CASE("adaptation is deterministic and records its history") {
    const auto task = tiny_task();
    const TrainConfig c = tiny_config();
    const auto dir = test::scratch_dir("adapt");
    TranslatorModel m1(c.arch, 1), m2(c.arch, 1);
    AttentionModel a1(c.attention_arch, 2), a2(c.attention_arch, 2);
    const auto s1 = adapt(m1, &a1, task.source, task.target, c, {dir});
    const auto s2 = adapt(m2, &a2, task.source, task.target, c);
    CHECK(params_of(m1) == params_of(m2));
    REQUIRE(s1.history.size() == c.rounds + 1);
    for (std::size_t r = 0; r < s1.history.size(); ++r) {
        CHECK(s1.history[r].probe_u == s2.history[r].probe_u);
        CHECK(s1.history[r].round == r);
        CHECK(std::isfinite(s1.history[r].mean_u));
    }
    REQUIRE(s1.log.size() == c.rounds * c.iters_per_round);
    CHECK(s1.log.front().rho == doctest::Approx(0.30));
    for (const char* f : {"round_0.ckpt", "round_1.ckpt", "round_1.attn.ckpt", "train_log.csv",
                          "uncertainty_history.csv", "adaptation_manifest.txt"})
        CHECK(std::filesystem::exists(dir / f));
    const std::string log = slurp(dir / "train_log.csv");
    CHECK(log.rfind("iter,source_mse,target_data_term,target_logvar_term,total,rho,mean_u\n", 0) == 0);
    CHECK(std::count(log.begin(), log.end(), '\n') == 1 + static_cast<long>(s1.log.size()));
    CHECK(slurp(dir / "adaptation_manifest.txt").find("train.mask_mode=attentive") != std::string::npos);

    TrainConfig attentive = c;
    CHECK_THROWS_AS(adapt(m1, nullptr, task.source, task.target, attentive), InvalidArgument);
}

TEST_CASE("supervised reference and prediction range") {
    const auto task = tiny_task();
    TrainConfig c = tiny_config();
    TranslatorModel m(c.arch, 1);
    const auto before = params_of(m);
    train_supervised(m, task.source, task.source, c);
    CHECK(params_of(m) != before);
    const ImageGrid p = predict(m, task.target.input(0));
    CHECK(p.range_lo() == task.target.input(0).range_lo());
    CHECK(p.range_hi() == task.target.input(0).range_hi());
}

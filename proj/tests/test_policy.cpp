#include <gtest/gtest.h>

#include <cmath>

#include "gradeprobe/errors.hpp"
#include "gradeprobe/policy.hpp"
#include "gradeprobe/presets.hpp"
#include "support/gradcheck.hpp"

using namespace gradeprobe;
using namespace gradeprobe::testing;

namespace {

Featurizer preset_featurizer(int id, bool step = false) {
    auto cfg = FeaturizerConfig::defaults();
    cfg.include_step_feature = step;
    return Featurizer(experiment_preset(id).phrases, cfg);
}

} // namespace

TEST(Featurizer, EmptyTextIsBiasOnly) {
    const auto f = preset_featurizer(1);
    const auto x = f(ResponseState(""));
    ASSERT_EQ(x.size(), 14u);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], i == 13 ? 1.0 : 0.0) << i;
}

TEST(Featurizer, HandCountedExample) {
    const auto f = preset_featurizer(1);
    const auto& phrases = experiment_preset(1).phrases;
    ASSERT_EQ(phrases[3], "water has more mass");
    const auto x = f(ResponseState("water has more mass water has more mass"));
    for (std::size_t j = 0; j < 10; ++j) EXPECT_DOUBLE_EQ(x[j], j == 3 ? 2.0 / 3.0 : 0.0) << j;
    EXPECT_DOUBLE_EQ(x[10], 8.0 / 50.0);
    EXPECT_DOUBLE_EQ(x[11], 0.0);
    EXPECT_DOUBLE_EQ(x[12], 0.2);
    EXPECT_DOUBLE_EQ(x[13], 1.0);
}

TEST(Featurizer, CapsAndTraps) {
    const auto f = preset_featurizer(2);
    std::string text;
    for (int i = 0; i < 7; ++i) text += "sound is more dense ";
    const auto x = f(ResponseState(text));
    EXPECT_DOUBLE_EQ(x[9], 1.0);           // phrase count capped at 3
    EXPECT_DOUBLE_EQ(x[10], 28.0 / 50.0);  // token count
    EXPECT_DOUBLE_EQ(x[11], 1.0);          // trap count capped at 5
    EXPECT_DOUBLE_EQ(x[12], 0.7);          // "dense" x7
}

TEST(Featurizer, DimensionAndStepFeature) {
    EXPECT_EQ(preset_featurizer(1).dimension(), 14u);
    EXPECT_EQ(preset_featurizer(3).dimension(), 24u);
    const auto f = preset_featurizer(1, true);
    EXPECT_EQ(f.dimension(), 15u);
    EXPECT_DOUBLE_EQ(f(ResponseState("x", 2))[14], 2.0 / 8.0);
}

TEST(Policy, ZeroOutputLayerIsUniform) {
    const auto f = preset_featurizer(1);
    Rng rng(3);
    const auto params = PolicyParameters::initialize(f.dimension(), 25, rng);
    for (const char* t : {"", "i dont know", "water is more dense water is more dense"}) {
        const auto probs = action_distribution(params, f(ResponseState(t)));
        for (double p : probs) EXPECT_DOUBLE_EQ(p, 1.0 / 25.0);
        EXPECT_EQ(state_value(params, f(ResponseState(t))), 0.0);
    }
}

TEST(Policy, InitScaleAndShape) {
    Rng rng(8);
    const auto params = PolicyParameters::initialize(14, 25, rng);
    EXPECT_EQ(params.hidden_weights.size(), 14u * kHiddenWidth);
    EXPECT_EQ(params.output_weights.size(), kHiddenWidth * 25u);
    EXPECT_EQ(params.parameter_count(), 14u * 32 + 32 + 32u * 25 + 25 + 14 + 1);
    for (double w : params.hidden_weights) EXPECT_LE(std::abs(w), kHiddenInitScale);
}

TEST(Policy, ProbabilitiesNormalizeAndShiftInvariant) {
    const auto f = preset_featurizer(3);
    Rng rng(21);
    auto params = PolicyParameters::initialize(f.dimension(), 45, rng);
    jitter(params, rng, 1.0);
    const auto x = f(ResponseState("the pitch is different sound is more dense"));
    const auto p = action_distribution(params, x);
    double sum = 0.0;
    for (double v : p) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);

    auto shifted = params;
    for (double& b : shifted.output_bias) b += 37.5;
    const auto q = action_distribution(shifted, x);
    for (std::size_t a = 0; a < p.size(); ++a) EXPECT_NEAR(p[a], q[a], 1e-12);
}

TEST(Policy, ForwardMatchesHandComputation) {
    PolicyParameters p = PolicyParameters::zeros(2, 3, 2);
    p.hidden_weights = {0.5, -1.0, 0.25, 2.0};  // [d*H + j]
    p.hidden_bias = {0.1, -0.2};
    p.output_weights = {1.0, 0.0, -1.0, 0.5, 0.5, 0.5};  // [j*A + a]
    p.output_bias = {0.0, 0.1, 0.2};
    p.value_weights = {2.0, -3.0};
    p.value_bias = 0.5;
    const std::vector<double> x = {1.0, 0.5};
    const double h0 = std::tanh(0.5 * 1.0 + 0.25 * 0.5 + 0.1);
    const double h1 = std::tanh(-1.0 * 1.0 + 2.0 * 0.5 - 0.2);
    const double l[3] = {h0 + 0.5 * h1, 0.5 * h1 + 0.1, -h0 + 0.5 * h1 + 0.2};
    const double z = std::exp(l[0]) + std::exp(l[1]) + std::exp(l[2]);
    const auto fwd = policy_forward(p, x);
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(fwd.probs[a], std::exp(l[a]) / z, 1e-14);
    EXPECT_NEAR(fwd.value, 2.0 - 1.5 + 0.5, 1e-14);
}

TEST(Policy, DimensionMismatchIsAConfigError) {
    const auto params = PolicyParameters::zeros(14, 25);
    const std::vector<double> x(24, 0.0);
    EXPECT_THROW((void)policy_forward(params, x), ConfigError);
}

TEST(Policy, GreedyTieGoesToLowestIndex) {
    const auto f = preset_featurizer(1);
    const auto params = PolicyParameters::zeros(f.dimension(), 25);
    const FeaturePolicy policy(params, f);
    EXPECT_EQ(argmax_action(policy.action_probabilities(ResponseState("i dont know"))), 0u);
}

TEST(PolicyDocument, JsonRoundTrip) {
    const auto f = preset_featurizer(2, true);
    Rng rng(4);
    PolicyDocument doc;
    doc.params = PolicyParameters::initialize(f.dimension(), 25, rng);
    jitter(doc.params, rng, 0.5);
    doc.featurizer = f.config();
    doc.experiment_id = 2;
    doc.rng_seed = 99;
    const auto text = policy_to_json(doc);
    const auto back = policy_from_json(text);
    EXPECT_EQ(back.params, doc.params);
    EXPECT_EQ(back.featurizer, doc.featurizer);
    EXPECT_EQ(back.experiment_id, 2);
    EXPECT_EQ(back.rng_seed, 99u);
    EXPECT_EQ(policy_to_json(back), text);
}

TEST(PolicyDocument, RejectsBadDocuments) {
    EXPECT_THROW((void)policy_from_json("{}"), ConfigError);
    EXPECT_THROW((void)policy_from_json("nope"), ConfigError);
    const auto f = preset_featurizer(1);
    PolicyDocument doc;
    doc.params = PolicyParameters::zeros(f.dimension(), 25);
    doc.featurizer = f.config();
    doc.experiment_id = 1;
    auto j = policy_to_json(doc);
    const auto pos = j.find("\"version\": 1");
    ASSERT_NE(pos, std::string::npos);
    auto bad_version = j;
    bad_version.replace(pos, 12, "\"version\": 7");
    EXPECT_THROW((void)policy_from_json(bad_version), ConfigError);
    auto bad_dims = j;
    bad_dims.replace(bad_dims.find("\"input\": 14"), 12, "\"input\": 15");
    EXPECT_THROW((void)policy_from_json(bad_dims), ConfigError);
}

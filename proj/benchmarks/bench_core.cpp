#include <benchmark/benchmark.h>

#include "gradeprobe/environment.hpp"
#include "gradeprobe/grader.hpp"
#include "gradeprobe/policy.hpp"
#include "gradeprobe/ppo.hpp"
#include "gradeprobe/presets.hpp"
#include "gradeprobe/random.hpp"

using namespace gradeprobe;

namespace {

const std::string kText =
    "water is more dense the full glass sounds lower because sound moves slower in water water is more dense";

void BM_MockGrade(benchmark::State& state) {
    const MockGrader g;
    for (auto _ : state) benchmark::DoNotOptimize(g.grade_one(kText));
}
BENCHMARK(BM_MockGrade);

void BM_CachedGrade(benchmark::State& state) {
    auto g = make_grader(GraderBinding::mock());
    const std::vector<std::string> t = {kText};
    for (auto _ : state) benchmark::DoNotOptimize(g->grade(t));
}
BENCHMARK(BM_CachedGrade);

void BM_Featurize(benchmark::State& state) {
    const Featurizer f(experiment_preset(3).phrases, FeaturizerConfig::defaults());
    const ResponseState s(kText);
    for (auto _ : state) benchmark::DoNotOptimize(f(s));
}
BENCHMARK(BM_Featurize);

void BM_PolicyForward(benchmark::State& state) {
    const Featurizer f(experiment_preset(3).phrases, FeaturizerConfig::defaults());
    Rng rng(1);
    const auto params = PolicyParameters::initialize(f.dimension(), 45, rng);
    const auto x = f(ResponseState(kText));
    for (auto _ : state) benchmark::DoNotOptimize(policy_forward(params, x));
}
BENCHMARK(BM_PolicyForward);

void BM_ApplyAction(benchmark::State& state) {
    const auto& phrases = experiment_preset(1).phrases;
    const ResponseState s(kText);
    std::size_t i = 0;
    const ActionSpace space(phrases.size());
    for (auto _ : state) benchmark::DoNotOptimize(apply_action(s, space.decode(i++ % space.size()), phrases));
}
BENCHMARK(BM_ApplyAction);

void BM_PpoUpdate(benchmark::State& state) {
    const auto& preset = experiment_preset(1);
    const Featurizer f(preset.phrases, FeaturizerConfig::defaults());
    Rng rng(2);
    const auto params = PolicyParameters::initialize(f.dimension(), preset.action_count(), rng);
    const FeaturePolicy policy(params, f);
    MockGrader grader;
    std::vector<EpisodeRecord> batch;
    for (int i = 0; i < 16; ++i) {
        batch.push_back(run_episode("i dont know", policy, grader, EpisodeContext{preset.phrases, {}, {}}, rng));
    }
    const PpoConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(ppo_update(params, f, batch, cfg));
}
BENCHMARK(BM_PpoUpdate);

void BM_Episode(benchmark::State& state) {
    const auto& preset = experiment_preset(1);
    const Featurizer f(preset.phrases, FeaturizerConfig::defaults());
    Rng rng(3);
    const auto params = PolicyParameters::initialize(f.dimension(), preset.action_count(), rng);
    const FeaturePolicy policy(params, f);
    MockGrader grader;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_episode("i dont know", policy, grader, EpisodeContext{preset.phrases, {}, {}}, rng));
    }
}
BENCHMARK(BM_Episode);

} // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <random>

#include "handmotion/diffusion.hpp"
#include "handmotion/fitting.hpp"
#include "handmotion/metrics.hpp"
#include "handmotion/representation.hpp"
#include "handmotion/synth.hpp"

using namespace handmotion;

namespace {

HandParams random_params(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    HandParams p;
    p.global_rot = Quat(n(rng), n(rng), n(rng), n(rng));
    p.global_rot.normalize();
    p.translation = {0.1 * n(rng), 0.1 * n(rng), 0.1 * n(rng)};
    for (auto& q : p.local_rots) q = Quat::from_axis_angle({u(rng), u(rng), u(rng)});
    return p;
}

MotionSequence bench_sequence(int frames) {
    SynthConfig cfg;
    cfg.seed = 1;
    cfg.frames = frames;
    cfg.interaction_intensity = 0.6;
    return synth_sequence(cfg, default_templates());
}

void bm_forward_kinematics(benchmark::State& state) {
    HandTemplates tpls = default_templates();
    std::mt19937_64 rng(1);
    HandParams p = random_params(rng);
    for (auto _ : state) benchmark::DoNotOptimize(forward_kinematics(tpls.right, p));
}
BENCHMARK(bm_forward_kinematics);

void bm_encode_local(benchmark::State& state) {
    HandTemplates tpls = default_templates();
    auto [canon, info] = normalize_sequence(bench_sequence(int(state.range(0))), tpls);
    for (auto _ : state) benchmark::DoNotOptimize(encode_local(canon, tpls));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_encode_local)->Arg(30)->Arg(120);

void bm_decode_local(benchmark::State& state) {
    HandTemplates tpls = default_templates();
    auto [canon, info] = normalize_sequence(bench_sequence(120), tpls);
    RepMatrix rep = encode_local(canon, tpls);
    for (auto _ : state) benchmark::DoNotOptimize(decode_local(rep, tpls));
}
BENCHMARK(bm_decode_local);

void bm_interaction_loss(benchmark::State& state) {
    HandTemplates tpls = default_templates();
    MotionSequence a = bench_sequence(60);
    MotionSequence b = bench_sequence(60);
    ContactParams p;
    for (auto _ : state) benchmark::DoNotOptimize(interaction_loss(a, b, tpls, p));
}
BENCHMARK(bm_interaction_loss);

void bm_ddpm_sample_step(benchmark::State& state) {
    NoiseSchedule s = cosine_schedule(int(state.range(0)));
    int dim = 32;
    GaussianOracleDenoiser d(Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim),
                             s);
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(ddpm_sample(d, s, 16, dim, Unconstrained{}, seed++));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_ddpm_sample_step)->Arg(50)->Arg(200);

void bm_fit_single_frame(benchmark::State& state) {
    HandTemplates tpls = default_templates();
    std::mt19937_64 rng(3);
    HandParams p = random_params(rng);
    JointSet target = forward_kinematics(tpls.right, p);
    FitConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(fit_hand({target}, tpls.right, cfg));
}
BENCHMARK(bm_fit_single_frame);

}  // namespace

BENCHMARK_MAIN();

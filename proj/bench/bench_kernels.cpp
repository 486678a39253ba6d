// Copyright (C) 2026 The lookm Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP kernels. The Exec argument is the second benchmark arg
// (0 = serial, 1 = parallel).

#include <benchmark/benchmark.h>

#include "lookm/attention.hpp"
#include "lookm/compress.hpp"
#include "lookm/kernels.hpp"

using namespace lookm;

namespace {

Exec exec_arg(const benchmark::State& state) {
    return state.range(1) == 0 ? Exec::Serial : Exec::Parallel;
}

Matrix random_matrix(std::uint64_t seed, std::size_t r, std::size_t c) {
    auto rng = make_rng(seed);
    Matrix m(r, c);
    for (auto& x : m.data) {
        x = rng.normal();
    }
    return m;
}

ModelSpec bench_model() {
    ModelSpec s;
    s.n_layers = 2;
    s.n_heads = 8;
    s.d_model = 128;
    return s;
}

PromptLayout mixed_layout(std::size_t len) {
    std::vector<TokenKind> kinds(len, TokenKind::Image);
    for (std::size_t i = 0; i < len; i += 8) {
        kinds[i] = TokenKind::Text;
    }
    return PromptLayout(kinds);
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(1, n, 128);
    const Matrix b = random_matrix(2, 128, 128);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::matmul(a, b, exec_arg(state)));
    }
}

void BM_CausalAttention(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix q = random_matrix(1, n, 128);
    const Matrix k = random_matrix(2, n, 128);
    const Matrix v = random_matrix(3, n, 128);
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::causal_attention(q, k, v, 8, 0.25, exec_arg(state)));
    }
}

void BM_Prefill(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Model model(bench_model());
    const Matrix x = random_matrix(4, n, 128);
    const PromptLayout layout = mixed_layout(n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(prefill(model, x, layout, exec_arg(state)));
    }
}

void BM_CompressCache(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Model model(bench_model());
    const PromptLayout layout = mixed_layout(n);
    const PrefillResult pre = prefill(model, random_matrix(5, n, 128), layout);
    CompressionConfig config;
    config.merge = MergeStrategy::Weighted;
    for (auto _ : state) {
        benchmark::DoNotOptimize(compress_cache(pre.cache, pre.record, layout, config, exec_arg(state)));
    }
}

}  // namespace

BENCHMARK(BM_Matmul)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CausalAttention)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Prefill)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CompressCache)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "mgtd/corpus.hpp"
#include "mgtd/nn.hpp"
#include "mgtd/normalize.hpp"

using namespace mgtd;

namespace {

std::vector<TextSample> synthetic_corpus(std::size_t n, unsigned seed, double dup_rate) {
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> letter('a', 'z');
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<TextSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        TextSample s;
        s.id = std::to_string(i);
        s.label = i % 2 ? Label::machine : Label::human;
        s.generator = s.label == Label::machine ? "gen" : "human";
        s.language = i % 3 == 0 ? "en" : (i % 3 == 1 ? "de" : "fr");
        s.domain = "bench";
        s.source = "src" + std::to_string(i % 4);
        if (!out.empty() && unit(gen) < dup_rate) {
            s.text = out[gen() % out.size()].text;
        } else {
            for (int k = 0; k < 60; ++k) {
                s.text.push_back(static_cast<char>(letter(gen)));
                if (k % 7 == 6) {
                    s.text.push_back(' ');
                }
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

static void BM_DedupKey(benchmark::State& state) {
    std::string text =
        "Ein l\xC3\xA4ngerer   Beispieltext  mit gemischtem\tWhitespace und Unicode \xC3\xBC";
    for (auto _ : state) {
        benchmark::DoNotOptimize(normalize::dedup_key(text));
    }
}
BENCHMARK(BM_DedupKey);

static void BM_Deduplicate(benchmark::State& state) {
    auto corpus = synthetic_corpus(static_cast<std::size_t>(state.range(0)), 5, 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(corpus::deduplicate(corpus));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Deduplicate)->Arg(10'000)->Arg(50'000);

static void BM_ApplyCaps(benchmark::State& state) {
    auto corpus = synthetic_corpus(static_cast<std::size_t>(state.range(0)), 6, 0.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(corpus::apply_caps(corpus, 500, 42));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ApplyCaps)->Arg(50'000);

static void BM_Featurize(benchmark::State& state) {
    nn::FeaturizerConfig cfg;
    std::string text;
    std::mt19937 gen(9);
    std::uniform_int_distribution<int> letter('a', 'z');
    for (int i = 0; i < 1500; ++i) {
        text.push_back(i % 6 == 5 ? ' ' : static_cast<char>(letter(gen)));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(nn::featurize(text, cfg));
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Featurize);

BENCHMARK_MAIN();

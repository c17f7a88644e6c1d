#include <benchmark/benchmark.h>

#include "prefest/estimate.hpp"
#include "prefest/simulate.hpp"

using namespace prefest;

namespace {

ParamVector bench_params() {
    ParamVector p;
    p.alpha = 0.46;
    p.lambda = 1.934;
    p.delta = 0.28;
    p.gamma = 0.01;
    p.kappa = 0.448;
    p.mu = 0.682;
    return p;
}

ChoiceDataset bench_dataset(int n) {
    const auto lists = build_standard_lists();
    ParamVector truth = bench_params();
    ChoiceDataset data;
    for (int s = 0; s < n; ++s) {
        RngStream rng(1, 0, static_cast<std::uint64_t>(s));
        Respondent r;
        r.id = "s" + std::to_string(s);
        r.choices = simulate_choices(truth, lists, rng);
        data.respondents.push_back(std::move(r));
    }
    return data;
}

void BM_Utility(benchmark::State& state) {
    ParamVector p = bench_params();
    double x = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(utility(x, p, UtilityFamily::Crra));
        x = x < 200.0 ? x + 1.0 : 1.0;
    }
}
BENCHMARK(BM_Utility);

void BM_DeltaUtility(benchmark::State& state) {
    ParamVector p = bench_params();
    ModelSpec spec;
    const PriceList& list = standard_list(ListId::MPL2);
    int i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(delta_utility(list.rows[i], ListId::MPL2, p, spec, 1.0));
        i = (i + 1) % static_cast<int>(list.rows.size());
    }
}
BENCHMARK(BM_DeltaUtility);

void BM_LogLikelihood(benchmark::State& state) {
    ChoiceDataset data = bench_dataset(static_cast<int>(state.range(0)));
    ModelSpec spec;
    CovariateDesign design;
    LikelihoodEvaluator eval(data, spec, design, 1);
    Eigen::VectorXd beta = default_init(spec, design);
    for (auto _ : state) benchmark::DoNotOptimize(eval.log_likelihood(beta));
    state.SetItemsProcessed(state.iterations() * data.n_choices());
}
BENCHMARK(BM_LogLikelihood)->Arg(100)->Arg(1000);

void BM_NumericGradient(benchmark::State& state) {
    ChoiceDataset data = bench_dataset(200);
    ModelSpec spec;
    CovariateDesign design;
    LikelihoodEvaluator eval(data, spec, design, 1);
    Objective f = [&](const Eigen::VectorXd& b) { return eval.log_likelihood(b); };
    Eigen::VectorXd beta = default_init(spec, design);
    for (auto _ : state) benchmark::DoNotOptimize(numeric_gradient(f, beta, 1e-6));
}
BENCHMARK(BM_NumericGradient);

void BM_SimulateDataset(benchmark::State& state) {
    SimConfig cfg;
    cfg.n_subjects = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_dataset(cfg, 0));
}
BENCHMARK(BM_SimulateDataset)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();

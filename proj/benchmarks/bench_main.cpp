#include "optiks/optiks.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace optiks;

namespace {

ArcCurve spiral_arc(const HardwareLimits& hw, int interleaves) {
    SpiralParams sp;
    sp.fov = 0.22;
    sp.resolution = 0.001;
    sp.interleaves = interleaves;
    sp.density = linear_density(1.0, 2.0);
    return arclength_reparam(gen_trajectory(sp), hw, 4.0);
}

Objective full_objective(const HardwareLimits& hw) {
    Objective o;
    o.weights = {1e4, 0.0, 1e2, 1e1, 1e-3, 0.0};
    o.s_max = hw.s_max;
    o.time_scale = hw.dt;
    o.p_max = 80.0;
    o.pns = std::make_shared<IecPnsModel>(PnsModel{20.0, 360e-6, 0.333});
    o.bands = BandSet({{550, 650}, {1100, 1300}});
    return o;
}

void BM_TimeOptimal(benchmark::State& st) {
    HardwareLimits hw;
    const ArcCurve arc = spiral_arc(hw, static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(time_optimal_speed(arc, hw, TerminalSpeed::Free));
    st.counters["arc_samples"] = static_cast<double>(arc.size());
}
BENCHMARK(BM_TimeOptimal)->Arg(16)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& st) {
    HardwareLimits hw;
    const DesignContext ctx(spiral_arc(hw, static_cast<int>(st.range(0))), hw);
    const Eigen::VectorXd xi = init_xi(time_optimal_speed(ctx.arc(), hw, TerminalSpeed::Free), ctx.v_max(), 0.9);
    const Objective o = full_objective(hw);
    for (auto _ : st) {
        const ForwardCache f = forward_design_pass(ctx, xi, TerminalSpeed::Free);
        const LossEval l = assemble_loss(f.waveform, f.duration(), o, true);
        benchmark::DoNotOptimize(backward_design_pass(ctx, f, l.cot_g, l.cot_total));
    }
}
BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_AssembleLoss(benchmark::State& st) {
    HardwareLimits hw;
    const DesignContext ctx(spiral_arc(hw, 4), hw);
    const ForwardCache f = waveform_for_speed(ctx.arc(), hw, time_optimal_speed(ctx.arc(), hw, TerminalSpeed::Free),
                                              TerminalSpeed::Free);
    const Objective o = full_objective(hw);
    for (auto _ : st) benchmark::DoNotOptimize(assemble_loss(f.waveform, f.duration(), o, true));
    st.counters["raster_samples"] = static_cast<double>(f.waveform.n_t());
}
BENCHMARK(BM_AssembleLoss)->Unit(benchmark::kMillisecond);

void BM_PnsResponse(benchmark::State& st) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    const Eigen::MatrixXd slew = Eigen::MatrixXd::NullaryExpr(st.range(0), 3, [&] { return 100.0 * nd(rng); });
    const IecPnsModel m(PnsModel{20.0, 360e-6, 0.333});
    for (auto _ : st) benchmark::DoNotOptimize(m.response(slew, 4e-6));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_PnsResponse)->Arg(2000)->Arg(10000)->Arg(50000)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();

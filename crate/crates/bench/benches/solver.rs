use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use relplan_bench::{binary_program, fleet};
use relplan_core::benders::BendersOptions;
use relplan_core::lp::solve_mip;
use relplan_core::reliability::{cvar_lp, enumerate_states, mc_epns_converged, McOptions, ShedDistribution};
use relplan_core::{run_ip, solve_monolithic, InvestmentPlan, ReliabilityCriterion};
use std::hint::black_box;

fn reliability(c: &mut Criterion) {
    let mut group = c.benchmark_group("reliability");
    for n in [8usize, 12, 16] {
        let spec = fleet(n - 2, 2, 1, 3);
        let states = enumerate_states(&spec).unwrap();
        let plan = InvestmentPlan::full(&spec);
        group.bench_with_input(BenchmarkId::new("exact_distribution", n), &n, |b, _| {
            b.iter(|| ShedDistribution::evaluate(&spec, &plan, 0, black_box(&states)).unwrap().cvar(0.05))
        });
    }
    let spec = fleet(8, 2, 1, 3);
    let states = enumerate_states(&spec).unwrap();
    let plan = InvestmentPlan::empty(&spec).to_relaxed();
    group.bench_function("cvar_lp_1024_states", |b| {
        b.iter(|| cvar_lp(&spec, &plan, 0, black_box(&states), 0.05).unwrap().value)
    });
    let opts = McOptions::default();
    group.bench_function("mc_epns", |b| {
        b.iter(|| mc_epns_converged(&spec, &plan, 0, black_box(7), &opts).unwrap().value)
    });
    group.finish();
}

fn mip(c: &mut Criterion) {
    let mut group = c.benchmark_group("branch_and_bound");
    for n in [8usize, 12, 16] {
        let p = binary_program(n, 3, 11);
        group.bench_with_input(BenchmarkId::new("knapsack", n), &p, |b, p| b.iter(|| solve_mip(black_box(p)).unwrap()));
    }
    group.finish();
}

fn planning(c: &mut Criterion) {
    let mut group = c.benchmark_group("planning");
    group.sample_size(10);
    let spec = fleet(5, 3, 3, 5);
    let states = enumerate_states(&spec).unwrap();
    let criterion = ReliabilityCriterion::epns(0.02);
    let opts = BendersOptions::default();
    group.bench_function("benders_ip_epns", |b| {
        b.iter(|| run_ip(&spec, &criterion, black_box(&states), &opts).map(|o| o.report.total_cost))
    });
    group.bench_function("monolithic_epns", |b| {
        b.iter(|| solve_monolithic(&spec, black_box(&states), &criterion).map(|s| s.total_cost))
    });
    group.finish();
}

criterion_group!(benches, reliability, mip, planning);
criterion_main!(benches);

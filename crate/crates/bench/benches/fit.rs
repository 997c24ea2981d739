use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cshock_core::estimation::{fit_cellwise_closed_form, ml_dispersion_generic};
use cshock_core::forecast::{build_forecast_design, predict};
use cshock_core::simulate::simulate;
use cshock_core::{
    future_cells, ArrayLayout, DesignBuilder, DevelopmentForm, GammaStructure, MlOptions, ModelDesign,
    PartitionKind, ShockSpec, SimSpec, StructureKind, Vector,
};

fn setup() -> (ModelDesign, Vector, ArrayLayout) {
    let claims = simulate(&SimSpec::long_short_tail_pair(1)).unwrap();
    let triangle = ArrayLayout::up_to_diagonal(2, 15, 15, 15).unwrap();
    let y = claims.restrict(&triangle).unwrap().stack_log();
    let design = DesignBuilder::new(DevelopmentForm::ChainLadder, ShockSpec::across_arrays(PartitionKind::CellWise))
        .assemble(&triangle)
        .unwrap();
    (design, y, triangle)
}

fn bench_fit(c: &mut Criterion) {
    let (design, y, triangle) = setup();
    c.bench_function("closed_form_fit", |b| {
        b.iter(|| fit_cellwise_closed_form(black_box(&y), &design, 100).unwrap())
    });

    let model = GammaStructure::for_design(StructureKind::CellWiseTwoLevel, &design)
        .unwrap()
        .model();
    let mut group = c.benchmark_group("generic");
    group.sample_size(10);
    group.bench_function("generic_fit", |b| {
        b.iter(|| ml_dispersion_generic(black_box(&y), &design, &model, &MlOptions::new(vec![0.01, 0.01])).unwrap())
    });
    group.finish();

    let fit = fit_cellwise_closed_form(&y, &design, 100).unwrap();
    let omega = fit.omega_hat.clone().unwrap();
    let cells = future_cells(&triangle, 15);
    c.bench_function("forecast", |b| {
        b.iter(|| {
            let fd =
                build_forecast_design(&design, StructureKind::CellWiseTwoLevel, &omega, black_box(&cells), None).unwrap();
            predict(&fit, &fd).unwrap()
        })
    });
}

criterion_group!(benches, bench_fit);
criterion_main!(benches);

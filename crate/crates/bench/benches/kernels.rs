use std::hint::black_box;

use bbwave_core::dynamics::{ModalState, SemiDiscrete, Workspace};
use bbwave_core::spectral::{forward, inverse};
use bbwave_core::waves::{exact_solitary_speed, periodic_solitary_state, solitary_constants};
use bbwave_core::{Grid2D, ImrConfig, Integrator, Model, State};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const SIZES: [usize; 2] = [128, 256];

fn wave(n: usize) -> (Model, State) {
    let model = Model::bbm_bbm(0.5, 0.9).unwrap();
    let p = solitary_constants(exact_solitary_speed(&model), &model)
        .unwrap()
        .with_offset(-10.0);
    let grid = Grid2D::new(16.0, n).unwrap();
    (model, periodic_solitary_state(&p, 0.0, &grid))
}

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for n in SIZES {
        let (_, s) = wave(n);
        group.bench_with_input(BenchmarkId::new("forward", n), &s.zeta, |b, f| {
            b.iter(|| forward(black_box(f)))
        });
        let coeffs = forward(&s.zeta);
        group.bench_with_input(BenchmarkId::new("inverse", n), &coeffs, |b, f| {
            b.iter(|| inverse(black_box(f)))
        });
    }
    group.finish();
}

fn right_hand_side(c: &mut Criterion) {
    let mut group = c.benchmark_group("rhs");
    for n in SIZES {
        let (model, s) = wave(n);
        let sys = SemiDiscrete::new(s.grid(), model, false).unwrap();
        let w = ModalState::from_state(&s);
        let mut out = ModalState::zeros(s.grid().len());
        let mut ws = Workspace::new(s.grid());
        group.bench_function(BenchmarkId::new("eval", n), |b| {
            b.iter(|| sys.eval(black_box(&w), &mut out, &mut ws))
        });
    }
    group.finish();
}

fn imr(c: &mut Criterion) {
    let mut group = c.benchmark_group("imr_step");
    group.sample_size(20);
    for n in SIZES {
        let (model, s) = wave(n);
        let mut integ = Integrator::new(s.grid(), model, ImrConfig::new(2.5e-2).unwrap(), false).unwrap();
        let w0 = ModalState::from_state(&s);
        group.bench_function(BenchmarkId::new("dt=2.5e-2", n), |b| {
            b.iter(|| {
                let mut w = w0.clone();
                integ.step_modal(&mut w, 0).unwrap();
                w
            })
        });
    }
    group.finish();
}

criterion_group!(benches, transforms, right_hand_side, imr);
criterion_main!(benches);

//! Microbenchmarks for the hot kernels: conjugate evaluation, the bilinear
//! form, Riemann fans with ball diagnostics, and the two solvers.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use entropy_lab::bilinear::bilinear_form;
use entropy_lab::entropypair::EntropyPair;
use entropy_lab::gen;
use entropy_lab::meter::fan_measure;
use entropy_lab::solvers::{godunov_solve, hopf_lax_from_initial, Grid1d, InitialData};
use entropy_lab::waves::solve_riemann;

fn bench_conjugate(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fun = gen::random_strictly_convex(&mut rng, 3.0);
    let ps: Vec<f64> = (0..256).map(|_| rng.gen_range(-6.0..6.0)).collect();
    c.bench_function("conjugate_eval_256", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for &p in &ps {
                acc += fun.conjugate(black_box(p));
            }
            acc
        })
    });
}

fn bench_bilinear(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pair = gen::random_pair(&mut rng, 3.0);
    let measure = gen::random_measure(&mut rng, 8, 5.0);
    c.bench_function("bilinear_form_8_atoms", |b| {
        b.iter(|| bilinear_form(black_box(&measure), black_box(&pair)).unwrap())
    });
}

fn bench_riemann_and_measure(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pair = EntropyPair::burgers();
    let radii = [0.2, 0.1, 0.05, 0.025];
    c.bench_function("riemann_solve_plus_fan_measure", |b| {
        b.iter(|| {
            let ul = rng.gen_range(-2.0..2.0);
            let ur = rng.gen_range(-2.0..2.0);
            let fan = solve_riemann(pair.flux(), ul, ur).unwrap();
            fan_measure(&pair, &fan, (1.0, 0.1), &radii).unwrap().liminf_estimate
        })
    });
}

fn bench_godunov(c: &mut Criterion) {
    let flux = entropy_lab::convexfn::ConvexFun::burgers();
    let data = InitialData::riemann(1.0, 0.0, 0.0, (-2.0, 2.0)).unwrap();
    c.bench_function("godunov_400_cells_t_half", |b| {
        b.iter(|| godunov_solve(black_box(&flux), &data, 0.5, 0.01, 0.45).unwrap().t_grid.len())
    });
}

fn bench_hopf_lax(c: &mut Criterion) {
    let flux = entropy_lab::convexfn::ConvexFun::burgers();
    let data = InitialData::riemann(1.0, 0.0, 0.0, (-2.0, 2.0)).unwrap();
    let grid = Grid1d::from_window(-2.0, 2.0, 0.02).unwrap();
    c.bench_function("hopf_lax_200_cells_one_row", |b| {
        b.iter(|| {
            hopf_lax_from_initial(black_box(&flux), &data, &[1.0], grid).unwrap().u[0][100]
        })
    });
}

criterion_group!(
    kernels,
    bench_conjugate,
    bench_bilinear,
    bench_riemann_and_measure,
    bench_godunov,
    bench_hopf_lax
);
criterion_main!(kernels);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use wcprox::driver::{run_ippa, CertificateMode, IppaConfig, Schedule};
use wcprox::{function, membership_grid, rho_conjugate, solve_eps_prox, FunctionDesc, GridDomain, ProxQuery, SubgradientQuery, Tolerance, Vector};

fn membership(c: &mut Criterion) {
    let tol = Tolerance::default();
    let f = function("mcp", &[("lambda", 1.0), ("gamma", 2.0)]).unwrap();
    let q1 = SubgradientQuery::new(Vector::scalar(0.5), Vector::scalar(0.75), 0.01, 0.25);
    let d1 = GridDomain::standard(1);
    c.bench_function("membership_grid/1d", |b| b.iter(|| membership_grid(&f, black_box(&q1), &d1, &tol).unwrap()));
    let q2 = SubgradientQuery::new(Vector::new(vec![0.5, -0.5]), Vector::new(vec![0.75, -0.75]), 0.01, 0.25);
    let d2 = GridDomain::standard(2);
    c.bench_function("membership_grid/2d", |b| b.iter(|| membership_grid(&f, black_box(&q2), &d2, &tol).unwrap()));
}

fn conjugate(c: &mut Criterion) {
    let tol = Tolerance::default();
    let d = GridDomain::standard(1);
    let u = Vector::scalar(0.8);
    let abs = function("abs", &[]).unwrap();
    c.bench_function("rho_conjugate/analytic", |b| b.iter(|| rho_conjugate(&abs, 1.0, black_box(&u), &d, &tol).unwrap()));
    let cosquad = function("cosquad", &[]).unwrap();
    c.bench_function("rho_conjugate/lattice", |b| b.iter(|| rho_conjugate(&cosquad, 0.5, black_box(&u), &d, &tol).unwrap()));
}

fn prox(c: &mut Criterion) {
    let f = function("cosquad", &[]).unwrap();
    let q = ProxQuery::new(Vector::scalar(2.0), 1.0, 1e-8);
    c.bench_function("solve_eps_prox/cosquad", |b| b.iter(|| solve_eps_prox(&f, f.rho, black_box(&q)).unwrap()));
}

fn ippa(c: &mut Criterion) {
    let tol = Tolerance::default();
    let cfg = IppaConfig {
        function: FunctionDesc::new("cosquad", &[]),
        alpha: 1.0,
        x0: Vector::scalar(0.5),
        schedule: Schedule::Geometric { eps0: 1e-2, q: 0.5 },
        max_iters: 40,
        certificate_mode: CertificateMode::None,
        rho: None,
        grid: None,
        tol_r: None,
        tol_eps: None,
    };
    c.bench_function("run_ippa/cosquad", |b| b.iter(|| run_ippa(black_box(&cfg), &tol).unwrap()));
}

criterion_group!(benches, membership, conjugate, prox, ippa);
criterion_main!(benches);

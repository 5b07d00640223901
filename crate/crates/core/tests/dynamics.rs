use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viscofem::assembly::{assemble_body_load, assemble_traction_load, LoadSpec, NoLoads};
use viscofem::dynamics::{energy, load_time_integral, EnergyLedger, Integrator, Operators, State, TimeGrid};
use viscofem::fespace::{BoundaryData, Constraints, FeSpace, NoBoundaryData};
use viscofem::linalg::{SolverMethod, SolverSettings};
use viscofem::material::{step_coefficients, MaterialModel, MaxwellArm};
use viscofem::mesh::{build_box_mesh, BoundaryTag, BoxFace};
use viscofem::Vec3;

fn arms(m: usize) -> Vec<MaxwellArm> {
    (0..m)
        .map(|i| MaxwellArm {
            kappa: 0.5 + i as f64,
            tau: 0.05 * (i + 1) as f64,
        })
        .collect()
}

fn setup(n: usize, p: usize, m: usize, slip_top: bool) -> (Arc<Operators>, Constraints) {
    let mesh = build_box_mesh(n, [1.0; 3], |face, _| match face {
        BoxFace::ZMin => BoundaryTag::dirichlet("bottom"),
        BoxFace::ZMax if slip_top => BoundaryTag::slip("top"),
        _ => BoundaryTag::neumann("side"),
    })
    .unwrap();
    let space = Arc::new(FeSpace::new(Arc::new(mesh), p).unwrap());
    let material = MaterialModel::new(1.5, 1.0, 0.7, arms(m)).unwrap();
    let c = Constraints::free(&space)
        .apply_dirichlet(&space, |_| true)
        .apply_slip(&space, |_| true)
        .unwrap();
    (Arc::new(Operators::new(space, material).unwrap()), c)
}

fn random_state(ops: &Operators, c: &Constraints, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ops.n_dofs();
    let mut field = || -> Vec<f64> {
        let y: Vec<f64> = (0..n)
            .map(|d| if c.is_fixed(d) { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        c.from_rotated(&y)
    };
    State {
        t: 0.0,
        u1: field(),
        u0: field(),
        ve: (0..ops.n_arms()).map(|_| field()).collect(),
    }
}

fn direct() -> SolverSettings {
    SolverSettings {
        method: SolverMethod::Direct,
        ..Default::default()
    }
}

struct Loads;

impl LoadSpec for Loads {
    fn body_force(&self, x: Vec3, t: f64) -> Vec3 {
        [x[0] * t.cos(), x[1] + t * t, (x[2] * t).sin()]
    }

    fn traction(&self, _: &str, x: Vec3, n: Vec3, t: f64) -> Vec3 {
        [n[0] * t, x[2] * (2.0 * t).sin(), 0.3 * n[2]]
    }
}

struct Moving;

impl BoundaryData for Moving {
    fn dirichlet(&self, _: &str, x: Vec3, t: f64) -> Vec3 {
        [0.01 * t * x[0], 0.0, -0.02 * t * t]
    }

    fn dirichlet_rate(&self, _: &str, x: Vec3, t: f64) -> Vec3 {
        [0.01 * x[0], 0.0, -0.04 * t]
    }

    fn normal_displacement(&self, _: &str, x: Vec3, _: Vec3, t: f64) -> f64 {
        0.05 * (3.0 * t).sin() * (1.0 + x[0])
    }

    fn normal_velocity(&self, _: &str, x: Vec3, _: Vec3, t: f64) -> f64 {
        0.15 * (3.0 * t).cos() * (1.0 + x[0])
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn assert_states_close(a: &State, b: &State, tol: f64) {
    assert!(rel_diff(&a.u1, &b.u1) < tol, "u1 {}", rel_diff(&a.u1, &b.u1));
    assert!(rel_diff(&a.u0, &b.u0) < tol, "u0 {}", rel_diff(&a.u0, &b.u0));
    for (x, y) in a.ve.iter().zip(&b.ve) {
        assert!(rel_diff(x, y) < tol, "ve {}", rel_diff(x, y));
    }
}

#[test]
fn reduced_and_full_methods_agree() {
    for m in [0, 1, 5] {
        for p in [1, 2] {
            let (ops, c) = setup(2, p, m, false);
            let mut int = Integrator::new(ops.clone(), c.clone(), direct());
            let mut s = random_state(&ops, &c, 3);
            for _ in 0..3 {
                let r = int.step_reduced(&s, 0.02, &Loads, &NoBoundaryData).unwrap();
                let f = int.step_full(&s, 0.02, &Loads, &NoBoundaryData).unwrap();
                assert_states_close(&r, &f, 1e-10);
                s = r;
            }
        }
    }
}

#[test]
fn reduced_and_full_agree_with_moving_slip_and_dirichlet_data() {
    let (ops, c) = setup(2, 2, 2, true);
    let mut int = Integrator::new(ops.clone(), c, direct());
    let mut s = State::zero(ops.n_dofs(), 2, 0.0);
    int.impose_initial(&mut s, &Moving);
    for _ in 0..4 {
        let r = int.step_reduced(&s, 0.05, &Loads, &Moving).unwrap();
        let f = int.step_full(&s, 0.05, &Loads, &Moving).unwrap();
        assert_states_close(&r, &f, 1e-10);
        s = r;
    }
    // constrained components follow the data
    let cons = int.constraints();
    let y = cons.to_rotated(&s.u0);
    let data = cons.prescribed_displacement(&ops.space, &Moving, s.t);
    for d in 0..y.len() {
        if cons.is_fixed(d) {
            assert!((y[d] - data[d]).abs() < 1e-12);
        }
    }
}

#[test]
fn full_step_matches_dense_block_solve() {
    let (ops, c) = setup(1, 1, 1, false);
    let n = ops.n_dofs();
    let free: Vec<usize> = (0..n).filter(|&d| !c.is_fixed(d)).collect();
    let nf = free.len();
    assert!(3 * nf <= 60);
    let mut int = Integrator::new(ops.clone(), c.clone(), direct());
    let s = random_state(&ops, &c, 8);
    let k = 0.03;
    let full = int.step_full(&s, k, &Loads, &NoBoundaryData).unwrap();

    let dm = ops.mass.to_dense();
    let de = ops.elastic.to_dense();
    let dv = ops.deviatoric[0].to_dense();
    let tau = ops.material.arms[0].tau;
    let fint = load_time_integral(&ops.space, &Loads, 0.0, k, ops.load_degree);
    let sub = |a: &Vec<Vec<f64>>| DMatrix::from_fn(nf, nf, |i, j| a[free[i]][free[j]]);
    let vec = |v: &[f64]| DVector::from_fn(nf, |i, _| v[free[i]]);
    let (m, ke, kv) = (sub(&dm), sub(&de), sub(&dv));
    let mut a = DMatrix::zeros(3 * nf, 3 * nf);
    let h = 0.5 * k;
    let r = h / tau;
    a.view_mut((0, 0), (nf, nf)).copy_from(&m);
    a.view_mut((0, nf), (nf, nf)).copy_from(&(&ke * h));
    a.view_mut((0, 2 * nf), (nf, nf)).copy_from(&(&kv * h));
    a.view_mut((nf, 0), (nf, nf)).copy_from(&(&ke * -h));
    a.view_mut((nf, nf), (nf, nf)).copy_from(&ke);
    a.view_mut((2 * nf, 0), (nf, nf)).copy_from(&(&kv * -h));
    a.view_mut((2 * nf, 2 * nf), (nf, nf)).copy_from(&(&kv * (1.0 + r)));
    let (u1, u0, ve) = (vec(&s.u1), vec(&s.u0), vec(&s.ve[0]));
    let mut b = DVector::zeros(3 * nf);
    b.rows_mut(0, nf)
        .copy_from(&(&m * &u1 - &ke * &u0 * h - &kv * &ve * h + vec(&fint)));
    b.rows_mut(nf, nf).copy_from(&(&ke * &u0 + &ke * &u1 * h));
    b.rows_mut(2 * nf, nf)
        .copy_from(&(&kv * &ve * (1.0 - r) + &kv * &u1 * h));
    let x = a.lu().solve(&b).unwrap();
    for (i, &d) in free.iter().enumerate() {
        assert!((full.u1[d] - x[i]).abs() < 1e-10 * x.amax());
        assert!((full.u0[d] - x[nf + i]).abs() < 1e-10 * x.amax());
        assert!((full.ve[0][d] - x[2 * nf + i]).abs() < 1e-10 * x.amax());
    }
}

fn free_vibration_ledger(m: usize, k: f64, steps: usize, settings: SolverSettings) -> EnergyLedger {
    let (ops, c) = setup(2, 2, m, true);
    let mut int = Integrator::new(ops.clone(), c.clone(), settings);
    let s = random_state(&ops, &c, 21);
    let mut ledger = EnergyLedger::start(&s, &ops);
    let grid = TimeGrid::uniform(0.0, k, steps).unwrap();
    int.run(s, &grid, &NoLoads, &NoBoundaryData, |prev, next| {
        ledger.record_step(prev, next, &ops);
        Ok(())
    })
    .unwrap();
    ledger
}

#[test]
fn discrete_conservation_law_holds() {
    for k in [0.1, 0.01, 0.001] {
        let ledger = free_vibration_ledger(2, k, 50, direct());
        assert!(ledger.max_relative_drift() <= 1e-9, "k={k} drift={}", ledger.max_relative_drift());
        assert!(ledger.reports.last().unwrap().dissipated > 0.0);
        for w in ledger.reports.windows(2) {
            assert!(w[1].stored() <= w[0].stored() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn conservation_with_iterative_solver() {
    let settings = SolverSettings {
        method: SolverMethod::Cg,
        ..Default::default()
    };
    let ledger = free_vibration_ledger(1, 0.01, 50, settings);
    assert!(ledger.max_relative_drift() <= 1e-9, "drift={}", ledger.max_relative_drift());
}

#[test]
fn elastic_only_scheme_conserves_energy_exactly() {
    let ledger = free_vibration_ledger(0, 0.05, 60, direct());
    let e0 = ledger.reports[0].stored();
    for r in &ledger.reports {
        assert_eq!(r.dissipated, 0.0);
        assert!((r.stored() - e0).abs() <= 1e-10 * e0);
    }
}

#[test]
fn zero_loads_and_state_stay_zero() {
    let (ops, c) = setup(2, 1, 2, true);
    let mut int = Integrator::new(ops.clone(), c, SolverSettings::default());
    let grid = TimeGrid::uniform(0.0, 0.1, 5).unwrap();
    let end = int
        .run(State::zero(ops.n_dofs(), 2, 0.0), &grid, &NoLoads, &NoBoundaryData, |_, _| Ok(()))
        .unwrap();
    assert_eq!(end.max_abs(), 0.0);
}

#[test]
fn constant_velocity_internal_variable_geometric_sum() {
    let arms = [MaxwellArm { kappa: 1.0, tau: 0.3 }];
    let k = 0.02;
    let c = step_coefficients(&arms, k);
    let mut ve = vec![vec![0.0]];
    let n = 40;
    for _ in 0..n {
        ve = viscofem::dynamics::reconstruct_ve(&[2.0], &[2.0], &ve, &c);
    }
    let (a, b) = (c.alpha[0], c.beta[0]);
    let closed = 2.0 * a * 2.0 * (1.0 - b.powi(n)) / (1.0 - b);
    assert!((ve[0][0] - closed).abs() < 1e-14);
    assert!((closed - 0.3 * 2.0 * (1.0 - b.powi(n))).abs() < 1e-14);
}

struct TimeShape {
    body: fn(f64) -> f64,
    traction: fn(f64) -> f64,
}

impl LoadSpec for TimeShape {
    fn body_force(&self, x: Vec3, t: f64) -> Vec3 {
        [(self.body)(t) * (1.0 + x[0]), 0.0, -(self.body)(t)]
    }

    fn traction(&self, _: &str, _: Vec3, n: Vec3, t: f64) -> Vec3 {
        [(self.traction)(t) * n[0], 0.0, 0.0]
    }
}

#[test]
fn load_time_integral_examples() {
    let (ops, _) = setup(1, 2, 0, false);
    let space = &ops.space;
    let deg = ops.load_degree;
    let (t0, t1) = (0.3, 0.55);
    let k = t1 - t0;
    let close = |a: &[f64], b: &[f64]| rel_diff(a, b) < 1e-13;

    let constant = TimeShape { body: |_| 2.0, traction: |_| 0.0 };
    let f = assemble_body_load(space, &constant, 0.0, deg);
    let got = load_time_integral(space, &constant, t0, t1, deg);
    assert!(close(&got, &f.iter().map(|v| k * v).collect::<Vec<_>>()));

    let linear = TimeShape { body: |_| 0.0, traction: |t| 1.0 + 4.0 * t };
    let g1 = assemble_traction_load(space, &TimeShape { body: |_| 0.0, traction: |_| 1.0 }, 0.0, deg);
    // ∫ (1 + 4t) dt over [t0, t1]
    let factor = k + 2.0 * (t1 * t1 - t0 * t0);
    let got = load_time_integral(space, &linear, t0, t1, deg);
    assert!(close(&got, &g1.iter().map(|v| factor * v).collect::<Vec<_>>()));

    let quadratic = TimeShape { body: |t| 3.0 * t * t - t, traction: |_| 0.0 };
    let f1 = assemble_body_load(space, &TimeShape { body: |_| 1.0, traction: |_| 0.0 }, 0.0, deg);
    let factor = (t1.powi(3) - t0.powi(3)) - 0.5 * (t1 * t1 - t0 * t0);
    let got = load_time_integral(space, &quadratic, t0, t1, deg);
    assert!(close(&got, &f1.iter().map(|v| factor * v).collect::<Vec<_>>()));
}

#[test]
fn rigid_velocity_energy() {
    let (ops, _) = setup(2, 2, 1, false);
    let c = [0.5, -1.0, 2.0];
    let s = State {
        t: 0.0,
        u1: ops.space.interpolate(|_| c),
        u0: ops.space.interpolate(|_| [1.0, 2.0, 3.0]),
        ve: vec![ops.space.interpolate(|_| [0.1, 0.0, 0.0])],
    };
    let e = energy(&s, &ops);
    let expected = ops.material.density * (0.25 + 1.0 + 4.0);
    assert!((e.kinetic - expected).abs() < 1e-12 * expected);
    assert!(e.elastic.abs() < 1e-12);
    assert!(e.viscoelastic[0].abs() < 1e-12);
}

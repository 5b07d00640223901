//! Time stepping with continuous piecewise-linear trial functions in time.
//!
//! The production path ([`Integrator::step_reduced`]) solves one symmetric
//! positive definite system per step for the velocity, then updates the
//! displacement and the internal variables explicitly. [`Integrator::step_full`]
//! solves the coupled block system with all unknowns and serves as a reference.

use crate::assembly::{
    assemble_body_load, assemble_deviatoric, assemble_elastic, assemble_mass, assemble_traction_load,
    default_load_degree, LoadSpec,
};
use crate::fespace::{BoundaryData, ConstrainedSystem, Constraints, FeSpace};
use crate::linalg::{CsrMatrix, EnvelopeLu, SolverSettings};
use crate::material::{step_coefficients, MaterialModel, StepCoefficients};
use crate::{Error, Result};
use std::sync::Arc;

/// Nodal coefficient vectors at one time node (Cartesian components).
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    /// Velocity.
    pub u1: Vec<f64>,
    /// Displacement.
    pub u0: Vec<f64>,
    /// One internal variable per Maxwell arm.
    pub ve: Vec<Vec<f64>>,
}

impl State {
    pub fn zero(n_dofs: usize, n_arms: usize, t: f64) -> Self {
        Self {
            t,
            u1: vec![0.0; n_dofs],
            u0: vec![0.0; n_dofs],
            ve: vec![vec![0.0; n_dofs]; n_arms],
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.u1.len()
    }

    /// Largest absolute entry over all fields.
    pub fn max_abs(&self) -> f64 {
        let mut m = crate::linalg::max_abs(&self.u1).max(crate::linalg::max_abs(&self.u0));
        for v in &self.ve {
            m = m.max(crate::linalg::max_abs(v));
        }
        m
    }
}

/// Strictly increasing time nodes.
#[derive(Clone, Debug)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    uniform_step: Option<f64>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidInput("a time grid needs at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("time nodes must be strictly increasing".into()));
        }
        Ok(Self {
            nodes,
            uniform_step: None,
        })
    }

    /// `n` equal steps of size `k` starting at `t0`.
    pub fn uniform(t0: f64, k: f64, n: usize) -> Result<Self> {
        if !(k > 0.0) || n == 0 {
            return Err(Error::InvalidInput(format!("invalid uniform grid: k = {k}, n = {n}")));
        }
        Ok(Self {
            nodes: (0..=n).map(|i| t0 + i as f64 * k).collect(),
            uniform_step: Some(k),
        })
    }

    /// Uniform grid on `[t0, t1]` with steps no larger than `k_max`.
    pub fn covering(t0: f64, t1: f64, k_max: f64) -> Result<Self> {
        let n = ((t1 - t0) / k_max - 1e-9).ceil().max(1.0) as usize;
        Self::uniform(t0, (t1 - t0) / n as f64, n)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Length of step `n` (1-based: the interval `(t_{n-1}, t_n]`).
    pub fn step(&self, n: usize) -> f64 {
        self.uniform_step
            .unwrap_or_else(|| self.nodes[n] - self.nodes[n - 1])
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}

/// Time-independent operators on one space.
#[derive(Debug)]
pub struct Operators {
    pub space: Arc<FeSpace>,
    pub material: MaterialModel,
    /// `ρ M`
    pub mass: CsrMatrix,
    pub elastic: CsrMatrix,
    pub deviatoric: Vec<CsrMatrix>,
    pub load_degree: usize,
}

impl Operators {
    pub fn new(space: Arc<FeSpace>, material: MaterialModel) -> Result<Self> {
        material.validate()?;
        let mass = assemble_mass(&space, material.density);
        let elastic = assemble_elastic(&space, material.mu, material.lambda);
        let deviatoric = material
            .arms
            .iter()
            .map(|arm| assemble_deviatoric(&space, arm.kappa))
            .collect();
        let load_degree = default_load_degree(space.degree());
        Ok(Self {
            space,
            material,
            mass,
            elastic,
            deviatoric,
            load_degree,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    pub fn n_arms(&self) -> usize {
        self.deviatoric.len()
    }
}

/// `U_VEⁿ = α (U1ⁿ + U1ⁿ⁻¹) + β U_VEⁿ⁻¹` for every arm.
pub fn reconstruct_ve(u1_prev: &[f64], u1_next: &[f64], ve_prev: &[Vec<f64>], coeffs: &StepCoefficients) -> Vec<Vec<f64>> {
    ve_prev
        .iter()
        .enumerate()
        .map(|(m, prev)| {
            let (a, b) = (coeffs.alpha[m], coeffs.beta[m]);
            prev.iter()
                .zip(u1_prev.iter().zip(u1_next))
                .map(|(v, (p, n))| a * (n + p) + b * v)
                .collect()
        })
        .collect()
}

/// `∫_{t_prev}^{t_next} F(t) dt`: two-point Gauss in time for the body force,
/// trapezoid for the traction.
pub fn load_time_integral(space: &FeSpace, loads: &dyn LoadSpec, t_prev: f64, t_next: f64, degree: usize) -> Vec<f64> {
    if let Some(v) = loads.time_integral(t_prev, t_next) {
        return v;
    }
    let mut out = vec![0.0; space.n_dofs()];
    add_body_time_integral(space, loads, t_prev, t_next, degree, &mut out);
    if loads.has_traction() {
        let half = 0.5 * (t_next - t_prev);
        let a = assemble_traction_load(space, loads, t_prev, degree);
        let b = assemble_traction_load(space, loads, t_next, degree);
        for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(&b)) {
            *o += half * (x + y);
        }
    }
    out
}

fn add_body_time_integral(space: &FeSpace, loads: &dyn LoadSpec, t_prev: f64, t_next: f64, degree: usize, out: &mut [f64]) {
    if !loads.has_body_force() {
        return;
    }
    let half = 0.5 * (t_next - t_prev);
    let mid = 0.5 * (t_next + t_prev);
    let offset = half / 3f64.sqrt();
    for t in [mid - offset, mid + offset] {
        let f = assemble_body_load(space, loads, t, degree);
        for (o, v) in out.iter_mut().zip(&f) {
            *o += half * v;
        }
    }
}

/// Stored energies at one time node plus accumulated dissipation.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// `ρ‖U1‖²`
    pub kinetic: f64,
    /// `⫴U0⫴²_E`
    pub elastic: f64,
    /// `⫴U_VE^m⫴²_{VE,m}` per arm.
    pub viscoelastic: Vec<f64>,
    pub dissipated: f64,
}

impl EnergyReport {
    pub fn viscoelastic_total(&self) -> f64 {
        self.viscoelastic.iter().sum()
    }

    /// Stored energy `⫴U⫴²_A`.
    pub fn stored(&self) -> f64 {
        self.kinetic + self.elastic + self.viscoelastic_total()
    }

    /// Stored energy plus everything dissipated so far.
    pub fn total(&self) -> f64 {
        self.stored() + self.dissipated
    }
}

/// Stored energies of a state (dissipation left at zero).
pub fn energy(state: &State, ops: &Operators) -> EnergyReport {
    EnergyReport {
        t: state.t,
        kinetic: ops.mass.bilinear(&state.u1, &state.u1),
        elastic: ops.elastic.bilinear(&state.u0, &state.u0),
        viscoelastic: ops
            .deviatoric
            .iter()
            .zip(&state.ve)
            .map(|(k, v)| k.bilinear(v, v))
            .collect(),
        dissipated: 0.0,
    }
}

/// Dissipation over one step: `Σ_m (2/τ_m) k ⫴(U_VEⁿ + U_VEⁿ⁻¹)/2⫴²`.
pub fn dissipation_increment(prev: &State, next: &State, ops: &Operators) -> f64 {
    let k = next.t - prev.t;
    let mut sum = 0.0;
    for (m, arm) in ops.material.arms.iter().enumerate() {
        let mid: Vec<f64> = prev.ve[m]
            .iter()
            .zip(&next.ve[m])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        sum += 2.0 / arm.tau * k * ops.deviatoric[m].bilinear(&mid, &mid);
    }
    sum
}

/// Time series of energy reports with running dissipation.
#[derive(Clone, Debug, Default)]
pub struct EnergyLedger {
    pub reports: Vec<EnergyReport>,
}

impl EnergyLedger {
    pub fn start(state: &State, ops: &Operators) -> Self {
        Self {
            reports: vec![energy(state, ops)],
        }
    }

    /// Appends the report of `next`, adding the step's dissipation.
    pub fn record_step(&mut self, prev: &State, next: &State, ops: &Operators) {
        let before = self.reports.last().map_or(0.0, |r| r.dissipated);
        let mut report = energy(next, ops);
        report.dissipated = before + dissipation_increment(prev, next, ops);
        self.reports.push(report);
    }

    /// Largest `|total(t_n) − total(t_0)| / total(t_0)`.
    pub fn max_relative_drift(&self) -> f64 {
        let Some(first) = self.reports.first() else { return 0.0 };
        let e0 = first.total();
        self.reports
            .iter()
            .map(|r| (r.total() - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

struct SchurCache {
    k: f64,
    coeffs: StepCoefficients,
    system: ConstrainedSystem,
    /// `ρM − (k²/4) K_E − Σ (kα/2) K_VE`, applied to the previous velocity.
    explicit: CsrMatrix,
}

/// Factorized block operator of the coupled method for one step size.
struct BlockCache {
    k: f64,
    coeffs: StepCoefficients,
    /// Rotated mass, elastic and deviatoric forms.
    mass: CsrMatrix,
    elastic: CsrMatrix,
    deviatoric: Vec<CsrMatrix>,
    big: CsrMatrix,
    /// Interleaved unknown → free index.
    map: Vec<Option<usize>>,
    lu: EnvelopeLu,
}

/// Stepper bound to one operator set and one constraint set.
pub struct Integrator {
    ops: Arc<Operators>,
    constraints: Constraints,
    settings: SolverSettings,
    schur: Option<SchurCache>,
    block: Option<BlockCache>,
}

impl Integrator {
    pub fn new(ops: Arc<Operators>, constraints: Constraints, settings: SolverSettings) -> Self {
        Self {
            ops,
            constraints,
            settings,
            schur: None,
            block: None,
        }
    }

    pub fn operators(&self) -> &Arc<Operators> {
        &self.ops
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    /// Overwrites the constrained components of `state` with the data at
    /// `state.t`: displacement values and their time derivative.
    pub fn impose_initial(&self, state: &mut State, bc: &dyn BoundaryData) {
        let c = &self.constraints;
        let space = &self.ops.space;
        let mut u0 = c.to_rotated(&state.u0);
        c.impose(&mut u0, &c.prescribed_displacement(space, bc, state.t));
        state.u0 = c.from_rotated(&u0);
        let mut u1 = c.to_rotated(&state.u1);
        c.impose(&mut u1, &c.prescribed_velocity(space, bc, state.t));
        state.u1 = c.from_rotated(&u1);
    }

    /// Static elastic equilibrium `K_E U0 = F(t)` under the constraint data at `t`.
    pub fn solve_static(&self, loads: &dyn LoadSpec, bc: &dyn BoundaryData, t: f64) -> Result<Vec<f64>> {
        let space = &self.ops.space;
        let system = ConstrainedSystem::new(&self.ops.elastic, &self.constraints, &self.settings)?;
        let rhs = crate::assembly::assemble_load(space, loads, t, self.ops.load_degree);
        let prescribed = self.constraints.prescribed_displacement(space, bc, t);
        let y = system.solve_rotated(&self.constraints.to_rotated(&rhs), &prescribed, None)?;
        Ok(self.constraints.from_rotated(&y))
    }

    fn prepare_schur(&mut self, k: f64) -> Result<()> {
        let stale = self.schur.as_ref().map_or(true, |c| c.k != k);
        if stale {
            let ops = &self.ops;
            let coeffs = step_coefficients(&ops.material.arms, k);
            let mut implicit: Vec<(f64, &CsrMatrix)> = vec![(1.0, &ops.mass), (0.25 * k * k, &ops.elastic)];
            let mut explicit: Vec<(f64, &CsrMatrix)> = vec![(1.0, &ops.mass), (-0.25 * k * k, &ops.elastic)];
            for (m, kve) in ops.deviatoric.iter().enumerate() {
                let w = 0.5 * k * coeffs.alpha[m];
                implicit.push((w, kve));
                explicit.push((-w, kve));
            }
            let matrix = CsrMatrix::linear_combination(&implicit);
            let system = ConstrainedSystem::new(&matrix, &self.constraints, &self.settings)?;
            self.schur = Some(SchurCache {
                k,
                coeffs,
                system,
                explicit: CsrMatrix::linear_combination(&explicit),
            });
        }
        Ok(())
    }

    /// Rotated prescribed velocity at `t_prev + k`, consistent with the
    /// trapezoidal displacement update.
    fn prescribed_velocity(&self, state: &State, k: f64, bc: &dyn BoundaryData) -> (Vec<f64>, Vec<f64>) {
        let c = &self.constraints;
        let u0_next = c.prescribed_displacement(&self.ops.space, bc, state.t + k);
        let u0_prev = c.to_rotated(&state.u0);
        let u1_prev = c.to_rotated(&state.u1);
        let mut v = vec![0.0; c.n_dofs()];
        for dof in 0..c.n_dofs() {
            if c.is_fixed(dof) {
                v[dof] = 2.0 * (u0_next[dof] - u0_prev[dof]) / k - u1_prev[dof];
            }
        }
        (v, u1_prev)
    }

    /// One step of the reduced method.
    pub fn step_reduced(&mut self, state: &State, k: f64, loads: &dyn LoadSpec, bc: &dyn BoundaryData) -> Result<State> {
        let ops = self.ops.clone();
        let t_next = state.t + k;
        let fint = load_time_integral(&ops.space, loads, state.t, t_next, ops.load_degree);
        let (prescribed, guess) = self.prescribed_velocity(state, k, bc);
        self.prepare_schur(k)?;
        let cache = self.schur.as_ref().expect("prepared");

        let mut rhs = cache.explicit.mul_vec(&state.u1);
        let ku0 = ops.elastic.mul_vec(&state.u0);
        for (r, (a, b)) in rhs.iter_mut().zip(ku0.iter().zip(&fint)) {
            *r += b - k * a;
        }
        for (m, kve) in ops.deviatoric.iter().enumerate() {
            let w = 0.5 * k * (1.0 + cache.coeffs.beta[m]);
            let kv = kve.mul_vec(&state.ve[m]);
            for (r, a) in rhs.iter_mut().zip(&kv) {
                *r -= w * a;
            }
        }

        let c = &self.constraints;
        let y = cache.system.solve_rotated(&c.to_rotated(&rhs), &prescribed, Some(&guess))?;
        let u1 = c.from_rotated(&y);
        let u0 = state
            .u0
            .iter()
            .zip(state.u1.iter().zip(&u1))
            .map(|(d, (p, n))| d + 0.5 * k * (p + n))
            .collect();
        let ve = reconstruct_ve(&state.u1, &u1, &state.ve, &cache.coeffs);
        Ok(State { t: t_next, u1, u0, ve })
    }

    /// One step of the coupled block method; all unknowns solved together.
    ///
    /// The internal-variable blocks are only invertible when the constraints
    /// remove the null space of the deviatoric forms (e.g. a clamped face).
    pub fn step_full(&mut self, state: &State, k: f64, loads: &dyn LoadSpec, bc: &dyn BoundaryData) -> Result<State> {
        self.prepare_block(k)?;
        let ops = self.ops.clone();
        let c = &self.constraints;
        let cache = self.block.as_ref().expect("prepared above");
        let n = ops.n_dofs();
        let arms = ops.n_arms();
        let nb = 2 + arms;
        let idx = |dof: usize, block: usize| dof * nb + block;
        let t_next = state.t + k;

        let u1p = c.to_rotated(&state.u1);
        let u0p = c.to_rotated(&state.u0);
        let vep: Vec<Vec<f64>> = state.ve.iter().map(|v| c.to_rotated(v)).collect();
        let fint = c.to_rotated(&load_time_integral(&ops.space, loads, state.t, t_next, ops.load_degree));

        let mut rhs = vec![0.0; n * nb];
        let mm = cache.mass.mul_vec(&u1p);
        let ku0 = cache.elastic.mul_vec(&u0p);
        let ku1 = cache.elastic.mul_vec(&u1p);
        for i in 0..n {
            rhs[idx(i, 0)] = mm[i] - 0.5 * k * ku0[i] + fint[i];
            rhs[idx(i, 1)] = ku0[i] + 0.5 * k * ku1[i];
        }
        for (m, (kv, arm)) in cache.deviatoric.iter().zip(&ops.material.arms).enumerate() {
            let r = 0.5 * k / arm.tau;
            let kvp = kv.mul_vec(&vep[m]);
            let ku1 = kv.mul_vec(&u1p);
            for i in 0..n {
                rhs[idx(i, 0)] -= 0.5 * k * kvp[i];
                rhs[idx(i, 2 + m)] = (1.0 - r) * kvp[i] + 0.5 * k * ku1[i];
            }
        }

        // prescribed values of the constrained unknowns
        let (u1_fixed, _) = self.prescribed_velocity(state, k, bc);
        let u0_fixed = c.prescribed_displacement(&ops.space, bc, t_next);
        let mut lifted = vec![0.0; n * nb];
        for dof in (0..n).filter(|&d| c.is_fixed(d)) {
            lifted[idx(dof, 0)] = u1_fixed[dof];
            lifted[idx(dof, 1)] = u0_fixed[dof];
            for m in 0..arms {
                lifted[idx(dof, 2 + m)] =
                    cache.coeffs.alpha[m] * (u1_fixed[dof] + u1p[dof]) + cache.coeffs.beta[m] * vep[m][dof];
            }
        }
        let coupling = cache.big.mul_vec(&lifted);
        let n_free = cache.map.iter().flatten().count();
        let mut b_free = vec![0.0; n_free];
        for (g, m) in cache.map.iter().enumerate() {
            if let Some(i) = m {
                b_free[*i] = rhs[g] - coupling[g];
            }
        }
        let x = cache.lu.solve(&b_free);
        let mut y = lifted;
        for (g, m) in cache.map.iter().enumerate() {
            if let Some(i) = m {
                y[g] = x[*i];
            }
        }
        let gather = |block: usize| c.from_rotated(&(0..n).map(|d| y[idx(d, block)]).collect::<Vec<_>>());
        Ok(State {
            t: t_next,
            u1: gather(0),
            u0: gather(1),
            ve: (0..arms).map(|m| gather(2 + m)).collect(),
        })
    }

    /// Assembles and factorizes the interleaved block operator (unknown
    /// `dof·(2 + M) + block`, blocks velocity, displacement, internal
    /// variables) unless it is cached for `k`.
    fn prepare_block(&mut self, k: f64) -> Result<()> {
        if self.block.as_ref().is_some_and(|b| b.k == k) {
            return Ok(());
        }
        let ops = &self.ops;
        let c = &self.constraints;
        let n = ops.n_dofs();
        let nb = 2 + ops.n_arms();
        let idx = |dof: usize, block: usize| dof * nb + block;
        let rot = |a: &CsrMatrix| {
            if c.has_rotations() {
                a.rotate_nodal_blocks(c.frames())
            } else {
                a.clone()
            }
        };
        let mass = rot(&ops.mass);
        let elastic = rot(&ops.elastic);
        let deviatoric: Vec<CsrMatrix> = ops.deviatoric.iter().map(rot).collect();

        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n * nb];
        for i in 0..n {
            let (cols, vals) = mass.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                rows[idx(i, 0)].push((idx(j, 0), v));
            }
            let (cols, vals) = elastic.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                rows[idx(i, 0)].push((idx(j, 1), 0.5 * k * v));
                rows[idx(i, 1)].push((idx(j, 0), -0.5 * k * v));
                rows[idx(i, 1)].push((idx(j, 1), v));
            }
        }
        for (m, (kv, arm)) in deviatoric.iter().zip(&ops.material.arms).enumerate() {
            let b = 2 + m;
            let r = 0.5 * k / arm.tau;
            for i in 0..n {
                let (cols, vals) = kv.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    rows[idx(i, 0)].push((idx(j, b), 0.5 * k * v));
                    rows[idx(i, b)].push((idx(j, 0), -0.5 * k * v));
                    rows[idx(i, b)].push((idx(j, b), (1.0 + r) * v));
                }
            }
        }
        let big = CsrMatrix::from_rows(n * nb, rows);
        let mut map = vec![None; n * nb];
        let mut n_free = 0;
        for dof in (0..n).filter(|&d| !c.is_fixed(d)) {
            for b in 0..nb {
                map[idx(dof, b)] = Some(n_free);
                n_free += 1;
            }
        }
        let lu = EnvelopeLu::factor(&big.principal_submatrix(&map, n_free))?;
        self.block = Some(BlockCache {
            k,
            coeffs: step_coefficients(&ops.material.arms, k),
            mass,
            elastic,
            deviatoric,
            big,
            map,
            lu,
        });
        Ok(())
    }

    /// Advances over every interval of `grid` (its first node must equal
    /// `initial.t`), calling `on_step(prev, next)` after each step.
    pub fn run(
        &mut self,
        initial: State,
        grid: &TimeGrid,
        loads: &dyn LoadSpec,
        bc: &dyn BoundaryData,
        mut on_step: impl FnMut(&State, &State) -> Result<()>,
    ) -> Result<State> {
        if (grid.start() - initial.t).abs() > 1e-12 * grid.start().abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "grid starts at {} but state is at {}",
                grid.start(),
                initial.t
            )));
        }
        let mut state = initial;
        for n in 1..=grid.n_steps() {
            let mut next = self.step_reduced(&state, grid.step(n), loads, bc)?;
            next.t = grid.nodes()[n];
            on_step(&state, &next)?;
            state = next;
        }
        Ok(state)
    }
}

use std::sync::Arc;

use super::manufactured::{manufactured_mesh, ManufacturedLoads, ManufacturedSolution};
use super::norms::{discrete_distance, error_norms, ErrorNorms};
use crate::dynamics::{Integrator, Operators, State, TimeGrid};
use crate::fespace::{Constraints, FeSpace, NoBoundaryData};
use crate::linalg::SolverSettings;
use crate::{Error, Result};

/// One run of the sweep: `n` cells per axis (`h = 1/n`), `steps` uniform
/// steps over `[0, T]`, polynomial degree `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConvergenceCase {
    pub n: usize,
    pub steps: usize,
    pub p: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub k: f64,
    pub p: usize,
    pub energy_error: f64,
    pub l2_error: f64,
    pub wall_seconds: f64,
}

struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}

/// Runs the manufactured problem on `[0, t_end]` and returns the final state
/// with its error norms.
pub fn run_manufactured(
    case: ConvergenceCase,
    solution: &ManufacturedSolution,
    t_end: f64,
    settings: &SolverSettings,
) -> Result<(State, ErrorNorms, Arc<Operators>)> {
    let mesh = Arc::new(manufactured_mesh(case.n)?);
    let space = Arc::new(FeSpace::new(mesh, case.p)?);
    let ops = Arc::new(Operators::new(space.clone(), solution.material.clone())?);
    let loads = ManufacturedLoads::new(solution.clone(), &space, ops.load_degree);
    let constraints = Constraints::free(&space).apply_dirichlet(&space, |_| true);
    let mut integrator = Integrator::new(ops.clone(), constraints, settings.clone());
    let grid = TimeGrid::uniform(0.0, t_end / case.steps as f64, case.steps)?;
    let initial = State::zero(space.n_dofs(), ops.n_arms(), 0.0);
    let end = integrator.run(initial, &grid, &loads, &NoBoundaryData, |_, _| Ok(()))?;
    let norms = error_norms(&end, solution, &ops);
    Ok((end, norms, ops))
}

/// One table row; wall time covers assembly, stepping and error evaluation.
pub fn convergence_row(
    case: ConvergenceCase,
    solution: &ManufacturedSolution,
    t_end: f64,
    settings: &SolverSettings,
) -> Result<ConvergenceRow> {
    let clock = Stopwatch::start();
    let (_, norms, _) = run_manufactured(case, solution, t_end, settings)?;
    Ok(ConvergenceRow {
        h: 1.0 / case.n as f64,
        k: t_end / case.steps as f64,
        p: case.p,
        energy_error: norms.energy,
        l2_error: norms.l2,
        wall_seconds: clock.seconds(),
    })
}

/// Sequential sweep; failed rows are reported alongside the table instead of
/// aborting the remaining runs.
pub fn convergence_study(
    cases: &[ConvergenceCase],
    solution: &ManufacturedSolution,
    t_end: f64,
    settings: &SolverSettings,
) -> (ConvergenceTable, Vec<(ConvergenceCase, Error)>) {
    let mut table = ConvergenceTable::default();
    let mut failures = Vec::new();
    for &case in cases {
        match convergence_row(case, solution, t_end, settings) {
            Ok(row) => table.rows.push(row),
            Err(e) => failures.push((case, e)),
        }
    }
    table.sort();
    (table, failures)
}

/// Temporal errors isolated from the spatial one: end-time distance of each
/// run in `steps` to a fine-step reference on the same mesh and degree.
/// Returns `(k, distance)` pairs.
pub fn temporal_distances(
    n: usize,
    p: usize,
    steps: &[usize],
    reference_steps: usize,
    solution: &ManufacturedSolution,
    t_end: f64,
    settings: &SolverSettings,
) -> Result<Vec<(f64, ErrorNorms)>> {
    let run = |s: usize| run_manufactured(ConvergenceCase { n, steps: s, p }, solution, t_end, settings);
    let (reference, _, ops) = run(reference_steps)?;
    steps
        .iter()
        .map(|&s| {
            let (state, _, _) = run(s)?;
            Ok((t_end / s as f64, discrete_distance(&state, &reference, &ops)))
        })
        .collect()
}

/// Which discretization parameter a rate is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Refinement {
    Space,
    Time,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rate {
    Value(f64),
    /// Errors of the finest pairs are below the noise floor.
    Saturated,
    /// Fewer than two rows.
    Undetermined,
}

impl Rate {
    pub fn value(&self) -> Option<f64> {
        match self {
            Rate::Value(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rate::Value(v) => write!(f, "{v:.3}"),
            Rate::Saturated => f.write_str("saturated"),
            Rate::Undetermined => f.write_str("n/a"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FittedRates {
    pub energy: Rate,
    pub l2: Rate,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

fn observed(coarse: (f64, f64), fine: (f64, f64), floor: f64) -> Option<f64> {
    if coarse.1 <= floor || fine.1 <= floor {
        return None;
    }
    Some((coarse.1 / fine.1).ln() / (coarse.0 / fine.0).ln())
}

/// Rate from the finest pair of consecutive rows whose errors both exceed
/// `floor`.
pub fn finest_rate(points: &[(f64, f64)], floor: f64) -> Rate {
    if points.len() < 2 {
        return Rate::Undetermined;
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    sorted
        .windows(2)
        .rev()
        .find_map(|w| observed(w[0], w[1], floor))
        .map_or(Rate::Saturated, Rate::Value)
}

impl ConvergenceTable {
    /// Orders rows by degree, then from coarse to fine in `h`, then in `k`.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.p.cmp(&b.p)
                .then(b.h.total_cmp(&a.h))
                .then(b.k.total_cmp(&a.k))
        });
    }

    /// Rates over the rows of degree `p` against `h` or `k`. Rows must vary
    /// only in the chosen parameter.
    pub fn rates(&self, p: usize, by: Refinement, floor: f64) -> FittedRates {
        let rows: Vec<&ConvergenceRow> = self.rows.iter().filter(|r| r.p == p).collect();
        let param = |r: &ConvergenceRow| match by {
            Refinement::Space => r.h,
            Refinement::Time => r.k,
        };
        let energy: Vec<(f64, f64)> = rows.iter().map(|r| (param(r), r.energy_error)).collect();
        let l2: Vec<(f64, f64)> = rows.iter().map(|r| (param(r), r.l2_error)).collect();
        FittedRates {
            energy: finest_rate(&energy, floor),
            l2: finest_rate(&l2, floor),
        }
    }

    /// Consecutive-pair rates of the rows of degree `p`, coarse to fine.
    pub fn pair_rates(&self, p: usize, by: Refinement) -> Vec<(f64, f64)> {
        let rows: Vec<&ConvergenceRow> = self.rows.iter().filter(|r| r.p == p).collect();
        rows.windows(2)
            .map(|w| {
                let ratio = match by {
                    Refinement::Space => w[0].h / w[1].h,
                    Refinement::Time => w[0].k / w[1].k,
                };
                (
                    (w[0].energy_error / w[1].energy_error).ln() / ratio.ln(),
                    (w[0].l2_error / w[1].l2_error).ln() / ratio.ln(),
                )
            })
            .collect()
    }
}

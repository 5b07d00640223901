//! Release of a pre-deformed, clamped cube with no external forces.

use std::sync::Arc;

use crate::assembly::NoLoads;
use crate::dynamics::{EnergyLedger, Integrator, Operators, State, TimeGrid};
use crate::fespace::{BoundaryData, Constraints, FeSpace};
use crate::linalg::SolverSettings;
use crate::material::MaterialModel;
use crate::mesh::{build_box_mesh, BoundaryTag, BoxFace};
use crate::{Error, Result, Vec3};

pub const CLAMPED: &str = "bottom";
pub const HELD: &str = "held";

#[derive(Clone, Debug)]
pub struct ConservationConfig {
    /// Cells per axis.
    pub n: usize,
    pub extent: Vec3,
    pub p: usize,
    pub k: f64,
    pub material: MaterialModel,
    /// Displacement prescribed on the held part of the lid.
    pub lift: Vec3,
    /// The lid region `x ≤ held_fraction · extent[0]` is held.
    pub held_fraction: f64,
    /// Release time; the lid is held on `[0, release]`.
    pub release: f64,
    pub t_end: f64,
    pub settings: SolverSettings,
}

impl ConservationConfig {
    /// `h = 1/5`, `p = 2`, `k = 0.01`, 2/5 of the lid lifted by 0.2, released
    /// at 0.1, end time 0.5.
    pub fn standard(material: MaterialModel) -> Self {
        Self {
            n: 5,
            extent: [1.0; 3],
            p: 2,
            k: 0.01,
            material,
            lift: [0.0, 0.0, 0.2],
            held_fraction: 0.4,
            release: 0.1,
            t_end: 0.5,
            settings: SolverSettings::default(),
        }
    }
}

struct Lift(Vec3);

impl BoundaryData for Lift {
    fn dirichlet(&self, label: &str, _x: Vec3, _t: f64) -> Vec3 {
        if label == HELD {
            self.0
        } else {
            [0.0; 3]
        }
    }
}

#[derive(Debug)]
pub struct ConservationRun {
    pub operators: Arc<Operators>,
    pub initial: State,
    pub released: State,
    pub last: State,
    pub ledger: EnergyLedger,
}

/// Static elastic solve for the held configuration, a held phase with zero
/// velocity on the lifted region, then free motion after release. The ledger
/// holds one report per time node including `t = 0`.
pub fn conservation_experiment(
    config: &ConservationConfig,
    mut on_step: impl FnMut(&State, &Operators) -> Result<()>,
) -> Result<ConservationRun> {
    if !(config.release >= 0.0 && config.t_end > config.release) {
        return Err(Error::InvalidInput(format!(
            "need 0 <= release < t_end, got release = {}, t_end = {}",
            config.release, config.t_end
        )));
    }
    let fraction = config.held_fraction * config.extent[0];
    let mesh = build_box_mesh(config.n, config.extent, |face, centroid| match face {
        BoxFace::ZMin => BoundaryTag::dirichlet(CLAMPED),
        BoxFace::ZMax if centroid[0] <= fraction => BoundaryTag::dirichlet(HELD),
        _ => BoundaryTag::neumann("free"),
    })?;
    let space = Arc::new(FeSpace::new(Arc::new(mesh), config.p)?);
    let ops = Arc::new(Operators::new(space.clone(), config.material.clone())?);
    let lift = Lift(config.lift);

    let held = Constraints::free(&space).apply_dirichlet(&space, |_| true);
    let mut integrator = Integrator::new(ops.clone(), held, config.settings.clone());
    let mut state = State::zero(space.n_dofs(), ops.n_arms(), 0.0);
    state.u0 = integrator.solve_static(&NoLoads, &lift, 0.0)?;
    let initial = state.clone();
    on_step(&state, &ops)?;

    let mut ledger = EnergyLedger::start(&state, &ops);
    let mut record = |prev: &State, next: &State| {
        ledger.record_step(prev, next, &ops);
        on_step(next, &ops)
    };
    if config.release > 0.0 {
        let grid = TimeGrid::covering(0.0, config.release, config.k)?;
        state = integrator.run(state, &grid, &NoLoads, &lift, &mut record)?;
    }
    let released = state.clone();

    let free = Constraints::free(&space).apply_dirichlet(&space, |tag| tag.label == CLAMPED);
    let mut integrator = Integrator::new(ops.clone(), free, config.settings.clone());
    let grid = TimeGrid::covering(config.release, config.t_end, config.k)?;
    let last = integrator.run(state, &grid, &NoLoads, &lift, &mut record)?;
    Ok(ConservationRun {
        operators: ops,
        initial,
        released,
        last,
        ledger,
    })
}

//! Radial shaft seal: a clamped pipe whose inner surface follows an expanded,
//! orbiting shaft through a slip condition.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dynamics::{Integrator, Operators, State, TimeGrid};
use crate::fespace::{triangle_quadrature, BoundaryData, ConstrainedSystem, Constraints, FeSpace};
use crate::linalg::SolverSettings;
use crate::material::{MaterialModel, MaxwellArm};
use crate::mesh::{build_annulus_mesh, AnnulusDivisions, BoundaryKind, ANNULUS_INNER};
use crate::stress::{normal_stress, stress_at};
use crate::{assembly::NoLoads, Error, Result, Vec3};

/// Contact pressure `P = −n·σn` (compression positive) on slip facets.
#[derive(Debug)]
pub struct ContactPressure {
    facets: Vec<usize>,
    /// Per mesh vertex: `(index into facets, facet area)`.
    vertex_facets: Vec<Vec<(usize, f64)>>,
}

impl ContactPressure {
    pub fn new(ops: &Operators, facets: Vec<usize>) -> Result<Self> {
        let mesh = ops.space.mesh();
        let mut vertex_facets = vec![Vec::new(); mesh.vertices().len()];
        for (i, &f) in facets.iter().enumerate() {
            let facet = mesh
                .boundary_facets()
                .get(f)
                .ok_or_else(|| Error::InvalidInput(format!("no boundary facet {f}")))?;
            if facet.tag.kind != BoundaryKind::Slip {
                return Err(Error::InvalidInput(format!(
                    "facet {f} is tagged {:?} '{}', not slip",
                    facet.tag.kind, facet.tag.label
                )));
            }
            for &v in &facet.vertices {
                vertex_facets[v].push((i, mesh.facet_area(f)));
            }
        }
        Ok(Self { facets, vertex_facets })
    }

    /// All slip facets.
    pub fn on_slip_boundary(ops: &Operators) -> Result<Self> {
        let facets = ops
            .space
            .mesh()
            .boundary_facets()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.tag.kind == BoundaryKind::Slip)
            .map(|(i, _)| i)
            .collect();
        Self::new(ops, facets)
    }

    pub fn facets(&self) -> &[usize] {
        &self.facets
    }

    fn facet_mean(&self, ops: &Operators, state: &State, f: usize) -> f64 {
        let mesh = ops.space.mesh();
        let facet = &mesh.boundary_facets()[f];
        let n = mesh.boundary_normal(f);
        let geo = ops.space.geometry(facet.tet);
        let rule = triangle_quadrature((2 * (ops.space.degree() - 1)).max(1)).expect("low degree");
        let mut sum = 0.0;
        for (q, tri) in rule.points.iter().enumerate() {
            let bary = FeSpace::face_point(facet.opposite, tri);
            sum += rule.weights[q] * -normal_stress(&stress_at(ops, state, facet.tet, &geo, bary), &n);
        }
        // weights sum to 1/2
        2.0 * sum
    }

    /// Area-weighted average of the adjacent facet means at `vertex`, or
    /// `None` off the slip surface.
    pub fn at_vertex(&self, ops: &Operators, state: &State, vertex: usize) -> Option<f64> {
        let adj = &self.vertex_facets[vertex];
        if adj.is_empty() {
            return None;
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for &(i, area) in adj {
            num += area * self.facet_mean(ops, state, self.facets[i]);
            den += area;
        }
        Some(num / den)
    }

    /// Values at every mesh vertex.
    pub fn vertex_values(&self, ops: &Operators, state: &State) -> Vec<Option<f64>> {
        let means: Vec<f64> = self
            .facets
            .iter()
            .map(|&f| self.facet_mean(ops, state, f))
            .collect();
        self.vertex_facets
            .iter()
            .map(|adj| {
                if adj.is_empty() {
                    return None;
                }
                let den: f64 = adj.iter().map(|a| a.1).sum();
                Some(adj.iter().map(|&(i, a)| a * means[i]).sum::<f64>() / den)
            })
            .collect()
    }
}

/// Per-vertex contact pressure on the given slip facets.
pub fn compute_contact_pressure(ops: &Operators, state: &State, facets: &[usize]) -> Result<Vec<Option<f64>>> {
    Ok(ContactPressure::new(ops, facets.to_vec())?.vertex_values(ops, state))
}

/// Shaft surface displacement `ΔR r̂ + c(t)` with centre orbit
/// `c(t) = (A_x cos 2πωt, A_y sin 2πωt, 0)`, imposed in the normal direction.
#[derive(Clone, Copy, Debug)]
pub struct ShaftMotion {
    pub expansion: f64,
    pub amplitude_x: f64,
    pub amplitude_y: f64,
    /// Frequency in Hz.
    pub omega: f64,
}

impl ShaftMotion {
    fn radial(x: Vec3) -> Vec3 {
        let r = x[0].hypot(x[1]);
        [x[0] / r, x[1] / r, 0.0]
    }

    fn centre(&self, t: f64) -> Vec3 {
        let phase = 2.0 * PI * self.omega * t;
        [self.amplitude_x * phase.cos(), self.amplitude_y * phase.sin(), 0.0]
    }

    fn centre_rate(&self, t: f64) -> Vec3 {
        let w = 2.0 * PI * self.omega;
        let phase = w * t;
        [-w * self.amplitude_x * phase.sin(), w * self.amplitude_y * phase.cos(), 0.0]
    }
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl BoundaryData for ShaftMotion {
    fn normal_displacement(&self, label: &str, x: Vec3, n: Vec3, t: f64) -> f64 {
        if label != ANNULUS_INNER {
            return 0.0;
        }
        let r = Self::radial(x);
        let c = self.centre(t);
        dot(&[self.expansion * r[0] + c[0], self.expansion * r[1] + c[1], 0.0], &n)
    }

    fn normal_velocity(&self, label: &str, _x: Vec3, n: Vec3, t: f64) -> f64 {
        if label != ANNULUS_INNER {
            return 0.0;
        }
        dot(&self.centre_rate(t), &n)
    }
}

#[derive(Clone, Debug)]
pub struct SealConfig {
    pub r_in: f64,
    pub r_out: f64,
    pub length: f64,
    pub divisions: AnnulusDivisions,
    pub p: usize,
    pub material: MaterialModel,
    /// Radial expansion as a fraction of `r_in`.
    pub expansion: f64,
    /// Orbit amplitude as a fraction of `r_in`.
    pub amplitude: f64,
    /// `0` for a circular orbit; the y semi-axis is `amplitude·(1 − e)`.
    pub eccentricity: f64,
    /// Probe positions as fractions of the length, on the inner surface at θ = 0.
    pub stations: Vec<f64>,
    pub cycles: usize,
    pub measure_cycles: usize,
    pub steps_per_cycle: usize,
    pub settings: SolverSettings,
}

/// Relaxation arms of the fabricated seal elastomer.
pub fn seal_arms() -> Vec<MaxwellArm> {
    [(3.5e6, 1e-2), (4.0e6, 1e-1), (2.5e5, 1.0), (2.5e5, 1e1), (5.0e5, 1e2)]
        .iter()
        .map(|&(kappa, tau)| MaxwellArm { kappa, tau })
        .collect()
}

impl SealConfig {
    /// 6 mm / 10 mm / 20 mm pipe, 2 × 24 × 10 cells (2880 tets), P2,
    /// E = 0.5 MPa, ν = 0.39, ρ = 1100, 1 % expansion, 0.1 % circular orbit.
    pub fn standard() -> Self {
        Self {
            r_in: 0.6e-2,
            r_out: 1.0e-2,
            length: 2.0e-2,
            divisions: AnnulusDivisions {
                radial: 2,
                angular: 24,
                axial: 10,
            },
            p: 2,
            material: MaterialModel::from_engineering(1100.0, 0.5e6, 0.39, seal_arms()).expect("valid constants"),
            expansion: 0.01,
            amplitude: 0.001,
            eccentricity: 0.0,
            stations: vec![0.0, 0.25, 0.5],
            cycles: 3,
            measure_cycles: 1,
            steps_per_cycle: 40,
            settings: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.measure_cycles == 0 || self.measure_cycles > self.cycles {
            return Err(Error::InvalidInput(format!(
                "measure_cycles must be in 1..={}, got {}",
                self.cycles, self.measure_cycles
            )));
        }
        if self.steps_per_cycle < 4 {
            return Err(Error::InvalidInput("steps_per_cycle must be at least 4".into()));
        }
        if !(0.0..1.0).contains(&self.eccentricity) {
            return Err(Error::InvalidInput(format!(
                "eccentricity must be in [0, 1), got {}",
                self.eccentricity
            )));
        }
        if self.stations.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidInput("stations must be fractions in [0, 1]".into()));
        }
        self.material.validate()
    }

    pub fn motion(&self, omega: f64) -> ShaftMotion {
        let a = self.amplitude * self.r_in;
        ShaftMotion {
            expansion: self.expansion * self.r_in,
            amplitude_x: a,
            amplitude_y: a * (1.0 - self.eccentricity),
            omega,
        }
    }
}

/// Pressure range at one probe over the measured cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct StationRange {
    pub station: f64,
    pub vertex: usize,
    pub p_min: f64,
    pub p_max: f64,
}

/// Operators and probes of the seal, shared by all frequencies.
pub struct SealModel {
    pub config: SealConfig,
    pub operators: Arc<Operators>,
    pub constraints: Constraints,
    pub pressure: ContactPressure,
    pub station_vertices: Vec<usize>,
}

impl SealModel {
    pub fn new(config: SealConfig) -> Result<Self> {
        config.validate()?;
        let mesh = build_annulus_mesh(config.r_in, config.r_out, config.length, config.divisions)?;
        let space = Arc::new(FeSpace::new(Arc::new(mesh), config.p)?);
        let operators = Arc::new(Operators::new(space.clone(), config.material.clone())?);
        let constraints = Constraints::free(&space)
            .apply_dirichlet(&space, |_| true)
            .apply_slip(&space, |_| true)?;
        let pressure = ContactPressure::on_slip_boundary(&operators)?;
        let station_vertices = config
            .stations
            .iter()
            .map(|&s| {
                let target = [config.r_in, 0.0, s * config.length];
                nearest_slip_vertex(&operators, &pressure, target)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            operators,
            constraints,
            pressure,
            station_vertices,
        })
    }

    /// Static elastic solutions for the expansion alone and for unit orbit
    /// offsets along x and y.
    fn static_fields(&self, motion: &ShaftMotion) -> Result<[Vec<f64>; 3]> {
        let ops = &self.operators;
        let c = &self.constraints;
        let system = ConstrainedSystem::new(&ops.elastic, c, &self.config.settings)?;
        let zero = vec![0.0; ops.n_dofs()];
        let solve = |m: ShaftMotion| -> Result<Vec<f64>> {
            let data = c.prescribed_displacement(&ops.space, &m, 0.0);
            Ok(c.from_rotated(&system.solve_rotated(&zero, &data, None)?))
        };
        let none = ShaftMotion {
            expansion: 0.0,
            amplitude_x: 0.0,
            amplitude_y: 0.0,
            omega: 0.0,
        };
        // sin(2π·1·0.25) = 1 picks the y offset alone
        let sin_part = ShaftMotion {
            amplitude_y: motion.amplitude_y,
            omega: 1.0,
            ..none
        };
        let data = c.prescribed_displacement(&ops.space, &sin_part, 0.25);
        let uy = c.from_rotated(&system.solve_rotated(&zero, &data, None)?);
        Ok([
            solve(ShaftMotion {
                expansion: motion.expansion,
                ..none
            })?,
            solve(ShaftMotion {
                amplitude_x: motion.amplitude_x,
                ..none
            })?,
            uy,
        ])
    }

    /// Relaxed preload plus the quasi-static periodic response of the orbit:
    /// displacement from static solves, each arm's internal variable from the
    /// periodic solution of its relaxation equation, velocity from the orbit rate.
    pub fn initial_state(&self, omega: f64) -> Result<State> {
        let motion = self.config.motion(omega);
        let [pre, ux, uy] = self.static_fields(&motion)?;
        let w = 2.0 * PI * omega;
        let n = self.operators.n_dofs();
        let mut state = State::zero(n, self.operators.n_arms(), 0.0);
        for i in 0..n {
            state.u0[i] = pre[i] + ux[i];
            state.u1[i] = w * uy[i];
        }
        for (m, arm) in self.operators.material.arms.iter().enumerate() {
            let x = w * arm.tau;
            let re = x * x / (1.0 + x * x);
            let im = x / (1.0 + x * x);
            for i in 0..n {
                state.ve[m][i] = re * ux[i] + im * uy[i];
            }
        }
        Ok(state)
    }

    /// Runs `cycles` periods at frequency `omega` (Hz) and returns the
    /// pressure range at each probe over the final `measure_cycles` periods.
    pub fn run_frequency(&self, omega: f64, mut on_step: impl FnMut(&State) -> Result<()>) -> Result<Vec<StationRange>> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!("frequency must be positive, got {omega}")));
        }
        let cfg = &self.config;
        let motion = cfg.motion(omega);
        let k = 1.0 / (omega * cfg.steps_per_cycle as f64);
        let steps = cfg.cycles * cfg.steps_per_cycle;
        let first_measured = (cfg.cycles - cfg.measure_cycles) * cfg.steps_per_cycle;
        let mut integrator = Integrator::new(self.operators.clone(), self.constraints.clone(), cfg.settings.clone());
        let initial = self.initial_state(omega)?;
        let mut ranges: Vec<StationRange> = cfg
            .stations
            .iter()
            .zip(&self.station_vertices)
            .map(|(&station, &vertex)| StationRange {
                station,
                vertex,
                p_min: f64::INFINITY,
                p_max: f64::NEG_INFINITY,
            })
            .collect();
        let ops = &self.operators;
        let mut observe = |state: &State, step: usize| {
            if step >= first_measured {
                for r in ranges.iter_mut() {
                    let p = self.pressure.at_vertex(ops, state, r.vertex).expect("station on slip surface");
                    r.p_min = r.p_min.min(p);
                    r.p_max = r.p_max.max(p);
                }
            }
        };
        observe(&initial, 0);
        on_step(&initial)?;
        let grid = TimeGrid::uniform(0.0, k, steps)?;
        let mut step = 0;
        integrator.run(initial, &grid, &NoLoads, &motion, |_, next| {
            step += 1;
            observe(next, step);
            on_step(next)
        })?;
        Ok(ranges)
    }
}

fn nearest_slip_vertex(ops: &Operators, pressure: &ContactPressure, target: Vec3) -> Result<usize> {
    let verts = ops.space.mesh().vertices();
    (0..verts.len())
        .filter(|&v| !pressure.vertex_facets[v].is_empty())
        .min_by(|&a, &b| {
            let d = |v: usize| crate::geom::norm(&crate::geom::sub(&verts[v], &target));
            d(a).total_cmp(&d(b))
        })
        .ok_or_else(|| Error::InvalidInput("mesh has no slip surface".into()))
}

/// One CSV row: probe range at one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct SealRow {
    pub omega: f64,
    pub station: f64,
    pub p_min: f64,
    pub p_max: f64,
}

/// Sequential frequency sweep.
pub fn seal_sweep(model: &SealModel, omegas: &[f64]) -> Result<Vec<SealRow>> {
    let mut rows = Vec::new();
    for &omega in omegas {
        for r in model.run_frequency(omega, |_| Ok(()))? {
            rows.push(SealRow {
                omega,
                station: r.station,
                p_min: r.p_min,
                p_max: r.p_max,
            });
        }
    }
    Ok(rows)
}

/// `n` log-spaced frequencies from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, BoundaryTag, BoxFace};

    fn small() -> SealConfig {
        SealConfig {
            divisions: AnnulusDivisions {
                radial: 1,
                angular: 16,
                axial: 2,
            },
            cycles: 1,
            steps_per_cycle: 8,
            ..SealConfig::standard()
        }
    }

    #[test]
    fn uniform_dilatation_gives_hydrostatic_pressure() {
        let mesh = build_box_mesh(2, [1.0; 3], |face, _| match face {
            BoxFace::XMin => BoundaryTag::slip("s"),
            _ => BoundaryTag::neumann("n"),
        })
        .unwrap();
        let space = Arc::new(FeSpace::new(Arc::new(mesh), 2).unwrap());
        let material = MaterialModel::new(1.0, 3.0, 2.0, vec![MaxwellArm { kappa: 5.0, tau: 1.0 }]).unwrap();
        let ops = Operators::new(space.clone(), material).unwrap();
        let e = 1e-3;
        let mut state = State::zero(space.n_dofs(), 1, 0.0);
        state.u0 = space.interpolate(|x| [e * x[0], e * x[1], e * x[2]]);
        // a dilatational internal variable carries no deviatoric stress
        state.ve[0] = state.u0.clone();
        let cp = ContactPressure::on_slip_boundary(&ops).unwrap();
        let values = cp.vertex_values(&ops, &state);
        let expected = -(2.0 * 3.0 + 3.0 * 2.0) * e;
        let mut seen = 0;
        for (v, p) in values.iter().enumerate() {
            if space.mesh().vertices()[v][0] == 0.0 {
                assert!((p.unwrap() - expected).abs() < 1e-12, "{p:?}");
                seen += 1;
            } else {
                assert!(p.is_none());
            }
        }
        assert_eq!(seen, 9);
    }

    #[test]
    fn rejects_non_slip_facets() {
        let model = SealModel::new(small()).unwrap();
        let outer = model
            .operators
            .space
            .mesh()
            .boundary_facets()
            .iter()
            .position(|f| f.tag.kind != BoundaryKind::Slip)
            .unwrap();
        assert!(ContactPressure::new(&model.operators, vec![outer]).is_err());
    }

    #[test]
    fn zero_forcing_gives_zero_pressure() {
        let model = SealModel::new(SealConfig {
            expansion: 0.0,
            amplitude: 0.0,
            ..small()
        })
        .unwrap();
        let ranges = model.run_frequency(10.0, |s| {
            assert!(s.max_abs() == 0.0);
            Ok(())
        })
        .unwrap();
        for r in ranges {
            assert_eq!((r.p_min, r.p_max), (0.0, 0.0));
        }
    }

    #[test]
    fn expansion_alone_is_axisymmetric_and_compressive() {
        let cfg = SealConfig {
            amplitude: 0.0,
            ..small()
        };
        let model = SealModel::new(cfg.clone()).unwrap();
        let state = model.initial_state(1.0).unwrap();
        let ops = &model.operators;
        let values = model.pressure.vertex_values(ops, &state);
        let verts = ops.space.mesh().vertices();
        // inner ring at mid length
        let ring: Vec<f64> = (0..verts.len())
            .filter(|&v| (verts[v][2] - 0.5 * cfg.length).abs() < 1e-12 && values[v].is_some())
            .map(|v| values[v].unwrap())
            .collect();
        assert_eq!(ring.len(), 16);
        let mean = ring.iter().sum::<f64>() / ring.len() as f64;
        assert!(mean > 0.0);
        for p in &ring {
            assert!((p - mean).abs() < 1e-8 * mean, "{p} vs {mean}");
        }
        // the relaxed preload stays put
        let ranges = model.run_frequency(1.0, |_| Ok(())).unwrap();
        for r in ranges {
            assert!((r.p_max - r.p_min).abs() < 1e-8 * r.p_max.abs());
        }
    }

    #[test]
    fn log_spacing() {
        let f = log_spaced(0.01, 1000.0, 6);
        let expect = [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0];
        for (a, b) in f.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12 * b);
        }
    }
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use viscofem::dynamics::{EnergyLedger, Integrator, Operators, State, TimeGrid};
use viscofem::fespace::{Constraints, FeSpace, NoBoundaryData};
use viscofem::io::{write_convergence_csv, write_ledger_csv, write_seal_csv, write_vtk_file, VtkFields};
use viscofem::seal::{log_spaced, ContactPressure, SealConfig, SealModel, SealRow};
use viscofem::stress::vertex_von_mises;
use viscofem::verify::manufactured::manufactured_mesh;
use viscofem::verify::{
    conservation_experiment, convergence_row, error_norms, ConservationConfig, ConvergenceCase, ConvergenceRow,
    ConvergenceTable, ManufacturedLoads, ManufacturedSolution, Refinement,
};

use crate::config::{check_degree, RunConfig, Scenario};
use crate::CliError;

pub fn run_scenario(scenario: Scenario, config: &RunConfig, out: &Path, long: bool) -> Result<Vec<PathBuf>, CliError> {
    match scenario {
        Scenario::Convergence => convergence(config, out, long),
        Scenario::Conserve => conserve(config, out, long),
        Scenario::Seal => seal(config, out, long),
        Scenario::Single => single(config, out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn vtk_frame(
    path: &Path,
    ops: &Operators,
    state: &State,
    pressure: Option<&ContactPressure>,
) -> viscofem::Result<()> {
    let mut fields = VtkFields::from_state(&ops.space, state);
    fields.von_mises = vertex_von_mises(ops, state);
    if let Some(p) = pressure {
        fields.contact_pressure = p.vertex_values(ops, state);
    }
    write_vtk_file(path, &ops.space, &fields, &format!("t = {}", state.t))?;
    Ok(())
}

/// Rows of the long preset: the spatial sweep at k = 1/128 and the temporal
/// sweep at h = 1/4, p = 2.
fn long_convergence_cases() -> Vec<ConvergenceCase> {
    let mut cases: Vec<ConvergenceCase> = [2, 4, 8].iter().map(|&n| ConvergenceCase { n, steps: 128, p: 1 }).collect();
    cases.extend([2, 4].iter().map(|&n| ConvergenceCase { n, steps: 128, p: 2 }));
    cases.extend([4, 8, 16, 32].iter().map(|&steps| ConvergenceCase { n: 4, steps, p: 2 }));
    cases
}

fn rate_lines(table: &ConvergenceTable) -> Vec<String> {
    let mut degrees: Vec<usize> = table.rows.iter().map(|r| r.p).collect();
    degrees.dedup();
    let mut lines = Vec::new();
    for p in degrees {
        let rows: Vec<&ConvergenceRow> = table.rows.iter().filter(|r| r.p == p).collect();
        let k_min = rows.iter().map(|r| r.k).fold(f64::INFINITY, f64::min);
        let h_min = rows.iter().map(|r| r.h).fold(f64::INFINITY, f64::min);
        for (by, name, keep) in [
            (Refinement::Space, "h", Box::new(move |r: &ConvergenceRow| r.k == k_min) as Box<dyn Fn(&ConvergenceRow) -> bool>),
            (Refinement::Time, "k", Box::new(move |r: &ConvergenceRow| r.h == h_min)),
        ] {
            let sub = ConvergenceTable {
                rows: rows.iter().filter(|r| keep(r)).map(|r| (*r).clone()).collect(),
            };
            let mut seen: Vec<f64> = sub
                .rows
                .iter()
                .map(|r| if by == Refinement::Space { r.h } else { r.k })
                .collect();
            seen.dedup();
            if seen.len() < 2 {
                continue;
            }
            let rates = sub.rates(p, by, 1e-14);
            lines.push(format!("{p},{name},{},{}", rates.energy, rates.l2));
        }
    }
    lines
}

fn convergence(config: &RunConfig, out: &Path, long: bool) -> Result<Vec<PathBuf>, CliError> {
    let solution = ManufacturedSolution::new(config.material()?);
    let t_end = config.t_end()?;
    let settings = config.solver()?;
    let sweep = config.convergence.as_ref().expect("checked");
    let cases = if long {
        long_convergence_cases()
    } else {
        let degrees = match &sweep.degrees {
            Some(d) => d.clone(),
            None => vec![config.degree()?],
        };
        let mut cases = Vec::new();
        for &p in &degrees {
            check_degree("convergence.degrees", p)?;
            for &n in &sweep.n {
                for &steps in &sweep.steps {
                    if n == 0 || steps == 0 {
                        return Err(CliError::Config("convergence.n and convergence.steps must be positive".into()));
                    }
                    cases.push(ConvergenceCase { n, steps, p });
                }
            }
        }
        cases
    };
    if cases.is_empty() {
        return Err(CliError::Config("convergence sweep is empty".into()));
    }
    let rows: Vec<ConvergenceRow> = cases
        .par_iter()
        .map(|&case| convergence_row(case, &solution, t_end, &settings))
        .collect::<Result<_, _>>()?;
    let mut table = ConvergenceTable { rows };
    if !config.output.wall_time {
        table.rows.iter_mut().for_each(|r| r.wall_seconds = 0.0);
    }
    table.sort();
    let rates = rate_lines(&table);
    for r in &table.rows {
        println!(
            "p={} h={:.4} k={:.5}: energy {:.4e}, L2 {:.4e} ({:.2} s)",
            r.p, r.h, r.k, r.energy_error, r.l2_error, r.wall_seconds
        );
    }
    for line in &rates {
        println!("rate p,by,energy,l2 = {line}");
    }
    let mut files = Vec::new();
    if config.output.csv {
        let path = out.join("convergence.csv");
        let mut w = create(&path)?;
        write_convergence_csv(&mut w, &table.rows)?;
        w.flush()?;
        files.push(path);
        let path = out.join("rates.csv");
        let mut w = create(&path)?;
        writeln!(w, "p,refinement,energy_rate,l2_rate")?;
        for line in &rates {
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

fn conserve(config: &RunConfig, out: &Path, long: bool) -> Result<Vec<PathBuf>, CliError> {
    let (n, extent) = config.box_geometry()?;
    let t_end = config.t_end()?;
    let k = t_end / config.steps()? as f64;
    let block = config.conserve.clone().unwrap_or(crate::config::ConserveConfig {
        lift: [0.0, 0.0, 0.2],
        held_fraction: 0.4,
        release: 0.1,
    });
    let base = ConservationConfig {
        n,
        extent,
        p: config.degree()?,
        k,
        material: config.material()?,
        lift: block.lift,
        held_fraction: block.held_fraction,
        release: block.release,
        t_end,
        settings: config.solver()?,
    };
    let ks: Vec<f64> = if long { vec![k, 10.0 * k, 0.1 * k] } else { vec![k] };
    let stride = config.output.vtk_stride;
    let mut files = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        let suffix = if i == 0 { String::new() } else { format!("_{i}") };
        let mut step = 0usize;
        let mut frames = Vec::new();
        let run = conservation_experiment(&ConservationConfig { k, ..base.clone() }, |state, ops| {
            if stride > 0 && step % stride == 0 {
                let path = out.join(format!("conserve{suffix}_{step:05}.vtk"));
                vtk_frame(&path, ops, state, None)?;
                frames.push(path);
            }
            step += 1;
            Ok(())
        })?;
        println!(
            "k = {k}: {} steps, max relative drift {:.3e}",
            run.ledger.reports.len() - 1,
            run.ledger.max_relative_drift()
        );
        files.extend(frames);
        if config.output.csv {
            let path = out.join(format!("ledger{suffix}.csv"));
            let mut w = create(&path)?;
            write_ledger_csv(&mut w, &run.ledger.reports)?;
            w.flush()?;
            files.push(path);
        }
    }
    Ok(files)
}

fn seal(config: &RunConfig, out: &Path, long: bool) -> Result<Vec<PathBuf>, CliError> {
    let (r_in, r_out, length, divisions) = config.annulus()?;
    let sweep = config.seal.as_ref().expect("checked");
    let frequencies = if long { log_spaced(0.01, 1000.0, 21) } else { sweep.frequencies()? };
    let seal_config = SealConfig {
        r_in,
        r_out,
        length,
        divisions,
        p: config.degree()?,
        material: config.material()?,
        expansion: sweep.expansion,
        amplitude: sweep.amplitude,
        eccentricity: sweep.eccentricity,
        stations: sweep.stations.clone(),
        cycles: if long { sweep.cycles.max(4) } else { sweep.cycles },
        measure_cycles: sweep.measure_cycles,
        steps_per_cycle: sweep.steps_per_cycle,
        settings: config.solver()?,
    };
    let model = SealModel::new(seal_config)?;
    let stride = config.output.vtk_stride;
    let results: Vec<(Vec<SealRow>, Vec<PathBuf>)> = frequencies
        .par_iter()
        .enumerate()
        .map(|(i, &omega)| {
            let mut step = 0usize;
            let mut frames = Vec::new();
            let ranges = model.run_frequency(omega, |state| {
                if stride > 0 && step % stride == 0 {
                    let path = out.join(format!("seal_f{i:02}_{step:05}.vtk"));
                    vtk_frame(&path, &model.operators, state, Some(&model.pressure))?;
                    frames.push(path);
                }
                step += 1;
                Ok(())
            })?;
            let rows = ranges
                .into_iter()
                .map(|r| SealRow {
                    omega,
                    station: r.station,
                    p_min: r.p_min,
                    p_max: r.p_max,
                })
                .collect();
            Ok((rows, frames))
        })
        .collect::<Result<_, viscofem::Error>>()?;
    let mut rows = Vec::new();
    let mut files = Vec::new();
    for (r, f) in results {
        rows.extend(r);
        files.extend(f);
    }
    for r in &rows {
        println!(
            "{:>10.4} Hz  station {:.2}: P in [{:.4e}, {:.4e}] Pa",
            r.omega, r.station, r.p_min, r.p_max
        );
    }
    if config.output.csv {
        let path = out.join("seal.csv");
        let mut w = create(&path)?;
        write_seal_csv(&mut w, &rows)?;
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

fn single(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let (n, extent) = config.box_geometry()?;
    if extent != [1.0; 3] {
        return Err(CliError::Config(
            "geometry.extent: the manufactured problem is posed on the unit cube".into(),
        ));
    }
    let p = config.degree()?;
    let t_end = config.t_end()?;
    let steps = config.steps()?;
    let settings = config.solver()?;
    let solution = ManufacturedSolution::new(config.material()?);

    let space = Arc::new(FeSpace::new(Arc::new(manufactured_mesh(n)?), p)?);
    let ops = Arc::new(Operators::new(space.clone(), solution.material.clone())?);
    let loads = ManufacturedLoads::new(solution.clone(), &space, ops.load_degree);
    let constraints = Constraints::free(&space).apply_dirichlet(&space, |_| true);
    let mut integrator = Integrator::new(ops.clone(), constraints, settings);
    let grid = TimeGrid::uniform(0.0, t_end / steps as f64, steps)?;
    let initial = State::zero(space.n_dofs(), ops.n_arms(), 0.0);

    let stride = config.output.vtk_stride;
    let mut files = Vec::new();
    if stride > 0 {
        let path = out.join("single_00000.vtk");
        vtk_frame(&path, &ops, &initial, None)?;
        files.push(path);
    }
    let mut ledger = EnergyLedger::start(&initial, &ops);
    let mut step = 0usize;
    let last = integrator.run(initial, &grid, &loads, &NoBoundaryData, |prev, next| {
        ledger.record_step(prev, next, &ops);
        step += 1;
        if stride > 0 && (step % stride == 0 || step == steps) {
            let path = out.join(format!("single_{step:05}.vtk"));
            vtk_frame(&path, &ops, next, None)?;
            files.push(path);
        }
        Ok(())
    })?;
    let norms = error_norms(&last, &solution, &ops);
    println!(
        "h = {}, k = {}, p = {p}: energy error {:.4e}, L2 error {:.4e}",
        1.0 / n as f64,
        t_end / steps as f64,
        norms.energy,
        norms.l2
    );
    if config.output.csv {
        let path = out.join("ledger.csv");
        let mut w = create(&path)?;
        write_ledger_csv(&mut w, &ledger.reports)?;
        w.flush()?;
        files.push(path);
        let path = out.join("errors.csv");
        let mut w = create(&path)?;
        let row = ConvergenceRow {
            h: 1.0 / n as f64,
            k: t_end / steps as f64,
            p,
            energy_error: norms.energy,
            l2_error: norms.l2,
            wall_seconds: 0.0,
        };
        write_convergence_csv(&mut w, &[row])?;
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

use std::path::Path;
use std::process::{Command, Output};

use viscofem::io::{read_convergence_csv, read_ledger_csv, read_seal_csv, read_vtk};
use viscofem_cli::{RunConfig, Scenario};

const MATERIAL: &str = r#"
[material]
density = 100.0
young = 1.0e5
poisson = 0.3

[[material.arms]]
kappa = 1.0e5
tau = 0.01
"#;

fn viscofem(dir: &Path, scenario: &str, config: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{scenario}.toml"));
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_viscofem"))
        .arg(scenario)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn convergence_config() -> String {
    format!(
        "{MATERIAL}\n[time]\nt_end = 0.5\n\n[discretization]\np = 1\n\n[convergence]\nn = [1, 2]\nsteps = [2, 4]\n\n[output]\nwall_time = false\n"
    )
}

#[test]
fn convergence_writes_four_rows_and_rates() {
    let dir = tempfile::tempdir().unwrap();
    let o = viscofem(dir.path(), "convergence", &convergence_config(), &["--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read(dir.path().join("out/convergence.csv")).unwrap();
    assert!(csv.starts_with(b"h,k,p,energy_error,l2_error,wall_seconds\n"));
    let rows = read_convergence_csv(csv.as_slice()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.p == 1 && r.energy_error > 0.0 && r.wall_seconds == 0.0));
    let rates = std::fs::read_to_string(dir.path().join("out/rates.csv")).unwrap();
    let mut lines = rates.lines();
    assert_eq!(lines.next(), Some("p,refinement,energy_rate,l2_rate"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = viscofem(dir.path(), "convergence", &convergence_config(), &["--threads", "2"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["convergence.csv", "rates.csv"] {
        let x = std::fs::read(a.path().join("out").join(file)).unwrap();
        let y = std::fs::read(b.path().join("out").join(file)).unwrap();
        assert_eq!(x, y, "{file} differs");
    }
}

#[test]
fn conserve_ledger_is_balanced() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        "scenario = \"conserve\"\n[geometry]\nkind = \"box\"\nn = 2\n{MATERIAL}\n[time]\nt_end = 0.2\nk = 0.02\n\n[discretization]\np = 1\n\n[output]\nvtk_stride = 5\n"
    );
    let o = viscofem(dir.path(), "conserve", &config, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/ledger.csv")).unwrap();
    assert!(text.starts_with("t,kinetic,elastic,viscoelastic_total,dissipated,total\n"));
    let rows = read_ledger_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 11);
    let e0 = rows[0].total;
    assert!(e0 > 0.0);
    for r in &rows {
        assert!((r.total - e0).abs() <= 1e-9 * e0, "{r:?}");
    }
    // release at 0.1: dissipation only starts afterwards
    assert!(rows.last().unwrap().dissipated > 0.0);
    let frame = std::fs::File::open(dir.path().join("out/conserve_00010.vtk")).unwrap();
    let vtk = read_vtk(frame).unwrap();
    assert_eq!(vtk.n_cells, 48);
}

#[test]
fn single_writes_ledger_errors_and_frames() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        "[geometry]\nkind = \"box\"\nn = 2\n{MATERIAL}\n[time]\nt_end = 0.25\nsteps = 4\n\n[discretization]\np = 1\n\n[output]\nvtk_stride = 2\n"
    );
    let o = viscofem(dir.path(), "single", &config, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let errors = read_convergence_csv(std::fs::File::open(out.join("errors.csv")).unwrap()).unwrap();
    assert_eq!(errors.len(), 1);
    assert_eq!((errors[0].h, errors[0].k, errors[0].p), (0.5, 0.0625, 1));
    assert_eq!(read_ledger_csv(std::fs::File::open(out.join("ledger.csv")).unwrap()).unwrap().len(), 5);
    for step in [0, 2, 4] {
        let vtk = read_vtk(std::fs::File::open(out.join(format!("single_{step:05}.vtk"))).unwrap()).unwrap();
        assert_eq!(vtk.n_points, 27);
        assert_eq!(vtk.scalars.len(), 2);
    }
}

#[test]
fn seal_writes_one_row_per_station() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        "[geometry]\nkind = \"annulus\"\nr_in = 0.006\nr_out = 0.01\nlength = 0.02\ndivisions = [1, 12, 2]\n{}\n[discretization]\np = 1\n\n[seal]\nfrequencies = [2.0, 20.0]\ncycles = 1\nsteps_per_cycle = 8\n\n[output]\nvtk_stride = 4\n",
        MATERIAL.replace("density = 100.0", "density = 1100.0")
    );
    let o = viscofem(dir.path(), "seal", &config, &["--threads", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("out/seal.csv")).unwrap();
    assert!(text.starts_with("omega,station,p_min,p_max\n"));
    let rows = read_seal_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!(r.p_min <= r.p_max);
        assert!(r.p_max > 0.0, "expansion compresses the seal: {r:?}");
    }
    let frame = read_vtk(std::fs::File::open(dir.path().join("out/seal_f01_00004.vtk")).unwrap()).unwrap();
    let pressure = &frame.scalars.iter().find(|s| s.0 == "contact_pressure").unwrap().1;
    assert!(pressure.iter().any(|p| *p > 0.0));
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = convergence_config().replace("[time]", "[time]\nt_final = 2.0");
    let o = viscofem(dir.path(), "convergence", &config, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t_final"), "{}", stderr(&o));
}

#[test]
fn missing_block_and_mismatched_scenario_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = viscofem(dir.path(), "conserve", &convergence_config(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("geometry"), "{}", stderr(&o));

    let config = format!("scenario = \"seal\"\n{}", convergence_config());
    let o = viscofem(dir.path(), "convergence", &config, &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = viscofem(dir.path(), "convergence", "not = [valid", &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_viscofem")).arg("nonsense").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        "{}\n[solver]\nmethod = \"cg\"\ntolerance = 1e-300\nmax_iter_factor = 1\n",
        convergence_config()
    );
    let o = viscofem(dir.path(), "convergence", &config, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("residual"), "{}", stderr(&o));
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for (file, scenario) in [
        ("convergence.toml", Scenario::Convergence),
        ("conserve.toml", Scenario::Conserve),
        ("seal.toml", Scenario::Seal),
        ("single.toml", Scenario::Single),
        ("reference.toml", Scenario::Single),
    ] {
        let text = std::fs::read_to_string(dir.join(file)).unwrap();
        let config = RunConfig::parse(&text).unwrap_or_else(|e| panic!("{file}: {e}"));
        config.check(scenario).unwrap_or_else(|e| panic!("{file}: {e}"));
        config.material().unwrap();
        config.solver().unwrap();
    }
}

#[test]
fn material_needs_exactly_one_pair() {
    let both = MATERIAL.replace("poisson = 0.3", "poisson = 0.3\nmu = 1.0\nlambda = 1.0");
    assert!(RunConfig::parse(&both).unwrap().material().is_err());
    let lame = MATERIAL.replace("young = 1.0e5\npoisson = 0.3", "mu = 2.0\nlambda = 3.0");
    let m = RunConfig::parse(&lame).unwrap().material().unwrap();
    assert_eq!((m.mu, m.lambda), (2.0, 3.0));
    let bad = MATERIAL.replace("poisson = 0.3", "poisson = 0.5");
    assert!(RunConfig::parse(&bad).unwrap().material().is_err());
}

#[test]
fn step_size_must_divide_the_interval() {
    let config = format!("{MATERIAL}\n[time]\nt_end = 1.0\nk = 0.3\n");
    assert!(RunConfig::parse(&config).unwrap().steps().is_err());
    let config = format!("{MATERIAL}\n[time]\nt_end = 1.0\nk = 0.25\n");
    assert_eq!(RunConfig::parse(&config).unwrap().steps().unwrap(), 4);
}

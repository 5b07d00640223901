//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a flat `Float64Array` of fixed-width rows so the page
//! can plot it without further decoding.

use std::sync::Arc;

use viscofem::material::{maxwell_convolution, step_coefficients, MaterialModel, MaxwellArm};
use viscofem::mesh::AnnulusDivisions;
use viscofem::seal::{seal_arms, SealConfig, SealModel};
use viscofem::verify::{conservation_experiment, ConservationConfig, ManufacturedSolution};
use wasm_bindgen::prelude::*;

/// Rows `(t, discrete, exact)` of one Maxwell internal variable driven by
/// the velocity `sin(2πt)` over `[0, t_end]`.
pub fn maxwell_curve(tau: f64, t_end: f64, steps: usize) -> Result<Vec<f64>, String> {
    if !(tau > 0.0 && t_end > 0.0) || steps == 0 || steps > 100_000 {
        return Err(format!("need tau > 0, t_end > 0 and 1..=100000 steps, got {tau}, {t_end}, {steps}"));
    }
    let arm = MaxwellArm { kappa: 1.0, tau };
    let rate = |t: f64| (2.0 * std::f64::consts::PI * t).sin();
    let k = t_end / steps as f64;
    let c = step_coefficients(&[arm], k);
    let mut out = Vec::with_capacity(3 * (steps + 1));
    let mut ve = 0.0;
    out.extend([0.0, 0.0, 0.0]);
    for n in 1..=steps {
        let (t0, t1) = ((n - 1) as f64 * k, n as f64 * k);
        ve = c.alpha[0] * (rate(t0) + rate(t1)) + c.beta[0] * ve;
        out.extend([t1, ve, maxwell_convolution(arm, rate, t1)]);
    }
    Ok(out)
}

/// Energy ledger rows `(t, kinetic, elastic, viscoelastic, dissipated, total)`
/// of the held-then-released box with the standard one-arm material.
pub fn release_ledger(n: usize, p: usize, k: f64, tau: f64) -> Result<Vec<f64>, String> {
    if !(1..=4).contains(&n) || !(1..=2).contains(&p) {
        return Err(format!("demo limits: n in 1..=4, p in 1..=2, got n = {n}, p = {p}"));
    }
    let mut material = ManufacturedSolution::standard_material();
    material.arms[0].tau = tau;
    let config = ConservationConfig {
        n,
        p,
        k,
        ..ConservationConfig::standard(material)
    };
    let run = conservation_experiment(&config, |_, _| Ok(())).map_err(|e| e.to_string())?;
    Ok(run
        .ledger
        .reports
        .iter()
        .flat_map(|r| [r.t, r.kinetic, r.elastic, r.viscoelastic_total(), r.dissipated, r.total()])
        .collect())
}

/// Rows `(t, P_end, P_quarter, P_mid)` of the contact pressure at the three
/// probes of a coarse seal over `cycles` periods at `omega` Hz.
pub fn seal_trace(omega: f64, cycles: usize) -> Result<Vec<f64>, String> {
    if !(omega > 0.0 && omega.is_finite()) || !(1..=6).contains(&cycles) {
        return Err(format!("need omega > 0 and 1..=6 cycles, got {omega}, {cycles}"));
    }
    let config = SealConfig {
        divisions: AnnulusDivisions {
            radial: 1,
            angular: 16,
            axial: 4,
        },
        p: 1,
        material: MaterialModel::from_engineering(1100.0, 0.5e6, 0.39, seal_arms()).map_err(|e| e.to_string())?,
        cycles,
        measure_cycles: cycles,
        steps_per_cycle: 32,
        ..SealConfig::standard()
    };
    let model = Arc::new(SealModel::new(config).map_err(|e| e.to_string())?);
    let ops = model.operators.clone();
    let mut out = Vec::new();
    model
        .run_frequency(omega, |state| {
            out.push(state.t);
            for &v in &model.station_vertices {
                out.push(model.pressure.at_vertex(&ops, state, v).unwrap_or(0.0));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(out)
}

#[wasm_bindgen(js_name = maxwellCurve)]
pub fn maxwell_curve_js(tau: f64, t_end: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    maxwell_curve(tau, t_end, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = releaseLedger)]
pub fn release_ledger_js(n: usize, p: usize, k: f64, tau: f64) -> Result<Vec<f64>, JsError> {
    release_ledger(n, p, k, tau).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sealTrace)]
pub fn seal_trace_js(omega: f64, cycles: usize) -> Result<Vec<f64>, JsError> {
    seal_trace(omega, cycles).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwell_curve_tracks_the_convolution() {
        let rows = maxwell_curve(0.2, 1.0, 200).unwrap();
        assert_eq!(rows.len(), 3 * 201);
        for r in rows.chunks(3) {
            assert!((r[1] - r[2]).abs() < 1e-3, "{r:?}");
        }
        assert!(maxwell_curve(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn ledger_total_is_constant() {
        let rows = release_ledger(2, 1, 0.05, 0.01).unwrap();
        let e0 = rows[5];
        for r in rows.chunks(6) {
            assert!((r[5] - e0).abs() <= 1e-9 * e0);
        }
        assert!(release_ledger(9, 1, 0.05, 0.01).is_err());
    }

    #[test]
    fn seal_trace_has_one_row_per_step() {
        let rows = seal_trace(5.0, 1).unwrap();
        assert_eq!(rows.len(), 4 * 33);
        // the preload keeps the mean pressure compressive at every probe
        for probe in 1..4 {
            let mean = rows.chunks(4).map(|r| r[probe]).sum::<f64>() / 33.0;
            assert!(mean > 0.0, "probe {probe}: {mean}");
        }
    }
}

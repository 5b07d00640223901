//! Generalized Maxwell material and single-point reference solutions.

use crate::{Error, Mat3, Result};

/// One spring-dashpot arm: deviatoric modulus `kappa` and relaxation time `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxwellArm {
    pub kappa: f64,
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialModel {
    pub density: f64,
    pub mu: f64,
    pub lambda: f64,
    pub arms: Vec<MaxwellArm>,
}

impl MaterialModel {
    pub fn new(density: f64, mu: f64, lambda: f64, arms: Vec<MaxwellArm>) -> Result<Self> {
        let m = Self {
            density,
            mu,
            lambda,
            arms,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds the model from Young's modulus and Poisson ratio.
    pub fn from_engineering(density: f64, young: f64, poisson: f64, arms: Vec<MaxwellArm>) -> Result<Self> {
        let (mu, lambda) = lame_from_engineering(young, poisson)?;
        Self::new(density, mu, lambda, arms)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.density) {
            return Err(Error::InvalidInput(format!("density must be positive, got {}", self.density)));
        }
        if !positive(self.mu) {
            return Err(Error::InvalidInput(format!("shear modulus must be positive, got {}", self.mu)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        for (m, arm) in self.arms.iter().enumerate() {
            if !positive(arm.kappa) || !positive(arm.tau) {
                return Err(Error::InvalidInput(format!(
                    "arm {m}: kappa and tau must be positive, got ({}, {})",
                    arm.kappa, arm.tau
                )));
            }
        }
        Ok(())
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }
}

/// `(μ, λ)` from `(E, ν)`.
pub fn lame_from_engineering(young: f64, poisson: f64) -> Result<(f64, f64)> {
    if !(young.is_finite() && young > 0.0) {
        return Err(Error::InvalidInput(format!("Young's modulus must be positive, got {young}")));
    }
    if !(poisson > -1.0 && poisson < 0.5) {
        return Err(Error::InvalidInput(format!(
            "Poisson ratio must lie in (-1, 0.5), got {poisson}"
        )));
    }
    let mu = young / (2.0 * (1.0 + poisson));
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    Ok((mu, lambda))
}

/// `(E, ν)` from `(μ, λ)`.
pub fn engineering_from_lame(mu: f64, lambda: f64) -> (f64, f64) {
    let young = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
    let poisson = lambda / (2.0 * (lambda + mu));
    (young, poisson)
}

/// Per-arm coefficients of the internal variable update
/// `U_VEⁿ = α (U1ⁿ + U1ⁿ⁻¹) + β U_VEⁿ⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepCoefficients {
    pub k: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn step_coefficients(arms: &[MaxwellArm], k: f64) -> StepCoefficients {
    let mut alpha = Vec::with_capacity(arms.len());
    let mut beta = Vec::with_capacity(arms.len());
    for arm in arms {
        let r = k / arm.tau;
        alpha.push(k / (2.0 + r));
        beta.push((2.0 - r) / (2.0 + r));
    }
    StepCoefficients { k, alpha, beta }
}

// Gauss-Kronrod 7/15 nodes on [-1, 1] (non-negative half) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod integration of a scalar function.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rtol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (v, e) = gauss_kronrod(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut total = v;
    let mut error = e;
    for _ in 0..2000 {
        if error <= rtol * total.abs() || error < 1e-300 {
            break;
        }
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, v, e) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gauss_kronrod(&f, lo, mid);
        let (v2, e2) = gauss_kronrod(&f, mid, hi);
        total += v1 + v2 - v;
        error += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    intervals.iter().map(|x| x.2).sum()
}

/// Scalar hereditary integral `∫₀ᵗ κ e^{−(t−s)/τ} r(s) ds`.
pub fn maxwell_convolution(arm: MaxwellArm, rate: impl Fn(f64) -> f64, t: f64) -> f64 {
    integrate(|s| arm.kappa * (-(t - s) / arm.tau).exp() * rate(s), 0.0, t, 1e-10)
}

/// Stress of one arm from a deviatoric strain-rate history, starting from rest.
pub fn duhamel_stress(arm: MaxwellArm, strain_rate: impl Fn(f64) -> Mat3, t: f64) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = maxwell_convolution(arm, |s| strain_rate(s)[i][j], t);
        }
    }
    out
}

/// Scalar internal variable after `n_steps` uniform steps of the discrete
/// update driven by the velocity history `u1`, starting from zero.
pub fn discrete_internal_variable(arm: MaxwellArm, u1: impl Fn(f64) -> f64, t_end: f64, n_steps: usize) -> f64 {
    let k = t_end / n_steps as f64;
    let c = step_coefficients(&[arm], k);
    let (alpha, beta) = (c.alpha[0], c.beta[0]);
    let mut ve = 0.0;
    let mut prev = u1(0.0);
    for n in 1..=n_steps {
        let next = u1(n as f64 * k);
        ve = alpha * (next + prev) + beta * ve;
        prev = next;
    }
    ve
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arm(kappa: f64, tau: f64) -> MaxwellArm {
        MaxwellArm { kappa, tau }
    }

    #[test]
    fn lame_examples() {
        let (mu, lambda) = lame_from_engineering(1.0, 0.0).unwrap();
        assert_eq!((mu, lambda), (0.5, 0.0));
        let (mu, lambda) = lame_from_engineering(1e5, 0.3).unwrap();
        assert!((mu - 1e5 / 2.6).abs() < 1e-9);
        assert!((lambda - 0.3e5 / (1.3 * 0.4)).abs() < 1e-9);
        let (e, nu) = engineering_from_lame(mu, lambda);
        assert!((e - 1e5).abs() < 1e-12 * 1e5);
        assert!((nu - 0.3).abs() < 1e-12);
        assert!(lame_from_engineering(1.0, 0.5).is_err());
        assert!(lame_from_engineering(-1.0, 0.2).is_err());
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(MaterialModel::new(0.0, 1.0, 1.0, vec![]).is_err());
        assert!(MaterialModel::new(1.0, 1.0, -1.0, vec![]).is_err());
        assert!(MaterialModel::new(1.0, 1.0, 0.0, vec![arm(1.0, 0.0)]).is_err());
        assert!(MaterialModel::new(1.0, 1.0, 0.0, vec![arm(1.0, 2.0)]).is_ok());
    }

    #[test]
    fn step_coefficient_examples() {
        let tau = 0.7;
        let c = step_coefficients(&[arm(1.0, tau)], tau);
        assert!((c.alpha[0] - tau / 3.0).abs() < 1e-15);
        assert!((c.beta[0] - 1.0 / 3.0).abs() < 1e-15);
        let c = step_coefficients(&[arm(1.0, tau)], 2.0 * tau);
        assert_eq!(c.beta[0], 0.0);
        let k = 1e-9;
        let c = step_coefficients(&[arm(1.0, tau)], k);
        assert!((c.alpha[0] / k - 0.5).abs() < 1e-8);
        assert!((c.beta[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn duhamel_constant_rate() {
        let a = arm(3.0, 0.4);
        let e0 = [[0.1, 0.2, 0.0], [0.2, -0.3, 0.0], [0.0, 0.0, 0.2]];
        let t = 1.3;
        let s = duhamel_stress(a, |_| e0, t);
        let factor = a.kappa * a.tau * (1.0 - (-t / a.tau).exp());
        for i in 0..3 {
            for j in 0..3 {
                assert!((s[i][j] - factor * e0[i][j]).abs() < 1e-12);
            }
        }
        let zero = duhamel_stress(a, |_| [[0.0; 3]; 3], t);
        assert_eq!(zero, [[0.0; 3]; 3]);
    }

    #[test]
    fn duhamel_piecewise_linear_matches_antiderivative() {
        // r(s) linear on [0,1] and [1,2]; exact piece: ∫ e^{-(t-s)/τ}(a+bs) ds
        let a = arm(2.0, 0.5);
        let rate = |s: f64| if s < 1.0 { s } else { 2.0 - 0.5 * (s - 1.0) * 3.0 };
        let t = 2.0;
        let tau = a.tau;
        let piece = |c0: f64, c1: f64, lo: f64, hi: f64| {
            // antiderivative of e^{(s-t)/τ}(c0 + c1 s)
            let anti = |s: f64| ((s - t) / tau).exp() * tau * (c0 + c1 * s - c1 * tau);
            anti(hi) - anti(lo)
        };
        let exact = a.kappa * (piece(0.0, 1.0, 0.0, 1.0) + piece(2.0 + 1.5, -1.5, 1.0, 2.0));
        let got = maxwell_convolution(a, rate, t);
        assert!((got - exact).abs() < 1e-10 * exact.abs(), "{got} vs {exact}");
    }

    #[test]
    fn discrete_update_converges_at_second_order() {
        let a = arm(1.0, 0.3);
        let u1 = |t: f64| (2.0 * t).sin();
        // exact solution of v' + v/τ = u1, v(0)=0, by convolution
        let t = 1.0;
        let exact = integrate(|s| (-(t - s) / a.tau).exp() * u1(s), 0.0, t, 1e-13);
        let errs: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&n| (discrete_internal_variable(a, u1, t, n) - exact).abs())
            .collect();
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 2.0).abs() < 0.1, "rate {rate}");
        }
    }

    #[test]
    fn constant_velocity_reaches_steady_state() {
        let a = arm(1.0, 0.2);
        let c = 1.5;
        let k = 0.01;
        let n = 500;
        let coeffs = step_coefficients(&[a], k);
        let (al, be) = (coeffs.alpha[0], coeffs.beta[0]);
        let got = discrete_internal_variable(a, |_| c, k * n as f64, n);
        let closed = 2.0 * al * c * (1.0 - be.powi(n as i32)) / (1.0 - be);
        assert!((got - closed).abs() < 1e-13);
        assert!((closed - a.tau * c * (1.0 - be.powi(n as i32))).abs() < 1e-13);
    }
}

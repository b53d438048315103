//! Nonlinear least-squares fits for the measured scans.
//!
//! A small damped least-squares (Levenberg–Marquardt) engine with numeric
//! Jacobians drives two models: the exponentially damped sine used for Rabi
//! scans and the parity sinusoid `A·sin(2(φ + φ₀))`. Initial guesses come
//! from the spectral peak of the detrended data (damped sine) or quadrature
//! projection (parity); the damped-sine fit is multi-started over three
//! phase offsets and the lowest residual wins.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Result of a model fit. When `converged` is false the parameters are
/// unreliable and must not feed downstream estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub parameter_names: Vec<String>,
    pub parameters: Vec<f64>,
    /// 1σ uncertainties from the Jacobian at the optimum.
    pub std_errors: Vec<f64>,
    /// 1σ uncertainties from a bootstrap, when one was run.
    pub bootstrap_errors: Option<Vec<f64>>,
    /// √(Σ weighted residuals²).
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameter_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.parameters[i])
    }
}

/// Solve `A x = b` for a small symmetric positive(ish) system by Gaussian
/// elimination with partial pivoting. Returns `None` when singular.
#[allow(clippy::needless_range_loop)]
fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (pivot, pmax) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pmax < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in (col + 1)..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in (r + 1)..n {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
        if !x[r].is_finite() {
            return None;
        }
    }
    Some(x)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve(a, &e)?);
    }
    let mut inv = vec![vec![0.0; n]; n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}

pub(crate) struct LmOutcome {
    pub params: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Damped least squares on weighted residuals `(y_i - f(p, x_i))/σ_i`.
///
/// With explicit `sigma` the covariance is `(JᵀJ)⁻¹`; without, residual
/// variance `χ²/(n-k)` scales it.
#[allow(clippy::needless_range_loop)]
pub(crate) fn levenberg_marquardt<F>(
    model: F,
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    init: &[f64],
    max_iter: usize,
) -> LmOutcome
where
    F: Fn(&[f64], f64) -> f64,
{
    let n = x.len();
    let k = init.len();
    let weights: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|&si| 1.0 / si.max(1e-12)).collect(),
        None => vec![1.0; n],
    };
    let residuals = |p: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(y.iter())
            .zip(weights.iter())
            .map(|((&xi, &yi), &wi)| wi * (yi - model(p, xi)))
            .collect()
    };
    let cost_of = |r: &[f64]| -> f64 { r.iter().map(|ri| ri * ri).sum() };

    let mut p = init.to_vec();
    let mut r = residuals(&p);
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..max_iter {
        iterations = iter + 1;
        // numeric Jacobian of the residuals (central differences)
        let mut jac = vec![vec![0.0; k]; n];
        for j in 0..k {
            let h = 6e-6 * p[j].abs().max(1.0);
            let mut pp = p.clone();
            pp[j] += h;
            let rp = residuals(&pp);
            pp[j] = p[j] - h;
            let rm = residuals(&pp);
            for i in 0..n {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let mut jtj = vec![vec![0.0; k]; k];
        let mut jtr = vec![0.0; k];
        for i in 0..n {
            for a in 0..k {
                jtr[a] += jac[i][a] * r[i];
                for b in 0..k {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        // gradient convergence
        if jtr.iter().map(|g| g.abs()).fold(0.0, f64::max) < 1e-12 * (1.0 + cost) {
            converged = true;
            break;
        }
        let mut stepped = false;
        for _ in 0..30 {
            let mut damped = jtj.clone();
            for a in 0..k {
                damped[a][a] += lambda * jtj[a][a].max(1e-12);
            }
            // minimizing ½|r - Jδ... residual convention gives J^T r directly
            let delta = match solve(&damped, &jtr) {
                Some(d) => d,
                None => break,
            };
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(pi, di)| pi - di).collect();
            let rt = residuals(&trial);
            let ct = cost_of(&rt);
            if ct < cost {
                let rel = (cost - ct) / cost.max(1e-300);
                let step = delta.iter().map(|d| d.abs()).fold(0.0, f64::max);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-12);
                stepped = true;
                if rel < 1e-12 || step < 1e-13 {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e12 {
                break;
            }
        }
        if converged {
            break;
        }
        if !stepped {
            // cannot improve: flat or singular — converged if the gradient
            // is small relative to the data scale
            converged = jtr.iter().map(|g| g.abs()).fold(0.0, f64::max) < 1e-8 * (1.0 + cost);
            break;
        }
    }

    // covariance at the optimum
    let mut jac = vec![vec![0.0; k]; n];
    for j in 0..k {
        let h = 6e-6 * p[j].abs().max(1.0);
        let mut pp = p.clone();
        pp[j] += h;
        let rp = residuals(&pp);
        pp[j] = p[j] - h;
        let rm = residuals(&pp);
        for i in 0..n {
            jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    let mut jtj = vec![vec![0.0; k]; k];
    for i in 0..n {
        for a in 0..k {
            for b in 0..k {
                jtj[a][b] += jac[i][a] * jac[i][b];
            }
        }
    }
    let scale = if sigma.is_some() {
        1.0
    } else if n > k {
        cost / (n - k) as f64
    } else {
        1.0
    };
    let std_errors = match invert(&jtj) {
        Some(inv) => (0..k).map(|a| (inv[a][a].max(0.0) * scale).sqrt()).collect(),
        None => vec![f64::NAN; k],
    };

    LmOutcome { params: p, std_errors, cost, converged, iterations }
}

/// `c + a·e^{-t/T}·sin(ωt + φ)` — the damped-sine model. `T` enters through
/// a clamped exponent so wandering fits stay finite.
pub fn damped_sine(p: &[f64], t: f64) -> f64 {
    let (a, omega, phase, decay, offset) = (p[0], p[1], p[2], p[3], p[4]);
    let arg = if decay != 0.0 { (-t / decay).clamp(-700.0, 50.0) } else { 0.0 };
    offset + a * arg.exp() * (omega * t + phase).sin()
}

// Internal parameterization for the optimizer: a decay *rate* instead of a
// decay time. 1/T has a flat valley at |T| → ∞ where noisy fits strand;
// the rate form keeps the undamped case at the benign interior point r = 0.
fn damped_sine_rate(p: &[f64], t: f64) -> f64 {
    let (a, omega, phase, rate, offset) = (p[0], p[1], p[2], p[3], p[4]);
    offset + a * (-rate * t).clamp(-700.0, 50.0).exp() * (omega * t + phase).sin()
}

pub const DAMPED_SINE_PARAMS: [&str; 5] = ["amplitude", "omega", "phase", "decay_time", "offset"];

/// Spectral-peak initial guess for the damped sine.
fn damped_sine_init(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let span = x[n - 1] - x[0];
    let mut best = (0.0, 0.0, 0.0); // (|S|, omega, arg S)
    for j in 1..=(n / 2) {
        let omega = 2.0 * std::f64::consts::PI * j as f64 / span;
        let (mut re, mut im) = (0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y.iter()) {
            let d = yi - mean;
            re += d * (omega * xi).cos();
            im -= d * (omega * xi).sin();
        }
        let mag = (re * re + im * im).sqrt();
        if mag > best.0 {
            best = (mag, omega, im.atan2(re));
        }
    }
    let amp = 2.0 * best.0 / n as f64;
    // d ≈ amp·sin(ωt + φ) has DFT argument φ - π/2
    let phase = best.2 + std::f64::consts::FRAC_PI_2;
    (amp.max(1e-6), best.1, phase)
}

/// Fit `y(x)` with an exponentially damped sine. Needs ≥ 8 points spanning
/// at least one oscillation; non-convergence is flagged, not raised.
pub fn fit_damped_sine(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<FitResult> {
    if x.len() != y.len() || x.len() < 8 {
        return Err(Error::Argument(format!(
            "damped-sine fit needs ≥ 8 points, got {}",
            x.len()
        )));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let span = x[x.len() - 1] - x[0];
    let (amp0, omega0, phase0) = damped_sine_init(x, y);
    let mut best: Option<LmOutcome> = None;
    for dphi in [0.0, 2.0 * std::f64::consts::FRAC_PI_3, -2.0 * std::f64::consts::FRAC_PI_3] {
        let init = [amp0, omega0, phase0 + dphi, 1.0 / span, mean];
        let out = levenberg_marquardt(damped_sine_rate, x, y, sigma, &init, 200);
        let better = match &best {
            None => true,
            Some(b) => out.cost < b.cost,
        };
        if better {
            best = Some(out);
        }
    }
    let out = best.unwrap();
    let mut params = out.params;
    let mut std_errors = out.std_errors;
    // canonical sign: amplitude ≥ 0
    if params[0] < 0.0 {
        params[0] = -params[0];
        params[2] += std::f64::consts::PI;
    }
    params[2] = wrap_angle(params[2]);
    params[1] = params[1].abs();
    // report a decay time: T = 1/rate, σ_T = σ_r/r² (both capped for
    // near-undamped fits)
    let rate = params[3];
    let cap = 1e15;
    params[3] = if rate.abs() < 1.0 / cap {
        if rate >= 0.0 {
            cap
        } else {
            -cap
        }
    } else {
        (1.0 / rate).clamp(-cap, cap)
    };
    std_errors[3] = if rate.abs() < 1.0 / cap {
        cap
    } else {
        (std_errors[3] / (rate * rate)).min(cap)
    };
    for e in std_errors.iter_mut() {
        if !e.is_finite() {
            *e = 0.0;
        }
    }
    Ok(FitResult {
        model: "damped_sine".into(),
        parameter_names: DAMPED_SINE_PARAMS.iter().map(|s| s.to_string()).collect(),
        parameters: params,
        std_errors,
        bootstrap_errors: None,
        residual_norm: out.cost.sqrt(),
        converged: out.converged,
        iterations: out.iterations,
    })
}

/// Location and value of the first maximum of a fitted damped sine for
/// t > 0. For a damped model this is the global maximum of the first one
/// and a half periods; a coarse scan brackets it and golden-section search
/// refines.
pub fn damped_sine_first_maximum(p: &[f64]) -> (f64, f64) {
    let omega = p[1].abs().max(1e-12);
    let period = 2.0 * std::f64::consts::PI / omega;
    let coarse = 2000;
    let t_max = 1.5 * period;
    let f = |t: f64| damped_sine(p, t);
    let values: Vec<f64> = (0..=coarse)
        .map(|i| f(t_max * i as f64 / coarse as f64))
        .collect();
    // first interior local maximum of the smooth model; falls back to the
    // global argmax for monotone curves
    let best = (1..coarse)
        .find(|&i| values[i] >= values[i - 1] && values[i] >= values[i + 1])
        .unwrap_or_else(|| {
            values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap()
        });
    let step = t_max / coarse as f64;
    let mut lo = step * best.saturating_sub(1) as f64;
    let mut hi = (step * (best + 1) as f64).min(t_max);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..120 {
        let c = hi - gr * (hi - lo);
        let d = lo + gr * (hi - lo);
        if f(c) < f(d) {
            lo = c;
        } else {
            hi = d;
        }
    }
    let t_star = 0.5 * (lo + hi);
    (t_star, f(t_star))
}

/// `A·sin(2(φ + φ₀))` — the parity-oscillation model.
pub fn parity_model(p: &[f64], phi: f64) -> f64 {
    p[0] * (2.0 * (phi + p[1])).sin()
}

pub const PARITY_PARAMS: [&str; 2] = ["amplitude", "phi0"];

/// Fit parity data with `A·sin(2(φ + φ₀))`; A is normalized to be ≥ 0 and
/// φ₀ wrapped into [-π/2, π/2).
pub fn fit_parity(phi: &[f64], parity: &[f64], sigma: Option<&[f64]>) -> Result<FitResult> {
    if phi.len() != parity.len() || phi.len() < 6 {
        return Err(Error::Argument(format!(
            "parity fit needs ≥ 6 points, got {}",
            phi.len()
        )));
    }
    // quadrature projection: P = A sin2φ cos2φ₀ + A cos2φ sin2φ₀
    let n = phi.len() as f64;
    let s: f64 =
        phi.iter().zip(parity.iter()).map(|(&p, &y)| y * (2.0 * p).sin()).sum::<f64>() * 2.0 / n;
    let c: f64 =
        phi.iter().zip(parity.iter()).map(|(&p, &y)| y * (2.0 * p).cos()).sum::<f64>() * 2.0 / n;
    let a0 = (s * s + c * c).sqrt().max(1e-6);
    let phi0 = 0.5 * c.atan2(s);
    let out = levenberg_marquardt(parity_model, phi, parity, sigma, &[a0, phi0], 200);
    let mut params = out.params;
    let mut std_errors = out.std_errors;
    if params[0] < 0.0 {
        params[0] = -params[0];
        params[1] += std::f64::consts::FRAC_PI_2;
    }
    params[1] = wrap_half_pi(params[1]);
    for e in std_errors.iter_mut() {
        if !e.is_finite() {
            *e = 0.0;
        }
    }
    Ok(FitResult {
        model: "parity_sin2".into(),
        parameter_names: PARITY_PARAMS.iter().map(|s| s.to_string()).collect(),
        parameters: params,
        std_errors,
        bootstrap_errors: None,
        residual_norm: out.cost.sqrt(),
        converged: out.converged,
        iterations: out.iterations,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * std::f64::consts::PI);
    if x > std::f64::consts::PI {
        x -= 2.0 * std::f64::consts::PI;
    } else if x <= -std::f64::consts::PI {
        x += 2.0 * std::f64::consts::PI;
    }
    x
}

/// Wrap into [-π/2, π/2) — the parity model has period π in φ₀.
pub fn wrap_half_pi(a: f64) -> f64 {
    let mut x = a % std::f64::consts::PI;
    if x >= std::f64::consts::FRAC_PI_2 {
        x -= std::f64::consts::PI;
    } else if x < -std::f64::consts::FRAC_PI_2 {
        x += std::f64::consts::PI;
    }
    x
}

//! Measurement pipelines: Rabi scans with damped-sine fits, MS duration
//! scans, parity oscillations and the Bell-state fidelity estimator.
//!
//! Sampling discipline: scan point `i` derives its readout seed from
//! `(master seed, SCAN_POINT, i)`, so points are independent and the whole
//! scan is reproducible. `shots = 0` switches every pipeline to exact
//! expectation values (the infinite-shot limit of the same estimator,
//! SPAM included).

use crate::error::{Error, Result};
use crate::fit::{self, FitResult};
use crate::gates::rotation_matrix;
use crate::ms::{self, MotionState, PulseParams};
use crate::noise::{apply_dephasing, NoiseModel};
use crate::qudit::{DensityMatrix, QuditState};
use crate::readout::{
    assignment_probability, joint_assignment_probabilities, joint_shelving_readout,
    shelving_readout,
};
use crate::rng::{self, domain};
use crate::scan::{ScanResult, Series};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;

/// Bootstrap resamples used for fit uncertainties.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Rabi-oscillation population of the driven `(0, k)` pair: resonant drive
/// at Rabi frequency Ω with pure dephasing at coherence rate Γ acting during
/// the pulse. Closed-form solution of the driven-dephasing Bloch equations:
///
/// ```text
/// P_k(t) = (1 - z(t))/2
/// z(t) = e^{-Γt/2}·[cos(μt) + Γ/(2μ)·sin(μt)],   μ = √(Ω² - Γ²/4)
/// ```
///
/// (hyperbolic branch when overdamped). With Γ = 0 this is `sin²(Ωt/2)`.
pub fn damped_rabi_population(omega: f64, gamma: f64, t: f64) -> f64 {
    let disc = omega * omega - 0.25 * gamma * gamma;
    let envelope = (-0.5 * gamma * t).exp();
    let z = if disc > 1e-24 {
        let mu = disc.sqrt();
        envelope * ((mu * t).cos() + 0.5 * gamma / mu * (mu * t).sin())
    } else if disc < -1e-24 {
        let nu = (-disc).sqrt();
        envelope * ((nu * t).cosh() + 0.5 * gamma / nu * (nu * t).sinh())
    } else {
        envelope * (1.0 + 0.5 * gamma * t)
    };
    0.5 * (1.0 - z)
}

/// Setup of a single-qudit Rabi-oscillation experiment.
#[derive(Debug, Clone, Copy)]
pub struct RabiExperiment {
    /// Addressed ion.
    pub ion: usize,
    /// Driven level `k` of the `(0, k)` pair.
    pub level: usize,
    /// Carrier Rabi frequency Ω, rad/s (setup-specific; no universal value).
    pub omega_rabi: f64,
    /// Ion that is read out. Reading the neighbour of the addressed ion
    /// measures the cross-talk fraction.
    pub readout_ion: usize,
}

/// Populations of the read-out ion after a pulse of duration `tau`.
fn rabi_populations(exp: &RabiExperiment, noise: &NoiseModel, tau: f64) -> Vec<f64> {
    let d = 4;
    let gamma = noise.pair_rate(0, exp.level);
    let omega = if exp.readout_ion == exp.ion {
        exp.omega_rabi
    } else {
        noise.crosstalk_fraction * exp.omega_rabi
    };
    let mut pops = vec![0.0; d];
    let pk = if omega > 0.0 { damped_rabi_population(omega, gamma, tau) } else { 0.0 };
    pops[exp.level] = pk;
    pops[0] = 1.0 - pk;
    pops
}

/// Simulated Rabi scan `P(|k⟩)` versus pulse duration, including dephasing
/// during the drive, addressing cross-talk and readout sampling.
pub fn rabi_scan(
    exp: &RabiExperiment,
    tau_grid: &[f64],
    shots: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ScanResult> {
    if exp.ion > 1 || exp.readout_ion > 1 {
        return Err(Error::Argument("two-ion register: ion indices are 0 or 1".into()));
    }
    if exp.level == 0 || exp.level > 3 {
        return Err(Error::Argument("driven level k must be 1, 2 or 3".into()));
    }
    if exp.omega_rabi <= 0.0 {
        return Err(Error::Argument("omega_rabi must be positive".into()));
    }
    if tau_grid.is_empty() || tau_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("tau grid must be non-empty and strictly increasing".into()));
    }
    noise.validate(4)?;
    let mut estimates = Vec::with_capacity(tau_grid.len());
    let mut errors = Vec::with_capacity(tau_grid.len());
    for (i, &tau) in tau_grid.iter().enumerate() {
        let pops = rabi_populations(exp, noise, tau);
        if shots == 0 {
            estimates.push(assignment_probability(&pops, exp.level, noise).clamp(0.0, 1.0));
            errors.push(0.0);
        } else {
            let rho = diagonal_density(&pops);
            let point_seed = rng::derive_seed(seed, domain::SCAN_POINT, i as u64);
            let rec = shelving_readout(&rho, exp.level, shots, point_seed, noise)?;
            estimates.push(rec.fraction());
            errors.push(rec.std_error());
        }
    }
    let result = ScanResult {
        parameter: "tau_s".into(),
        grid: tau_grid.to_vec(),
        series: vec![Series { name: "p_target".into(), estimates, std_errors: errors }],
        shots_per_point: shots,
        seed: (shots > 0).then_some(seed),
    };
    result.validate()?;
    Ok(result)
}

fn diagonal_density(pops: &[f64]) -> DensityMatrix {
    let d = pops.len();
    let mut m = Array2::zeros((d, d));
    for (i, &p) in pops.iter().enumerate() {
        m[[i, i]] = C64::new(p.max(0.0), 0.0);
    }
    DensityMatrix::from_parts_unchecked(vec![d], m)
}

fn floored_sigma(se: &[f64], shots: usize) -> Vec<f64> {
    let floor = 0.5 / shots as f64;
    se.iter().map(|&s| s.max(floor)).collect()
}

/// Fit a Rabi scan with the exponentially damped sine; with sampled data a
/// binomial bootstrap supplies a second uncertainty estimate.
pub fn fit_damped_sine_scan(scan: &ScanResult) -> Result<FitResult> {
    let series = scan
        .series("p_target")
        .ok_or_else(|| Error::Argument("scan has no p_target series".into()))?;
    let mut fit = if scan.shots_per_point > 0 {
        let sigma = floored_sigma(&series.std_errors, scan.shots_per_point);
        fit::fit_damped_sine(&scan.grid, &series.estimates, Some(&sigma))?
    } else {
        fit::fit_damped_sine(&scan.grid, &series.estimates, None)?
    };
    if let (true, Some(master)) = (scan.shots_per_point > 0, scan.seed) {
        let samples = bootstrap_population_fits(
            &scan.grid,
            &series.estimates,
            scan.shots_per_point,
            master,
            |x, y, s| fit::fit_damped_sine(x, y, Some(s)),
        )?;
        fit.bootstrap_errors = Some(param_std(&samples, fit.parameters.len()));
    }
    Ok(fit)
}

/// Fitted-model population at its first maximum with a standard error
/// (bootstrap over resampled scans when the scan was sampled).
#[derive(Debug, Clone, Copy)]
pub struct RabiFidelity {
    pub value: f64,
    pub std_error: f64,
    /// Pulse duration of the first maximum, s.
    pub tau_first_max: f64,
}

/// The single-qudit gate fidelity estimator: the fitted `P(|k⟩)` at its
/// first maximum.
pub fn rabi_fidelity(scan: &ScanResult, fit: &FitResult) -> Result<RabiFidelity> {
    if !fit.converged {
        return Err(Error::NotConverged("rabi fit did not converge".into()));
    }
    let (tau_star, value) = fit::damped_sine_first_maximum(&fit.parameters);
    let mut std_error = 0.0;
    if let (true, Some(master)) = (scan.shots_per_point > 0, scan.seed) {
        let series = scan.series("p_target").unwrap();
        let samples = bootstrap_population_fits(
            &scan.grid,
            &series.estimates,
            scan.shots_per_point,
            master,
            |x, y, s| fit::fit_damped_sine(x, y, Some(s)),
        )?;
        let maxima: Vec<f64> = samples
            .iter()
            .map(|p| fit::damped_sine_first_maximum(p).1)
            .collect();
        std_error = std_dev(&maxima);
    }
    Ok(RabiFidelity { value, std_error, tau_first_max: tau_star })
}

/// MS duration scan (the Fig.-3b-style experiment): pulse the bichromatic
/// drive on `|00⟩` for each duration, then run the joint level-1 readout.
pub fn ms_scan(
    params: &PulseParams,
    motion: &MotionState,
    tau_grid: &[f64],
    shots: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ScanResult> {
    if tau_grid.is_empty() || tau_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("tau grid must be non-empty and strictly increasing".into()));
    }
    noise.validate(4)?;
    let spin = QuditState::basis_state(&[4, 4], &[0, 0])?;
    let mut p00 = Vec::with_capacity(tau_grid.len());
    let mut pone = Vec::with_capacity(tau_grid.len());
    let mut p11 = Vec::with_capacity(tau_grid.len());
    let mut e00 = Vec::with_capacity(tau_grid.len());
    let mut eone = Vec::with_capacity(tau_grid.len());
    let mut e11 = Vec::with_capacity(tau_grid.len());
    for (i, &tau) in tau_grid.iter().enumerate() {
        let rho = apply_dephasing(&evolve(&spin, motion, params, tau)?, noise, tau)?;
        if shots == 0 {
            let (q0, q1, q2) = joint_assignment_probabilities(&rho, 1, noise)?;
            p00.push(q0.clamp(0.0, 1.0));
            pone.push(q1.clamp(0.0, 1.0));
            p11.push(q2.clamp(0.0, 1.0));
            e00.push(0.0);
            eone.push(0.0);
            e11.push(0.0);
        } else {
            let point_seed = rng::derive_seed(seed, domain::SCAN_POINT, i as u64);
            let rec = joint_shelving_readout(&rho, 1, shots, point_seed, noise)?;
            let (q0, q1, q2) = rec.fractions();
            let se = |p: f64| (p * (1.0 - p) / shots as f64).sqrt();
            p00.push(q0);
            pone.push(q1);
            p11.push(q2);
            e00.push(se(q0));
            eone.push(se(q1));
            e11.push(se(q2));
        }
    }
    let result = ScanResult {
        parameter: "tau_s".into(),
        grid: tau_grid.to_vec(),
        series: vec![
            Series { name: "p00".into(), estimates: p00, std_errors: e00 },
            Series { name: "p01_plus_p10".into(), estimates: pone, std_errors: eone },
            Series { name: "p11".into(), estimates: p11, std_errors: e11 },
        ],
        shots_per_point: shots,
        seed: (shots > 0).then_some(seed),
    };
    result.validate()?;
    Ok(result)
}

fn evolve(
    spin: &QuditState,
    motion: &MotionState,
    params: &PulseParams,
    tau: f64,
) -> Result<DensityMatrix> {
    ms::evolve_ms(spin, motion, params, tau)
}

/// Parity-oscillation scan on an explicitly given two-ion state: apply the
/// global analyzing gate `R_01(φ, π/2)` to both ions and run the joint
/// level-1 readout for every φ. The recorded series are the three outcome
/// populations; the parity is their derived combination
/// `P_a = 1 - 2(P_01 + P_10)`, exact whenever the population stays in the
/// `{|0⟩, |1⟩}` block (true for the MS pipeline).
pub fn parity_scan_from_state(
    rho: &DensityMatrix,
    phi_grid: &[f64],
    shots: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ScanResult> {
    if phi_grid.len() < 2 || phi_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("phi grid must be strictly increasing".into()));
    }
    if phi_grid[phi_grid.len() - 1] - phi_grid[0] < std::f64::consts::PI - 1e-9 {
        return Err(Error::Argument("phi grid must cover at least π".into()));
    }
    noise.validate(4)?;
    let mut p00 = Vec::with_capacity(phi_grid.len());
    let mut pone = Vec::with_capacity(phi_grid.len());
    let mut p11 = Vec::with_capacity(phi_grid.len());
    let mut e00 = Vec::with_capacity(phi_grid.len());
    let mut eone = Vec::with_capacity(phi_grid.len());
    let mut e11 = Vec::with_capacity(phi_grid.len());
    for (i, &phi) in phi_grid.iter().enumerate() {
        let analyzer = rotation_matrix(1, phi, std::f64::consts::FRAC_PI_2, 4)?;
        let analyzed = rho.apply_unitary(&analyzer, &[0])?.apply_unitary(&analyzer, &[1])?;
        if shots == 0 {
            let (q0, q1, q2) = joint_assignment_probabilities(&analyzed, 1, noise)?;
            p00.push(q0.clamp(0.0, 1.0));
            pone.push(q1.clamp(0.0, 1.0));
            p11.push(q2.clamp(0.0, 1.0));
            e00.push(0.0);
            eone.push(0.0);
            e11.push(0.0);
        } else {
            let point_seed = rng::derive_seed(seed, domain::SCAN_POINT, i as u64);
            let rec = joint_shelving_readout(&analyzed, 1, shots, point_seed, noise)?;
            let (q0, q1, q2) = rec.fractions();
            let se = |p: f64| (p * (1.0 - p) / shots as f64).sqrt();
            p00.push(q0);
            pone.push(q1);
            p11.push(q2);
            e00.push(se(q0));
            eone.push(se(q1));
            e11.push(se(q2));
        }
    }
    let result = ScanResult {
        parameter: "phi_rad".into(),
        grid: phi_grid.to_vec(),
        series: vec![
            Series { name: "p00".into(), estimates: p00, std_errors: e00 },
            Series { name: "p01_plus_p10".into(), estimates: pone, std_errors: eone },
            Series { name: "p11".into(), estimates: p11, std_errors: e11 },
        ],
        shots_per_point: shots,
        seed: (shots > 0).then_some(seed),
    };
    result.validate()?;
    Ok(result)
}

/// Full parity experiment: MS pulse on `|00⟩` (duration `params.tau`, with
/// dephasing over the pulse), then [`parity_scan_from_state`].
pub fn parity_scan(
    params: &PulseParams,
    motion: &MotionState,
    phi_grid: &[f64],
    shots: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ScanResult> {
    let rho = prepared_bell(params, motion, noise)?;
    parity_scan_from_state(&rho, phi_grid, shots, noise, seed)
}

fn prepared_bell(
    params: &PulseParams,
    motion: &MotionState,
    noise: &NoiseModel,
) -> Result<DensityMatrix> {
    let spin = QuditState::basis_state(&[4, 4], &[0, 0])?;
    let rho = ms::evolve_ms(&spin, motion, params, params.tau)?;
    apply_dephasing(&rho, noise, params.tau)
}

/// Derived parity values `P_a = 1 - 2(P_01 + P_10)` and their standard
/// errors from a parity scan.
pub fn parity_series(scan: &ScanResult) -> Result<(Vec<f64>, Vec<f64>)> {
    let pone = scan
        .series("p01_plus_p10")
        .ok_or_else(|| Error::Argument("scan has no p01_plus_p10 series".into()))?;
    let parity = pone.estimates.iter().map(|&q| 1.0 - 2.0 * q).collect();
    let errors = pone.std_errors.iter().map(|&e| 2.0 * e).collect();
    Ok((parity, errors))
}

/// Fit the parity oscillation `A·sin(2(φ + φ₀))`; the coherence element is
/// `|ρ_00,11| = A/2`. Bootstrap errors included for sampled scans.
pub fn fit_parity_scan(scan: &ScanResult) -> Result<FitResult> {
    let (parity, errors) = parity_series(scan)?;
    let mut fit = if scan.shots_per_point > 0 {
        let sigma = floored_sigma(&errors, scan.shots_per_point);
        fit::fit_parity(&scan.grid, &parity, Some(&sigma))?
    } else {
        fit::fit_parity(&scan.grid, &parity, None)?
    };
    if let (true, Some(master)) = (scan.shots_per_point > 0, scan.seed) {
        let pone = scan.series("p01_plus_p10").unwrap();
        let shots = scan.shots_per_point;
        let samples = bootstrap_population_fits(
            &scan.grid,
            &pone.estimates,
            shots,
            master,
            |x, q, s| {
                let parity: Vec<f64> = q.iter().map(|&qi| 1.0 - 2.0 * qi).collect();
                let sigma: Vec<f64> = s.iter().map(|&si| 2.0 * si).collect();
                fit::fit_parity(x, &parity, Some(&sigma))
            },
        )?;
        fit.bootstrap_errors = Some(param_std(&samples, fit.parameters.len()));
    }
    Ok(fit)
}

/// Bell-state fidelity from the population-plus-coherence estimator
/// `F = (P_00 + P_11)/2 + |A|/2`; values above 1 are clamped and flagged.
#[derive(Debug, Clone, Copy)]
pub struct BellFidelity {
    /// Clamped to [0, 1].
    pub value: f64,
    /// Raw estimator value, possibly > 1 under sampling noise.
    pub raw: f64,
    /// False when the raw value exceeded 1.
    pub physical: bool,
}

pub fn bell_fidelity(p00: f64, p11: f64, amplitude: f64) -> Result<BellFidelity> {
    if !(0.0..=1.0).contains(&p00) || !(0.0..=1.0).contains(&p11) {
        return Err(Error::Argument("populations must lie in [0, 1]".into()));
    }
    if !(-1.0..=1.0).contains(&amplitude) {
        return Err(Error::Argument("parity amplitude must lie in [-1, 1]".into()));
    }
    let raw = 0.5 * (p00 + p11) + 0.5 * amplitude.abs();
    Ok(BellFidelity { value: raw.min(1.0), raw, physical: raw <= 1.0 + 1e-12 })
}

/// Outcome of the full Bell-state characterization.
#[derive(Debug, Clone)]
pub struct BellEstimate {
    pub p00: f64,
    pub p11: f64,
    pub p00_plus_p11_err: f64,
    pub parity_fit: FitResult,
    pub amplitude: f64,
    /// `|ρ_00,11| = A/2`.
    pub coherence: f64,
    pub fidelity: BellFidelity,
    pub fidelity_err: f64,
    pub parity: ScanResult,
}

/// Bell-state preparation and fidelity estimation: populations at the gate
/// duration plus a parity scan, combined by the fidelity estimator.
pub fn bell_experiment(
    params: &PulseParams,
    motion: &MotionState,
    phi_grid: &[f64],
    shots: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<BellEstimate> {
    let rho = prepared_bell(params, motion, noise)?;
    let (p00, pone, p11, pone_err) = if shots == 0 {
        let (q0, q1, q2) = joint_assignment_probabilities(&rho, 1, noise)?;
        (q0, q1, q2, 0.0)
    } else {
        let rec_seed = rng::derive_seed(seed, domain::TRIAL, 0);
        let rec = joint_shelving_readout(&rho, 1, shots, rec_seed, noise)?;
        let (q0, q1, q2) = rec.fractions();
        (q0, q1, q2, (q1 * (1.0 - q1) / shots as f64).sqrt())
    };
    let _ = pone;
    let parity = parity_scan_from_state(&rho, phi_grid, shots, noise, seed)?;
    let parity_fit = fit_parity_scan(&parity)?;
    if !parity_fit.converged {
        return Err(Error::NotConverged("parity fit did not converge".into()));
    }
    let amplitude = parity_fit.parameters[0].clamp(-1.0, 1.0);
    let amp_err = parity_fit
        .bootstrap_errors
        .as_ref()
        .map(|e| e[0])
        .unwrap_or(parity_fit.std_errors[0]);
    let fidelity = bell_fidelity(p00.clamp(0.0, 1.0), p11.clamp(0.0, 1.0), amplitude)?;
    // (P00 + P11)/2 = (1 - P_one)/2, so its error is σ(P_one)/2
    let fidelity_err = (0.25 * pone_err * pone_err + 0.25 * amp_err * amp_err).sqrt();
    Ok(BellEstimate {
        p00,
        p11,
        p00_plus_p11_err: pone_err,
        amplitude,
        coherence: 0.5 * amplitude.abs(),
        fidelity,
        fidelity_err,
        parity_fit,
        parity,
    })
}

/// Two-ququart density matrix with the qubit-block populations
/// `(p00, 0, 0, p11)` and coherence `⟨00|ρ|11⟩ = (A/2)·e^{i(2φ₀ + π/2)}`,
/// which produces the parity oscillation `A·sin(2(φ + φ₀))`.
pub fn synthetic_parity_state(
    amplitude: f64,
    phi0: f64,
    p00: f64,
    p11: f64,
) -> Result<DensityMatrix> {
    if amplitude < 0.0 || 0.5 * amplitude > (p00 * p11).sqrt() + 1e-12 {
        return Err(Error::Argument(
            "amplitude incompatible with the populations (positivity)".into(),
        ));
    }
    if (p00 + p11 - 1.0).abs() > 1e-12 {
        return Err(Error::Argument("p00 + p11 must be 1 for this synthetic family".into()));
    }
    let mut m = Array2::zeros((16, 16));
    m[[0, 0]] = C64::new(p00, 0.0);
    m[[5, 5]] = C64::new(p11, 0.0);
    let c = C64::from_polar(0.5 * amplitude, 2.0 * phi0 + std::f64::consts::FRAC_PI_2);
    m[[0, 5]] = c;
    m[[5, 0]] = c.conj();
    DensityMatrix::new(vec![4, 4], m)
}

// --- bootstrap machinery ---------------------------------------------------

fn binomial<R: Rng>(n: usize, p: f64, rng: &mut R) -> usize {
    let p = p.clamp(0.0, 1.0);
    (0..n).filter(|_| rng.random::<f64>() < p).count()
}

/// Resample per-point binomial populations and refit; returns the parameter
/// vectors of the converged refits.
fn bootstrap_population_fits<F>(
    grid: &[f64],
    estimates: &[f64],
    shots: usize,
    master: u64,
    refit: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64], &[f64], &[f64]) -> Result<FitResult>,
{
    let mut samples = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for r in 0..BOOTSTRAP_RESAMPLES {
        let mut rng = rng::derive(master, domain::BOOTSTRAP, r as u64);
        let resampled: Vec<f64> = estimates
            .iter()
            .map(|&p| binomial(shots, p, &mut rng) as f64 / shots as f64)
            .collect();
        let sigma: Vec<f64> = floored_sigma(
            &resampled
                .iter()
                .map(|&p| (p * (1.0 - p) / shots as f64).sqrt())
                .collect::<Vec<_>>(),
            shots,
        );
        if let Ok(fit) = refit(grid, &resampled, &sigma) {
            if fit.converged {
                samples.push(fit.parameters);
            }
        }
    }
    if samples.len() < BOOTSTRAP_RESAMPLES / 2 {
        return Err(Error::NotConverged(
            "more than half of the bootstrap refits failed".into(),
        ));
    }
    Ok(samples)
}

fn param_std(samples: &[Vec<f64>], k: usize) -> Vec<f64> {
    (0..k)
        .map(|j| {
            let vals: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            std_dev(&vals)
        })
        .collect()
}

fn std_dev(vals: &[f64]) -> f64 {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn uniform_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn noiseless_exact_rabi_is_sine_squared() {
        let omega = 2.0 * PI * 12.5e3;
        let exp = RabiExperiment { ion: 0, level: 2, omega_rabi: omega, readout_ion: 0 };
        let grid = uniform_grid(0.0, 200e-6, 41);
        let scan = rabi_scan(&exp, &grid, 0, &NoiseModel::noiseless(), 0).unwrap();
        let series = scan.series("p_target").unwrap();
        for (&tau, &p) in grid.iter().zip(series.estimates.iter()) {
            assert_abs_diff_eq!(p, (omega * tau / 2.0).sin().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn noiseless_first_maximum_at_pi_over_omega() {
        let omega = 2.0 * PI * 12.5e3;
        let exp = RabiExperiment { ion: 0, level: 1, omega_rabi: omega, readout_ion: 0 };
        let grid = uniform_grid(0.0, 200e-6, 101);
        let scan = rabi_scan(&exp, &grid, 0, &NoiseModel::noiseless(), 0).unwrap();
        let fit = fit_damped_sine_scan(&scan).unwrap();
        let fid = rabi_fidelity(&scan, &fit).unwrap();
        assert_abs_diff_eq!(fid.tau_first_max, PI / omega, epsilon = 1e-8);
        assert_abs_diff_eq!(fid.value, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn damped_first_maximum_matches_closed_form() {
        // envelope time constant = 5 Rabi periods
        let omega = 2.0 * PI * 10e3;
        let period = 2.0 * PI / omega;
        let gamma = 2.0 / (5.0 * period); // coherence rate: envelope e^{-Γt/2}
        let exp = RabiExperiment { ion: 0, level: 1, omega_rabi: omega, readout_ion: 0 };
        let noise = NoiseModel {
            laser_dephasing_rate: 2.0 * gamma,
            ..NoiseModel::noiseless()
        };
        let grid = uniform_grid(0.0, 4.0 * period, 161);
        let scan = rabi_scan(&exp, &grid, 0, &noise, 0).unwrap();
        let fit = fit_damped_sine_scan(&scan).unwrap();
        let fid = rabi_fidelity(&scan, &fit).unwrap();
        // closed form maximized directly
        let mut best = 0.0_f64;
        for i in 0..20000 {
            let t = 1.5 * period * i as f64 / 20000.0;
            best = best.max(damped_rabi_population(omega, gamma, t));
        }
        assert_abs_diff_eq!(fid.value, best, epsilon = 1e-4);
    }

    #[test]
    fn crosstalk_readout_of_neighbour_shows_scaled_rabi() {
        let omega = 2.0 * PI * 12.5e3;
        let exp = RabiExperiment { ion: 0, level: 1, omega_rabi: omega, readout_ion: 1 };
        let noise = NoiseModel { crosstalk_fraction: 0.1, ..NoiseModel::noiseless() };
        let grid = uniform_grid(0.0, 200e-6, 21);
        let scan = rabi_scan(&exp, &grid, 0, &noise, 0).unwrap();
        let series = scan.series("p_target").unwrap();
        for (&tau, &p) in grid.iter().zip(series.estimates.iter()) {
            assert_abs_diff_eq!(p, (0.1 * omega * tau / 2.0).sin().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn sampled_rabi_frequency_recovery() {
        // 300 shots/point: frequency within 2 % in ≥ 95 % of seeds
        let omega = 2.0 * PI * 10e3;
        let exp = RabiExperiment { ion: 0, level: 1, omega_rabi: omega, readout_ion: 0 };
        let noise = NoiseModel::noiseless();
        let grid = uniform_grid(0.0, 200e-6, 50);
        let mut hits = 0;
        let trials = 100;
        for seed in 0..trials {
            let scan = rabi_scan(&exp, &grid, 300, &noise, 31_000 + seed).unwrap();
            let series = scan.series("p_target").unwrap();
            let sigma = floored_sigma(&series.std_errors, 300);
            let fit = fit::fit_damped_sine(&scan.grid, &series.estimates, Some(&sigma)).unwrap();
            if fit.converged && ((fit.parameters[1] - omega) / omega).abs() < 0.02 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "frequency recovered in only {hits}/{trials} trials");
    }

    #[test]
    fn rabi_fidelity_rejects_unconverged_fit() {
        let scan = ScanResult {
            parameter: "tau_s".into(),
            grid: vec![0.0, 1.0],
            series: vec![],
            shots_per_point: 0,
            seed: None,
        };
        let fit = FitResult {
            model: "damped_sine".into(),
            parameter_names: vec![],
            parameters: vec![],
            std_errors: vec![],
            bootstrap_errors: None,
            residual_norm: 0.0,
            converged: false,
            iterations: 200,
        };
        assert!(matches!(
            rabi_fidelity(&scan, &fit),
            Err(Error::NotConverged(_))
        ));
    }

    #[test]
    fn ideal_bell_parity_has_unit_amplitude() {
        let rho = ms::bell_target().to_density();
        let grid = uniform_grid(0.0, PI, 24);
        let scan =
            parity_scan_from_state(&rho, &grid, 0, &NoiseModel::noiseless(), 0).unwrap();
        let (parity, _) = parity_series(&scan).unwrap();
        for (&phi, &pa) in grid.iter().zip(parity.iter()) {
            assert_abs_diff_eq!(pa, (2.0 * phi).sin(), epsilon = 1e-10);
        }
        let fit = fit_parity_scan(&scan).unwrap();
        assert_abs_diff_eq!(fit.parameters[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.parameters[1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn block_mixed_state_has_zero_parity() {
        let mut m = Array2::zeros((16, 16));
        for idx in [0usize, 1, 4, 5] {
            m[[idx, idx]] = C64::new(0.25, 0.0);
        }
        let rho = DensityMatrix::new(vec![4, 4], m).unwrap();
        let grid = uniform_grid(0.0, PI, 12);
        let scan =
            parity_scan_from_state(&rho, &grid, 0, &NoiseModel::noiseless(), 0).unwrap();
        let (parity, _) = parity_series(&scan).unwrap();
        for &pa in &parity {
            assert_abs_diff_eq!(pa, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn synthetic_amplitude_recovery_at_finite_shots() {
        let rho = synthetic_parity_state(0.62, 0.4, 0.5, 0.5).unwrap();
        let grid = uniform_grid(0.0, PI, 20);
        let noise = NoiseModel::noiseless();
        let mut ok = 0;
        for seed in 0..10 {
            let scan = parity_scan_from_state(&rho, &grid, 300, &noise, 500 + seed).unwrap();
            let fit = fit_parity_scan(&scan).unwrap();
            if (fit.parameters[0] - 0.62).abs() <= 0.05 {
                ok += 1;
            }
        }
        assert!(ok >= 9, "amplitude recovered in only {ok}/10 trials");
    }

    #[test]
    fn bootstrap_errors_track_binomial_propagation() {
        let rho = synthetic_parity_state(0.62, 0.4, 0.5, 0.5).unwrap();
        let grid = uniform_grid(0.0, PI, 20);
        let scan =
            parity_scan_from_state(&rho, &grid, 300, &NoiseModel::noiseless(), 7).unwrap();
        let fit = fit_parity_scan(&scan).unwrap();
        let boot = fit.bootstrap_errors.as_ref().unwrap()[0];
        let analytic = fit.std_errors[0];
        assert!(boot > 0.0 && analytic > 0.0);
        let ratio = boot / analytic;
        assert!((0.4..2.5).contains(&ratio), "bootstrap/analytic ratio {ratio}");
    }

    #[test]
    fn parity_identity_on_block_distributions() {
        // P11 + P00 - P01 - P10 == 1 - 2(P01 + P10) for any block distribution
        let mut rng = rng::derive(3, 0x9999, 0);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let (p00, p01, p10, p11) = (p[0], p[1], p[2], p[3]);
            let lhs = p11 + p00 - p01 - p10;
            let rhs = 1.0 - 2.0 * (p01 + p10);
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn bell_fidelity_arithmetic_and_clamping() {
        let f = bell_fidelity(0.5, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(f.value, 1.0, epsilon = 1e-15);
        assert!(f.physical);
        let f = bell_fidelity(0.45, 0.45, 0.8).unwrap();
        assert_abs_diff_eq!(f.value, 0.85, epsilon = 1e-15);
        let f = bell_fidelity(0.6, 0.55, 0.9).unwrap();
        assert!(!f.physical);
        assert_abs_diff_eq!(f.value, 1.0, epsilon = 1e-15);
        assert!(f.raw > 1.0);
        assert!(bell_fidelity(1.2, 0.0, 0.0).is_err());
    }

    #[test]
    fn bell_fidelity_is_monotone_in_each_argument() {
        let base = bell_fidelity(0.4, 0.4, 0.5).unwrap().raw;
        assert!(bell_fidelity(0.5, 0.4, 0.5).unwrap().raw > base);
        assert!(bell_fidelity(0.4, 0.5, 0.5).unwrap().raw > base);
        assert!(bell_fidelity(0.4, 0.4, 0.6).unwrap().raw > base);
    }

    #[test]
    fn noiseless_pipeline_reaches_unit_fidelities() {
        // end-to-end exact mode: Bell fidelity 1 within the dynamics tolerance
        let params = ms::solve_gate_params(0.1, 2.0 * PI / 310e-6).unwrap();
        let motion = MotionState::ground();
        let grid = uniform_grid(0.0, PI, 16);
        let est =
            bell_experiment(&params, &motion, &grid, 0, &NoiseModel::noiseless(), 0).unwrap();
        assert!(est.fidelity.raw > 1.0 - 1e-6, "raw fidelity {}", est.fidelity.raw);
        assert_abs_diff_eq!(est.p00, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(est.p11, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn dephasing_suppresses_parity_amplitude_not_populations() {
        let params = ms::solve_gate_params(0.1, 2.0 * PI / 310e-6).unwrap();
        let motion = MotionState::ground();
        let grid = uniform_grid(0.0, PI, 16);
        let noise = NoiseModel {
            laser_dephasing_rate: 0.4 / params.tau,
            ..NoiseModel::noiseless()
        };
        let est = bell_experiment(&params, &motion, &grid, 0, &noise, 0).unwrap();
        assert!(est.amplitude < 0.95, "amplitude {}", est.amplitude);
        assert_abs_diff_eq!(est.p00 + est.p11, 1.0, epsilon = 1e-6);
        assert!(est.fidelity.value < 1.0 - 0.01);
    }

    #[test]
    fn ms_scan_exact_structure_matches_population_scan() {
        let params = ms::solve_gate_params(0.1, 2.0 * PI / 310e-6).unwrap();
        let motion = MotionState::ground();
        let grid = uniform_grid(1e-6, 2.0 * params.tau, 40);
        let sampled = ms_scan(&params, &motion, &grid, 0, &NoiseModel::noiseless(), 0).unwrap();
        let exact = ms::population_scan(&params, &grid, &motion).unwrap();
        for (a, b) in sampled
            .series("p01_plus_p10")
            .unwrap()
            .estimates
            .iter()
            .zip(exact.series("p01_plus_p10").unwrap().estimates.iter())
        {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn parity_fit_one_sigma_coverage_is_calibrated() {
        // empirical coverage of the analytic 1σ interval over seeds
        let rho = synthetic_parity_state(0.62, 0.4, 0.5, 0.5).unwrap();
        let grid = uniform_grid(0.0, PI, 20);
        let noise = NoiseModel::noiseless();
        let trials = 100;
        let mut covered = 0;
        for seed in 0..trials {
            let scan = parity_scan_from_state(&rho, &grid, 300, &noise, 9_000 + seed).unwrap();
            let (parity, errors) = parity_series(&scan).unwrap();
            let sigma = floored_sigma(&errors, 300);
            let fit = fit::fit_parity(&scan.grid, &parity, Some(&sigma)).unwrap();
            if (fit.parameters[0] - 0.62).abs() <= fit.std_errors[0] {
                covered += 1;
            }
        }
        assert!(
            (60..=75).contains(&covered),
            "1σ coverage {covered}/100 outside [60, 75]"
        );
    }
}

//! Stochastic error channels: dephasing, addressing cross-talk and SPAM.
//!
//! Dephasing is Lindblad-style exponential coherence decay. Each qudit level
//! `l` carries a phase-diffusion rate `D_l` (rad²/s); level 0 lives in the
//! ground-state manifold and levels 1..d in the metastable manifold, so a
//! common `laser_dephasing_rate` `L` additionally damps every optical
//! coherence (exactly one of the pair in level 0). The coherence between
//! joint basis states decays as `exp(-Γ_ij·t)` with
//!
//! ```text
//! Γ_ij = Σ_ions [ (D_a + D_b)/2 + L/2·(a = 0 xor b = 0) ]
//! ```
//!
//! summed over the per-ion level pairs `(a, b)` of the two joint states.
//! Populations are untouched and the channel is a semigroup in `t`.

use crate::error::{Error, Result};
use crate::gates::Rotation;
use crate::qudit::DensityMatrix;
use serde::{Deserialize, Serialize};

/// Magnetic-field sensitivity of the qudit transition quoted for the clock
/// pair at the cooling field offset (Hz/µT); attached by default to the
/// field-sensitive m = ±1 levels.
pub const B_SENSITIVITY_HZ_PER_UT: f64 = 52.0;

/// Cross-talk fraction measured for the addressing optics (< 10 %).
pub const CROSSTALK_DEFAULT: f64 = 0.10;

/// Wall-clock duration of one state projection + measurement period (s).
/// Metadata only; it never enters the physics.
pub const READOUT_PERIOD_S: f64 = 5e-3;

/// Noise parameters for a register of qudits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Phase-diffusion rate per level, rad²/s. Index = level.
    pub dephasing_rate_per_level: Vec<f64>,
    /// Extra phase-diffusion rate on all optical (level-0 ↔ excited)
    /// coherences, rad²/s.
    pub laser_dephasing_rate: f64,
    /// Fraction ε of the addressed rotation angle leaking onto the
    /// neighbouring ion.
    pub crosstalk_fraction: f64,
    /// Per-level probability that a binary shelving detection outcome is
    /// flipped when the ion sits in that level.
    pub spam: Vec<f64>,
    /// Magnetic sensitivity per level, Hz/µT; used by
    /// [`NoiseModel::with_field_noise`] to convert field noise into rates.
    pub b_sensitivity_hz_per_ut: Vec<f64>,
}

impl Default for NoiseModel {
    /// Noiseless model with the hardware-derived metadata defaults: 10 %
    /// cross-talk ceiling, 52 Hz/µT on the field-sensitive m = ±1 levels
    /// (the m = 0 clock pair is first-order insensitive and set to zero),
    /// SPAM zero (must be user-supplied).
    fn default() -> Self {
        Self {
            dephasing_rate_per_level: vec![0.0; 4],
            laser_dephasing_rate: 0.0,
            crosstalk_fraction: CROSSTALK_DEFAULT,
            spam: vec![0.0; 4],
            b_sensitivity_hz_per_ut: vec![0.0, 0.0, B_SENSITIVITY_HZ_PER_UT, B_SENSITIVITY_HZ_PER_UT],
        }
    }
}

impl NoiseModel {
    /// A fully noiseless model (cross-talk included).
    pub fn noiseless() -> Self {
        Self { crosstalk_fraction: 0.0, ..Self::default() }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.dephasing_rate_per_level.len() < d || self.spam.len() < d {
            return Err(Error::Argument(format!(
                "noise model covers {} levels, register needs {d}",
                self.dephasing_rate_per_level.len().min(self.spam.len())
            )));
        }
        if self.dephasing_rate_per_level.iter().any(|&r| r < 0.0)
            || self.laser_dephasing_rate < 0.0
        {
            return Err(Error::Argument("dephasing rates must be non-negative".into()));
        }
        if !(0.0..=0.2).contains(&self.crosstalk_fraction) {
            return Err(Error::Argument(format!(
                "crosstalk fraction {} outside [0, 0.2]",
                self.crosstalk_fraction
            )));
        }
        if self.spam.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Argument("SPAM probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Populate per-level rates from a white magnetic-field noise amplitude
    /// `b_rms` (µT) with correlation time `tau_c` (s), via the
    /// motional-narrowing rate `D_l = (2π·b_l·b_rms)²·τ_c`.
    pub fn with_field_noise(mut self, b_rms_ut: f64, tau_c_s: f64) -> Self {
        self.dephasing_rate_per_level = self
            .b_sensitivity_hz_per_ut
            .iter()
            .map(|&b| {
                let delta_omega = 2.0 * std::f64::consts::PI * b * b_rms_ut;
                delta_omega * delta_omega * tau_c_s
            })
            .collect();
        self
    }

    /// Coherence decay rate for a single-ion level pair `(a, b)`.
    pub fn pair_rate(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let diffusion =
            0.5 * (self.dephasing_rate_per_level[a] + self.dephasing_rate_per_level[b]);
        let optical = if (a == 0) != (b == 0) { 0.5 * self.laser_dephasing_rate } else { 0.0 };
        diffusion + optical
    }
}

/// Damp every off-diagonal element of `rho` by `exp(-Γ_ij·duration)`.
pub fn apply_dephasing(
    rho: &DensityMatrix,
    noise: &NoiseModel,
    duration: f64,
) -> Result<DensityMatrix> {
    if duration < 0.0 {
        return Err(Error::Argument(format!("negative duration {duration}")));
    }
    let dims = rho.dims().to_vec();
    noise.validate(*dims.iter().max().unwrap())?;
    let n = dims.len();
    // per-qudit level digits of a flat index
    let digits = |mut f: usize| -> Vec<usize> {
        let mut out = vec![0; n];
        for i in (0..n).rev() {
            out[i] = f % dims[i];
            f /= dims[i];
        }
        out
    };
    let d = rho.dim();
    let mut out = rho.elements().clone();
    for i in 0..d {
        let di = digits(i);
        for j in 0..d {
            if i == j {
                continue;
            }
            let dj = digits(j);
            let gamma: f64 =
                di.iter().zip(dj.iter()).map(|(&a, &b)| noise.pair_rate(a, b)).sum();
            out[[i, j]] *= (-gamma * duration).exp();
        }
    }
    Ok(DensityMatrix::from_parts_unchecked(dims, out))
}

/// Expand an addressed rotation into the intended pulse plus the cross-talk
/// pulse on the neighbouring ion (`θ' = ε·θ`, same phase). For ε = 0 the
/// addressed rotation alone is returned.
pub fn crosstalk_expand(rotation: &Rotation, epsilon: f64) -> Result<Vec<Rotation>> {
    if !(0.0..=0.2).contains(&epsilon) {
        return Err(Error::Argument(format!("crosstalk fraction {epsilon} outside [0, 0.2]")));
    }
    let mut out = vec![*rotation];
    if epsilon > 0.0 {
        let neighbour = 1 - rotation.ion;
        out.push(Rotation {
            ion: neighbour,
            levels: rotation.levels,
            phi: rotation.phi,
            theta: epsilon * rotation.theta,
        });
    }
    Ok(out)
}

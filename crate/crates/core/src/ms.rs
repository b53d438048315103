//! Spin–motion dynamics of the bichromatic Mølmer–Sørensen drive.
//!
//! # Model and conventions
//!
//! Two ions share one motional mode (the axial stretch mode). A bichromatic
//! field detuned by ±δ from the first sidebands of the `|0⟩ → |1⟩`
//! transition gives, in the interaction picture after the rotating-wave
//! approximation, the Lamb-Dicke Hamiltonian (ħ = 1)
//!
//! ```text
//! H(t) = g_n · (X̃_A + X̃_B) · (a† e^{-iδt} + a e^{+iδt})
//! ```
//!
//! with `X̃ = |0⟩⟨1| + |1⟩⟨0|` (zero on all other levels) and the sideband
//! coupling `g_n = (ηΩ/2)·c(n)`. The factor
//!
//! ```text
//! c(n) = e^{-η²/2} · L_n^{(1)}(η²) / (n + 1)
//! ```
//!
//! is the Debye-Waller reduction of the sideband matrix element for an ion
//! prepared in Fock state `|n⟩`; it is frozen per initial Fock state so each
//! thermal sector remains an exactly solvable driven oscillator. This frozen
//! coupling is what makes the gate thermally sensitive: the pulse is
//! calibrated on the ground-state-cooled sector, so hotter sectors
//! accumulate a slightly wrong entangling phase.
//!
//! Because `S_x = X̃_A + X̃_B` commutes with `H(t)`, the exact propagator per
//! `S_x` eigenvalue `s` is a displacement plus a geometric phase
//! (the Magnus series terminates: `[H(t₁), H(t₂)]` is a c-number),
//!
//! ```text
//! U_s(t) = D(s·α(t)) · e^{-iθ(t) s²}
//! α(t) = (g_n/δ)(e^{-iδt} - 1),    θ(t) = g_n² (δt - sin δt)/δ²
//! ```
//!
//! The loop closes (`α = 0`) at `t = 2π/δ`, where the drive acts on the
//! qubit block as `XX_01,01(χ)` with `χ = 2θ` up to a block-global phase.
//! Requiring `χ(2π/δ) = π/4` fixes the gate condition `η_eff·Ω = δ/2` in
//! angular units — with the detuning read in ordinary frequency units this
//! is the familiar pair `τ_MS = 1/δ_cyc` and `η·Ω = π·δ_cyc`.
//!
//! [`evolve_ms`] evaluates the closed form (thermal averaging is an exact
//! weighted sum over the truncated Fock distribution);
//! [`evolve_ms_numeric`] integrates the same Hamiltonian on the joint
//! spin ⊗ Fock space with an adaptive Dormand–Prince stepper and serves as
//! an independent oracle. An optional carrier-leakage term
//! `κ·Ω·cos((ω_m+δ)t)·(Ỹ_A + Ỹ_B)` (with `Ỹ = i|1⟩⟨0| - i|0⟩⟨1|`) models
//! off-resonant carrier excitation and is supported by the integrator only.
//! The quadrature orientation is deliberate: the in-phase carrier component
//! is proportional to `S_x` and commutes with the whole drive, so the
//! quadrature part carries all of the damage done by phase errors that
//! excite the carrier.

use crate::error::{Error, Result};
use crate::linalg::laguerre;
use crate::qudit::{DensityMatrix, QuditState};
use crate::scan::{ScanResult, Series};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Stretch-mode frequency, rad/s (2π × 809 kHz).
pub const MODE_FREQUENCY: f64 = 2.0 * std::f64::consts::PI * 809e3;
/// Trap secular frequencies (x, y, z), rad/s (2π × {1520, 1500, 467} kHz).
/// Machine-description defaults; only the axial stretch mode built on the
/// z confinement enters the dynamics.
pub const TRAP_FREQUENCIES: [f64; 3] = [
    2.0 * std::f64::consts::PI * 1520e3,
    2.0 * std::f64::consts::PI * 1500e3,
    2.0 * std::f64::consts::PI * 467e3,
];
/// Mean stretch-mode phonon number after sideband cooling.
pub const STRETCH_NBAR: f64 = 0.079;
/// Maximum allowed thermal tail mass outside the Fock cutoff.
pub const THERMAL_TAIL_MAX: f64 = 1e-8;
/// Default Fock cutoff (sufficient for n̄ ≤ 0.2).
pub const DEFAULT_FOCK_CUTOFF: usize = 20;
/// Default per-step integration tolerance of the numeric oracle.
pub const DEFAULT_STEP_TOL: f64 = 1e-9;

/// Physical parameters of the bichromatic MS pulse.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PulseParams {
    /// Resonant carrier Rabi frequency Ω of `|0⟩ → |1⟩`, rad/s.
    pub omega_rabi: f64,
    /// Detuning δ from the sidebands, rad/s.
    pub delta: f64,
    /// Lamb-Dicke parameter of the selected mode.
    pub eta: f64,
    /// Mode frequency ω_m, rad/s. Enters only through the optional carrier
    /// term; the resonant interaction picture absorbs it otherwise.
    pub omega_m: f64,
    /// Pulse duration τ, s.
    pub tau: f64,
    /// Carrier-leakage knob κ ∈ [0, 1]; 0 = pure sideband drive.
    pub carrier_leakage: f64,
}

impl PulseParams {
    pub fn new(omega_rabi: f64, delta: f64, eta: f64, omega_m: f64, tau: f64) -> Result<Self> {
        let p = Self { omega_rabi, delta, eta, omega_m, tau, carrier_leakage: 0.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 0.3) {
            return Err(Error::Validation(format!(
                "Lamb-Dicke parameter {} outside the validated range (0, 0.3]",
                self.eta
            )));
        }
        if self.delta <= 0.0 || self.tau <= 0.0 || self.omega_rabi <= 0.0 || self.omega_m <= 0.0 {
            return Err(Error::Validation(
                "delta, tau, omega_rabi and omega_m must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.carrier_leakage) {
            return Err(Error::Validation("carrier_leakage must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Sideband coupling `g_n` for an ion starting in Fock state n.
    pub fn coupling(&self, n: usize) -> f64 {
        0.5 * self.eta * self.omega_rabi * debye_waller(n, self.eta)
    }

    /// Entangling phase χ(t) = 2θ(t) accumulated on the ground-state-cooled
    /// sector.
    pub fn chi(&self, t: f64, n: usize) -> f64 {
        let g = self.coupling(n);
        let x = self.delta * t;
        2.0 * g * g * (x - x.sin()) / (self.delta * self.delta)
    }
}

/// Debye-Waller factor `c(n)` of the first blue sideband.
pub fn debye_waller(n: usize, eta: f64) -> f64 {
    let x = eta * eta;
    (-0.5 * x).exp() * laguerre(n, 1.0, x) / (n as f64 + 1.0)
}

/// Solve the pulse parameters for the χ = π/4 gate at the first loop
/// closure: `τ = 2π/δ` and Ω chosen so the n = 0 sector accumulates exactly
/// π/4 (i.e. `η·c(0)·Ω = δ/2`).
pub fn solve_gate_params(eta: f64, delta: f64) -> Result<PulseParams> {
    if delta <= 0.0 {
        return Err(Error::Validation("delta must be positive".into()));
    }
    let tau = 2.0 * std::f64::consts::PI / delta;
    let omega = delta / (2.0 * eta * debye_waller(0, eta));
    PulseParams::new(omega, delta, eta, MODE_FREQUENCY, tau)
}

/// Initial state of the shared motional mode: a classical mixture of Fock
/// states (thermal or explicit weights).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum MotionState {
    Thermal { nbar: f64, fock_cutoff: usize },
    /// Explicit diagonal Fock-space mixture; `weights[n]` is the population
    /// of `|n⟩` (renormalized on use).
    FockMixture { weights: Vec<f64> },
}

impl MotionState {
    /// Thermal state with the default (auto-raised) cutoff.
    pub fn thermal(nbar: f64) -> Result<Self> {
        let cutoff = DEFAULT_FOCK_CUTOFF.max(required_cutoff(nbar));
        Self::thermal_with_cutoff(nbar, cutoff)
    }

    pub fn thermal_with_cutoff(nbar: f64, fock_cutoff: usize) -> Result<Self> {
        if nbar < 0.0 {
            return Err(Error::Argument(format!("negative mean phonon number {nbar}")));
        }
        let tail = thermal_tail(nbar, fock_cutoff);
        if tail > THERMAL_TAIL_MAX {
            return Err(Error::FockCutoff {
                cutoff: fock_cutoff,
                tail,
                max_tail: THERMAL_TAIL_MAX,
                required: required_cutoff(nbar),
            });
        }
        Ok(Self::Thermal { nbar, fock_cutoff })
    }

    /// Ground-state-cooled mode (n̄ = 0).
    pub fn ground() -> Self {
        Self::Thermal { nbar: 0.0, fock_cutoff: DEFAULT_FOCK_CUTOFF }
    }

    /// Pure Fock state `|n⟩`.
    pub fn fock(n: usize) -> Self {
        let mut weights = vec![0.0; n + 1];
        weights[n] = 1.0;
        Self::FockMixture { weights }
    }

    /// Normalized `(n, weight)` pairs of the truncated distribution.
    pub fn sector_weights(&self) -> Result<Vec<(usize, f64)>> {
        let raw: Vec<f64> = match self {
            Self::Thermal { nbar, fock_cutoff } => {
                let tail = thermal_tail(*nbar, *fock_cutoff);
                if tail > THERMAL_TAIL_MAX {
                    return Err(Error::FockCutoff {
                        cutoff: *fock_cutoff,
                        tail,
                        max_tail: THERMAL_TAIL_MAX,
                        required: required_cutoff(*nbar),
                    });
                }
                (0..=*fock_cutoff).map(|n| thermal_weight(*nbar, n)).collect()
            }
            Self::FockMixture { weights } => {
                if weights.is_empty() || weights.iter().any(|&w| w < 0.0) {
                    return Err(Error::Argument(
                        "Fock mixture weights must be non-negative and non-empty".into(),
                    ));
                }
                weights.clone()
            }
        };
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::Argument("Fock mixture has zero total weight".into()));
        }
        Ok(raw
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(n, &w)| (n, w / total))
            .collect())
    }

    fn cutoff(&self) -> usize {
        match self {
            Self::Thermal { fock_cutoff, .. } => *fock_cutoff,
            Self::FockMixture { weights } => weights.len() - 1,
        }
    }
}

fn thermal_weight(nbar: f64, n: usize) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    nbar.powi(n as i32) / (nbar + 1.0).powi(n as i32 + 1)
}

/// Tail mass of the thermal distribution beyond the cutoff:
/// `(n̄/(n̄+1))^(cutoff+1)`.
fn thermal_tail(nbar: f64, cutoff: usize) -> f64 {
    if nbar == 0.0 {
        return 0.0;
    }
    (nbar / (nbar + 1.0)).powi(cutoff as i32 + 1)
}

fn required_cutoff(nbar: f64) -> usize {
    if nbar == 0.0 {
        return 0;
    }
    let r = nbar / (nbar + 1.0);
    (THERMAL_TAIL_MAX.ln() / r.ln()).ceil() as usize
}

/// Eigenbasis of `S_x = X̃_A + X̃_B`: a real orthogonal change of basis `W`
/// and the eigenvalue of every joint basis vector.
struct SxBasis {
    w: Array2<f64>,
    svals: Vec<f64>,
}

#[allow(clippy::needless_range_loop)]
fn sx_basis(dims: &[usize]) -> SxBasis {
    let ion_basis = |d: usize| -> (Array2<f64>, Vec<f64>) {
        let inv = 1.0 / 2f64.sqrt();
        let mut w = Array2::zeros((d, d));
        w[[0, 0]] = inv;
        w[[1, 0]] = inv; // |+⟩, eigenvalue +1
        w[[0, 1]] = inv;
        w[[1, 1]] = -inv; // |-⟩, eigenvalue -1
        let mut s = vec![1.0, -1.0];
        for j in 2..d {
            w[[j, j]] = 1.0;
            s.push(0.0);
        }
        (w, s)
    };
    let (wa, sa) = ion_basis(dims[0]);
    let (wb, sb) = ion_basis(dims[1]);
    let (da, db) = (dims[0], dims[1]);
    let mut w = Array2::zeros((da * db, da * db));
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    w[[i * db + k, j * db + l]] = wa[[i, j]] * wb[[k, l]];
                }
            }
        }
    }
    let mut svals = Vec::with_capacity(da * db);
    for i in 0..da {
        for k in 0..db {
            svals.push(sa[i] + sb[k]);
        }
    }
    SxBasis { w, svals }
}

fn check_two_ion_spin(spin: &QuditState) -> Result<()> {
    if spin.dims().len() != 2 {
        return Err(Error::Argument("the MS drive acts on a two-ion register".into()));
    }
    Ok(())
}

/// Closed-form evolution under the MS drive for duration `t`, thermally
/// averaged over the motional mode and traced down to the two-ion register.
pub fn evolve_ms(
    spin: &QuditState,
    motion: &MotionState,
    params: &PulseParams,
    t: f64,
) -> Result<DensityMatrix> {
    check_two_ion_spin(spin)?;
    params.validate()?;
    if params.carrier_leakage != 0.0 {
        return Err(Error::Argument(
            "the closed-form solution has no carrier term; use evolve_ms_numeric".into(),
        ));
    }
    if t < 0.0 {
        return Err(Error::Argument(format!("negative evolution time {t}")));
    }
    let sectors = motion.sector_weights()?;
    let dims = spin.dims().to_vec();
    let basis = sx_basis(&dims);
    let d = spin.dim();

    // spin density matrix in the S_x eigenbasis: Wᵀ ρ W
    let rho = spin.to_density();
    let rho_x = congruence_real(&basis.w, rho.elements(), true);

    let mut out_x: Array2<C64> = Array2::zeros((d, d));
    for &(n, weight) in &sectors {
        let g = params.coupling(n);
        let alpha = (g / params.delta)
            * (C64::new(0.0, -params.delta * t).exp() - C64::new(1.0, 0.0));
        let alpha_sq = alpha.norm_sqr();
        let dt = params.delta * t;
        let theta = g * g * (dt - dt.sin()) / (params.delta * params.delta);
        for j in 0..d {
            for k in 0..d {
                let (sj, sk) = (basis.svals[j], basis.svals[k]);
                let x = alpha_sq * (sj - sk) * (sj - sk);
                let coherence = (-0.5 * x).exp() * laguerre(n, 0.0, x);
                let phase = C64::new(0.0, -theta * (sj * sj - sk * sk)).exp();
                out_x[[j, k]] += weight * coherence * phase * rho_x[[j, k]];
            }
        }
    }
    let out = congruence_real(&basis.w, &out_x, false);
    Ok(DensityMatrix::from_parts_unchecked(dims, out))
}

/// `Wᵀ M W` (forward) or `W M Wᵀ` (inverse) for a real orthogonal `W`.
fn congruence_real(w: &Array2<f64>, m: &Array2<C64>, forward: bool) -> Array2<C64> {
    let d = m.nrows();
    let mut tmp: Array2<C64> = Array2::zeros((d, d));
    let mut out: Array2<C64> = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                let wk = if forward { w[[k, i]] } else { w[[i, k]] };
                acc += wk * m[[k, j]];
            }
            tmp[[i, j]] = acc;
        }
    }
    for i in 0..d {
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d {
                let wk = if forward { w[[k, j]] } else { w[[j, k]] };
                acc += tmp[[i, k]] * wk;
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// Direct integration of the interaction-picture Hamiltonian on the joint
/// spin ⊗ Fock space; independent oracle for [`evolve_ms`].
pub fn evolve_ms_numeric(
    spin: &QuditState,
    motion: &MotionState,
    params: &PulseParams,
    t: f64,
) -> Result<DensityMatrix> {
    evolve_ms_numeric_with_tol(spin, motion, params, t, DEFAULT_STEP_TOL)
}

pub fn evolve_ms_numeric_with_tol(
    spin: &QuditState,
    motion: &MotionState,
    params: &PulseParams,
    t: f64,
    step_tol: f64,
) -> Result<DensityMatrix> {
    Ok(evolve_ms_numeric_trajectory(spin, motion, params, &[t], step_tol)?.pop().unwrap())
}

/// Integrate once and report the reduced two-ion state at every checkpoint
/// of the non-decreasing time list `ts`.
pub fn evolve_ms_numeric_trajectory(
    spin: &QuditState,
    motion: &MotionState,
    params: &PulseParams,
    ts: &[f64],
    step_tol: f64,
) -> Result<Vec<DensityMatrix>> {
    check_two_ion_spin(spin)?;
    params.validate()?;
    if ts.is_empty() || ts[0] < 0.0 || ts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("checkpoint times must be non-decreasing and ≥ 0".into()));
    }
    if step_tol <= 0.0 {
        return Err(Error::Argument("integration tolerance must be positive".into()));
    }
    let sectors = motion.sector_weights()?;
    let dims = spin.dims().to_vec();
    let d = spin.dim();

    // independent driven sectors; deterministic reduction in Fock order
    let per_sector: Vec<Result<Vec<Array2<C64>>>> = sectors
        .par_iter()
        .map(|&(n0, _)| integrate_sector(spin, params, n0, motion.cutoff(), ts, step_tol))
        .collect();
    let mut out: Vec<Array2<C64>> = vec![Array2::zeros((d, d)); ts.len()];
    for (res, &(_, weight)) in per_sector.into_iter().zip(sectors.iter()) {
        let rhos = res?;
        for (acc, rho) in out.iter_mut().zip(rhos) {
            acc.zip_mut_with(&rho, |a, &b| *a += weight * b);
        }
    }
    Ok(out
        .into_iter()
        .map(|m| DensityMatrix::from_parts_unchecked(dims.clone(), m))
        .collect())
}

/// Dormand–Prince 5(4) integration of one Fock sector.
fn integrate_sector(
    spin: &QuditState,
    params: &PulseParams,
    n0: usize,
    cutoff: usize,
    ts: &[f64],
    step_tol: f64,
) -> Result<Vec<Array2<C64>>> {
    let d = spin.dim();
    let (da, db) = (spin.dims()[0], spin.dims()[1]);
    let nf = n0 + cutoff.max(DEFAULT_FOCK_CUTOFF) + 1;
    let g = params.coupling(n0);
    let delta = params.delta;
    let kappa = params.carrier_leakage;
    let mu = params.omega_m + params.delta;
    let omega = params.omega_rabi;

    // neighbour list of S_x: spin index i couples to j with X-weight 1; the
    // sign marks whether j -> i raises the flipped ion's level (for the
    // quadrature carrier term Ỹ with matrix element ±i)
    let mut neighbours: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
    for la in 0..da {
        for lb in 0..db {
            let i = la * db + lb;
            if la < 2 {
                let j = (1 - la) * db + lb;
                neighbours[i].push((j, if la == 1 { 1.0 } else { -1.0 }));
            }
            if lb < 2 {
                let j = la * db + (1 - lb);
                neighbours[i].push((j, if lb == 1 { 1.0 } else { -1.0 }));
            }
        }
    }

    let mut psi: Array1<C64> = Array1::zeros(d * nf);
    for i in 0..d {
        psi[i * nf + n0] = spin.amplitudes()[i];
    }

    let rhs = |t: f64, y: &Array1<C64>, dy: &mut Array1<C64>| {
        let blue = g * C64::new(0.0, -delta * t).exp();
        let red = g * C64::new(0.0, delta * t).exp();
        let carrier_mag = if kappa > 0.0 { kappa * omega * (mu * t).cos() } else { 0.0 };
        dy.fill(C64::new(0.0, 0.0));
        for i in 0..d {
            for &(j, sign) in &neighbours[i] {
                let carrier = C64::new(0.0, sign * carrier_mag);
                for m in 0..nf {
                    let mut h = carrier * y[j * nf + m];
                    if m > 0 {
                        h += blue * (m as f64).sqrt() * y[j * nf + m - 1];
                    }
                    if m + 1 < nf {
                        h += red * ((m + 1) as f64).sqrt() * y[j * nf + m + 1];
                    }
                    dy[i * nf + m] += C64::new(0.0, -1.0) * h;
                }
            }
        }
    };

    // Dormand–Prince tableau
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    // b5 - b4 (local error weights)
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];

    let dim = d * nf;
    let mut k: Vec<Array1<C64>> = (0..7).map(|_| Array1::zeros(dim)).collect();
    let mut ytmp: Array1<C64> = Array1::zeros(dim);
    let mut out = Vec::with_capacity(ts.len());

    let mut t = 0.0;
    // initial step: resolve the fastest frequency present
    let fastest = if kappa > 0.0 { mu } else { delta.max(4.0 * g) };
    let mut dt = 0.02 * 2.0 * std::f64::consts::PI / fastest;
    rhs(t, &psi, &mut k[0]);

    for &t_target in ts {
        while t < t_target {
            let truncated = dt > t_target - t;
            let h = dt.min(t_target - t);
            // stages (FSAL: k[0] = f(t, psi) is already in place)
            for s in 0..6 {
                ytmp.assign(&psi);
                for (j, kj) in k.iter().take(s + 1).enumerate() {
                    let a = A[s][j];
                    if a != 0.0 {
                        ytmp.zip_mut_with(kj, |y, &kv| *y += h * a * kv);
                    }
                }
                rhs(t + C[s] * h, &ytmp, &mut k[s + 1]);
            }
            // 5th-order solution (the A[5] row doubles as the b vector)
            let mut ynew = psi.clone();
            for (j, kj) in k.iter().take(6).enumerate() {
                let b = A[5][j];
                if b != 0.0 {
                    ynew.zip_mut_with(kj, |y, &kv| *y += h * b * kv);
                }
            }
            // error estimate
            let mut err_sq = 0.0;
            for i in 0..dim {
                let mut e = C64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += E[j] * kj[i];
                    }
                }
                let scale = step_tol * (1.0 + psi[i].norm().max(ynew[i].norm()));
                let en = (h * e.norm()) / scale;
                err_sq += en * en;
            }
            let err = (err_sq / dim as f64).sqrt();
            let accepted = err <= 1.0;
            if accepted {
                t += h;
                // remove integrator norm drift
                let norm = ynew.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                ynew.mapv_inplace(|a| a / norm);
                psi = ynew;
                rhs(t, &psi, &mut k[0]);
            }
            // a step truncated only to hit the checkpoint keeps its dt
            if !(accepted && truncated) {
                let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
                dt = h * factor.clamp(0.2, 5.0);
            }
            if dt <= 0.0 || !dt.is_finite() {
                return Err(Error::Internal("integrator step size collapsed".into()));
            }
        }
        // guard: the wavepacket must not reach the Fock-space edge
        let mut edge = 0.0;
        for i in 0..d {
            for m in nf.saturating_sub(2)..nf {
                edge += psi[i * nf + m].norm_sqr();
            }
        }
        if edge > 1e-9 {
            return Err(Error::Validation(format!(
                "wavepacket reached the Fock-space edge (population {edge:.2e}); increase fock_cutoff"
            )));
        }
        // reduced spin density matrix
        let mut rho = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..nf {
                    acc += psi[i * nf + m] * psi[j * nf + m].conj();
                }
                rho[[i, j]] = acc;
            }
        }
        out.push(rho);
    }
    Ok(out)
}

/// Exact population curves `P_00`, `P_01 + P_10`, `P_11` versus pulse
/// duration, starting from `|00⟩`.
pub fn population_scan(
    params: &PulseParams,
    tau_grid: &[f64],
    motion: &MotionState,
) -> Result<ScanResult> {
    if tau_grid.is_empty() || tau_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("tau grid must be non-empty and strictly increasing".into()));
    }
    let spin = QuditState::basis_state(&[4, 4], &[0, 0])?;
    let mut p00 = Vec::with_capacity(tau_grid.len());
    let mut pone = Vec::with_capacity(tau_grid.len());
    let mut p11 = Vec::with_capacity(tau_grid.len());
    for &t in tau_grid {
        let rho = evolve_ms(&spin, motion, params, t)?;
        let pops = rho.populations();
        p00.push(pops[0].clamp(0.0, 1.0));
        pone.push((pops[1] + pops[4]).clamp(0.0, 1.0));
        p11.push(pops[5].clamp(0.0, 1.0));
    }
    let zeros = vec![0.0; tau_grid.len()];
    let result = ScanResult {
        parameter: "tau_s".into(),
        grid: tau_grid.to_vec(),
        series: vec![
            Series { name: "p00".into(), estimates: p00, std_errors: zeros.clone() },
            Series { name: "p01_plus_p10".into(), estimates: pone, std_errors: zeros.clone() },
            Series { name: "p11".into(), estimates: p11, std_errors: zeros },
        ],
        shots_per_point: 0,
        seed: None,
    };
    result.validate()?;
    Ok(result)
}

/// The Bell state `(|00⟩ - i|11⟩)/√2` produced by `XX_01,01(π/4)` on `|00⟩`.
pub fn bell_target() -> QuditState {
    let inv = 1.0 / 2f64.sqrt();
    let mut amps = Array1::zeros(16);
    amps[0] = C64::new(inv, 0.0);
    amps[5] = C64::new(0.0, -inv);
    QuditState::new(vec![4, 4], amps).expect("static Bell state")
}

/// Index of the first interior local minimum after an initial rise.
pub fn first_interior_minimum(values: &[f64]) -> Option<usize> {
    let mut running_max = f64::NEG_INFINITY;
    for i in 1..values.len().saturating_sub(1) {
        running_max = running_max.max(values[i - 1]);
        if values[i] <= values[i - 1]
            && values[i] <= values[i + 1]
            && running_max > values[i] + 1e-9
        {
            return Some(i);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gate_params(eta: f64) -> PulseParams {
        // reference operating point: τ_MS = 310 µs
        let delta = 2.0 * std::f64::consts::PI / 310e-6;
        solve_gate_params(eta, delta).unwrap()
    }

    #[test]
    fn solved_tau_matches_operating_point_and_scales() {
        let p = gate_params(0.1);
        assert_abs_diff_eq!(p.tau, 310e-6, epsilon = 1e-12);
        let p2 = solve_gate_params(0.1, 2.0 * p.delta).unwrap();
        assert_abs_diff_eq!(p2.tau, p.tau / 2.0, epsilon = 1e-15);
        // χ(τ) = π/4 on the cooled sector by construction
        assert_abs_diff_eq!(p.chi(p.tau, 0), std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let p = gate_params(0.1);
        let spin = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        let rho = evolve_ms(&spin, &MotionState::ground(), &p, 0.0).unwrap();
        assert_abs_diff_eq!(rho.populations()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ground_state_gate_produces_bell_state() {
        let p = gate_params(0.1);
        let spin = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        let rho = evolve_ms(&spin, &MotionState::ground(), &p, p.tau).unwrap();
        let f = rho.fidelity_with_pure(&bell_target());
        assert!(1.0 - f < 1e-6, "Bell infidelity {}", 1.0 - f);
        assert_abs_diff_eq!(rho.populations()[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(rho.populations()[5], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn thermal_motion_degrades_the_bell_state() {
        let p = gate_params(0.15);
        let spin = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        let mut prev = f64::INFINITY;
        for nbar in [0.0, 0.079, 0.5] {
            let motion = MotionState::thermal(nbar).unwrap();
            let f = evolve_ms(&spin, &motion, &p, p.tau)
                .unwrap()
                .fidelity_with_pure(&bell_target());
            assert!(f < prev, "fidelity not decreasing at nbar = {nbar}");
            if nbar > 0.0 {
                assert!(f < 1.0 - 1e-9);
            }
            prev = f;
        }
    }

    #[test]
    fn purity_restored_at_loop_closures() {
        let p = gate_params(0.1);
        let spin = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        for mult in 1..=3 {
            let t = mult as f64 * 2.0 * std::f64::consts::PI / p.delta;
            let rho = evolve_ms(&spin, &MotionState::ground(), &p, t).unwrap();
            assert!(rho.purity() > 1.0 - 1e-6, "purity {} at loop {mult}", rho.purity());
        }
        // mid-loop the spin is entangled with the motion
        let rho = evolve_ms(&spin, &MotionState::ground(), &p, 0.5 * p.tau).unwrap();
        assert!(rho.purity() < 0.99);
    }

    #[test]
    fn spectator_levels_are_conserved() {
        let p = gate_params(0.1);
        let amps = {
            let mut a = Array1::zeros(16);
            a[0] = C64::new(0.5, 0.0); // |00⟩
            a[2] = C64::new(0.5, 0.0); // |02⟩
            a[11] = C64::new(0.5, 0.0); // |23⟩
            a[15] = C64::new(0.5, 0.0); // |33⟩
            a
        };
        let spin = QuditState::new(vec![4, 4], amps).unwrap();
        for t in [0.3 * p.tau, p.tau] {
            let rho = evolve_ms(&spin, &MotionState::thermal(0.1).unwrap(), &p, t).unwrap();
            let pops = rho.populations();
            assert_abs_diff_eq!(pops[11], 0.25, epsilon = 1e-10);
            assert_abs_diff_eq!(pops[15], 0.25, epsilon = 1e-10);
            // |02⟩ keeps ion B in level 2 even though ion A is driven
            let ion_b = rho.partial_trace(&[1]).unwrap().populations();
            assert_abs_diff_eq!(ion_b[2], 0.25, epsilon = 1e-10);
            assert_abs_diff_eq!(ion_b[3], 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn numeric_oracle_matches_closed_form_on_ground_state() {
        let p = gate_params(0.1);
        let spin = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        let motion = MotionState::ground();
        for frac in [0.25, 0.7, 1.0] {
            let t = frac * p.tau;
            let analytic = evolve_ms(&spin, &motion, &p, t).unwrap();
            let numeric = evolve_ms_numeric(&spin, &motion, &p, t).unwrap();
            let infid = 1.0 - analytic.fidelity(&numeric);
            assert!(infid < 1e-6, "infidelity {infid:.2e} at t = {frac} τ");
        }
    }

    #[test]
    fn numeric_oracle_matches_closed_form_at_operating_nbar() {
        let p = gate_params(0.12);
        let spin = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        let motion = MotionState::thermal(STRETCH_NBAR).unwrap();
        let t = 0.6 * p.tau;
        let analytic = evolve_ms(&spin, &motion, &p, t).unwrap();
        let numeric = evolve_ms_numeric(&spin, &motion, &p, t).unwrap();
        let infid = 1.0 - analytic.fidelity(&numeric);
        assert!(infid < 1e-6, "infidelity {infid:.2e}");
    }

    #[test]
    fn numeric_at_zero_time_is_identity() {
        let p = gate_params(0.1);
        let spin = QuditState::basis_state(&[4, 4], &[0, 1]).unwrap();
        let rho = evolve_ms_numeric(&spin, &MotionState::ground(), &p, 0.0).unwrap();
        assert_abs_diff_eq!(rho.populations()[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn numeric_self_convergence_under_tolerance_halving() {
        let p = gate_params(0.1);
        let spin = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        let motion = MotionState::ground();
        let a = evolve_ms_numeric_with_tol(&spin, &motion, &p, p.tau, 1e-9).unwrap();
        let b = evolve_ms_numeric_with_tol(&spin, &motion, &p, p.tau, 0.5e-9).unwrap();
        let diff = crate::linalg::max_abs_diff(a.elements(), b.elements());
        assert!(diff < 1e-8, "tolerance halving moved elements by {diff:.2e}");
    }

    #[test]
    fn carrier_leakage_costs_fidelity() {
        // artificial slow mode so the carrier is cheap to resolve
        let delta = 2.0 * std::f64::consts::PI * 3000.0;
        let mut p = solve_gate_params(0.1, delta).unwrap();
        p.omega_m = 15.0 * delta;
        let spin = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        let clean = evolve_ms_numeric(&spin, &MotionState::ground(), &p, p.tau)
            .unwrap()
            .fidelity_with_pure(&bell_target());
        p.carrier_leakage = 0.5;
        let leaky = evolve_ms_numeric(&spin, &MotionState::ground(), &p, p.tau)
            .unwrap()
            .fidelity_with_pure(&bell_target());
        assert!(clean > 1.0 - 1e-6);
        assert!(leaky < clean - 1e-5, "carrier leakage had no effect: {leaky} vs {clean}");
        // and the closed form refuses the knob
        assert!(evolve_ms(&spin, &MotionState::ground(), &p, p.tau).is_err());
    }

    #[test]
    fn population_scan_structure() {
        let p = gate_params(0.1);
        let n = 51;
        let grid: Vec<f64> = (0..n).map(|i| 2.0 * p.tau * i as f64 / (n - 1) as f64).collect();
        let scan = population_scan(&p, &grid, &MotionState::ground()).unwrap();
        let pone = &scan.series("p01_plus_p10").unwrap().estimates;
        let p00 = &scan.series("p00").unwrap().estimates;
        let p11 = &scan.series("p11").unwrap().estimates;
        assert_abs_diff_eq!(p00[0], 1.0, epsilon = 1e-12);
        // first dip of P01+P10 lands on the loop closure τ = 2π/δ
        let dip = first_interior_minimum(pone).unwrap();
        let closure = 2.0 * std::f64::consts::PI / p.delta;
        let step = grid[1] - grid[0];
        assert!((grid[dip] - closure).abs() <= step + 1e-15);
        // and there P00 ≈ P11 ≈ 0.5
        assert_abs_diff_eq!(p00[dip], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(p11[dip], 0.5, epsilon = 1e-6);
    }

    #[test]
    fn parallel_thermal_reduction_is_bitwise_reproducible() {
        // sectors integrate in parallel but reduce in Fock order
        let p = gate_params(0.12);
        let spin = QuditState::basis_state(&[4, 4], &[0, 0]).unwrap();
        let motion = MotionState::thermal(0.2).unwrap();
        let a = evolve_ms_numeric(&spin, &motion, &p, 0.4 * p.tau).unwrap();
        let b = evolve_ms_numeric(&spin, &motion, &p, 0.4 * p.tau).unwrap();
        assert_eq!(a.elements(), b.elements());
    }

    #[test]
    fn thermal_cutoff_validation() {
        assert!(matches!(
            MotionState::thermal_with_cutoff(0.5, 10),
            Err(Error::FockCutoff { .. })
        ));
        let auto = MotionState::thermal(0.5).unwrap();
        assert!(auto.sector_weights().is_ok());
        // weights sum to 1 after renormalization
        let total: f64 = auto.sector_weights().unwrap().iter().map(|(_, w)| w).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn debye_waller_monotone_over_relevant_fock_range() {
        for eta in [0.05, 0.1, 0.2, 0.3] {
            let mut prev = f64::INFINITY;
            for n in 0..30 {
                let c = debye_waller(n, eta);
                assert!(c > 0.0 && c < prev);
                prev = c;
            }
        }
    }
}

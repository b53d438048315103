//! Native gate set of the ion-qudit processor.
//!
//! Single-qudit pulses couple level 0 to a level k (star connectivity):
//!
//! ```text
//! R_0k(φ, θ): |0⟩ → cos(θ/2)|0⟩ - i e^{iφ} sin(θ/2)|k⟩
//!             |k⟩ → -i e^{-iφ} sin(θ/2)|0⟩ + cos(θ/2)|k⟩
//! ```
//!
//! with all other levels untouched. The entangler is the Mølmer–Sørensen
//! gate `XX_01,01(χ) = exp(-iχ X̃_01 ⊗ X̃_01)` where `X̃_01 = |0⟩⟨1| + |1⟩⟨0|`
//! vanishes on levels 2 and 3, so those are spectators.
//!
//! Rotations between two excited levels i, k are not native; they are
//! composed as `R_ik(φ, θ) = R_0i(0, π) · R_0k(φ - π/2, θ) · R_0i(0, -π)`
//! (operator order, rightmost first), which reproduces the `R`-matrix form
//! on the (i, k) pair exactly, including the phase convention.

use crate::error::{Error, Result};
use crate::linalg;
use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// A two-level pulse on one ion. `levels = (i, k)` couples `|i⟩ ↔ |k⟩`;
/// native pulses have `i = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub ion: usize,
    pub levels: (usize, usize),
    pub phi: f64,
    pub theta: f64,
}

impl Rotation {
    pub fn new(ion: usize, levels: (usize, usize), phi: f64, theta: f64) -> Result<Self> {
        if levels.0 == levels.1 {
            return Err(Error::Argument("rotation levels must differ".into()));
        }
        Ok(Self { ion, levels, phi, theta })
    }

    /// Native `R_0k` pulse.
    pub fn native(ion: usize, k: usize, phi: f64, theta: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("native rotations couple level 0 to k ≥ 1".into()));
        }
        Self::new(ion, (0, k), phi, theta)
    }

    /// True when the pulse is in the native set (couples level 0).
    pub fn is_native(&self) -> bool {
        self.levels.0 == 0
    }

    /// The d×d matrix of this pulse: identity outside `span{|i⟩, |k⟩}`.
    pub fn matrix(&self, d: usize) -> Result<Array2<C64>> {
        let (i, k) = self.levels;
        if i >= d || k >= d {
            return Err(Error::Argument(format!(
                "rotation levels ({i}, {k}) out of range for dimension {d}"
            )));
        }
        let mut m = linalg::eye(d);
        let (half_sin, half_cos) = ((self.theta / 2.0).sin(), (self.theta / 2.0).cos());
        m[[i, i]] = C64::new(half_cos, 0.0);
        m[[k, k]] = C64::new(half_cos, 0.0);
        m[[i, k]] = -C64::i() * C64::from_polar(half_sin, -self.phi);
        m[[k, i]] = -C64::i() * C64::from_polar(half_sin, self.phi);
        Ok(m)
    }

    /// The inverse pulse `R(φ, -θ)`.
    pub fn inverse(&self) -> Self {
        Self { theta: -self.theta, ..*self }
    }
}

/// `d x d` matrix of the native rotation `R_0k(φ, θ)`.
pub fn rotation_matrix(k: usize, phi: f64, theta: f64, d: usize) -> Result<Array2<C64>> {
    if k == 0 || k >= d {
        return Err(Error::Argument(format!(
            "rotation level k = {k} must satisfy 1 ≤ k < d = {d}"
        )));
    }
    Rotation::native(0, k, phi, theta)?.matrix(d)
}

/// Pulse sequence implementing the composite rotation `R_ik(φ, θ)` between
/// two excited levels, in application order (first pulse first). The product
/// acts on `span{|i⟩, |k⟩}` exactly like the native `R`-matrix form acts on
/// `span{|0⟩, |k⟩}`, and is the identity everywhere else.
pub fn composite_rotation(
    i: usize,
    k: usize,
    phi: f64,
    theta: f64,
    d: usize,
) -> Result<Vec<Rotation>> {
    if i == k {
        return Err(Error::Argument("composite rotation levels must differ".into()));
    }
    if i == 0 || k == 0 || i >= d || k >= d {
        return Err(Error::Argument(format!(
            "composite rotation needs 1 ≤ i, k < d, got ({i}, {k}) with d = {d}"
        )));
    }
    Ok(vec![
        Rotation::native(0, i, 0.0, -std::f64::consts::PI)?,
        Rotation::native(0, k, phi - std::f64::consts::FRAC_PI_2, theta)?,
        Rotation::native(0, i, 0.0, std::f64::consts::PI)?,
    ])
}

/// Product matrix of a pulse sequence given in application order.
pub fn sequence_matrix(pulses: &[Rotation], d: usize) -> Result<Array2<C64>> {
    let mut u = linalg::eye(d);
    for p in pulses {
        u = p.matrix(d)?.dot(&u);
    }
    Ok(u)
}

/// The Mølmer–Sørensen entangling gate on the `(|0⟩, |1⟩)` pair of two ions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsGate {
    pub ions: (usize, usize),
    pub chi: f64,
}

impl MsGate {
    pub fn new(ions: (usize, usize), chi: f64) -> Result<Self> {
        if ions.0 == ions.1 {
            return Err(Error::Argument("MS gate needs two distinct ions".into()));
        }
        Ok(Self { ions, chi })
    }

    /// Matrix on `d_a·d_b` dimensions (ion order = index order).
    pub fn matrix(&self, d_a: usize, d_b: usize) -> Array2<C64> {
        ms_matrix_general(self.chi, d_a, d_b)
    }
}

/// `16 x 16` matrix of `XX_01,01(χ)` for two ququarts.
pub fn ms_matrix(chi: f64) -> Array2<C64> {
    ms_matrix_general(chi, 4, 4)
}

/// `exp(-iχ X̃_01 ⊗ X̃_01)` on arbitrary per-ion dimensions.
///
/// `(X̃⊗X̃)² = P ⊗ P` with `P` the projector onto `span{|0⟩, |1⟩}`, so the
/// exponential has the closed form `I + (cos χ - 1)·P⊗P - i sin χ·X̃⊗X̃`.
pub fn ms_matrix_general(chi: f64, d_a: usize, d_b: usize) -> Array2<C64> {
    let xt = |d: usize| -> Array2<C64> {
        let mut m = Array2::zeros((d, d));
        m[[0, 1]] = C64::new(1.0, 0.0);
        m[[1, 0]] = C64::new(1.0, 0.0);
        m
    };
    let proj = |d: usize| -> Array2<C64> {
        let mut m = Array2::zeros((d, d));
        m[[0, 0]] = C64::new(1.0, 0.0);
        m[[1, 1]] = C64::new(1.0, 0.0);
        m
    };
    let xx = linalg::kron(&xt(d_a), &xt(d_b));
    let pp = linalg::kron(&proj(d_a), &proj(d_b));
    let mut out = linalg::eye(d_a * d_b);
    out = out + pp.mapv(|x| x * (chi.cos() - 1.0)) + xx.mapv(|x| x * -C64::i() * chi.sin());
    out
}

/// Decomposition of a single-qudit unitary into native `R_0k` pulses plus a
/// recorded (never implemented) global phase.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Pulses in application order.
    pub pulses: Vec<Rotation>,
    /// `U = e^{i·global_phase} · (product of pulses)`.
    pub global_phase: f64,
}

impl Decomposition {
    /// Reconstruct the full unitary including the recorded phase.
    pub fn matrix(&self, d: usize) -> Result<Array2<C64>> {
        let u = sequence_matrix(&self.pulses, d)?;
        Ok(u.mapv(|x| x * C64::from_polar(1.0, self.global_phase)))
    }
}

const ELIM_EPS: f64 = 1e-13;

/// Decompose an arbitrary `d x d` unitary into native `R_0k` pulses.
///
/// Column-by-column two-level elimination through level 0 (the star graph is
/// the only connectivity available): columns are processed from the last to
/// the first, each reduced to a phase on its own basis state by Givens
/// rotations on `(0, k)` pairs. The residual diagonal gate is synthesized
/// from pairs of full (θ = π) rotations, and the remaining global phase is
/// recorded on the [`Decomposition`]. Pulse count is O(d²); optimality is
/// not attempted.
pub fn decompose_single_qudit(u: &Array2<C64>, d: usize) -> Result<Decomposition> {
    if u.dim() != (d, d) {
        return Err(Error::Dimension(format!("matrix is {:?}, expected {d}x{d}", u.dim())));
    }
    if !linalg::is_unitary(u, 1e-10) {
        return Err(Error::Validation("decomposition input is not unitary within 1e-10".into()));
    }

    let mut m = u.clone();
    // Rotations applied from the left while reducing U to a diagonal;
    // the decomposition uses their inverses in reverse order.
    let mut applied: Vec<Rotation> = Vec::new();

    let apply_left = |m: &mut Array2<C64>, rot: &Rotation| {
        let g = rot.matrix(d).expect("elimination rotation in range");
        *m = g.dot(m);
    };

    for col in (1..d).rev() {
        // move weight from rows k ∉ {0, col} into row 0
        for k in 1..d {
            if k == col {
                continue;
            }
            let b = m[[k, col]];
            if b.norm() <= ELIM_EPS {
                continue;
            }
            let a = m[[0, col]];
            let rot = if a.norm() <= ELIM_EPS {
                // pure swap of rows 0 and k
                Rotation::native(0, k, 0.0, std::f64::consts::PI)?
            } else {
                // R_0k(φ, θ) row k after: -i e^{iφ} sin(θ/2)·a + cos(θ/2)·b = 0
                let w = -C64::i() * b / a;
                Rotation::native(0, k, w.arg(), 2.0 * w.norm().atan())?
            };
            apply_left(&mut m, &rot);
            applied.push(rot);
        }
        // zero the (0, col) entry, pushing all weight onto (col, col)
        let b = m[[col, col]];
        let a = m[[0, col]];
        if a.norm() > ELIM_EPS {
            let rot = if b.norm() <= ELIM_EPS {
                Rotation::native(0, col, 0.0, std::f64::consts::PI)?
            } else {
                // R_0col(φ, θ) row 0 after: cos(θ/2)·a - i e^{-iφ} sin(θ/2)·b = 0
                let w = a / (C64::i() * b);
                Rotation::native(0, col, -w.arg(), 2.0 * w.norm().atan())?
            };
            apply_left(&mut m, &rot);
            applied.push(rot);
        }
    }

    // m is now diagonal: extract phases relative to level 0
    let lambda0 = m[[0, 0]].arg();
    let mut pulses: Vec<Rotation> = Vec::new();
    let mu: Vec<f64> = (1..d).map(|k| wrap_angle(m[[k, k]].arg() - lambda0)).collect();
    // Pairs of π pulses on (0, k) produce diag phases (π + Δ_k) on level 0
    // and (π - Δ_k) on level k. The level-0 budget β0 couples all pairs, so
    // once any level needs a phase, every level gets a pair.
    let mut beta0 = 0.0;
    if mu.iter().any(|m| m.abs() > 1e-12) {
        let nk = (d - 1) as f64;
        let sum_mu: f64 = mu.iter().sum();
        beta0 = (2.0 * std::f64::consts::PI * nk - sum_mu) / (nk + 1.0);
        for (k, &mu_k) in (1..d).zip(mu.iter()) {
            let delta = std::f64::consts::PI - beta0 - mu_k;
            // R_0k(0, π) then R_0k(-Δ, π) gives -diag(e^{iΔ}, e^{-iΔ}) on (0, k)
            pulses.push(Rotation::native(0, k, 0.0, std::f64::consts::PI)?);
            pulses.push(Rotation::native(0, k, -delta, std::f64::consts::PI)?);
        }
    }
    let global_phase = lambda0 - beta0;

    // U = (inverses of eliminations, reversed) · e^{iγ} · (diagonal pulses)
    for rot in applied.iter().rev() {
        pulses.push(rot.inverse());
    }

    Ok(Decomposition { pulses, global_phase })
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

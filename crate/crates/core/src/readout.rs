//! Sequential electron-shelving qudit readout with finite-shot sampling.
//!
//! One experimental run measures the population of a single target level k:
//!
//! - k = 0: a fluorescence detection distinguishes `|0⟩` (bright, the ion is
//!   pumped out of the qudit space into the ground-state manifold) from the
//!   metastable levels (dark). The shot is assigned to k when the detection
//!   reads bright.
//! - k ≥ 1: first the same fluorescence projection; a bright outcome ends
//!   the run as "not k". On dark, the transfer pulse `R_0k(0, π)` moves
//!   `|k⟩ → |0⟩` and a second detection follows; the shot is assigned to k
//!   when it reads dark then bright.
//!
//! SPAM enters as a per-level probability that a binary detection outcome is
//! flipped given the ion's current underlying level (a pumped ion counts as
//! level 0). Transfer pulses are ideal. The estimator is the assigned
//! fraction; with zero SPAM its expectation is exactly `P(|k⟩)`.

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::qudit::DensityMatrix;
use crate::rng::{self, domain};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Outcomes of one single-ion readout record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShotRecord {
    pub experiment_id: String,
    /// Target level k this record measured.
    pub level: usize,
    /// Per-shot assignment: `true` = assigned to `|k⟩`.
    pub outcomes: Vec<bool>,
    pub seed: u64,
    pub shots: usize,
}

impl ShotRecord {
    pub fn assigned_count(&self) -> usize {
        self.outcomes.iter().filter(|&&b| b).count()
    }

    /// Estimator: assigned fraction.
    pub fn fraction(&self) -> f64 {
        self.assigned_count() as f64 / self.shots as f64
    }

    /// Binomial standard error of the fraction.
    pub fn std_error(&self) -> f64 {
        let p = self.fraction();
        (p * (1.0 - p) / self.shots as f64).sqrt()
    }
}

/// Outcomes of one camera-mode (per-ion resolved) two-ion readout record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointShotRecord {
    pub experiment_id: String,
    pub level: usize,
    /// Per-shot assignment of (ion 0, ion 1) to `|k⟩`.
    pub outcomes: Vec<(bool, bool)>,
    pub seed: u64,
    pub shots: usize,
}

impl JointShotRecord {
    /// Fractions of shots with (neither, exactly one, both) ions assigned.
    pub fn fractions(&self) -> (f64, f64, f64) {
        let n = self.shots as f64;
        let mut counts = [0usize; 3];
        for &(a, b) in &self.outcomes {
            counts[a as usize + b as usize] += 1;
        }
        (counts[0] as f64 / n, counts[1] as f64 / n, counts[2] as f64 / n)
    }
}

/// Probability that an ion whose true level is `l` gets assigned to the
/// target level `k` by the shelving protocol.
pub fn level_assignment_probability(l: usize, k: usize, noise: &NoiseModel) -> f64 {
    let eps = &noise.spam;
    if k == 0 {
        // single detection, bright = assigned
        if l == 0 {
            1.0 - eps[0]
        } else {
            eps[l]
        }
    } else if l == 0 {
        // must misread dark, then the pumped ion reads bright
        eps[0] * (1.0 - eps[0])
    } else if l == k {
        // dark, transferred to |0⟩, bright
        (1.0 - eps[k]) * (1.0 - eps[0])
    } else {
        // dark, untouched by the transfer, must misread bright
        (1.0 - eps[l]) * eps[l]
    }
}

/// Expected assigned fraction for a population vector.
pub fn assignment_probability(populations: &[f64], k: usize, noise: &NoiseModel) -> f64 {
    populations
        .iter()
        .enumerate()
        .map(|(l, &p)| p * level_assignment_probability(l, k, noise))
        .sum()
}

fn validate_readout(d: usize, k: usize, shots: usize, noise: &NoiseModel) -> Result<()> {
    if k >= d {
        return Err(Error::Argument(format!("target level {k} out of range for d = {d}")));
    }
    if shots == 0 {
        return Err(Error::Argument("shot count must be ≥ 1".into()));
    }
    noise.validate(d)
}

fn sample_level<R: Rng>(populations: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (l, &p) in populations.iter().enumerate() {
        acc += p;
        if u < acc {
            return l;
        }
    }
    populations.len() - 1
}

/// One ion's protocol on an already-sampled true level.
fn assign_shot<R: Rng>(l: usize, k: usize, noise: &NoiseModel, rng: &mut R) -> bool {
    let flip = |truth: bool, level: usize, rng: &mut R| -> bool {
        let p = noise.spam[level];
        if p > 0.0 && rng.random::<f64>() < p {
            !truth
        } else {
            truth
        }
    };
    if k == 0 {
        return flip(l == 0, l, rng);
    }
    let obs1 = flip(l == 0, l, rng);
    if obs1 {
        return false;
    }
    // after detection 1 the true manifold: l == 0 was pumped (counts as
    // level 0); the transfer pulse then maps |k⟩ → |0⟩
    let (bright2, eff_level) = match l {
        0 => (true, 0),
        _ if l == k => (true, 0),
        _ => (false, l),
    };
    flip(bright2, eff_level, rng)
}

/// Simulate the shelving readout of a single ion for target level `k`.
///
/// The shot at index `j` draws from the stream `(seed, READOUT + k, j)`, so
/// shots are independent and any chunked/parallel evaluation reproduces the
/// sequential counts.
pub fn shelving_readout(
    rho: &DensityMatrix,
    k: usize,
    shots: usize,
    seed: u64,
    noise: &NoiseModel,
) -> Result<ShotRecord> {
    if rho.dims().len() != 1 {
        return Err(Error::Argument(
            "shelving_readout reads a single ion; trace out the rest first".into(),
        ));
    }
    let d = rho.dims()[0];
    validate_readout(d, k, shots, noise)?;
    let populations = rho.populations();
    let outcomes = (0..shots)
        .map(|j| {
            let mut rng = rng::derive(seed, domain::READOUT + k as u64, j as u64);
            let l = sample_level(&populations, &mut rng);
            assign_shot(l, k, noise, &mut rng)
        })
        .collect();
    Ok(ShotRecord {
        experiment_id: format!("shelving-k{k}"),
        level: k,
        outcomes,
        seed,
        shots,
    })
}

/// Camera-mode readout of a two-ion register: both ions run the level-k
/// protocol in the same shot, resolving joint outcomes.
pub fn joint_shelving_readout(
    rho: &DensityMatrix,
    k: usize,
    shots: usize,
    seed: u64,
    noise: &NoiseModel,
) -> Result<JointShotRecord> {
    if rho.dims().len() != 2 {
        return Err(Error::Argument("joint readout needs a two-ion register".into()));
    }
    let (da, db) = (rho.dims()[0], rho.dims()[1]);
    validate_readout(da.min(db), k, shots, noise)?;
    let joint = rho.populations();
    let outcomes = (0..shots)
        .map(|j| {
            let mut rng = rng::derive(seed, domain::READOUT + k as u64, j as u64);
            let flat = sample_level(&joint, &mut rng);
            let (la, lb) = (flat / db, flat % db);
            let a = assign_shot(la, k, noise, &mut rng);
            let b = assign_shot(lb, k, noise, &mut rng);
            (a, b)
        })
        .collect();
    Ok(JointShotRecord {
        experiment_id: format!("joint-shelving-k{k}"),
        level: k,
        outcomes,
        seed,
        shots,
    })
}

/// Exact joint outcome probabilities `(neither, exactly one, both)` for the
/// level-k protocol — the infinite-shot limit of [`joint_shelving_readout`].
pub fn joint_assignment_probabilities(
    rho: &DensityMatrix,
    k: usize,
    noise: &NoiseModel,
) -> Result<(f64, f64, f64)> {
    if rho.dims().len() != 2 {
        return Err(Error::Argument("joint readout needs a two-ion register".into()));
    }
    let db = rho.dims()[1];
    let joint = rho.populations();
    let mut out = [0.0; 3];
    for (flat, &p) in joint.iter().enumerate() {
        let (la, lb) = (flat / db, flat % db);
        let qa = level_assignment_probability(la, k, noise);
        let qb = level_assignment_probability(lb, k, noise);
        out[0] += p * (1.0 - qa) * (1.0 - qb);
        out[1] += p * (qa * (1.0 - qb) + (1.0 - qa) * qb);
        out[2] += p * qa * qb;
    }
    Ok((out[0], out[1], out[2]))
}

/// Aggregate counts of shot records as CSV (one row per record).
pub fn counts_csv(records: &[ShotRecord]) -> String {
    let mut out = String::from("experiment_id,level,assigned,shots,fraction,seed\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.experiment_id,
            r.level,
            r.assigned_count(),
            r.shots,
            r.fraction(),
            r.seed
        ));
    }
    out
}

/// Population estimates reconstructed from per-level shot records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationEstimate {
    pub populations: Vec<f64>,
    pub std_errors: Vec<f64>,
}

/// Combine records for levels `0..d-1` (the highest level is never measured
/// by convention) into a full population vector. The omitted level is the
/// complement, so the estimates sum to exactly 1; its standard error is the
/// quadrature sum of the others. Shot counts may differ between records.
pub fn estimate_populations(records: &[ShotRecord], d: usize) -> Result<PopulationEstimate> {
    if d < 2 {
        return Err(Error::Argument("register dimension must be ≥ 2".into()));
    }
    let mut by_level: Vec<Option<&ShotRecord>> = vec![None; d - 1];
    for r in records {
        if r.level >= d - 1 {
            return Err(Error::Argument(format!(
                "record for level {} out of range; levels 0..{} are measured",
                r.level,
                d - 1
            )));
        }
        if by_level[r.level].replace(r).is_some() {
            return Err(Error::Argument(format!("duplicate record for level {}", r.level)));
        }
    }
    let missing: Vec<usize> =
        (0..d - 1).filter(|&l| by_level[l].is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::Argument(format!("missing records for levels {missing:?}")));
    }
    let mut populations: Vec<f64> = Vec::with_capacity(d);
    let mut std_errors: Vec<f64> = Vec::with_capacity(d);
    for r in by_level.iter().map(|r| r.unwrap()) {
        populations.push(r.fraction());
        std_errors.push(r.std_error());
    }
    let measured_sum: f64 = populations.iter().sum();
    let mut complement = 1.0 - measured_sum;
    // nudge so the floating-point sum is exactly 1
    for _ in 0..2 {
        let resid = 1.0 - (measured_sum + complement);
        if resid == 0.0 {
            break;
        }
        complement += resid;
    }
    populations.push(complement);
    std_errors.push(std_errors.iter().map(|e| e * e).sum::<f64>().sqrt());
    Ok(PopulationEstimate { populations, std_errors })
}

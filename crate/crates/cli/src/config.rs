//! Experiment configuration schema.
//!
//! Units in config files: frequencies in ordinary Hz (cycles per second,
//! converted to angular frequency at this boundary), durations in seconds,
//! angles in radians, dephasing rates in rad²/s. Unknown fields are
//! rejected so typos fail loudly.

use ionsim::noise::NoiseModel;
use serde::{Deserialize, Serialize};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Detuning giving the reference operating point `τ_MS = 310 µs`
/// (`τ_MS = 1/δ` with δ in Hz).
fn default_delta_hz() -> f64 {
    1.0 / 310e-6
}

fn default_mode_freq_hz() -> f64 {
    809e3
}

fn default_nbar() -> f64 {
    0.079
}

fn default_eta() -> f64 {
    0.1
}

fn default_shots() -> usize {
    300
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn build(&self) -> anyhow::Result<Vec<f64>> {
        if self.points < 2 || self.stop <= self.start {
            anyhow::bail!("grid needs points ≥ 2 and stop > start");
        }
        Ok((0..self.points)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64)
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Phase-diffusion rate per qudit level, rad²/s.
    #[serde(default)]
    pub dephasing_rate_per_level: Option<Vec<f64>>,
    /// Common optical-coherence dephasing rate, rad²/s.
    #[serde(default)]
    pub laser_dephasing_rate: f64,
    /// Addressing cross-talk fraction ε ∈ [0, 0.2].
    #[serde(default)]
    pub crosstalk_fraction: Option<f64>,
    /// Per-level detection misassignment probabilities.
    #[serde(default)]
    pub spam: Option<Vec<f64>>,
    /// Magnetic sensitivity per level, Hz/µT.
    #[serde(default)]
    pub b_sensitivity_hz_per_ut: Option<Vec<f64>>,
    /// Report fidelities with the SPAM model applied (default true).
    #[serde(default = "default_true")]
    pub apply_spam: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            dephasing_rate_per_level: None,
            laser_dephasing_rate: 0.0,
            crosstalk_fraction: None,
            spam: None,
            b_sensitivity_hz_per_ut: None,
            apply_spam: true,
        }
    }
}

impl NoiseConfig {
    pub fn build(&self) -> anyhow::Result<NoiseModel> {
        let mut model = NoiseModel::default();
        if let Some(rates) = &self.dephasing_rate_per_level {
            model.dephasing_rate_per_level = rates.clone();
        }
        model.laser_dephasing_rate = self.laser_dephasing_rate;
        if let Some(eps) = self.crosstalk_fraction {
            model.crosstalk_fraction = eps;
        }
        if let Some(spam) = &self.spam {
            model.spam = spam.clone();
        }
        if let Some(b) = &self.b_sensitivity_hz_per_ut {
            model.b_sensitivity_hz_per_ut = b.clone();
        }
        if !self.apply_spam {
            model.spam = vec![0.0; model.spam.len()];
        }
        model.validate(4).map_err(|e| anyhow::anyhow!("noise model: {e}"))?;
        Ok(model)
    }
}

/// Physical MS-pulse block shared by the two-qudit experiments. Ω is not a
/// field: the pulse is calibrated from (η, δ) via the gate condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsPulseConfig {
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_delta_hz")]
    pub delta_hz: f64,
    #[serde(default = "default_mode_freq_hz")]
    pub mode_freq_hz: f64,
    #[serde(default = "default_nbar")]
    pub nbar: f64,
    #[serde(default)]
    pub fock_cutoff: Option<usize>,
    #[serde(default)]
    pub carrier_leakage: f64,
}

impl Default for MsPulseConfig {
    fn default() -> Self {
        Self {
            eta: default_eta(),
            delta_hz: default_delta_hz(),
            mode_freq_hz: default_mode_freq_hz(),
            nbar: default_nbar(),
            fock_cutoff: None,
            carrier_leakage: 0.0,
        }
    }
}

impl MsPulseConfig {
    pub fn build(&self) -> anyhow::Result<(ionsim::ms::PulseParams, ionsim::ms::MotionState)> {
        let mut params = ionsim::ms::solve_gate_params(self.eta, TWO_PI * self.delta_hz)
            .map_err(|e| anyhow::anyhow!("pulse parameters: {e}"))?;
        params.omega_m = TWO_PI * self.mode_freq_hz;
        params.carrier_leakage = self.carrier_leakage;
        params.validate().map_err(|e| anyhow::anyhow!("pulse parameters: {e}"))?;
        let motion = match self.fock_cutoff {
            Some(c) => ionsim::ms::MotionState::thermal_with_cutoff(self.nbar, c),
            None => ionsim::ms::MotionState::thermal(self.nbar),
        }
        .map_err(|e| anyhow::anyhow!("motional state: {e}"))?;
        Ok((params, motion))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiConfig {
    /// Carrier Rabi frequency in Hz; setup-specific, no default.
    pub omega_rabi_hz: f64,
    /// Driven level k ∈ {1, 2, 3}.
    pub level: usize,
    #[serde(default)]
    pub ion: usize,
    /// Ion to read out; reading the neighbour measures cross-talk.
    #[serde(default)]
    pub readout_ion: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
}

impl RabiConfig {
    pub fn grid(&self) -> anyhow::Result<Vec<f64>> {
        self.grid
            .clone()
            .unwrap_or(GridConfig { start: 0.0, stop: 200e-6, points: 50 })
            .build()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsScanConfig {
    #[serde(default)]
    pub pulse: MsPulseConfig,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
}

impl MsScanConfig {
    pub fn grid(&self) -> anyhow::Result<Vec<f64>> {
        let tau = 1.0 / self.pulse.delta_hz;
        self.grid
            .clone()
            .unwrap_or(GridConfig { start: 0.0, stop: 2.0 * tau, points: 51 })
            .build()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParityConfig {
    #[serde(default)]
    pub pulse: MsPulseConfig,
    /// Analyzing-phase grid; must cover at least π.
    #[serde(default)]
    pub phi_grid: Option<GridConfig>,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
}

impl ParityConfig {
    pub fn grid(&self) -> anyhow::Result<Vec<f64>> {
        self.phi_grid
            .clone()
            .unwrap_or(GridConfig { start: 0.0, stop: std::f64::consts::PI, points: 20 })
            .build()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranspileConfig {
    /// Path to the qubit-circuit JSON file (relative to the config file).
    pub input: String,
    #[serde(default)]
    pub omega_rabi_hz: Option<f64>,
    #[serde(default)]
    pub tau_ms_s: Option<f64>,
}

/// Top-level experiment configuration, dispatched on `"experiment"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Rabi(RabiConfig),
    MsScan(MsScanConfig),
    Parity(ParityConfig),
    Bell(ParityConfig),
    Transpile(TranspileConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Rabi(_) => "rabi",
            Self::MsScan(_) => "ms-scan",
            Self::Parity(_) => "parity",
            Self::Bell(_) => "bell",
            Self::Transpile(_) => "transpile",
        }
    }

    pub fn apply_overrides(&mut self, seed: Option<u64>, shots: Option<usize>) {
        match self {
            Self::Rabi(c) => {
                if let Some(s) = seed {
                    c.seed = s;
                }
                if let Some(s) = shots {
                    c.shots = s;
                }
            }
            Self::MsScan(c) => {
                if let Some(s) = seed {
                    c.seed = s;
                }
                if let Some(s) = shots {
                    c.shots = s;
                }
            }
            Self::Parity(c) | Self::Bell(c) => {
                if let Some(s) = seed {
                    c.seed = s;
                }
                if let Some(s) = shots {
                    c.shots = s;
                }
            }
            Self::Transpile(_) => {}
        }
    }

    /// Schema-level validation beyond serde: physical positivity.
    pub fn validate(&self) -> anyhow::Result<()> {
        let check_pulse = |p: &MsPulseConfig| -> anyhow::Result<()> {
            if p.delta_hz <= 0.0 || p.mode_freq_hz <= 0.0 {
                anyhow::bail!("field delta_hz/mode_freq_hz: must be positive");
            }
            if !(p.eta > 0.0 && p.eta <= 0.3) {
                anyhow::bail!("field eta: must lie in (0, 0.3]");
            }
            if p.nbar < 0.0 {
                anyhow::bail!("field nbar: must be ≥ 0");
            }
            Ok(())
        };
        match self {
            Self::Rabi(c) => {
                if c.omega_rabi_hz <= 0.0 {
                    anyhow::bail!("field omega_rabi_hz: must be positive");
                }
                if !(1..=3).contains(&c.level) {
                    anyhow::bail!("field level: must be 1, 2 or 3");
                }
                if c.ion > 1 || c.readout_ion.unwrap_or(c.ion) > 1 {
                    anyhow::bail!("field ion/readout_ion: must be 0 or 1");
                }
                c.grid()?;
                c.noise.build()?;
            }
            Self::MsScan(c) => {
                check_pulse(&c.pulse)?;
                c.grid()?;
                c.noise.build()?;
            }
            Self::Parity(c) | Self::Bell(c) => {
                check_pulse(&c.pulse)?;
                c.grid()?;
                c.noise.build()?;
            }
            Self::Transpile(c) => {
                if c.input.is_empty() {
                    anyhow::bail!("field input: must name a circuit file");
                }
            }
        }
        Ok(())
    }
}

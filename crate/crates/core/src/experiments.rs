//! The CNOT-versus-coupling experiment: start in `|11⟩`, apply the compiled
//! CNOT, and record the `|10⟩` amplitude and phase as the coupling grows
//! relative to the drive.

use thiserror::Error;

use crate::compiler::{ideal_gate, CompileError, Compiler, CompilerConfig, DriveMode, GateSpec};
use crate::evolution::{propagate, EvolutionError};
use crate::hamiltonian::{effective_level, BasisState, DeviceParams, Qubit, QubitParams};
use crate::linalg::{distance_up_to_global_phase, wrap_phase, Vec4};

pub const DEFAULT_BASELINE_RATIO: f64 = 1e-3;
pub const MAX_SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("coupling ratio {0} must be positive and finite")]
    InvalidRatio(f64),
    #[error("ratio {ratio}, mode {mode}: {source}")]
    Point {
        ratio: f64,
        mode: DriveMode,
        #[source]
        source: CompileError,
    },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

/// Both qubits idle at zero detuning with unit drive; coupling `ratio`.
pub fn device_for_ratio(ratio: f64) -> DeviceParams {
    DeviceParams {
        q1: QubitParams::new(0.0, 1.0),
        q2: QubitParams::new(0.0, 1.0),
        delta12: ratio,
        a_ref: 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnotResponse {
    pub ratio: f64,
    pub mode: DriveMode,
    /// `|⟨10|ψ_f⟩|`
    pub amplitude: f64,
    /// `arg ⟨10|ψ_f⟩` in `(−π, π]`
    pub phase: f64,
    pub gate_distance: f64,
    /// `1 − amplitude²`
    pub leakage: f64,
}

pub fn cnot_response(ratio: f64, mode: DriveMode) -> Result<CnotResponse, ExperimentError> {
    cnot_response_with(ratio, mode, &CompilerConfig::default())
}

pub fn cnot_response_with(
    ratio: f64,
    mode: DriveMode,
    config: &CompilerConfig,
) -> Result<CnotResponse, ExperimentError> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(ExperimentError::InvalidRatio(ratio));
    }
    let point_err = |source: CompileError| ExperimentError::Point {
        ratio,
        mode,
        source,
    };
    let compiler =
        Compiler::with_config(device_for_ratio(ratio), mode, config.clone()).map_err(point_err)?;
    let schedule = compiler.compile_cnot().map_err(point_err)?;
    let psi0 = Vec4::basis(BasisState::S11.index());
    let result = propagate(&schedule, &psi0)
        .map_err(|e: EvolutionError| point_err(CompileError::Evolution(e)))?;
    let c = result.final_state[BasisState::S10.index()];
    let amplitude = c.norm();
    Ok(CnotResponse {
        ratio,
        mode,
        amplitude,
        phase: c.arg(),
        gate_distance: distance_up_to_global_phase(
            &ideal_gate(&GateSpec::Cnot),
            &result.total_propagator,
        ),
        leakage: 1.0 - amplitude * amplitude,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub modes: Vec<DriveMode>,
    pub baseline_ratio: f64,
    pub compiler: CompilerConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ratio_min: 1e-3,
            ratio_max: 1.0,
            points: 50,
            spacing: Spacing::Log,
            modes: DriveMode::ALL.to_vec(),
            baseline_ratio: DEFAULT_BASELINE_RATIO,
            compiler: CompilerConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidSweep(m));
        for (name, v) in [
            ("min", self.ratio_min),
            ("max", self.ratio_max),
            ("baseline", self.baseline_ratio),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} ratio {v} must be positive and finite"));
            }
        }
        if self.ratio_min >= self.ratio_max {
            return bad(format!(
                "min {} must be below max {}",
                self.ratio_min, self.ratio_max
            ));
        }
        if !(2..=MAX_SWEEP_POINTS).contains(&self.points) {
            return bad(format!(
                "points {} outside 2..={MAX_SWEEP_POINTS}",
                self.points
            ));
        }
        if self.modes.is_empty() {
            return bad("no drive mode selected".into());
        }
        Ok(())
    }

    /// Grid ratios, ascending, with both endpoints exact.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.ratio_min;
                }
                if i == n - 1 {
                    return self.ratio_max;
                }
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Log => {
                        let (lo, hi) = (self.ratio_min.ln(), self.ratio_max.ln());
                        (lo + f * (hi - lo)).exp()
                    }
                    Spacing::Linear => self.ratio_min + f * (self.ratio_max - self.ratio_min),
                }
            })
            .collect()
    }

    fn sorted_modes(&self) -> Vec<DriveMode> {
        let mut m = self.modes.clone();
        m.sort();
        m.dedup();
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub ratio: f64,
    pub mode: DriveMode,
    pub amplitude: f64,
    pub phase: f64,
    /// Phase minus the mode's baseline phase, wrapped into `(−π, π]`.
    pub phase_deviation: f64,
    pub gate_distance: f64,
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Ordered by mode, then ascending ratio.
    pub rows: Vec<SweepRow>,
    /// The weak-coupling reference run of each mode.
    pub baselines: Vec<CnotResponse>,
}

impl SweepTable {
    pub fn rows_for(&self, mode: DriveMode) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.mode == mode)
    }

    pub fn baseline(&self, mode: DriveMode) -> Option<&CnotResponse> {
        self.baselines.iter().find(|b| b.mode == mode)
    }
}

/// Evaluates every grid point in every requested mode. Points are computed
/// one after another, so the output depends on nothing but `cfg`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable, ExperimentError> {
    cfg.validate()?;
    let grid = cfg.grid();
    let mut rows = Vec::with_capacity(grid.len() * cfg.modes.len());
    let mut baselines = Vec::new();
    for mode in cfg.sorted_modes() {
        let base = cnot_response_with(cfg.baseline_ratio, mode, &cfg.compiler)?;
        for &ratio in &grid {
            let p = cnot_response_with(ratio, mode, &cfg.compiler)?;
            rows.push(SweepRow {
                ratio,
                mode,
                amplitude: p.amplitude,
                phase: p.phase,
                phase_deviation: wrap_phase(p.phase - base.phase),
                gate_distance: p.gate_distance,
                leakage: p.leakage,
            });
        }
        baselines.push(base);
    }
    Ok(SweepTable { rows, baselines })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRow {
    pub qubit: Qubit,
    pub neighbor_excited: bool,
    pub energy: f64,
}

/// Effective level of each qubit for each neighbour state.
pub fn levels_table(device: &DeviceParams) -> [LevelRow; 4] {
    let row = |qubit, neighbor_excited| LevelRow {
        qubit,
        neighbor_excited,
        energy: effective_level(device, qubit, neighbor_excited),
    };
    [
        row(Qubit::Q1, true),
        row(Qubit::Q1, false),
        row(Qubit::Q2, true),
        row(Qubit::Q2, false),
    ]
}

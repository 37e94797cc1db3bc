//! State evolution through piecewise-constant control schedules.
//!
//! [`propagate`] multiplies exact segment exponentials. [`propagate_rk4`] is an
//! independent fixed-step integrator kept as a cross-check.

use std::fmt;

use thiserror::Error;

use crate::hamiltonian::{build_capacitive, build_dipole, DeviceParams, ParamError, QubitParams};
use crate::linalg::{expm_unitary, LinalgError, Mat4, Tolerances, Vec4, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Model {
    #[default]
    Capacitive,
    Dipole,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error("schedule has no segments")]
    EmptySchedule,
    #[error("initial state is not normalized (norm = {0:.12})")]
    NotNormalized(f64),
    #[error("initial state has non-finite entries")]
    NonFiniteState,
    #[error("segment {index} ({label}): {reason}")]
    InvalidSegment {
        index: usize,
        label: String,
        reason: String,
    },
    #[error("step dt = {dt:e} exceeds {max:e} (shortest segment / {divisor})")]
    StepTooLarge { dt: f64, max: f64, divisor: f64 },
    #[error("step dt = {0} must be positive and finite")]
    InvalidStep(f64),
    #[error(transparent)]
    Device(#[from] ParamError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One constant setting of the controllable parameters. The coupling is a
/// device constant and is not part of a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSegment {
    pub duration: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub a1: f64,
    pub a2: f64,
    pub label: String,
}

impl PulseSegment {
    pub fn new(duration: f64, delta1: f64, delta2: f64, a1: f64, a2: f64) -> Self {
        Self {
            duration,
            delta1,
            delta2,
            a1,
            a2,
            label: String::new(),
        }
    }

    pub fn idle(duration: f64) -> Self {
        Self::new(duration, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(format!(
                "duration {} must be finite and positive",
                self.duration
            ));
        }
        for (name, v) in [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("a1", self.a1),
            ("a2", self.a2),
        ] {
            if !v.is_finite() {
                return Err(format!("{name} = {v} is not finite"));
            }
        }
        if self.a1 < 0.0 || self.a2 < 0.0 {
            return Err(format!(
                "negative drive (a1 = {}, a2 = {})",
                self.a1, self.a2
            ));
        }
        Ok(())
    }

    /// Device parameters with this segment's controls and the device's
    /// fixed coupling.
    pub fn instantaneous_device(&self, device: &DeviceParams) -> DeviceParams {
        DeviceParams {
            q1: QubitParams::new(self.delta1, self.a1),
            q2: QubitParams::new(self.delta2, self.a2),
            delta12: device.delta12,
            a_ref: device.a_ref,
        }
    }
}

impl fmt::Display for PulseSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={:.6} d1={:+.6} d2={:+.6} a1={:.6} a2={:.6}",
            self.duration, self.delta1, self.delta2, self.a1, self.a2
        )?;
        if !self.label.is_empty() {
            write!(f, " [{}]", self.label)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<PulseSegment>,
    device: DeviceParams,
    model: Model,
}

impl Schedule {
    pub fn new(
        segments: Vec<PulseSegment>,
        device: DeviceParams,
        model: Model,
    ) -> Result<Self, EvolutionError> {
        if segments.is_empty() {
            return Err(EvolutionError::EmptySchedule);
        }
        device.validate()?;
        for (index, s) in segments.iter().enumerate() {
            s.validate()
                .map_err(|reason| EvolutionError::InvalidSegment {
                    index,
                    label: s.label.clone(),
                    reason,
                })?;
        }
        Ok(Self {
            segments,
            device,
            model,
        })
    }

    pub fn segments(&self) -> &[PulseSegment] {
        &self.segments
    }

    pub fn device(&self) -> &DeviceParams {
        &self.device
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Concatenation; `self` acts first.
    pub fn then(&self, other: &Schedule) -> Result<Schedule, EvolutionError> {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Schedule::new(segments, self.device, self.model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub final_state: Vec4,
    pub total_propagator: Mat4,
    /// `|‖ψ_f‖ − 1|`
    pub norm_drift: f64,
}

pub fn segment_hamiltonian(seg: &PulseSegment, device: &DeviceParams, model: Model) -> Mat4 {
    let d = seg.instantaneous_device(device);
    match model {
        Model::Capacitive => build_capacitive(&d),
        Model::Dipole => build_dipole(&d),
    }
}

/// Product of the segment propagators, first segment rightmost.
pub fn total_propagator(schedule: &Schedule) -> Result<Mat4, EvolutionError> {
    let mut u = Mat4::identity();
    for seg in &schedule.segments {
        let h = segment_hamiltonian(seg, &schedule.device, schedule.model);
        u = expm_unitary(&h, seg.duration)? * u;
    }
    Ok(u)
}

fn check_initial_state(psi0: &Vec4, tol: f64) -> Result<(), EvolutionError> {
    if !psi0.is_finite() {
        return Err(EvolutionError::NonFiniteState);
    }
    let n = psi0.norm();
    if (n - 1.0).abs() > tol {
        return Err(EvolutionError::NotNormalized(n));
    }
    Ok(())
}

pub fn propagate(schedule: &Schedule, psi0: &Vec4) -> Result<EvolutionResult, EvolutionError> {
    check_initial_state(psi0, Tolerances::default().normalized)?;
    let total_propagator = total_propagator(schedule)?;
    let final_state = total_propagator.mul_vec(psi0);
    let norm_drift = (final_state.norm() - 1.0).abs();
    Ok(EvolutionResult {
        final_state,
        total_propagator,
        norm_drift,
    })
}

/// Step-size policy for [`propagate_rk4_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4Options {
    /// `dt` may not exceed the shortest segment divided by this.
    pub min_steps_per_segment: f64,
}

impl Default for Rk4Options {
    fn default() -> Self {
        Self {
            min_steps_per_segment: 10.0,
        }
    }
}

pub fn propagate_rk4(schedule: &Schedule, psi0: &Vec4, dt: f64) -> Result<Vec4, EvolutionError> {
    propagate_rk4_with(schedule, psi0, dt, &Rk4Options::default())
}

/// Classical fourth-order Runge–Kutta on `dψ/dt = −iHψ`, segment by segment.
/// The final step in each segment is shortened to land on the boundary. The
/// state is never renormalized.
pub fn propagate_rk4_with(
    schedule: &Schedule,
    psi0: &Vec4,
    dt: f64,
    opts: &Rk4Options,
) -> Result<Vec4, EvolutionError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EvolutionError::InvalidStep(dt));
    }
    if !psi0.is_finite() {
        return Err(EvolutionError::NonFiniteState);
    }
    let shortest = schedule
        .segments
        .iter()
        .map(|s| s.duration)
        .fold(f64::INFINITY, f64::min);
    let max = shortest / opts.min_steps_per_segment;
    if dt > max {
        return Err(EvolutionError::StepTooLarge {
            dt,
            max,
            divisor: opts.min_steps_per_segment,
        });
    }

    let mut psi = *psi0;
    for seg in &schedule.segments {
        let h = segment_hamiltonian(seg, &schedule.device, schedule.model);
        let minus_i_h = h.scale(C64::new(0.0, -1.0));
        let full_steps = (seg.duration / dt).floor() as u64;
        let mut elapsed = 0.0;
        for n in 0..full_steps {
            psi = rk4_step(&minus_i_h, &psi, dt);
            elapsed = (n + 1) as f64 * dt;
        }
        let rest = seg.duration - elapsed;
        if rest > 0.0 {
            psi = rk4_step(&minus_i_h, &psi, rest);
        }
    }
    Ok(psi)
}

fn rk4_step(generator: &Mat4, psi: &Vec4, h: f64) -> Vec4 {
    let half = C64::new(h / 2.0, 0.0);
    let full = C64::new(h, 0.0);
    let k1 = generator.mul_vec(psi);
    let k2 = generator.mul_vec(&(*psi + k1.scale(half)));
    let k3 = generator.mul_vec(&(*psi + k2.scale(half)));
    let k4 = generator.mul_vec(&(*psi + k3.scale(full)));
    let sixth = C64::new(h / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    *psi + (k1 + k2.scale(two) + k3.scale(two) + k4).scale(sixth)
}

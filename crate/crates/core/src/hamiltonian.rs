//! Single-qubit, capacitively coupled and dipole-coupled Hamiltonians.
//!
//! Basis order is `|11⟩, |10⟩, |01⟩, |00⟩` with `σ_z|1⟩ = +|1⟩`; see
//! [`BasisState`]. Energies are in units of the reference drive strength and
//! `ħ = 1`.
//!
//! The two capacitive builders assemble every entry as a correctly rounded sum
//! of its atomic contributions, so the tensor-sum form and the Pauli form
//! produce bit-identical matrices.

use std::fmt;

use thiserror::Error;

use crate::linalg::{kron, Mat2, Mat4, TermAccumulator, C64, I, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qubit {
    /// Control in the CNOT; the more significant tensor factor.
    Q1,
    /// Target in the CNOT.
    Q2,
}

impl Qubit {
    pub fn other(self) -> Self {
        match self {
            Qubit::Q1 => Qubit::Q2,
            Qubit::Q2 => Qubit::Q1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Qubit::Q1 => 0,
            Qubit::Q2 => 1,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Qubit::Q1),
            2 => Some(Qubit::Q2),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.number())
    }
}

/// Computational basis states in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisState {
    S11 = 0,
    S10 = 1,
    S01 = 2,
    S00 = 3,
}

impl BasisState {
    pub const ORDER: [BasisState; 4] = [Self::S11, Self::S10, Self::S01, Self::S00];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Occupation of each qubit, `(q1, q2)`.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Self::S11 => (true, true),
            Self::S10 => (true, false),
            Self::S01 => (false, true),
            Self::S00 => (false, false),
        }
    }

    /// Eigenvalue of `σ_z` on the given qubit.
    pub fn z(self, q: Qubit) -> f64 {
        let (b1, b2) = self.bits();
        let b = if q == Qubit::Q1 { b1 } else { b2 };
        if b {
            1.0
        } else {
            -1.0
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::S11 => "|11>",
            Self::S10 => "|10>",
            Self::S01 => "|01>",
            Self::S00 => "|00>",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("drive strength {name} = {value} is negative")]
    NegativeDrive { name: &'static str, value: f64 },
    #[error("reference drive a_ref = {0} must be positive")]
    NonPositiveReference(f64),
}

/// Detuning and drive of one qubit. In the dipole model the same fields hold
/// `ω_i` and `Ω_i`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QubitParams {
    pub delta: f64,
    pub a: f64,
}

impl QubitParams {
    pub fn new(delta: f64, a: f64) -> Self {
        Self { delta, a }
    }

    pub fn validate(&self, name: &'static str) -> Result<(), ParamError> {
        if !self.delta.is_finite() {
            return Err(ParamError::NonFinite("detuning"));
        }
        if !self.a.is_finite() {
            return Err(ParamError::NonFinite("drive strength"));
        }
        if self.a < 0.0 {
            return Err(ParamError::NegativeDrive {
                name,
                value: self.a,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    pub q1: QubitParams,
    pub q2: QubitParams,
    /// Capacitive coupling energy of `|11⟩` (or `ω₁₂` in the dipole model).
    pub delta12: f64,
    pub a_ref: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            q1: QubitParams::default(),
            q2: QubitParams::default(),
            delta12: 0.0,
            a_ref: 1.0,
        }
    }
}

impl DeviceParams {
    pub fn new(q1: QubitParams, q2: QubitParams, delta12: f64) -> Result<Self, ParamError> {
        let d = Self {
            q1,
            q2,
            delta12,
            a_ref: 1.0,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        self.q1.validate("a1")?;
        self.q2.validate("a2")?;
        if !self.delta12.is_finite() {
            return Err(ParamError::NonFinite("delta12"));
        }
        if !(self.a_ref.is_finite() && self.a_ref > 0.0) {
            return Err(ParamError::NonPositiveReference(self.a_ref));
        }
        Ok(())
    }

    pub fn qubit(&self, q: Qubit) -> &QubitParams {
        match q {
            Qubit::Q1 => &self.q1,
            Qubit::Q2 => &self.q2,
        }
    }

    pub fn qubit_mut(&mut self, q: Qubit) -> &mut QubitParams {
        match q {
            Qubit::Q1 => &mut self.q1,
            Qubit::Q2 => &mut self.q2,
        }
    }
}

pub fn pauli_x() -> Mat2 {
    Mat2::new([[ZERO, ONE], [ONE, ZERO]])
}

pub fn pauli_y() -> Mat2 {
    Mat2::new([[ZERO, -I], [I, ZERO]])
}

pub fn pauli_z() -> Mat2 {
    Mat2::new([[ONE, ZERO], [ZERO, -ONE]])
}

/// Embeds a single-qubit operator on `q` into the two-qubit space.
pub fn on_qubit(op: &Mat2, q: Qubit) -> Mat4 {
    match q {
        Qubit::Q1 => kron(op, &Mat2::identity()),
        Qubit::Q2 => kron(&Mat2::identity(), op),
    }
}

pub fn zz() -> Mat4 {
    kron(&pauli_z(), &pauli_z())
}

/// `[[Δ, a], [a, −Δ]]`
pub fn build_single_qubit(p: &QubitParams) -> Mat2 {
    let d = C64::new(p.delta, 0.0);
    let a = C64::new(p.a, 0.0);
    Mat2::new([[d, a], [a, -d]])
}

fn push_embedded(acc: &mut TermAccumulator<4>, h: &Mat2, q: Qubit) {
    // embedding copies entries without arithmetic, so each stays atomic
    let m = on_qubit(h, q);
    for i in 0..4 {
        for j in 0..4 {
            acc.push(i, j, m.0[i][j]);
        }
    }
}

/// `H₁⊗I + I⊗H₂ + diag(Δ₁₂, 0, 0, 0)`.
pub fn build_capacitive(d: &DeviceParams) -> Mat4 {
    let mut acc = TermAccumulator::<4>::new();
    push_embedded(&mut acc, &build_single_qubit(&d.q1), Qubit::Q1);
    push_embedded(&mut acc, &build_single_qubit(&d.q2), Qubit::Q2);
    acc.push(0, 0, C64::new(d.delta12, 0.0));
    acc.finish()
}

/// `(Δ₁₂/4)I + a₁σ_x¹ + a₂σ_x² + (Δ₁ + Δ₁₂/4)σ_z¹ + (Δ₂ + Δ₁₂/4)σ_z² + (Δ₁₂/4)σ_z¹σ_z²`.
pub fn build_capacitive_pauli_form(d: &DeviceParams) -> Mat4 {
    let quarter = d.delta12 / 4.0;
    let x = pauli_x();
    let z = pauli_z();
    let mut acc = TermAccumulator::<4>::new();
    acc.push_scaled(&[quarter], &Mat4::identity());
    acc.push_scaled(&[d.q1.a], &on_qubit(&x, Qubit::Q1));
    acc.push_scaled(&[d.q2.a], &on_qubit(&x, Qubit::Q2));
    acc.push_scaled(&[d.q1.delta, quarter], &on_qubit(&z, Qubit::Q1));
    acc.push_scaled(&[d.q2.delta, quarter], &on_qubit(&z, Qubit::Q2));
    acc.push_scaled(&[quarter], &zz());
    acc.finish()
}

/// Tensor sum of the single-qubit terms plus `diag(ω₁₂, −ω₁₂, −ω₁₂, ω₁₂)`.
pub fn build_dipole(d: &DeviceParams) -> Mat4 {
    let mut acc = TermAccumulator::<4>::new();
    push_embedded(&mut acc, &build_single_qubit(&d.q1), Qubit::Q1);
    push_embedded(&mut acc, &build_single_qubit(&d.q2), Qubit::Q2);
    let w = d.delta12;
    for (k, s) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
        acc.push(k, k, C64::new(s * w, 0.0));
    }
    acc.finish()
}

/// Transition energy scale of qubit `q` given its neighbour's state:
/// `Δ_q + Δ₁₂/4 ± Δ₁₂/4`, upper sign when the neighbour is excited.
pub fn effective_level(d: &DeviceParams, q: Qubit, neighbor_excited: bool) -> f64 {
    let quarter = d.delta12 / 4.0;
    let s = if neighbor_excited { quarter } else { -quarter };
    d.qubit(q).delta + quarter + s
}

//! Gate-to-pulse compiler for the capacitively coupled pair.
//!
//! The only physical knobs are the two detunings and the two σ_x drive
//! strengths; the coupling `Δ₁₂` is always on. Rotations about x are resonant
//! pulses. Every z rotation, and every ZZ rotation, is *virtual*: it is added to
//! a [`PhaseLedger`] and realized later by a phase block, a segment whose
//! detunings are chosen so that the z and ZZ phases accrued over its duration
//! equal what is owed.
//!
//! Ledger invariant, checked by the tests: with `P` the product of the ideal
//! unitaries of the emitted segments and `L` the product of the requested
//! gates,
//!
//! ```text
//! D(pending_z1, pending_z2, pending_zz) · P = e^{i·global_phase} · L
//! ```
//!
//! where `D(z1, z2, zz) = exp(−i/2 (z1 σ_z¹ + z2 σ_z² + zz σ_z¹σ_z²))`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::evolution::{total_propagator, EvolutionError, Model, PulseSegment, Schedule};
use crate::hamiltonian::{on_qubit, DeviceParams, ParamError, Qubit};
use crate::linalg::{
    distance_up_to_global_phase, relative_phase, wrap_phase, Mat2, Mat4, C64, ONE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum DriveMode {
    /// Drives are switched on only while a qubit is being rotated.
    #[default]
    Gated,
    /// Both drives stay on for the whole schedule; idle qubits are detuned far
    /// off resonance instead.
    AlwaysOn,
}

impl DriveMode {
    pub const ALL: [DriveMode; 2] = [DriveMode::Gated, DriveMode::AlwaysOn];

    pub fn as_str(self) -> &'static str {
        match self {
            DriveMode::Gated => "gated",
            DriveMode::AlwaysOn => "always-on",
        }
    }
}

impl fmt::Display for DriveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DriveMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "gated" => Ok(DriveMode::Gated),
            "always-on" | "always_on" => Ok(DriveMode::AlwaysOn),
            other => Err(format!(
                "unknown drive mode '{other}' (expected gated or always-on)"
            )),
        }
    }
}

/// A requested gate. Angles are radians with `R_n(θ) = exp(−iθσ_n/2)` and
/// `U_zz(θ) = exp(−iθσ_z¹σ_z²/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateSpec {
    Rx(Qubit, f64),
    Ry(Qubit, f64),
    Rz(Qubit, f64),
    Zz(f64),
    /// Control q1, target q2.
    Cnot,
}

impl GateSpec {
    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateSpec::Rx(_, a) | GateSpec::Ry(_, a) | GateSpec::Rz(_, a) | GateSpec::Zz(a) => {
                Some(a)
            }
            GateSpec::Cnot => None,
        }
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GateSpec::Rx(q, a) => write!(f, "rx({}, {a})", q.number()),
            GateSpec::Ry(q, a) => write!(f, "ry({}, {a})", q.number()),
            GateSpec::Rz(q, a) => write!(f, "rz({}, {a})", q.number()),
            GateSpec::Zz(a) => write!(f, "zz({a})"),
            GateSpec::Cnot => f.write_str("cnot"),
        }
    }
}

impl FromStr for GateSpec {
    type Err = String;

    /// `rx(q, angle)`, `ry(q, angle)`, `rz(q, angle)`, `zz(angle)` or `cnot`.
    /// Angles may use `pi` with `+ - * /` and parentheses.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        if lower == "cnot" || lower == "cnot()" {
            return Ok(GateSpec::Cnot);
        }
        let open = s.find('(').ok_or_else(|| format!("malformed gate '{s}'"))?;
        if !s.ends_with(')') {
            return Err(format!("malformed gate '{s}' (missing ')')"));
        }
        let name = lower[..open].trim();
        let inner = &s[open + 1..s.len() - 1];
        let args = split_top_level(inner);
        let qubit = |tok: &str| -> Result<Qubit, String> {
            tok.trim()
                .parse::<u8>()
                .ok()
                .and_then(Qubit::from_number)
                .ok_or_else(|| format!("invalid qubit '{}' in '{s}' (expected 1 or 2)", tok.trim()))
        };
        let angle = |tok: &str| -> Result<f64, String> {
            let v = parse_angle(tok).map_err(|e| format!("{e} in '{s}'"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite angle in '{s}'"))
            }
        };
        match (name, args.as_slice()) {
            ("rx", [q, a]) => Ok(GateSpec::Rx(qubit(q)?, angle(a)?)),
            ("ry", [q, a]) => Ok(GateSpec::Ry(qubit(q)?, angle(a)?)),
            ("rz", [q, a]) => Ok(GateSpec::Rz(qubit(q)?, angle(a)?)),
            ("zz", [a]) => Ok(GateSpec::Zz(angle(a)?)),
            ("rx" | "ry" | "rz" | "zz", _) => Err(format!("wrong number of arguments in '{s}'")),
            _ => Err(format!("unknown gate '{name}'")),
        }
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Evaluates an angle expression such as `-pi/2`, `3*pi/4` or `0.25`.
pub fn parse_angle(expr: &str) -> Result<f64, String> {
    let mut p = AngleParser {
        src: expr.as_bytes(),
        pos: 0,
    };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(format!(
            "unexpected '{}' in angle '{}'",
            &expr[p.pos..],
            expr.trim()
        ));
    }
    Ok(v)
}

struct AngleParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl AngleParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<f64, String> {
        let mut v = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            v = if op == b'+' { v + rhs } else { v - rhs };
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<f64, String> {
        let mut v = self.factor()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            v = if op == b'*' { v * rhs } else { v / rhs };
        }
        Ok(v)
    }

    fn factor(&mut self) -> Result<f64, String> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()
            }
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err("unbalanced parentheses".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                if word.eq_ignore_ascii_case("pi") {
                    Ok(PI)
                } else {
                    Err(format!("unknown name '{word}'"))
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    let exp_sign = (c == b'-' || c == b'+')
                        && self.pos > start
                        && matches!(self.src[self.pos - 1], b'e' | b'E');
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let tok = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                tok.parse::<f64>()
                    .map_err(|_| format!("malformed number '{tok}'"))
            }
            Some(c) => Err(format!("unexpected '{}'", c as char)),
            None => Err("empty angle".into()),
        }
    }
}

/// Z and ZZ rotations owed to the device, plus the tracked scalar phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseLedger {
    pub pending_z1: f64,
    pub pending_z2: f64,
    pub pending_zz: f64,
    pub global_phase: f64,
}

impl PhaseLedger {
    pub fn pending(&self, q: Qubit) -> f64 {
        match q {
            Qubit::Q1 => self.pending_z1,
            Qubit::Q2 => self.pending_z2,
        }
    }

    fn pending_mut(&mut self, q: Qubit) -> &mut f64 {
        match q {
            Qubit::Q1 => &mut self.pending_z1,
            Qubit::Q2 => &mut self.pending_z2,
        }
    }

    pub fn add(&mut self, z1: f64, z2: f64, zz: f64) {
        self.pending_z1 += z1;
        self.pending_z2 += z2;
        self.pending_zz += zz;
        self.reduce();
    }

    /// Brings every pending angle into `(−π, π]`. A full turn of any of the
    /// three generators is `−1`, which moves into the scalar phase.
    pub fn reduce(&mut self) {
        let mut turns = 0.0;
        for v in [
            &mut self.pending_z1,
            &mut self.pending_z2,
            &mut self.pending_zz,
        ] {
            let m = ((*v - PI) / TAU).ceil();
            if m != 0.0 {
                *v -= TAU * m;
                turns += m;
            }
        }
        self.global_phase = wrap_phase(self.global_phase - PI * turns);
    }

    pub fn is_clear(&self, tol: f64) -> bool {
        [self.pending_z1, self.pending_z2, self.pending_zz]
            .iter()
            .all(|v| wrap_phase(*v).abs() <= tol)
    }

    /// `D(pending)`: the rotation that would settle the ledger.
    pub fn pending_unitary(&self) -> Mat4 {
        diag_rotation(self.pending_z1, self.pending_z2, self.pending_zz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompilerConfig {
    /// Always-on parking requires `|Δ| ≥ parking_floor · a` on idle qubits.
    pub parking_floor: f64,
    /// Largest cycle index tried while searching for a parking detuning.
    pub k_max: u64,
    /// Angles within this of a multiple of 2π count as zero.
    pub zero_tol: f64,
    /// Phase-block duration, in units of `1/a_ref`, when there is no coupling.
    pub uncoupled_block_duration: f64,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        Self {
            parking_floor: 20.0,
            k_max: 1_000_000,
            zero_tol: 1e-12,
            uncoupled_block_duration: FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("qubit {0} has no drive (a = 0); x rotations are unavailable")]
    NoDrive(Qubit),
    #[error("coupling absent; ZZ angle {0} unreachable")]
    CouplingAbsent(f64),
    #[error(
        "no parking detuning for {qubit} with |delta| >= {floor} (target z angle {target:.6}, block duration {duration:.6}, k <= {k_max})"
    )]
    ParkingFailed {
        qubit: Qubit,
        target: f64,
        duration: f64,
        floor: f64,
        k_max: u64,
    },
    #[error("rotation angle {0} outside (-2pi, 2pi]")]
    AngleOutOfRange(f64),
    #[error("angle {0} is not finite")]
    NonFiniteAngle(f64),
    #[error("invalid device: {0}")]
    Device(#[from] ParamError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

/// Output of compiling one gate or a gate sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledGate {
    pub segments: Vec<PulseSegment>,
    /// Ideal unitary of each segment, in the same order.
    pub segment_ideals: Vec<Mat4>,
    /// The requested operation.
    pub intended_unitary: Mat4,
    pub ledger_after: PhaseLedger,
}

impl CompiledGate {
    fn empty(ledger: PhaseLedger) -> Self {
        Self {
            segments: Vec::new(),
            segment_ideals: Vec::new(),
            intended_unitary: Mat4::identity(),
            ledger_after: ledger,
        }
    }

    fn append(&mut self, other: CompiledGate) {
        self.segments.extend(other.segments);
        self.segment_ideals.extend(other.segment_ideals);
        self.intended_unitary = other.intended_unitary * self.intended_unitary;
        self.ledger_after = other.ledger_after;
    }

    /// Product of the segment ideals, first segment rightmost.
    pub fn ideal_product(&self) -> Mat4 {
        self.segment_ideals
            .iter()
            .fold(Mat4::identity(), |acc, u| *u * acc)
    }

    /// `D(pending) · ideal_product`; equals `e^{iφ}·intended_unitary` when the
    /// compilation is sound.
    pub fn settled_ideal(&self) -> Mat4 {
        self.ledger_after.pending_unitary() * self.ideal_product()
    }
}

/// Abstract operations a gate is lowered to before pulse emission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    /// Resonant σ_x pulse rotating `qubit` by `angle`.
    XPulse(Qubit, f64),
    /// Virtual `D(z1, z2, zz)`, added to the ledger.
    Diag { z1: f64, z2: f64, zz: f64 },
}

fn diag_on(q: Qubit, angle: f64) -> Primitive {
    match q {
        Qubit::Q1 => Primitive::Diag {
            z1: angle,
            z2: 0.0,
            zz: 0.0,
        },
        Qubit::Q2 => Primitive::Diag {
            z1: 0.0,
            z2: angle,
            zz: 0.0,
        },
    }
}

/// Time-ordered primitives realizing `g`, exactly up to a global phase.
///
/// The CNOT is `R_y^T(π/2) · U · R_y^T(−π/2)` with
/// `U = D(−π/2, π/2, π/2)`. The first `R_y` starts with a z rotation of the
/// target that cannot be made virtual before any pulse has run, so it is moved
/// through the CNOT, where it becomes an extra `U_zz(π/2)` at the end.
pub fn lower(g: &GateSpec) -> Vec<Primitive> {
    match *g {
        GateSpec::Rx(q, a) => vec![Primitive::XPulse(q, a)],
        GateSpec::Ry(q, a) => vec![
            diag_on(q, -FRAC_PI_2),
            Primitive::XPulse(q, a),
            diag_on(q, FRAC_PI_2),
        ],
        GateSpec::Rz(q, a) => vec![diag_on(q, a)],
        GateSpec::Zz(a) => vec![Primitive::Diag {
            z1: 0.0,
            z2: 0.0,
            zz: a,
        }],
        GateSpec::Cnot => vec![
            Primitive::XPulse(Qubit::Q2, -FRAC_PI_2),
            Primitive::Diag {
                z1: -FRAC_PI_2,
                z2: FRAC_PI_2,
                zz: FRAC_PI_2,
            },
            Primitive::XPulse(Qubit::Q2, FRAC_PI_2),
            Primitive::Diag {
                z1: 0.0,
                z2: FRAC_PI_2,
                zz: FRAC_PI_2,
            },
        ],
    }
}

/// Ideal product of primitives in time order, with a caller-supplied
/// realization of `D`.
pub fn compose_primitives(prims: &[Primitive], diag: &dyn Fn(f64, f64, f64) -> Mat4) -> Mat4 {
    prims.iter().fold(Mat4::identity(), |acc, p| {
        let u = match *p {
            Primitive::XPulse(q, a) => on_qubit(&rotation_x(a), q),
            Primitive::Diag { z1, z2, zz } => diag(z1, z2, zz),
        };
        u * acc
    })
}

pub fn rotation_x(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    Mat2::new([
        [C64::new(c, 0.0), C64::new(0.0, -s)],
        [C64::new(0.0, -s), C64::new(c, 0.0)],
    ])
}

pub fn rotation_y(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    Mat2::from_real([[c, -s], [s, c]])
}

pub fn rotation_z(theta: f64) -> Mat2 {
    Mat2::from_diag([
        C64::from_polar(1.0, -theta / 2.0),
        C64::from_polar(1.0, theta / 2.0),
    ])
}

/// `exp(−i/2 (z1 σ_z¹ + z2 σ_z² + zz σ_z¹σ_z²))`, diagonal in the computational
/// basis.
pub fn diag_rotation(z1: f64, z2: f64, zz: f64) -> Mat4 {
    let phases = [
        -(z1 + z2 + zz) / 2.0,
        -(z1 - z2 - zz) / 2.0,
        -(-z1 + z2 - zz) / 2.0,
        -(-z1 - z2 + zz) / 2.0,
    ];
    Mat4::from_diag(phases.map(|p| C64::from_polar(1.0, p)))
}

pub fn ideal_gate(g: &GateSpec) -> Mat4 {
    match *g {
        GateSpec::Rx(q, a) => on_qubit(&rotation_x(a), q),
        GateSpec::Ry(q, a) => on_qubit(&rotation_y(a), q),
        GateSpec::Rz(q, a) => on_qubit(&rotation_z(a), q),
        GateSpec::Zz(a) => diag_rotation(0.0, 0.0, a),
        GateSpec::Cnot => {
            let mut m = Mat4::zeros();
            m.0[0][1] = ONE;
            m.0[1][0] = ONE;
            m.0[2][2] = ONE;
            m.0[3][3] = ONE;
            m
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyReport {
    pub distance: f64,
    pub pass: bool,
    /// `arg tr(target† · U)`
    pub phase_offset: f64,
}

pub fn verify_schedule(
    schedule: &Schedule,
    target: &Mat4,
    tol: f64,
) -> Result<VerifyReport, CompileError> {
    let u = total_propagator(schedule)?;
    let distance = distance_up_to_global_phase(target, &u);
    Ok(VerifyReport {
        distance,
        pass: distance <= tol,
        phase_offset: relative_phase(target, &u),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compiler {
    device: DeviceParams,
    mode: DriveMode,
    config: CompilerConfig,
}

impl Compiler {
    pub fn new(device: DeviceParams, mode: DriveMode) -> Result<Self, CompileError> {
        Self::with_config(device, mode, CompilerConfig::default())
    }

    pub fn with_config(
        device: DeviceParams,
        mode: DriveMode,
        config: CompilerConfig,
    ) -> Result<Self, CompileError> {
        device.validate()?;
        Ok(Self {
            device,
            mode,
            config,
        })
    }

    pub fn device(&self) -> &DeviceParams {
        &self.device
    }

    pub fn mode(&self) -> DriveMode {
        self.mode
    }

    pub fn config(&self) -> &CompilerConfig {
        &self.config
    }

    fn r(&self) -> f64 {
        self.device.delta12
    }

    fn is_zero_angle(&self, x: f64) -> bool {
        wrap_phase(x).abs() <= self.config.zero_tol
    }

    /// Detuning that makes an idle qubit with drive `a` complete the z angle
    /// `beta` (mod 4π on the Bloch sphere) over `t`, while staying at least
    /// `parking_floor · a` off resonance. With `a = 0` this is the plain
    /// accrual solution.
    fn park(&self, q: Qubit, beta: f64, t: f64, a: f64) -> Result<f64, CompileError> {
        let quarter = self.r() / 4.0;
        if a == 0.0 {
            return Ok(beta / (2.0 * t) - quarter);
        }
        let floor = self.config.parking_floor * a;
        let attempt = |k: f64| -> Option<f64> {
            let omega = (beta + 2.0 * TAU * k) / (2.0 * t);
            if omega.abs() < a {
                return None;
            }
            let delta = omega.signum() * (omega * omega - a * a).sqrt() - quarter;
            (delta.abs() >= floor).then_some(delta)
        };
        if let Some(d) = attempt(0.0) {
            return Ok(d);
        }
        // cycle indices by increasing |k|, positive first; below this bound
        // neither sign can reach the floor because |Δ| ≤ |Ω| + |Δ₁₂|/4
        let needed = floor - quarter.abs();
        let start = ((2.0 * t * needed - beta.abs()) / (2.0 * TAU)).floor() - 1.0;
        let start = if start.is_finite() && start > 1.0 {
            start as u64
        } else {
            1
        };
        for m in start..=self.config.k_max {
            let m = m as f64;
            if let Some(d) = attempt(m).or_else(|| attempt(-m)) {
                return Ok(d);
            }
        }
        Err(CompileError::ParkingFailed {
            qubit: q,
            target: beta,
            duration: t,
            floor: self.config.parking_floor,
            k_max: self.config.k_max,
        })
    }

    fn drive(&self, q: Qubit) -> f64 {
        self.device.qubit(q).a
    }

    /// Realizes everything owed in one phase block.
    pub fn discharge(&self, ledger: &PhaseLedger) -> Result<CompiledGate, CompileError> {
        let mut ledger = *ledger;
        ledger.reduce();
        if ledger.is_clear(self.config.zero_tol) {
            return Ok(CompiledGate::empty(ledger));
        }
        let r = self.r();
        let tol = self.config.zero_tol;
        let zz = ledger.pending_zz;
        let (x, t) = if r == 0.0 {
            if !self.is_zero_angle(zz) {
                return Err(CompileError::CouplingAbsent(zz));
            }
            (
                0.0,
                self.config.uncoupled_block_duration / self.device.a_ref,
            )
        } else {
            // one positive duration: θ_zz into (0, 2π] for Δ₁₂ > 0, [−2π, 0) otherwise
            let x = if r > 0.0 {
                zz - TAU * (((zz - tol) / TAU).ceil() - 1.0)
            } else {
                zz - TAU * (((zz + tol) / TAU).floor() + 1.0)
            };
            (x, 2.0 * x / r)
        };
        let b1 = wrap_phase(ledger.pending_z1);
        let b2 = wrap_phase(ledger.pending_z2);

        let seg = match self.mode {
            DriveMode::Gated => {
                let quarter = r / 4.0;
                PulseSegment::new(
                    t,
                    b1 / (2.0 * t) - quarter,
                    b2 / (2.0 * t) - quarter,
                    0.0,
                    0.0,
                )
            }
            DriveMode::AlwaysOn => {
                let (a1, a2) = (self.drive(Qubit::Q1), self.drive(Qubit::Q2));
                PulseSegment::new(
                    t,
                    self.park(Qubit::Q1, b1, t, a1)?,
                    self.park(Qubit::Q2, b2, t, a2)?,
                    a1,
                    a2,
                )
            }
        }
        .with_label("phase block");

        let ideal = diag_rotation(b1, b2, x).scale(C64::from_polar(1.0, -r * t / 4.0));
        ledger.pending_z1 -= b1;
        ledger.pending_z2 -= b2;
        ledger.pending_zz -= x;
        ledger.global_phase -= r * t / 4.0;
        ledger.reduce();

        Ok(CompiledGate {
            segments: vec![seg],
            segment_ideals: vec![ideal],
            intended_unitary: Mat4::identity(),
            ledger_after: ledger,
        })
    }

    fn emit_x_pulse(
        &self,
        q: Qubit,
        theta: f64,
        ledger: &PhaseLedger,
    ) -> Result<CompiledGate, CompileError> {
        if !theta.is_finite() {
            return Err(CompileError::NonFiniteAngle(theta));
        }
        if !(theta > -TAU && theta <= TAU) {
            return Err(CompileError::AngleOutOfRange(theta));
        }
        let mut out = CompiledGate::empty(*ledger);
        out.intended_unitary = on_qubit(&rotation_x(theta), q);
        if theta == 0.0 {
            return Ok(out);
        }
        let a = self.drive(q);
        if a == 0.0 {
            return Err(CompileError::NoDrive(q));
        }

        // the pulse does not commute with z or zz rotations owed on this qubit
        if !self.is_zero_angle(ledger.pending(q)) || !self.is_zero_angle(ledger.pending_zz) {
            let flush = self.discharge(ledger)?;
            let intended = out.intended_unitary;
            out.append(flush);
            out.intended_unitary = intended;
        }
        let mut ledger = out.ledger_after;

        let (phys, shifted) = if theta > 0.0 {
            (theta, false)
        } else {
            (theta + TAU, true)
        };
        let t = phys / (2.0 * a);
        let r = self.r();
        let spectator = q.other();

        // z phases accrued through the coupling, in the frame after the pulse
        let driven = r * phys.sin() / (4.0 * a);
        let (spec_delta, spec_a, spec_acc) = match self.mode {
            DriveMode::Gated => (0.0, 0.0, r * t / 2.0),
            DriveMode::AlwaysOn => {
                let a_s = self.drive(spectator);
                (self.park(spectator, 0.0, t, a_s)?, a_s, 0.0)
            }
        };
        let seg = match q {
            Qubit::Q1 => PulseSegment::new(t, 0.0, spec_delta, a, spec_a),
            Qubit::Q2 => PulseSegment::new(t, spec_delta, 0.0, spec_a, a),
        }
        .with_label(format!("x {q}"));

        let mut acc = [0.0; 2];
        acc[q.index()] = driven;
        acc[spectator.index()] = spec_acc;
        let ideal = diag_rotation(acc[0], acc[1], driven)
            * on_qubit(&rotation_x(phys), q).scale(C64::from_polar(1.0, -r * t / 4.0));

        *ledger.pending_mut(q) -= driven;
        *ledger.pending_mut(spectator) -= spec_acc;
        ledger.pending_zz -= driven;
        ledger.global_phase -= r * t / 4.0;
        if shifted {
            // R_x(θ + 2π) = −R_x(θ)
            ledger.global_phase += PI;
        }
        ledger.reduce();

        out.segments.push(seg);
        out.segment_ideals.push(ideal);
        out.ledger_after = ledger;
        Ok(out)
    }

    fn apply(&self, p: &Primitive, ledger: &PhaseLedger) -> Result<CompiledGate, CompileError> {
        match *p {
            Primitive::XPulse(q, a) => self.emit_x_pulse(q, a, ledger),
            Primitive::Diag { z1, z2, zz } => {
                for v in [z1, z2, zz] {
                    if !v.is_finite() {
                        return Err(CompileError::NonFiniteAngle(v));
                    }
                }
                let mut ledger = *ledger;
                ledger.add(z1, z2, zz);
                let mut out = CompiledGate::empty(ledger);
                out.intended_unitary = diag_rotation(z1, z2, zz);
                Ok(out)
            }
        }
    }

    /// Compiles one gate. Z-type content may remain in `ledger_after`.
    pub fn compile_gate(
        &self,
        g: &GateSpec,
        ledger: &PhaseLedger,
    ) -> Result<CompiledGate, CompileError> {
        if let Some(a) = g.angle() {
            if !a.is_finite() {
                return Err(CompileError::NonFiniteAngle(a));
            }
        }
        let prims = lower(g);
        let mut out = CompiledGate::empty(*ledger);
        for p in &prims {
            let step = self.apply(p, &out.ledger_after)?;
            out.append(step);
        }
        // the lowering may differ from the gate by a constant scalar
        let target = ideal_gate(g);
        let lowered = compose_primitives(&prims, &diag_rotation);
        out.ledger_after.global_phase =
            wrap_phase(out.ledger_after.global_phase + relative_phase(&target, &lowered));
        out.intended_unitary = target;
        Ok(out)
    }

    pub fn compile_x_rotation(
        &self,
        q: Qubit,
        theta: f64,
        ledger: &PhaseLedger,
    ) -> Result<CompiledGate, CompileError> {
        self.compile_gate(&GateSpec::Rx(q, theta), ledger)
    }

    pub fn compile_y_rotation(
        &self,
        q: Qubit,
        theta: f64,
        ledger: &PhaseLedger,
    ) -> Result<CompiledGate, CompileError> {
        self.compile_gate(&GateSpec::Ry(q, theta), ledger)
    }

    pub fn compile_z_rotation(
        &self,
        q: Qubit,
        theta: f64,
        ledger: &PhaseLedger,
    ) -> Result<CompiledGate, CompileError> {
        self.compile_gate(&GateSpec::Rz(q, theta), ledger)
    }

    /// Adds the requested z and ZZ angles to what is owed and realizes all of
    /// it in one block.
    pub fn compile_phase_block(
        &self,
        theta_z1: f64,
        theta_z2: f64,
        theta_zz: f64,
        ledger: &PhaseLedger,
    ) -> Result<CompiledGate, CompileError> {
        let mut out = self.apply(
            &Primitive::Diag {
                z1: theta_z1,
                z2: theta_z2,
                zz: theta_zz,
            },
            ledger,
        )?;
        let intended = out.intended_unitary;
        let block = self.discharge(&out.ledger_after)?;
        out.append(block);
        out.intended_unitary = intended;
        Ok(out)
    }

    /// Compiles the gates in order and settles the ledger at the end.
    pub fn compile_sequence(&self, gates: &[GateSpec]) -> Result<CompiledGate, CompileError> {
        let mut out = CompiledGate::empty(PhaseLedger::default());
        for g in gates {
            let step = self.compile_gate(g, &out.ledger_after)?;
            out.append(step);
        }
        let tail = self.discharge(&out.ledger_after)?;
        out.append(tail);
        Ok(out)
    }

    pub fn schedule(&self, compiled: &CompiledGate) -> Result<Schedule, CompileError> {
        Ok(Schedule::new(
            compiled.segments.clone(),
            self.device,
            Model::Capacitive,
        )?)
    }

    pub fn compile_cnot(&self) -> Result<Schedule, CompileError> {
        let compiled = self.compile_sequence(&[GateSpec::Cnot])?;
        self.schedule(&compiled)
    }
}

/// CNOT schedule for `device` in `mode` with the default configuration.
pub fn compile_cnot(device: &DeviceParams, mode: DriveMode) -> Result<Schedule, CompileError> {
    Compiler::new(*device, mode)?.compile_cnot()
}

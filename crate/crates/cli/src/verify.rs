//! The built-in invariant checks behind `capq verify`.
//!
//! The builders under test are injected through [`Hooks`] so the checks can be
//! pointed at deliberately broken implementations.

use std::io::{self, Write};

use capq::compiler::{compose_primitives, diag_rotation, lower};
use capq::evolution::{segment_hamiltonian, total_propagator};
use capq::experiments::device_for_ratio;
use capq::hamiltonian::{
    build_capacitive, build_capacitive_pauli_form, build_dipole, effective_level,
};
use capq::linalg::distance_up_to_global_phase;
use capq::{
    compile_cnot, ideal_gate, propagate, propagate_rk4, Compiler, DeviceParams, DriveMode,
    GateSpec, Mat4, Model, PulseSegment, Qubit, QubitParams, Schedule, Vec4, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type BuilderFn = fn(&DeviceParams) -> Mat4;
pub type DiagFn = fn(f64, f64, f64) -> Mat4;

#[derive(Clone, Copy)]
pub struct Hooks {
    pub capacitive: BuilderFn,
    pub pauli_form: BuilderFn,
    pub diag: DiagFn,
}

impl Default for Hooks {
    fn default() -> Self {
        Self {
            capacitive: build_capacitive,
            pauli_form: build_capacitive_pauli_form,
            diag: diag_rotation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub identity_draws: usize,
    pub level_draws: usize,
    pub schedules: usize,
    pub rk4_ratio: f64,
    /// RK4 step as a fraction of the schedule duration.
    pub rk4_step_fraction: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            identity_draws: 10_000,
            level_draws: 1_000,
            schedules: 100,
            rk4_ratio: 0.05,
            rk4_step_fraction: 1e-5,
        }
    }
}

pub const IDENTITY_TOL: f64 = 1e-15;
pub const LEVEL_TOL: f64 = 1e-15;
pub const HERMITIAN_TOL: f64 = 1e-14;
pub const UNITARY_TOL: f64 = 1e-12;
pub const COMPOSITION_TOL: f64 = 1e-10;
pub const RK4_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Self { name, pass, detail }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckTable {
    pub checks: Vec<CheckResult>,
}

impl CheckTable {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn write<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(0)
            .max(5);
        writeln!(out, "{:width$}  status  detail", "check")?;
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            writeln!(out, "{:width$}  {status:6}  {}", c.name, c.detail)?;
        }
        match self.first_failure() {
            None => writeln!(out, "all {} checks passed", self.checks.len()),
            Some(f) => writeln!(out, "first failing check: {}", f.name),
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..=hi)
}

pub fn random_device(rng: &mut ChaCha8Rng, span: f64) -> DeviceParams {
    DeviceParams {
        q1: QubitParams::new(uniform(rng, -span, span), uniform(rng, -span, span)),
        q2: QubitParams::new(uniform(rng, -span, span), uniform(rng, -span, span)),
        delta12: uniform(rng, -span, span),
        a_ref: 1.0,
    }
}

/// Multiples of 2⁻¹⁰ in `[−5, 5]`: every sum and halving stays exact.
fn dyadic(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-5120..=5120) as f64 / 1024.0
}

pub fn random_schedule(rng: &mut ChaCha8Rng) -> Schedule {
    let n = rng.gen_range(1..=5);
    let segments = (0..n)
        .map(|_| {
            PulseSegment::new(
                uniform(rng, 0.05, 2.0),
                uniform(rng, -3.0, 3.0),
                uniform(rng, -3.0, 3.0),
                uniform(rng, 0.0, 2.0),
                uniform(rng, 0.0, 2.0),
            )
        })
        .collect();
    let model = if rng.gen_bool(0.5) {
        Model::Capacitive
    } else {
        Model::Dipole
    };
    let mut device = random_device(rng, 2.0);
    device.q1.a = device.q1.a.abs();
    device.q2.a = device.q2.a.abs();
    Schedule::new(segments, device, model).expect("random schedule is valid")
}

pub fn random_state(rng: &mut ChaCha8Rng) -> Vec4 {
    let v = Vec4::new(std::array::from_fn(|_| {
        C64::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0))
    }));
    let n = v.norm();
    v.scale(C64::new(1.0 / n, 0.0))
}

/// RK4 step `fraction · T`, capped so every segment gets at least ten steps
/// and, when `max_phase_step` is given, so `‖H‖_F · dt` stays below it.
pub fn oracle_step(schedule: &Schedule, fraction: f64, max_phase_step: Option<f64>) -> f64 {
    let mut dt = fraction * schedule.total_duration();
    for seg in schedule.segments() {
        dt = dt.min(seg.duration / 10.0);
        if let Some(limit) = max_phase_step {
            let h = segment_hamiltonian(seg, schedule.device(), schedule.model()).frobenius_norm();
            if h > 0.0 {
                dt = dt.min(limit / h);
            }
        }
    }
    dt
}

/// `‖ψ_exact − ψ_rk4‖` for step `dt`.
pub fn rk4_error(schedule: &Schedule, psi0: &Vec4, dt: f64) -> Result<f64, String> {
    let exact = propagate(schedule, psi0).map_err(|e| e.to_string())?;
    let rk = propagate_rk4(schedule, psi0, dt).map_err(|e| e.to_string())?;
    Ok(exact.final_state.distance(&rk))
}

/// `false` for NaN.
fn within(x: f64, tol: f64) -> bool {
    x <= tol
}

fn rc(i: usize, j: usize) -> String {
    format!("({},{})", i + 1, j + 1)
}

pub fn check_identity(hooks: &Hooks, rng: &mut ChaCha8Rng, draws: usize) -> CheckResult {
    const NAME: &str = "hamiltonian-identity";
    let mut worst = 0.0_f64;
    for _ in 0..draws {
        let d = random_device(rng, 5.0);
        let a = (hooks.capacitive)(&d);
        let b = (hooks.pauli_form)(&d);
        if let Some((i, j, diff)) = a.first_mismatch(&b, IDENTITY_TOL) {
            return CheckResult::new(
                NAME,
                false,
                format!("entry {} differs by {diff:.3e} at {d:?}", rc(i, j)),
            );
        }
        worst = worst.max(a.max_abs_diff(&b));
    }
    CheckResult::new(NAME, true, format!("{draws} draws, max |diff| {worst:.3e}"))
}

pub fn check_levels(hooks: &Hooks, rng: &mut ChaCha8Rng, draws: usize) -> CheckResult {
    const NAME: &str = "energy-levels";
    let mut worst = 0.0_f64;
    for _ in 0..draws {
        let d = DeviceParams {
            q1: QubitParams::new(dyadic(rng), 0.0),
            q2: QubitParams::new(dyadic(rng), 0.0),
            delta12: dyadic(rng),
            a_ref: 1.0,
        };
        let e = (hooks.capacitive)(&d).diagonal().map(|z| z.re);
        // |11>, |10>, |01>, |00>
        let pairs = [
            (Qubit::Q1, true, (e[0] - e[2]) / 2.0),
            (Qubit::Q1, false, (e[1] - e[3]) / 2.0),
            (Qubit::Q2, true, (e[0] - e[1]) / 2.0),
            (Qubit::Q2, false, (e[2] - e[3]) / 2.0),
        ];
        for (q, excited, got) in pairs {
            let want = effective_level(&d, q, excited);
            let diff = (got - want).abs();
            if !within(diff, LEVEL_TOL) {
                return CheckResult::new(
                    NAME,
                    false,
                    format!("{q} with neighbour excited={excited}: {got} vs {want}"),
                );
            }
            worst = worst.max(diff);
        }
    }
    CheckResult::new(
        NAME,
        true,
        format!("{draws} dyadic draws, max |diff| {worst:.3e}"),
    )
}

pub fn check_hermitian(hooks: &Hooks, rng: &mut ChaCha8Rng, draws: usize) -> CheckResult {
    const NAME: &str = "hermiticity";
    let builders: [(&str, BuilderFn); 3] = [
        ("capacitive", hooks.capacitive),
        ("pauli-form", hooks.pauli_form),
        ("dipole", build_dipole),
    ];
    for _ in 0..draws {
        let d = random_device(rng, 5.0);
        for (label, build) in builders {
            let h = build(&d);
            let (i, j, v) = h.hermiticity_violation();
            if !h.is_hermitian(HERMITIAN_TOL) {
                return CheckResult::new(
                    NAME,
                    false,
                    format!("{label} builder: entry {} off by {v:.3e}", rc(i, j)),
                );
            }
        }
    }
    CheckResult::new(NAME, true, format!("{draws} draws, 3 builders"))
}

pub fn check_unitarity(rng: &mut ChaCha8Rng, schedules: usize) -> CheckResult {
    const NAME: &str = "unitarity-norm";
    let mut worst = 0.0_f64;
    for k in 0..schedules {
        let s = random_schedule(rng);
        let psi = random_state(rng);
        let u = match total_propagator(&s) {
            Ok(u) => u,
            Err(e) => return CheckResult::new(NAME, false, format!("schedule {k}: {e}")),
        };
        let drift = match propagate(&s, &psi) {
            Ok(r) => r.norm_drift,
            Err(e) => return CheckResult::new(NAME, false, format!("schedule {k}: {e}")),
        };
        let defect = u.unitarity_defect();
        if !(within(defect, UNITARY_TOL) && within(drift, UNITARY_TOL)) {
            return CheckResult::new(
                NAME,
                false,
                format!("schedule {k}: unitarity defect {defect:.3e}, norm drift {drift:.3e}"),
            );
        }
        worst = worst.max(defect).max(drift);
    }
    CheckResult::new(
        NAME,
        true,
        format!("{schedules} schedules, worst {worst:.3e}"),
    )
}

fn reference_gates() -> Vec<GateSpec> {
    use std::f64::consts::PI;
    let mut gates = vec![GateSpec::Cnot, GateSpec::Zz(PI / 2.0), GateSpec::Zz(-1.3)];
    for q in [Qubit::Q1, Qubit::Q2] {
        for a in [PI / 2.0, -PI / 2.0, PI, 0.7, -2.9] {
            gates.extend([GateSpec::Rx(q, a), GateSpec::Ry(q, a), GateSpec::Rz(q, a)]);
        }
    }
    gates
}

pub fn check_composition(hooks: &Hooks) -> CheckResult {
    const NAME: &str = "ideal-composition";
    let gates = reference_gates();
    let mut worst = 0.0_f64;
    for g in &gates {
        let composed = compose_primitives(&lower(g), &hooks.diag);
        let d = distance_up_to_global_phase(&ideal_gate(g), &composed);
        if !within(d, COMPOSITION_TOL) {
            return CheckResult::new(NAME, false, format!("{g}: distance {d:.3e}"));
        }
        worst = worst.max(d);
    }
    CheckResult::new(
        NAME,
        true,
        format!("{} gates, max distance {worst:.3e}", gates.len()),
    )
}

pub fn check_ledger(rng: &mut ChaCha8Rng, sequences: usize) -> CheckResult {
    const NAME: &str = "compiled-ledger";
    let base = reference_gates();
    let mut worst = 0.0_f64;
    for k in 0..sequences {
        let ratio = if k % 2 == 0 { 0.05 } else { -0.2 };
        let mode = DriveMode::ALL[(k / 2) % 2];
        let len = rng.gen_range(1..=4);
        let gates: Vec<GateSpec> = (0..len)
            .map(|_| base[rng.gen_range(0..base.len())])
            .collect();
        let compiled = match Compiler::new(device_for_ratio(ratio), mode)
            .and_then(|c| c.compile_sequence(&gates))
        {
            Ok(c) => c,
            Err(e) => return CheckResult::new(NAME, false, format!("sequence {k} ({mode}): {e}")),
        };
        let phase = C64::from_polar(1.0, compiled.ledger_after.global_phase);
        let d = compiled
            .settled_ideal()
            .max_abs_diff(&compiled.intended_unitary.scale(phase));
        if !within(d, COMPOSITION_TOL) {
            return CheckResult::new(
                NAME,
                false,
                format!("sequence {k} ({mode}): entry error {d:.3e}"),
            );
        }
        worst = worst.max(d);
    }
    CheckResult::new(
        NAME,
        true,
        format!("{sequences} sequences, max entry error {worst:.3e}"),
    )
}

/// Phase advance per step allowed for the always-on CNOT, whose parked
/// detunings make `T/10⁵` too coarse for fourth-order accuracy.
pub const ALWAYS_ON_PHASE_STEP: f64 = 0.01;

pub fn check_rk4(ratio: f64, fraction: f64) -> CheckResult {
    const NAME: &str = "rk4-vs-exact";
    let mut details = Vec::new();
    for mode in DriveMode::ALL {
        let schedule = match compile_cnot(&device_for_ratio(ratio), mode) {
            Ok(s) => s,
            Err(e) => return CheckResult::new(NAME, false, format!("{mode}: {e}")),
        };
        let cap = match mode {
            DriveMode::Gated => None,
            DriveMode::AlwaysOn => Some(ALWAYS_ON_PHASE_STEP),
        };
        let dt = oracle_step(&schedule, fraction, cap);
        let err = match rk4_error(&schedule, &Vec4::basis(0), dt) {
            Ok(e) => e,
            Err(e) => return CheckResult::new(NAME, false, format!("{mode}: {e}")),
        };
        if !within(err, RK4_TOL) {
            return CheckResult::new(
                NAME,
                false,
                format!("{mode} cnot: dt {dt:.3e}, state error {err:.3e}"),
            );
        }
        details.push(format!("{mode} {err:.1e}"));
    }
    CheckResult::new(
        NAME,
        true,
        format!("cnot at ratio {ratio}: {}", details.join(", ")),
    )
}

pub fn run_checks(hooks: &Hooks, opts: &VerifyOptions) -> CheckTable {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let checks = vec![
        check_identity(hooks, &mut rng, opts.identity_draws),
        check_levels(hooks, &mut rng, opts.level_draws),
        check_hermitian(hooks, &mut rng, opts.level_draws),
        check_unitarity(&mut rng, opts.schedules),
        check_composition(hooks),
        check_ledger(&mut rng, opts.schedules),
        check_rk4(opts.rk4_ratio, opts.rk4_step_fraction),
    ];
    CheckTable { checks }
}

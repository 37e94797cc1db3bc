//! Command execution. Every command writes only to the given streams and,
//! for `sweep --out`, the named file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use capq::experiments::{cnot_response, levels_table, run_sweep, SweepConfig, SweepTable};
use capq::{propagate, verify_schedule, BasisState, Compiler, Vec4};

use crate::args::{Command, RunConfig, SimulateConfig};
use crate::csv::{num, write_table};
use crate::verify::{run_checks, Hooks, VerifyOptions};

/// A failure after argument parsing; maps to exit status 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeError(pub String);

impl<E: std::fmt::Display> From<E> for RuntimeError {
    fn from(e: E) -> Self {
        Self(e.to_string())
    }
}

pub fn execute(
    cfg: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), RuntimeError> {
    let p = cfg.precision;
    match &cfg.command {
        Command::Levels(device) => {
            writeln!(out, "qubit  neighbour  level")?;
            for row in levels_table(device) {
                let neighbour = if row.neighbor_excited { "|1>" } else { "|0>" };
                writeln!(
                    out,
                    "{:5}  {neighbour:9}  {}",
                    row.qubit.to_string(),
                    num(row.energy, p)
                )?;
            }
        }
        Command::Cnot { ratio, mode } => {
            let r = cnot_response(*ratio, *mode)?;
            writeln!(out, "ratio          {}", num(r.ratio, p))?;
            writeln!(out, "mode           {}", r.mode)?;
            writeln!(out, "amplitude      {}", num(r.amplitude, p))?;
            writeln!(out, "phase_rad      {}", num(r.phase, p))?;
            writeln!(out, "gate_distance  {}", num(r.gate_distance, p))?;
            writeln!(out, "leakage        {}", num(r.leakage, p))?;
        }
        Command::Sweep { config, out: path } => {
            let table = run_sweep(config)?;
            match path {
                Some(path) => {
                    write_csv_file(path, &table, p)?;
                    writeln!(out, "wrote {} rows to {}", table.rows.len(), path.display())?;
                    write_baselines(out, config, &table, p)?;
                }
                None => {
                    write_table(out, &table, p)?;
                    write_baselines(err, config, &table, p)?;
                }
            }
        }
        Command::Simulate(sim) => simulate(sim, p, out)?,
        Command::Verify => {
            let table = run_checks(&Hooks::default(), &VerifyOptions::default());
            table.write(out)?;
            if let Some(f) = table.first_failure() {
                return Err(RuntimeError(format!("verification failed: {}", f.name)));
            }
        }
    }
    Ok(())
}

fn write_csv_file(path: &Path, table: &SweepTable, precision: usize) -> Result<(), RuntimeError> {
    let fail = |e: std::io::Error| RuntimeError(format!("cannot write {}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(fail)?);
    write_table(&mut w, table, precision).map_err(fail)
}

fn write_baselines(
    w: &mut dyn Write,
    config: &SweepConfig,
    table: &SweepTable,
    p: usize,
) -> Result<(), RuntimeError> {
    for b in &table.baselines {
        writeln!(
            w,
            "baseline {} at ratio {}: phase_rad {}",
            b.mode,
            num(config.baseline_ratio, p),
            num(b.phase, p)
        )?;
    }
    Ok(())
}

fn simulate(sim: &SimulateConfig, p: usize, out: &mut dyn Write) -> Result<(), RuntimeError> {
    let compiler = Compiler::new(sim.device, sim.mode)?;
    let compiled = compiler.compile_sequence(&sim.gates)?;
    let schedule = compiler.schedule(&compiled)?;
    let result = propagate(&schedule, &Vec4::basis(sim.psi0.index()))?;
    let report = verify_schedule(&schedule, &compiled.intended_unitary, sim.tol)?;

    let gates: Vec<String> = sim.gates.iter().map(ToString::to_string).collect();
    writeln!(out, "gates    {}", gates.join("; "))?;
    writeln!(out, "mode     {}", sim.mode)?;
    writeln!(
        out,
        "segments {} (total time {})",
        schedule.segments().len(),
        num(schedule.total_duration(), p)
    )?;
    for (i, s) in schedule.segments().iter().enumerate() {
        writeln!(out, "  {:3}  {s}", i + 1)?;
    }
    writeln!(out, "initial  {}", sim.psi0.label())?;
    writeln!(out, "final state")?;
    for b in BasisState::ORDER {
        let c = result.final_state[b.index()];
        writeln!(
            out,
            "  {}  |c| {}  arg {}",
            b.label(),
            num(c.norm(), p),
            num(c.arg(), p)
        )?;
    }
    writeln!(out, "norm drift     {}", num(result.norm_drift, p))?;
    writeln!(out, "distance       {}", num(report.distance, p))?;
    writeln!(out, "phase offset   {}", num(report.phase_offset, p))?;
    writeln!(out, "tolerance      {}", num(sim.tol, p))?;
    writeln!(
        out,
        "verify         {}",
        if report.pass { "PASS" } else { "FAIL" }
    )?;
    if !report.pass {
        return Err(RuntimeError(format!(
            "schedule misses the intended unitary: distance {} > {}",
            num(report.distance, p),
            num(sim.tol, p)
        )));
    }
    Ok(())
}

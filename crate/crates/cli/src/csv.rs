//! CSV output for sweep tables.

use std::io::{self, Write};

use capq::experiments::{SweepRow, SweepTable};

pub const HEADER: &str = "ratio,mode,amplitude,phase_rad,phase_deviation_rad,gate_distance,leakage";

/// Scientific notation with `precision` significant digits.
pub fn num(x: f64, precision: usize) -> String {
    format!("{:.*e}", precision.saturating_sub(1), x)
}

pub fn row_line(r: &SweepRow, precision: usize) -> String {
    [
        num(r.ratio, precision),
        r.mode.as_str().to_string(),
        num(r.amplitude, precision),
        num(r.phase, precision),
        num(r.phase_deviation, precision),
        num(r.gate_distance, precision),
        num(r.leakage, precision),
    ]
    .join(",")
}

pub fn write_table<W: Write + ?Sized>(
    out: &mut W,
    table: &SweepTable,
    precision: usize,
) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in &table.rows {
        writeln!(out, "{}", row_line(r, precision))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use capq::DriveMode;

    #[test]
    fn formatting() {
        assert_eq!(num(0.05, 6), "5.00000e-2");
        assert_eq!(num(-1.0, 12), "-1.00000000000e0");
        let r = SweepRow {
            ratio: 0.1,
            mode: DriveMode::AlwaysOn,
            amplitude: 1.0,
            phase: 0.5,
            phase_deviation: 0.0,
            gate_distance: 1e-3,
            leakage: 0.0,
        };
        let line = row_line(&r, 6);
        assert_eq!(line.split(',').count(), HEADER.split(',').count());
        assert!(line.starts_with("1.00000e-1,always-on,"));
        let back: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(back, 0.5);
    }
}

use std::io::Write;
use std::process::Command as Process;

use capq::compiler::diag_rotation;
use capq::experiments::{SweepRow, SweepTable};
use capq::hamiltonian::build_capacitive;
use capq::{DeviceParams, DriveMode, Mat4, C64};
use capq_cli::csv::{write_table, HEADER};
use capq_cli::verify::{check_composition, check_identity, run_checks, Hooks, VerifyOptions};
use capq_cli::{run, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn capq(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("capq").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Output {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn config_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

/// Capacitive builder with the a₁ drive misplaced at entry (3,4).
fn typo_capacitive(d: &DeviceParams) -> Mat4 {
    let mut h = build_capacitive(d);
    h.0[2][3] = C64::new(d.q1.a, 0.0);
    h.0[3][2] = C64::new(d.q1.a, 0.0);
    h
}

/// ZZ rotation with the opposite sign convention.
fn flipped_diag(z1: f64, z2: f64, zz: f64) -> Mat4 {
    diag_rotation(z1, z2, -zz)
}

#[test]
fn typo_in_builder_is_located() {
    let hooks = Hooks {
        capacitive: typo_capacitive,
        ..Hooks::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let r = check_identity(&hooks, &mut rng, 100);
    assert!(!r.pass);
    assert!(r.detail.contains("(3,4)"), "{}", r.detail);

    let table = run_checks(&hooks, &VerifyOptions::default());
    assert_eq!(table.first_failure().unwrap().name, "hamiltonian-identity");
}

#[test]
fn flipped_zz_convention_breaks_cnot_composition() {
    let hooks = Hooks {
        diag: flipped_diag,
        ..Hooks::default()
    };
    let r = check_composition(&hooks);
    assert!(!r.pass);
    assert!(r.detail.starts_with("cnot"), "{}", r.detail);
    let table = run_checks(&hooks, &VerifyOptions::default());
    assert_eq!(table.first_failure().unwrap().name, "ideal-composition");
}

#[test]
fn verify_passes_on_correct_build() {
    let o = capq(&["verify"]);
    assert_eq!(o.code, EXIT_OK, "{}{}", o.out, o.err);
    assert!(o.out.contains("all 7 checks passed"));
    assert_eq!(o.out.matches("PASS").count(), 7);
}

#[test]
fn one_row_table_is_two_lines_and_round_trips() {
    let row = SweepRow {
        ratio: 0.0123456789012345,
        mode: DriveMode::Gated,
        amplitude: 0.999876543210987,
        phase: -2.704132965178291,
        phase_deviation: 1.2345678901234e-5,
        gate_distance: 3.27190585237116e-3,
        leakage: 2.4691e-4,
    };
    for precision in [6, 12, 17] {
        let table = SweepTable {
            rows: vec![row],
            baselines: vec![],
        };
        let mut buf = Vec::new();
        write_table(&mut buf, &table, precision).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], HEADER);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells[1], "gated");
        let expected = [
            row.ratio,
            row.amplitude,
            row.phase,
            row.phase_deviation,
            row.gate_distance,
            row.leakage,
        ];
        let parsed = cells
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 1)
            .map(|(_, c)| c.parse::<f64>().unwrap());
        for (got, want) in parsed.zip(expected) {
            let unit = 10f64.powi(want.abs().log10().floor() as i32 - (precision as i32 - 1));
            assert!(
                (got - want).abs() <= unit,
                "{got} vs {want} at {precision} digits"
            );
        }
    }
}

#[test]
fn sweep_csv_has_one_row_per_point_and_mode() {
    let o = capq(&[
        "sweep", "--min", "0.01", "--max", "0.1", "--points", "4", "--linear", "--mode", "both",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let lines: Vec<&str> = o.out.lines().collect();
    assert_eq!(lines.len(), 1 + 8);
    assert_eq!(lines[0], HEADER);
    assert!(lines[1..5].iter().all(|l| l.contains(",gated,")));
    assert!(lines[5..].iter().all(|l| l.contains(",always-on,")));
    assert!(o.err.contains("baseline gated"));
}

#[test]
fn sweep_to_file_and_unwritable_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let p = path.to_str().unwrap();
    let o = capq(&[
        "sweep",
        "--points",
        "3",
        "--mode",
        "gated",
        "--out",
        p,
        "--precision",
        "8",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1.0000000e-3,gated,"));

    let bad = dir.path().join("missing").join("sweep.csv");
    let o = capq(&["sweep", "--points", "3", "--out", bad.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_FAILURE);
    assert!(o.err.contains(bad.to_str().unwrap()), "{}", o.err);
}

#[test]
fn usage_errors_exit_two_and_name_the_token() {
    for (args, token) in [
        (&["sweep", "--min", "1", "--max", "0.1"][..], "min"),
        (&["sweep", "--points", "ten"][..], "ten"),
        (&["sweep", "--log", "--linear"][..], "--linear"),
        (
            &["cnot", "--ratio", "0.1", "--mode", "sideways"][..],
            "sideways",
        ),
        (&["cnot", "--mode", "gated"][..], "--ratio"),
        (&["levels", "--d1", "1", "--d2", "1"][..], "d12"),
        (&["frobnicate"][..], "frobnicate"),
        (&["verify", "--fast"][..], "--fast"),
        (&["verify", "--precision", "30"][..], "30"),
    ] {
        let o = capq(args);
        assert_eq!(o.code, EXIT_USAGE, "{args:?}");
        assert!(o.err.contains(token), "{args:?}: {}", o.err);
        assert!(o.out.is_empty());
    }
}

#[test]
fn help_and_version_succeed() {
    let o = capq(&["--help"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.contains("sweep"));
    assert_eq!(capq(&["--version"]).code, EXIT_OK);
    assert_eq!(capq(&["sweep", "--help"]).code, EXIT_OK);
}

#[test]
fn config_file_with_flag_override() {
    let f = config_file("# sweep settings\nmin = 0.01\nmax = 0.1\npoints = 3\nmode = always-on\n");
    let path = f.path().to_str().unwrap();
    let o = capq(&["--config", path, "sweep"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert_eq!(o.out.lines().count(), 4);
    assert!(o
        .out
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1.00000000000e-2,always-on,"));

    let o = capq(&[
        "--config", path, "sweep", "--points", "5", "--mode", "gated",
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    assert_eq!(o.out.lines().count(), 6);
    assert!(o.out.contains(",gated,") && !o.out.contains("always-on,"));
}

#[test]
fn config_file_errors_are_usage_errors() {
    for (text, needle) in [
        ("min = 0.01\ncolour = red\n", "colour"),
        ("ratio = 0.1\n", "ratio"),
        ("points = 3\npoints = 4\n", "line 2"),
        ("points = lots\n", "lots"),
        ("just words\n", "line 1"),
    ] {
        let f = config_file(text);
        let o = capq(&["--config", f.path().to_str().unwrap(), "sweep"]);
        assert_eq!(o.code, EXIT_USAGE, "{text}");
        assert!(o.err.contains(needle), "{text}: {}", o.err);
    }
    let o = capq(&["--config", "/definitely/not/here.cfg", "verify"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.err.contains("/definitely/not/here.cfg"));
}

#[test]
fn levels_and_cnot_reports() {
    let o = capq(&[
        "levels",
        "--d1",
        "1",
        "--d2",
        "-0.5",
        "--d12",
        "0.2",
        "--precision",
        "6",
    ]);
    assert_eq!(o.code, EXIT_OK);
    let levels: Vec<&str> = o
        .out
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().last().unwrap())
        .collect();
    assert_eq!(
        levels,
        ["1.10000e0", "1.00000e0", "-4.00000e-1", "-5.00000e-1"]
    );

    let o = capq(&["cnot", "--ratio", "0.01"]);
    assert_eq!(o.code, EXIT_OK);
    let amp: f64 = o
        .out
        .lines()
        .find(|l| l.starts_with("amplitude"))
        .and_then(|l| l.split_whitespace().nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!(amp >= 0.999, "{amp}");
}

#[test]
fn simulate_reports_state_and_verification() {
    let f = config_file("d12 = 1e-3\ngates = cnot; rx(1, pi/2); zz(-pi/3)\npsi0 = 10\n");
    let o = capq(&["simulate", "--config", f.path().to_str().unwrap()]);
    assert_eq!(o.code, EXIT_OK, "{}{}", o.out, o.err);
    assert!(o.out.contains("initial  |10>"));
    assert!(o.out.contains("verify         PASS"));

    let f = config_file("d12 = 0.5\ngates = cnot\n");
    let o = capq(&["simulate", "--config", f.path().to_str().unwrap()]);
    assert_eq!(o.code, EXIT_FAILURE);
    assert!(o.out.contains("verify         FAIL"));

    let f = config_file("d12 = 0\ngates = cnot\n");
    let o = capq(&["simulate", "--config", f.path().to_str().unwrap()]);
    assert_eq!(o.code, EXIT_FAILURE);
    assert!(o.err.contains("coupling"), "{}", o.err);

    let f = config_file("d12 = 0.1\ngates = cnot\nmin = 0.1\n");
    assert_eq!(
        capq(&["simulate", "--config", f.path().to_str().unwrap()]).code,
        EXIT_USAGE
    );
}

#[test]
fn binary_exit_statuses() {
    let bin = env!("CARGO_BIN_EXE_capq");
    let status = |args: &[&str]| Process::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["cnot", "--ratio", "0.05"]), Some(0));
    assert_eq!(status(&["cnot"]), Some(2));
    assert_eq!(
        status(&["sweep", "--points", "2", "--out", "/nonexistent-dir/x.csv"]),
        Some(1)
    );
}

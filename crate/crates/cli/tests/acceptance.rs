//! Acceptance gate for the command-line front end: the asymptotic-delay
//! curve family (closed form, linearity, and logarithmic slope), output
//! determinism, and the documented exit codes.

use std::collections::HashMap;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_dqmimo");

fn binary_entropy(lambda: f64) -> f64 {
    if lambda == 0.0 || lambda == 1.0 {
        return 0.0;
    }
    -lambda * lambda.log2() - (1.0 - lambda) * (1.0 - lambda).log2()
}

/// Runs the binary, asserting success, and returns stdout.
fn run(args: &[&str]) -> String {
    let out = Command::new(BIN).args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

/// Parses CSV rows into column→value maps, skipping the metadata header.
fn parse_csv(text: &str) -> Vec<HashMap<String, String>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .expect("header row")
        .split(',')
        .map(str::to_owned)
        .collect();
    lines
        .map(|line| {
            header
                .iter()
                .cloned()
                .zip(line.split(',').map(str::to_owned))
                .collect()
        })
        .collect()
}

#[test]
fn criterion_5_asymptotic_curve_family() {
    let text = run(&["fig4", "--n-r", "10", "--n-t", "2,4,6,8", "--n-q", "1..128"]);
    let rows = parse_csv(&text);

    // Closed form to 1e-6 on every curve point, and exact linearity
    // (rate = n_q) while the quantizer count is at most twice the antennas.
    let mut curve_points = 0usize;
    for row in &rows {
        let n_q: f64 = row["n_q"].parse().unwrap();
        let rate: f64 = row["rate_bits_per_use"].parse().unwrap();
        if row["curve"] == "n_q" {
            assert!(
                (rate - n_q).abs() < 1e-6,
                "reference line at n_q={n_q}: {rate}"
            );
            continue;
        }
        let n_t: f64 = row["n_t"].parse().unwrap();
        let expected = n_q * binary_entropy((n_t / n_q).min(0.5));
        assert!(
            (rate - expected).abs() < 1e-6,
            "curve n_t={n_t} at n_q={n_q}: {rate} vs {expected}"
        );
        if n_q <= 2.0 * n_t {
            assert!(
                (rate - n_q).abs() < 1e-6,
                "linear region n_t={n_t}, n_q={n_q}: {rate}"
            );
        }
        curve_points += 1;
    }
    assert_eq!(curve_points, 4 * 128);

    // Past saturation the curves grow logarithmically: the centered slope
    // with respect to log₂ n_q at n_q = 64 approaches the antenna count.
    for n_t in [2u64, 4, 6, 8] {
        let rate_at = |n_q: u64| -> f64 {
            rows.iter()
                .find(|r| r["curve"] == format!("n_t={n_t}") && r["n_q"] == n_q.to_string())
                .unwrap_or_else(|| panic!("missing row n_t={n_t}, n_q={n_q}"))["rate_bits_per_use"]
                .parse()
                .unwrap()
        };
        let slope = (rate_at(128) - rate_at(32)) / 2.0;
        let err = (slope - n_t as f64).abs() / n_t as f64;
        assert!(
            err < 0.15,
            "slope at n_q=64 for n_t={n_t}: {slope} ({:.1}% off)",
            100.0 * err
        );
    }
    println!("ACCEPTANCE criterion 5 (asymptotic curve family: closed form 1e-6, linear region, log slope within 15%): PASS");
}

#[test]
fn criterion_5_determinism_and_exit_codes() {
    // Identical configuration twice: byte-identical artifacts modulo the
    // timestamp metadata line.
    let strip = |s: String| -> String {
        s.lines()
            .filter(|l| !l.starts_with("# timestamp:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = run(&["fig4", "--n-q", "1..16", "--seed", "5"]);
    let b = run(&["fig4", "--n-q", "1..16", "--seed", "5"]);
    assert_eq!(strip(a), strip(b), "same config must emit identical bytes");

    // Invalid configuration → exit 2 with a single-line machine-parsable
    // error; resource-limit overruns → exit 3.
    let bad = Command::new(BIN)
        .args(["capacity", "--n-q", "2"])
        .output()
        .expect("spawn");
    assert_eq!(bad.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(
        stderr.starts_with("error: config: "),
        "stderr was: {stderr}"
    );
    assert_eq!(stderr.trim_end().lines().count(), 1);

    let huge = Command::new(BIN)
        .args(["count-regions", "--d", "13", "--n-q", "3"])
        .output()
        .expect("spawn");
    assert_eq!(huge.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&huge.stderr).starts_with("error: resource-limit: "));

    println!("ACCEPTANCE criterion 5 (determinism modulo timestamp; exit codes 2/3): PASS");
}

//! One line per acceptance criterion. The summary line bypasses test output
//! capture; per-check details show with `--nocapture` or on failure.

use std::io::Write;

use ymforms::checks::{run_criterion, CheckConfig, Criterion, Status};

fn report(cr: &Criterion) {
    {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{}", cr.summary_line());
        let _ = out.flush();
    }
    for c in &cr.checks {
        let tag = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Info => "info",
        };
        println!(
            "    [{tag}] {}: worst {:.3e} (tol {:.1e}, {} pts) {}",
            c.name, c.worst, c.tolerance, c.points, c.detail
        );
    }
}

fn check(id: u8) {
    let cr = run_criterion(id, &CheckConfig::default()).expect("criterion runs");
    report(&cr);
    assert!(cr.passed(), "{}", cr.summary_line());
}

#[test]
fn criterion_01_star_table() {
    check(1);
}

#[test]
fn criterion_02_involution() {
    check(2);
}

#[test]
fn criterion_03_adjointness() {
    check(3);
}

#[test]
fn criterion_04_curvature_current() {
    check(4);
}

#[test]
fn criterion_05_lorenz() {
    check(5);
}

#[test]
fn criterion_06_stationary_sd() {
    check(6);
}

#[test]
fn criterion_07_dirac_monopole() {
    check(7);
}

#[test]
fn criterion_08_bpst() {
    check(8);
}

#[test]
fn criterion_09_criticality() {
    check(9);
}

#[test]
fn criterion_10_constant_solutions() {
    check(10);
}

#[test]
fn criterion_11_sign_laws() {
    check(11);
}

#[test]
fn criterion_12_profile_optimization() {
    check(12);
}

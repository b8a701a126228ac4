use fnwl_core::gradsuite::{check_model, run_suite, tiny_model, SuiteConfig};
use fnwl_core::model::LstmInputMode;

#[test]
fn suite_passes_for_every_seed() {
    for seed in [1, 42, 1337] {
        let entries = run_suite(&SuiteConfig {
            seed,
            ..Default::default()
        })
        .unwrap();
        for e in &entries {
            println!(
                "seed {seed:<5} {:<24} max rel err {:.3e} (tol {:.0e})",
                e.check,
                e.report.max_rel_error(),
                e.report.tolerance
            );
        }
        let failed: Vec<_> = entries.iter().filter(|e| !e.passed()).collect();
        assert!(failed.is_empty(), "seed {seed}: {failed:#?}");
    }
}

#[test]
fn tight_tolerance_reports_failures() {
    let entries = run_suite(&SuiteConfig {
        layer_tolerance: 1e-12,
        model_tolerance: 1e-12,
        ..Default::default()
    })
    .unwrap();
    assert!(entries.iter().any(|e| !e.passed()));
}

// Sequence mode pushes many gradient entries down to ~1e-8, where central
// differences carry ~1e-11 absolute noise; compare with a combined bound.
#[test]
fn sequence_mode_model_gradients() {
    for seed in [1, 42, 1337] {
        let cfg = SuiteConfig {
            seed,
            ..Default::default()
        };
        let r = check_model(&cfg, &tiny_model(LstmInputMode::SequenceTBy32), 1e-4).unwrap();
        for t in &r.tensors {
            let diff = (t.analytic_at_worst - t.numeric_at_worst).abs();
            assert!(
                diff <= 1e-9 + 1e-4 * t.numeric_at_worst.abs(),
                "seed {seed} {}: analytic {} numeric {}",
                t.name,
                t.analytic_at_worst,
                t.numeric_at_worst
            );
        }
    }
}

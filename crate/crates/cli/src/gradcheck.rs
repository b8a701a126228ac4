use fnwl_core::gradsuite::{run_suite, SuiteConfig};
use serde::{Deserialize, Serialize};

use crate::error::{code, CliError, Context};
use crate::settings::{fill_from, section, ConfigFile};

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    #[arg(long, env = "FNWL_SEED")]
    pub seed: Option<u64>,
    /// Relative-error tolerance for every check, overriding the per-layer
    /// and full-model defaults.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Central-difference step.
    #[arg(long)]
    pub step: Option<f64>,
}

pub fn run(mut a: Args, file: &ConfigFile) -> Result<i32, CliError> {
    let f: Args = section(&file.gradcheck, "gradcheck")?;
    fill_from!(a, f, [seed, tol, step]);
    let d = SuiteConfig::default();
    let cfg = SuiteConfig {
        seed: a.seed.unwrap_or(d.seed),
        step: a.step.unwrap_or(d.step),
        layer_tolerance: a.tol.unwrap_or(d.layer_tolerance),
        model_tolerance: a.tol.unwrap_or(d.model_tolerance),
        ..d
    };
    if !(cfg.step > 0.0 && cfg.layer_tolerance >= 0.0) {
        return Err(CliError::Usage(
            "gradcheck: --step must be positive and --tol non-negative".into(),
        ));
    }
    let entries = run_suite(&cfg).context("gradient suite")?;
    let mut failed = 0;
    for e in &entries {
        let status = if e.passed() { "ok" } else { "FAIL" };
        println!(
            "{status:4} {:28} max rel err {:.3e} (tol {:.1e})",
            e.check,
            e.report.max_rel_error(),
            e.report.tolerance
        );
        for t in e.report.failures() {
            failed += 1;
            println!(
                "     {}: relative error {:.3e} at flat index {} (analytic {:.6e}, numeric {:.6e})",
                t.name,
                t.max_rel_error,
                t.worst_index.map_or("-".to_string(), |i| i.to_string()),
                t.analytic_at_worst,
                t.numeric_at_worst
            );
        }
    }
    if failed > 0 {
        println!("{failed} parameter tensors exceeded tolerance");
        Ok(code::CHECK_FAILED)
    } else {
        println!("all {} checks passed", entries.len());
        Ok(code::OK)
    }
}

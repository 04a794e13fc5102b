use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use eigensel::io::{read_json, ResultsFile};
use eigensel::{ExtendedScalar, C64};

use crate::CliResult;

fn complex(z: C64) -> String {
    format!("{:+.10e} {:+.10e}i", z.re, z.im)
}

fn config_summary(config: &serde_json::Value) -> String {
    let opts = config.get("pep").or_else(|| config.get("mep")).cloned().unwrap_or_default();
    let field = |k: &str| opts.get(k).map(|v| v.to_string()).unwrap_or_else(|| "?".into());
    let mut s = format!(
        "eta = {}  tol = {}  target = {}  num_pairs = {}  dims = {}/{}",
        field("eta_sel"),
        field("tol"),
        field("target"),
        field("num_pairs"),
        field("mindim"),
        field("maxdim")
    );
    if let Some(m) = opts.get("mode") {
        let _ = write!(s, "  mode = {m}");
    }
    if let Some(c) = opts.get("criterion") {
        let _ = write!(s, "  criterion = {c}");
    }
    s
}

/// Human-readable table of a results file.
pub fn format(results: &ResultsFile) -> String {
    let mut s = String::new();
    match results {
        ResultsFile::Pep(r) => {
            let _ = writeln!(s, "{}", config_summary(&r.config));
            let _ = writeln!(
                s,
                "found {} eigenvalues in {} iterations{}",
                r.triplets.len(),
                r.iterations,
                if r.truncated { " (truncated)" } else { "" }
            );
            let _ = writeln!(s, "{:>3}  {:<38}  {:>10}  {:>10}  {:>5}", "#", "eigenvalue", "residual", "cond", "iter");
            for (i, t) in r.triplets.iter().enumerate() {
                let value = match t.value.to_extended() {
                    ExtendedScalar::Finite(z) => complex(z),
                    ExtendedScalar::Infinite => "inf".to_string(),
                };
                let _ = writeln!(s, "{:>3}  {value:<38}  {:>10.3e}  {:>10.3e}  {:>5}", i + 1, t.residual, t.cond, t.iteration);
            }
            for w in &r.warnings {
                let _ = writeln!(s, "warning: {w}");
            }
        }
        ResultsFile::Mep(r) => {
            let _ = writeln!(s, "{}", config_summary(&r.config));
            let _ = writeln!(
                s,
                "found {} eigenvalues in {} iterations{}",
                r.triplets.len(),
                r.iterations,
                if r.truncated { " (truncated)" } else { "" }
            );
            for (i, t) in r.triplets.iter().enumerate() {
                let residual = t.residuals.iter().copied().fold(0.0, f64::max);
                let idx = match r.indices.get(i) {
                    Some(Some(v)) => format!("{v:?}"),
                    _ => "-".into(),
                };
                let _ = writeln!(s, "{:>3}  residual {residual:.3e}  indices {idx}  iter {}", i + 1, t.iteration);
                for (j, z) in t.value.iter().enumerate() {
                    let _ = writeln!(s, "       p{} = {}", j + 1, complex(*z));
                }
            }
            for w in &r.warnings {
                let _ = writeln!(s, "warning: {w}");
            }
        }
    }
    s
}

pub fn run(path: &Path) -> CliResult {
    let results: ResultsFile = read_json(path).with_context(|| format!("reading {}", path.display()))?;
    print!("{}", format(&results));
    let config = match &results {
        ResultsFile::Pep(r) => &r.config,
        ResultsFile::Mep(r) => &r.config,
    };
    println!("configuration:");
    println!("{}", serde_json::to_string_pretty(config).map_err(anyhow::Error::from)?);
    Ok(())
}

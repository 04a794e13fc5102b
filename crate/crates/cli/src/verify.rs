use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::Args;
use eigensel::dense::norm;
use eigensel::homogeneous::hom_weights;
use eigensel::io::{load_problem, read_json, LoadedProblem, MepResults, PepResults, ResultsFile};
use eigensel::jdsolver::DUPLICATE_TOL;
use eigensel::mep::{dense_solve, LinearMep};
use eigensel::oracle::{nearest_finite, oracle_eigenvalues, OracleEigenvalue};
use eigensel::{EigenTriplet, EigenValue, Error, ExtendedScalar, PolyProblem, C64};

use crate::{CliResult, Failure};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Problem manifest; defaults to the one recorded in the results.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub results: PathBuf,
    /// Residual tolerance; defaults to the tolerance of the run. Recomputed
    /// residuals may exceed it by a factor of 2.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Distance to the nearest oracle eigenvalue (relative, or chordal for
    /// infinite values) accepted as a match. Defaults to `max(1e-6, sqrt(tol))`.
    #[arg(long)]
    pub match_tol: Option<f64>,
}

/// Running tally of failed checks.
#[derive(Default)]
struct Checks {
    failed: usize,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl std::fmt::Display) {
        println!("{} {what}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn config_tol(config: &serde_json::Value) -> Option<f64> {
    config.get("pep").or_else(|| config.get("mep"))?.get("tol")?.as_f64()
}

fn relative_gap(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn recomputed_residual(q: &PolyProblem, t: &EigenTriplet) -> f64 {
    let w = match t.value {
        EigenValue::Scalar(z) => q.eval_weights(z),
        EigenValue::Projective(p) => hom_weights(q.degree(), &p),
    };
    let scale: f64 = q.norms1().iter().zip(&w).map(|(a, wi)| a * wi.norm()).sum();
    norm(q.combination_apply(&w, t.right.as_ref()).as_ref()) / (scale * norm(t.right.as_ref())).max(f64::MIN_POSITIVE)
}

fn oracle_distance(t: &EigenTriplet, o: &OracleEigenvalue) -> f64 {
    match (t.value.to_extended(), o.value) {
        (ExtendedScalar::Finite(a), ExtendedScalar::Finite(b)) => relative_gap(a, b),
        _ => t.value.to_point().chordal_distance(&o.point),
    }
}

fn verify_pep(q: &PolyProblem, r: &PepResults, tol: f64, match_tol: f64, checks: &mut Checks) -> anyhow::Result<()> {
    for (i, t) in r.triplets.iter().enumerate() {
        let res = recomputed_residual(q, t);
        checks.check(res <= 2.0 * tol, format_args!("triplet {}: residual {res:.3e} (tolerance {tol:.1e})", i + 1));
    }
    for (i, a) in r.triplets.iter().enumerate() {
        for (j, b) in r.triplets.iter().enumerate().skip(i + 1) {
            if a.value.same_as(&b.value, DUPLICATE_TOL) {
                checks.check(false, format_args!("triplets {} and {} coincide", i + 1, j + 1));
            }
        }
    }
    let oracle = match oracle_eigenvalues(q) {
        Ok(o) => o,
        Err(Error::SizeCap { size, cap }) => {
            println!("notice: oracle check skipped, linearization size {size} exceeds cap {cap} (EIGENSEL_ORACLE_CAP)");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let mut matched = Vec::new();
    for (i, t) in r.triplets.iter().enumerate() {
        let (k, d) = oracle
            .iter()
            .enumerate()
            .map(|(k, o)| (k, oracle_distance(t, o)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| anyhow!("oracle returned no eigenvalues"))?;
        checks.check(d <= match_tol, format_args!("triplet {}: distance to oracle {d:.3e}", i + 1));
        matched.push(k);
    }
    let target = r
        .config
        .get("pep")
        .and_then(|p| p.get("target"))
        .and_then(|t| serde_json::from_value::<[f64; 2]>(t.clone()).ok())
        .map(|[re, im]| C64::new(re, im))
        .unwrap_or_default();
    let nearest = nearest_finite(&oracle, target, 1e-12);
    let wanted = nearest.iter().take(r.triplets.len());
    let is_nearest = wanted.clone().all(|z| {
        matched.iter().any(|&k| oracle[k].value.finite().is_some_and(|m| relative_gap(m, *z) <= match_tol))
    });
    println!(
        "info: the found set {} the {} finite eigenvalues nearest to the target",
        if is_nearest { "equals" } else { "differs from" },
        r.triplets.len()
    );
    Ok(())
}

fn verify_mep(mep: &LinearMep, r: &MepResults, tol: f64, match_tol: f64, checks: &mut Checks) -> anyhow::Result<()> {
    let gap = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| relative_gap(*x, *y)).fold(0.0, f64::max);
    for (i, t) in r.triplets.iter().enumerate() {
        let res = mep.residual(&t.value, &t.right);
        checks.check(res <= 2.0 * tol, format_args!("triplet {}: residual {res:.3e} (tolerance {tol:.1e})", i + 1));
    }
    for (i, a) in r.triplets.iter().enumerate() {
        for (j, b) in r.triplets.iter().enumerate().skip(i + 1) {
            if gap(&a.value, &b.value) <= DUPLICATE_TOL {
                checks.check(false, format_args!("triplets {} and {} coincide", i + 1, j + 1));
            }
        }
    }
    let oracle = match dense_solve(mep) {
        Ok(o) => o,
        Err(Error::SizeCap { size, cap }) => {
            println!("notice: oracle check skipped, operator size {size} exceeds cap {cap} (EIGENSEL_ORACLE_CAP)");
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    for (i, t) in r.triplets.iter().enumerate() {
        let d = oracle.iter().map(|o| gap(&t.value, &o.value)).fold(f64::INFINITY, f64::min);
        checks.check(d <= match_tol, format_args!("triplet {}: distance to oracle {d:.3e}", i + 1));
    }
    Ok(())
}

pub fn run(args: &VerifyArgs) -> CliResult {
    let results: ResultsFile =
        read_json(&args.results).with_context(|| format!("reading {}", args.results.display()))?;
    let config = match &results {
        ResultsFile::Pep(r) => &r.config,
        ResultsFile::Mep(r) => &r.config,
    };
    let problem_path = args
        .problem
        .clone()
        .or_else(|| config.get("problem").and_then(|p| p.as_str()).map(PathBuf::from))
        .ok_or_else(|| Failure::Other(anyhow!("--problem is required (results record no problem)")))?;
    let tol = args.tol.or_else(|| config_tol(config)).unwrap_or(1e-8);
    let match_tol = args.match_tol.unwrap_or(tol.sqrt().max(1e-6));
    let (_, problem) = load_problem(&problem_path).with_context(|| format!("loading {}", problem_path.display()))?;
    let mut checks = Checks::default();
    match (&problem, &results) {
        (LoadedProblem::Pep(q), ResultsFile::Pep(r)) => verify_pep(q, r, tol, match_tol, &mut checks)?,
        (LoadedProblem::Mep(m), ResultsFile::Mep(r)) => verify_mep(m, r, tol, match_tol, &mut checks)?,
        _ => return Err(Failure::Other(anyhow!("results and problem are of different kinds"))),
    }
    if checks.failed > 0 {
        println!("{} check(s) failed", checks.failed);
        return Err(Failure::Verification);
    }
    println!("all checks passed");
    Ok(())
}

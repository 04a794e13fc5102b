use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{ArgAction, Args};
use eigensel::dense::c64;
use eigensel::io::{load_problem, write_json, LoadedProblem, MepResults, PepResults, ResultsFile};
use eigensel::jdsolver::records_to_csv;
use eigensel::mep::{mep_records_to_csv, mep_subspace_solve, oscillation_index, real_profile, MepCriterion, MepOptions, MepTriplet};
use eigensel::{jd_solve, Extraction, JDOptions, SelectionMode};
use serde::{Deserialize, Serialize};

use crate::{report, CliResult, Failure};

/// Everything needed to repeat a run. It is embedded verbatim as the
/// `config` of the results file and can be passed back with `--config`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    /// Problem manifest the run read.
    pub problem: PathBuf,
    /// Generator that produced the problem, copied from its manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pep: Option<JDOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mep: Option<MepOptions>,
    pub out: PathBuf,
    pub seed: u64,
}

#[derive(Args, Debug, Default)]
pub struct SolveArgs {
    /// Problem manifest (JSON) written by `generate` or by hand.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Earlier run configuration (the `config` of a results file, or a
    /// standalone run manifest). Flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Target as `RE IM`. Multiparameter problems take one pair per
    /// parameter, or a single pair used for every parameter.
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], action = ArgAction::Append, allow_negative_numbers = true)]
    pub target: Vec<f64>,
    #[arg(long)]
    pub num_pairs: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub mindim: Option<usize>,
    #[arg(long)]
    pub maxdim: Option<usize>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub inner_steps: Option<usize>,
    /// Selection threshold η.
    #[arg(long)]
    pub eta: Option<f64>,
    /// `standard` or `homogeneous` (one-parameter problems).
    #[arg(long)]
    pub mode: Option<SelectionMode>,
    /// `ritz`, `gal1` or `gal1_refined` (one-parameter problems).
    #[arg(long)]
    pub extraction: Option<Extraction>,
    /// `relative` or `strict` (multiparameter problems).
    #[arg(long)]
    pub criterion: Option<MepCriterion>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disable the LU preconditioner in the correction equation.
    #[arg(long)]
    pub no_precondition: bool,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Default subspace sizes shrunk to fit a problem of size `n`, unless the
/// user set them.
fn clamp_dims(mindim: Option<usize>, maxdim: Option<usize>, defaults: (usize, usize), n: usize) -> (usize, usize) {
    let maxdim = maxdim.unwrap_or(defaults.1.min(n));
    let mindim = mindim.unwrap_or(defaults.0.min(maxdim.saturating_sub(1)));
    (mindim, maxdim)
}

fn target_pairs(flat: &[f64]) -> Vec<[f64; 2]> {
    flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

fn pep_options(args: &SolveArgs, base: Option<JDOptions>, n: usize) -> anyhow::Result<JDOptions> {
    let had_base = base.is_some();
    let mut o = base.unwrap_or_default();
    let targets = target_pairs(&args.target);
    match targets.as_slice() {
        [] => {}
        [t] => o.target = c64(t[0], t[1]),
        _ => return Err(anyhow!("one-parameter problems take a single --target")),
    }
    if args.criterion.is_some() {
        return Err(anyhow!("--criterion applies to multiparameter problems only"));
    }
    if let Some(v) = args.num_pairs {
        o.num_pairs = v;
    }
    if let Some(v) = args.tol {
        o.tol = v;
    }
    if had_base {
        o.mindim = args.mindim.unwrap_or(o.mindim);
        o.maxdim = args.maxdim.unwrap_or(o.maxdim);
    } else {
        (o.mindim, o.maxdim) = clamp_dims(args.mindim, args.maxdim, (o.mindim, o.maxdim), n);
    }
    if let Some(v) = args.max_outer {
        o.max_outer = v;
    }
    if let Some(v) = args.inner_steps {
        o.inner_steps = v;
    }
    if let Some(v) = args.eta {
        o.eta_sel = v;
    }
    if let Some(v) = args.mode {
        o.mode = v;
    }
    if let Some(v) = args.extraction {
        o.extraction = v;
    }
    if let Some(v) = args.seed {
        o.seed = v;
    }
    if args.no_precondition {
        o.precondition = false;
    }
    o.validate(n)?;
    Ok(o)
}

fn mep_options(args: &SolveArgs, base: Option<MepOptions>, k: usize, n: usize) -> anyhow::Result<MepOptions> {
    let had_base = base.is_some();
    let mut o = base.unwrap_or_default();
    let targets = target_pairs(&args.target);
    match targets.len() {
        0 => {}
        1 => o.target = vec![targets[0]; k],
        len if len == k => o.target = targets,
        len => return Err(anyhow!("got {len} targets for a {k}-parameter problem")),
    }
    if o.target.is_empty() {
        o.target = vec![[0.0, 0.0]; k];
    }
    if args.mode.is_some() || args.extraction.is_some() {
        return Err(anyhow!("--mode and --extraction apply to one-parameter problems only"));
    }
    if let Some(v) = args.num_pairs {
        o.num_pairs = v;
    }
    if let Some(v) = args.tol {
        o.tol = v;
    }
    if had_base {
        o.mindim = args.mindim.unwrap_or(o.mindim);
        o.maxdim = args.maxdim.unwrap_or(o.maxdim);
    } else {
        (o.mindim, o.maxdim) = clamp_dims(args.mindim, args.maxdim, (o.mindim, o.maxdim), n);
    }
    if let Some(v) = args.max_outer {
        o.max_outer = v;
    }
    if let Some(v) = args.inner_steps {
        o.inner_steps = v;
    }
    if let Some(v) = args.eta {
        o.eta_sel = v;
    }
    if let Some(v) = args.criterion {
        o.criterion = v;
    }
    if let Some(v) = args.seed {
        o.seed = v;
    }
    if args.no_precondition {
        o.precondition = false;
    }
    Ok(o)
}

/// Oscillation indices of each factor, or `None` when some factor is not
/// real up to a global phase.
fn indices(t: &MepTriplet) -> Option<Vec<usize>> {
    t.right
        .iter()
        .map(|x| {
            let profile = real_profile(x.as_ref());
            let real_mass: f64 = profile.iter().map(|v| v * v).sum();
            let total: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            (real_mass >= (1.0 - 1e-8) * total).then(|| oscillation_index(&profile))
        })
        .collect()
}

fn jsonl<T: Serialize>(items: &[T]) -> anyhow::Result<String> {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it)?);
        s.push('\n');
    }
    Ok(s)
}

fn write_outputs(out: &Path, results: &ResultsFile, csv: &str, jsonl: &str) -> anyhow::Result<()> {
    write_json(out.join("results.json"), results).context("writing results.json")?;
    fs::write(out.join("convergence.csv"), csv).context("writing convergence.csv")?;
    fs::write(out.join("convergence.jsonl"), jsonl).context("writing convergence.jsonl")?;
    fs::write(out.join("report.txt"), report::format(results)).context("writing report.txt")?;
    Ok(())
}

pub fn run(args: &SolveArgs) -> CliResult {
    let base: Option<RunManifest> = match &args.config {
        Some(p) => Some(eigensel::io::read_json(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let problem_path = args
        .problem
        .clone()
        .or_else(|| base.as_ref().map(|b| b.problem.clone()))
        .ok_or_else(|| Failure::Other(anyhow!("--problem is required")))?;
    let out = args
        .out
        .clone()
        .or_else(|| base.as_ref().map(|b| b.out.clone()))
        .ok_or_else(|| Failure::Other(anyhow!("--out is required")))?;
    let (manifest, problem) =
        load_problem(&problem_path).with_context(|| format!("loading {}", problem_path.display()))?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let (results, csv, lines) = match problem {
        LoadedProblem::Pep(q) => {
            let opts = pep_options(args, base.and_then(|b| b.pep), q.dim()).map_err(Failure::Other)?;
            let run = RunManifest {
                problem: problem_path,
                generator: manifest.generator().cloned(),
                pep: Some(opts.clone()),
                mep: None,
                out: out.clone(),
                seed: opts.seed,
            };
            let outcome = jd_solve(&q, &opts)?;
            let csv = records_to_csv(&outcome.records);
            let lines = jsonl(&outcome.records)?;
            let results = ResultsFile::Pep(PepResults {
                config: serde_json::to_value(&run).map_err(anyhow::Error::from)?,
                triplets: outcome.triplets,
                truncated: outcome.truncated,
                iterations: outcome.iterations,
                warnings: outcome.warnings,
            });
            (results, csv, lines)
        }
        LoadedProblem::Mep(mep) => {
            let nmin = mep.dims().into_iter().min().unwrap_or(0);
            let opts = mep_options(args, base.and_then(|b| b.mep), mep.nparams(), nmin).map_err(Failure::Other)?;
            opts.validate(&mep)?;
            let run = RunManifest {
                problem: problem_path,
                generator: manifest.generator().cloned(),
                pep: None,
                mep: Some(opts.clone()),
                out: out.clone(),
                seed: opts.seed,
            };
            let outcome = mep_subspace_solve(&mep, &opts)?;
            let csv = mep_records_to_csv(&outcome.records);
            let lines = jsonl(&outcome.records)?;
            let results = ResultsFile::Mep(MepResults {
                config: serde_json::to_value(&run).map_err(anyhow::Error::from)?,
                indices: outcome.triplets.iter().map(indices).collect(),
                triplets: outcome.triplets,
                truncated: outcome.truncated,
                iterations: outcome.iterations,
                warnings: outcome.warnings,
            });
            (results, csv, lines)
        }
    };
    write_outputs(&out, &results, &csv, &lines)?;
    print!("{}", report::format(&results));
    let truncated = match &results {
        ResultsFile::Pep(r) => r.truncated,
        ResultsFile::Mep(r) => r.truncated,
    };
    if truncated {
        return Err(Failure::Truncated);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dims_shrink_to_the_problem() {
        assert_eq!(clamp_dims(None, None, (10, 20), 100), (10, 20));
        assert_eq!(clamp_dims(None, None, (10, 20), 4), (3, 4));
        assert_eq!(clamp_dims(None, Some(6), (10, 20), 50), (5, 6));
        assert_eq!(clamp_dims(Some(2), None, (10, 20), 3), (2, 3));
    }

    #[test]
    fn one_target_is_broadcast_to_every_parameter() {
        let args = SolveArgs { target: vec![1.0, -2.0], ..Default::default() };
        let o = mep_options(&args, None, 3, 10).unwrap();
        assert_eq!(o.target, vec![[1.0, -2.0]; 3]);
        let args = SolveArgs { target: vec![1.0, 0.0, 2.0, 0.0], ..Default::default() };
        assert!(mep_options(&args, None, 3, 10).is_err());
    }

    #[test]
    fn flags_override_a_stored_configuration() {
        let base = JDOptions { mindim: 3, maxdim: 8, eta_sel: 0.2, ..Default::default() };
        let args = SolveArgs { eta: Some(0.01), ..Default::default() };
        let o = pep_options(&args, Some(base), 10).unwrap();
        assert_eq!((o.mindim, o.maxdim, o.eta_sel), (3, 8, 0.01));
    }
}

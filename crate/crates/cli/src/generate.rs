use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use eigensel::io::{write_mep, write_pep};
use eigensel::mep::gen_fourpoint_bvp;
use eigensel::problems::{gen_example_2x2, gen_gyroscopic, gen_random_pep};
use serde_json::json;

use crate::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Kind {
    /// Gyroscopic QEP with tridiagonal damping and a singular mass matrix.
    Gyroscopic,
    /// Dense polynomial with Gaussian coefficients.
    RandomPep,
    /// The 2×2 pencil with nearly shared eigenvectors.
    Example2x2,
    /// Three-parameter four-point boundary value problem.
    Fourpoint,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    /// Problem size (collocation order for `fourpoint`).
    #[arg(short, long)]
    pub n: Option<usize>,
    /// Polynomial degree for `random_pep`.
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Symmetrize the coefficients of `random_pep`.
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// File name stem; defaults to the kind.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

pub fn run(args: &GenerateArgs) -> CliResult {
    let stem = match &args.name {
        Some(n) => n.clone(),
        None => args.kind.to_possible_value().expect("no skipped variants").get_name().to_string(),
    };
    let manifest = match args.kind {
        Kind::Gyroscopic => {
            let n = args.n.unwrap_or(200);
            let q = gen_gyroscopic(n, args.seed)?;
            write_pep(&args.out, &stem, &q, Some(json!({"name": "gyroscopic", "n": n, "seed": args.seed})))?
        }
        Kind::RandomPep => {
            let n = args.n.unwrap_or(20);
            let q = gen_random_pep(n, args.degree, args.seed, args.symmetric)?;
            let gen = json!({
                "name": "random_pep", "n": n, "degree": args.degree, "seed": args.seed, "symmetric": args.symmetric
            });
            write_pep(&args.out, &stem, &q, Some(gen))?
        }
        Kind::Example2x2 => {
            if args.n.is_some_and(|n| n != 2) {
                return Err(anyhow!("example2x2 is always 2×2").into());
            }
            let q = gen_example_2x2(args.delta, args.epsilon);
            let gen = json!({"name": "example2x2", "delta": args.delta, "epsilon": args.epsilon});
            write_pep(&args.out, &stem, &q, Some(gen))?
        }
        Kind::Fourpoint => {
            let n = args.n.unwrap_or(100);
            let mep = gen_fourpoint_bvp(n)?;
            write_mep(&args.out, &stem, &mep, Some(json!({"name": "fourpoint", "n": n})))?
        }
    };
    println!("{}", manifest.display());
    Ok(())
}

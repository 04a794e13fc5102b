//! File formats: Matrix Market matrices, JSON problem manifests and JSON
//! result files.
//!
//! A problem on disk is a manifest plus one Matrix Market file per
//! coefficient. Paths inside a manifest are relative to the manifest's
//! directory.
//!
//! ```json
//! { "kind": "pep", "degree": 2, "coefficients": ["gyro_A0.mtx", "gyro_A1.mtx", "gyro_A2.mtx"] }
//! { "kind": "mep", "equations": [["bvp_1_A.mtx", "bvp_1_B.mtx", "bvp_1_C.mtx", "bvp_1_D.mtx"], …] }
//! ```
//!
//! For a polynomial problem `coefficients[i]` is `A_i` in `Σ λ^i A_i`. For a
//! multiparameter problem each equation lists `A_i` followed by the matrices
//! multiplying `λ`, `μ` (and `ν`). Complex numbers in JSON are always
//! `[re, im]` pairs.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::dense::{c64, C64};
use crate::error::{Error, Result};
use crate::mep::{LinearMep, MepEquation, MepTriplet};
use crate::problems::PolyProblem;
use crate::selection::EigenTriplet;
use crate::sparse::{CoeffMatrix, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
    Integer,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
    SkewSymmetric,
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn parse_header(line: &str) -> Result<(Format, Field, Symmetry)> {
    let words: Vec<String> = line.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(1, "expected `%%MatrixMarket matrix <format> <field> <symmetry>`"));
    }
    let format = match words[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        other => return Err(parse_err(1, format!("unknown format `{other}`"))),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "complex" => Field::Complex,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(1, format!("unknown field `{other}`"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(1, format!("unknown symmetry `{other}`"))),
    };
    if format == Format::Array && field == Field::Pattern {
        return Err(parse_err(1, "pattern matrices must use coordinate format"));
    }
    if symmetry == Symmetry::Hermitian && field != Field::Complex {
        return Err(parse_err(1, "hermitian symmetry requires a complex field"));
    }
    Ok((format, field, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("cannot parse {what} `{tok}`")))
}

fn parse_value<'a>(toks: &mut impl Iterator<Item = &'a str>, field: Field, line: usize) -> Result<C64> {
    Ok(match field {
        Field::Pattern => C64::from(1.0),
        Field::Real | Field::Integer => c64(parse_num(toks.next(), line, "value")?, 0.0),
        Field::Complex => {
            let re = parse_num(toks.next(), line, "real part")?;
            let im = parse_num(toks.next(), line, "imaginary part")?;
            c64(re, im)
        }
    })
}

fn mirror(sym: Symmetry, z: C64) -> C64 {
    match sym {
        Symmetry::General | Symmetry::Symmetric => z,
        Symmetry::Hermitian => z.conj(),
        Symmetry::SkewSymmetric => -z,
    }
}

/// Parses a Matrix Market stream. Coordinate files become sparse matrices,
/// array files dense ones; symmetric storage is expanded.
pub fn read_matrix_market_from<R: Read>(reader: R) -> Result<CoeffMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => return Err(parse_err(1, "empty file")),
    };
    let (format, field, symmetry) = parse_header(&header)?;

    let mut data = Vec::new();
    for (idx, l) in lines {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        data.push((idx + 1, l));
    }
    let mut rows = data.into_iter();
    let (size_line, size) = rows.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let mut toks = size.split_whitespace();
    let nrows: usize = parse_num(toks.next(), size_line, "row count")?;
    let ncols: usize = parse_num(toks.next(), size_line, "column count")?;
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }

    match format {
        Format::Coordinate => {
            let nnz: usize = parse_num(toks.next(), size_line, "entry count")?;
            let mut trip = Vec::with_capacity(if symmetry == Symmetry::General { nnz } else { 2 * nnz });
            for _ in 0..nnz {
                let (ln, row) = rows.next().ok_or_else(|| parse_err(size_line, format!("expected {nnz} entries")))?;
                let mut toks = row.split_whitespace();
                let i: usize = parse_num(toks.next(), ln, "row index")?;
                let j: usize = parse_num(toks.next(), ln, "column index")?;
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(parse_err(ln, format!("index ({i}, {j}) outside {nrows}×{ncols}")));
                }
                let z = parse_value(&mut toks, field, ln)?;
                let (i, j) = (i - 1, j - 1);
                if symmetry != Symmetry::General && j > i {
                    return Err(parse_err(ln, "symmetric storage lists the lower triangle only"));
                }
                if symmetry == Symmetry::SkewSymmetric && i == j {
                    return Err(parse_err(ln, "skew-symmetric storage has no diagonal"));
                }
                trip.push((i, j, z));
                if symmetry != Symmetry::General && i != j {
                    trip.push((j, i, mirror(symmetry, z)));
                }
            }
            if let Some((ln, _)) = rows.next() {
                return Err(parse_err(ln, "trailing data after the last entry"));
            }
            Ok(CsrMatrix::from_triplets(nrows, ncols, &trip)?.into())
        }
        Format::Array => {
            let mut m = Mat::<C64>::zeros(nrows, ncols);
            let mut slots = Vec::new();
            for j in 0..ncols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::SkewSymmetric => j + 1,
                    _ => j,
                };
                for i in start..nrows {
                    slots.push((i, j));
                }
            }
            // Values may be spread over lines arbitrarily.
            let mut last_line = size_line;
            let mut tokens = Vec::new();
            for (ln, row) in rows {
                tokens.extend(row.split_whitespace().map(|t| (ln, t.to_string())));
                last_line = ln;
            }
            let per = if field == Field::Complex { 2 } else { 1 };
            if tokens.len() != per * slots.len() {
                return Err(parse_err(last_line, format!("expected {} values, found {}", per * slots.len(), tokens.len())));
            }
            for (k, &(i, j)) in slots.iter().enumerate() {
                let chunk = &tokens[per * k..per * (k + 1)];
                let ln = chunk[0].0;
                let z = parse_value(&mut chunk.iter().map(|t| t.1.as_str()), field, ln)?;
                m[(i, j)] = z;
                if symmetry != Symmetry::General && i != j {
                    m[(j, i)] = mirror(symmetry, z);
                }
            }
            Ok(m.into())
        }
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CoeffMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_matrix_market_from(file).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Renders a matrix in Matrix Market format: sparse matrices as `coordinate`,
/// dense ones as `array`, with a `real` field whenever every entry is real.
/// Values use the shortest representation that reads back exactly.
pub fn matrix_market_string(m: &CoeffMatrix) -> String {
    let mut out = String::new();
    match m {
        CoeffMatrix::Sparse(s) => {
            let trip: Vec<_> = s.triplets().collect();
            let real = trip.iter().all(|t| t.2.im == 0.0);
            let field = if real { "real" } else { "complex" };
            let _ = writeln!(out, "%%MatrixMarket matrix coordinate {field} general");
            let _ = writeln!(out, "{} {} {}", s.nrows(), s.ncols(), trip.len());
            for (i, j, z) in trip {
                if real {
                    let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, z.re);
                } else {
                    let _ = writeln!(out, "{} {} {:e} {:e}", i + 1, j + 1, z.re, z.im);
                }
            }
        }
        CoeffMatrix::Dense(d) => {
            let real = (0..d.ncols()).all(|j| (0..d.nrows()).all(|i| d[(i, j)].im == 0.0));
            let field = if real { "real" } else { "complex" };
            let _ = writeln!(out, "%%MatrixMarket matrix array {field} general");
            let _ = writeln!(out, "{} {}", d.nrows(), d.ncols());
            for j in 0..d.ncols() {
                for i in 0..d.nrows() {
                    let z = d[(i, j)];
                    if real {
                        let _ = writeln!(out, "{:e}", z.re);
                    } else {
                        let _ = writeln!(out, "{:e} {:e}", z.re, z.im);
                    }
                }
            }
        }
    }
    out
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &CoeffMatrix) -> Result<()> {
    fs::write(path, matrix_market_string(m))?;
    Ok(())
}

/// JSON manifest describing a problem stored as Matrix Market files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemManifest {
    Pep {
        degree: usize,
        coefficients: Vec<PathBuf>,
        /// How the files were produced, if by a built-in generator.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator: Option<serde_json::Value>,
    },
    Mep {
        equations: Vec<Vec<PathBuf>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator: Option<serde_json::Value>,
    },
}

impl ProblemManifest {
    pub fn generator(&self) -> Option<&serde_json::Value> {
        match self {
            Self::Pep { generator, .. } | Self::Mep { generator, .. } => generator.as_ref(),
        }
    }

    /// All referenced files, in manifest order.
    pub fn files(&self) -> Vec<&Path> {
        match self {
            Self::Pep { coefficients, .. } => coefficients.iter().map(PathBuf::as_path).collect(),
            Self::Mep { equations, .. } => equations.iter().flatten().map(PathBuf::as_path).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Pep { degree, coefficients, .. } => {
                if *degree == 0 || coefficients.len() != degree + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "degree {degree} needs {} coefficient files, manifest lists {}",
                        degree + 1,
                        coefficients.len()
                    )));
                }
            }
            Self::Mep { equations, .. } => {
                let k = equations.len();
                if !(2..=3).contains(&k) {
                    return Err(Error::InvalidArgument(format!("{k} equations; expected 2 or 3")));
                }
                if let Some(bad) = equations.iter().find(|e| e.len() != k + 1) {
                    return Err(Error::InvalidArgument(format!(
                        "each equation needs {} matrices, found {}",
                        k + 1,
                        bad.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A problem loaded from a manifest.
#[derive(Clone, Debug)]
pub enum LoadedProblem {
    Pep(PolyProblem),
    Mep(LinearMep),
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<ProblemManifest> {
    let text = fs::read_to_string(path.as_ref())?;
    let m: ProblemManifest = serde_json::from_str(&text)?;
    m.validate()?;
    Ok(m)
}

fn base_dir(manifest_path: &Path) -> &Path {
    manifest_path.parent().unwrap_or_else(|| Path::new("."))
}

/// Reads a manifest and every matrix it references.
pub fn load_problem(path: impl AsRef<Path>) -> Result<(ProblemManifest, LoadedProblem)> {
    let path = path.as_ref();
    let manifest = read_manifest(path)?;
    let base = base_dir(path);
    let problem = match &manifest {
        ProblemManifest::Pep { coefficients, .. } => {
            let coeffs = coefficients.iter().map(|f| read_matrix_market(base.join(f))).collect::<Result<Vec<_>>>()?;
            LoadedProblem::Pep(PolyProblem::new(coeffs)?)
        }
        ProblemManifest::Mep { equations, .. } => {
            let mut eqs = Vec::with_capacity(equations.len());
            for files in equations {
                let mut mats = files
                    .iter()
                    .map(|f| read_matrix_market(base.join(f)).map(|m| m.to_dense()))
                    .collect::<Result<Vec<_>>>()?;
                let a = mats.remove(0);
                eqs.push(MepEquation::new(a, mats)?);
            }
            LoadedProblem::Mep(LinearMep::new(eqs)?)
        }
    };
    Ok((manifest, problem))
}

/// Writes `{stem}_A{i}.mtx` for every coefficient and `{stem}.json`; returns
/// the manifest path.
pub fn write_pep(dir: impl AsRef<Path>, stem: &str, problem: &PolyProblem, generator: Option<serde_json::Value>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut coefficients = Vec::with_capacity(problem.degree() + 1);
    for (i, c) in problem.coeffs().iter().enumerate() {
        let name = PathBuf::from(format!("{stem}_A{i}.mtx"));
        write_matrix_market(dir.join(&name), c)?;
        coefficients.push(name);
    }
    let manifest = ProblemManifest::Pep { degree: problem.degree(), coefficients, generator };
    let path = dir.join(format!("{stem}.json"));
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Writes `{stem}_{i}_{X}.mtx` (X = A, B, C, D) per equation and
/// `{stem}.json`; returns the manifest path.
pub fn write_mep(dir: impl AsRef<Path>, stem: &str, mep: &LinearMep, generator: Option<serde_json::Value>) -> Result<PathBuf> {
    const NAMES: [&str; 4] = ["A", "B", "C", "D"];
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut equations = Vec::with_capacity(mep.nparams());
    for (i, eq) in mep.equations().iter().enumerate() {
        let mut files = Vec::with_capacity(mep.nparams() + 1);
        let mats = std::iter::once(eq.a()).chain(eq.params().iter());
        for (k, m) in mats.enumerate() {
            let name = PathBuf::from(format!("{stem}_{}_{}.mtx", i + 1, NAMES[k]));
            write_matrix_market(dir.join(&name), &CoeffMatrix::Dense(m.clone()))?;
            files.push(name);
        }
        equations.push(files);
    }
    let manifest = ProblemManifest::Mep { equations, generator };
    let path = dir.join(format!("{stem}.json"));
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Results of a one-parameter solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PepResults {
    /// Effective configuration of the run.
    pub config: serde_json::Value,
    pub triplets: Vec<EigenTriplet>,
    pub truncated: bool,
    pub iterations: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Results of a multiparameter solve. `indices[i]` holds the oscillation
/// indices of triplet `i` when they are meaningful (real Sturm–Liouville
/// type problems).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MepResults {
    pub config: serde_json::Value,
    pub triplets: Vec<MepTriplet>,
    #[serde(default)]
    pub indices: Vec<Option<Vec<usize>>>,
    pub truncated: bool,
    pub iterations: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResultsFile {
    Pep(PepResults),
    Mep(MepResults),
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::random_mat;
    use crate::problems::{gen_gyroscopic, gen_random_pep};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense(m: &CoeffMatrix) -> Mat<C64> {
        m.to_dense()
    }

    fn same(a: &Mat<C64>, b: &Mat<C64>) -> bool {
        a.nrows() == b.nrows() && a.ncols() == b.ncols() && (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)] == b[(i, j)]))
    }

    #[test]
    fn coordinate_symmetric_and_skew() {
        let sym = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2\n3 1 -1.5\n2 2 4e0\n";
        let m = dense(&read_matrix_market_from(sym.as_bytes()).unwrap());
        assert_eq!(m[(0, 2)], c64(-1.5, 0.0));
        assert_eq!(m[(2, 0)], c64(-1.5, 0.0));
        assert_eq!(m[(1, 1)], c64(4.0, 0.0));

        let skew = "%%MatrixMarket matrix coordinate integer skew-symmetric\n2 2 1\n2 1 3\n";
        let m = dense(&read_matrix_market_from(skew.as_bytes()).unwrap());
        assert_eq!(m[(1, 0)], c64(3.0, 0.0));
        assert_eq!(m[(0, 1)], c64(-3.0, 0.0));

        let herm = "%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n1 1 1 0\n2 1 1 2\n";
        let m = dense(&read_matrix_market_from(herm.as_bytes()).unwrap());
        assert_eq!(m[(0, 1)], c64(1.0, -2.0));

        let pat = "%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n";
        let m = read_matrix_market_from(pat.as_bytes()).unwrap();
        assert!(m.is_sparse());
        let m = dense(&m);
        assert_eq!((m.nrows(), m.ncols()), (2, 3));
        assert_eq!(m[(0, 2)], c64(1.0, 0.0));
    }

    #[test]
    fn array_formats() {
        let gen = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3 4\n";
        let m = dense(&read_matrix_market_from(gen.as_bytes()).unwrap());
        assert_eq!(m[(1, 0)], c64(2.0, 0.0));
        assert_eq!(m[(0, 1)], c64(3.0, 0.0));

        let sym = "%%MatrixMarket matrix array complex symmetric\n2 2\n1 1\n2 0\n3 -1\n";
        let m = dense(&read_matrix_market_from(sym.as_bytes()).unwrap());
        assert_eq!(m[(0, 1)], c64(2.0, 0.0));
        assert_eq!(m[(1, 1)], c64(3.0, -1.0));
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        for bad in [
            "",
            "%%MatrixMarket matrix coordinate real general\n",
            "%%MatrixMarket tensor coordinate real general\n1 1 0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n",
            "%%MatrixMarket matrix array real general\n2 2\n1 2 3\n",
            "%%MatrixMarket matrix array pattern general\n1 1\n",
            "%%MatrixMarket matrix coordinate real hermitian\n1 1 1\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 x\n",
        ] {
            assert!(matches!(read_matrix_market_from(bad.as_bytes()), Err(Error::Parse(_))), "{bad:?}");
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let d = random_mat(5, 4, &mut ChaCha8Rng::seed_from_u64(3));
        let back = read_matrix_market_from(matrix_market_string(&CoeffMatrix::Dense(d.clone())).as_bytes()).unwrap();
        assert!(!back.is_sparse());
        assert!(same(&dense(&back), &d));

        let s = CsrMatrix::from_triplets(3, 3, &[(0, 0, c64(0.1, 0.0)), (2, 1, c64(1e-300, 0.0))]).unwrap();
        let text = matrix_market_string(&s.clone().into());
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real general"));
        let back = read_matrix_market_from(text.as_bytes()).unwrap();
        assert!(back.is_sparse());
        assert!(same(&dense(&back), &s.to_dense()));
    }

    #[test]
    fn pep_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let q = gen_gyroscopic(12, 2).unwrap();
        let gen = serde_json::json!({"name": "gyroscopic", "n": 12, "seed": 2});
        let path = write_pep(dir.path(), "gyro", &q, Some(gen.clone())).unwrap();
        let (manifest, loaded) = load_problem(&path).unwrap();
        assert_eq!(manifest.generator(), Some(&gen));
        assert_eq!(manifest.files().len(), 3);
        let LoadedProblem::Pep(back) = loaded else { panic!("expected a PEP") };
        for i in 0..3 {
            assert!(same(&back.coeff(i).to_dense(), &q.coeff(i).to_dense()));
            assert_eq!(back.coeff(i).is_sparse(), q.coeff(i).is_sparse());
        }

        let r = gen_random_pep(4, 3, 1, false).unwrap();
        let path = write_pep(dir.path(), "rnd", &r, None).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"kind\": \"pep\"") && text.contains("\"degree\": 3"));
        let LoadedProblem::Pep(back) = load_problem(&path).unwrap().1 else { panic!() };
        assert!(same(&back.coeff(3).to_dense(), &r.coeff(3).to_dense()));
    }

    #[test]
    fn mep_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mats: Vec<Mat<C64>> = (0..6).map(|_| random_mat(3, 3, &mut rng)).collect();
        let mep = LinearMep::two(
            mats[0].clone(),
            mats[1].clone(),
            mats[2].clone(),
            mats[3].clone(),
            mats[4].clone(),
            mats[5].clone(),
        )
        .unwrap();
        let path = write_mep(dir.path(), "two", &mep, None).unwrap();
        let manifest = read_manifest(&path).unwrap();
        assert_eq!(manifest.files().len(), 6);
        let LoadedProblem::Mep(back) = load_problem(&path).unwrap().1 else { panic!() };
        assert!(same(back.equation(1).param(1), &mats[5]));
        assert!(same(back.equation(0).a(), &mats[0]));
    }

    #[test]
    fn manifest_validation() {
        let bad = ProblemManifest::Pep { degree: 2, coefficients: vec!["a".into(), "b".into()], generator: None };
        assert!(bad.validate().is_err());
        let bad = ProblemManifest::Mep { equations: vec![vec!["a".into(); 3]; 3], generator: None };
        assert!(bad.validate().is_err());
        let ok = ProblemManifest::Mep { equations: vec![vec!["a".into(); 3]; 2], generator: None };
        assert!(ok.validate().is_ok());
        let missing = tempfile::tempdir().unwrap();
        let p = missing.path().join("m.json");
        write_json(&p, &ProblemManifest::Pep { degree: 1, coefficients: vec!["x.mtx".into(), "y.mtx".into()], generator: None }).unwrap();
        assert!(matches!(load_problem(&p), Err(Error::Io(_))));
    }
}

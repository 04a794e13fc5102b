//! Coefficient storage: dense or compressed sparse row, behind one apply
//! interface.

use faer::{Col, ColRef, Mat, MatRef};

use crate::dense::{norm1, C64};
use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed; explicit zeros are kept so that structure is preserved.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::Dimension(format!("entry ({i}, {j}) outside a {nrows}x{ncols} matrix")));
            }
            entries.push((i, j, v));
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(j);
            values.push(v);
            indptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::from(1.0); n])
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |k| (i, self.indices[k], self.values[k]))
        })
    }

    pub fn apply(&self, x: ColRef<'_, C64>) -> Col<C64> {
        Col::from_fn(self.nrows, |i| {
            let mut s = C64::from(0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            s
        })
    }

    pub fn apply_adjoint(&self, x: ColRef<'_, C64>) -> Col<C64> {
        let mut y = Col::<C64>::zeros(self.ncols);
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.values[k].conj() * x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut a = Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            a[(i, j)] += v;
        }
        a
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("transposed indices are in range")
    }

    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.ncols];
        for (_, j, v) in self.triplets() {
            col[j] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// `(lower, upper)` bandwidth of the stored pattern.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for (i, j, _) in self.triplets() {
            if i > j {
                lower = lower.max(i - j);
            } else {
                upper = upper.max(j - i);
            }
        }
        (lower, upper)
    }
}

/// One coefficient matrix of a matrix polynomial.
#[derive(Clone, Debug)]
pub enum CoeffMatrix {
    Dense(Mat<C64>),
    Sparse(CsrMatrix),
}

impl CoeffMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            Self::Dense(a) => a.nrows(),
            Self::Sparse(a) => a.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Dense(a) => a.ncols(),
            Self::Sparse(a) => a.ncols(),
        }
    }

    pub fn apply(&self, x: ColRef<'_, C64>) -> Col<C64> {
        match self {
            Self::Dense(a) => a * x,
            Self::Sparse(a) => a.apply(x),
        }
    }

    pub fn apply_adjoint(&self, x: ColRef<'_, C64>) -> Col<C64> {
        match self {
            Self::Dense(a) => a.adjoint() * x,
            Self::Sparse(a) => a.apply_adjoint(x),
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        match self {
            Self::Dense(a) => a.clone(),
            Self::Sparse(a) => a.to_dense(),
        }
    }

    /// `out += s * self`
    pub fn add_scaled_to(&self, s: C64, out: &mut Mat<C64>) {
        match self {
            Self::Dense(a) => {
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        out[(i, j)] += s * a[(i, j)];
                    }
                }
            }
            Self::Sparse(a) => {
                for (i, j, v) in a.triplets() {
                    out[(i, j)] += s * v;
                }
            }
        }
    }

    pub fn norm1(&self) -> f64 {
        match self {
            Self::Dense(a) => norm1(a.as_ref()),
            Self::Sparse(a) => a.norm1(),
        }
    }

    /// Bandwidth for sparse storage; `None` for dense.
    pub fn bandwidth(&self) -> Option<(usize, usize)> {
        match self {
            Self::Dense(_) => None,
            Self::Sparse(a) => Some(a.bandwidth()),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Self::Sparse(_))
    }

    pub fn transpose(&self) -> Self {
        match self {
            Self::Dense(a) => Self::Dense(a.transpose().to_owned()),
            Self::Sparse(a) => Self::Sparse(a.transpose()),
        }
    }

    pub fn as_dense(&self) -> Option<MatRef<'_, C64>> {
        match self {
            Self::Dense(a) => Some(a.as_ref()),
            Self::Sparse(_) => None,
        }
    }
}

impl From<Mat<C64>> for CoeffMatrix {
    fn from(a: Mat<C64>) -> Self {
        Self::Dense(a)
    }
}

impl From<CsrMatrix> for CoeffMatrix {
    fn from(a: CsrMatrix) -> Self {
        Self::Sparse(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{c64, random_col};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c64(i as f64, 1.0)));
            if i + 1 < n {
                t.push((i, i + 1, c64(1.0, 0.0)));
                t.push((i + 1, i, c64(-1.0, 0.5)));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn sparse_and_dense_apply_agree() {
        let s = tridiag(7);
        let d = s.to_dense();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_col(7, &mut rng);
        assert!((&s.apply(x.as_ref()) - &d * &x).norm_l2() < 1e-14);
        assert!((&s.apply_adjoint(x.as_ref()) - d.adjoint() * &x).norm_l2() < 1e-14);
        assert!((s.norm1() - norm1(d.as_ref())).abs() < 1e-14);
        assert_eq!(s.bandwidth(), (1, 1));
    }

    #[test]
    fn duplicates_are_summed() {
        let s = CsrMatrix::from_triplets(2, 2, &[(0, 1, c64(1.0, 0.0)), (0, 1, c64(2.0, 0.0))]).unwrap();
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.to_dense()[(0, 1)], c64(3.0, 0.0));
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, c64(1.0, 0.0))]).is_err());
    }
}

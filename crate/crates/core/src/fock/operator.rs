use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{FockBasis, Level};
use crate::error::{Error, Result};

/// Below this dimension matrix–vector products run serially.
const PARALLEL_THRESHOLD: usize = 4096;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets, summing duplicates and
    /// dropping exact zeros.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != Complex64::new(0.0, 0.0)).collect();
        let mut ci = Vec::with_capacity(col_idx.len());
        let mut vs = Vec::with_capacity(values.len());
        for i in 0..values.len() {
            if keep[i] {
                row_ptr[rows[i] + 1] += 1;
                ci.push(col_idx[i]);
                vs.push(values[i]);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator {
            dim,
            row_ptr,
            col_idx: ci,
            values: vs,
        }
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                t.push((r, c, m[(r, c)]));
            }
        }
        Self::from_triplets(m.nrows(), t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(p) => self.values[self.row_ptr[r] + p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.col_idx[p], self.values[p]))
        })
    }

    /// `out = A ψ`.
    pub fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(psi.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        let row = |r: usize| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[p] * psi[self.col_idx[p]];
            }
            acc
        };
        if self.dim >= PARALLEL_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(|(r, o)| *o = row(r));
        } else {
            for (r, o) in out.iter_mut().enumerate() {
                *o = row(r);
            }
        }
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(psi, &mut out);
        out
    }

    /// `max |A_ij − conj(A_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Fails unless the defect is below `tol`.
    pub fn assert_hermitian(&self, tol: f64) -> Result<()> {
        let d = self.hermiticity_defect();
        if d < tol {
            Ok(())
        } else {
            Err(Error::numerical(
                "operator is not Hermitian",
                format!("max |H - H^+| = {d:e}"),
            ))
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Ascending eigenvalues of a Hermitian operator by dense
    /// diagonalization.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.to_dense().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// `max |A_ij − B_ij|`.
    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        assert_eq!(self.dim, other.dim);
        let a = self.triplets().map(|(r, c, v)| (v - other.get(r, c)).norm());
        let b = other
            .triplets()
            .filter(|&(r, c, _)| self.get(r, c) == Complex64::new(0.0, 0.0))
            .map(|(_, _, v)| v.norm());
        a.chain(b).fold(0.0, f64::max)
    }

    /// Writes `row,col,re,im` lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "row,col,re,im")?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r},{c},{:.16e},{:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// JSON document with a header and a list of `[row, col, re, im]`.
    pub fn to_json(&self, basis: Option<&FockBasis>) -> Result<String> {
        let dump = OperatorDump {
            dim: self.dim,
            nnz: self.nnz(),
            n_modes: basis.map(|b| b.n_modes()),
            n_max: basis.map(|b| b.n_max()),
            triplets: self.triplets().map(|(r, c, v)| (r, c, v.re, v.im)).collect(),
        };
        Ok(serde_json::to_string(&dump)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: OperatorDump = serde_json::from_str(text)?;
        Ok(Self::from_triplets(
            dump.dim,
            dump.triplets
                .into_iter()
                .map(|(r, c, re, im)| (r, c, Complex64::new(re, im)))
                .collect(),
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorDump {
    dim: usize,
    nnz: usize,
    n_modes: Option<usize>,
    n_max: Option<usize>,
    triplets: Vec<(usize, usize, f64, f64)>,
}

/// State vector over a [`FockBasis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockStateVector {
    pub n_modes: usize,
    pub n_max: usize,
    pub amplitudes: Vec<Complex64>,
}

impl FockStateVector {
    pub fn zeros(basis: &FockBasis) -> Self {
        FockStateVector {
            n_modes: basis.n_modes(),
            n_max: basis.n_max(),
            amplitudes: vec![Complex64::new(0.0, 0.0); basis.dim()],
        }
    }

    pub fn basis_state(basis: &FockBasis, index: usize) -> Self {
        let mut s = Self::zeros(basis);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        s
    }

    /// `|level; 0⟩`.
    pub fn vacuum(basis: &FockBasis, level: Level) -> Self {
        Self::basis_state(basis, basis.index(level, 0))
    }

    pub fn from_amplitudes(basis: &FockBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::InvalidConfig(format!(
                "state has {} amplitudes for dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::numerical("non-finite amplitude", "state vector"));
        }
        Ok(FockStateVector {
            n_modes: basis.n_modes(),
            n_max: basis.n_max(),
            amplitudes,
        })
    }

    pub fn compatible(&self, basis: &FockBasis) -> bool {
        self.n_modes == basis.n_modes() && self.n_max == basis.n_max() && self.amplitudes.len() == basis.dim()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amplitudes {
                *a /= n;
            }
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockStateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Probability of each total photon number.
    pub fn photon_number_distribution(&self, basis: &FockBasis) -> Vec<f64> {
        (0..=basis.n_max())
            .map(|n| {
                basis
                    .sector(n)
                    .map(|c| self.amplitudes[2 * c].norm_sqr() + self.amplitudes[2 * c + 1].norm_sqr())
                    .sum()
            })
            .collect()
    }

    /// Mean and variance of `N_exc = Σ a†a + |e⟩⟨e|`, normalized by the
    /// state's norm.
    pub fn excitation_moments(&self, basis: &FockBasis) -> (f64, f64) {
        let mut w = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let (level, c) = basis.state(i);
            let n = (basis.photon_number(c) + level.bit()) as f64;
            let p = a.norm_sqr();
            w += p;
            m1 += p * n;
            m2 += p * n * n;
        }
        let mean = m1 / w;
        (mean, m2 / w - mean * mean)
    }

    /// Probability of finding the atom excited.
    pub fn excited_population(&self) -> f64 {
        self.amplitudes.iter().skip(1).step_by(2).map(|a| a.norm_sqr()).sum()
    }

    pub fn write_csv<W: Write>(&self, basis: &FockBasis, mut w: W) -> Result<()> {
        writeln!(w, "index,label,re,im")?;
        for (i, a) in self.amplitudes.iter().enumerate() {
            writeln!(w, "{i},\"{}\",{:.16e},{:.16e}", basis.label(i), a.re, a.im)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis::enumerate_basis;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn csr_roundtrip_and_apply() {
        let t = vec![
            (0, 1, c(1.0, 2.0)),
            (1, 0, c(1.0, -2.0)),
            (1, 1, c(3.0, 0.0)),
            (1, 1, c(1.0, 0.0)),
        ];
        let op = SparseOperator::from_triplets(2, t);
        assert_eq!(op.get(1, 1), c(4.0, 0.0));
        assert_eq!(op.hermiticity_defect(), 0.0);
        let out = op.apply(&[c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(out[0], c(-2.0, 1.0));
        let back = SparseOperator::from_json(&op.to_json(None).unwrap()).unwrap();
        assert_eq!(back, op);
        assert_eq!(SparseOperator::from_dense(&op.to_dense()), op);
    }

    #[test]
    fn state_helpers() {
        let b = enumerate_basis(2, 2).unwrap();
        let mut s = FockStateVector::zeros(&b);
        s.amplitudes[b.index_of(Level::Excited, &[0, 0]).unwrap()] = c(1.0, 0.0);
        s.amplitudes[b.index_of(Level::Ground, &[1, 1]).unwrap()] = c(0.0, 1.0);
        s.normalize();
        let dist = s.photon_number_distribution(&b);
        assert!((dist[0] - 0.5).abs() < 1e-15 && (dist[2] - 0.5).abs() < 1e-15);
        let (mean, var) = s.excitation_moments(&b);
        assert!((mean - 1.5).abs() < 1e-15 && (var - 0.25).abs() < 1e-15);
        assert!((s.excited_population() - 0.5).abs() < 1e-15);
    }
}

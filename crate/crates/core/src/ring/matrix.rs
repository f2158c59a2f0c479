//! Square matrices over a commutative ring, and determinants.

use std::sync::Arc;

use super::scalar::{int, Scalar};
use super::series::{Series, VarTable};
use crate::error::{Error, Result};

/// Minimal commutative-ring interface used by [`Matrix`].
///
/// Elements such as [`Series`] need context (their variable table) to build
/// constants, so constants are produced from an existing element.
pub trait Ring: Clone + PartialEq {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl<S: Scalar> Ring for Series<S> {
    fn zero_like(&self) -> Self {
        Series::zero(self.vars())
    }
    fn one_like(&self) -> Self {
        Series::one(self.vars())
    }
    fn is_zero(&self) -> bool {
        Series::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        Series::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        Series::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Series::mul(self, other)
    }
    fn neg(&self) -> Self {
        Series::neg(self)
    }
}

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<R: Ring> {
    n: usize,
    entries: Vec<R>,
}

/// Matrix with [`Series`] entries.
pub type SeriesMatrix<S> = Matrix<Series<S>>;

impl<R: Ring> Matrix<R> {
    /// Builds an `n x n` matrix from row-major entries.
    pub fn from_entries(n: usize, entries: Vec<R>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::Structural(format!(
                "expected {} entries for dimension {n}",
                n * n
            )));
        }
        Ok(Matrix { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Matrix { n, entries }
    }

    /// Zero matrix whose entries are built from `template`.
    pub fn zeros(n: usize, template: &R) -> Self {
        Self::from_fn(n, |_, _| template.zero_like())
    }

    pub fn identity(n: usize, template: &R) -> Self {
        Self::from_fn(n, |i, j| {
            if i == j {
                template.one_like()
            } else {
                template.zero_like()
            }
        })
    }

    pub fn diagonal(diag: Vec<R>) -> Self {
        let n = diag.len();
        let zero = diag[0].zero_like();
        Self::from_fn(n, |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                zero.clone()
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &R {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.entries[i * self.n + j] = v;
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Structural(format!(
                "dimension mismatch {} vs {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(Matrix { n: self.n, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect();
        Ok(Matrix { n: self.n, entries })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.n;
        Ok(Self::from_fn(n, |i, j| {
            let mut acc = self.get(i, 0).zero_like();
            for k in 0..n {
                let a = self.get(i, k);
                let b = other.get(k, j);
                if !a.is_zero() && !b.is_zero() {
                    acc = acc.add(&a.mul(b));
                }
            }
            acc
        }))
    }

    /// Multiplies every entry by `c`.
    pub fn scale(&self, c: &R) -> Self {
        Matrix {
            n: self.n,
            entries: self.entries.iter().map(|a| a.mul(c)).collect(),
        }
    }

    pub fn trace(&self) -> R {
        let mut acc = self.get(0, 0).zero_like();
        for i in 0..self.n {
            acc = acc.add(self.get(i, i));
        }
        acc
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).clone())
    }

    /// Kronecker product: `(A⊗B)[(i,a),(j,b)] = A[i,j] * B[a,b]`.
    pub fn kron(&self, other: &Self) -> Self {
        let m = other.n;
        Self::from_fn(self.n * m, |r, c| {
            self.get(r / m, c / m).mul(other.get(r % m, c % m))
        })
    }

    /// Deletes row `row` and column `col`.
    pub fn minor(&self, row: usize, col: usize) -> Result<Self> {
        if self.n < 2 {
            return Err(Error::Structural("minor of a 1x1 matrix".into()));
        }
        let mut entries = Vec::with_capacity((self.n - 1) * (self.n - 1));
        for i in (0..self.n).filter(|&i| i != row) {
            for j in (0..self.n).filter(|&j| j != col) {
                entries.push(self.get(i, j).clone());
            }
        }
        Ok(Matrix {
            n: self.n - 1,
            entries,
        })
    }

    /// Determinant by Laplace expansion along the first row.
    pub fn det_cofactor(&self) -> R {
        if self.n == 1 {
            return self.get(0, 0).clone();
        }
        let mut acc = self.get(0, 0).zero_like();
        for j in 0..self.n {
            let a = self.get(0, j);
            if a.is_zero() {
                continue;
            }
            let term = a.mul(&self.minor(0, j).expect("n >= 2").det_cofactor());
            acc = if j % 2 == 0 {
                acc.add(&term)
            } else {
                acc.sub(&term)
            };
        }
        acc
    }

    pub fn entries(&self) -> &[R] {
        &self.entries
    }
}

impl<S: Scalar> Matrix<Series<S>> {
    pub fn vars(&self) -> &Arc<VarTable> {
        self.entries[0].vars()
    }

    /// Determinant via `det D * exp(sum_k (-1)^{k+1} tr R^k / k)` where
    /// `A = D (1 + R)` and `D` is the diagonal of constant terms.
    pub fn det_trlog(&self) -> Result<Series<S>> {
        let n = self.n;
        let vars = self.vars().clone();
        let mut det_d = S::one();
        let mut inv_d = Vec::with_capacity(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.get(i, j).constant_term().is_zero() {
                    return Err(Error::domain(
                        "ring",
                        "det_trlog: leading part is not diagonal",
                    ));
                }
            }
            let c = self.get(i, i).constant_term();
            let inv = c.inverse().ok_or_else(|| {
                Error::domain("ring", "det_trlog: leading part is not invertible")
            })?;
            det_d = det_d.times(&c);
            inv_d.push(inv);
        }
        let one = Series::one(&vars);
        let r = Self::from_fn(n, |i, j| {
            let scaled = self.get(i, j).scale(&inv_d[i]);
            if i == j {
                scaled.sub(&one)
            } else {
                scaled
            }
        });
        let mut log = Series::zero(&vars);
        let mut power = r.clone();
        let bound = vars
            .vars()
            .iter()
            .map(|v| (v.cap - v.min) as usize)
            .sum::<usize>()
            + 2;
        for k in 1..=bound {
            if power.entries.iter().all(|e| e.is_zero()) {
                return Series::constant(&vars, det_d.clone()).try_mul(&log.exp()?);
            }
            let t = power.trace().scale_rational(&int(k as i64).recip());
            log = if k % 2 == 1 { log.add(&t) } else { log.sub(&t) };
            power = power.mul(&r)?;
        }
        Err(Error::domain(
            "ring",
            "det_trlog: correction is not nilpotent under the caps",
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::{int, Rational};

    type R = Series<Rational>;

    #[test]
    fn two_by_two_trlog_matches_cofactor() {
        let t = VarTable::builder()
            .var("x", 2)
            .var("a", 1)
            .var("b", 1)
            .var("c", 1)
            .build()
            .unwrap();
        let v = |n: &str| R::var(&t, n).unwrap();
        let one = R::one(&t);
        let x = v("x");
        let m = Matrix::from_entries(
            2,
            vec![
                one.add(&v("a").mul(&x)),
                v("b").mul(&x),
                v("c").mul(&x),
                one.clone(),
            ],
        )
        .unwrap();
        let expected = one
            .add(&v("a").mul(&x))
            .sub(&v("b").mul(&v("c")).mul(&x).mul(&x));
        assert_eq!(m.det_cofactor(), expected);
        assert_eq!(m.det_trlog().unwrap(), expected);
    }

    #[test]
    fn diagonal_and_identity() {
        let t = VarTable::builder().var("x", 2).build().unwrap();
        let d = Matrix::diagonal(vec![
            R::from_rational(&t, int(2)),
            R::from_rational(&t, int(3)),
        ]);
        assert_eq!(d.det_trlog().unwrap(), R::from_rational(&t, int(6)));
        let id = Matrix::identity(3, &R::one(&t));
        assert_eq!(id.det_trlog().unwrap(), R::one(&t));
    }

    #[test]
    fn kron_trace_is_multiplicative() {
        let t = VarTable::builder().var("x", 2).build().unwrap();
        let c = |k: i64| R::from_rational(&t, int(k));
        let a = Matrix::diagonal(vec![c(1), c(1)]);
        let b = Matrix::from_entries(
            3,
            (0..9).map(|k| c(if k % 4 == 0 { 1 } else { k })).collect(),
        )
        .unwrap();
        assert_eq!(a.kron(&b).trace(), c(2).mul(&c(3)));
        let id6 = Matrix::identity(2, &c(1)).kron(&Matrix::identity(3, &c(1)));
        assert_eq!(id6, Matrix::identity(6, &c(1)));
    }

    #[test]
    fn singular_leading_part_is_rejected() {
        let t = VarTable::builder().var("x", 2).build().unwrap();
        let m = Matrix::diagonal(vec![R::var(&t, "x").unwrap(), R::one(&t)]);
        assert!(matches!(m.det_trlog(), Err(Error::Domain { .. })));
    }
}

//! Fractions whose denominators are products of `x_i + x_j`.
//!
//! Symbolic-eigenvalue Wick sums only ever divide by `λ_i + λ_j`, which in
//! `x = 1/λ` coordinates contributes `x_i x_j / (x_i + x_j)`. Holding sums over
//! a common denominator from this family and dividing exactly at the end
//! avoids general multivariate gcd computations.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ring::scalar::{int, Rational, Scalar};
use crate::ring::series::{Exponents, Series, VarTable};

/// `num / Π_{i<j} (x_i + x_j)^{den[pair(i,j)]}` over variables `x_1..x_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyFraction<S: Scalar> {
    m: usize,
    num: Series<S>,
    den: Vec<u32>,
}

fn pair_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * m - i * (i + 1) / 2 + (j - i - 1)
}

/// Table `x1..xM` with generous caps for intermediate numerators.
pub fn x_table(m: usize, cap: i32) -> Result<Arc<VarTable>> {
    let mut b = VarTable::builder();
    for i in 1..=m {
        b = b.var(&format!("x{i}"), cap);
    }
    b.build()
}

impl<S: Scalar> FamilyFraction<S> {
    pub fn from_series(num: Series<S>) -> Self {
        let m = num.vars().len();
        FamilyFraction {
            m,
            num,
            den: vec![0; m * m.saturating_sub(1) / 2],
        }
    }

    /// `2 x_i x_j / (x_i + x_j)`, or `x_i` when `i == j`.
    pub fn propagator(vars: &Arc<VarTable>, i: usize, j: usize) -> Self {
        let m = vars.len();
        let mut e = vec![0; m];
        if i == j {
            e[i] = 1;
            return Self::from_series(Series::monomial(vars, e, S::one()));
        }
        e[i] = 1;
        e[j] = 1;
        let mut f = Self::from_series(Series::monomial(vars, e, S::from_rational(int(2))));
        f.den[pair_index(m, i, j)] = 1;
        f
    }

    pub fn num(&self) -> &Series<S> {
        &self.num
    }

    fn binomial(&self, p: usize) -> Series<S> {
        // invert pair_index by search; m is small
        let vars = self.num.vars();
        for i in 0..self.m {
            for j in i + 1..self.m {
                if pair_index(self.m, i, j) == p {
                    let mut a = vec![0; self.m];
                    a[i] = 1;
                    let mut b = vec![0; self.m];
                    b[j] = 1;
                    return Series::monomial(vars, a, S::one()).add(&Series::monomial(
                        vars,
                        b,
                        S::one(),
                    ));
                }
            }
        }
        unreachable!("pair index in range")
    }

    pub fn mul(&self, other: &Self) -> Self {
        let den = self
            .den
            .iter()
            .zip(&other.den)
            .map(|(a, b)| a + b)
            .collect();
        FamilyFraction {
            m: self.m,
            num: self.num.mul(&other.num),
            den,
        }
    }

    fn raise_to(&self, den: &[u32]) -> Series<S> {
        let mut num = self.num.clone();
        for (p, (&have, &want)) in self.den.iter().zip(den).enumerate() {
            if want > have {
                num = num.mul(&self.binomial(p).pow(want - have));
            }
        }
        num
    }

    pub fn add(&self, other: &Self) -> Self {
        let den: Vec<u32> = self
            .den
            .iter()
            .zip(&other.den)
            .map(|(a, b)| *a.max(b))
            .collect();
        let num = self.raise_to(&den).add(&other.raise_to(&den));
        FamilyFraction {
            m: self.m,
            num,
            den,
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        FamilyFraction {
            m: self.m,
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Performs the exact division, failing if a remainder is left.
    pub fn into_polynomial(self) -> Result<Series<S>> {
        let vars = self.num.vars().clone();
        let mut terms: BTreeMap<Exponents, S> = self.num.terms().clone();
        for i in 0..self.m {
            for j in i + 1..self.m {
                for _ in 0..self.den[pair_index(self.m, i, j)] {
                    terms = divide_binomial(terms, i, j)?;
                }
            }
        }
        let mut out = Series::zero(&vars);
        for (e, c) in terms {
            if !vars.admits(&e) {
                return Err(Error::check(
                    "wick",
                    "symbolic numerator exceeded its degree caps",
                ));
            }
            out.add_term(e, c);
        }
        Ok(out)
    }
}

impl FamilyFraction<Rational> {
    pub fn lift<T: Scalar>(&self) -> FamilyFraction<T> {
        FamilyFraction {
            m: self.m,
            num: self.num.lift(),
            den: self.den.clone(),
        }
    }
}

/// Exact quotient by `x_i + x_j`.
fn divide_binomial<S: Scalar>(
    mut rem: BTreeMap<Exponents, S>,
    i: usize,
    j: usize,
) -> Result<BTreeMap<Exponents, S>> {
    let mut quot: BTreeMap<Exponents, S> = BTreeMap::new();
    let key = |e: &Exponents| (e[i], e.clone());
    loop {
        let Some(top) = rem.keys().max_by_key(|e| key(e)).cloned() else {
            break;
        };
        if top[i] == 0 {
            return Err(Error::check(
                "wick",
                "denominator x_i + x_j does not divide the numerator",
            ));
        }
        let c = rem.remove(&top).expect("present");
        let mut q = top.clone();
        q[i] -= 1;
        let mut other = q.clone();
        other[j] += 1;
        // rem -= c * q * (x_i + x_j); the x_i part cancels `top`
        let entry = rem.entry(other.clone()).or_insert_with(S::zero);
        *entry = entry.minus(&c);
        if entry.is_zero() {
            rem.remove(&other);
        }
        let slot = quot.entry(q.clone()).or_insert_with(S::zero);
        *slot = slot.plus(&c);
        if slot.is_zero() {
            quot.remove(&q);
        }
    }
    Ok(quot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::rat;

    #[test]
    fn propagator_sum_divides() {
        let v = x_table(2, 16).unwrap();
        // P12 + P21 + P11 - x1 = 4 x1 x2/(x1+x2) ; times (x1+x2)/4 gives x1 x2
        let p = FamilyFraction::<Rational>::propagator(&v, 0, 1)
            .add(&FamilyFraction::propagator(&v, 1, 0));
        let s = Series::var(&v, "x1")
            .unwrap()
            .add(&Series::var(&v, "x2").unwrap());
        let f = p.mul(&FamilyFraction::from_series(s)).scale(&rat(1, 4));
        let expected = Series::monomial_named(&v, &[("x1", 1), ("x2", 1)], int(1)).unwrap();
        assert_eq!(f.into_polynomial().unwrap(), expected);
    }

    #[test]
    fn non_divisible_is_reported() {
        let v = x_table(2, 16).unwrap();
        let p = FamilyFraction::<Rational>::propagator(&v, 0, 1);
        assert!(p.into_polynomial().is_err());
    }
}

//! Sparse truncated multivariate formal series.
//!
//! A [`Series`] is a finite map from exponent vectors to nonzero scalars over
//! a shared [`VarTable`]. Every variable has an upper degree cap and a lower
//! bound (zero unless the variable is declared Laurent). An optional linear
//! weight cap bounds a weighted total degree. All arithmetic re-truncates to
//! the caps, which makes products exact on every retained coefficient as long
//! as exponents are non-negative.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::json;

use super::scalar::{binomial, factorial, int, Rational, Scalar};
use crate::error::{Error, Result};

/// One formal variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    /// Highest retained exponent.
    pub cap: i32,
    /// Lowest permitted exponent; negative only for Laurent variables.
    pub min: i32,
}

/// Weighted total-degree cap: `sum(weights[i] * e[i]) <= cap`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightCap {
    pub weights: Vec<i32>,
    pub cap: i32,
}

/// Ordered list of variables shared by all series of one computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarTable {
    vars: Vec<Var>,
    weight: Option<WeightCap>,
}

/// Builder for [`VarTable`].
#[derive(Default)]
pub struct VarTableBuilder {
    vars: Vec<Var>,
    weights: Option<(Vec<(String, i32)>, i32)>,
}

impl VarTableBuilder {
    /// Adds a polynomial variable with exponents in `0..=cap`.
    pub fn var(mut self, name: &str, cap: i32) -> Self {
        self.vars.push(Var {
            name: name.to_string(),
            cap,
            min: 0,
        });
        self
    }

    /// Adds a Laurent variable with exponents in `min..=cap`.
    pub fn laurent(mut self, name: &str, min: i32, cap: i32) -> Self {
        self.vars.push(Var {
            name: name.to_string(),
            cap,
            min,
        });
        self
    }

    /// Bounds a weighted total degree. Unlisted variables get weight zero.
    pub fn weight_cap(mut self, weights: &[(&str, i32)], cap: i32) -> Self {
        let w = weights.iter().map(|(n, w)| (n.to_string(), *w)).collect();
        self.weights = Some((w, cap));
        self
    }

    pub fn build(self) -> Result<Arc<VarTable>> {
        for (i, v) in self.vars.iter().enumerate() {
            if self.vars[..i].iter().any(|u| u.name == v.name) {
                return Err(Error::Structural(format!(
                    "duplicate variable {:?}",
                    v.name
                )));
            }
            if v.cap < v.min {
                return Err(Error::Structural(format!(
                    "variable {:?} has cap below its minimum",
                    v.name
                )));
            }
        }
        let weight = match self.weights {
            None => None,
            Some((list, cap)) => {
                let mut weights = vec![0; self.vars.len()];
                for (name, w) in list {
                    let idx = self
                        .vars
                        .iter()
                        .position(|v| v.name == name)
                        .ok_or_else(|| {
                            Error::Structural(format!("unknown variable {name:?} in weight cap"))
                        })?;
                    if w < 0 {
                        return Err(Error::Structural("negative weight".into()));
                    }
                    weights[idx] = w;
                }
                Some(WeightCap { weights, cap })
            }
        };
        Ok(Arc::new(VarTable {
            vars: self.vars,
            weight,
        }))
    }
}

impl VarTable {
    pub fn builder() -> VarTableBuilder {
        VarTableBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn weight_cap(&self) -> Option<&WeightCap> {
        self.weight.as_ref()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::Structural(format!("unknown variable {name:?}")))
    }

    pub fn try_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn cap(&self, name: &str) -> Result<i32> {
        Ok(self.vars[self.index(name)?].cap)
    }

    /// Whether an exponent vector lies inside the caps.
    pub fn admits(&self, e: &[i32]) -> bool {
        if e.iter()
            .zip(&self.vars)
            .any(|(&x, v)| x > v.cap || x < v.min)
        {
            return false;
        }
        match &self.weight {
            None => true,
            Some(w) => e.iter().zip(&w.weights).map(|(x, w)| x * w).sum::<i32>() <= w.cap,
        }
    }

    fn nilpotence_bound(&self) -> usize {
        let span: i64 = self.vars.iter().map(|v| (v.cap - v.min) as i64).sum();
        span as usize + 2
    }
}

/// Exponent vector, ordered as the owning [`VarTable`].
pub type Exponents = Vec<i32>;

/// Sparse truncated multivariate series over a [`Scalar`] field.
#[derive(Clone, PartialEq)]
pub struct Series<S: Scalar> {
    vars: Arc<VarTable>,
    terms: BTreeMap<Exponents, S>,
}

impl<S: Scalar> fmt::Debug for Series<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<S: Scalar> fmt::Display for Series<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c.to_canonical())?;
            for (x, v) in e.iter().zip(self.vars.vars()) {
                match *x {
                    0 => {}
                    1 => write!(f, "*{}", v.name)?,
                    _ => write!(f, "*{}^{}", v.name, x)?,
                }
            }
        }
        Ok(())
    }
}

impl<S: Scalar> Series<S> {
    pub fn zero(vars: &Arc<VarTable>) -> Self {
        Series {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(vars: &Arc<VarTable>) -> Self {
        Self::constant(vars, S::one())
    }

    pub fn constant(vars: &Arc<VarTable>, c: S) -> Self {
        let mut s = Self::zero(vars);
        s.add_term(vec![0; vars.len()], c);
        s
    }

    pub fn from_rational(vars: &Arc<VarTable>, r: Rational) -> Self {
        Self::constant(vars, S::from_rational(r))
    }

    /// The series consisting of the single variable `name`.
    pub fn var(vars: &Arc<VarTable>, name: &str) -> Result<Self> {
        let mut e = vec![0; vars.len()];
        e[vars.index(name)?] = 1;
        Ok(Self::monomial(vars, e, S::one()))
    }

    /// `c * prod(v^e)`, dropped if outside the caps.
    pub fn monomial(vars: &Arc<VarTable>, e: Exponents, c: S) -> Self {
        let mut s = Self::zero(vars);
        s.add_term(e, c);
        s
    }

    /// Monomial from `(name, exponent)` pairs.
    pub fn monomial_named(vars: &Arc<VarTable>, powers: &[(&str, i32)], c: S) -> Result<Self> {
        Ok(Self::monomial(vars, vars.exponents(powers)?, c))
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, S> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulates `c` at exponent `e`; out-of-cap terms are dropped.
    pub fn add_term(&mut self, e: Exponents, c: S) {
        if c.is_zero() || !self.vars.admits(&e) {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                o.get_mut().add_in_place(&c);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn coeff(&self, e: &[i32]) -> S {
        self.terms.get(e).cloned().unwrap_or_else(S::zero)
    }

    /// Coefficient addressed by variable names; unnamed variables have exponent 0.
    pub fn coeff_named(&self, powers: &[(&str, i32)]) -> Result<S> {
        Ok(self.coeff(&self.vars.exponents(powers)?))
    }

    pub fn constant_term(&self) -> S {
        self.coeff(&vec![0; self.vars.len()])
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.vars, &other.vars) || *self.vars == *other.vars {
            Ok(())
        } else {
            Err(Error::Structural(
                "series over incompatible variable tables".into(),
            ))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self::zero(&self.vars);
        let n = self.vars.len();
        let mut e = vec![0; n];
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                for k in 0..n {
                    e[k] = ea[k] + eb[k];
                }
                if self.vars.admits(&e) {
                    out.add_term(e.clone(), ca.times(cb));
                }
            }
        }
        Ok(out)
    }

    /// `self + other`; panics on incompatible tables.
    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("compatible variable tables")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.try_sub(other).expect("compatible variable tables")
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("compatible variable tables")
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.negated())
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Self::zero(&self.vars);
        }
        self.map_coeffs(|x| x.times(c))
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero(&self.vars);
        }
        self.map_coeffs(|x| x.scaled(r))
    }

    pub fn map_coeffs(&self, f: impl Fn(&S) -> S) -> Self {
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Multiplies by the monomial `c * v^shift`.
    pub fn shift(&self, shift: &[i32], c: &S) -> Self {
        let mut out = Self::zero(&self.vars);
        for (e, x) in &self.terms {
            let e2: Exponents = e.iter().zip(shift).map(|(a, b)| a + b).collect();
            out.add_term(e2, x.times(c));
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(&self.vars);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Drops every term outside the given per-variable caps.
    pub fn truncate(&self, caps: &[(&str, i32)]) -> Result<Self> {
        let idx: Vec<(usize, i32)> = caps
            .iter()
            .map(|(n, c)| Ok((self.vars.index(n)?, *c)))
            .collect::<Result<_>>()?;
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if idx.iter().all(|&(i, cap)| e[i] <= cap) {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Keeps only terms accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&[i32]) -> bool) -> Self {
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if keep(e) {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// Re-expresses the series over another table, matching variables by name.
    ///
    /// Variables absent from the target must not occur; terms outside the
    /// target caps are dropped.
    pub fn embed(&self, target: &Arc<VarTable>) -> Result<Self> {
        let map: Vec<Option<usize>> = self
            .vars
            .vars()
            .iter()
            .map(|v| target.try_index(&v.name))
            .collect();
        let mut out = Self::zero(target);
        for (e, c) in &self.terms {
            let mut e2 = vec![0; target.len()];
            for (k, &x) in e.iter().enumerate() {
                match map[k] {
                    Some(j) => e2[j] = x,
                    None if x == 0 => {}
                    None => {
                        return Err(Error::Structural(format!(
                            "variable {:?} missing from target table",
                            self.vars.vars()[k].name
                        )))
                    }
                }
            }
            out.add_term(e2, c.clone());
        }
        Ok(out)
    }

    /// Partial derivative with respect to variable index `k`.
    pub fn derivative_idx(&self, k: usize) -> Self {
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            if e[k] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[k] -= 1;
            out.add_term(e2, c.scaled(&int(e[k] as i64)));
        }
        out
    }

    pub fn derivative(&self, name: &str) -> Result<Self> {
        Ok(self.derivative_idx(self.vars.index(name)?))
    }

    /// Substitutes a scalar for a variable (the variable's exponent becomes 0).
    pub fn eval_var(&self, name: &str, value: &S) -> Result<Self> {
        let k = self.vars.index(name)?;
        let inv = value.inverse();
        let mut out = Self::zero(&self.vars);
        for (e, c) in &self.terms {
            let p = e[k];
            let factor = if p >= 0 {
                pow_scalar(value, p as u32)
            } else {
                let inv = inv
                    .as_ref()
                    .ok_or_else(|| Error::domain("ring", "negative power evaluated at zero"))?;
                pow_scalar(inv, (-p) as u32)
            };
            let mut e2 = e.clone();
            e2[k] = 0;
            out.add_term(e2, c.times(&factor));
        }
        Ok(out)
    }

    /// Sets a variable to zero: keeps only terms where it has exponent 0.
    pub fn at_zero(&self, name: &str) -> Result<Self> {
        let k = self.vars.index(name)?;
        Ok(self.filter(|e| e[k] == 0))
    }

    /// Largest exponent of variable `k` present, if any term exists.
    pub fn max_degree_idx(&self, k: usize) -> Option<i32> {
        self.terms.keys().map(|e| e[k]).max()
    }

    pub fn min_degree_idx(&self, k: usize) -> Option<i32> {
        self.terms.keys().map(|e| e[k]).min()
    }

    /// `sum_k coeff(k) * r^k`, where `r` must be nilpotent under truncation.
    fn compose_nilpotent(r: &Self, coeff: impl Fn(u32) -> Rational) -> Result<Self> {
        let bound = r.vars.nilpotence_bound();
        let mut out = Self::zero(&r.vars);
        let mut power = Self::one(&r.vars);
        for k in 0..=bound as u32 {
            if power.is_zero() {
                return Ok(out);
            }
            let c = coeff(k);
            if !c.is_zero() {
                out = out.add(&power.scale_rational(&c));
            }
            power = power.mul(r);
        }
        if power.is_zero() {
            Ok(out)
        } else {
            Err(Error::domain(
                "ring",
                "argument is not nilpotent under the caps",
            ))
        }
    }

    /// Splits `self = c * (1 + r)` with `c` the constant term.
    fn split_constant(&self, what: &str) -> Result<(S, Self)> {
        let c = self.constant_term();
        let inv = c.inverse().ok_or_else(|| {
            Error::domain("ring", format!("{what}: constant term must be nonzero"))
        })?;
        let mut r = self.scale(&inv);
        r.add_term(vec![0; self.vars.len()], S::one().negated());
        Ok((c, r))
    }

    /// `exp(self)`; requires a zero constant term.
    pub fn exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::domain("ring", "exp: constant term must be zero"));
        }
        Self::compose_nilpotent(self, factorial_inverse)
    }

    /// `log(self)`; requires constant term exactly 1.
    pub fn log(&self) -> Result<Self> {
        let (c, r) = self.split_constant("log")?;
        if !c.is_one() {
            return Err(Error::domain(
                "ring",
                "log: constant term must be 1 for an exact logarithm",
            ));
        }
        Self::compose_nilpotent(&r, |k| {
            if k == 0 {
                Rational::zero()
            } else if k % 2 == 1 {
                Rational::new(1.into(), (k as i64).into())
            } else {
                Rational::new((-1).into(), (k as i64).into())
            }
        })
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn inv(&self) -> Result<Self> {
        let (c, r) = self.split_constant("inv")?;
        let geo = Self::compose_nilpotent(&r, |k| if k % 2 == 0 { int(1) } else { int(-1) })?;
        Ok(geo.scale(&c.inverse().expect("nonzero")))
    }

    /// Square root; the constant term must have an exact square root.
    pub fn sqrt(&self) -> Result<Self> {
        let (c, r) = self.split_constant("sqrt")?;
        let root = c.exact_sqrt().ok_or_else(|| {
            Error::domain(
                "ring",
                format!("sqrt: constant term {} is not a square", c.to_canonical()),
            )
        })?;
        let half = Rational::new(1.into(), 2.into());
        let series = Self::compose_nilpotent(&r, |k| binomial(&half, k))?;
        Ok(series.scale(&root))
    }

    /// `self^alpha` for rational `alpha`; requires constant term 1.
    pub fn pow_rational(&self, alpha: &Rational) -> Result<Self> {
        let (c, r) = self.split_constant("pow")?;
        if !c.is_one() {
            return Err(Error::domain("ring", "pow: constant term must be 1"));
        }
        Self::compose_nilpotent(&r, |k| binomial(alpha, k))
    }

    /// JSON array of `{exponents, coefficient}` with canonical coefficient strings.
    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|(e, c)| json!({ "exponents": e, "coefficient": c.to_canonical() }))
            .collect();
        serde_json::Value::Array(terms)
    }
}

impl<S: Scalar> Series<S> {
    /// Whether all coefficients are real.
    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.imag_part().is_zero())
    }

    /// Real projection as a rational series over the same table.
    pub fn real(&self) -> Series<Rational> {
        let mut out = Series::zero(&self.vars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.real_part());
        }
        out
    }

    pub fn imag(&self) -> Series<Rational> {
        let mut out = Series::zero(&self.vars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.imag_part());
        }
        out
    }
}

impl Series<Rational> {
    /// Lifts a rational series into another scalar field.
    pub fn lift<T: Scalar>(&self) -> Series<T> {
        let mut out = Series::zero(&self.vars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), T::from_rational(c.clone()));
        }
        out
    }
}

impl VarTable {
    /// Exponent vector from `(name, exponent)` pairs.
    pub fn exponents(&self, powers: &[(&str, i32)]) -> Result<Exponents> {
        let mut e = vec![0; self.len()];
        for (n, p) in powers {
            e[self.index(n)?] += p;
        }
        Ok(e)
    }
}

fn factorial_inverse(k: u32) -> Rational {
    factorial(k).recip()
}

pub(crate) fn pow_scalar<S: Scalar>(x: &S, k: u32) -> S {
    let mut acc = S::one();
    for _ in 0..k {
        acc = acc.times(x);
    }
    acc
}

impl<S: Scalar> Series<S> {
    /// Exact equality of all coefficients inside a rectangular region.
    pub fn agrees_on(&self, other: &Self, region: &[(&str, i32)]) -> Result<bool> {
        Ok(self.truncate(region)? == other.truncate(region)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::rat;

    fn x_table(cap: i32) -> Arc<VarTable> {
        VarTable::builder().var("x", cap).build().unwrap()
    }

    type R = Series<Rational>;

    fn poly(vars: &Arc<VarTable>, coeffs: &[Rational]) -> R {
        let mut s = R::zero(vars);
        for (k, c) in coeffs.iter().enumerate() {
            s.add_term(vec![k as i32], c.clone());
        }
        s
    }

    #[test]
    fn product_and_truncation() {
        let t = x_table(2);
        let a = poly(&t, &[int(1), int(1)]);
        let b = poly(&t, &[int(1), int(-1)]);
        assert_eq!(a.mul(&b), poly(&t, &[int(1), int(0), int(-1)]));
        let t1 = x_table(1);
        let a1 = poly(&t1, &[int(1), int(1)]);
        assert_eq!(a1.mul(&a1), poly(&t1, &[int(1), int(2)]));
    }

    #[test]
    fn exact_rational_addition() {
        let t = x_table(2);
        let a = poly(&t, &[int(0), rat(1, 2)]);
        let b = poly(&t, &[int(0), rat(1, 3)]);
        assert_eq!(a.add(&b), poly(&t, &[int(0), rat(5, 6)]));
    }

    #[test]
    fn incompatible_tables_are_rejected() {
        let a = R::one(&x_table(2));
        let b = R::one(&VarTable::builder().var("y", 2).build().unwrap());
        assert!(matches!(a.try_mul(&b), Err(Error::Structural(_))));
    }

    #[test]
    fn elementary_functions() {
        let t = x_table(4);
        let one_plus_x = poly(&t, &[int(1), int(1)]);
        assert_eq!(one_plus_x.log().unwrap().exp().unwrap(), one_plus_x);
        let t3 = x_table(3);
        let one_minus_x = poly(&t3, &[int(1), int(-1)]);
        assert_eq!(
            one_minus_x.inv().unwrap(),
            poly(&t3, &[int(1), int(1), int(1), int(1)])
        );
    }

    #[test]
    fn sqrt_binomial_oracle() {
        // (4 - u)^{1/2} = 2 (1 - u/4)^{1/2}; binomial coefficients 1, -1/2, -1/8
        let t = VarTable::builder().var("sm", 2).build().unwrap();
        let a = poly(&t, &[int(4), int(-1)]);
        let expected = poly(&t, &[int(2), rat(-1, 4), rat(-1, 64)]);
        assert_eq!(a.sqrt().unwrap(), expected);
    }

    #[test]
    fn domain_errors() {
        let t = x_table(3);
        assert!(poly(&t, &[int(1), int(1)]).exp().is_err());
        assert!(poly(&t, &[int(0), int(1)]).inv().is_err());
        assert!(poly(&t, &[int(2), int(1)]).sqrt().is_err());
        assert!(poly(&t, &[int(2), int(1)]).log().is_err());
    }

    #[test]
    fn weight_cap_truncates() {
        let t = VarTable::builder()
            .var("a", 5)
            .var("b", 5)
            .weight_cap(&[("a", 1), ("b", 2)], 4)
            .build()
            .unwrap();
        let a = R::var(&t, "a").unwrap();
        let b = R::var(&t, "b").unwrap();
        let p = a.add(&b).pow(3);
        // a^3 (weight 3), 3a^2 b (weight 4) survive; a b^2 (weight 5) dropped
        assert_eq!(p.len(), 2);
        assert_eq!(p.coeff_named(&[("a", 2), ("b", 1)]).unwrap(), int(3));
    }

    #[test]
    fn laurent_embedding_and_eval() {
        let t = VarTable::builder()
            .laurent("x", -3, 3)
            .var("y", 2)
            .build()
            .unwrap();
        let s = R::monomial_named(&t, &[("x", -2), ("y", 1)], int(5)).unwrap();
        let v = s.eval_var("x", &int(2)).unwrap();
        assert_eq!(v.coeff_named(&[("y", 1)]).unwrap(), rat(5, 4));
        let t2 = VarTable::builder()
            .var("y", 2)
            .laurent("x", -3, 3)
            .var("z", 1)
            .build()
            .unwrap();
        assert_eq!(
            s.embed(&t2)
                .unwrap()
                .coeff_named(&[("x", -2), ("y", 1)])
                .unwrap(),
            int(5)
        );
    }
}

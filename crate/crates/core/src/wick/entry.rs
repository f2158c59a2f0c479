//! Polynomials in matrix-entry symbols and their Gaussian expectations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ring::matrix::Ring;
use crate::ring::scalar::{factorial, int, Rational, Scalar};
use crate::ring::series::{Series, VarTable};

/// Which Gaussian family an entry belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    /// Entry `X_ij` of the Λ-weighted Hermitian matrix.
    Hermitian,
    /// Entry `Z_ab` of the complex square matrix.
    Ginibre,
    /// Complex conjugate of `Z_ab`.
    GinibreBar,
}

/// One matrix entry, indices zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntrySymbol {
    pub kind: Kind,
    pub i: u8,
    pub j: u8,
}

impl EntrySymbol {
    pub fn herm(i: usize, j: usize) -> Self {
        EntrySymbol {
            kind: Kind::Hermitian,
            i: i as u8,
            j: j as u8,
        }
    }
    pub fn gin(a: usize, b: usize) -> Self {
        EntrySymbol {
            kind: Kind::Ginibre,
            i: a as u8,
            j: b as u8,
        }
    }
    pub fn gin_bar(a: usize, b: usize) -> Self {
        EntrySymbol {
            kind: Kind::GinibreBar,
            i: a as u8,
            j: b as u8,
        }
    }
}

impl fmt::Display for EntrySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            Kind::Hermitian => "X",
            Kind::Ginibre => "Z",
            Kind::GinibreBar => "Zb",
        };
        write!(f, "{name}{}{}", self.i + 1, self.j + 1)
    }
}

/// Monomial: sorted multiset of entry symbols.
pub type EntryMonomial = Vec<EntrySymbol>;

/// Pruning rule applied after every product.
///
/// A coefficient term `ε^e` on a monomial with `h` Hermitian entries can only
/// reach `ε^{e + h/2}`, so it is dropped once `2e + h > 2 cap`. Ginibre and
/// conjugate counts are bounded separately.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    pub eps: usize,
    pub cap: i32,
    pub max_gin: Option<usize>,
    pub max_gin_bar: Option<usize>,
}

/// Sparse polynomial in entry symbols with [`Series`] coefficients.
#[derive(Clone, PartialEq)]
pub struct EntryPoly<S: Scalar> {
    vars: Arc<VarTable>,
    budget: Option<Arc<Budget>>,
    terms: BTreeMap<EntryMonomial, Series<S>>,
}

impl<S: Scalar> fmt::Debug for EntryPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{c}]")?;
            for s in m {
                write!(f, "*{s}")?;
            }
        }
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn merge(a: &[EntrySymbol], b: &[EntrySymbol]) -> EntryMonomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl<S: Scalar> EntryPoly<S> {
    pub fn zero(vars: &Arc<VarTable>, budget: Option<Arc<Budget>>) -> Self {
        EntryPoly {
            vars: vars.clone(),
            budget,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Series<S>, budget: Option<Arc<Budget>>) -> Self {
        let mut p = Self::zero(c.vars(), budget);
        p.add_term(Vec::new(), c);
        p
    }

    pub fn symbol(vars: &Arc<VarTable>, budget: Option<Arc<Budget>>, s: EntrySymbol) -> Self {
        let mut p = Self::zero(vars, budget);
        p.add_term(vec![s], Series::one(vars));
        p
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn budget(&self) -> Option<&Arc<Budget>> {
        self.budget.as_ref()
    }

    pub fn terms(&self) -> &BTreeMap<EntryMonomial, Series<S>> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Drops coefficient terms that the budget rules out.
    fn prune(&self, mono: &[EntrySymbol], c: Series<S>) -> Series<S> {
        let Some(b) = &self.budget else { return c };
        let count = |k: Kind| mono.iter().filter(|s| s.kind == k).count();
        if b.max_gin.is_some_and(|m| count(Kind::Ginibre) > m)
            || b.max_gin_bar.is_some_and(|m| count(Kind::GinibreBar) > m)
        {
            return Series::zero(&self.vars);
        }
        let h = count(Kind::Hermitian) as i32;
        if c.terms().keys().all(|e| 2 * e[b.eps] + h <= 2 * b.cap) {
            return c;
        }
        c.filter(|e| 2 * e[b.eps] + h <= 2 * b.cap)
    }

    pub fn add_term(&mut self, mono: EntryMonomial, c: Series<S>) {
        let c = self.prune(&mono, c);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(old) => {
                *old = old.add(&c);
                if old.is_zero() {
                    self.terms.remove(&mono);
                }
            }
            None => {
                self.terms.insert(mono, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(&self.vars, self.budget.clone());
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c.neg());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(&self.vars, self.budget.clone());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = merge(ma, mb);
                let c = ca.mul(cb);
                out.add_term(m, c);
            }
        }
        out
    }

    pub fn scale(&self, c: &Series<S>) -> Self {
        let mut out = Self::zero(&self.vars, self.budget.clone());
        for (m, x) in &self.terms {
            out.add_term(m.clone(), x.mul(c));
        }
        out
    }

    pub fn constant_term(&self) -> Series<S> {
        self.terms
            .get(&Vec::new())
            .cloned()
            .unwrap_or_else(|| Series::zero(&self.vars))
    }

    /// `sum_k coeff(k) r^k` for `r` without constant part.
    fn compose(r: &Self, coeff: impl Fn(u32) -> Rational) -> Result<Self> {
        let mut out = Self::zero(&r.vars, r.budget.clone());
        let mut power = Self::constant(Series::one(&r.vars), r.budget.clone());
        for k in 0..=256u32 {
            if power.is_zero() {
                return Ok(out);
            }
            let c = coeff(k);
            if !Scalar::is_zero(&c) {
                out = out.add(&power.scale(&Series::from_rational(&r.vars, c)));
            }
            power = power.mul(r);
        }
        Err(Error::domain(
            "wick",
            "entry series did not terminate; budget too loose",
        ))
    }

    fn split_unit(&self, what: &str) -> Result<Self> {
        let c = self.constant_term();
        if c != Series::one(&self.vars) {
            return Err(Error::domain(
                "wick",
                format!("{what}: constant part must be exactly 1"),
            ));
        }
        let mut r = self.clone();
        r.terms.remove(&Vec::new());
        Ok(r)
    }

    /// `exp(self)`; the constant part must be zero.
    pub fn exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::domain("wick", "exp: constant part must be zero"));
        }
        Self::compose(self, |k| factorial(k).recip())
    }

    /// `self^alpha` for constant part 1.
    pub fn pow_rational(&self, alpha: &Rational) -> Result<Self> {
        let r = self.split_unit("pow")?;
        Self::compose(&r, |k| crate::ring::scalar::binomial(alpha, k))
    }

    /// `log(self)` for constant part 1.
    pub fn log(&self) -> Result<Self> {
        let r = self.split_unit("log")?;
        Self::compose(&r, |k| match k {
            0 => int(0),
            k if k % 2 == 1 => int(k as i64).recip(),
            k => -int(k as i64).recip(),
        })
    }

    /// Largest number of symbols of the given kind in any monomial.
    pub fn max_count(&self, kind: Kind) -> usize {
        self.terms
            .keys()
            .map(|m| m.iter().filter(|s| s.kind == kind).count())
            .max()
            .unwrap_or(0)
    }

    /// Keeps only monomials accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(&[EntrySymbol]) -> bool) -> Self {
        let mut out = Self::zero(&self.vars, self.budget.clone());
        for (m, c) in &self.terms {
            if keep(m) {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    pub fn with_budget(&self, budget: Option<Arc<Budget>>) -> Self {
        let mut out = Self::zero(&self.vars, budget);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<S: Scalar> Ring for EntryPoly<S> {
    fn zero_like(&self) -> Self {
        Self::zero(&self.vars, self.budget.clone())
    }
    fn one_like(&self) -> Self {
        Self::constant(Series::one(&self.vars), self.budget.clone())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, other: &Self) -> Self {
        EntryPoly::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        EntryPoly::add(self, &other.neg())
    }
    fn mul(&self, other: &Self) -> Self {
        EntryPoly::mul(self, other)
    }
    fn neg(&self) -> Self {
        EntryPoly::neg(self)
    }
}

/// The Gaussian measures in play: a Λ-weighted Hermitian matrix and/or a
/// complex square matrix.
#[derive(Clone, Debug)]
pub struct Ensemble {
    /// Eigenvalues of Λ (positive, distinct), if a Hermitian matrix is present.
    pub lambda: Option<Vec<Rational>>,
    /// Size of the complex matrix, if present.
    pub ginibre: Option<usize>,
    /// Grading variable attached to every Hermitian contraction.
    pub eps: Option<String>,
}

impl Ensemble {
    pub fn hermitian(lambda: Vec<Rational>, eps: &str) -> Result<Self> {
        validate_lambda(&lambda)?;
        Ok(Ensemble {
            lambda: Some(lambda),
            ginibre: None,
            eps: Some(eps.to_string()),
        })
    }

    pub fn ginibre(n: usize) -> Self {
        Ensemble {
            lambda: None,
            ginibre: Some(n),
            eps: None,
        }
    }

    pub fn with_ginibre(mut self, n: usize) -> Self {
        self.ginibre = Some(n);
        self
    }
}

/// Eigenvalues must be positive and pairwise distinct.
pub fn validate_lambda(lambda: &[Rational]) -> Result<()> {
    if lambda.is_empty() {
        return Err(Error::domain("wick", "at least one eigenvalue is required"));
    }
    for (k, l) in lambda.iter().enumerate() {
        if *l <= int(0) {
            return Err(Error::domain(
                "wick",
                format!("eigenvalue {l} is not positive"),
            ));
        }
        if lambda[..k].contains(l) {
            return Err(Error::domain("wick", format!("eigenvalue {l} is repeated")));
        }
    }
    Ok(())
}

/// Two-point function without the grading factor. Independent families give 0.
pub fn propagator_value(e: &Ensemble, a: EntrySymbol, b: EntrySymbol) -> Rational {
    match (a.kind, b.kind) {
        (Kind::Hermitian, Kind::Hermitian) => {
            let Some(l) = &e.lambda else { return int(0) };
            if a.j == b.i && a.i == b.j {
                int(2) / (&l[a.i as usize] + &l[a.j as usize])
            } else {
                int(0)
            }
        }
        (Kind::Ginibre, Kind::GinibreBar) | (Kind::GinibreBar, Kind::Ginibre) => {
            if a.i == b.i && a.j == b.j {
                int(2)
            } else {
                int(0)
            }
        }
        _ => int(0),
    }
}

/// Two-point function as a series: Hermitian contractions carry one `ε`.
pub fn propagator<S: Scalar>(
    e: &Ensemble,
    vars: &Arc<VarTable>,
    a: EntrySymbol,
    b: EntrySymbol,
) -> Result<Series<S>> {
    let v = S::from_rational(propagator_value(e, a, b));
    if a.kind == Kind::Hermitian && b.kind == Kind::Hermitian {
        if let Some(eps) = &e.eps {
            return Series::monomial_named(vars, &[(eps, 1)], v);
        }
    }
    Ok(Series::constant(vars, v))
}

/// Memoized Wick evaluator for monomials.
pub struct WickMemo<'a> {
    ensemble: &'a Ensemble,
    herm: HashMap<Vec<EntrySymbol>, Rational>,
}

impl<'a> WickMemo<'a> {
    pub fn new(ensemble: &'a Ensemble) -> Self {
        WickMemo {
            ensemble,
            herm: HashMap::new(),
        }
    }

    /// Expectation of a sorted monomial, without grading factors.
    pub fn monomial(&mut self, mono: &[EntrySymbol]) -> Rational {
        let split = mono.partition_point(|s| s.kind == Kind::Hermitian);
        let (herm, rest) = mono.split_at(split);
        let g = ginibre_moment(rest);
        if Scalar::is_zero(&g) {
            return g;
        }
        g * self.hermitian(herm)
    }

    fn hermitian(&mut self, mono: &[EntrySymbol]) -> Rational {
        if mono.is_empty() {
            return int(1);
        }
        if mono.len() % 2 == 1 {
            return int(0);
        }
        if let Some(v) = self.herm.get(mono) {
            return v.clone();
        }
        let first = mono[0];
        let mut total = int(0);
        let mut k = 1;
        while k < mono.len() {
            let partner = mono[k];
            let mut mult = 1;
            while k + mult < mono.len() && mono[k + mult] == partner {
                mult += 1;
            }
            let p = propagator_value(self.ensemble, first, partner);
            if !Scalar::is_zero(&p) {
                let mut rest: Vec<EntrySymbol> = Vec::with_capacity(mono.len() - 2);
                rest.extend_from_slice(&mono[1..k]);
                rest.extend_from_slice(&mono[k + 1..]);
                total += p * int(mult as i64) * self.hermitian(&rest);
            }
            k += mult;
        }
        self.herm.insert(mono.to_vec(), total.clone());
        total
    }
}

/// `⟨Π Z_ab^{n_ab} Zb_ab^{m_ab}⟩ = Π δ_{n m} 2^n n!`.
fn ginibre_moment(mono: &[EntrySymbol]) -> Rational {
    let mut counts: BTreeMap<(u8, u8), (i64, i64)> = BTreeMap::new();
    for s in mono {
        let e = counts.entry((s.i, s.j)).or_default();
        match s.kind {
            Kind::Ginibre => e.0 += 1,
            Kind::GinibreBar => e.1 += 1,
            Kind::Hermitian => unreachable!("sorted monomial"),
        }
    }
    let mut acc = int(1);
    for (n, m) in counts.values() {
        if n != m {
            return int(0);
        }
        acc *= int(1 << n) * factorial(*n as u32);
    }
    acc
}

/// Normalized Gaussian expectation of an entry polynomial.
pub fn expectation<S: Scalar>(e: &Ensemble, p: &EntryPoly<S>) -> Result<Series<S>> {
    let vars = p.vars();
    let eps = match &e.eps {
        Some(n) => Some(vars.index(n)?),
        None => None,
    };
    let mut memo = WickMemo::new(e);
    let mut out = Series::zero(vars);
    for (mono, c) in p.terms() {
        let v = memo.monomial(mono);
        if Scalar::is_zero(&v) {
            continue;
        }
        let h = mono.iter().filter(|s| s.kind == Kind::Hermitian).count() as i32;
        let mut shift = vec![0; vars.len()];
        if h > 0 {
            let k = eps.ok_or_else(|| {
                Error::Structural("Hermitian entries need a grading variable".into())
            })?;
            shift[k] = h / 2;
        }
        out = out.add(&c.shift(&shift, &S::from_rational(v)));
    }
    Ok(out)
}

/// Every non-constant monomial in `Z` entries alone (no conjugates) up to
/// `max_degree` has zero expectation, and `⟨1⟩ = 1`.
pub fn mean_value_check(n: usize, max_degree: usize) -> bool {
    let e = Ensemble::ginibre(n);
    let mut memo = WickMemo::new(&e);
    let symbols: Vec<EntrySymbol> = (0..n * n).map(|k| EntrySymbol::gin(k / n, k % n)).collect();
    let mut ok = memo.monomial(&[]) == int(1);
    let mut frontier: Vec<Vec<EntrySymbol>> = vec![Vec::new()];
    for _ in 0..max_degree {
        let mut next = Vec::new();
        for m in &frontier {
            let start = m
                .last()
                .map(|s| symbols.iter().position(|t| t == s).unwrap())
                .unwrap_or(0);
            for s in &symbols[start..] {
                let mut m2 = m.clone();
                m2.push(*s);
                ok &= Scalar::is_zero(&memo.monomial(&m2));
                next.push(m2);
            }
        }
        frontier = next;
    }
    ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::rat;

    fn eps_table(cap: i32) -> Arc<VarTable> {
        VarTable::builder().var("eps", cap).build().unwrap()
    }

    #[test]
    fn propagator_examples() {
        let v = eps_table(4);
        let e = Ensemble::hermitian(vec![int(2), int(3)], "eps").unwrap();
        let p: Series<Rational> =
            propagator(&e, &v, EntrySymbol::herm(0, 1), EntrySymbol::herm(1, 0)).unwrap();
        assert_eq!(p.coeff_named(&[("eps", 1)]).unwrap(), rat(2, 5));
        let e1 = Ensemble::hermitian(vec![int(2)], "eps").unwrap();
        let p1: Series<Rational> =
            propagator(&e1, &v, EntrySymbol::herm(0, 0), EntrySymbol::herm(0, 0)).unwrap();
        assert_eq!(p1.coeff_named(&[("eps", 1)]).unwrap(), rat(1, 2));
        let g = Ensemble::ginibre(1);
        assert_eq!(
            propagator_value(&g, EntrySymbol::gin(0, 0), EntrySymbol::gin_bar(0, 0)),
            int(2)
        );
        assert_eq!(
            propagator_value(&g, EntrySymbol::gin(0, 0), EntrySymbol::gin(0, 0)),
            int(0)
        );
    }

    #[test]
    fn sixth_moment() {
        let v = eps_table(4);
        let e = Ensemble::hermitian(vec![int(1)], "eps").unwrap();
        let h = EntryPoly::<Rational>::symbol(&v, None, EntrySymbol::herm(0, 0));
        let h6 = (0..5).fold(h.clone(), |acc, _| acc.mul(&h));
        assert_eq!(
            expectation(&e, &h6)
                .unwrap()
                .coeff_named(&[("eps", 3)])
                .unwrap(),
            int(15)
        );
        let h3 = h.mul(&h).mul(&h);
        assert!(expectation(&e, &h3).unwrap().is_zero());
    }

    #[test]
    fn ginibre_trace_pair() {
        let v = eps_table(1);
        let e = Ensemble::ginibre(2);
        let tr = |bar: bool| {
            (0..2).fold(EntryPoly::<Rational>::zero(&v, None), |acc, a| {
                let s = if bar {
                    EntrySymbol::gin_bar(a, a)
                } else {
                    EntrySymbol::gin(a, a)
                };
                acc.add(&EntryPoly::symbol(&v, None, s))
            })
        };
        assert_eq!(
            expectation(&e, &tr(false).mul(&tr(true))).unwrap(),
            Series::from_rational(&v, int(4))
        );
    }

    #[test]
    fn mean_value() {
        assert!(mean_value_check(1, 6));
        assert!(mean_value_check(2, 4));
    }
}

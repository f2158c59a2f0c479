//! Formal differential operators on truncated series.
//!
//! Exponentials of operators are evaluated as terminating sums. Termination is
//! established up front by a [`Certificate`]: a variable whose degree moves
//! strictly in one direction under every term, so that the caps bound the
//! number of non-zero iterates.

use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::ring::scalar::{factorial, int, Rational, Scalar};
use crate::ring::series::{Series, VarTable};

/// A basic derivation acting on one variable of a [`VarTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Derivation {
    /// `∂/∂v`.
    Partial(usize),
    /// `λ^{-1} ∂/∂λ` written in `x = 1/λ`: `-x^3 ∂/∂x`.
    Lambda(usize),
}

impl Derivation {
    fn var(&self) -> usize {
        match *self {
            Derivation::Partial(v) | Derivation::Lambda(v) => v,
        }
    }

    fn shift(&self) -> i32 {
        match self {
            Derivation::Partial(_) => -1,
            Derivation::Lambda(_) => 2,
        }
    }

    pub fn apply<S: Scalar>(&self, f: &Series<S>) -> Series<S> {
        match *self {
            Derivation::Partial(v) => f.derivative_idx(v),
            Derivation::Lambda(v) => {
                let mut out = Series::zero(f.vars());
                for (e, c) in f.terms() {
                    if e[v] != 0 {
                        let mut e2 = e.clone();
                        e2[v] += 2;
                        out.add_term(e2, c.scaled(&int(-e[v] as i64)));
                    }
                }
                out
            }
        }
    }
}

/// One summand `coeff * d_1 d_2 ... d_k` (rightmost derivation acts first).
#[derive(Clone, Debug, PartialEq)]
pub struct DiffTerm<S: Scalar> {
    pub coeff: Series<S>,
    pub word: Vec<Derivation>,
}

/// Finite sum of coefficient-times-derivation-word terms.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOp<S: Scalar> {
    vars: Arc<VarTable>,
    terms: Vec<DiffTerm<S>>,
}

/// Witness that `exp(op)` terminates on truncated input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    /// Variable whose degree changes strictly under every term.
    pub var: String,
    /// `-1` if the degree decreases, `+1` if it increases.
    pub direction: i32,
}

impl<S: Scalar> DiffOp<S> {
    pub fn zero(vars: &Arc<VarTable>) -> Self {
        DiffOp {
            vars: vars.clone(),
            terms: Vec::new(),
        }
    }

    /// Single term `coeff * word`.
    pub fn term(coeff: Series<S>, word: Vec<Derivation>) -> Self {
        DiffOp {
            vars: coeff.vars().clone(),
            terms: vec![DiffTerm { coeff, word }],
        }
    }

    /// `c * ∂_{names[0]} ∂_{names[1]} ...` with a scalar coefficient.
    pub fn partials(vars: &Arc<VarTable>, c: S, names: &[&str]) -> Result<Self> {
        let word = names
            .iter()
            .map(|n| Ok(Derivation::Partial(vars.index(n)?)))
            .collect::<Result<_>>()?;
        Ok(Self::term(Series::constant(vars, c), word))
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn terms(&self) -> &[DiffTerm<S>] {
        &self.terms
    }

    pub fn plus(mut self, other: Self) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn negated(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| DiffTerm {
                coeff: t.coeff.neg(),
                word: t.word.clone(),
            })
            .collect();
        DiffOp {
            vars: self.vars.clone(),
            terms,
        }
    }

    pub fn scaled(&self, c: &S) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| DiffTerm {
                coeff: t.coeff.scale(c),
                word: t.word.clone(),
            })
            .collect();
        DiffOp {
            vars: self.vars.clone(),
            terms,
        }
    }

    /// Applies the operator once.
    pub fn apply(&self, f: &Series<S>) -> Result<Series<S>> {
        let mut out = Series::zero(f.vars());
        for t in &self.terms {
            let mut g = f.clone();
            for d in t.word.iter().rev() {
                g = d.apply(&g);
                if g.is_zero() {
                    break;
                }
            }
            if !g.is_zero() {
                out = out.try_add(&t.coeff.try_mul(&g)?)?;
            }
        }
        Ok(out)
    }

    /// Degree shift of variable `v` for each monomial of each term.
    fn shifts(&self, v: usize) -> Vec<i32> {
        let mut out = Vec::new();
        for t in &self.terms {
            let word: i32 = t
                .word
                .iter()
                .filter(|d| d.var() == v)
                .map(|d| d.shift())
                .sum();
            if t.coeff.is_zero() {
                continue;
            }
            for e in t.coeff.terms().keys() {
                out.push(word + e[v]);
            }
        }
        out
    }

    /// Finds a termination certificate, or explains why none exists.
    ///
    /// Every variable must move monotonically (so truncating intermediate
    /// results is exact) and at least one must move strictly under every term.
    pub fn certificate(&self) -> Result<Certificate> {
        if self.terms.iter().all(|t| t.coeff.is_zero()) {
            return Ok(Certificate {
                var: self
                    .vars
                    .vars()
                    .first()
                    .map(|v| v.name.clone())
                    .unwrap_or_default(),
                direction: -1,
            });
        }
        let mut found = None;
        for (v, var) in self.vars.vars().iter().enumerate() {
            let sh = self.shifts(v);
            let up = sh.iter().any(|&x| x > 0);
            let down = sh.iter().any(|&x| x < 0);
            if up && down {
                return Err(Error::Termination(format!(
                    "degree of {:?} is both raised and lowered by the operator",
                    var.name
                )));
            }
            if found.is_none() && !sh.is_empty() {
                if sh.iter().all(|&x| x < 0) {
                    found = Some(Certificate {
                        var: var.name.clone(),
                        direction: -1,
                    });
                } else if sh.iter().all(|&x| x > 0) {
                    found = Some(Certificate {
                        var: var.name.clone(),
                        direction: 1,
                    });
                }
            }
        }
        found.ok_or_else(|| {
            let stuck: Vec<&str> = self
                .vars
                .vars()
                .iter()
                .enumerate()
                .filter(|(v, _)| self.shifts(*v).iter().any(|&x| x == 0))
                .map(|(_, var)| var.name.as_str())
                .collect();
            Error::Termination(format!(
                "no variable moves strictly under every term; some term leaves the degrees of {stuck:?} unchanged"
            ))
        })
    }

    /// `exp(op) f` as a terminating sum.
    pub fn exp_apply(&self, f: &Series<S>) -> Result<Series<S>> {
        self.certificate()?;
        let bound: usize = f
            .vars()
            .vars()
            .iter()
            .map(|v| (v.cap - v.min) as usize)
            .sum::<usize>()
            + 2;
        let mut out = f.clone();
        let mut cur = f.clone();
        for k in 1..=bound {
            cur = self.apply(&cur)?.scale_rational(&int(k as i64).recip());
            if cur.is_zero() {
                return Ok(out);
            }
            out = out.try_add(&cur)?;
        }
        Err(Error::Termination("iteration bound exceeded".into()))
    }

    /// JSON description: list of `{coefficient, word}`.
    pub fn to_json(&self) -> serde_json::Value {
        let names = self.vars.vars();
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|t| {
                let word: Vec<String> = t
                    .word
                    .iter()
                    .map(|d| match *d {
                        Derivation::Partial(v) => format!("d/d{}", names[v].name),
                        Derivation::Lambda(v) => format!("-{0}^3 d/d{0}", names[v].name),
                    })
                    .collect();
                json!({ "coefficient": t.coeff.to_json(), "word": word })
            })
            .collect();
        serde_json::Value::Array(terms)
    }
}

/// Normalized complex Gaussian moment `s_-^m s^n ↦ 2^m n!/(n-m)! s^{n-m}` (0 if `m > n`).
pub fn complex_moment(m: u32, n: u32) -> Rational {
    if m > n {
        return int(0);
    }
    int(1 << m) * factorial(n) / factorial(n - m)
}

/// The complex-Gaussian integral operator `[exp(2 ∂_s ∂_{s_-}) F]|_{s_-=0}`.
///
/// With `drop_negative_s`, monomials with a negative power of `s` map to zero;
/// otherwise they are rejected.
pub fn complex_integral_op<S: Scalar>(
    f: &Series<S>,
    s: &str,
    sm: &str,
    drop_negative_s: bool,
) -> Result<Series<S>> {
    let vars = f.vars();
    let (is, ism) = (vars.index(s)?, vars.index(sm)?);
    if vars.vars()[ism].min < 0 {
        return Err(Error::domain(
            "opcalc",
            format!("{sm} must be bounded below by 0"),
        ));
    }
    let f = if f.terms().keys().any(|e| e[is] < 0) {
        if !drop_negative_s {
            return Err(Error::domain(
                "opcalc",
                format!("negative powers of {s} need the vanishing extension"),
            ));
        }
        f.filter(|e| e[is] >= 0)
    } else {
        f.clone()
    };
    let op = DiffOp::partials(vars, S::from_rational(int(2)), &[s, sm])?;
    op.exp_apply(&f)?.at_zero(sm)
}

/// Direction of a Weierstrass transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `exp(±t ∂_s^2) f`.
pub fn weierstrass<S: Scalar>(
    f: &Series<S>,
    s: &str,
    t: &str,
    dir: Direction,
) -> Result<Series<S>> {
    let vars = f.vars();
    let sign = if dir == Direction::Forward { 1 } else { -1 };
    let coeff = Series::var(vars, t)?.scale_rational(&int(sign));
    let is = vars.index(s)?;
    DiffOp::term(
        coeff,
        vec![Derivation::Partial(is), Derivation::Partial(is)],
    )
    .exp_apply(f)
}

/// Heat-kernel form of the forward transform of `s^n`:
/// `E[(sqrt(2t) X + s)^n]` for standard normal `X`, via the even moments `(2k-1)!!`.
pub fn weierstrass_gaussian_form<S: Scalar>(
    vars: &Arc<VarTable>,
    s: &str,
    t: &str,
    n: u32,
) -> Result<Series<S>> {
    use crate::ring::scalar::double_factorial_odd;
    let mut out = Series::zero(vars);
    for k in 0..=n / 2 {
        let binom = factorial(n) / (factorial(2 * k) * factorial(n - 2 * k));
        let c = binom * int(1 << k) * double_factorial_odd(k);
        let m = Series::monomial_named(
            vars,
            &[(s, (n - 2 * k) as i32), (t, k as i32)],
            S::from_rational(c),
        )?;
        out = out.add(&m);
    }
    Ok(out)
}

/// Outcome of a finite identity check, with a short description of the first mismatch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub cases: usize,
    pub detail: String,
}

impl CheckOutcome {
    pub fn from_mismatches(cases: usize, mismatches: Vec<String>) -> Self {
        match mismatches.first() {
            None => CheckOutcome {
                passed: true,
                cases,
                detail: format!("{cases} cases"),
            },
            Some(m) => CheckOutcome {
                passed: false,
                cases,
                detail: format!("{} of {cases} cases failed; first: {m}", mismatches.len()),
            },
        }
    }
}

/// `∂_{s_-} f = -1/2 Σ_i λ_i^{-1}∂_{λ_i} f` for `f = Σ_i (λ_i^2 - s_-)^{k/2}`,
/// compared as series in `s_-` below `sm_cap` (symbolic `x_i = 1/λ_i`).
///
/// With `lambda = Some(..)` both sides are additionally evaluated at the
/// given eigenvalues and compared there.
pub fn lambda_derivation_check(
    k: i32,
    m: usize,
    sm_cap: i32,
    lambda: Option<&[Rational]>,
) -> Result<bool> {
    let ak = k.abs();
    let mut b = VarTable::builder().var("sm", sm_cap);
    let names: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
    for n in &names {
        b = b.laurent(n, -ak - 2, ak + 2 * sm_cap + 4);
    }
    let vars = b.build()?;
    let sm = Series::<Rational>::var(&vars, "sm")?;
    let half_k = Rational::new(k.into(), 2.into());
    let mut f = Series::zero(&vars);
    for n in &names {
        // λ^k (1 - s_- x^2)^{k/2}
        let x2 = Series::monomial_named(&vars, &[(n, 2)], int(1))?;
        let inner = Series::one(&vars).sub(&sm.mul(&x2));
        let lead = Series::monomial_named(&vars, &[(n, -k)], int(1))?;
        f = f.add(&lead.mul(&inner.pow_rational(&half_k)?));
    }
    let lhs = f.derivative("sm")?;
    let mut rhs = Series::zero(&vars);
    for n in &names {
        rhs = rhs.add(&Derivation::Lambda(vars.index(n)?).apply(&f));
    }
    let rhs = rhs.scale_rational(&Rational::new((-1).into(), 2.into()));
    let region = [("sm", sm_cap - 1)];
    let (lhs, rhs) = (lhs.truncate(&region)?, rhs.truncate(&region)?);
    if lhs != rhs {
        return Ok(false);
    }
    if let Some(lam) = lambda {
        if lam.len() != m {
            return Err(Error::Structural(
                "eigenvalue count does not match M".into(),
            ));
        }
        let (mut l, mut r) = (lhs, rhs);
        for (n, v) in names.iter().zip(lam) {
            let x = Scalar::inverse(v).ok_or_else(|| Error::domain("opcalc", "zero eigenvalue"))?;
            l = l.eval_var(n, &x)?;
            r = r.eval_var(n, &x)?;
        }
        return Ok(l == r);
    }
    Ok(true)
}

fn xs_table(m: usize, h_cap: i32, x_cap: i32, s_cap: i32) -> Result<Arc<VarTable>> {
    let mut b = VarTable::builder();
    for i in 1..=m {
        b = b.laurent(&format!("x{i}"), -2 * h_cap, x_cap);
    }
    for i in 1..=m {
        b = b.var(&format!("h{i}"), h_cap);
    }
    b.var("s", s_cap).var("t", s_cap / 2 + 1).build()
}

/// `Σ_i λ_i^{-1}∂_{λ_i} ∂_s` on the table built by [`xs_table`].
fn lambda_s_op(vars: &Arc<VarTable>, m: usize, sign: i64) -> Result<DiffOp<Rational>> {
    let is = vars.index("s")?;
    let mut op = DiffOp::zero(vars);
    for i in 1..=m {
        let ix = vars.index(&format!("x{i}"))?;
        op = op.plus(DiffOp::term(
            Series::from_rational(vars, int(sign)),
            vec![Derivation::Lambda(ix), Derivation::Partial(is)],
        ));
    }
    Ok(op)
}

/// All monomials `x^a s^b` of combined degree at most `degree`.
fn basis_monomials(vars: &Arc<VarTable>, m: usize, degree: i32) -> Result<Vec<Series<Rational>>> {
    let mut out = Vec::new();
    let mut exps = vec![0i32; m + 1];
    loop {
        if exps.iter().sum::<i32>() <= degree {
            let mut powers: Vec<(String, i32)> =
                (1..=m).map(|i| (format!("x{i}"), exps[i - 1])).collect();
            powers.push(("s".into(), exps[m]));
            let p: Vec<(&str, i32)> = powers.iter().map(|(n, e)| (n.as_str(), *e)).collect();
            out.push(Series::monomial_named(vars, &p, int(1))?);
        }
        let mut k = 0;
        loop {
            if k == exps.len() {
                return Ok(out);
            }
            exps[k] += 1;
            if exps[k] <= degree {
                break;
            }
            exps[k] = 0;
            k += 1;
        }
    }
}

/// Conjugation identity `e^{D} g e^{-D} = g e^{-tr H ∂_s}` with
/// `D = Σ_i λ_i^{-1}∂_{λ_i}∂_s` and `g = exp(-1/2 Σ_i h_i λ_i^2)`,
/// applied to every basis monomial in `(x_i, s)` of degree `<= degree`.
///
/// Only the diagonal entries `h_i` of the formal matrix enter `tr H Λ^2`;
/// `g` is truncated in the `h_i`, which no operator lowers, so the
/// comparison is exact on the whole retained series.
pub fn conjugation_check(m: usize, degree: i32, h_cap: i32) -> Result<CheckOutcome> {
    let x_cap = 3 * degree + 2;
    let vars = xs_table(m, h_cap, x_cap, degree)?;
    let mut exponent = Series::zero(&vars);
    let mut trace_h = Series::zero(&vars);
    for i in 1..=m {
        let h = Series::var(&vars, &format!("h{i}"))?;
        let lam2 = Series::monomial_named(&vars, &[(&format!("x{i}"), -2)], int(1))?;
        exponent = exponent.add(&h.mul(&lam2));
        trace_h = trace_h.add(&h);
    }
    let g = exponent
        .scale_rational(&Rational::new((-1).into(), 2.into()))
        .exp()?;
    let d_plus = lambda_s_op(&vars, m, 1)?;
    let d_minus = lambda_s_op(&vars, m, -1)?;
    let is = vars.index("s")?;
    let shift_op = DiffOp::term(trace_h.neg(), vec![Derivation::Partial(is)]);
    let mut mismatches = Vec::new();
    let basis = basis_monomials(&vars, m, degree)?;
    for f in &basis {
        let lhs = d_plus.exp_apply(&g.mul(&d_minus.exp_apply(f)?))?;
        let rhs = g.mul(&shift_op.exp_apply(f)?);
        if lhs != rhs {
            mismatches.push(format!("f = {f}"));
        }
    }
    Ok(CheckOutcome::from_mismatches(basis.len(), mismatches))
}

/// Moving `exp(-Σ_i λ_i^{-1}∂_{λ_i}∂_s)` through the integrand: it acts
/// trivially on `det(-H - s)` (formal entries, no `λ` dependence) and
/// commutes with `exp(t ∂_s^2)` on every basis monomial of degree `<= degree`.
pub fn operator_moving_check(m: usize, degree: i32) -> Result<CheckOutcome> {
    use crate::ring::matrix::Matrix;
    let mut b = VarTable::builder();
    for i in 1..=m {
        b = b.var(&format!("x{i}"), 3 * degree + 2);
    }
    for i in 1..=m {
        for j in 1..=m {
            b = b.var(&format!("h{i}{j}"), 1);
        }
    }
    let vars = b.var("s", m as i32).var("t", 0).build()?;
    let s = Series::<Rational>::var(&vars, "s")?;
    let entries = (0..m * m)
        .map(|k| {
            let h = Series::var(&vars, &format!("h{}{}", k / m + 1, k % m + 1))?;
            Ok(if k / m == k % m {
                h.add(&s).neg()
            } else {
                h.neg()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let det = Matrix::from_entries(m, entries)?.det_cofactor();
    let d_minus = lambda_s_op(&vars, m, -1)?;
    let mut mismatches = Vec::new();
    if d_minus.exp_apply(&det)? != det {
        mismatches.push("det(-H - s) is not invariant".to_string());
    }
    let vars2 = xs_table(m, 0, 3 * degree + 2, degree)?;
    let d2 = lambda_s_op(&vars2, m, -1)?;
    let basis = basis_monomials(&vars2, m, degree)?;
    for f in &basis {
        let a = d2.exp_apply(&weierstrass(f, "s", "t", Direction::Forward)?)?;
        let b = weierstrass(&d2.exp_apply(f)?, "s", "t", Direction::Forward)?;
        if a != b {
            mismatches.push(format!("commutation fails on {f}"));
        }
    }
    Ok(CheckOutcome::from_mismatches(basis.len() + 1, mismatches))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::rat;

    type R = Series<Rational>;

    fn table() -> Arc<VarTable> {
        VarTable::builder()
            .var("s", 8)
            .var("sm", 8)
            .var("t", 6)
            .laurent("x", -4, 12)
            .build()
            .unwrap()
    }

    #[test]
    fn heat_operator_on_square() {
        let v = table();
        let s2 = R::monomial_named(&v, &[("s", 2)], int(1)).unwrap();
        let out = weierstrass(&s2, "s", "t", Direction::Forward).unwrap();
        let expected = s2.add(&R::monomial_named(&v, &[("t", 1)], int(2)).unwrap());
        assert_eq!(out, expected);
    }

    #[test]
    fn complex_integral_examples() {
        let v = table();
        let m = |a: i32, b: i32| R::monomial_named(&v, &[("sm", a), ("s", b)], int(1)).unwrap();
        assert_eq!(
            complex_integral_op(&m(1, 1), "s", "sm", false).unwrap(),
            R::from_rational(&v, int(2))
        );
        assert_eq!(
            complex_integral_op(&m(2, 3), "s", "sm", false).unwrap(),
            R::monomial_named(&v, &[("s", 1)], int(24)).unwrap()
        );
        assert!(complex_integral_op(&m(3, 2), "s", "sm", false)
            .unwrap()
            .is_zero());
        assert_eq!(
            complex_integral_op(&R::one(&v), "s", "sm", false).unwrap(),
            R::one(&v)
        );
    }

    #[test]
    fn negative_s_powers_need_the_flag() {
        let v = VarTable::builder()
            .laurent("s", -2, 4)
            .var("sm", 2)
            .build()
            .unwrap();
        let f = R::monomial_named(&v, &[("s", -1), ("sm", 1)], int(1)).unwrap();
        assert!(complex_integral_op(&f, "s", "sm", false).is_err());
        assert!(complex_integral_op(&f, "s", "sm", true).unwrap().is_zero());
    }

    #[test]
    fn lambda_derivation_times_s_derivative() {
        let v = table();
        let ix = v.index("x").unwrap();
        let is = v.index("s").unwrap();
        let op = DiffOp::term(
            R::one(&v),
            vec![Derivation::Lambda(ix), Derivation::Partial(is)],
        );
        let f = R::monomial_named(&v, &[("x", 1), ("s", 1)], int(1)).unwrap();
        let expected = f.sub(&R::monomial_named(&v, &[("x", 3)], int(1)).unwrap());
        assert_eq!(op.exp_apply(&f).unwrap(), expected);
    }

    #[test]
    fn missing_certificate_names_direction() {
        let v = table();
        let op = DiffOp::term(
            R::var(&v, "s").unwrap(),
            vec![Derivation::Partial(v.index("s").unwrap())],
        );
        match op.exp_apply(&R::one(&v)) {
            Err(Error::Termination(msg)) => assert!(msg.contains("\"s\"")),
            other => panic!("expected termination error, got {other:?}"),
        }
    }

    #[test]
    fn moment_table() {
        assert_eq!(complex_moment(2, 3), int(24));
        assert_eq!(complex_moment(3, 2), int(0));
        assert_eq!(complex_moment(1, 1), int(2));
    }

    #[test]
    fn lambda_derivation_examples() {
        assert!(lambda_derivation_check(2, 1, 3, None).unwrap());
        assert!(lambda_derivation_check(0, 2, 3, None).unwrap());
        assert!(lambda_derivation_check(1, 2, 4, Some(&[int(2), rat(3, 2)])).unwrap());
    }

    #[test]
    fn conjugation_small() {
        assert!(conjugation_check(1, 3, 2).unwrap().passed);
        assert!(operator_moving_check(1, 3).unwrap().passed);
    }
}

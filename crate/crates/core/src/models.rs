//! Evaluation pipelines for the matrix models.
//!
//! Every Hermitian integral is taken after the shift that makes the measure
//! Gaussian, with the grading `λ → λ/ε`: each propagator and each explicit
//! `Λ^{-1}` carries one `ε`. Results are normalized expectations, so their
//! constant term is 1 and the omitted prefactors are recorded in
//! [`ModelResult::normalization`].
//!
//! | id    | integrand                                                                |
//! |-------|--------------------------------------------------------------------------|
//! | `zn`  | `exp(tr X^3/6) exp(N Σ_k tr(Λ^{-1}X)^k/k)`                               |
//! | `ime` | `exp(tr X^3/6) exp(Σ_k tr(Λ^{-1}(X+s))^k/k)`                             |
//! | `zo2` | complex integral of `det sqrt(1 - s_- Λ^{-2})` times `ime`               |
//! | `bt`  | i-rotated determinant ratio with `exp(i tr X^3/6)` and `e^{s^3/6}`       |
//! | `znext` | Hermitian and complex matrix, substituted or with formal `s_i`         |

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::opcalc::{complex_integral_op, Derivation, DiffOp};
use crate::ring::matrix::Matrix;
use crate::ring::scalar::{factorial, int, Gaussian, Rational, Scalar};
use crate::ring::series::{Series, VarTable};
use crate::symfun::{miwa_times, power_sum, Miwa};
use crate::wick::entry::{
    expectation, validate_lambda, Budget, Ensemble, EntryPoly, EntrySymbol, Kind,
};
use crate::wick::traces::{Letter, Slot, TraceIntegrand, WickExpansion};

/// Which model a pipeline evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    ZN,
    IMe,
    /// Complex-integral route.
    Zo2,
    /// `exp(-Σ_k 2^k q_{2k}/(2k) ∂_s^k)` applied to `ime`.
    Zo2Operator,
    BT,
    ZNExt,
}

impl ModelKind {
    pub fn id(&self) -> &'static str {
        match self {
            ModelKind::ZN => "zn",
            ModelKind::IMe => "ime",
            ModelKind::Zo2 => "zo2",
            ModelKind::Zo2Operator => "zo2-operator",
            ModelKind::BT => "bt",
            ModelKind::ZNExt => "znext",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "zn" => ModelKind::ZN,
            "ime" => ModelKind::IMe,
            "zo2" => ModelKind::Zo2,
            "zo2-operator" => ModelKind::Zo2Operator,
            "bt" => ModelKind::BT,
            "znext" => ModelKind::ZNExt,
            _ => return Err(Error::Parse(format!("unknown model {s:?}"))),
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Truncation caps. `s` bounds the reported `s` degree; internal caps are
/// derived from it so that every reported coefficient is exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Caps {
    pub eps: i32,
    pub s: i32,
    /// Cap on `s_-`; defaults to `eps/2`, the most the grading allows.
    pub sm: Option<i32>,
    /// Caps on the formal times `s_0, s_1, ...` (general-s mode only).
    pub s_times: Vec<i32>,
    /// Orientation of the determinant ratio in the `bt` integrand.
    pub bt_ratio: BtRatio,
}

/// `det(A - iH + s)/det(A - iH - s)` as printed, or its inverse.
///
/// With the inverse ratio and odd times read as `q_k -> -q_k`, the `bt`
/// series satisfies the open constraints of [`crate::virasoro`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BtRatio {
    #[default]
    AsPrinted,
    Inverted,
}

impl Caps {
    pub fn new(eps: i32) -> Self {
        Caps {
            eps,
            s: 0,
            sm: None,
            s_times: Vec::new(),
            bt_ratio: BtRatio::AsPrinted,
        }
    }

    pub fn with_s(mut self, s: i32) -> Self {
        self.s = s;
        self
    }

    pub fn with_sm(mut self, sm: i32) -> Self {
        self.sm = Some(sm);
        self
    }

    pub fn with_s_times(mut self, caps: Vec<i32>) -> Self {
        self.s_times = caps;
        self
    }

    pub fn with_bt_ratio(mut self, ratio: BtRatio) -> Self {
        self.bt_ratio = ratio;
        self
    }

    fn sm_cap(&self) -> i32 {
        self.sm.unwrap_or(self.eps / 2).min(self.eps / 2)
    }

    fn check(&self) -> Result<()> {
        if self.eps < 0
            || self.s < 0
            || self.sm.is_some_and(|c| c < 0)
            || self.s_times.iter().any(|&c| c < 0)
        {
            return Err(Error::domain("models", "caps must be non-negative"));
        }
        Ok(())
    }
}

/// Eigenvalues: numeric, or symbolic `x_i = 1/λ_i` for `M` variables.
#[derive(Clone, Debug, PartialEq)]
pub enum Lambda {
    Numeric(Vec<Rational>),
    Symbolic(usize),
}

impl Lambda {
    pub fn m(&self) -> usize {
        match self {
            Lambda::Numeric(v) => v.len(),
            Lambda::Symbolic(m) => *m,
        }
    }
}

/// How the payload is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    EpsilonNumeric,
    XSymbolic,
}

/// An evaluated partition function with its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelResult {
    pub model: ModelKind,
    pub m: usize,
    pub n: u32,
    pub lambda: Option<Vec<Rational>>,
    pub caps: BTreeMap<String, i32>,
    pub basis: Basis,
    pub payload: Series<Rational>,
    /// Per-variable bounds inside which every coefficient is exact.
    pub region: BTreeMap<String, i32>,
    pub normalization: String,
}

impl ModelResult {
    /// Coefficients inside the region, keyed by `(variable, exponent)` lists.
    fn region_terms(
        &self,
        region: &BTreeMap<String, i32>,
    ) -> BTreeMap<Vec<(String, i32)>, Rational> {
        let names: Vec<&str> = self
            .payload
            .vars()
            .vars()
            .iter()
            .map(|v| v.name.as_str())
            .collect();
        let mut out = BTreeMap::new();
        for (e, c) in self.payload.terms() {
            let inside = names
                .iter()
                .zip(e)
                .all(|(n, &x)| region.get(*n).is_none_or(|&cap| x <= cap));
            if inside {
                let key: Vec<(String, i32)> = names
                    .iter()
                    .zip(e)
                    .filter(|(_, &x)| x != 0)
                    .map(|(n, &x)| (n.to_string(), x))
                    .collect();
                out.insert(key, c.clone());
            }
        }
        out
    }

    /// Intersection of two completeness regions.
    pub fn common_region(&self, other: &ModelResult) -> BTreeMap<String, i32> {
        let mut r = self.region.clone();
        for (k, &v) in &other.region {
            r.entry(k.clone())
                .and_modify(|c| *c = (*c).min(v))
                .or_insert(v);
        }
        r
    }

    /// Exact equality on the common completeness region.
    pub fn agrees_with(&self, other: &ModelResult) -> bool {
        let r = self.common_region(other);
        self.region_terms(&r) == other.region_terms(&r)
    }

    /// Coefficients that differ on the common region, for diagnostics.
    pub fn differences(&self, other: &ModelResult) -> Vec<String> {
        let r = self.common_region(other);
        let (a, b) = (self.region_terms(&r), other.region_terms(&r));
        let mut keys: Vec<&Vec<(String, i32)>> = a.keys().chain(b.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .filter(|k| a.get(*k) != b.get(*k))
            .map(|k| {
                let show = |m: &BTreeMap<Vec<(String, i32)>, Rational>| {
                    m.get(k).map_or("0".to_string(), |c| c.to_string())
                };
                format!("{}: {} vs {}", monomial_name(k), show(&a), show(&b))
            })
            .collect()
    }

    /// `monomial: value` lines for every coefficient inside `region`.
    pub fn canonical_on(&self, region: &BTreeMap<String, i32>) -> String {
        self.region_terms(region)
            .iter()
            .map(|(k, c)| format!("{}: {c}\n", monomial_name(k)))
            .collect()
    }

    /// Coefficient of a monomial given by `(variable, exponent)` pairs.
    pub fn coeff(&self, powers: &[(&str, i32)]) -> Result<Rational> {
        self.payload.coeff_named(powers)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let names: Vec<&str> = self
            .payload
            .vars()
            .vars()
            .iter()
            .map(|v| v.name.as_str())
            .collect();
        let coefficients: Vec<_> = self
            .payload
            .terms()
            .iter()
            .map(|(e, c)| {
                let exps: serde_json::Map<String, serde_json::Value> = names
                    .iter()
                    .zip(e)
                    .filter(|(_, &x)| x != 0)
                    .map(|(n, &x)| (n.to_string(), json!(x)))
                    .collect();
                json!({ "exponents": exps, "value": c.to_string() })
            })
            .collect();
        json!({
            "model": self.model.id(),
            "M": self.m,
            "N": self.n,
            "lambda": self.lambda.as_ref().map(|l| l.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
            "caps": self.caps,
            "basis": match self.basis { Basis::EpsilonNumeric => "epsilon-numeric", Basis::XSymbolic => "x-symbolic" },
            "region": self.region,
            "coefficients": coefficients,
            "normalization": self.normalization,
        })
    }
}

fn monomial_name(k: &[(String, i32)]) -> String {
    if k.is_empty() {
        return "1".into();
    }
    k.iter()
        .map(|(n, e)| {
            if *e == 1 {
                n.clone()
            } else {
                format!("{n}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

const NORM_HERMITIAN: &str =
    "normalized Gaussian expectation; omitted prefactor c_{Lambda,M} det(Lambda)^N exp(-tr Lambda^3/3) and the shift Jacobian";

fn eps_s_table(
    eps: i32,
    s: Option<i32>,
    extra: &[(&str, i32)],
    m_sym: Option<usize>,
) -> Result<Arc<VarTable>> {
    let mut b = VarTable::builder().var("eps", eps);
    if let Some(c) = s {
        b = b.var("s", c);
    }
    for (n, c) in extra {
        b = b.var(n, *c);
    }
    if let Some(m) = m_sym {
        for i in 1..=m {
            b = b.var(&format!("x{i}"), eps);
        }
    }
    b.build()
}

/// `x_i = 1/λ_i` as series: constants, or the variables `x1..xM`.
fn x_series<S: Scalar>(vars: &Arc<VarTable>, lambda: &Lambda) -> Result<Vec<Series<S>>> {
    match lambda {
        Lambda::Numeric(l) => Ok(l
            .iter()
            .map(|v| Series::constant(vars, S::from_rational(v.recip())))
            .collect()),
        Lambda::Symbolic(m) => (1..=*m)
            .map(|i| Series::var(vars, &format!("x{i}")))
            .collect(),
    }
}

enum Expanded {
    Real(WickExpansion<Rational>),
    Complex(WickExpansion<Gaussian>),
}

/// A Hermitian-model pipeline: the Wick expansion is computed once and then
/// evaluated at any number of eigenvalue tuples.
pub struct TracePipeline {
    kind: ModelKind,
    n: u32,
    caps: Caps,
    expanded: Expanded,
    pairings: Rational,
}

fn slot<S: Scalar>(
    vars: &Arc<VarTable>,
    power: u32,
    coeff: S,
    powers: &[(&str, i32)],
) -> Result<Slot<S>> {
    Ok(Slot {
        power,
        coeff,
        exps: vars.exponents(powers)?,
    })
}

/// `Σ_r c_r s_-^r Λ^{-2r-1}` with `(1 - sqrt(1-u))/u = Σ_r c_r u^r`, i.e.
/// `(Λ + sqrt(Λ^2 - s_-))^{-1}`.
fn inverse_sqrt_shift_slots(vars: &Arc<VarTable>, sm_cap: i32) -> Result<Vec<Slot<Gaussian>>> {
    let mut out = Vec::new();
    let half = Rational::new(1.into(), 2.into());
    for r in 0..=sm_cap {
        // coefficient of u^r in (1 - sqrt(1-u))/u is -binom(1/2, r+1) (-1)^{r+1}
        let c = -crate::ring::scalar::binomial(&half, (r + 1) as u32)
            * int(if (r + 1) % 2 == 0 { 1 } else { -1 });
        out.push(slot(
            vars,
            (2 * r + 1) as u32,
            Gaussian::from_rational(c),
            &[("eps", 2 * r + 1), ("sm", r)],
        )?);
    }
    Ok(out)
}

enum Integrand {
    Real(TraceIntegrand<Rational>),
    Complex(TraceIntegrand<Gaussian>),
}

impl Integrand {
    fn pairing_count(&self) -> Rational {
        match self {
            Integrand::Real(t) => t.pairing_count(),
            Integrand::Complex(t) => t.pairing_count(),
        }
    }
}

/// Number of pairings the expansion of `kind` would enumerate, without expanding.
pub fn estimate_pairings(kind: ModelKind, n: u32, caps: &Caps) -> Result<Rational> {
    Ok(build_integrand(kind, n, caps)?.pairing_count())
}

fn build_integrand(kind: ModelKind, n: u32, caps: &Caps) -> Result<Integrand> {
    caps.check()?;
    let d = caps.eps;
    Ok(match kind {
        ModelKind::ZN => {
            let vars = eps_s_table(d, None, &[], None)?;
            let mut t = TraceIntegrand::<Rational>::new(&vars, "eps")?;
            t.add_cubic(Rational::new(1.into(), 6.into()))?;
            if n > 0 {
                let nn = int(n as i64);
                t.add_trace_powers(
                    |k| &nn / int(k as i64),
                    &[slot(&vars, 1, int(1), &[("eps", 1)])?],
                    &[Letter::Matrix(int(1))],
                )?;
            }
            Integrand::Real(t)
        }
        ModelKind::IMe | ModelKind::Zo2 | ModelKind::Zo2Operator => {
            // every s comes with a Λ^{-1}, so s <= eps is exact
            let vars = eps_s_table(d, Some(d), &[], None)?;
            let mut t = TraceIntegrand::<Rational>::new(&vars, "eps")?;
            t.add_cubic(Rational::new(1.into(), 6.into()))?;
            let s = vars.exponents(&[("s", 1)])?;
            t.add_trace_powers(
                |k| int(k as i64).recip(),
                &[slot(&vars, 1, int(1), &[("eps", 1)])?],
                &[Letter::Matrix(int(1)), Letter::Scalar(int(1), s)],
            )?;
            Integrand::Real(t)
        }
        ModelKind::BT => {
            let sm = caps.sm_cap();
            let vars = eps_s_table(d, Some(caps.s + sm), &[("sm", sm)], None)?;
            let mut t = TraceIntegrand::<Gaussian>::new(&vars, "eps")?;
            let i = Gaussian::i();
            t.add_cubic(i.scaled(&Rational::new(1.into(), 6.into())))?;
            let slots = inverse_sqrt_shift_slots(&vars, sm)?;
            let s = vars.exponents(&[("s", 1)])?;
            let sign = match caps.bt_ratio {
                BtRatio::AsPrinted => Gaussian::one(),
                BtRatio::Inverted => Gaussian::one().negated(),
            };
            // log det(1 + A^{-1}(±s - iX)), + as printed
            t.add_trace_powers(
                |k| Gaussian::from_rational(int(if k % 2 == 1 { 1 } else { -1 }) / int(k as i64)),
                &slots,
                &[
                    Letter::Scalar(sign.clone(), s.clone()),
                    Letter::Matrix(i.negated()),
                ],
            )?;
            // -log det(1 - A^{-1}(±s + iX))
            t.add_trace_powers(
                |k| Gaussian::from_rational(int(k as i64).recip()),
                &slots,
                &[Letter::Scalar(sign, s), Letter::Matrix(i)],
            )?;
            Integrand::Complex(t)
        }
        ModelKind::ZNExt => {
            return Err(Error::domain(
                "models",
                "znext is evaluated by the entry engine",
            ))
        }
    })
}

impl TracePipeline {
    /// Builds and expands the integrand of `kind` (`N` is used by `zn` only).
    pub fn new(kind: ModelKind, n: u32, caps: &Caps) -> Result<Self> {
        let integrand = build_integrand(kind, n, caps)?;
        let pairings = integrand.pairing_count();
        let expanded = match integrand {
            Integrand::Real(t) => Expanded::Real(t.expand()?),
            Integrand::Complex(t) => Expanded::Complex(t.expand()?),
        };
        Ok(TracePipeline {
            kind,
            n,
            caps: caps.clone(),
            expanded,
            pairings,
        })
    }

    /// Number of pairings enumerated by the expansion.
    pub fn pairing_count(&self) -> &Rational {
        &self.pairings
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    fn raw<S: Scalar>(exp: &WickExpansion<S>, lambda: &Lambda) -> Result<Series<S>> {
        match lambda {
            Lambda::Numeric(l) => {
                let base = exp.evaluate(l)?;
                Ok(base)
            }
            Lambda::Symbolic(m) => {
                if *m > 2 {
                    return Err(Error::domain(
                        "models",
                        "symbolic eigenvalues are supported for M <= 2",
                    ));
                }
                let v = exp.vars();
                let mut b = VarTable::builder();
                for var in v.vars() {
                    b = b.var(&var.name, var.cap);
                }
                let cap = v.cap("eps")?;
                for i in 1..=*m {
                    b = b.var(&format!("x{i}"), cap);
                }
                exp.evaluate_symbolic(*m, &b.build()?)
            }
        }
    }

    /// Evaluates at the given eigenvalues.
    pub fn evaluate(&self, lambda: &Lambda) -> Result<ModelResult> {
        if let Lambda::Numeric(l) = lambda {
            validate_lambda(l)?;
        }
        let d = self.caps.eps;
        let sym = match lambda {
            Lambda::Symbolic(m) => Some(*m),
            Lambda::Numeric(_) => None,
        };
        let (payload, region_s) = match (&self.expanded, self.kind) {
            (Expanded::Real(e), ModelKind::ZN) => (Self::raw(e, lambda)?, None),
            (Expanded::Real(e), ModelKind::IMe) => (Self::raw(e, lambda)?, Some(d)),
            (Expanded::Real(e), ModelKind::Zo2) => {
                let raw = Self::raw(e, lambda)?;
                (complex_route(&raw, lambda, self.caps.sm_cap())?, Some(d))
            }
            (Expanded::Real(e), ModelKind::Zo2Operator) => {
                let raw = Self::raw(e, lambda)?;
                (operator_route(&raw, lambda)?, Some(d))
            }
            (Expanded::Complex(e), ModelKind::BT) => {
                let raw = Self::raw(e, lambda)?;
                (bt_finish(&raw, self.caps.s)?, Some(self.caps.s))
            }
            _ => unreachable!("expansion kind matches the model"),
        };
        let out_table = eps_s_table(d, region_s, &[], sym)?;
        let payload = payload.embed(&out_table)?;
        if payload.constant_term() != int(1) {
            return Err(Error::check(
                "models",
                format!(
                    "{} has constant term {}",
                    self.kind,
                    payload.constant_term()
                ),
            ));
        }
        let mut caps = BTreeMap::from([("eps".to_string(), d)]);
        let mut region = BTreeMap::from([("eps".to_string(), d)]);
        if let Some(s) = region_s {
            caps.insert("s".into(), s);
            region.insert("s".into(), s);
        }
        if matches!(self.kind, ModelKind::Zo2 | ModelKind::BT) {
            caps.insert("sm".into(), self.caps.sm_cap());
        }
        Ok(ModelResult {
            model: self.kind,
            m: lambda.m(),
            n: if self.kind == ModelKind::ZN { self.n } else { 1 },
            lambda: match lambda {
                Lambda::Numeric(l) => Some(l.clone()),
                Lambda::Symbolic(_) => None,
            },
            caps,
            basis: if sym.is_some() { Basis::XSymbolic } else { Basis::EpsilonNumeric },
            payload,
            region,
            normalization: match self.kind {
                ModelKind::BT => "normalized Gaussian expectation of the i-rotated form, times exp(s^3/6); omitted prefactor c_{Lambda,M} and powers of 2 pi".into(),
                ModelKind::Zo2 | ModelKind::Zo2Operator => format!("{NORM_HERMITIAN}; complex integral normalized to 1"),
                _ => NORM_HERMITIAN.into(),
            },
        })
    }
}

/// `[exp(2∂_s∂_{s_-}) Π_i sqrt(1 - s_- ε^2 x_i^2) F(s)]_{s_-=0}`.
fn complex_route(raw: &Series<Rational>, lambda: &Lambda, sm_cap: i32) -> Result<Series<Rational>> {
    let v = raw.vars();
    let mut b = VarTable::builder();
    for var in v.vars() {
        b = b.var(&var.name, var.cap);
    }
    let t = b.var("sm", sm_cap).build()?;
    let f = raw.embed(&t)?;
    let xs = x_series::<Rational>(&t, lambda)?;
    let one = Series::one(&t);
    let sm_eps2 = Series::monomial_named(&t, &[("sm", 1), ("eps", 2)], int(1))?;
    let mut det = one.clone();
    for x in &xs {
        det = det.mul(&one.sub(&sm_eps2.mul(&x.mul(x))).sqrt()?);
    }
    let out = complex_integral_op(&det.mul(&f), "s", "sm", false)?;
    out.embed(v)
}

/// `exp(-Σ_k 2^k q_{2k} ε^{2k}/(2k) ∂_s^k) F`.
fn operator_route(raw: &Series<Rational>, lambda: &Lambda) -> Result<Series<Rational>> {
    let v = raw.vars();
    let d = v.cap("eps")?;
    let is = v.index("s")?;
    let xs = x_series::<Rational>(v, lambda)?;
    let mut op = DiffOp::zero(v);
    for k in 1..=d / 2 {
        let mut q = Series::zero(v);
        for x in &xs {
            q = q.add(&x.pow(2 * k as u32));
        }
        let c =
            Series::monomial_named(v, &[("eps", 2 * k)], -int(1 << k) / int(2 * k as i64))?.mul(&q);
        op = op.plus(DiffOp::term(c, vec![Derivation::Partial(is); k as usize]));
    }
    op.exp_apply(raw)
}

/// Multiplies by `e^{s^3/6}`, integrates out `s_-`, and asserts reality.
fn bt_finish(raw: &Series<Gaussian>, s_out: i32) -> Result<Series<Rational>> {
    let v = raw.vars();
    let s3 = Series::monomial_named(
        v,
        &[("s", 3)],
        Gaussian::from_rational(Rational::new(1.into(), 6.into())),
    )?;
    let f = raw.mul(&s3.exp()?);
    let out = complex_integral_op(&f, "s", "sm", false)?;
    let s = v.index("s")?;
    let out = out.filter(|e| e[s] <= s_out);
    if !out.is_real() {
        let im = out.imag();
        return Err(Error::check(
            "models",
            format!("imaginary residue survives in the rotated form: {im}"),
        ));
    }
    let sm = v.index("sm")?;
    Ok(out.real().filter(|e| e[sm] == 0))
}

/// `eval_ZN`: `N` determinant insertions.
pub fn eval_zn(m_lambda: &Lambda, n: u32, caps: &Caps) -> Result<ModelResult> {
    TracePipeline::new(ModelKind::ZN, n, caps)?.evaluate(m_lambda)
}

pub fn eval_ime_ext(lambda: &Lambda, caps: &Caps) -> Result<ModelResult> {
    TracePipeline::new(ModelKind::IMe, 1, caps)?.evaluate(lambda)
}

pub fn eval_zo2(lambda: &Lambda, caps: &Caps) -> Result<ModelResult> {
    TracePipeline::new(ModelKind::Zo2, 1, caps)?.evaluate(lambda)
}

pub fn eval_zo2_operator(lambda: &Lambda, caps: &Caps) -> Result<ModelResult> {
    TracePipeline::new(ModelKind::Zo2Operator, 1, caps)?.evaluate(lambda)
}

pub fn eval_bt_remark(lambda: &Lambda, caps: &Caps) -> Result<ModelResult> {
    TracePipeline::new(ModelKind::BT, 1, caps)?.evaluate(lambda)
}

/// Proportionality test: `a = c * b` on the common region with `c` fixed by
/// the constant terms. Returns the constant and the mismatching coefficients.
pub fn proportionality(a: &ModelResult, b: &ModelResult) -> Result<(Rational, Vec<String>)> {
    let cb = b.payload.constant_term();
    if Scalar::is_zero(&cb) {
        return Err(Error::domain("models", "reference has zero constant term"));
    }
    let c = a.payload.constant_term() / cb;
    let mut scaled = b.clone();
    scaled.payload = b.payload.scale(&c);
    Ok((c, a.differences(&scaled)))
}

/// Mode of [`eval_zn_ext`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtMode {
    /// `s_i = s_i(Λ)`.
    Substituted,
    /// Formal `s_0..s_K` with the caps in [`Caps::s_times`].
    GeneralS,
}

fn ext_table(caps: &Caps, mode: &ExtMode) -> Result<Arc<VarTable>> {
    let mut b = VarTable::builder().var("eps", caps.eps);
    if *mode == ExtMode::GeneralS {
        for (i, &c) in caps.s_times.iter().enumerate() {
            b = b.var(&format!("s{i}"), c);
        }
    }
    b.build()
}

/// Square matrix of entry polynomials.
type EntryMatrix = Matrix<EntryPoly<Rational>>;

fn entry_matrix(
    vars: &Arc<VarTable>,
    budget: &Option<Arc<Budget>>,
    n: usize,
    f: impl Fn(usize, usize) -> Option<EntrySymbol>,
) -> EntryMatrix {
    Matrix::from_fn(n, |i, j| match f(i, j) {
        Some(s) => EntryPoly::symbol(vars, budget.clone(), s),
        None => EntryPoly::zero(vars, budget.clone()),
    })
}

fn const_poly(
    vars: &Arc<VarTable>,
    budget: &Option<Arc<Budget>>,
    powers: &[(&str, i32)],
    c: Rational,
) -> Result<EntryPoly<Rational>> {
    Ok(EntryPoly::constant(
        Series::monomial_named(vars, powers, c)?,
        budget.clone(),
    ))
}

/// The complex-matrix weight `det sqrt(1 - ε^2 Λ^{-2} ⊗ Z̄^t) exp(Σ_i 2^{-i-1} s_i tr(Z̄^t)^{i+1}/(i+1)!)`
/// with `s_i` substituted or formal.
fn ginibre_weight(
    vars: &Arc<VarTable>,
    x: &[Rational],
    n: usize,
    mode: &ExtMode,
    caps: &Caps,
) -> Result<EntryPoly<Rational>> {
    let m = x.len();
    let budget = Some(Arc::new(Budget {
        eps: vars.index("eps")?,
        cap: caps.eps,
        max_gin: None,
        max_gin_bar: None,
    }));
    let zbt = entry_matrix(vars, &budget, n, |a, b| Some(EntrySymbol::gin_bar(b, a)));
    let eps2 = const_poly(vars, &budget, &[("eps", 2)], int(1))?;
    let lam2 = Matrix::from_fn(m, |i, j| {
        if i == j {
            eps2.scale(&Series::constant(vars, &x[i] * &x[i]))
        } else {
            EntryPoly::zero(vars, budget.clone())
        }
    });
    let one = EntryPoly::constant(Series::one(vars), budget.clone());
    let kron = lam2.kron(&zbt);
    let id = Matrix::identity(m * n, &one);
    let det = id.sub(&kron)?.det_cofactor();
    let sqrt = det.pow_rational(&Rational::new(1.into(), 2.into()))?;
    let mut exponent = EntryPoly::zero(vars, budget.clone());
    let mut power = zbt.clone();
    let max_i = match mode {
        ExtMode::Substituted => (caps.eps / 2 - 1).max(-1),
        ExtMode::GeneralS => caps.s_times.len() as i32 - 1,
    };
    for i in 0..=max_i {
        let c = int(1 << (i + 1)).recip() / factorial((i + 1) as u32);
        let coeff = match mode {
            ExtMode::Substituted => {
                let lam: Vec<Rational> = x.iter().map(|v| v.recip()).collect();
                Series::monomial_named(
                    vars,
                    &[("eps", 2 * i + 2)],
                    c * miwa_times(&lam, Miwa::S(i as u32))?,
                )?
            }
            ExtMode::GeneralS => Series::monomial_named(vars, &[(&format!("s{i}"), 1)], c)?,
        };
        exponent = exponent.add(&EntryPoly::constant(coeff, budget.clone()).mul(&power.trace()));
        power = power.mul(&zbt)?;
    }
    Ok(sqrt.mul(&exponent.exp()?))
}

/// `eval_ZN_ext`: Hermitian `X` (size `M`) and complex `Z` (size `N`) by
/// entry-level Wick contraction. Feasible for `M, N <= 2` at small caps.
pub fn eval_zn_ext(
    lambda: &[Rational],
    n: usize,
    caps: &Caps,
    mode: ExtMode,
) -> Result<ModelResult> {
    validate_lambda(lambda)?;
    caps.check()?;
    if n == 0 {
        return Err(Error::domain("models", "znext needs N >= 1"));
    }
    let m = lambda.len();
    let vars = ext_table(caps, &mode)?;
    let x: Vec<Rational> = lambda.iter().map(|l| l.recip()).collect();
    let weight = ginibre_weight(&vars, &x, n, &mode, caps)?;
    let zb = weight.max_count(Kind::GinibreBar);
    let budget = Some(Arc::new(Budget {
        eps: vars.index("eps")?,
        cap: caps.eps,
        max_gin: Some(zb),
        max_gin_bar: Some(zb),
    }));
    let weight = weight.with_budget(budget.clone());
    let sixth = Rational::new(1.into(), 6.into());
    let xm = entry_matrix(&vars, &budget, m, |i, j| Some(EntrySymbol::herm(i, j)));
    let zm = entry_matrix(&vars, &budget, n, |a, b| Some(EntrySymbol::gin(a, b)));
    let one = EntryPoly::constant(Series::one(&vars), budget.clone());
    let cubic = |a: &EntryMatrix| -> Result<EntryPoly<Rational>> {
        let t = a.mul(a)?.mul(a)?.trace();
        t.scale(&Series::constant(&vars, sixth.clone())).exp()
    };
    let cubic_x = cubic(&xm)?;
    let cubic_z = if zb >= 3 { cubic(&zm)? } else { one.clone() };
    // Y = ε (Λ^{-1} ⊗ 1)(X ⊗ 1 + 1 ⊗ Z)
    let lam_inv = Matrix::from_fn(m, |i, j| {
        if i == j {
            EntryPoly::constant(
                Series::monomial_named(&vars, &[("eps", 1)], x[i].clone()).expect("eps present"),
                budget.clone(),
            )
        } else {
            EntryPoly::zero(&vars, budget.clone())
        }
    });
    let id_m = Matrix::identity(m, &one);
    let id_n = Matrix::identity(n, &one);
    let y = lam_inv
        .kron(&id_n)
        .mul(&xm.kron(&id_n).add(&id_m.kron(&zm))?)?;
    let mut log = EntryPoly::zero(&vars, budget.clone());
    let mut power = y.clone();
    for k in 1.. {
        let t = power.trace();
        if power.entries().iter().all(|e| e.is_zero()) {
            break;
        }
        log = log.add(&t.scale(&Series::constant(&vars, int(k).recip())));
        power = power.mul(&y)?;
    }
    let det = log.exp()?;
    let integrand = weight.mul(&cubic_z).mul(&det).mul(&cubic_x);
    let ensemble = Ensemble::hermitian(lambda.to_vec(), "eps")?.with_ginibre(n);
    let payload = expectation(&ensemble, &integrand)?;
    let mut caps_map = BTreeMap::from([("eps".to_string(), caps.eps)]);
    let mut region = caps_map.clone();
    if mode == ExtMode::GeneralS {
        for (i, &c) in caps.s_times.iter().enumerate() {
            caps_map.insert(format!("s{i}"), c);
            region.insert(format!("s{i}"), c);
        }
    }
    if payload.constant_term() != int(1) {
        return Err(Error::check(
            "models",
            format!("znext has constant term {}", payload.constant_term()),
        ));
    }
    Ok(ModelResult {
        model: ModelKind::ZNExt,
        m,
        n: n as u32,
        lambda: Some(lambda.to_vec()),
        caps: caps_map,
        basis: Basis::EpsilonNumeric,
        payload,
        region,
        normalization: format!("{NORM_HERMITIAN}; complex matrix integral normalized to 1"),
    })
}

/// Coefficientwise check of `∂_{s_n} Z = (1/(n+1)!) ∂_{s_0}^{n+1} Z` on the
/// region where both sides are unaffected by the `s` caps.
pub fn check_s_flow(result: &ModelResult, n: usize) -> Result<Vec<String>> {
    let p = &result.payload;
    let vars = p.vars();
    let lhs = p.derivative(&format!("s{n}"))?;
    let mut rhs = p.clone();
    for _ in 0..=n {
        rhs = rhs.derivative("s0")?;
    }
    let rhs = rhs.scale(&factorial(n as u32 + 1).recip());
    let c0 = vars.cap("s0")? - (n as i32 + 1);
    let cn = vars.cap(&format!("s{n}"))? - 1;
    let mut region: Vec<(String, i32)> = vec![("s0".into(), c0)];
    if n > 0 {
        region.push((format!("s{n}"), cn));
    }
    if c0 < 0 || cn < 0 {
        return Err(Error::domain(
            "models",
            "caps leave no room for the s-flow comparison",
        ));
    }
    let r: Vec<(&str, i32)> = region.iter().map(|(a, b)| (a.as_str(), *b)).collect();
    let (l, rr) = (lhs.truncate(&r)?, rhs.truncate(&r)?);
    let diff = l.sub(&rr);
    Ok(diff
        .terms()
        .iter()
        .map(|(e, c)| format!("{e:?}: {c}"))
        .collect())
}

/// How the complex matrix enters [`check_stolambda`].
#[derive(Clone, Debug, PartialEq)]
pub enum TraceSymbols {
    /// `tr (Z̄^t)^k` as free symbols `w_k`.
    Formal,
    /// A concrete `N x N` matrix with free entries.
    Concrete(usize),
}

/// `exp(Σ_i 2^{-i-1} s_i(Λ) tr(Z̄^t)^{i+1}/(i+1)!) = det Λ^N / det sqrt(Λ^2 ⊗ 1 - 1 ⊗ Z̄^t)`
/// to order `k` in the complex matrix.
pub fn check_stolambda(lambda: &[Rational], symbols: TraceSymbols, k: i32) -> Result<bool> {
    validate_lambda(lambda)?;
    let m = lambda.len();
    let q = |j: u32| power_sum(lambda, j);
    match symbols {
        TraceSymbols::Formal => {
            let t = crate::symfun::graded_table("w", k.max(0) as u32, false)?;
            let mut lhs_exp = Series::zero(&t);
            let mut rhs_exp = Series::zero(&t);
            for i in 0..k {
                let w = Series::var(&t, &format!("w{}", i + 1))?;
                let c = miwa_times(lambda, Miwa::S(i as u32))?
                    / (int(1 << (i + 1)) * factorial(i as u32 + 1));
                lhs_exp = lhs_exp.add(&w.scale(&c));
                // -1/2 tr log(1 - Λ^{-2} ⊗ Z̄^t) = 1/2 Σ_j tr Λ^{-2j} w_j / j
                rhs_exp =
                    rhs_exp.add(&w.scale(&(q(2 * (i as u32 + 1))? / int(2 * (i as i64 + 1)))));
            }
            Ok(lhs_exp.exp()? == rhs_exp.exp()?)
        }
        TraceSymbols::Concrete(n) => {
            let mut b = VarTable::builder().var("t", k);
            for a in 0..n {
                for c in 0..n {
                    b = b.var(&format!("c{a}{c}"), k);
                }
            }
            let t = b.build()?;
            let cm = Matrix::from_fn(n, |a, c| {
                Series::monomial_named(&t, &[("t", 1), (&format!("c{a}{c}"), 1)], int(1))
                    .expect("declared")
            });
            let one = Series::one(&t);
            let mut lhs_exp = Series::zero(&t);
            let mut power = cm.clone();
            for i in 0..k {
                let c = miwa_times(lambda, Miwa::S(i as u32))?
                    / (int(1 << (i + 1)) * factorial(i as u32 + 1));
                lhs_exp = lhs_exp.add(&power.trace().scale(&c));
                power = power.mul(&cm)?;
            }
            let lhs = lhs_exp.exp()?;
            let lam2 =
                Matrix::diagonal(lambda.iter().map(|l| Series::constant(&t, l * l)).collect());
            let big = lam2
                .kron(&Matrix::identity(n, &one))
                .sub(&Matrix::identity(m, &one).kron(&cm))?;
            let det = big.det_cofactor();
            let det_l2n: Rational = lambda.iter().fold(int(1), |a, l| a * l.pow(2 * n as i32));
            let rhs = det
                .scale(&det_l2n.recip())
                .pow_rational(&Rational::new((-1).into(), 2.into()))?;
            Ok(lhs == rhs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::rat;

    fn one() -> Lambda {
        Lambda::Numeric(vec![int(1)])
    }

    #[test]
    fn first_corrections_at_m1() {
        let r = eval_zn(&one(), 0, &Caps::new(3)).unwrap();
        assert_eq!(r.coeff(&[("eps", 3)]).unwrap(), rat(5, 24));
        let r = eval_zn(&one(), 1, &Caps::new(3)).unwrap();
        assert_eq!(r.coeff(&[("eps", 3)]).unwrap(), rat(41, 24));
        assert_eq!(r.payload.len(), 2);
        let r = eval_zn(&Lambda::Numeric(vec![int(2), int(3)]), 3, &Caps::new(0)).unwrap();
        assert_eq!(r.payload, Series::one(r.payload.vars()));
    }

    #[test]
    fn ime_slice_and_linear_term() {
        let caps = Caps::new(4).with_s(4);
        let ime = eval_ime_ext(&one(), &caps).unwrap();
        assert_eq!(ime.coeff(&[("eps", 1), ("s", 1)]).unwrap(), int(1));
        let zn = eval_zn(&one(), 1, &Caps::new(4)).unwrap();
        let slice = ime.payload.at_zero("s").unwrap();
        for (e, c) in zn.payload.terms() {
            assert_eq!(slice.coeff_named(&[("eps", e[0])]).unwrap(), *c);
        }
    }

    #[test]
    fn zo2_routes_agree_at_m1() {
        let caps = Caps::new(4).with_s(2);
        let a = eval_zo2(&one(), &caps).unwrap();
        let b = eval_zo2_operator(&one(), &caps).unwrap();
        assert!(a.agrees_with(&b), "{:?}", a.differences(&b));
        assert_eq!(a.coeff(&[("eps", 3)]).unwrap(), rat(17, 24));
    }

    #[test]
    fn zo2_without_sm_is_ime() {
        let caps = Caps::new(3).with_s(3).with_sm(0);
        let a = eval_zo2(&one(), &caps).unwrap();
        let b = eval_ime_ext(&one(), &caps).unwrap();
        assert!(a.agrees_with(&b));
    }

    #[test]
    fn rotated_form_is_real() {
        let r = eval_bt_remark(&one(), &Caps::new(3).with_s(3)).unwrap();
        assert_eq!(r.coeff(&[("s", 3)]).unwrap(), rat(1, 6));
        assert_eq!(r.coeff(&[("eps", 3)]).unwrap(), rat(7, 24));
    }

    #[test]
    fn symbolic_matches_numeric() {
        let caps = Caps::new(4);
        let sym = eval_zn(&Lambda::Symbolic(2), 1, &caps).unwrap();
        let l = [int(2), int(5)];
        let num = eval_zn(&Lambda::Numeric(l.to_vec()), 1, &caps).unwrap();
        let mut at = sym.payload.clone();
        for (i, v) in l.iter().enumerate() {
            at = at.eval_var(&format!("x{}", i + 1), &v.recip()).unwrap();
        }
        for (e, c) in num.payload.terms() {
            assert_eq!(at.coeff_named(&[("eps", e[0])]).unwrap(), *c);
        }
    }

    #[test]
    fn substituted_extension_equals_zn() {
        let caps = Caps::new(3);
        let ext = eval_zn_ext(&[int(1)], 1, &caps, ExtMode::Substituted).unwrap();
        assert_eq!(ext.coeff(&[("eps", 3)]).unwrap(), rat(41, 24));
    }

    #[test]
    fn stolambda_examples() {
        assert!(check_stolambda(&[int(2)], TraceSymbols::Concrete(1), 4).unwrap());
        assert!(check_stolambda(&[int(2), int(3)], TraceSymbols::Formal, 8).unwrap());
    }
}

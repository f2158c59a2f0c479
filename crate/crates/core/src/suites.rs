//! Named verification suites. Each suite is a fixed, seeded list of checks;
//! checks run in parallel and are reported in list order.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::identities;
use crate::models::{
    check_s_flow, check_stolambda, estimate_pairings, eval_bt_remark, eval_zn, eval_zn_ext,
    eval_zo2, eval_zo2_operator, proportionality, BtRatio, Caps, ExtMode, Lambda, ModelKind,
    ModelResult, TraceSymbols,
};
use crate::opcalc::{
    self, complex_integral_op, complex_moment, weierstrass, weierstrass_gaussian_form,
    CheckOutcome, Direction,
};
use crate::quadrature::{self, rational_to_f64, QuadOutcome, QuadStatus, TestPoly};
use crate::report::{CheckRecord, Status, SuiteReport};
use crate::ring::scalar::{int, Rational};
use crate::ring::series::{Series, VarTable};
use crate::symfun::QPolynomial;
use crate::virasoro::{
    basis, bracket_check, commutator_check, conjugation_mismatches, constraint_residuals,
    extract_tau, first_constraint, first_constraint_conjugated, relation_mismatches,
    second_constraint, second_constraint_conjugated, ConjugatedForm, RangeConvention, Residual,
    TauSource, ZeroModeShift,
};
use crate::wick::entry::mean_value_check;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 1729;
/// Largest pairing count a suite will enumerate for one pipeline.
pub const DEFAULT_PAIRING_BUDGET: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Appendix,
    Lemma1,
    Theorem2,
    Theorem1,
    Virasoro,
    Section4,
    Numeric,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 8] = [
        "appendix", "lemma1", "theorem2", "theorem1", "virasoro", "section4", "numeric", "all",
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "appendix" => Suite::Appendix,
            "lemma1" => Suite::Lemma1,
            "theorem2" => Suite::Theorem2,
            "theorem1" => Suite::Theorem1,
            "virasoro" => Suite::Virasoro,
            "section4" => Suite::Section4,
            "numeric" => Suite::Numeric,
            "all" => Suite::All,
            _ => {
                return Err(Error::Parse(format!(
                    "unknown suite {s:?}; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        Suite::NAMES[*self as usize]
    }

    fn parts(&self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Appendix,
                Suite::Lemma1,
                Suite::Theorem2,
                Suite::Theorem1,
                Suite::Virasoro,
                Suite::Section4,
                Suite::Numeric,
            ],
            s => vec![*s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Overrides for the suite defaults. `None` keeps each check's default.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub lambda: Option<Vec<Rational>>,
    /// ε cap (weight cap in the virasoro suite).
    pub depth: Option<i32>,
    pub s_cap: Option<i32>,
    pub sminus_cap: Option<i32>,
    pub seed: u64,
    /// Relative tolerance of the quadrature checks.
    pub tol: f64,
    pub pairing_budget: u64,
    /// Record wall-clock time per check (breaks byte-stability of reports).
    pub timings: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            m: None,
            n: None,
            lambda: None,
            depth: None,
            s_cap: None,
            sminus_cap: None,
            seed: DEFAULT_SEED,
            tol: 1e-6,
            pairing_budget: DEFAULT_PAIRING_BUDGET,
            timings: false,
        }
    }
}

impl SuiteConfig {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "M": self.m,
            "N": self.n,
            "lambda": self.lambda.as_ref().map(|l| l.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
            "depth": self.depth,
            "s_cap": self.s_cap,
            "sminus_cap": self.sminus_cap,
            "seed": self.seed,
            "tol": format!("{:e}", self.tol),
            "pairing_budget": self.pairing_budget,
            "timings": self.timings,
        })
    }

    fn lambda_for(&self, m: usize) -> Result<Option<Vec<Rational>>> {
        match &self.lambda {
            Some(l) if l.len() == m => Ok(Some(l.clone())),
            Some(l) => Err(Error::domain(
                "suites",
                format!("lambda has {} entries but M = {m}", l.len()),
            )),
            None => Ok(None),
        }
    }

    fn ms(&self, default: &[usize]) -> Vec<usize> {
        match (self.m, &self.lambda) {
            (Some(m), _) => vec![m],
            (None, Some(l)) => vec![l.len()],
            (None, None) => default.to_vec(),
        }
    }
}

type CheckFn = Box<dyn Fn() -> Result<CheckRecord> + Send + Sync>;

struct Job {
    name: String,
    anchor: &'static str,
    run: CheckFn,
}

fn job(
    name: impl Into<String>,
    anchor: &'static str,
    run: impl Fn() -> Result<CheckRecord> + Send + Sync + 'static,
) -> Job {
    Job {
        name: name.into(),
        anchor,
        run: Box::new(run),
    }
}

fn outcome(status: Status, detail: impl Into<String>) -> CheckRecord {
    CheckRecord::new("", "", status, detail)
}

fn from_check(o: CheckOutcome) -> CheckRecord {
    outcome(Status::from_bool(o.passed), o.detail)
}

fn from_mismatches(cases: usize, mismatches: Vec<String>) -> CheckRecord {
    from_check(CheckOutcome::from_mismatches(cases, mismatches))
}

fn from_quad(o: QuadOutcome) -> CheckRecord {
    let status = match o.status {
        QuadStatus::Pass => Status::Pass,
        QuadStatus::Fail => Status::Fail,
        QuadStatus::Inconclusive => Status::Inconclusive,
    };
    let lhs = format!("{:.9e}", o.lhs.value);
    let rhs = format!("{:.9e}", o.rhs.value);
    outcome(
        status,
        format!(
            "{}; relative difference {:.3e}",
            o.detail, o.relative_difference
        ),
    )
    .with_digests(&lhs, &rhs)
    .with_values(o.to_json())
}

/// Exact equality of two model results on their common completeness region.
fn compare_models(a: &ModelResult, b: &ModelResult) -> CheckRecord {
    let region = a.common_region(b);
    let diffs = a.differences(b);
    let detail = match diffs.first() {
        None => format!("{} vs {}: equal on the common region", a.model, b.model),
        Some(d) => format!(
            "{} vs {}: {} coefficients differ; first {d}",
            a.model,
            b.model,
            diffs.len()
        ),
    };
    outcome(Status::from_bool(diffs.is_empty()), detail)
        .with_digests(&a.canonical_on(&region), &b.canonical_on(&region))
        .with_region(region)
}

fn ensure_feasible(kind: ModelKind, n: u32, caps: &Caps, budget: u64) -> Result<()> {
    let est = estimate_pairings(kind, n, caps)?;
    if est > int(budget as i64) {
        return Err(Error::Infeasible(format!(
            "{kind} at eps <= {} needs an estimated {est} pairings, over the budget of {budget}",
            caps.eps
        )));
    }
    Ok(())
}

/// Runs `suite` and assembles its report. Infeasible caps are refused before
/// any check runs.
pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<SuiteReport> {
    let mut jobs = Vec::new();
    for part in suite.parts() {
        let prefix = part.name();
        let list = match part {
            Suite::Appendix => appendix(),
            Suite::Lemma1 => lemma1(config),
            Suite::Theorem2 => theorem2(config)?,
            Suite::Theorem1 => theorem1(config)?,
            Suite::Virasoro => virasoro(config)?,
            Suite::Section4 => section4(config),
            Suite::Numeric => numeric(config)?,
            Suite::All => unreachable!("expanded by parts"),
        };
        jobs.extend(list.into_iter().map(|j| Job {
            name: format!("{prefix}.{}", j.name),
            ..j
        }));
    }
    let timings = config.timings;
    let checks = jobs
        .par_iter()
        .map(|j| {
            let start = Instant::now();
            let mut rec =
                (j.run)().unwrap_or_else(|e| outcome(Status::Fail, format!("error: {e}")));
            rec.name = j.name.clone();
            rec.anchor = j.anchor.to_string();
            if timings {
                rec.runtime_ms = Some(start.elapsed().as_millis() as u64);
            }
            rec
        })
        .collect();
    Ok(SuiteReport {
        suite: suite.name().to_string(),
        config: config.to_json(),
        checks,
    })
}

fn appendix() -> Vec<Job> {
    vec![
        job(
            "complex-moments",
            "complex Gaussian integral operator on s_-^m s^n",
            || {
                let vars = VarTable::builder().var("s", 8).var("sm", 8).build()?;
                let mut bad = Vec::new();
                for m in 0..=8 {
                    for n in 0..=8 {
                        let f = Series::<Rational>::monomial_named(
                            &vars,
                            &[("sm", m), ("s", n)],
                            int(1),
                        )?;
                        let got = complex_integral_op(&f, "s", "sm", false)?;
                        let want = if m > n {
                            Series::zero(&vars)
                        } else {
                            Series::monomial_named(
                                &vars,
                                &[("s", n - m)],
                                complex_moment(m as u32, n as u32),
                            )?
                        };
                        if got != want {
                            bad.push(format!("m={m}, n={n}: {got} vs {want}"));
                        }
                    }
                }
                Ok(from_mismatches(81, bad))
            },
        ),
        job(
            "weierstrass-roundtrip",
            "heat operator and its inverse on s^n",
            || {
                let vars = VarTable::builder().var("s", 12).var("t", 6).build()?;
                let mut bad = Vec::new();
                for n in 0..=12 {
                    let f = Series::<Rational>::monomial_named(&vars, &[("s", n)], int(1))?;
                    for (a, b) in [
                        (Direction::Forward, Direction::Inverse),
                        (Direction::Inverse, Direction::Forward),
                    ] {
                        if weierstrass(&weierstrass(&f, "s", "t", a)?, "s", "t", b)? != f {
                            bad.push(format!("n={n}, {a:?} then {b:?}"));
                        }
                    }
                }
                Ok(from_mismatches(26, bad))
            },
        ),
        job(
            "weierstrass-heat-kernel",
            "heat operator against Gaussian moments on s^n",
            || {
                let vars = VarTable::builder().var("s", 8).var("t", 4).build()?;
                let mut bad = Vec::new();
                for n in 0..=8 {
                    let f = Series::<Rational>::monomial_named(&vars, &[("s", n)], int(1))?;
                    let op = weierstrass(&f, "s", "t", Direction::Forward)?;
                    let gauss = weierstrass_gaussian_form(&vars, "s", "t", n as u32)?;
                    if op != gauss {
                        bad.push(format!("n={n}: {op} vs {gauss}"));
                    }
                }
                Ok(from_mismatches(9, bad))
            },
        ),
        job(
            "weierstrass-unitriangular",
            "heat operator is unitriangular on the monomial basis",
            || Ok(from_check(identities::weierstrass_injectivity(12)?)),
        ),
    ]
}

fn lemma1(config: &SuiteConfig) -> Vec<Job> {
    let seed = config.seed;
    vec![
        job(
            "det-expansion",
            "last-column expansion of the exponential determinant",
            || {
                let bad: Vec<String> = (1..=3)
                    .filter_map(|m| match identities::lemma1_det_expansion(m, None) {
                        Ok(true) => None,
                        Ok(false) => Some(format!("M={m}")),
                        Err(e) => Some(format!("M={m}: {e}")),
                    })
                    .collect();
                Ok(from_mismatches(3, bad))
            },
        ),
        job(
            "product-rearrangement",
            "splitting the pair product at one index",
            move || {
                let mut bad = Vec::new();
                let mut cases = 0;
                for n in 2..=4 {
                    for k in 1..=n {
                        let o = identities::lemma1_product_identity(n, k, 20, seed)?;
                        cases += o.cases;
                        if !o.passed {
                            bad.push(format!("M+1={n}, k={k}: {}", o.detail));
                        }
                    }
                }
                Ok(from_mismatches(cases, bad))
            },
        ),
        job("bordered-traces", "traces of the bordered matrix", || {
            let mut bad = Vec::new();
            let mut cases = 0;
            for m in 1..=2 {
                let o = identities::bordered_trace_identities(m)?;
                cases += o.cases;
                if !o.passed {
                    bad.push(format!("M={m}: {}", o.detail));
                }
            }
            Ok(from_mismatches(cases, bad))
        }),
        job(
            "trace-class-derivation",
            "s_- derivative of tr (Lambda^2 - s_-)^{k/2} as a Lambda derivation",
            || {
                let mut bad = Vec::new();
                for m in 1..=3 {
                    for k in -7..=7 {
                        if !opcalc::lambda_derivation_check(k, m, 6, None)? {
                            bad.push(format!("M={m}, k={k}"));
                        }
                    }
                }
                Ok(from_mismatches(45, bad))
            },
        ),
    ]
}

fn theorem2(config: &SuiteConfig) -> Result<Vec<Job>> {
    let eps = config.depth.unwrap_or(6);
    let s = config.s_cap.unwrap_or(3);
    let mut caps = Caps::new(eps).with_s(s);
    ensure_feasible(ModelKind::Zo2, 1, &caps, config.pairing_budget)?;
    let bt_eps = config.depth.unwrap_or(5);
    let mut bt_caps = Caps::new(bt_eps).with_s(s);
    if let Some(sm) = config.sminus_cap {
        caps = caps.with_sm(sm);
        bt_caps = bt_caps.with_sm(sm);
    }
    ensure_feasible(ModelKind::BT, 1, &bt_caps, config.pairing_budget)?;
    let mut jobs = Vec::new();
    for m in 1..=2 {
        jobs.push(job(
            format!("conjugation[M={m}]"),
            "conjugating the Gaussian weight by the Lambda-s operator",
            move || Ok(from_check(opcalc::conjugation_check(m, 6, 2)?)),
        ));
        jobs.push(job(
            format!("operator-moving[M={m}]"),
            "moving the Lambda-s operator through the integrand",
            move || Ok(from_check(opcalc::operator_moving_check(m, 6)?)),
        ));
    }
    for m in config.ms(&[1, 2]) {
        let lambda = match config.lambda_for(m)? {
            Some(l) => Lambda::Numeric(l),
            None if m == 1 => Lambda::Numeric(vec![int(1)]),
            None => Lambda::Symbolic(m),
        };
        let caps = caps.clone();
        jobs.push(job(
            format!("complex-route-vs-operator[M={m}]"),
            "complex matrix integral against the operator image",
            move || {
                let a = eval_zo2(&lambda, &caps)?;
                let b = eval_zo2_operator(&lambda, &caps)?;
                Ok(compare_models(&a, &b))
            },
        ));
    }
    let lambda = config
        .lambda_for(1)
        .ok()
        .flatten()
        .unwrap_or_else(|| vec![int(1)]);
    jobs.push(job(
        "rotated-form-proportional[M=1]",
        "rotated contour form proportional to the complex route",
        move || {
            let l = Lambda::Numeric(lambda.clone());
            let bt = eval_bt_remark(&l, &bt_caps)?;
            let zo2 = eval_zo2(&l, &bt_caps)?;
            let (c, diffs) = proportionality(&bt, &zo2)?;
            let region = bt.common_region(&zo2);
            let detail = match diffs.first() {
                None => format!("proportional with constant {c}"),
                Some(d) => format!(
                    "constant {c} fixed by the constant terms; {} coefficients differ; first {d}",
                    diffs.len()
                ),
            };
            Ok(outcome(Status::from_bool(diffs.is_empty()), detail)
                .with_digests(&bt.canonical_on(&region), &zo2.canonical_on(&region))
                .with_region(region))
        },
    ));
    Ok(jobs)
}

fn theorem1(config: &SuiteConfig) -> Result<Vec<Job>> {
    let pairs: Vec<(usize, usize)> = match (config.m, config.n, &config.lambda) {
        (None, None, None) => vec![(1, 1), (2, 1), (1, 2)],
        _ => {
            let ms = config.ms(&[1]);
            vec![(ms[0], config.n.unwrap_or(1))]
        }
    };
    let mut jobs = Vec::new();
    for (m, n) in pairs {
        if m > 2 || n > 2 || n == 0 {
            return Err(Error::Infeasible(format!(
                "the entry-level extension supports 1 <= M, N <= 2, got M={m}, N={n}"
            )));
        }
        let eps = config.depth.unwrap_or(if m == 1 { 6 } else { 5 });
        let caps = Caps::new(eps);
        ensure_feasible(ModelKind::ZN, n as u32, &caps, config.pairing_budget)?;
        let lambda = config
            .lambda_for(m)?
            .unwrap_or_else(|| (1..=m as i64).map(int).collect());
        jobs.push(job(
            format!("extension-substituted[M={m},N={n}]"),
            "extended model at substituted times equals Z_N",
            move || {
                let ext = eval_zn_ext(&lambda, n, &caps, ExtMode::Substituted)?;
                let zn = eval_zn(&Lambda::Numeric(lambda.clone()), n as u32, &caps)?;
                Ok(compare_models(&ext, &zn))
            },
        ));
    }
    jobs.push(job(
        "first-correction[M=1,N=1]",
        "eps^3 coefficient of Z_1 at Lambda = 1",
        || {
            let caps = Caps::new(3);
            let ext =
                eval_zn_ext(&[int(1)], 1, &caps, ExtMode::Substituted)?.coeff(&[("eps", 3)])?;
            let zn = eval_zn(&Lambda::Numeric(vec![int(1)]), 1, &caps)?.coeff(&[("eps", 3)])?;
            let want = Rational::new(41.into(), 24.into());
            let ok = ext == want && zn == want;
            Ok(outcome(
                Status::from_bool(ok),
                format!("extension {ext}, Z_N {zn}, expected {want}"),
            )
            .with_digests(&ext.to_string(), &zn.to_string()))
        },
    ));
    jobs.push(job(
        "mean-value",
        "holomorphic Ginibre moments vanish",
        || {
            let bad: Vec<String> = (1..=2)
                .filter(|&n| !mean_value_check(n, 6))
                .map(|n| format!("N={n}"))
                .collect();
            Ok(from_mismatches(2, bad))
        },
    ));
    let formal_lambda = config
        .lambda
        .clone()
        .unwrap_or_else(|| vec![int(2), int(3)]);
    jobs.push(job(
        "times-to-lambda[formal]",
        "exponential of the s-times against the square-root determinant",
        move || {
            let ok = check_stolambda(&formal_lambda, TraceSymbols::Formal, 8)?;
            Ok(outcome(
                Status::from_bool(ok),
                "formal traces w_k to order 8",
            ))
        },
    ));
    for n in 1..=2 {
        jobs.push(job(
            format!("times-to-lambda[M=1,N={n}]"),
            "exponential of the s-times against the square-root determinant",
            move || {
                let ok = check_stolambda(&[int(2)], TraceSymbols::Concrete(n), 4)?;
                Ok(outcome(
                    Status::from_bool(ok),
                    format!("concrete {n}x{n} matrix to order 4"),
                ))
            },
        ));
    }
    let flow = Arc::new(std::sync::OnceLock::new());
    for k in 0..=3 {
        let flow = flow.clone();
        jobs.push(job(
            format!("s-flow[n={k}]"),
            "s_n derivative equals the (n+1)-st s_0 derivative",
            move || {
                let g: &Result<ModelResult> = flow.get_or_init(|| {
                    eval_zn_ext(
                        &[int(1)],
                        1,
                        &Caps::new(6).with_s_times(vec![4, 2, 2, 2]),
                        ExtMode::GeneralS,
                    )
                });
                let g = g.as_ref().map_err(Clone::clone)?;
                let bad = check_s_flow(g, k)?;
                Ok(from_mismatches(g.payload.len(), bad).with_region(g.region.clone()))
            },
        ));
    }
    Ok(jobs)
}

fn residual_record(rs: &[Residual]) -> CheckRecord {
    let bad: Vec<String> = rs
        .iter()
        .filter(|r| !r.vanishes())
        .map(|r| match r.complete_weight {
            Some(w) => format!("{} on weight <= {w}: {}", r.constraint, r.residual),
            None => format!("{} (no complete weight): {}", r.constraint, r.residual),
        })
        .collect();
    let detail = match bad.first() {
        None => format!("{} residuals vanish", rs.len()),
        Some(b) => format!("{} of {} residuals nonzero; {b}", bad.len(), rs.len()),
    };
    let canonical: String = rs
        .iter()
        .map(|r| format!("{}: {}\n", r.constraint, r.residual))
        .collect();
    let zero: String = rs
        .iter()
        .map(|r| format!("{}: 0\n", r.constraint))
        .collect();
    outcome(Status::from_bool(bad.is_empty()), detail).with_digests(&canonical, &zero)
}

fn virasoro(config: &SuiteConfig) -> Result<Vec<Job>> {
    let w = config.depth.unwrap_or(6);
    if w < 1 {
        return Err(Error::domain(
            "suites",
            "the virasoro weight must be at least 1",
        ));
    }
    let caps = Caps::new(w).with_s(w);
    for kind in [ModelKind::IMe, ModelKind::Zo2, ModelKind::BT] {
        ensure_feasible(kind, 0, &caps, config.pairing_budget)?;
    }
    let (w, seed) = (w as u32, config.seed);
    let printed = TauSource::Bt {
        ratio: BtRatio::AsPrinted,
        negate_odd: false,
    };
    let reoriented = TauSource::Bt {
        ratio: BtRatio::Inverted,
        negate_odd: true,
    };
    let sources = [TauSource::IMe, TauSource::Zo2, printed, reoriented];
    let taus: Vec<QPolynomial> = sources
        .par_iter()
        .map(|s| extract_tau(*s, w, seed))
        .collect::<Result<_>>()?;
    let taus = Arc::new(taus);
    let (ime, zo2, bt, bt_re) = (0, 1, 2, 3);
    let mut jobs = Vec::new();
    let t = taus.clone();
    jobs.push(job(
        "open-relation[zo2]",
        "open tau equals exp(-S) applied to the extended tau",
        move || {
            let bad = relation_mismatches(&t[zo2], &t[ime]);
            Ok(from_mismatches(t[zo2].terms().len(), bad))
        },
    ));
    let t = taus.clone();
    jobs.push(job(
        "constraints[bt]",
        "open Virasoro constraints on the extracted tau",
        move || {
            let rs = constraint_residuals(
                &t[bt],
                &[0, 1],
                RangeConvention::Corrected,
                ZeroModeShift::None,
            );
            Ok(residual_record(&rs))
        },
    ));
    let t = taus.clone();
    jobs.push(job(
        "constraints[bt,reoriented,shifted]",
        "open Virasoro constraints on the extracted tau",
        move || {
            let rs = constraint_residuals(
                &t[bt_re],
                &[0, 1],
                RangeConvention::Corrected,
                ZeroModeShift::Sixteenth,
            );
            Ok(residual_record(&rs))
        },
    ));
    let t = taus.clone();
    jobs.push(job(
        "range-convention",
        "summation range of the first constraint",
        move || {
            let first =
                |c| constraint_residuals(&t[bt_re], &[], c, ZeroModeShift::Sixteenth)[0].vanishes();
            let (written, corrected) = (
                first(RangeConvention::AsWritten),
                first(RangeConvention::Corrected),
            );
            let annihilating: Vec<&str> = [
                (RangeConvention::AsWritten, written),
                (RangeConvention::Corrected, corrected),
            ]
            .iter()
            .filter(|(_, ok)| *ok)
            .map(|(c, _)| c.name())
            .collect();
            Ok(outcome(
                Status::from_bool(corrected),
                format!("annihilating range: {annihilating:?}"),
            ))
        },
    ));
    let t = taus.clone();
    jobs.push(job(
        "even-times[bt]",
        "the extracted tau does not depend on even times",
        move || {
            let rs: Vec<Residual> =
                constraint_residuals(&t[bt], &[], RangeConvention::Corrected, ZeroModeShift::None)
                    .into_iter()
                    .filter(|r| r.constraint.starts_with("even"))
                    .collect();
            Ok(residual_record(&rs))
        },
    ));
    let d = w.min(5);
    jobs.push(job(
        "conjugation[first]",
        "conjugation of the constraints by exp(S)",
        move || {
            let c = RangeConvention::Corrected;
            let bad = conjugation_mismatches(
                |w| first_constraint(c, w),
                |w| first_constraint_conjugated(c, w),
                d,
            );
            Ok(from_mismatches(basis(d, d).len(), bad))
        },
    ));
    for n in 0..=2 {
        for form in [ConjugatedForm::Printed, ConjugatedForm::Derived] {
            let label = match form {
                ConjugatedForm::Printed => "printed",
                ConjugatedForm::Derived => "derived",
            };
            jobs.push(job(
                format!("conjugation[second,n={n},{label}]"),
                "conjugation of the constraints by exp(S)",
                move || {
                    let bad = conjugation_mismatches(
                        |w| second_constraint(n, w),
                        |w| second_constraint_conjugated(n, w, form),
                        d,
                    );
                    Ok(from_mismatches(basis(d, d).len(), bad))
                },
            ));
        }
    }
    for n in 1..=3u32 {
        for k in [-2, 0, 2, 4] {
            if k == n as i32 {
                continue;
            }
            jobs.push(job(
                format!("commutator[n={n},k={k}]"),
                "commutator of q_n with the even Virasoro operator",
                move || {
                    let ok = commutator_check(n, k, w)?;
                    Ok(outcome(
                        Status::from_bool(ok),
                        format!("monomials of weight <= {w}"),
                    ))
                },
            ));
        }
    }
    for (a, b) in [(-2, 2), (-2, 0), (0, 2), (2, 4)] {
        jobs.push(job(
            format!("bracket[{a},{b}]"),
            "Virasoro bracket with central term",
            move || {
                let bad = bracket_check(a, b, 4, true)?;
                Ok(from_mismatches(basis(4, 4).len(), bad))
            },
        ));
    }
    Ok(jobs)
}

fn section4(config: &SuiteConfig) -> Vec<Job> {
    let seed = config.seed;
    vec![job(
        "schur-closed-forms",
        "powers and square root of the triangular factor",
        move || {
            let pts: Vec<[Rational; 3]> = identities::seeded_points(seed, 8, 3)
                .into_iter()
                .map(|p| [p[0].clone(), p[1].clone(), p[2].clone()])
                .collect();
            Ok(from_check(identities::schur_closed_forms(&pts, 6, 4)?))
        },
    )]
}

fn numeric(config: &SuiteConfig) -> Result<Vec<Job>> {
    let tol = config.tol;
    let base: Vec<f64> = match &config.lambda {
        Some(l) => l.iter().map(rational_to_f64).collect(),
        None => vec![1.0, 2.0],
    };
    let exact_base: Vec<Rational> = config
        .lambda
        .clone()
        .unwrap_or_else(|| vec![int(1), int(2)]);
    let mut jobs = Vec::new();
    for m in config.ms(&[1, 2]) {
        if m > 2 || m > base.len() {
            return Err(Error::Infeasible(format!(
                "quadrature supports M <= 2 with M eigenvalues, got M={m}"
            )));
        }
        let l: Vec<f64> = base[..m].to_vec();
        let lc = l.clone();
        jobs.push(job(
            format!("normalization[M={m}]"),
            "normalization of the Lambda-weighted Gaussian",
            move || Ok(from_quad(quadrature::normalization_check(&lc, tol)?)),
        ));
        for f in TestPoly::ALL {
            let lc = l.clone();
            jobs.push(job(
                format!("hciz[M={m},f={}]", f.name()),
                "eigenvalue reduction of unitary-invariant integrals",
                move || Ok(from_quad(quadrature::hciz_check(&lc, f, tol)?)),
            ));
        }
        let a: Vec<Vec<f64>> = if m == 1 {
            vec![vec![l[0]]]
        } else {
            vec![vec![l[0], 0.25], vec![0.25, l[1]]]
        };
        jobs.push(job(
            format!("complex-vector[M={m}]"),
            "complex Gaussian vector integral",
            move || {
                Ok(from_quad(quadrature::complex_vector_gaussian_check(
                    &a, tol,
                )?))
            },
        ));
        let le = exact_base[..m].to_vec();
        jobs.push(job(
            format!("wick-bridge[M={m}]"),
            "exact Wick moments against quadrature",
            move || {
                let (o, count) = quadrature::wick_bridge(&le, 4, tol)?;
                let mut r = from_quad(o);
                r.detail = format!("{count} monomials; worst {}", r.detail);
                Ok(r)
            },
        ));
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_a_usage_error() {
        assert!(matches!(Suite::parse("nope"), Err(Error::Parse(_))));
        for n in Suite::NAMES {
            assert_eq!(Suite::parse(n).unwrap().name(), n);
        }
    }

    #[test]
    fn infeasible_caps_are_refused() {
        let cfg = SuiteConfig {
            depth: Some(12),
            ..SuiteConfig::default()
        };
        match run_suite(Suite::Theorem2, &cfg) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("pairings")),
            other => panic!("expected refusal, got {:?}", other.map(|r| r.status())),
        }
    }

    #[test]
    fn appendix_passes_and_is_deterministic() {
        let cfg = SuiteConfig::default();
        let a = run_suite(Suite::Appendix, &cfg).unwrap();
        assert!(a.passed(), "{}", a.to_json_string());
        assert_eq!(
            a.to_json_string(),
            run_suite(Suite::Appendix, &cfg).unwrap().to_json_string()
        );
    }
}

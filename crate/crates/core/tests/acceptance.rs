//! End-to-end acceptance run: one line per criterion, with its time budget.
//!
//! Criteria listed in `KNOWN_DEVIATIONS` are pinned to fail as specified; the
//! corrected variant of each is checked and printed alongside.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use kp_core::identities;
use kp_core::models::{
    check_s_flow, check_stolambda, eval_bt_remark, eval_zn, eval_zn_ext, eval_zo2,
    eval_zo2_operator, proportionality, BtRatio, Caps, ExtMode, Lambda, TraceSymbols,
};
use kp_core::opcalc::{self, complex_integral_op, weierstrass, Direction};
use kp_core::quadrature::{self, TestPoly};
use kp_core::ring::scalar::{int, rat, Rational};
use kp_core::ring::series::{Series, VarTable};
use kp_core::suites::{run_suite, Suite, SuiteConfig};
use kp_core::virasoro::{
    commutator_check, conjugation_mismatches, constraint_residuals, extract_tau, first_constraint,
    first_constraint_conjugated, second_constraint, second_constraint_conjugated, ConjugatedForm,
    RangeConvention, TauSource, ZeroModeShift,
};
use kp_core::wick::entry::{mean_value_check, Ensemble, EntrySymbol, WickMemo};

const KNOWN_DEVIATIONS: [&str; 2] = ["8b", "12"];

const SEED: u64 = 1729;

struct Line {
    id: &'static str,
    ok: bool,
    elapsed: Duration,
    budget: Duration,
    note: String,
}

/// Written to the real stderr so the lines survive test output capture.
fn say(s: &str) {
    let _ = writeln!(std::io::stderr(), "{s}");
}

fn timed(id: &'static str, budget_secs: u64, f: impl FnOnce() -> (bool, String)) -> Line {
    let start = Instant::now();
    let (ok, note) = f();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    let line = Line {
        id,
        ok: ok && elapsed <= budget,
        elapsed,
        budget,
        note,
    };
    say(&format!(
        "criterion {:>3}: {}  ({:.2?} of {:?})  {}",
        line.id,
        if line.ok { "PASS" } else { "FAIL" },
        line.elapsed,
        line.budget,
        line.note
    ));
    line
}

fn factorial_u(n: u128) -> u128 {
    (1..=n).product()
}

/// `2^m n!/(n-m)!` in machine integers.
fn moment_oracle(m: u32, n: u32) -> u128 {
    if m > n {
        return 0;
    }
    (1u128 << m) * factorial_u(n as u128) / factorial_u((n - m) as u128)
}

/// Counts perfect matchings of `legs` by building them one pair at a time.
fn enumerate_matchings(legs: &mut Vec<usize>) -> u128 {
    if legs.is_empty() {
        return 1;
    }
    let first = legs.remove(0);
    let mut total = 0;
    for k in 0..legs.len() {
        let partner = legs.remove(k);
        total += enumerate_matchings(legs);
        legs.insert(k, partner);
    }
    legs.insert(0, first);
    total
}

type Poly = BTreeMap<(u32, u32), Rational>;

fn poly_mul(a: &Poly, b: &Poly, max_x: u32, max_e: u32) -> Poly {
    let mut out = Poly::new();
    for ((xa, ea), ca) in a {
        for ((xb, eb), cb) in b {
            let (x, e) = (xa + xb, ea + eb);
            if x <= max_x && e + x / 2 <= max_e {
                *out.entry((x, e)).or_insert_with(|| int(0)) += ca * cb;
            }
        }
    }
    out.retain(|_, c| *c != int(0));
    out
}

fn poly_exp(p: &Poly, max_x: u32, max_e: u32) -> Poly {
    let mut out = Poly::from([((0, 0), int(1))]);
    let mut term = out.clone();
    for j in 1.. {
        term = poly_mul(&term, p, max_x, max_e)
            .into_iter()
            .map(|(k, c)| (k, c / int(j)))
            .collect();
        if term.is_empty() {
            break;
        }
        for (k, c) in &term {
            *out.entry(*k).or_insert_with(|| int(0)) += c;
        }
    }
    out
}

/// `Z_N` at `M = 1` by scalar Wick contraction: `⟨exp(x^3/6) (1 - εx/λ)^{-N}⟩`
/// with variance `ε/λ`. Returns the coefficients of `ε^0..ε^d`.
fn scalar_zn_oracle(lambda: &Rational, n: i64, d: u32) -> Vec<Rational> {
    let max_x = 2 * d;
    let mut cubic = Poly::new();
    cubic.insert((3, 0), rat(1, 6));
    let mut log_det = Poly::new();
    for k in 1..=max_x {
        let c = int(n) / int(k as i64) / num::pow(lambda.clone(), k as usize);
        log_det.insert((k, k), c);
    }
    let integrand = poly_mul(
        &poly_exp(&cubic, max_x, d),
        &poly_exp(&log_det, max_x, d),
        max_x,
        d,
    );
    let mut out = vec![int(0); d as usize + 1];
    for ((x, e), c) in integrand {
        if x % 2 == 1 {
            continue;
        }
        let pairs = x / 2;
        let count = enumerate_matchings(&mut (0..x as usize).collect());
        out[(e + pairs) as usize] +=
            c * int(count as i64) / num::pow(lambda.clone(), pairs as usize);
    }
    out
}

fn heat_oracle(n: u32) -> BTreeMap<(i32, i32), u128> {
    // E[(s + sqrt(2t) X)^n] = Σ_k binom(n,2k) (2k-1)!! 2^k t^k s^{n-2k}
    let mut out = BTreeMap::new();
    for k in 0..=n / 2 {
        let binom = factorial_u(n as u128)
            / (factorial_u(2 * k as u128) * factorial_u((n - 2 * k) as u128));
        let dfact: u128 = (1..=k as u128).map(|i| 2 * i - 1).product();
        out.insert(((n - 2 * k) as i32, k as i32), binom * dfact * (1 << k));
    }
    out
}

fn criterion_1() -> (bool, String) {
    let vars = VarTable::builder()
        .var("s", 8)
        .var("sm", 8)
        .build()
        .unwrap();
    let mut bad = 0;
    for m in 0..=8 {
        for n in 0..=8 {
            let f =
                Series::<Rational>::monomial_named(&vars, &[("sm", m), ("s", n)], int(1)).unwrap();
            let got = complex_integral_op(&f, "s", "sm", false).unwrap();
            let want = moment_oracle(m as u32, n as u32);
            let expect = if m > n {
                Series::zero(&vars)
            } else {
                Series::monomial_named(&vars, &[("s", n - m)], int(want as i64)).unwrap()
            };
            if got != expect {
                bad += 1;
            }
        }
    }
    (
        bad == 0,
        format!("complex Gaussian moments, 81 monomials, {bad} mismatches"),
    )
}

fn criterion_2() -> (bool, String) {
    let vars = VarTable::builder()
        .var("s", 12)
        .var("t", 6)
        .build()
        .unwrap();
    let mut bad = Vec::new();
    for n in 0..=12 {
        let f = Series::<Rational>::monomial_named(&vars, &[("s", n)], int(1)).unwrap();
        let there = weierstrass(&f, "s", "t", Direction::Forward).unwrap();
        if weierstrass(&there, "s", "t", Direction::Inverse).unwrap() != f {
            bad.push(format!("roundtrip n={n}"));
        }
        if n <= 8 {
            for ((sp, tp), c) in heat_oracle(n as u32) {
                if there.coeff_named(&[("s", sp), ("t", tp)]).unwrap() != int(c as i64) {
                    bad.push(format!("moment form n={n}"));
                }
            }
            if there.len() != heat_oracle(n as u32).len() {
                bad.push(format!("extra terms n={n}"));
            }
        }
    }
    (
        bad.is_empty(),
        format!("heat operator roundtrip n<=12, moment form n<=8; {bad:?}"),
    )
}

fn criterion_3() -> (bool, String) {
    let mut bad = Vec::new();
    let point = [int(2), rat(3, 2), rat(7, 5)];
    for m in 1..=3 {
        for k in -7..=7 {
            let sym = opcalc::lambda_derivation_check(k, m, 6, None).unwrap();
            let num = opcalc::lambda_derivation_check(k, m, 6, Some(&point[..m])).unwrap();
            if !(sym && num) {
                bad.push((m, k));
            }
        }
    }
    (
        bad.is_empty(),
        format!("trace class derivation |k|<=7, M<=3, s_- order 6; failures {bad:?}"),
    )
}

fn criterion_4() -> (bool, String) {
    let mut notes = Vec::new();
    let mut ok = true;
    for m in 1..=2 {
        let c = opcalc::conjugation_check(m, 6, 2).unwrap();
        let o = opcalc::operator_moving_check(m, 6).unwrap();
        ok &= c.passed && o.passed;
        notes.push(format!(
            "M={m}: conjugation {}, moving {}",
            c.detail, o.detail
        ));
    }
    (ok, notes.join("; "))
}

fn criterion_5() -> (bool, String) {
    let det = (1..=3).all(|m| identities::lemma1_det_expansion(m, None).unwrap());
    let mut cases = 0;
    let mut ok = det;
    for n in 2..=4 {
        for k in 1..=n {
            let o = identities::lemma1_product_identity(n, k, 20, SEED).unwrap();
            ok &= o.passed && o.cases >= 20;
            cases += o.cases;
        }
        // the unsplit product against a direct evaluation
        for p in identities::seeded_points(SEED + n as u64, 20, n) {
            let mut direct = int(1);
            for i in 0..n {
                for j in i + 1..n {
                    direct *= (&p[j] - &p[i]) / (&p[j] + &p[i]);
                }
            }
            let (_, _, full) = identities::product_sides(&p, 1);
            ok &= direct == full;
        }
    }
    (
        ok,
        format!(
            "determinant expansion M<=3 symbolic: {det}; product identity at {cases} seeded points"
        ),
    )
}

fn criterion_6() -> (bool, String) {
    let a = identities::bordered_trace_identities(1).unwrap();
    let b = identities::bordered_trace_identities(2).unwrap();
    (
        a.passed && b.passed,
        format!("bordered traces M=1 ({}), M=2 ({})", a.detail, b.detail),
    )
}

fn criterion_7() -> (bool, String) {
    let o = identities::weierstrass_injectivity(12).unwrap();
    let rows = identities::weierstrass_matrix(12).unwrap();
    let diag = (0..=12).all(|n| rows[n][n] == Series::one(rows[n][n].vars()));
    let upper = (0..=12).all(|n| (n + 1..=12).all(|m| rows[n][m].is_zero()));
    (
        o.passed && diag && upper,
        format!("unitriangular to degree 12: {}", o.detail),
    )
}

fn criterion_8a() -> (bool, String) {
    let caps = Caps::new(6).with_s(3);
    let mut notes = Vec::new();
    let mut ok = true;
    for l in [
        Lambda::Numeric(vec![int(1)]),
        Lambda::Numeric(vec![int(1), int(2)]),
        Lambda::Symbolic(2),
    ] {
        let a = eval_zo2(&l, &caps).unwrap();
        let b = eval_zo2_operator(&l, &caps).unwrap();
        ok &= a.agrees_with(&b) && !a.payload.is_zero();
        let label = match &l {
            Lambda::Numeric(v) => format!(
                "lambda={}",
                v.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            Lambda::Symbolic(m) => format!("symbolic M={m}"),
        };
        notes.push(format!("{label}: {} coefficients", a.payload.len()));
    }
    (
        ok,
        format!(
            "complex route equals operator image, eps<=6, s<=3; {}",
            notes.join(", ")
        ),
    )
}

fn criterion_8b() -> (bool, String) {
    let caps = Caps::new(5).with_s(3);
    let l = Lambda::Numeric(vec![int(1)]);
    let bt = eval_bt_remark(&l, &caps).unwrap();
    let zo2 = eval_zo2(&l, &caps).unwrap();
    let (c, diffs) = proportionality(&bt, &zo2).unwrap();
    (
        diffs.is_empty(),
        format!("rotated form vs complex route at M=1, eps<=5: constant {c}, differing {diffs:?}"),
    )
}

fn criterion_9() -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    for (m, n, d) in [(1usize, 1usize, 6), (2, 1, 5), (1, 2, 6)] {
        let l: Vec<Rational> = (1..=m as i64).map(int).collect();
        let caps = Caps::new(d);
        let ext = eval_zn_ext(&l, n, &caps, ExtMode::Substituted).unwrap();
        let zn = eval_zn(&Lambda::Numeric(l), n as u32, &caps).unwrap();
        ok &= ext.agrees_with(&zn);
        notes.push(format!("(M,N)=({m},{n}) eps<={d}"));
    }
    for (lambda, n) in [(int(1), 1), (int(1), 2), (rat(3, 2), 1)] {
        let oracle = scalar_zn_oracle(&lambda, n, 6);
        let zn = eval_zn(
            &Lambda::Numeric(vec![lambda.clone()]),
            n as u32,
            &Caps::new(6),
        )
        .unwrap();
        for (e, c) in oracle.iter().enumerate() {
            ok &= zn.coeff(&[("eps", e as i32)]).unwrap() == *c;
        }
        if lambda == int(1) && n == 1 {
            ok &= oracle[3] == rat(41, 24);
            notes.push(format!("brute-force eps^3 = {}", oracle[3]));
        }
    }
    let mv = mean_value_check(1, 6) && mean_value_check(2, 6);
    (ok && mv, format!("{}; mean value {mv}", notes.join(", ")))
}

fn criterion_10() -> (bool, String) {
    let formal = check_stolambda(&[int(2), int(3)], TraceSymbols::Formal, 8).unwrap();
    let c1 = check_stolambda(&[int(2)], TraceSymbols::Concrete(1), 4).unwrap();
    let c2 = check_stolambda(&[int(2)], TraceSymbols::Concrete(2), 4).unwrap();
    (
        formal && c1 && c2,
        format!("formal order 8: {formal}; concrete N=1: {c1}, N=2: {c2}"),
    )
}

fn criterion_11() -> (bool, String) {
    let g = eval_zn_ext(
        &[int(1)],
        1,
        &Caps::new(6).with_s_times(vec![4, 2, 2, 2]),
        ExtMode::GeneralS,
    )
    .unwrap();
    let bad: Vec<usize> = (0..=3)
        .map(|n| check_s_flow(&g, n).unwrap().len())
        .collect();
    (
        bad.iter().all(|&b| b == 0),
        format!(
            "s-flow n<=3 on {} coefficients; mismatches {bad:?}",
            g.payload.len()
        ),
    )
}

struct VirasoroRun {
    strict: (bool, String),
    corrected: (bool, String),
}

fn criterion_12() -> VirasoroRun {
    let w = 6;
    let printed_bt = extract_tau(
        TauSource::Bt {
            ratio: BtRatio::AsPrinted,
            negate_odd: false,
        },
        w,
        SEED,
    )
    .unwrap();
    let reoriented = extract_tau(
        TauSource::Bt {
            ratio: BtRatio::Inverted,
            negate_odd: true,
        },
        w,
        SEED,
    )
    .unwrap();
    let corr = RangeConvention::Corrected;
    let strict_res = constraint_residuals(&printed_bt, &[0, 1], corr, ZeroModeShift::None);
    let fixed_res = constraint_residuals(&reoriented, &[0, 1], corr, ZeroModeShift::Sixteenth);
    let as_written = constraint_residuals(
        &reoriented,
        &[],
        RangeConvention::AsWritten,
        ZeroModeShift::Sixteenth,
    );
    let even_ok = strict_res
        .iter()
        .filter(|r| r.constraint.starts_with("even"))
        .all(|r| r.vanishes());
    let first_conj = conjugation_mismatches(
        |w| first_constraint(corr, w),
        |w| first_constraint_conjugated(corr, w),
        5,
    )
    .is_empty();
    let conj = |form| {
        (0..=2)
            .filter(|&n| {
                !conjugation_mismatches(
                    |w| second_constraint(n, w),
                    |w| second_constraint_conjugated(n, w, form),
                    5,
                )
                .is_empty()
            })
            .collect::<Vec<u32>>()
    };
    let (printed_bad, derived_bad) = (conj(ConjugatedForm::Printed), conj(ConjugatedForm::Derived));
    let mut comm_ok = true;
    for n in 1..=3u32 {
        for k in [-2, 0, 2, 4] {
            if k != n as i32 {
                comm_ok &= commutator_check(n, k, 6).unwrap();
            }
        }
    }
    let failing = |rs: &[kp_core::virasoro::Residual]| -> Vec<String> {
        rs.iter()
            .filter(|r| !r.vanishes())
            .map(|r| r.constraint.clone())
            .collect()
    };
    let strict_ok =
        strict_res.iter().all(|r| r.vanishes()) && first_conj && printed_bad.is_empty() && comm_ok;
    let fixed_ok = fixed_res.iter().all(|r| r.vanishes())
        && !as_written[0].vanishes()
        && even_ok
        && first_conj
        && derived_bad.is_empty()
        && comm_ok;
    VirasoroRun {
        strict: (
            strict_ok,
            format!(
                "printed operators on the tau extracted as printed (weight {w}): nonzero residuals {:?}; printed conjugated forms failing at n={printed_bad:?}; even times {even_ok}; commutators {comm_ok}",
                failing(&strict_res)
            ),
        ),
        corrected: (
            fixed_ok,
            format!(
                "inverted ratio, odd times negated, +1/16 zero mode: nonzero residuals {:?}; annihilating range: corrected (as written leaves {}); derived conjugated forms failing at n={derived_bad:?}",
                failing(&fixed_res),
                as_written[0].residual
            ),
        ),
    }
}

fn criterion_13() -> (bool, String) {
    let pts: Vec<[Rational; 3]> = identities::seeded_points(SEED, 8, 3)
        .into_iter()
        .map(|p| [p[0].clone(), p[1].clone(), p[2].clone()])
        .collect();
    let o = identities::schur_closed_forms(&pts, 6, 4).unwrap();
    (
        o.passed,
        format!("triangular powers and square root to order 4: {}", o.detail),
    )
}

fn criterion_14() -> (bool, String) {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for l in [vec![1.0], vec![1.0, 2.0]] {
        let n = quadrature::normalization_check(&l, 1e-6).unwrap();
        ok &= n.passed();
        for f in TestPoly::ALL {
            let h = quadrature::hciz_check(&l, f, 1e-6).unwrap();
            ok &= h.passed();
            worst = worst.max(h.relative_difference);
        }
    }
    for a in [vec![vec![2.0]], vec![vec![1.0, 0.3], vec![0.3, 2.0]]] {
        ok &= quadrature::complex_vector_gaussian_check(&a, 1e-6)
            .unwrap()
            .passed();
    }
    (ok, format!("normalization, eigenvalue reduction (worst relative difference {worst:.1e}), complex vectors"))
}

fn criterion_15() -> (bool, String) {
    // a single 12-symbol expectation: 10395 pairings
    let ens = Ensemble::hermitian(vec![int(1), int(2)], "eps").unwrap();
    let mut mono = vec![EntrySymbol::herm(0, 0); 4];
    mono.extend(vec![EntrySymbol::herm(0, 1); 4]);
    mono.extend(vec![EntrySymbol::herm(1, 0); 4]);
    mono.sort();
    let start = Instant::now();
    let v = WickMemo::new(&ens).monomial(&mono);
    let single = start.elapsed();
    // ⟨H11^4⟩⟨|H12|^8⟩ = 3 * 4! (2/3)^4
    let expected = int(3) * int(24) * num::pow(rat(2, 3), 4);
    let start = Instant::now();
    let report = run_suite(Suite::All, &SuiteConfig::default()).unwrap();
    let all = start.elapsed();
    let failing: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name.as_str())
        .collect();
    let ok = v == expected && single < Duration::from_millis(100) && all < Duration::from_secs(900);
    (
        ok,
        format!(
            "12-symbol expectation {v} in {single:.2?}; verify all in {all:.2?} ({} checks, failing {failing:?})",
            report.checks.len()
        ),
    )
}

#[test]
fn acceptance() {
    let mut lines = vec![
        timed("1", 1, criterion_1),
        timed("2", 1, criterion_2),
        timed("3", 10, criterion_3),
        timed("4", 30, criterion_4),
        timed("5", 10, criterion_5),
        timed("6", 5, criterion_6),
        timed("7", 1, criterion_7),
        timed("8a", 300, criterion_8a),
        timed("8b", 300, criterion_8b),
        timed("9", 600, criterion_9),
        timed("10", 10, criterion_10),
        timed("11", 120, criterion_11),
    ];
    let start = Instant::now();
    let vir = criterion_12();
    let elapsed = start.elapsed();
    for (id, (ok, note)) in [("12", vir.strict), ("12c", vir.corrected)] {
        let budget = Duration::from_secs(900);
        let ok = ok && elapsed <= budget;
        say(&format!(
            "criterion {id:>3}: {}  ({elapsed:.2?} of {budget:?})  {note}",
            if ok { "PASS" } else { "FAIL" }
        ));
        lines.push(Line {
            id,
            ok,
            elapsed,
            budget,
            note,
        });
    }
    lines.push(timed("13", 5, criterion_13));
    lines.push(timed("14", 120, criterion_14));
    lines.push(timed("15", 900, criterion_15));

    let mut unexpected = Vec::new();
    for l in &lines {
        let known = KNOWN_DEVIATIONS.contains(&l.id);
        if l.ok == known {
            unexpected.push(format!(
                "{} ({})",
                l.id,
                if l.ok {
                    "passes but is listed as a deviation"
                } else {
                    "fails"
                }
            ));
        }
    }
    let passed = lines.iter().filter(|l| l.ok).count();
    say(&format!(
        "acceptance: {passed} of {} lines pass; known deviations {KNOWN_DEVIATIONS:?}",
        lines.len()
    ));
    assert!(unexpected.is_empty(), "unexpected outcomes: {unexpected:?}");
}

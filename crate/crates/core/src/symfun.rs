//! Power sums, Miwa times and the q-basis.
//!
//! A [`QPolynomial`] is a polynomial in the times `q_1, q_2, ...` and `s`,
//! graded by `wt(q_k) = k`, `wt(s) = 1` and truncated at a total weight.
//! Model evaluations at numeric eigenvalues are converted to this basis by
//! exact linear solves: the `ε^d s^j` coefficient of a model is a symmetric
//! polynomial of degree `d` in `x_i = 1/λ_i`, hence a combination of the
//! products `q_μ = Π p_{μ_r}(x)` over partitions `μ` of `d`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::ring::linalg;
use crate::ring::scalar::{factorial, int, Rational, Scalar};
use crate::ring::series::{Exponents, Series, VarTable};

/// Which Miwa time to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Miwa {
    /// `s_i = 2^i i! tr Λ^{-2i-2}`.
    S(u32),
    /// `q_k = tr Λ^{-k}`.
    Q(u32),
}

/// `Σ_j λ_j^{-k}`.
pub fn power_sum(lambda: &[Rational], k: u32) -> Result<Rational> {
    let mut acc = int(0);
    for l in lambda {
        if Scalar::is_zero(l) {
            return Err(Error::domain("symfun", "zero eigenvalue"));
        }
        acc += l.recip().pow(k as i32);
    }
    Ok(acc)
}

pub fn miwa_times(lambda: &[Rational], which: Miwa) -> Result<Rational> {
    match which {
        Miwa::Q(k) => power_sum(lambda, k),
        Miwa::S(i) => Ok(int(1 << i) * factorial(i) * power_sum(lambda, 2 * i + 2)?),
    }
}

/// All partitions of `n` (parts in non-increasing order), in reverse
/// lexicographic order.
pub fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn rec(n: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=n.min(max)).rev() {
            cur.push(p);
            rec(n - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Table `{prefix}1..{prefix}W` (and `s` when requested) with the weight cap `W`.
pub fn graded_table(prefix: &str, weight: u32, with_s: bool) -> Result<Arc<VarTable>> {
    let w = weight as i32;
    let mut b = VarTable::builder();
    let mut weights: Vec<(String, i32)> = Vec::new();
    for k in 1..=w {
        let name = format!("{prefix}{k}");
        b = b.var(&name, w / k);
        weights.push((name, k));
    }
    if with_s {
        b = b.var("s", w);
        weights.push(("s".into(), 1));
    }
    let wref: Vec<(&str, i32)> = weights.iter().map(|(n, k)| (n.as_str(), *k)).collect();
    b.weight_cap(&wref, w).build()
}

/// Polynomial in `q_k` and `s`, truncated at a total weight.
#[derive(Clone, PartialEq)]
pub struct QPolynomial {
    weight: u32,
    series: Series<Rational>,
}

impl fmt::Debug for QPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.series)
    }
}

impl QPolynomial {
    pub fn table(weight: u32) -> Result<Arc<VarTable>> {
        graded_table("q", weight, true)
    }

    pub fn zero(weight: u32) -> Self {
        let t = Self::table(weight).expect("well-formed table");
        QPolynomial {
            weight,
            series: Series::zero(&t),
        }
    }

    pub fn one(weight: u32) -> Self {
        Self::constant(weight, int(1))
    }

    pub fn constant(weight: u32, c: Rational) -> Self {
        let t = Self::table(weight).expect("well-formed table");
        QPolynomial {
            weight,
            series: Series::constant(&t, c),
        }
    }

    /// `q_k`, which vanishes identically when `k` exceeds the weight.
    pub fn q(weight: u32, k: u32) -> Self {
        let mut p = Self::zero(weight);
        if k >= 1 && k <= weight {
            let mut e = vec![0; p.series.vars().len()];
            e[k as usize - 1] = 1;
            p.series.add_term(e, int(1));
        }
        p
    }

    pub fn s(weight: u32) -> Self {
        let mut p = Self::zero(weight);
        if weight >= 1 {
            let e = p.series.vars().exponents(&[("s", 1)]).expect("s present");
            p.series.add_term(e, int(1));
        }
        p
    }

    /// `c * q_μ * s^j`.
    pub fn monomial(weight: u32, partition: &[u32], s_power: u32, c: Rational) -> Self {
        let mut p = Self::zero(weight);
        let mut e = vec![0; p.series.vars().len()];
        for &part in partition {
            if part as usize > weight as usize {
                return p;
            }
            e[part as usize - 1] += 1;
        }
        *e.last_mut().expect("s present") = s_power as i32;
        p.series.add_term(e, c);
        p
    }

    /// Wraps a series over [`QPolynomial::table`].
    pub fn from_series(weight: u32, series: Series<Rational>) -> Result<Self> {
        if **series.vars() != *Self::table(weight)? {
            return Err(Error::Structural(
                "series is not over the q-table of this weight".into(),
            ));
        }
        Ok(QPolynomial { weight, series })
    }

    pub fn series(&self) -> &Series<Rational> {
        &self.series
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn is_zero(&self) -> bool {
        self.series.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        QPolynomial {
            weight: self.weight,
            series: self.series.add(&other.series),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        QPolynomial {
            weight: self.weight,
            series: self.series.sub(&other.series),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        QPolynomial {
            weight: self.weight,
            series: self.series.mul(&other.series),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        QPolynomial {
            weight: self.weight,
            series: self.series.scale(c),
        }
    }

    /// `∂/∂q_k` (zero when `k` exceeds the weight).
    pub fn d_q(&self, k: u32) -> Self {
        if k == 0 || k > self.weight {
            return Self::zero(self.weight);
        }
        QPolynomial {
            weight: self.weight,
            series: self.series.derivative_idx(k as usize - 1),
        }
    }

    pub fn d_s(&self) -> Self {
        let k = self.series.vars().len() - 1;
        QPolynomial {
            weight: self.weight,
            series: self.series.derivative_idx(k),
        }
    }

    /// Weight of an exponent vector.
    pub fn weight_of(e: &[i32]) -> u32 {
        let n = e.len() - 1;
        (e[..n]
            .iter()
            .enumerate()
            .map(|(k, &m)| (k as i32 + 1) * m)
            .sum::<i32>()
            + e[n]) as u32
    }

    /// Keeps only terms of weight at most `w`.
    pub fn up_to_weight(&self, w: u32) -> Self {
        QPolynomial {
            weight: self.weight,
            series: self.series.filter(|e| Self::weight_of(e) <= w),
        }
    }

    /// Re-expresses over a table of another weight, dropping heavier terms.
    pub fn with_weight(&self, weight: u32) -> Self {
        let target = Self::table(weight).expect("well-formed table");
        let mut out = Series::zero(&target);
        for (e, c) in self.series.terms() {
            if Self::weight_of(e) > weight {
                continue;
            }
            let mut e2 = vec![0; target.len()];
            for (k, &m) in e[..e.len() - 1].iter().enumerate() {
                e2[k] = m;
            }
            *e2.last_mut().expect("s present") = *e.last().expect("s present");
            out.add_term(e2, c.clone());
        }
        QPolynomial {
            weight,
            series: out,
        }
    }

    /// `(partition, s power, coefficient)` triples, parts in non-increasing order.
    pub fn terms(&self) -> Vec<(Vec<u32>, u32, Rational)> {
        self.series
            .terms()
            .iter()
            .map(|(e, c)| {
                let n = e.len() - 1;
                let mut part = Vec::new();
                for k in (0..n).rev() {
                    for _ in 0..e[k] {
                        part.push(k as u32 + 1);
                    }
                }
                (part, e[n] as u32, c.clone())
            })
            .collect()
    }

    pub fn coefficient(&self, partition: &[u32], s_power: u32) -> Rational {
        let n = self.series.vars().len() - 1;
        let mut e: Exponents = vec![0; n + 1];
        for &p in partition {
            if p as usize > n {
                return int(0);
            }
            e[p as usize - 1] += 1;
        }
        e[n] = s_power as i32;
        self.series.coeff(&e)
    }

    /// Evaluates at `q_k = p_k(1/λ)`, grouped by `(|μ|, s power)`.
    pub fn evaluate_graded(&self, lambda: &[Rational]) -> Result<BTreeMap<(u32, u32), Rational>> {
        let ps: Vec<Rational> = (1..=self.weight)
            .map(|k| power_sum(lambda, k))
            .collect::<Result<_>>()?;
        let mut out: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
        for (part, j, c) in self.terms() {
            let d: u32 = part.iter().sum();
            let v = part.iter().fold(c, |acc, &p| acc * &ps[p as usize - 1]);
            *out.entry((d, j)).or_insert_with(|| int(0)) += v;
        }
        out.retain(|_, v| !Scalar::is_zero(v));
        Ok(out)
    }

    /// JSON list of `{partition, s_power, coefficient}`.
    /// `q_k -> -q_k` for odd `k`, i.e. `Λ -> -Λ` under the Miwa times.
    pub fn negate_odd_times(&self) -> Self {
        let mut out = Self::zero(self.weight);
        for (mu, j, c) in self.terms() {
            let odd = mu.iter().filter(|&&p| p % 2 == 1).count();
            let c = if odd % 2 == 1 { -c } else { c };
            out = out.add(&Self::monomial(self.weight, &mu, j, c));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<_> = self
            .terms()
            .into_iter()
            .map(|(p, j, c)| json!({ "partition": p, "s_power": j, "coefficient": c.to_string() }))
            .collect();
        json!({ "weight": self.weight, "terms": terms })
    }
}

/// `p_μ(x) = Π_r Σ_i x_i^{μ_r}` over the table of `like`, whose variables
/// `x1..xM` are looked up by name.
fn power_sum_product(
    vars: &Arc<VarTable>,
    m: usize,
    partition: &[u32],
) -> Result<Series<Rational>> {
    let mut acc = Series::one(vars);
    for &p in partition {
        let mut ps = Series::zero(vars);
        for i in 1..=m {
            ps = ps.add(&Series::monomial_named(
                vars,
                &[(&format!("x{i}"), p as i32)],
                int(1),
            )?);
        }
        acc = acc.mul(&ps);
    }
    Ok(acc)
}

/// Rewrites a symmetric polynomial in `x1..xM` through power sums, up to
/// total degree `d`.
pub fn monomial_to_powersum(sym: &Series<Rational>, d: u32) -> Result<QPolynomial> {
    let vars = sym.vars();
    let m = (1..)
        .take_while(|i| vars.try_index(&format!("x{i}")).is_some())
        .count();
    if vars.len() != m {
        return Err(Error::domain(
            "symfun",
            "input must be a series in x1..xM only",
        ));
    }
    if d as usize > m {
        return Err(Error::domain(
            "symfun",
            format!("power sums are dependent beyond degree {m}"),
        ));
    }
    for (e, c) in sym.terms() {
        for i in 0..m.saturating_sub(1) {
            let mut swapped = e.clone();
            swapped.swap(i, i + 1);
            if sym.coeff(&swapped) != *c {
                return Err(Error::domain("symfun", "input is not symmetric"));
            }
        }
    }
    let mut out = QPolynomial::zero(d);
    for deg in 0..=d {
        let parts = partitions(deg);
        let images: Vec<Series<Rational>> = parts
            .iter()
            .map(|mu| power_sum_product(vars, m, mu))
            .collect::<Result<_>>()?;
        // rows indexed by monomials x^ν with ν a partition padded to M entries
        let key = |nu: &[u32]| {
            let mut e = vec![0i32; m];
            for (k, &p) in nu.iter().enumerate() {
                e[k] = p as i32;
            }
            e
        };
        let rows: Vec<Vec<Rational>> = parts
            .iter()
            .map(|nu| images.iter().map(|im| im.coeff(&key(nu))).collect())
            .collect();
        let rhs: Vec<Rational> = parts.iter().map(|nu| sym.coeff(&key(nu))).collect();
        let sol = linalg::solve(&rows, &rhs)
            .ok_or_else(|| Error::Singular("power-sum system is singular".into()))?;
        for (mu, c) in parts.iter().zip(sol) {
            out = out.add(&QPolynomial::monomial(d, mu, 0, c));
        }
    }
    Ok(out)
}

/// `e_k` as a polynomial in power sums via Newton's identities.
pub fn elementary_in_powersums(k: u32, weight: u32) -> QPolynomial {
    let mut e = vec![QPolynomial::one(weight)];
    for n in 1..=k {
        let mut acc = QPolynomial::zero(weight);
        for i in 1..=n {
            let term = e[(n - i) as usize].mul(&QPolynomial::q(weight, i));
            acc = if i % 2 == 1 {
                acc.add(&term)
            } else {
                acc.sub(&term)
            };
        }
        e.push(acc.scale(&int(n as i64).recip()));
    }
    e.pop().expect("non-empty")
}

/// `p_k` as a polynomial in `e_1..e_k` (variables `e1..`, over the e-table).
pub fn powersum_in_elementary(k: u32, weight: u32) -> Result<Series<Rational>> {
    let t = graded_table("e", weight, false)?;
    let ev = |j: u32| -> Result<Series<Rational>> {
        if j == 0 {
            Ok(Series::one(&t))
        } else {
            Series::var(&t, &format!("e{j}"))
        }
    };
    let mut p: Vec<Series<Rational>> = vec![Series::zero(&t)];
    for n in 1..=k {
        // p_n = (-1)^{n-1} n e_n + Σ_{i=1}^{n-1} (-1)^{n-1+i} e_{n-i} p_i
        let sign = |x: u32| if x % 2 == 0 { int(1) } else { int(-1) };
        let mut acc = ev(n)?.scale(&(sign(n - 1) * int(n as i64)));
        for i in 1..n {
            acc = acc.add(&ev(n - i)?.mul(&p[i as usize]).scale(&sign(n - 1 + i)));
        }
        p.push(acc);
    }
    Ok(p.pop().expect("non-empty"))
}

/// Substitutes `e_j := e_subst[j-1]` into a polynomial over the e-table.
pub fn substitute_elementary(
    poly: &Series<Rational>,
    e_subst: &[QPolynomial],
    weight: u32,
) -> QPolynomial {
    let mut out = QPolynomial::zero(weight);
    for (e, c) in poly.terms() {
        let mut term = QPolynomial::constant(weight, c.clone());
        for (j, &m) in e.iter().enumerate() {
            for _ in 0..m {
                term = term.mul(&e_subst[j]);
            }
        }
        out = out.add(&term);
    }
    out
}

/// Parameters of [`extract_q_polynomial`].
#[derive(Clone, Debug)]
pub struct Extraction {
    /// Number of eigenvalues per tuple; must be at least the weight.
    pub m: usize,
    /// Total weight in `(q, s)` to extract.
    pub weight: u32,
    pub seed: u64,
    /// Fresh tuples used only for verification.
    pub held_out: usize,
    /// How many times to add tuples when a system is rank deficient.
    pub retries: usize,
}

impl Extraction {
    pub fn new(m: usize, weight: u32, seed: u64) -> Self {
        Extraction {
            m,
            weight,
            seed,
            held_out: 2,
            retries: 4,
        }
    }
}

/// Deterministic distinct positive rational tuples.
pub fn seeded_tuples(seed: u64, count: usize, m: usize) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut t: Vec<Rational> = Vec::with_capacity(m);
            while t.len() < m {
                let l = Rational::new(rng.gen_range(1..=40).into(), rng.gen_range(1..=6).into());
                if !t.contains(&l) {
                    t.push(l);
                }
            }
            t
        })
        .collect()
}

fn lookup(series: &Series<Rational>, eps: usize, s: Option<usize>, d: u32, j: u32) -> Rational {
    let mut e = vec![0; series.vars().len()];
    e[eps] = d as i32;
    match s {
        Some(k) => e[k] = j as i32,
        None if j > 0 => return int(0),
        None => {}
    }
    series.coeff(&e)
}

/// Converts a model evaluated at numeric eigenvalues into the q-basis.
///
/// `eval` maps an eigenvalue tuple to a series in `eps` (and optionally `s`);
/// the `eps^d s^j` coefficient is solved for as a combination of `q_μ`,
/// `|μ| = d`, for every `d + j <= weight`.
pub fn extract_q_polynomial<F>(eval: F, cfg: &Extraction) -> Result<QPolynomial>
where
    F: Fn(&[Rational]) -> Result<Series<Rational>> + Sync,
{
    if (cfg.weight as usize) > cfg.m {
        return Err(Error::domain(
            "symfun",
            format!(
                "weight {} needs at least {} eigenvalues",
                cfg.weight, cfg.weight
            ),
        ));
    }
    let w = cfg.weight;
    let max_unknowns = (0..=w).map(|d| partitions(d).len()).max().unwrap_or(1);
    let train_count = max_unknowns + 1;
    let mut tuples = seeded_tuples(cfg.seed, train_count + cfg.held_out, cfg.m);
    let mut values: Vec<Series<Rational>> =
        tuples.par_iter().map(|t| eval(t)).collect::<Result<_>>()?;
    let vars = values[0].vars().clone();
    let eps = vars.index("eps")?;
    let s = vars.try_index("s");
    let sums =
        |t: &[Rational]| -> Result<Vec<Rational>> { (1..=w).map(|k| power_sum(t, k)).collect() };
    let mut out = QPolynomial::zero(w);
    for d in 0..=w {
        let parts = partitions(d);
        for j in 0..=(w - d) {
            let mut extra = 0;
            let sol = loop {
                let train: Vec<usize> = (0..train_count + extra)
                    .map(|k| if k < train_count { k } else { k + cfg.held_out })
                    .collect();
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                for &k in &train {
                    let ps = sums(&tuples[k])?;
                    rows.push(
                        parts
                            .iter()
                            .map(|mu| mu.iter().fold(int(1), |a, &p| a * &ps[p as usize - 1]))
                            .collect::<Vec<_>>(),
                    );
                    rhs.push(lookup(&values[k], eps, s, d, j));
                }
                if linalg::rank(&rows) == parts.len() {
                    break linalg::solve(&rows, &rhs).ok_or_else(|| {
                        Error::check(
                            "symfun",
                            format!("training equations at (d={d}, s^{j}) are inconsistent"),
                        )
                    })?;
                }
                if extra / 2 >= cfg.retries {
                    return Err(Error::Singular(format!(
                        "q-basis system at (d={d}, s^{j}) stays rank deficient"
                    )));
                }
                let fresh = seeded_tuples(cfg.seed.wrapping_add(1 + extra as u64), 2, cfg.m);
                let fresh_values: Vec<Series<Rational>> =
                    fresh.par_iter().map(|t| eval(t)).collect::<Result<_>>()?;
                tuples.extend(fresh);
                values.extend(fresh_values);
                extra += 2;
            };
            for (mu, c) in parts.iter().zip(&sol) {
                out = out.add(&QPolynomial::monomial(w, mu, j, c.clone()));
            }
            for k in train_count..train_count + cfg.held_out {
                let ps = sums(&tuples[k])?;
                let pred = parts.iter().zip(&sol).fold(int(0), |a, (mu, c)| {
                    a + mu.iter().fold(c.clone(), |b, &p| b * &ps[p as usize - 1])
                });
                if pred != lookup(&values[k], eps, s, d, j) {
                    return Err(Error::check(
                        "symfun",
                        format!("held-out tuple disagrees at (d={d}, s^{j})"),
                    ));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::rat;

    #[test]
    fn miwa_examples() {
        let l = [int(2)];
        assert_eq!(miwa_times(&l, Miwa::S(0)).unwrap(), rat(1, 4));
        assert_eq!(miwa_times(&l, Miwa::S(1)).unwrap(), rat(1, 8));
        assert_eq!(miwa_times(&l, Miwa::Q(3)).unwrap(), rat(1, 8));
        assert!(miwa_times(&[int(0)], Miwa::Q(1)).is_err());
    }

    #[test]
    fn partition_counts() {
        let counts: Vec<usize> = (0..8).map(|n| partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 7, 11, 15]);
    }

    #[test]
    fn elementary_two_in_power_sums() {
        let t = crate::wick::family::x_table(3, 4).unwrap();
        let x = |i: usize| Series::var(&t, &format!("x{i}")).unwrap();
        let e2 = x(1).mul(&x(2)).add(&x(1).mul(&x(3))).add(&x(2).mul(&x(3)));
        let q = monomial_to_powersum(&e2, 2).unwrap();
        let expected = QPolynomial::monomial(2, &[1, 1], 0, rat(1, 2)).sub(&QPolynomial::monomial(
            2,
            &[2],
            0,
            rat(1, 2),
        ));
        assert_eq!(q, expected);
        let p2 = x(1).pow(2).add(&x(2).pow(2)).add(&x(3).pow(2));
        assert_eq!(monomial_to_powersum(&p2, 2).unwrap(), QPolynomial::q(2, 2));
        assert!(monomial_to_powersum(&x(1), 1).is_err());
        assert!(monomial_to_powersum(&e2, 4).is_err());
    }

    #[test]
    fn newton_round_trip() {
        let w = 6;
        let es: Vec<QPolynomial> = (1..=w).map(|k| elementary_in_powersums(k, w)).collect();
        for k in 1..=w {
            let p = powersum_in_elementary(k, w).unwrap();
            assert_eq!(substitute_elementary(&p, &es, w), QPolynomial::q(w, k));
        }
    }

    #[test]
    fn extraction_recovers_known_polynomials() {
        let vars = VarTable::builder()
            .var("eps", 2)
            .var("s", 2)
            .build()
            .unwrap();
        let v = vars.clone();
        let q2 = extract_q_polynomial(
            move |l| Ok(Series::monomial_named(&v, &[("eps", 2)], power_sum(l, 2)?)?),
            &Extraction::new(2, 2, 7),
        )
        .unwrap();
        assert_eq!(q2, QPolynomial::q(2, 2));
        let v = vars.clone();
        let q11 = extract_q_polynomial(
            move |l| {
                Ok(Series::monomial_named(
                    &v,
                    &[("eps", 2)],
                    power_sum(l, 1)?.pow(2),
                )?)
            },
            &Extraction::new(2, 2, 7),
        )
        .unwrap();
        assert_eq!(q11, QPolynomial::monomial(2, &[1, 1], 0, int(1)));
    }

    #[test]
    fn extraction_rejects_non_polynomial_data() {
        let vars = VarTable::builder().var("eps", 1).build().unwrap();
        let r = extract_q_polynomial(
            move |l| {
                Ok(Series::monomial_named(
                    &vars,
                    &[("eps", 1)],
                    l[0].recip() * l[1].recip() / (&l[0] + &l[1]),
                )?)
            },
            &Extraction::new(2, 1, 3),
        );
        assert!(r.is_err());
    }
}

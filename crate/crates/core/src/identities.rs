//! Finite identities behind the eigenvalue reduction, the bordered matrix
//! step, Weierstrass injectivity and the 2x2 Schur-reduction formulas.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::opcalc::{weierstrass, CheckOutcome, Direction};
use crate::ring::linalg;
use crate::ring::scalar::{int, Rational, Scalar};
use crate::ring::{Matrix, Series, VarTable};

/// All permutations of `0..n` with their signs.
fn permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    if n == 0 {
        return vec![(Vec::new(), 1)];
    }
    let mut out = Vec::new();
    for (p, sign) in permutations(n - 1) {
        // insert n-1 at position i: moves it past n-1-i elements
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            let moved = (n - 1 - i) as i64;
            out.push((q, if moved % 2 == 0 { sign } else { -sign }));
        }
    }
    out
}

/// Leibniz determinant; independent of [`Matrix::det_cofactor`].
pub fn det_leibniz<S: Scalar>(m: &Matrix<Series<S>>) -> Series<S> {
    let n = m.dim();
    let mut out = Series::zero(m.get(0, 0).vars());
    for (p, sign) in permutations(n) {
        let mut t = Series::constant(m.get(0, 0).vars(), S::from_rational(int(sign)));
        for (i, &j) in p.iter().enumerate() {
            t = t.mul(m.get(i, j));
        }
        out = out.add(&t);
    }
    out
}

fn e_table(m: usize) -> Result<Arc<VarTable>> {
    let mut b = VarTable::builder();
    for i in 1..=m + 1 {
        for j in 1..=m {
            b = b.var(&format!("E{i}_{j}"), 1);
        }
    }
    b.build()
}

/// The `(M+1)x(M+1)` matrix `(E_ij | 1)`: exponentials abstracted to formal
/// symbols, last column from `λ_{M+1} = 0`.
fn exponential_matrix(
    m: usize,
    vars: &Arc<VarTable>,
    values: Option<&[Vec<Rational>]>,
) -> Result<Matrix<Series<Rational>>> {
    let mut entries = Vec::with_capacity((m + 1) * (m + 1));
    for i in 0..=m {
        for j in 0..=m {
            entries.push(if j == m {
                Series::one(vars)
            } else if let Some(v) = values {
                Series::constant(vars, v[i][j].clone())
            } else {
                Series::var(vars, &format!("E{}_{}", i + 1, j + 1))?
            });
        }
    }
    Matrix::from_entries(m + 1, entries)
}

/// `det(E | 1) = Σ_k (-1)^{M+1-k} det(E without row k)`.
///
/// With `values` the symbols are replaced by the given `(M+1) x M` array.
pub fn lemma1_det_expansion(m: usize, values: Option<&[Vec<Rational>]>) -> Result<bool> {
    if m == 0 || m > 3 {
        return Err(Error::domain(
            "identities",
            "the determinant expansion is checked for 1 <= M <= 3",
        ));
    }
    if let Some(v) = values {
        if v.len() != m + 1 || v.iter().any(|r| r.len() != m) {
            return Err(Error::domain(
                "identities",
                "values must be an (M+1) x M array",
            ));
        }
    }
    let vars = e_table(m)?;
    let full = exponential_matrix(m, &vars, values)?;
    let lhs = det_leibniz(&full);
    let mut rhs = Series::zero(&vars);
    for k in 1..=m + 1 {
        let minor = full.minor(k - 1, m)?;
        let sign = if (m + 1 - k) % 2 == 0 { 1 } else { -1 };
        rhs = rhs.add(&minor.det_cofactor().scale_rational(&int(sign)));
    }
    Ok(lhs == rhs)
}

fn pair_factor(a: &Rational, b: &Rational) -> Rational {
    (a - b) / (a + b)
}

/// Both sides of the product rearrangement at one point (`k` is 1-based),
/// together with the unsplit product `Π_{i<j} (m_j - m_i)/(m_j + m_i)`.
pub fn product_sides(m: &[Rational], k: usize) -> (Rational, Rational, Rational) {
    let n = m.len();
    let kk = k - 1;
    let mut rest = int(1);
    for i in 0..n {
        for j in i + 1..n {
            if i != kk && j != kk {
                rest *= pair_factor(&m[j], &m[i]);
            }
        }
    }
    let mut after = int(1);
    for j in kk + 1..n {
        after *= pair_factor(&m[j], &m[kk]);
    }
    let mut before = int(1);
    for i in 0..kk {
        before *= pair_factor(&m[kk], &m[i]);
    }
    let lhs = &rest * &after * &before;
    let mut all_k = int(1);
    for (j, mj) in m.iter().enumerate() {
        if j != kk {
            all_k *= pair_factor(mj, &m[kk]);
        }
    }
    let sign = if kk % 2 == 0 { int(1) } else { int(-1) };
    let rhs = sign * &rest * all_k;
    let mut full = int(1);
    for i in 0..n {
        for j in i + 1..n {
            full *= pair_factor(&m[j], &m[i]);
        }
    }
    (lhs, rhs, full)
}

fn admissible(m: &[Rational]) -> bool {
    m.iter().enumerate().all(|(i, a)| {
        !Scalar::is_zero(a)
            && m[i + 1..]
                .iter()
                .all(|b| a != b && !Scalar::is_zero(&(a + b)))
    })
}

/// Seeded points with pairwise distinct, pairwise non-opposite coordinates.
pub fn seeded_points(seed: u64, count: usize, n: usize) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: Vec<Rational> = (0..n)
            .map(|_| {
                Rational::new(
                    rng.gen_range(-30i64..=30).into(),
                    rng.gen_range(1i64..=7).into(),
                )
            })
            .collect();
        if admissible(&p) {
            out.push(p);
        }
    }
    out
}

/// The product rearrangement for `M+1 = n` variables and extracted index
/// `k`, at `points` seeded points. Each point also checks both sides
/// against the unsplit product.
pub fn lemma1_product_identity(
    n: usize,
    k: usize,
    points: usize,
    seed: u64,
) -> Result<CheckOutcome> {
    if k == 0 || k > n {
        return Err(Error::domain("identities", format!("k must be in 1..={n}")));
    }
    let pts = seeded_points(seed ^ ((n as u64) << 8) ^ k as u64, points, n);
    let bad: Vec<String> = pts
        .par_iter()
        .filter_map(|p| {
            let (lhs, rhs, full) = product_sides(p, k);
            (lhs != rhs || lhs != full).then(|| {
                format!(
                    "m={:?}: {lhs} vs {rhs} (full {full})",
                    p.iter().map(|x| x.to_string()).collect::<Vec<_>>()
                )
            })
        })
        .collect();
    Ok(CheckOutcome::from_mismatches(points, bad))
}

/// Formal symbols of the bordered matrix `H' = [[H, C], [C̄^t, y]]`.
struct Bordered {
    vars: Arc<VarTable>,
    h: Matrix<Series<Rational>>,
    c: Vec<Series<Rational>>,
    cb: Vec<Series<Rational>>,
    y: Series<Rational>,
    lambda: Vec<Series<Rational>>,
}

impl Bordered {
    fn new(m: usize) -> Result<Self> {
        let mut b = VarTable::builder().var("y", 3);
        for i in 1..=m {
            b = b
                .var(&format!("a{i}"), 3)
                .var(&format!("c{i}"), 3)
                .var(&format!("cb{i}"), 3)
                .var(&format!("l{i}"), 1);
            for j in i + 1..=m {
                b = b.var(&format!("h{i}{j}"), 3).var(&format!("hb{i}{j}"), 3);
            }
        }
        let vars = b.build()?;
        let v = |name: String| Series::var(&vars, &name);
        let mut entries = Vec::new();
        for i in 1..=m {
            for j in 1..=m {
                entries.push(match i.cmp(&j) {
                    std::cmp::Ordering::Equal => v(format!("a{i}"))?,
                    std::cmp::Ordering::Less => v(format!("h{i}{j}"))?,
                    std::cmp::Ordering::Greater => v(format!("hb{j}{i}"))?,
                });
            }
        }
        let h = Matrix::from_entries(m, entries)?;
        let c = (1..=m).map(|i| v(format!("c{i}"))).collect::<Result<_>>()?;
        let cb = (1..=m)
            .map(|i| v(format!("cb{i}")))
            .collect::<Result<_>>()?;
        let lambda = (1..=m).map(|i| v(format!("l{i}"))).collect::<Result<_>>()?;
        let y = v("y".into())?;
        Ok(Bordered {
            vars,
            h,
            c,
            cb,
            y,
            lambda,
        })
    }

    fn h_prime(&self) -> Result<Matrix<Series<Rational>>> {
        let m = self.c.len();
        let mut entries = Vec::new();
        for i in 0..=m {
            for j in 0..=m {
                entries.push(match (i < m, j < m) {
                    (true, true) => self.h.get(i, j).clone(),
                    (true, false) => self.c[i].clone(),
                    (false, true) => self.cb[j].clone(),
                    (false, false) => self.y.clone(),
                });
            }
        }
        Matrix::from_entries(m + 1, entries)
    }

    fn lambda_prime(&self) -> Matrix<Series<Rational>> {
        let mut d = self.lambda.clone();
        d.push(Series::zero(&self.vars));
        Matrix::diagonal(d)
    }
}

/// The three trace identities of the bordered matrix, as formal polynomials
/// in the entries of `H`, `C`, `C̄`, `y` and `λ`.
pub fn bordered_trace_identities(m: usize) -> Result<CheckOutcome> {
    if m == 0 {
        return Err(Error::domain("identities", "M must be positive"));
    }
    let b = Bordered::new(m)?;
    let hp = b.h_prime()?;
    let hp2 = hp.mul(&hp)?;
    let mut bad = Vec::new();

    let c_bar_h_c = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .fold(Series::zero(&b.vars), |acc, (i, j)| {
            acc.add(&b.cb[i].mul(b.h.get(i, j)).mul(&b.c[j]))
        });
    let c_norm = (0..m).fold(Series::zero(&b.vars), |acc, i| {
        acc.add(&b.c[i].mul(&b.cb[i]))
    });
    let h3 = b.h.mul(&b.h)?.mul(&b.h)?.trace();
    let three = int(3);
    let rhs = h3
        .add(&c_bar_h_c.scale(&three))
        .add(&b.y.pow(3))
        .add(&b.y.mul(&c_norm).scale(&three));
    if hp2.mul(&hp)?.trace() != rhs {
        bad.push("tr H'^3".to_string());
    }

    let lam = Matrix::diagonal(b.lambda.clone());
    let c_lam_c = (0..m).fold(Series::zero(&b.vars), |acc, i| {
        acc.add(&b.cb[i].mul(&b.lambda[i]).mul(&b.c[i]))
    });
    let rhs = b.h.mul(&b.h)?.mul(&lam)?.trace().add(&c_lam_c);
    if hp2.mul(&b.lambda_prime())?.trace() != rhs {
        bad.push("tr H'^2 Λ'".to_string());
    }

    if hp.trace() != b.h.trace().add(&b.y) {
        bad.push("tr H'".to_string());
    }
    Ok(CheckOutcome::from_mismatches(3, bad))
}

/// Coefficients of `exp(t ∂_s^2) s^n` in the basis `1, s, ..., s^D`, as
/// polynomials in `t`: row `n` holds the image of `s^n`.
pub fn weierstrass_matrix(d: u32) -> Result<Vec<Vec<Series<Rational>>>> {
    let vars = VarTable::builder()
        .var("s", d as i32)
        .var("t", d as i32)
        .build()?;
    let tvars = VarTable::builder().var("t", d as i32).build()?;
    let mut rows = Vec::new();
    for n in 0..=d {
        let img = weierstrass(
            &Series::monomial_named(&vars, &[("s", n as i32)], int(1))?,
            "s",
            "t",
            Direction::Forward,
        )?;
        let mut row = vec![Series::zero(&tvars); d as usize + 1];
        for (e, c) in img.terms() {
            let t = Series::monomial(&tvars, vec![e[1]], c.clone());
            row[e[0] as usize] = row[e[0] as usize].add(&t);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `exp(t ∂_s^2)` is unitriangular on `1, s, ..., s^D`; the determinant is
/// also recomputed by elimination at a few rational `t`.
pub fn weierstrass_injectivity(d: u32) -> Result<CheckOutcome> {
    let rows = weierstrass_matrix(d)?;
    let mut bad = Vec::new();
    for (n, row) in rows.iter().enumerate() {
        if row[n] != Series::one(row[n].vars()) {
            bad.push(format!("diagonal at s^{n} is {}", row[n]));
        }
        if let Some(k) = (n + 1..row.len()).find(|&k| !row[k].is_zero()) {
            bad.push(format!("s^{n} maps onto s^{k}"));
        }
    }
    for t in [int(1), Rational::new((-7).into(), 3.into()), int(5)] {
        let numeric: Vec<Vec<Rational>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|p| {
                        p.terms()
                            .iter()
                            .map(|(e, c)| c * num::pow(t.clone(), e[0] as usize))
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let det = linalg::det(&numeric);
        if det != int(1) {
            bad.push(format!("det at t={t} is {det}"));
        }
    }
    Ok(CheckOutcome::from_mismatches(rows.len() + 3, bad))
}

fn mat2(a: Rational, b: Rational, c: Rational, d: Rational) -> [[Rational; 2]; 2] {
    [[a, b], [c, d]]
}

fn mul2(x: &[[Rational; 2]; 2], y: &[[Rational; 2]; 2]) -> [[Rational; 2]; 2] {
    let e = |i: usize, j: usize| &x[i][0] * &y[0][j] + &x[i][1] * &y[1][j];
    mat2(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
}

/// `(S̄^t)^n` for `S̄^t = [[z1, 0], [s, z2]]` in closed form, with the
/// off-diagonal divided difference `s (z1^n - z2^n)/(z1 - z2)`.
pub fn schur_power_closed_form(
    z1: &Rational,
    z2: &Rational,
    s: &Rational,
    n: u32,
) -> Result<[[Rational; 2]; 2]> {
    if z1 == z2 {
        return Err(Error::domain(
            "identities",
            "the divided difference needs z1 != z2",
        ));
    }
    let p1 = num::pow(z1.clone(), n as usize);
    let p2 = num::pow(z2.clone(), n as usize);
    let off = s * (&p1 - &p2) / (z1 - z2);
    Ok(mat2(p1, int(0), off, p2))
}

/// Matrix powers against the closed form at the given points for `n <= max_n`,
/// and the square of the 2x2 square-root formula against `1 - x^2 S̄^t`
/// (with `x = 1/λ`) to total order `order` in `z1, z2`.
pub fn schur_closed_forms(
    points: &[[Rational; 3]],
    max_n: u32,
    order: i32,
) -> Result<CheckOutcome> {
    let mut bad = Vec::new();
    let mut cases = 0;
    for [z1, z2, s] in points {
        let st = mat2(z1.clone(), int(0), s.clone(), z2.clone());
        let mut pow = mat2(int(1), int(0), int(0), int(1));
        for n in 1..=max_n {
            pow = mul2(&pow, &st);
            cases += 1;
            if pow != schur_power_closed_form(z1, z2, s, n)? {
                bad.push(format!("power {n} at z=({z1},{z2}), s={s}"));
            }
        }
    }
    cases += 1;
    if let Some(m) = schur_sqrt_mismatch(order)? {
        bad.push(m);
    }
    Ok(CheckOutcome::from_mismatches(cases, bad))
}

/// `[[√(1-x²z1), 0], [-x²s/(√(1-x²z1)+√(1-x²z2)), √(1-x²z2)]]` squared,
/// minus `1 - x² S̄^t`; returns a description of the first nonzero entry.
fn schur_sqrt_mismatch(order: i32) -> Result<Option<String>> {
    let vars = VarTable::builder()
        .var("x", 2 * order + 2)
        .var("z1", order)
        .var("z2", order)
        .var("s", 1)
        .weight_cap(&[("z1", 1), ("z2", 1)], order)
        .build()?;
    let v = |n: &str| Series::<Rational>::var(&vars, n);
    let (x, z1, z2, s) = (v("x")?, v("z1")?, v("z2")?, v("s")?);
    let x2 = x.mul(&x);
    let one = Series::one(&vars);
    let a1 = one.sub(&x2.mul(&z1)).sqrt()?;
    let a2 = one.sub(&x2.mul(&z2)).sqrt()?;
    let off = x2.mul(&s).neg().mul(&a1.add(&a2).inv()?);
    let zero = Series::zero(&vars);
    let root = Matrix::from_entries(2, vec![a1, zero.clone(), off, a2])?;
    let target = Matrix::from_entries(
        2,
        vec![
            one.sub(&x2.mul(&z1)),
            zero,
            x2.mul(&s).neg(),
            one.sub(&x2.mul(&z2)),
        ],
    )?;
    let diff = root.mul(&root)?.sub(&target)?;
    Ok(diff
        .entries()
        .iter()
        .position(|e| !e.is_zero())
        .map(|k| format!("square-root formula entry {k}: {}", diff.entries()[k])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::rat;

    #[test]
    fn permutations_have_signs() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p.iter().map(|(_, s)| s).sum::<i64>(), 0);
        assert!(p.contains(&(vec![0, 1, 2], 1)));
        assert!(p.contains(&(vec![1, 0, 2], -1)));
        assert!(p.contains(&(vec![1, 2, 0], 1)));
    }

    #[test]
    fn det_expansion() {
        for m in 1..=3 {
            assert!(lemma1_det_expansion(m, None).unwrap());
        }
        let v = vec![vec![int(5)], vec![int(3)]];
        assert!(lemma1_det_expansion(1, Some(&v)).unwrap());
        let vars = e_table(1).unwrap();
        let d = det_leibniz(&exponential_matrix(1, &vars, None).unwrap());
        assert_eq!(
            d,
            Series::var(&vars, "E1_1")
                .unwrap()
                .sub(&Series::var(&vars, "E2_1").unwrap())
        );
        let same = vec![vec![int(2), int(3)]; 3];
        assert!(lemma1_det_expansion(2, Some(&same)).unwrap());
    }

    #[test]
    fn product_examples() {
        let (l, r, _) = product_sides(&[int(2), int(3)], 1);
        assert_eq!(l, r);
        assert_eq!(l, rat(1, 5));
        let (l, r, f) = product_sides(&[int(2), int(3), int(5)], 2);
        assert_eq!((l.clone(), l), (r, f));
        assert!(lemma1_product_identity(4, 4, 20, 1).unwrap().passed);
    }

    #[test]
    fn bordered() {
        assert!(bordered_trace_identities(1).unwrap().passed);
        assert!(bordered_trace_identities(2).unwrap().passed);
    }

    #[test]
    fn weierstrass_rows() {
        let rows = weierstrass_matrix(3).unwrap();
        let t = Series::var(rows[3][1].vars(), "t").unwrap();
        assert_eq!(rows[3][1], t.scale(&int(6)));
        assert!(weierstrass_injectivity(12).unwrap().passed);
    }

    #[test]
    fn schur_examples() {
        let p = schur_power_closed_form(&int(1), &int(2), &int(3), 2).unwrap();
        assert_eq!(p, mat2(int(1), int(0), int(9), int(4)));
        let p = schur_power_closed_form(&int(1), &int(2), &int(1), 3).unwrap();
        assert_eq!(p[1][0], int(7));
        let pts = [[int(1), int(2), int(3)], [rat(-1, 2), rat(7, 3), int(-2)]];
        assert!(schur_closed_forms(&pts, 6, 4).unwrap().passed);
    }
}

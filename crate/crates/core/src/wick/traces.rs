//! Wick expectations of trace integrands via ribbon graphs.
//!
//! Integrands of the form `exp(Σ_a c_a tr(Λ^{-p_1} X Λ^{-p_2} X ...))` are
//! expanded into products of trace words. Pairing the `X` half-edges of a
//! product glues corners into faces; each face carries a free matrix index
//! weighted by `λ^{-power}`, each edge the propagator `2/(λ_a + λ_b)`.
//! Pairings are enumerated once, split into connected components and reduced
//! to canonical labelled multigraphs, so that evaluating at many eigenvalue
//! tuples only requires one small tensor contraction per distinct component.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use super::family::{x_table, FamilyFraction};
use crate::error::{Error, Result};
use crate::ring::scalar::{double_factorial_odd, factorial, int, Rational, Scalar};
use crate::ring::series::{Exponents, Series, VarTable};

/// One trace word. `corners[h]` is the power of `Λ^{-1}` standing just before
/// the `h`-th `X`; a word without `X` is the pure trace `tr Λ^{-bare}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub corners: Vec<u32>,
    pub bare: u32,
}

impl Vertex {
    pub fn word(corners: Vec<u32>) -> Self {
        Vertex { corners, bare: 0 }.canonical()
    }

    pub fn pure(power: u32) -> Self {
        Vertex {
            corners: Vec::new(),
            bare: power,
        }
    }

    /// Least cyclic rotation; the trace is invariant under rotation.
    fn canonical(mut self) -> Self {
        let n = self.corners.len();
        if n > 1 {
            let best = (0..n)
                .map(|r| {
                    let mut v = self.corners.clone();
                    v.rotate_left(r);
                    v
                })
                .min()
                .expect("non-empty");
            self.corners = best;
        }
        self
    }

    pub fn legs(&self) -> usize {
        self.corners.len()
    }
}

/// `coeff * Π vars^exps * tr(word)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom<S: Scalar> {
    pub coeff: S,
    pub exps: Exponents,
    pub vertex: Vertex,
}

/// A `Λ^{-power}` slot in a matrix product, with a scalar weight.
#[derive(Clone, Debug)]
pub struct Slot<S: Scalar> {
    pub power: u32,
    pub coeff: S,
    pub exps: Exponents,
}

/// What may stand between two slots: the matrix `X` or a scalar variable.
#[derive(Clone, Debug)]
pub enum Letter<S: Scalar> {
    Matrix(S),
    Scalar(S, Exponents),
}

/// Integrand `exp(Σ atoms)` under the Λ-weighted Gaussian measure.
#[derive(Clone, Debug)]
pub struct TraceIntegrand<S: Scalar> {
    vars: Arc<VarTable>,
    eps: usize,
    cap: i32,
    atoms: Vec<Atom<S>>,
}

impl<S: Scalar> TraceIntegrand<S> {
    /// `eps` names the grading variable; its cap bounds the expansion.
    pub fn new(vars: &Arc<VarTable>, eps: &str) -> Result<Self> {
        let idx = vars.index(eps)?;
        Ok(TraceIntegrand {
            vars: vars.clone(),
            eps: idx,
            cap: vars.vars()[idx].cap,
            atoms: Vec::new(),
        })
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    fn cost2(&self, exps: &[i32], legs: usize) -> i32 {
        2 * exps[self.eps] + legs as i32
    }

    fn within_caps(&self, exps: &[i32]) -> bool {
        exps.iter()
            .zip(self.vars.vars())
            .enumerate()
            .all(|(k, (e, v))| k == self.eps || *e <= v.cap)
    }

    /// Adds an atom, merging with an existing one of the same shape.
    pub fn add_atom(&mut self, atom: Atom<S>) -> Result<()> {
        if self.cost2(&atom.exps, atom.vertex.legs()) <= 0 {
            return Err(Error::domain(
                "wick",
                "trace atom without grading weight cannot be exponentiated",
            ));
        }
        if Scalar::is_zero(&atom.coeff) {
            return Ok(());
        }
        if let Some(a) = self
            .atoms
            .iter_mut()
            .find(|a| a.vertex == atom.vertex && a.exps == atom.exps)
        {
            a.coeff = a.coeff.plus(&atom.coeff);
        } else {
            self.atoms.push(atom);
        }
        self.atoms.retain(|a| !Scalar::is_zero(&a.coeff));
        Ok(())
    }

    /// `coeff * tr X^3`.
    pub fn add_cubic(&mut self, coeff: S) -> Result<()> {
        self.add_atom(Atom {
            coeff,
            exps: vec![0; self.vars.len()],
            vertex: Vertex::word(vec![0, 0, 0]),
        })
    }

    /// Adds `Σ_{k>=1} k_coeff(k) tr((Σ slots)(Σ letters))^k`, truncated by the caps.
    pub fn add_trace_powers(
        &mut self,
        k_coeff: impl Fn(u32) -> S,
        slots: &[Slot<S>],
        letters: &[Letter<S>],
    ) -> Result<()> {
        let n = self.vars.len();
        let mut found: Vec<Atom<S>> = Vec::new();
        let mut seq: Vec<(usize, usize)> = Vec::new();
        let max_k = (2 * self.cap).max(0) as u32;
        for k in 1..=max_k {
            let kc = k_coeff(k);
            if Scalar::is_zero(&kc) {
                continue;
            }
            self.sequences(
                k as usize,
                slots,
                letters,
                &mut seq,
                vec![0; n],
                0,
                kc,
                &mut found,
            );
        }
        for a in found {
            self.add_atom(a)?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn sequences(
        &self,
        k: usize,
        slots: &[Slot<S>],
        letters: &[Letter<S>],
        seq: &mut Vec<(usize, usize)>,
        exps: Exponents,
        legs: usize,
        coeff: S,
        out: &mut Vec<Atom<S>>,
    ) {
        if self.cost2(&exps, legs) > 2 * self.cap || !self.within_caps(&exps) {
            return;
        }
        if seq.len() == k {
            let mut corners = Vec::new();
            let mut acc = 0u32;
            for &(si, li) in seq.iter() {
                acc += slots[si].power;
                if let Letter::Matrix(_) = letters[li] {
                    corners.push(acc);
                    acc = 0;
                }
            }
            let vertex = if corners.is_empty() {
                Vertex::pure(acc)
            } else {
                corners[0] += acc;
                Vertex::word(corners)
            };
            out.push(Atom {
                coeff,
                exps,
                vertex,
            });
            return;
        }
        for (si, slot) in slots.iter().enumerate() {
            for (li, letter) in letters.iter().enumerate() {
                let mut e: Exponents = exps.iter().zip(&slot.exps).map(|(a, b)| a + b).collect();
                let mut c = coeff.times(&slot.coeff);
                let mut l = legs;
                match letter {
                    Letter::Matrix(x) => {
                        c = c.times(x);
                        l += 1;
                    }
                    Letter::Scalar(x, le) => {
                        c = c.times(x);
                        for (a, b) in e.iter_mut().zip(le) {
                            *a += b;
                        }
                    }
                }
                seq.push((si, li));
                self.sequences(k, slots, letters, seq, e, l, c, out);
                seq.pop();
            }
        }
    }

    /// Enumerates the admissible atom multisets: `(multiplicities, exps, coeff)`.
    fn multisets(&self) -> Vec<(Vec<u32>, Exponents, S)> {
        let mut out = Vec::new();
        let mut mult = vec![0u32; self.atoms.len()];
        self.multisets_rec(
            0,
            &mut mult,
            vec![0; self.vars.len()],
            0,
            S::one(),
            &mut out,
        );
        out
    }

    fn multisets_rec(
        &self,
        i: usize,
        mult: &mut Vec<u32>,
        exps: Exponents,
        legs: usize,
        coeff: S,
        out: &mut Vec<(Vec<u32>, Exponents, S)>,
    ) {
        if i == self.atoms.len() {
            if legs % 2 == 0 {
                let mut e = exps;
                e[self.eps] += (legs / 2) as i32;
                if self.vars.admits(&e) {
                    out.push((mult.clone(), e, coeff));
                }
            }
            return;
        }
        let atom = &self.atoms[i];
        let mut e = exps;
        let mut l = legs;
        let mut c = coeff;
        let mut m = 0u32;
        loop {
            mult[i] = m;
            self.multisets_rec(i + 1, mult, e.clone(), l, c.clone(), out);
            m += 1;
            e = e.iter().zip(&atom.exps).map(|(a, b)| a + b).collect();
            l += atom.vertex.legs();
            if self.cost2(&e, l) > 2 * self.cap || !self.within_caps(&e) {
                break;
            }
            c = c.times(&atom.coeff).scaled(&int(m as i64).recip());
        }
        mult[i] = 0;
    }

    /// Total number of pairings the expansion will enumerate.
    pub fn pairing_count(&self) -> Rational {
        let mut total = int(0);
        for (mult, _, _) in self.multisets() {
            let legs: u32 = mult
                .iter()
                .zip(&self.atoms)
                .map(|(m, a)| m * a.vertex.legs() as u32)
                .sum();
            total += double_factorial_odd(legs / 2);
        }
        total
    }

    /// Enumerates all pairings and collects the result by component shape.
    pub fn expand(&self) -> Result<WickExpansion<S>> {
        let mut table = ComponentTable::default();
        let mut memo: HashMap<Vec<Vertex>, Vec<(Vec<u32>, u64)>> = HashMap::new();
        let mut terms: BTreeMap<(Exponents, Vec<u32>), S> = BTreeMap::new();
        for (mult, exps, coeff) in self.multisets() {
            let mut vertices: Vec<Vertex> = Vec::new();
            for (m, a) in mult.iter().zip(&self.atoms) {
                for _ in 0..*m {
                    vertices.push(a.vertex.clone());
                }
            }
            vertices.sort();
            let graphs = memo
                .entry(vertices.clone())
                .or_insert_with(|| pair_graphs(&vertices, &mut table));
            for (comps, count) in graphs.iter() {
                let c = coeff.scaled(&int(*count as i64));
                let slot = terms
                    .entry((exps.clone(), comps.clone()))
                    .or_insert_with(S::zero);
                *slot = slot.plus(&c);
            }
        }
        terms.retain(|_, c| !Scalar::is_zero(c));
        Ok(WickExpansion {
            vars: self.vars.clone(),
            components: table.keys,
            terms,
        })
    }
}

/// Connected ribbon graph reduced to its face multigraph.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentKey {
    /// `Λ^{-1}` power collected by each face.
    pub powers: Vec<u32>,
    /// Edges between faces, `a <= b`, sorted.
    pub edges: Vec<(u8, u8)>,
}

#[derive(Default)]
struct ComponentTable {
    ids: HashMap<ComponentKey, u32>,
    keys: Vec<ComponentKey>,
}

impl ComponentTable {
    fn id(&mut self, key: ComponentKey) -> u32 {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.keys.push(key.clone());
        self.ids.insert(key, id);
        id
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

const MAX_RELABELINGS: usize = 40_320;

/// Canonical labelling by exhaustive search within blocks of faces that share
/// (power, degree, loop count). Falls back to the block order alone when the
/// search would be too large; the result is then still a valid key.
fn canonical_component(powers: &[u32], edges: &[(usize, usize)]) -> ComponentKey {
    let f = powers.len();
    let mut degree = vec![0u32; f];
    let mut loops = vec![0u32; f];
    for &(a, b) in edges {
        degree[a] += 1;
        degree[b] += 1;
        if a == b {
            loops[a] += 1;
        }
    }
    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by_key(|&i| (powers[i], degree[i], loops[i]));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match blocks.last_mut() {
            Some(b)
                if (powers[b[0]], degree[b[0]], loops[b[0]])
                    == (powers[i], degree[i], loops[i]) =>
            {
                b.push(i)
            }
            _ => blocks.push(vec![i]),
        }
    }
    let count: usize = blocks
        .iter()
        .map(|b| (1..=b.len()).product::<usize>())
        .fold(1usize, |a, b| a.saturating_mul(b));
    let relabel = |order: &[usize]| {
        let mut label = vec![0u8; f];
        for (new, &old) in order.iter().enumerate() {
            label[old] = new as u8;
        }
        let mut e: Vec<(u8, u8)> = edges
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (label[a], label[b]);
                (x.min(y), x.max(y))
            })
            .collect();
        e.sort_unstable();
        ComponentKey {
            powers: order.iter().map(|&i| powers[i]).collect(),
            edges: e,
        }
    };
    if count > MAX_RELABELINGS {
        return relabel(&order);
    }
    let mut best: Option<ComponentKey> = None;
    let block_perms: Vec<Vec<Vec<usize>>> = blocks.iter().map(|b| permutations(b)).collect();
    let mut idx = vec![0usize; blocks.len()];
    loop {
        let order: Vec<usize> = block_perms
            .iter()
            .zip(&idx)
            .flat_map(|(p, &k)| p[k].iter().copied())
            .collect();
        let key = relabel(&order);
        if best.as_ref().is_none_or(|b| key < *b) {
            best = Some(key);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best.expect("at least one labelling");
            }
            idx[k] += 1;
            if idx[k] < block_perms[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// All pairings of the half-edges of `vertices`, grouped by the sorted list
/// of component ids they produce.
fn pair_graphs(vertices: &[Vertex], table: &mut ComponentTable) -> Vec<(Vec<u32>, u64)> {
    let mut he_vertex = Vec::new();
    let mut he_next = Vec::new();
    let mut he_power = Vec::new();
    let mut bare_ids = Vec::new();
    for (v, vx) in vertices.iter().enumerate() {
        if vx.corners.is_empty() {
            bare_ids.push(table.id(ComponentKey {
                powers: vec![vx.bare],
                edges: Vec::new(),
            }));
            continue;
        }
        let base = he_vertex.len();
        let n = vx.corners.len();
        for (k, &p) in vx.corners.iter().enumerate() {
            he_vertex.push(v);
            he_next.push(base + (k + 1) % n);
            he_power.push(p);
        }
    }
    let n = he_vertex.len();
    let mut partner = vec![usize::MAX; n];
    let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
    let ctx = PairCtx {
        he_vertex: &he_vertex,
        he_next: &he_next,
        he_power: &he_power,
        nvert: vertices.len(),
        bare: &bare_ids,
    };
    if n % 2 == 0 {
        ctx.recurse(&mut partner, table, &mut counts);
    }
    let mut out: Vec<(Vec<u32>, u64)> = counts.into_iter().collect();
    out.sort();
    out
}

struct PairCtx<'a> {
    he_vertex: &'a [usize],
    he_next: &'a [usize],
    he_power: &'a [u32],
    nvert: usize,
    bare: &'a [u32],
}

impl PairCtx<'_> {
    fn recurse(
        &self,
        partner: &mut Vec<usize>,
        table: &mut ComponentTable,
        counts: &mut HashMap<Vec<u32>, u64>,
    ) {
        let Some(h) = partner.iter().position(|&p| p == usize::MAX) else {
            let comps = self.leaf(partner, table);
            *counts.entry(comps).or_insert(0) += 1;
            return;
        };
        for k in h + 1..partner.len() {
            if partner[k] == usize::MAX {
                partner[h] = k;
                partner[k] = h;
                self.recurse(partner, table, counts);
                partner[h] = usize::MAX;
                partner[k] = usize::MAX;
            }
        }
    }

    fn leaf(&self, partner: &[usize], table: &mut ComponentTable) -> Vec<u32> {
        let n = partner.len();
        let mut corner = (0..n).collect::<Vec<_>>();
        let mut vert = (0..self.nvert).collect::<Vec<_>>();
        for h in 0..n {
            let p = partner[h];
            if h < p {
                union(&mut corner, h, self.he_next[p]);
                union(&mut corner, self.he_next[h], p);
                union(&mut vert, self.he_vertex[h], self.he_vertex[p]);
            }
        }
        // group half-edges by vertex component
        let mut comp_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for h in 0..n {
            let r = find(&mut vert, self.he_vertex[h]);
            comp_of.entry(r).or_default().push(h);
        }
        let mut ids: Vec<u32> = self.bare.to_vec();
        for hs in comp_of.values() {
            let mut face_ids: BTreeMap<usize, usize> = BTreeMap::new();
            let mut powers: Vec<u32> = Vec::new();
            for &h in hs {
                let r = find(&mut corner, h);
                let len = face_ids.len();
                let id = *face_ids.entry(r).or_insert(len);
                if id == powers.len() {
                    powers.push(0);
                }
                powers[id] += self.he_power[h];
            }
            let mut edges = Vec::new();
            for &h in hs {
                let p = partner[h];
                if h < p {
                    let a = face_ids[&find(&mut corner, h)];
                    let b = face_ids[&find(&mut corner, self.he_next[h])];
                    edges.push((a, b));
                }
            }
            ids.push(table.id(canonical_component(&powers, &edges)));
        }
        ids.sort_unstable();
        ids
    }
}

/// Result of [`TraceIntegrand::expand`]: `Σ coeff * vars^exps * Π component values`.
#[derive(Clone, Debug)]
pub struct WickExpansion<S: Scalar> {
    vars: Arc<VarTable>,
    components: Vec<ComponentKey>,
    terms: BTreeMap<(Exponents, Vec<u32>), S>,
}

struct Factor {
    vars: Vec<usize>,
    table: Vec<Rational>,
}

fn contract(m: usize, mut factors: Vec<Factor>) -> Rational {
    loop {
        let live: Vec<usize> = {
            let mut v: Vec<usize> = factors
                .iter()
                .flat_map(|f| f.vars.iter().copied())
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        if live.is_empty() {
            break;
        }
        let union_of = |v: usize, factors: &[Factor]| {
            let mut u: Vec<usize> = factors
                .iter()
                .filter(|f| f.vars.contains(&v))
                .flat_map(|f| f.vars.iter().copied())
                .collect();
            u.sort_unstable();
            u.dedup();
            u
        };
        let v = *live
            .iter()
            .min_by_key(|&&v| (union_of(v, &factors).len(), v))
            .expect("non-empty");
        let u = union_of(v, &factors);
        let (mine, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = rest;
        let out_vars: Vec<usize> = u.iter().copied().filter(|&x| x != v).collect();
        let mut table = vec![int(0); m.pow(out_vars.len() as u32)];
        let pos: Vec<Vec<usize>> = mine
            .iter()
            .map(|f| {
                f.vars
                    .iter()
                    .map(|x| u.iter().position(|y| y == x).expect("in union"))
                    .collect()
            })
            .collect();
        let mut assign = vec![0usize; u.len()];
        let total = m.pow(u.len() as u32);
        for _ in 0..total {
            let mut prod = int(1);
            for (f, p) in mine.iter().zip(&pos) {
                let mut idx = 0;
                for &k in p.iter().rev() {
                    idx = idx * m + assign[k];
                }
                prod *= &f.table[idx];
                if Scalar::is_zero(&prod) {
                    break;
                }
            }
            if !Scalar::is_zero(&prod) {
                let mut idx = 0;
                for x in out_vars.iter().rev() {
                    let k = u.iter().position(|y| y == x).expect("in union");
                    idx = idx * m + assign[k];
                }
                table[idx] += prod;
            }
            for a in assign.iter_mut() {
                *a += 1;
                if *a < m {
                    break;
                }
                *a = 0;
            }
        }
        factors.push(Factor {
            vars: out_vars,
            table,
        });
    }
    factors.iter().fold(int(1), |acc, f| acc * &f.table[0])
}

/// Value of a component at numeric `x = 1/λ`.
pub fn component_value(key: &ComponentKey, x: &[Rational]) -> Rational {
    let m = x.len();
    let f = key.powers.len();
    let xpow = |a: usize, p: u32| (0..p).fold(int(1), |acc, _| acc * &x[a]);
    let mut unary: Vec<Vec<Rational>> = (0..f)
        .map(|i| (0..m).map(|a| xpow(a, key.powers[i])).collect())
        .collect();
    let mut pairs: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for &(a, b) in &key.edges {
        let (a, b) = (a as usize, b as usize);
        if a == b {
            for (k, u) in unary[a].iter_mut().enumerate() {
                *u *= &x[k];
            }
        } else {
            *pairs.entry((a, b)).or_insert(0) += 1;
        }
    }
    let mut factors: Vec<Factor> = unary
        .into_iter()
        .enumerate()
        .map(|(i, t)| Factor {
            vars: vec![i],
            table: t,
        })
        .collect();
    for ((a, b), mult) in pairs {
        let mut table = vec![int(0); m * m];
        for ia in 0..m {
            for ib in 0..m {
                let p = int(2) * &x[ia] * &x[ib] / (&x[ia] + &x[ib]);
                // index: vars sorted (a < b), first var least significant
                table[ib * m + ia] = (0..mult).fold(int(1), |acc, _| acc * &p);
            }
        }
        factors.push(Factor {
            vars: vec![a, b],
            table,
        });
    }
    contract(m, factors)
}

fn component_fraction(key: &ComponentKey, vars: &Arc<VarTable>) -> FamilyFraction<Rational> {
    let m = vars.len();
    let f = key.powers.len();
    let mut total: Option<FamilyFraction<Rational>> = None;
    let mut assign = vec![0usize; f];
    for _ in 0..m.pow(f as u32) {
        let mut e = vec![0i32; m];
        for (i, &a) in assign.iter().enumerate() {
            e[a] += key.powers[i] as i32;
        }
        let mut term = FamilyFraction::from_series(Series::monomial(vars, e, int(1)));
        for &(a, b) in &key.edges {
            term = term.mul(&FamilyFraction::propagator(
                vars,
                assign[a as usize],
                assign[b as usize],
            ));
        }
        total = Some(match total {
            None => term,
            Some(t) => t.add(&term),
        });
        for a in assign.iter_mut() {
            *a += 1;
            if *a < m {
                break;
            }
            *a = 0;
        }
    }
    total.expect("at least one assignment")
}

impl<S: Scalar> WickExpansion<S> {
    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Evaluates at numeric eigenvalues.
    pub fn evaluate(&self, lambda: &[Rational]) -> Result<Series<S>> {
        super::entry::validate_lambda(lambda)?;
        let x: Vec<Rational> = lambda.iter().map(|l| l.recip()).collect();
        let values: Vec<Rational> = self
            .components
            .par_iter()
            .map(|k| component_value(k, &x))
            .collect();
        let mut out = Series::zero(&self.vars);
        for ((exps, comps), c) in &self.terms {
            let v = comps
                .iter()
                .fold(int(1), |acc, &id| acc * &values[id as usize]);
            out.add_term(exps.clone(), c.scaled(&v));
        }
        Ok(out)
    }

    /// Evaluates with symbolic `x_i = 1/λ_i`; `target` must contain the
    /// expansion variables and `x1..xM`.
    pub fn evaluate_symbolic(&self, m: usize, target: &Arc<VarTable>) -> Result<Series<S>> {
        let xt = x_table(m, 512)?;
        let values: Vec<FamilyFraction<Rational>> = self
            .components
            .iter()
            .map(|k| component_fraction(k, &xt))
            .collect();
        let mut grouped: BTreeMap<Exponents, FamilyFraction<S>> = BTreeMap::new();
        for ((exps, comps), c) in &self.terms {
            let v = comps
                .iter()
                .fold(FamilyFraction::from_series(Series::one(&xt)), |acc, &id| {
                    acc.mul(&values[id as usize])
                });
            let frac = v.lift::<S>().scale(c);
            grouped
                .entry(exps.clone())
                .and_modify(|g| *g = g.add(&frac))
                .or_insert(frac);
        }
        let xnames: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
        let mut out = Series::zero(target);
        for (exps, frac) in grouped {
            let poly = frac.into_polynomial()?;
            let base = Series::monomial(&self.vars, exps, S::one()).embed(target)?;
            for (xe, c) in poly.terms() {
                let powers: Vec<(&str, i32)> = xnames
                    .iter()
                    .map(|n| n.as_str())
                    .zip(xe.iter().copied())
                    .collect();
                let mono = Series::monomial_named(target, &powers, c.clone())?;
                out = out.add(&base.mul(&mono));
            }
        }
        Ok(out)
    }
}

/// Convenience: `Σ_k tr((ε Λ^{-1} X)^k) * weight / k` and friends use these slots.
pub fn lambda_slot<S: Scalar>(
    vars: &Arc<VarTable>,
    eps: &str,
    power: u32,
    eps_power: i32,
    coeff: S,
    extra: &[(&str, i32)],
) -> Result<Slot<S>> {
    let mut powers = vec![(eps, eps_power)];
    powers.extend_from_slice(extra);
    Ok(Slot {
        power,
        coeff,
        exps: vars.exponents(&powers)?,
    })
}

/// `1/k!` as a scalar.
pub fn inverse_factorial<S: Scalar>(k: u32) -> S {
    S::from_rational(factorial(k).recip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::rat;

    fn eps_table(cap: i32) -> Arc<VarTable> {
        VarTable::builder().var("eps", cap).build().unwrap()
    }

    #[test]
    fn quadratic_trace() {
        // <tr X^2> = Σ_{a,b} 2/(λ_a+λ_b); single atom tr X^2 with weight 1 at ε^0
        let v = eps_table(1);
        let mut t = TraceIntegrand::<Rational>::new(&v, "eps").unwrap();
        t.add_atom(Atom {
            coeff: int(1),
            exps: vec![0],
            vertex: Vertex::word(vec![0, 0]),
        })
        .unwrap();
        let e = t.expand().unwrap();
        let val = e.evaluate(&[int(1), int(2)]).unwrap();
        // 1 + 2/3 + 2/3 + 1/2
        assert_eq!(val.coeff_named(&[("eps", 1)]).unwrap(), rat(17, 6));
    }

    #[test]
    fn kontsevich_first_correction() {
        // M=1, λ=1: <exp(x^3/6)> at ε^3 is (1/2)(1/36)*15 = 5/24
        let v = eps_table(3);
        let mut t = TraceIntegrand::<Rational>::new(&v, "eps").unwrap();
        t.add_cubic(rat(1, 6)).unwrap();
        let e = t.expand().unwrap();
        let val = e.evaluate(&[int(1)]).unwrap();
        assert_eq!(val.coeff_named(&[("eps", 3)]).unwrap(), rat(5, 24));
        assert_eq!(val.constant_term(), int(1));
    }

    #[test]
    fn canonical_labels_are_relabeling_invariant() {
        let a = canonical_component(&[1, 0, 0], &[(0, 1), (1, 2), (2, 2)]);
        let b = canonical_component(&[0, 0, 1], &[(2, 0), (0, 1), (1, 1)]);
        assert_eq!(a, b);
    }

    #[test]
    fn contraction_matches_brute_force() {
        let key = ComponentKey {
            powers: vec![1, 0, 2],
            edges: vec![(0, 1), (0, 1), (1, 2), (0, 2), (2, 2)],
        };
        let x = vec![rat(1, 2), rat(1, 3), int(1)];
        let m = x.len();
        let mut brute = int(0);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let asg = [a, b, c];
                    let mut t = int(1);
                    for (i, &p) in key.powers.iter().enumerate() {
                        for _ in 0..p {
                            t *= &x[asg[i]];
                        }
                    }
                    for &(u, w) in &key.edges {
                        let (i, j) = (asg[u as usize], asg[w as usize]);
                        t *= int(2) * &x[i] * &x[j] / (&x[i] + &x[j]);
                    }
                    brute += t;
                }
            }
        }
        assert_eq!(component_value(&key, &x), brute);
    }
}

//! Non-negative Schauder basis of L1(0,∞) assembled from two-dimensional
//! blocks.
//!
//! Block `i` pairs the `i`-th Haar function `h_i` (global order) with the
//! unit interval `(π(i)-1, π(i))`:
//!
//! ```text
//! u_i = 2·1_(π(i)-1, π(i)) + |h_i|      x_i = u_i + h_i      y_i = u_i - h_i
//! ```
//!
//! `x_i` and `y_i` are non-negative with L1 norm 3. The Schauder order is
//! `x_1, y_1, x_2, y_2, …`. A permutation `π` is admissible when `π(1) = 1`
//! and `π(i) > j(i)` for `i > 1`, `j(i)` being the host interval of `h_i`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::haar::{
    abs_expansion, global_to_index, haar_analysis, host_interval, index_to_global, HaarIndex,
};
use crate::rational::Rational;
use crate::stepfn::{cell_count, StepFunction};

/// Blocks whose functions have more cells than this are built on demand
/// and never cached.
const CACHE_CELL_LIMIT: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Permutation {
    Identity,
    /// Permutes `1..=N` by an explicit table and fixes every `i > N`.
    Prefix {
        forward: Vec<usize>,
        inverse: Vec<usize>,
    },
}

impl Permutation {
    pub fn from_prefix(table: Vec<usize>) -> Result<Self, Error> {
        let n = table.len();
        let mut inverse = vec![0usize; n];
        for (pos, &v) in table.iter().enumerate() {
            if v == 0 || v > n || inverse[v - 1] != 0 {
                return Err(Error::NotAPermutation(n));
            }
            inverse[v - 1] = pos + 1;
        }
        Ok(Permutation::Prefix {
            forward: table,
            inverse,
        })
    }

    pub fn apply(&self, i: usize) -> usize {
        match self {
            Permutation::Identity => i,
            Permutation::Prefix { forward, .. } => forward.get(i - 1).copied().unwrap_or(i),
        }
    }

    pub fn inverse(&self, m: usize) -> usize {
        match self {
            Permutation::Identity => m,
            Permutation::Prefix { inverse, .. } => inverse.get(m - 1).copied().unwrap_or(m),
        }
    }

    /// Largest index on which the map differs from the identity.
    fn table_len(&self) -> usize {
        match self {
            Permutation::Identity => 0,
            Permutation::Prefix { forward, .. } => forward.len(),
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        match self {
            Permutation::Identity => serde_json::Value::from("identity"),
            Permutation::Prefix { forward, .. } => serde_json::Value::from(forward.clone()),
        }
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self, Error> {
        match value {
            serde_json::Value::String(s) if s == "identity" => Ok(Permutation::Identity),
            serde_json::Value::Array(items) => {
                let table = items
                    .iter()
                    .map(|v| v.as_u64().map(|x| x as usize))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::InconsistentExpansion("bad permutation table".into()))?;
                Permutation::from_prefix(table)
            }
            other => Err(Error::InconsistentExpansion(format!(
                "unknown permutation {other}"
            ))),
        }
    }
}

/// Why a rule fails to be an admissible permutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdmissibilityViolation {
    FirstNotFixed {
        value: usize,
    },
    NotAfterHost {
        index: usize,
        value: usize,
        host: usize,
    },
    Repeated {
        index: usize,
        value: usize,
    },
}

impl AdmissibilityViolation {
    pub fn index(&self) -> usize {
        match self {
            AdmissibilityViolation::FirstNotFixed { .. } => 1,
            AdmissibilityViolation::NotAfterHost { index, .. }
            | AdmissibilityViolation::Repeated { index, .. } => *index,
        }
    }
}

/// Checks `π(1) = 1`, `π(i) > j(i)` and injectivity on `1..=n`; returns the
/// smallest offending index. Also returns the minimum slack `π(i) - j(i) - 1`
/// over `1 < i ≤ n` on success (`None` when `n = 1`).
pub fn check_admissible(
    rule: impl Fn(usize) -> usize,
    n: usize,
) -> Result<Option<usize>, AdmissibilityViolation> {
    let first = rule(1);
    if first != 1 {
        return Err(AdmissibilityViolation::FirstNotFixed { value: first });
    }
    let mut seen = HashSet::with_capacity(n);
    seen.insert(1usize);
    let mut slack: Option<usize> = None;
    for i in 2..=n {
        let value = rule(i);
        let host = host_interval(i);
        if value <= host {
            return Err(AdmissibilityViolation::NotAfterHost {
                index: i,
                value,
                host,
            });
        }
        if !seen.insert(value) {
            return Err(AdmissibilityViolation::Repeated { index: i, value });
        }
        let s = value - host - 1;
        slack = Some(slack.map_or(s, |m| m.min(s)));
    }
    Ok(slack)
}

pub fn is_admissible(
    rule: impl Fn(usize) -> usize,
    n: usize,
) -> Result<(), AdmissibilityViolation> {
    check_admissible(rule, n).map(|_| ())
}

/// The default permutation.
pub fn pi_default(i: usize) -> usize {
    i
}

#[derive(Clone, Debug)]
pub struct BasisBlock {
    pub index: usize,
    pub haar: HaarIndex,
    pub pi: usize,
    pub h: StepFunction,
    pub u: StepFunction,
    pub x: StepFunction,
    pub y: StepFunction,
}

impl BasisBlock {
    /// Whether `supp h_i ⊂ (π(i)-1, π(i))` (otherwise the two are disjoint).
    pub fn support_included(&self) -> bool {
        self.haar.j() == self.pi
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BlockCoeffs {
    /// Coefficient on `u_i`.
    pub a: Rational,
    /// Coefficient on `h_i`.
    pub b: Rational,
}

impl BlockCoeffs {
    pub fn alpha(&self) -> Rational {
        (&self.a + &self.b) * Rational::new(1, 2)
    }

    pub fn beta(&self) -> Rational {
        (&self.a - &self.b) * Rational::new(1, 2)
    }

    pub fn from_schauder(alpha: &Rational, beta: &Rational) -> Self {
        BlockCoeffs {
            a: alpha + beta,
            b: alpha - beta,
        }
    }

    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

/// Finite expansion `Σ a_i u_i + b_i h_i`; only non-zero blocks are stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Expansion {
    blocks: BTreeMap<usize, BlockCoeffs>,
}

impl Expansion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_blocks(blocks: impl IntoIterator<Item = (usize, BlockCoeffs)>) -> Self {
        let mut e = Expansion::new();
        for (i, c) in blocks {
            e.add(i, &c.a, &c.b);
        }
        e
    }

    pub fn add(&mut self, i: usize, a: &Rational, b: &Rational) {
        assert!(i >= 1, "blocks are 1-based");
        let entry = self.blocks.entry(i).or_default();
        entry.a += a;
        entry.b += b;
        if entry.is_zero() {
            self.blocks.remove(&i);
        }
    }

    pub fn blocks(&self) -> &BTreeMap<usize, BlockCoeffs> {
        &self.blocks
    }

    pub fn get(&self, i: usize) -> BlockCoeffs {
        self.blocks.get(&i).cloned().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn max_block(&self) -> usize {
        self.blocks.keys().next_back().copied().unwrap_or(0)
    }

    /// Coefficient of the `k`-th Schauder element (`x_i` at `k = 2i-1`,
    /// `y_i` at `k = 2i`).
    pub fn schauder_coeff(&self, k: usize) -> Rational {
        let c = self.get(k.div_ceil(2));
        if k % 2 == 1 {
            c.alpha()
        } else {
            c.beta()
        }
    }

    /// `(k, coeff)` for both Schauder positions of every stored block.
    pub fn schauder(&self) -> Vec<(usize, Rational)> {
        self.blocks
            .iter()
            .flat_map(|(&i, c)| [(2 * i - 1, c.alpha()), (2 * i, c.beta())])
            .collect()
    }

    /// Keeps only the first `k` Schauder coefficients.
    pub fn truncated(&self, k: usize) -> Expansion {
        let full = k / 2;
        let mut out = Expansion::new();
        for (&i, c) in &self.blocks {
            if i <= full {
                out.add(i, &c.a, &c.b);
            } else if k % 2 == 1 && i == full + 1 {
                let c = BlockCoeffs::from_schauder(&c.alpha(), &Rational::zero());
                out.add(i, &c.a, &c.b);
            }
        }
        out
    }

    pub fn scaled(&self, c: &Rational) -> Expansion {
        Expansion::from_blocks(self.blocks.iter().map(|(&i, v)| {
            (
                i,
                BlockCoeffs {
                    a: &v.a * c,
                    b: &v.b * c,
                },
            )
        }))
    }

    pub fn plus(&self, other: &Expansion) -> Expansion {
        let mut out = self.clone();
        for (&i, c) in &other.blocks {
            out.add(i, &c.a, &c.b);
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct BlockJson {
    i: usize,
    a: Rational,
    b: Rational,
}

#[derive(Serialize, Deserialize)]
struct SchauderJson {
    k: usize,
    coeff: Rational,
}

#[derive(Serialize, Deserialize)]
struct ExpansionJson {
    permutation: serde_json::Value,
    blocks: Vec<BlockJson>,
    #[serde(default)]
    schauder: Option<Vec<SchauderJson>>,
}

/// An expansion together with the permutation it refers to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpansionDocument {
    pub permutation: Permutation,
    pub expansion: Expansion,
}

impl ExpansionDocument {
    pub fn to_json(&self) -> String {
        let doc = ExpansionJson {
            permutation: self.permutation.to_json_value(),
            blocks: self
                .expansion
                .blocks
                .iter()
                .map(|(&i, c)| BlockJson {
                    i,
                    a: c.a.clone(),
                    b: c.b.clone(),
                })
                .collect(),
            schauder: Some(
                self.expansion
                    .schauder()
                    .into_iter()
                    .map(|(k, coeff)| SchauderJson { k, coeff })
                    .collect(),
            ),
        };
        serde_json::to_string_pretty(&doc).expect("expansion serialises")
    }

    /// Parses the expansion format; a `schauder` list, when present, must
    /// agree with the block coefficients.
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let doc: ExpansionJson =
            serde_json::from_str(text).map_err(|e| Error::InconsistentExpansion(e.to_string()))?;
        let permutation = Permutation::from_json_value(&doc.permutation)?;
        let mut expansion = Expansion::new();
        for b in &doc.blocks {
            if b.i == 0 {
                return Err(Error::ZeroIndex);
            }
            expansion.add(b.i, &b.a, &b.b);
        }
        if let Some(list) = &doc.schauder {
            for s in list {
                if s.k == 0 || expansion.schauder_coeff(s.k) != s.coeff {
                    return Err(Error::InconsistentExpansion(format!(
                        "schauder coefficient k={} disagrees with blocks",
                        s.k
                    )));
                }
            }
        }
        Ok(ExpansionDocument {
            permutation,
            expansion,
        })
    }
}

type IndicatorTerms = Arc<Vec<(usize, Rational, Rational)>>;

/// The basis under a fixed admissible permutation, with concurrent caches
/// for blocks and for the expansions of unit-interval indicators.
pub struct Basis {
    permutation: Permutation,
    blocks: RwLock<HashMap<usize, Arc<BasisBlock>>>,
    indicators: RwLock<HashMap<usize, IndicatorTerms>>,
}

impl Default for Basis {
    fn default() -> Self {
        Basis::identity()
    }
}

impl Basis {
    pub fn identity() -> Self {
        Basis {
            permutation: Permutation::Identity,
            blocks: RwLock::default(),
            indicators: RwLock::default(),
        }
    }

    pub fn with_permutation(permutation: Permutation) -> Result<Self, AdmissibilityViolation> {
        let n = permutation.table_len().max(1);
        is_admissible(|i| permutation.apply(i), n)?;
        Ok(Basis {
            permutation,
            blocks: RwLock::default(),
            indicators: RwLock::default(),
        })
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    pub fn pi(&self, i: usize) -> usize {
        self.permutation.apply(i)
    }

    pub fn block(&self, i: usize) -> Arc<BasisBlock> {
        if let Some(b) = self.blocks.read().unwrap().get(&i) {
            return Arc::clone(b);
        }
        let block = Arc::new(self.build_block(i));
        if block.x.values().len() <= CACHE_CELL_LIMIT {
            self.blocks
                .write()
                .unwrap()
                .entry(i)
                .or_insert_with(|| Arc::clone(&block));
        }
        block
    }

    /// Builds block `i` without touching the cache.
    pub fn build_block(&self, i: usize) -> BasisBlock {
        assert!(i >= 1, "blocks are 1-based");
        let haar = global_to_index(i);
        let pi = self.pi(i);
        let (n, r) = (haar.n(), haar.n() + 1);
        let j = pi.max(haar.j());
        let interval = (pi - 1) << r..pi << r;
        let (start, half) = haar_cells(&haar, r);
        let amp = Rational::pow2(n);
        let two = Rational::from_int(2);

        let h = crate::haar::haar_fn(&haar);
        let u = StepFunction::from_fn(j, r, |t| {
            let mut v = if interval.contains(&t) {
                two.clone()
            } else {
                Rational::zero()
            };
            if (start..start + 2 * half).contains(&t) {
                v += &amp;
            }
            v
        });
        let x = StepFunction::from_fn(j, r, |t| {
            let v = u.cell(t, r);
            if (start..start + half).contains(&t) {
                v + &amp
            } else if (start + half..start + 2 * half).contains(&t) {
                v - &amp
            } else {
                v.clone()
            }
        });
        let y = StepFunction::from_fn(j, r, |t| {
            let v = u.cell(t, r);
            if (start..start + half).contains(&t) {
                v - &amp
            } else if (start + half..start + 2 * half).contains(&t) {
                v + &amp
            } else {
                v.clone()
            }
        });
        BasisBlock {
            index: i,
            haar,
            pi,
            h,
            u,
            x,
            y,
        }
    }

    /// Expansion of `1_(m-1, m)`: unfolds `2·1_(m-1,m) = u_i - |h_i|` with
    /// `π(i) = m` and `|h_i| = 1_(j(i)-1, j(i)) + Σ ± h_anc` until the
    /// interval index reaches 1, where `u_1 = 3·1_(0,1)`.
    fn indicator_terms(&self, m: usize) -> IndicatorTerms {
        if let Some(t) = self.indicators.read().unwrap().get(&m) {
            return Arc::clone(t);
        }
        let mut e = Expansion::new();
        if m == 1 {
            e.add(1, &Rational::new(1, 3), &Rational::zero());
        } else {
            let half = Rational::new(1, 2);
            let neg_half = -&half;
            let i = self.permutation.inverse(m);
            let haar = global_to_index(i);
            e.add(i, &half, &Rational::zero());
            for (bi, a, b) in self.indicator_terms(haar.j()).iter() {
                e.add(*bi, &(a * &neg_half), &(b * &neg_half));
            }
            for (anc, sign) in abs_expansion(&haar).chain {
                let coeff = if sign > 0 {
                    neg_half.clone()
                } else {
                    half.clone()
                };
                e.add(index_to_global(&anc), &Rational::zero(), &coeff);
            }
        }
        let terms: IndicatorTerms =
            Arc::new(e.blocks.into_iter().map(|(i, c)| (i, c.a, c.b)).collect());
        self.indicators
            .write()
            .unwrap()
            .entry(m)
            .or_insert_with(|| Arc::clone(&terms));
        terms
    }

    /// Finite expansion of a dyadic step function in the block system.
    pub fn analyze(&self, f: &StepFunction) -> Expansion {
        let dec = haar_analysis(f);
        let mut e = Expansion::new();
        for (idx, d) in &dec.detail {
            e.add(index_to_global(idx), &Rational::zero(), d);
        }
        for (m0, c) in dec.coarse.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (i, a, b) in self.indicator_terms(m0 + 1).iter() {
                e.add(*i, &(a * c), &(b * c));
            }
        }
        e
    }

    /// Grid `(J, r)` carrying every block of the expansion.
    fn grid_for(&self, e: &Expansion) -> (usize, u32) {
        e.blocks().keys().fold((1, 0), |(j, r), &i| {
            let h = global_to_index(i);
            (j.max(self.pi(i)).max(h.j()), r.max(h.n() + 1))
        })
    }

    pub fn synthesize(&self, e: &Expansion) -> StepFunction {
        let (j, r) = self.grid_for(e);
        let mut acc = vec![Rational::zero(); cell_count(j, r).expect("shape too large")];
        for (&i, c) in e.blocks() {
            let two_a = &c.a * Rational::from_int(2);
            accumulate_block(
                &mut acc,
                r,
                &global_to_index(i),
                self.pi(i),
                &two_a,
                &c.a,
                &c.b,
            );
        }
        StepFunction::new(j, r, acc).expect("shape is consistent")
    }

    /// `S_K f`: the first `K` Schauder terms in the order `x_1, y_1, x_2, …`.
    pub fn partial_sum(&self, f: &StepFunction, k: usize) -> StepFunction {
        self.synthesize(&self.analyze(f).truncated(k))
    }

    /// Ratios `‖S_K f‖₁ / ‖f‖₁` for `K = 1 ..= k_max` (default: through the
    /// last non-zero block), computed incrementally.
    pub fn basis_constant_profile(
        &self,
        f: &StepFunction,
        k_max: Option<usize>,
    ) -> Result<Vec<Rational>, Error> {
        let norm = f.norm_1();
        if norm.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let e = self.analyze(f);
        let k_max = k_max.unwrap_or(2 * e.max_block());
        let (j0, r0) = self.grid_for(&e);
        let (j, r) = (j0.max(f.support_len()), r0.max(f.resolution()));
        let mut acc = vec![Rational::zero(); cell_count(j, r)?];
        let mut abs_sum = Rational::zero();
        let scale = Rational::dyadic(r) / &norm;
        let mut out = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let i = k.div_ceil(2);
            let coeff = e.schauder_coeff(k);
            if !coeff.is_zero() {
                let haar = global_to_index(i);
                // x_i = u_i + h_i, y_i = u_i - h_i
                let b = if k % 2 == 1 { coeff.clone() } else { -&coeff };
                let two_c = &coeff * Rational::from_int(2);
                let touched = block_cells(&haar, self.pi(i), r);
                let before: Rational = touched
                    .iter()
                    .flat_map(|rg| acc[rg.clone()].iter())
                    .map(Rational::abs)
                    .sum();
                accumulate_block(&mut acc, r, &haar, self.pi(i), &two_c, &coeff, &b);
                let after: Rational = touched
                    .iter()
                    .flat_map(|rg| acc[rg.clone()].iter())
                    .map(Rational::abs)
                    .sum();
                abs_sum = abs_sum - before + after;
            }
            out.push(&abs_sum * &scale);
        }
        Ok(out)
    }
}

fn haar_cells(idx: &HaarIndex, r: u32) -> (usize, usize) {
    let half = 1usize << (r - idx.n() - 1);
    let start = ((idx.j() - 1) << r) + (idx.i() - 1) * 2 * half;
    (start, half)
}

/// Disjoint cell ranges touched by a block at resolution `r`.
fn block_cells(haar: &HaarIndex, pi: usize, r: u32) -> Vec<std::ops::Range<usize>> {
    let interval = (pi - 1) << r..pi << r;
    let (start, half) = haar_cells(haar, r);
    let support = start..start + 2 * half;
    if support.start >= interval.start && support.end <= interval.end {
        vec![interval]
    } else {
        vec![interval, support]
    }
}

/// Adds `indicator_coeff·1_(π-1,π) + a·|h| + b·h` into a dense grid.
fn accumulate_block(
    acc: &mut [Rational],
    r: u32,
    haar: &HaarIndex,
    pi: usize,
    indicator_coeff: &Rational,
    a: &Rational,
    b: &Rational,
) {
    if !indicator_coeff.is_zero() {
        for v in &mut acc[(pi - 1) << r..pi << r] {
            *v += indicator_coeff;
        }
    }
    let (start, half) = haar_cells(haar, r);
    let amp = Rational::pow2(haar.n());
    let left = (a + b) * &amp;
    let right = (a - b) * &amp;
    if !left.is_zero() {
        for v in &mut acc[start..start + half] {
            *v += &left;
        }
    }
    if !right.is_zero() {
        for v in &mut acc[start + half..start + 2 * half] {
            *v += &right;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::haar_fn;
    use crate::stepfn::tests::{arb_step, q, sf};
    use proptest::prelude::*;

    fn hi(j: usize, n: u32, i: usize) -> HaarIndex {
        HaarIndex::new(j, n, i).unwrap()
    }

    #[test]
    fn identity_is_admissible() {
        assert_eq!(pi_default(1), 1);
        assert!(is_admissible(pi_default, 10_000).is_ok());
        // i > j(i) follows from g = (s-1)(s-2)/2 + j with s ≥ 3 for g > 1
        for g in 2..=10_000 {
            assert!(g > host_interval(g));
        }
    }

    #[test]
    fn swapped_start_is_rejected() {
        let swap = |i: usize| match i {
            1 => 2,
            2 => 1,
            other => other,
        };
        for n in [2, 10, 1000] {
            let err = is_admissible(swap, n).unwrap_err();
            assert_eq!(err.index(), 1);
        }
        // h_5 = h^2_{1,1} lives on (1,2), so π(5) = 4 clears its host
        let repeat = |i: usize| if i == 5 { 4 } else { i };
        assert_eq!(
            is_admissible(repeat, 6).unwrap_err(),
            AdmissibilityViolation::Repeated { index: 5, value: 4 }
        );
        // h_3 = h^2_{0,1}; π(3) = 2 is not to the right of its host interval
        let low = |i: usize| match i {
            3 => 2,
            2 => 3,
            other => other,
        };
        assert_eq!(
            is_admissible(low, 5).unwrap_err(),
            AdmissibilityViolation::NotAfterHost {
                index: 3,
                value: 2,
                host: 2
            }
        );
    }

    #[test]
    fn first_blocks() {
        let basis = Basis::identity();
        let b1 = basis.block(1);
        assert_eq!(b1.u, StepFunction::unit_indicator(1).scale(&q(3, 1)));
        assert_eq!(b1.x, sf(1, 1, &[(4, 1), (2, 1)]));
        assert_eq!(b1.y, sf(1, 1, &[(2, 1), (4, 1)]));
        assert!(b1.support_included());

        let b2 = basis.block(2);
        assert_eq!(b2.haar, hi(1, 1, 1));
        assert_eq!(b2.pi, 2);
        assert_eq!(
            b2.x,
            sf(
                2,
                2,
                &[
                    (4, 1),
                    (0, 1),
                    (0, 1),
                    (0, 1),
                    (2, 1),
                    (2, 1),
                    (2, 1),
                    (2, 1)
                ]
            )
        );
        assert_eq!(b2.x.norm_1(), q(3, 1));
        assert!(!b2.support_included());
    }

    #[test]
    fn block_invariants() {
        let basis = Basis::identity();
        let half = q(1, 2);
        for i in 1..=100 {
            let b = basis.block(i);
            assert!(b.x.is_nonneg() && b.y.is_nonneg(), "block {i}");
            assert_eq!(b.x.norm_1(), q(3, 1));
            assert_eq!(b.y.norm_1(), q(3, 1));
            assert_eq!(b.x.add(&b.y).scale(&half), b.u);
            assert_eq!(b.x.sub(&b.y).scale(&half), b.h);
            let e_pi = StepFunction::unit_indicator(b.pi).scale(&q(2, 1));
            assert_eq!(e_pi.add(&haar_fn(&b.haar).abs()), b.u);
        }
    }

    #[test]
    fn analyze_examples() {
        let basis = Basis::identity();
        let e = basis.analyze(&StepFunction::unit_indicator(1));
        assert_eq!(e.blocks().len(), 1);
        assert_eq!(
            e.get(1),
            BlockCoeffs {
                a: q(1, 3),
                b: q(0, 1)
            }
        );
        assert_eq!((e.get(1).alpha(), e.get(1).beta()), (q(1, 6), q(1, 6)));

        let e = basis.analyze(&haar_fn(&hi(1, 0, 1)));
        assert_eq!(
            e.get(1),
            BlockCoeffs {
                a: q(0, 1),
                b: q(1, 1)
            }
        );
        assert_eq!((e.get(1).alpha(), e.get(1).beta()), (q(1, 2), q(-1, 2)));

        let e = basis.analyze(&StepFunction::unit_indicator(2));
        assert_eq!(e.blocks().len(), 2);
        assert_eq!(
            e.get(2),
            BlockCoeffs {
                a: q(1, 2),
                b: q(0, 1)
            }
        );
        assert_eq!(
            e.get(1),
            BlockCoeffs {
                a: q(-1, 6),
                b: q(-1, 2)
            }
        );
    }

    #[test]
    fn synthesize_examples() {
        let basis = Basis::identity();
        let e = Expansion::from_blocks([(
            1,
            BlockCoeffs {
                a: q(1, 3),
                b: q(0, 1),
            },
        )]);
        assert_eq!(basis.synthesize(&e), StepFunction::unit_indicator(1));
        let e = Expansion::from_blocks([(
            1,
            BlockCoeffs {
                a: q(0, 1),
                b: q(1, 1),
            },
        )]);
        assert_eq!(basis.synthesize(&e), haar_fn(&hi(1, 0, 1)));
        assert_eq!(
            basis.synthesize(&Expansion::new()),
            StepFunction::zero(1, 0)
        );
    }

    #[test]
    fn partial_sums() {
        let basis = Basis::identity();
        let e2 = StepFunction::unit_indicator(2);
        let profile = basis.basis_constant_profile(&e2, Some(4)).unwrap();
        assert_eq!(profile, vec![q(1, 1), q(1, 2), q(3, 4), q(1, 1)]);
        let b1 = basis.block(1);
        assert_eq!(basis.partial_sum(&e2, 1), b1.x.scale(&q(-1, 3)));
        assert_eq!(
            basis.partial_sum(&e2, 2),
            StepFunction::indicator(1, 1, 0..1).neg()
        );
        assert_eq!(basis.partial_sum(&e2, 4), e2);
        assert_eq!(basis.partial_sum(&e2, 100), e2);

        let e1 = StepFunction::unit_indicator(1);
        assert_eq!(basis.partial_sum(&e1, 1), b1.x.scale(&q(1, 6)));
        assert_ne!(basis.partial_sum(&e1, 1), e1);
        assert_eq!(basis.partial_sum(&e1, 2), e1);

        let x3 = basis.block(3).x.clone();
        assert_eq!(basis.partial_sum(&x3, 6), x3);
        let profile = basis.basis_constant_profile(&x3, None).unwrap();
        assert_eq!(profile.len(), 6);
        assert_eq!(profile.last(), Some(&q(1, 1)));
        assert_eq!(
            basis.basis_constant_profile(&StepFunction::zero(2, 1), None),
            Err(Error::ZeroFunction)
        );
    }

    #[test]
    fn biorthogonality() {
        let basis = Basis::identity();
        for k in 1..=60 {
            let b = basis.block(k);
            let ex = basis.analyze(&b.x);
            assert_eq!(ex.schauder(), vec![(2 * k - 1, q(1, 1)), (2 * k, q(0, 1))]);
            let ey = basis.analyze(&b.y);
            assert_eq!(ey.schauder(), vec![(2 * k - 1, q(0, 1)), (2 * k, q(1, 1))]);
        }
    }

    #[test]
    fn custom_permutations() {
        // hosts: j(2)=1, j(3)=2, j(4)=1, j(5)=2, j(6)=3
        assert!(Permutation::from_prefix(vec![1, 1]).is_err());
        assert!(Permutation::from_prefix(vec![1, 3]).is_err());

        let err = Basis::with_permutation(Permutation::from_prefix(vec![1, 3, 2]).unwrap());
        assert_eq!(err.err().map(|e| e.index()), Some(3));
        let err = Basis::with_permutation(Permutation::from_prefix(vec![1, 5, 4, 3, 2]).unwrap());
        assert_eq!(err.err().map(|e| e.index()), Some(5));

        for table in [
            vec![1, 4, 3, 2],
            vec![1, 3, 4, 2, 5, 6],
            vec![1, 6, 5, 2, 3, 4],
        ] {
            let perm = Permutation::from_prefix(table.clone()).unwrap();
            for (pos, &v) in table.iter().enumerate() {
                assert_eq!(perm.apply(pos + 1), v);
                assert_eq!(perm.inverse(v), pos + 1);
            }
            assert_eq!(perm.apply(100), 100);
            let basis = Basis::with_permutation(perm).unwrap();
            for i in 1..=30 {
                let b = basis.block(i);
                assert!(b.x.is_nonneg() && b.y.is_nonneg());
                assert_eq!(b.x.norm_1(), q(3, 1));
            }
            let f = StepFunction::from_fn(7, 3, |t| q((t as i64 * 7) % 11 - 5, 3));
            assert_eq!(basis.synthesize(&basis.analyze(&f)), f);
            let b2 = basis.block(2);
            assert_eq!(
                basis.analyze(&b2.y).schauder(),
                vec![(3, q(0, 1)), (4, q(1, 1))]
            );
        }
    }

    #[test]
    fn truncation_and_json() {
        let basis = Basis::identity();
        let e = basis.analyze(&StepFunction::unit_indicator(2));
        let t1 = e.truncated(1);
        assert_eq!(t1.schauder_coeff(1), q(-1, 3));
        assert!(t1.schauder_coeff(2).is_zero());
        assert_eq!(e.truncated(4), e);

        let doc = ExpansionDocument {
            permutation: Permutation::Identity,
            expansion: basis.analyze(&StepFunction::unit_indicator(1)),
        };
        let text = doc.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["permutation"], "identity");
        assert_eq!(v["blocks"][0]["a"], "1/3");
        assert_eq!(v["blocks"][0]["b"], "0/1");
        assert_eq!(v["schauder"][1]["k"], 2);
        assert_eq!(ExpansionDocument::from_json(&text).unwrap(), doc);

        let tampered = text.replace("\"1/6\"", "\"1/7\"");
        assert!(ExpansionDocument::from_json(&tampered).is_err());
        let minimal = r#"{"permutation":"identity","blocks":[{"i":1,"a":"0","b":"1"}]}"#;
        let d = ExpansionDocument::from_json(minimal).unwrap();
        assert_eq!(basis.synthesize(&d.expansion), haar_fn(&hi(1, 0, 1)));
    }

    proptest! {
        #[test]
        fn roundtrip(f in arb_step()) {
            let basis = Basis::identity();
            prop_assert_eq!(basis.synthesize(&basis.analyze(&f)), f);
        }

        #[test]
        fn linearity(f in arb_step(), g in arb_step(), n in -12i64..=12, d in 1i64..=7) {
            let basis = Basis::identity();
            let c = q(n, d);
            let lhs = basis.analyze(&f.scale(&c).add(&g));
            let rhs = basis.analyze(&f).scaled(&c).plus(&basis.analyze(&g));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn profile_ends_at_one(f in arb_step()) {
            prop_assume!(!f.is_zero());
            let basis = Basis::identity();
            let profile = basis.basis_constant_profile(&f, None).unwrap();
            prop_assert_eq!(profile.last().cloned(), Some(Rational::one()));
        }
    }
}

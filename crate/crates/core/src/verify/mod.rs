//! Exact and property-based checks of the basis inequalities and of the
//! comparison chain for non-negative families in `L_p`.
//!
//! Every check produces a [`VerifyReport`]. Reports of independent trials
//! merge through [`VerifyReport::merge`], which is commutative and
//! associative: violations add up and the worst trial is chosen by
//! `(violated, margin, trial index)`, so aggregation is independent of
//! scheduling.

pub mod gen;
pub mod suites;

use std::cmp::Ordering;

use serde_json::{json, Value};

use crate::basis::{Basis, BlockCoeffs, Expansion};
use crate::error::Error;
use crate::rational::Rational;
use crate::stepfn::{neumaier_sum, pow_abs, StepFunction};

/// Relative tolerance for floating-point comparisons (`p ∉ {1, 2}`).
pub const FLOAT_REL_TOL: f64 = 1e-12;

/// Largest family accepted by [`rademacher_ratio`] (`2^N` sign patterns).
pub const MAX_RADEMACHER_TERMS: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub enum Margin {
    Exact(Rational),
    Float(f64),
}

impl Margin {
    fn cmp(&self, other: &Margin) -> Ordering {
        match (self, other) {
            (Margin::Exact(a), Margin::Exact(b)) => a.cmp(b),
            (Margin::Float(a), Margin::Float(b)) => a.total_cmp(b),
            (a, b) => a.as_f64().total_cmp(&b.as_f64()),
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Margin::Exact(q) => q.to_f64(),
            Margin::Float(x) => *x,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Margin::Exact(q) => Value::from(q.to_string()),
            Margin::Float(x) => json!(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub check: String,
    pub trials: u64,
    pub violations: u64,
    pub worst_margin: Option<Margin>,
    /// Trial that produced `worst_margin` / `witness`.
    pub worst_trial: Option<u64>,
    worst_violated: bool,
    pub witness: Option<Value>,
}

impl VerifyReport {
    pub fn empty(check: &str) -> Self {
        VerifyReport {
            check: check.to_string(),
            trials: 0,
            violations: 0,
            worst_margin: None,
            worst_trial: None,
            worst_violated: false,
            witness: None,
        }
    }

    /// One trial. `witness` describes its inputs.
    pub fn single(check: &str, violated: bool, margin: Margin, witness: Value) -> Self {
        VerifyReport {
            check: check.to_string(),
            trials: 1,
            violations: violated as u64,
            worst_margin: Some(margin),
            worst_trial: Some(0),
            worst_violated: violated,
            witness: Some(witness),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Re-labels a single-trial report with its position in a run.
    pub fn at_trial(mut self, trial: u64) -> Self {
        self.worst_trial = self.worst_trial.map(|_| trial);
        self
    }

    /// Worse-first ordering of the tracked trials.
    fn worse_than(&self, other: &VerifyReport) -> bool {
        let (Some(m1), Some(m2)) = (&self.worst_margin, &other.worst_margin) else {
            return self.worst_margin.is_some();
        };
        match other.worst_violated.cmp(&self.worst_violated) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
        match m1.cmp(m2) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.worst_trial < other.worst_trial,
        }
    }

    pub fn merge(self, other: VerifyReport) -> VerifyReport {
        let trials = self.trials + other.trials;
        let violations = self.violations + other.violations;
        let check = if self.check.is_empty() {
            other.check.clone()
        } else {
            self.check.clone()
        };
        let mut worst = if other.worse_than(&self) { other } else { self };
        worst.check = check;
        worst.trials = trials;
        worst.violations = violations;
        worst
    }

    /// Report line; the witness is included when there are violations or
    /// when `track_witness` is set.
    pub fn to_json(&self, track_witness: bool) -> Value {
        let witness = match (&self.witness, self.violations > 0 || track_witness) {
            (Some(w), true) => {
                let mut w = w.clone();
                if let (Some(t), Some(obj)) = (self.worst_trial, w.as_object_mut()) {
                    obj.insert("trial".into(), json!(t));
                }
                w
            }
            _ => Value::Null,
        };
        json!({
            "check": self.check,
            "trials": self.trials,
            "violations": self.violations,
            "worst_margin": self.worst_margin.as_ref().map_or(Value::Null, Margin::to_json),
            "witness": witness,
        })
    }
}

fn rationals_json(values: &[Rational]) -> Value {
    Value::from(values.iter().map(|q| q.to_string()).collect::<Vec<_>>())
}

/// `(lhs, mid, rhs)` of the FDD inequality for coefficients `a` (on `u_i`)
/// and `b` (on `h_i`) over blocks `1 … N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FddBounds {
    pub lhs: Rational,
    pub mid: Rational,
    pub rhs: Rational,
}

impl FddBounds {
    pub fn holds(&self) -> bool {
        self.lhs <= self.mid && self.mid <= self.rhs
    }

    pub fn margin(&self) -> Rational {
        (&self.mid - &self.lhs).min(&self.rhs - &self.mid)
    }
}

pub fn fdd_bounds(basis: &Basis, a: &[Rational], b: &[Rational]) -> FddBounds {
    let n = a.len().max(b.len());
    let zero = Rational::zero();
    let coeff = |v: &[Rational], i: usize| v.get(i).cloned().unwrap_or_else(|| zero.clone());
    let full = Expansion::from_blocks((0..n).map(|i| {
        (
            i + 1,
            BlockCoeffs {
                a: coeff(a, i),
                b: coeff(b, i),
            },
        )
    }));
    let haar_only = Expansion::from_blocks((0..n).map(|i| {
        (
            i + 1,
            BlockCoeffs {
                a: zero.clone(),
                b: coeff(b, i),
            },
        )
    }));
    let sum_a: Rational = a.iter().map(Rational::abs).sum();
    let hb = basis.synthesize(&haar_only).norm_1();
    let mid = basis.synthesize(&full).norm_1();
    FddBounds {
        lhs: &sum_a * Rational::new(1, 2) + &hb * Rational::new(1, 8),
        mid,
        rhs: sum_a * Rational::from_int(3) + hb,
    }
}

pub fn fdd_report(basis: &Basis, a: &[Rational], b: &[Rational]) -> VerifyReport {
    let bounds = fdd_bounds(basis, a, b);
    VerifyReport::single(
        "fdd",
        !bounds.holds(),
        Margin::Exact(bounds.margin()),
        json!({ "a": rationals_json(a), "b": rationals_json(b) }),
    )
}

/// Lower bounds for `‖a·x_i + b·y_i‖₁`: `|a| + |b|` when `supp h_i` misses
/// `(π(i)-1, π(i))`; otherwise `max{|a|, |b|}` together with the support
/// computation `2^(-s-1)(|(2^(s+1)+2)a + 2b| + |(2^(s+1)+2)b + 2a|)`, where
/// `2^-s` is the size of `supp h_i`.
pub fn prop2_lower(basis: &Basis, i: usize, a: &Rational, b: &Rational) -> VerifyReport {
    let block = basis.block(i);
    let norm = StepFunction::linear_combination([(a, &block.x), (b, &block.y)]).norm_1();
    let interval_cells = (block.pi - 1) << block.u.resolution()..block.pi << block.u.resolution();
    let h_cells: Vec<usize> = (0..block.h.values().len())
        .filter(|&t| !block.h.values()[t].is_zero())
        .collect();
    let included = h_cells.iter().all(|t| interval_cells.contains(t));
    let disjoint = h_cells.iter().all(|t| !interval_cells.contains(t));
    let (mut violated, margin, case) = if disjoint {
        let bound = a.abs() + b.abs();
        (norm < bound, &norm - &bound, "disjoint")
    } else {
        let s = block.haar.n();
        let big = Rational::pow2(s + 1) + Rational::from_int(2);
        let two = Rational::from_int(2);
        let support_bound =
            Rational::dyadic(s + 1) * ((&big * a + &two * b).abs() + (&big * b + &two * a).abs());
        let simple = a.abs().max(b.abs());
        let m = (&norm - &support_bound).min(&support_bound - &simple);
        (
            norm < support_bound || support_bound < simple,
            m,
            "included",
        )
    };
    if !(included || disjoint) {
        violated = true;
    }
    VerifyReport::single(
        "prop2",
        violated,
        Margin::Exact(margin),
        json!({ "i": i, "a": a.to_string(), "b": b.to_string(), "case": case }),
    )
}

/// `‖Ef‖₁ ≤ ‖f‖₁` and `‖f - Ef‖₁ ≤ 2‖f‖₁` for the unit-interval averaging
/// projection `E`.
pub fn projection_check(f: &StepFunction) -> VerifyReport {
    let ef = f.conditional_expectation();
    let n = f.norm_1();
    let n_e = ef.norm_1();
    let n_c = f.sub(&ef).norm_1();
    let two_n = &n * Rational::from_int(2);
    let violated = n_e > n || n_c > two_n;
    let margin = (&n - &n_e).min(&two_n - &n_c);
    VerifyReport::single(
        "projections",
        violated,
        Margin::Exact(margin),
        json!({ "f": f.to_json_value() }),
    )
}

fn check_family(x: &[StepFunction], a: &[Rational]) -> Result<(usize, u32), Error> {
    if x.len() != a.len() {
        return Err(Error::LengthMismatch {
            family: x.len(),
            coeffs: a.len(),
        });
    }
    for (index, f) in x.iter().enumerate() {
        if !f.is_nonneg() {
            return Err(Error::NegativeCell { index });
        }
    }
    Ok(x.iter().fold((1, 0), |(j, r), f| {
        (j.max(f.support_len()), r.max(f.resolution()))
    }))
}

fn family_json(x: &[StepFunction], a: &[Rational]) -> Value {
    json!({
        "x": x.iter().map(StepFunction::to_json_value).collect::<Vec<_>>(),
        "a": rationals_json(a),
    })
}

/// Cellwise `max_n |a_n|x_n ≤ (Σ a_n² x_n²)^(1/2) ≤ Σ |a_n| x_n`, compared
/// exactly after squaring. The margin is the smallest squared gap.
pub fn pointwise_chain(x: &[StepFunction], a: &[Rational]) -> Result<VerifyReport, Error> {
    let (j, r) = check_family(x, a)?;
    let abs_a: Vec<Rational> = a.iter().map(Rational::abs).collect();
    let mut violated = false;
    let mut margin: Option<Rational> = None;
    let mut worst_cell = 0usize;
    for t in 0..j << r {
        let mut max = Rational::zero();
        let mut sq = Rational::zero();
        let mut sum = Rational::zero();
        for (f, c) in x.iter().zip(&abs_a) {
            let v = c * f.cell(t, r);
            if v > max {
                max = v.clone();
            }
            sq += &v * &v;
            sum += &v;
        }
        let lo = &sq - &max * &max;
        let hi = &sum * &sum - &sq;
        violated |= lo.is_negative() || hi.is_negative();
        let m = lo.min(hi);
        if margin.as_ref().is_none_or(|cur| m < *cur) {
            margin = Some(m);
            worst_cell = t;
        }
    }
    let mut witness = family_json(x, a);
    witness["cell"] = json!(worst_cell);
    Ok(VerifyReport::single(
        "chain",
        violated,
        Margin::Exact(margin.unwrap_or_else(Rational::zero)),
        witness,
    ))
}

/// `L_p` norms `(‖S‖_p, ‖Σ|a_n|x_n‖_p, ‖(Σ|a_n|^p x_n^p)^(1/p)‖_p)` of the
/// square function, the absolute sum and the `ℓ_p` aggregate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainNorms {
    pub square: f64,
    pub sum: f64,
    pub lp: f64,
}

pub fn chain_norms(x: &[StepFunction], a: &[Rational], p: f64) -> Result<ChainNorms, Error> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    let (j, r) = check_family(x, a)?;
    let grids: Vec<Vec<f64>> = x.iter().map(|f| f.to_f64_grid(j, r)).collect();
    let coeffs: Vec<f64> = a.iter().map(|q| q.to_f64().abs()).collect();
    let cells = j << r;
    let (mut sq, mut sm, mut lp) = (
        Vec::with_capacity(cells),
        Vec::with_capacity(cells),
        Vec::with_capacity(cells),
    );
    for t in 0..cells {
        let vals = grids.iter().zip(&coeffs).map(|(g, c)| c * g[t]);
        let s2 = neumaier_sum(vals.clone().map(|v| v * v));
        sq.push(pow_abs(s2.sqrt(), p));
        sm.push(pow_abs(neumaier_sum(vals.clone()), p));
        lp.push(neumaier_sum(vals.map(|v| pow_abs(v, p))));
    }
    let measure = (-(r as f64)).exp2();
    let norm = |v: Vec<f64>| (neumaier_sum(v) * measure).powf(1.0 / p);
    Ok(ChainNorms {
        square: norm(sq),
        sum: norm(sm),
        lp: norm(lp),
    })
}

/// `θ` with `1/2 = θ/1 + (1-θ)/p`, i.e. `(p-2)/(2(p-1))`.
pub fn interpolation_theta(p: f64) -> f64 {
    (p - 2.0) / (2.0 * (p - 1.0))
}

/// Norm-level interpolation for a non-negative family: for `p ≤ 2`,
/// `‖S‖_p ≤ ‖(Σ|a|^p x^p)^(1/p)‖_p ≤ ‖Σ|a|x‖_p`; for `p > 2`,
/// `‖S‖_p ≤ ‖Σ|a|x‖_p^θ · ‖(Σ|a|^p x^p)^(1/p)‖_p^(1-θ)`. Relative tolerance
/// [`FLOAT_REL_TOL`]; the margin is the smallest relative gap.
pub fn interpolation_check(
    x: &[StepFunction],
    a: &[Rational],
    p: f64,
) -> Result<VerifyReport, Error> {
    let n = chain_norms(x, a, p)?;
    let rel = |lo: f64, hi: f64| if hi == 0.0 { 0.0 } else { (hi - lo) / hi };
    let gaps = if p <= 2.0 {
        vec![rel(n.square, n.lp), rel(n.lp, n.sum), rel(n.square, n.sum)]
    } else {
        let theta = interpolation_theta(p);
        let bound = n.sum.powf(theta) * n.lp.powf(1.0 - theta);
        vec![rel(n.square, bound), rel(n.square, n.sum)]
    };
    let margin = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let mut witness = family_json(x, a);
    witness["p"] = json!(p);
    Ok(VerifyReport::single(
        "chain-interpolation",
        margin < -FLOAT_REL_TOL,
        Margin::Float(margin),
        witness,
    ))
}

fn check_normalized(x: &[StepFunction], p: f64) -> Result<(), Error> {
    for (index, f) in x.iter().enumerate() {
        let norm = f.norm_p_float(p)?;
        if (norm - 1.0).abs() > FLOAT_REL_TOL {
            return Err(Error::NotNormalized { index, p, norm });
        }
    }
    Ok(())
}

/// `(2^-N Σ_ε ‖Σ ε_n a_n x_n‖_p^p)^(1/p) / ‖(Σ a_n² x_n²)^(1/2)‖_p` by
/// exhaustive enumeration of the sign patterns.
///
/// Patterns `ε` and `-ε` give the same value, so `ε_1 = +1` is fixed and the
/// remaining `2^(N-1)` patterns are visited in Gray-code order.
pub fn rademacher_ratio(x: &[StepFunction], a: &[Rational], p: f64) -> Result<f64, Error> {
    if x.len() > MAX_RADEMACHER_TERMS {
        return Err(Error::FamilyTooLarge {
            got: x.len(),
            limit: MAX_RADEMACHER_TERMS,
        });
    }
    let (j, r) = check_family(x, a)?;
    check_normalized(x, p)?;
    let cells = j << r;
    let grids: Vec<Vec<f64>> = x.iter().map(|f| f.to_f64_grid(j, r)).collect();
    let coeffs: Vec<f64> = a.iter().map(Rational::to_f64).collect();
    let patterns = 1usize << x.len().saturating_sub(1);
    let mut numer = Vec::with_capacity(cells);
    let mut denom = Vec::with_capacity(cells);
    let mut c = vec![0.0f64; x.len()];
    for t in 0..cells {
        for (n, g) in grids.iter().enumerate() {
            c[n] = coeffs[n] * g[t];
        }
        denom.push(pow_abs(neumaier_sum(c.iter().map(|v| v * v)).sqrt(), p));
        if c.iter().all(|v| *v == 0.0) {
            numer.push(0.0);
            continue;
        }
        let mut signs = vec![1.0f64; c.len()];
        let mut s: f64 = c.iter().sum();
        let mut acc = vec![pow_abs(s, p)];
        acc.reserve(patterns);
        for g in 1..patterns {
            let n = g.trailing_zeros() as usize + 1;
            signs[n] = -signs[n];
            s += 2.0 * signs[n] * c[n];
            acc.push(pow_abs(s, p));
        }
        numer.push(neumaier_sum(acc) / patterns as f64);
    }
    let num = neumaier_sum(numer).powf(1.0 / p);
    let den = neumaier_sum(denom).powf(1.0 / p);
    if den == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(num / den)
}

/// Exact Rademacher average `2^-N Σ_ε ‖Σ ε_n a_n x_n‖_p^p` for `p ∈ {1, 2}`,
/// paired with `‖S‖_p^p` when the latter is rational (always for `p = 2`;
/// for `p = 1` when every cell's square sum is a rational square).
pub fn rademacher_moments_exact(
    x: &[StepFunction],
    a: &[Rational],
    p: u32,
) -> Result<(Rational, Option<Rational>), Error> {
    if p != 1 && p != 2 {
        return Err(Error::InvalidExponent(p as f64));
    }
    if x.len() > MAX_RADEMACHER_TERMS {
        return Err(Error::FamilyTooLarge {
            got: x.len(),
            limit: MAX_RADEMACHER_TERMS,
        });
    }
    let (j, r) = check_family(x, a)?;
    let patterns = 1usize << x.len().saturating_sub(1);
    let mut numer = Rational::zero();
    let mut denom = Some(Rational::zero());
    for t in 0..j << r {
        let c: Vec<Rational> = x.iter().zip(a).map(|(f, q)| q * f.cell(t, r)).collect();
        let sq: Rational = c.iter().map(|v| v * v).sum();
        if sq.is_zero() {
            continue;
        }
        if p == 2 {
            // E|Σ ε c|² = Σ c², yet enumerate to keep the check honest
            denom = denom.map(|d| d + &sq);
        } else {
            denom = match (denom, sq.sqrt_exact()) {
                (Some(d), Some(root)) => Some(d + root),
                _ => None,
            };
        }
        let mut s: Rational = c.iter().sum();
        let mut signs = vec![1i8; c.len()];
        let mut acc = if p == 1 { s.abs() } else { &s * &s };
        for g in 1..patterns {
            let n = g.trailing_zeros() as usize + 1;
            signs[n] = -signs[n];
            let step = &c[n] * Rational::from_int(2 * signs[n] as i64);
            s += &step;
            acc += if p == 1 { s.abs() } else { &s * &s };
        }
        numer += acc / Rational::from_int(patterns as i64);
    }
    let measure = Rational::dyadic(r);
    Ok((numer * &measure, denom.map(|d| d * measure)))
}

/// Classical default for Khintchine's upper constant: 1 for `p ≤ 2`, `√p`
/// above.
pub fn default_khintchine(p: f64) -> f64 {
    if p <= 2.0 {
        1.0
    } else {
        p.sqrt()
    }
}

/// Two-sided `ℓ_p` equivalence constants `(lower, upper)` for a normalized
/// `K`-unconditional non-negative sequence:
/// `lower·‖Σ a_n x_n‖_p ≤ (Σ|a_n|^p)^(1/p) ≤ upper·‖Σ a_n x_n‖_p`.
pub fn lp_equivalence_constants(k: f64, p: f64, b_p: f64) -> (f64, f64) {
    if p <= 2.0 {
        (1.0 / k, k)
    } else {
        let theta = interpolation_theta(p);
        ((k * k * b_p).powf(-1.0 / (1.0 - theta)), k)
    }
}

/// Whether no grid cell carries two non-zero members.
fn first_overlap(x: &[StepFunction]) -> Option<(usize, usize)> {
    let (j, r) = x.iter().fold((1, 0), |(j, r), f| {
        (j.max(f.support_len()), r.max(f.resolution()))
    });
    for t in 0..j << r {
        let mut owner: Option<usize> = None;
        for (n, f) in x.iter().enumerate() {
            if !f.cell(t, r).is_zero() {
                if let Some(first) = owner {
                    return Some((first, n));
                }
                owner = Some(n);
            }
        }
    }
    None
}

/// `‖Σ a_n x_n‖_p = (Σ|a_n|^p)^(1/p)` for disjointly supported normalized
/// non-negative `x_n`: exact for `p ∈ {1, 2}`, relative error at most
/// [`FLOAT_REL_TOL`] otherwise. The `K = 1` equivalence constants are
/// checked on the same data. The margin is `FLOAT_REL_TOL − relative error`.
pub fn disjoint_lp_identity(
    x: &[StepFunction],
    a: &[Rational],
    p: f64,
) -> Result<VerifyReport, Error> {
    check_family(x, a)?;
    if let Some((first, second)) = first_overlap(x) {
        return Err(Error::OverlappingSupports { first, second });
    }
    check_normalized(x, p)?;
    let combo = StepFunction::linear_combination(a.iter().zip(x));
    let mut violated = false;
    if p == 1.0 {
        violated |= combo.norm_1() != a.iter().map(Rational::abs).sum::<Rational>();
        for (index, f) in x.iter().enumerate() {
            if f.norm_1() != Rational::one() {
                return Err(Error::NotNormalized {
                    index,
                    p,
                    norm: f.norm_1().to_f64(),
                });
            }
        }
    } else if p == 2.0 {
        violated |= combo.norm_2_sq() != a.iter().map(|q| q * q).sum::<Rational>();
        for (index, f) in x.iter().enumerate() {
            if f.norm_2_sq() != Rational::one() {
                return Err(Error::NotNormalized {
                    index,
                    p,
                    norm: f.norm_2_sq().to_f64().sqrt(),
                });
            }
        }
    }
    let observed = combo.norm_p_float(p)?;
    let target = neumaier_sum(a.iter().map(|q| pow_abs(q.to_f64(), p))).powf(1.0 / p);
    let rel_err = if target == 0.0 {
        observed.abs()
    } else {
        (observed - target).abs() / target
    };
    violated |= rel_err > FLOAT_REL_TOL;
    let (lower, upper) = lp_equivalence_constants(1.0, p, default_khintchine(p));
    let slack = target * FLOAT_REL_TOL;
    violated |= lower * observed > target + slack || target > upper * observed + slack;
    let mut witness = family_json(x, a);
    witness["p"] = json!(p);
    Ok(VerifyReport::single(
        "disjoint-lp",
        violated,
        Margin::Float(FLOAT_REL_TOL - rel_err),
        witness,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{haar_fn, HaarIndex};
    use crate::stepfn::tests::{q, sf};

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&n| Rational::from_int(n)).collect()
    }

    #[test]
    fn fdd_examples() {
        let basis = Basis::identity();
        let b = fdd_bounds(&basis, &ints(&[1]), &ints(&[1]));
        assert_eq!((b.lhs, b.mid, b.rhs), (q(5, 8), q(3, 1), q(4, 1)));
        let b = fdd_bounds(&basis, &ints(&[1]), &ints(&[0]));
        assert_eq!((b.lhs, b.mid, b.rhs), (q(1, 2), q(3, 1), q(3, 1)));
        let bs = vec![q(1, 2), q(-3, 1), q(0, 1), q(7, 5)];
        let b = fdd_bounds(&basis, &ints(&[0, 0, 0, 0]), &bs);
        let hb = StepFunction::linear_combination(
            bs.iter().zip(
                (1..=4)
                    .map(|g| haar_fn(&crate::haar::global_to_index(g)))
                    .collect::<Vec<_>>()
                    .iter(),
            ),
        )
        .norm_1();
        assert_eq!(
            (b.lhs, b.mid.clone(), b.rhs),
            (&hb * q(1, 8), hb.clone(), hb)
        );
        assert!(fdd_report(&basis, &ints(&[2, -1]), &ints(&[3, 5])).passed());
    }

    #[test]
    fn prop2_examples() {
        let basis = Basis::identity();
        let one = q(1, 1);
        let r = prop2_lower(&basis, 1, &one, &one);
        assert!(r.passed());
        assert_eq!(r.witness.as_ref().unwrap()["case"], "included");
        // norm 6, support bound exactly 6, simple bound 1
        assert_eq!(r.worst_margin, Some(Margin::Exact(q(0, 1))));

        let r = prop2_lower(&basis, 2, &one, &-&one);
        assert!(r.passed());
        assert_eq!(r.witness.as_ref().unwrap()["case"], "disjoint");
        assert_eq!(r.worst_margin, Some(Margin::Exact(q(0, 1))));

        for i in [1, 2, 17] {
            let r = prop2_lower(&basis, i, &q(0, 1), &q(0, 1));
            assert!(r.passed());
            assert_eq!(r.worst_margin, Some(Margin::Exact(q(0, 1))));
        }
    }

    #[test]
    fn included_case_only_at_first_block() {
        let basis = Basis::identity();
        for i in 1..=300 {
            let b = basis.block(i);
            let r = b.u.resolution();
            let interval = (b.pi - 1) << r..b.pi << r;
            let hits = (0..b.h.values().len())
                .filter(|&t| !b.h.values()[t].is_zero())
                .filter(|t| interval.contains(t))
                .count();
            if i == 1 {
                assert_eq!(hits, 2);
            } else {
                assert_eq!(hits, 0, "block {i}");
            }
        }
    }

    #[test]
    fn projection_examples() {
        let h = haar_fn(&HaarIndex::new(1, 0, 1).unwrap());
        assert!(h.conditional_expectation().is_zero());
        let r = projection_check(&h);
        assert!(r.passed());
        // ‖h - Eh‖ = 1 ≤ 2: margin min(1 - 0, 2 - 1) = 1
        assert_eq!(r.worst_margin, Some(Margin::Exact(q(1, 1))));

        let half = StepFunction::indicator(1, 1, 0..1);
        assert_eq!(
            half.conditional_expectation(),
            StepFunction::unit_indicator(1).scale(&q(1, 2))
        );
        assert_eq!(half.sub(&half.conditional_expectation()), h.scale(&q(1, 2)));
        let r = projection_check(&half);
        assert!(r.passed());
        assert_eq!(r.worst_margin, Some(Margin::Exact(q(0, 1))));
    }

    #[test]
    fn pointwise_chain_examples() {
        let disjoint = vec![
            StepFunction::unit_indicator(1),
            StepFunction::unit_indicator(2),
        ];
        let r = pointwise_chain(&disjoint, &ints(&[3, -4])).unwrap();
        assert!(r.passed());
        assert_eq!(r.worst_margin, Some(Margin::Exact(q(0, 1))));

        let same = vec![
            StepFunction::unit_indicator(1),
            StepFunction::unit_indicator(1),
        ];
        let r = pointwise_chain(&same, &ints(&[1, 1])).unwrap();
        // max² = 1, S² = 2, sum² = 4
        assert_eq!(r.worst_margin, Some(Margin::Exact(q(1, 1))));

        let neg = vec![sf(1, 0, &[(-1, 1)])];
        assert_eq!(
            pointwise_chain(&neg, &ints(&[1])).unwrap_err(),
            Error::NegativeCell { index: 0 }
        );
        assert!(pointwise_chain(&same, &ints(&[1])).is_err());
    }

    #[test]
    fn interpolation_on_equal_pair() {
        let same = vec![
            StepFunction::unit_indicator(1),
            StepFunction::unit_indicator(1),
        ];
        for p in [1.0, 1.5, 2.0, 3.0, 4.0] {
            let n = chain_norms(&same, &ints(&[1, 1]), p).unwrap();
            assert!((n.square - 2f64.sqrt()).abs() < 1e-15);
            assert!((n.sum - 2.0).abs() < 1e-15);
            assert!((n.lp - 2f64.powf(1.0 / p)).abs() < 1e-15);
            assert!(interpolation_check(&same, &ints(&[1, 1]), p)
                .unwrap()
                .passed());
        }
    }

    #[test]
    fn rademacher_examples() {
        let disjoint = vec![
            StepFunction::unit_indicator(1),
            StepFunction::unit_indicator(2),
        ];
        for p in [1.0, 2.0, 3.0, 4.0] {
            let r = rademacher_ratio(&disjoint, &[q(3, 2), q(-5, 7)], p).unwrap();
            assert!((r - 1.0).abs() < 1e-12, "p={p}: {r}");
        }
        let same = vec![
            StepFunction::unit_indicator(1),
            StepFunction::unit_indicator(1),
        ];
        let r = rademacher_ratio(&same, &ints(&[1, 1]), 2.0).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        let (num, den) = rademacher_moments_exact(&same, &ints(&[1, 1]), 2).unwrap();
        assert_eq!((num, den), (q(2, 1), Some(q(2, 1))));
        // p = 1: E|ε1 + ε2| = 1 against √2
        let (num, den) = rademacher_moments_exact(&same, &ints(&[1, 1]), 1).unwrap();
        assert_eq!((num, den), (q(1, 1), None));
        let r = rademacher_ratio(&same, &ints(&[1, 1]), 1.0).unwrap();
        assert!((r - 1.0 / 2f64.sqrt()).abs() < 1e-15);

        let (num, den) = rademacher_moments_exact(&disjoint, &[q(3, 2), q(-5, 7)], 1).unwrap();
        assert_eq!(Some(num), den);
    }

    #[test]
    fn rademacher_guards() {
        let many = vec![StepFunction::unit_indicator(1); 15];
        let a = vec![q(1, 1); 15];
        assert!(matches!(
            rademacher_ratio(&many, &a, 2.0),
            Err(Error::FamilyTooLarge { .. })
        ));
        let unnormalized = vec![StepFunction::unit_indicator(1).scale(&q(2, 1))];
        assert!(matches!(
            rademacher_ratio(&unnormalized, &ints(&[1]), 1.0),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn rademacher_symmetries() {
        let mut rng = gen::trial_rng(5, 0);
        let fam = gen::normalized_family(&mut rng, 6, 3.0, false);
        let a: Vec<Rational> = (0..6).map(|_| gen::nonzero_rational(&mut rng)).collect();
        let base = rademacher_ratio(&fam, &a, 3.0).unwrap();
        let flipped: Vec<Rational> = a
            .iter()
            .enumerate()
            .map(|(k, q)| if k % 2 == 0 { -q } else { q.clone() })
            .collect();
        assert!((rademacher_ratio(&fam, &flipped, 3.0).unwrap() - base).abs() < 1e-12);
        let mut order: Vec<usize> = (0..6).collect();
        order.reverse();
        order.swap(0, 3);
        let fam_p: Vec<_> = order.iter().map(|&k| fam[k].clone()).collect();
        let a_p: Vec<_> = order.iter().map(|&k| a[k].clone()).collect();
        assert!((rademacher_ratio(&fam_p, &a_p, 3.0).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn constants() {
        assert_eq!(lp_equivalence_constants(1.0, 1.0, 1.0), (1.0, 1.0));
        assert_eq!(lp_equivalence_constants(1.0, 2.0, 1.0), (1.0, 1.0));
        assert_eq!(lp_equivalence_constants(3.0, 1.5, 1.0), (1.0 / 3.0, 3.0));
        assert!((interpolation_theta(4.0) - 1.0 / 3.0).abs() < 1e-15);
        let (lo, hi) = lp_equivalence_constants(2.0, 4.0, 2.0);
        assert!((lo - 8f64.powf(-1.5)).abs() < 1e-15);
        assert!((lo - 0.044194173824159216).abs() < 1e-15);
        assert_eq!(hi, 2.0);
        // monotone in K and in B_p
        let mut prev = f64::INFINITY;
        for k in [1.0, 1.5, 2.0, 4.0] {
            let (lo, _) = lp_equivalence_constants(k, 3.0, 3f64.sqrt());
            assert!(lo <= prev);
            prev = lo;
        }
        let mut prev = f64::INFINITY;
        for b in [1.0, 1.2, 2.0, 5.0] {
            let (lo, _) = lp_equivalence_constants(2.0, 5.0, b);
            assert!(lo <= prev);
            prev = lo;
        }
    }

    #[test]
    fn disjoint_identity_examples() {
        let fam: Vec<_> = (1..=3).map(StepFunction::unit_indicator).collect();
        let r = disjoint_lp_identity(&fam, &ints(&[1, 1, 1]), 1.0).unwrap();
        assert!(r.passed());
        let fam2: Vec<_> = (1..=2).map(StepFunction::unit_indicator).collect();
        let combo = StepFunction::linear_combination(ints(&[3, 4]).iter().zip(&fam2));
        assert_eq!(combo.norm_2_sq(), q(25, 1));
        assert!(disjoint_lp_identity(&fam2, &ints(&[3, 4]), 2.0)
            .unwrap()
            .passed());
        let overlap = vec![
            StepFunction::unit_indicator(1),
            StepFunction::unit_indicator(1),
        ];
        assert_eq!(
            disjoint_lp_identity(&overlap, &ints(&[1, 1]), 1.0).unwrap_err(),
            Error::OverlappingSupports {
                first: 0,
                second: 1
            }
        );
    }

    #[test]
    fn merge_is_order_independent() {
        let reports: Vec<VerifyReport> = (0..20u64)
            .map(|t| {
                let m = Rational::new((t as i64 * 7) % 5, 3);
                VerifyReport::single("x", t == 13, Margin::Exact(m), json!({ "t": t })).at_trial(t)
            })
            .collect();
        let fwd = reports
            .iter()
            .cloned()
            .fold(VerifyReport::empty("x"), VerifyReport::merge);
        let rev = reports
            .iter()
            .rev()
            .cloned()
            .fold(VerifyReport::empty("x"), VerifyReport::merge);
        assert_eq!(fwd, rev);
        assert_eq!(fwd.trials, 20);
        assert_eq!(fwd.violations, 1);
        assert_eq!(fwd.worst_trial, Some(13));
        let line = fwd.to_json(false);
        assert_eq!(line["witness"]["t"], 13);
        assert_eq!(line["witness"]["trial"], 13);

        let clean: VerifyReport = reports
            .iter()
            .filter(|r| r.violations == 0)
            .cloned()
            .fold(VerifyReport::empty("x"), VerifyReport::merge);
        assert_eq!(clean.worst_margin, Some(Margin::Exact(q(0, 1))));
        assert_eq!(clean.worst_trial, Some(0));
        assert_eq!(clean.to_json(false)["witness"], Value::Null);
        assert_eq!(clean.to_json(false)["worst_margin"], "0/1");
    }
}

//! Exact dyadic step functions on `(0, J)`.
//!
//! A [`StepFunction`] with support length `J` and resolution `r` stores one
//! exact value per open cell `(t·2^-r, (t+1)·2^-r)`, `t = 0 … J·2^r − 1`, and
//! vanishes on `(J, ∞)`. Shapes are never canonicalised on construction:
//! every binary operation and every comparison works on the common refinement
//! of its operands, so two representations of the same function compare equal.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rational::Rational;

static ZERO: Rational = Rational::zero();

/// Finest resolution accepted on construction.
pub const MAX_RESOLUTION: u32 = 30;

#[derive(Clone)]
pub struct StepFunction {
    support_len: usize,
    resolution: u32,
    values: Vec<Rational>,
}

/// Wire form: `{"support_len": J, "resolution": r, "values": ["p/q", ...]}`.
#[derive(Serialize, Deserialize)]
struct StepFunctionJson {
    support_len: usize,
    resolution: u32,
    values: Vec<Rational>,
}

impl StepFunction {
    pub fn new(support_len: usize, resolution: u32, values: Vec<Rational>) -> Result<Self, Error> {
        if support_len == 0 {
            return Err(Error::EmptySupport);
        }
        let expected = cell_count(support_len, resolution)?;
        if values.len() != expected {
            return Err(Error::ValueCount {
                support_len,
                resolution,
                expected,
                got: values.len(),
            });
        }
        Ok(StepFunction {
            support_len,
            resolution,
            values,
        })
    }

    pub fn zero(support_len: usize, resolution: u32) -> Self {
        let n = cell_count(support_len.max(1), resolution).expect("shape too large");
        StepFunction {
            support_len: support_len.max(1),
            resolution,
            values: vec![Rational::zero(); n],
        }
    }

    pub fn from_fn(
        support_len: usize,
        resolution: u32,
        mut f: impl FnMut(usize) -> Rational,
    ) -> Self {
        let n = cell_count(support_len.max(1), resolution).expect("shape too large");
        StepFunction {
            support_len: support_len.max(1),
            resolution,
            values: (0..n).map(&mut f).collect(),
        }
    }

    /// Indicator of the union of cells `cells` at resolution `r`.
    pub fn indicator(support_len: usize, resolution: u32, cells: Range<usize>) -> Self {
        Self::from_fn(support_len, resolution, |t| {
            if cells.contains(&t) {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
    }

    /// `1_{(m-1, m)}` for `m ≥ 1`.
    pub fn unit_indicator(m: usize) -> Self {
        assert!(m >= 1, "unit intervals are 1-based");
        Self::indicator(m, 0, m - 1..m)
    }

    pub fn support_len(&self) -> usize {
        self.support_len
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Rational> {
        self.values
    }

    /// Value on cell `t` of the grid at resolution `r ≥ self.resolution`;
    /// zero beyond the support.
    #[inline]
    pub fn cell(&self, t: usize, r: u32) -> &Rational {
        debug_assert!(r >= self.resolution);
        self.values.get(t >> (r - self.resolution)).unwrap_or(&ZERO)
    }

    /// The same function on a finer grid and/or longer support.
    pub fn reshaped(&self, support_len: usize, resolution: u32) -> Self {
        assert!(resolution >= self.resolution && support_len >= self.support_len);
        if support_len == self.support_len && resolution == self.resolution {
            return self.clone();
        }
        Self::from_fn(support_len, resolution, |t| {
            self.cell(t, resolution).clone()
        })
    }

    fn map(&self, op: impl Fn(&Rational) -> Rational) -> Self {
        StepFunction {
            support_len: self.support_len,
            resolution: self.resolution,
            values: self.values.iter().map(op).collect(),
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        let (j, r) = common_shape(self, other);
        Self::from_fn(j, r, |t| op(self.cell(t, r), other.cell(t, r)))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|v| v * c)
    }

    pub fn abs(&self) -> Self {
        self.map(Rational::abs)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn pointwise_max(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| if a >= b { a.clone() } else { b.clone() })
    }

    pub fn pointwise_mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// `Σ c_k f_k` accumulated on one common grid.
    pub fn linear_combination<'a>(
        terms: impl IntoIterator<Item = (&'a Rational, &'a StepFunction)> + Clone,
    ) -> Self {
        let (mut j, mut r) = (1, 0);
        for (_, f) in terms.clone() {
            j = j.max(f.support_len);
            r = r.max(f.resolution);
        }
        let mut acc = vec![Rational::zero(); cell_count(j, r).expect("shape too large")];
        for (c, f) in terms {
            if c.is_zero() {
                continue;
            }
            let rep = 1usize << (r - f.resolution);
            for (k, v) in f.values.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let w = c * v;
                for slot in &mut acc[k * rep..(k + 1) * rep] {
                    *slot += &w;
                }
            }
        }
        StepFunction {
            support_len: j,
            resolution: r,
            values: acc,
        }
    }

    fn cell_measure(&self) -> Rational {
        Rational::dyadic(self.resolution)
    }

    pub fn integral(&self) -> Rational {
        let s: Rational = self.values.iter().sum();
        s * self.cell_measure()
    }

    pub fn norm_1(&self) -> Rational {
        let s: Rational = self.values.iter().map(Rational::abs).sum();
        s * self.cell_measure()
    }

    pub fn norm_2_sq(&self) -> Rational {
        let s: Rational = self.values.iter().map(|v| v * v).sum();
        s * self.cell_measure()
    }

    /// `(2^-r Σ |v_t|^p)^(1/p)` in double precision with compensated summation.
    pub fn norm_p_float(&self, p: f64) -> Result<f64, Error> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        let powered = neumaier_sum(self.values.iter().map(|v| pow_abs(v.to_f64(), p)));
        let measure = (-(self.resolution as f64)).exp2();
        Ok((powered * measure).powf(1.0 / p))
    }

    /// Mean of `f` over each unit interval `(m-1, m)`, `m = 1 … J`.
    pub fn unit_interval_averages(&self) -> Vec<Rational> {
        let per = 1usize << self.resolution;
        let measure = self.cell_measure();
        self.values
            .chunks(per)
            .map(|chunk| chunk.iter().sum::<Rational>() * &measure)
            .collect()
    }

    /// Projection onto functions constant on every unit interval.
    pub fn conditional_expectation(&self) -> Self {
        StepFunction {
            support_len: self.support_len,
            resolution: 0,
            values: self.unit_interval_averages(),
        }
    }

    pub fn min_value(&self) -> Rational {
        self.values
            .iter()
            .min()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn is_nonneg(&self) -> bool {
        self.values.iter().all(|v| !v.is_negative())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Rational::is_zero)
    }

    /// Cell values as `f64` on the grid `(J, r)`, which must be at least as
    /// fine and as long as this function's own.
    pub fn to_f64_grid(&self, support_len: usize, resolution: u32) -> Vec<f64> {
        let n = cell_count(support_len, resolution).expect("shape too large");
        (0..n).map(|t| self.cell(t, resolution).to_f64()).collect()
    }

    /// The equal function with trailing zero unit intervals dropped and the
    /// coarsest resolution that represents it.
    pub fn trimmed(&self) -> Self {
        let per = 1usize << self.resolution;
        let mut j = self.support_len;
        while j > 1
            && self.values[(j - 1) * per..j * per]
                .iter()
                .all(Rational::is_zero)
        {
            j -= 1;
        }
        let mut r = self.resolution;
        let mut values = self.values[..j * per].to_vec();
        while r > 0 && values.chunks(2).all(|p| p[0] == p[1]) {
            values = values.chunks(2).map(|p| p[0].clone()).collect();
            r -= 1;
        }
        StepFunction {
            support_len: j,
            resolution: r,
            values,
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("step function serialises")
    }
}

/// `(max J, max r)` of two functions.
pub fn common_shape(f: &StepFunction, g: &StepFunction) -> (usize, u32) {
    (
        f.support_len.max(g.support_len),
        f.resolution.max(g.resolution),
    )
}

/// Re-expresses both functions on their common grid.
pub fn align(f: &StepFunction, g: &StepFunction) -> (StepFunction, StepFunction) {
    let (j, r) = common_shape(f, g);
    (f.reshaped(j, r), g.reshaped(j, r))
}

pub(crate) fn cell_count(support_len: usize, resolution: u32) -> Result<usize, Error> {
    if resolution > MAX_RESOLUTION {
        return Err(Error::ResolutionTooFine(resolution));
    }
    support_len
        .checked_mul(1usize << resolution)
        .ok_or(Error::ResolutionTooFine(resolution))
}

#[inline]
pub(crate) fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 1.0 {
        a
    } else if p == p.trunc() && p <= 16.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// Neumaier-compensated sum.
pub(crate) fn neumaier_sum(iter: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl PartialEq for StepFunction {
    fn eq(&self, other: &Self) -> bool {
        let (j, r) = common_shape(self, other);
        (0..j << r).all(|t| self.cell(t, r) == other.cell(t, r))
    }
}

impl Eq for StepFunction {}

impl fmt::Debug for StepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "StepFunction(J={}, r={}, {:?})",
            self.support_len, self.resolution, self.values
        )
    }
}

impl Serialize for StepFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        StepFunctionJson {
            support_len: self.support_len,
            resolution: self.resolution,
            values: self.values.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StepFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = StepFunctionJson::deserialize(deserializer)?;
        StepFunction::new(raw.support_len, raw.resolution, raw.values)
            .map_err(serde::de::Error::custom)
    }
}

//! The multi-interval L1-normalised Haar system.
//!
//! `h^j_{n,i}` lives on the unit interval `(j-1, j)`: it equals `2^n` on the
//! left half and `-2^n` on the right half of the dyadic interval
//! `(j-1 + (i-1)/2^n, j-1 + i/2^n)`, so its L1 norm is 1 and its mean is 0.
//!
//! Within one unit interval the functions are ranked lexicographically in
//! `(n, i)`, i.e. by `l = 2^n + i - 1`. The global order interleaves the
//! intervals along the diagonals of the `(j, l)` grid:
//!
//! ```text
//! g:      1      2      3      4      5      6     ...
//! (j,l): (1,1)  (1,2)  (2,1)  (1,3)  (2,2)  (3,1)  ...
//! ```
//!
//! so `g = (s-1)(s-2)/2 + j` with `s = j + l`.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Roots;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rational::Rational;
use crate::stepfn::{cell_count, StepFunction};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HaarIndex {
    j: usize,
    n: u32,
    i: usize,
}

impl HaarIndex {
    pub fn new(j: usize, n: u32, i: usize) -> Result<Self, Error> {
        let valid = j >= 1 && n < usize::BITS - 1 && i >= 1 && i <= 1usize << n;
        if !valid {
            return Err(Error::InvalidHaarIndex {
                j: j as u64,
                n,
                i: i as u64,
            });
        }
        Ok(HaarIndex { j, n, i })
    }

    /// From the host interval and the lexicographic rank `l ≥ 1` within it.
    pub fn from_rank(j: usize, l: usize) -> Self {
        assert!(j >= 1 && l >= 1);
        let n = usize::BITS - 1 - l.leading_zeros();
        HaarIndex {
            j,
            n,
            i: l - (1usize << n) + 1,
        }
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn i(&self) -> usize {
        self.i
    }

    /// Lexicographic rank of `(n, i)` within the host interval.
    pub fn rank(&self) -> usize {
        (1usize << self.n) + self.i - 1
    }

    /// Support endpoints `(left, right)`; the support has length `2^-n`.
    pub fn support(&self) -> (Rational, Rational) {
        let base = Rational::from_int(self.j as i64 - 1);
        let w = Rational::dyadic(self.n);
        let left = &base + &w * Rational::from_int(self.i as i64 - 1);
        let right = &left + &w;
        (left, right)
    }

    /// First cell and half-width (in cells) of the support at resolution
    /// `r ≥ n + 1`.
    fn cells(&self, r: u32) -> (usize, usize) {
        debug_assert!(r > self.n);
        let half = 1usize << (r - self.n - 1);
        let start = ((self.j - 1) << r) + (self.i - 1) * 2 * half;
        (start, half)
    }

    /// Dyadic ancestor at level `k < n` and whether this support lies in its
    /// left half.
    fn ancestor(&self, k: u32) -> (HaarIndex, bool) {
        debug_assert!(k < self.n);
        let pos = self.i - 1;
        let anc = HaarIndex {
            j: self.j,
            n: k,
            i: (pos >> (self.n - k)) + 1,
        };
        let left = (pos >> (self.n - k - 1)) & 1 == 0;
        (anc, left)
    }
}

impl fmt::Debug for HaarIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h^{}_{{{},{}}}", self.j, self.n, self.i)
    }
}

impl<'de> Deserialize<'de> for HaarIndex {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            j: usize,
            n: u32,
            i: usize,
        }
        let raw = Raw::deserialize(deserializer)?;
        HaarIndex::new(raw.j, raw.n, raw.i).map_err(serde::de::Error::custom)
    }
}

/// Haar function at 1-based global position `g`.
pub fn global_to_index(g: usize) -> HaarIndex {
    assert!(g >= 1, "global indices are 1-based");
    let (j, l) = global_to_pair(g);
    HaarIndex::from_rank(j, l)
}

pub fn index_to_global(idx: &HaarIndex) -> usize {
    pair_to_global(idx.j, idx.rank())
}

/// `g ↦ (j, l)` along the diagonals `j + l = s`.
pub fn global_to_pair(g: usize) -> (usize, usize) {
    let g128 = g as u128;
    // smallest d with d(d+1)/2 ≥ g
    let mut d = ((8 * g128 + 1).sqrt() - 1) / 2;
    while d * (d + 1) / 2 < g128 {
        d += 1;
    }
    let before = (d * (d - 1) / 2) as usize;
    let j = g - before;
    let l = d as usize + 1 - j;
    (j, l)
}

pub fn pair_to_global(j: usize, l: usize) -> usize {
    let d = j + l - 1;
    d * (d - 1) / 2 + j
}

/// Host interval of the `g`-th Haar function.
pub fn host_interval(g: usize) -> usize {
    global_to_pair(g).0
}

pub fn haar_fn(idx: &HaarIndex) -> StepFunction {
    let r = idx.n + 1;
    let (start, half) = idx.cells(r);
    let amp = Rational::pow2(idx.n);
    let neg = -&amp;
    StepFunction::from_fn(idx.j, r, |t| {
        if t == start {
            amp.clone()
        } else if t == start + half {
            neg.clone()
        } else {
            Rational::zero()
        }
    })
}

/// `2^-n ∫ f·h_idx`, the coefficient of `h_idx` in the Haar expansion of `f`.
pub fn haar_coeff(f: &StepFunction, idx: &HaarIndex) -> Rational {
    if idx.j > f.support_len() {
        return Rational::zero();
    }
    let r = f.resolution().max(idx.n + 1);
    let (start, half) = idx.cells(r);
    let left: Rational = (start..start + half).map(|t| f.cell(t, r)).sum();
    let right: Rational = (start + half..start + 2 * half).map(|t| f.cell(t, r)).sum();
    (left - right) * Rational::dyadic(r)
}

/// Unit-interval averages and Haar coefficients of a step function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaarDecomposition {
    /// `coarse[m-1]` is the mean of `f` over `(m-1, m)`.
    pub coarse: Vec<Rational>,
    /// Non-zero Haar coefficients only.
    pub detail: BTreeMap<HaarIndex, Rational>,
}

/// Pyramid analysis: dyadic interval integrals are pairwise summed level by
/// level, and each Haar coefficient is the left-minus-right difference.
pub fn haar_analysis(f: &StepFunction) -> HaarDecomposition {
    let r = f.resolution();
    let per = 1usize << r;
    let measure = Rational::dyadic(r);
    let mut coarse = Vec::with_capacity(f.support_len());
    let mut detail = BTreeMap::new();
    for (m, chunk) in f.values().chunks(per).enumerate() {
        // sums over intervals of length 2^-level, in units of 2^-r
        let mut sums: Vec<Rational> = chunk.to_vec();
        for level in (0..r).rev() {
            let next: Vec<Rational> = sums.chunks(2).map(|p| &p[0] + &p[1]).collect();
            for (pos, pair) in sums.chunks(2).enumerate() {
                let diff = &pair[0] - &pair[1];
                if !diff.is_zero() {
                    let idx = HaarIndex {
                        j: m + 1,
                        n: level,
                        i: pos + 1,
                    };
                    detail.insert(idx, diff * &measure);
                }
            }
            sums = next;
        }
        coarse.push(&sums[0] * &measure);
    }
    HaarDecomposition { coarse, detail }
}

pub fn haar_synthesis(coarse: &[Rational], detail: &BTreeMap<HaarIndex, Rational>) -> StepFunction {
    let j = detail
        .keys()
        .map(|k| k.j)
        .max()
        .unwrap_or(0)
        .max(coarse.len())
        .max(1);
    let r = detail.keys().map(|k| k.n + 1).max().unwrap_or(0);
    let per = 1usize << r;
    let mut acc = vec![Rational::zero(); cell_count(j, r).expect("shape too large")];
    for (m, c) in coarse.iter().enumerate() {
        if !c.is_zero() {
            for v in &mut acc[m * per..(m + 1) * per] {
                *v += c;
            }
        }
    }
    for (idx, d) in detail {
        if d.is_zero() {
            continue;
        }
        let (start, half) = idx.cells(r);
        let w = d * Rational::pow2(idx.n);
        for v in &mut acc[start..start + half] {
            *v += &w;
        }
        for v in &mut acc[start + half..start + 2 * half] {
            *v -= &w;
        }
    }
    StepFunction::new(j, r, acc).expect("shape is consistent")
}

impl HaarDecomposition {
    pub fn synthesize(&self) -> StepFunction {
        haar_synthesis(&self.coarse, &self.detail)
    }
}

/// `|h_idx| = 1_{(j-1,j)} + Σ sign·h_anc` over the strict dyadic ancestors of
/// the support, coarsest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbsExpansion {
    pub base_interval: usize,
    pub chain: Vec<(HaarIndex, i8)>,
}

pub fn abs_expansion(idx: &HaarIndex) -> AbsExpansion {
    let chain = (0..idx.n)
        .map(|k| {
            let (anc, left) = idx.ancestor(k);
            (anc, if left { 1 } else { -1 })
        })
        .collect();
    AbsExpansion {
        base_interval: idx.j,
        chain,
    }
}

impl AbsExpansion {
    pub fn synthesize(&self) -> StepFunction {
        let mut coarse = vec![Rational::zero(); self.base_interval];
        coarse[self.base_interval - 1] = Rational::one();
        let detail = self
            .chain
            .iter()
            .map(|(idx, s)| (*idx, Rational::from_int(*s as i64)))
            .collect();
        haar_synthesis(&coarse, &detail)
    }
}

//! Seeded random inputs for verification trials.
//!
//! Trial `t` of a run with seed `S` draws from a ChaCha8 stream seeded with
//! [`trial_seed`]`(S, t)`, so results never depend on how trials are
//! scheduled across threads.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rational::Rational;
use crate::stepfn::StepFunction;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(S ^ splitmix64(t))`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed ^ splitmix64(trial))
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, trial))
}

/// Numerator in `[-64, 64]`, denominator in `[1, 64]`.
pub fn rational<R: Rng>(rng: &mut R) -> Rational {
    Rational::new(rng.gen_range(-64..=64), rng.gen_range(1..=64))
}

pub fn nonzero_rational<R: Rng>(rng: &mut R) -> Rational {
    loop {
        let q = rational(rng);
        if !q.is_zero() {
            return q;
        }
    }
}

/// Random rational that is zero with probability `zero_prob`.
pub fn sparse_rational<R: Rng>(rng: &mut R, zero_prob: f64) -> Rational {
    if rng.gen_bool(zero_prob) {
        Rational::zero()
    } else {
        rational(rng)
    }
}

/// `J ∈ [1, 6]`, `r ∈ [0, 6]`, cells from [`rational`].
pub fn step_function<R: Rng>(rng: &mut R) -> StepFunction {
    let j = rng.gen_range(1..=6);
    let r = rng.gen_range(0..=6);
    StepFunction::from_fn(j, r, |_| rational(rng))
}

/// Non-negative step function on a grid no finer or longer than `(j, r)`,
/// with roughly a third of the cells zero.
pub fn nonneg_step_function<R: Rng>(rng: &mut R, j: usize, r: u32) -> StepFunction {
    let jn = rng.gen_range(1..=j);
    let rn = rng.gen_range(0..=r);
    StepFunction::from_fn(jn, rn, |_| {
        if rng.gen_bool(1.0 / 3.0) {
            Rational::zero()
        } else {
            Rational::new(rng.gen_range(1..=64), rng.gen_range(1..=64))
        }
    })
}

/// Admissible level exponents `k` for a piece of value `2^k`: its measure
/// `2^-(t + k·p)` must be dyadic.
fn levels_for(p: f64) -> &'static [u32] {
    const TABLE: [(f64, &[u32]); 5] = [
        (1.0, &[0, 1, 2, 3]),
        (1.5, &[0, 2]),
        (2.0, &[0, 1, 2]),
        (3.0, &[0, 1]),
        (4.0, &[0, 1]),
    ];
    TABLE
        .iter()
        .find(|(q, _)| *q == p)
        .map_or(&[0], |(_, levels)| levels)
}

/// Non-negative function with `‖x‖_p^p = 1` exactly, built from pieces of
/// value `2^k` on `2^(r - t - k·p)` cells taken from `pool`, where the masses
/// `2^-t` of the pieces sum to 1. Returns `None` if the pool runs dry.
fn normalized_member<R: Rng>(
    rng: &mut R,
    p: f64,
    j: usize,
    r: u32,
    pool: &mut Vec<usize>,
) -> Option<StepFunction> {
    let mut masses = vec![0u32];
    for _ in 0..rng.gen_range(0..=2) {
        let pick = rng.gen_range(0..masses.len());
        if masses[pick] < 2 {
            let t = masses.swap_remove(pick) + 1;
            masses.extend([t, t]);
        }
    }
    let mut values = vec![Rational::zero(); j << r];
    for t in masses {
        let options: Vec<u32> = levels_for(p)
            .iter()
            .copied()
            .filter(|&k| (t as f64 + k as f64 * p) <= r as f64)
            .collect();
        let k = *options.choose(rng)?;
        let e = (t as f64 + k as f64 * p) as u32;
        let cells = 1usize << (r - e);
        if pool.len() < cells {
            return None;
        }
        let value = Rational::pow2(k);
        for c in pool.drain(pool.len() - cells..) {
            values[c] = value.clone();
        }
    }
    Some(StepFunction::new(j, r, values).expect("shape is consistent"))
}

/// Family of `n` functions, each with unit `L_p` norm (exact for integer
/// `p`; `p = 1.5` is exact in the dyadic sense as well). Disjoint families
/// draw all members from one shared pool of cells.
pub fn normalized_family<R: Rng>(
    rng: &mut R,
    n: usize,
    p: f64,
    disjoint: bool,
) -> Vec<StepFunction> {
    let r = if disjoint { 4 } else { 6 };
    let j = if disjoint {
        n + rng.gen_range(0..=2)
    } else {
        rng.gen_range(1..=3)
    };
    let fresh_pool = |rng: &mut R| {
        let mut pool: Vec<usize> = (0..j << r).collect();
        pool.shuffle(rng);
        pool
    };
    let mut shared = fresh_pool(rng);
    (0..n)
        .map(|_| {
            if disjoint {
                normalized_member(rng, p, j, r, &mut shared).expect("pool covers n·2^r cells")
            } else {
                let mut pool = fresh_pool(rng);
                normalized_member(rng, p, j, r, &mut pool).expect("fresh pool has 2^r cells")
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable() {
        // pinned so that report lines stay comparable across releases
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(trial_seed(7, 0), trial_seed(7, 1));
        assert_ne!(trial_seed(7, 0), trial_seed(8, 0));
        let a: Vec<u32> = (0..4).map(|_| trial_rng(7, 3).gen()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn families_are_normalised() {
        let mut rng = trial_rng(1, 1);
        for &p in &[1.0, 1.5, 2.0, 3.0, 4.0] {
            for disjoint in [false, true] {
                for n in 1..=12 {
                    let fam = normalized_family(&mut rng, n, p, disjoint);
                    for x in &fam {
                        assert!(x.is_nonneg());
                        assert!((x.norm_p_float(p).unwrap() - 1.0).abs() < 1e-14);
                        if p == 1.0 {
                            assert_eq!(x.norm_1(), Rational::one());
                        }
                        if p == 2.0 {
                            assert_eq!(x.norm_2_sq(), Rational::one());
                        }
                    }
                    if disjoint {
                        let cells = fam[0].values().len();
                        for t in 0..cells {
                            let busy = fam.iter().filter(|x| !x.values()[t].is_zero()).count();
                            assert!(busy <= 1);
                        }
                    }
                }
            }
        }
    }
}

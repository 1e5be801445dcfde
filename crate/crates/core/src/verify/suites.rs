//! Seeded property suites. Each suite maps a trial index to a single-trial
//! report and folds the results with [`VerifyReport::merge`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::gen;
use super::{
    default_khintchine, disjoint_lp_identity, fdd_report, interpolation_check, pointwise_chain,
    projection_check, prop2_lower, rademacher_moments_exact, rademacher_ratio, Margin,
    VerifyReport, FLOAT_REL_TOL,
};
use crate::basis::{check_admissible, pi_default, Basis};
use crate::rational::Rational;

/// Lower end of the accepted Rademacher-ratio window.
pub const RADEMACHER_FLOOR: f64 = 0.70;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Fdd,
    Prop2,
    Norms,
    Projections,
    Chain,
    Rademacher,
    DisjointLp,
    Permutation,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Fdd,
        Suite::Prop2,
        Suite::Norms,
        Suite::Projections,
        Suite::Chain,
        Suite::Rademacher,
        Suite::DisjointLp,
        Suite::Permutation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Fdd => "fdd",
            Suite::Prop2 => "prop2",
            Suite::Norms => "norms",
            Suite::Projections => "projections",
            Suite::Chain => "chain",
            Suite::Rademacher => "rademacher",
            Suite::DisjointLp => "disjoint-lp",
            Suite::Permutation => "permutation",
        }
    }

    /// Default for `imax`: largest block count (fdd), largest block index
    /// (prop2, norms) or permutation prefix length.
    pub fn default_imax(self) -> usize {
        match self {
            Suite::Fdd => 50,
            Suite::Prop2 => 500,
            Suite::Norms => 2000,
            Suite::Permutation => 100_000,
            _ => 0,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub trials: u64,
    pub seed: u64,
    /// `None` selects [`Suite::default_imax`].
    pub imax: Option<usize>,
    /// Exponent for chain / rademacher / disjoint-lp; `None` cycles through
    /// the suite's default exponents.
    pub p: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            trials: 1000,
            seed: 0,
            imax: None,
            p: None,
        }
    }
}

fn run_trials(
    check: &str,
    trials: u64,
    trial: impl Fn(u64) -> VerifyReport + Sync,
) -> VerifyReport {
    (0..trials)
        .into_par_iter()
        .map(|t| trial(t).at_trial(t))
        .reduce(|| VerifyReport::empty(check), VerifyReport::merge)
}

/// Collapses several checks of one trial into a single trial.
fn combine(check: &str, parts: Vec<VerifyReport>) -> VerifyReport {
    let violations = parts.iter().map(|r| r.violations).sum::<u64>();
    let mut out = parts
        .into_iter()
        .reduce(VerifyReport::merge)
        .unwrap_or_else(|| VerifyReport::empty(check));
    out.check = check.to_string();
    out.trials = 1;
    out.violations = violations.min(1);
    out
}

pub fn run_suite(suite: Suite, config: &SuiteConfig) -> VerifyReport {
    let imax = config.imax.unwrap_or(suite.default_imax()).max(1);
    let seed = config.seed;
    let name = suite.name();
    match suite {
        Suite::Fdd => {
            let basis = Basis::identity();
            run_trials(name, config.trials, |t| {
                let mut rng = gen::trial_rng(seed, t);
                let n = rng.gen_range(1..=imax);
                let zero_prob = rng.gen_range(0.0..0.8);
                let a: Vec<Rational> = (0..n)
                    .map(|_| gen::sparse_rational(&mut rng, zero_prob))
                    .collect();
                let b: Vec<Rational> = (0..n)
                    .map(|_| gen::sparse_rational(&mut rng, zero_prob))
                    .collect();
                fdd_report(&basis, &a, &b)
            })
        }
        Suite::Prop2 => {
            let basis = Basis::identity();
            run_trials(name, config.trials, |t| {
                let mut rng = gen::trial_rng(seed, t);
                // the included case only occurs at i = 1; give it weight
                let i = if rng.gen_bool(0.25) {
                    1
                } else {
                    rng.gen_range(1..=imax)
                };
                let a = gen::rational(&mut rng);
                let b = gen::rational(&mut rng);
                prop2_lower(&basis, i, &a, &b)
            })
        }
        Suite::Norms => {
            let basis = Basis::identity();
            let three = Rational::from_int(3);
            run_trials(name, imax as u64, |t| {
                let i = t as usize + 1;
                let block = basis.build_block(i);
                let nx = block.x.norm_1();
                let ny = block.y.norm_1();
                let floor = block.x.min_value().min(block.y.min_value());
                let margin = (-(&nx - &three).abs())
                    .min(-(&ny - &three).abs())
                    .min(floor.clone());
                VerifyReport::single(
                    name,
                    nx != three || ny != three || floor.is_negative(),
                    Margin::Exact(margin),
                    json!({ "i": i, "norm_x": nx.to_string(), "norm_y": ny.to_string() }),
                )
            })
        }
        Suite::Projections => run_trials(name, config.trials, |t| {
            let mut rng = gen::trial_rng(seed, t);
            projection_check(&gen::step_function(&mut rng))
        }),
        Suite::Chain => {
            let p = config.p.unwrap_or(3.0);
            run_trials(name, config.trials, |t| {
                let mut rng = gen::trial_rng(seed, t);
                let n = rng.gen_range(1..=8);
                let x: Vec<_> = (0..n)
                    .map(|_| gen::nonneg_step_function(&mut rng, 6, 6))
                    .collect();
                let a: Vec<Rational> = (0..n).map(|_| gen::rational(&mut rng)).collect();
                let pointwise = pointwise_chain(&x, &a).expect("generated family is non-negative");
                let interp = interpolation_check(&x, &a, p).expect("generated family is valid");
                combine(name, vec![pointwise, interp])
            })
        }
        Suite::Rademacher => {
            let exponents: Vec<f64> = config.p.map_or(vec![1.0, 2.0, 3.0, 4.0], |p| vec![p]);
            run_trials(name, config.trials, |t| {
                let mut rng = gen::trial_rng(seed, t);
                let parts = exponents
                    .iter()
                    .flat_map(|&p| rademacher_trial(&mut rng, p))
                    .collect();
                combine(name, parts)
            })
        }
        Suite::DisjointLp => {
            let exponents: Vec<f64> = config.p.map_or(vec![1.0, 1.5, 2.0, 3.0, 4.0], |p| vec![p]);
            run_trials(name, config.trials, |t| {
                let mut rng = gen::trial_rng(seed, t);
                let p = exponents[(t as usize) % exponents.len()];
                let n = rng.gen_range(1..=8);
                let x = gen::normalized_family(&mut rng, n, p, true);
                let a: Vec<Rational> = (0..n).map(|_| gen::rational(&mut rng)).collect();
                disjoint_lp_identity(&x, &a, p)
                    .expect("generated family is disjoint and normalised")
            })
        }
        Suite::Permutation => {
            let (violated, margin, witness) = match check_admissible(pi_default, imax) {
                Ok(slack) => (
                    false,
                    Rational::from_int(slack.unwrap_or(0) as i64),
                    json!({ "n": imax }),
                ),
                Err(v) => (
                    true,
                    Rational::from_int(-1),
                    json!({ "n": imax, "index": v.index(), "violation": format!("{v:?}") }),
                ),
            };
            let mut report =
                VerifyReport::single(name, violated, Margin::Exact(margin), witness).at_trial(0);
            report.trials = imax as u64;
            report
        }
    }
}

/// One overlapping family (ratio inside the Khintchine window) and one
/// disjoint family (ratio 1; exactly for `p ∈ {1, 2}`).
fn rademacher_trial<R: Rng>(rng: &mut R, p: f64) -> Vec<VerifyReport> {
    let upper = default_khintchine(p).max(1.0);
    let n = rng.gen_range(1..=12);
    let x = gen::normalized_family(rng, n, p, false);
    let a: Vec<Rational> = (0..n).map(|_| gen::nonzero_rational(rng)).collect();
    let ratio = rademacher_ratio(&x, &a, p).expect("generated family is normalised");
    // relative gap to the nearer end of the window
    let margin = ((ratio - RADEMACHER_FLOOR) / RADEMACHER_FLOOR).min((upper - ratio) / upper);
    let mut violated = margin < -FLOAT_REL_TOL;
    if p == 2.0 {
        // the second moment of a Rademacher sum is exactly Σ c², so R = 1
        let (num, den) = rademacher_moments_exact(&x, &a, 2).expect("family is valid");
        violated |= den.as_ref() != Some(&num);
    }
    let window = VerifyReport::single(
        "rademacher",
        violated,
        Margin::Float(margin),
        json!({ "p": p, "ratio": ratio, "disjoint": false, "n": n }),
    );

    let n = rng.gen_range(1..=12);
    let x = gen::normalized_family(rng, n, p, true);
    let a: Vec<Rational> = (0..n).map(|_| gen::nonzero_rational(rng)).collect();
    let ratio = rademacher_ratio(&x, &a, p).expect("generated family is normalised");
    let mut violated = (ratio - 1.0).abs() > FLOAT_REL_TOL;
    if p == 1.0 || p == 2.0 {
        let (num, den) = rademacher_moments_exact(&x, &a, p as u32).expect("family is valid");
        violated |= den.as_ref() != Some(&num);
    }
    let unit = VerifyReport::single(
        "rademacher",
        violated,
        Margin::Float(FLOAT_REL_TOL - (ratio - 1.0).abs()),
        json!({ "p": p, "ratio": ratio, "disjoint": true, "n": n }),
    );
    vec![window, unit]
}

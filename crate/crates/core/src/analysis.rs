//! The normalized cumulative-count function `f_{T,k}` and its comparison
//! with `L_{1/(M+1)}`.
//!
//! `f_{T,k}(x) = cum_T(2^k x - 1) / cum_T(2^k - 1)` at every `k`-bit dyadic
//! `x`, with `cum_T(-1) = 0`. A necessary condition for `f_T = L_{1/(M+1)}`
//! is `1 / f_{T,k}(1/2) = M + 1` at every `k`; failing it at some `k`
//! refutes the rule at that precision.

use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::engine::{run_counts, CountSeries, EngineOptions, Evolution, PatternWindow};
use crate::error::{Error, Result};
use crate::rules::{enumerate_rules, LatticeKind, Rule};
use crate::salem::{eval_dyadic, DyadicRational, SalemParams};

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// Exact values of `f_{T,k}` at `m / 2^k` for `m = 0..=2^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    rule: Rule,
    k: u32,
    values: Vec<BigRational>,
}

impl FunctionTable {
    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn precision(&self) -> u32 {
        self.k
    }

    /// Value at `m / 2^k`.
    pub fn at(&self, m: u64) -> Option<&BigRational> {
        self.values.get(m as usize)
    }

    pub fn value(&self, x: &DyadicRational) -> Option<&BigRational> {
        self.at(x.numerator_at(self.k)?)
    }

    /// `(m, f(m / 2^k))` in ascending order of `m`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.values.iter().enumerate().map(|(m, v)| (m as u64, v))
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] < w[1])
    }

    /// First numerator where the table differs from `L_α`, if any.
    pub fn first_salem_mismatch(&self, params: &SalemParams) -> Option<u64> {
        DyadicRational::all(self.k)
            .zip(&self.values)
            .position(|(x, v)| eval_dyadic(params, &x) != *v)
            .map(|m| m as u64)
    }
}

/// `f_{T,k}` from a count series reaching at least `2^k - 1`.
pub fn build_function_table(counts: &CountSeries, k: u32) -> Result<FunctionTable> {
    if k > 40 {
        return Err(Error::OutOfRange(format!("precision {k} is too large")));
    }
    let top = (1u64 << k) - 1;
    counts.require(top)?;
    let total = &counts.cum()[top as usize];
    let values = (0..=top + 1)
        .map(|m| Ok(ratio(&counts.cum_before(m)?, total)))
        .collect::<Result<_>>()?;
    Ok(FunctionTable {
        rule: counts.rule().clone(),
        k,
        values,
    })
}

/// Outcome of the half-point test at one precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfTest {
    pub k: u32,
    /// `f_{T,k}(1/2) = cum(2^{k-1} - 1) / cum(2^k - 1)`.
    pub half_value: BigRational,
    /// `1 / f_{T,k}(1/2)` when it is an integer.
    pub reciprocal: Option<BigUint>,
}

impl HalfTest {
    /// `1 / f_{T,k}(1/2)` is an integer greater than 2.
    pub fn passes(&self) -> bool {
        self.reciprocal.as_ref().is_some_and(|r| *r > BigUint::from(2u32))
    }
}

/// Half-point test from counts, by exact divisibility.
pub fn half_test(counts: &CountSeries, k: u32) -> Result<HalfTest> {
    if k == 0 || k > 63 {
        return Err(Error::OutOfRange(format!("half test needs 1 <= k <= 63, got {k}")));
    }
    let full = (1u64 << k) - 1;
    counts.require(full)?;
    let whole = &counts.cum()[full as usize];
    let half = &counts.cum()[(full >> 1) as usize];
    let (q, r) = whole.div_rem(half);
    Ok(HalfTest {
        k,
        half_value: ratio(half, whole),
        reciprocal: r.is_zero().then_some(q),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// `f_{T,k}` equals `L_{1/(M+1)}` at every dyadic of the top precision,
    /// and the half-point test passes at every precision.
    Match { m: BigUint },
    /// The half-point test fails first at precision `k`.
    Refuted { k: u32 },
    /// Half-point test passes everywhere but the full table differs from
    /// `L_{1/(M+1)}` at numerator `at`.
    TableMismatch { m: BigUint, at: u64 },
    /// Trivial rule or a pattern that dies out.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationReport {
    pub rule: Rule,
    pub k_max: u32,
    /// `f_{T,k_max}(1/2)`.
    pub half_value: BigRational,
    pub verdict: Verdict,
    /// Half-point tests for `k = 2..=k_max`.
    pub half_tests: Vec<HalfTest>,
}

impl ClassificationReport {
    /// `M` with `α = 1/(M+1)` when the rule matches.
    pub fn salem_match(&self) -> Option<&BigUint> {
        match &self.verdict {
            Verdict::Match { m } => Some(m),
            _ => None,
        }
    }

    pub fn refutation_k(&self) -> Option<u32> {
        match self.verdict {
            Verdict::Refuted { k } => Some(k),
            _ => None,
        }
    }

    /// `α = 1/(M+1)` of a match.
    pub fn alpha(&self) -> Option<BigRational> {
        self.salem_match()
            .map(|m| BigRational::new(1.into(), BigInt::from(m + 1u32)))
    }

    pub fn half_test(&self, k: u32) -> Option<&HalfTest> {
        self.half_tests.iter().find(|t| t.k == k)
    }

    /// Every half-point test in `range` fails.
    pub fn refuted_over(&self, range: RangeInclusive<u32>) -> bool {
        range
            .clone()
            .all(|k| self.half_test(k).is_some_and(|t| !t.passes()))
    }
}

/// Classification from an existing count series.
pub fn classify_counts(counts: &CountSeries, k_max: u32) -> Result<ClassificationReport> {
    if !(2..=40).contains(&k_max) {
        return Err(Error::OutOfRange(format!("k_max must lie in 2..=40, got {k_max}")));
    }
    let top = (1u64 << k_max) - 1;
    counts.require(top)?;
    let rule = counts.rule().clone();
    let half_tests = (2..=k_max)
        .map(|k| half_test(counts, k))
        .collect::<Result<Vec<_>>>()?;
    let half_value = half_tests.last().expect("k_max >= 2").half_value.clone();
    let dies = counts.num()[..=top as usize].iter().any(Zero::is_zero);
    let verdict = if rule.is_trivial() || dies {
        Verdict::Degenerate
    } else if let Some(t) = half_tests.iter().find(|t| !t.passes()) {
        Verdict::Refuted { k: t.k }
    } else {
        let reciprocal = half_tests.last().and_then(|t| t.reciprocal.clone()).expect("passed");
        let m = &reciprocal - 1u32;
        let params = SalemParams::new(BigRational::new(1.into(), BigInt::from(reciprocal)))?;
        let table = build_function_table(counts, k_max)?;
        match table.first_salem_mismatch(&params) {
            None => Verdict::Match { m },
            Some(at) => Verdict::TableMismatch { m, at },
        }
    };
    Ok(ClassificationReport {
        rule,
        k_max,
        half_value,
        verdict,
        half_tests,
    })
}

/// Runs the rule to `2^k_max - 1` and classifies it against `L_{1/(M+1)}`.
pub fn classify_salem(rule: &Rule, k_max: u32, opts: &EngineOptions) -> Result<ClassificationReport> {
    if !(2..=40).contains(&k_max) {
        return Err(Error::OutOfRange(format!("k_max must lie in 2..=40, got {k_max}")));
    }
    let counts = run_counts(rule, (1u64 << k_max) - 1, opts)?;
    classify_counts(&counts, k_max)
}

/// Classifies every rule of a lattice family, in enumeration order. Rules
/// are evaluated in parallel; each engine run is sequential.
pub fn screen_family(
    lattice: LatticeKind,
    k_max: u32,
    opts: &EngineOptions,
) -> Result<Vec<ClassificationReport>> {
    let rules = enumerate_rules(lattice)?;
    let inner = EngineOptions {
        parallel: false,
        ..*opts
    };
    rules
        .par_iter()
        .map(|rule| classify_salem(rule, k_max, &inner))
        .collect()
}

/// Precisions over which the negative results were established for each
/// family. For square(4) the range starts at 3: at `k = 2` the half-point
/// test is not refuted for every rule.
pub fn published_screening_range(lattice: LatticeKind) -> Option<RangeInclusive<u32>> {
    match lattice {
        LatticeKind::Square(2) => Some(2..=8),
        LatticeKind::Square(3) => Some(2..=6),
        LatticeKind::Square(4) => Some(3..=4),
        LatticeKind::Square(5) => Some(2..=3),
        LatticeKind::Triangular => Some(3..=7),
        LatticeKind::Hexagonal => Some(3..=8),
        LatticeKind::Square(_) => None,
    }
}

/// Checks `(T^{2n} u_o)_{2i} = (T^n u_o)_i` for `2n <= horizon` and that
/// every even step vanishes off the even sublattice. Any linear rule on a
/// translation-invariant lattice qualifies; triangular rules do not.
pub fn takahashi_check(rule: &Rule, horizon: u64, opts: &EngineOptions) -> Result<bool> {
    if rule.lattice() == LatticeKind::Triangular {
        return Err(Error::OutOfRange(
            "triangular rules are not translation invariant on Z^2".into(),
        ));
    }
    let radius = u32::try_from(horizon).map_err(|_| Error::OutOfRange("horizon too large".into()))?;
    let mut evo = Evolution::new(rule, radius, opts)?;
    let mut early: Vec<PatternWindow> = Vec::new();
    for t in 0..=horizon {
        if t > 0 {
            evo.advance()?;
        }
        let w = evo.window();
        if t <= horizon / 2 {
            early.push(w.clone());
        }
        if t % 2 != 0 {
            continue;
        }
        let ones = w.ones();
        if ones.iter().any(|c| c.iter().any(|x| x % 2 != 0)) {
            return Ok(false);
        }
        let half = &early[(t / 2) as usize];
        // both directions, so the even sublattice matches exactly
        let forward = ones.iter().all(|c| {
            let scaled: Vec<i32> = c.iter().map(|x| x / 2).collect();
            half.get(&scaled)
        });
        let backward = half.ones().iter().all(|c| {
            let doubled: Vec<i32> = c.iter().map(|x| 2 * x).collect();
            w.get(&doubled)
        });
        if !(forward && backward) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Box-counting exponent data: `cum(2^k - 1)` at precision `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxExponent {
    pub mass: BigUint,
    pub k: u32,
}

impl BoxExponent {
    /// `log(mass) / (k log 2)`.
    pub fn estimate(&self) -> f64 {
        log2_big(&self.mass) / self.k as f64
    }

    /// The estimate to 12 decimal places.
    pub fn estimate_string(&self) -> String {
        format!("{:.12}", self.estimate())
    }
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_f64().unwrap_or(f64::NAN);
    top.log2() + shift as f64
}

pub fn box_dimension_exponent(counts: &CountSeries, k: u32) -> Result<BoxExponent> {
    if k == 0 || k > 63 {
        return Err(Error::OutOfRange(format!("precision must lie in 1..=63, got {k}")));
    }
    let top = (1u64 << k) - 1;
    counts.require(top)?;
    Ok(BoxExponent {
        mass: counts.cum()[top as usize].clone(),
        k,
    })
}

//! Salem's singular function `L_α` at dyadic rationals, in exact arithmetic.
//!
//! `L_α` is the continuous solution of
//!
//! ```text
//! L(x) = α L(2x)                  for 0 <= x < 1/2
//! L(x) = (1 - α) L(2x - 1) + α    for 1/2 <= x <= 1
//! ```
//!
//! with `0 < α < 1`, `α != 1/2`. At a `k`-bit dyadic the recursion
//! terminates after `k` steps at `L(0) = 0`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use crate::error::{Error, Result};

/// `x = Σ_{i=1}^k x_i 2^{-i}`, most significant digit first. The value 1 is
/// a separate flag since it has no finite expansion.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    bits: Vec<bool>,
    unit: bool,
}

impl DyadicRational {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        DyadicRational { bits, unit: false }
    }

    pub fn zero() -> Self {
        DyadicRational::from_bits(Vec::new())
    }

    pub fn one() -> Self {
        DyadicRational {
            bits: Vec::new(),
            unit: true,
        }
    }

    /// `m / 2^k` for `0 <= m <= 2^k`.
    pub fn from_numerator(m: u64, k: u32) -> Result<Self> {
        if k > 63 {
            return Err(Error::OutOfRange(format!("precision {k} exceeds 63 bits")));
        }
        match m.cmp(&(1u64 << k)) {
            Ordering::Greater => Err(Error::OutOfRange(format!("{m} / 2^{k} exceeds 1"))),
            Ordering::Equal => Ok(DyadicRational::one()),
            Ordering::Less => Ok(DyadicRational::from_bits(
                (1..=k).map(|i| m >> (k - i) & 1 == 1).collect(),
            )),
        }
    }

    /// Every `k`-bit dyadic in `[0, 1]`, ascending, ending with 1.
    pub fn all(k: u32) -> impl Iterator<Item = DyadicRational> {
        (0..=1u64 << k).map(move |m| DyadicRational::from_numerator(m, k).expect("m <= 2^k"))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn precision(&self) -> u32 {
        self.bits.len() as u32
    }

    pub fn is_unit(&self) -> bool {
        self.unit
    }

    /// Numerator over `2^k`; `None` if more than `k` digits are needed.
    pub fn numerator_at(&self, k: u32) -> Option<u64> {
        if self.unit {
            return (k <= 63).then(|| 1u64 << k);
        }
        let p = self.precision();
        let trailing = self.bits.iter().rev().take_while(|b| !**b).count() as u32;
        let significant = p - trailing;
        if significant > k || k > 63 {
            return None;
        }
        let m = self.bits[..significant as usize]
            .iter()
            .fold(0u64, |acc, &b| acc << 1 | b as u64);
        Some(m << (k - significant))
    }

    pub fn value(&self) -> BigRational {
        if self.unit {
            return BigRational::one();
        }
        let mut num = BigInt::zero();
        for &b in &self.bits {
            num = num * 2 + u8::from(b);
        }
        BigRational::new(num, BigInt::from(2).pow(self.precision()))
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value().cmp(&other.value())
    }
}

/// Parameter `α ∈ (0, 1) \ {1/2}` as an exact rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SalemParams {
    alpha: BigRational,
}

impl SalemParams {
    pub fn new(alpha: BigRational) -> Result<Self> {
        let half = BigRational::new(1.into(), 2.into());
        if alpha <= BigRational::zero() || alpha >= BigRational::one() || alpha == half {
            return Err(Error::InvalidAlpha(alpha.to_string()));
        }
        Ok(SalemParams { alpha })
    }

    pub fn from_ratio(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidAlpha(format!("{p}/{q}")));
        }
        SalemParams::new(BigRational::new(p.into(), q.into()))
    }

    /// `α = 1/m`, valid for `m >= 3`.
    pub fn reciprocal(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidAlpha("1/0".into()));
        }
        SalemParams::new(BigRational::new(1.into(), BigInt::from(m)))
    }

    pub fn alpha(&self) -> &BigRational {
        &self.alpha
    }
}

/// `L_α(x)`, unwinding the functional equation from the last digit.
pub fn eval_dyadic(params: &SalemParams, x: &DyadicRational) -> BigRational {
    if x.is_unit() {
        return BigRational::one();
    }
    let alpha = &params.alpha;
    let upper = BigRational::one() - alpha;
    x.bits().iter().rev().fold(BigRational::zero(), |v, &bit| {
        if bit {
            &upper * v + alpha
        } else {
            alpha * v
        }
    })
}

/// `Σ_{i=1}^k x_i B^{x_1 + ... + x_{i-1}} (B + 1)^{-i}`, which is
/// `L_{1/(B+1)}(x)` written as a series. The unit evaluates to 1.
pub fn series_value(branching: u64, x: &DyadicRational) -> Result<BigRational> {
    if branching < 2 {
        return Err(Error::OutOfRange(format!("branching {branching} < 2")));
    }
    if x.is_unit() {
        return Ok(BigRational::one());
    }
    let b = BigInt::from(branching);
    let mass = BigInt::from(branching + 1);
    let k = x.precision();
    // common denominator (B+1)^k
    let mut numer = BigInt::zero();
    let mut prefix = BigInt::one();
    for (i, &bit) in x.bits().iter().enumerate() {
        if bit {
            numer += &prefix * Pow::pow(&mass, k - 1 - i as u32);
            prefix *= &b;
        }
    }
    Ok(BigRational::new(numer, Pow::pow(mass, k)))
}

/// Checks `L(x/2) = α L(x)` and `L((x+1)/2) = (1-α) L(x) + α` at every
/// `k`-bit dyadic `x`, including `x = 1`.
pub fn check_functional_equation(params: &SalemParams, k: u32) -> bool {
    let alpha = params.alpha();
    let upper = BigRational::one() - alpha;
    let half = 1u64 << k;
    (0..=half).all(|m| {
        let x = DyadicRational::from_numerator(m, k).expect("m <= 2^k");
        let lower_x = DyadicRational::from_numerator(m, k + 1).expect("m <= 2^(k+1)");
        let upper_x = DyadicRational::from_numerator(m + half, k + 1).expect("m + 2^k <= 2^(k+1)");
        let lx = eval_dyadic(params, &x);
        eval_dyadic(params, &lower_x) == alpha * &lx
            && eval_dyadic(params, &upper_x) == &upper * &lx + alpha
    })
}

//! Closed forms for the exactly self-similar rules.
//!
//! For F_D, G_D, H_2 and H_3 every live cell at an even step spawns `B`
//! copies at the next odd step, which gives `num(n) = B^{popcount(n)}` and
//! `cum(2^k - 1) = (B + 1)^k`. These formulas never touch the engine.

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};

use crate::error::{Error, Result};
use crate::rules::{LatticeKind, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClosedFormFamily {
    branching: u64,
}

impl ClosedFormFamily {
    pub fn new(branching: u64) -> Result<Self> {
        if branching == 0 {
            return Err(Error::OutOfRange("branching factor must be positive".into()));
        }
        Ok(ClosedFormFamily { branching })
    }

    /// F_D: `B = 2D`.
    pub fn f_d(dim: u32) -> Result<Self> {
        LatticeKind::square(dim)?;
        ClosedFormFamily::new(2 * dim as u64)
    }

    /// G_D: `B = 2^D`.
    pub fn g_d(dim: u32) -> Result<Self> {
        LatticeKind::square(dim)?;
        if dim >= 64 {
            return Err(Error::OutOfRange(format!("2^{dim} does not fit in u64")));
        }
        ClosedFormFamily::new(1 << dim)
    }

    /// H_2 (`a + b + d + f`): `B = 4`.
    pub fn h2() -> Self {
        ClosedFormFamily { branching: 4 }
    }

    /// H_3 (`b + d + f`): `B = 3`.
    pub fn h3() -> Self {
        ClosedFormFamily { branching: 3 }
    }

    /// Family of a rule, when it has one of the known closed forms.
    pub fn for_rule(rule: &Rule) -> Option<Self> {
        match rule.lattice() {
            LatticeKind::Square(d) if rule.is_f_d() => ClosedFormFamily::f_d(d).ok(),
            LatticeKind::Square(d) if rule.is_g_d() => ClosedFormFamily::g_d(d).ok(),
            LatticeKind::Hexagonal if *rule == Rule::hexagonal(2).ok()? => Some(Self::h2()),
            LatticeKind::Hexagonal if *rule == Rule::hexagonal(3).ok()? => Some(Self::h3()),
            _ => None,
        }
    }

    pub fn branching(&self) -> u64 {
        self.branching
    }

    /// Cumulative multiplier per doubling of time, `B + 1`.
    pub fn mass(&self) -> u64 {
        self.branching + 1
    }

    /// `num(n) = B^{popcount(n)}`.
    pub fn closed_num(&self, n: u64) -> BigUint {
        BigUint::from(self.branching).pow(n.count_ones())
    }

    /// `cum(2^k - 1) = (B + 1)^k`.
    pub fn closed_cum_pow2(&self, k: u32) -> BigUint {
        BigUint::from(self.mass()).pow(k)
    }

    /// `cum(n - 1)` from the binary digits of `n = Σ_{i=1}^k x_i 2^{k-i}`:
    /// `Σ_i x_i B^{x_1 + ... + x_{i-1}} (B + 1)^{k-i}`, and 0 for `n = 0`.
    ///
    /// `n = 2^k` is accepted and contributes a leading digit `x_0 = 1`.
    pub fn cum_decompose(&self, n: u64, k: u32) -> Result<BigUint> {
        let limit = 1u128 << k;
        if n as u128 > limit {
            return Err(Error::OutOfRange(format!("n = {n} exceeds 2^{k}")));
        }
        let b = BigUint::from(self.branching);
        let mass = BigUint::from(self.mass());
        let mut total = BigUint::zero();
        let mut prefix = BigUint::one(); // B^{number of 1-digits so far}
        for i in 0..=k {
            // digit x_i has weight 2^{k-i}
            let digit = (n as u128 >> (k - i)) & 1 == 1;
            if digit {
                total += &prefix * mass.clone().pow(k - i);
                prefix *= &b;
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn closed_num_examples() {
        assert_eq!(ClosedFormFamily::f_d(1).unwrap().closed_num(5), big(4));
        assert_eq!(ClosedFormFamily::g_d(3).unwrap().closed_num(0), big(1));
        assert_eq!(ClosedFormFamily::h3().closed_num(3), big(9));
        assert_eq!(ClosedFormFamily::h2().closed_num(7), big(64));
    }

    #[test]
    fn closed_cum_examples() {
        assert_eq!(ClosedFormFamily::f_d(1).unwrap().closed_cum_pow2(4), big(81));
        assert_eq!(ClosedFormFamily::g_d(2).unwrap().closed_cum_pow2(3), big(125));
        assert_eq!(ClosedFormFamily::h2().closed_cum_pow2(2), big(25));
        assert_eq!(ClosedFormFamily::h3().closed_cum_pow2(0), big(1));
    }

    #[test]
    fn decomposition_worked_example() {
        let f1 = ClosedFormFamily::f_d(1).unwrap();
        assert_eq!(f1.cum_decompose(22, 5).unwrap(), big(81 + 2 * 9 + 4 * 3));
        assert_eq!(f1.cum_decompose(0, 5).unwrap(), big(0));
        let f2 = ClosedFormFamily::f_d(2).unwrap();
        assert_eq!(f2.cum_decompose(8, 3).unwrap(), big(125));
        assert!(f2.cum_decompose(9, 3).is_err());
    }

    #[test]
    fn decomposition_against_summed_num() {
        // cum(n - 1) = Σ_{m < n} B^{popcount(m)}
        for fam in [ClosedFormFamily::f_d(3).unwrap(), ClosedFormFamily::h3()] {
            let mut acc = BigUint::zero();
            for n in 0..=256u64 {
                assert_eq!(fam.cum_decompose(n, 8).unwrap(), acc, "n = {n}");
                acc += fam.closed_num(n);
            }
        }
    }

    #[test]
    fn doubling_and_full_range() {
        for fam in [ClosedFormFamily::g_d(4).unwrap(), ClosedFormFamily::h2()] {
            for k in 0..10 {
                assert_eq!(
                    fam.closed_cum_pow2(k + 1),
                    fam.closed_cum_pow2(k) * fam.mass()
                );
                assert_eq!(fam.cum_decompose(1 << k, k).unwrap(), fam.closed_cum_pow2(k));
            }
        }
    }

    #[test]
    fn families_of_rules() {
        assert_eq!(
            ClosedFormFamily::for_rule(&Rule::g_d(3).unwrap()).map(|f| f.branching()),
            Some(8)
        );
        assert_eq!(ClosedFormFamily::for_rule(&Rule::hexagonal(2).unwrap()), Some(ClosedFormFamily::h2()));
        assert_eq!(ClosedFormFamily::for_rule(&Rule::hexagonal(3).unwrap()), Some(ClosedFormFamily::h3()));
        assert_eq!(ClosedFormFamily::for_rule(&Rule::triangular(2).unwrap()), None);
        assert!(ClosedFormFamily::f_d(0).is_err());
    }
}

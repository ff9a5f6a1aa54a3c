//! Number-theoretic invariants of levels.
//!
//! The index `d`, the elliptic point counts `eps2`/`eps3`, the cusp count
//! `epsinf` and the genus of X0(N), together with the fibre counting
//! constants `xi(-1)`, `xi(-3)` and `k` that drive the special fibre
//! geometry at a prime p dividing N.
//!
//! Everything is computed from the prime-power formulas and multiplied out;
//! the brute-force counterparts live in [`crate::oracle`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Rational;

/// Levels whose Edixhoven models need ad hoc treatment (5, 7, 13) or whose
/// curve has genus zero after the standard blow-downs (25).
pub const EXCLUDED_LEVELS: [u64; 4] = [5, 7, 13, 25];

/// One prime block of a level: `N = p^n * m` with `p` not dividing `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelBlock {
    pub p: u64,
    pub n: u32,
    #[serde(rename = "M")]
    pub m: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactoredLevel {
    #[serde(rename = "N")]
    pub level: u64,
    pub blocks: Vec<LevelBlock>,
    pub coprime_to_6: bool,
    pub excluded: bool,
    pub genus_ge_2: bool,
}

impl FactoredLevel {
    pub fn block(&self, p: u64) -> Option<&LevelBlock> {
        self.blocks.iter().find(|b| b.p == p)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.blocks.iter().map(|b| b.p)
    }
}

/// Invariants of X0(N).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Invariants {
    pub d: u64,
    pub eps2: u64,
    pub eps3: u64,
    pub epsinf: u64,
    pub g: u64,
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Trial-division factorization, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn factor_level(level: u64) -> Result<FactoredLevel> {
    if level == 0 {
        return Err(Error::invalid("level must be a positive integer"));
    }
    let blocks = factorize(level)
        .into_iter()
        .map(|(p, n)| LevelBlock {
            p,
            n,
            m: level / p.pow(n),
        })
        .collect::<Vec<_>>();
    let mut factored = FactoredLevel {
        level,
        blocks,
        coprime_to_6: gcd(level, 6) == 1,
        excluded: EXCLUDED_LEVELS.contains(&level),
        genus_ge_2: false,
    };
    factored.genus_ge_2 = invariants(&factored).g >= 2;
    Ok(factored)
}

pub fn euler_phi_prime_power(p: u64, e: u32) -> u64 {
    if e == 0 {
        1
    } else {
        p.pow(e - 1) * (p - 1)
    }
}

pub(crate) fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Legendre symbol `(a | p)` for an odd prime `p`.
pub fn kronecker_symbol(a: i64, p: u64) -> Result<i8> {
    if p == 2 || !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not an odd prime")));
    }
    let r = a.rem_euclid(p as i64) as u64;
    if r == 0 {
        return Ok(0);
    }
    Ok(if pow_mod(r, (p - 1) / 2, p) == 1 { 1 } else { -1 })
}

/// `xi(m) = (1 - (m | p)) / 2` for `m` in {-1, -3}.
pub fn xi(m: i64, p: u64) -> Result<u8> {
    if m != -1 && m != -3 {
        return Err(Error::invalid(format!("xi is only defined for m = -1, -3 (got {m})")));
    }
    if p < 5 || !is_prime(p) {
        return Err(Error::invalid(format!("xi needs a prime p >= 5 (got {p})")));
    }
    let symbol = kronecker_symbol(m, p)?;
    Ok(((1 - symbol) / 2) as u8)
}

fn prime_power_invariants(p: u64, e: u32) -> (u64, u64, u64, u64) {
    let d = p.pow(e - 1) * (p + 1);
    let eps2 = match p {
        2 => u64::from(e == 1),
        _ => (1 + i64::from(kronecker_symbol(-1, p).expect("odd prime"))) as u64,
    };
    let eps3 = match p {
        2 => 0,
        3 => u64::from(e == 1),
        _ => (1 + i64::from(kronecker_symbol(-3, p).expect("odd prime"))) as u64,
    };
    let epsinf = if e.is_multiple_of(2) {
        p.pow(e / 2 - 1) * (p + 1)
    } else {
        2 * p.pow((e - 1) / 2)
    };
    (d, eps2, eps3, epsinf)
}

/// Exact genus `1 + d/12 - eps2/4 - eps3/3 - epsinf/2`; zero for N <= 2.
fn genus_from(level: u64, d: u64, eps2: u64, eps3: u64, epsinf: u64) -> u64 {
    if level <= 2 {
        return 0;
    }
    let r = |n: u64, den: i64| Rational::new(BigInt::from(n), BigInt::from(den));
    let g = Rational::one() + r(d, 12) - r(eps2, 4) - r(eps3, 3) - r(epsinf, 2);
    assert!(
        g.is_integer() && !g.is_negative(),
        "genus of X0({level}) is not a nonnegative integer: {g}"
    );
    g.to_integer().to_u64().expect("genus fits in u64")
}

pub fn invariants(level: &FactoredLevel) -> Invariants {
    let (mut d, mut eps2, mut eps3, mut epsinf) = (1u64, 1u64, 1u64, 1u64);
    for b in &level.blocks {
        let (bd, b2, b3, binf) = prime_power_invariants(b.p, b.n);
        d *= bd;
        eps2 *= b2;
        eps3 *= b3;
        epsinf *= binf;
    }
    let g = genus_from(level.level, d, eps2, eps3, epsinf);
    Invariants {
        d,
        eps2,
        eps3,
        epsinf,
        g,
    }
}

/// Invariants of an unfactored level.
pub fn invariants_of(level: u64) -> Result<Invariants> {
    Ok(invariants(&factor_level(level)?))
}

/// `epsinf(p^n)` alone.
pub fn cusps_prime_power(p: u64, n: u32) -> u64 {
    prime_power_invariants(p, n).3
}

pub(crate) fn check_fibre_prime(p: u64, m: u64) -> Result<()> {
    if p < 5 || !is_prime(p) {
        return Err(Error::invalid(format!("fibre prime must be a prime >= 5 (got {p})")));
    }
    if m == 0 || gcd(m, 6 * p) != 1 {
        return Err(Error::invalid(format!("M = {m} must be coprime to 6p = {}", 6 * p)));
    }
    Ok(())
}

/// The exact rational value of `k(p, M)`, before the integrality check.
pub(crate) fn k_rational(p: u64, m: u64) -> Result<Rational> {
    check_fibre_prime(p, m)?;
    let inv = invariants_of(m)?;
    let x1 = xi(-1, p)?;
    let x3 = xi(-3, p)?;
    let r = |n: u64, den: u64| Rational::new(BigInt::from(n), BigInt::from(den));
    Ok(r((p - 1) * inv.d, 12) - r(u64::from(x1) * inv.eps2, 2) - r(u64::from(x3) * inv.eps3, 3))
}

/// Number of points where each Igusa component meets all the others.
pub fn k_count(p: u64, m: u64) -> Result<u64> {
    let k = k_rational(p, m)?;
    if !k.is_integer() || k.is_negative() {
        return Err(Error::inconsistent(format!(
            "k({p}, {m}) = {k} is not a nonnegative integer"
        )));
    }
    Ok(k.to_integer().to_u64().expect("k fits in u64"))
}

/// `min(|n - 2a|, |n - 2a2|)`.
pub fn mu(a: u32, a2: u32, n: u32) -> Result<u32> {
    if a > n || a2 > n {
        return Err(Error::invalid(format!("indices {a}, {a2} out of range 0..={n}")));
    }
    let dist = |x: u32| (i64::from(n) - 2 * i64::from(x)).unsigned_abs() as u32;
    Ok(dist(a).min(dist(a2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_symbol(-1, 13).unwrap(), 1);
        assert_eq!(kronecker_symbol(13, 13).unwrap(), 0);
        assert_eq!(kronecker_symbol(-3, 11).unwrap(), -1);
        assert!(kronecker_symbol(5, 2).is_err());
        assert!(kronecker_symbol(5, 9).is_err());
    }

    #[test]
    fn kronecker_matches_square_enumeration() {
        for p in [5u64, 7, 11, 13, 17, 19, 23, 29, 31, 37, 97] {
            let squares: Vec<u64> = (1..p).map(|x| x * x % p).collect();
            for a in -40i64..40 {
                let r = a.rem_euclid(p as i64) as u64;
                let expected = if r == 0 {
                    0
                } else if squares.contains(&r) {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker_symbol(a, p).unwrap(), expected, "({a}|{p})");
            }
        }
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi(-1, 13).unwrap(), 0);
        assert_eq!(xi(-1, 23).unwrap(), 1);
        assert_eq!(xi(-3, 5).unwrap(), 1);
        assert_eq!(xi(-3, 13).unwrap(), 0);
        assert!(xi(-2, 13).is_err());
        assert!(xi(-1, 3).is_err());
    }

    #[test]
    fn xi_tracks_residue_classes() {
        for p in (5..500u64).filter(|&p| is_prime(p)) {
            assert_eq!(xi(-1, p).unwrap() == 0, p % 4 == 1);
            assert_eq!(xi(-3, p).unwrap() == 0, p % 3 == 1);
        }
    }

    #[test]
    fn invariants_examples() {
        assert_eq!(
            invariants_of(169).unwrap(),
            Invariants {
                d: 182,
                eps2: 2,
                eps3: 2,
                epsinf: 14,
                g: 8
            }
        );
        assert_eq!(
            invariants_of(1).unwrap(),
            Invariants {
                d: 1,
                eps2: 1,
                eps3: 1,
                epsinf: 1,
                g: 0
            }
        );
        assert_eq!(
            invariants_of(23).unwrap(),
            Invariants {
                d: 24,
                eps2: 0,
                eps3: 0,
                epsinf: 2,
                g: 2
            }
        );
        assert_eq!(invariants_of(11).unwrap().g, 1);
        assert_eq!(invariants_of(49).unwrap().g, 1);
        assert_eq!(invariants_of(25).unwrap().g, 0);
    }

    #[test]
    fn factor_level_examples() {
        let f = factor_level(175).unwrap();
        assert_eq!(
            f.blocks,
            vec![LevelBlock { p: 5, n: 2, m: 7 }, LevelBlock { p: 7, n: 1, m: 25 }]
        );
        assert!(!f.coprime_to_6 || gcd(175, 6) == 1);
        assert_eq!(factor_level(23).unwrap().blocks, vec![LevelBlock { p: 23, n: 1, m: 1 }]);
        let one = factor_level(1).unwrap();
        assert!(one.blocks.is_empty());
        assert!(one.coprime_to_6);
        assert!(factor_level(25).unwrap().excluded);
        assert!(!factor_level(15).unwrap().coprime_to_6);
        assert!(factor_level(0).is_err());
    }

    #[test]
    fn k_examples() {
        assert_eq!(k_count(23, 1).unwrap(), 1);
        assert_eq!(k_count(11, 1).unwrap(), 0);
        assert_eq!(k_count(13, 1).unwrap(), 1);
        assert!(k_count(3, 1).is_err());
        assert!(k_count(5, 5).is_err());
        assert!(k_count(7, 9).is_err());
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu(0, 1, 3).unwrap(), 1);
        assert_eq!(mu(1, 1, 2).unwrap(), 0);
        assert_eq!(mu(0, 2, 5).unwrap(), 1);
        assert!(mu(0, 6, 5).is_err());
    }

    #[test]
    fn k_is_integral_on_the_grid() {
        for p in (5..=200u64).filter(|&p| is_prime(p)) {
            for m in (1..=500u64).filter(|&m| gcd(m, 6 * p) == 1) {
                k_count(p, m).unwrap_or_else(|e| panic!("k({p},{m}): {e}"));
            }
        }
    }
}

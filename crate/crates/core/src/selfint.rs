//! Arakelov pairings of vertical divisors and the finite part of the
//! self-intersection of the relative dualizing sheaf.
//!
//! All pairings are exact rational multiples of `log p`. Floating point
//! appears only in the reporting fields.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, FactoredLevel, Invariants};
use crate::divisors::{solve_vm, CuspSide, VerticalDivisor};
use crate::error::{Error, Result};
use crate::fiber::{FiberModel, ModelTag};
use crate::linalg::Rational;
use crate::minimal::fiber_for_level;

mod rational_string {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use crate::linalg::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

/// `coeff * log p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogWeightedRational {
    pub p: u64,
    #[serde(with = "rational_string")]
    pub coeff: Rational,
}

impl LogWeightedRational {
    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.coeff) * (self.p as f64).ln()
    }
}

/// The contribution of one prime `p | N` to the finite part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeCoefficient {
    pub p: u64,
    pub n: u32,
    #[serde(rename = "M")]
    pub m: u64,
    /// Coefficient of `log p`.
    #[serde(with = "rational_string")]
    pub coeff: Rational,
}

/// The finite part of `<omega, omega>` coming from the vertical divisors,
/// as one exact coefficient of `log p` per prime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePartResult {
    #[serde(rename = "N")]
    pub level: u64,
    pub g: u64,
    pub primes: Vec<PrimeCoefficient>,
    #[serde(rename = "b_float")]
    pub float_value: f64,
    /// `b_float / (g log N)`.
    #[serde(rename = "ratio")]
    pub ratio_to_g_log_n: f64,
}

impl FinitePartResult {
    pub fn log_weighted(&self) -> Vec<LogWeightedRational> {
        self.primes
            .iter()
            .map(|c| LogWeightedRational {
                p: c.p,
                coeff: c.coeff.clone(),
            })
            .collect()
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    // numerator and denominator may overflow f64 separately only for
    // astronomically large levels; scale them down together if so
    let (mut num, mut den) = (r.numer().clone(), r.denom().clone());
    let limit = BigInt::from(1u64) << 1000;
    while num.abs() > limit || den > limit {
        num >>= 64;
        den >>= 64;
        if den.is_zero() {
            den = BigInt::one();
        }
    }
    let to = |b: &BigInt| b.to_string().parse::<f64>().expect("decimal integer parses");
    to(&num) / to(&den)
}

/// `V^T A W` on one fibre.
pub fn pair_vertical(v: &VerticalDivisor, w: &VerticalDivisor, fiber: &FiberModel) -> Result<LogWeightedRational> {
    if v.p != fiber.p || w.p != fiber.p {
        return Err(Error::invalid(format!(
            "divisors over {} and {} paired on the fibre over {}",
            v.p, w.p, fiber.p
        )));
    }
    if v.coefficients.len() != fiber.len() || w.coefficients.len() != fiber.len() {
        return Err(Error::invalid("divisor and fibre have different numbers of components"));
    }
    Ok(LogWeightedRational {
        p: fiber.p,
        coeff: fiber.matrix.bilinear(&v.coefficients, &w.coefficients)?,
    })
}

/// `g/(g-1) <V0, Vinf> - (<V0, V0> + <Vinf, Vinf>)/(2g - 2)` as a coefficient
/// of `log p`.
pub fn combine_pairings(fiber: &FiberModel, g: u64, v0: &VerticalDivisor, vinf: &VerticalDivisor) -> Result<Rational> {
    if g < 2 {
        return Err(Error::invalid(format!("genus {g} is below 2")));
    }
    let g_r = Rational::from_integer(BigInt::from(g));
    let g1 = &g_r - Rational::one();
    let cross = pair_vertical(v0, vinf, fiber)?.coeff;
    let self0 = pair_vertical(v0, v0, fiber)?.coeff;
    let selfinf = pair_vertical(vinf, vinf, fiber)?.coeff;
    Ok(g_r * cross / &g1 - (self0 + selfinf) / (g1 * Rational::from_integer(BigInt::from(2))))
}

/// The exact coefficient for one fibre: solves for `V_0`, `V_inf`, then
/// pairs them.
pub fn fiber_coefficient(fiber: &FiberModel, g: u64) -> Result<Rational> {
    let v0 = solve_vm(fiber, g, CuspSide::Zero)?;
    let vinf = solve_vm(fiber, g, CuspSide::Infinity)?;
    combine_pairings(fiber, g, &v0, &vinf)
}

/// Checks that `level` is in the range where the finite part is defined,
/// returning its invariants.
pub fn check_admissible(level: &FactoredLevel) -> Result<Invariants> {
    crate::minimal::check_level(level)?;
    if level.level == 1 || level.level == 25 {
        return Err(Error::unsupported(level.level, "X0(N) has genus 0"));
    }
    let inv = arith::invariants(level);
    if inv.g < 2 {
        return Err(Error::GenusTooSmall {
            level: level.level,
            genus: inv.g,
        });
    }
    Ok(inv)
}

/// The fibres over every `p | N` on the minimal model.
pub fn minimal_fibers(level: &FactoredLevel) -> Result<Vec<FiberModel>> {
    level
        .primes()
        .map(|p| fiber_for_level(level, p, ModelTag::Minimal))
        .collect()
}

/// The finite part (b) for one level.
pub fn finite_part(level: u64) -> Result<FinitePartResult> {
    let factored = arith::factor_level(level)?;
    let inv = check_admissible(&factored)?;
    let mut primes = Vec::with_capacity(factored.blocks.len());
    for fiber in minimal_fibers(&factored)? {
        primes.push(PrimeCoefficient {
            p: fiber.p,
            n: fiber.n,
            m: fiber.m,
            coeff: fiber_coefficient(&fiber, inv.g)?,
        });
    }
    Ok(finish(level, inv.g, primes))
}

fn finish(level: u64, g: u64, primes: Vec<PrimeCoefficient>) -> FinitePartResult {
    let float_value: f64 = primes
        .iter()
        .map(|c| rational_to_f64(&c.coeff) * (c.p as f64).ln())
        .sum();
    let g_log_n = g as f64 * (level as f64).ln();
    FinitePartResult {
        level,
        g,
        primes,
        float_value,
        ratio_to_g_log_n: float_value / g_log_n,
    }
}

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// The polynomial `f(p, n, M)` with `n g + f / (12 d(N) (p - 1))` equal to the
/// per-prime coefficient of the finite part.
pub fn f_polynomial(p: u64, n: u32, m: u64) -> Result<Rational> {
    arith::check_fibre_prime(p, m)?;
    if n == 0 {
        return Err(Error::invalid("the exponent n of p in N must be at least 1"));
    }
    let pn = p.pow(n);
    let inv_n = arith::invariants_of(pn * m)?;
    let inv_m = arith::invariants_of(m)?;
    let d_pn = int((pn / p * (p + 1)) as i64);
    let xi3 = int(i64::from(arith::xi(-3, p)?));
    let b = |x: u64| int(x as i64);

    let d = b(inv_n.d);
    let (e2, e3, einf) = (b(inv_n.eps2), b(inv_n.eps3), b(inv_n.epsinf));
    let (dm, e2m, e3m, einfm) = (b(inv_m.d), b(inv_m.eps2), b(inv_m.eps3), b(inv_m.epsinf));
    let nn = b(u64::from(n));
    let p1 = b(p - 1);
    let np1 = &nn * &p1;
    let delta = if m == 1 { int(1) } else { int(0) };
    let parity = if n.is_multiple_of(2) { int(2) } else { int(0) };

    let line1 = int(2) * &d * &d
        - int(8) * &d * &dm * (b(pn / p) - int(1))
        - int(6) * (&np1 - int(4)) * &d * &einf
        - int(96) * &d * &einfm;
    let line2 = -((int(3) * (&e2 + int(2) * &e3 - int(4)) * &nn - int(2) * &e3
        + int(2) * &parity * (&xi3 * &e3m - int(9) * &delta))
        * &d
        * &p1);
    let line3 = int(4) * (int(12) - int(3) * &e2 - int(4) * &e3) * &d
        + int(144) * d_pn * &einfm * &einfm
        + int(12) * (&np1 + int(2)) * (int(3) * &e2 + int(4) * &e3 - int(12)) * &einf;
    let line4 = int(2)
        * (&np1 + int(2))
        * (int(9) * &e2 * (&e2m - int(4)) + int(16) * &e3 * (&e3m - int(3)) + int(12) * &e2 * &e3);
    Ok(line1 + line2 + line3 + line4)
}

/// `n g + f(p, n, M) / (12 d(N) (p - 1))`.
pub fn closed_form_coefficient(p: u64, n: u32, m: u64) -> Result<Rational> {
    let inv_n = arith::invariants_of(p.pow(n) * m)?;
    let f = f_polynomial(p, n, m)?;
    Ok(int(i64::from(n) * inv_n.g as i64) + f / int(12 * inv_n.d as i64 * (p as i64 - 1)))
}

/// Which levels a sweep visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepFilter {
    /// Primes.
    Prime,
    /// `p^n` with `n >= 2`.
    PrimePower,
    /// Every level.
    All,
}

fn prime_sieve(max: u64) -> Vec<bool> {
    let max = max as usize;
    let mut sieve = vec![true; max + 1];
    sieve[0] = false;
    if max >= 1 {
        sieve[1] = false;
    }
    let mut i = 2;
    while i * i <= max {
        if sieve[i] {
            for j in (i * i..=max).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    sieve
}

/// Levels in `[min, max]` matching the filter that admit a finite part
/// computation, in increasing order.
pub fn sweep_levels(min: u64, max: u64, filter: SweepFilter) -> Vec<u64> {
    if max < min {
        return Vec::new();
    }
    let candidates: Vec<u64> = match filter {
        SweepFilter::Prime => {
            let sieve = prime_sieve(max);
            (min..=max).filter(|&n| sieve[n as usize]).collect()
        }
        SweepFilter::PrimePower => {
            let root = (max as f64).sqrt() as u64 + 1;
            let sieve = prime_sieve(root);
            let mut out = Vec::new();
            for p in (5..=root).filter(|&p| sieve[p as usize]) {
                let mut q = p.saturating_mul(p);
                while q <= max {
                    if q >= min {
                        out.push(q);
                    }
                    q = q.saturating_mul(p);
                }
            }
            out.sort_unstable();
            out
        }
        SweepFilter::All => (min..=max).collect(),
    };
    candidates
        .into_iter()
        .filter(|&n| {
            arith::factor_level(n)
                .ok()
                .is_some_and(|f| check_admissible(&f).is_ok())
        })
        .collect()
}

/// Finite parts for many levels, computed in parallel and returned in the
/// order of `levels`.
pub fn sweep(levels: &[u64]) -> Vec<Result<FinitePartResult>> {
    levels.par_iter().map(|&n| finite_part(n)).collect()
}

/// One row of the asymptotic comparison against `g log N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    #[serde(rename = "N")]
    pub level: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primes: Option<Vec<PrimeCoefficient>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_float: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_log_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// `3 g log N`: the expected leading term of the whole
    /// self-intersection, whose archimedean `2 g log N` part is cited from
    /// the literature and not computed here.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

pub fn asymptotic_report(levels: &[u64]) -> Vec<AsymptoticRow> {
    levels
        .iter()
        .zip(sweep(levels))
        .map(|(&level, result)| match result {
            Ok(r) => {
                let g_log_n = r.g as f64 * (level as f64).ln();
                AsymptoticRow {
                    level,
                    g: Some(r.g),
                    primes: Some(r.primes),
                    b_float: Some(r.float_value),
                    g_log_n: Some(g_log_n),
                    ratio: Some(r.ratio_to_g_log_n),
                    reference_total: Some(3.0 * g_log_n),
                    skipped: None,
                }
            }
            Err(e) => AsymptoticRow {
                level,
                g: None,
                primes: None,
                b_float: None,
                g_log_n: None,
                ratio: None,
                reference_total: None,
                skipped: Some(e.to_string()),
            },
        })
        .collect()
}

/// Largest `|ratio - 1|` over the successful rows.
pub fn max_ratio_deviation(results: &[FinitePartResult]) -> f64 {
    results
        .iter()
        .map(|r| (r.ratio_to_g_log_n - 1.0).abs())
        .fold(0.0, f64::max)
}

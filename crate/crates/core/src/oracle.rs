//! Brute-force counterparts of the closed formulas in [`crate::arith`].
//!
//! Nothing here calls into `arith` formulas. Invariants of X0(N) are read off
//! the permutation action of `S`, `ST` and `T` on the right cosets of
//! Gamma0(N), realised as `P^1(Z/N)`; supersingular j-invariants are found by
//! evaluating the Hasse invariant of the Legendre family on all of F_{p^2}.

use std::collections::{HashMap, HashSet};

use num_integer::Integer;

/// Invariants of X0(N) counted on `P^1(Z/N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CosetCounts {
    pub index: u64,
    pub eps2: u64,
    pub eps3: u64,
    pub cusps: u64,
    pub genus: u64,
}

/// Canonical representative of `(c : d)` under scaling by units mod `n`.
fn normalize(c: u64, d: u64, n: u64) -> (u64, u64) {
    let (c, d) = (c % n, d % n);
    if n == 1 {
        return (0, 0);
    }
    if c == 0 {
        return (0, 1);
    }
    let g = c.gcd(&n);
    let h = n / g;
    // u must satisfy u * (c / g) = 1 mod h; the remaining freedom is u -> u + t h.
    let u0 = if h == 1 { 0 } else { inverse_mod(c / g % h, h) };
    let mut best = u64::MAX;
    for t in 0..g {
        let u = u0 + t * h;
        if u.gcd(&n) == 1 {
            best = best.min(((u as u128 * d as u128) % n as u128) as u64);
        }
    }
    (g, best)
}

fn inverse_mod(a: u64, m: u64) -> u64 {
    let e = (a as i128).extended_gcd(&(m as i128));
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m as i128) as u64
}

fn cycle_count(perm: &[usize]) -> u64 {
    let mut seen = vec![false; perm.len()];
    let mut cycles = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
        }
    }
    cycles
}

/// Enumerates `P^1(Z/N)` by orbit search from `(0 : 1)` and counts cusps,
/// elliptic points and the genus from the induced permutations.
pub fn coset_counts(level: u64) -> CosetCounts {
    assert!(level >= 1);
    let n = level;
    let act_s = |(c, d): (u64, u64)| normalize(d, n - c % n, n);
    let act_t = |(c, d): (u64, u64)| normalize(c, c + d, n);

    let start = normalize(0, 1, n);
    let mut index_of: HashMap<(u64, u64), usize> = HashMap::from([(start, 0)]);
    let mut points = vec![start];
    let mut i = 0;
    while i < points.len() {
        for next in [act_s(points[i]), act_t(points[i])] {
            if let std::collections::hash_map::Entry::Vacant(e) = index_of.entry(next) {
                e.insert(points.len());
                points.push(next);
            }
        }
        i += 1;
    }

    let perm =
        |f: &dyn Fn((u64, u64)) -> (u64, u64)| -> Vec<usize> { points.iter().map(|&x| index_of[&f(x)]).collect() };
    let s = perm(&act_s);
    let t = perm(&act_t);
    // x . (ST) = (x . S) . T
    let st: Vec<usize> = s.iter().map(|&j| t[j]).collect();

    let fixed = |p: &[usize]| p.iter().enumerate().filter(|&(i, &j)| i == j).count() as u64;
    let index = points.len() as u64;
    let (c2, c3, cinf) = (cycle_count(&s), cycle_count(&st), cycle_count(&t));
    // Riemann-Hurwitz for the cover X0(N) -> X(1) branched over i, rho, infinity.
    let twice_genus_minus_2 = 3 * index as i64 - (c2 + c3 + cinf) as i64 - 2 * index as i64;
    CosetCounts {
        index,
        eps2: fixed(&s),
        eps3: fixed(&st),
        cusps: cinf,
        genus: ((twice_genus_minus_2 + 2) / 2) as u64,
    }
}

/// Arithmetic in F_{p^2} = F_p[t] / (t^2 - r) with r a non-residue.
#[derive(Debug, Clone, Copy)]
struct Fp2 {
    p: u64,
    r: u64,
}

type Elt = (u64, u64);

impl Fp2 {
    fn new(p: u64) -> Self {
        let r = (2..p)
            .find(|&r| (1..p).all(|x| x * x % p != r))
            .expect("odd primes have non-residues");
        Fp2 { p, r }
    }

    fn add(&self, a: Elt, b: Elt) -> Elt {
        ((a.0 + b.0) % self.p, (a.1 + b.1) % self.p)
    }

    fn mul(&self, a: Elt, b: Elt) -> Elt {
        let p = self.p;
        ((a.0 * b.0 + a.1 * b.1 % p * self.r) % p, (a.0 * b.1 + a.1 * b.0) % p)
    }

    fn pow(&self, mut a: Elt, mut e: u64) -> Elt {
        let mut acc = (1, 0);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    fn inv(&self, a: Elt) -> Elt {
        self.pow(a, self.p * self.p - 2)
    }

    fn scalar(&self, c: u64) -> Elt {
        (c % self.p, 0)
    }
}

fn binomial_mod(n: u64, k: u64, p: u64) -> u64 {
    // n < p, so the factorials are invertible
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num = num * ((n - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    num * crate::arith::pow_mod(den, p - 2, p) % p
}

/// Number of supersingular j-invariants in F_p-bar (all lie in F_{p^2})
/// other than 0 and 1728, for a prime `p >= 5`.
///
/// `y^2 = x(x-1)(x-lambda)` is supersingular exactly when
/// `sum_i binom(m, i)^2 lambda^i = 0` with `m = (p-1)/2`.
pub fn supersingular_j_count(p: u64) -> u64 {
    assert!(p >= 5 && crate::arith::is_prime(p));
    let field = Fp2::new(p);
    let m = (p - 1) / 2;
    let coeffs: Vec<u64> = (0..=m).map(|i| binomial_mod(m, i, p).pow(2) % p).collect();
    let mut js: HashSet<Elt> = HashSet::new();
    for a in 0..p {
        for b in 0..p {
            let lambda = (a, b);
            if lambda == (0, 0) || lambda == (1, 0) {
                continue;
            }
            let value = coeffs
                .iter()
                .rev()
                .fold((0, 0), |acc, &c| field.add(field.mul(acc, lambda), field.scalar(c)));
            if value != (0, 0) {
                continue;
            }
            // j = 256 (lambda^2 - lambda + 1)^3 / (lambda^2 (lambda - 1)^2)
            let l2 = field.mul(lambda, lambda);
            let minus_lambda = field.mul(lambda, field.scalar(p - 1));
            let q = field.add(field.add(l2, minus_lambda), field.scalar(1));
            let lm1 = field.add(lambda, field.scalar(p - 1));
            let den = field.mul(l2, field.mul(lm1, lm1));
            let j = field.mul(field.mul(field.scalar(256), field.pow(q, 3)), field.inv(den));
            js.insert(j);
        }
    }
    js.remove(&(0, 0));
    js.remove(&field.scalar(1728));
    js.len() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_levels() {
        let c = coset_counts(1);
        assert_eq!((c.index, c.eps2, c.eps3, c.cusps, c.genus), (1, 1, 1, 1, 0));
        let c = coset_counts(11);
        assert_eq!((c.index, c.eps2, c.eps3, c.cusps, c.genus), (12, 0, 0, 2, 1));
        let c = coset_counts(169);
        assert_eq!((c.index, c.eps2, c.eps3, c.cusps, c.genus), (182, 2, 2, 14, 8));
        let c = coset_counts(23);
        assert_eq!((c.index, c.eps2, c.eps3, c.cusps, c.genus), (24, 0, 0, 2, 2));
        // levels divisible by 2 and 3 work too
        let c = coset_counts(36);
        assert_eq!((c.index, c.eps2, c.eps3, c.cusps, c.genus), (72, 0, 0, 12, 1));
    }

    #[test]
    fn supersingular_counts() {
        assert_eq!(supersingular_j_count(23), 1);
        assert_eq!(supersingular_j_count(11), 0);
        assert_eq!(supersingular_j_count(13), 1);
        // 37: j = 8 and the conjugate pair 3 +- sqrt(15) in F_{37^2}
        assert_eq!(supersingular_j_count(37), 3);
    }
}

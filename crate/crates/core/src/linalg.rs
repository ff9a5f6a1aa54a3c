//! Dense exact rational linear algebra.
//!
//! Just enough for intersection matrices: square matrices, null spaces and
//! particular solutions of consistent singular systems. Pivoting always takes
//! the first nonzero entry, so identical inputs give identical outputs.

use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Formats a rational as `num/den`, always with an explicit denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den` or a bare integer.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::invalid(format!("not a rational number: {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let num: BigInt = num.trim().parse().map_err(|_| bad())?;
            let den: BigInt = den.trim().parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(num, den))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RationalVector(pub Vec<Rational>);

impl RationalVector {
    pub fn zeros(dim: usize) -> Self {
        RationalVector(vec![Rational::zero(); dim])
    }

    pub fn from_i64(values: &[i64]) -> Self {
        RationalVector(values.iter().map(|&v| rat(v)).collect())
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = Rational::one();
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Self) -> Result<Rational> {
        check_dims(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        RationalVector(self.0.iter().map(|x| x * factor).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.len(), other.len())?;
        Ok(RationalVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.len(), other.len())?;
        Ok(RationalVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, t: &Rational, other: &Self) -> Result<Self> {
        check_dims(self.len(), other.len())?;
        Ok(RationalVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + t * b).collect(),
        ))
    }

    /// Rescales to coprime integer entries with positive first nonzero entry.
    pub fn normalized_integral(&self) -> Self {
        let Some(first) = self.0.iter().find(|x| !x.is_zero()) else {
            return self.clone();
        };
        let lcm = self.0.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = self.0.iter().map(|x| (x * &lcm).to_integer()).collect();
        let mut g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        if first.is_negative() {
            g = -g;
        }
        RationalVector(ints.into_iter().map(|x| Rational::from_integer(x / &g)).collect())
    }
}

impl fmt::Debug for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter().map(ToString::to_string)).finish()
    }
}

impl From<Vec<Rational>> for RationalVector {
    fn from(v: Vec<Rational>) -> Self {
        RationalVector(v)
    }
}

impl Add for &RationalVector {
    type Output = RationalVector;
    fn add(self, rhs: Self) -> RationalVector {
        RationalVector::add(self, rhs).expect("vector dimensions must match")
    }
}

impl Sub for &RationalVector {
    type Output = RationalVector;
    fn sub(self, rhs: Self) -> RationalVector {
        RationalVector::sub(self, rhs).expect("vector dimensions must match")
    }
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(format_rational))
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(RationalVector)
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// Square matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    dim: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(dim: usize) -> Self {
        RationalMatrix {
            dim,
            entries: vec![Rational::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid(
                "matrix rows must all have length equal to the row count",
            ));
        }
        Ok(RationalMatrix {
            dim,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.entries[i * self.dim + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        self.entries.chunks(self.dim.max(1)).take(self.dim)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|x| x.is_integer())
    }

    pub fn mat_vec(&self, v: &RationalVector) -> Result<RationalVector> {
        check_dims(self.dim, v.len())?;
        Ok(RationalVector(
            self.rows()
                .map(|row| row.iter().zip(&v.0).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }

    /// `v^T * self * w`.
    pub fn bilinear(&self, v: &RationalVector, w: &RationalVector) -> Result<Rational> {
        v.dot(&self.mat_vec(w)?)
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        RationalMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(RationalMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    /// Principal submatrix on the given indices, in the given order.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut out = Self::zeros(keep.len());
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                out.set(i, j, self.get(a, b).clone());
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        self.rows().map(<[Rational]>::to_vec).collect()
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(
                self.rows()
                    .map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>()),
            )
            .finish()
    }
}

impl Serialize for RationalMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.rows().map(|r| r.iter().map(format_rational).collect::<Vec<_>>()))
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        let rows = raw
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        RationalMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Reduced row echelon form of an `rows x cols` array. Returns pivot columns.
fn rref(a: &mut [Vec<Rational>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == a.len() {
            break;
        }
        let Some(pr) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, pr);
        let inv = a[r][c].recip();
        for x in a[r][c..].iter_mut() {
            *x *= &inv;
        }
        for i in 0..a.len() {
            if i == r || a[i][c].is_zero() {
                continue;
            }
            let factor = a[i][c].clone();
            let (pivot_row, target) = if i < r {
                let (lo, hi) = a.split_at_mut(r);
                (&hi[0], &mut lo[i])
            } else {
                let (lo, hi) = a.split_at_mut(i);
                (&lo[r], &mut hi[0])
            };
            for (t, p) in target[c..].iter_mut().zip(&pivot_row[c..]) {
                if !p.is_zero() {
                    *t -= &factor * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Null space basis, one vector per free column (ascending), each scaled to
/// coprime integers with a positive leading entry.
pub fn kernel_basis(m: &RationalMatrix) -> Vec<RationalVector> {
    let n = m.dim();
    let mut a = m.to_rows();
    let pivots = rref(&mut a, n);
    let free = (0..n).filter(|c| !pivots.contains(c));
    free.map(|f| {
        let mut v = RationalVector::zeros(n);
        v.0[f] = Rational::one();
        for (row, &pc) in pivots.iter().enumerate() {
            v.0[pc] = -a[row][f].clone();
        }
        v.normalized_integral()
    })
    .collect()
}

pub fn rank(m: &RationalMatrix) -> usize {
    let mut a = m.to_rows();
    rref(&mut a, m.dim()).len()
}

/// One particular solution of `m x = rhs` (free variables set to zero).
pub fn solve_singular(m: &RationalMatrix, rhs: &RationalVector) -> Result<RationalVector> {
    let n = m.dim();
    check_dims(n, rhs.len())?;
    let mut a: Vec<Vec<Rational>> = m
        .rows()
        .zip(&rhs.0)
        .map(|(row, b)| row.iter().cloned().chain(std::iter::once(b.clone())).collect())
        .collect();
    let pivots = rref(&mut a, n);
    if a[pivots.len()..].iter().any(|row| !row[n].is_zero()) {
        return Err(Error::NoSolution);
    }
    let mut x = RationalVector::zeros(n);
    for (row, &pc) in pivots.iter().enumerate() {
        x.0[pc] = a[row][n].clone();
    }
    if m.mat_vec(&x)? != *rhs {
        return Err(Error::inconsistent("nonzero residual after elimination"));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_of_identity_is_trivial() {
        assert!(kernel_basis(&RationalMatrix::identity(3)).is_empty());
    }

    #[test]
    fn kernel_of_zero_matrix_is_everything() {
        let basis = kernel_basis(&RationalMatrix::zeros(2));
        assert_eq!(
            basis,
            vec![RationalVector::from_i64(&[1, 0]), RationalVector::from_i64(&[0, 1])]
        );
    }

    #[test]
    fn kernel_vectors_are_normalized() {
        let m = RationalMatrix::from_i64_rows(&[vec![-2, 4], vec![1, -2]]).unwrap();
        assert_eq!(kernel_basis(&m), vec![RationalVector::from_i64(&[2, 1])]);
        let m = RationalMatrix::from_rows(vec![vec![ratio(1, 2), ratio(-1, 3)], vec![ratio(3, 2), rat(-1)]]).unwrap();
        assert_eq!(kernel_basis(&m), vec![RationalVector::from_i64(&[2, 3])]);
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let v = RationalVector(vec![ratio(1, 3), rat(-2), rat(5)]);
        assert_eq!(solve_singular(&RationalMatrix::identity(3), &v).unwrap(), v);
    }

    #[test]
    fn solve_zero_system() {
        let x = solve_singular(&RationalMatrix::zeros(3), &RationalVector::zeros(3)).unwrap();
        assert!(x.is_zero());
    }

    #[test]
    fn inconsistent_system_is_rejected() {
        let m = RationalMatrix::from_i64_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        let rhs = RationalVector::from_i64(&[1, 2]);
        assert_eq!(solve_singular(&m, &rhs), Err(Error::NoSolution));
    }

    #[test]
    fn plumbing_examples() {
        let e1 = RationalVector::unit(3, 0);
        let e2 = RationalVector::unit(3, 1);
        assert!(e1.dot(&e2).unwrap().is_zero());
        let v = RationalVector::from_i64(&[4, -1, 7]);
        assert_eq!(RationalMatrix::identity(3).mat_vec(&v).unwrap(), v);
        assert_eq!(
            RationalVector::from_i64(&[2, 4]).scale(&ratio(1, 2)),
            RationalVector::from_i64(&[1, 2])
        );
        assert!(e1.dot(&RationalVector::zeros(2)).is_err());
        assert!(RationalMatrix::identity(2).mat_vec(&v).is_err());
        assert!(RationalMatrix::from_i64_rows(&[vec![1, 2]]).is_err());
    }

    #[test]
    fn rational_strings() {
        assert_eq!(format_rational(&rat(-3)), "-3/1");
        assert_eq!(format_rational(&ratio(6, -4)), "-3/2");
        assert_eq!(parse_rational("-3/2").unwrap(), ratio(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), rat(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    fn small_matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..6).prop_flat_map(|n| proptest::collection::vec(proptest::collection::vec(-4i64..5, n), n))
    }

    proptest! {
        #[test]
        fn kernel_vectors_are_annihilated(rows in small_matrix()) {
            let m = RationalMatrix::from_i64_rows(&rows).unwrap();
            let basis = kernel_basis(&m);
            prop_assert_eq!(basis.len() + rank(&m), m.dim());
            for v in &basis {
                prop_assert!(m.mat_vec(v).unwrap().is_zero());
            }
        }

        #[test]
        fn solutions_of_consistent_systems_have_zero_residual(rows in small_matrix(), seed in proptest::collection::vec(-5i64..6, 6)) {
            let m = RationalMatrix::from_i64_rows(&rows).unwrap();
            let x0 = RationalVector::from_i64(&seed[..m.dim()]);
            let rhs = m.mat_vec(&x0).unwrap();
            let x = solve_singular(&m, &rhs).unwrap();
            prop_assert_eq!(m.mat_vec(&x).unwrap(), rhs.clone());
            prop_assert_eq!(solve_singular(&m, &rhs).unwrap(), x);
        }

        #[test]
        fn rational_vectors_roundtrip_through_json(values in proptest::collection::vec((-1000i64..1000, 1i64..50), 0..8)) {
            let v = RationalVector(values.iter().map(|&(a, b)| ratio(a, b)).collect());
            let json = serde_json::to_string(&v).unwrap();
            prop_assert_eq!(serde_json::from_str::<RationalVector>(&json).unwrap(), v);
        }
    }
}

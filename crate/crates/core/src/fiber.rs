//! Special fibres of Edixhoven's regular model of X0(N) over a prime p | N.
//!
//! Write `N = p^n M`. The fibre has `n + 1` Igusa components `C_a`, each a
//! copy of X0(M) over F_p, plus rational components `E` (attached to the
//! elliptic points with j = 1728) and `F` (j = 0) whose layout depends on
//! `xi(-1)`, `xi(-3)` and the parity of `n`:
//!
//! | `xi(-1)` | E components                      |
//! |----------|-----------------------------------|
//! | 0        | `E_{a,i}` for `0 < a < n`         |
//! | 1        | `E_{inf,i}`                       |
//!
//! | `xi(-3)` | n     | F components                    |
//! |----------|-------|---------------------------------|
//! | 0        | any   | `F_{a,i}` for `0 < a < n`       |
//! | 1        | even  | `F_{inf,i}`                     |
//! | 1        | odd   | `F_{0,i}` and `F_{n,i}`         |
//!
//! with `i` running over `1..=eps2(M)` for E and `1..=eps3(M)` for F.
//! Off-diagonal intersection numbers come from closed forms; the diagonal
//! is computed twice, from its closed form and from `C . X_p = 0`, and the
//! two must agree exactly.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{self, Invariants};
use crate::error::{Error, Result};
use crate::linalg::{rat, ratio, Rational, RationalMatrix, RationalVector};

/// Index of an E or F component: a finite Igusa index or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ComponentIndex {
    At(u32),
    Infinity,
}

impl Serialize for ComponentIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ComponentIndex::At(a) => s.serialize_u32(*a),
            ComponentIndex::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ComponentIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            At(u32),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::At(a) => Ok(ComponentIndex::At(a)),
            Raw::Name(s) if s == "inf" => Ok(ComponentIndex::Infinity),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("bad component index {s:?}"))),
        }
    }
}

/// Kind of a fibre component. The derived order is the canonical component
/// order: Igusa by index, then E, then F, each by index and then copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ComponentKind {
    #[serde(rename = "C")]
    Igusa {
        a: u32,
    },
    E {
        index: ComponentIndex,
        copy: u32,
    },
    F {
        index: ComponentIndex,
        copy: u32,
    },
}

impl ComponentKind {
    /// Label used in CSV headers and DOT output, e.g. `C0`, `E_1_1`,
    /// `Einf_2`, `F0_1`, `F_2_1`, `F3_1` (the `F_{n,i}` end component for
    /// n = 3) and `Finf_1`.
    pub fn label(&self, n: u32) -> String {
        use ComponentIndex::*;
        match *self {
            ComponentKind::Igusa { a } => format!("C{a}"),
            ComponentKind::E { index: At(a), copy } => format!("E_{a}_{copy}"),
            ComponentKind::E { index: Infinity, copy } => format!("Einf_{copy}"),
            ComponentKind::F { index: At(a), copy } if a == 0 || a == n => format!("F{a}_{copy}"),
            ComponentKind::F { index: At(a), copy } => format!("F_{a}_{copy}"),
            ComponentKind::F { index: Infinity, copy } => format!("Finf_{copy}"),
        }
    }

    pub fn is_igusa(&self) -> bool {
        matches!(self, ComponentKind::Igusa { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Edixhoven,
    Minimal,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Edixhoven => "edixhoven",
            ModelTag::Minimal => "minimal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiberComponent {
    pub kind: ComponentKind,
    pub multiplicity: u64,
    pub genus: u64,
}

/// One special fibre: components in canonical order and their symmetric
/// intersection matrix (integer entries).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberModel {
    pub p: u64,
    pub n: u32,
    #[serde(rename = "M")]
    pub m: u64,
    pub model: ModelTag,
    pub components: Vec<FiberComponent>,
    pub matrix: RationalMatrix,
}

impl FiberModel {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn kinds(&self) -> impl Iterator<Item = ComponentKind> + '_ {
        self.components.iter().map(|c| c.kind)
    }

    pub fn index_of(&self, kind: ComponentKind) -> Option<usize> {
        self.components.iter().position(|c| c.kind == kind)
    }

    pub fn multiplicities(&self) -> RationalVector {
        RationalVector(
            self.components
                .iter()
                .map(|c| Rational::from_integer(BigInt::from(c.multiplicity)))
                .collect(),
        )
    }

    pub fn self_intersection(&self, i: usize) -> &Rational {
        self.matrix.get(i, i)
    }

    pub fn labels(&self) -> Vec<String> {
        self.kinds().map(|k| k.label(self.n)).collect()
    }

    /// `matrix * multiplicities`, zero for every well-formed fibre.
    pub fn row_sums(&self) -> RationalVector {
        self.matrix
            .mat_vec(&self.multiplicities())
            .expect("fibre matrix matches its component list")
    }

    /// Whether the graph with an edge for each positive intersection is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, entry) in self.matrix.row(i).iter().enumerate() {
                if !seen[j] && entry.is_positive() {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// The numerical data of the fibre over `p` for `N = p^n M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberData {
    pub p: u64,
    pub n: u32,
    pub m: u64,
    pub k: u64,
    pub xi_minus1: u64,
    pub xi_minus3: u64,
    /// Invariants of X0(M).
    pub inv_m: Invariants,
    /// `epsinf(p^n)`.
    pub cusps_pn: u64,
}

fn big(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn to_u64(r: &Rational, what: &str) -> Result<u64> {
    if !r.is_integer() {
        return Err(Error::inconsistent(format!("{what} = {r} is not an integer")));
    }
    r.to_integer()
        .to_u64()
        .ok_or_else(|| Error::inconsistent(format!("{what} = {r} is not a nonnegative machine integer")))
}

impl FiberData {
    pub fn new(p: u64, n: u32, m: u64) -> Result<Self> {
        arith::check_fibre_prime(p, m)?;
        if n == 0 {
            return Err(Error::invalid("the exponent n of p in N must be at least 1"));
        }
        Ok(FiberData {
            p,
            n,
            m,
            k: arith::k_count(p, m)?,
            xi_minus1: u64::from(arith::xi(-1, p)?),
            xi_minus3: u64::from(arith::xi(-3, p)?),
            inv_m: arith::invariants_of(m)?,
            cusps_pn: arith::cusps_prime_power(p, n),
        })
    }

    pub fn level(&self) -> u64 {
        self.p.pow(self.n) * self.m
    }

    /// `phi(p^min(a, n - a))`.
    pub fn phi_at(&self, a: u32) -> u64 {
        arith::euler_phi_prime_power(self.p, a.min(self.n - a))
    }

    fn e_indices(&self) -> Vec<ComponentIndex> {
        if self.xi_minus1 == 0 {
            (1..self.n).map(ComponentIndex::At).collect()
        } else {
            vec![ComponentIndex::Infinity]
        }
    }

    fn f_indices(&self) -> Vec<ComponentIndex> {
        if self.xi_minus3 == 0 {
            (1..self.n).map(ComponentIndex::At).collect()
        } else if self.n.is_multiple_of(2) {
            vec![ComponentIndex::Infinity]
        } else {
            vec![ComponentIndex::At(0), ComponentIndex::At(self.n)]
        }
    }

    /// All component kinds of the fibre in canonical order.
    pub fn kinds(&self) -> Vec<ComponentKind> {
        let mut out: Vec<ComponentKind> = (0..=self.n).map(|a| ComponentKind::Igusa { a }).collect();
        for index in self.e_indices() {
            out.extend((1..=self.inv_m.eps2 as u32).map(|copy| ComponentKind::E { index, copy }));
        }
        for index in self.f_indices() {
            out.extend((1..=self.inv_m.eps3 as u32).map(|copy| ComponentKind::F { index, copy }));
        }
        out
    }

    pub fn contains(&self, kind: ComponentKind) -> bool {
        match kind {
            ComponentKind::Igusa { a } => a <= self.n,
            ComponentKind::E { index, copy } => {
                copy >= 1 && u64::from(copy) <= self.inv_m.eps2 && self.e_indices().contains(&index)
            }
            ComponentKind::F { index, copy } => {
                copy >= 1 && u64::from(copy) <= self.inv_m.eps3 && self.f_indices().contains(&index)
            }
        }
    }

    fn require(&self, kind: ComponentKind) -> Result<()> {
        if self.contains(kind) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{kind:?} is not a component of the fibre over p = {} for n = {}, M = {}",
                self.p, self.n, self.m
            )))
        }
    }

    pub fn multiplicity(&self, kind: ComponentKind) -> Result<u64> {
        self.require(kind)?;
        let value = match kind {
            ComponentKind::Igusa { a } => big(self.phi_at(a)),
            ComponentKind::E {
                index: ComponentIndex::At(a),
                ..
            } => ratio(1, 2) * big(self.phi_at(a)),
            ComponentKind::E {
                index: ComponentIndex::Infinity,
                ..
            } => ratio(1, 2) * big(self.cusps_pn),
            ComponentKind::F {
                index: ComponentIndex::At(a),
                ..
            } if a == 0 || a == self.n => ratio(1, 2) * big(self.cusps_pn),
            ComponentKind::F {
                index: ComponentIndex::At(a),
                ..
            } => ratio(1, 3) * big(self.phi_at(a)),
            ComponentKind::F {
                index: ComponentIndex::Infinity,
                ..
            } => ratio(1, 3) * big(self.cusps_pn),
        };
        let mult = to_u64(&value, "multiplicity")?;
        if mult == 0 {
            return Err(Error::inconsistent(format!("{kind:?} has multiplicity zero")));
        }
        Ok(mult)
    }

    /// Igusa components are copies of X0(M); E and F components are rational.
    pub fn genus(&self, kind: ComponentKind) -> Result<u64> {
        self.require(kind)?;
        Ok(if kind.is_igusa() { self.inv_m.g } else { 0 })
    }

    fn igusa_pair(&self, a: u32, a2: u32) -> Rational {
        let n = i64::from(self.n);
        let side = (n - 2 * i64::from(a)) * (n - 2 * i64::from(a2));
        let k = big(self.k);
        if side <= 0 {
            return k;
        }
        let mu = arith::mu(a, a2, self.n).expect("indices checked by caller");
        let p_mu = Rational::from_integer(BigInt::from(self.p).pow(mu));
        // (3 - (-1)^n) / 2 is 1 for n even and 2 for n odd.
        let parity_term = rat(if self.n.is_multiple_of(2) { 1 } else { 2 });
        &k * &p_mu
            + ratio(1, 2) * big(self.xi_minus1 * self.inv_m.eps2) * (&p_mu - Rational::one())
            + ratio(1, 3) * big(self.xi_minus3 * self.inv_m.eps3) * (&p_mu - parity_term)
    }

    /// Intersection number of two components; the self-intersection when
    /// `first == second`.
    pub fn intersection(&self, first: ComponentKind, second: ComponentKind) -> Result<Rational> {
        use ComponentIndex::*;
        use ComponentKind::*;
        self.require(first)?;
        self.require(second)?;
        if first == second {
            return Ok(self.self_intersection_closed_form(first));
        }
        let n = self.n;
        let one_if = |b: bool| if b { Rational::one() } else { Rational::zero() };
        Ok(match (first, second) {
            (Igusa { a }, Igusa { a: a2 }) => self.igusa_pair(a, a2),
            (Igusa { a }, E { index, .. }) | (E { index, .. }, Igusa { a }) => {
                one_if(index == At(a) || index == Infinity)
            }
            (Igusa { a }, F { index, .. }) | (F { index, .. }, Igusa { a }) => {
                let side = i64::from(n) - 2 * i64::from(a);
                one_if(
                    index == At(a) || index == Infinity || (index == At(0) && side > 0) || (index == At(n) && side < 0),
                )
            }
            (E { .. }, E { .. }) | (E { .. }, F { .. }) | (F { .. }, E { .. }) => Rational::zero(),
            (F { index: i1, copy: c1 }, F { index: i2, copy: c2 }) => {
                let ends = (i1 == At(0) && i2 == At(n)) || (i1 == At(n) && i2 == At(0));
                one_if(ends && c1 == c2)
            }
        })
    }

    /// Closed-form self-intersection of a component.
    pub fn self_intersection_closed_form(&self, kind: ComponentKind) -> Rational {
        let n = self.n;
        let even = n.is_multiple_of(2);
        let inv = &self.inv_m;
        match kind {
            ComponentKind::Igusa { a } if a == 0 || a == n => {
                // (3 - (-1)^n) / 6
                let parity = if even { ratio(1, 3) } else { ratio(2, 3) };
                -(ratio(1, 12) * big(inv.d) * big(self.p.pow(n - 1)) * big(self.p - 1))
                    - ratio(1, 2) * big(self.xi_minus1 * inv.eps2)
                    - parity * big(self.xi_minus3 * inv.eps3)
            }
            ComponentKind::Igusa { a } => {
                let dist = (i64::from(n) - 2 * i64::from(a)).unsigned_abs() as u32;
                // (1 - (-1)^n) / 6
                let parity = if even { Rational::zero() } else { ratio(1, 3) };
                -(ratio(1, 6) * big(inv.d) * Rational::from_integer(BigInt::from(self.p).pow(dist)))
                    - ratio(1, 2) * big(inv.eps2)
                    - ratio(1, 3) * big(inv.eps3)
                    - parity * big(self.xi_minus3 * inv.eps3)
            }
            ComponentKind::E { .. } => rat(-2),
            ComponentKind::F {
                index: ComponentIndex::At(a),
                ..
            } if a == 0 || a == n => rat(-2),
            ComponentKind::F { .. } => rat(-3),
        }
    }
}

/// Intersection number of two components of the Edixhoven fibre over `p`
/// for `N = p^n M`.
pub fn intersection_number(p: u64, n: u32, m: u64, first: ComponentKind, second: ComponentKind) -> Result<i64> {
    let value = FiberData::new(p, n, m)?.intersection(first, second)?;
    if !value.is_integer() {
        return Err(Error::inconsistent(format!(
            "intersection number {value} is not an integer"
        )));
    }
    value
        .to_integer()
        .to_i64()
        .ok_or_else(|| Error::invalid("intersection number does not fit in i64"))
}

/// Builds the Edixhoven fibre over `p` for `N = p^n M`.
pub fn build_edixhoven(p: u64, n: u32, m: u64) -> Result<FiberModel> {
    let data = FiberData::new(p, n, m)?;
    build_from(&data)
}

pub fn build_from(data: &FiberData) -> Result<FiberModel> {
    let kinds = data.kinds();
    let components = kinds
        .iter()
        .map(|&kind| {
            Ok(FiberComponent {
                kind,
                multiplicity: data.multiplicity(kind)?,
                genus: data.genus(kind)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let dim = kinds.len();
    let mut matrix = RationalMatrix::zeros(dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let value = data.intersection(kinds[i], kinds[j])?;
            if !value.is_integer() || value.is_negative() {
                return Err(Error::inconsistent(format!(
                    "{:?} . {:?} = {value} is not a nonnegative integer",
                    kinds[i], kinds[j]
                )));
            }
            matrix.set(i, j, value.clone());
            matrix.set(j, i, value);
        }
    }
    for (i, comp) in components.iter().enumerate() {
        let closed = data.self_intersection_closed_form(comp.kind);
        let forced = diagonal_from_row_sum(&matrix, &components, i);
        if closed != forced {
            return Err(Error::inconsistent(format!(
                "self-intersection of {:?} over p = {}: closed form {closed} but row sum forces {forced}",
                comp.kind, data.p
            )));
        }
        matrix.set(i, i, closed);
    }

    Ok(FiberModel {
        p: data.p,
        n: data.n,
        m: data.m,
        model: ModelTag::Edixhoven,
        components,
        matrix,
    })
}

/// The diagonal entry forced by `Gamma_i . X_p = 0`, ignoring the current
/// diagonal value.
pub(crate) fn diagonal_from_row_sum(matrix: &RationalMatrix, components: &[FiberComponent], i: usize) -> Rational {
    let off: Rational = components
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, c)| matrix.get(i, j) * big(c.multiplicity))
        .sum();
    -off / big(components[i].multiplicity)
}

/// `sum_i m_i (2 g_i - 2 - Gamma_i^2)`, which is `K . X_p = 2g - 2`.
pub fn fiber_canonical_degree_check(fiber: &FiberModel) -> Rational {
    fiber
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| big(c.multiplicity) * (rat(2 * c.genus as i64 - 2) - fiber.self_intersection(i)))
        .sum()
}

/// Graphviz rendering of the dual graph. Nodes carry kind, multiplicity,
/// genus and self-intersection; edges carry positive intersection numbers.
pub fn dual_graph_dot(fiber: &FiberModel) -> String {
    let labels = fiber.labels();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "graph \"fiber_p{}_n{}_M{}_{}\" {{",
        fiber.p, fiber.n, fiber.m, fiber.model
    );
    out.push_str("  node [shape=box];\n");
    for (i, (label, comp)) in labels.iter().zip(&fiber.components).enumerate() {
        let _ = writeln!(
            out,
            "  \"{label}\" [label=\"{label}\\nm={} g={}\\nself={}\"];",
            comp.multiplicity,
            comp.genus,
            fiber.self_intersection(i)
        );
    }
    for i in 0..fiber.len() {
        for j in (i + 1)..fiber.len() {
            let value = fiber.matrix.get(i, j);
            if value.is_positive() {
                let _ = writeln!(out, "  \"{}\" -- \"{}\" [label=\"{value}\"];", labels[i], labels[j]);
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kernel_basis;
    use ComponentIndex::*;
    use ComponentKind::*;

    fn c(a: u32) -> ComponentKind {
        Igusa { a }
    }

    #[test]
    fn fibre_23_1_1() {
        let f = build_edixhoven(23, 1, 1).unwrap();
        let kinds: Vec<_> = f.kinds().collect();
        assert_eq!(
            kinds,
            vec![
                c(0),
                c(1),
                E {
                    index: Infinity,
                    copy: 1
                },
                F { index: At(0), copy: 1 },
                F { index: At(1), copy: 1 },
            ]
        );
        assert!(f.components.iter().all(|c| c.multiplicity == 1 && c.genus == 0));
        let expected = RationalMatrix::from_i64_rows(&[
            vec![-3, 1, 1, 1, 0],
            vec![1, -3, 1, 0, 1],
            vec![1, 1, -2, 0, 0],
            vec![1, 0, 0, -2, 1],
            vec![0, 1, 0, 1, -2],
        ])
        .unwrap();
        assert_eq!(f.matrix, expected);
        assert!(f.row_sums().is_zero());
        assert_eq!(f.labels(), vec!["C0", "C1", "Einf_1", "F0_1", "F1_1"]);
    }

    #[test]
    fn fibre_13_2_1() {
        let f = build_edixhoven(13, 2, 1).unwrap();
        let summary: Vec<_> = f.components.iter().map(|c| (c.kind, c.multiplicity)).collect();
        assert_eq!(
            summary,
            vec![
                (c(0), 1),
                (c(1), 12),
                (c(2), 1),
                (E { index: At(1), copy: 1 }, 6),
                (F { index: At(1), copy: 1 }, 4),
            ]
        );
        assert_eq!(*f.self_intersection(1), rat(-1));
        assert_eq!(*f.self_intersection(0), rat(-13));
        assert_eq!(*f.self_intersection(3), rat(-2));
        assert_eq!(*f.self_intersection(4), rat(-3));
    }

    #[test]
    fn intersection_number_examples() {
        assert_eq!(intersection_number(13, 3, 1, c(0), c(1)).unwrap(), 13);
        // opposite sides of n/2 always meet in k points
        assert_eq!(intersection_number(13, 3, 1, c(0), c(3)).unwrap(), 1);
        assert_eq!(intersection_number(37, 4, 1, c(1), c(2)).unwrap(), 3);
        let e = |a| E { index: At(a), copy: 1 };
        assert_eq!(intersection_number(13, 4, 1, e(1), e(2)).unwrap(), 0);
        assert_eq!(intersection_number(13, 4, 1, e(2), e(2)).unwrap(), -2);
        assert!(intersection_number(
            13,
            4,
            1,
            E {
                index: Infinity,
                copy: 1
            },
            c(0)
        )
        .is_err());
        assert!(intersection_number(23, 1, 1, c(2), c(0)).is_err());
    }

    #[test]
    fn invalid_primes_are_rejected() {
        assert!(build_edixhoven(3, 1, 1).is_err());
        assert!(build_edixhoven(2, 2, 1).is_err());
        assert!(build_edixhoven(5, 1, 5).is_err());
        assert!(build_edixhoven(5, 0, 7).is_err());
    }

    #[test]
    fn canonical_degree_examples() {
        assert_eq!(
            fiber_canonical_degree_check(&build_edixhoven(23, 1, 1).unwrap()),
            rat(2)
        );
        assert_eq!(
            fiber_canonical_degree_check(&build_edixhoven(13, 2, 1).unwrap()),
            rat(14)
        );
        assert_eq!(
            fiber_canonical_degree_check(&build_edixhoven(11, 1, 1).unwrap()),
            rat(0)
        );
    }

    #[test]
    fn dot_for_23() {
        let dot = dual_graph_dot(&build_edixhoven(23, 1, 1).unwrap());
        assert_eq!(
            dot.matches("[label=\"C").count() + dot.matches("[label=\"E").count() + dot.matches("[label=\"F").count(),
            5
        );
        assert_eq!(dot.matches(" -- ").count(), 6);
        assert!(dot.contains("\"C0\" -- \"F0_1\" [label=\"1\"]"));
        assert!(dot.contains("\"F0_1\" -- \"F1_1\""));
    }

    /// The fibre test lattice: p in 5..97, n in 1..=5, a few values of M.
    fn lattice() -> impl Iterator<Item = (u64, u32, u64)> {
        (5..=97u64)
            .filter(|&p| arith::is_prime(p))
            .flat_map(|p| (1..=5u32).map(move |n| (p, n)))
            .flat_map(|(p, n)| [1u64, 7, 11, 13, 35].into_iter().map(move |m| (p, n, m)))
            .filter(|&(p, _, m)| arith::gcd(m, 6 * p) == 1)
    }

    #[test]
    fn fibre_lattice_invariants() {
        for (p, n, m) in lattice() {
            let f = build_edixhoven(p, n, m).unwrap_or_else(|e| panic!("({p},{n},{m}): {e}"));
            assert!(f.matrix.is_symmetric());
            assert!(f.matrix.is_integral());
            assert!(f.row_sums().is_zero(), "({p},{n},{m})");
            assert!(f.is_connected(), "({p},{n},{m})");
            for i in 0..f.len() {
                assert!(f.self_intersection(i).is_negative());
                for j in 0..f.len() {
                    assert!(i == j || !f.matrix.get(i, j).is_negative());
                }
            }
            let kernel = kernel_basis(&f.matrix);
            assert_eq!(kernel.len(), 1, "({p},{n},{m})");
            assert_eq!(kernel[0], f.multiplicities().normalized_integral());

            let level = p.pow(n) * m;
            let g = arith::invariants_of(level).unwrap().g;
            assert_eq!(fiber_canonical_degree_check(&f), rat(2 * g as i64 - 2), "({p},{n},{m})");

            if n % 2 == 0 {
                let inv = arith::invariants_of(m).unwrap();
                let expected = -Rational::new(BigInt::from(inv.d + 3 * inv.eps2 + 2 * inv.eps3), BigInt::from(6));
                let mid = f.index_of(c(n / 2)).unwrap();
                assert_eq!(*f.self_intersection(mid), expected);
            }
        }
    }

    #[test]
    fn node_count_matches_case_table() {
        for (p, n, m) in lattice() {
            let data = FiberData::new(p, n, m).unwrap();
            let e_indices = if data.xi_minus1 == 0 { n as u64 - 1 } else { 1 };
            let f_indices = match (data.xi_minus3, n % 2) {
                (0, _) => n as u64 - 1,
                (_, 0) => 1,
                _ => 2,
            };
            let expected = (n as u64 + 1) + data.inv_m.eps2 * e_indices + data.inv_m.eps3 * f_indices;
            assert_eq!(build_from(&data).unwrap().len() as u64, expected);
        }
    }

    #[test]
    fn fibre_json_roundtrip() {
        let f = build_edixhoven(5, 3, 7).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"M\":7"));
        let back: FiberModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }
}

//! Exceptional components and blow-downs.
//!
//! Edixhoven's model is already minimal unless `M = 1` and `n` is even, where
//! the middle Igusa component `C_{n/2}` is a (-1)-curve. Contracting it makes
//! one E component exceptional, and contracting that one makes an F
//! component exceptional. [`blow_down_composite`] applies the three
//! contractions in one step from closed forms for the pullbacks;
//! [`blow_down_iterative`] contracts one (-1)-curve at a time and serves as
//! the oracle.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, FactoredLevel};
use crate::error::{Error, Result};
use crate::fiber::{self, ComponentIndex, ComponentKind, FiberComponent, FiberData, FiberModel, ModelTag};
use crate::linalg::{rat, Rational, RationalMatrix, RationalVector};

/// What the composite blow-down contracted, and the pullbacks of the
/// surviving components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlowdownRecord {
    pub contracted: Vec<ComponentKind>,
    /// For each survivor, its coefficients on `contracted` in `pi^*(C)`.
    pub pullback_coeffs: Vec<(ComponentKind, RationalVector)>,
}

/// Components of genus 0 and self-intersection -1.
pub fn find_exceptional(fiber: &FiberModel) -> Vec<ComponentKind> {
    fiber
        .components
        .iter()
        .enumerate()
        .filter(|(i, c)| c.genus == 0 && *fiber.self_intersection(*i) == rat(-1))
        .map(|(_, c)| c.kind)
        .collect()
}

/// `K . Gamma = 2 g_Gamma - 2 - Gamma^2` for every component.
pub fn canonical_intersections(fiber: &FiberModel) -> RationalVector {
    RationalVector(
        fiber
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| rat(2 * c.genus as i64 - 2) - fiber.self_intersection(i))
            .collect(),
    )
}

fn big(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// The three components contracted for `M = 1`, `n` even.
fn contracted_kinds(data: &FiberData) -> [ComponentKind; 3] {
    let half = data.n / 2;
    let at_half_or_inf = |xi: u64| {
        if xi == 0 {
            ComponentIndex::At(half)
        } else {
            ComponentIndex::Infinity
        }
    };
    [
        ComponentKind::Igusa { a: half },
        ComponentKind::E {
            index: at_half_or_inf(data.xi_minus1),
            copy: 1,
        },
        ComponentKind::F {
            index: at_half_or_inf(data.xi_minus3),
            copy: 1,
        },
    ]
}

/// Pullback coefficients of a surviving Igusa component on the contracted
/// `(C_{n/2}, E, F)`, one case per residue of p mod 12.
fn igusa_pullback(data: &FiberData) -> [u64; 3] {
    let k = data.k;
    let (c, e, f) = match (data.xi_minus1, data.xi_minus3) {
        (0, 0) => (0, 0, 0), // p = 1 mod 12
        (0, _) => (2, 1, 1), // p = 5 mod 12
        (_, 0) => (3, 2, 1), // p = 7 mod 12
        _ => (5, 3, 2),      // p = 11 mod 12
    };
    [6 * k + c, 3 * k + e, 2 * k + f]
}

fn check_composite_input(fiber: &FiberModel) -> Result<FiberData> {
    if fiber.model != ModelTag::Edixhoven {
        return Err(Error::invalid("composite blow-down expects an Edixhoven fibre"));
    }
    if fiber.m != 1 || !fiber.n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "Edixhoven's model is already minimal for n = {}, M = {}",
            fiber.n, fiber.m
        )));
    }
    FiberData::new(fiber.p, fiber.n, fiber.m)
}

/// Pullback data for the composite blow-down, checked against
/// `D . pi^*(C) = 0` for every contracted `D` and survivor `C`.
pub fn composite_blowdown_record(fiber: &FiberModel) -> Result<BlowdownRecord> {
    let data = check_composite_input(fiber)?;
    let contracted = contracted_kinds(&data);
    let contracted_idx = contracted
        .iter()
        .map(|&k| {
            fiber
                .index_of(k)
                .ok_or_else(|| Error::inconsistent(format!("{k:?} missing from fibre")))
        })
        .collect::<Result<Vec<_>>>()?;
    let igusa = igusa_pullback(&data);

    let mut pullback_coeffs = Vec::new();
    for (i, comp) in fiber.components.iter().enumerate() {
        if contracted_idx.contains(&i) {
            continue;
        }
        let coeffs = RationalVector(if comp.kind.is_igusa() {
            igusa.iter().map(|&x| big(x)).collect()
        } else {
            vec![Rational::zero(); 3]
        });
        let pulled = pullback_vector(fiber, i, &contracted_idx, &coeffs.0);
        for (&d, kind) in contracted_idx.iter().zip(&contracted) {
            let value = dot_row(&fiber.matrix, d, &pulled);
            if !value.is_zero() {
                return Err(Error::inconsistent(format!(
                    "{kind:?} . pi^*({:?}) = {value}, expected 0",
                    comp.kind
                )));
            }
        }
        pullback_coeffs.push((comp.kind, coeffs));
    }
    Ok(BlowdownRecord {
        contracted: contracted.to_vec(),
        pullback_coeffs,
    })
}

fn pullback_vector(fiber: &FiberModel, i: usize, contracted: &[usize], coeffs: &[Rational]) -> RationalVector {
    let mut v = RationalVector::unit(fiber.len(), i);
    for (&d, c) in contracted.iter().zip(coeffs) {
        v.0[d] = c.clone();
    }
    v
}

fn dot_row(m: &RationalMatrix, row: usize, v: &RationalVector) -> Rational {
    m.row(row).iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

/// Genus of the surviving Igusa components after the three contractions.
pub fn blown_down_igusa_genus(data: &FiberData) -> u64 {
    let (k, x1, x3) = (data.k as i64, data.xi_minus1 as i64, data.xi_minus3 as i64);
    let g = 3 * k * k + (3 * x1 + 2 * x3 - 2) * k + x1 * x3;
    u64::try_from(g).expect("blown-down genus is nonnegative")
}

/// The increment `C_a . C_a' - C'_a . C'_a'` for surviving Igusa pairs.
fn igusa_increment(data: &FiberData) -> Rational {
    let (k, x1, x3) = (data.k as i64, data.xi_minus1 as i64, data.xi_minus3 as i64);
    rat(6 * k * k + (6 * k + 2) * x1 + (4 * k + 1) * x3 + 2 * x1 * x3)
}

/// Minimal fibre for `M = 1` and `n` even, from the closed forms.
pub fn blow_down_composite(fiber: &FiberModel) -> Result<FiberModel> {
    let data = check_composite_input(fiber)?;
    let record = composite_blowdown_record(fiber)?;
    let contracted_idx: Vec<usize> = record
        .contracted
        .iter()
        .map(|&k| fiber.index_of(k).expect("checked in record"))
        .collect();
    let survivors: Vec<usize> = (0..fiber.len()).filter(|i| !contracted_idx.contains(i)).collect();
    let pullbacks: Vec<RationalVector> = survivors
        .iter()
        .zip(&record.pullback_coeffs)
        .map(|(&i, (_, coeffs))| pullback_vector(fiber, i, &contracted_idx, &coeffs.0))
        .collect();

    let increment = igusa_increment(&data);
    let igusa_genus = blown_down_igusa_genus(&data);
    let components: Vec<FiberComponent> = survivors
        .iter()
        .map(|&i| {
            let c = &fiber.components[i];
            FiberComponent {
                kind: c.kind,
                multiplicity: c.multiplicity,
                genus: if c.kind.is_igusa() { igusa_genus } else { 0 },
            }
        })
        .collect();

    let dim = survivors.len();
    let mut matrix = RationalMatrix::zeros(dim);
    for a in 0..dim {
        for b in (a + 1)..dim {
            let (ka, kb) = (components[a].kind, components[b].kind);
            let old = fiber.matrix.get(survivors[a], survivors[b]);
            let value = if ka.is_igusa() && kb.is_igusa() {
                old + &increment
            } else {
                old.clone()
            };
            let via_pullback = fiber.matrix.bilinear(&pullbacks[a], &pullbacks[b])?;
            if value != via_pullback {
                return Err(Error::inconsistent(format!(
                    "{ka:?} . {kb:?}: closed form {value}, pullback gives {via_pullback}"
                )));
            }
            matrix.set(a, b, value.clone());
            matrix.set(b, a, value);
        }
    }
    for a in 0..dim {
        let forced = fiber::diagonal_from_row_sum(&matrix, &components, a);
        let via_pullback = fiber.matrix.bilinear(&pullbacks[a], &pullbacks[a])?;
        if forced != via_pullback {
            return Err(Error::inconsistent(format!(
                "self-intersection of {:?}: row sum gives {forced}, pullback gives {via_pullback}",
                components[a].kind
            )));
        }
        matrix.set(a, a, forced);
    }

    let minimal = FiberModel {
        p: fiber.p,
        n: fiber.n,
        m: fiber.m,
        model: ModelTag::Minimal,
        components,
        matrix,
    };
    let closed = blown_down_canonical_closed_form(fiber)?;
    if closed != canonical_intersections(&minimal) {
        return Err(Error::inconsistent(
            "canonical intersections after blow-down disagree with adjunction",
        ));
    }
    Ok(minimal)
}

/// `K . Gamma` on the blown-down fibre from the closed forms in terms of the
/// Edixhoven self-intersections: `-(C'_a)^2 - 4k - 2 - 2 xi(-1) - xi(-3)` on
/// Igusa components, 0 on E and 1 on F.
pub fn blown_down_canonical_closed_form(edixhoven: &FiberModel) -> Result<RationalVector> {
    let data = check_composite_input(edixhoven)?;
    let contracted = contracted_kinds(&data);
    let shift = rat(4 * data.k as i64 + 2 + 2 * data.xi_minus1 as i64 + data.xi_minus3 as i64);
    Ok(RationalVector(
        edixhoven
            .components
            .iter()
            .enumerate()
            .filter(|(_, c)| !contracted.contains(&c.kind))
            .map(|(i, c)| match c.kind {
                ComponentKind::Igusa { .. } => -edixhoven.self_intersection(i) - &shift,
                ComponentKind::E { .. } => Rational::zero(),
                ComponentKind::F { .. } => Rational::one(),
            })
            .collect(),
    ))
}

/// Contracts (-1)-curves of genus 0 one at a time, always the first in
/// canonical order, until none is left.
///
/// Contracting `E` adds `(C.E)(D.E)` to `C.D` and `r(r-1)/2` to the genus of
/// a component meeting `E` with multiplicity `r`.
pub fn blow_down_iterative(fiber: &FiberModel) -> FiberModel {
    let mut components = fiber.components.clone();
    let mut rows = fiber.matrix.to_rows();
    let minus_one = rat(-1);
    while components.len() > 1 {
        let Some(e) = (0..components.len()).find(|&i| components[i].genus == 0 && rows[i][i] == minus_one) else {
            break;
        };
        let meet: Vec<Rational> = rows.iter().map(|r| r[e].clone()).collect();
        for i in 0..components.len() {
            if i == e {
                continue;
            }
            for j in 0..components.len() {
                if j != e {
                    rows[i][j] += &meet[i] * &meet[j];
                }
            }
            let r = meet[i]
                .to_integer()
                .to_i64()
                .expect("intersection numbers are small integers");
            components[i].genus += (r * (r - 1) / 2) as u64;
        }
        components.remove(e);
        rows.remove(e);
        for r in rows.iter_mut() {
            r.remove(e);
        }
    }
    FiberModel {
        p: fiber.p,
        n: fiber.n,
        m: fiber.m,
        model: ModelTag::Minimal,
        components,
        matrix: RationalMatrix::from_rows(rows).expect("square by construction"),
    }
}

/// Checks that a level is in the range covered by the regular models.
pub fn check_level(level: &FactoredLevel) -> Result<()> {
    if !level.coprime_to_6 {
        return Err(Error::unsupported(level.level, "level not coprime to 6"));
    }
    if matches!(level.level, 5 | 7 | 13) {
        return Err(Error::unsupported(
            level.level,
            "Edixhoven's model needs ad hoc blow-downs at this level",
        ));
    }
    Ok(())
}

/// The fibre over `p | N` on the requested model. For `N = 25` the three
/// standard contractions do not reach a minimal model, so `Minimal` is
/// refused there.
pub fn fiber_for_level(level: &FactoredLevel, p: u64, model: ModelTag) -> Result<FiberModel> {
    check_level(level)?;
    if p == 2 || p == 3 {
        return Err(Error::unsupported(
            level.level,
            "no regular model is available at p = 2, 3",
        ));
    }
    let block = level
        .block(p)
        .ok_or_else(|| Error::invalid(format!("{p} does not divide {}", level.level)))?;
    let edixhoven = fiber::build_edixhoven(block.p, block.n, block.m)?;
    match model {
        ModelTag::Edixhoven => Ok(edixhoven),
        ModelTag::Minimal if block.m == 1 && block.n % 2 == 0 => {
            if level.level == 25 {
                return Err(Error::unsupported(
                    25,
                    "X0(25) has genus 0; the blown-down model is not minimal",
                ));
            }
            blow_down_composite(&edixhoven)
        }
        ModelTag::Minimal => Ok(FiberModel {
            model: ModelTag::Minimal,
            ..edixhoven
        }),
    }
}

/// The fibre on the minimal model, for an unfactored level.
pub fn minimal_fiber(level: u64, p: u64) -> Result<FiberModel> {
    fiber_for_level(&arith::factor_level(level)?, p, ModelTag::Minimal)
}

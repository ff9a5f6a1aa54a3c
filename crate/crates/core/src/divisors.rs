//! The vertical divisors `V_0`, `V_inf` supported on one fibre.
//!
//! `V_m` solves `V_m . Gamma = (2g - 2) H_m . Gamma - K . Gamma` for every
//! component `Gamma`, where the cusp section `H_0` meets `C_0` and `H_inf`
//! meets `C_n`. Solutions are unique up to multiples of the multiplicity
//! vector `w`; we fix them by making the coefficient of `C_0` zero.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::arith::{self, Invariants};
use crate::error::{Error, Result};
use crate::fiber::{ComponentIndex, ComponentKind, FiberData, FiberModel};
use crate::linalg::{self, ratio, Rational, RationalVector};
use crate::minimal::canonical_intersections;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CuspSide {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "inf")]
    Infinity,
}

impl fmt::Display for CuspSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CuspSide::Zero => "0",
            CuspSide::Infinity => "inf",
        })
    }
}

/// A rational combination of the components of one fibre, in the fibre's
/// canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerticalDivisor {
    pub p: u64,
    pub coefficients: RationalVector,
}

impl VerticalDivisor {
    /// Adds `t` times the fibre's multiplicity vector.
    pub fn shifted(&self, fiber: &FiberModel, t: &Rational) -> Result<VerticalDivisor> {
        Ok(VerticalDivisor {
            p: self.p,
            coefficients: self.coefficients.add_scaled(t, &fiber.multiplicities())?,
        })
    }
}

fn big(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Index of the component met by `H_m`.
fn cusp_component(fiber: &FiberModel, side: CuspSide) -> Result<usize> {
    let a = match side {
        CuspSide::Zero => 0,
        CuspSide::Infinity => fiber.n,
    };
    fiber
        .index_of(ComponentKind::Igusa { a })
        .ok_or_else(|| Error::invalid(format!("fibre has no component C{a}")))
}

/// `(2g - 2) [H_m meets Gamma] - K . Gamma` per component.
pub fn rhs_vector(fiber: &FiberModel, g: u64, side: CuspSide) -> Result<RationalVector> {
    let mut rhs = canonical_intersections(fiber).scale(&int(-1));
    let i = cusp_component(fiber, side)?;
    rhs.0[i] += int(2 * g as i64 - 2);
    Ok(rhs)
}

/// Subtracts the multiple of `w` that makes the `C_0` coefficient vanish.
fn gauge_fix(fiber: &FiberModel, x: RationalVector) -> Result<RationalVector> {
    let c0 = cusp_component(fiber, CuspSide::Zero)?;
    let w = fiber.multiplicities();
    let t = -(&x.0[c0] / &w.0[c0]);
    x.add_scaled(&t, &w)
}

/// Exact solution of the fibre system, gauge-fixed at `C_0`.
pub fn solve_vm(fiber: &FiberModel, g: u64, side: CuspSide) -> Result<VerticalDivisor> {
    let rhs = rhs_vector(fiber, g, side)?;
    let x = linalg::solve_singular(&fiber.matrix, &rhs)?;
    Ok(VerticalDivisor {
        p: fiber.p,
        coefficients: gauge_fix(fiber, x)?,
    })
}

/// Which of the three closed-form vectors to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormVector {
    /// The kernel generator `w`.
    Kernel,
    /// `u` for `H_0`, `v` for `H_inf`.
    Particular(CuspSide),
}

/// The numbers the closed forms are written in.
struct ClosedFormContext {
    data: FiberData,
    inv_n: Invariants,
}

impl ClosedFormContext {
    fn new(fiber: &FiberModel) -> Result<Self> {
        let data = FiberData::new(fiber.p, fiber.n, fiber.m)?;
        let inv_n = arith::invariants_of(data.level())?;
        Ok(ClosedFormContext { data, inv_n })
    }

    fn p1(&self) -> Rational {
        big(self.data.p - 1)
    }

    fn g1(&self) -> Rational {
        int(self.inv_n.g as i64 - 1)
    }

    fn d(&self) -> Rational {
        big(self.inv_n.d)
    }

    fn n(&self) -> Rational {
        big(u64::from(self.data.n))
    }

    fn np1(&self) -> Rational {
        self.n() * self.p1()
    }

    /// `2 phi (g-1)/(d (p-1)) (s (6a(p-1) + 6) + (d - 3(min(a,n-a)(p-1) + 1) epsinf(N))/(g-1))`
    /// with the `g - 1` multiplied through, `s = +1` for `u` and `-1` for `v`.
    fn interior_igusa(&self, a: u32, sign: i64) -> Rational {
        let phi = big(self.data.phi_at(a));
        let min = big(u64::from(a.min(self.data.n - a)));
        let inner = self.g1() * int(sign) * (big(6 * u64::from(a)) * self.p1() + int(6)) + self.d()
            - int(3) * (min * self.p1() + int(1)) * big(self.inv_n.epsinf);
        int(2) * phi * inner / (self.d() * self.p1())
    }

    /// The tail `-c/(p-1) + c' epsinf(M)/(d(M)(p-1))` shared by the E and F
    /// components at the cusps.
    fn cusp_tail(&self, c: Rational, c_m: u64) -> Rational {
        let inv_m = &self.data.inv_m;
        -c / self.p1() + big(c_m * inv_m.epsinf) / (big(inv_m.d) * self.p1())
    }

    fn coefficient(&self, kind: ComponentKind, which: CuspSide) -> Rational {
        let sign: i64 = match which {
            CuspSide::Zero => 1,
            CuspSide::Infinity => -1,
        };
        let n = self.data.n;
        let (p1, g1, d, np1) = (self.p1(), self.g1(), self.d(), self.np1());
        let eps_pn = big(self.data.cusps_pn);
        let inv = &self.inv_n;
        let third = ratio(1, 3);
        match kind {
            ComponentKind::Igusa { a: 0 } => Rational::zero(),
            ComponentKind::Igusa { a } if a == n => int(2) * g1 * int(sign) * (int(6) * np1 + int(12)) / (d * p1),
            ComponentKind::Igusa { a } => self.interior_igusa(a, sign),
            ComponentKind::E {
                index: ComponentIndex::At(a),
                ..
            } => self.interior_igusa(a, sign) / int(2),
            ComponentKind::E {
                index: ComponentIndex::Infinity,
                ..
            } => {
                let lead = match which {
                    CuspSide::Zero => int(6) * &np1 + int(36),
                    CuspSide::Infinity => -int(6) * &np1 + int(12),
                };
                let inner = g1 * lead - int(3) * (&np1 - int(2)) * big(inv.epsinf) + big(8 * inv.eps3);
                eps_pn * inner / (int(2) * d * &p1) + self.cusp_tail(int(2), 6)
            }
            ComponentKind::F {
                index: ComponentIndex::At(a),
                ..
            } if a == 0 || a == n => {
                let side = if a == 0 { -1 } else { 1 };
                let lead = match which {
                    CuspSide::Zero => int(6) * &np1 + int(side * 2) * big(self.data.p + 1) + int(36),
                    CuspSide::Infinity => -int(6) * &np1 - int(side * 2) * big(self.data.p + 1) + int(12),
                };
                let inner = g1 * lead - int(3) * (&np1 - int(2)) * big(inv.epsinf) + big(6 * inv.eps2);
                eps_pn * inner / (int(2) * d * &p1) + self.cusp_tail(int(2), 6)
            }
            ComponentKind::F {
                index: ComponentIndex::At(a),
                ..
            } => third.clone() + self.interior_igusa(a, sign) / int(3),
            ComponentKind::F {
                index: ComponentIndex::Infinity,
                ..
            } => {
                let lead = match which {
                    CuspSide::Zero => int(2) * &np1 + int(12),
                    CuspSide::Infinity => -int(2) * &np1 + int(4),
                };
                let inner = g1 * lead - (&np1 - int(2)) * big(inv.epsinf) + big(2 * inv.eps2);
                third + eps_pn * inner / (d * &p1) + self.cusp_tail(ratio(4, 3), 4)
            }
        }
    }
}

/// Value of one closed-form coefficient for one component.
pub fn closed_form_coefficient(fiber: &FiberModel, kind: ComponentKind, which: ClosedFormVector) -> Result<Rational> {
    let i = fiber.index_of(kind).ok_or_else(|| {
        Error::invalid(format!(
            "{kind:?} is not a component of the {} fibre over p = {} for n = {}, M = {}",
            fiber.model, fiber.p, fiber.n, fiber.m
        ))
    })?;
    let ctx = ClosedFormContext::new(fiber)?;
    Ok(match which {
        ClosedFormVector::Kernel => big(fiber.components[i].multiplicity),
        ClosedFormVector::Particular(side) => ctx.coefficient(kind, side),
    })
}

/// The closed-form vector over every component present in the fibre. On a
/// blown-down fibre this is the restriction to the surviving components.
pub fn closed_form_vm(fiber: &FiberModel, which: ClosedFormVector) -> Result<VerticalDivisor> {
    let ctx = ClosedFormContext::new(fiber)?;
    let coefficients = fiber
        .components
        .iter()
        .map(|c| match which {
            ClosedFormVector::Kernel => big(c.multiplicity),
            ClosedFormVector::Particular(side) => ctx.coefficient(c.kind, side),
        })
        .collect();
    Ok(VerticalDivisor {
        p: fiber.p,
        coefficients: RationalVector(coefficients),
    })
}

/// Whether `A u = rhs_0`, `A v = rhs_inf` and `A w = 0` hold exactly for
/// the closed forms.
pub fn verify_closed_form(fiber: &FiberModel, g: u64) -> Result<bool> {
    let w = closed_form_vm(fiber, ClosedFormVector::Kernel)?;
    if !fiber.matrix.mat_vec(&w.coefficients)?.is_zero() {
        return Ok(false);
    }
    for side in [CuspSide::Zero, CuspSide::Infinity] {
        let x = closed_form_vm(fiber, ClosedFormVector::Particular(side))?;
        if fiber.matrix.mat_vec(&x.coefficients)? != rhs_vector(fiber, g, side)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::build_edixhoven;
    use crate::linalg::rat;
    use crate::minimal::blow_down_composite;

    fn genus(fiber: &FiberModel) -> u64 {
        arith::invariants_of(fiber.p.pow(fiber.n) * fiber.m).unwrap().g
    }

    #[test]
    fn rhs_for_23() {
        let f = build_edixhoven(23, 1, 1).unwrap();
        assert_eq!(
            rhs_vector(&f, 2, CuspSide::Zero).unwrap(),
            RationalVector::from_i64(&[1, -1, 0, 0, 0])
        );
        assert_eq!(
            rhs_vector(&f, 2, CuspSide::Infinity).unwrap(),
            RationalVector::from_i64(&[-1, 1, 0, 0, 0])
        );
    }

    #[test]
    fn solve_for_23() {
        let f = build_edixhoven(23, 1, 1).unwrap();
        let v0 = solve_vm(&f, 2, CuspSide::Zero).unwrap();
        assert_eq!(v0.coefficients.0[0], rat(0));
        let residual = f.matrix.mat_vec(&v0.coefficients).unwrap();
        assert_eq!(residual, rhs_vector(&f, 2, CuspSide::Zero).unwrap());
        let vinf = solve_vm(&f, 2, CuspSide::Infinity).unwrap();
        assert_eq!(vinf.coefficients.0[1], ratio(-6, 11));
        assert_eq!(
            closed_form_coefficient(
                &f,
                ComponentKind::Igusa { a: 1 },
                ClosedFormVector::Particular(CuspSide::Infinity)
            )
            .unwrap(),
            ratio(-6, 11)
        );
        let shifted = v0.shifted(&f, &ratio(5, 7)).unwrap();
        assert_eq!(f.matrix.mat_vec(&shifted.coefficients).unwrap(), residual);
    }

    #[test]
    fn closed_forms_match_solver() {
        let cases = [
            (23u64, 1u32, 1u64),
            (5, 3, 7),
            (13, 1, 11),
            (7, 2, 11),
            (11, 3, 13),
            (17, 2, 7),
            (19, 4, 1),
            (5, 1, 77),
        ];
        for (p, n, m) in cases {
            let f = build_edixhoven(p, n, m).unwrap();
            let g = genus(&f);
            assert!(verify_closed_form(&f, g).unwrap(), "{p} {n} {m}");
            for side in [CuspSide::Zero, CuspSide::Infinity] {
                let solved = solve_vm(&f, g, side).unwrap();
                let closed = closed_form_vm(&f, ClosedFormVector::Particular(side)).unwrap();
                assert_eq!(solved, closed, "{p} {n} {m} {side}");
            }
        }
    }

    #[test]
    fn blown_down_restriction() {
        for p in [13u64, 5, 7, 11] {
            let f = blow_down_composite(&build_edixhoven(p, 2, 1).unwrap()).unwrap();
            let g = genus(&f);
            assert!(verify_closed_form(&f, g).unwrap(), "p = {p}");
        }
    }

    #[test]
    fn absent_kind_rejected() {
        let f = build_edixhoven(23, 1, 1).unwrap();
        let e = ComponentKind::E {
            index: ComponentIndex::At(1),
            copy: 1,
        };
        assert!(matches!(
            closed_form_coefficient(&f, e, ClosedFormVector::Kernel),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn json_roundtrip() {
        let f = build_edixhoven(23, 1, 1).unwrap();
        let v = solve_vm(&f, 2, CuspSide::Zero).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"0/1\"") || s.contains("\"0\""));
        assert_eq!(serde_json::from_str::<VerticalDivisor>(&s).unwrap(), v);
    }
}

//! Every consistency check the library knows, run for one level.

use serde::{Deserialize, Serialize};

use crate::arith::{self, FactoredLevel};
use crate::divisors::{closed_form_vm, solve_vm, verify_closed_form, ClosedFormVector, CuspSide};
use crate::error::{Error, Result};
use crate::fiber::{self, FiberModel, ModelTag};
use crate::linalg::{kernel_basis, rat, ratio};
use crate::minimal::{
    blow_down_composite, blow_down_iterative, canonical_intersections, check_level, find_exceptional,
};
use crate::oracle;
use crate::selfint::{closed_form_coefficient, combine_pairings, fiber_coefficient};

/// Coset enumeration is skipped above this index.
const ORACLE_INDEX_LIMIT: u64 = 2_000_000;
/// Supersingular counting is cubic in p; skipped above this prime.
const SUPERSINGULAR_PRIME_LIMIT: u64 = 400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(flatten)]
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(rename = "N")]
    pub level: u64,
    pub g: u64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| !matches!(c.status, CheckStatus::Fail(_)))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| matches!(c.status, CheckStatus::Fail(_)))
    }
}

struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    fn record(&mut self, name: impl Into<String>, status: CheckStatus) {
        self.checks.push(Check {
            name: name.into(),
            status,
        });
    }

    fn check(&mut self, name: impl Into<String>, outcome: Result<bool>) {
        let status = match outcome {
            Ok(true) => CheckStatus::Pass,
            Ok(false) => CheckStatus::Fail("identity does not hold".into()),
            Err(e) => CheckStatus::Fail(e.to_string()),
        };
        self.record(name, status);
    }

    fn skip(&mut self, name: impl Into<String>, reason: impl Into<String>) {
        self.record(name, CheckStatus::Skipped(reason.into()));
    }
}

/// Matrix symmetric, `A w = 0`, one-dimensional kernel spanned by `w`,
/// connected dual graph.
pub fn lattice_checks(fiber: &FiberModel) -> bool {
    let w = fiber.multiplicities();
    let kernel = kernel_basis(&fiber.matrix);
    fiber.matrix.is_symmetric()
        && fiber.row_sums().is_zero()
        && kernel.len() == 1
        && kernel[0] == w.normalized_integral()
        && fiber.is_connected()
}

fn fiber_checks(rec: &mut Recorder, fiber: &FiberModel, g: u64) {
    let tag = format!("p={} {}", fiber.p, fiber.model);
    rec.check(
        format!("{tag}: symmetric, kernel spanned by multiplicities"),
        Ok(lattice_checks(fiber)),
    );
    rec.check(
        format!("{tag}: canonical degree 2g-2"),
        Ok(fiber::fiber_canonical_degree_check(fiber) == rat(2 * g as i64 - 2)),
    );
    rec.check(
        format!("{tag}: closed-form u, v, w solve the system"),
        verify_closed_form(fiber, g),
    );
    rec.check(
        format!("{tag}: exact solve equals closed form"),
        (|| {
            for side in [CuspSide::Zero, CuspSide::Infinity] {
                if solve_vm(fiber, g, side)? != closed_form_vm(fiber, ClosedFormVector::Particular(side))? {
                    return Ok(false);
                }
            }
            Ok(true)
        })(),
    );
}

/// Runs all checks for one level. Levels outside the supported range are
/// an error; checks that need `g >= 2` are skipped for genus 1.
pub fn verify_level(level: u64) -> Result<VerificationReport> {
    let factored = arith::factor_level(level)?;
    check_level(&factored)?;
    if level == 1 || level == 25 {
        return Err(Error::unsupported(level, "X0(N) has genus 0"));
    }
    let inv = arith::invariants(&factored);
    let mut rec = Recorder { checks: Vec::new() };

    invariant_checks(&mut rec, &factored);

    for block in &factored.blocks {
        let (p, n, m) = (block.p, block.n, block.m);
        if p <= SUPERSINGULAR_PRIME_LIMIT {
            rec.check(
                format!("p={p}: k(p, M) matches supersingular counting"),
                (|| {
                    let k1 = arith::k_count(p, 1)?;
                    Ok(k1 == oracle::supersingular_j_count(p) && arith::k_count(p, m).is_ok())
                })(),
            );
        } else {
            rec.skip(
                format!("p={p}: k(p, M) matches supersingular counting"),
                "prime too large for brute force",
            );
        }

        let edixhoven = match fiber::build_edixhoven(p, n, m) {
            Ok(f) => f,
            Err(e) => {
                rec.record(
                    format!("p={p}: build Edixhoven fibre"),
                    CheckStatus::Fail(e.to_string()),
                );
                continue;
            }
        };
        fiber_checks(&mut rec, &edixhoven, inv.g);

        let minimal = match crate::minimal::fiber_for_level(&factored, p, ModelTag::Minimal) {
            Ok(f) => f,
            Err(e) => {
                rec.record(format!("p={p}: build minimal fibre"), CheckStatus::Fail(e.to_string()));
                continue;
            }
        };
        if m == 1 && n % 2 == 0 {
            fiber_checks(&mut rec, &minimal, inv.g);
            rec.check(
                format!("p={p}: composite and iterative blow-downs agree"),
                blow_down_composite(&edixhoven).map(|c| {
                    let it = blow_down_iterative(&edixhoven);
                    it == c && canonical_intersections(&it) == canonical_intersections(&c)
                }),
            );
        }
        rec.check(
            format!("p={p}: minimal model has no exceptional curves"),
            Ok(find_exceptional(&minimal).is_empty()),
        );

        let opicc = format!("p={p}: finite part equals ng + f/(12 d (p-1))");
        let gauge = format!("p={p}: finite part unchanged by kernel shifts");
        if inv.g < 2 {
            rec.skip(opicc, "genus below 2");
            rec.skip(gauge, "genus below 2");
            continue;
        }
        rec.check(
            opicc,
            fiber_coefficient(&minimal, inv.g).and_then(|c| Ok(c == closed_form_coefficient(p, n, m)?)),
        );
        rec.check(gauge, gauge_invariant(&minimal, inv.g));
    }

    Ok(VerificationReport {
        level,
        g: inv.g,
        checks: rec.checks,
    })
}

/// Recomputes the finite-part coefficient with `V_m + t w` for several `t`.
pub fn gauge_invariant(fiber: &FiberModel, g: u64) -> Result<bool> {
    let v0 = solve_vm(fiber, g, CuspSide::Zero)?;
    let vinf = solve_vm(fiber, g, CuspSide::Infinity)?;
    let base = combine_pairings(fiber, g, &v0, &vinf)?;
    for t in [rat(1), rat(-1), ratio(7, 3)] {
        let shifted0 = v0.shifted(fiber, &t)?;
        let shiftedinf = vinf.shifted(fiber, &(-&t * rat(2)))?;
        if combine_pairings(fiber, g, &shifted0, &vinf)? != base
            || combine_pairings(fiber, g, &v0, &shiftedinf)? != base
            || combine_pairings(fiber, g, &shifted0, &shiftedinf)? != base
        {
            return Ok(false);
        }
    }
    Ok(true)
}

fn invariant_checks(rec: &mut Recorder, level: &FactoredLevel) {
    let name = "invariants match coset enumeration";
    let inv = arith::invariants(level);
    if inv.d > ORACLE_INDEX_LIMIT {
        rec.skip(name, "index too large for enumeration");
        return;
    }
    let c = oracle::coset_counts(level.level);
    rec.check(
        name,
        Ok((c.index, c.eps2, c.eps3, c.cusps, c.genus) == (inv.d, inv.eps2, inv.eps3, inv.epsinf, inv.g)),
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_169_passes() {
        let r = verify_level(169).unwrap();
        assert_eq!(r.g, 8);
        assert!(r.all_passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.checks.iter().any(|c| c.name.contains("blow-downs agree")));
        assert!(r.checks.iter().all(|c| c.status == CheckStatus::Pass));
    }

    #[test]
    fn composite_and_genus_one() {
        for level in [23u64, 385, 1225, 11, 49] {
            let r = verify_level(level).unwrap();
            assert!(r.all_passed(), "N = {level}: {:?}", r.failures().collect::<Vec<_>>());
        }
        let r = verify_level(11).unwrap();
        assert!(r.checks.iter().any(|c| matches!(c.status, CheckStatus::Skipped(_))));
    }

    #[test]
    fn unsupported_levels() {
        for level in [5u64, 7, 13, 25, 15, 1] {
            assert!(
                matches!(verify_level(level), Err(Error::UnsupportedLevel { .. })),
                "N = {level}"
            );
        }
    }
}

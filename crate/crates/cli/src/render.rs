use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use x0n_core::arith::{self, FactoredLevel, Invariants, LevelBlock};
use x0n_core::divisors::{closed_form_vm, solve_vm, verify_closed_form, ClosedFormVector, CuspSide, VerticalDivisor};
use x0n_core::linalg::format_rational;
use x0n_core::selfint::{self, sweep_levels, SweepFilter};
use x0n_core::verify::CheckStatus;
use x0n_core::{Error, FiberModel, FinitePartResult, ModelTag, Rational, VerificationReport};

use crate::Failure;

const SWEEP_CHUNK: usize = 256;

pub fn json<T: Serialize>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

fn factor(level: u64) -> Result<FactoredLevel, Error> {
    let factored = arith::factor_level(level)?;
    if !factored.coprime_to_6 {
        return Err(Error::UnsupportedLevel {
            level,
            reason: "level not coprime to 6".into(),
        });
    }
    Ok(factored)
}

/// Rejects levels the models do not cover before any computation starts.
pub fn check_cli_level(level: u64) -> Result<FactoredLevel, Error> {
    let factored = factor(level)?;
    if arith::EXCLUDED_LEVELS.contains(&level) {
        return Err(Error::UnsupportedLevel {
            level,
            reason: "X0(N) has genus 0 and needs ad hoc models".into(),
        });
    }
    Ok(factored)
}

pub fn fiber_for(level: u64, p: u64, model: ModelTag) -> Result<FiberModel, Error> {
    let factored = check_cli_level(level)?;
    if p == 2 || p == 3 {
        return Err(Error::UnsupportedLevel {
            level,
            reason: format!("no regular model is available at p = {p}"),
        });
    }
    x0n_core::minimal::fiber_for_level(&factored, p, model)
}

#[derive(Serialize)]
struct InvariantsOutput<'a> {
    #[serde(rename = "N")]
    level: u64,
    #[serde(flatten)]
    invariants: Invariants,
    blocks: &'a [LevelBlock],
}

pub fn invariants(out: &mut dyn Write, level: u64, as_json: bool) -> Result<(), Failure> {
    let factored = factor(level)?;
    let inv = arith::invariants(&factored);
    if as_json {
        json(
            out,
            &InvariantsOutput {
                level,
                invariants: inv,
                blocks: &factored.blocks,
            },
        )?;
    } else {
        let blocks: Vec<String> = factored
            .blocks
            .iter()
            .map(|b| format!("{}^{} * {}", b.p, b.n, b.m))
            .collect();
        writeln!(out, "N = {level}")?;
        writeln!(out, "blocks p^n * M: {}", blocks.join(", "))?;
        writeln!(out, "index d = {}", inv.d)?;
        writeln!(out, "eps2 = {}, eps3 = {}, cusps = {}", inv.eps2, inv.eps3, inv.epsinf)?;
        writeln!(out, "genus g = {}", inv.g)?;
    }
    Ok(())
}

fn plain(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format_rational(r)
    }
}

pub fn fiber_csv(out: &mut dyn Write, fiber: &FiberModel) -> io::Result<()> {
    writeln!(out, "{}", fiber.labels().join(","))?;
    for row in fiber.matrix.rows() {
        let cells: Vec<String> = row.iter().map(plain).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn fiber_text(out: &mut dyn Write, fiber: &FiberModel) -> io::Result<()> {
    writeln!(
        out,
        "{} fibre over p = {} (n = {}, M = {}), {} components",
        fiber.model,
        fiber.p,
        fiber.n,
        fiber.m,
        fiber.len()
    )?;
    let labels = fiber.labels();
    let width = labels.iter().map(String::len).max().unwrap_or(1).max(4);
    writeln!(out, "{:width$}  mult  genus", "")?;
    for (label, c) in labels.iter().zip(&fiber.components) {
        writeln!(out, "{label:width$}  {:>4}  {:>5}", c.multiplicity, c.genus)?;
    }
    writeln!(out, "intersection matrix:")?;
    let cells: Vec<Vec<String>> = fiber.matrix.rows().map(|r| r.iter().map(plain).collect()).collect();
    let cell = cells.iter().flatten().map(String::len).max().unwrap_or(1).max(width);
    write!(out, "{:width$}", "")?;
    for label in &labels {
        write!(out, " {label:>cell$}")?;
    }
    writeln!(out)?;
    for (label, row) in labels.iter().zip(&cells) {
        write!(out, "{label:width$}")?;
        for c in row {
            write!(out, " {c:>cell$}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DivisorChecks {
    closed_form_residuals_zero: bool,
    solve_matches_closed_form_u: bool,
    solve_matches_closed_form_v: bool,
}

#[derive(Serialize)]
struct DivisorsOutput {
    #[serde(rename = "N")]
    level: u64,
    p: u64,
    n: u32,
    #[serde(rename = "M")]
    m: u64,
    model: ModelTag,
    g: u64,
    labels: Vec<String>,
    w: VerticalDivisor,
    u: VerticalDivisor,
    v: VerticalDivisor,
    checks: DivisorChecks,
}

pub fn divisors(out: &mut dyn Write, level: u64, p: u64, model: ModelTag, as_json: bool) -> Result<(), Failure> {
    let fiber = fiber_for(level, p, model)?;
    let g = arith::invariants_of(level)?.g;
    let u = solve_vm(&fiber, g, CuspSide::Zero)?;
    let v = solve_vm(&fiber, g, CuspSide::Infinity)?;
    let output = DivisorsOutput {
        level,
        p,
        n: fiber.n,
        m: fiber.m,
        model: fiber.model,
        g,
        labels: fiber.labels(),
        w: VerticalDivisor {
            p,
            coefficients: fiber.multiplicities(),
        },
        checks: DivisorChecks {
            closed_form_residuals_zero: verify_closed_form(&fiber, g)?,
            solve_matches_closed_form_u: u == closed_form_vm(&fiber, ClosedFormVector::Particular(CuspSide::Zero))?,
            solve_matches_closed_form_v: v == closed_form_vm(&fiber, ClosedFormVector::Particular(CuspSide::Infinity))?,
        },
        u,
        v,
    };
    if as_json {
        json(out, &output)?;
        return Ok(());
    }
    writeln!(
        out,
        "V_0 (u) and V_inf (v) over p = {p} for N = {level}, {} model, g = {g}",
        output.model
    )?;
    let width = output.labels.iter().map(String::len).max().unwrap_or(1);
    for (i, label) in output.labels.iter().enumerate() {
        writeln!(
            out,
            "{label:width$}  w = {:>4}  u = {:>14}  v = {:>14}",
            plain(&output.w.coefficients.0[i]),
            plain(&output.u.coefficients.0[i]),
            plain(&output.v.coefficients.0[i])
        )?;
    }
    let c = &output.checks;
    writeln!(out, "closed-form residuals zero: {}", c.closed_form_residuals_zero)?;
    writeln!(
        out,
        "solve matches closed form: u {}, v {}",
        c.solve_matches_closed_form_u, c.solve_matches_closed_form_v
    )?;
    Ok(())
}

pub fn finite_part_text(out: &mut dyn Write, r: &FinitePartResult) -> io::Result<()> {
    writeln!(out, "N = {}, g = {}", r.level, r.g)?;
    for c in &r.primes {
        writeln!(
            out,
            "p = {} (n = {}, M = {}): {} * log {}",
            c.p,
            c.n,
            c.m,
            format_rational(&c.coeff),
            c.p
        )?;
    }
    writeln!(out, "b ~ {:.12}", r.float_value)?;
    writeln!(out, "b / (g log N) ~ {:.12}", r.ratio_to_g_log_n)
}

pub fn sweep(out: &mut dyn Write, min: u64, max: u64, filter: SweepFilter) -> Result<(), Failure> {
    let levels = sweep_levels(min, max, filter);
    for chunk in levels.chunks(SWEEP_CHUNK) {
        let results: Vec<_> = chunk.par_iter().map(|&n| selfint::finite_part(n)).collect();
        for r in results {
            serde_json::to_writer(&mut *out, &r?).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn verify_text(out: &mut dyn Write, report: &VerificationReport) -> io::Result<()> {
    writeln!(out, "N = {}, g = {}", report.level, report.g)?;
    for c in &report.checks {
        match &c.status {
            CheckStatus::Pass => writeln!(out, "PASS  {}", c.name)?,
            CheckStatus::Fail(d) => writeln!(out, "FAIL  {}: {d}", c.name)?,
            CheckStatus::Skipped(d) => writeln!(out, "SKIP  {}: {d}", c.name)?,
        }
    }
    let failed = report.failures().count();
    if failed == 0 {
        writeln!(out, "all {} checks passed or skipped", report.checks.len())
    } else {
        writeln!(out, "{failed} of {} checks failed", report.checks.len())
    }
}

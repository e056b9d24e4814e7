//! Subcommand implementations.

use std::fmt::Write as _;

use qemetro::bayes::{run_estimation, EstimationConfig};
use qemetro::fisher::{cfim_total, closed_form_trace_inverse, qfim_total, scaling_exponent};
use qemetro::oracle::build_decoding_table;
use qemetro::{ClosedFormVariant, EvolutionTime, MagneticField, PrecisionPoint, ProbeBasis, ProbeSpec, Protocol, ScalingFit};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::checks::full_suite;
use crate::format::{fmt_g, parse_count_range, parse_float_range, quantize};
use crate::{BasisArg, BayesArgs, CliError, HeatmapArgs, OracleCheckArgs, OutputFormat, ProtocolArg, ScalingArgs, TableArgs, TableMode};

fn cell(v: Option<f64>) -> String {
    v.map(fmt_g).unwrap_or_default()
}

/// Numerical failures become missing values; anything else propagates.
fn soft<T>(r: qemetro::Result<T>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_numerical() => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn field_of(protocol: ProtocolArg, bx: f64, by: f64, bz: f64) -> Result<MagneticField<f64>, CliError> {
    if protocol != ProtocolArg::ThreeD && by != 0.0 {
        return Err(CliError::Validation("--by applies to the 3d protocol only".into()));
    }
    if bx == 0.0 && by == 0.0 && bz == 0.0 {
        return Err(CliError::Validation("the field must not vanish (b = 0 has no direction)".into()));
    }
    Ok(if protocol == ProtocolArg::ThreeD { MagneticField::new(bx, by, bz) } else { MagneticField::planar(bx, bz) })
}

fn probes_of(protocol: ProtocolArg, n: usize) -> Result<Vec<ProbeSpec>, CliError> {
    if n == 0 {
        return Err(CliError::Validation("--n must be at least 1".into()));
    }
    Ok(Protocol::from(protocol).probes(n))
}

#[derive(Serialize)]
struct HeatmapPoint {
    bx: f64,
    bz: f64,
    trace_inverse: Option<f64>,
}

/// `Tr[F^-1]` on every grid point; singular points are left empty.
pub fn heatmap(a: &HeatmapArgs, format: OutputFormat) -> Result<String, CliError> {
    let t = EvolutionTime::new(a.t)?;
    let by = quantize(a.by);
    let bxs = parse_float_range(&a.grid)?;
    let bzs = parse_float_range(a.grid_bz.as_deref().unwrap_or(&a.grid))?;
    let probes = probes_of(a.protocol, a.n)?;
    let cells: Vec<(f64, f64)> = bxs.iter().flat_map(|&bx| bzs.iter().map(move |&bz| (bx, bz))).collect();
    let fields = cells.iter().map(|&(bx, bz)| field_of(a.protocol, bx, by, bz)).collect::<Result<Vec<_>, _>>()?;
    let points = fields
        .par_iter()
        .map(|f| {
            let ti = match soft(cfim_total(&probes, f, t))? {
                Some(m) => soft(m.trace_inverse())?,
                None => None,
            };
            Ok(HeatmapPoint { bx: f.bx, bz: f.bz, trace_inverse: ti.map(quantize) })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({
            "protocol": a.protocol.name(),
            "n": a.n,
            "t": quantize(a.t),
            "by": by,
            "points": points,
        }))? + "\n"),
        _ => {
            let mut out = String::from("bx,bz,trace_inverse\n");
            for p in &points {
                writeln!(out, "{},{},{}", fmt_g(p.bx), fmt_g(p.bz), cell(p.trace_inverse)).expect("writing to a string");
            }
            Ok(out)
        }
    }
}

#[derive(Serialize)]
struct ScalingRow {
    n: usize,
    trace_inverse: Option<f64>,
    qfim_trace_inverse: Option<f64>,
    relative_gap: Option<f64>,
    closed_form: Option<f64>,
    /// Estimated components; fewer than all when the CFIM is singular and
    /// only the informative block is inverted.
    parameters: Vec<&'static str>,
    #[serde(skip)]
    failure: Option<qemetro::Error>,
}

const PARAMETER_NAMES: [&str; 3] = ["bx", "by", "bz"];

fn scaling_row(protocol: ProtocolArg, n: usize, field: &MagneticField<f64>, t: EvolutionTime<f64>) -> Result<ScalingRow, CliError> {
    let probes = probes_of(protocol, n)?;
    let names: &[usize] = if protocol == ProtocolArg::ThreeD { &[0, 1, 2] } else { &[0, 2] };
    let cfim = cfim_total(&probes, field, t)?;
    let inverted = if cfim.is_singular() { cfim.reduced_trace_inverse() } else { cfim.trace_inverse().map(|v| (v, (0..cfim.dim()).collect())) };
    let (ti, keep, failure) = match inverted {
        Ok((v, keep)) => (Some(v), keep, None),
        Err(e) if e.is_numerical() => (None, Vec::new(), Some(e)),
        Err(e) => return Err(e.into()),
    };
    let qti = match soft(qfim_total(&probes, field, t))? {
        Some(q) if !keep.is_empty() => soft(q.restricted_trace_inverse(&keep))?,
        _ => None,
    };
    let variant = match protocol {
        ProtocolArg::SingleZ => Some(ClosedFormVariant::SingleZ),
        ProtocolArg::SingleX => Some(ClosedFormVariant::SingleX),
        ProtocolArg::Dual => Some(ClosedFormVariant::Dual),
        _ => None,
    };
    let closed = match variant {
        Some(v) => soft(closed_form_trace_inverse(v, n, field, t))?,
        None => None,
    };
    let (ti, qti, closed) = (ti.map(quantize), qti.map(quantize), closed.map(quantize));
    let gap = match (ti, qti) {
        (Some(c), Some(q)) if q != 0.0 => Some(quantize((c - q).abs() / q)),
        _ => None,
    };
    Ok(ScalingRow {
        n,
        trace_inverse: ti,
        qfim_trace_inverse: qti,
        relative_gap: gap,
        closed_form: closed,
        parameters: keep.iter().map(|&i| PARAMETER_NAMES[names[i]]).collect(),
        failure,
    })
}

fn fit_curve(rows: &[ScalingRow], field: &MagneticField<f64>, t: f64, pick: impl Fn(&ScalingRow) -> Option<f64>) -> Option<ScalingFit<f64>> {
    let points: Vec<PrecisionPoint<f64>> =
        rows.iter().filter_map(|r| pick(r).map(|v| PrecisionPoint { n: r.n, field: *field, t, trace_inverse: v })).collect();
    scaling_exponent(&points).ok().map(|f| ScalingFit { beta: quantize(f.beta), intercept: quantize(f.intercept), r_squared: quantize(f.r_squared) })
}

/// Precision against `N` with fitted exponents `Tr ~ N^-beta`.
pub fn scaling(a: &ScalingArgs, format: OutputFormat) -> Result<String, CliError> {
    let t = EvolutionTime::new(a.t)?;
    let ns = parse_count_range(&a.n_range)?;
    if ns.len() < 3 {
        return Err(CliError::Validation("a scaling fit needs at least three values of N".into()));
    }
    let field = field_of(a.protocol, quantize(a.bx), quantize(a.by), quantize(a.bz))?;
    let rows = ns.par_iter().map(|&n| scaling_row(a.protocol, n, &field, t)).collect::<Result<Vec<_>, _>>()?;
    if let Some(e) = rows.iter().find_map(|r| r.failure.clone()).filter(|_| rows.iter().all(|r| r.trace_inverse.is_none())) {
        return Err(e.into());
    }
    let fits = json!({
        "cfim": fit_curve(&rows, &field, a.t, |r| r.trace_inverse),
        "qfim": fit_curve(&rows, &field, a.t, |r| r.qfim_trace_inverse),
        "closed_form": fit_curve(&rows, &field, a.t, |r| r.closed_form),
    });
    let beta = |k: &str| fits[k].get("beta").cloned().unwrap_or(Value::Null);
    let footer = json!({
        "protocol": a.protocol.name(),
        "field": { "bx": field.bx, "by": field.by, "bz": field.bz },
        "t": quantize(a.t),
        "beta": { "cfim": beta("cfim"), "qfim": beta("qfim"), "closed_form": beta("closed_form") },
        "fits": fits,
    });
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({ "rows": rows, "summary": footer }))? + "\n"),
        _ => {
            let mut out = String::from("n,trace_inverse,qfim_trace_inverse,relative_gap,closed_form,parameters\n");
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.n,
                    cell(r.trace_inverse),
                    cell(r.qfim_trace_inverse),
                    cell(r.relative_gap),
                    cell(r.closed_form),
                    r.parameters.join(";")
                )
                .expect("writing to a string");
            }
            writeln!(out, "# {}", serde_json::to_string(&footer)?).expect("writing to a string");
            Ok(out)
        }
    }
}

fn parse_prior_box(s: &str) -> Result<(f64, f64, f64, f64), CliError> {
    let v = parse_float_range(s)?;
    match v.as_slice() {
        &[a, b, c, d] => Ok((a, b, c, d)),
        _ => Err(CliError::Validation(format!("--prior-box needs four comma-separated values, got {s:?}"))),
    }
}

/// Simulated experiments, one estimate per repetition, and their spread
/// against the Cramér-Rao reference.
pub fn bayes(a: &BayesArgs, format: OutputFormat) -> Result<String, CliError> {
    if !matches!(a.protocol, ProtocolArg::SingleZ | ProtocolArg::SingleX | ProtocolArg::Dual) {
        return Err(CliError::Validation("estimation supports the single-z, single-x and dual protocols".into()));
    }
    if a.reps == 0 || a.shots == 0 {
        return Err(CliError::Validation("--reps and --shots must be positive".into()));
    }
    let t = EvolutionTime::new(a.t)?;
    let truth = field_of(a.protocol, quantize(a.bx), 0.0, quantize(a.bz))?;
    let probes = probes_of(a.protocol, a.n)?;
    let config = EstimationConfig { prior_box: parse_prior_box(&a.prior_box)?, grid: (a.cells, a.cells), band: a.band, ..Default::default() };
    config.validate()?;
    let result = run_estimation(&probes, &truth, t, a.shots, a.reps, &config, a.seed)?;
    let reference = match soft(cfim_total(&probes, &truth, t))? {
        Some(m) => soft(m.trace_inverse())?,
        None => None,
    };
    let m_tr = result.m_trace_cov().map(quantize);
    let reference = reference.map(quantize);
    let good: Vec<_> = result.estimates.iter().filter(|e| !e.flagged).collect();
    let mean = (!good.is_empty()).then(|| {
        let len = good.len() as f64;
        json!({
            "bx": quantize(good.iter().map(|e| e.bx).sum::<f64>() / len),
            "bz": quantize(good.iter().map(|e| e.bz).sum::<f64>() / len),
        })
    });
    let summary = json!({
        "protocol": a.protocol.name(),
        "n": a.n,
        "truth": { "bx": truth.bx, "bz": truth.bz },
        "t": quantize(a.t),
        "shots": a.shots,
        "reps": a.reps,
        "seed": a.seed,
        "flagged": result.flagged,
        "mean": mean,
        "covariance": result.covariance.map(|c| c.map(|row| row.map(quantize))),
        "m_trace_cov": m_tr,
        "trace_inverse": reference,
        "ratio": m_tr.zip(reference).map(|(x, y)| quantize(x / y)),
    });
    let rows: Vec<Value> = result
        .estimates
        .iter()
        .map(|e| {
            let est = |v: f64| if e.flagged { Value::Null } else { json!(quantize(v)) };
            json!({ "rep": e.rep, "bx_est": est(e.bx), "bz_est": est(e.bz), "flagged": e.flagged })
        })
        .collect();
    if let Some(path) = &a.summary {
        std::fs::write(path, serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&json!({ "estimates": rows, "summary": summary }))? + "\n"),
        _ => {
            let mut out = String::from("rep,bx_est,bz_est,flagged\n");
            for e in &result.estimates {
                let est = |v: f64| if e.flagged { String::new() } else { fmt_g(v) };
                writeln!(out, "{},{},{},{}", e.rep, est(e.bx), est(e.bz), u8::from(e.flagged)).expect("writing to a string");
            }
            if a.summary.is_none() {
                writeln!(out, "# {}", serde_json::to_string(&summary)?).expect("writing to a string");
            }
            Ok(out)
        }
    }
}

/// Largest code whose table is printed.
pub const MAX_TABLE_QUBITS: usize = 12;

/// Decoding table: stabilizer outcomes and the correction of each mode.
pub fn table(a: &TableArgs, format: OutputFormat) -> Result<String, CliError> {
    if a.n > MAX_TABLE_QUBITS {
        return Err(qemetro::Error::SizeLimit { qubits: a.n, limit: MAX_TABLE_QUBITS }.into());
    }
    let basis = match a.basis {
        BasisArg::Z => ProbeBasis::Z,
        BasisArg::X => ProbeBasis::X,
    };
    let modes: Vec<(&str, &str, bool)> = match a.mode {
        TableMode::AncillaFree => vec![("Ancilla-free", "ancilla_free", false)],
        TableMode::AncillaAssisted => vec![("Ancilla-assisted", "ancilla_assisted", true)],
        TableMode::Both => vec![("Ancilla-free", "ancilla_free", false), ("Ancilla-assisted", "ancilla_assisted", true)],
    };
    let tables = modes.iter().map(|m| build_decoding_table(a.n, basis, m.2)).collect::<Result<Vec<_>, _>>()?;
    let stabilizers = tables[0].stabilizer_labels();
    let sign = |s: i8| if s > 0 { "+1" } else { "-1" };
    let rows: Vec<(Vec<&str>, Vec<String>)> = (0..tables[0].syndrome_count())
        .map(|s| (tables[0].syndrome_signs(s).into_iter().map(sign).collect(), tables.iter().map(|t| t.correction_label(s)).collect()))
        .collect();
    match format {
        OutputFormat::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(signs, corr)| {
                    let mut row = serde_json::Map::new();
                    row.insert("outcomes".into(), json!(signs));
                    for (m, c) in modes.iter().zip(corr) {
                        row.insert(m.1.into(), json!(c));
                    }
                    Value::Object(row)
                })
                .collect();
            Ok(serde_json::to_string_pretty(&json!({ "n": a.n, "basis": format!("{basis:?}"), "stabilizers": stabilizers, "rows": rows }))? + "\n")
        }
        OutputFormat::Csv => {
            let mut out = stabilizers.join(",");
            for m in &modes {
                out.push(',');
                out.push_str(m.1);
            }
            out.push('\n');
            for (signs, corr) in &rows {
                writeln!(out, "{},{}", signs.join(","), corr.join(",")).expect("writing to a string");
            }
            Ok(out)
        }
        OutputFormat::Text => {
            let stab_w: Vec<usize> = stabilizers.iter().map(|s| s.len().max(2)).collect();
            let corr_w: Vec<usize> =
                modes.iter().enumerate().map(|(i, m)| rows.iter().map(|r| r.1[i].len()).max().unwrap_or(0).max(m.0.len())).collect();
            let line = |left: Vec<String>, right: Vec<String>| -> String {
                let l: Vec<String> = left.iter().zip(&stab_w).map(|(s, w)| format!("{s:<w$}")).collect();
                let r: Vec<String> = right.iter().zip(&corr_w).map(|(s, w)| format!("{s:<w$}")).collect();
                format!("{} || {}", l.join("  "), r.join("  ")).trim_end().to_string()
            };
            let mut out = String::new();
            let left_width = stab_w.iter().sum::<usize>() + 2 * (stab_w.len() - 1);
            let right_width = corr_w.iter().sum::<usize>() + 2 * (corr_w.len() - 1);
            writeln!(out, "{:<left_width$} || {}", "Stabilizer outcomes", "Correction").expect("writing to a string");
            writeln!(out, "{}", line(stabilizers.clone(), modes.iter().map(|m| m.0.to_string()).collect())).expect("writing to a string");
            writeln!(out, "{}-++-{}", "-".repeat(left_width), "-".repeat(right_width)).expect("writing to a string");
            for (signs, corr) in &rows {
                writeln!(out, "{}", line(signs.iter().map(|s| s.to_string()).collect(), corr.clone())).expect("writing to a string");
            }
            Ok(out)
        }
    }
}

/// Runs the oracle suite; any residual above its tolerance is an error.
pub fn oracle_check(a: &OracleCheckArgs, format: OutputFormat) -> Result<String, CliError> {
    if a.cells == 0 || a.max_qubits == 0 {
        return Err(CliError::Validation("--cells and --max-qubits must be positive".into()));
    }
    let reports = full_suite(a.max_qubits, a.cells, EvolutionTime::new(a.t)?)?;
    let out = match format {
        OutputFormat::Json => serde_json::to_string_pretty(&reports)? + "\n",
        _ => {
            let mut out = String::new();
            for r in &reports {
                writeln!(
                    out,
                    "{:<17} cases={:<6} max_residual={:<12} tolerance={:<6} {}{}",
                    r.name,
                    r.cases,
                    fmt_g(r.max_residual),
                    fmt_g(r.tolerance),
                    if r.passed() { "ok" } else { "FAIL" },
                    if r.worst.is_empty() { String::new() } else { format!("  worst: {}", r.worst) }
                )
                .expect("writing to a string");
            }
            out
        }
    };
    if reports.iter().all(|r| r.passed()) {
        Ok(out)
    } else {
        Err(CliError::CheckFailed(out))
    }
}

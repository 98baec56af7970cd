//! File formats: CSV and JSON emitters for skeletons, statistics,
//! sweeps and transform bounds, plus the CSV skeleton reader.
//!
//! CSV uses `.` decimals, `,` separators, Unix newlines and UTF-8, with
//! floats printed to 17 significant digits so a written skeleton re-reads
//! bit-identically. Lines starting with `#` are metadata/comment lines.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use bessel_skeleton::skeletons::{Branch, StepRecord};
use bessel_skeleton::statistics::{Histogram, RenewalStats, SweepTable};
use bessel_skeleton::transforms::BoundPoint;
use bessel_skeleton::{PathSkeleton, SkeletonKind, SkeletonPoint};

use crate::CliError;

/// 17 significant digits: enough for f64 round trips.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Metadata preamble stored as a `#`-comment on the first CSV line and as
/// the `spec` object in JSON documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkeletonMeta {
    pub kind: SkeletonKind,
    pub delta: f64,
    pub eps: f64,
    pub y0: f64,
    pub horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wf: Option<f64>,
    pub seed: u64,
}

impl SkeletonMeta {
    pub fn of(skel: &PathSkeleton, wi: Option<f64>, wf: Option<f64>, seed: u64) -> Self {
        SkeletonMeta {
            kind: skel.kind(),
            delta: skel.delta(),
            eps: skel.eps(),
            y0: skel.start(),
            horizon: skel.horizon(),
            wi,
            wf,
            seed,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SkeletonDoc<'a> {
    pub spec: &'a SkeletonMeta,
    pub n_points: u64,
    pub points: &'a [SkeletonPoint],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<&'a [StepRecord]>,
}

pub fn write_skeleton_csv(
    out: &mut dyn Write,
    meta: &SkeletonMeta,
    skel: &PathSkeleton,
    records: Option<&[StepRecord]>,
) -> std::io::Result<()> {
    writeln!(out, "# {}", serde_json::to_string(meta).expect("meta serializes"))?;
    if let Some(records) = records {
        writeln!(out, "n,u,s,y,branch,calY,calZ,pi1")?;
        for p in skel.points() {
            if p.n == 0 {
                writeln!(
                    out,
                    "0,{},{},{},n/a,{},{},{}",
                    fmt_float(p.u),
                    fmt_float(p.s),
                    fmt_float(p.y),
                    fmt_float(0.0),
                    fmt_float(0.0),
                    fmt_float(0.0)
                )?;
            } else {
                let r = records[(p.n - 1) as usize];
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    p.n,
                    fmt_float(p.u),
                    fmt_float(p.s),
                    fmt_float(p.y),
                    r.branch.as_str(),
                    fmt_float(r.cal_y),
                    fmt_float(r.cal_z),
                    fmt_float(r.pi1)
                )?;
            }
        }
    } else {
        writeln!(out, "n,u,s,y")?;
        for p in skel.points() {
            writeln!(
                out,
                "{},{},{},{}",
                p.n,
                fmt_float(p.u),
                fmt_float(p.s),
                fmt_float(p.y)
            )?;
        }
    }
    Ok(())
}

pub fn write_skeleton_json(
    out: &mut dyn Write,
    meta: &SkeletonMeta,
    skel: &PathSkeleton,
    records: Option<&[StepRecord]>,
) -> std::io::Result<()> {
    let doc = SkeletonDoc {
        spec: meta,
        n_points: skel.n_points(),
        points: skel.points(),
        records,
    };
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)
}

fn parse_float(field: &str, line_no: usize) -> Result<f64, CliError> {
    field
        .parse::<f64>()
        .map_err(|e| CliError::config(format!("line {line_no}: bad float {field:?}: {e}")))
}

/// Reads a skeleton CSV back; structural invariants are re-validated.
pub fn read_skeleton_csv(
    input: &mut dyn BufRead,
) -> Result<(SkeletonMeta, PathSkeleton, Option<Vec<StepRecord>>), CliError> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| CliError::config("empty skeleton file".to_string()))?;
    let first = first.map_err(CliError::io)?;
    let Some(rest) = first.strip_prefix('#') else {
        return Err(CliError::config(
            "skeleton file must start with a # metadata line".to_string(),
        ));
    };
    let meta: SkeletonMeta = serde_json::from_str(rest.trim())
        .map_err(|e| CliError::config(format!("line 1: bad metadata: {e}")))?;
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::config("missing CSV header".to_string()))?;
    let header = header.map_err(CliError::io)?;
    let with_records = match header.as_str() {
        "n,u,s,y" => false,
        "n,u,s,y,branch,calY,calZ,pi1" => true,
        other => {
            return Err(CliError::config(format!("unrecognized CSV header {other:?}")));
        }
    };
    let mut points = Vec::new();
    let mut records = Vec::new();
    for (no, line) in lines {
        let line = line.map_err(CliError::io)?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if with_records { 8 } else { 4 };
        if fields.len() != expected {
            return Err(CliError::config(format!(
                "line {}: expected {expected} fields, got {}",
                no + 1,
                fields.len()
            )));
        }
        let n: u64 = fields[0]
            .parse()
            .map_err(|e| CliError::config(format!("line {}: bad index: {e}", no + 1)))?;
        let point = SkeletonPoint {
            n,
            u: parse_float(fields[1], no + 1)?,
            s: parse_float(fields[2], no + 1)?,
            y: parse_float(fields[3], no + 1)?,
        };
        points.push(point);
        if with_records && n > 0 {
            let branch = match fields[4] {
                "integer-exit" => Branch::IntegerExit,
                "fractional-exit" => Branch::FractionalExit,
                other => {
                    return Err(CliError::config(format!(
                        "line {}: unknown branch {other:?}",
                        no + 1
                    )))
                }
            };
            records.push(StepRecord {
                branch,
                u: point.u,
                cal_y: parse_float(fields[5], no + 1)?,
                cal_z: parse_float(fields[6], no + 1)?,
                pi1: parse_float(fields[7], no + 1)?,
            });
        }
    }
    let skel = PathSkeleton::from_parts(
        meta.kind,
        meta.delta,
        meta.eps,
        meta.y0,
        meta.horizon,
        points,
    )
    .map_err(|e| CliError::config(format!("invalid skeleton data: {e}")))?;
    let records = if with_records { Some(records) } else { None };
    Ok((meta, skel, records))
}

#[derive(Debug, Serialize)]
pub struct HistRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
}

pub fn histogram_rows(h: &Histogram) -> Vec<HistRow> {
    h.counts
        .iter()
        .enumerate()
        .map(|(i, &count)| HistRow {
            bin_lo: h.edges[i],
            bin_hi: h.edges[i + 1],
            count,
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct StatsDoc {
    pub empirical: EmpiricalBlock,
    pub theory: TheoryBlock,
}

#[derive(Debug, Serialize)]
pub struct EmpiricalBlock {
    #[serde(rename = "mean_N")]
    pub mean_n: f64,
    #[serde(rename = "var_N")]
    pub var_n: f64,
    pub histogram: Vec<HistRow>,
}

#[derive(Debug, Serialize)]
pub struct TheoryBlock {
    /// `eps^2 E[N]` limit over the whole horizon.
    pub limit: f64,
    pub sigma2: f64,
    pub standardized_mean: f64,
    pub standardized_var: f64,
}

pub fn stats_doc(stats: &RenewalStats, limit: f64, sigma2: f64) -> StatsDoc {
    let n = stats.standardized.len() as f64;
    let mean = stats.standardized.iter().sum::<f64>() / n;
    let var = if stats.standardized.len() > 1 {
        stats
            .standardized
            .iter()
            .map(|z| (z - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    StatsDoc {
        empirical: EmpiricalBlock {
            mean_n: stats.mean_n,
            var_n: stats.var_n,
            histogram: histogram_rows(&stats.histogram),
        },
        theory: TheoryBlock {
            limit,
            sigma2,
            standardized_mean: mean,
            standardized_var: var,
        },
    }
}

pub fn write_stats_json(out: &mut dyn Write, doc: &StatsDoc) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, doc)?;
    writeln!(out)
}

pub fn write_histogram_csv(out: &mut dyn Write, h: &Histogram) -> std::io::Result<()> {
    writeln!(out, "bin_lo,bin_hi,count")?;
    for row in histogram_rows(h) {
        writeln!(
            out,
            "{},{},{}",
            fmt_float(row.bin_lo),
            fmt_float(row.bin_hi),
            row.count
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv(out: &mut dyn Write, table: &SweepTable) -> std::io::Result<()> {
    writeln!(out, "axis_value,mean_N,stderr_N,theory")?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_float(row.axis_value),
            fmt_float(row.mean_n),
            fmt_float(row.stderr_n),
            fmt_float(row.theory)
        )?;
    }
    if let Some(wi_star) = table.wi_star {
        writeln!(out, "wi_star,{},,", fmt_float(wi_star))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct TransformDoc<'a> {
    pub points: &'a [BoundPoint],
    #[serde(rename = "P_eps")]
    pub p_eps: f64,
    #[serde(rename = "P_eps_explicit", skip_serializing_if = "Option::is_none")]
    pub p_eps_explicit: Option<f64>,
}

pub fn write_transform_csv(out: &mut dyn Write, doc: &TransformDoc) -> std::io::Result<()> {
    writeln!(out, "t,lower,mid,upper")?;
    for p in doc.points {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_float(p.t),
            fmt_float(p.lower),
            fmt_float(p.mid),
            fmt_float(p.upper)
        )?;
    }
    // JSON footer carrying the precision variable.
    let footer = serde_json::json!({
        "P_eps": doc.p_eps,
        "P_eps_explicit": doc.p_eps_explicit,
    });
    writeln!(out, "# {footer}")
}

pub fn write_transform_json(out: &mut dyn Write, doc: &TransformDoc) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, doc)?;
    writeln!(out)
}

//! Monte Carlo harness around the generators: renewal-cost summaries of
//! the number of skeleton points, the limit and CLT constants of the two
//! renewal cost limits, the weight optimizer, and parameter sweeps.
//!
//! Repetition `k` of an experiment always runs on the stream
//! `(seed, stream_id = k)`, so results are reproducible and independent of
//! scheduling; reductions happen in stream order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::RngStream;
use crate::skeletons::{drive_brownian, drive_integer, drive_noninteger, StepOut};
use crate::special::{cost_f, normal_cdf, Quadrature};
use crate::types::{BesselSpec, WeightPair};

/// Which generator an experiment drives.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Brownian { start: f64, eps: f64 },
    Integer(BesselSpec),
    NonInteger(BesselSpec, WeightPair),
}

impl GeneratorSpec {
    pub fn eps(&self) -> f64 {
        match self {
            GeneratorSpec::Brownian { eps, .. } => *eps,
            GeneratorSpec::Integer(spec) => spec.eps(),
            GeneratorSpec::NonInteger(spec, _) => spec.eps(),
        }
    }
}

/// One Monte Carlo experiment: `reps` independent skeletons of the chosen
/// generator on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    pub horizon: f64,
    pub reps: u64,
    pub seed: u64,
    /// Histogram bin count override; Freedman-Diaconis when absent.
    pub bins: Option<usize>,
}

/// Per-repetition census: the stopping count, the skeleton point nearest
/// the horizon, and the worst step-bound excess seen along the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepSummary {
    pub n_points: u64,
    pub nearest_s: f64,
    pub nearest_y: f64,
    pub max_step_excess: f64,
}

fn one_rep(cfg: &ExperimentConfig, rep: u64) -> Result<RepSummary> {
    let mut stream = RngStream::new(cfg.seed, rep);
    let horizon = cfg.horizon;
    let mut count = 0u64;
    let mut max_excess = f64::NEG_INFINITY;
    let mut prev = (0.0f64, f64::NAN);
    let mut last = (0.0f64, f64::NAN);
    {
        let mut sink = |st: &StepOut| {
            count = st.n;
            let excess = (st.y - st.y_prev).abs() - st.dy_bound;
            if excess > max_excess {
                max_excess = excess;
            }
            prev = if st.n == 1 { (0.0, st.y_prev) } else { last };
            last = (st.s, st.y);
        };
        match &cfg.generator {
            GeneratorSpec::Brownian { start, eps } => {
                drive_brownian(&mut stream, *start, *eps, horizon, &mut sink)?
            }
            GeneratorSpec::Integer(spec) => drive_integer(&mut stream, spec, horizon, &mut sink)?,
            GeneratorSpec::NonInteger(spec, weights) => {
                drive_noninteger(&mut stream, spec, weights, horizon, &mut sink)?
            }
        }
    }
    // The last step has s >= horizon and the one before stops short of it.
    let (nearest_s, nearest_y) = if horizon - prev.0 <= last.0 - horizon && !prev.1.is_nan() {
        prev
    } else {
        last
    };
    Ok(RepSummary {
        n_points: count,
        nearest_s,
        nearest_y,
        max_step_excess: max_excess,
    })
}

#[cfg(feature = "parallel")]
fn map_reps(cfg: &ExperimentConfig) -> Result<Vec<RepSummary>> {
    use rayon::prelude::*;
    (0..cfg.reps)
        .into_par_iter()
        .map(|rep| one_rep(cfg, rep))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn map_reps(cfg: &ExperimentConfig) -> Result<Vec<RepSummary>> {
    map_reps_sequential(cfg)
}

fn map_reps_sequential(cfg: &ExperimentConfig) -> Result<Vec<RepSummary>> {
    (0..cfg.reps).map(|rep| one_rep(cfg, rep)).collect()
}

/// Runs the census over all repetitions, data-parallel across streams when
/// the `parallel` feature is enabled.
pub fn census(cfg: &ExperimentConfig) -> Result<Vec<RepSummary>> {
    validate_config(cfg)?;
    map_reps(cfg)
}

/// Single-threaded census, always available (used as the benchmark
/// baseline and as the fallback path).
pub fn census_sequential(cfg: &ExperimentConfig) -> Result<Vec<RepSummary>> {
    validate_config(cfg)?;
    map_reps_sequential(cfg)
}

fn validate_config(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.reps < 1 {
        return Err(Error::domain("experiment needs at least one repetition".to_string()));
    }
    if let GeneratorSpec::NonInteger(spec, weights) = &cfg.generator {
        weights.consistent_with(spec)?;
    }
    Ok(())
}

/// Binned counts of the stopping counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges; bin `i` covers `[edges[i], edges[i+1])`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Freedman-Diaconis binning by default; `bins` overrides the count.
    pub fn of_counts(values: &[u64], bins: Option<usize>) -> Histogram {
        assert!(!values.is_empty(), "histogram of an empty sample");
        let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        sorted.sort_unstable_by(f64::total_cmp);
        let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
        let n_bins = bins.unwrap_or_else(|| {
            let n = sorted.len() as f64;
            let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
            let width = 2.0 * iqr / n.cbrt();
            if width <= 0.0 || max == min {
                1
            } else {
                (((max - min) / width).ceil() as usize).clamp(1, 4096)
            }
        });
        let span = if max > min { max - min } else { 1.0 };
        // Nudge the top edge up so the maximum lands in the last bin.
        let width = span / n_bins as f64 * (1.0 + 1e-12);
        let edges: Vec<f64> = (0..=n_bins).map(|i| min + width * i as f64).collect();
        let mut counts = vec![0u64; n_bins];
        for &v in &sorted {
            let idx = (((v - min) / width) as usize).min(n_bins - 1);
            counts[idx] += 1;
        }
        Histogram { edges, counts }
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Empirical summaries of the stopping count `N` over the repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalStats {
    pub reps: u64,
    pub mean_n: f64,
    pub var_n: f64,
    /// CLT-normalized statistics, one per repetition, in stream order.
    pub standardized: Vec<f64>,
    pub histogram: Histogram,
    pub counts: Vec<u64>,
    /// Worst pathwise step-bound excess across all repetitions and steps;
    /// nonpositive means every step honored its bound.
    pub max_step_excess: f64,
}

/// Renewal-cost description of a generator: mean arrival `mu` of the
/// normalized step durations `u_n / eps^2`, the CLT variance constant
/// `sigma2` of the arrival law, and the limit of `eps^2 E[N_T]` per unit
/// horizon (`1/mu`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub mu: f64,
    pub sigma2: f64,
    pub limit_eps2_en: f64,
    arrival_sd: f64,
}

impl CostModel {
    /// Cost model of the integer-dimension skeleton (dimension 1 doubles as
    /// the Brownian skeleton). The normalized arrival is `e^(1-A)/delta`.
    pub fn integer_dimension(delta: u32) -> Result<CostModel> {
        if delta == 0 {
            return Err(Error::domain("dimension must be at least 1".to_string()));
        }
        let d = f64::from(delta);
        let nu = d / 2.0 - 1.0;
        let laplace1 = ((nu + 1.0) / (nu + 2.0)).powf(nu + 2.0);
        let laplace2 = ((nu + 1.0) / (nu + 3.0)).powf(nu + 2.0);
        let sigma2 = laplace2 - laplace1 * laplace1;
        let mu = std::f64::consts::E * laplace1 / d;
        Ok(CostModel {
            mu,
            sigma2,
            limit_eps2_en: 1.0 / mu,
            arrival_sd: std::f64::consts::E * sigma2.sqrt() / d,
        })
    }

    /// Cost model of the non-integer skeleton. The normalized arrival is
    /// `min((wi/delta_i) e^(1-A_i), (wf/delta_f) e^(1-A_f))`, whose mean and
    /// variance reduce to the cost functional `F`.
    pub fn non_integer(
        spec: &BesselSpec,
        weights: &WeightPair,
        quad: &Quadrature,
    ) -> Result<CostModel> {
        weights.consistent_with(spec)?;
        let (di, df) = spec.split()?;
        let (nu_i, nu_f) = (di / 2.0 - 1.0, df / 2.0 - 1.0);
        let (wi, wf) = (weights.wi(), weights.wf());
        let x = wf * di / (wi * df);
        let f1 = cost_f(
            x,
            nu_f + 2.0,
            1.0 / (nu_f + 1.0),
            nu_i + 2.0,
            1.0 / (nu_i + 1.0),
            quad,
        )?;
        let f2 = cost_f(
            x * x,
            nu_f + 2.0,
            2.0 / (nu_f + 1.0),
            nu_i + 2.0,
            2.0 / (nu_i + 1.0),
            quad,
        )?;
        let sigma2 = f2 - f1 * f1;
        let mu = std::f64::consts::E * wi / di * f1;
        Ok(CostModel {
            mu,
            sigma2,
            limit_eps2_en: 1.0 / mu,
            arrival_sd: std::f64::consts::E * wi / di * sigma2.max(0.0).sqrt(),
        })
    }

    pub fn for_generator(generator: &GeneratorSpec, quad: &Quadrature) -> Result<CostModel> {
        match generator {
            GeneratorSpec::Brownian { .. } => CostModel::integer_dimension(1),
            GeneratorSpec::Integer(spec) => {
                if !spec.is_integer() {
                    return Err(Error::flag_mismatch(
                        "integer cost model on a non-integer spec".to_string(),
                    ));
                }
                CostModel::integer_dimension(spec.delta() as u32)
            }
            GeneratorSpec::NonInteger(spec, weights) => {
                CostModel::non_integer(spec, weights, quad)
            }
        }
    }

    /// Standard deviation of `eps^2 N_T` for one path, from the renewal CLT
    /// `eps^2 N_T ~ T/mu + eps sqrt(T) sd(M)/mu^(3/2) G`.
    pub fn per_path_sd(&self, eps: f64, horizon: f64) -> f64 {
        eps * horizon.sqrt() * self.arrival_sd / self.mu.powf(1.5)
    }

    /// CLT-standardized statistic of one observed count.
    pub fn standardize(&self, eps: f64, horizon: f64, n: u64) -> f64 {
        (eps * eps * n as f64 - self.limit_eps2_en * horizon) / self.per_path_sd(eps, horizon)
    }
}

/// Limit of `eps^2 E[N_T]` for the integer-dimension skeleton:
/// `(delta T / e) ((nu+2)/(nu+1))^(nu+2)`.
pub fn integer_cost_limit(delta: u32, horizon: f64) -> Result<f64> {
    if delta == 0 {
        return Err(Error::domain("dimension must be at least 1".to_string()));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
    }
    let d = f64::from(delta);
    let nu = d / 2.0 - 1.0;
    Ok(d * horizon / std::f64::consts::E * ((nu + 2.0) / (nu + 1.0)).powf(nu + 2.0))
}

/// CLT variance constant of the integer-dimension cost:
/// `((nu+1)/(nu+3))^(nu+2) - ((nu+1)/(nu+2))^(2 nu+4)`, which equals
/// `Var(e^(1-A)) / e^2`.
pub fn integer_cost_sigma2(delta: u32) -> Result<f64> {
    if delta == 0 {
        return Err(Error::domain("dimension must be at least 1".to_string()));
    }
    let nu = f64::from(delta) / 2.0 - 1.0;
    Ok(((nu + 1.0) / (nu + 3.0)).powf(nu + 2.0)
        - ((nu + 1.0) / (nu + 2.0)).powf(2.0 * nu + 4.0))
}

/// Cost model of the non-integer skeleton per unit horizon.
pub fn noninteger_cost_model(
    spec: &BesselSpec,
    weights: &WeightPair,
    quad: &Quadrature,
) -> Result<CostModel> {
    CostModel::non_integer(spec, weights, quad)
}

/// Integer-side weight minimizing the cost upper bound:
/// `wi = ((sqrt(delta_i delta) - delta_i)/delta_f)^2`, the choice that
/// balances `delta_i/wi` against `delta_f/wf`.
pub fn optimal_wi(delta: f64) -> Result<f64> {
    if !delta.is_finite() || delta <= 1.0 || delta.fract() == 0.0 {
        return Err(Error::domain(format!(
            "optimal weight requires non-integer delta > 1, got {delta}"
        )));
    }
    let di = delta.floor();
    let df = delta - di;
    Ok((((di * delta).sqrt() - di) / df).powi(2))
}

/// Runs `reps` independent skeletons and summarizes the stopping counts;
/// data-parallel across streams under the `parallel` feature.
pub fn run_cost_experiment(cfg: &ExperimentConfig) -> Result<RenewalStats> {
    summarize(cfg, census(cfg)?)
}

/// Sequential twin of [`run_cost_experiment`].
pub fn run_cost_experiment_sequential(cfg: &ExperimentConfig) -> Result<RenewalStats> {
    summarize(cfg, census_sequential(cfg)?)
}

fn summarize(cfg: &ExperimentConfig, reps: Vec<RepSummary>) -> Result<RenewalStats> {
    let quad = Quadrature::with_rel_tol(1e-8);
    let model = CostModel::for_generator(&cfg.generator, &quad)?;
    let eps = cfg.generator.eps();
    let counts: Vec<u64> = reps.iter().map(|r| r.n_points).collect();
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = if counts.len() > 1 {
        counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    let standardized = counts
        .iter()
        .map(|&c| model.standardize(eps, cfg.horizon, c))
        .collect();
    let histogram = Histogram::of_counts(&counts, cfg.bins);
    let max_step_excess = reps
        .iter()
        .map(|r| r.max_step_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RenewalStats {
        reps: counts.len() as u64,
        mean_n: mean,
        var_n: var,
        standardized,
        histogram,
        counts,
        max_step_excess,
    })
}

/// Kolmogorov-Smirnov distance between the standardized statistics and the
/// standard normal law. Advisory only: moment checks are the acceptance
/// instrument, this distance is reported so drifts are visible.
pub fn ks_vs_normal(standardized: &[f64]) -> f64 {
    if standardized.is_empty() {
        return 0.0;
    }
    let mut sorted = standardized.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Sweep axis: integer dimension, inverse squared accuracy, or the
/// integer-side weight of the non-integer construction.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Dimension(Vec<u32>),
    InvEps2(Vec<f64>),
    Wi(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub base: ExperimentConfig,
    pub quad: Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub mean_n: f64,
    pub stderr_n: f64,
    /// Expected count `limit * horizon / eps^2` at this grid point.
    pub theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Reference optimal weight, emitted for the weight axis.
    pub wi_star: Option<f64>,
}

/// One experiment per grid point; every row reports the empirical mean,
/// its standard error and the theoretical expectation.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    let grid_len = match &cfg.axis {
        SweepAxis::Dimension(g) => g.len(),
        SweepAxis::InvEps2(g) => g.len(),
        SweepAxis::Wi(g) => g.len(),
    };
    if grid_len == 0 {
        return Err(Error::domain("sweep grid must be nonempty".to_string()));
    }
    let mut rows = Vec::with_capacity(grid_len);
    let mut wi_star = None;
    for idx in 0..grid_len {
        let (axis_value, generator) = grid_point(cfg, idx)?;
        let point_cfg = ExperimentConfig {
            generator,
            ..cfg.base.clone()
        };
        let model = CostModel::for_generator(&point_cfg.generator, &cfg.quad)?;
        let eps = point_cfg.generator.eps();
        let stats = run_cost_experiment(&point_cfg)?;
        rows.push(SweepRow {
            axis_value,
            mean_n: stats.mean_n,
            stderr_n: (stats.var_n / stats.reps as f64).sqrt(),
            theory: model.limit_eps2_en * point_cfg.horizon / (eps * eps),
        });
    }
    if let SweepAxis::Wi(_) = cfg.axis {
        if let GeneratorSpec::NonInteger(spec, _) = &cfg.base.generator {
            wi_star = Some(optimal_wi(spec.delta())?);
        }
    }
    Ok(SweepTable { rows, wi_star })
}

fn grid_point(cfg: &SweepConfig, idx: usize) -> Result<(f64, GeneratorSpec)> {
    match (&cfg.axis, &cfg.base.generator) {
        (SweepAxis::Dimension(grid), GeneratorSpec::Integer(spec)) => {
            let d = grid[idx];
            let new = BesselSpec::new(f64::from(d), spec.y0(), spec.eps(), true)?;
            Ok((f64::from(d), GeneratorSpec::Integer(new)))
        }
        (SweepAxis::Dimension(_), _) => Err(Error::domain(
            "dimension sweeps need an integer-dimension base generator".to_string(),
        )),
        (SweepAxis::InvEps2(grid), base) => {
            let inv = grid[idx];
            if !(inv > 0.0) {
                return Err(Error::domain(format!(
                    "1/eps^2 grid values must be positive, got {inv}"
                )));
            }
            let eps = (1.0 / inv).sqrt();
            let generator = match base {
                GeneratorSpec::Brownian { start, .. } => GeneratorSpec::Brownian {
                    start: *start,
                    eps,
                },
                GeneratorSpec::Integer(spec) => GeneratorSpec::Integer(BesselSpec::new(
                    spec.delta(),
                    spec.y0(),
                    eps,
                    true,
                )?),
                GeneratorSpec::NonInteger(spec, weights) => {
                    let new_spec = BesselSpec::new(spec.delta(), spec.y0(), eps, false)?;
                    let new_weights = WeightPair::new(spec.delta(), weights.wi(), eps)?;
                    GeneratorSpec::NonInteger(new_spec, new_weights)
                }
            };
            Ok((inv, generator))
        }
        (SweepAxis::Wi(grid), GeneratorSpec::NonInteger(spec, _)) => {
            let wi = grid[idx];
            let weights = WeightPair::new(spec.delta(), wi, spec.eps())?;
            Ok((wi, GeneratorSpec::NonInteger(*spec, weights)))
        }
        (SweepAxis::Wi(_), _) => Err(Error::domain(
            "weight sweeps need a non-integer base generator".to_string(),
        )),
    }
}

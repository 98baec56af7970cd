//! The three path generators: the Brownian skeleton, the integer-dimension
//! Bessel skeleton and the non-integer (split-dimension) Bessel skeleton,
//! each producing a `PathSkeleton` up to a horizon, plus the
//! piecewise-constant evaluator and bounding envelopes.
//!
//! Each step plants a time-space spheroid at the current point and jumps to
//! its exit time and exit position:
//!
//! * Brownian: `u_n = eps^2 e^(1 - A_n)` with `A_n ~ Gamma(3/2, 2)`, state
//!   update `x_n = x_(n-1) + Z_n phi(u_n)` with Rademacher `Z_n`.
//! * Integer dimension: `u_n = (eps^2/delta) e^(1 - A_n)` with
//!   `A_n ~ Gamma(nu+2, 1/(nu+1))`, state update through the cosine rule
//!   with the first coordinate `pi_1(V_n)` of a uniform sphere point.
//! * Non-integer dimension `delta = delta_i + delta_f`: each step races the
//!   integer-part spheroid against the fractional-part spheroid, takes the
//!   earlier exit, and draws the other component from the conditioned-exit
//!   sampler at doubled time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{
    cd_sample, gamma_sample, rademacher, sphere_first_coord, RngStream,
};
use crate::special::phi;
use crate::types::{BesselSpec, HeatBallParams, PathSkeleton, SkeletonKind, SkeletonPoint, WeightPair};

/// Which spheroid exited first in a non-integer step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    IntegerExit,
    FractionalExit,
    NotApplicable,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::IntegerExit => "integer-exit",
            Branch::FractionalExit => "fractional-exit",
            Branch::NotApplicable => "n/a",
        }
    }
}

/// Per-step diagnostics of the non-integer generator: which branch fired,
/// the step duration, the two radial components (integer part `calY`,
/// fractional part `calZ`) and the realized sphere projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub branch: Branch,
    pub u: f64,
    pub cal_y: f64,
    pub cal_z: f64,
    pub pi1: f64,
}

/// Piecewise-constant almost-sure bounds around a skeleton: on each
/// interval the true path stays within `[y_n - eps, y_n + eps]`, floored at
/// zero for Bessel skeletons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub times: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Source of the random primitives a generator consumes. Production code
/// draws from an `RngStream`; tests inject scripted sequences to force the
/// degenerate configurations.
pub(crate) trait DrawSource {
    fn gamma(&mut self, shape: f64, scale: f64) -> Result<f64>;
    fn sign(&mut self) -> f64;
    fn pi1(&mut self, delta: u32) -> Result<f64>;
    fn conditioned(&mut self, p: &HeatBallParams) -> f64;
}

impl DrawSource for RngStream {
    fn gamma(&mut self, shape: f64, scale: f64) -> Result<f64> {
        gamma_sample(self, shape, scale)
    }

    fn sign(&mut self) -> f64 {
        rademacher(self)
    }

    fn pi1(&mut self, delta: u32) -> Result<f64> {
        sphere_first_coord(self, delta)
    }

    fn conditioned(&mut self, p: &HeatBallParams) -> f64 {
        cd_sample(self, p).value
    }
}

/// One generated step as seen by a sink: index, duration, cumulative time,
/// previous and new state, the pathwise bound on `|y_n - y_(n-1)|` this
/// step must satisfy, and the non-integer diagnostics when applicable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepOut {
    pub n: u64,
    pub u: f64,
    pub s: f64,
    pub y_prev: f64,
    pub y: f64,
    pub dy_bound: f64,
    pub record: Option<StepRecord>,
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "horizon must be a finite positive real, got {horizon}"
        )))
    }
}

pub(crate) fn drive_brownian<D: DrawSource>(
    src: &mut D,
    start: f64,
    eps: f64,
    horizon: f64,
    sink: &mut impl FnMut(&StepOut),
) -> Result<()> {
    if !start.is_finite() {
        return Err(Error::domain(format!("start value must be finite, got {start}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("precision must be positive, got {eps}")));
    }
    check_horizon(horizon)?;
    let mut s = 0.0;
    let mut y = start;
    let mut n = 0u64;
    loop {
        n += 1;
        let a = src.gamma(1.5, 2.0)?;
        let u = eps * eps * (1.0 - a).exp();
        let width = phi(1.0, eps, u)?;
        let y_prev = y;
        y += src.sign() * width;
        s += u;
        sink(&StepOut {
            n,
            u,
            s,
            y_prev,
            y,
            dy_bound: width,
            record: None,
        });
        if s >= horizon {
            return Ok(());
        }
    }
}

pub(crate) fn drive_integer<D: DrawSource>(
    src: &mut D,
    spec: &BesselSpec,
    horizon: f64,
    sink: &mut impl FnMut(&StepOut),
) -> Result<()> {
    if !spec.is_integer() {
        return Err(Error::flag_mismatch(
            "integer-dimension generator requires an integer-flagged spec".to_string(),
        ));
    }
    check_horizon(horizon)?;
    let delta = spec.delta();
    let dim = delta as u32;
    let eps = spec.eps();
    let shape = spec.nu() + 2.0;
    let scale = 1.0 / (spec.nu() + 1.0);
    let mut s = 0.0;
    let mut y = spec.y0();
    let mut n = 0u64;
    loop {
        n += 1;
        let a = src.gamma(shape, scale)?;
        let u = eps * eps / delta * (1.0 - a).exp();
        let width = phi(delta, eps, u)?;
        let p1 = src.pi1(dim)?;
        let y_prev = y;
        // (y^2 + 2 p1 y w + w^2)^(1/2), grouped so the radicand cannot go
        // negative through cancellation.
        y = ((y + p1 * width).powi(2) + (1.0 - p1 * p1) * width * width).sqrt();
        s += u;
        sink(&StepOut {
            n,
            u,
            s,
            y_prev,
            y,
            dy_bound: width,
            record: None,
        });
        if s >= horizon {
            return Ok(());
        }
    }
}

pub(crate) fn drive_noninteger<D: DrawSource>(
    src: &mut D,
    spec: &BesselSpec,
    weights: &WeightPair,
    horizon: f64,
    sink: &mut impl FnMut(&StepOut),
) -> Result<()> {
    if spec.is_integer() {
        return Err(Error::flag_mismatch(
            "non-integer generator requires a non-integer-flagged spec".to_string(),
        ));
    }
    weights.consistent_with(spec)?;
    check_horizon(horizon)?;
    let (di, df) = spec.split()?;
    let eps = spec.eps();
    let (wi, wf) = (weights.wi(), weights.wf());
    let (nu_i, nu_f) = (di / 2.0 - 1.0, df / 2.0 - 1.0);
    let (shape_i, scale_i) = (nu_i + 2.0, 1.0 / (nu_i + 1.0));
    let (shape_f, scale_f) = (nu_f + 2.0, 1.0 / (nu_f + 1.0));
    let eps_i = eps * wi.sqrt();
    let eps_f = eps * wf.sqrt();
    let dim_i = di as u32;
    // Branch test threshold: A_f - A_n^(i) against ln(wf/wi) + ln(di/df),
    // which selects whichever candidate exit time is smaller.
    let threshold = (wf / wi).ln() + (di / df).ln();
    let mut s = 0.0;
    let mut y = spec.y0();
    let mut n = 0u64;
    loop {
        n += 1;
        let a_i = src.gamma(shape_i, scale_i)?;
        let a_f = src.gamma(shape_f, scale_f)?;
        let p1 = src.pi1(dim_i)?;
        // Ties (a probability-zero event) resolve to the integer branch.
        let (u, branch, cal_y, cal_z) = if a_f - a_i <= threshold {
            let u = eps * eps * wi / di * (1.0 - a_i).exp();
            let cal_y = phi(di, eps_i, u)?;
            let p = HeatBallParams::new(weights.alpha_f(), weights.beta_f(), 2.0 * u)?;
            let cal_z = src.conditioned(&p);
            (u, Branch::IntegerExit, cal_y, cal_z)
        } else {
            let u = eps * eps * wf / df * (1.0 - a_f).exp();
            let cal_z = phi(df, eps_f, u)?;
            let p = HeatBallParams::new(weights.alpha_i(), weights.beta_i(), 2.0 * u)?;
            let cal_y = src.conditioned(&p);
            (u, Branch::FractionalExit, cal_y, cal_z)
        };
        let y_prev = y;
        // (y^2 + 2 y p1 calY + calY^2 + calZ^2)^(1/2) in cancellation-proof
        // grouping.
        y = ((y + p1 * cal_y).powi(2) + (1.0 - p1 * p1) * cal_y * cal_y + cal_z * cal_z).sqrt();
        s += u;
        sink(&StepOut {
            n,
            u,
            s,
            y_prev,
            y,
            dy_bound: eps,
            record: Some(StepRecord {
                branch,
                u,
                cal_y,
                cal_z,
                pi1: p1,
            }),
        });
        if s >= horizon {
            return Ok(());
        }
    }
}

fn anchored_points(start: f64) -> Vec<SkeletonPoint> {
    vec![SkeletonPoint {
        n: 0,
        u: 0.0,
        s: 0.0,
        y: start,
    }]
}

/// Brownian skeleton from `start`, accurate to `eps` uniformly on
/// `[0, horizon]`.
pub fn brownian_skeleton(
    stream: &mut RngStream,
    start: f64,
    eps: f64,
    horizon: f64,
) -> Result<PathSkeleton> {
    let mut points = anchored_points(start);
    drive_brownian(stream, start, eps, horizon, &mut |st: &StepOut| {
        points.push(SkeletonPoint {
            n: st.n,
            u: st.u,
            s: st.s,
            y: st.y,
        });
    })?;
    Ok(PathSkeleton::from_generated(
        SkeletonKind::Brownian,
        1.0,
        eps,
        start,
        horizon,
        points,
    ))
}

/// Integer-dimension Bessel skeleton.
pub fn bessel_skeleton_integer(
    stream: &mut RngStream,
    spec: &BesselSpec,
    horizon: f64,
) -> Result<PathSkeleton> {
    let mut points = anchored_points(spec.y0());
    drive_integer(stream, spec, horizon, &mut |st: &StepOut| {
        points.push(SkeletonPoint {
            n: st.n,
            u: st.u,
            s: st.s,
            y: st.y,
        });
    })?;
    Ok(PathSkeleton::from_generated(
        SkeletonKind::BesselInteger,
        spec.delta(),
        spec.eps(),
        spec.y0(),
        horizon,
        points,
    ))
}

/// Non-integer Bessel skeleton, together with the per-step branch
/// diagnostics.
pub fn bessel_skeleton_noninteger(
    stream: &mut RngStream,
    spec: &BesselSpec,
    weights: &WeightPair,
    horizon: f64,
) -> Result<(PathSkeleton, Vec<StepRecord>)> {
    let mut points = anchored_points(spec.y0());
    let mut records = Vec::new();
    drive_noninteger(stream, spec, weights, horizon, &mut |st: &StepOut| {
        points.push(SkeletonPoint {
            n: st.n,
            u: st.u,
            s: st.s,
            y: st.y,
        });
        records.push(st.record.expect("non-integer steps always carry a record"));
    })?;
    Ok((
        PathSkeleton::from_generated(
            SkeletonKind::BesselNonInteger,
            spec.delta(),
            spec.eps(),
            spec.y0(),
            horizon,
            points,
        ),
        records,
    ))
}

/// Piecewise-constant evaluation `y_t = y_n` for `s_n <= t < s_(n+1)`
/// (right-continuous at the skeleton times).
pub fn evaluate(skeleton: &PathSkeleton, t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 || t > skeleton.horizon() {
        return Err(Error::domain(format!(
            "evaluation time {t} outside [0, {}]",
            skeleton.horizon()
        )));
    }
    let pts = skeleton.points();
    let idx = pts.partition_point(|p| p.s <= t);
    Ok(pts[idx - 1].y)
}

/// Almost-sure bounding tube around the skeleton: on each interval the
/// approximated path lies within `eps` of the skeleton value. For Bessel
/// skeletons the lower bound is floored at zero.
pub fn envelope(skeleton: &PathSkeleton) -> Envelope {
    let eps = skeleton.eps();
    let floor = skeleton.kind() != SkeletonKind::Brownian;
    let pts = skeleton.points();
    let mut times = Vec::with_capacity(pts.len());
    let mut lower = Vec::with_capacity(pts.len());
    let mut upper = Vec::with_capacity(pts.len());
    for p in pts {
        times.push(p.s);
        let lo = p.y - eps;
        lower.push(if floor { lo.max(0.0) } else { lo });
        upper.push(p.y + eps);
    }
    Envelope {
        times,
        lower,
        upper,
    }
}

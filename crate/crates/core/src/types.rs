//! Domain types shared by every module, with all parameter constraints
//! validated at construction.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform pathwise accuracy of the approximation, in the units of the
/// process state. Strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Precision(f64);

impl Precision {
    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 {
            Ok(Precision(eps))
        } else {
            Err(Error::domain(format!(
                "precision must be a finite positive real, got {eps}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Parameters of a Bessel process together with the target accuracy.
///
/// The index is tied to the dimension by `nu = delta/2 - 1`. Whether `delta`
/// is to be treated as an integer is declared by the caller, never inferred
/// from the floating-point value: a dimension like `2.0000000001` must not
/// silently select the integer-dimension algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselSpec {
    delta: f64,
    nu: f64,
    y0: f64,
    eps: Precision,
    integer: bool,
}

impl BesselSpec {
    /// Validates `delta >= 1`, `y0 >= 0`, `eps > 0` and the integer flag.
    pub fn new(delta: f64, y0: f64, eps: f64, integer: bool) -> Result<Self> {
        let eps = Precision::new(eps)?;
        if !delta.is_finite() || delta < 1.0 {
            return Err(Error::domain(format!(
                "Bessel dimension must satisfy delta >= 1, got {delta}"
            )));
        }
        if integer && delta.fract() != 0.0 {
            return Err(Error::flag_mismatch(format!(
                "dimension {delta} declared integer but has a fractional part"
            )));
        }
        if !y0.is_finite() || y0 < 0.0 {
            return Err(Error::domain(format!(
                "Bessel start value must satisfy y0 >= 0, got {y0}"
            )));
        }
        Ok(BesselSpec {
            delta,
            nu: delta / 2.0 - 1.0,
            y0,
            eps,
            integer,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Bessel index `nu = delta/2 - 1`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn eps(&self) -> f64 {
        self.eps.get()
    }

    pub fn is_integer(&self) -> bool {
        self.integer
    }

    /// Integer and fractional dimension components `(delta_i, delta_f)`
    /// used by the split construction. Requires a declared non-integer
    /// dimension strictly above 1.
    pub fn split(&self) -> Result<(f64, f64)> {
        if self.integer {
            return Err(Error::flag_mismatch(
                "dimension split requires a non-integer-flagged spec".to_string(),
            ));
        }
        let di = self.delta.floor();
        let df = self.delta - di;
        if di < 1.0 || df == 0.0 {
            return Err(Error::domain(format!(
                "dimension split requires non-integer delta > 1, got {}",
                self.delta
            )));
        }
        Ok((di, df))
    }
}

/// Spheroid-size split between the integer and fractional components of the
/// non-integer construction, tied by `wf + 2*sqrt(wi) = 1`, with the derived
/// constants `alpha_i = delta_i/2`, `alpha_f = delta_f/2`,
/// `beta_i = 2 e wi eps^2 / delta_i` and `beta_f = 2 e wf eps^2 / delta_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    wi: f64,
    wf: f64,
    alpha_i: f64,
    alpha_f: f64,
    beta_i: f64,
    beta_f: f64,
    delta: f64,
    eps: f64,
}

impl WeightPair {
    /// Builds the pair for a non-integer dimension `delta > 1` from the
    /// integer-side weight `wi` in `(0, 1/4)` and the accuracy `eps` the
    /// spheroids are sized for.
    pub fn new(delta: f64, wi: f64, eps: f64) -> Result<Self> {
        let eps = Precision::new(eps)?.get();
        if !delta.is_finite() || delta <= 1.0 || delta.fract() == 0.0 {
            return Err(Error::domain(format!(
                "weights are defined for non-integer delta > 1, got {delta}"
            )));
        }
        if !wi.is_finite() || wi <= 0.0 || wi >= 0.25 {
            return Err(Error::domain(format!(
                "integer-side weight must lie in (0, 1/4), got {wi}"
            )));
        }
        let wf = 1.0 - 2.0 * wi.sqrt();
        let di = delta.floor();
        let df = delta - di;
        let pair = WeightPair {
            wi,
            wf,
            alpha_i: di / 2.0,
            alpha_f: df / 2.0,
            beta_i: 2.0 * E * wi * eps * eps / di,
            beta_f: 2.0 * E * wf * eps * eps / df,
            delta,
            eps,
        };
        // Recompute and check the defining relation.
        if (pair.wf + 2.0 * pair.wi.sqrt() - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "weights violate wf + 2*sqrt(wi) = 1: wi={wi}, wf={wf}"
            )));
        }
        Ok(pair)
    }

    pub fn wi(&self) -> f64 {
        self.wi
    }

    pub fn wf(&self) -> f64 {
        self.wf
    }

    pub fn alpha_i(&self) -> f64 {
        self.alpha_i
    }

    pub fn alpha_f(&self) -> f64 {
        self.alpha_f
    }

    pub fn beta_i(&self) -> f64 {
        self.beta_i
    }

    pub fn beta_f(&self) -> f64 {
        self.beta_f
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Checks that the pair was built for exactly this spec's dimension and
    /// accuracy, so its `beta` constants size the right spheroids.
    pub fn consistent_with(&self, spec: &BesselSpec) -> Result<()> {
        if self.delta != spec.delta() || self.eps != spec.eps() {
            return Err(Error::domain(format!(
                "weight pair built for (delta={}, eps={}) used with (delta={}, eps={})",
                self.delta,
                self.eps,
                spec.delta(),
                spec.eps()
            )));
        }
        Ok(())
    }
}

/// One skeleton point: step duration `u`, cumulative time `s` and state `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkeletonPoint {
    pub n: u64,
    pub u: f64,
    pub s: f64,
    pub y: f64,
}

/// Which generator produced a skeleton. The pathwise step bounds and the
/// nonnegativity constraint depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkeletonKind {
    Brownian,
    BesselInteger,
    BesselNonInteger,
}

/// The full ordered list of skeleton points up to (and one step past) the
/// horizon, together with the parameters that produced it.
///
/// The approximating path is piecewise constant: it takes the value `y_n`
/// on `[s_n, s_{n+1})`. Generation stops at the first `s_n >= horizon`, so
/// the final point overshoots the horizon and `n_points` is the stopping
/// index `min { n >= 1 : s_n >= horizon }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSkeleton {
    kind: SkeletonKind,
    delta: f64,
    eps: f64,
    start: f64,
    horizon: f64,
    points: Vec<SkeletonPoint>,
    n_points: u64,
}

impl PathSkeleton {
    pub(crate) fn from_generated(
        kind: SkeletonKind,
        delta: f64,
        eps: f64,
        start: f64,
        horizon: f64,
        points: Vec<SkeletonPoint>,
    ) -> Self {
        let n_points = (points.len() - 1) as u64;
        PathSkeleton {
            kind,
            delta,
            eps,
            start,
            horizon,
            points,
            n_points,
        }
    }

    /// Rebuilds a skeleton from externally stored parts, re-validating every
    /// structural invariant.
    pub fn from_parts(
        kind: SkeletonKind,
        delta: f64,
        eps: f64,
        start: f64,
        horizon: f64,
        points: Vec<SkeletonPoint>,
    ) -> Result<Self> {
        let skel = PathSkeleton::from_generated(kind, delta, eps, start, horizon, points);
        skel.validate()?;
        Ok(skel)
    }

    pub fn kind(&self) -> SkeletonKind {
        self.kind
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The stopping index `N_T = min { n >= 1 : s_n >= horizon }`.
    pub fn n_points(&self) -> u64 {
        self.n_points
    }

    pub fn points(&self) -> &[SkeletonPoint] {
        &self.points
    }

    pub fn last(&self) -> &SkeletonPoint {
        self.points.last().expect("skeleton holds at least the start point")
    }

    /// Audits every structural invariant: the anchored start point, strict
    /// time monotonicity with `s_n = s_{n-1} + u_n`, the stopping rule, the
    /// per-step state bound of the generating algorithm, and nonnegativity
    /// for Bessel skeletons.
    pub fn validate(&self) -> Result<()> {
        let pts = &self.points;
        if pts.is_empty() {
            return Err(Error::domain("skeleton has no points".to_string()));
        }
        let p0 = pts[0];
        if p0.n != 0 || p0.u != 0.0 || p0.s != 0.0 || p0.y != self.start {
            return Err(Error::domain(
                "skeleton must start with (n=0, u=0, s=0, y0)".to_string(),
            ));
        }
        if pts.len() < 2 {
            return Err(Error::domain(
                "skeleton must contain at least one generated step".to_string(),
            ));
        }
        if self.n_points != (pts.len() - 1) as u64 {
            return Err(Error::domain(format!(
                "n_points {} disagrees with stored point count {}",
                self.n_points,
                pts.len() - 1
            )));
        }
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.n != a.n + 1 {
                return Err(Error::domain("skeleton indices must be consecutive".to_string()));
            }
            if !(b.u > 0.0) || b.s != a.s + b.u {
                return Err(Error::domain(format!(
                    "time increments must satisfy s_n = s_(n-1) + u_n with u_n > 0 at n={}",
                    b.n
                )));
            }
            let dy = (b.y - a.y).abs();
            let bound = match self.kind {
                SkeletonKind::BesselNonInteger => self.eps,
                SkeletonKind::Brownian | SkeletonKind::BesselInteger => {
                    crate::special::phi(self.delta, self.eps, b.u)?
                }
            };
            if dy > bound + 1e-12 {
                return Err(Error::domain(format!(
                    "step bound violated at n={}: |dy|={dy} exceeds {bound}",
                    b.n
                )));
            }
            if self.kind != SkeletonKind::Brownian && b.y < 0.0 {
                return Err(Error::domain(format!(
                    "Bessel skeleton state must stay nonnegative, got {} at n={}",
                    b.y, b.n
                )));
            }
        }
        // Stopping rule: every interior time is short of the horizon, the
        // last one reaches it.
        for p in &pts[..pts.len() - 1] {
            if p.s >= self.horizon {
                return Err(Error::domain(format!(
                    "interior skeleton time s_{} = {} already reaches the horizon {}",
                    p.n, p.s, self.horizon
                )));
            }
        }
        if self.last().s < self.horizon {
            return Err(Error::domain(format!(
                "skeleton stops at {} before the horizon {}",
                self.last().s,
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Parameter triple `(alpha, beta, t)` of the conditioned-exit density and
/// its rejection sampler; requires `alpha > 0` and `0 < t < beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatBallParams {
    alpha: f64,
    beta: f64,
    t: f64,
}

impl HeatBallParams {
    pub fn new(alpha: f64, beta: f64, t: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::domain(format!("beta must be positive, got {beta}")));
        }
        if !t.is_finite() || t <= 0.0 || t >= beta {
            return Err(Error::domain(format!(
                "time must satisfy 0 < t < beta, got t={t}, beta={beta}"
            )));
        }
        Ok(HeatBallParams { alpha, beta, t })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

//! Time-change/space-map layer `Y_t = f(t, Z_rho(t))` carrying a Bessel
//! skeleton onto related diffusions (CIR, inhomogeneous CIR, CEV), the
//! transported almost-sure bounds, and the precision variable measuring
//! the worst transported bound width over an observation window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::Quadrature;
use crate::types::PathSkeleton;

/// Square-root diffusion parameters
/// `dY = k (theta - Y) dt + sigma sqrt(Y) dB`, `Y_0 = x0`,
/// valid under `k theta > 0` and `sigma > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirParams {
    pub k: f64,
    pub theta: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl CirParams {
    pub fn new(k: f64, theta: f64, sigma: f64, x0: f64) -> Result<Self> {
        for (name, v) in [("k", k), ("theta", theta), ("sigma", sigma), ("x0", x0)] {
            if !v.is_finite() {
                return Err(Error::domain(format!("CIR parameter {name} must be finite, got {v}")));
            }
        }
        if k * theta <= 0.0 {
            return Err(Error::domain(format!(
                "CIR requires k*theta > 0, got k={k}, theta={theta}"
            )));
        }
        if sigma <= 0.0 {
            return Err(Error::domain(format!("CIR requires sigma > 0, got {sigma}")));
        }
        if x0 < 0.0 {
            return Err(Error::domain(format!("CIR start must be nonnegative, got {x0}")));
        }
        Ok(CirParams { k, theta, sigma, x0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Cir,
    InhomogeneousCir,
    Cev,
    Custom,
}

type Map2 = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Map1 = Box<dyn Fn(f64) -> f64 + Send + Sync>;

enum TimeChangeInv {
    Closed(Map1),
    /// Monotone bracketing plus Newton polish using the derivative of the
    /// time change.
    Bracketed { derivative: Map1 },
}

/// A target process expressed as `Y_t = f(t, Z_rho(t))` for a Bessel
/// process `Z` of dimension `delta` started at `bessel_start`, with `f`
/// continuous and `rho` a strictly increasing time change with
/// `rho(0) = 0`.
pub struct TransformSpec {
    kind: TransformKind,
    delta: f64,
    bessel_start: f64,
    monotone_in_x: bool,
    map: Map2,
    rho: Map1,
    inv: TimeChangeInv,
    /// Exponential decay rate of the CIR map, kept for the closed-form
    /// precision variable.
    cir_decay: Option<f64>,
}

impl TransformSpec {
    /// Assembles a user-supplied transform. The caller asserts monotonicity
    /// of `x -> f(t, x)` on `x >= 0` through the flag.
    pub fn custom(
        delta: f64,
        bessel_start: f64,
        monotone_in_x: bool,
        map: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        rho_inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> TransformSpec {
        TransformSpec {
            kind: TransformKind::Custom,
            delta,
            bessel_start,
            monotone_in_x,
            map: Box::new(map),
            rho: Box::new(rho),
            inv: TimeChangeInv::Closed(Box::new(rho_inverse)),
            cir_decay: None,
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    /// Bessel dimension the skeleton must be generated with.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Bessel start value the skeleton must be generated with.
    pub fn bessel_start(&self) -> f64 {
        self.bessel_start
    }

    pub fn monotone_in_x(&self) -> bool {
        self.monotone_in_x
    }

    /// Space map `f(t, x)`.
    pub fn map(&self, t: f64, x: f64) -> f64 {
        (self.map)(t, x)
    }

    /// Time change `rho(t)` from observation time to Bessel time.
    pub fn time_change(&self, t: f64) -> f64 {
        (self.rho)(t)
    }

    /// Inverse time change, from Bessel time back to observation time.
    pub fn time_change_inv(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::domain(format!(
                "time-change inversion needs s >= 0, got {s}"
            )));
        }
        match &self.inv {
            TimeChangeInv::Closed(f) => Ok(f(s)),
            TimeChangeInv::Bracketed { derivative } => {
                self.invert_bracketed(s, derivative.as_ref())
            }
        }
    }

    fn invert_bracketed(&self, s: f64, derivative: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0f64;
        let mut guard = 0;
        while (self.rho)(hi) < s {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::convergence(format!(
                    "time-change bracketing ran away inverting s={s}"
                )));
            }
        }
        let mut lo = 0.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (self.rho)(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi.max(1.0) {
                break;
            }
        }
        // Newton polish on the bisection midpoint.
        let mut t = 0.5 * (lo + hi);
        for _ in 0..6 {
            let d = derivative(t);
            if !(d > 0.0) {
                break;
            }
            let step = ((self.rho)(t) - s) / d;
            t -= step;
            if !t.is_finite() || t < 0.0 {
                t = 0.5 * (lo + hi);
                break;
            }
            if step.abs() <= 1e-13 * t.abs().max(1e-12) {
                break;
            }
        }
        Ok(t)
    }
}

/// CIR as a mapped Bessel process:
/// `f(t, x) = e^(-k t) x^2`, `rho(t) = (sigma^2 / 4 k)(e^(k t) - 1)`,
/// dimension `4 k theta / sigma^2`, start `sqrt(x0)`.
pub fn cir_transform(p: &CirParams) -> Result<TransformSpec> {
    let p = *p;
    CirParams::new(p.k, p.theta, p.sigma, p.x0)?;
    let k = p.k;
    let c = p.sigma * p.sigma / (4.0 * k);
    Ok(TransformSpec {
        kind: TransformKind::Cir,
        delta: 4.0 * k * p.theta / (p.sigma * p.sigma),
        bessel_start: p.x0.sqrt(),
        monotone_in_x: true,
        map: Box::new(move |t, x| (-k * t).exp() * x * x),
        rho: Box::new(move |t| c * ((k * t).exp() - 1.0)),
        inv: TimeChangeInv::Closed(Box::new(move |s| (s / c + 1.0).ln() / k)),
        cir_decay: Some(k),
    })
}

/// Inhomogeneous CIR `dY = (a - lambda(t) Y) dt + sigma sqrt(Y) dB` as a
/// mapped Bessel process: with `L(t) = int_0^t lambda`, the map is
/// `f(t, x) = e^(-L(t)) x^2` and
/// `rho(t) = (sigma^2/4) int_0^t e^(L(s)) ds`, dimension `4 a / sigma^2`.
/// The time change and its inverse are evaluated numerically.
pub fn inhomogeneous_cir_transform(
    a: f64,
    sigma: f64,
    lambda: impl Fn(f64) -> f64 + Send + Sync + 'static,
    x0: f64,
    quad: Quadrature,
) -> Result<TransformSpec> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("inhomogeneous CIR requires a > 0, got {a}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "inhomogeneous CIR requires sigma > 0, got {sigma}"
        )));
    }
    if !(x0 >= 0.0) || !x0.is_finite() {
        return Err(Error::domain(format!("start must be nonnegative, got {x0}")));
    }
    let lambda = std::sync::Arc::new(lambda);
    let cum = {
        let lambda = lambda.clone();
        move |t: f64| -> f64 {
            if t == 0.0 {
                0.0
            } else {
                quad.integrate(|u| lambda(u), 0.0, t)
                    .expect("cumulative rate integral")
            }
        }
    };
    let cum_map = cum.clone();
    let cum_rho = cum.clone();
    let cum_deriv = cum;
    let quarter_sig2 = sigma * sigma / 4.0;
    Ok(TransformSpec {
        kind: TransformKind::InhomogeneousCir,
        delta: 4.0 * a / (sigma * sigma),
        bessel_start: x0.sqrt(),
        monotone_in_x: true,
        map: Box::new(move |t, x| (-cum_map(t)).exp() * x * x),
        rho: Box::new(move |t| {
            if t == 0.0 {
                0.0
            } else {
                quarter_sig2
                    * quad
                        .integrate(|s| cum_rho(s).exp(), 0.0, t)
                        .expect("time-change integral")
            }
        }),
        inv: TimeChangeInv::Bracketed {
            derivative: Box::new(move |t| quarter_sig2 * cum_deriv(t).exp()),
        },
        cir_decay: None,
    })
}

/// CEV model `dY = Y (mu dt + sigma Y^beta dB)` as a mapped Bessel
/// process, on the parameter region `beta <= -1` (so the induced Bessel
/// dimension `2 + 1/beta` stays in `[1, 2)`): `Y^(-2 beta)` is a
/// square-root diffusion, which yields `f(t, x) = e^(mu t) x^(-1/beta)`
/// and an exponential (or linear, when `mu = 0`) time change.
pub fn cev_transform(mu: f64, sigma: f64, beta: f64, x0: f64) -> Result<TransformSpec> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!("CEV requires sigma > 0, got {sigma}")));
    }
    if !beta.is_finite() || beta > -1.0 {
        return Err(Error::domain(format!(
            "CEV reduction implemented for beta <= -1, got {beta}"
        )));
    }
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::domain(format!("CEV start must be positive, got {x0}")));
    }
    if !mu.is_finite() {
        return Err(Error::domain(format!("CEV drift must be finite, got {mu}")));
    }
    let alpha = -1.0 / beta;
    let delta = 2.0 + 1.0 / beta;
    let bessel_start = x0.powf(-beta);
    let map: Map2 = Box::new(move |t, x| (mu * t).exp() * x.powf(alpha));
    let (rho, inv): (Map1, TimeChangeInv) = if mu == 0.0 {
        let slope = beta * beta * sigma * sigma;
        (
            Box::new(move |t| slope * t),
            TimeChangeInv::Closed(Box::new(move |s| s / slope)),
        )
    } else {
        // rho(t) = (beta sigma^2 / 2 mu)(e^(2 beta mu t) - 1), increasing
        // for either sign of mu given beta < 0.
        let rate = 2.0 * beta * mu;
        let c = beta * sigma * sigma / (2.0 * mu);
        (
            Box::new(move |t| c * ((rate * t).exp() - 1.0)),
            TimeChangeInv::Closed(Box::new(move |s| (s / c + 1.0).ln() / rate)),
        )
    };
    Ok(TransformSpec {
        kind: TransformKind::Cev,
        delta,
        bessel_start,
        monotone_in_x: true,
        map,
        rho,
        inv,
        cir_decay: None,
    })
}

/// Transported bound triple at one observation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub t: f64,
    pub lower: f64,
    pub mid: f64,
    pub upper: f64,
}

/// Maps the skeleton envelope through a monotone transform: at each
/// skeleton time `s_n <= rho(t_obs)`, taken at `t = rho^-1(s_n)`, the true
/// path satisfies `f(t, max(y_n - eps, 0)) <= Y_t <= f(t, y_n + eps)`.
pub fn transported_bounds(
    spec: &TransformSpec,
    skeleton: &PathSkeleton,
    t_obs: f64,
) -> Result<Vec<BoundPoint>> {
    if !spec.monotone_in_x() {
        return Err(Error::Monotonicity);
    }
    if !(t_obs > 0.0) || !t_obs.is_finite() {
        return Err(Error::domain(format!(
            "observation horizon must be positive, got {t_obs}"
        )));
    }
    let s_end = spec.time_change(t_obs);
    if skeleton.last().s < s_end {
        return Err(Error::horizon(format!(
            "skeleton covers Bessel time {} but the window needs {}",
            skeleton.last().s,
            s_end
        )));
    }
    let eps = skeleton.eps();
    let mut out = Vec::new();
    for p in skeleton.points() {
        if p.s > s_end {
            break;
        }
        let t = spec.time_change_inv(p.s)?;
        let lower = spec.map(t, (p.y - eps).max(0.0));
        let mid = spec.map(t, p.y);
        let upper = spec.map(t, p.y + eps);
        if lower > upper {
            return Err(Error::Monotonicity);
        }
        out.push(BoundPoint {
            t,
            lower,
            mid,
            upper,
        });
    }
    Ok(out)
}

/// Worst transported bound width over the observation window, with the
/// closed-form route kept alongside for the homogeneous CIR map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionVariable {
    /// `sup_n |f(t_n, y_n + eps) - f(t_n, y_n - eps)|` over skeleton times
    /// in the window.
    pub from_definition: f64,
    /// CIR closed form `4 eps sup_n { y_n e^(-k t_n) }`.
    pub explicit: Option<f64>,
}

/// Precision variable of a squared-map transform over `[0, t_obs]`.
///
/// The width of the transported bound interval is piecewise monotone in
/// time between skeleton points, so the supremum over the continuous
/// window is attained at skeleton times; unlike the envelope, the
/// definition uses the unclamped pair `f(t, y +/- eps)`, for which the
/// squared map gives `|f(t, y+eps) - f(t, y-eps)| = 4 eps y |coef(t)|` at
/// every `y >= 0`.
pub fn precision_variable(
    spec: &TransformSpec,
    skeleton: &PathSkeleton,
    t_obs: f64,
) -> Result<PrecisionVariable> {
    match spec.kind() {
        TransformKind::Cir | TransformKind::InhomogeneousCir => {}
        _ => {
            return Err(Error::domain(
                "precision variable is defined for the squared (CIR-type) maps".to_string(),
            ))
        }
    }
    let s_end = spec.time_change(t_obs);
    if skeleton.last().s < s_end {
        return Err(Error::horizon(format!(
            "skeleton covers Bessel time {} but the window needs {}",
            skeleton.last().s,
            s_end
        )));
    }
    let eps = skeleton.eps();
    let mut sup_width = 0.0f64;
    let mut sup_decayed = 0.0f64;
    for p in skeleton.points() {
        if p.s > s_end {
            break;
        }
        let t = spec.time_change_inv(p.s)?;
        let width = (spec.map(t, p.y + eps) - spec.map(t, p.y - eps)).abs();
        sup_width = sup_width.max(width);
        if let Some(k) = spec.cir_decay {
            sup_decayed = sup_decayed.max(p.y * (-k * t).exp());
        }
    }
    Ok(PrecisionVariable {
        from_definition: sup_width,
        explicit: spec.cir_decay.map(|_| 4.0 * eps * sup_decayed),
    })
}

//! Deterministic analytic machinery: the spheroid boundary `phi`, the
//! conditioned-exit density ingredients (`u`, `rho`, `kappa`), the lower
//! incomplete gamma function, the cost functional `F` of the non-integer
//! construction, and the diagnostic constants `eta(delta)` and
//! `E|pi_1(V)|`.
//!
//! Everything here is a pure function; concurrent use is unrestricted.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::types::HeatBallParams;

const MAX_ITER: usize = 500;

/// Controls for the deterministic integrations used as oracles and for
/// the cost functional.
///
/// The rule is tanh-sinh (double-exponential): nodes condense
/// doubly-exponentially toward the endpoints, so integrable endpoint
/// singularities such as the `s^(a-1)` factor of a gamma density are
/// handled without special-casing, and smooth integrands converge at a
/// spectral rate. `max_subdivisions` bounds the level-doubling
/// refinements.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub max_subdivisions: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            rel_tol: 1e-10,
            max_subdivisions: 12,
        }
    }
}

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Quadrature {
            rel_tol,
            ..Quadrature::default()
        }
    }

    /// Integrates `f` over the finite interval `[a, b]`. Endpoints are
    /// never evaluated; non-finite interior values are dropped, which
    /// amounts to truncating an integrable singularity at negligible
    /// distance from the endpoint.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::domain("quadrature tolerance must be positive".to_string()));
        }
        if a == b {
            return Ok(0.0);
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::domain(format!(
                "quadrature needs a finite interval, got [{a}, {b}]"
            )));
        }
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        // t = 0 node: weight (pi/2) sech^2(0) cosh(0) = pi/2.
        let f0 = f(center);
        let mut sum = if f0.is_finite() {
            std::f64::consts::FRAC_PI_2 * f0
        } else {
            0.0
        };
        let mut h = 1.0f64;
        add_level_nodes(&f, a, b, half, h, 1, &mut sum);
        let mut prev = half * h * sum;
        for level in 1..=self.max_subdivisions.max(4) {
            h *= 0.5;
            add_level_nodes(&f, a, b, half, h, 2, &mut sum);
            let estimate = half * h * sum;
            if level >= 3 {
                let err = (estimate - prev).abs();
                if err <= self.rel_tol * estimate.abs().max(f64::MIN_POSITIVE) {
                    return Ok(estimate);
                }
            }
            prev = estimate;
        }
        Err(Error::convergence(format!(
            "tanh-sinh refinement did not reach rel_tol={} on [{a}, {b}]",
            self.rel_tol
        )))
    }
}

/// Adds the tanh-sinh nodes `t = j h` for odd `j` (or all `j >= 1` when
/// `stride` is 1, used once at the coarsest level) into the running
/// weighted sum.
fn add_level_nodes<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    half: f64,
    h: f64,
    stride: u64,
    sum: &mut f64,
) {
    let mut j = 1u64;
    loop {
        let t = j as f64 * h;
        if t > 6.5 {
            break;
        }
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        // 1 - tanh(u) = 2 e^(-2u) / (1 + e^(-2u)), kept in this form so the
        // distance to the endpoint never collapses to zero prematurely.
        let eu = (-2.0 * u).exp();
        if eu == 0.0 {
            break;
        }
        let offset = half * 2.0 * eu / (1.0 + eu);
        let weight =
            std::f64::consts::FRAC_PI_2 * t.cosh() * 4.0 * eu / ((1.0 + eu) * (1.0 + eu));
        if offset == 0.0 || weight == 0.0 {
            break;
        }
        let fp = f(b - offset);
        if fp.is_finite() {
            *sum += weight * fp;
        }
        let fm = f(a + offset);
        if fm.is_finite() {
            *sum += weight * fm;
        }
        j += stride;
    }
}

/// Right endpoint `r = e * eps^2 / delta` of the spheroid time window.
pub fn spheroid_window(delta: f64, eps: f64) -> f64 {
    E * eps * eps / delta
}

/// Spheroid boundary `phi(t) = sqrt(delta * t * ln(e eps^2 / (delta t)))`
/// on `[0, e eps^2 / delta]`.
///
/// The curve vanishes at both endpoints (taken as exact zeros by
/// continuity) and reaches its maximum `eps` at `t = eps^2 / delta`.
/// Inputs within one ulp outside the window are clamped; anything farther
/// out is a domain error.
pub fn phi(delta: f64, eps: f64, t: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!("phi requires delta > 0, got {delta}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("phi requires eps > 0, got {eps}")));
    }
    let r = spheroid_window(delta, eps);
    let slack = 2.0 * f64::EPSILON * r;
    if !t.is_finite() || t < -slack || t > r + slack {
        return Err(Error::domain(format!(
            "phi evaluated outside its window: t={t}, window=[0, {r}]"
        )));
    }
    if t <= 0.0 || t >= r {
        return Ok(0.0);
    }
    // ln(e eps^2/(delta t)) can round to a tiny negative right at the
    // endpoint; clamp the product at zero before the square root.
    let log_term = (E * eps * eps / (delta * t)).ln();
    Ok((delta * t * log_term).max(0.0).sqrt())
}

/// Heat-ball density ingredient
/// `u(t, x) = t^-alpha * exp(-x^2/t) - beta^-alpha`.
///
/// Positive exactly on `x in [0, rho)` and negative beyond.
pub fn u_alpha_beta(p: &HeatBallParams, x: f64) -> f64 {
    let (alpha, beta, t) = (p.alpha(), p.beta(), p.t());
    (-alpha * t.ln() - x * x / t).exp() - (-alpha * beta.ln()).exp()
}

/// Positive zero `rho = sqrt(alpha * t * ln(beta/t))` of `x -> u(t, x)`.
pub fn rho(p: &HeatBallParams) -> f64 {
    (p.alpha() * p.t() * (p.beta() / p.t()).ln()).sqrt()
}

/// Lower incomplete gamma function `gamma(a, x) = int_0^x y^(a-1) e^-y dy`.
///
/// Series expansion for `x < a + 1`, continued fraction for the upper tail
/// otherwise.
pub fn lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "incomplete gamma requires a > 0, got {a}"
        )));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "incomplete gamma requires x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // x^a e^-x without intermediate overflow.
    let prefactor = (a * x.ln() - x).exp();
    if x < a + 1.0 {
        Ok(prefactor * gamma_series_sum(a, x)?)
    } else {
        let upper = prefactor * gamma_cf(a, x)?;
        Ok(ln_gamma(a).exp() - upper)
    }
}

/// Regularized pair `(P(a,x), Q(a,x))` with `P + Q = 1`.
pub(crate) fn reg_gamma_pq(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || x < 0.0 {
        return Err(Error::domain(format!(
            "regularized gamma requires a > 0 and x >= 0, got a={a}, x={x}"
        )));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    let prefactor = (a * x.ln() - x - ln_gamma(a)).exp();
    if x < a + 1.0 {
        let p = prefactor * gamma_series_sum(a, x)?;
        Ok((p, 1.0 - p))
    } else {
        let q = prefactor * gamma_cf(a, x)?;
        Ok((1.0 - q, q))
    }
}

/// Series `sum_n x^n / (a (a+1) ... (a+n))`, so that
/// `gamma(a,x) = x^a e^-x * sum`.
fn gamma_series_sum(a: f64, x: f64) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(sum);
        }
    }
    Err(Error::convergence(format!(
        "incomplete gamma series stalled at a={a}, x={x}"
    )))
}

/// Modified Lentz continued fraction for the upper tail, so that
/// `Gamma(a,x) = x^a e^-x * cf`.
fn gamma_cf(a: f64, x: f64) -> Result<f64> {
    let tiny = 1e-300;
    let b0 = x + 1.0 - a;
    let mut f = if b0.abs() < tiny { tiny } else { b0 };
    let mut c = f;
    let mut d = 0.0;
    for n in 1..=MAX_ITER {
        let nf = n as f64;
        let an = nf * (a - nf);
        let bn = x + 2.0 * nf + 1.0 - a;
        d = bn + an * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = 1.0 / d;
        c = bn + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(1.0 / f);
        }
    }
    Err(Error::convergence(format!(
        "incomplete gamma continued fraction stalled at a={a}, x={x}"
    )))
}

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for positive arguments (Lanczos).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the approximation in its accurate range.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Normalization constant of the conditioned-exit density:
/// `kappa = (1/2 alpha) * gamma(alpha + 1, alpha ln(beta/t))`, equal to
/// `int_0^rho u(t, y) y^(2 alpha - 1) dy`.
pub fn kappa(p: &HeatBallParams) -> Result<f64> {
    let alpha = p.alpha();
    let l = alpha * (p.beta() / p.t()).ln();
    Ok(lower_incomplete_gamma(alpha + 1.0, l)? / (2.0 * alpha))
}

/// Mean trial count of the rejection sampler:
/// `alpha^alpha * ln(beta/t)^alpha * (1 - (t/beta)^alpha) / gamma(alpha+1, alpha ln(beta/t))`.
pub fn expected_trials(p: &HeatBallParams) -> Result<f64> {
    let alpha = p.alpha();
    let log_ratio = (p.beta() / p.t()).ln();
    let l = alpha * log_ratio;
    let num = (alpha * (alpha.ln() + log_ratio.ln())).exp() * (1.0 - (-l).exp());
    Ok(num / lower_incomplete_gamma(alpha + 1.0, l)?)
}

/// Cost functional `F(x, a, lambda, b, mu) = E[min(x e^-A, e^-B)]` for
/// independent `A ~ Gamma(a, lambda)` and `B ~ Gamma(b, mu)` (shape/scale).
///
/// Evaluated deterministically: the expectation over `B` is reduced in
/// closed form through the regularized incomplete gamma function, and the
/// remaining one-dimensional integral over the law of `A` is done by
/// adaptive quadrature. Below the kink `s = ln x` the minimum is always
/// `e^-B`, whose contribution is itself closed-form.
pub fn cost_f(x: f64, a: f64, lambda: f64, b: f64, mu: f64, quad: &Quadrature) -> Result<f64> {
    for (name, v) in [("x", x), ("a", a), ("lambda", lambda), ("b", b), ("mu", mu)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!(
                "cost functional requires {name} > 0, got {v}"
            )));
        }
    }
    let ln_x = x.ln();
    let laplace_b = (1.0 + mu).powf(-b);
    let mut total = 0.0;
    if ln_x > 0.0 {
        // A below the kink: min(x e^-A, e^-B) = e^-B with certainty.
        let (p_below, _) = reg_gamma_pq(a, ln_x / lambda)?;
        total += laplace_b * p_below;
    }
    let lo = ln_x.max(0.0);
    let hi = lo + lambda * (3.0 * a + 120.0);
    let ln_norm = ln_gamma(a) + a * lambda.ln();
    // The gamma-density endpoint factor s^(a-1) is left to the
    // double-exponential rule, which absorbs it for any shape a > 0.
    let integrand = |s: f64| -> f64 {
        let c = (s - ln_x).max(0.0);
        let (p_acc, _) = reg_gamma_pq(b, c / mu).unwrap_or((f64::NAN, f64::NAN));
        let (_, q_tail) = reg_gamma_pq(b, c * (1.0 + mu) / mu).unwrap_or((f64::NAN, f64::NAN));
        let conditional = x * (-s).exp() * p_acc + laplace_b * q_tail;
        ((a - 1.0) * s.ln() - s / lambda - ln_norm).exp() * conditional
    };
    total += quad.integrate(integrand, lo, hi)?;
    Ok(total)
}

/// Mean spheroid size relative to `eps`:
/// `eta(delta) = sqrt(2 pi e) * Gamma(delta) / Gamma(delta/2)^2
///             * delta^(delta/2) / (delta+1)^((delta+1)/2) * 2^(1-delta)`,
/// so that the expected exit radius is `eps * eta(delta)`. Computed in log
/// space to survive large dimensions.
pub fn eta(delta: f64) -> Result<f64> {
    if !(delta >= 1.0) || !delta.is_finite() {
        return Err(Error::domain(format!("eta requires delta >= 1, got {delta}")));
    }
    let ln_eta = 0.5 * (2.0 * PI * E).ln() + ln_gamma(delta) - 2.0 * ln_gamma(delta / 2.0)
        + 0.5 * delta * delta.ln()
        - 0.5 * (delta + 1.0) * (delta + 1.0).ln()
        + (1.0 - delta) * 2f64.ln();
    Ok(ln_eta.exp())
}

/// `E[|pi_1(V)|]` for `V` uniform on the unit sphere in integer dimension
/// `delta`, through the Wallis-product expansion with the Gaussian moment
/// integrals. Dimension 1 degenerates to `|pi_1| = 1`.
pub fn mean_abs_first_coord(delta: u32) -> Result<f64> {
    if delta == 0 {
        return Err(Error::domain("sphere dimension must be at least 1".to_string()));
    }
    if delta == 1 {
        return Ok(1.0);
    }
    let d = f64::from(delta);
    // ln of int_0^inf r^(delta-1) e^(-r^2/2) dr by parity of delta - 1.
    let ln_radial = if (delta - 1).is_multiple_of(2) {
        let k = f64::from((delta - 1) / 2);
        0.5 * (PI / 2.0).ln() + ln_gamma(2.0 * k + 1.0) - k * 2f64.ln() - ln_gamma(k + 1.0)
    } else {
        let k = f64::from((delta - 2) / 2);
        k * 2f64.ln() + ln_gamma(k + 1.0)
    };
    // ln of the Wallis product W_0 * W_1 * ... * W_(delta-3); empty for
    // dimension 2.
    let mut ln_w = [(PI / 2.0).ln(), 0.0]; // W_0, W_1
    let mut ln_product = 0.0;
    if delta >= 3 {
        for n in 0..=delta - 3 {
            if n >= 2 {
                let nf = f64::from(n);
                ln_w[(n % 2) as usize] += ((nf - 1.0) / nf).ln();
            }
            ln_product += ln_w[(n % 2) as usize];
        }
    }
    let ln_value =
        d * 2f64.ln() - (d - 1.0).ln() - 0.5 * d * (2.0 * PI).ln() + ln_radial + ln_product;
    Ok(ln_value.exp())
}

/// Standard normal CDF through the regularized incomplete gamma function.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let (p, _) = reg_gamma_pq(0.5, 0.5 * x * x).expect("finite nonnegative arguments");
    if x >= 0.0 {
        0.5 * (1.0 + p)
    } else {
        0.5 * (1.0 - p)
    }
}

//! Seeded generation of every random primitive the skeleton algorithms
//! consume: Gamma variates, Rademacher signs, the first coordinate of a
//! uniform point on the sphere, and the rejection sampler for the
//! conditioned exit position.
//!
//! A stream is single-owner; independent streams (distinct `stream_id`)
//! may run concurrently and reproduce bitwise-identical sequences for
//! identical `(seed, stream_id)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, Open01};

use crate::error::{Error, Result};
use crate::special::{rho, spheroid_window};
use crate::types::HeatBallParams;

/// A reproducible random stream addressed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// One Gamma(shape, scale) variate.
pub fn gamma_sample(stream: &mut RngStream, shape: f64, scale: f64) -> Result<f64> {
    let dist = Gamma::new(shape, scale)
        .map_err(|e| Error::domain(format!("gamma parameters shape={shape}, scale={scale}: {e}")))?;
    Ok(dist.sample(stream.rng()))
}

/// A Rademacher sign: +1 or -1 with probability 1/2 each.
pub fn rademacher(stream: &mut RngStream) -> f64 {
    if stream.rng().random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// First coordinate of a uniform point on the unit sphere in integer
/// dimension `delta`.
///
/// Sampled through its marginal, `1 - 2*Beta((delta-1)/2, (delta-1)/2)`
/// for `delta >= 2`, which costs O(1) per draw in any dimension; dimension
/// 1 degenerates to a Rademacher sign.
pub fn sphere_first_coord(stream: &mut RngStream, delta: u32) -> Result<f64> {
    match delta {
        0 => Err(Error::domain("sphere dimension must be at least 1".to_string())),
        1 => Ok(rademacher(stream)),
        _ => {
            let half = (f64::from(delta) - 1.0) / 2.0;
            let dist = Beta::new(half, half)
                .map_err(|e| Error::domain(format!("beta parameters {half}: {e}")))?;
            Ok(1.0 - 2.0 * dist.sample(stream.rng()))
        }
    }
}

/// Outcome of the conditioned-exit rejection sampler: the accepted value
/// in `(0, rho)` and the number of trials it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdSample {
    pub value: f64,
    pub trials: u64,
}

/// Rejection sampler for the density
/// `x -> kappa^-1 u(t, x) x^(2 alpha - 1)` on `[0, rho]`.
///
/// Per trial it consumes two uniforms in fixed order, the acceptance level
/// `R` first and then the location variate `V`, and accepts when
/// `u(t, 0) R <= u(t, rho V^(1/(2 alpha)))`. The comparison is carried out
/// with both sides scaled by `t^alpha`, which removes the common
/// potentially huge factor without changing the acceptance event.
pub fn cd_sample(stream: &mut RngStream, p: &HeatBallParams) -> CdSample {
    let alpha = p.alpha();
    let t = p.t();
    let radius = rho(p);
    // (t/beta)^alpha < 1 given t < beta.
    let tb_alpha = (alpha * (t / p.beta()).ln()).exp();
    let accept_scale = 1.0 - tb_alpha;
    let exponent = 1.0 / (2.0 * alpha);
    let mut trials = 0u64;
    loop {
        trials += 1;
        let r: f64 = stream.rng().random();
        let v: f64 = stream.rng().sample(Open01);
        let x = radius * v.powf(exponent);
        if r * accept_scale <= (-x * x / t).exp() - tb_alpha {
            return CdSample { value: x, trials };
        }
    }
}

/// Position of a Bessel process of dimension `delta` started at 0,
/// conditioned on not yet having left the spheroid of accuracy `eps`,
/// observed at time `t` inside the window `(0, e eps^2 / delta)`.
///
/// This is the rejection sampler evaluated at doubled time with
/// `alpha = delta/2` and `beta = 2 e eps^2 / delta`.
pub fn conditioned_bessel_position(
    stream: &mut RngStream,
    delta: f64,
    eps: f64,
    t: f64,
) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::domain(format!(
            "conditioned position requires delta > 0, got {delta}"
        )));
    }
    let window = spheroid_window(delta, eps);
    if !t.is_finite() || t <= 0.0 || t >= window {
        return Err(Error::domain(format!(
            "conditioned position requires 0 < t < {window}, got {t}"
        )));
    }
    let p = HeatBallParams::new(delta / 2.0, 2.0 * window, 2.0 * t)?;
    Ok(cd_sample(stream, &p).value)
}

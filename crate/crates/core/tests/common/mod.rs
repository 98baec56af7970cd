//! Shared test oracles: KS statistics, exact reference samplers for the
//! Bessel marginals, a quadrature CDF for the conditioned-exit density,
//! and small regression helpers. Everything here is deliberately
//! independent of the library's analytic shortcuts wherever it is used to
//! check them.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn stderr_of_mean(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// One-sample Kolmogorov-Smirnov distance against a CDF.
pub fn ks_one_sample(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// R^2 of the ordinary least-squares line through `(x, y)`.
pub fn ols_r2(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Deterministic test RNG, distinct from the library's stream type.
pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// Exact squared Bessel value at time `t` from `y0`, integer dimension:
/// `(y0 + sqrt(t) g_1)^2 + t (g_2^2 + ... + g_delta^2)`.
pub fn exact_squared_bessel_integer(rng: &mut ChaCha8Rng, delta: u32, y0: f64, t: f64) -> f64 {
    let root_t = t.sqrt();
    let mut q = (y0 + root_t * standard_normal(rng)).powi(2);
    for _ in 1..delta {
        q += t * standard_normal(rng).powi(2);
    }
    q
}

/// Exact squared Bessel value at time `t` from 0 in real dimension
/// `delta`: Gamma(delta/2, 2t).
pub fn exact_squared_bessel_from_zero(rng: &mut ChaCha8Rng, delta: f64, t: f64) -> f64 {
    Gamma::new(delta / 2.0, 2.0 * t).unwrap().sample(rng)
}

/// Exact squared Bessel value for a non-integer dimension via the
/// integer/fractional convolution.
pub fn exact_squared_bessel_noninteger(
    rng: &mut ChaCha8Rng,
    delta: f64,
    y0: f64,
    t: f64,
) -> f64 {
    let di = delta.floor();
    let df = delta - di;
    exact_squared_bessel_integer(rng, di as u32, y0, t)
        + exact_squared_bessel_from_zero(rng, df, t)
}

/// Tabulated CDF of the conditioned-exit density
/// `x -> u(t, x) x^(2 alpha - 1) / kappa` on `[0, rho]`, built purely by
/// composite-Simpson quadrature in the variable `z = x^(2 alpha)` (which
/// removes the endpoint singularity for small `alpha`). Evaluation
/// interpolates linearly on a dense grid.
pub struct CdQuadratureCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl CdQuadratureCdf {
    pub fn build(alpha: f64, beta: f64, t: f64, cells: usize) -> CdQuadratureCdf {
        let radius = (alpha * t * (beta / t).ln()).sqrt();
        let z_max = radius.powf(2.0 * alpha);
        // Density in z, up to the normalization: u(t, z^(1/(2 alpha))).
        let density_z = |z: f64| -> f64 {
            let x = z.powf(1.0 / (2.0 * alpha));
            ((-x * x / t).exp() - (t / beta).powf(alpha)) / t.powf(alpha)
        };
        let n = 2 * cells; // Simpson pairs
        let h = z_max / n as f64;
        let mut xs = Vec::with_capacity(n / 2 + 1);
        let mut cdf = Vec::with_capacity(n / 2 + 1);
        xs.push(0.0);
        cdf.push(0.0);
        let mut acc = 0.0;
        let mut f_prev = density_z(0.0);
        for k in 0..cells {
            let z0 = 2.0 * k as f64 * h;
            let f_mid = density_z(z0 + h);
            let f_next = density_z(z0 + 2.0 * h);
            acc += h / 3.0 * (f_prev + 4.0 * f_mid + f_next);
            f_prev = f_next;
            let z_right = z0 + 2.0 * h;
            xs.push(z_right.powf(1.0 / (2.0 * alpha)));
            cdf.push(acc);
        }
        let total = acc;
        for v in &mut cdf {
            *v /= total;
        }
        CdQuadratureCdf { xs, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let idx = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        let (f0, f1) = (self.cdf[idx - 1], self.cdf[idx]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }
}

//! Driftless subordinators, their Laplace exponents, samplers and inverses.
//!
//! Six families are supported, matching the Bernstein functions
//!
//! ```text
//! stable                    s^α
//! mixed stable              Σ c_i s^{α_i}
//! tempered stable           (s+μ)^α - μ^α
//! mixture tempered stable   Σ c_i ((s+μ_i)^{α_i} - μ_i^{α_i})
//! gamma                     p log(1 + s/rate)
//! inverse Gaussian          δ (sqrt(2s + γ²) - γ)
//! ```
//!
//! Stable increments use the Chambers–Mallows–Stuck representation, tempered
//! increments exponential-tilting rejection, and mixtures are sums of
//! independent scaled components. An index of exactly 1 is accepted and gives
//! the deterministic clock `L(t) = t`.

use crate::error::{ensure, Error, Result};
use crate::specfun::quad::{integrate, QuadControl};
use crate::specfun::gamma;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Grid extensions allowed while looking for the crossing of an inverse subordinator.
pub const MAX_INVERSE_STEPS: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubordinatorSpec {
    Stable { alpha: f64 },
    MixedStable { weights: Vec<f64>, alphas: Vec<f64> },
    TemperedStable { alpha: f64, mu: f64 },
    MixtureTemperedStable { weights: Vec<f64>, alphas: Vec<f64>, mus: Vec<f64> },
    Gamma { p: f64, rate: f64 },
    InverseGaussian { delta: f64, gamma: f64 },
}

fn check_index(alpha: f64) -> Result<()> {
    ensure(alpha > 0.0 && alpha <= 1.0, || format!("stability index must lie in (0,1], got {alpha}"))
}

fn check_weights(weights: &[f64], others: &[usize]) -> Result<()> {
    ensure(!weights.is_empty(), || "mixture needs at least one component".into())?;
    ensure(others.iter().all(|&n| n == weights.len()), || "mixture parameter lengths differ".into())?;
    ensure(weights.iter().all(|&c| c >= 0.0 && c.is_finite()), || "mixture weights must be >= 0".into())?;
    let total: f64 = weights.iter().sum();
    ensure((total - 1.0).abs() < 1e-9, || format!("mixture weights sum to {total}, not 1"))
}

impl SubordinatorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Stable { alpha } => check_index(*alpha),
            Self::MixedStable { weights, alphas } => {
                check_weights(weights, &[alphas.len()])?;
                alphas.iter().try_for_each(|&a| check_index(a))
            }
            Self::TemperedStable { alpha, mu } => {
                check_index(*alpha)?;
                ensure(*mu >= 0.0 && mu.is_finite(), || format!("mu must be >= 0, got {mu}"))
            }
            Self::MixtureTemperedStable { weights, alphas, mus } => {
                check_weights(weights, &[alphas.len(), mus.len()])?;
                alphas.iter().try_for_each(|&a| check_index(a))?;
                ensure(mus.iter().all(|&m| m >= 0.0 && m.is_finite()), || "mu values must be >= 0".into())
            }
            Self::Gamma { p, rate } => ensure(*p > 0.0 && *rate > 0.0 && p.is_finite() && rate.is_finite(), || {
                format!("gamma needs p, rate > 0, got p={p}, rate={rate}")
            }),
            Self::InverseGaussian { delta, gamma } => {
                ensure(*delta > 0.0 && *gamma > 0.0 && delta.is_finite() && gamma.is_finite(), || {
                    format!("inverse Gaussian needs delta, gamma > 0, got delta={delta}, gamma={gamma}")
                })
            }
        }
    }

    /// Short name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Stable { .. } => "stable",
            Self::MixedStable { .. } => "mixed_stable",
            Self::TemperedStable { .. } => "tempered_stable",
            Self::MixtureTemperedStable { .. } => "mixture_tempered_stable",
            Self::Gamma { .. } => "gamma",
            Self::InverseGaussian { .. } => "inverse_gaussian",
        }
    }

    /// `E[L(1)]`, infinite for the (untempered) stable families with index below 1.
    pub fn mean_rate(&self) -> f64 {
        match self {
            Self::Stable { alpha } => {
                if *alpha == 1.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            Self::MixedStable { weights, alphas } => weights
                .iter()
                .zip(alphas)
                .map(|(&c, &a)| if c == 0.0 { 0.0 } else if a == 1.0 { c } else { f64::INFINITY })
                .sum(),
            Self::TemperedStable { alpha, mu } => tempered_mean(*alpha, *mu),
            Self::MixtureTemperedStable { weights, alphas, mus } => weights
                .iter()
                .zip(alphas.iter().zip(mus))
                .map(|(&c, (&a, &m))| if c == 0.0 { 0.0 } else { c * tempered_mean(a, m) })
                .sum(),
            Self::Gamma { p, rate } => p / rate,
            Self::InverseGaussian { delta, gamma } => delta / gamma,
        }
    }
}

fn tempered_mean(alpha: f64, mu: f64) -> f64 {
    if alpha == 1.0 {
        1.0
    } else if mu == 0.0 {
        f64::INFINITY
    } else {
        alpha * mu.powf(alpha - 1.0)
    }
}

/// Bernstein function `f(s)` of the subordinator, `E[e^{-s L(t)}] = e^{-t f(s)}`.
pub fn laplace_exponent(spec: &SubordinatorSpec, s: f64) -> f64 {
    let tempered = |a: f64, m: f64| (s + m).powf(a) - m.powf(a);
    match spec {
        SubordinatorSpec::Stable { alpha } => s.powf(*alpha),
        SubordinatorSpec::MixedStable { weights, alphas } => {
            weights.iter().zip(alphas).map(|(&c, &a)| c * s.powf(a)).sum()
        }
        SubordinatorSpec::TemperedStable { alpha, mu } => tempered(*alpha, *mu),
        SubordinatorSpec::MixtureTemperedStable { weights, alphas, mus } => weights
            .iter()
            .zip(alphas.iter().zip(mus))
            .map(|(&c, (&a, &m))| c * tempered(a, m))
            .sum(),
        SubordinatorSpec::Gamma { p, rate } => p * (s / rate).ln_1p(),
        SubordinatorSpec::InverseGaussian { delta, gamma } => delta * ((2.0 * s + gamma * gamma).sqrt() - gamma),
    }
}

/// Standard positive stable variable with `E[e^{-sX}] = e^{-s^α}` (Chambers–Mallows–Stuck).
pub fn stable_standard<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 1.0 {
        return 1.0;
    }
    let u = PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / e).powf((1.0 - alpha) / alpha);
    a * b
}

fn stable_increment<R: Rng + ?Sized>(alpha: f64, dt: f64, rng: &mut R) -> f64 {
    if alpha == 1.0 {
        return dt;
    }
    dt.powf(1.0 / alpha) * stable_standard(alpha, rng)
}

fn tempered_increment<R: Rng + ?Sized>(alpha: f64, mu: f64, dt: f64, rng: &mut R) -> f64 {
    if alpha == 1.0 {
        return dt;
    }
    if mu == 0.0 {
        return stable_increment(alpha, dt, rng);
    }
    // each piece is accepted with probability e^{-piece·μ^α} >= e^{-1}
    let pieces = (dt * mu.powf(alpha)).ceil().max(1.0) as usize;
    let piece = dt / pieces as f64;
    let mut total = 0.0;
    for _ in 0..pieces {
        total += loop {
            let y = stable_increment(alpha, piece, rng);
            if rng.random::<f64>() < (-mu * y).exp() {
                break y;
            }
        };
    }
    total
}

/// Inverse Gaussian draw with the given mean and shape (Michael–Schucany–Haas),
/// arranged to avoid cancellation when `mean / shape` is large.
fn inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    let a = mean * n * n / (2.0 * shape);
    let x = mean / (1.0 + a + (a * a + 2.0 * a).sqrt());
    if rng.random::<f64>() * (mean + x) <= mean {
        x
    } else {
        mean * mean / x
    }
}

/// One draw of `L(dt)`.
pub fn sample_increment<R: Rng + ?Sized>(spec: &SubordinatorSpec, dt: f64, rng: &mut R) -> f64 {
    match spec {
        SubordinatorSpec::Stable { alpha } => stable_increment(*alpha, dt, rng),
        SubordinatorSpec::MixedStable { weights, alphas } => weights
            .iter()
            .zip(alphas)
            .filter(|(&c, _)| c > 0.0)
            .map(|(&c, &a)| stable_increment(a, c * dt, rng))
            .sum(),
        SubordinatorSpec::TemperedStable { alpha, mu } => tempered_increment(*alpha, *mu, dt, rng),
        SubordinatorSpec::MixtureTemperedStable { weights, alphas, mus } => weights
            .iter()
            .zip(alphas.iter().zip(mus))
            .filter(|(&c, _)| c > 0.0)
            .map(|(&c, (&a, &m))| {
                // c·((s+μ)^α - μ^α) over dt is the exponent of the component run for time c·dt
                tempered_increment(a, m, c * dt, rng)
            })
            .sum(),
        SubordinatorSpec::Gamma { p, rate } => Gamma::new(p * dt, 1.0 / rate)
            .expect("validated gamma parameters")
            .sample(rng),
        SubordinatorSpec::InverseGaussian { delta, gamma } => {
            let d = delta * dt;
            inverse_gaussian(d / gamma, d * d, rng)
        }
    }
}

/// A path sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Cumulative sums of independent increments on `0, step, 2·step, …, horizon`.
///
/// The last cell is shortened so the grid ends exactly at `horizon`; the path
/// has `⌈horizon/step⌉ + 1` points.
pub fn sample_path<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    horizon: f64,
    step: f64,
    rng: &mut R,
) -> Result<PathSample> {
    spec.validate()?;
    ensure(step > 0.0 && horizon > step && horizon.is_finite(), || {
        format!("need 0 < step < horizon, got step={step}, horizon={horizon}")
    })?;
    let cells = (horizon / step).ceil() as usize;
    let mut times = Vec::with_capacity(cells + 1);
    let mut values = Vec::with_capacity(cells + 1);
    times.push(0.0);
    values.push(0.0);
    let mut level = 0.0;
    for i in 1..=cells {
        let t = if i == cells { horizon } else { i as f64 * step };
        level += sample_increment(spec, t - times[i - 1], rng);
        times.push(t);
        values.push(level);
    }
    Ok(PathSample { times, values })
}

/// Values of the inverse `H(t) = inf{u : L(u) > t}` at each of the nondecreasing
/// `levels`, read off one grid path of `L` with the given step.
///
/// Each value is the first grid time at which the path exceeds the level, so
/// it overshoots the exact inverse by less than one step.
pub fn sample_inverse_levels<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    levels: &[f64],
    step: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    ensure(step > 0.0 && step.is_finite(), || format!("step must be positive, got {step}"))?;
    ensure(levels.windows(2).all(|w| w[1] >= w[0]), || "levels must be nondecreasing".into())?;
    ensure(levels.iter().all(|&t| t >= 0.0 && t.is_finite()), || "levels must be finite and >= 0".into())?;
    let mut out = Vec::with_capacity(levels.len());
    let mut level = 0.0;
    let mut steps = 0usize;
    for &t in levels {
        while level <= t {
            if steps >= MAX_INVERSE_STEPS {
                return Err(Error::HorizonOverflow {
                    level: t,
                    max_steps: MAX_INVERSE_STEPS,
                });
            }
            level += sample_increment(spec, step, rng);
            steps += 1;
        }
        out.push(steps as f64 * step);
    }
    Ok(out)
}

/// One draw of `H(t)` by grid first crossing.
pub fn sample_inverse<R: Rng + ?Sized>(spec: &SubordinatorSpec, t: f64, step: f64, rng: &mut R) -> Result<f64> {
    ensure(t > 0.0, || format!("t must be positive, got {t}"))?;
    Ok(sample_inverse_levels(spec, &[t], step, rng)?[0])
}

/// Exact draw of the inverse stable subordinator, `E_β(t) = (t / S_β(1))^β`.
pub fn sample_inverse_stable_exact<R: Rng + ?Sized>(beta: f64, t: f64, rng: &mut R) -> f64 {
    if beta == 1.0 {
        return t;
    }
    (t / stable_standard(beta, rng)).powf(beta)
}

/// `E[E_β(t)] = t^β / Γ(1+β)`.
pub fn inv_stable_mean(beta: f64, t: f64) -> f64 {
    t.powf(beta) / gamma(1.0 + beta)
}

/// `E[E_β(s) E_β(t)]` for `s <= t`.
pub fn inv_stable_product_moment(beta: f64, s: f64, t: f64) -> Result<f64> {
    ensure(beta > 0.0 && beta <= 1.0, || format!("beta must lie in (0,1], got {beta}"))?;
    ensure(0.0 <= s && s <= t, || format!("need 0 <= s <= t, got s={s}, t={t}"))?;
    if s == 0.0 {
        return Ok(0.0);
    }
    if beta == 1.0 {
        return Ok(s * t);
    }
    // τ = s v^{1/β} turns τ^{β-1}dτ into (s^β/β) dv
    let f = |v: f64| {
        let tau = s * v.powf(1.0 / beta);
        (t - tau).max(0.0).powf(beta) + (s - tau).max(0.0).powf(beta)
    };
    let i = integrate(f, 0.0, 1.0, QuadControl::default())?;
    Ok(s.powf(beta) / beta * i / (gamma(beta) * gamma(1.0 + beta)))
}

/// `Cov(E_β(s), E_β(t))` for `s <= t`.
pub fn inv_stable_covariance(beta: f64, s: f64, t: f64) -> Result<f64> {
    Ok(inv_stable_product_moment(beta, s, t)? - inv_stable_mean(beta, s) * inv_stable_mean(beta, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn all_specs() -> Vec<SubordinatorSpec> {
        vec![
            SubordinatorSpec::Stable { alpha: 0.7 },
            SubordinatorSpec::MixedStable { weights: vec![0.4, 0.6], alphas: vec![0.5, 0.8] },
            SubordinatorSpec::TemperedStable { alpha: 0.6, mu: 1.5 },
            SubordinatorSpec::MixtureTemperedStable {
                weights: vec![0.3, 0.7],
                alphas: vec![0.5, 0.8],
                mus: vec![1.0, 2.0],
            },
            SubordinatorSpec::Gamma { p: 2.0, rate: 1.5 },
            SubordinatorSpec::InverseGaussian { delta: 1.2, gamma: 0.8 },
        ]
    }

    #[test]
    fn exponent_examples() {
        assert!((laplace_exponent(&SubordinatorSpec::Stable { alpha: 0.5 }, 4.0) - 2.0).abs() < 1e-15);
        let t = SubordinatorSpec::TemperedStable { alpha: 0.5, mu: 1.0 };
        assert!((laplace_exponent(&t, 3.0) - 1.0).abs() < 1e-15);
        let g = SubordinatorSpec::Gamma { p: 2.0, rate: 1.0 };
        assert!((laplace_exponent(&g, std::f64::consts::E - 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exponents_vanish_at_zero_and_are_concave() {
        for spec in all_specs() {
            spec.validate().unwrap();
            assert_eq!(laplace_exponent(&spec, 0.0), 0.0);
            let f: Vec<f64> = (0..50).map(|i| laplace_exponent(&spec, 10.0 * i as f64 / 49.0)).collect();
            for w in f.windows(3) {
                assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-12, "{}", spec.name());
            }
            for w in f.windows(2) {
                assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(SubordinatorSpec::Stable { alpha: 1.5 }.validate().is_err());
        assert!(SubordinatorSpec::MixedStable { weights: vec![0.5, 0.6], alphas: vec![0.5, 0.5] }
            .validate()
            .is_err());
        assert!(SubordinatorSpec::Gamma { p: 0.0, rate: 1.0 }.validate().is_err());
        assert!(SubordinatorSpec::InverseGaussian { delta: 1.0, gamma: -1.0 }.validate().is_err());
    }

    fn empirical_lt(spec: &SubordinatorSpec, dt: f64, s: f64, n: usize, seed: u64) -> (f64, f64) {
        let draws = RngStream::new(seed, 0).par_map(n, |r| (-s * sample_increment(spec, dt, r)).exp());
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (m, (v / n as f64).sqrt())
    }

    #[test]
    fn increments_match_laplace_exponent() {
        for (i, spec) in all_specs().into_iter().enumerate() {
            for &(dt, s) in &[(1.0, 2.0), (0.05, 1.0)] {
                let (m, se) = empirical_lt(&spec, dt, s, 40_000, 11 + i as u64);
                let want = (-dt * laplace_exponent(&spec, s)).exp();
                assert!((m - want).abs() < 4.0 * se + 1e-12, "{} dt={dt}: {m} vs {want} (se {se})", spec.name());
            }
        }
    }

    #[test]
    fn stable_half_laplace_transform() {
        let spec = SubordinatorSpec::Stable { alpha: 0.5 };
        let (m, se) = empirical_lt(&spec, 1.0, 2.0, 100_000, 3);
        assert!((m - (-(2.0_f64).sqrt()).exp()).abs() < 3.0 * se);
    }

    #[test]
    fn gamma_mean() {
        let spec = SubordinatorSpec::Gamma { p: 2.0, rate: 1.5 };
        let n = 100_000;
        let d = RngStream::new(5, 0).par_map(n, |r| sample_increment(&spec, 0.7, r));
        let m = d.iter().sum::<f64>() / n as f64;
        let sd = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((m - 2.0 * 0.7 / 1.5).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn degenerate_mixture_matches_component() {
        let mix = SubordinatorSpec::MixtureTemperedStable {
            weights: vec![1.0, 0.0],
            alphas: vec![0.6, 0.8],
            mus: vec![1.5, 2.0],
        };
        let single = SubordinatorSpec::TemperedStable { alpha: 0.6, mu: 1.5 };
        // zero-weight components draw nothing, so both consume the stream identically
        let a = RngStream::new(9, 1).par_map(10_000, |r| sample_increment(&mix, 0.5, r));
        let b = RngStream::new(9, 1).par_map(10_000, |r| sample_increment(&single, 0.5, r));
        assert_eq!(a, b);
    }

    #[test]
    fn paths_have_expected_shape() {
        let mut rng = RngStream::new(1, 0).rng();
        for spec in all_specs() {
            let p = sample_path(&spec, 1.0, 0.03, &mut rng).unwrap();
            assert_eq!(p.times.len(), (1.0_f64 / 0.03).ceil() as usize + 1);
            assert_eq!(*p.times.last().unwrap(), 1.0);
            assert!(p.values.windows(2).all(|w| w[1] >= w[0]));
            assert!(p.values[0] >= 0.0);
        }
    }

    #[test]
    fn path_endpoint_laplace_transform() {
        let spec = SubordinatorSpec::TemperedStable { alpha: 0.6, mu: 1.0 };
        let n = 10_000;
        let ends = RngStream::new(2, 0).par_map(n, |r| *sample_path(&spec, 2.0, 0.1, r).unwrap().values.last().unwrap());
        for s in [0.5, 1.0, 2.0] {
            let xs: Vec<f64> = ends.iter().map(|e| (-s * e).exp()).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let se = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n * (n - 1)) as f64).sqrt();
            let want = (-2.0 * laplace_exponent(&spec, s)).exp();
            assert!((m - want).abs() < 3.5 * se, "s={s}: {m} vs {want}");
        }
    }

    #[test]
    fn inverse_is_monotone_and_reproducible() {
        let spec = SubordinatorSpec::Stable { alpha: 0.5 };
        let mut r1 = RngStream::new(4, 2).rng();
        let h = sample_inverse_levels(&spec, &[1.0, 2.0], 1e-3, &mut r1).unwrap();
        assert!(h[0] <= h[1]);
        let mut r2 = RngStream::new(4, 2).rng();
        assert_eq!(h, sample_inverse_levels(&spec, &[1.0, 2.0], 1e-3, &mut r2).unwrap());
    }

    #[test]
    fn inverse_stable_mean_by_grid_crossing() {
        let spec = SubordinatorSpec::Stable { alpha: 0.5 };
        let n = 20_000;
        let d = RngStream::new(8, 0).try_par_map(n, |r| sample_inverse(&spec, 1.0, 1e-3, r)).unwrap();
        let m = d.iter().sum::<f64>() / n as f64;
        assert!((m / inv_stable_mean(0.5, 1.0) - 1.0).abs() < 0.02, "{m}");
    }

    #[test]
    fn exact_inverse_stable_mean() {
        for beta in [0.5, 0.7, 0.9] {
            let n = 100_000;
            let d = RngStream::new(6, 0).par_map(n, |r| sample_inverse_stable_exact(beta, 1.0, r));
            let m = d.iter().sum::<f64>() / n as f64;
            assert!((m * gamma(1.0 + beta) - 1.0).abs() < 0.02, "beta={beta}: {m}");
        }
    }

    #[test]
    fn inverse_composed_with_path_recovers_time() {
        // H(L(x)) = x up to one grid step
        let spec = SubordinatorSpec::InverseGaussian { delta: 1.0, gamma: 1.0 };
        let step = 1e-3;
        let mut rng = RngStream::new(12, 0).rng();
        let path = sample_path(&spec, 2.0, step, &mut rng).unwrap();
        for i in (1..path.times.len() - 1).step_by(37) {
            let (x, l) = (path.times[i], path.values[i]);
            let j = path.values.iter().position(|&v| v > l).unwrap();
            let h = path.times[j];
            assert!(h > x && h - x <= step * (1.0 + 1e-9), "x={x} h={h}");
        }
    }

    #[test]
    fn covariance_matches_second_moment_on_diagonal() {
        for beta in [0.4, 0.7] {
            let t: f64 = 1.7;
            let v = inv_stable_product_moment(beta, t, t).unwrap();
            let want = 2.0 * t.powf(2.0 * beta) / gamma(1.0 + 2.0 * beta);
            assert!((v - want).abs() < 1e-9 * want, "{v} vs {want}");
        }
        // β = 1 is the deterministic clock
        assert_eq!(inv_stable_covariance(1.0, 0.5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn covariance_against_mc() {
        let (beta, s, t) = (0.6, 0.5, 1.0);
        let n = 100_000;
        let pairs = RngStream::new(21, 0).par_map(n, |r| {
            let spec = SubordinatorSpec::Stable { alpha: beta };
            let h = sample_inverse_levels(&spec, &[s, t], 1e-3, r).unwrap();
            (h[0], h[1])
        });
        let ms = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let mt = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let c: Vec<f64> = pairs.iter().map(|p| (p.0 - ms) * (p.1 - mt)).collect();
        let cm = c.iter().sum::<f64>() / n as f64;
        let se = (c.iter().map(|x| (x - cm).powi(2)).sum::<f64>() / (n * n) as f64).sqrt();
        let want = inv_stable_covariance(beta, s, t).unwrap();
        assert!((cm - want).abs() < 4.0 * se + 2e-3, "{cm} vs {want} (se {se})");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn paths_are_nondecreasing(seed in 0u64..1000, alpha in 0.2f64..1.0, mu in 0.0f64..3.0) {
            let spec = SubordinatorSpec::TemperedStable { alpha, mu };
            let mut rng = RngStream::new(seed, 0).rng();
            let p = sample_path(&spec, 1.0, 0.05, &mut rng).unwrap();
            prop_assert!(p.values.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}

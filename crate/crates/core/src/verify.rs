//! Monte Carlo goodness of fit, governing-equation residuals, the fractional
//! difference operator and a pathwise martingale test.

use crate::combinatorics::OrderParams;
use crate::error::{ensure, Error, Result};
use crate::processes::{sfppok_pgf, tfppok_pmf, PmfTable};
use crate::rng::RngStream;
use crate::specfun::{caputo_profile, GridFunction};
use crate::subordinators::{sample_inverse_levels, SubordinatorSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Smallest expected count per bin after pooling.
pub const MIN_EXPECTED: f64 = 5.0;

/// Frequencies of `0..=n_max` and of the overflow bin, with binomial standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPmf {
    pub probs: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub tail: f64,
    pub n_samples: usize,
}

impl EmpiricalPmf {
    pub fn from_counts(values: &[u64], n_max: usize) -> Self {
        let n = values.len();
        let mut hist = vec![0usize; n_max + 2];
        for &v in values {
            hist[(v as usize).min(n_max + 1)] += 1;
        }
        let nf = n as f64;
        let probs: Vec<f64> = hist[..=n_max].iter().map(|&c| c as f64 / nf).collect();
        let std_errors = probs.iter().map(|&p| (p * (1.0 - p) / nf).sqrt()).collect();
        Self {
            probs,
            std_errors,
            tail: hist[n_max + 1] as f64 / nf,
            n_samples: n,
        }
    }
}

/// Draws `n_samples` values from `sampler` on independent streams and tabulates them.
pub fn estimate_pmf<F>(sampler: F, n_max: usize, n_samples: usize, stream: &RngStream) -> Result<EmpiricalPmf>
where
    F: Fn(&mut ChaCha8Rng) -> Result<u64> + Sync,
{
    ensure(n_samples >= 1000, || format!("need at least 1000 samples, got {n_samples}"))?;
    let values = stream.try_par_map(n_samples, sampler)?;
    Ok(EmpiricalPmf::from_counts(&values, n_max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub tv_distance: f64,
    pub chi2_stat: f64,
    pub dof: usize,
    pub p_value: f64,
    pub n_samples: usize,
}

/// Total variation distance and Pearson χ² between an empirical pmf and an
/// analytic table. Both include the overflow bin `n > n_max`; adjacent bins
/// are pooled left to right until each expects at least five counts.
pub fn compare_pmf(empirical: &EmpiricalPmf, analytic: &PmfTable) -> Result<GofReport> {
    ensure(empirical.probs.len() == analytic.probs.len(), || {
        format!("supports differ: {} vs {} bins", empirical.probs.len(), analytic.probs.len())
    })?;
    let mut obs: Vec<f64> = empirical.probs.clone();
    obs.push(empirical.tail);
    let mut exp: Vec<f64> = analytic.probs.iter().map(|p| p.max(0.0)).collect();
    exp.push(analytic.truncation_mass.max(0.0));
    let tv = 0.5 * obs.iter().zip(&exp).map(|(o, e)| (o - e).abs()).sum::<f64>();

    let n = empirical.n_samples as f64;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in obs.iter().zip(&exp) {
        o_acc += o * n;
        e_acc += e * n;
        if e_acc >= MIN_EXPECTED {
            pooled.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => pooled.push((o_acc, e_acc)),
        }
    }
    if pooled.len() < 2 {
        return Err(Error::DegenerateBins { bins: pooled.len() });
    }
    let chi2: f64 = pooled.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = pooled.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sf(chi2)
        .clamp(0.0, 1.0);
    Ok(GofReport {
        tv_distance: tv.clamp(0.0, 1.0),
        chi2_stat: chi2,
        dof,
        p_value,
        n_samples: empirical.n_samples,
    })
}

/// Coefficients of `(1 - B)^α = Σ_j w_j B^j`, with `w_0 = 1`, `w_j = w_{j-1}(j-1-α)/j`.
pub fn fractional_difference_weights(alpha: f64, j_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(j_max + 1);
    w.push(1.0);
    for j in 1..=j_max {
        let prev = w[j - 1];
        w.push(prev * (j as f64 - 1.0 - alpha) / j as f64);
    }
    w
}

/// `((1 - B)^α x)_i = Σ_{j ≤ min(i, j_max)} w_j x_{i-j}`, with `B` the backward shift.
pub fn fractional_difference(seq: &[f64], alpha: f64, j_max: usize) -> Result<Vec<f64>> {
    ensure(j_max <= seq.len(), || format!("j_max = {j_max} exceeds the sequence length {}", seq.len()))?;
    let w = fractional_difference_weights(alpha, j_max);
    Ok((0..seq.len())
        .map(|i| (0..=i.min(j_max)).map(|j| w[j] * seq[i - j]).sum())
        .collect())
}

/// Fraction of the horizon excluded by [`governing_residual_tf`].
pub const TF_RESIDUAL_SKIP: f64 = 0.1;

/// Largest residual of the TFPPoK difference-differential equation
/// `D^β p(n,t) = -kλ p(n,t) + λ Σ_{j=1}^{n∧k} p(n-j,t)`
/// on a uniform grid starting at 0, relative to the largest right-hand-side term.
///
/// The Caputo derivative uses the L1 scheme. Near the origin the pmf behaves
/// like `t^β` and the scheme's error at the j-th point is of order `j^{β-2}`
/// whatever the step, so points before `0.1 · t_max` are not scored; see
/// [`governing_residual_tf_from`] to choose the cut.
pub fn governing_residual_tf(p: &OrderParams, beta: f64, n: usize, grid: &[f64]) -> Result<f64> {
    let t_from = TF_RESIDUAL_SKIP * grid.last().copied().unwrap_or(0.0);
    governing_residual_tf_from(p, beta, n, grid, t_from)
}

/// As [`governing_residual_tf`], scoring grid points with `t >= t_from` (and index >= 2).
pub fn governing_residual_tf_from(p: &OrderParams, beta: f64, n: usize, grid: &[f64], t_from: f64) -> Result<f64> {
    ensure(n <= 5, || format!("n must be at most 5, got {n}"))?;
    ensure(grid.len() >= 200, || format!("grid needs at least 200 points, got {}", grid.len()))?;
    ensure(grid[0] == 0.0, || "grid must start at 0".into())?;
    let pmf = |m: usize, t: f64| -> Result<f64> {
        if t == 0.0 {
            Ok(if m == 0 { 1.0 } else { 0.0 })
        } else {
            tfppok_pmf(p, beta, t, m)
        }
    };
    let rows: Vec<Vec<f64>> = (0..=n)
        .map(|m| grid.iter().map(|&t| pmf(m, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let g = GridFunction::new(grid.to_vec(), rows[n].clone())?;
    let d = caputo_profile(&g, beta)?;
    let kl = p.rate();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 2..grid.len() {
        if grid[i] < t_from {
            continue;
        }
        let inflow: f64 = (1..=n.min(p.k)).map(|j| rows[n - j][i]).sum::<f64>() * p.lambda;
        let outflow = kl * rows[n][i];
        worst = worst.max((d[i] + outflow - inflow).abs());
        scale = scale.max(outflow).max(inflow);
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// Largest central-difference residual of `∂_t G = -k^α λ^α (1 - G_X(u))^α G`
/// over `grid`, relative to the largest right-hand side.
pub fn governing_residual_sf_pgf(p: &OrderParams, alpha: f64, u: f64, grid: &[f64], h: f64) -> Result<f64> {
    ensure(u > 0.0 && u < 1.0, || format!("u must lie in (0,1), got {u}"))?;
    ensure(h > 0.0, || format!("difference step must be positive, got {h}"))?;
    let c = p.rate().powf(alpha) * (1.0 - p.jump_pgf(u)).powf(alpha);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &t in grid {
        ensure(t > h, || format!("grid point {t} must exceed the difference step {h}"))?;
        let d = (sfppok_pgf(p, alpha, t + h, u)? - sfppok_pgf(p, alpha, t - h, u)?) / (2.0 * h);
        let rhs = -c * sfppok_pgf(p, alpha, t, u)?;
        worst = worst.max((d - rhs).abs());
        scale = scale.max(rhs.abs());
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// What is subtracted from `N(H(t))` in the martingale test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensator {
    /// `λ H(t)`, the true compensator.
    Clock,
    /// `λ t`, a deliberately wrong compensator.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub subordinator: String,
    pub compensator: Compensator,
    pub grid: Vec<f64>,
    pub n_paths: usize,
    /// Mean of `M(t_i) - M(t_{i-1})`, one entry per consecutive pair.
    pub mean_increment: Vec<f64>,
    /// Correlation of each increment with `M(t_{i-1})`.
    pub increment_vs_level_corr: Vec<f64>,
    /// Correlation of each increment with `H(t_{i-1})`.
    pub increment_vs_clock_corr: Vec<f64>,
    /// Largest |z| per pair over the three statistics.
    pub max_abs_z: Vec<f64>,
    pub z_threshold: f64,
    pub pass: bool,
}

/// Options of [`martingale_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MartingaleOptions {
    pub n_paths: usize,
    /// Grid step of the first-crossing construction of `H`.
    pub clock_step: f64,
    /// Familywise two-sided level, split evenly over all statistics.
    pub level: f64,
    pub compensator: Compensator,
}

impl Default for MartingaleOptions {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            clock_step: 1e-2,
            level: 0.0027,
            compensator: Compensator::Clock,
        }
    }
}

/// Tests that `M(t) = N(H(t)) - λH(t)` is a martingale, with `N` a Poisson
/// process of rate `λ` and `H` the inverse of the subordinator `spec`.
///
/// For every consecutive grid pair `(s, t)` it checks `E[M(t) - M(s)] = 0`
/// and that the increment is uncorrelated with `M(s)` and `H(s)`. Each
/// statistic is a sample mean compared to zero with its own standard error;
/// the threshold is Bonferroni-adjusted over all `3 × pairs` statistics.
pub fn martingale_check(
    spec: &SubordinatorSpec,
    lambda: f64,
    grid: &[f64],
    opts: &MartingaleOptions,
    stream: &RngStream,
) -> Result<MartingaleReport> {
    spec.validate()?;
    ensure(lambda > 0.0 && lambda.is_finite(), || format!("lambda must be positive, got {lambda}"))?;
    ensure(grid.len() >= 2, || "grid needs at least two times".into())?;
    ensure(grid[0] > 0.0 && grid.windows(2).all(|w| w[1] > w[0]), || "grid must be positive and increasing".into())?;
    ensure(opts.n_paths >= 10_000, || format!("need at least 10^4 paths, got {}", opts.n_paths))?;

    let paths = stream.try_par_map(opts.n_paths, |rng| martingale_path(spec, lambda, grid, opts, rng))?;
    let pairs = grid.len() - 1;
    let tests = 3 * pairs;
    let z_threshold = Normal::standard().inverse_cdf(1.0 - opts.level / (2.0 * tests as f64));

    let mut mean_increment = Vec::with_capacity(pairs);
    let mut level_corr = Vec::with_capacity(pairs);
    let mut clock_corr = Vec::with_capacity(pairs);
    let mut max_abs_z = Vec::with_capacity(pairs);
    for i in 1..grid.len() {
        let d: Vec<f64> = paths.iter().map(|(m, _)| m[i] - m[i - 1]).collect();
        let ms: Vec<f64> = paths.iter().map(|(m, _)| m[i - 1]).collect();
        let hs: Vec<f64> = paths.iter().map(|(_, h)| h[i - 1]).collect();
        let (mean, z_mean) = z_of_mean(&d);
        let (rho_m, z_m) = z_of_covariance(&d, &ms);
        let (rho_h, z_h) = z_of_covariance(&d, &hs);
        mean_increment.push(mean);
        level_corr.push(rho_m);
        clock_corr.push(rho_h);
        max_abs_z.push(z_mean.abs().max(z_m.abs()).max(z_h.abs()));
    }
    let pass = max_abs_z.iter().all(|z| *z <= z_threshold);
    Ok(MartingaleReport {
        subordinator: spec.name().to_string(),
        compensator: opts.compensator,
        grid: grid.to_vec(),
        n_paths: opts.n_paths,
        mean_increment,
        increment_vs_level_corr: level_corr,
        increment_vs_clock_corr: clock_corr,
        max_abs_z,
        z_threshold,
        pass,
    })
}

fn martingale_path<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    lambda: f64,
    grid: &[f64],
    opts: &MartingaleOptions,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = sample_inverse_levels(spec, grid, opts.clock_step, rng)?;
    let mut count = 0.0;
    let mut prev = 0.0;
    let mut m = Vec::with_capacity(grid.len());
    for (&hi, &t) in h.iter().zip(grid) {
        let dh = hi - prev;
        if dh > 0.0 {
            count += Poisson::new(lambda * dh).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng);
        }
        prev = hi;
        let comp = match opts.compensator {
            Compensator::Clock => lambda * hi,
            Compensator::Linear => lambda * t,
        };
        m.push(count - comp);
    }
    Ok((m, h))
}

fn z_of_mean(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    (mean, if se > 0.0 { mean / se } else if mean == 0.0 { 0.0 } else { f64::INFINITY })
}

/// Sample correlation of `d` with `y`, and the z-score of their covariance
/// computed from the per-path products `d_i (y_i - ȳ)`.
fn z_of_covariance(d: &[f64], y: &[f64]) -> (f64, f64) {
    let n = d.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let md = d.iter().sum::<f64>() / n;
    let prod: Vec<f64> = d.iter().zip(y).map(|(a, b)| a * (b - my)).collect();
    let (_, z) = z_of_mean(&prod);
    let sdd = d.iter().map(|a| (a - md).powi(2)).sum::<f64>();
    let syy = y.iter().map(|b| (b - my).powi(2)).sum::<f64>();
    let sdy = d.iter().zip(y).map(|(a, b)| (a - md) * (b - my)).sum::<f64>();
    let rho = if sdd > 0.0 && syy > 0.0 { sdy / (sdd * syy).sqrt() } else { 0.0 };
    (rho, z)
}

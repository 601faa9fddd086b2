//! Poisson processes of order k and their fractional versions on the half-line.
//!
//! `N^k(t) = Σ_{i≤N(t)} X_i` with `N` Poisson of rate `kλ` and jumps uniform on
//! `{1..k}` (PPoK). The fractional variants are time changes of `N^k`:
//!
//! * TFPPoK `N^k(E_β(t))`, with `E_β` the inverse stable subordinator;
//! * SFPPoK `N^k(S_α(t))`, with `S_α` the stable subordinator;
//! * TTSFPPoK `N^k(S_{α,μ}(E_{β,ν}(t)))`, tempered in space and time.

use crate::combinatorics::{enumerate_omega, falling_factorial, omega_kernel, OrderParams, N_CAP};
use crate::error::{ensure, Error, Result};
use crate::specfun::{gamma, ml_derivative, mittag_leffler, prabhakar_ml, SeriesControl, Z_CAP};
use crate::subordinators::{
    inv_stable_covariance, inv_stable_mean, sample_increment, sample_inverse, sample_inverse_stable_exact,
    stable_standard, SubordinatorSpec,
};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

/// Largest Poisson mean drawn exactly; larger means return the rounded mean.
const POISSON_SATURATION: f64 = 1e12;
/// Largest power r in the outer series of the SFPPoK pmf and TTSFPPoK pgf.
pub const R_MAX: usize = 400;
/// Default grid step of inverse-subordinator clocks, relative to `t`.
pub const DEFAULT_STEP_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
}

impl Default for FracParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            mu: 0.0,
            nu: 0.0,
        }
    }
}

impl FracParams {
    pub fn new(alpha: f64, beta: f64, mu: f64, nu: f64) -> Result<Self> {
        let f = Self { alpha, beta, mu, nu };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("alpha", self.alpha)?;
        check_unit("beta", self.beta)?;
        ensure(self.mu >= 0.0 && self.mu.is_finite(), || format!("mu must be >= 0, got {}", self.mu))?;
        ensure(self.nu >= 0.0 && self.nu.is_finite(), || format!("nu must be >= 0, got {}", self.nu))
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    ensure(v > 0.0 && v <= 1.0, || format!("{name} must lie in (0,1], got {v}"))
}

fn check_time(t: f64) -> Result<()> {
    ensure(t > 0.0 && t.is_finite(), || format!("t must be finite and > 0, got {t}"))
}

fn check_u(u: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&u), || format!("u must lie in [0,1], got {u}"))
}

fn check_n(n: usize) -> Result<()> {
    if n > N_CAP {
        return Err(Error::CapExceeded(format!("n = {n} exceeds {N_CAP}")));
    }
    Ok(())
}

/// Which analytic law a [`PmfTable`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PmfVariant {
    Ppok,
    Tfppok,
    Sfppok,
    /// Homogeneous Poisson field of order k; `t` is the area of the region.
    Field,
}

impl PmfVariant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ppok => "ppok",
            Self::Tfppok => "tfppok",
            Self::Sfppok => "sfppok",
            Self::Field => "field",
        }
    }
}

/// Time-changed variants with a sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FracVariant {
    Tf,
    Sf,
    Ttsf,
}

/// `probs[n] = P(count = n)` for `n = 0..=n_max`, with the missing mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfTable {
    pub variant: PmfVariant,
    pub order: OrderParams,
    pub frac: FracParams,
    pub t: f64,
    pub probs: Vec<f64>,
    pub truncation_mass: f64,
}

impl PmfTable {
    pub fn from_probs(variant: PmfVariant, order: OrderParams, frac: FracParams, t: f64, probs: Vec<f64>) -> Self {
        let total: f64 = probs.iter().sum();
        Self {
            variant,
            order,
            frac,
            t,
            probs,
            truncation_mass: 1.0 - total,
        }
    }

    pub fn n_max(&self) -> usize {
        self.probs.len().saturating_sub(1)
    }
}

/// PPoK pmf `e^{-kλt} Σ_{X∈Ω(k,n)} (λt)^ζ / Π!`.
pub fn ppok_pmf(p: &OrderParams, t: f64, n: usize) -> Result<f64> {
    ensure(t >= 0.0 && t.is_finite(), || format!("t must be finite and >= 0, got {t}"))?;
    check_n(n)?;
    // same operation order as the β = 1 branch of tfppok_pmf, so the two agree bitwise
    let w = p.lambda * t;
    let r = p.k as f64 * w;
    if r < 500.0 {
        return Ok(ml_derivative(n, 1.0, -r, &SeriesControl::default())? * omega_kernel(p.k, n, w)?);
    }
    // large means: keep e^{-kλt} inside each term so nothing overflows
    let lw = w.ln();
    crate::combinatorics::omega_sum(p.k, n, |c| (c.zeta as f64 * lw - c.ln_factorial_product() - r).exp())
}

/// PPoK pgf `exp(-λt(k - Σ_{j=1}^k u^j))`.
pub fn ppok_pgf(p: &OrderParams, t: f64, u: f64) -> Result<f64> {
    check_u(u)?;
    Ok((-p.rate() * t * (1.0 - p.jump_pgf(u))).exp())
}

/// Mean and variance of `N^k(t)`.
pub fn ppok_moments(p: &OrderParams, t: f64) -> (f64, f64) {
    let r = p.rate() * t;
    (r * p.jump_mean(), r * p.jump_second_moment())
}

/// TFPPoK pmf `Σ_{X∈Ω(k,n)} M^{(ζ)}_{β,1}(-kλt^β) (λt^β)^ζ / Π!`.
///
/// Each composition carries the derivative of order `ζ`; expanding the pgf
/// `M_{β,1}(-kλt^β + λt^β Σ_j u^j)` about `-kλt^β` gives this form, which
/// agrees with `M^{(n)} · Σ_X (λt^β)^ζ/Π!` when `k = 1` or `β = 1`.
pub fn tfppok_pmf(p: &OrderParams, beta: f64, t: f64, n: usize) -> Result<f64> {
    check_unit("beta", beta)?;
    check_time(t)?;
    check_n(n)?;
    let w = p.lambda * t.powf(beta);
    let z = -(p.k as f64) * w;
    let ctl = SeriesControl::default();
    if beta == 1.0 {
        return Ok(ml_derivative(n, beta, z, &ctl)? * omega_kernel(p.k, n, w)?);
    }
    let mut coef = vec![0.0; n + 1];
    for c in enumerate_omega(p.k, n)?.iter() {
        coef[c.zeta as usize] += (c.zeta as f64 * w.ln() - c.ln_factorial_product()).exp();
    }
    let mut sum = 0.0;
    for (zeta, &a) in coef.iter().enumerate() {
        if a != 0.0 {
            sum += a * ml_derivative(zeta, beta, z, &ctl)?;
        }
    }
    Ok(sum)
}

/// TFPPoK pgf `M_{β,1}(-kλt^β (1 - G_X(u)))`.
pub fn tfppok_pgf(p: &OrderParams, beta: f64, t: f64, u: f64) -> Result<f64> {
    check_unit("beta", beta)?;
    check_time(t)?;
    check_u(u)?;
    let z = -p.rate() * t.powf(beta) * (1.0 - p.jump_pgf(u));
    mittag_leffler(beta, 1.0, z, &SeriesControl::default())
}

/// Mean of TFPPoK at `t` and its covariance at `(s, t)`, `s <= t`.
///
/// The mean is `λ k(k+1)/2 · t^β/Γ(1+β)`; the covariance is
/// `λ k(k+1)(2k+1)/6 · E[E_β(s)] + λ² k²(k+1)²/4 · Cov(E_β(s), E_β(t))`.
pub fn tfppok_moments(p: &OrderParams, beta: f64, s: f64, t: f64) -> Result<(f64, f64)> {
    check_unit("beta", beta)?;
    check_time(t)?;
    ensure(s > 0.0 && s <= t, || format!("need 0 < s <= t, got s={s}, t={t}"))?;
    let a = p.rate() * p.jump_mean();
    let b = p.rate() * p.jump_second_moment();
    let mean = a * inv_stable_mean(beta, t);
    let cov = b * inv_stable_mean(beta, s) + a * a * inv_stable_covariance(beta, s, t)?;
    Ok((mean, cov))
}

fn sf_rate(p: &OrderParams, alpha: f64) -> f64 {
    p.rate().powf(alpha)
}

/// `S_ζ = Σ_r (-ct)^r/r! · [αr]_ζ` together with the largest term magnitude.
fn sf_inner(alpha: f64, ct: f64, zeta: usize) -> Result<(f64, f64)> {
    let mut sum = 0.0;
    let mut max_term = 0.0_f64;
    let mut max_partial = 0.0_f64;
    let mut small = 0;
    let mut log_pow = 0.0;
    let ln_ct = ct.ln();
    // early terms can vanish ([αr]_ζ has zeros), so the tail test waits for the peak
    let start_tail = ct.max(zeta as f64 / alpha);
    for r in 0..=R_MAX {
        let rf = r as f64;
        if r > 0 {
            log_pow += ln_ct - rf.ln();
        }
        let ff = falling_factorial(alpha * rf, zeta);
        let mag = log_pow.exp() * ff.abs();
        let term = if r % 2 == 1 { -1.0 } else { 1.0 } * ff.signum() * mag;
        sum += term;
        max_term = max_term.max(mag);
        max_partial = max_partial.max(sum.abs());
        if rf >= start_tail {
            if mag < 1e-14 * max_partial.max(f64::MIN_POSITIVE) {
                small += 1;
                if small >= 5 {
                    return Ok((sum, max_term));
                }
            } else {
                small = 0;
            }
        }
    }
    Err(Error::NonConvergence {
        what: "sfppok_pmf",
        terms: R_MAX + 1,
    })
}

/// Double-series SFPPoK pmf and an estimate of its rounding error.
fn sfppok_pmf_series(p: &OrderParams, alpha: f64, t: f64, n: usize) -> Result<(f64, f64)> {
    let ct = sf_rate(p, alpha) * t;
    let comps = enumerate_omega(p.k, n)?;
    let ln_k = (p.k as f64).ln();
    let mut coef = vec![0.0; n + 1];
    for c in comps.iter() {
        let z = c.zeta as usize;
        coef[z] += (-c.ln_factorial_product() - z as f64 * ln_k).exp();
    }
    let mut value = 0.0;
    let mut magnitude = 0.0;
    for (z, &a) in coef.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let (s, m) = sf_inner(alpha, ct, z)?;
        let sign = if z % 2 == 1 { -1.0 } else { 1.0 };
        value += sign * a * s;
        magnitude += a * m;
    }
    Ok((value, magnitude * 4.0 * f64::EPSILON * (R_MAX as f64).sqrt()))
}

/// SFPPoK pmf
/// `Σ_{X∈Ω(k,n)} (-1)^ζ/(Π! k^ζ) Σ_r (-k^α λ^α t)^r/r! · (αr)(αr-1)⋯(αr-ζ+1)`.
///
/// The double series alternates; when its estimated rounding error exceeds
/// `1e-9` of the result, the value is taken from the compound-Poisson
/// recursion [`sfppok_pmf_recursive`] instead.
pub fn sfppok_pmf(p: &OrderParams, alpha: f64, t: f64, n: usize) -> Result<f64> {
    check_unit("alpha", alpha)?;
    check_time(t)?;
    check_n(n)?;
    let ct = sf_rate(p, alpha) * t;
    if ct > Z_CAP {
        return Err(Error::DomainError(format!("k^α λ^α t = {ct} exceeds the series cap {Z_CAP}")));
    }
    match sfppok_pmf_series(p, alpha, t, n) {
        Ok((v, err)) if err <= 1e-9 * v.abs() => Ok(v),
        Ok(_) | Err(Error::NonConvergence { .. }) => Ok(sfppok_pmf_recursive(p, alpha, t, n)?[n]),
        Err(e) => Err(e),
    }
}

/// SFPPoK pmf for `0..=n_max` from `q_0 = e^{-ct}`, `q_n = (t/n) Σ_j j w_j q_{n-j}`
/// with the nonnegative jump weights `w_j` of [`sfppok_levy_weights`].
pub fn sfppok_pmf_recursive(p: &OrderParams, alpha: f64, t: f64, n_max: usize) -> Result<Vec<f64>> {
    check_unit("alpha", alpha)?;
    check_time(t)?;
    let w = levy_weights_grouped(p, alpha, n_max);
    let mut q = vec![0.0; n_max + 1];
    q[0] = (-sf_rate(p, alpha) * t).exp();
    for n in 1..=n_max {
        let s: f64 = (1..=n).map(|j| j as f64 * w[j] * q[n - j]).sum();
        q[n] = t * s / n as f64;
    }
    Ok(q)
}

/// SFPPoK pgf `exp(-k^α λ^α t (1 - G_X(u))^α)`.
pub fn sfppok_pgf(p: &OrderParams, alpha: f64, t: f64, u: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    check_u(u)?;
    Ok((-sf_rate(p, alpha) * t * (1.0 - p.jump_pgf(u)).powf(alpha)).exp())
}

/// Weights by jump size, grouped by `ζ` through the multinomial theorem:
/// `Σ_{X∈Ω(k,y), ζ=m} m!/(Π! k^m)` is the coefficient of `u^y` in `G_X(u)^m`.
fn levy_weights_grouped(p: &OrderParams, alpha: f64, y_max: usize) -> Vec<f64> {
    let c = sf_rate(p, alpha);
    let k = p.k;
    let mut w = vec![0.0; y_max + 1];
    // g holds the coefficients of G_X^m, starting from m = 1
    let mut g = vec![0.0; y_max + 1];
    for j in 1..=k.min(y_max) {
        g[j] = 1.0 / k as f64;
    }
    // |C(α, m)| = (-1)^{m+1} [α]_m / m!
    let mut binom = alpha;
    for m in 1..=y_max {
        for y in m..=y_max {
            w[y] += c * binom.abs() * g[y];
        }
        if m == y_max {
            break;
        }
        binom *= (alpha - m as f64) / (m as f64 + 1.0);
        let mut next = vec![0.0; y_max + 1];
        for (y, &gy) in g.iter().enumerate() {
            if gy == 0.0 {
                continue;
            }
            for j in 1..=k {
                if y + j > y_max {
                    break;
                }
                next[y + j] += gy / k as f64;
            }
        }
        g = next;
    }
    w
}

/// Lévy weights `w[y]` of SFPPoK for jump sizes `y = 1..=y_max` (`w[0] = 0`):
/// `w_y = k^α λ^α Σ_{X∈Ω(k,y)} (-1)^{ζ+1} [α]_ζ / (Π! k^ζ)`.
///
/// Sizes up to the enumeration cap are summed over `Ω(k,y)` directly; larger
/// sizes use the same sum regrouped by `ζ`.
pub fn sfppok_levy_weights(p: &OrderParams, alpha: f64, y_max: usize) -> Result<Vec<f64>> {
    check_unit("alpha", alpha)?;
    let c = sf_rate(p, alpha);
    let ln_k = (p.k as f64).ln();
    let mut w = if y_max > N_CAP {
        levy_weights_grouped(p, alpha, y_max)
    } else {
        vec![0.0; y_max + 1]
    };
    for (y, wy) in w.iter_mut().enumerate().take(y_max.min(N_CAP) + 1).skip(1) {
        let mut s = 0.0;
        for comp in enumerate_omega(p.k, y)?.iter() {
            let z = comp.zeta as usize;
            let sign = if z % 2 == 1 { 1.0 } else { -1.0 };
            s += sign * falling_factorial(alpha, z) * (-comp.ln_factorial_product() - z as f64 * ln_k).exp();
        }
        *wy = c * s;
    }
    Ok(w)
}

/// Partial Bell polynomial table `B[m][i]` evaluated at `x_j = [α]_j`.
fn bell_table(alpha: f64, m_max: usize) -> Vec<Vec<f64>> {
    let x: Vec<f64> = (0..=m_max).map(|j| falling_factorial(alpha, j)).collect();
    let mut binom = vec![vec![0.0; m_max + 1]; m_max + 1];
    for n in 0..=m_max {
        binom[n][0] = 1.0;
        for r in 1..=n {
            binom[n][r] = binom[n - 1][r - 1] + if r < n { binom[n - 1][r] } else { 0.0 };
        }
    }
    let mut b = vec![vec![0.0; m_max + 1]; m_max + 1];
    b[0][0] = 1.0;
    for m in 1..=m_max {
        for i in 1..=m {
            let mut s = 0.0;
            for j in 1..=(m - i + 1) {
                s += binom[m - 1][j - 1] * x[j] * b[m - j][i - 1];
            }
            b[m][i] = s;
        }
    }
    b
}

/// Density of the first passage time `T_l` of SFPPoK at `t`, from
///
/// ```text
/// P(T_l ∈ dt) = P(T_{l-1} ∈ dt) - Σ_{X∈Ω(k,l-1)} (-λ)^ζ/(Π! k^ζ) d/dt ∂_λ^ζ e^{-t k^α λ^α}
/// ```
///
/// with `P(T_1 ∈ dt) = k^α λ^α e^{-t k^α λ^α}`. Writing `v = -t k^α λ^α`,
/// `λ^m ∂_λ^m e^v = e^v P_m(v)` with `P_m(v) = Σ_i B_{m,i}([α]_1, [α]_2, …) v^i`.
pub fn sfppok_first_passage(p: &OrderParams, alpha: f64, l: usize, t: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    ensure(l >= 1, || "passage level must be at least 1".into())?;
    ensure(t >= 0.0 && t.is_finite(), || format!("t must be finite and >= 0, got {t}"))?;
    check_n(l)?;
    let c = sf_rate(p, alpha);
    let v = -c * t;
    let ev = v.exp();
    let mut density = c * ev;
    if l == 1 {
        return Ok(density);
    }
    let bell = bell_table(alpha, l - 1);
    let ln_k = (p.k as f64).ln();
    for level in 2..=l {
        let mut s = 0.0;
        for comp in enumerate_omega(p.k, level - 1)?.iter() {
            let z = comp.zeta as usize;
            // P_ζ(v) + P_ζ'(v)
            let mut pv = 0.0;
            let mut dpv = 0.0;
            for i in 1..=z {
                pv += bell[z][i] * v.powi(i as i32);
                dpv += i as f64 * bell[z][i] * v.powi(i as i32 - 1);
            }
            if z == 0 {
                pv = 1.0;
            }
            let sign = if z % 2 == 1 { -1.0 } else { 1.0 };
            let a = (-comp.ln_factorial_product() - z as f64 * ln_k).exp();
            // d/dt [e^v P(v)] = -c e^v (P + P')
            s += sign * a * (-c * ev * (pv + dpv));
        }
        density -= s;
    }
    Ok(density)
}

/// `I_r(t) = e^{-νt} Σ_m ν^m t^{βr+m} M^r_{β,βr+m+1}((νt)^β)`, the r-th
/// coefficient of the TTSF pgf expansion.
fn ttsf_coefficient(beta: f64, nu: f64, t: f64, r: usize, m_max: usize) -> Result<f64> {
    let rf = r as f64;
    let ctl = SeriesControl::default();
    if nu == 0.0 {
        return Ok((beta * rf * t.ln() - crate::specfun::ln_gamma(beta * rf + 1.0)).exp());
    }
    let z = (nu * t).powf(beta);
    let mut sum = 0.0;
    let mut small = 0;
    for m in 0..=m_max {
        let mf = m as f64;
        let pr = if r == 0 {
            1.0 / gamma(mf + 1.0)
        } else {
            prabhakar_ml(beta, beta * rf + mf + 1.0, rf, z, &ctl)?
        };
        let term = (mf * nu.ln() + (beta * rf + mf) * t.ln() - nu * t).exp() * pr;
        sum += term;
        if term <= 1e-16 * sum {
            small += 1;
            if small >= 3 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "ttsfppok_pgf inner series",
        terms: m_max + 1,
    })
}

/// TTSFPPoK pgf
/// `Σ_r (-B)^r e^{-νt} Σ_m ν^m t^{βr+m} M^r_{β,βr+m+1}((νt)^β)` with
/// `B = (μ + kλ(1 - G_X(u)))^α - μ^α`.
///
/// The series is summed up to `r_max`, `m_max`; convergence requires the last
/// five r-shells to fall below `1e-12` of the running sum.
pub fn ttsfppok_pgf(p: &OrderParams, f: &FracParams, t: f64, u: f64, truncation: (usize, usize)) -> Result<f64> {
    f.validate()?;
    check_time(t)?;
    check_u(u)?;
    let (r_max, m_max) = truncation;
    let b = (f.mu + p.rate() * (1.0 - p.jump_pgf(u))).powf(f.alpha) - f.mu.powf(f.alpha);
    if b == 0.0 {
        // only r = 0 survives; I_0 = e^{-νt} Σ_m (νt)^m/m! = 1
        return ttsf_coefficient(f.beta, f.nu, t, 0, m_max);
    }
    let mut sum = 0.0;
    let mut small = 0;
    let mut log_b = 0.0;
    for r in 0..=r_max {
        if r > 0 {
            log_b += b.ln();
        }
        let i_r = ttsf_coefficient(f.beta, f.nu, t, r, m_max)?;
        let term = if r % 2 == 1 { -1.0 } else { 1.0 } * log_b.exp() * i_r;
        sum += term;
        if term.abs() <= 1e-12 * sum.abs() {
            small += 1;
            if small >= 5 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "ttsfppok_pgf",
        terms: r_max + 1,
    })
}

/// Events of a PPoK path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedEventPath {
    pub event_times: Vec<f64>,
    pub marks: Vec<u32>,
    pub counts: Vec<u64>,
}

/// PPoK path: Poisson(kλ) arrivals on `[0, horizon]` with uniform marks on `{1..k}`.
pub fn sample_ppok_path<R: Rng + ?Sized>(p: &OrderParams, horizon: f64, rng: &mut R) -> Result<MarkedEventPath> {
    check_time(horizon)?;
    let rate = p.rate();
    let mut path = MarkedEventPath {
        event_times: Vec::new(),
        marks: Vec::new(),
        counts: Vec::new(),
    };
    let mut t = 0.0;
    let mut total = 0u64;
    loop {
        let e: f64 = rng.sample(Exp1);
        t += e / rate;
        if t > horizon {
            return Ok(path);
        }
        let mark = rng.random_range(1..=p.k as u32);
        total += mark as u64;
        path.event_times.push(t);
        path.marks.push(mark);
        path.counts.push(total);
    }
}

/// TFPPoK path on `[0, horizon]`. The i-th PPoK event, at operational time
/// `τ_i`, is seen at real time `D_β(τ_i)`, where `D_β` is the stable
/// subordinator whose inverse is the clock `E_β`.
pub fn sample_tf_path<R: Rng + ?Sized>(p: &OrderParams, beta: f64, horizon: f64, rng: &mut R) -> Result<MarkedEventPath> {
    check_unit("beta", beta)?;
    check_time(horizon)?;
    let rate = p.rate();
    let mut path = MarkedEventPath {
        event_times: Vec::new(),
        marks: Vec::new(),
        counts: Vec::new(),
    };
    let mut real = 0.0;
    let mut total = 0u64;
    loop {
        let gap = rng.sample::<f64, _>(Exp1) / rate;
        real += gap.powf(1.0 / beta) * stable_standard(beta, rng);
        if real > horizon {
            return Ok(path);
        }
        let mark = rng.random_range(1..=p.k as u32);
        total += mark as u64;
        path.event_times.push(real);
        path.marks.push(mark);
        path.counts.push(total);
    }
}

fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean > POISSON_SATURATION {
        mean.round().min(u64::MAX as f64) as u64
    } else {
        Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
    }
}

/// `N^k(x)` drawn as `Σ_j j · Poisson(λx)`, the counts of each mark being
/// independent Poisson variables.
///
/// Means above `1e12` are not sampled; the rounded mean is returned instead.
pub fn ppok_count_at<R: Rng + ?Sized>(p: &OrderParams, x: f64, rng: &mut R) -> u64 {
    (1..=p.k as u64).fold(0u64, |acc, j| acc.saturating_add(j.saturating_mul(poisson_draw(p.lambda * x, rng))))
}

/// Random time at which the PPoK is read for the chosen variant.
pub fn sample_clock<R: Rng + ?Sized>(f: &FracParams, variant: FracVariant, t: f64, step: f64, rng: &mut R) -> Result<f64> {
    f.validate()?;
    check_time(t)?;
    match variant {
        FracVariant::Tf => Ok(sample_inverse_stable_exact(f.beta, t, rng)),
        FracVariant::Sf => Ok(if f.alpha == 1.0 {
            t
        } else {
            t.powf(1.0 / f.alpha) * stable_standard(f.alpha, rng)
        }),
        FracVariant::Ttsf => {
            let e = if f.nu == 0.0 {
                sample_inverse_stable_exact(f.beta, t, rng)
            } else if f.beta == 1.0 {
                t
            } else {
                let spec = SubordinatorSpec::TemperedStable { alpha: f.beta, mu: f.nu };
                sample_inverse(&spec, t, step, rng)?
            };
            let spec = SubordinatorSpec::TemperedStable { alpha: f.alpha, mu: f.mu };
            Ok(if e > 0.0 { sample_increment(&spec, e, rng) } else { 0.0 })
        }
    }
}

/// One draw of the time-changed count at `t`, using the default clock step.
pub fn sample_fractional<R: Rng + ?Sized>(
    p: &OrderParams,
    f: &FracParams,
    variant: FracVariant,
    t: f64,
    rng: &mut R,
) -> Result<u64> {
    sample_fractional_with_step(p, f, variant, t, DEFAULT_STEP_FRACTION * t, rng)
}

/// As [`sample_fractional`], with an explicit grid step for inverse tempered clocks.
pub fn sample_fractional_with_step<R: Rng + ?Sized>(
    p: &OrderParams,
    f: &FracParams,
    variant: FracVariant,
    t: f64,
    step: f64,
    rng: &mut R,
) -> Result<u64> {
    let x = sample_clock(f, variant, t, step, rng)?;
    Ok(ppok_count_at(p, x, rng))
}

/// Analytic pmf table of the chosen variant for `n = 0..=n_max`.
pub fn pmf_table(variant: PmfVariant, p: &OrderParams, f: &FracParams, t: f64, n_max: usize) -> Result<PmfTable> {
    check_n(n_max)?;
    let probs = match variant {
        PmfVariant::Ppok | PmfVariant::Field => (0..=n_max).map(|n| ppok_pmf(p, t, n)).collect::<Result<Vec<_>>>()?,
        PmfVariant::Tfppok => (0..=n_max).map(|n| tfppok_pmf(p, f.beta, t, n)).collect::<Result<Vec<_>>>()?,
        PmfVariant::Sfppok => (0..=n_max).map(|n| sfppok_pmf(p, f.alpha, t, n)).collect::<Result<Vec<_>>>()?,
    };
    Ok(PmfTable::from_probs(variant, *p, *f, t, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn op(k: usize, lambda: f64) -> OrderParams {
        OrderParams::new(k, lambda).unwrap()
    }

    #[test]
    fn ppok_examples() {
        let e = std::f64::consts::E;
        assert!((ppok_pmf(&op(1, 1.0), 1.0, 2).unwrap() - 0.5 / e).abs() < 1e-15);
        assert!((ppok_pmf(&op(2, 1.0), 1.0, 0).unwrap() - (-2.0_f64).exp()).abs() < 1e-15);
        assert!((ppok_pmf(&op(2, 1.0), 1.0, 2).unwrap() - 1.5 * (-2.0_f64).exp()).abs() < 1e-15);
        let p = op(2, 1.0);
        assert_eq!(ppok_pgf(&p, 1.0, 1.0).unwrap(), 1.0);
        assert!((ppok_pgf(&p, 1.0, 0.0).unwrap() - ppok_pmf(&p, 1.0, 0).unwrap()).abs() < 1e-16);
        let g = ppok_pgf(&p, 1.0, 0.5).unwrap();
        assert!((g - (-1.25_f64).exp()).abs() < 1e-15);
        let s: f64 = (0..=60).map(|n| 0.5_f64.powi(n as i32) * ppok_pmf(&p, 1.0, n).unwrap()).sum();
        assert!((g - s).abs() < 1e-10);
    }

    #[test]
    fn tf_reductions() {
        let p = op(2, 1.0);
        assert!((tfppok_pmf(&p, 1.0, 1.0, 2).unwrap() - ppok_pmf(&p, 1.0, 2).unwrap()).abs() < 1e-10);
        let p3 = op(3, 0.5);
        let v = tfppok_pmf(&p3, 0.6, 2.0, 0).unwrap();
        let m = mittag_leffler(0.6, 1.0, -1.5 * 2.0_f64.powf(0.6), &SeriesControl::default()).unwrap();
        assert!((v - m).abs() < 1e-13);
        assert_eq!(tfppok_pgf(&p, 0.7, 1.0, 1.0).unwrap(), 1.0);
        assert!((tfppok_pgf(&p, 1.0, 1.0, 0.5).unwrap() - ppok_pgf(&p, 1.0, 0.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn tf_pgf_pmf_duality() {
        let p = op(2, 1.0);
        for u in [0.2, 0.5, 0.8_f64] {
            let s: f64 = (0..=60).map(|n| u.powi(n as i32) * tfppok_pmf(&p, 0.7, 1.0, n).unwrap()).sum();
            let g = tfppok_pgf(&p, 0.7, 1.0, u).unwrap();
            assert!((g - s).abs() < 1e-8, "u={u}: {g} vs {s}");
        }
    }

    #[test]
    fn tf_moments() {
        let (m, _) = tfppok_moments(&op(1, 2.0), 1.0, 1.0, 1.5).unwrap();
        assert!((m - 3.0).abs() < 1e-12);
        let (m, _) = tfppok_moments(&op(2, 1.0), 0.5, 1.0, 1.0).unwrap();
        assert!((m - 3.0 / gamma(1.5)).abs() < 1e-12);
        for k in 1..4 {
            for beta in [0.3, 0.6, 0.9] {
                let (_, v) = tfppok_moments(&op(k, 0.7), beta, 1.3, 1.3).unwrap();
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn sf_examples() {
        let p = op(2, 1.0);
        let v = sfppok_pmf(&p, 1.0, 0.5, 1).unwrap();
        assert!((v - ppok_pmf(&p, 0.5, 1).unwrap()).abs() < 1e-8);
        let v = sfppok_pmf(&p, 0.5, 1.0, 0).unwrap();
        assert!((v - (-(2.0_f64).sqrt()).exp()).abs() < 1e-12);
        assert_eq!(sfppok_pgf(&p, 0.6, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn sf_series_matches_recursion() {
        for (k, lambda, alpha, t) in [(1, 1.0, 0.7, 1.0), (2, 1.0, 0.7, 1.0), (3, 0.5, 0.5, 2.0), (2, 1.0, 0.6, 0.3)] {
            let p = op(k, lambda);
            let rec = sfppok_pmf_recursive(&p, alpha, t, 25).unwrap();
            for n in 0..=25 {
                let (s, err) = sfppok_pmf_series(&p, alpha, t, n).unwrap();
                assert!((s - rec[n]).abs() <= 1e-10 * rec[n] + err, "k={k} n={n}: {s} vs {}", rec[n]);
            }
        }
    }

    #[test]
    fn sf_pgf_pmf_duality() {
        let p = op(2, 1.0);
        for u in [0.2, 0.5, 0.8_f64] {
            let s: f64 = (0..=60).map(|n| u.powi(n as i32) * sfppok_pmf(&p, 0.6, 1.0, n).unwrap()).sum();
            let g = sfppok_pgf(&p, 0.6, 1.0, u).unwrap();
            assert!((g - s).abs() < 1e-6, "u={u}: {g} vs {s}");
        }
    }

    #[test]
    fn sf_k1_matches_space_fractional_poisson() {
        let p = op(1, 1.3);
        for u in [0.1, 0.5, 0.9_f64] {
            let g = sfppok_pgf(&p, 0.6, 2.0, u).unwrap();
            let want = (-(1.3_f64).powf(0.6) * 2.0 * (1.0 - u).powf(0.6)).exp();
            assert!((g - want).abs() < 1e-14);
        }
    }

    #[test]
    fn levy_weights_are_nonnegative_and_consistent() {
        for k in 1..=4 {
            for alpha in [0.3, 0.7] {
                let p = op(k, 0.8);
                let w = sfppok_levy_weights(&p, alpha, 40).unwrap();
                let g = levy_weights_grouped(&p, alpha, 40);
                for y in 1..=40 {
                    assert!(w[y] >= 0.0, "k={k} y={y}: {}", w[y]);
                    assert!((w[y] - g[y]).abs() <= 1e-12 * g[y].max(1e-300), "k={k} y={y}");
                }
            }
        }
        let w = sfppok_levy_weights(&op(1, 2.0), 0.6, 3).unwrap();
        assert!((w[1] - 0.6 * 2.0_f64.powf(0.6)).abs() < 1e-14);
    }

    #[test]
    fn first_passage_closed_forms() {
        let (k, lambda, alpha, t) = (3, 0.8, 0.6, 1.4);
        let p = op(k, lambda);
        let c = (k as f64 * lambda).powf(alpha);
        let f1 = sfppok_first_passage(&p, alpha, 1, t).unwrap();
        assert!((f1 - c * (-c * t).exp()).abs() < 1e-14);
        let kf = k as f64;
        let la = lambda.powf(alpha);
        let want = la * (-t * c).exp() * (kf.powf(alpha) - alpha * kf.powf(alpha - 1.0) + alpha * la * t * kf.powf(2.0 * alpha - 1.0));
        let f2 = sfppok_first_passage(&p, alpha, 2, t).unwrap();
        assert!((f2 - want).abs() < 1e-12, "{f2} vs {want}");
        let f = sfppok_first_passage(&op(1, 2.0), 1.0, 1, 0.5).unwrap();
        assert!((f - 2.0 * (-1.0_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn first_passage_matches_pmf_derivative() {
        // P(T_l <= t) = P(R(t) >= l)
        let p = op(2, 1.0);
        let alpha = 0.7;
        for l in 1..=5 {
            let t = 0.8;
            let h = 1e-4;
            let below = |s: f64| (0..l).map(|j| sfppok_pmf(&p, alpha, s, j).unwrap()).sum::<f64>();
            let fd = -(below(t + h) - below(t - h)) / (2.0 * h);
            let f = sfppok_first_passage(&p, alpha, l, t).unwrap();
            assert!((f - fd).abs() < 1e-7, "l={l}: {f} vs {fd}");
        }
    }

    #[test]
    fn ttsf_reductions() {
        let p = op(2, 1.0);
        let f = FracParams::new(0.6, 0.7, 0.3, 0.4).unwrap();
        let g = ttsfppok_pgf(&p, &f, 1.0, 1.0, (400, 200)).unwrap();
        assert!((g - 1.0).abs() < 1e-8, "{g}");
        let f0 = FracParams::new(1.0, 0.7, 0.0, 0.0).unwrap();
        let a = ttsfppok_pgf(&p, &f0, 1.0, 0.5, (400, 200)).unwrap();
        let b = tfppok_pgf(&p, 0.7, 1.0, 0.5).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        let f1 = FracParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let a = ttsfppok_pgf(&p, &f1, 1.0, 0.5, (400, 200)).unwrap();
        assert!((a - ppok_pgf(&p, 1.0, 0.5).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn ttsf_time_tempering_alone() {
        // α = 1, μ = 0: the pgf is E[exp(-kλ(1-G)·E_{β,ν}(t))]; compare ν > 0 against MC
        let p = op(2, 0.5);
        let f = FracParams::new(1.0, 0.7, 0.0, 0.8).unwrap();
        let g = ttsfppok_pgf(&p, &f, 1.0, 0.4, (400, 200)).unwrap();
        let b = p.rate() * (1.0 - p.jump_pgf(0.4));
        let spec = SubordinatorSpec::TemperedStable { alpha: 0.7, mu: 0.8 };
        let n = 40_000;
        let d = RngStream::new(3, 0)
            .try_par_map(n, |r| sample_inverse(&spec, 1.0, 1e-3, r).map(|e| (-b * e).exp()))
            .unwrap();
        let m = d.iter().sum::<f64>() / n as f64;
        let se = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n * n) as f64).sqrt();
        assert!((g - m).abs() < 4.0 * se, "{g} vs {m} (se {se})");
    }

    #[test]
    fn marked_paths() {
        let mut rng = RngStream::new(2, 0).rng();
        let p = op(3, 1.0);
        for _ in 0..100 {
            let path = sample_ppok_path(&p, 5.0, &mut rng).unwrap();
            assert!(path.marks.iter().all(|&m| (1..=3).contains(&m)));
            assert!(path.event_times.windows(2).all(|w| w[1] >= w[0]));
            assert!(path.counts.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 3));
        }
        let path = sample_ppok_path(&op(1, 2.0), 10.0, &mut rng).unwrap();
        assert!(path.marks.iter().all(|&m| m == 1));
    }

    #[test]
    fn tf_path_matches_marginal() {
        let p = op(2, 1.0);
        let n = 100_000;
        let d = RngStream::new(5, 0).par_map(n, |r| {
            sample_tf_path(&p, 0.7, 1.0, r).unwrap().counts.last().copied().unwrap_or(0) as f64
        });
        let m = d.iter().sum::<f64>() / n as f64;
        let (mean, var) = tfppok_moments(&p, 0.7, 1.0, 1.0).unwrap();
        assert!((m - mean).abs() < 3.0 * (var / n as f64).sqrt(), "{m} vs {mean}");
        let p0 = d.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64;
        let want = tfppok_pmf(&p, 0.7, 1.0, 0).unwrap();
        assert!((p0 - want).abs() < 3.0 * (want * (1.0 - want) / n as f64).sqrt());
    }

    #[test]
    fn path_count_mean() {
        let p = op(2, 1.0);
        let n = 100_000;
        let d = RngStream::new(4, 0).par_map(n, |r| {
            sample_ppok_path(&p, 1.0, r).unwrap().counts.last().copied().unwrap_or(0) as f64
        });
        let m = d.iter().sum::<f64>() / n as f64;
        let (mean, var) = ppok_moments(&p, 1.0);
        assert!((m - mean).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn normalization_sweep() {
        for k in 1..=3 {
            for lambda in [0.5, 1.0] {
                let p = op(k, lambda);
                for beta in [0.5, 0.7, 1.0] {
                    let s: f64 = (0..=60).map(|n| tfppok_pmf(&p, beta, 1.0, n).unwrap()).sum();
                    assert!((1.0 - 1e-4..=1.0 + 1e-9).contains(&s), "tf k={k} λ={lambda} β={beta}: {s}");
                }
                for alpha in [0.5, 0.7, 1.0] {
                    let q = sfppok_pmf_recursive(&p, alpha, 1.0, 60).unwrap();
                    let d20 = 1.0 - q[..=20].iter().sum::<f64>();
                    let d60 = 1.0 - q.iter().sum::<f64>();
                    assert!(d60 >= -1e-12 && d60 <= d20, "sf k={k} α={alpha}");
                }
            }
        }
    }

    #[test]
    fn sf_pgf_ode() {
        let p = op(2, 1.0);
        let (alpha, u, t, h) = (0.6, 0.5, 1.0, 1e-4);
        let g = |s: f64| sfppok_pgf(&p, alpha, s, u).unwrap();
        let d = (g(t + h) - g(t - h)) / (2.0 * h);
        let rhs = -(p.rate().powf(alpha)) * (1.0 - p.jump_pgf(u)).powf(alpha) * g(t);
        assert!((d - rhs).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn pmfs_are_probabilities(k in 1usize..4, lambda in 0.2f64..1.5, t in 0.1f64..2.0, beta in 0.3f64..1.0, alpha in 0.3f64..1.0) {
            let p = op(k, lambda);
            let f = FracParams::new(alpha, beta, 0.0, 0.0).unwrap();
            for v in [PmfVariant::Ppok, PmfVariant::Tfppok, PmfVariant::Sfppok] {
                let tab = pmf_table(v, &p, &f, t, 30).unwrap();
                prop_assert!(tab.probs.iter().all(|&q| q >= -1e-15));
                prop_assert!(tab.truncation_mass >= -1e-9);
            }
        }

        #[test]
        fn sampler_reproducible(seed in 0u64..500) {
            let p = op(2, 1.0);
            let f = FracParams::new(0.7, 0.7, 0.3, 0.4).unwrap();
            for v in [FracVariant::Tf, FracVariant::Sf, FracVariant::Ttsf] {
                let a = sample_fractional(&p, &f, v, 0.5, &mut RngStream::new(seed, 1).rng()).unwrap();
                let b = sample_fractional(&p, &f, v, 0.5, &mut RngStream::new(seed, 1).rng()).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}

//! Wright function `W_{-β,0}(-z)` and the one-sided stable laws built on it.
//!
//! For `0 < β < 1` and `z > 0`,
//!
//! ```text
//! W_{-β,0}(-z) = Σ_{k≥1} (-1)^{k+1} z^k sin(πβk) Γ(1+βk) / (π k!)
//! ```
//!
//! The series is entire but its terms swell like `exp(c z^{1/(1-β)})` before
//! decaying, so for large `z` the double-precision sum is swamped by rounding.
//! There the Kanter/Zolotarev integral is used instead:
//!
//! ```text
//! W_{-β,0}(-z) = β ζ / ((1-β) π) ∫_0^π A(φ) e^{-ζ A(φ)} dφ,   ζ = z^{1/(1-β)},
//! A(φ) = (sin βφ / sin φ)^{1/(1-β)} · sin((1-β)φ) / sin βφ.
//! ```
//!
//! The stable density is `f_β(x,t) = W_{-β,0}(-t x^{-β}) / x` and the inverse
//! stable density is `h_β(x,t) = W_{-β,0}(-x t^{-β}) / (β x)`.

use super::quad::{integrate, QuadControl};
use super::{ln_gamma, sum_series, SeriesControl, SeriesSum};
use crate::error::{ensure, Error, Result};
use std::f64::consts::PI;

/// Consecutive growing terms tolerated before the series is declared divergent.
pub const GROWTH_LIMIT: usize = 20;
/// Largest ratio `max|term| / |sum|` accepted from the series in [`wright_neg`].
pub(crate) const CANCELLATION_LIMIT: f64 = 1e4;

fn check_beta(beta: f64) -> Result<()> {
    ensure(beta > 0.0 && beta < 1.0, || format!("beta must lie in (0,1), got {beta}"))
}

fn series_sum(beta: f64, z: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    let lz = z.ln();
    // the k = 0 term carries 1/Γ(0) = 0, so summation starts at k = 1
    sum_series(ctl, "wright_series", Some(GROWTH_LIMIT), |j| {
        let kf = (j + 1) as f64;
        let log_env = kf * lz + ln_gamma(1.0 + beta * kf) - ln_gamma(kf + 1.0) - PI.ln();
        let env = log_env.exp();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        (sign * env * (PI * beta * kf).sin(), env)
    })
}

/// Direct summation of the Wright series for `W_{-β,0}(-z)`, `z >= 0`.
///
/// Fails with `NonConvergence` when the terms keep growing for more than
/// [`GROWTH_LIMIT`] consecutive indices.
pub fn wright_series(beta: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    check_beta(beta)?;
    ensure(z >= 0.0 && z.is_finite(), || format!("z must be finite and >= 0, got {z}"))?;
    if z == 0.0 {
        return Ok(0.0);
    }
    Ok(series_sum(beta, z, ctl)?.value)
}

fn kanter_log_a(beta: f64, phi: f64) -> f64 {
    let sb = (beta * phi).sin();
    ((sb.ln() - phi.sin().ln()) / (1.0 - beta)) + ((1.0 - beta) * phi).sin().ln() - sb.ln()
}

fn quad_ctl() -> QuadControl {
    QuadControl {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// `∫_0^π g(A(φ)) dφ / π` for a bounded integrand `g`.
fn kanter_average(beta: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let v = integrate(
        |phi| {
            let a = kanter_log_a(beta, phi).exp();
            let v = g(a);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        PI,
        quad_ctl(),
    )?;
    Ok(v / PI)
}

fn wright_integral(beta: f64, z: f64) -> Result<f64> {
    let zeta = z.powf(1.0 / (1.0 - beta));
    let avg = kanter_average(beta, |a| {
        let e = zeta * a;
        if e > 745.0 {
            0.0
        } else {
            a * (-e).exp()
        }
    })?;
    Ok(beta / (1.0 - beta) * zeta * avg)
}

/// `W_{-β,0}(-z)` for `z >= 0`: the series where it is numerically sound, the
/// Zolotarev integral otherwise.
pub fn wright_neg(beta: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    check_beta(beta)?;
    ensure(z >= 0.0 && z.is_finite(), || format!("z must be finite and >= 0, got {z}"))?;
    if z == 0.0 {
        return Ok(0.0);
    }
    match series_sum(beta, z, ctl) {
        Ok(s) if s.max_abs_term <= CANCELLATION_LIMIT * s.value.abs() => Ok(s.value.max(0.0)),
        Ok(_) | Err(Error::NonConvergence { .. }) => Ok(wright_integral(beta, z)?.max(0.0)),
        Err(e) => Err(e),
    }
}

fn check_pos(name: &str, v: f64) -> Result<()> {
    ensure(v > 0.0 && v.is_finite(), || format!("{name} must be finite and > 0, got {v}"))
}

/// Density of the stable subordinator `S_β(t)` at `x`.
pub fn stable_density(beta: f64, x: f64, t: f64, ctl: &SeriesControl) -> Result<f64> {
    check_beta(beta)?;
    check_pos("x", x)?;
    check_pos("t", t)?;
    Ok(wright_neg(beta, t * x.powf(-beta), ctl)? / x)
}

/// Density of the inverse stable subordinator `E_β(t)` at `x`.
pub fn inv_stable_density(beta: f64, x: f64, t: f64, ctl: &SeriesControl) -> Result<f64> {
    check_beta(beta)?;
    check_pos("x", x)?;
    check_pos("t", t)?;
    Ok(wright_neg(beta, x * t.powf(-beta), ctl)? / (beta * x))
}

/// `P(S_β(t) <= x)`.
pub fn stable_cdf(beta: f64, x: f64, t: f64) -> Result<f64> {
    check_beta(beta)?;
    check_pos("t", t)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let zeta = (t * x.powf(-beta)).powf(1.0 / (1.0 - beta));
    kanter_average(beta, |a| (-zeta * a).exp())
}

/// `P(S_β(t) > x)`, computed without cancellation in the upper tail.
pub fn stable_sf(beta: f64, x: f64, t: f64) -> Result<f64> {
    check_beta(beta)?;
    check_pos("t", t)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    let zeta = (t * x.powf(-beta)).powf(1.0 / (1.0 - beta));
    kanter_average(beta, |a| -(-zeta * a).exp_m1())
}

/// `P(E_β(t) <= x) = P(S_β(x) > t)`.
pub fn inv_stable_cdf(beta: f64, x: f64, t: f64) -> Result<f64> {
    check_beta(beta)?;
    check_pos("t", t)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    stable_sf(beta, t, x)
}

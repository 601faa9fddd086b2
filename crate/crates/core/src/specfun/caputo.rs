//! Caputo and tempered Caputo derivatives of gridded functions (L1 scheme).
//!
//! Both operators are convolutions of `g'` with a kernel `k̄`:
//! `k̄(r) = r^{-β}/Γ(1-β)` for the plain derivative and
//! `k̄(r) = r^{-β}e^{-νr}/Γ(1-β) - ν^β Q(1-β, νr)` for the tempered one, the
//! latter being the tail of the Lévy measure with exponent `(s+ν)^β - ν^β`.
//! The L1 scheme takes `g'` piecewise constant on grid cells and integrates
//! the kernel exactly, which gives weights `K((m+1)h) - K(mh)` with
//! `K(r) = ∫_0^r k̄`.

use super::gamma;
use crate::error::{ensure, Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};

/// Samples of a function on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        ensure(times.len() == values.len(), || {
            format!("{} times but {} values", times.len(), values.len())
        })?;
        ensure(times.len() >= 3, || format!("need at least 3 points, got {}", times.len()))?;
        ensure(times.windows(2).all(|w| w[1] > w[0]), || "times must be strictly increasing".into())?;
        ensure(times.iter().chain(&values).all(|v| v.is_finite()), || "non-finite grid entry".into())?;
        Ok(Self { times, values })
    }

    /// Tabulates `f` on `0, step, ..., (points-1)·step`.
    pub fn sample(f: impl Fn(f64) -> f64, step: f64, points: usize) -> Result<Self> {
        ensure(step > 0.0 && step.is_finite(), || format!("step must be positive, got {step}"))?;
        let times: Vec<f64> = (0..points).map(|i| i as f64 * step).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn uniform_step(&self) -> Result<f64> {
        let n = self.times.len() - 1;
        let h = (self.times[n] - self.times[0]) / n as f64;
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-6 * h);
        if uniform {
            Ok(h)
        } else {
            Err(Error::NonUniformGrid)
        }
    }
}

fn check_beta(beta: f64, allow_one: bool) -> Result<()> {
    let ok = beta > 0.0 && (beta < 1.0 || (allow_one && beta == 1.0));
    ensure(ok, || format!("beta out of range: {beta}"))
}

fn check_index(g: &GridFunction, at_index: usize) -> Result<()> {
    if at_index < 2 {
        return Err(Error::GridTooCoarse { at_index });
    }
    ensure(at_index < g.len(), || {
        format!("index {at_index} outside a grid of {} points", g.len())
    })
}

/// Tail `∫_r^∞ β e^{-νs} s^{-β-1} ds / Γ(1-β)` of the tempered stable Lévy measure.
pub fn tempered_tail(beta: f64, nu: f64, r: f64) -> Result<f64> {
    check_beta(beta, false)?;
    ensure(nu >= 0.0 && nu.is_finite(), || format!("nu must be >= 0, got {nu}"))?;
    ensure(r > 0.0, || format!("r must be positive, got {r}"))?;
    let head = r.powf(-beta) * (-nu * r).exp() / gamma(1.0 - beta);
    if nu == 0.0 {
        return Ok(head);
    }
    Ok(head - nu.powf(beta) * gamma_ur(1.0 - beta, nu * r))
}

/// `K(r) = ∫_0^r k̄(s) ds` for the tempered kernel.
fn tempered_kernel_integral(beta: f64, nu: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if nu == 0.0 {
        return r.powf(1.0 - beta) / gamma(2.0 - beta);
    }
    let x = nu * r;
    beta * nu.powf(beta - 1.0) * gamma_lr(1.0 - beta, x) + r.powf(1.0 - beta) * (-x).exp() / gamma(1.0 - beta)
        - r * nu.powf(beta) * gamma_ur(1.0 - beta, x)
}

fn weights(len: usize, h: f64, kernel_integral: impl Fn(f64) -> f64) -> Vec<f64> {
    let k: Vec<f64> = (0..len).map(|m| kernel_integral(m as f64 * h)).collect();
    k.windows(2).map(|w| (w[1] - w[0]) / h).collect()
}

fn convolve(values: &[f64], w: &[f64], i: usize) -> f64 {
    (0..i).map(|m| w[m] * (values[i - m] - values[i - m - 1])).sum()
}

fn plain_weights(len: usize, h: f64, beta: f64) -> Vec<f64> {
    let c = h.powf(-beta) / gamma(2.0 - beta);
    (0..len.saturating_sub(1))
        .map(|j| {
            if j == 0 {
                return c;
            }
            let jf = j as f64;
            c * ((jf + 1.0).powf(1.0 - beta) - jf.powf(1.0 - beta))
        })
        .collect()
}

/// L1 approximation of the Caputo derivative of order `β ∈ (0,1]` at `times[at_index]`.
///
/// With `β = 1` this is the backward difference quotient.
pub fn caputo_derivative(g: &GridFunction, beta: f64, at_index: usize) -> Result<f64> {
    check_beta(beta, true)?;
    check_index(g, at_index)?;
    let h = g.uniform_step()?;
    let w = plain_weights(at_index + 1, h, beta);
    Ok(convolve(&g.values, &w, at_index))
}

/// L1 Caputo derivative at every grid index.
///
/// Entry `0` is zero and entry `1` uses a single cell; both are returned for
/// convenience but carry no accuracy guarantee.
pub fn caputo_profile(g: &GridFunction, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta, true)?;
    let h = g.uniform_step()?;
    let w = plain_weights(g.len(), h, beta);
    Ok((0..g.len()).map(|i| convolve(&g.values, &w, i)).collect())
}

fn check_nu(nu: f64) -> Result<()> {
    ensure(nu >= 0.0 && nu.is_finite(), || format!("nu must be >= 0, got {nu}"))
}

/// L1 approximation of the tempered Caputo derivative `∫_0^t g'(u) k̄(t-u) du`.
///
/// Reduces to [`caputo_derivative`] when `ν = 0`.
pub fn tempered_caputo_derivative(g: &GridFunction, beta: f64, nu: f64, at_index: usize) -> Result<f64> {
    check_beta(beta, false)?;
    check_nu(nu)?;
    check_index(g, at_index)?;
    if nu == 0.0 {
        return caputo_derivative(g, beta, at_index);
    }
    let h = g.uniform_step()?;
    let w = weights(at_index + 1, h, |r| tempered_kernel_integral(beta, nu, r));
    Ok(convolve(&g.values, &w, at_index))
}

/// Tempered L1 derivative at every grid index, with the same caveats as [`caputo_profile`].
pub fn tempered_caputo_profile(g: &GridFunction, beta: f64, nu: f64) -> Result<Vec<f64>> {
    check_beta(beta, false)?;
    check_nu(nu)?;
    if nu == 0.0 {
        return caputo_profile(g, beta);
    }
    let h = g.uniform_step()?;
    let w = weights(g.len(), h, |r| tempered_kernel_integral(beta, nu, r));
    Ok((0..g.len()).map(|i| convolve(&g.values, &w, i)).collect())
}

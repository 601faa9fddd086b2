//! Special functions and fractional-calculus operators.
//!
//! Mittag-Leffler and Prabhakar functions are summed from their power series;
//! the series is only admitted for `|z| <= Z_CAP`.
//! Stable and inverse-stable densities go through the Wright function
//! `W_{-β,0}`, see [`wright`]. Caputo derivatives on uniform grids live in
//! [`caputo`].

pub mod caputo;
pub mod quad;
pub mod wright;

pub use caputo::{
    caputo_derivative, caputo_profile, tempered_caputo_derivative, tempered_caputo_profile,
    tempered_tail, GridFunction,
};
pub use wright::{
    inv_stable_cdf, inv_stable_density, stable_cdf, stable_density, stable_sf, wright_neg,
    wright_series,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
pub use statrs::function::gamma::ln_gamma;

/// Gamma function. On `(0, 171)` the argument is reduced to `[1, 2)` and
/// recurred upward, which keeps the relative error near `1e-15` where the
/// plain Lanczos value drifts to `1e-13`.
pub fn gamma(x: f64) -> f64 {
    if !(x > 0.0 && x < 171.0) {
        return statrs::function::gamma::gamma(x);
    }
    if x < 1.0 {
        return gamma(x + 1.0) / x;
    }
    let mut y = x;
    let mut prod = 1.0;
    while y >= 2.0 {
        y -= 1.0;
        prod *= y;
    }
    if y == 1.0 {
        prod
    } else {
        statrs::function::gamma::gamma(y) * prod
    }
}

/// Largest `|z|` for which the Mittag-Leffler / Prabhakar series is trusted.
pub const Z_CAP: f64 = 50.0;
/// Largest derivative order accepted by [`ml_derivative`].
pub const N_CAP: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_terms: 2000,
        }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        crate::error::ensure(rel_tol > 0.0 && rel_tol.is_finite(), || {
            format!("rel_tol must be positive, got {rel_tol}")
        })?;
        crate::error::ensure(max_terms >= 1, || "max_terms must be at least 1".into())?;
        Ok(Self { rel_tol, max_terms })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SeriesSum {
    pub value: f64,
    pub max_abs_term: f64,
}

/// Sums `term(j)` for `j = 0, 1, ...`.
///
/// `term` returns the signed term and a nonnegative magnitude envelope (equal to
/// `|term|` unless the term can vanish by accident, e.g. through a sine factor).
/// Summation stops once the envelope is past its peak and two consecutive
/// envelopes drop below `rel_tol` times the largest partial sum seen so far.
/// With `growth_limit = Some(g)`, more than `g` consecutive envelope increases is
/// reported as non-convergence.
pub(crate) fn sum_series<F>(
    ctl: &SeriesControl,
    what: &'static str,
    growth_limit: Option<usize>,
    mut term: F,
) -> Result<SeriesSum>
where
    F: FnMut(usize) -> (f64, f64),
{
    let mut sum = 0.0_f64;
    let mut max_partial = 0.0_f64;
    let mut max_abs_term = 0.0_f64;
    let mut prev_env = f64::INFINITY;
    let mut small_run = 0usize;
    let mut growth_run = 0usize;
    for j in 0..ctl.max_terms {
        let (t, env) = term(j);
        if !t.is_finite() || !env.is_finite() {
            return Err(Error::NonConvergence { what, terms: j });
        }
        sum += t;
        max_partial = max_partial.max(sum.abs());
        max_abs_term = max_abs_term.max(t.abs());
        if j > 0 && env > prev_env {
            growth_run += 1;
            if let Some(g) = growth_limit {
                if growth_run > g {
                    return Err(Error::NonConvergence { what, terms: j + 1 });
                }
            }
        } else {
            growth_run = 0;
        }
        let decreasing = env <= prev_env;
        prev_env = env;
        // relative to the running sum, so cancelling series are summed to the accuracy of their value
        if decreasing && (env <= ctl.rel_tol * sum.abs() || env <= 1e-30 * max_partial) {
            small_run += 1;
            if small_run >= 2 {
                return Ok(SeriesSum {
                    value: sum,
                    max_abs_term,
                });
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence {
        what,
        terms: ctl.max_terms,
    })
}

fn signed_exp(log_mag: f64, negative: bool) -> f64 {
    let v = log_mag.exp();
    if negative {
        -v
    } else {
        v
    }
}

fn recip_gamma(b: f64) -> f64 {
    if b == 1.0 || b == 2.0 {
        1.0
    } else {
        1.0 / gamma(b)
    }
}

fn check_cap(z: f64) -> Result<()> {
    if !z.is_finite() || z.abs() > Z_CAP {
        return Err(Error::DomainError(format!(
            "|z| = {} exceeds the series cap {Z_CAP}",
            z.abs()
        )));
    }
    Ok(())
}

/// Largest Gamma argument evaluated directly; beyond it terms go through `ln_gamma`.
const DIRECT_GAMMA_MAX: f64 = 170.0;

/// `coef · z^j / Γ(arg)`, with `ln|coef|` as the fallback when the direct form overflows.
fn series_term(coef: f64, ln_coef: f64, z: f64, j: usize, arg: f64) -> f64 {
    if arg < DIRECT_GAMMA_MAX {
        let t = coef * z.powi(j as i32) / gamma(arg);
        if t.is_finite() && coef.is_finite() {
            return t;
        }
    }
    let neg = (z < 0.0 && j % 2 == 1) != (coef < 0.0);
    signed_exp(ln_coef + j as f64 * z.abs().ln() - ln_gamma(arg), neg)
}

/// Largest `max|term| / |sum|` accepted from the Mittag-Leffler series on the negative axis.
const ML_CANCELLATION_LIMIT: f64 = 1e2;

/// Two-parameter Mittag-Leffler function `Σ z^j / Γ(a j + b)`.
///
/// For `0 < a < 1` and `z < 0`, when the series cancels badly the value is
/// taken from the real-axis integral of Gorenflo, Loutchko and Luchko instead.
pub fn mittag_leffler(a: f64, b: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    crate::error::ensure(a > 0.0 && b > 0.0, || format!("need a, b > 0, got a={a}, b={b}"))?;
    if a == 1.0 && b == 1.0 {
        return Ok(z.exp());
    }
    check_cap(z)?;
    if z == 0.0 {
        return Ok(recip_gamma(b));
    }
    let s = sum_series(ctl, "mittag_leffler", None, |j| {
        let t = series_term(1.0, 0.0, z, j, a * j as f64 + b);
        (t, t.abs())
    });
    let integral_ok = z < 0.0 && a < 1.0;
    match s {
        Ok(s) if !integral_ok || s.max_abs_term <= ML_CANCELLATION_LIMIT * s.value.abs() => Ok(s.value),
        Ok(_) | Err(Error::NonConvergence { .. }) if integral_ok => ml_negative_integral(a, b, -z),
        Ok(s) => Ok(s.value),
        Err(e) => Err(e),
    }
}

/// `M_{a,b}(-x)` for `0 < a < 1`, `x > 0`, by lowering `b` to at most 1 with
/// `M_{a,b}(z) = (M_{a,b-a}(z) - 1/Γ(b-a)) / z` and integrating
///
/// ```text
/// M_{a,b}(-x) = 1/(aπ) ∫_0^∞ r^{(1-b)/a} e^{-r^{1/a}} (r sin π(1-b) + x sin π(1-b+a)) / (r² + 2rx cos πa + x²) dr.
/// ```
fn ml_negative_integral(a: f64, b: f64, x: f64) -> Result<f64> {
    if b > 1.0 && b - a > 0.0 {
        let lower = ml_negative_integral(a, b - a, x)?;
        return Ok((lower - recip_gamma(b - a)) / -x);
    }
    // r = s^a, s = v^m with m = 1/(1+a-b) leaves a bounded integrand in v
    let m = 1.0 / (1.0 + a - b);
    let (s1, s2) = ((std::f64::consts::PI * (1.0 - b)).sin(), (std::f64::consts::PI * (1.0 - b + a)).sin());
    let c = (std::f64::consts::PI * a).cos();
    let f = move |v: f64| {
        if v <= 0.0 {
            return if m == 1.0 { x * s2 / (std::f64::consts::PI * x * x) } else { 0.0 };
        }
        let s = v.powf(m);
        let r = s.powf(a);
        let e = (-s).exp();
        if e == 0.0 {
            return 0.0;
        }
        m * e * (r * s1 + x * s2) / (r * r + 2.0 * r * x * c + x * x) / std::f64::consts::PI
    };
    let qc = quad::QuadControl {
        abs_tol: 1e-16,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    // the denominator is smallest near r = -x cos πa
    let r_peak = (-x * c).max(0.0);
    let v_peak = r_peak.powf(1.0 / a).powf(1.0 / m);
    let mut cuts = vec![0.0];
    if v_peak > 0.0 {
        cuts.push(v_peak);
    }
    let tail_from = cuts[cuts.len() - 1].max(1.0) * 2.0;
    cuts.push(tail_from);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += quad::integrate(f, w[0], w[1], qc)?;
    }
    Ok(total + quad::integrate_to_inf(f, tail_from, qc)?)
}

/// Prabhakar (three-parameter) Mittag-Leffler function `Σ (c)_j z^j / (Γ(a j + b) j!)`.
pub fn prabhakar_ml(a: f64, b: f64, c: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    crate::error::ensure(a > 0.0 && b > 0.0 && c >= 0.0, || {
        format!("need a, b > 0 and c >= 0, got a={a}, b={b}, c={c}")
    })?;
    check_cap(z)?;
    if z == 0.0 || c == 0.0 {
        return Ok(recip_gamma(b));
    }
    let lg_c = ln_gamma(c);
    // (c)_j / j! by running product
    let mut coef = 1.0;
    let s = sum_series(ctl, "prabhakar_ml", None, |j| {
        let jf = j as f64;
        if j > 0 {
            coef *= (c + jf - 1.0) / jf;
        }
        let ln_coef = ln_gamma(c + jf) - lg_c - ln_gamma(jf + 1.0);
        let t = series_term(coef, ln_coef, z, j, a * jf + b);
        (t, t.abs())
    })?;
    Ok(s.value)
}

/// `n`-th derivative of `M_{β,1}` at `z`.
///
/// For `β = 1` this is `e^z`. Otherwise the term-wise differentiated series
/// [`ml_derivative_series`] is used; for `z < 0` where that series cancels
/// badly (largest term above `1e4` times the sum) the value is taken from
/// `M^{(n)}_{β,1}(z) = ∫_0^∞ x^n e^{zx} h_β(x,1) dx`, with `h_β` the
/// inverse-stable density.
pub fn ml_derivative(n: usize, beta: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    crate::error::ensure(beta > 0.0 && beta <= 1.0, || format!("beta must lie in (0,1], got {beta}"))?;
    if beta == 1.0 {
        if n > N_CAP {
            return Err(Error::DomainError(format!("derivative order {n} exceeds {N_CAP}")));
        }
        return Ok(z.exp());
    }
    match ml_derivative_sum(n, beta, z, ctl) {
        Ok(s) if z >= 0.0 || s.max_abs_term <= wright::CANCELLATION_LIMIT * s.value.abs() => Ok(s.value),
        Ok(_) | Err(Error::NonConvergence { .. }) => ml_derivative_integral(n, beta, z, ctl),
        Err(e) => Err(e),
    }
}

fn ml_derivative_integral(n: usize, beta: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    // the integrand x^n e^{zx} h_β(x,1) peaks where n/x = |z| + O(x^{β/(1-β)}), so split there
    let peak = (n as f64 / z.abs().max(1e-3)).max(1.0);
    let qc = quad::QuadControl::default();
    let f = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        let h = inv_stable_density(beta, x, 1.0, ctl).unwrap_or(0.0);
        if h == 0.0 {
            0.0
        } else {
            (n as f64 * x.ln() + z * x).exp() * h
        }
    };
    let a = quad::integrate(f, 0.0, peak, qc)?;
    let b = quad::integrate_to_inf(f, peak, qc)?;
    Ok(a + b)
}

fn ml_derivative_sum(n: usize, beta: f64, z: f64, ctl: &SeriesControl) -> Result<SeriesSum> {
    if n > N_CAP {
        return Err(Error::DomainError(format!("derivative order {n} exceeds {N_CAP}")));
    }
    check_cap(z)?;
    let nf = n as f64;
    if z == 0.0 {
        let v = (ln_gamma(nf + 1.0) - ln_gamma(beta * nf + 1.0)).exp();
        return Ok(SeriesSum {
            value: v,
            max_abs_term: v,
        });
    }
    // (n+m)! / m! by running product
    let mut coef = gamma(nf + 1.0);
    sum_series(ctl, "ml_derivative", None, |m| {
        let mf = m as f64;
        if m > 0 {
            coef *= (nf + mf) / mf;
        }
        let ln_coef = ln_gamma(nf + mf + 1.0) - ln_gamma(mf + 1.0);
        let t = series_term(coef, ln_coef, z, m, beta * (nf + mf) + 1.0);
        (t, t.abs())
    })
}

/// `Σ_{m≥0} (n+m)! / (m! Γ(β(n+m)+1)) z^m`, summed directly for every `β`.
pub fn ml_derivative_series(n: usize, beta: f64, z: f64, ctl: &SeriesControl) -> Result<f64> {
    crate::error::ensure(beta > 0.0 && beta <= 1.0, || format!("beta must lie in (0,1], got {beta}"))?;
    Ok(ml_derivative_sum(n, beta, z, ctl)?.value)
}

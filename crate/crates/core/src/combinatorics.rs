//! The index set `Ω(k,n)` and the composition kernel shared by every order-k pmf.
//!
//! `Ω(k,n)` holds the vectors `(x_1,…,x_k)` of nonnegative integers with
//! `x_1 + 2x_2 + … + k x_k = n`. For such a vector `ζ = Σ x_i` and
//! `Π! = x_1!⋯x_k!`.

use crate::error::{ensure, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// Largest `n` accepted by [`enumerate_omega`].
pub const N_CAP: usize = 60;
/// Largest `|Ω(k,n)|` that will be materialized.
pub const COUNT_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParams {
    pub k: usize,
    pub lambda: f64,
}

impl OrderParams {
    pub fn new(k: usize, lambda: f64) -> Result<Self> {
        ensure(k >= 1, || "order k must be at least 1".into())?;
        ensure(lambda > 0.0 && lambda.is_finite(), || format!("lambda must be positive, got {lambda}"))?;
        Ok(Self { k, lambda })
    }

    /// Total event rate `kλ` of the underlying Poisson process.
    pub fn rate(&self) -> f64 {
        self.k as f64 * self.lambda
    }

    /// `E[X]` for a jump uniform on `{1..k}`.
    pub fn jump_mean(&self) -> f64 {
        (self.k as f64 + 1.0) / 2.0
    }

    /// `E[X²]` for a jump uniform on `{1..k}`.
    pub fn jump_second_moment(&self) -> f64 {
        let k = self.k as f64;
        (k + 1.0) * (2.0 * k + 1.0) / 6.0
    }

    /// pgf `G_X(u) = (u/k)(1-u^k)/(1-u)` of a jump, with the limit 1 at `u = 1`.
    pub fn jump_pgf(&self, u: f64) -> f64 {
        if u == 1.0 {
            return 1.0;
        }
        let mut acc = 0.0;
        let mut p = 1.0;
        for _ in 0..self.k {
            p *= u;
            acc += p;
        }
        acc / self.k as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    pub x: Vec<u32>,
    pub zeta: u32,
    pub n: u32,
}

impl Composition {
    /// `ln(x_1! ⋯ x_k!)`.
    pub fn ln_factorial_product(&self) -> f64 {
        self.x.iter().map(|&xi| ln_factorial(xi as usize)).sum()
    }
}

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; N_CAP + 2];
        for i in 1..t.len() {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    })
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    let t = ln_factorial_table();
    if n < t.len() {
        t[n]
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// Generalized falling factorial `[a]_m = a(a-1)⋯(a-m+1)`, with `[a]_0 = 1`.
pub fn falling_factorial(a: f64, m: usize) -> f64 {
    (0..m).map(|i| a - i as f64).product()
}

type Memo = RwLock<HashMap<(usize, usize), Arc<Vec<Composition>>>>;

fn memo() -> &'static Memo {
    static MEMO: OnceLock<Memo> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(HashMap::new()))
}

fn build(k: usize, n: usize) -> Result<Vec<Composition>> {
    let mut out = Vec::new();
    let mut x = vec![0u32; k];
    fn rec(i: usize, rest: usize, x: &mut Vec<u32>, out: &mut Vec<Composition>, n: usize) -> Result<()> {
        let k = x.len();
        if i == k - 1 {
            let part = k;
            if !rest.is_multiple_of(part) {
                return Ok(());
            }
            x[i] = (rest / part) as u32;
            if out.len() >= COUNT_CAP {
                return Err(Error::CapExceeded(format!("|Ω(k,{n})| exceeds {COUNT_CAP}")));
            }
            out.push(Composition {
                x: x.clone(),
                zeta: x.iter().sum(),
                n: n as u32,
            });
            x[i] = 0;
            return Ok(());
        }
        let part = i + 1;
        for xi in (0..=rest / part).rev() {
            x[i] = xi as u32;
            rec(i + 1, rest - xi * part, x, out, n)?;
        }
        x[i] = 0;
        Ok(())
    }
    rec(0, n, &mut x, &mut out, n)?;
    Ok(out)
}

/// All of `Ω(k,n)`, ordered by `x_1` descending, then `x_2` descending, and so on.
///
/// Results are memoized per `(k, n)`; the memo is safe to share between threads.
pub fn enumerate_omega(k: usize, n: usize) -> Result<Arc<Vec<Composition>>> {
    ensure(k >= 1, || "order k must be at least 1".into())?;
    if n > N_CAP {
        return Err(Error::CapExceeded(format!("n = {n} exceeds {N_CAP}")));
    }
    if let Some(v) = memo().read().expect("memo lock").get(&(k, n)) {
        return Ok(Arc::clone(v));
    }
    let v = Arc::new(build(k, n)?);
    memo().write().expect("memo lock").entry((k, n)).or_insert_with(|| Arc::clone(&v));
    Ok(v)
}

/// `Σ_{X∈Ω(k,n)} f(X)`.
pub fn omega_sum(k: usize, n: usize, f: impl FnMut(&Composition) -> f64) -> Result<f64> {
    Ok(enumerate_omega(k, n)?.iter().map(f).sum())
}

/// `Σ_{X∈Ω(k,n)} w^ζ / Π!`.
pub fn omega_kernel(k: usize, n: usize, w: f64) -> Result<f64> {
    ensure(w >= 0.0 && w.is_finite(), || format!("w must be finite and >= 0, got {w}"))?;
    if w == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let lw = w.ln();
    omega_sum(k, n, |c| (c.zeta as f64 * lw - c.ln_factorial_product()).exp())
}

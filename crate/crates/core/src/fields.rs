//! Homogeneous Poisson fields of order k on boxes of `R^d`, and their
//! time- and space-fractional versions on `R_+^m`.
//!
//! A field assigns to a region `A` the mark sum `X^k(A) = Σ_{i≤N(A)} X_i`
//! where `N` is a Poisson field of intensity `kλ` and the marks are uniform on
//! `{1..k}`. The fractional fields read the field on `[0,x_1]×⋯×[0,x_m]` with
//! random side lengths `x_j = E_{β_j}(t_j)` or `x_j = S_{α_j}(t_j)`.

use crate::combinatorics::{omega_kernel, OrderParams};
use crate::error::{ensure, Error, Result};
use crate::processes::ppok_pmf;
use crate::rng::RngStream;
use crate::specfun::gamma;
use crate::subordinators::{sample_inverse_stable_exact, stable_standard};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

/// Axis-aligned box `[lower_1, upper_1) × ⋯ × [lower_d, upper_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        ensure(!lower.is_empty(), || "a box needs at least one dimension".into())?;
        ensure(lower.len() == upper.len(), || {
            format!("bounds differ in dimension: {} vs {}", lower.len(), upper.len())
        })?;
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            ensure(l.is_finite() && u.is_finite() && l <= u, || format!("axis {i}: need lower <= upper, got [{l}, {u}]"))?;
        }
        Ok(Self { lower, upper })
    }

    /// `[0, s_1) × ⋯ × [0, s_d)`.
    pub fn from_origin(sides: &[f64]) -> Result<Self> {
        Self::new(vec![0.0; sides.len()], sides.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Lebesgue measure `Π (upper_i - lower_i)`.
    pub fn measure(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Membership under the closed-lower, open-upper convention.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *l <= *v && *v < *u)
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| self.lower[i] <= other.lower[i] && other.upper[i] <= self.upper[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedPointField {
    pub ambient: BoxRegion,
    pub points: Vec<Vec<f64>>,
    pub marks: Vec<u32>,
}

impl MarkedPointField {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    TimeFractional,
    SpaceFractional,
}

/// One axis of a fractional field: its index (`β_j` or `α_j`) and time `t_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisClock {
    pub index: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockVector {
    pub kind: ClockKind,
    pub axes: Vec<AxisClock>,
}

impl ClockVector {
    pub fn new(kind: ClockKind, axes: Vec<AxisClock>) -> Result<Self> {
        ensure(!axes.is_empty(), || "a clock vector needs at least one axis".into())?;
        for (j, a) in axes.iter().enumerate() {
            ensure(a.index > 0.0 && a.index <= 1.0, || format!("axis {j}: index must lie in (0,1], got {}", a.index))?;
            ensure(a.t > 0.0 && a.t.is_finite(), || format!("axis {j}: t must be positive, got {}", a.t))?;
        }
        Ok(Self { kind, axes })
    }

    pub fn m(&self) -> usize {
        self.axes.len()
    }

    /// Random measure `Π x_j` of the box read by the fractional field.
    pub fn sample_area<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.axes
            .iter()
            .map(|a| match self.kind {
                ClockKind::TimeFractional => sample_inverse_stable_exact(a.index, a.t, rng),
                ClockKind::SpaceFractional => a.t.powf(1.0 / a.index) * stable_standard(a.index, rng),
            })
            .product()
    }
}

/// `P(X^k(A) = n)` for a region of measure `area`.
pub fn field_pmf(p: &OrderParams, area: f64, n: usize) -> Result<f64> {
    ensure(area >= 0.0 && area.is_finite(), || format!("area must be finite and >= 0, got {area}"))?;
    ppok_pmf(p, area, n)
}

/// `P(X^k(A_2) = m | X^k(A_1) = n)` for `A_2 ⊆ A_1` with the given measures.
pub fn field_conditional_pmf(p: &OrderParams, area1: f64, area2: f64, n: usize, m: usize) -> Result<f64> {
    ensure(area2 >= 0.0 && area2.is_finite(), || format!("area2 must be finite and >= 0, got {area2}"))?;
    if area2 > area1 {
        return Err(Error::DomainError(format!("area2 = {area2} exceeds area1 = {area1}")));
    }
    ensure(m <= n, || format!("need m <= n, got m={m}, n={n}"))?;
    let l = p.lambda;
    let den = omega_kernel(p.k, n, l * area1)?;
    if den == 0.0 {
        return Err(Error::DomainError(format!("P(X(A_1) = {n}) vanishes for area {area1}")));
    }
    Ok(omega_kernel(p.k, n - m, l * (area1 - area2))? * omega_kernel(p.k, m, l * area2)? / den)
}

/// Mean `k(k+1)/2 λ area` and variance `k(k+1)(2k+1)/6 λ area`.
pub fn field_moments(p: &OrderParams, area: f64) -> (f64, f64) {
    let r = p.rate() * area;
    (r * p.jump_mean(), r * p.jump_second_moment())
}

/// Poisson(kλ·|ambient|) points placed uniformly in `ambient`, with uniform marks.
pub fn sample_field<R: Rng + ?Sized>(p: &OrderParams, ambient: &BoxRegion, rng: &mut R) -> Result<MarkedPointField> {
    let vol = ambient.measure();
    ensure(vol > 0.0, || "ambient box must have positive measure".into())?;
    let mean = p.rate() * vol;
    let n = Poisson::new(mean).map_err(|e| Error::InvalidParameter(format!("Poisson mean {mean}: {e}")))?.sample(rng) as usize;
    let mut points = Vec::with_capacity(n);
    let mut marks = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = ambient
            .lower
            .iter()
            .zip(&ambient.upper)
            .map(|(&l, &u)| {
                // keeps the point strictly below the upper face
                let v = l + (u - l) * rng.random::<f64>();
                if v < u { v } else { l }
            })
            .collect();
        points.push(x);
        marks.push(rng.random_range(1..=p.k as u32));
    }
    Ok(MarkedPointField {
        ambient: ambient.clone(),
        points,
        marks,
    })
}

/// Sum of the marks of the points in `query`.
pub fn count_in_region(field: &MarkedPointField, query: &BoxRegion) -> Result<u64> {
    if !field.ambient.contains_box(query) {
        return Err(Error::DomainError("query box is not inside the ambient box".into()));
    }
    Ok(field
        .points
        .iter()
        .zip(&field.marks)
        .filter(|(x, _)| query.contains(x))
        .map(|(_, &m)| m as u64)
        .sum())
}

/// Monte Carlo estimate of a fractional-field pmf with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// `E[field_pmf(p, Π x_j, n)]` over independent clock draws `x_j`.
pub fn fractional_field_pmf(p: &OrderParams, clock: &ClockVector, n: usize, n_samples: usize, stream: &RngStream) -> Result<McEstimate> {
    ensure(n_samples >= 1000, || format!("need at least 1000 samples, got {n_samples}"))?;
    let draws = stream.try_par_map(n_samples, |rng| field_pmf(p, clock.sample_area(rng), n))?;
    Ok(mean_and_se(&draws))
}

/// All `P(n)`, `n = 0..=n_max`, from one common set of clock draws.
pub fn fractional_field_pmf_table(
    p: &OrderParams,
    clock: &ClockVector,
    n_max: usize,
    n_samples: usize,
    stream: &RngStream,
) -> Result<Vec<McEstimate>> {
    ensure(n_samples >= 1000, || format!("need at least 1000 samples, got {n_samples}"))?;
    let rows = stream.try_par_map(n_samples, |rng| {
        let area = clock.sample_area(rng);
        (0..=n_max).map(|n| field_pmf(p, area, n)).collect::<Result<Vec<_>>>()
    })?;
    Ok((0..=n_max)
        .map(|n| mean_and_se(&rows.iter().map(|r| r[n]).collect::<Vec<_>>()))
        .collect())
}

pub(crate) fn mean_and_se(x: &[f64]) -> McEstimate {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
        n_samples: x.len(),
    }
}

/// Mean and variance of the time-fractional field:
///
/// ```text
/// mean = λk(k+1)/2 Π t_j^{β_j}/Γ(1+β_j)
/// var  = λk(k+1)(2k+1)/6 Π t_j^{β_j}/Γ(1+β_j)
///      + λ²k²(k+1)²/4 Π t_j^{2β_j} (1/Π β_jΓ(2β_j) - 1/((Π β_j)² Π Γ²(β_j)))
/// ```
pub fn fractional_field_moments(p: &OrderParams, clock: &ClockVector) -> Result<(f64, f64)> {
    if clock.kind == ClockKind::SpaceFractional {
        return Err(Error::DomainError("space-fractional fields have infinite mean".into()));
    }
    let a = p.rate() * p.jump_mean();
    let b = p.rate() * p.jump_second_moment();
    let first: f64 = clock.axes.iter().map(|c| c.t.powf(c.index) / gamma(1.0 + c.index)).product();
    let t2: f64 = clock.axes.iter().map(|c| c.t.powf(2.0 * c.index)).product();
    let second: f64 = clock.axes.iter().map(|c| 1.0 / (c.index * gamma(2.0 * c.index))).product();
    let sq: f64 = clock.axes.iter().map(|c| 1.0 / (c.index * gamma(c.index)).powi(2)).product();
    Ok((a * first, b * first + a * a * t2 * (second - sq)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{sfppok_pmf, tfppok_moments, tfppok_pmf};
    use proptest::prelude::*;

    fn op(k: usize, lambda: f64) -> OrderParams {
        OrderParams::new(k, lambda).unwrap()
    }

    #[test]
    fn pmf_examples() {
        assert!((field_pmf(&op(1, 1.0), 2.0, 1).unwrap() - 2.0 * (-2.0_f64).exp()).abs() < 1e-15);
        assert_eq!(field_pmf(&op(3, 1.0), 0.0, 0).unwrap(), 1.0);
        assert!((field_pmf(&op(2, 1.0), 1.0, 2).unwrap() - 1.5 * (-2.0_f64).exp()).abs() < 1e-15);
        assert_eq!(field_moments(&op(2, 1.0), 1.0), (3.0, 5.0));
    }

    #[test]
    fn huge_areas_do_not_overflow() {
        let v = field_pmf(&op(2, 1.0), 1e6, 10).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn conditional_examples() {
        let p1 = op(1, 0.7);
        assert!((field_conditional_pmf(&p1, 2.0, 1.0, 3, 1).unwrap() - 0.375).abs() < 1e-14);
        assert!((field_conditional_pmf(&op(3, 1.0), 2.0, 2.0, 4, 4).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(field_conditional_pmf(&p1, 1.0, 2.0, 3, 1), Err(Error::DomainError(_))));
        // joint law on the partition {A2, A1∖A2}
        let p = op(2, 1.0);
        let joint = |m: usize, n: usize| field_pmf(&p, 1.0, m).unwrap() * field_pmf(&p, 1.0, n - m).unwrap();
        let total: f64 = (0..=2).map(|m| joint(m, 2)).sum();
        let want = joint(1, 2) / total;
        assert!((field_conditional_pmf(&p, 2.0, 1.0, 2, 1).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn normalization() {
        // for k = 4 the mass beyond n = 60 at kλ·area = 5 is about 2e-8
        for k in 1..=3 {
            for area in [0.3, 1.0, 2.5] {
                let p = op(k, 5.0 / (k as f64 * 2.5));
                let s: f64 = (0..=60).map(|n| field_pmf(&p, area, n).unwrap()).sum();
                assert!((s - 1.0).abs() < 1e-9, "k={k} area={area}: {s}");
                for n in [0, 3, 7] {
                    let c: f64 = (0..=n).map(|m| field_conditional_pmf(&p, area, 0.4 * area, n, m).unwrap()).sum();
                    assert!((c - 1.0).abs() < 1e-9);
                }
            }
        }
        let s: f64 = (0..=60).map(|n| field_pmf(&op(4, 0.5), 2.5, n).unwrap()).sum();
        assert!(s < 1.0 && s > 1.0 - 1e-7);
    }

    #[test]
    fn boxes_and_counting() {
        let amb = BoxRegion::from_origin(&[2.0, 1.0]).unwrap();
        assert_eq!(amb.measure(), 2.0);
        assert!(amb.contains(&[0.0, 0.0]) && !amb.contains(&[2.0, 0.5]));
        assert!(BoxRegion::new(vec![1.0], vec![0.0]).is_err());
        let mut rng = RngStream::new(1, 0).rng();
        let f = sample_field(&op(3, 2.0), &amb, &mut rng).unwrap();
        assert!(f.points.iter().all(|x| amb.contains(x)));
        let total: u64 = f.marks.iter().map(|&m| m as u64).sum();
        assert_eq!(count_in_region(&f, &amb).unwrap(), total);
        let empty = BoxRegion::new(vec![0.5, 0.5], vec![0.5, 1.0]).unwrap();
        assert_eq!(count_in_region(&f, &empty).unwrap(), 0);
        let left = BoxRegion::new(vec![0.0, 0.0], vec![0.7, 1.0]).unwrap();
        let right = BoxRegion::new(vec![0.7, 0.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(count_in_region(&f, &left).unwrap() + count_in_region(&f, &right).unwrap(), total);
        let outside = BoxRegion::new(vec![0.0, 0.0], vec![3.0, 1.0]).unwrap();
        assert!(matches!(count_in_region(&f, &outside), Err(Error::DomainError(_))));
        let f1 = sample_field(&op(1, 5.0), &amb, &mut rng).unwrap();
        assert!(f1.marks.iter().all(|&m| m == 1));
    }

    #[test]
    fn disjoint_quadrants_uncorrelated() {
        let amb = BoxRegion::from_origin(&[1.0, 1.0]).unwrap();
        let quads = [
            BoxRegion::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap(),
            BoxRegion::new(vec![0.5, 0.0], vec![1.0, 0.5]).unwrap(),
            BoxRegion::new(vec![0.0, 0.5], vec![0.5, 1.0]).unwrap(),
            BoxRegion::new(vec![0.5, 0.5], vec![1.0, 1.0]).unwrap(),
        ];
        let p = op(2, 3.0);
        let n = 20_000;
        let rows = RngStream::new(9, 0).par_map(n, |r| {
            let f = sample_field(&p, &amb, r).unwrap();
            quads.iter().map(|q| count_in_region(&f, q).unwrap() as f64).collect::<Vec<_>>()
        });
        for i in 0..4 {
            for j in (i + 1)..4 {
                let xi: Vec<f64> = rows.iter().map(|r| r[i]).collect();
                let xj: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                let rho = corr(&xi, &xj);
                assert!(rho.abs() < 3.0 / (n as f64).sqrt(), "({i},{j}): {rho}");
            }
        }
        let tot: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        let m = tot.iter().sum::<f64>() / n as f64;
        let (mean, var) = field_moments(&p, 1.0);
        assert!((m - mean).abs() < 3.0 * (var / n as f64).sqrt());
    }

    fn corr(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn one_axis_reductions() {
        let p = op(2, 1.0);
        let tf = ClockVector::new(ClockKind::TimeFractional, vec![AxisClock { index: 0.7, t: 1.0 }]).unwrap();
        let e = fractional_field_pmf(&p, &tf, 1, 100_000, &RngStream::new(11, 0)).unwrap();
        let want = tfppok_pmf(&p, 0.7, 1.0, 1).unwrap();
        assert!((e.estimate - want).abs() < 3.0 * e.std_error, "{e:?} vs {want}");
        let sf = ClockVector::new(ClockKind::SpaceFractional, vec![AxisClock { index: 0.7, t: 1.0 }]).unwrap();
        let e = fractional_field_pmf(&p, &sf, 2, 100_000, &RngStream::new(12, 0)).unwrap();
        let want = sfppok_pmf(&p, 0.7, 1.0, 2).unwrap();
        assert!((e.estimate - want).abs() < 3.0 * e.std_error, "{e:?} vs {want}");
        let (m, v) = fractional_field_moments(&p, &tf).unwrap();
        let (m1, v1) = tfppok_moments(&p, 0.7, 1.0, 1.0).unwrap();
        assert!((m - m1).abs() < 1e-12 && (v - v1).abs() < 1e-9 * v1, "{v} vs {v1}");
        assert!(matches!(fractional_field_moments(&p, &sf), Err(Error::DomainError(_))));
    }

    #[test]
    fn two_axis_field() {
        let p1 = op(1, 1.0);
        let clock = ClockVector::new(
            ClockKind::TimeFractional,
            vec![AxisClock { index: 0.6, t: 1.0 }, AxisClock { index: 0.8, t: 1.5 }],
        )
        .unwrap();
        let tab = fractional_field_pmf_table(&p1, &clock, 40, 20_000, &RngStream::new(13, 0)).unwrap();
        let s: f64 = tab.iter().map(|e| e.estimate).sum();
        let se = tab.iter().map(|e| e.std_error.powi(2)).sum::<f64>().sqrt();
        assert!((s - 1.0).abs() < 3.0 * se.max(1e-12), "{s}");

        // mean of N^k(E_1 E_2) from sampled areas
        let p = op(2, 1.0);
        let n = 100_000;
        let d = RngStream::new(14, 0).par_map(n, |r| {
            let area = clock.sample_area(r);
            crate::processes::ppok_count_at(&p, area, r) as f64
        });
        let m = d.iter().sum::<f64>() / n as f64;
        let (mean, var) = fractional_field_moments(&p, &clock).unwrap();
        assert!((m - mean).abs() < 3.0 * (var / n as f64).sqrt(), "{m} vs {mean}");
        let sv = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((sv - var).abs() < 0.1 * var, "{sv} vs {var}");
    }

    #[test]
    fn estimator_variance_scales() {
        let p = op(2, 1.0);
        let clock = ClockVector::new(ClockKind::TimeFractional, vec![AxisClock { index: 0.5, t: 1.0 }]).unwrap();
        let a = fractional_field_pmf(&p, &clock, 2, 10_000, &RngStream::new(15, 0)).unwrap();
        let b = fractional_field_pmf(&p, &clock, 2, 20_000, &RngStream::new(15, 1)).unwrap();
        let ratio = (a.std_error / b.std_error).powi(2);
        assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn conditional_is_a_distribution(k in 1usize..4, lambda in 0.1f64..2.0, a1 in 0.1f64..3.0, frac in 0.0f64..1.0, n in 0usize..15) {
            let p = op(k, lambda);
            let s: f64 = (0..=n).map(|m| field_conditional_pmf(&p, a1, frac * a1, n, m).unwrap()).sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

//! Monte Carlo accumulators and the small amount of statistics the
//! experiments need (weighted least squares, Kolmogorov–Smirnov p-values).

use serde::{Deserialize, Serialize};

/// Mean, standard error and sample count of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    /// Trajectories stopped by the step cap rather than by exiting.
    pub censored: u64,
}

impl MCEstimate {
    /// An exactly known value (zero variance).
    pub fn exact(value: f64, n: u64) -> Self {
        MCEstimate { mean: value, stderr: 0.0, n, censored: 0 }
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.censored as f64 / self.n as f64
        }
    }

    /// `|a - b| / sqrt(sa^2 + sb^2)`, infinite when both errors vanish and the
    /// means differ.
    pub fn z_score(&self, other: &MCEstimate) -> f64 {
        let s = self.stderr.hypot(other.stderr);
        let d = (self.mean - other.mean).abs();
        if s > 0.0 {
            d / s
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// One-pass (Welford) accumulator. Merging uses Chan's pairwise update, so
/// reducing per-task accumulators in a fixed order is deterministic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
    censored: u64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn push_censored(&mut self) {
        self.censored += 1;
    }

    pub fn merge(&mut self, other: &RunningStats) {
        self.censored += other.censored;
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            let censored = self.censored;
            *self = *other;
            self.censored = censored;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        self.mean += delta * other.n as f64 / nf;
        self.m2 += other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / nf;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 with fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self) -> MCEstimate {
        let total = self.n + self.censored;
        let stderr = if self.n < 2 { 0.0 } else { (self.variance() / self.n as f64).sqrt() };
        MCEstimate { mean: self.mean, stderr, n: total, censored: self.censored }
    }
}

/// Result of a weighted linear least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coeffs: Vec<f64>,
    /// Standard errors from the diagonal of `(XᵀWX)⁻¹`.
    pub stderrs: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Solves `min Σ w_i (y_i - Σ_j x_ij β_j)²` by normal equations with
/// Gauss–Jordan elimination. Returns `None` when the system is singular or
/// its condition is too poor to trust (relative pivot below `1e-12`).
pub fn weighted_least_squares(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<LinearFit> {
    let n = rows.len();
    if n == 0 || y.len() != n || w.len() != n {
        return None;
    }
    let p = rows[0].len();
    if p == 0 || n < p || rows.iter().any(|r| r.len() != p) {
        return None;
    }
    let mut a = vec![vec![0.0; 2 * p]; p];
    let mut b = vec![0.0; p];
    for ((row, &yi), &wi) in rows.iter().zip(y).zip(w) {
        for j in 0..p {
            b[j] += wi * row[j] * yi;
            for k in 0..p {
                a[j][k] += wi * row[j] * row[k];
            }
        }
    }
    for (j, r) in a.iter_mut().enumerate() {
        r[p + j] = 1.0;
    }
    let scale = (0..p).map(|j| a[j][j].abs()).fold(0.0, f64::max);
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &k| a[i][col].abs().total_cmp(&a[k][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        let pivot_row = a[col].clone();
        for (i, row) in a.iter_mut().enumerate() {
            let f = row[col];
            if i != col && f != 0.0 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
    }
    let coeffs: Vec<f64> = (0..p).map(|j| (0..p).map(|k| a[j][p + k] * b[k]).sum()).collect();
    let stderrs = (0..p).map(|j| a[j][p + j].max(0.0).sqrt()).collect();
    let residuals = rows.iter().zip(y).map(|(row, &yi)| yi - row.iter().zip(&coeffs).map(|(x, c)| x * c).sum::<f64>()).collect();
    Some(LinearFit { coeffs, stderrs, residuals })
}

/// Asymptotic Kolmogorov distribution tail `P(K > λ)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of `samples` against the continuous CDF `cdf`.
/// Returns `(D, p-value)`; sorts the input in place.
pub fn ks_one_sample(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    let sq = n.sqrt();
    (d, kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d))
}

/// Two-sample KS test. Returns `(D, p-value)`; sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> (f64, f64) {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na as f64 * nb as f64) / (na + nb) as f64;
    let sq = ne.sqrt();
    (d, kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d))
}

//! Cosine cost matrices and log-domain Sinkhorn iterations.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::embed::{check_simplex, TokenEmbeddingSequence};
use crate::error::{Error, Result};

/// `1 - cos(a, b)`, clamped to `[0, 2]`; a zero-norm side costs 1.
pub fn cosine_cost(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - (dot / (na * nb)).clamp(-1.0, 1.0)).clamp(0.0, 2.0)
}

/// `C[n][m] = 1 - cos(e_n, e*_m)` between model rows and expert rows.
pub fn cost_matrix(model: &TokenEmbeddingSequence, expert: &TokenEmbeddingSequence) -> Result<Array2<f64>> {
    if model.dim() != expert.dim() {
        return Err(Error::shape(format!(
            "embedding dimensions differ: {} vs {}",
            model.dim(),
            expert.dim()
        )));
    }
    Ok(Array2::from_shape_fn((model.len(), expert.len()), |(i, j)| {
        cosine_cost(&model.vectors[i], &expert.vectors[j])
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinkhornConfig {
    pub reg: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            reg: 0.05,
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg > 0.0 && self.reg.is_finite()) {
            return Err(Error::config(format!("sinkhorn reg must be positive, got {}", self.reg)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config(format!("sinkhorn tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::config("sinkhorn max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    pub plan: Array2<f64>,
    /// `⟨P, C⟩`.
    pub distance: f64,
    pub reg: f64,
    pub iterations: usize,
    /// L1 distance of the plan's row sums from `u` (columns are exact after
    /// each full sweep).
    pub residual: f64,
    pub converged: bool,
}

fn logsumexp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Entropic OT between `u` (rows) and `v` (columns) with dual potentials kept
/// in the log domain, so small `reg` does not underflow.
pub fn sinkhorn(cost: &Array2<f64>, u: &[f64], v: &[f64], cfg: &SinkhornConfig) -> Result<TransportResult> {
    cfg.validate()?;
    let (n, m) = cost.dim();
    if n == 0 || m == 0 {
        return Err(Error::shape("cost matrix must be non-empty"));
    }
    check_simplex(u, n, "row marginal")?;
    check_simplex(v, m, "column marginal")?;
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::input("cost matrix must be finite"));
    }
    let eps = cfg.reg;
    let log_u: Vec<f64> = u.iter().map(|x| x.ln()).collect();
    let log_v: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];

    let row_residual = |f: &[f64], g: &[f64]| -> f64 {
        (0..n)
            .map(|i| {
                let s: f64 = (0..m).map(|j| ((f[i] + g[j] - cost[[i, j]]) / eps).exp()).sum();
                (s - u[i]).abs()
            })
            .sum()
    };

    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < cfg.max_iter {
        iterations += 1;
        for i in 0..n {
            f[i] = if u[i] == 0.0 {
                f64::NEG_INFINITY
            } else {
                eps * log_u[i] - eps * logsumexp((0..m).map(|j| (g[j] - cost[[i, j]]) / eps))
            };
        }
        for j in 0..m {
            g[j] = if v[j] == 0.0 {
                f64::NEG_INFINITY
            } else {
                eps * log_v[j] - eps * logsumexp((0..n).map(|i| (f[i] - cost[[i, j]]) / eps))
            };
        }
        residual = row_residual(&f, &g);
        if residual <= cfg.tol {
            break;
        }
    }
    let plan = Array2::from_shape_fn((n, m), |(i, j)| {
        let x = ((f[i] + g[j] - cost[[i, j]]) / eps).exp();
        if x.is_finite() {
            x
        } else {
            0.0
        }
    });
    let distance = (&plan * cost).sum().max(0.0);
    Ok(TransportResult {
        plan,
        distance,
        reg: eps,
        iterations,
        residual,
        converged: residual <= cfg.tol,
    })
}

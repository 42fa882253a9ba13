//! Ordinary least squares helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub n_samples: usize,
    pub r_squared: f64,
}

/// Simple linear regression `y = intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() {
        return Err(Error::invalid("regression inputs differ in length"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientSamples {
            got: n,
            need: 2,
            context: "linear regression".into(),
        });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    if sxx <= (scale * 1e-12).powi(2) * nf {
        return Err(Error::Degenerate("regressor has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    let out = RegressionResult {
        slope,
        intercept,
        n_samples: n,
        r_squared,
    };
    if !(slope.is_finite() && intercept.is_finite()) {
        return Err(Error::Degenerate("non-finite regression result".into()));
    }
    Ok(out)
}

/// Multiple regression `y = b0 + Σ b_j·x_j` via centred normal equations.
/// Returns `[b0, b1, ..., bp]`.
pub fn multi_fit(xs: &[&[f64]], y: &[f64]) -> Result<Vec<f64>> {
    let p = xs.len();
    let n = y.len();
    if xs.iter().any(|x| x.len() != n) {
        return Err(Error::invalid("regression inputs differ in length"));
    }
    if n <= p + 1 {
        return Err(Error::InsufficientSamples {
            got: n,
            need: p + 2,
            context: "multiple regression".into(),
        });
    }
    let nf = n as f64;
    let means: Vec<f64> = xs.iter().map(|x| x.iter().sum::<f64>() / nf).collect();
    let my = y.iter().sum::<f64>() / nf;
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..n {
        let dy = y[i] - my;
        for r in 0..p {
            let dr = xs[r][i] - means[r];
            for c in 0..p {
                a[r][c] += dr * (xs[c][i] - means[c]);
            }
            a[r][p] += dr * dy;
        }
    }
    let b = solve(a)?;
    let b0 = my - b.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
    let mut out = Vec::with_capacity(p + 1);
    out.push(b0);
    out.extend(b);
    Ok(out)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let p = a.len();
    let norm = a.iter().flat_map(|r| r[..p].iter()).map(|v| v.abs()).fold(0.0, f64::max);
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col].abs() <= norm * 1e-13 {
            return Err(Error::Degenerate("collinear regressors".into()));
        }
        a.swap(col, piv);
        for r in col + 1..p {
            let f = a[r][col] / a[col][col];
            for c in col..=p {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; p];
    for r in (0..p).rev() {
        let s: f64 = (r + 1..p).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][p] - s) / a[r][r];
    }
    Ok(x)
}

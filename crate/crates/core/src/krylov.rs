//! Restarted GMRES for matrix-free operators.
//!
//! The inner product is `<x, y> = sum_k w_k x_k y_k` for positive weights
//! `w`, so the residual being minimized is measured in that weighted norm.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOutcome {
    /// Total number of Arnoldi steps over all cycles.
    pub iterations: usize,
    /// `||rhs - A x||_w / ||rhs||_w` of the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

fn wdot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
}

/// Solves `A x = rhs`, starting from the contents of `x`.
pub fn gmres<F>(
    mut apply: F,
    rhs: &[f64],
    x: &mut [f64],
    weights: &[f64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = rhs.len();
    assert_eq!(x.len(), n);
    assert_eq!(weights.len(), n);
    let restart = restart.max(1);

    let rhs_norm = wdot(weights, rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        x.iter_mut().for_each(|xi| *xi = 0.0);
        return GmresOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }

    let mut residual = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let true_residual = |apply: &mut F, x: &[f64], r: &mut [f64], s: &mut [f64]| -> f64 {
        apply(x, s);
        for k in 0..n {
            r[k] = rhs[k] - s[k];
        }
        wdot(weights, r, r).sqrt()
    };

    let mut iterations = 0;
    let mut beta = true_residual(&mut apply, x, &mut residual, &mut scratch);
    loop {
        if beta <= rel_tol * rhs_norm || iterations >= max_iter {
            return GmresOutcome {
                iterations,
                relative_residual: beta / rhs_norm,
                converged: beta <= rel_tol * rhs_norm,
            };
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(residual.iter().map(|r| r / beta).collect());
        let mut hess = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;

        let mut cols = 0;
        while cols < restart && iterations < max_iter {
            let j = cols;
            let mut w = vec![0.0; n];
            apply(&basis[j], &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hij = wdot(weights, &w, v);
                hess[i][j] = hij;
                for k in 0..n {
                    w[k] -= hij * v[k];
                }
            }
            let hnext = wdot(weights, &w, &w).sqrt();
            hess[j + 1][j] = hnext;

            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let denom = hess[j][j].hypot(hess[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = hess[j][j] / denom;
                sn[j] = hess[j + 1][j] / denom;
            }
            hess[j][j] = cs[j] * hess[j][j] + sn[j] * hess[j + 1][j];
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];

            iterations += 1;
            cols += 1;
            // keep a margin so the recomputed residual also meets the tolerance
            if g[j + 1].abs() <= 0.5 * rel_tol * rhs_norm || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|wk| wk / hnext).collect());
        }

        let mut y = vec![0.0; cols];
        for i in (0..cols).rev() {
            let s: f64 = (i + 1..cols).map(|k| hess[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            for k in 0..n {
                x[k] += yi * v[k];
            }
        }
        beta = true_residual(&mut apply, x, &mut residual, &mut scratch);
    }
}

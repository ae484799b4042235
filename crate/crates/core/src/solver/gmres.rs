//! Restarted GMRES with modified Gram–Schmidt and Givens rotations, on plain
//! real vectors with a caller-supplied operator and right preconditioner.

pub struct GmresOutcome {
    pub converged: bool,
    pub iterations: usize,
    #[cfg_attr(not(test), allow(dead_code))]
    pub residual_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves op(x) = b to relative tolerance, writing the solution into `x`
/// (initial content ignored). `apply` must be linear.
pub fn gmres(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    restart: usize,
    max_iters: usize,
) -> GmresOutcome {
    let n = b.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return GmresOutcome { converged: true, iterations: 0, residual_norm: 0.0 };
    }
    let target = rel_tol * b_norm;
    let mut total_iters = 0;
    let mut res_norm = b_norm;

    while total_iters < max_iters {
        // residual of the current x
        let ax = apply(x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        res_norm = norm(&r);
        if res_norm <= target {
            return GmresOutcome { converged: true, iterations: total_iters, residual_norm: res_norm };
        }
        let m = restart.min(max_iters - total_iters);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        r.iter_mut().for_each(|v| *v /= res_norm);
        basis.push(r);
        let mut h = vec![vec![0.0_f64; m]; m + 1];
        let mut cs = vec![0.0_f64; m];
        let mut sn = vec![0.0_f64; m];
        let mut gamma = vec![0.0_f64; m + 1];
        gamma[0] = res_norm;
        let mut k_used = 0;

        for k in 0..m {
            total_iters += 1;
            let mut w = apply(&basis[k]);
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(&w, v);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= hik * vj;
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;

            // apply accumulated rotations to the new column
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + wn * wn).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = wn / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            gamma[k + 1] = -sn[k] * gamma[k];
            gamma[k] *= cs[k];
            k_used = k + 1;
            res_norm = gamma[k + 1].abs();

            if wn > 0.0 {
                w.iter_mut().for_each(|v| *v /= wn);
                basis.push(w);
            }
            if res_norm <= target || wn == 0.0 || total_iters >= max_iters {
                break;
            }
        }

        // back substitution and update
        let mut y = vec![0.0_f64; k_used];
        for i in (0..k_used).rev() {
            let mut s = gamma[i];
            for j in (i + 1)..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for i in 0..k_used {
            for j in 0..n {
                x[j] += y[i] * basis[i][j];
            }
        }
        if res_norm <= target {
            return GmresOutcome { converged: true, iterations: total_iters, residual_norm: res_norm };
        }
        if k_used == 0 {
            break;
        }
    }
    GmresOutcome { converged: res_norm <= target, iterations: total_iters, residual_norm: res_norm }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_a_dense_system() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 4.0 } else { 0.5 * (rng.random::<f64>() - 0.5) })
                    .collect()
            })
            .collect();
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let b: Vec<f64> = (0..n).map(|i| dot(&a[i], &xs)).collect();
        let mut apply = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| dot(&a[i], v)).collect() };
        let mut x = vec![0.0; n];
        let out = gmres(&mut apply, &b, &mut x, 1e-12, 20, 400);
        assert!(out.converged, "residual {}", out.residual_norm);
        let err: f64 = x.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "max err {err}");
    }
}

//! Eigenvalues of dense real symmetric matrices: Householder reduction to
//! tridiagonal form, then implicit QL sweeps with Wilkinson-type shifts.

use crate::error::{Error, Result};

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS: usize = 60;

/// Ascending eigenvalues of the symmetric matrix stored row-major in `a`
/// (`n × n`). Only the lower triangle is read.
pub(crate) fn symmetric_eigenvalues_dense(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut diag, mut off) = tridiagonalize(&mut a, n);
    tridiagonal_ql(&mut diag, &mut off)?;
    diag.sort_by(f64::total_cmp);
    Ok(diag)
}

/// Reduces `a` in place; returns the diagonal and the sub-diagonal
/// (`off[k]` couples `k` and `k + 1`, with a trailing zero).
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut off = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let m = k + 1;
        let norm = (m..n).map(|i| a[i * n + k] * a[i * n + k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let x0 = a[m * n + k];
        let alpha = if x0 > 0.0 { -norm } else { norm };
        for i in m..n {
            v[i] = a[i * n + k];
        }
        v[m] -= alpha;
        let vnorm = (m..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            off[k] = x0;
            continue;
        }
        for vi in v[m..n].iter_mut() {
            *vi /= vnorm;
        }
        // p = A22 v, using the symmetric lower triangle.
        for i in m..n {
            let mut s = 0.0;
            for j in m..n {
                let aij = if j <= i { a[i * n + j] } else { a[j * n + i] };
                s += aij * v[j];
            }
            p[i] = s;
        }
        let vp: f64 = (m..n).map(|i| v[i] * p[i]).sum();
        for i in m..n {
            p[i] -= vp * v[i];
        }
        // A22 -= 2 (v qᵀ + q vᵀ), lower triangle only.
        for i in m..n {
            for j in m..=i {
                a[i * n + j] -= 2.0 * (v[i] * p[j] + p[i] * v[j]);
            }
        }
        off[k] = alpha;
    }
    if n >= 2 {
        off[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    (diag, off)
}

/// Implicit QL on a symmetric tridiagonal matrix; eigenvalues land in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::NonConvergence {
                    lo: d[l],
                    hi: d[l + 1],
                    iterations: MAX_SWEEPS,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_closed_forms() {
        let ev = symmetric_eigenvalues_dense(vec![0.0, 1.0, 1.0, 0.0], 2).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        let ev = symmetric_eigenvalues_dense(vec![2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0], 3).unwrap();
        let r = 2f64.sqrt();
        for (x, y) in ev.iter().zip([2.0 - r, 2.0, 2.0 + r]) {
            assert!((x - y).abs() < 1e-14);
        }
        assert_eq!(symmetric_eigenvalues_dense(vec![3.5], 1).unwrap(), vec![3.5]);
        assert!(symmetric_eigenvalues_dense(vec![], 0).unwrap().is_empty());
    }

    #[test]
    fn matches_nalgebra_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [2usize, 3, 5, 8, 17, 40] {
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    a[i * n + j] = x;
                    a[j * n + i] = x;
                }
            }
            let m = nalgebra::DMatrix::from_row_slice(n, n, &a);
            let mut reference: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            let ours = symmetric_eigenvalues_dense(a, n).unwrap();
            for (x, y) in ours.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-12 * n as f64, "n = {n}: {x} vs {y}");
            }
        }
    }
}

use crate::error::{Error, Result};
use crate::flow::RootVector;

/// Largest degree accepted by [`xj_values`].
pub const XJ_MAX_DEGREE: usize = 12;

/// The triangular-array summands `X_j`, `j = 1..=d`, for a state of degree
/// `d`, evaluation point `z` and derivative gap `q`:
///
/// ```text
/// X_j = (q−1)!/(d−1)! · Σ_{injective (j_1..j_{d−q}) avoiding j} Π_l (z − λ_{j_l})
/// ```
///
/// Each unordered index set appears `(d−q)!` times among the injective
/// tuples, so the sum runs over subsets and is scaled by that count.
/// Their mean is the monic renormalized `q`-th derivative at `z`, and
/// `Σ ρ_j X_j` is the monic renormalized `(q−1)`-th derivative of the
/// ρ-weighted step, evaluated at `z`.
pub fn xj_values(state: &RootVector, z: f64, q: usize) -> Result<Vec<f64>> {
    let d = state.degree();
    if d > XJ_MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "degree {d} exceeds the brute-force cap {XJ_MAX_DEGREE}"
        )));
    }
    if q == 0 || q > d {
        return Err(Error::InvalidArgument(format!("q = {q} must lie in 1..={d}")));
    }
    if let Some(top) = state.max() {
        if !(z > top) {
            return Err(Error::Domain(format!("z = {z} is not above the largest root {top}")));
        }
    }
    let y: Vec<f64> = state.as_slice().iter().map(|x| z - x).collect();
    let size = d - q;
    let scale = factorial(q - 1) * factorial(size) / factorial(d - 1);

    let xs = (0..d)
        .map(|j| {
            let mut total = 0.0;
            for mask in 0u32..(1 << d) {
                if mask & (1 << j) != 0 || mask.count_ones() as usize != size {
                    continue;
                }
                total += (0..d).filter(|i| mask & (1 << i) != 0).map(|i| y[i]).product::<f64>();
            }
            scale * total
        })
        .collect();
    Ok(xs)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_roots_second_gap() {
        let s = RootVector::new(vec![0.0, 1.0, 2.0]).unwrap();
        let x = xj_values(&s, 3.0, 2).unwrap();
        assert_eq!(x, vec![1.5, 2.0, 2.5]);
        // (1/6) P''(3) = (1/6)(6·3 − 6)
        assert_eq!(x.iter().sum::<f64>() / 3.0, 2.0);
    }

    #[test]
    fn two_roots_first_gap() {
        let (a, b, z) = (-0.4, 0.9, 2.5);
        let s = RootVector::new(vec![a, b]).unwrap();
        let x = xj_values(&s, z, 1).unwrap();
        assert!((x[0] - (z - b)).abs() < 1e-15 && (x[1] - (z - a)).abs() < 1e-15);
    }

    #[test]
    fn full_gap_gives_ones() {
        let s = RootVector::new(vec![-0.3, 0.1, 0.4, 0.8]).unwrap();
        // q = d: empty products scaled by (d−1)!/(d−1)!
        assert_eq!(xj_values(&s, 2.0, 4).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn argument_checks() {
        let s = RootVector::new((0..13).map(|i| i as f64 * 0.1).collect()).unwrap();
        assert!(xj_values(&s, 5.0, 1).is_err());
        let s = RootVector::new(vec![0.0, 1.0]).unwrap();
        assert!(xj_values(&s, 3.0, 0).is_err());
        assert!(xj_values(&s, 3.0, 3).is_err());
        assert!(matches!(xj_values(&s, 1.0, 1), Err(Error::Domain(_))));
    }
}

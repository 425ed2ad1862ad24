//! Eigenvalues of dense real symmetric matrices: Householder reduction to tridiagonal
//! form followed by the implicit QL iteration with Wilkinson-type shifts.

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

const MAX_QL_ITERATIONS: usize = 60;

/// Reduces the symmetric `a` (row-major, lower triangle used) in place and returns the
/// diagonal and sub-diagonal, with `e[0] = 0` and `e[i]` coupling rows `i−1` and `i`.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        if l == 0 {
            e[i] = a[i * n];
            continue;
        }
        let scale: f64 = a[i * n..i * n + l + 1].iter().map(|v| v.abs()).sum();
        if scale == 0.0 {
            e[i] = a[i * n + l];
            continue;
        }
        let mut h = 0.0;
        for k in 0..=l {
            a[i * n + k] /= scale;
            h += a[i * n + k] * a[i * n + k];
        }
        let f = a[i * n + l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        a[i * n + l] = f - g;
        let mut f = 0.0;
        for j in 0..=l {
            let mut g = 0.0;
            for k in 0..=j {
                g += a[j * n + k] * a[i * n + k];
            }
            for k in j + 1..=l {
                g += a[k * n + j] * a[i * n + k];
            }
            e[j] = g / h;
            f += e[j] * a[i * n + j];
        }
        let hh = f / (h + h);
        for j in 0..=l {
            let f = a[i * n + j];
            let g = e[j] - hh * f;
            e[j] = g;
            for k in 0..=j {
                a[j * n + k] -= f * e[k] + g * a[i * n + k];
            }
        }
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[i * n + i];
    }
    e[0] = 0.0;
    (d, e)
}

/// Implicit QL on a symmetric tridiagonal matrix; eigenvalues overwrite `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
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
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::EigenNonConvergence);
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

/// All eigenvalues in ascending order. The input must be exactly symmetric.
pub fn symmetric_eigenvalues(m: &DataMatrix) -> Result<Vec<f64>> {
    m.check_symmetric()?;
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let (mut d, mut e) = tridiagonalize(&mut a, n);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

pub fn top_eigenvalue(m: &DataMatrix) -> Result<f64> {
    if m.dim() == 0 {
        return Err(Error::invalid("empty matrix has no eigenvalues"));
    }
    Ok(*symmetric_eigenvalues(m)?.last().expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_rows(rows: &[&[f64]]) -> DataMatrix {
        let n = rows.len();
        DataMatrix::from_row_major(n, rows.concat(), true).unwrap()
    }

    #[test]
    fn small_examples() {
        assert_eq!(top_eigenvalue(&from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]])).unwrap(), 1.0);
        assert_eq!(top_eigenvalue(&from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 5.0]])).unwrap(), 5.0);
        let x = [0.6, 0.0, 0.8];
        let r = DataMatrix::symmetric_from_fn(3, |i, j| x[i] * x[j]);
        let ev = symmetric_eigenvalues(&r).unwrap();
        assert!((ev[2] - 1.0).abs() < 1e-14);
        assert!(ev[0].abs() < 1e-14 && ev[1].abs() < 1e-14);
        let two = from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let ev = symmetric_eigenvalues(&two).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn one_by_one() {
        assert_eq!(symmetric_eigenvalues(&from_rows(&[&[-3.5]])).unwrap(), vec![-3.5]);
    }

    #[test]
    fn rejects_non_symmetric() {
        let m = DataMatrix::from_row_major(2, vec![1.0, 2.0, 2.5, 1.0], false).unwrap();
        assert!(matches!(top_eigenvalue(&m), Err(Error::NotSymmetric { .. })));
    }

    proptest! {
        #[test]
        fn matches_nalgebra(n in 1usize..24, values in proptest::collection::vec(-5.0f64..5.0, 24 * 24)) {
            let m = DataMatrix::symmetric_from_fn(n, |i, j| values[i * 24 + j]);
            let ours = symmetric_eigenvalues(&m).unwrap();
            let oracle = nalgebra::DMatrix::from_row_slice(n, n, m.as_slice());
            let mut theirs: Vec<f64> = oracle.symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            let scale = theirs.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (a, b) in ours.iter().zip(&theirs) {
                prop_assert!((a - b).abs() <= 1e-10 * scale, "{} vs {}", a, b);
            }
            let trace: f64 = ours.iter().sum();
            prop_assert!((trace - m.trace()).abs() <= 1e-10 * scale * n as f64);
        }

        #[test]
        fn handles_block_structure(n in 2usize..12, v in -3.0f64..3.0) {
            // block-diagonal input exercises early deflation
            let m = DataMatrix::symmetric_from_fn(n, |i, j| if i == j { v + i as f64 } else if j == i + 1 && i % 2 == 0 { 0.5 } else { 0.0 });
            let ours = symmetric_eigenvalues(&m).unwrap();
            let oracle = nalgebra::DMatrix::from_row_slice(n, n, m.as_slice());
            let mut theirs: Vec<f64> = oracle.symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            for (a, b) in ours.iter().zip(&theirs) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}

//! Dense helpers for small (m <= 3) complex matrices: eigendecomposition via
//! the characteristic polynomial with Newton polish, and spectral norms
//! through the real embedding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

type C = Complex<f64>;

#[derive(Debug, thiserror::Error)]
pub enum EigError {
    #[error("matrix of dimension {0} not supported (only 2 or 3)")]
    UnsupportedDim(usize),
    #[error("matrix is numerically defective (eigenvector condition {0:.2e})")]
    Defective(f64),
}

/// Eigendecomposition M = V diag(values) V^{-1} of a small complex matrix.
#[derive(Debug, Clone)]
pub struct SmallEig {
    pub values: Vec<C>,
    pub vectors: DMatrix<C>,
    pub inv_vectors: DMatrix<C>,
}

pub fn eig_small(m: &DMatrix<C>) -> Result<SmallEig, EigError> {
    let n = m.nrows();
    let values = match n {
        2 => eigvals2(m),
        3 => eigvals3(m),
        _ => return Err(EigError::UnsupportedDim(n)),
    };
    let values: Vec<C> = values.into_iter().map(|l| polish_root(m, l)).collect();

    let mut vectors = DMatrix::<C>::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let v = null_vector(m, lambda)?;
        vectors.set_column(k, &v);
    }
    let inv_vectors = vectors
        .clone()
        .try_inverse()
        .ok_or(EigError::Defective(f64::INFINITY))?;
    let cond = one_norm(&vectors) * one_norm(&inv_vectors);
    if !cond.is_finite() || cond > 1e10 {
        return Err(EigError::Defective(cond));
    }
    Ok(SmallEig {
        values,
        vectors,
        inv_vectors,
    })
}

fn eigvals2(m: &DMatrix<C>) -> Vec<C> {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr - 4.0 * det).sqrt();
    vec![(tr + disc) / 2.0, (tr - disc) / 2.0]
}

fn eigvals3(m: &DMatrix<C>) -> Vec<C> {
    // characteristic polynomial l^3 - c2 l^2 + c1 l - c0
    let c2 = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let c1 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
        + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)];
    let c0 = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
    // depressed cubic: l = mu + c2/3, mu^3 + p mu + q = 0
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = -c0 + c1 * shift - 2.0 * shift * shift * shift;
    // Cardano with branch chosen for numerical stability
    let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let u3 = if (-q / 2.0 + s).norm() >= (-q / 2.0 - s).norm() {
        -q / 2.0 + s
    } else {
        -q / 2.0 - s
    };
    let u = u3.cbrt();
    let omega = C::new(-0.5, 3f64.sqrt() / 2.0);
    (0..3)
        .map(|k| {
            let uk = u * omega.powu(k);
            let vk = if uk.norm() > 0.0 { -p / (3.0 * uk) } else { C::new(0.0, 0.0) };
            uk + vk + shift
        })
        .collect()
}

/// A couple of Newton steps on det(M - l I) to clean up the closed-form root.
fn polish_root(m: &DMatrix<C>, mut lambda: C) -> C {
    let n = m.nrows();
    for _ in 0..3 {
        let (p, dp) = charpoly_and_deriv(m, lambda, n);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        lambda -= step;
        if step.norm() < 1e-15 * lambda.norm().max(1.0) {
            break;
        }
    }
    lambda
}

fn charpoly_and_deriv(m: &DMatrix<C>, l: C, n: usize) -> (C, C) {
    let det = |l: C| -> C {
        let a = m.map(|x| x) - DMatrix::<C>::identity(n, n) * l;
        match n {
            2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
            3 => {
                a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
                    - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
                    + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
            }
            _ => unreachable!(),
        }
    };
    let h = 1e-7 * l.norm().max(1.0);
    let p = det(l);
    let dp = (det(l + C::new(h, 0.0)) - det(l - C::new(h, 0.0))) / C::new(2.0 * h, 0.0);
    (p, dp)
}

/// Null vector of (M - lambda I) for a simple eigenvalue, via the complex
/// cross product of the two most independent rows (bilinear, no conjugation).
fn null_vector(m: &DMatrix<C>, lambda: C) -> Result<DVector<C>, EigError> {
    let n = m.nrows();
    let a = m.clone() - DMatrix::<C>::identity(n, n) * lambda;
    if n == 2 {
        let cands = [
            DVector::from_vec(vec![-a[(0, 1)], a[(0, 0)]]),
            DVector::from_vec(vec![-a[(1, 1)], a[(1, 0)]]),
        ];
        let best = cands
            .into_iter()
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .unwrap();
        let norm = best.norm();
        if norm < 1e-14 {
            return Err(EigError::Defective(f64::INFINITY));
        }
        return Ok(best / C::new(norm, 0.0));
    }
    let row = |i: usize| [a[(i, 0)], a[(i, 1)], a[(i, 2)]];
    let cross = |x: [C; 3], y: [C; 3]| {
        DVector::from_vec(vec![
            x[1] * y[2] - x[2] * y[1],
            x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0],
        ])
    };
    let best = [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .map(|(i, j)| cross(row(i), row(j)))
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .unwrap();
    let norm = best.norm();
    if norm < 1e-14 {
        return Err(EigError::Defective(f64::INFINITY));
    }
    Ok(best / C::new(norm, 0.0))
}

fn one_norm(m: &DMatrix<C>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Spectral norm of a small complex matrix through the real embedding
/// [[Re, -Im], [Im, Re]] of M^H M.
pub fn spectral_norm(m: &DMatrix<C>) -> f64 {
    let n = m.nrows();
    let mh_m = m.adjoint() * m;
    let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = mh_m[(i, j)];
            real[(i, j)] = z.re;
            real[(i, j + n)] = -z.im;
            real[(i + n, j)] = z.im;
            real[(i + n, j + n)] = z.re;
        }
    }
    let sym = (real.clone() + real.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.max().max(0.0).sqrt()
}

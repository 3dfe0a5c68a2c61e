//! The logarithmic gradient of `f_alpha`, critical points of the master
//! function and their Morse certification.
//!
//! Complex vectors stand for real vectors of `R^{2n}` through
//! `z_k = x_k + i y_k`; the real gradient of a function `F` is then the
//! complex vector with entries `dF/dx_k + i dF/dy_k`. In this convention the
//! gradient of `|xi(z)|` is `(xi / |xi|) conj(a)` and
//!
//! ```text
//! v_alpha(z) = sum_j alpha_j conj(a_j) / conj(xi_j(z)) = conj(R(z)),
//! R(z)       = sum_j alpha_j a_j / xi_j(z),
//! ```
//!
//! so the critical points of `f_alpha` are exactly the zeros of the
//! holomorphic map `R`, i.e. the zeros of `omega_alpha`.

pub mod chambers;
mod solver;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::arrangement::{Arrangement, Weights};
use crate::error::{Error, Result};
use crate::linalg;
use crate::Complex;

pub use solver::{find_critical_points, find_critical_points_with, CriticalSet, SearchStatus, SolverConfig};

/// Residual below which a point handed to [`certify_morse`] counts as
/// critical, relative to `1 + |alpha|`.
pub const CERTIFY_TOLERANCE: f64 = 1e-9;

/// Relative eigenvalue floor separating Morse points from degenerate ones.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogGradient {
    pub value: Vec<Complex>,
}

impl LogGradient {
    pub fn norm(&self) -> f64 {
        linalg::norm(&self.value)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    pub location: Vec<Complex>,
    pub residual: f64,
    /// (positive, negative) eigenvalue counts of the real Hessian of `log f_alpha`.
    pub hessian_signature: (usize, usize),
    pub min_abs_eigenvalue: f64,
    pub max_abs_eigenvalue: f64,
    /// Signature is `(n, n)`.
    pub certified: bool,
    /// Sign vector of the real chamber the point was seeded from.
    pub basin_tag: Option<String>,
}

/// `u_j(z) = (xi_j / |xi_j|) conj(a_j)`, the gradient of `|xi_j|`.
pub fn unit_gradient(arr: &Arrangement, j: usize, z: &[Complex]) -> Result<Vec<Complex>> {
    let h = arr.hyperplane(j)?;
    let xi = arr.evaluate_xi(j, z)?;
    let phase = xi / xi.norm();
    Ok(h.linear().iter().map(|a| phase * a.conj()).collect())
}

/// `v_alpha(z) = grad f_alpha / f_alpha = sum_j alpha_j u_j(z) / |xi_j(z)|`.
pub fn log_gradient(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<LogGradient> {
    arr.check_weights(w)?;
    let xi = arr.xi_values(z)?;
    let mut value = vec![Complex::new(0.0, 0.0); arr.dim()];
    for ((h, x), alpha) in arr.hyperplanes().iter().zip(&xi).zip(w.as_f64()) {
        let modulus = x.norm();
        let phase = x / modulus;
        for (v, a) in value.iter_mut().zip(h.linear()) {
            *v += phase * a.conj() * (alpha / modulus);
        }
    }
    Ok(LogGradient { value })
}

/// `R(z) = sum_i alpha_i a_i / xi_i(z)`, the coefficient vector of `omega_alpha`.
pub fn residual_vector(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<Vec<Complex>> {
    arr.check_weights(w)?;
    let xi = arr.xi_values(z)?;
    Ok(residual_from_xi(arr, w, &xi))
}

pub(crate) fn residual_from_xi(arr: &Arrangement, w: &Weights, xi: &[Complex]) -> Vec<Complex> {
    let mut r = vec![Complex::new(0.0, 0.0); arr.dim()];
    for ((h, x), alpha) in arr.hyperplanes().iter().zip(xi).zip(w.as_f64()) {
        let coeff = alpha / x;
        for (rk, a) in r.iter_mut().zip(h.linear()) {
            *rk += a * coeff;
        }
    }
    r
}

/// `|sum_i alpha_i a_i / xi_i(z)|`.
pub fn critical_equation_residual(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<f64> {
    Ok(linalg::norm(&residual_vector(arr, w, z)?))
}

/// Holomorphic Jacobian of `R`: `J_kl = -sum_i alpha_i a_ik a_il / xi_i^2`.
/// It is also the complex Hessian of `sum alpha_i log xi_i`.
pub fn residual_jacobian(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<DMatrix<Complex>> {
    arr.check_weights(w)?;
    let xi = arr.xi_values(z)?;
    Ok(jacobian_from_xi(arr, w, &xi))
}

pub(crate) fn jacobian_from_xi(arr: &Arrangement, w: &Weights, xi: &[Complex]) -> DMatrix<Complex> {
    let n = arr.dim();
    let mut j = DMatrix::from_element(n, n, Complex::new(0.0, 0.0));
    for ((h, x), alpha) in arr.hyperplanes().iter().zip(xi).zip(w.as_f64()) {
        let coeff = -alpha / (x * x);
        let a = h.linear();
        for k in 0..n {
            for l in 0..n {
                j[(k, l)] += a[k] * a[l] * coeff;
            }
        }
    }
    j
}

/// Real `2n x 2n` Hessian of `log f_alpha` in coordinates `(x_1..x_n, y_1..y_n)`.
///
/// `log f_alpha` is locally `Re h` with `h = sum alpha_i log xi_i`, so with
/// `C = h''` the blocks are `[[Re C, -Im C], [-Im C, -Re C]]`.
pub fn real_hessian(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<DMatrix<f64>> {
    let c = residual_jacobian(arr, w, z)?;
    let n = arr.dim();
    Ok(DMatrix::from_fn(2 * n, 2 * n, |r, s| {
        let entry = c[(r % n, s % n)];
        match (r < n, s < n) {
            (true, true) => entry.re,
            (false, false) => -entry.re,
            _ => -entry.im,
        }
    }))
}

/// Sorted eigenvalues of [`real_hessian`].
pub fn hessian_eigenvalues(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<Vec<f64>> {
    let h = real_hessian(arr, w, z)?;
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Checks that `z` is critical and non-degenerate and reports the Hessian
/// signature. A Morse point of `f_alpha` has signature `(n, n)`.
pub fn certify_morse(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<CriticalPoint> {
    let residual = critical_equation_residual(arr, w, z)?;
    let tolerance = CERTIFY_TOLERANCE * (1.0 + w.norm());
    if !(residual < tolerance) {
        return Err(Error::NotCritical {
            residual,
            tolerance,
        });
    }
    let ev = hessian_eigenvalues(arr, w, z)?;
    let max_abs = ev.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let min_abs = ev.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
    if !(min_abs > DEGENERACY_THRESHOLD * max_abs) {
        return Err(Error::DegenerateCritical { min_abs, max_abs });
    }
    let positives = ev.iter().filter(|&&x| x > 0.0).count();
    let signature = (positives, ev.len() - positives);
    let n = arr.dim();
    Ok(CriticalPoint {
        location: z.to_vec(),
        residual,
        hessian_signature: signature,
        min_abs_eigenvalue: min_abs,
        max_abs_eigenvalue: max_abs,
        certified: signature == (n, n),
        basin_tag: None,
    })
}

/// For a central arrangement with common point `p`, the identity
/// `sum_i alpha_i xi_i(z) / xi_i(z) = sum alpha_i` gives
/// `|R(z)| >= |sum alpha| / |z - p|`. Returns that lower bound.
pub fn euler_residual_bound(w: &Weights, common_point: &[Complex], z: &[Complex]) -> f64 {
    w.sum().abs() / linalg::norm(&linalg::sub(z, common_point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::Weight;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn two_points() -> Arrangement {
        Arrangement::from_real_rows(1, &[vec![1.0, 0.0], vec![1.0, -1.0]]).unwrap()
    }

    fn three_lines() -> Arrangement {
        Arrangement::from_real_rows(
            2,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, -1.0]],
        )
        .unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex> {
        (0..n)
            .map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect()
    }

    /// Centered finite-difference gradient of log f_alpha in the complex convention.
    fn fd_gradient(arr: &Arrangement, w: &Weights, z: &[Complex], h: f64) -> Vec<Complex> {
        let f = |p: &[Complex]| arr.log_f_alpha(w, p).unwrap();
        (0..z.len())
            .map(|k| {
                let mut dx = [z.to_vec(), z.to_vec()];
                dx[0][k] += c(h, 0.0);
                dx[1][k] -= c(h, 0.0);
                let mut dy = [z.to_vec(), z.to_vec()];
                dy[0][k] += c(0.0, h);
                dy[1][k] -= c(0.0, h);
                c(
                    (f(&dx[0]) - f(&dx[1])) / (2.0 * h),
                    (f(&dy[0]) - f(&dy[1])) / (2.0 * h),
                )
            })
            .collect()
    }

    #[test]
    fn log_gradient_examples() {
        let g = log_gradient(&two_points(), &Weights::ones(2), &[c(0.5, 0.0)]).unwrap();
        assert!(g.norm() < 1e-15);

        let single = Arrangement::from_real_rows(1, &[vec![1.0, 0.0]]).unwrap();
        let g = log_gradient(&single, &Weights::ones(1), &[c(2.0, 0.0)]).unwrap();
        assert!((g.value[0] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unit_gradient_has_constant_norm() {
        let arr = three_lines();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let z = random_point(&mut rng, 2);
            for j in 0..3 {
                let u = unit_gradient(&arr, j, &z).unwrap();
                let expected = arr.hyperplanes()[j].linear_norm();
                assert!((linalg::norm(&u) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_gradient_matches_finite_differences() {
        let arr = three_lines();
        let w = Weights::new(vec![Weight::ratio(1, 2), Weight::integer(2), Weight::ratio(3, 2)]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let z = random_point(&mut rng, 2);
            if arr.distance_to_arrangement(&z) < 0.05 {
                continue;
            }
            let g = log_gradient(&arr, &w, &z).unwrap();
            let fd = fd_gradient(&arr, &w, &z, 1e-6);
            assert!(linalg::norm(&linalg::sub(&g.value, &fd)) < 1e-6);
        }
    }

    #[test]
    fn residual_is_conjugate_of_gradient() {
        let arr = three_lines();
        let w = Weights::from_f64(&[0.3, 1.7, 2.2]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let z = random_point(&mut rng, 2);
            let g = log_gradient(&arr, &w, &z).unwrap();
            let r = residual_vector(&arr, &w, &z).unwrap();
            for (a, b) in g.value.iter().zip(&r) {
                assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
            }
            let res = critical_equation_residual(&arr, &w, &z).unwrap();
            assert!((res - g.norm()).abs() <= 1e-12 * (1.0 + res));
        }
    }

    #[test]
    fn critical_equation_examples() {
        let arr = two_points();
        assert!(critical_equation_residual(&arr, &Weights::ones(2), &[c(0.5, 0.0)]).unwrap() < 1e-15);
        // 1/z + 2/(z - 1) = 0  <=>  3z - 1 = 0
        let w = Weights::from_integers(&[1, 2]);
        assert!(critical_equation_residual(&arr, &w, &[c(1.0 / 3.0, 0.0)]).unwrap() < 1e-14);
    }

    #[test]
    fn central_residual_respects_euler_bound() {
        let arr = Arrangement::from_real_rows(
            2,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]],
        )
        .unwrap();
        let w = Weights::from_f64(&[1.0, 0.5, 2.0]);
        let origin = [c(0.0, 0.0), c(0.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let z = random_point(&mut rng, 2);
            let r = residual_vector(&arr, &w, &z).unwrap();
            // z . R(z) = sum alpha exactly
            let pairing: Complex = z.iter().zip(&r).map(|(a, b)| a * b).sum();
            assert!((pairing - c(w.sum(), 0.0)).norm() < 1e-9 * (1.0 + linalg::norm(&r)));
            let res = linalg::norm(&r);
            assert!(res >= euler_residual_bound(&w, &origin, &z) * (1.0 - 1e-12));
            assert!(res > 0.0);
        }
    }

    /// Finite-difference real Hessian of log f_alpha.
    fn fd_hessian(arr: &Arrangement, w: &Weights, z: &[Complex], h: f64) -> DMatrix<f64> {
        let n = z.len();
        let shift = |p: &[Complex], k: usize, s: f64| {
            let mut q = p.to_vec();
            if k < n {
                q[k] += c(s, 0.0);
            } else {
                q[k - n] += c(0.0, s);
            }
            q
        };
        let f = |p: &[Complex]| arr.log_f_alpha(w, p).unwrap();
        DMatrix::from_fn(2 * n, 2 * n, |r, s| {
            let pp = shift(&shift(z, r, h), s, h);
            let pm = shift(&shift(z, r, h), s, -h);
            let mp = shift(&shift(z, r, -h), s, h);
            let mm = shift(&shift(z, r, -h), s, -h);
            (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * h * h)
        })
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let arr = three_lines();
        let w = Weights::from_f64(&[1.0, 2.0, 0.5]);
        let z = [c(0.2, 0.3), c(0.4, -0.1)];
        let exact = real_hessian(&arr, &w, &z).unwrap();
        let fd = fd_hessian(&arr, &w, &z, 1e-4);
        assert!((exact - fd).amax() < 1e-5);
    }

    #[test]
    fn certify_two_points() {
        let cp = certify_morse(&two_points(), &Weights::ones(2), &[c(0.5, 0.0)]).unwrap();
        assert_eq!(cp.hessian_signature, (1, 1));
        assert!(cp.certified);
        // oracle: FD Hessian eigenvalues
        let fd = fd_hessian(&two_points(), &Weights::ones(2), &[c(0.5, 0.0)], 1e-4);
        let ev = SymmetricEigen::new(fd).eigenvalues;
        assert_eq!(ev.iter().filter(|&&x| x > 0.0).count(), 1);
        assert!((cp.max_abs_eigenvalue - 8.0).abs() < 1e-12);
    }

    #[test]
    fn certify_three_lines() {
        // alpha = (1,1,1): 1/x + 1/(x+y-1) = 0 = 1/y + 1/(x+y-1) => x = y = 1/3
        let arr = three_lines();
        let z = [c(1.0 / 3.0, 0.0), c(1.0 / 3.0, 0.0)];
        let cp = certify_morse(&arr, &Weights::ones(3), &z).unwrap();
        assert_eq!(cp.hessian_signature, (2, 2));
        let fd = fd_hessian(&arr, &Weights::ones(3), &z, 1e-4);
        let ev = SymmetricEigen::new(fd).eigenvalues;
        assert_eq!(ev.iter().filter(|&&x| x > 0.0).count(), 2);
        assert_eq!(ev.iter().filter(|&&x| x < 0.0).count(), 2);
    }

    #[test]
    fn certify_rejects_non_critical() {
        let err = certify_morse(&two_points(), &Weights::ones(2), &[c(0.25, 0.1)]);
        assert!(matches!(err, Err(Error::NotCritical { .. })));
    }
}

//! Pointwise identities between the gradient, the rotated field and the
//! residual map, checked at random points of the complement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arrangement::{Arrangement, Weights};
use crate::bounds::vertex_ball;
use crate::error::Result;
use crate::flows::iota_field;
use crate::lattice::Lattice;
use crate::linalg;
use crate::master::{log_gradient, residual_vector};
use crate::Complex;

pub const IDENTITY_TOLERANCE: f64 = 1e-12;
pub const FD_TOLERANCE: f64 = 1e-6;
pub const HOMOGENEITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub points: usize,
    /// `max |iota - i v| / |v|`.
    pub iota_error: f64,
    /// `max |<iota, v>| / |v|^2`.
    pub orthogonality_error: f64,
    /// `max |R - conj(v)| / |v|`.
    pub residual_error: f64,
    /// Central differences of `log f_alpha` against `v`, relative to `|v|`.
    pub gradient_fd_error: f64,
    /// `f(p + mu (z - p)) = mu^(sum alpha) f(z)` for central arrangements.
    pub homogeneity_error: Option<f64>,
    pub passed: bool,
}

/// Random points of the complement around the vertices, at least a thousandth
/// of the ball radius away from every hyperplane.
pub fn random_points(arr: &Arrangement, lat: &Lattice, count: usize, seed: u64) -> Vec<Vec<Complex>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (center, radius) = vertex_ball(lat);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z: Vec<Complex> = center
            .iter()
            .map(|c| c + Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * radius)
            .collect();
        if arr.distance_to_arrangement(&z) > 1e-3 * radius {
            out.push(z);
        }
    }
    out
}

fn fd_gradient(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<Vec<Complex>> {
    let h = 1e-6 * (1.0 + linalg::norm(z));
    let mut g = Vec::with_capacity(z.len());
    for k in 0..z.len() {
        let mut parts = [0.0; 2];
        for (slot, dir) in [Complex::new(1.0, 0.0), Complex::i()].into_iter().enumerate() {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[k] += dir * h;
            zm[k] -= dir * h;
            parts[slot] = (arr.log_f_alpha(w, &zp)? - arr.log_f_alpha(w, &zm)?) / (2.0 * h);
        }
        g.push(Complex::new(parts[0], parts[1]));
    }
    Ok(g)
}

pub fn verify_identities(
    arr: &Arrangement,
    w: &Weights,
    lat: &Lattice,
    count: usize,
    seed: u64,
) -> Result<IdentityReport> {
    arr.check_weights(w)?;
    let common = lat
        .flats
        .iter()
        .find(|f| f.generators.len() == arr.len())
        .map(|f| f.subspace.point.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1d);
    let mut rep = IdentityReport {
        points: 0,
        iota_error: 0.0,
        orthogonality_error: 0.0,
        residual_error: 0.0,
        gradient_fd_error: 0.0,
        homogeneity_error: common.as_ref().map(|_| 0.0),
        passed: false,
    };
    for z in random_points(arr, lat, count, seed) {
        let v = log_gradient(arr, w, &z)?;
        let vn = v.norm();
        let iota = iota_field(arr, w, &z)?;
        let iv: Vec<Complex> = v.value.iter().map(|x| x * Complex::i()).collect();
        rep.iota_error = rep.iota_error.max(linalg::norm(&linalg::sub(&iota, &iv)) / vn);
        rep.orthogonality_error = rep
            .orthogonality_error
            .max(linalg::real_dot(&iota, &v.value).abs() / (vn * vn));
        let r = residual_vector(arr, w, &z)?;
        let conj_v: Vec<Complex> = v.value.iter().map(|x| x.conj()).collect();
        rep.residual_error = rep.residual_error.max(linalg::norm(&linalg::sub(&r, &conj_v)) / vn);
        let fd = fd_gradient(arr, w, &z)?;
        rep.gradient_fd_error = rep
            .gradient_fd_error
            .max(linalg::norm(&linalg::sub(&fd, &v.value)) / vn);
        if let (Some(p), Some(err)) = (&common, rep.homogeneity_error.as_mut()) {
            let mu: f64 = rng.gen_range(0.1..10.0);
            let zm: Vec<Complex> = z.iter().zip(p).map(|(x, q)| q + (x - q) * mu).collect();
            let lhs = arr.log_f_alpha(w, &zm)?;
            let rhs = arr.log_f_alpha(w, &z)? + w.sum() * mu.ln();
            *err = err.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
        }
        rep.points += 1;
    }
    rep.passed = rep.iota_error < IDENTITY_TOLERANCE
        && rep.orthogonality_error < IDENTITY_TOLERANCE
        && rep.residual_error < IDENTITY_TOLERANCE
        && rep.gradient_fd_error < FD_TOLERANCE
        && rep.homogeneity_error.is_none_or(|e| e < HOMOGENEITY_TOLERANCE);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    #[test]
    fn identities_hold_on_central_lines() {
        let arr = Arrangement::from_real_rows(
            2,
            &[vec![1.0, 0.0, -1.0], vec![0.0, 1.0, -1.0], vec![1.0, -1.0, 0.0]],
        )
        .unwrap();
        let lat = build_lattice(&arr).unwrap();
        let rep = verify_identities(&arr, &Weights::from_f64(&[1.0, 0.5, 2.0]), &lat, 50, 0).unwrap();
        assert!(rep.homogeneity_error.is_some());
        assert!(rep.passed, "{rep:?}");
    }
}

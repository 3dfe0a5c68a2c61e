use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::chambers::{bounded_chambers, Chamber};
use super::{certify_morse, jacobian_from_xi, residual_from_xi, CriticalPoint};
use crate::arrangement::{Arrangement, Weights};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, Lattice};
use crate::linalg;
use crate::Complex;

#[derive(Clone, Debug, Serialize)]
pub struct SolverConfig {
    pub seed: u64,
    /// Multistart rounds before giving up.
    pub max_rounds: usize,
    /// Random starts per missing critical point and round.
    pub starts_per_missing: usize,
    pub max_newton_iterations: usize,
    /// Seed Newton from bounded chambers when the arrangement is real.
    pub use_chambers: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_rounds: 50,
            starts_per_missing: 64,
            max_newton_iterations: 100,
            use_chambers: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SearchStatus {
    Complete,
    BudgetExhausted { found: usize, target: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalSet {
    pub points: Vec<CriticalPoint>,
    /// `|chi(M)|`, the expected number of critical points.
    pub target: usize,
    pub status: SearchStatus,
    pub bounded_chambers: Option<usize>,
    pub newton_runs: usize,
    pub notes: Vec<String>,
}

impl CriticalSet {
    pub fn into_result(self) -> Result<Vec<CriticalPoint>> {
        match self.status {
            SearchStatus::Complete => Ok(self.points),
            SearchStatus::BudgetExhausted { found, target } => {
                Err(Error::BudgetExhausted { found, target })
            }
        }
    }
}

pub(crate) fn solver_tolerance(w: &Weights) -> f64 {
    1e-11 * (1.0 + w.norm())
}

fn same_root(a: &[Complex], b: &[Complex]) -> bool {
    linalg::norm(&linalg::sub(a, b)) < 1e-7 * (1.0 + linalg::norm(a))
}

/// Damped Newton for the zeros of `R(z) = sum alpha_i a_i / xi_i(z)`.
///
/// The iteration is Newton on `mu(z) R(z)` with the scalar multiplier
/// `mu = m * prod_i xi_i`. The product clears denominators, so the map is
/// polynomial and infinity stops being an attracting root of `R`. The factor
/// `m(z) = prod_k (|z - z_k|^-2 + 1)` deflates the roots in `known`. By
/// Sherman-Morrison the step is the plain Newton step `s = J^-1 R` divided by
/// `1 + d(log mu) s`.
///
/// Damping uses the natural monotonicity test: a step of length `lambda` is
/// accepted when the Newton correction of the trial point, measured with the
/// current Jacobian, shrinks by `1 - lambda/4`.
pub(crate) fn newton(
    arr: &Arrangement,
    w: &Weights,
    start: &[Complex],
    known: &[Vec<Complex>],
    max_iter: usize,
) -> Option<Vec<Complex>> {
    let tol = solver_tolerance(w);
    let log_deflation = |z: &[Complex]| -> f64 {
        known
            .iter()
            .map(|k| (1.0 / linalg::norm(&linalg::sub(z, k)).powi(2) + 1.0).ln())
            .sum()
    };
    let log_mu = |z: &[Complex], xi: &[Complex]| -> f64 {
        log_deflation(z) + xi.iter().map(|x| x.norm().ln()).sum::<f64>()
    };

    let mut z = start.to_vec();
    let mut xi = arr.xi_values(&z).ok()?;
    for _ in 0..max_iter {
        let r = residual_from_xi(arr, w, &xi);
        let rn = linalg::norm(&r);
        let lu = jacobian_from_xi(arr, w, &xi).lu();
        let solve = |v: Vec<Complex>| -> Option<Vec<Complex>> {
            Some(lu.solve(&DVector::from_vec(v))?.iter().copied().collect())
        };
        let s = solve(r)?;
        if rn < tol && converged_step(&s, &z) {
            return Some(z);
        }
        // holomorphic derivative of log mu applied to a vector
        let dlogmu = |v: &[Complex]| -> Complex {
            let defl: Complex = known
                .iter()
                .map(|k| {
                    let d = linalg::sub(&z, k);
                    let r2 = linalg::norm(&d).powi(2);
                    linalg::hermitian_dot(&d, v) * (-1.0 / (r2 * r2) / (1.0 / r2 + 1.0))
                })
                .sum();
            let poly: Complex = arr
                .hyperplanes()
                .iter()
                .zip(&xi)
                .map(|(h, x)| h.linear().iter().zip(v).map(|(a, vi)| a * vi).sum::<Complex>() / x)
                .sum();
            defl + poly
        };
        let factor = Complex::new(1.0, 0.0) + dlogmu(&s);
        if factor.norm() < 1e-14 {
            return None;
        }
        let step: Vec<Complex> = s.iter().map(|x| -x / factor).collect();
        let level = linalg::norm(&step);
        let mu0 = log_mu(&z, &xi);

        let mut lambda = 1.0;
        loop {
            let trial: Vec<Complex> = z.iter().zip(&step).map(|(a, d)| a + d * lambda).collect();
            if let Ok(txi) = arr.xi_values(&trial) {
                let t = solve(residual_from_xi(arr, w, &txi))?;
                let c = dlogmu(&t) / factor;
                let u: Vec<Complex> = t.iter().zip(&s).map(|(ti, si)| ti - si * c).collect();
                let trial_level = (log_mu(&trial, &txi) - mu0).exp() * linalg::norm(&u);
                if trial_level <= (1.0 - lambda / 4.0) * level
                    || level < 1e-14 * (1.0 + linalg::norm(&z))
                {
                    z = trial;
                    xi = txi;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return None;
            }
        }
        if !z.iter().all(|x| x.re.is_finite() && x.im.is_finite()) || linalg::norm(&z) > 1e8 {
            return None;
        }
    }
    None
}

fn converged_step(s: &[Complex], z: &[Complex]) -> bool {
    linalg::norm(s) < 1e-8 * (1.0 + linalg::norm(z))
}

/// Maximizes the strictly concave `sum alpha_i log |xi_i|` over a bounded
/// real chamber; the maximizer is the critical point of that chamber.
fn chamber_ascent(
    arr: &Arrangement,
    w: &Weights,
    chamber: &Chamber,
    max_iter: usize,
) -> Option<Vec<Complex>> {
    let to_c = |x: &[f64]| -> Vec<Complex> { x.iter().map(|&v| Complex::new(v, 0.0)).collect() };
    let in_chamber = |z: &[Complex]| {
        arr.hyperplanes()
            .iter()
            .zip(&chamber.signs)
            .all(|(h, &s)| h.eval(z).re * s as f64 > 0.0)
    };
    let tol = solver_tolerance(w);
    let mut z = to_c(&chamber.interior);
    let mut value = arr.log_f_alpha(w, &z).ok()?;
    for _ in 0..max_iter {
        let xi = arr.xi_values(&z).ok()?;
        let r = residual_from_xi(arr, w, &xi);
        if linalg::norm(&r) < tol {
            return Some(z);
        }
        let jac = jacobian_from_xi(arr, w, &xi);
        let s = jac.lu().solve(&DVector::from_vec(r.clone()))?;
        let step: Vec<Complex> = s.iter().map(|x| -Complex::new(x.re, 0.0)).collect();
        // ascent slope g . d > 0 because the real Hessian is negative definite
        let slope: f64 = r.iter().zip(&step).map(|(g, d)| g.re * d.re).sum();
        let mut lambda = 1.0;
        loop {
            let trial: Vec<Complex> = z.iter().zip(&step).map(|(a, d)| a + d * lambda).collect();
            if in_chamber(&trial) {
                if let Ok(v) = arr.log_f_alpha(w, &trial) {
                    if v >= value + 1e-4 * lambda * slope.max(0.0) {
                        z = trial;
                        value = v;
                        break;
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-12 {
                // stalled at rounding level; let complex Newton polish
                return newton(arr, w, &z, &[], max_iter);
            }
        }
    }
    newton(arr, w, &z, &[], max_iter)
}

fn sample_ball(rng: &mut ChaCha8Rng, center: &[Complex], radius: f64) -> Vec<Complex> {
    let n = center.len();
    // Gaussian direction in R^{2n}, radius with density r^{2n-1}
    let gauss = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        ((-2.0 * u.ln()).sqrt() * v.cos(), (-2.0 * u.ln()).sqrt() * v.sin())
    };
    let dir: Vec<Complex> = (0..n)
        .map(|_| {
            let (a, b) = gauss(rng);
            Complex::new(a, b)
        })
        .collect();
    let s = linalg::norm(&dir).max(1e-300);
    let r = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / (2 * n) as f64);
    center
        .iter()
        .zip(&dir)
        .map(|(c, d)| c + d * (r / s))
        .collect()
}

/// Locates the critical points of `Phi_alpha` on an essential arrangement.
///
/// Real arrangements with positive weights are seeded from their bounded
/// chambers. Random multistart Newton with deflation then runs until the
/// count reaches `|chi(M)|` or the budget runs out; a shortfall is reported
/// through [`SearchStatus::BudgetExhausted`].
pub fn find_critical_points(
    arr: &Arrangement,
    w: &Weights,
    config: &SolverConfig,
) -> Result<CriticalSet> {
    let lat = build_lattice(arr)?;
    find_critical_points_with(arr, w, &lat, config)
}

pub fn find_critical_points_with(
    arr: &Arrangement,
    w: &Weights,
    lat: &Lattice,
    config: &SolverConfig,
) -> Result<CriticalSet> {
    arr.check_weights(w)?;
    if !lat.is_essential() {
        return Err(Error::NotEssential {
            rank: lat.rank(),
            dim: arr.dim(),
        });
    }
    let target = lat.euler_characteristic().unsigned_abs() as usize;
    let mut notes = Vec::new();
    let mut points: Vec<CriticalPoint> = Vec::new();
    let mut runs = 0;
    let mut n_bounded = None;

    if lat.is_central() && w.sum() != 0.0 {
        notes.push(
            "central arrangement with nonzero weight sum: the Euler identity rules out critical points"
                .into(),
        );
        return Ok(CriticalSet {
            points,
            target,
            status: status(0, target),
            bounded_chambers: None,
            newton_runs: 0,
            notes,
        });
    }

    let accept = |z: Vec<Complex>,
                  tag: Option<String>,
                  points: &mut Vec<CriticalPoint>,
                  notes: &mut Vec<String>| {
        if points.iter().any(|p| same_root(&p.location, &z)) {
            return;
        }
        match certify_morse(arr, w, &z) {
            Ok(mut cp) => {
                cp.basin_tag = tag;
                points.push(cp);
            }
            Err(e) => notes.push(format!("discarded root near {z:?}: {e}")),
        }
    };

    if config.use_chambers && arr.is_real() && w.is_positive() && target > 0 {
        let chambers = bounded_chambers(arr, lat)?;
        n_bounded = Some(chambers.len());
        let roots: Vec<_> = chambers
            .par_iter()
            .map(|c| (chamber_ascent(arr, w, c, config.max_newton_iterations), c.tag()))
            .collect();
        runs += roots.len();
        for (root, tag) in roots {
            match root {
                Some(z) => accept(z, Some(tag), &mut points, &mut notes),
                None => notes.push(format!("chamber {tag}: ascent did not converge")),
            }
        }
    }

    let vertices = lat.vertices();
    let n = arr.dim();
    let mut center = vec![Complex::new(0.0, 0.0); n];
    for v in &vertices {
        for (c, p) in center.iter_mut().zip(&v.subspace.point) {
            *c += p / vertices.len() as f64;
        }
    }
    let max_norm = vertices
        .iter()
        .map(|v| linalg::norm(&v.subspace.point))
        .fold(0.0, f64::max);
    let radius = 2.0 * (max_norm + 1.0);

    let mut round = 0;
    while points.len() < target && round < config.max_rounds {
        let missing = target - points.len();
        let known: Vec<Vec<Complex>> = points.iter().map(|p| p.location.clone()).collect();
        let starts = config.starts_per_missing * missing;
        let roots: Vec<Option<Vec<Complex>>> = (0..starts)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    config.seed ^ ((round as u64) << 32) ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                let z0 = sample_ball(&mut rng, &center, radius);
                newton(arr, w, &z0, &known, config.max_newton_iterations)
            })
            .collect();
        runs += starts;
        for z in roots.into_iter().flatten() {
            accept(z, None, &mut points, &mut notes);
        }
        round += 1;
    }
    if points.len() > target {
        notes.push(format!(
            "found {} critical points, more than |chi| = {target}: alpha may be non-generic",
            points.len()
        ));
    }
    Ok(CriticalSet {
        status: status(points.len(), target),
        points,
        target,
        bounded_chambers: n_bounded,
        newton_runs: runs,
        notes,
    })
}

fn status(found: usize, target: usize) -> SearchStatus {
    if found >= target {
        SearchStatus::Complete
    } else {
        SearchStatus::BudgetExhausted { found, target }
    }
}

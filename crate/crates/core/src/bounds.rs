//! Sampled estimates of the constants in the gradient inequalities near the
//! arrangement.
//!
//! Every certificate here is statistical: it reports the extreme ratio seen on
//! shells of fixed distance around the flats and whether that extreme stays
//! away from zero as the shells shrink. The shells stand in for the
//! neighbourhood `U` of the arrangement; nothing is proved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arrangement::{Arrangement, Weights};
use crate::error::{Error, Result};
use crate::lattice::{Flat, Lattice};
use crate::linalg;
use crate::master::log_gradient;
use crate::Complex;

pub const DEFAULT_SHELLS: [f64; 3] = [0.1, 0.01, 0.001];
pub const DEFAULT_PER_SHELL: usize = 500;
/// Pass floor for positive constants, relative to the geometry scale.
pub const PASS_FLOOR: f64 = 1e-6;
/// A positive infimum is shell-stable when the value on the smallest shell is
/// at least this fraction of the value on the largest shell.
pub const SHELL_STABILITY: f64 = 0.1;
/// `max |alpha_i - beta_i| <= PAIRING_REGIME * min alpha_i`.
pub const PAIRING_REGIME: f64 = 0.1;
const REJECTION_FACTOR: usize = 1000;

const APPROXIMATION_NOTE: &str =
    "statistical certificate: sampling shells around the flats stand in for the neighbourhood U; not a proof";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    GradLowerK,
    NeighborhoodA,
    NeighborhoodB,
    PairingD,
}

#[derive(Clone, Debug, Serialize)]
pub struct NearSample {
    pub z: Vec<Complex>,
    /// Index into `Lattice::flats`.
    pub flat: usize,
    /// Index into the shell list.
    pub shell: usize,
    pub distance: f64,
}

/// Points drawn around the flats together with the shell layout they were
/// drawn on.
#[derive(Clone, Debug, Serialize)]
pub struct ShellSamples {
    pub points: Vec<NearSample>,
    /// Strictly decreasing shell distances.
    pub shells: Vec<f64>,
    /// Geometry scale of the lattice; pass floors are relative to it.
    pub scale: f64,
}

impl ShellSamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The samples drawn around one flat.
    pub fn around(&self, flat: usize) -> ShellSamples {
        ShellSamples {
            points: self.points.iter().filter(|s| s.flat == flat).cloned().collect(),
            shells: self.shells.clone(),
            scale: self.scale,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCertificate {
    pub inequality_id: InequalityId,
    pub sample_count: usize,
    /// Infimum for K, A, D; supremum for B.
    pub estimated_constant: f64,
    pub worst_point: Option<Vec<Complex>>,
    pub shell_distances: Vec<f64>,
    /// Extreme value restricted to each shell, `None` for empty shells.
    pub per_shell: Vec<Option<f64>>,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Shells `(0.1, 0.01, 0.001)` scaled by the lattice geometry scale.
pub fn default_shells(lat: &Lattice) -> Vec<f64> {
    let s = lat.geometry_scale();
    DEFAULT_SHELLS.iter().map(|d| d * s).collect()
}

fn check_shells(shells: &[f64]) -> Result<()> {
    if shells.is_empty() {
        return Err(Error::InvalidArgument("at least one shell is required".into()));
    }
    if shells.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument("shell distances must be positive".into()));
    }
    if shells.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::InvalidArgument("shell distances must be strictly decreasing".into()));
    }
    Ok(())
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Complex::from_polar((-u.ln()).sqrt(), t)
}

/// Ball around the vertex centroid containing every vertex, used as the
/// region in which base points on flats are drawn.
pub(crate) fn vertex_ball(lat: &Lattice) -> (Vec<Complex>, f64) {
    let verts = lat.vertices();
    let mut center = vec![Complex::new(0.0, 0.0); lat.dim];
    for v in &verts {
        for (c, p) in center.iter_mut().zip(&v.subspace.point) {
            *c += p / verts.len() as f64;
        }
    }
    let radius = verts
        .iter()
        .map(|v| linalg::norm(&linalg::sub(&v.subspace.point, &center)))
        .fold(0.0, f64::max);
    (center, radius + 1.0)
}

/// One point at distance exactly `d` from `flat`, drawn over a base point of
/// the flat near the vertex ball.
pub(crate) fn point_near_flat(
    rng: &mut ChaCha8Rng,
    flat: &Flat,
    d: f64,
    center: &[Complex],
    radius: f64,
) -> Vec<Complex> {
    let n = center.len();
    let sub = &flat.subspace;
    let project = |v: &[Complex]| -> Vec<Complex> {
        let mut out = v.to_vec();
        for b in &sub.basis {
            let c = linalg::hermitian_dot(b, v);
            for (o, bi) in out.iter_mut().zip(b) {
                *o -= bi * c;
            }
        }
        out
    };
    // base point: random point of the ball, orthogonally projected onto the flat
    let q: Vec<Complex> = center
        .iter()
        .map(|c| c + gaussian(rng) * (radius / (n as f64).sqrt()))
        .collect();
    let off = project(&linalg::sub(&q, &sub.point));
    let base = linalg::sub(&q, &off);
    loop {
        let g: Vec<Complex> = (0..n).map(|_| gaussian(rng)).collect();
        let normal = project(&g);
        let len = linalg::norm(&normal);
        if len > 1e-8 {
            return base.iter().zip(&normal).map(|(b, v)| b + v * (d / len)).collect();
        }
    }
}

/// Draws `per_shell` points at each distance in `shells` from every flat of
/// codimension at least one. A point is rejected when some hyperplane lies
/// within a tenth of the shell distance, which keeps samples in the stratum
/// of their own flat.
pub fn sample_near_arrangement(
    arr: &Arrangement,
    lat: &Lattice,
    shells: &[f64],
    per_shell: usize,
    seed: u64,
) -> Result<ShellSamples> {
    check_shells(shells)?;
    let (center, radius) = vertex_ball(lat);
    let jobs: Vec<(usize, usize)> = (1..lat.flats.len())
        .flat_map(|f| (0..shells.len()).map(move |s| (f, s)))
        .collect();
    let chunks: Vec<Result<Vec<NearSample>>> = jobs
        .par_iter()
        .map(|&(f, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ ((f as u64) << 20) ^ ((s as u64) << 8) ^ 0xb0d5,
            );
            let d = shells[s];
            let mut out = Vec::with_capacity(per_shell);
            let mut attempts = 0;
            while out.len() < per_shell {
                attempts += 1;
                if attempts > REJECTION_FACTOR * per_shell.max(1) {
                    return Err(Error::RejectionBudget { flat: f, shell: d });
                }
                let z = point_near_flat(&mut rng, &lat.flats[f], d, &center, radius);
                if arr.distance_to_arrangement(&z) < d / 10.0 {
                    continue;
                }
                out.push(NearSample { z, flat: f, shell: s, distance: d });
            }
            Ok(out)
        })
        .collect();
    let mut points = Vec::new();
    for c in chunks {
        points.extend(c?);
    }
    Ok(ShellSamples {
        points,
        shells: shells.to_vec(),
        scale: lat.geometry_scale(),
    })
}

/// Random positive weight vectors with `max |beta_i - alpha_i| <= radius`.
pub fn perturb_weights(w: &Weights, radius: f64, count: usize, seed: u64) -> Vec<Weights> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = w.as_f64();
    (0..count)
        .map(|_| {
            let beta: Vec<f64> = alpha
                .iter()
                .map(|&a| {
                    let lo = (a - radius).max(a * 1e-3);
                    rng.gen_range(lo..=a + radius)
                })
                .collect();
            Weights::from_f64(&beta)
        })
        .collect()
}

enum Extreme {
    Min,
    Max,
}

fn assemble(
    id: InequalityId,
    values: &[(f64, &NearSample)],
    shells: &[f64],
    extreme: Extreme,
    notes: Vec<String>,
) -> BoundCertificate {
    let better = |a: f64, b: f64| match extreme {
        Extreme::Min => a < b,
        Extreme::Max => a > b,
    };
    let mut per_shell: Vec<Option<f64>> = vec![None; shells.len()];
    let mut best: Option<(f64, &NearSample)> = None;
    for &(v, s) in values {
        let slot = &mut per_shell[s.shell];
        if slot.is_none_or(|cur| better(v, cur)) {
            *slot = Some(v);
        }
        if best.is_none_or(|(b, _)| better(v, b)) {
            best = Some((v, s));
        }
    }
    let estimated = best.map_or(f64::NAN, |(v, _)| v);
    BoundCertificate {
        inequality_id: id,
        sample_count: values.len(),
        estimated_constant: estimated,
        worst_point: best.map(|(_, s)| s.z.clone()),
        shell_distances: shells.to_vec(),
        per_shell,
        passed: false,
        notes,
    }
}

fn shell_stable(per_shell: &[Option<f64>]) -> bool {
    let present: Vec<f64> = per_shell.iter().flatten().copied().collect();
    match (present.first(), present.last()) {
        (Some(&outer), Some(&inner)) => inner >= SHELL_STABILITY * outer,
        _ => false,
    }
}

fn positive_pass(cert: &mut BoundCertificate, floor: f64) {
    let positive = cert.per_shell.iter().flatten().all(|&v| v > floor);
    let stable = shell_stable(&cert.per_shell);
    cert.passed = cert.sample_count > 0 && positive && stable;
    if !positive {
        cert.notes.push(format!("some shell infimum is below the floor {floor:e}"));
    }
    if !stable {
        cert.notes.push("infimum decays across shells".into());
    }
}

fn common_point(arr: &Arrangement) -> Option<Vec<Complex>> {
    let rows: Vec<Vec<Complex>> = arr
        .hyperplanes()
        .iter()
        .map(|h| {
            let s = h.linear_norm();
            h.linear().iter().map(|a| a / s).collect()
        })
        .collect();
    let offsets: Vec<Complex> = arr
        .hyperplanes()
        .iter()
        .map(|h| h.offset() / h.linear_norm())
        .collect();
    linalg::solve_affine(&rows, &offsets, arr.dim(), 1e-9).map(|s| s.point)
}

/// `inf ||v_alpha|| / sum_i 1/|xi_i|` over the samples, for a central arrangement.
pub fn certify_grad_lower_bound(
    arr: &Arrangement,
    w: &Weights,
    samples: &ShellSamples,
) -> Result<BoundCertificate> {
    arr.check_weights(w)?;
    if !w.is_positive() {
        return Err(Error::NonPositiveWeights);
    }
    if common_point(arr).is_none() {
        return Err(Error::NonCentral);
    }
    let values: Vec<(f64, &NearSample)> = samples
        .points
        .par_iter()
        .filter_map(|s| grad_lower_ratio(arr, w, &s.z).ok().map(|r| (r, s)))
        .collect();
    let shells = &samples.shells;
    let mut cert = assemble(
        InequalityId::GradLowerK,
        &values,
        shells,
        Extreme::Min,
        vec![APPROXIMATION_NOTE.into()],
    );
    // the ratio is dimensionless
    positive_pass(&mut cert, PASS_FLOOR);
    Ok(cert)
}

/// `||v_alpha(z)|| / sum_i 1/|xi_i(z)|`.
pub fn grad_lower_ratio(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<f64> {
    let v = log_gradient(arr, w, z)?;
    let xi = arr.xi_values(z)?;
    let s: f64 = xi.iter().map(|x| 1.0 / x.norm()).sum();
    Ok(v.norm() / s)
}

/// Certificates for `||v_alpha|| >= A` and
/// `||v_alpha - v_beta|| <= B max|alpha - beta| ||v_beta||`.
pub fn certify_neighborhood_bounds(
    arr: &Arrangement,
    w_alpha: &Weights,
    w_betas: &[Weights],
    samples: &ShellSamples,
) -> Result<(BoundCertificate, BoundCertificate)> {
    arr.check_weights(w_alpha)?;
    for b in w_betas {
        arr.check_weights(b)?;
    }
    let shells = &samples.shells;
    let a_values: Vec<(f64, &NearSample)> = samples
        .points
        .par_iter()
        .filter_map(|s| log_gradient(arr, w_alpha, &s.z).ok().map(|v| (v.norm(), s)))
        .collect();
    let mut a_cert = assemble(
        InequalityId::NeighborhoodA,
        &a_values,
        shells,
        Extreme::Min,
        vec![APPROXIMATION_NOTE.into()],
    );
    // ||v|| has units of inverse length
    positive_pass(&mut a_cert, PASS_FLOOR / samples.scale);

    let skipped = w_betas
        .iter()
        .filter(|b| w_alpha.max_abs_diff(b) == 0.0)
        .count();
    let b_values: Vec<(f64, &NearSample)> = samples
        .points
        .par_iter()
        .filter_map(|s| {
            let va = log_gradient(arr, w_alpha, &s.z).ok()?;
            w_betas
                .iter()
                .filter_map(|b| {
                    let delta = w_alpha.max_abs_diff(b);
                    if delta == 0.0 {
                        return None;
                    }
                    let vb = log_gradient(arr, b, &s.z).ok()?;
                    Some(linalg::norm(&linalg::sub(&va.value, &vb.value)) / (delta * vb.norm()))
                })
                .reduce(f64::max)
                .map(|r| (r, s))
        })
        .collect();
    let mut notes = vec![APPROXIMATION_NOTE.to_string()];
    if skipped > 0 {
        notes.push(format!("{skipped} beta equal to alpha skipped"));
    }
    let mut b_cert = assemble(InequalityId::NeighborhoodB, &b_values, shells, Extreme::Max, notes);
    b_cert.passed = b_cert.sample_count > 0 && b_cert.estimated_constant.is_finite();
    Ok((a_cert, b_cert))
}

/// `inf <v_alpha, w_beta>` with `w_beta = v_beta / ||v_beta||`.
pub fn certify_pairing_bound(
    arr: &Arrangement,
    w_alpha: &Weights,
    w_beta: &Weights,
    samples: &ShellSamples,
) -> Result<BoundCertificate> {
    arr.check_weights(w_alpha)?;
    arr.check_weights(w_beta)?;
    let values: Vec<(f64, &NearSample)> = samples
        .points
        .par_iter()
        .filter_map(|s| pairing(arr, w_alpha, w_beta, &s.z).ok().map(|p| (p, s)))
        .collect();
    let mut notes = vec![APPROXIMATION_NOTE.to_string()];
    let delta = w_alpha.max_abs_diff(w_beta);
    let in_regime = w_beta.is_positive() && delta <= PAIRING_REGIME * w_alpha.min();
    if !in_regime {
        notes.push(format!(
            "out of regime: max |alpha - beta| = {delta} exceeds {PAIRING_REGIME} min alpha"
        ));
    }
    let mut cert = assemble(InequalityId::PairingD, &values, &samples.shells, Extreme::Min, notes);
    positive_pass(&mut cert, PASS_FLOOR / samples.scale);
    Ok(cert)
}

pub fn pairing(arr: &Arrangement, w_alpha: &Weights, w_beta: &Weights, z: &[Complex]) -> Result<f64> {
    let va = log_gradient(arr, w_alpha, z)?;
    let vb = log_gradient(arr, w_beta, z)?;
    Ok(linalg::real_dot(&va.value, &vb.value) / vb.norm())
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalCertificate {
    /// Index into `Lattice::flats`.
    pub flat: usize,
    pub generators: Vec<usize>,
    pub certificate: BoundCertificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub shells: Vec<f64>,
    pub per_shell: usize,
    pub seed: u64,
    pub sample_count: usize,
    /// K on the central localization at every flat of codimension >= 1.
    pub grad_lower: Vec<LocalCertificate>,
    pub neighborhood_a: BoundCertificate,
    pub neighborhood_b: BoundCertificate,
    pub pairing_d: BoundCertificate,
    pub passed: bool,
}

/// Runs every certificate with default perturbations: eight `beta` within
/// the pairing regime for B, and one of them for D.
pub fn certify_all(
    arr: &Arrangement,
    w: &Weights,
    lat: &Lattice,
    shells: &[f64],
    per_shell: usize,
    seed: u64,
) -> Result<BoundsReport> {
    if !w.is_positive() {
        return Err(Error::NonPositiveWeights);
    }
    let samples = sample_near_arrangement(arr, lat, shells, per_shell, seed)?;
    let mut grad_lower = Vec::new();
    for (f, flat) in lat.flats.iter().enumerate().skip(1) {
        let local = arr.subarrangement(&flat.generators)?;
        let lw = w.sub(&flat.generators);
        let own = samples.around(f);
        grad_lower.push(LocalCertificate {
            flat: f,
            generators: flat.generators.clone(),
            certificate: certify_grad_lower_bound(&local, &lw, &own)?,
        });
    }
    let betas = perturb_weights(w, PAIRING_REGIME * w.min(), 8, seed ^ 0xbe7a);
    let (a, b) = certify_neighborhood_bounds(arr, w, &betas, &samples)?;
    let d = certify_pairing_bound(arr, w, &betas[0], &samples)?;
    let passed = grad_lower.iter().all(|c| c.certificate.passed) && a.passed && b.passed && d.passed;
    Ok(BoundsReport {
        shells: shells.to_vec(),
        per_shell,
        seed,
        sample_count: samples.len(),
        grad_lower,
        neighborhood_a: a,
        neighborhood_b: b,
        pairing_d: d,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    fn two_points() -> Arrangement {
        Arrangement::from_real_rows(1, &[vec![1.0, 0.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn samples_sit_on_circles_around_points() {
        let arr = two_points();
        let lat = build_lattice(&arr).unwrap();
        let samples = sample_near_arrangement(&arr, &lat, &[0.1], 50, 3).unwrap();
        assert_eq!(samples.len(), 100);
        for s in &samples.points {
            let d0 = s.z[0].norm();
            let d1 = (s.z[0] - 1.0).norm();
            assert!((d0.min(d1) - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_counts_and_avoidance() {
        let arr = Arrangement::from_real_rows(
            2,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, -1.0]],
        )
        .unwrap();
        let lat = build_lattice(&arr).unwrap();
        let samples = sample_near_arrangement(&arr, &lat, &[0.1, 0.01, 0.001], 100, 1).unwrap();
        assert_eq!(samples.len(), 300 * (lat.flats.len() - 1));
        assert!(samples.points.iter().all(|s| arr.check_point(&s.z).is_ok()));
    }

    #[test]
    fn shells_must_decrease() {
        let arr = two_points();
        let lat = build_lattice(&arr).unwrap();
        assert!(sample_near_arrangement(&arr, &lat, &[0.01, 0.1], 5, 0).is_err());
        assert!(sample_near_arrangement(&arr, &lat, &[0.0], 5, 0).is_err());
    }

    #[test]
    fn single_hyperplane_ratio_is_one() {
        let arr = Arrangement::from_real_rows(1, &[vec![1.0, 0.0]]).unwrap();
        let lat = build_lattice(&arr).unwrap();
        let w = Weights::ones(1);
        let samples = sample_near_arrangement(&arr, &lat, &[0.1, 0.01, 0.001], 20, 0).unwrap();
        let cert = certify_grad_lower_bound(&arr, &w, &samples).unwrap();
        assert!((cert.estimated_constant - 1.0).abs() < 1e-12);
        assert!(cert.passed);
    }

    #[test]
    fn non_central_is_rejected() {
        let arr = two_points();
        let lat = build_lattice(&arr).unwrap();
        let samples = sample_near_arrangement(&arr, &lat, &[0.1], 5, 0).unwrap();
        assert!(matches!(
            certify_grad_lower_bound(&arr, &Weights::ones(2), &samples),
            Err(Error::NonCentral)
        ));
    }

    #[test]
    fn two_points_neighborhood_and_pairing() {
        let arr = two_points();
        let lat = build_lattice(&arr).unwrap();
        let w = Weights::ones(2);
        let samples = sample_near_arrangement(&arr, &lat, &[0.01], 200, 9).unwrap();
        let beta = Weights::from_f64(&[1.1, 1.0]);
        let (a, b) =
            certify_neighborhood_bounds(&arr, &w, &[beta, w.clone()], &samples).unwrap();
        // near 0, |v| ~ 1/|z| - 1/|1 - z| >= 1/0.01 - 1/0.99
        assert!(a.estimated_constant >= 1.0 / 0.01 - 1.0 / 0.99 - 1e-9);
        assert!(b.estimated_constant.is_finite() && b.passed);
        assert!(b.notes.iter().any(|n| n.contains("skipped")));

        let d = certify_pairing_bound(&arr, &w, &Weights::from_f64(&[1.05, 0.95]), &samples).unwrap();
        assert!(d.estimated_constant > 0.0);
        let same = certify_pairing_bound(&arr, &w, &w, &samples).unwrap();
        assert!((same.estimated_constant - a.estimated_constant).abs() < 1e-9 * a.estimated_constant);
    }

    #[test]
    fn large_perturbation_is_flagged() {
        let arr = two_points();
        let lat = build_lattice(&arr).unwrap();
        let w = Weights::ones(2);
        let samples = sample_near_arrangement(&arr, &lat, &[0.1, 0.01], 50, 2).unwrap();
        let d = certify_pairing_bound(&arr, &w, &Weights::from_f64(&[10.0, 0.1]), &samples).unwrap();
        assert!(d.notes.iter().any(|n| n.contains("out of regime")));
    }

    #[test]
    fn ratio_is_scale_invariant_for_central_lines() {
        let arr = Arrangement::from_real_rows(2, &[vec![1.0, 0.0, 0.0], vec![1.0, 2.0, 0.0]]).unwrap();
        let w = Weights::from_f64(&[1.0, 2.5]);
        let z = vec![Complex::new(0.3, -0.2), Complex::new(-0.7, 0.4)];
        let r = grad_lower_ratio(&arr, &w, &z).unwrap();
        for mu in [1e-3, 0.5, 7.0, 1e3] {
            let zm: Vec<Complex> = z.iter().map(|x| x * mu).collect();
            let rm = grad_lower_ratio(&arr, &w, &zm).unwrap();
            assert!((r - rm).abs() < 1e-10 * r);
        }
    }

    #[test]
    fn perturbations_stay_in_box() {
        let w = Weights::from_f64(&[1.0, 2.0, 0.5]);
        for b in perturb_weights(&w, 0.05, 20, 4) {
            assert!(w.max_abs_diff(&b) <= 0.05 + 1e-15);
            assert!(b.is_positive());
        }
    }
}

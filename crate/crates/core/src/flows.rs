//! Flows of `w_alpha`, `iota_alpha` and `y_alpha` on the complement, and the
//! circle fibration of a level set of `f_alpha` for rank-one weights.
//!
//! With `R = sum alpha_i a_i / xi_i` and `v = conj(R)`, a real tangent vector
//! `X` changes `log f_alpha` by `Re(R . X)` and the argument
//! `g = sum alpha_i arg xi_i` by `Im(R . X)`. Hence `v` raises the level at
//! rate `|v|^2`, `iota = i v` keeps the level and turns `g` at rate `|v|^2`,
//! and `y = iota / |iota|^2` turns `g` at unit speed.

use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use num::{BigInt, Integer, One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arrangement::{Arrangement, Weights};
use crate::bounds::{point_near_flat, vertex_ball};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg;
use crate::master::{log_gradient, residual_from_xi};
use crate::Complex;

pub const ATOL: f64 = 1e-10;
pub const RTOL: f64 = 1e-9;
/// Displacement per step is at most this fraction of the distance to the
/// arrangement.
pub const STEP_CAP: f64 = 0.1;
/// Level set and fibre tolerances for the return map.
pub const RETURN_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    WAlpha,
    MinusWAlpha,
    IotaAlpha,
    YAlpha,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::WAlpha => "w_alpha",
            Field::MinusWAlpha => "minus_w_alpha",
            Field::IotaAlpha => "iota_alpha",
            Field::YAlpha => "y_alpha",
        }
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w" | "w_alpha" => Ok(Field::WAlpha),
            "minus_w" | "minus_w_alpha" | "-w" => Ok(Field::MinusWAlpha),
            "iota" | "iota_alpha" => Ok(Field::IotaAlpha),
            "y" | "y_alpha" => Ok(Field::YAlpha),
            other => Err(Error::UnknownField(other.to_string())),
        }
    }
}

/// `iota_alpha(z) = i v_alpha(z)`.
pub fn iota_field(arr: &Arrangement, w: &Weights, z: &[Complex]) -> Result<Vec<Complex>> {
    let v = log_gradient(arr, w, z)?;
    Ok(v.value.iter().map(|x| x * Complex::i()).collect())
}

pub fn field_value(arr: &Arrangement, w: &Weights, field: Field, z: &[Complex]) -> Result<Vec<Complex>> {
    let v = log_gradient(arr, w, z)?.value;
    let n2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let scale = match field {
        Field::WAlpha => Complex::new(1.0 / n2.sqrt(), 0.0),
        Field::MinusWAlpha => Complex::new(-1.0 / n2.sqrt(), 0.0),
        Field::IotaAlpha => Complex::i(),
        Field::YAlpha => Complex::new(0.0, 1.0 / n2),
    };
    Ok(v.iter().map(|x| x * scale).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightRank {
    /// Dimension of the rational span of the weights.
    pub rank: usize,
    /// Positive generator of `sum 2 pi alpha_i Z` when the rank is one.
    pub period: Option<f64>,
    pub warning: Option<String>,
}

/// Rank of the weights over the rationals. Exact weights span at most a line;
/// float weights carry no provenance and are declared to have full rank.
pub fn weight_rank(w: &Weights) -> WeightRank {
    let Some(exact) = w.exact() else {
        return WeightRank {
            rank: w.len(),
            period: None,
            warning: Some(format!(
                "float weights of unknown provenance: rank declared {}; pass rational strings for exact detection",
                w.len()
            )),
        };
    };
    let nonzero: Vec<_> = exact.iter().filter(|q| !q.is_zero()).collect();
    if nonzero.is_empty() {
        return WeightRank {
            rank: 0,
            period: None,
            warning: None,
        };
    }
    // alpha_i = p_i / q over the common denominator q
    let q = nonzero
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let g = nonzero.iter().fold(BigInt::zero(), |acc, x| {
        let p = x.numer() * (&q / x.denom());
        acc.gcd(&p.abs())
    });
    let ratio = num::BigRational::new(g, q);
    WeightRank {
        rank: 1,
        period: Some(TAU * linalg::ratio_to_f64(&ratio)),
        warning: None,
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Guards {
    /// Stop when `log f_alpha` reaches this value.
    pub target_level: Option<f64>,
    /// Stop when the distance to the arrangement falls below this.
    pub min_distance: Option<f64>,
    pub max_steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ReachedLevelSet,
    LeftDomainGuard,
    MaxSteps,
}

#[derive(Clone, Debug, Serialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    pub t: f64,
    pub z: Vec<Complex>,
    pub log_f: f64,
    /// `sum alpha_i arg xi_i`, continued along the path.
    pub arg: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub field: Field,
    pub field_name: &'static str,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has its start sample")
    }
}

/// Continuous branch of each `arg xi_i`.
#[derive(Clone)]
struct ArgTracker {
    angles: Vec<f64>,
}

impl ArgTracker {
    fn new(xi: &[Complex]) -> Self {
        Self {
            angles: xi.iter().map(|x| x.arg()).collect(),
        }
    }

    fn advance(&mut self, xi: &[Complex]) {
        for (a, x) in self.angles.iter_mut().zip(xi) {
            let mut d = x.arg() - a.rem_euclid(TAU);
            d = (d + PI).rem_euclid(TAU) - PI;
            *a += d;
        }
    }

    fn value(&self, w: &Weights) -> f64 {
        self.angles.iter().zip(w.as_f64()).map(|(a, al)| a * al).sum()
    }
}

// Dormand-Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper<'a> {
    arr: &'a Arrangement,
    w: &'a Weights,
    field: Field,
}

impl Stepper<'_> {
    fn eval(&self, z: &[Complex]) -> Option<Vec<Complex>> {
        field_value(self.arr, self.w, self.field, z).ok()
    }

    /// One Dormand-Prince step; returns the fifth-order point and the scaled
    /// error norm, or `None` if a stage left the complement. The norm covers
    /// the coordinates and, with the absolute tolerance, the first-order
    /// error of `log f_alpha` and of the argument.
    fn step(&self, z: &[Complex], k1: &[Complex], h: f64) -> Option<(Vec<Complex>, f64)> {
        let mut k: Vec<Vec<Complex>> = vec![k1.to_vec()];
        for s in 1..7 {
            let zs: Vec<Complex> = (0..z.len())
                .map(|j| z[j] + (0..s).map(|r| k[r][j] * A[s][r]).sum::<Complex>() * h)
                .collect();
            k.push(self.eval(&zs)?);
        }
        let z5: Vec<Complex> = (0..z.len())
            .map(|j| z[j] + (0..7).map(|r| k[r][j] * B5[r]).sum::<Complex>() * h)
            .collect();
        let mut err: f64 = 0.0;
        let e: Vec<Complex> = (0..z.len())
            .map(|j| (0..7).map(|r| k[r][j] * (B5[r] - B4[r])).sum::<Complex>() * h)
            .collect();
        for j in 0..z.len() {
            let sc = ATOL + RTOL * z[j].norm().max(z5[j].norm());
            err = err.max(e[j].re.abs() / sc).max(e[j].im.abs() / sc);
        }
        // the level and the argument move by Re and Im of R . e
        let xi = self.arr.xi_values(z).ok()?;
        let r = residual_from_xi(self.arr, self.w, &xi);
        let de: Complex = r.iter().zip(&e).map(|(a, b)| a * b).sum();
        err = err.max(de.re.abs() / ATOL).max(de.im.abs() / ATOL);
        Some((z5, err))
    }
}

/// Adaptive Dormand-Prince integration of `field` from `z0` up to `t_max`.
///
/// The step is capped so that one step moves at most a tenth of the distance
/// to the arrangement. Reaching the target level or the distance guard ends
/// the run with an event; the level crossing is located by bisection on the
/// step length.
pub fn integrate(
    arr: &Arrangement,
    w: &Weights,
    field: Field,
    z0: &[Complex],
    t_max: f64,
    guards: &Guards,
) -> Result<Trajectory> {
    arr.check_weights(w)?;
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be finite and non-negative, got {t_max}")));
    }
    let xi0 = arr.xi_values(z0)?;
    let stepper = Stepper { arr, w, field };
    let mut tracker = ArgTracker::new(&xi0);
    let mut z = z0.to_vec();
    let mut t = 0.0;
    let mut log_f = arr.log_f_alpha(w, &z)?;
    let mut samples = vec![Sample {
        t,
        z: z.clone(),
        log_f,
        arg: tracker.value(w),
    }];
    let mut events = Vec::new();
    let mut rejected = 0;
    let max_steps = guards.max_steps.unwrap_or(1_000_000);
    let above = |lf: f64, target: f64| lf >= target;
    let start_side = guards.target_level.map(|l| above(log_f, l));

    let mut k1 = field_value(arr, w, field, &z)?;
    let mut h = {
        let speed = linalg::norm(&k1).max(1e-300);
        (STEP_CAP * arr.distance_to_arrangement(&z) / speed).min(t_max.max(1e-300))
    };
    while t < t_max {
        if samples.len() > max_steps {
            events.push(Event { time: t, kind: EventKind::MaxSteps });
            break;
        }
        let speed = linalg::norm(&k1).max(1e-300);
        let cap = STEP_CAP * arr.distance_to_arrangement(&z) / speed;
        h = h.min(cap).min(t_max - t);
        if h < 1e-14 * (1.0 + t.abs()) && t_max - t > h {
            return Err(Error::StepUnderflow { t, last: z });
        }
        let Some((z1, err)) = stepper.step(&z, &k1, h) else {
            rejected += 1;
            h *= 0.25;
            continue;
        };
        if err > 1.0 || !z1.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
            continue;
        }
        let (mut z_new, mut h_taken) = (z1, h);
        let mut lf_new = arr.log_f_alpha(w, &z_new)?;
        let mut crossed = false;
        if let (Some(level), Some(side)) = (guards.target_level, start_side) {
            if above(lf_new, level) != side {
                // bisect on the step length for the crossing
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let Some((zm, _)) = stepper.step(&z, &k1, mid) else { break };
                    let lm = arr.log_f_alpha(w, &zm)?;
                    let close = (lm - level).abs() < 1e-13 * (1.0 + level.abs());
                    if close || above(lm, level) != side {
                        hi = mid;
                        (z_new, h_taken, lf_new) = (zm, mid, lm);
                    } else {
                        lo = mid;
                    }
                    if close {
                        break;
                    }
                }
                crossed = true;
            }
        }
        t += h_taken;
        z = z_new;
        log_f = lf_new;
        tracker.advance(&arr.xi_values(&z)?);
        samples.push(Sample {
            t,
            z: z.clone(),
            log_f,
            arg: tracker.value(w),
        });
        if crossed {
            events.push(Event { time: t, kind: EventKind::ReachedLevelSet });
            break;
        }
        if let Some(d) = guards.min_distance {
            if arr.distance_to_arrangement(&z) < d {
                events.push(Event { time: t, kind: EventKind::LeftDomainGuard });
                break;
            }
        }
        k1 = field_value(arr, w, field, &z)?;
        h = h_taken * (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
    Ok(Trajectory {
        field,
        field_name: field.name(),
        samples,
        events,
        rejected_steps: rejected,
    })
}

/// Largest discrepancy between each recorded step and the same step redone
/// as two half steps, relative to `1 + |z|`.
pub fn step_halving_error(arr: &Arrangement, w: &Weights, traj: &Trajectory) -> Result<f64> {
    let stepper = Stepper { arr, w, field: traj.field };
    let mut worst: f64 = 0.0;
    for pair in traj.samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let h = b.t - a.t;
        let fail = || Error::StepUnderflow { t: a.t, last: a.z.clone() };
        let k1 = field_value(arr, w, traj.field, &a.z)?;
        let (mid, _) = stepper.step(&a.z, &k1, 0.5 * h).ok_or_else(fail)?;
        let k1m = field_value(arr, w, traj.field, &mid)?;
        let (end, _) = stepper.step(&mid, &k1m, 0.5 * h).ok_or_else(fail)?;
        worst = worst.max(linalg::norm(&linalg::sub(&end, &b.z)) / (1.0 + linalg::norm(&b.z)));
    }
    Ok(worst)
}

/// Moves `z` onto `{log f_alpha = level}` by Newton steps along `v_alpha`,
/// along which `log f_alpha` changes at rate `|v|^2`.
pub fn project_to_level(arr: &Arrangement, w: &Weights, z: &[Complex], level: f64) -> Result<Vec<Complex>> {
    let mut z = z.to_vec();
    for _ in 0..200 {
        let lf = arr.log_f_alpha(w, &z)?;
        let gap = level - lf;
        if gap.abs() < 1e-13 * (1.0 + level.abs()) {
            return Ok(z);
        }
        let v = log_gradient(arr, w, &z)?;
        let n2 = v.norm().powi(2);
        let mut step: Vec<Complex> = v.value.iter().map(|x| x * (gap / n2)).collect();
        let len = linalg::norm(&step);
        let cap = 0.5 * arr.distance_to_arrangement(&z);
        if len > cap {
            step.iter_mut().for_each(|x| *x *= cap / len);
        }
        z = z.iter().zip(&step).map(|(a, b)| a + b).collect();
    }
    let lf = arr.log_f_alpha(w, &z)?;
    Err(Error::InvalidArgument(format!(
        "level projection did not converge: log f = {lf}, target {level}"
    )))
}

/// Default level: `delta = 0.05` times the smallest distance between two
/// vertices (or the geometry scale when there are fewer than two), and
/// `log eps` is the smallest `log f_alpha` sampled at distance `delta` from
/// the hyperplanes.
pub fn default_log_epsilon(arr: &Arrangement, w: &Weights, lat: &Lattice, seed: u64) -> Result<f64> {
    let delta = default_delta(lat);
    let pts = hyperplane_shell(lat, delta, 64, seed);
    pts.iter()
        .filter_map(|z| arr.log_f_alpha(w, z).ok())
        .reduce(f64::min)
        .ok_or(Error::NoHyperplanes)
}

pub fn default_delta(lat: &Lattice) -> f64 {
    let v = lat.vertices();
    let mut gap = f64::INFINITY;
    for (i, a) in v.iter().enumerate() {
        for b in &v[i + 1..] {
            gap = gap.min(linalg::norm(&linalg::sub(&a.subspace.point, &b.subspace.point)));
        }
    }
    0.05 * if gap.is_finite() { gap } else { lat.geometry_scale() }
}

fn hyperplane_shell(lat: &Lattice, d: f64, per_hyperplane: usize, seed: u64) -> Vec<Vec<Complex>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf1b5);
    let (center, radius) = vertex_ball(lat);
    lat.flats
        .iter()
        .filter(|f| f.codim == 1)
        .flat_map(|f| {
            (0..per_hyperplane)
                .map(|_| point_near_flat(&mut rng, f, d, &center, radius))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Points on `{log f_alpha = level}` obtained by projecting samples drawn
/// around the hyperplanes.
pub fn base_points(
    arr: &Arrangement,
    w: &Weights,
    lat: &Lattice,
    level: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<Complex>>> {
    let hyperplanes = lat.flats.iter().filter(|f| f.codim == 1).count().max(1);
    let per = count.div_ceil(hyperplanes);
    let mut out = Vec::with_capacity(count);
    for z in hyperplane_shell(lat, default_delta(lat), per, seed) {
        if out.len() == count {
            break;
        }
        if let Ok(p) = project_to_level(arr, w, &z, level) {
            out.push(p);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnEntry {
    pub start: Vec<Complex>,
    pub end: Vec<Complex>,
    pub g_start: f64,
    /// Change of the continued argument over one period.
    pub delta_g: f64,
    pub period_error: f64,
    /// Distance of `delta_g` from the nearest multiple of the period.
    pub fiber_error: f64,
    /// Largest `|log f - log eps|` along the trajectory.
    pub level_drift: f64,
    /// Largest `|dg/dt - 1|` over accepted steps.
    pub max_speed_error: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnReport {
    pub period: f64,
    pub log_epsilon: f64,
    pub entries: Vec<ReturnEntry>,
    pub max_period_error: f64,
    pub max_fiber_error: f64,
    pub max_level_drift: f64,
    pub max_speed_error: f64,
    pub passed: bool,
}

/// Flows each base point along `y_alpha` for exactly one period and records
/// how well the end point returns to the starting fibre of `g` on the level
/// set `V = {f_alpha = eps}`.
pub fn fibration_return_map(
    arr: &Arrangement,
    w: &Weights,
    log_epsilon: f64,
    base: &[Vec<Complex>],
) -> Result<ReturnReport> {
    arr.check_weights(w)?;
    let wr = weight_rank(w);
    let period = match (wr.rank, wr.period) {
        (1, Some(a)) => a,
        (r, _) => return Err(Error::WeightRankNotOne(r)),
    };
    let entries: Vec<ReturnEntry> = base
        .par_iter()
        .map(|z| -> Result<ReturnEntry> {
            let start = project_to_level(arr, w, z, log_epsilon)?;
            let traj = integrate(arr, w, Field::YAlpha, &start, period, &Guards::default())?;
            let first = &traj.samples[0];
            let last = traj.last();
            let delta_g = last.arg - first.arg;
            let fiber_error = (delta_g - period * (delta_g / period).round()).abs();
            let level_drift = traj
                .samples
                .iter()
                .map(|s| (s.log_f - log_epsilon).abs())
                .fold(0.0, f64::max);
            let max_speed_error = traj
                .samples
                .windows(2)
                .map(|p| ((p[1].arg - p[0].arg) / (p[1].t - p[0].t) - 1.0).abs())
                .fold(0.0, f64::max);
            Ok(ReturnEntry {
                start,
                end: last.z.clone(),
                g_start: first.arg,
                delta_g,
                period_error: (delta_g - period).abs(),
                fiber_error,
                level_drift,
                max_speed_error,
                steps: traj.samples.len() - 1,
            })
        })
        .collect::<Result<_>>()?;
    let max = |f: fn(&ReturnEntry) -> f64| entries.iter().map(f).fold(0.0, f64::max);
    let max_period_error = max(|e| e.period_error);
    let max_fiber_error = max(|e| e.fiber_error);
    let max_level_drift = max(|e| e.level_drift);
    let max_speed_error = max(|e| e.max_speed_error);
    let passed = !entries.is_empty()
        && [max_period_error, max_fiber_error, max_level_drift, max_speed_error]
            .iter()
            .all(|&e| e < RETURN_TOLERANCE);
    Ok(ReturnReport {
        period,
        log_epsilon,
        entries,
        max_period_error,
        max_fiber_error,
        max_level_drift,
        max_speed_error,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::Weight;
    use crate::lattice::build_lattice;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn origin() -> Arrangement {
        Arrangement::from_real_rows(1, &[vec![1.0, 0.0]]).unwrap()
    }

    fn two_points() -> Arrangement {
        Arrangement::from_real_rows(1, &[vec![1.0, 0.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn iota_examples() {
        let iota = iota_field(&origin(), &Weights::ones(1), &[c(1.0, 0.0)]).unwrap();
        assert!((iota[0] - c(0.0, 1.0)).norm() < 1e-15);
        let arr = two_points();
        let w = Weights::from_f64(&[1.0, 2.5]);
        let z = [c(0.3, 0.7)];
        let v = log_gradient(&arr, &w, &z).unwrap();
        let i = iota_field(&arr, &w, &z).unwrap();
        assert!(linalg::real_dot(&i, &v.value).abs() < 1e-14);
        assert!((linalg::norm(&i) - v.norm()).abs() < 1e-14);
    }

    #[test]
    fn field_names_parse() {
        assert_eq!("w".parse::<Field>().unwrap(), Field::WAlpha);
        assert_eq!("y_alpha".parse::<Field>().unwrap(), Field::YAlpha);
        assert!(matches!("z".parse::<Field>(), Err(Error::UnknownField(_))));
    }

    #[test]
    fn weight_rank_examples() {
        let r = weight_rank(&Weights::ones(2));
        assert_eq!((r.rank, r.period), (1, Some(TAU)));
        let r = weight_rank(&Weights::new(vec![Weight::ratio(2, 3), Weight::ratio(4, 3)]));
        assert_eq!(r.rank, 1);
        assert!((r.period.unwrap() - TAU * 2.0 / 3.0).abs() < 1e-15);
        let r = weight_rank(&Weights::from_f64(&[1.0, 2f64.sqrt()]));
        assert_eq!(r.rank, 2);
        assert!(r.period.is_none() && r.warning.is_some());
        let r = weight_rank(&Weights::new(vec![Weight::ratio(1, 2), Weight::ratio(-3, 4)]));
        assert!((r.period.unwrap() - TAU / 4.0).abs() < 1e-15);
    }

    #[test]
    fn w_flow_raises_level_until_target() {
        let arr = two_points();
        let w = Weights::ones(2);
        let guards = Guards {
            target_level: Some(0.5),
            ..Guards::default()
        };
        let traj = integrate(&arr, &w, Field::WAlpha, &[c(0.02, 0.01)], 100.0, &guards).unwrap();
        assert!(traj.samples.windows(2).all(|p| p[1].log_f > p[0].log_f));
        assert_eq!(traj.events.last().unwrap().kind, EventKind::ReachedLevelSet);
        assert!((traj.last().log_f - 0.5).abs() < 1e-10);
    }

    #[test]
    fn iota_flow_keeps_level() {
        let arr = Arrangement::from_real_rows(
            2,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, -1.0]],
        )
        .unwrap();
        let w = Weights::from_f64(&[1.0, 2.0, 0.5]);
        let z0 = [c(0.3, 0.2), c(0.4, -0.1)];
        let traj = integrate(&arr, &w, Field::IotaAlpha, &z0, 1.0, &Guards::default()).unwrap();
        let l0 = traj.samples[0].log_f;
        for s in &traj.samples {
            assert!((s.log_f - l0).abs() < 1e-8 * s.t.max(1.0), "{} {} {:?} {}", s.t, s.log_f - l0, s.z, traj.samples.len());
        }
        assert!(step_halving_error(&arr, &w, &traj).unwrap() < 1e-8);
    }

    #[test]
    fn single_point_return_is_identity() {
        let arr = origin();
        let w = Weights::ones(1);
        let rep = fibration_return_map(&arr, &w, 0.0, &[vec![c(1.0, 0.0)], vec![c(0.0, 1.0)]]).unwrap();
        assert!((rep.period - TAU).abs() < 1e-15);
        assert!(rep.passed);
        for e in &rep.entries {
            assert!(linalg::norm(&linalg::sub(&e.start, &e.end)) < 1e-8);
        }
    }

    #[test]
    fn two_points_return_to_fibre() {
        let arr = two_points();
        let w = Weights::ones(2);
        let lat = build_lattice(&arr).unwrap();
        let level = default_log_epsilon(&arr, &w, &lat, 0).unwrap();
        let base = base_points(&arr, &w, &lat, level, 6, 1).unwrap();
        assert_eq!(base.len(), 6);
        let rep = fibration_return_map(&arr, &w, level, &base).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn float_weights_have_no_fibration() {
        let arr = two_points();
        let w = Weights::from_f64(&[1.0, 1.0]);
        assert!(matches!(
            fibration_return_map(&arr, &w, 0.0, &[vec![c(0.5, 0.5)]]),
            Err(Error::WeightRankNotOne(2))
        ));
    }

    #[test]
    fn start_on_arrangement_is_rejected() {
        assert!(matches!(
            integrate(&origin(), &Weights::ones(1), Field::WAlpha, &[c(0.0, 0.0)], 1.0, &Guards::default()),
            Err(Error::PointOnArrangement { .. })
        ));
    }

    #[test]
    fn minus_w_flow_hits_distance_guard() {
        let guards = Guards {
            min_distance: Some(1e-3),
            ..Guards::default()
        };
        let traj = integrate(&origin(), &Weights::ones(1), Field::MinusWAlpha, &[c(0.5, 0.0)], 10.0, &guards).unwrap();
        assert_eq!(traj.events[0].kind, EventKind::LeftDomainGuard);
        assert!(traj.last().z[0].norm() < 1e-3);
    }
}

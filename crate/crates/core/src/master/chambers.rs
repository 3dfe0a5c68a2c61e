//! Chambers of a real arrangement, found by sign-vector sampling.
//!
//! Samples come from a regular grid over the vertex bounding box and from
//! small neighbourhoods of every vertex; each bounded chamber is a polytope
//! and so touches a vertex. In the plane the vertex neighbourhoods are probed
//! along the angular bisectors of the lines through the vertex, which hits
//! every chamber incident to it. On the line the chambers are intervals and
//! are listed directly.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arrangement::Arrangement;
use crate::error::{Error, Result};
use crate::lattice::Lattice;

const GRID_BUDGET: usize = 40_000;
const RANDOM_DIRECTIONS: usize = 512;

#[derive(Clone, Debug, Serialize)]
pub struct Chamber {
    /// Sign of each `xi_i` on the chamber.
    pub signs: Vec<i8>,
    /// Sample point of the chamber with the largest distance to the arrangement.
    pub interior: Vec<f64>,
    /// Distance from `interior` to the nearest hyperplane.
    pub margin: f64,
    pub bounded: bool,
}

impl Chamber {
    pub fn tag(&self) -> String {
        self.signs
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect()
    }
}

struct RealForm {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    norms: Vec<f64>,
}

impl RealForm {
    fn new(arr: &Arrangement) -> Self {
        let normals: Vec<Vec<f64>> = arr
            .hyperplanes()
            .iter()
            .map(|h| h.linear().iter().map(|a| a.re).collect())
            .collect();
        let norms = normals
            .iter()
            .map(|a| a.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let offsets = arr.hyperplanes().iter().map(|h| h.offset().re).collect();
        Self {
            normals,
            offsets,
            norms,
        }
    }

    fn eval(&self, i: usize, x: &[f64]) -> f64 {
        self.normals[i].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offsets[i]
    }

    /// Sign vector and distance to the arrangement, `None` on a hyperplane.
    fn locate(&self, x: &[f64]) -> Option<(Vec<i8>, f64)> {
        let mut signs = Vec::with_capacity(self.normals.len());
        let mut margin = f64::INFINITY;
        for i in 0..self.normals.len() {
            let v = self.eval(i, x);
            let d = v.abs() / self.norms[i];
            if d < 1e-12 {
                return None;
            }
            margin = margin.min(d);
            signs.push(if v > 0.0 { 1 } else { -1 });
        }
        Some((signs, margin))
    }

    /// The recession cone `{d : s_i a_i . d >= 0}` is trivial iff no extreme
    /// ray exists; extreme rays are kernels of `n - 1` independent normals.
    fn is_bounded(&self, signs: &[i8], dim: usize) -> bool {
        let m = self.normals.len();
        let feasible = |d: &[f64]| {
            (0..m).all(|i| {
                let s = signs[i] as f64;
                s * self.normals[i].iter().zip(d).map(|(a, b)| a * b).sum::<f64>()
                    >= -1e-10 * self.norms[i]
            })
        };
        let mut rays = Vec::new();
        if dim == 1 {
            rays.push(vec![1.0]);
        } else {
            for subset in combinations(m, dim - 1) {
                let a = DMatrix::from_fn(dim, dim, |r, c| {
                    subset
                        .get(r)
                        .map_or(0.0, |&i| self.normals[i][c] / self.norms[i])
                });
                let svd = a.svd(false, true);
                let v_t = svd.v_t.expect("requested V^T");
                let (k, smin) = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |acc, (k, &s)| if s < acc.1 { (k, s) } else { acc });
                let second = svd
                    .singular_values
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .map(|(_, &s)| s)
                    .fold(f64::INFINITY, f64::min);
                // need exactly a one-dimensional kernel
                if smin > 1e-9 || second < 1e-9 {
                    continue;
                }
                rays.push(v_t.row(k).iter().copied().collect());
            }
        }
        !rays.iter().any(|d| {
            let neg: Vec<f64> = d.iter().map(|x| -x).collect();
            feasible(d) || feasible(&neg)
        })
    }
}

pub(crate) fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// All chambers visible to the sampler, bounded ones first.
pub fn enumerate_chambers(arr: &Arrangement, lat: &Lattice) -> Result<Vec<Chamber>> {
    if !arr.is_real() {
        return Err(Error::InvalidArgument(
            "chamber enumeration needs real hyperplanes".into(),
        ));
    }
    if !lat.is_essential() {
        return Err(Error::NotEssential {
            rank: lat.rank(),
            dim: lat.dim,
        });
    }
    let n = arr.dim();
    let form = RealForm::new(arr);
    let vertices: Vec<Vec<f64>> = lat
        .vertices()
        .iter()
        .map(|f| f.subspace.point.iter().map(|z| z.re).collect())
        .collect();

    let mut found: HashMap<Vec<i8>, (Vec<f64>, f64)> = HashMap::new();
    let mut record = |x: Vec<f64>| {
        if let Some((signs, margin)) = form.locate(&x) {
            let entry = found.entry(signs).or_insert((x.clone(), margin));
            if margin > entry.1 {
                *entry = (x, margin);
            }
        }
    };

    let (lo, hi) = bounding_box(&vertices, n);
    if n == 1 {
        let mut pts: Vec<f64> = vertices.iter().map(|v| v[0]).collect();
        pts.sort_by(f64::total_cmp);
        for w in pts.windows(2) {
            record(vec![0.5 * (w[0] + w[1])]);
        }
        record(vec![lo[0]]);
        record(vec![hi[0]]);
    } else {
        let per_axis = (GRID_BUDGET as f64).powf(1.0 / n as f64).floor().max(2.0) as usize;
        let mut idx = vec![0usize; n];
        loop {
            let x: Vec<f64> = (0..n)
                .map(|k| lo[k] + (hi[k] - lo[k]) * (idx[k] as f64 + 0.5) / per_axis as f64)
                .collect();
            record(x);
            let mut k = 0;
            while k < n {
                idx[k] += 1;
                if idx[k] < per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for v in &vertices {
            let through: Vec<usize> = (0..arr.len())
                .filter(|&i| form.eval(i, v).abs() / form.norms[i] < 1e-9)
                .collect();
            let radius = 0.5
                * (0..arr.len())
                    .filter(|i| !through.contains(i))
                    .map(|i| form.eval(i, v).abs() / form.norms[i])
                    .fold(hi.iter().zip(&lo).map(|(a, b)| a - b).fold(1.0, f64::max), f64::min);
            for d in probe_directions(&form, &through, n, &mut rng) {
                record(v.iter().zip(&d).map(|(p, q)| p + radius * q).collect());
            }
        }
    }

    let mut chambers: Vec<Chamber> = found
        .into_iter()
        .map(|(signs, (interior, margin))| {
            let bounded = form.is_bounded(&signs, n);
            Chamber {
                signs,
                interior,
                margin,
                bounded,
            }
        })
        .collect();
    chambers.sort_by(|a, b| b.bounded.cmp(&a.bounded).then_with(|| a.signs.cmp(&b.signs)));
    Ok(chambers)
}

pub fn bounded_chambers(arr: &Arrangement, lat: &Lattice) -> Result<Vec<Chamber>> {
    Ok(enumerate_chambers(arr, lat)?
        .into_iter()
        .filter(|c| c.bounded)
        .collect())
}

/// Box around the real parts of the lattice vertices, padded by a tenth of
/// its extent plus one.
pub(crate) fn vertex_bounding_box(lat: &Lattice) -> (Vec<f64>, Vec<f64>) {
    let vertices: Vec<Vec<f64>> = lat
        .vertices()
        .iter()
        .map(|f| f.subspace.point.iter().map(|z| z.re).collect())
        .collect();
    bounding_box(&vertices, lat.dim)
}

fn bounding_box(vertices: &[Vec<f64>], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for v in vertices {
        for k in 0..n {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    if vertices.is_empty() {
        return (vec![-1.0; n], vec![1.0; n]);
    }
    for k in 0..n {
        let pad = 0.1 * (hi[k] - lo[k]) + 1.0;
        lo[k] -= pad;
        hi[k] += pad;
    }
    (lo, hi)
}

fn probe_directions(
    form: &RealForm,
    through: &[usize],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    if n == 2 {
        // directions of the lines through the vertex, as angles mod 2 pi
        let mut angles: Vec<f64> = through
            .iter()
            .flat_map(|&i| {
                let a = &form.normals[i];
                let t = (-a[1]).atan2(a[0]);
                [t, t + std::f64::consts::PI]
            })
            .map(|t| t.rem_euclid(std::f64::consts::TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let k = angles.len();
        return (0..k)
            .map(|j| {
                let next = if j + 1 < k {
                    angles[j + 1]
                } else {
                    angles[0] + std::f64::consts::TAU
                };
                let mid = 0.5 * (angles[j] + next);
                vec![mid.cos(), mid.sin()]
            })
            .collect();
    }
    (0..RANDOM_DIRECTIONS)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            v.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;

    fn lines(rows: &[[f64; 3]]) -> Arrangement {
        Arrangement::from_real_rows(2, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn generic_lines_bounded_counts() {
        // total regions of m generic lines: 1 + m + C(m,2); bounded: C(m-1,2)
        let all = [
            [0.0, -1.0, 0.0],
            [1.0, -1.0, 1.0],
            [-1.0, -1.0, 3.0],
            [2.0, -1.0, -2.0],
            [-0.5, -1.0, 4.5],
        ];
        for m in 3..=5 {
            let arr = lines(&all[..m]);
            let lat = build_lattice(&arr).unwrap();
            let ch = enumerate_chambers(&arr, &lat).unwrap();
            assert_eq!(ch.len(), 1 + m + m * (m - 1) / 2, "m = {m}");
            let bounded = ch.iter().filter(|c| c.bounded).count();
            assert_eq!(bounded as i64, lat.euler_characteristic().abs(), "m = {m}");
        }
    }

    #[test]
    fn central_lines_have_no_bounded_chamber() {
        let arr = lines(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        let lat = build_lattice(&arr).unwrap();
        let ch = enumerate_chambers(&arr, &lat).unwrap();
        assert_eq!(ch.len(), 6);
        assert!(ch.iter().all(|c| !c.bounded));
    }

    #[test]
    fn strip_is_unbounded() {
        let arr = lines(&[[1.0, 0.0, 0.0], [1.0, 0.0, -1.0], [0.0, 1.0, 0.0]]);
        let lat = build_lattice(&arr).unwrap();
        let ch = enumerate_chambers(&arr, &lat).unwrap();
        assert_eq!(ch.len(), 6);
        assert_eq!(ch.iter().filter(|c| c.bounded).count(), 0);
    }

    #[test]
    fn points_on_the_line() {
        let arr = Arrangement::from_real_rows(
            1,
            &[vec![1.0, 0.0], vec![1.0, -1.0], vec![1.0, -3.0]],
        )
        .unwrap();
        let lat = build_lattice(&arr).unwrap();
        let ch = enumerate_chambers(&arr, &lat).unwrap();
        assert_eq!(ch.len(), 4);
        assert_eq!(ch.iter().filter(|c| c.bounded).count(), 2);
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(4, 0), vec![Vec::<usize>::new()]);
    }
}

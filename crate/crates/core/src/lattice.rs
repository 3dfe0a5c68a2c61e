//! Intersection lattice, Möbius function, Euler characteristic of the
//! complement and reduction to the essential core.
//!
//! Flats are identified by their closed generator sets: the set of every
//! hyperplane containing the flat. For non-empty flats, reverse inclusion of
//! subspaces is inclusion of generator sets, so the poset structure and the
//! Möbius recursion only need set operations once the closures are known.
//!
//! Closures come from one of two incidence oracles. When every coefficient
//! is a small-denominator Gaussian rational the computation is exact;
//! otherwise it runs in floating point with the subspace tolerance
//! [`FLAT_TOLERANCE`].

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::arrangement::{Arrangement, Hyperplane};
use crate::error::Result;
use crate::linalg::{self, gaussian_approx, ExactSpan, GaussianRational};
use crate::Complex;

/// Subspace equality tolerance for flats computed in floating point.
pub const FLAT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeMode {
    Exact,
    Float,
}

/// Affine subspace `point + span(basis)` with an orthonormal basis.
#[derive(Clone, Debug, Serialize)]
pub struct Subspace {
    pub point: Vec<Complex>,
    pub basis: Vec<Vec<Complex>>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn distance(&self, z: &[Complex]) -> f64 {
        linalg::distance_to_subspace(z, &self.point, &self.basis)
    }

    /// Same dimension, points mutually within `tol`, and every basis vector of
    /// one within `tol` of the other's direction space (largest principal sine).
    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let origin = vec![Complex::new(0.0, 0.0); self.point.len()];
        let sine = |a: &Subspace, b: &Subspace| {
            a.basis
                .iter()
                .map(|v| linalg::distance_to_subspace(v, &origin, &b.basis))
                .fold(0.0, f64::max)
        };
        self.distance(&other.point) < tol
            && other.distance(&self.point) < tol
            && sine(self, other) < tol
            && sine(other, self) < tol
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Flat {
    /// Sorted indices of every hyperplane containing the flat.
    pub generators: Vec<usize>,
    pub subspace: Subspace,
    pub codim: usize,
    pub moebius: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lattice {
    pub dim: usize,
    pub hyperplane_count: usize,
    pub mode: LatticeMode,
    /// Ordered by codimension, then lexicographically by generators.
    pub flats: Vec<Flat>,
    /// Cover relations `(lower, upper)` as indices into `flats`.
    pub covers: Vec<(usize, usize)>,
}

pub(crate) fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

trait Incidence {
    /// Closure and codimension of the intersection of `gens`, or `None` when
    /// the intersection is empty.
    fn close(&self, gens: &[usize]) -> Option<(Vec<usize>, usize)>;
}

struct ExactIncidence {
    linear: Vec<Vec<GaussianRational>>,
    augmented: Vec<Vec<GaussianRational>>,
}

impl ExactIncidence {
    fn try_new(arr: &Arrangement) -> Option<Self> {
        let mut linear = Vec::with_capacity(arr.len());
        let mut augmented = Vec::with_capacity(arr.len());
        for h in arr.hyperplanes() {
            let a = h
                .linear()
                .iter()
                .map(|&x| gaussian_approx(x))
                .collect::<Option<Vec<_>>>()?;
            let mut aug = a.clone();
            aug.push(gaussian_approx(h.offset())?);
            linear.push(a);
            augmented.push(aug);
        }
        Some(Self { linear, augmented })
    }
}

impl Incidence for ExactIncidence {
    fn close(&self, gens: &[usize]) -> Option<(Vec<usize>, usize)> {
        let mut lin = ExactSpan::new();
        let mut aug = ExactSpan::new();
        for &g in gens {
            lin.insert(&self.linear[g]);
            aug.insert(&self.augmented[g]);
        }
        if aug.rank() > lin.rank() {
            return None;
        }
        let closure = (0..self.augmented.len())
            .filter(|&j| aug.contains(&self.augmented[j]))
            .collect();
        Some((closure, lin.rank()))
    }
}

struct FloatIncidence {
    dim: usize,
    rows: Vec<Vec<Complex>>,
    offsets: Vec<Complex>,
}

impl FloatIncidence {
    fn new(arr: &Arrangement) -> Self {
        let (rows, offsets) = arr.hyperplanes().iter().map(unit_row).unzip();
        Self {
            dim: arr.dim(),
            rows,
            offsets,
        }
    }

    fn solve(&self, gens: &[usize]) -> Option<linalg::AffineSolution> {
        let rows: Vec<_> = gens.iter().map(|&g| self.rows[g].clone()).collect();
        let offs: Vec<_> = gens.iter().map(|&g| self.offsets[g]).collect();
        linalg::solve_affine(&rows, &offs, self.dim, FLAT_TOLERANCE)
    }
}

impl Incidence for FloatIncidence {
    fn close(&self, gens: &[usize]) -> Option<(Vec<usize>, usize)> {
        let sol = self.solve(gens)?;
        let closure = (0..self.rows.len())
            .filter(|&j| {
                let row = &self.rows[j];
                let at_point: Complex =
                    row.iter().zip(&sol.point).map(|(a, x)| a * x).sum::<Complex>() + self.offsets[j];
                at_point.norm() < FLAT_TOLERANCE
                    && sol.basis.iter().all(|b| {
                        row.iter().zip(b).map(|(a, x)| a * x).sum::<Complex>().norm()
                            < FLAT_TOLERANCE
                    })
            })
            .collect();
        Some((closure, self.dim - sol.basis.len()))
    }
}

fn unit_row(h: &Hyperplane) -> (Vec<Complex>, Complex) {
    let s = h.linear_norm();
    (h.linear().iter().map(|a| a / s).collect(), h.offset() / s)
}

fn flat_geometry(arr: &Arrangement, gens: &[usize]) -> Subspace {
    let (rows, offs): (Vec<_>, Vec<_>) = gens
        .iter()
        .map(|&g| unit_row(&arr.hyperplanes()[g]))
        .unzip();
    // Generators of a non-empty flat are consistent by construction; loosen
    // the tolerance only to absorb rounding in nearly parallel data.
    let sol = linalg::solve_affine(&rows, &offs, arr.dim(), FLAT_TOLERANCE)
        .or_else(|| linalg::solve_affine(&rows, &offs, arr.dim(), 1e-6))
        .expect("generators of a flat have a common point");
    Subspace {
        point: sol.point,
        basis: sol.basis,
    }
}

/// Chooses exact mode when all coefficients are small-denominator rationals.
pub fn build_lattice(arr: &Arrangement) -> Result<Lattice> {
    match ExactIncidence::try_new(arr) {
        Some(oracle) => Ok(build_with(arr, &oracle, LatticeMode::Exact)),
        None => Ok(build_with(arr, &FloatIncidence::new(arr), LatticeMode::Float)),
    }
}

/// Forces a particular arithmetic mode. Exact mode falls back to float mode
/// when some coefficient has no small-denominator rational form.
pub fn build_lattice_in(arr: &Arrangement, mode: LatticeMode) -> Result<Lattice> {
    match mode {
        LatticeMode::Exact => build_lattice(arr),
        LatticeMode::Float => Ok(build_with(arr, &FloatIncidence::new(arr), LatticeMode::Float)),
    }
}

fn build_with(arr: &Arrangement, oracle: &dyn Incidence, mode: LatticeMode) -> Lattice {
    let m = arr.len();
    let mut flats: Vec<(Vec<usize>, usize, Subspace)> =
        vec![(Vec::new(), 0, flat_geometry(arr, &[]))];
    let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(Vec::new(), 0)]);
    let mut frontier = vec![0usize];

    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &f in &frontier {
            let gens = flats[f].0.clone();
            for j in (0..m).filter(|j| !gens.contains(j)) {
                let mut candidate = gens.clone();
                candidate.push(j);
                candidate.sort_unstable();
                let Some((closure, codim)) = oracle.close(&candidate) else {
                    continue;
                };
                if index.contains_key(&closure) {
                    continue;
                }
                let subspace = flat_geometry(arr, &closure);
                if mode == LatticeMode::Float {
                    // guard against tolerance-inconsistent closures
                    if let Some(k) = flats.iter().position(|(_, c, s)| {
                        *c == codim && s.approx_eq(&subspace, FLAT_TOLERANCE)
                    }) {
                        index.insert(closure, k);
                        continue;
                    }
                }
                index.insert(closure.clone(), flats.len());
                next.push(flats.len());
                flats.push((closure, codim, subspace));
            }
        }
        frontier = next;
    }

    flats.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut moebius = vec![0i64; flats.len()];
    for x in 0..flats.len() {
        moebius[x] = if x == 0 {
            1
        } else {
            -(0..x)
                .filter(|&y| flats[y].1 < flats[x].1 && is_subset(&flats[y].0, &flats[x].0))
                .map(|y| moebius[y])
                .sum::<i64>()
        };
    }
    let mut covers = Vec::new();
    for x in 0..flats.len() {
        for y in 0..flats.len() {
            if flats[x].1 + 1 == flats[y].1 && is_subset(&flats[x].0, &flats[y].0) {
                covers.push((x, y));
            }
        }
    }
    Lattice {
        dim: arr.dim(),
        hyperplane_count: m,
        mode,
        flats: flats
            .into_iter()
            .zip(moebius)
            .map(|((generators, codim, subspace), moebius)| Flat {
                generators,
                subspace,
                codim,
                moebius,
            })
            .collect(),
        covers,
    }
}

impl Lattice {
    pub fn bottom(&self) -> &Flat {
        &self.flats[0]
    }

    /// `chi(M) = sum_X mu(X)`.
    pub fn euler_characteristic(&self) -> i64 {
        self.flats.iter().map(|f| f.moebius).sum()
    }

    /// Maximal codimension of a non-empty intersection.
    pub fn rank(&self) -> usize {
        self.flats.iter().map(|f| f.codim).max().unwrap_or(0)
    }

    pub fn is_essential(&self) -> bool {
        self.rank() == self.dim
    }

    /// Whether all hyperplanes share a common point.
    pub fn is_central(&self) -> bool {
        self.flats
            .iter()
            .any(|f| f.generators.len() == self.hyperplane_count)
    }

    /// Coefficients of `sum_X |mu(X)| t^codim(X)`.
    pub fn poincare_coefficients(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.rank() + 1];
        for f in &self.flats {
            c[f.codim] += f.moebius.unsigned_abs();
        }
        c
    }

    /// The flats of dimension zero.
    pub fn vertices(&self) -> Vec<&Flat> {
        self.flats.iter().filter(|f| f.codim == self.dim).collect()
    }

    /// The smallest flat containing the intersection of `gens`, if non-empty.
    pub fn closure_of(&self, gens: &[usize]) -> Option<&Flat> {
        let mut sorted = gens.to_vec();
        sorted.sort_unstable();
        self.flats
            .iter()
            .filter(|f| is_subset(&sorted, &f.generators))
            .min_by_key(|f| f.codim)
    }

    /// Max pairwise distance between vertices, or 1 when that is degenerate.
    pub fn geometry_scale(&self) -> f64 {
        let v = self.vertices();
        let mut scale: f64 = 0.0;
        for (i, a) in v.iter().enumerate() {
            for b in &v[i + 1..] {
                scale = scale.max(linalg::norm(&linalg::sub(
                    &a.subspace.point,
                    &b.subspace.point,
                )));
            }
        }
        if scale > 0.0 {
            scale
        } else {
            1.0
        }
    }
}

pub fn euler_characteristic(lat: &Lattice) -> i64 {
    lat.euler_characteristic()
}

pub fn arrangement_rank(lat: &Lattice) -> usize {
    lat.rank()
}

/// Result of reducing an arrangement to its essential core.
#[derive(Clone, Debug)]
pub struct Essentialization {
    pub core: Arrangement,
    /// Rows `q_k` of an orthonormal basis of the span of the linear parts;
    /// core coordinates are `w_k = q_k . z`.
    pub projection: Vec<Vec<Complex>>,
    pub rank: usize,
    /// True when the input was already essential and is returned unchanged.
    pub identity: bool,
}

impl Essentialization {
    pub fn project(&self, z: &[Complex]) -> Vec<Complex> {
        self.projection
            .iter()
            .map(|q| q.iter().zip(z).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// A point of the original space projecting to `w`, orthogonal to the
    /// common direction space.
    pub fn lift(&self, w: &[Complex]) -> Vec<Complex> {
        let n = self.projection.first().map_or(0, Vec::len);
        (0..n)
            .map(|j| {
                self.projection
                    .iter()
                    .zip(w)
                    .map(|(q, x)| q[j].conj() * x)
                    .sum()
            })
            .collect()
    }
}

/// Expresses each functional in an orthonormal basis of the span of the
/// linear parts, giving an essential arrangement in `C^l`.
pub fn essentialize(arr: &Arrangement) -> Result<Essentialization> {
    let n = arr.dim();
    let m = arr.len();
    let basis: Vec<Vec<Complex>> = if arr.is_real() {
        let a = DMatrix::from_fn(m.max(n), n, |i, j| {
            arr.hyperplanes().get(i).map_or(0.0, |h| h.linear()[j].re)
        });
        row_space_basis_real(a)
    } else {
        let a = DMatrix::from_fn(m.max(n), n, |i, j| {
            arr.hyperplanes()
                .get(i)
                .map_or(Complex::new(0.0, 0.0), |h| h.linear()[j])
        });
        row_space_basis_complex(a)
    };
    let l = basis.len();
    if l == n {
        let projection = (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| Complex::new(if j == k { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        return Ok(Essentialization {
            core: arr.clone(),
            projection,
            rank: n,
            identity: true,
        });
    }
    let hyperplanes = arr
        .hyperplanes()
        .iter()
        .map(|h| {
            let coeffs = basis
                .iter()
                .map(|q| linalg::hermitian_dot(q, h.linear()))
                .collect();
            Hyperplane::new(coeffs, h.offset())
        })
        .collect();
    Ok(Essentialization {
        core: Arrangement::new(l, hyperplanes)?,
        projection: basis,
        rank: l,
        identity: false,
    })
}

fn row_space_basis_real(a: DMatrix<f64>) -> Vec<Vec<Complex>> {
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > FLAT_TOLERANCE * smax)
        .map(|k| v_t.row(k).iter().map(|&x| Complex::new(x, 0.0)).collect())
        .collect()
}

fn row_space_basis_complex(a: DMatrix<Complex>) -> Vec<Vec<Complex>> {
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > FLAT_TOLERANCE * smax)
        .map(|k| v_t.row(k).iter().copied().collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(dim: usize, r: &[&[f64]]) -> Arrangement {
        Arrangement::from_real_rows(dim, &r.iter().map(|x| x.to_vec()).collect::<Vec<_>>())
            .unwrap()
    }

    fn moebius_by_codim(lat: &Lattice) -> Vec<(usize, i64)> {
        lat.flats.iter().map(|f| (f.codim, f.moebius)).collect()
    }

    #[test]
    fn two_points() {
        let lat = build_lattice(&rows(1, &[&[1.0, 0.0], &[1.0, -1.0]])).unwrap();
        assert_eq!(lat.mode, LatticeMode::Exact);
        assert_eq!(moebius_by_codim(&lat), vec![(0, 1), (1, -1), (1, -1)]);
        assert_eq!(lat.euler_characteristic(), -1);
        assert_eq!(lat.rank(), 1);
        assert!(lat.is_essential());
        assert!((lat.flats[2].subspace.point[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concurrent_lines() {
        let lat = build_lattice(&rows(
            2,
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[1.0, 1.0, 0.0]],
        ))
        .unwrap();
        assert_eq!(
            moebius_by_codim(&lat),
            vec![(0, 1), (1, -1), (1, -1), (1, -1), (2, 2)]
        );
        assert_eq!(lat.euler_characteristic(), 0);
        assert!(lat.is_central());
        assert_eq!(lat.covers.len(), 6);
    }

    #[test]
    fn parallel_lines_do_not_meet() {
        let lat = build_lattice(&rows(
            2,
            &[&[1.0, 0.0, 0.0], &[1.0, 0.0, -1.0], &[0.0, 1.0, 0.0]],
        ))
        .unwrap();
        // bottom, 3 lines, 2 points
        assert_eq!(lat.flats.len(), 6);
        assert_eq!(lat.euler_characteristic(), 1 - 3 + 2);
        assert!(!lat.is_central());
    }

    #[test]
    fn braid_rank_two() {
        let lat = build_lattice(&rows(
            3,
            &[&[1.0, -1.0, 0.0, 0.0], &[0.0, 1.0, -1.0, 0.0], &[1.0, 0.0, -1.0, 0.0]],
        ))
        .unwrap();
        assert_eq!(lat.rank(), 2);
        assert!(!lat.is_essential());
        let top = lat.flats.last().unwrap();
        assert_eq!(top.generators, vec![0, 1, 2]);
        assert_eq!(top.subspace.dim(), 1);
    }

    #[test]
    fn float_and_exact_agree_on_irrational_input() {
        let s = std::f64::consts::SQRT_2;
        let arr = rows(
            2,
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[s, s, -s], &[1.0, -s, 0.5]],
        );
        let lat = build_lattice(&arr).unwrap();
        assert_eq!(lat.mode, LatticeMode::Float);
        let exact_shape = build_lattice(&rows(
            2,
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[1.0, 1.0, -1.0], &[1.0, -1.5, 0.5]],
        ))
        .unwrap();
        assert_eq!(lat.euler_characteristic(), exact_shape.euler_characteristic());
    }

    #[test]
    fn essentialize_braid() {
        let arr = rows(
            3,
            &[&[1.0, -1.0, 0.0, 0.0], &[0.0, 1.0, -1.0, 0.0], &[1.0, 0.0, -1.0, 0.0]],
        );
        let ess = essentialize(&arr).unwrap();
        assert_eq!(ess.rank, 2);
        assert_eq!(ess.core.dim(), 2);
        assert_eq!(ess.core.len(), 3);
        let core = build_lattice(&ess.core).unwrap();
        assert!(core.is_essential());
        let orig = build_lattice(&arr).unwrap();
        assert_eq!(core.euler_characteristic(), orig.euler_characteristic());
        // xi_i(z) = xi_i^core(project(z))
        let z = [Complex::new(0.3, 1.0), Complex::new(-2.0, 0.1), Complex::new(0.7, 0.7)];
        let w = ess.project(&z);
        for (h, hc) in arr.hyperplanes().iter().zip(ess.core.hyperplanes()) {
            assert!((h.eval(&z) - hc.eval(&w)).norm() < 1e-12);
        }
        assert!((linalg::norm(&linalg::sub(&ess.project(&ess.lift(&w)), &w))) < 1e-12);
    }

    #[test]
    fn essentialize_identity_and_single_hyperplane() {
        let arr = rows(1, &[&[1.0, 0.0], &[1.0, -1.0]]);
        let ess = essentialize(&arr).unwrap();
        assert!(ess.identity);
        assert_eq!(ess.core, arr);

        let single = rows(2, &[&[1.0, 2.0, -1.0]]);
        let ess = essentialize(&single).unwrap();
        assert_eq!(ess.core.dim(), 1);
        let lat = build_lattice(&ess.core).unwrap();
        assert_eq!(lat.flats.len(), 2);
        assert_eq!(lat.euler_characteristic(), 0);
    }

    #[test]
    fn closure_lookup() {
        let lat = build_lattice(&rows(
            2,
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[1.0, 0.0, -1.0]],
        ))
        .unwrap();
        assert_eq!(lat.closure_of(&[0, 1]).unwrap().generators, vec![0, 1, 2]);
        assert!(lat.closure_of(&[0, 3]).is_none());
        assert_eq!(lat.closure_of(&[]).unwrap().codim, 0);
    }
}

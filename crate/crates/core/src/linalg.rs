//! Small dense linear-algebra helpers shared by the lattice, the solver and
//! the Aomoto complex.

use nalgebra::{DMatrix, DVector};
use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};

use crate::Complex;

pub type GaussianRational = num::Complex<BigRational>;

/// Largest denominator accepted when recovering a rational from a float.
const MAX_DENOMINATOR: i64 = 1_000_000;

/// Recovers a small-denominator rational that rounds to `x`, if one exists.
///
/// Uses the continued-fraction expansion of `x` and accepts the first
/// convergent within a few ulps of `x`.
pub fn rational_approx(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some(BigRational::zero());
    }
    let tol = 4.0 * f64::EPSILON * x.abs();
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > MAX_DENOMINATOR as i128 {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if ((h1 as f64) / (k1 as f64) - x).abs() <= tol {
            return Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

pub fn gaussian_approx(z: Complex) -> Option<GaussianRational> {
    Some(GaussianRational::new(
        rational_approx(z.re)?,
        rational_approx(z.im)?,
    ))
}

/// Row-echelon span over the Gaussian rationals.
#[derive(Clone, Debug, Default)]
pub struct ExactSpan {
    /// Echelon rows, each normalized to have 1 at its pivot.
    rows: Vec<(usize, Vec<GaussianRational>)>,
}

impl ExactSpan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, row: &[GaussianRational]) -> Vec<GaussianRational> {
        let mut r = row.to_vec();
        for (pivot, basis) in &self.rows {
            if r[*pivot].is_zero() {
                continue;
            }
            let factor = r[*pivot].clone();
            for (x, b) in r.iter_mut().zip(basis) {
                if !b.is_zero() {
                    *x = x.clone() - factor.clone() * b.clone();
                }
            }
        }
        r
    }

    pub fn contains(&self, row: &[GaussianRational]) -> bool {
        self.reduce(row).iter().all(Zero::is_zero)
    }

    /// Adds `row`; returns false when it was already in the span.
    pub fn insert(&mut self, row: &[GaussianRational]) -> bool {
        let r = self.reduce(row);
        let Some(pivot) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = GaussianRational::new(
            BigRational::from_integer(1.into()),
            BigRational::zero(),
        ) / r[pivot].clone();
        let r: Vec<_> = r.into_iter().map(|x| x * inv.clone()).collect();
        // keep earlier rows reduced against the new pivot
        for (_, basis) in self.rows.iter_mut() {
            if basis[pivot].is_zero() {
                continue;
            }
            let factor = basis[pivot].clone();
            for (x, b) in basis.iter_mut().zip(&r) {
                *x = x.clone() - factor.clone() * b.clone();
            }
        }
        self.rows.push((pivot, r));
        true
    }
}

/// Exact rank of a rational matrix given as rows.
pub fn rational_rank(rows: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][col].clone();
        for r in rank + 1..m.len() {
            if m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone() / pivot.clone();
            for c in col..ncols {
                let v = m[rank][c].clone() * f.clone();
                m[r][c] = m[r][c].clone() - v;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Numerical rank with threshold `rel_tol * sigma_max`.
pub fn float_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Solution set of the affine system `A z + c = 0` over `C^n`.
#[derive(Clone, Debug)]
pub struct AffineSolution {
    /// Minimum-norm particular solution.
    pub point: Vec<Complex>,
    /// Orthonormal basis of the kernel of `A`.
    pub basis: Vec<Vec<Complex>>,
    pub rank: usize,
}

/// Solves `rows * z + offsets = 0` with SVD, treating singular values below
/// `tol` (rows assumed unit-normalized) as zero. Returns `None` when the
/// system is inconsistent.
pub fn solve_affine(
    rows: &[Vec<Complex>],
    offsets: &[Complex],
    n: usize,
    tol: f64,
) -> Option<AffineSolution> {
    if rows.is_empty() {
        return Some(AffineSolution {
            point: vec![Complex::zero(); n],
            basis: (0..n)
                .map(|k| {
                    let mut e = vec![Complex::zero(); n];
                    e[k] = Complex::new(1.0, 0.0);
                    e
                })
                .collect(),
            rank: 0,
        });
    }
    // pad to at least n rows so the SVD yields a full V
    let nrows = rows.len().max(n);
    let a = DMatrix::from_fn(nrows, n, |i, j| {
        rows.get(i).map_or(Complex::zero(), |r| r[j])
    });
    let b = DVector::from_fn(nrows, |i, _| offsets.get(i).map_or(Complex::zero(), |c| -c));
    let svd = a.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd.solve(&b, tol).ok()?;
    let residual = (&a * &x - &b).norm();
    if residual > tol * (1.0 + b.norm()) {
        return None;
    }
    // order singular values decreasingly; kernel vectors are the trailing ones
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let basis = order[rank..]
        .iter()
        .map(|&k| v_t.row(k).iter().map(|x| x.conj()).collect())
        .collect();
    Some(AffineSolution {
        point: x.iter().copied().collect(),
        basis,
        rank,
    })
}

pub fn hermitian_dot(u: &[Complex], v: &[Complex]) -> Complex {
    u.iter().zip(v).map(|(x, y)| x.conj() * y).sum()
}

/// Real inner product of two vectors of `C^n = R^{2n}`.
pub fn real_dot(u: &[Complex], v: &[Complex]) -> f64 {
    hermitian_dot(u, v).re
}

pub fn norm(v: &[Complex]) -> f64 {
    crate::arrangement::norm(v)
}

pub fn sub(u: &[Complex], v: &[Complex]) -> Vec<Complex> {
    u.iter().zip(v).map(|(x, y)| x - y).collect()
}

pub fn add_scaled(u: &[Complex], s: f64, v: &[Complex]) -> Vec<Complex> {
    u.iter().zip(v).map(|(x, y)| x + y * s).collect()
}

/// Distance from `z` to the affine subspace `point + span(basis)`, the basis
/// being orthonormal.
pub fn distance_to_subspace(z: &[Complex], point: &[Complex], basis: &[Vec<Complex>]) -> f64 {
    let mut d = sub(z, point);
    for b in basis {
        let c = hermitian_dot(b, &d);
        for (x, y) in d.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
    norm(&d)
}

pub fn ratio_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

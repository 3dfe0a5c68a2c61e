//! Orlik-Solomon algebra in the no-broken-circuit basis and the Aomoto
//! complex `(A, a ^ .)`.
//!
//! Hyperplanes are ordered by input position. A set is independent when its
//! intersection is non-empty of codimension equal to its size; `e_S = 0` for
//! every other set. Non-basis monomials are rewritten with the relation
//! `d e_C = 0` on circuits `C`, which trades an element of `C` for `min C`
//! and so terminates.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num::{BigInt, BigRational, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arrangement::{Arrangement, Weights};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeMode};
use crate::linalg;

/// Relative singular-value threshold for float ranks.
pub const FLOAT_RANK_TOLERANCE: f64 = 1e-10;

type Combination = BTreeMap<usize, i64>;

#[derive(Clone, Debug, Serialize)]
pub struct OSAlgebra {
    pub hyperplane_count: usize,
    /// Basis monomials per degree as sorted index tuples.
    pub nbc_basis: Vec<Vec<Vec<usize>>>,
    pub dims: Vec<usize>,
    /// `mult[p][i]`: sparse integer matrix of `e_i ^ .` from degree `p` to
    /// `p + 1`, as `(row, col, value)`.
    #[serde(skip)]
    mult: Vec<Vec<Vec<(usize, usize, i64)>>>,
}

struct Reducer<'a> {
    lat: &'a Lattice,
    index: Vec<HashMap<Vec<usize>, usize>>,
    memo: HashMap<Vec<usize>, Combination>,
}

/// Sign of the shuffle sorting the concatenation `a ++ b`, with the merged
/// set, or `None` when they overlap.
fn wedge(a: &[usize], b: &[usize]) -> Option<(i64, Vec<usize>)> {
    let mut inversions = 0usize;
    for x in a {
        for y in b {
            if x == y {
                return None;
            }
            if x > y {
                inversions += 1;
            }
        }
    }
    let mut merged: Vec<usize> = a.iter().chain(b).copied().collect();
    merged.sort_unstable();
    Some((if inversions.is_multiple_of(2) { 1 } else { -1 }, merged))
}

impl Reducer<'_> {
    /// Closure generators and codimension of `set`, or `None` when its
    /// intersection is empty.
    fn closure(&self, set: &[usize]) -> Option<(&[usize], usize)> {
        if set.is_empty() {
            let b = self.lat.bottom();
            return Some((&b.generators, 0));
        }
        self.lat
            .closure_of(set)
            .map(|f| (f.generators.as_slice(), f.codim))
    }

    fn independent(&self, set: &[usize]) -> bool {
        self.closure(set).is_some_and(|(_, c)| c == set.len())
    }

    /// A hyperplane `j < s_k` lying in the closure of the tail `s_k..`, with `k`.
    fn broken_tail(&self, set: &[usize]) -> Option<(usize, usize)> {
        for k in 0..set.len() {
            let (gens, _) = self.closure(&set[k..])?;
            if let Some(&j) = gens.iter().find(|&&j| j < set[k]) {
                return Some((k, j));
            }
        }
        None
    }

    fn reduce(&mut self, set: &[usize]) -> Combination {
        let p = set.len();
        if let Some(&i) = self.index.get(p).and_then(|m| m.get(set)) {
            return Combination::from([(i, 1)]);
        }
        if let Some(c) = self.memo.get(set) {
            return c.clone();
        }
        let out = if !self.independent(set) {
            Combination::new()
        } else {
            let (k, j) = self
                .broken_tail(set)
                .expect("an independent set outside the basis contains a broken circuit");
            // shrink the tail to a minimal T with j in cl(T); {j} + T is a circuit
            let mut t: Vec<usize> = set[k..].to_vec();
            let mut idx = 0;
            while idx < t.len() {
                let mut smaller = t.clone();
                smaller.remove(idx);
                let keeps = !smaller.is_empty()
                    && self.closure(&smaller).is_some_and(|(g, _)| g.contains(&j));
                if keeps {
                    t = smaller;
                } else {
                    idx += 1;
                }
            }
            let rest: Vec<usize> = set.iter().copied().filter(|x| !t.contains(x)).collect();
            // e_set = sigma e_T ^ e_rest, and with C = (j, t_1, ..., t_q),
            // e_T = sum_{k>=1} (-1)^(k+1) e_{C \ c_k}
            let (sigma, _) = wedge(&t, &rest).expect("disjoint");
            let mut acc = Combination::new();
            for (pos, &drop) in t.iter().enumerate() {
                let sign = if pos % 2 == 0 { 1 } else { -1 };
                let mut term: Vec<usize> = std::iter::once(j)
                    .chain(t.iter().copied().filter(|&x| x != drop))
                    .collect();
                term.sort_unstable();
                let Some((s2, merged)) = wedge(&term, &rest) else { continue };
                for (b, v) in self.reduce(&merged) {
                    *acc.entry(b).or_insert(0) += sigma * sign * s2 * v;
                }
            }
            acc.retain(|_, v| *v != 0);
            acc
        };
        self.memo.insert(set.to_vec(), out.clone());
        out
    }
}

/// Builds the no-broken-circuit basis and the integer multiplication tables.
pub fn build_os_algebra(arr: &Arrangement, lat: &Lattice) -> OSAlgebra {
    let m = arr.len();
    let mut red = Reducer {
        lat,
        index: Vec::new(),
        memo: HashMap::new(),
    };
    // S is a basis monomial iff {j} + T is for T = S minus its minimum j and
    // j is the smallest hyperplane containing the intersection of S
    let mut basis: Vec<Vec<Vec<usize>>> = vec![vec![vec![]]];
    loop {
        let prev = basis.last().expect("degree zero present");
        let mut next = Vec::new();
        for t in prev {
            let top = t.first().copied().unwrap_or(m);
            for j in 0..top {
                let mut s = vec![j];
                s.extend_from_slice(t);
                if let Some((gens, codim)) = red.closure(&s) {
                    if codim == s.len() && gens[0] == j {
                        next.push(s);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        basis.push(next);
    }
    red.index = basis
        .iter()
        .map(|deg| deg.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
        .collect();

    let mut mult = Vec::new();
    for p in 0..basis.len().saturating_sub(1) {
        let mut per_h = Vec::with_capacity(m);
        for i in 0..m {
            let mut entries = Vec::new();
            for (col, s) in basis[p].iter().enumerate() {
                let Some((sign, merged)) = wedge(&[i], s) else { continue };
                for (row, v) in red.reduce(&merged) {
                    entries.push((row, col, sign * v));
                }
            }
            per_h.push(entries);
        }
        mult.push(per_h);
    }
    OSAlgebra {
        hyperplane_count: m,
        dims: basis.iter().map(Vec::len).collect(),
        nbc_basis: basis,
        mult,
    }
}

impl OSAlgebra {
    /// Top degree, equal to the rank of the arrangement.
    pub fn top_degree(&self) -> usize {
        self.dims.len() - 1
    }

    /// `sum_j (-1)^j b_j`.
    pub fn euler_characteristic(&self) -> i64 {
        self.dims
            .iter()
            .enumerate()
            .map(|(j, &b)| if j % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AomotoComplex {
    pub weight_class: Vec<f64>,
    pub mode: LatticeMode,
    /// `d_p : A^p -> A^(p+1)`, multiplication by `a`, as `b_(p+1) x b_p`.
    #[serde(serialize_with = "matrices_as_rows")]
    pub boundary_matrices: Vec<DMatrix<f64>>,
    pub boundary_ranks: Vec<usize>,
    pub cohomology_ranks: Vec<usize>,
    /// Largest entry of `d_(p+1) d_p`; zero in exact mode.
    pub d_squared_max: f64,
}

impl AomotoComplex {
    pub fn euler_characteristic(&self) -> i64 {
        self.cohomology_ranks
            .iter()
            .enumerate()
            .map(|(j, &h)| if j % 2 == 0 { h as i64 } else { -(h as i64) })
            .sum()
    }

    pub fn d_squared_vanishes(&self) -> bool {
        match self.mode {
            LatticeMode::Exact => self.d_squared_max == 0.0,
            LatticeMode::Float => self.d_squared_max < FLOAT_RANK_TOLERANCE,
        }
    }
}

fn matrices_as_rows<S: serde::Serializer>(mats: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(mats.len()))?;
    for m in mats {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        seq.serialize_element(&rows)?;
    }
    seq.end()
}

fn exact_matrix(
    tables: &[Vec<(usize, usize, i64)>],
    a: &[BigRational],
    rows: usize,
    cols: usize,
) -> Vec<Vec<BigRational>> {
    let mut m = vec![vec![BigRational::zero(); cols]; rows];
    for (entries, ai) in tables.iter().zip(a) {
        if ai.is_zero() {
            continue;
        }
        for &(r, c, v) in entries {
            m[r][c] += ai * BigRational::from_integer(BigInt::from(v));
        }
    }
    m
}

fn exact_product(x: &[Vec<BigRational>], y: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let inner = y.len();
    let cols = y.first().map_or(0, Vec::len);
    x.iter()
        .map(|row| {
            (0..cols)
                .map(|c| {
                    (0..inner).fold(BigRational::zero(), |acc, k| acc + &row[k] * &y[k][c])
                })
                .collect()
        })
        .collect()
}

/// Cohomology of the Aomoto complex for the class `a = sum a_i e_i`.
///
/// Ranks are exact over the rationals when every `a_i` is an exact weight and
/// come from a singular-value threshold otherwise.
pub fn aomoto_cohomology(os: &OSAlgebra, a: &Weights) -> Result<AomotoComplex> {
    if a.len() != os.hyperplane_count {
        return Err(Error::LengthMismatch {
            expected: os.hyperplane_count,
            got: a.len(),
        });
    }
    let dims = &os.dims;
    let degrees = os.mult.len();
    let exact = a.exact();
    let af = a.as_f64();
    let float_mats: Vec<DMatrix<f64>> = (0..degrees)
        .map(|p| {
            let mut m = DMatrix::zeros(dims[p + 1], dims[p]);
            for (entries, ai) in os.mult[p].iter().zip(af) {
                for &(r, c, v) in entries {
                    m[(r, c)] += ai * v as f64;
                }
            }
            m
        })
        .collect();

    let (mode, ranks, d2) = match &exact {
        Some(q) => {
            let mats: Vec<Vec<Vec<BigRational>>> = (0..degrees)
                .into_par_iter()
                .map(|p| exact_matrix(&os.mult[p], q, dims[p + 1], dims[p]))
                .collect();
            let ranks: Vec<usize> = mats.par_iter().map(|m| linalg::rational_rank(m)).collect();
            let mut d2: f64 = 0.0;
            for p in 0..degrees.saturating_sub(1) {
                for row in exact_product(&mats[p + 1], &mats[p]) {
                    for v in row {
                        d2 = d2.max(v.to_f64().map_or(f64::INFINITY, f64::abs));
                    }
                }
            }
            (LatticeMode::Exact, ranks, d2)
        }
        None => {
            let ranks: Vec<usize> = float_mats
                .par_iter()
                .map(|m| linalg::float_rank(m, FLOAT_RANK_TOLERANCE))
                .collect();
            let mut d2: f64 = 0.0;
            for p in 0..degrees.saturating_sub(1) {
                let prod = &float_mats[p + 1] * &float_mats[p];
                d2 = d2.max(prod.amax());
            }
            (LatticeMode::Float, ranks, d2)
        }
    };
    let cohomology_ranks = (0..dims.len())
        .map(|p| {
            let out = if p < degrees { ranks[p] } else { 0 };
            let inc = if p > 0 { ranks[p - 1] } else { 0 };
            dims[p] - out - inc
        })
        .collect();
    Ok(AomotoComplex {
        weight_class: af.to_vec(),
        mode,
        boundary_matrices: float_mats,
        boundary_ranks: ranks,
        cohomology_ranks,
        d_squared_max: d2,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeVerdict {
    pub degree: usize,
    pub cohomology_rank: usize,
    pub vanishes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub chi: i64,
    pub mode: LatticeMode,
    pub cohomology_ranks: Vec<usize>,
    /// Degrees below the rank.
    pub verdicts: Vec<DegreeVerdict>,
    pub top_rank: usize,
    pub top_rank_matches_chi: bool,
    pub nonresonant: bool,
    pub d_squared_zero: bool,
    pub positive_weights: bool,
}

/// Checks that the Aomoto cohomology of `alpha` vanishes below the rank and
/// that the top-degree rank is `|chi(M)|`. Failures are reported, not raised.
pub fn check_nonresonance(arr: &Arrangement, lat: &Lattice, w: &Weights) -> Result<ResonanceReport> {
    arr.check_weights(w)?;
    let os = build_os_algebra(arr, lat);
    let cx = aomoto_cohomology(&os, w)?;
    let rank = os.top_degree();
    let chi = lat.euler_characteristic();
    let verdicts: Vec<DegreeVerdict> = (0..rank)
        .map(|d| DegreeVerdict {
            degree: d,
            cohomology_rank: cx.cohomology_ranks[d],
            vanishes: cx.cohomology_ranks[d] == 0,
        })
        .collect();
    let top_rank = cx.cohomology_ranks[rank];
    Ok(ResonanceReport {
        dims: os.dims.clone(),
        rank,
        chi,
        mode: cx.mode,
        nonresonant: verdicts.iter().all(|v| v.vanishes),
        top_rank_matches_chi: top_rank as i64 == chi.abs(),
        top_rank,
        verdicts,
        d_squared_zero: cx.d_squared_vanishes(),
        positive_weights: w.is_positive(),
        cohomology_ranks: cx.cohomology_ranks,
    })
}

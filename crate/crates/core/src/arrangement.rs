//! Arrangements of affine hyperplanes in `C^n` together with their weights.
//!
//! A hyperplane is the zero set of an affine functional `xi(z) = a . z + c`
//! (bilinear product, no conjugation). The arrangement owns the functionals;
//! the weight vector `alpha` is carried separately because most analytic
//! routines take it as an independent parameter.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex;

/// Below this modulus a point is treated as lying on a hyperplane.
pub const ON_HYPERPLANE_THRESHOLD: f64 = 1e-300;

/// Tolerance on the normalized (a, c) rows for declaring two hyperplanes equal.
const DUPLICATE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    linear: Vec<Complex>,
    offset: Complex,
}

impl Hyperplane {
    pub fn new(linear: Vec<Complex>, offset: Complex) -> Self {
        Self { linear, offset }
    }

    /// Hyperplane with real coefficients.
    pub fn real(linear: &[f64], offset: f64) -> Self {
        Self {
            linear: linear.iter().map(|&x| Complex::new(x, 0.0)).collect(),
            offset: Complex::new(offset, 0.0),
        }
    }

    pub fn linear(&self) -> &[Complex] {
        &self.linear
    }

    pub fn offset(&self) -> Complex {
        self.offset
    }

    pub fn linear_norm(&self) -> f64 {
        norm(&self.linear)
    }

    pub fn eval(&self, z: &[Complex]) -> Complex {
        self.linear
            .iter()
            .zip(z)
            .fold(self.offset, |acc, (a, x)| acc + a * x)
    }

    /// Euclidean distance from `z` to the zero set.
    pub fn distance(&self, z: &[Complex]) -> f64 {
        self.eval(z).norm() / self.linear_norm()
    }

    pub fn is_real(&self) -> bool {
        self.offset.im == 0.0 && self.linear.iter().all(|a| a.im == 0.0)
    }

    fn augmented_unit_row(&self) -> Vec<Complex> {
        let mut row = self.linear.clone();
        row.push(self.offset);
        let s = norm(&row);
        row.iter_mut().for_each(|x| *x /= s);
        row
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arrangement {
    dim: usize,
    hyperplanes: Vec<Hyperplane>,
}

impl Arrangement {
    /// Validates dimensions, non-constant functionals and distinct zero sets.
    pub fn new(dim: usize, hyperplanes: Vec<Hyperplane>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if hyperplanes.is_empty() {
            return Err(Error::NoHyperplanes);
        }
        for (i, h) in hyperplanes.iter().enumerate() {
            if h.linear.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.linear.len(),
                });
            }
            if h.linear.iter().all(|a| a.is_zero()) {
                return Err(Error::ZeroLinearPart(i));
            }
        }
        let rows: Vec<_> = hyperplanes.iter().map(Hyperplane::augmented_unit_row).collect();
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                if proportional(&rows[i], &rows[j]) {
                    return Err(Error::DuplicateHyperplane(i, j));
                }
            }
        }
        Ok(Self { dim, hyperplanes })
    }

    /// Convenience constructor for arrangements with real coefficients,
    /// each row being `[a_1, ..., a_n, c]`.
    pub fn from_real_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let hyperplanes = rows
            .iter()
            .map(|r| {
                if r.len() != dim + 1 {
                    return Err(Error::DimensionMismatch {
                        expected: dim + 1,
                        got: r.len(),
                    });
                }
                Ok(Hyperplane::real(&r[..dim], r[dim]))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, hyperplanes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.hyperplanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyperplanes.is_empty()
    }

    pub fn hyperplanes(&self) -> &[Hyperplane] {
        &self.hyperplanes
    }

    pub fn hyperplane(&self, i: usize) -> Result<&Hyperplane> {
        self.hyperplanes.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.len(),
        })
    }

    pub fn is_real(&self) -> bool {
        self.hyperplanes.iter().all(Hyperplane::is_real)
    }

    pub fn check_point(&self, z: &[Complex]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        Ok(())
    }

    /// `xi_i(z)` with a zero-based index.
    pub fn evaluate_xi(&self, i: usize, z: &[Complex]) -> Result<Complex> {
        let h = self.hyperplane(i)?;
        self.check_point(z)?;
        Ok(h.eval(z))
    }

    /// All values `xi_i(z)`, failing if `z` lies on the arrangement.
    pub fn xi_values(&self, z: &[Complex]) -> Result<Vec<Complex>> {
        self.check_point(z)?;
        self.hyperplanes
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let v = h.eval(z);
                if v.norm() < ON_HYPERPLANE_THRESHOLD {
                    Err(Error::PointOnArrangement {
                        hyperplane: i,
                        modulus: v.norm(),
                    })
                } else {
                    Ok(v)
                }
            })
            .collect()
    }

    /// `log f_alpha(z) = sum_i alpha_i log |xi_i(z)|`.
    pub fn log_f_alpha(&self, w: &Weights, z: &[Complex]) -> Result<f64> {
        self.check_weights(w)?;
        let xi = self.xi_values(z)?;
        Ok(xi
            .iter()
            .zip(w.as_f64())
            .map(|(x, a)| a * x.norm().ln())
            .sum())
    }

    pub fn check_weights(&self, w: &Weights) -> Result<()> {
        if w.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: w.len(),
            });
        }
        Ok(())
    }

    /// Smallest distance from `z` to any hyperplane.
    pub fn distance_to_arrangement(&self, z: &[Complex]) -> f64 {
        self.hyperplanes
            .iter()
            .map(|h| h.distance(z))
            .fold(f64::INFINITY, f64::min)
    }

    /// The arrangement formed by the hyperplanes at `indices`, in that order.
    pub fn subarrangement(&self, indices: &[usize]) -> Result<Self> {
        let hyperplanes = indices
            .iter()
            .map(|&i| self.hyperplane(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim, hyperplanes)
    }
}

fn proportional(u: &[Complex], v: &[Complex]) -> bool {
    // u, v are unit vectors; remove the component of v along u.
    let inner: Complex = u.iter().zip(v).map(|(x, y)| x.conj() * y).sum();
    let residual: f64 = u
        .iter()
        .zip(v)
        .map(|(x, y)| (y - inner * x).norm_sqr())
        .sum::<f64>()
        .sqrt();
    residual < DUPLICATE_TOLERANCE
}

pub(crate) fn norm(v: &[Complex]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// A single weight, exact when it was given as a rational.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    Exact(BigRational),
    Float(f64),
}

impl Weight {
    pub fn to_f64(&self) -> f64 {
        match self {
            Weight::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Weight::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Weight::Exact(q) => Some(q),
            Weight::Float(_) => None,
        }
    }

    pub fn integer(n: i64) -> Self {
        Weight::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Weight::Exact(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }
}

impl FromStr for Weight {
    type Err = Error;

    /// Accepts `"p"`, `"p/q"` and finite decimals such as `"-0.25"`, all exact.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadWeight(s.to_string());
        let t = s.trim();
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            return Ok(Weight::Exact(BigRational::new(p, q)));
        }
        if let Some((int, frac)) = t.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = int.starts_with('-');
            let int_part: BigInt = match int {
                "" | "-" | "+" => BigInt::zero(),
                _ => int.parse().map_err(|_| bad())?,
            };
            let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
            let scale = num::pow(BigInt::from(10), frac.len());
            let mut q = BigRational::new(frac_part, scale);
            if negative {
                q = -q;
            }
            return Ok(Weight::Exact(BigRational::from_integer(int_part) + q));
        }
        let p: BigInt = t.parse().map_err(|_| bad())?;
        Ok(Weight::Exact(BigRational::from_integer(p)))
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Exact(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Weight::Exact(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Weight::Float(x) => write!(f, "{x}"),
        }
    }
}

/// The weight vector `alpha`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    values: Vec<Weight>,
    floats: Vec<f64>,
}

impl Weights {
    pub fn new(values: Vec<Weight>) -> Self {
        let floats = values.iter().map(Weight::to_f64).collect();
        Self { values, floats }
    }

    pub fn from_f64(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&x| Weight::Float(x)).collect())
    }

    pub fn from_integers(values: &[i64]) -> Self {
        Self::new(values.iter().map(|&x| Weight::integer(x)).collect())
    }

    /// All-ones weights of length `m`.
    pub fn ones(m: usize) -> Self {
        Self::new(vec![Weight::integer(1); m])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Weight] {
        &self.values
    }

    pub fn as_f64(&self) -> &[f64] {
        &self.floats
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|w| match w {
            Weight::Exact(q) => q.is_positive(),
            Weight::Float(x) => *x > 0.0,
        })
    }

    /// Exact values when every weight is rational.
    pub fn exact(&self) -> Option<Vec<BigRational>> {
        self.values.iter().map(|w| w.exact().cloned()).collect()
    }

    pub fn sum(&self) -> f64 {
        self.floats.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.floats.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn min(&self) -> f64 {
        self.floats.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max_i |alpha_i - beta_i|`.
    pub fn max_abs_diff(&self, other: &Weights) -> f64 {
        self.floats
            .iter()
            .zip(other.as_f64())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sub(&self, indices: &[usize]) -> Weights {
        Weights::new(indices.iter().map(|&i| self.values[i].clone()).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct RawFile {
    ambient_dim: usize,
    hyperplanes: Vec<RawHyperplane>,
    weights: Vec<RawWeight>,
}

#[derive(Serialize, Deserialize)]
struct RawHyperplane {
    a: Vec<[f64; 2]>,
    c: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawWeight {
    Text(String),
    Number(f64),
}

/// Reads the JSON arrangement file format.
pub fn parse_arrangement(text: &[u8]) -> Result<(Arrangement, Weights)> {
    let raw: RawFile = serde_json::from_slice(text)?;
    let hyperplanes = raw
        .hyperplanes
        .into_iter()
        .map(|h| {
            Hyperplane::new(
                h.a.iter().map(|p| Complex::new(p[0], p[1])).collect(),
                Complex::new(h.c[0], h.c[1]),
            )
        })
        .collect();
    let arr = Arrangement::new(raw.ambient_dim, hyperplanes)?;
    let weights = raw
        .weights
        .into_iter()
        .map(|w| match w {
            RawWeight::Text(s) => s.parse(),
            RawWeight::Number(x) if x.is_finite() => Ok(Weight::Float(x)),
            RawWeight::Number(x) => Err(Error::BadWeight(x.to_string())),
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = Weights::new(weights);
    arr.check_weights(&weights)?;
    Ok((arr, weights))
}

/// Canonical JSON form; `parse_arrangement` inverts it.
pub fn serialize_arrangement(arr: &Arrangement, w: &Weights) -> String {
    let raw = RawFile {
        ambient_dim: arr.dim,
        hyperplanes: arr
            .hyperplanes
            .iter()
            .map(|h| RawHyperplane {
                a: h.linear.iter().map(|x| [x.re, x.im]).collect(),
                c: [h.offset.re, h.offset.im],
            })
            .collect(),
        weights: w
            .values
            .iter()
            .map(|v| match v {
                Weight::Exact(_) => RawWeight::Text(v.to_string()),
                Weight::Float(x) => RawWeight::Number(*x),
            })
            .collect(),
    };
    serde_json::to_string(&raw).expect("arrangement serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn two_points() -> Arrangement {
        Arrangement::from_real_rows(1, &[vec![1.0, 0.0], vec![1.0, -1.0]]).unwrap()
    }

    const TWO_POINTS: &str = r#"{"ambient_dim":1,"hyperplanes":[{"a":[[1.0,0.0]],"c":[0.0,0.0]},{"a":[[1.0,0.0]],"c":[-1.0,0.0]}],"weights":["1","1"]}"#;

    #[test]
    fn evaluate_xi_examples() {
        let arr = Arrangement::from_real_rows(1, &[vec![1.0, -1.0]]).unwrap();
        assert_eq!(arr.evaluate_xi(0, &[c(1.0, 0.0)]).unwrap(), c(0.0, 0.0));

        let arr = Arrangement::from_real_rows(2, &[vec![1.0, 1.0, 0.0]]).unwrap();
        let v = arr.evaluate_xi(0, &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(v, c(1.0, 1.0));

        let arr = Arrangement::from_real_rows(1, &[vec![2.0, 3.0]]).unwrap();
        assert_eq!(arr.evaluate_xi(0, &[c(-1.5, 0.0)]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn evaluate_xi_errors() {
        let arr = two_points();
        assert!(matches!(
            arr.evaluate_xi(2, &[c(0.5, 0.0)]),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
        assert!(matches!(
            arr.evaluate_xi(0, &[c(0.5, 0.0), c(0.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn log_f_alpha_examples() {
        let arr = two_points();
        let v = arr.log_f_alpha(&Weights::ones(2), &[c(0.5, 0.0)]).unwrap();
        assert!((v - 0.25f64.ln()).abs() < 1e-15);

        // |z| = |z - 1| = 1 at the sixth root of unity.
        let z = c(0.5, 3f64.sqrt() / 2.0);
        assert!(arr.log_f_alpha(&Weights::ones(2), &[z]).unwrap().abs() < 1e-15);

        let single = Arrangement::from_real_rows(1, &[vec![1.0, 0.0]]).unwrap();
        let v = single
            .log_f_alpha(&Weights::from_integers(&[2]), &[c(3.0, 0.0)])
            .unwrap();
        assert!((v - 2.0 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_f_alpha_rejects_points_on_h() {
        let arr = two_points();
        let err = arr.log_f_alpha(&Weights::ones(2), &[c(1.0, 0.0)]);
        assert!(matches!(
            err,
            Err(Error::PointOnArrangement { hyperplane: 1, .. })
        ));
    }

    #[test]
    fn parse_sample_file() {
        let (arr, w) = parse_arrangement(TWO_POINTS.as_bytes()).unwrap();
        assert_eq!(arr.len(), 2);
        assert_eq!(arr.dim(), 1);
        assert_eq!(w.values()[0], Weight::integer(1));
    }

    #[test]
    fn parse_rejects_proportional_hyperplanes() {
        let text = r#"{"ambient_dim":1,"hyperplanes":[{"a":[[1,0]],"c":[0,0]},{"a":[[2,0]],"c":[0,0]}],"weights":["1","1"]}"#;
        assert!(matches!(
            parse_arrangement(text.as_bytes()),
            Err(Error::DuplicateHyperplane(0, 1))
        ));
    }

    #[test]
    fn parse_rejects_complex_multiple() {
        let text = r#"{"ambient_dim":1,"hyperplanes":[{"a":[[1,0]],"c":[-1,0]},{"a":[[0,2]],"c":[0,-2]}],"weights":["1","1"]}"#;
        assert!(matches!(
            parse_arrangement(text.as_bytes()),
            Err(Error::DuplicateHyperplane(0, 1))
        ));
    }

    #[test]
    fn parse_rejects_weight_length() {
        let text = r#"{"ambient_dim":1,"hyperplanes":[{"a":[[1,0]],"c":[0,0]},{"a":[[1,0]],"c":[-1,0]}],"weights":["1"]}"#;
        assert!(matches!(
            parse_arrangement(text.as_bytes()),
            Err(Error::LengthMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn parse_rejects_zero_linear_part_and_garbage() {
        let text = r#"{"ambient_dim":1,"hyperplanes":[{"a":[[0,0]],"c":[1,0]}],"weights":["1"]}"#;
        assert!(matches!(
            parse_arrangement(text.as_bytes()),
            Err(Error::ZeroLinearPart(0))
        ));
        assert!(matches!(parse_arrangement(b"{not json"), Err(Error::Json(_))));
    }

    #[test]
    fn weight_strings() {
        assert_eq!("2/3".parse::<Weight>().unwrap(), Weight::ratio(2, 3));
        assert_eq!("4/6".parse::<Weight>().unwrap(), Weight::ratio(2, 3));
        assert_eq!("-0.25".parse::<Weight>().unwrap(), Weight::ratio(-1, 4));
        assert_eq!("7".parse::<Weight>().unwrap(), Weight::integer(7));
        assert!("1/0".parse::<Weight>().is_err());
        assert!("abc".parse::<Weight>().is_err());
        assert_eq!(Weight::ratio(2, 3).to_string(), "2/3");
    }

    #[test]
    fn canonical_form_is_stable() {
        let (arr, w) = parse_arrangement(TWO_POINTS.as_bytes()).unwrap();
        assert_eq!(serialize_arrangement(&arr, &w), TWO_POINTS);
    }

    fn small() -> impl Strategy<Value = f64> {
        (-50i32..50).prop_map(|k| k as f64 / 8.0)
    }

    proptest! {
        #[test]
        fn parse_serialize_roundtrip(
            rows in prop::collection::vec(prop::collection::vec(small(), 6), 1..5),
            num in prop::collection::vec(1i64..20, 5),
            den in prop::collection::vec(1i64..9, 5),
            floats in any::<bool>(),
        ) {
            let hs: Vec<_> = rows.iter().map(|r| Hyperplane::new(
                vec![c(r[0], r[1]), c(r[2], r[3])], c(r[4], r[5]))).collect();
            let m = hs.len();
            let Ok(arr) = Arrangement::new(2, hs) else { return Ok(()); };
            let w = if floats {
                Weights::from_f64(&num[..m].iter().map(|&p| p as f64 / 3.0).collect::<Vec<_>>())
            } else {
                Weights::new((0..m).map(|i| Weight::ratio(num[i], den[i])).collect())
            };
            let text = serialize_arrangement(&arr, &w);
            let (arr2, w2) = parse_arrangement(text.as_bytes()).unwrap();
            prop_assert_eq!(&arr2, &arr);
            prop_assert_eq!(&w2, &w);
            prop_assert_eq!(serialize_arrangement(&arr2, &w2), text);
        }

        #[test]
        fn xi_is_affine(
            a in prop::collection::vec(-3.0f64..3.0, 6),
            y in prop::collection::vec(-3.0f64..3.0, 4),
            z in prop::collection::vec(-3.0f64..3.0, 4),
            lambda in -2.0f64..2.0,
        ) {
            prop_assume!(a[0].abs() + a[1].abs() + a[2].abs() + a[3].abs() > 1e-3);
            let h = Hyperplane::new(vec![c(a[0], a[1]), c(a[2], a[3])], c(a[4], a[5]));
            let y = [c(y[0], y[1]), c(y[2], y[3])];
            let z = [c(z[0], z[1]), c(z[2], z[3])];
            let mix: Vec<Complex> = y.iter().zip(&z).map(|(p, q)| p * lambda + q * (1.0 - lambda)).collect();
            let lhs = h.eval(&mix);
            let rhs = h.eval(&y) * lambda + h.eval(&z) * (1.0 - lambda);
            prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn central_homogeneity(
            a in prop::collection::vec(-3.0f64..3.0, 12),
            z in prop::collection::vec(-3.0f64..3.0, 4),
            mu in 0.01f64..100.0,
        ) {
            let hs: Vec<_> = a.chunks(4).map(|r| Hyperplane::new(vec![c(r[0], r[1]), c(r[2], r[3])], c(0.0, 0.0))).collect();
            let Ok(arr) = Arrangement::new(2, hs) else { return Ok(()); };
            let w = Weights::new(vec![Weight::ratio(1, 2), Weight::integer(2), Weight::ratio(3, 4)]);
            let z = [c(z[0], z[1]), c(z[2], z[3])];
            let zs: Vec<Complex> = z.iter().map(|x| x * mu).collect();
            let (Ok(l0), Ok(l1)) = (arr.log_f_alpha(&w, &z), arr.log_f_alpha(&w, &zs)) else { return Ok(()); };
            let expected = w.sum() * mu.ln();
            prop_assert!(((l1 - l0) - expected).abs() <= 1e-12 * (1.0 + l0.abs().max(l1.abs())));
        }
    }
}

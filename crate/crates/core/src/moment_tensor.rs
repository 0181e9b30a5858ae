//! Moment matrices `M(a) = ∫_0^a F'(s) ⊗ F'(s) ds` with `F = (s, f_1, ..., f_n)`,
//! the Hilbert determinant and the nonlinearity functional
//! `Δ(a) = det M(a)^{1/n}`.
//!
//! Monomial fluxes have an exact rational path; general polynomial fluxes use
//! floats with compensated summation.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::flux_models::{FluxKind, FluxSpec};
use crate::numerics::{compensated_sum, poly_derivative};

pub type Rational = BigRational;

pub const MAX_EXACT_DIM: usize = 12;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Dense symmetric `d × d` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix<T> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Clone> MomentMatrix<T> {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        MomentMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.entries.chunks(self.dim)
    }
}

impl<T: PartialEq + Clone> MomentMatrix<T> {
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

impl MomentMatrix<Rational> {
    /// Exact determinant: rows are scaled to integers, then reduced by
    /// fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Rational {
        let n = self.dim;
        if n == 0 {
            return Rational::one();
        }
        let mut scale = BigInt::one();
        let mut m: Vec<Vec<BigInt>> = self
            .rows()
            .map(|row| {
                let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                scale *= &l;
                row.iter()
                    .map(|x| x.numer() * (&l / x.denom()))
                    .collect()
            })
            .collect();
        Rational::new(bareiss_det(&mut m), scale)
    }

    pub fn to_f64(&self) -> MomentMatrix<f64> {
        MomentMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(rational_to_f64).collect(),
        }
    }
}

impl fmt::Display for MomentMatrix<Rational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Determinant of an integer matrix; the matrix is consumed as scratch.
fn bareiss_det(m: &mut [Vec<BigInt>]) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

impl MomentMatrix<f64> {
    /// LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
                .unwrap();
            if a[p * n + k] == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[k * n + k];
            det *= piv;
            for i in k + 1..n {
                let l = a[i * n + k] / piv;
                for j in k + 1..n {
                    a[i * n + j] -= l * a[k * n + j];
                }
            }
        }
        det
    }

    /// Cholesky factorization treating pivots above `-tol * diag` as
    /// semi-definite; returns false on a clearly negative pivot.
    pub fn cholesky_succeeds(&self, tol: f64) -> bool {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let diag = self.entries[j * n + j];
            let pivot = diag - compensated_sum((0..j).map(|k| l[j * n + k] * l[j * n + k]));
            if pivot < -tol * diag.abs() || !pivot.is_finite() {
                return false;
            }
            let ljj = pivot.max(0.0).sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let s = self.entries[i * n + j]
                    - compensated_sum((0..j).map(|k| l[i * n + k] * l[j * n + k]));
                l[i * n + j] = if ljj > 0.0 { s / ljj } else { 0.0 };
            }
        }
        true
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        MomentMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `M(a)_{ij} = a^{i+j+1} / (i+j+1)` for `0 <= i, j < d`, exactly.
pub fn vandermonde_moment(a: &Rational, d: usize) -> MomentMatrix<Rational> {
    assert!(d >= 2, "vandermonde_moment needs d >= 2, got {d}");
    MomentMatrix::from_fn(d, |i, j| {
        let e = (i + j + 1) as i32;
        num_traits::pow::Pow::pow(a, e) / Rational::from_integer(BigInt::from(e))
    })
}

pub fn vandermonde_moment_f64(a: f64, d: usize) -> MomentMatrix<f64> {
    assert!(d >= 2, "vandermonde_moment needs d >= 2, got {d}");
    MomentMatrix::from_fn(d, |i, j| {
        let e = (i + j + 1) as i32;
        a.powi(e) / e as f64
    })
}

fn hilbert(d: usize) -> MomentMatrix<Rational> {
    MomentMatrix::from_fn(d, |i, j| rational(1, (i + j + 1) as i64))
}

/// Determinant `H_d` of the `d × d` Hilbert matrix `1/(i+j+1)`.
pub fn hilbert_det(d: usize) -> Result<Rational> {
    if !(1..=MAX_EXACT_DIM).contains(&d) {
        return Err(Error::HilbertDimension(d));
    }
    Ok(hilbert(d).det())
}

/// Checks `det M(a) = H_d a^{d²}` in exact arithmetic.
pub fn det_identity_check(a: &Rational, d: usize) -> Result<bool> {
    let h = hilbert_det(d)?;
    if d < 2 {
        return Err(Error::InvalidArgument(format!("moment matrix needs d >= 2, got {d}")));
    }
    let lhs = vandermonde_moment(a, d).det();
    let rhs = h * num_traits::pow::Pow::pow(a, (d * d) as i32);
    Ok(lhs == rhs)
}

/// Ascending coefficients of `F'_i`, `i = 0..d`, with `F'_0 = 1`.
fn derivative_polys(spec: &FluxSpec) -> Vec<Vec<f64>> {
    let mut out = vec![vec![1.0]];
    match spec.kind() {
        FluxKind::Monomial(ks) => {
            for &k in ks {
                let mut p = vec![0.0; k as usize];
                p[k as usize - 1] = 1.0;
                out.push(p);
            }
        }
        FluxKind::Polynomial(cs) => out.extend(cs.iter().map(|c| poly_derivative(c))),
    }
    out
}

/// `M(a)` for a general polynomial flux in floating point.
pub fn general_moment(spec: &FluxSpec, a: f64) -> MomentMatrix<f64> {
    let polys = derivative_polys(spec);
    MomentMatrix::from_fn(spec.d(), |i, j| {
        compensated_sum(polys[i].iter().enumerate().flat_map(|(m, &ci)| {
            polys[j].iter().enumerate().filter(move |(_, &cj)| ci != 0.0 && cj != 0.0).map(move |(l, &cj)| {
                let e = (m + l + 1) as i32;
                ci * cj * a.powi(e) / e as f64
            })
        }))
    })
}

/// `M(a)` in exact arithmetic; float coefficients are converted exactly.
pub fn general_moment_exact(spec: &FluxSpec, a: &Rational) -> MomentMatrix<Rational> {
    let polys: Vec<Vec<Rational>> = match spec.kind() {
        FluxKind::Monomial(ks) => std::iter::once(1u32)
            .chain(ks.iter().copied())
            .map(|k| {
                let mut p = vec![Rational::zero(); k as usize];
                p[k as usize - 1] = Rational::one();
                p
            })
            .collect(),
        FluxKind::Polynomial(_) => derivative_polys(spec)
            .iter()
            .map(|p| p.iter().map(|&c| Rational::from_float(c).expect("finite coefficient")).collect())
            .collect(),
    };
    MomentMatrix::from_fn(spec.d(), |i, j| {
        let mut acc = Rational::zero();
        for (m, ci) in polys[i].iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            for (l, cj) in polys[j].iter().enumerate() {
                if cj.is_zero() {
                    continue;
                }
                let e = (m + l + 1) as i32;
                acc += ci * cj * num_traits::pow::Pow::pow(a, e) / Rational::from_integer(BigInt::from(e));
            }
        }
        acc
    })
}

/// `Δ(a) = det M(a)^{1/n}` for `a >= 0`.
///
/// Tiny negative determinants from rounding are clamped to zero; anything
/// below `-1e-12` relative to the diagonal product is reported as degenerate.
pub fn capital_delta(spec: &FluxSpec, a: f64) -> Result<f64> {
    if a < 0.0 || !a.is_finite() {
        return Err(Error::InvalidArgument(format!("Δ(a) needs a >= 0, got {a}")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let m = general_moment(spec, a);
    let det = m.det();
    let scale = (0..m.dim()).map(|i| *m.get(i, i)).product::<f64>().max(f64::MIN_POSITIVE);
    if det < 0.0 {
        if det < -1e-12 * scale {
            return Err(Error::DegenerateMoment { a, det });
        }
        return Ok(0.0);
    }
    Ok(det.powf(1.0 / spec.n() as f64))
}

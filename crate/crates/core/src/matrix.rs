//! Dense exact matrices over Q(ζ_N), spectral data of finite-order unitaries,
//! diagonal matching and an incremental Gauss–Jordan solver.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::cyclo::{FieldContext, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not a unitary of order dividing {p}")]
    NotOrderP { p: u32 },
    #[error("eigenvalue multisets differ: {left:?} vs {right:?}")]
    MultisetMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("matrix is not diagonal with p-th root of unity entries")]
    NotRootDiagonal,
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("no orthonormal eigenbasis with entries in Q(zeta_{order})")]
    EigenbasisOutsideField { order: u32 },
    #[error("field context mismatch")]
    ContextMismatch,
}

/// A `rows x cols` matrix stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    ctx: FieldContext,
    rows: usize,
    cols: usize,
    entries: Vec<Scalar>,
}

impl Mat {
    pub fn new(ctx: &FieldContext, rows: usize, cols: usize, entries: Vec<Scalar>) -> Result<Self, MatrixError> {
        if entries.len() != rows * cols {
            return Err(MatrixError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|e| e.ctx() != ctx) {
            return Err(MatrixError::ContextMismatch);
        }
        Ok(Mat { ctx: ctx.clone(), rows, cols, entries })
    }

    pub fn zero(ctx: &FieldContext, rows: usize, cols: usize) -> Self {
        Mat { ctx: ctx.clone(), rows, cols, entries: vec![Scalar::zero(ctx); rows * cols] }
    }

    pub fn identity(ctx: &FieldContext, n: usize) -> Self {
        let mut m = Self::zero(ctx, n, n);
        for i in 0..n {
            m.entries[i * n + i] = Scalar::one(ctx);
        }
        m
    }

    pub fn from_fn(ctx: &FieldContext, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Mat { ctx: ctx.clone(), rows, cols, entries }
    }

    pub fn diag(ctx: &FieldContext, d: Vec<Scalar>) -> Self {
        let n = d.len();
        let mut m = Self::zero(ctx, n, n);
        for (i, x) in d.into_iter().enumerate() {
            m.entries[i * n + i] = x;
        }
        m
    }

    /// Diagonal matrix `diag(ζ_p^{e_0}, ζ_p^{e_1}, …)`.
    pub fn root_diag(ctx: &FieldContext, exponents: &[u32]) -> Self {
        Self::diag(ctx, exponents.iter().map(|&e| Scalar::p_root(ctx, e as i64)).collect())
    }

    /// Permutation matrix with a one at `(perm[j], j)` for every column `j`.
    pub fn permutation(ctx: &FieldContext, perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = Self::zero(ctx, n, n);
        for (j, &i) in perm.iter().enumerate() {
            m.entries[i * n + j] = Scalar::one(ctx);
        }
        m
    }

    /// The matrix unit `E_ij` of size `n`.
    pub fn unit(ctx: &FieldContext, n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zero(ctx, n, n);
        m.entries[i * n + j] = Scalar::one(ctx);
        m
    }

    pub fn from_ints(ctx: &FieldContext, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(ctx, r, c, |i, j| Scalar::from_int(ctx, rows[i][j]))
    }

    pub fn ctx(&self) -> &FieldContext {
        &self.ctx
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Scalar::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && self.entries.iter().enumerate().all(|(k, e)| {
                if k / self.cols == k % self.cols {
                    e.is_one()
                } else {
                    e.is_zero()
                }
            })
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square() && self.entries.iter().enumerate().all(|(k, e)| k / self.cols == k % self.cols || e.is_zero())
    }

    pub fn diagonal(&self) -> Vec<Scalar> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).collect()
    }

    /// Is every row and column carrying exactly one nonzero entry equal to 1?
    pub fn is_permutation(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.rows;
        let mut col_seen = vec![false; n];
        for i in 0..n {
            let mut found = false;
            for j in 0..n {
                let e = self.get(i, j);
                if e.is_zero() {
                    continue;
                }
                if !e.is_one() || found || col_seen[j] {
                    return false;
                }
                found = true;
                col_seen[j] = true;
            }
            if !found {
                return false;
            }
        }
        true
    }

    /// Exponents `e_i` with `D_ii = ζ_p^{e_i}`, if the matrix is such a diagonal.
    pub fn root_diag_exponents(&self) -> Option<Vec<u32>> {
        if !self.is_diagonal() {
            return None;
        }
        self.diagonal().iter().map(Scalar::p_root_exponent).collect()
    }

    pub fn try_mul(&self, rhs: &Mat) -> Result<Mat, MatrixError> {
        if self.cols != rhs.rows {
            return Err(MatrixError::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        if self.ctx != rhs.ctx {
            return Err(MatrixError::ContextMismatch);
        }
        let (n, m) = (self.rows, rhs.cols);
        // Nonzero positions of each row of rhs, computed once.
        let rhs_rows: Vec<Vec<usize>> = (0..rhs.rows)
            .map(|k| (0..m).filter(|&j| !rhs.entries[k * m + j].is_zero()).collect())
            .collect();
        let mut out = Mat::zero(&self.ctx, n, m);
        for i in 0..n {
            for k in 0..self.cols {
                let a = &self.entries[i * self.cols + k];
                if a.is_zero() || rhs_rows[k].is_empty() {
                    continue;
                }
                let one = a.is_one();
                for &j in &rhs_rows[k] {
                    let b = &rhs.entries[k * m + j];
                    let term = if one { b.clone() } else { a * b };
                    let slot = &mut out.entries[i * m + j];
                    *slot = if slot.is_zero() { term } else { &*slot + &term };
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, rhs: &Mat) -> Result<Mat, MatrixError> {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Mat) -> Result<Mat, MatrixError> {
        self.zip(rhs, |a, b| a - b)
    }

    fn zip(&self, rhs: &Mat, f: impl Fn(&Scalar, &Scalar) -> Scalar) -> Result<Mat, MatrixError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(MatrixError::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        if self.ctx != rhs.ctx {
            return Err(MatrixError::ContextMismatch);
        }
        let entries = self.entries.iter().zip(&rhs.entries).map(|(a, b)| f(a, b)).collect();
        Ok(Mat { ctx: self.ctx.clone(), rows: self.rows, cols: self.cols, entries })
    }

    pub fn scale(&self, s: &Scalar) -> Mat {
        let entries = self.entries.iter().map(|e| if e.is_zero() { e.clone() } else { e * s }).collect();
        Mat { ctx: self.ctx.clone(), rows: self.rows, cols: self.cols, entries }
    }

    pub fn scale_rational(&self, q: &Rational) -> Mat {
        let entries = self.entries.iter().map(|e| e.scale(q)).collect();
        Mat { ctx: self.ctx.clone(), rows: self.rows, cols: self.cols, entries }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Mat {
        Mat::from_fn(&self.ctx, self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(&self.ctx, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn trace(&self) -> Scalar {
        (0..self.rows.min(self.cols)).fold(Scalar::zero(&self.ctx), |acc, i| &acc + self.get(i, i))
    }

    pub fn kron(&self, rhs: &Mat) -> Mat {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        let mut out = Mat::zero(&self.ctx, r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        let b = rhs.get(k, l);
                        if !b.is_zero() {
                            out.set(i * rhs.rows + k, j * rhs.cols + l, a * b);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn direct_sum(&self, rhs: &Mat) -> Mat {
        Mat::block_diag(&self.ctx, &[self.clone(), rhs.clone()])
    }

    pub fn block_diag(ctx: &FieldContext, blocks: &[Mat]) -> Mat {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zero(ctx, r, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.set_block(r0, c0, b);
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Mat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Mat {
        Mat::from_fn(&self.ctx, rows, cols, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    /// Columns selected in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Mat {
        Mat::from_fn(&self.ctx, self.rows, cols.len(), |i, j| self.get(i, cols[j]).clone())
    }

    pub fn is_unitary(&self) -> bool {
        self.is_square() && (&self.dagger() * self).is_identity()
    }

    pub fn pow(&self, mut e: u64) -> Mat {
        let mut base = self.clone();
        let mut acc = Mat::identity(&self.ctx, self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `self · x · self†`.
    pub fn conjugate(&self, x: &Mat) -> Mat {
        &(self * x) * &self.dagger()
    }

    /// The scalar `c` if the matrix equals `c·I`.
    pub fn as_scalar_multiple(&self) -> Option<Scalar> {
        if !self.is_square() || self.rows == 0 {
            return None;
        }
        let c = self.get(0, 0).clone();
        let ok = self.entries.iter().enumerate().all(|(k, e)| {
            if k / self.cols == k % self.cols {
                *e == c
            } else {
                e.is_zero()
            }
        });
        ok.then_some(c)
    }

    pub fn map(&self, f: impl Fn(&Scalar) -> Scalar) -> Mat {
        Mat { ctx: self.ctx.clone(), rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }
}

/// Commutation matrix `K` with `K (x ⊗ y) = y ⊗ x` for `x ∈ C^m`, `y ∈ C^n`.
/// For `a` of size `n` and `b` of size `m`, `a ⊗ b = K (b ⊗ a) K†`.
pub fn commutation_matrix(ctx: &FieldContext, m: usize, n: usize) -> Mat {
    // maps basis vector e_i ⊗ f_j (index i*n + j) to f_j ⊗ e_i (index j*m + i)
    let mut perm = vec![0; m * n];
    for i in 0..m {
        for j in 0..n {
            perm[i * n + j] = j * m + i;
        }
    }
    Mat::permutation(ctx, &perm)
}

impl<'a> Mul<&'a Mat> for &'a Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        self.try_mul(rhs).expect("matrix product")
    }
}

impl<'a> Add<&'a Mat> for &'a Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        self.try_add(rhs).expect("matrix sum")
    }
}

impl<'a> Sub<&'a Mat> for &'a Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        self.try_sub(rhs).expect("matrix difference")
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.map(|e| -e)
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatWire {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<Scalar>>,
}

impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let entries = (0..self.rows).map(|i| self.entries[i * self.cols..(i + 1) * self.cols].to_vec()).collect();
        MatWire { rows: self.rows, cols: self.cols, entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = MatWire::deserialize(deserializer)?;
        if wire.entries.len() != wire.rows || wire.entries.iter().any(|r| r.len() != wire.cols) {
            return Err(D::Error::custom(format!("entries do not form a {}x{} array", wire.rows, wire.cols)));
        }
        let flat: Vec<Scalar> = wire.entries.into_iter().flatten().collect();
        let ctx = match flat.first() {
            Some(s) => s.ctx().clone(),
            None => return Err(D::Error::custom("empty matrices are not supported")),
        };
        Mat::new(&ctx, wire.rows, wire.cols, flat).map_err(D::Error::custom)
    }
}

/// Eigenprojections of an order-p unitary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralData {
    pub p: u32,
    /// `projections[k]` projects onto the `ζ_p^k` eigenspace.
    pub projections: Vec<Mat>,
    pub multiplicities: Vec<usize>,
}

/// Character averaging `P_k = (1/p) Σ_j ζ_p^{-kj} V^j`.
pub fn spectral(v: &Mat, p: u32) -> Result<SpectralData, MatrixError> {
    let ctx = v.ctx();
    if !v.is_square() || !v.is_unitary() {
        return Err(MatrixError::NotOrderP { p });
    }
    let mut powers = vec![Mat::identity(ctx, v.rows())];
    for j in 1..=p as usize {
        let next = &powers[j - 1] * v;
        powers.push(next);
    }
    if !powers[p as usize].is_identity() {
        return Err(MatrixError::NotOrderP { p });
    }
    let inv_p = Rational::new(1.into(), (p as i64).into());
    let mut projections = Vec::with_capacity(p as usize);
    let mut multiplicities = Vec::with_capacity(p as usize);
    for k in 0..p as i64 {
        let mut acc = Mat::zero(ctx, v.rows(), v.rows());
        for (j, vj) in powers.iter().take(p as usize).enumerate() {
            acc = &acc + &vj.scale(&Scalar::p_root(ctx, -k * j as i64));
        }
        let proj = acc.scale_rational(&inv_p);
        let tr = proj.trace().as_integer().ok_or(MatrixError::NotOrderP { p })?;
        multiplicities.push(tr as usize);
        projections.push(proj);
    }
    Ok(SpectralData { p, projections, multiplicities })
}

fn exponent_counts(exps: &[u32], p: u32) -> Vec<usize> {
    let mut c = vec![0; p as usize];
    for &e in exps {
        c[e as usize] += 1;
    }
    c
}

/// Permutation `Q` with `Q† D1 Q = D2` for diagonal matrices of p-th roots of
/// unity. Equal eigenvalues are matched in increasing index order.
pub fn match_diagonals(d1: &Mat, d2: &Mat, p: u32) -> Result<Mat, MatrixError> {
    let e1 = d1.root_diag_exponents().ok_or(MatrixError::NotRootDiagonal)?;
    let e2 = d2.root_diag_exponents().ok_or(MatrixError::NotRootDiagonal)?;
    let (c1, c2) = (exponent_counts(&e1, p), exponent_counts(&e2, p));
    if e1.len() != e2.len() || c1 != c2 {
        return Err(MatrixError::MultisetMismatch { left: c1, right: c2 });
    }
    let mut used = vec![false; e1.len()];
    let mut perm = Vec::with_capacity(e2.len());
    for &want in &e2 {
        let j = (0..e1.len()).find(|&j| !used[j] && e1[j] == want).expect("multisets agree");
        used[j] = true;
        perm.push(j);
    }
    Ok(Mat::permutation(d1.ctx(), &perm))
}

/// A square root of a nonnegative rational inside the field, when it is a
/// rational square or a rational square times `p`.
pub fn sqrt_rational(ctx: &FieldContext, q: &Rational) -> Option<Scalar> {
    use num_bigint::BigInt;
    use num_traits::{Signed, Zero};
    if q.is_negative() {
        return None;
    }
    if q.is_zero() {
        return Some(Scalar::zero(ctx));
    }
    // sqrt(a/b) = sqrt(a b) / b
    let ab: BigInt = q.numer() * q.denom();
    let b = q.denom().clone();
    let r = ab.sqrt();
    if &r * &r == ab {
        return Some(Scalar::from_rational(ctx, Rational::new(r, b)));
    }
    let p = BigInt::from(ctx.p());
    if (&ab % &p).is_zero() {
        let rest = &ab / &p;
        let r = rest.sqrt();
        if &r * &r == rest {
            let sp = Scalar::sqrt_of_p(ctx)?;
            return Some(sp.scale(&Rational::new(r, b)));
        }
    }
    None
}

/// A unitary `E` with `E† V E` diagonal, eigenvalue exponents ascending, for an
/// order-p unitary `V`. Columns come from Gram–Schmidt on the columns of each
/// spectral projection; fails when a normalization leaves the field.
pub fn eigenbasis(v: &Mat, p: u32) -> Result<(Mat, Vec<u32>), MatrixError> {
    let ctx = v.ctx();
    let spec = spectral(v, p)?;
    let n = v.rows();
    let mut columns: Vec<Vec<Scalar>> = Vec::with_capacity(n);
    let mut exponents = Vec::with_capacity(n);
    for (k, proj) in spec.projections.iter().enumerate() {
        let mut basis: Vec<(Vec<Scalar>, Scalar)> = Vec::new();
        for j in 0..n {
            if basis.len() == spec.multiplicities[k] {
                break;
            }
            let mut col: Vec<Scalar> = (0..n).map(|i| proj.get(i, j).clone()).collect();
            for (b, bnorm) in &basis {
                let ip = inner(b, &col);
                if ip.is_zero() {
                    continue;
                }
                let coef = &ip / bnorm;
                for (ci, bi) in col.iter_mut().zip(b) {
                    *ci = &*ci - &(&coef * bi);
                }
            }
            let norm = inner(&col, &col);
            if !norm.is_zero() {
                basis.push((col, norm));
            }
        }
        if basis.len() != spec.multiplicities[k] {
            return Err(MatrixError::EigenbasisOutsideField { order: ctx.order() });
        }
        for (col, norm) in basis {
            let q = norm.as_rational().ok_or(MatrixError::EigenbasisOutsideField { order: ctx.order() })?;
            let s = sqrt_rational(ctx, &q).ok_or(MatrixError::EigenbasisOutsideField { order: ctx.order() })?;
            let s_inv = s.inv().expect("nonzero norm");
            columns.push(col.iter().map(|c| c * &s_inv).collect());
            exponents.push(k as u32);
        }
    }
    let e = Mat::from_fn(ctx, n, n, |i, j| columns[j][i].clone());
    Ok((e, exponents))
}

/// `⟨x, y⟩ = Σ conj(x_i) y_i`.
fn inner(x: &[Scalar], y: &[Scalar]) -> Scalar {
    let ctx = x[0].ctx();
    x.iter()
        .zip(y)
        .filter(|(a, b)| !a.is_zero() && !b.is_zero())
        .fold(Scalar::zero(ctx), |acc, (a, b)| &acc + &(&a.conj() * b))
}

/// A unitary `C` with `A C = C B` for order-p unitaries with equal spectra.
/// Diagonal inputs yield the permutation of [`match_diagonals`].
pub fn intertwining_unitary(a: &Mat, b: &Mat, p: u32) -> Result<Mat, MatrixError> {
    if a.is_diagonal() && b.is_diagonal() {
        // Q† A Q = B  ⇔  A Q = Q B
        return match_diagonals(a, b, p);
    }
    let (ea, xa) = eigenbasis(a, p)?;
    let (eb, xb) = eigenbasis(b, p)?;
    if xa != xb {
        return Err(MatrixError::MultisetMismatch { left: exponent_counts(&xa, p), right: exponent_counts(&xb, p) });
    }
    Ok(&ea * &eb.dagger())
}

/// Solution set of a linear system: `particular + span(null_basis)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub particular: Vec<Scalar>,
    pub null_basis: Vec<Vec<Scalar>>,
}

type SparseRow = Vec<(usize, Scalar)>;

/// Incremental Gauss–Jordan elimination over Q(ζ_N) on sparse rows.
///
/// Equations are added one at a time and reduced against the current reduced
/// row echelon form; the pivot of a new row is its first nonzero variable.
/// Every stored row is kept fully reduced, so solutions read off directly.
pub struct LinearSystem {
    ctx: FieldContext,
    nvars: usize,
    rows: Vec<(SparseRow, Scalar)>,
    pivot_of: Vec<Option<usize>>,
    inconsistent: bool,
}

fn axpy(row: &SparseRow, coef: &Scalar, other: &SparseRow) -> SparseRow {
    // row - coef * other
    let mut out = Vec::with_capacity(row.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < other.len() {
        if j >= other.len() || (i < row.len() && row[i].0 < other[j].0) {
            out.push(row[i].clone());
            i += 1;
        } else if i >= row.len() || other[j].0 < row[i].0 {
            out.push((other[j].0, -(coef * &other[j].1)));
            j += 1;
        } else {
            let v = &row[i].1 - &(coef * &other[j].1);
            if !v.is_zero() {
                out.push((row[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

impl LinearSystem {
    pub fn new(ctx: &FieldContext, nvars: usize) -> Self {
        LinearSystem { ctx: ctx.clone(), nvars, rows: Vec::new(), pivot_of: vec![None; nvars], inconsistent: false }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_consistent(&self) -> bool {
        !self.inconsistent
    }

    /// Adds `Σ coef·x_var = rhs`. Terms may repeat variables and include zeros.
    pub fn add_equation(&mut self, terms: Vec<(usize, Scalar)>, rhs: Scalar) {
        let mut row: SparseRow = Vec::with_capacity(terms.len());
        let mut terms = terms;
        terms.sort_by_key(|(v, _)| *v);
        for (v, c) in terms {
            assert!(v < self.nvars, "variable index out of range");
            match row.last_mut() {
                Some((w, acc)) if *w == v => *acc = &*acc + &c,
                _ => row.push((v, c)),
            }
        }
        row.retain(|(_, c)| !c.is_zero());
        let mut rhs = rhs;
        // reduce against existing pivots; stored rows contain no other pivot
        let mut k = 0;
        while k < row.len() {
            let (v, c) = row[k].clone();
            if let Some(r) = self.pivot_of[v] {
                let (prow, prhs) = &self.rows[r];
                rhs = &rhs - &(&c * prhs);
                row = axpy(&row, &c, prow);
                // positions before k are non-pivots and unaffected
                continue;
            }
            k += 1;
        }
        if row.is_empty() {
            if !rhs.is_zero() {
                self.inconsistent = true;
            }
            return;
        }
        let (pv, lead) = row[0].clone();
        if !lead.is_one() {
            let inv = lead.inv().expect("nonzero pivot");
            for (_, c) in row.iter_mut() {
                *c = &*c * &inv;
            }
            rhs = &rhs * &inv;
        }
        // eliminate the new pivot from every stored row
        for (prow, prhs) in self.rows.iter_mut() {
            if let Ok(pos) = prow.binary_search_by_key(&pv, |(v, _)| *v) {
                let c = prow[pos].1.clone();
                *prow = axpy(prow, &c, &row);
                *prhs = &*prhs - &(&c * &rhs);
            }
        }
        self.pivot_of[pv] = Some(self.rows.len());
        self.rows.push((row, rhs));
    }

    pub fn solve(&self) -> Result<Solution, MatrixError> {
        if self.inconsistent {
            return Err(MatrixError::Inconsistent);
        }
        let zero = Scalar::zero(&self.ctx);
        let mut particular = vec![zero.clone(); self.nvars];
        for (row, rhs) in &self.rows {
            particular[row[0].0] = rhs.clone();
        }
        let mut null_basis = Vec::new();
        for free in (0..self.nvars).filter(|&v| self.pivot_of[v].is_none()) {
            let mut x = vec![zero.clone(); self.nvars];
            x[free] = Scalar::one(&self.ctx);
            for (row, _) in &self.rows {
                if let Ok(pos) = row.binary_search_by_key(&free, |(v, _)| *v) {
                    x[row[0].0] = -&row[pos].1;
                }
            }
            null_basis.push(x);
        }
        Ok(Solution { particular, null_basis })
    }
}

/// Solves `A x = b` for every column `b` of `rhs`; the null basis is shared.
/// Returns `(particular solution as a matrix, null-space basis as column vectors)`.
pub fn solve(a: &Mat, rhs: &Mat) -> Result<(Mat, Vec<Mat>), MatrixError> {
    if a.rows() != rhs.rows() {
        return Err(MatrixError::ShapeMismatch(format!("{} equations but {} right-hand rows", a.rows(), rhs.rows())));
    }
    let ctx = a.ctx();
    let mut particular = Mat::zero(ctx, a.cols(), rhs.cols());
    let mut null = Vec::new();
    for col in 0..rhs.cols().max(1) {
        let mut sys = LinearSystem::new(ctx, a.cols());
        for i in 0..a.rows() {
            let terms = (0..a.cols()).filter(|&j| !a.get(i, j).is_zero()).map(|j| (j, a.get(i, j).clone())).collect();
            let b = if rhs.cols() == 0 { Scalar::zero(ctx) } else { rhs.get(i, col).clone() };
            sys.add_equation(terms, b);
        }
        let sol = sys.solve()?;
        if rhs.cols() > 0 {
            for (i, x) in sol.particular.into_iter().enumerate() {
                particular.set(i, col, x);
            }
        }
        if col == 0 {
            null = sol
                .null_basis
                .into_iter()
                .map(|v| Mat::from_fn(ctx, a.cols(), 1, |i, _| v[i].clone()))
                .collect();
        }
    }
    Ok((particular, null))
}

/// Equations `A X - X B = 0` in the entries of an `n x m` matrix `X`, where
/// `A` is `n x n` and `B` is `m x m`. Variable `X_ij` has index `i*m + j`.
pub fn intertwiner_equations(a: &Mat, b: &Mat) -> Vec<Vec<(usize, Scalar)>> {
    let (n, m) = (a.rows(), b.rows());
    let mut eqs = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let mut terms = Vec::new();
            for k in 0..n {
                let c = a.get(i, k);
                if !c.is_zero() {
                    terms.push((k * m + j, c.clone()));
                }
            }
            for k in 0..m {
                let c = b.get(k, j);
                if !c.is_zero() {
                    terms.push((i * m + k, -c));
                }
            }
            eqs.push(terms);
        }
    }
    eqs
}

/// Reshapes a solution vector of `n*m` unknowns into an `n x m` matrix.
pub fn vector_to_mat(ctx: &FieldContext, v: &[Scalar], n: usize, m: usize) -> Mat {
    Mat::from_fn(ctx, n, m, |i, j| v[i * m + j].clone())
}

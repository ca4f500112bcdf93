//! Finite-dimensional C*-dynamical systems `(⊕ M_{n_i}, α, Z/pZ)`.
//!
//! An [`FdSystem`] is given by block sizes, the block permutation `σ` and one
//! implementing unitary per block: `α(a)_i = u_i · a_{σ(i)} · u_i†`.
//! [`decompose`] brings it to a [`CanonicalSystem`], a direct sum of
//! irreducible pieces, and [`EqHom`] describes equivariant homomorphisms
//! between canonical systems.

mod canonical;
mod hom;

pub use canonical::{decompose, recover_inner_unitary, CanonicalForm, CanonicalSystem, Piece};
pub use hom::{EqHom, HomError, Slot, TargetBlock};

use thiserror::Error;

use crate::cyclo::{CycloError, FieldContext, Scalar};
use crate::matrix::{Mat, MatrixError};
use crate::report::Report;

/// An element of `⊕ M_{n_i}`: one square matrix per block.
pub type Element = Vec<Mat>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("system is invalid: {0}")]
    Invalid(String),
    #[error("holonomy around the orbit of block {block} is not a scalar, so alpha^p is not the identity")]
    NonScalarHolonomy { block: usize },
    #[error("holonomy scalar of the orbit of block {block} is not a root of unity in the field")]
    TwistNotRootOfUnity { block: usize },
    #[error("a p-th root of the holonomy of block {block} is not in the field; use field order {minimal_order}")]
    TwistRootOutsideField { block: usize, minimal_order: u32 },
    #[error("implementing unitary of fixed block {block} has no eigenbasis in the field; present it in diagonal form")]
    NonDiagonalizableWithinField { block: usize },
    #[error("block {block} is not fixed by the block permutation")]
    NotFixedBlock { block: usize },
    #[error("the map is not an inner automorphism of M_{n}")]
    NotInnerAutomorphism { n: usize },
    #[error("the implementing unitary cannot be normalized to order p inside the field")]
    NormalizationOutsideField,
    #[error("invalid canonical system: {0}")]
    InvalidCanonical(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Field(#[from] CycloError),
}

/// A finite-dimensional C*-algebra with an order-p automorphism, in the
/// presentation `α(a)_i = implementing[i] · a_{sigma[i]} · implementing[i]†`.
///
/// `sigma` is 0-based here; the JSON format uses 1-based images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdSystem {
    pub ctx: FieldContext,
    pub p: u32,
    pub blocks: Vec<usize>,
    pub sigma: Vec<usize>,
    pub implementing: Vec<Mat>,
}

impl FdSystem {
    pub fn new(ctx: &FieldContext, blocks: Vec<usize>, sigma: Vec<usize>, implementing: Vec<Mat>) -> Self {
        FdSystem { ctx: ctx.clone(), p: ctx.p(), blocks, sigma, implementing }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `α(a)`. Panics if the system is malformed; run [`FdSystem::validate`] first.
    pub fn action(&self, a: &[Mat]) -> Element {
        (0..self.blocks.len()).map(|i| self.implementing[i].conjugate(&a[self.sigma[i]])).collect()
    }

    pub fn zero_element(&self) -> Element {
        self.blocks.iter().map(|&n| Mat::zero(&self.ctx, n, n)).collect()
    }

    /// The matrix unit `E_ij` sitting in block `b`.
    pub fn unit_element(&self, b: usize, i: usize, j: usize) -> Element {
        let mut e = self.zero_element();
        e[b] = Mat::unit(&self.ctx, self.blocks[b], i, j);
        e
    }

    /// `T_i = u_i u_{σ(i)} ⋯ u_{σ^{p-1}(i)}`, so that `α^p(a)_i = T_i a_{σ^p(i)} T_i†`.
    pub fn holonomy(&self, i: usize) -> Mat {
        let mut t = self.implementing[i].clone();
        let mut b = self.sigma[i];
        for _ in 1..self.p {
            t = &t * &self.implementing[b];
            b = self.sigma[b];
        }
        t
    }

    /// Orbits of `σ`, each listed from its smallest block index.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let m = self.blocks.len();
        let mut seen = vec![false; m];
        let mut out = Vec::new();
        for start in 0..m {
            if seen[start] {
                continue;
            }
            let mut orbit = vec![start];
            seen[start] = true;
            let mut b = self.sigma[start];
            while b != start && !seen[b] {
                seen[b] = true;
                orbit.push(b);
                b = self.sigma[b];
            }
            out.push(orbit);
        }
        out
    }

    /// Checks every standing hypothesis and lists each failure.
    pub fn validate(&self) -> Report {
        let mut r = Report::new();
        let m = self.blocks.len();
        if self.p != self.ctx.p() {
            r.push("field", "system", format!("p = {} but the field was built for p = {}", self.p, self.ctx.p()));
        }
        if m == 0 {
            r.push("shape", "system", "no blocks");
        }
        if let Some(i) = self.blocks.iter().position(|&n| n == 0) {
            r.push("shape", format!("block {}", i + 1), "block size must be positive");
        }
        if self.sigma.len() != m {
            r.push("shape", "sigma", format!("{} images for {m} blocks", self.sigma.len()));
        }
        if self.implementing.len() != m {
            r.push("shape", "impl", format!("{} matrices for {m} blocks", self.implementing.len()));
        }
        if !r.is_ok() {
            return r;
        }
        let mut hit = vec![false; m];
        for (i, &s) in self.sigma.iter().enumerate() {
            if s >= m {
                r.push("permutation", format!("block {}", i + 1), format!("image {} out of range", s + 1));
            } else if std::mem::replace(&mut hit[s], true) {
                r.push("permutation", format!("block {}", i + 1), format!("image {} used twice", s + 1));
            }
        }
        if !r.is_ok() {
            return r;
        }
        for i in 0..m {
            let n = self.blocks[i];
            let u = &self.implementing[i];
            if u.ctx() != &self.ctx {
                r.push("field", format!("block {}", i + 1), "implementing unitary uses a different field");
                continue;
            }
            if u.rows() != n || u.cols() != n {
                r.push("shape", format!("block {}", i + 1), format!("implementing matrix is {}x{}, block is {n}", u.rows(), u.cols()));
                continue;
            }
            if self.blocks[self.sigma[i]] != n {
                r.push(
                    "block sizes",
                    format!("block {}", i + 1),
                    format!("n_{} = {n} but n_sigma = {}", i + 1, self.blocks[self.sigma[i]]),
                );
            }
            if !u.is_unitary() {
                r.push("unitary", format!("block {}", i + 1), "u^* u != I");
            }
        }
        if !r.is_ok() {
            return r;
        }
        for i in 0..m {
            let mut b = i;
            for _ in 0..self.p {
                b = self.sigma[b];
            }
            if b != i {
                r.push("sigma^p = id", format!("block {}", i + 1), format!("sigma^p maps it to block {}", b + 1));
            }
        }
        if !r.is_ok() {
            return r;
        }
        for orbit in self.orbits() {
            let i = orbit[0];
            let t = self.holonomy(i);
            if t.as_scalar_multiple().is_none() {
                r.push(
                    "alpha^p = id",
                    format!("orbit of block {}", i + 1),
                    "product of implementing unitaries around the orbit is not a scalar",
                );
            }
        }
        r
    }

    /// Does `α` intertwine correctly with `φ`, i.e. is `φ(α(E)) = α'(φ(E))` on
    /// every matrix unit `E`? Used to check recorded isomorphisms.
    pub fn is_transported_by(&self, target: &CanonicalSystem, phi: impl Fn(&[Mat]) -> Element) -> bool {
        for (b, &n) in self.blocks.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    let e = self.unit_element(b, i, j);
                    if phi(&self.action(&e)) != target.action(&phi(&e)) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// `ζ_N^k` with `p·k ≡ m (mod N)` for the smallest such `k`, where `λ = ζ_N^m`.
pub(crate) fn pth_root_of_root(ctx: &FieldContext, lambda: &Scalar, block: usize) -> Result<Scalar, SystemError> {
    let n = ctx.order();
    let p = ctx.p();
    let Some(m) = lambda.root_exponent() else {
        // for odd N the roots of unity of Q(ζ_N) are ±ζ_N^k
        if let Some(o) = (-lambda).root_order() {
            let ord = 2 * o;
            return Err(SystemError::TwistRootOutsideField { block, minimal_order: lcm(n, p * ord) });
        }
        return Err(SystemError::TwistNotRootOfUnity { block });
    };
    match (0..n).find(|k| (p as u64 * *k as u64) % n as u64 == m as u64) {
        Some(k) => Ok(Scalar::root(ctx, k as i64)),
        None => {
            let ord = lambda.root_order().unwrap_or(n);
            Err(SystemError::TwistRootOutsideField { block, minimal_order: lcm(n, p * ord) })
        }
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    use num_integer::Integer;
    a.lcm(&b)
}

//! Crossed products `A ⋊ Z/pZ` of canonical systems, realized as explicit
//! matrix algebras.
//!
//! A fixed piece `(M_n, Ad V)` becomes `p` copies of `M_n`: summand `j` is
//! `Σ_k ζ_p^{jk} a_k V^k`. A cycle piece (`p` blocks of size `n`) becomes one
//! `M_{pn}` whose `(r, c)` block is `a^{(c-r) mod p}_{(-r) mod p}`, where
//! `a^k_i` is block `i` of the coefficient of `U^k`.

use std::ops::Range;

use thiserror::Error;

use crate::cyclo::{FieldContext, Rational, Scalar};
use crate::matrix::Mat;
use crate::system::{CanonicalSystem, EqHom, Element, FdSystem, Piece};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrossedError {
    #[error("the homomorphism is not equivariant: {0}")]
    NotEquivariant(String),
    #[error("presentations do not belong to the source and target of the homomorphism")]
    SystemMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("image of a minimal projection has non-integral or negative rank")]
    NonIntegralRank,
}

/// `Σ_k coeffs[k] · U^k` with each coefficient an element of the source algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossedElement {
    pub coeffs: Vec<Element>,
}

/// The crossed product of a canonical system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossedPresentation {
    source: CanonicalSystem,
    blocks: Vec<usize>,
    piece_blocks: Vec<Range<usize>>,
    special: Vec<i64>,
    dual: FdSystem,
}

impl CrossedPresentation {
    pub fn new(source: &CanonicalSystem) -> Self {
        let ctx = source.ctx();
        let p = source.p() as usize;
        let mut blocks = Vec::new();
        let mut piece_blocks = Vec::new();
        let mut special = Vec::new();
        let mut sigma = Vec::new();
        let mut implementing = Vec::new();
        for piece in source.pieces() {
            let start = blocks.len();
            match piece {
                Piece::Fixed { exponents } => {
                    let n = exponents.len();
                    let counts = piece.eigen_counts(p as u32).expect("fixed piece");
                    for j in 0..p {
                        blocks.push(n);
                        // the averaging projection sits on the ζ_p^{-j} eigenspace
                        special.push(counts[(p - j) % p] as i64);
                        sigma.push(start + (j + p - 1) % p);
                        implementing.push(Mat::identity(ctx, n));
                    }
                }
                Piece::Cycle { n } => {
                    blocks.push(p * n);
                    special.push(*n as i64);
                    sigma.push(start);
                    let d: Vec<u32> = (0..p as u32).flat_map(|r| std::iter::repeat_n(r, *n)).collect();
                    implementing.push(Mat::root_diag(ctx, &d));
                }
            }
            piece_blocks.push(start..blocks.len());
        }
        let dual = FdSystem::new(ctx, blocks.clone(), sigma, implementing);
        CrossedPresentation { source: source.clone(), blocks, piece_blocks, special, dual }
    }

    pub fn source(&self) -> &CanonicalSystem {
        &self.source
    }

    pub fn ctx(&self) -> &FieldContext {
        self.source.ctx()
    }

    /// Block sizes of the crossed product.
    pub fn block_sizes(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Crossed blocks coming from source piece `k`.
    pub fn piece_blocks(&self, k: usize) -> Range<usize> {
        self.piece_blocks[k].clone()
    }

    /// Class of the averaging projection in `K_0` of the crossed product.
    pub fn special(&self) -> &[i64] {
        &self.special
    }

    /// The dual action as a system on the crossed product.
    pub fn dual_system(&self) -> &FdSystem {
        &self.dual
    }

    fn p(&self) -> usize {
        self.source.p() as usize
    }

    pub fn zero(&self) -> CrossedElement {
        CrossedElement { coeffs: vec![self.source.zero_element(); self.p()] }
    }

    pub fn one(&self) -> CrossedElement {
        self.iota(&self.source.one_element())
    }

    /// The implementing unitary `U` of the generator.
    pub fn canonical_unitary(&self) -> CrossedElement {
        let mut x = self.zero();
        x.coeffs[1 % self.p()] = self.source.one_element();
        x
    }

    /// `ι(a) = a · U^0`.
    pub fn iota(&self, a: &[Mat]) -> CrossedElement {
        let mut x = self.zero();
        x.coeffs[0] = a.to_vec();
        x
    }

    /// `q = (1/p) Σ_j U^j`.
    pub fn averaging_projection(&self) -> CrossedElement {
        let inv_p = Rational::new(1.into(), (self.p() as i64).into());
        let part: Element = self.source.one_element().iter().map(|m| m.scale_rational(&inv_p)).collect();
        CrossedElement { coeffs: vec![part; self.p()] }
    }

    /// `(Σ a_k U^k)(Σ b_l U^l) = Σ a_k α^k(b_l) U^{k+l}`.
    pub fn mul(&self, x: &CrossedElement, y: &CrossedElement) -> CrossedElement {
        let p = self.p();
        let mut out = self.zero();
        for (l, b) in y.coeffs.iter().enumerate() {
            if b.iter().all(Mat::is_zero) {
                continue;
            }
            let mut shifted = b.clone();
            for (k, a) in x.coeffs.iter().enumerate() {
                if k > 0 {
                    shifted = self.source.action(&shifted);
                }
                if a.iter().all(Mat::is_zero) {
                    continue;
                }
                let idx = (k + l) % p;
                for (blk, (ab, bb)) in a.iter().zip(&shifted).enumerate() {
                    out.coeffs[idx][blk] = &out.coeffs[idx][blk] + &(ab * bb);
                }
            }
        }
        out
    }

    /// `(a U^k)* = α^{-k}(a*) U^{-k}`.
    pub fn adjoint(&self, x: &CrossedElement) -> CrossedElement {
        let p = self.p();
        let mut out = self.zero();
        for (k, a) in x.coeffs.iter().enumerate() {
            let star: Element = a.iter().map(Mat::dagger).collect();
            out.coeffs[(p - k) % p] = self.source.action_pow(&star, -(k as i64));
        }
        out
    }

    /// The dual action: the coefficient of `U^k` is multiplied by `ζ_p^{-k}`.
    pub fn dual_action(&self, x: &CrossedElement) -> CrossedElement {
        let ctx = self.ctx();
        let coeffs = x
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let z = Scalar::p_root(ctx, -(k as i64));
                a.iter().map(|m| m.scale(&z)).collect()
            })
            .collect();
        CrossedElement { coeffs }
    }

    /// The matrix tuple corresponding to a crossed element.
    pub fn identify(&self, x: &CrossedElement) -> Element {
        let ctx = self.ctx();
        let p = self.p();
        let mut out = Vec::with_capacity(self.blocks.len());
        for (k, piece) in self.source.pieces().iter().enumerate() {
            let start = self.source.piece_start(k);
            match piece {
                Piece::Fixed { exponents } => {
                    let n = exponents.len();
                    for j in 0..p {
                        out.push(Mat::from_fn(ctx, n, n, |r, c| {
                            let mut acc = Scalar::zero(ctx);
                            for (kk, a) in x.coeffs.iter().enumerate() {
                                let v = a[start].get(r, c);
                                if !v.is_zero() {
                                    let e = (kk * (j + exponents[c] as usize)) as i64;
                                    acc = &acc + &(v * &Scalar::p_root(ctx, e));
                                }
                            }
                            acc
                        }));
                    }
                }
                Piece::Cycle { n } => {
                    let mut m = Mat::zero(ctx, p * n, p * n);
                    for r in 0..p {
                        for c in 0..p {
                            let kk = (c + p - r) % p;
                            let i = (p - r) % p;
                            m.set_block(r * n, c * n, &x.coeffs[kk][start + i]);
                        }
                    }
                    out.push(m);
                }
            }
        }
        out
    }

    /// Inverse of [`CrossedPresentation::identify`].
    pub fn unidentify(&self, y: &[Mat]) -> CrossedElement {
        let ctx = self.ctx();
        let p = self.p();
        let inv_p = Rational::new(1.into(), (p as i64).into());
        let mut out = self.zero();
        for (k, piece) in self.source.pieces().iter().enumerate() {
            let start = self.source.piece_start(k);
            let cb = self.piece_blocks[k].start;
            match piece {
                Piece::Fixed { exponents } => {
                    let n = exponents.len();
                    for (kk, coeff) in out.coeffs.iter_mut().enumerate() {
                        coeff[start] = Mat::from_fn(ctx, n, n, |r, c| {
                            let mut acc = Scalar::zero(ctx);
                            for j in 0..p {
                                let v = y[cb + j].get(r, c);
                                if !v.is_zero() {
                                    let e = -((kk * (j + exponents[c] as usize)) as i64);
                                    acc = &acc + &(v * &Scalar::p_root(ctx, e));
                                }
                            }
                            acc.scale(&inv_p)
                        });
                    }
                }
                Piece::Cycle { n } => {
                    let big = &y[cb];
                    for (kk, coeff) in out.coeffs.iter_mut().enumerate() {
                        for i in 0..p {
                            let r = (p - i) % p;
                            let c = (r + kk) % p;
                            coeff[start + i] = big.submatrix(r * n, c * n, *n, *n);
                        }
                    }
                }
            }
        }
        out
    }

    /// Ranks (traces) per crossed block of a projection given in matrix form.
    pub fn class_of(&self, y: &[Mat]) -> Result<Vec<i64>, CrossedError> {
        y.iter().map(|m| m.trace().as_integer().filter(|&t| t >= 0).ok_or(CrossedError::NonIntegralRank)).collect()
    }

    /// The rank-one projection `E_00` in crossed block `b`.
    pub fn minimal_projection(&self, b: usize) -> Element {
        let ctx = self.ctx();
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, &n)| if i == b { Mat::unit(ctx, n, 0, 0) } else { Mat::zero(ctx, n, n) })
            .collect()
    }

    /// The identification as a dense matrix. Columns run over the coefficient
    /// space (coefficient index major, then source block, then row-major
    /// entries); rows run over the crossed blocks' entries, row-major.
    pub fn identify_matrix(&self) -> Mat {
        let ctx = self.ctx();
        let sizes = self.source.block_sizes();
        let mut cols = Vec::new();
        for k in 0..self.p() {
            for (b, &n) in sizes.iter().enumerate() {
                for i in 0..n {
                    for j in 0..n {
                        let mut x = self.zero();
                        x.coeffs[k][b] = Mat::unit(ctx, n, i, j);
                        let img = self.identify(&x);
                        let flat: Vec<Scalar> = img.iter().flat_map(|m| m.entries().to_vec()).collect();
                        cols.push(flat);
                    }
                }
            }
        }
        let rows = cols.first().map_or(0, Vec::len);
        Mat::from_fn(ctx, rows, cols.len(), |r, c| cols[c][r].clone())
    }
}

/// `ψ̃(Σ a_k U^k) = Σ ψ(a_k) U^k` between the crossed products of an
/// equivariant homomorphism's source and target.
#[derive(Debug, Clone)]
pub struct ExtendedHom<'a> {
    hom: &'a EqHom,
    source: &'a CrossedPresentation,
    target: &'a CrossedPresentation,
}

impl<'a> ExtendedHom<'a> {
    pub fn new(hom: &'a EqHom, source: &'a CrossedPresentation, target: &'a CrossedPresentation) -> Result<Self, CrossedError> {
        if source.source() != hom.source() || target.source() != hom.target() {
            return Err(CrossedError::SystemMismatch);
        }
        let report = hom.validate();
        if !report.is_ok() {
            return Err(CrossedError::NotEquivariant(report.to_string()));
        }
        Ok(ExtendedHom { hom, source, target })
    }

    pub fn apply_element(&self, x: &CrossedElement) -> CrossedElement {
        CrossedElement { coeffs: x.coeffs.iter().map(|a| self.hom.apply(a)).collect() }
    }

    /// `ψ̃` in identified matrix coordinates.
    pub fn apply(&self, y: &[Mat]) -> Element {
        self.target.identify(&self.apply_element(&self.source.unidentify(y)))
    }

    /// `φ[b'][b]` = rank in target crossed block `b'` of the image of a minimal
    /// projection of source crossed block `b`.
    pub fn induced_matrix(&self) -> Result<Vec<Vec<i64>>, CrossedError> {
        let mc_a = self.source.num_blocks();
        let mc_b = self.target.num_blocks();
        let mut phi = vec![vec![0; mc_a]; mc_b];
        for b in 0..mc_a {
            let img = self.apply(&self.source.minimal_projection(b));
            for (bp, r) in self.target.class_of(&img)?.into_iter().enumerate() {
                phi[bp][b] = r;
            }
        }
        Ok(phi)
    }
}

/// Convenience wrapper: the crossed product of a canonical system.
pub fn crossed_product(c: &CanonicalSystem) -> CrossedPresentation {
    CrossedPresentation::new(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{decompose, Slot, TargetBlock};

    fn ctx(p: u32) -> FieldContext {
        FieldContext::with_default_order(p).unwrap()
    }

    fn sys(c: &FieldContext, pieces: Vec<Piece>) -> CanonicalSystem {
        CanonicalSystem::new(c, pieces).unwrap()
    }

    #[test]
    fn fixed_piece_p2() {
        let c = ctx(2);
        let cp = crossed_product(&sys(&c, vec![Piece::Fixed { exponents: vec![0, 1] }]));
        assert_eq!(cp.block_sizes(), &[2, 2]);
        assert_eq!(cp.special(), &[1, 1]);
        let a0 = Mat::from_ints(&c, &[vec![1, 2], vec![3, 4]]);
        let a1 = Mat::from_ints(&c, &[vec![5, 6], vec![7, 8]]);
        let x = CrossedElement { coeffs: vec![vec![a0.clone()], vec![a1.clone()]] };
        let v = Mat::root_diag(&c, &[0, 1]);
        let av = &a1 * &v;
        assert_eq!(cp.identify(&x), vec![&a0 + &av, &a0 - &av]);
        assert_eq!(cp.unidentify(&cp.identify(&x)), x);
    }

    #[test]
    fn cycle_piece_p2() {
        let c = ctx(2);
        let cp = crossed_product(&sys(&c, vec![Piece::Cycle { n: 1 }]));
        assert_eq!(cp.block_sizes(), &[2]);
        assert_eq!(cp.special(), &[1]);
        let a = vec![Mat::from_ints(&c, &[vec![3]]), Mat::from_ints(&c, &[vec![5]])];
        assert_eq!(cp.identify(&cp.iota(&a)), vec![Mat::from_ints(&c, &[vec![3, 0], vec![0, 5]])]);
    }

    #[test]
    fn fixed_trivial_p3_dual_is_a_three_cycle() {
        let c = ctx(3);
        let cp = crossed_product(&sys(&c, vec![Piece::Fixed { exponents: vec![0] }]));
        assert_eq!(cp.block_sizes(), &[1, 1, 1]);
        assert_eq!(cp.special(), &[1, 0, 0]);
        assert_eq!(cp.dual_system().sigma, vec![2, 0, 1]);
        assert!(cp.dual_system().validate().is_ok());
    }

    #[test]
    fn averaging_projection_ranks() {
        let c = ctx(2);
        let cp = crossed_product(&sys(&c, vec![Piece::Fixed { exponents: vec![0, 0, 0, 1] }]));
        let q = cp.identify(&cp.averaging_projection());
        assert_eq!(cp.class_of(&q).unwrap(), vec![3, 1]);
        let cp = crossed_product(&sys(&c, vec![Piece::Cycle { n: 1 }]));
        assert_eq!(cp.class_of(&cp.identify(&cp.averaging_projection())).unwrap(), vec![1]);
    }

    #[test]
    fn takai_dimension() {
        let c = ctx(3);
        let cp = crossed_product(&sys(&c, vec![Piece::Fixed { exponents: vec![0, 1] }]));
        let dual = decompose(cp.dual_system()).unwrap();
        let twice = crossed_product(&dual.canonical);
        assert_eq!(twice.block_sizes(), &[6]);
    }

    #[test]
    fn extension_of_a_scalar_embedding() {
        let c = ctx(2);
        let src = sys(&c, vec![Piece::Fixed { exponents: vec![0] }]);
        let tgt = sys(&c, vec![Piece::Fixed { exponents: vec![0, 1] }]);
        let h = EqHom::new(
            src.clone(),
            tgt.clone(),
            vec![TargetBlock { slots: vec![Slot { block: 0, mult: 2, phase: None }], conjugator: Mat::identity(&c, 2) }],
            true,
        )
        .unwrap();
        let (ca, cb) = (crossed_product(&src), crossed_product(&tgt));
        let ext = ExtendedHom::new(&h, &ca, &cb).unwrap();
        assert_eq!(ext.induced_matrix().unwrap(), vec![vec![1, 1], vec![1, 1]]);
        let qa = ca.identify(&ca.averaging_projection());
        assert_eq!(ext.apply(&qa), cb.identify(&cb.averaging_projection()));
    }

    #[test]
    fn identify_matrix_shape() {
        let c = ctx(2);
        let cp = crossed_product(&sys(&c, vec![Piece::Fixed { exponents: vec![0, 1] }]));
        let m = cp.identify_matrix();
        assert_eq!((m.rows(), m.cols()), (8, 8));
    }
}

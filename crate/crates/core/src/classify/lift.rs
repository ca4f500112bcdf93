//! Construction of an equivariant homomorphism realizing given K-data.
//!
//! The pair is sliced along piece boundaries. Each (source piece, target
//! piece) sub-block must have the shape forced by equivariance:
//!
//! | source → target | `F` sub-block      | `phi` sub-block     |
//! |-----------------|--------------------|---------------------|
//! | Fixed → Fixed   | one entry          | circulant           |
//! | Fixed → Cycle   | constant column    | constant row        |
//! | Cycle → Fixed   | constant row       | constant column     |
//! | Cycle → Cycle   | circulant          | one entry (row sum) |
//!
//! Fixed target blocks are then packed: every region records the matrix
//! `Λ` that `X† V X` must equal on it, and `X` is a permutation matching the
//! eigenvalues of `V` against `Λ`, corrected by a Fourier basis on regions
//! where `Λ` is a block shift.

use crate::crossed::CrossedPresentation;
use crate::cyclo::Scalar;
use crate::kinv::{check_pair, induced_map_with, invariant_with, KPair};
use crate::matrix::{match_diagonals, Mat};
use crate::system::{CanonicalSystem, EqHom, Piece, Slot, TargetBlock};

use super::ClassifyError;

/// Packing order. Both produce valid lifts of the same pair; `Reversed`
/// visits source pieces and phases backwards, which in general gives a
/// different (unitarily equivalent) homomorphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LiftOrder {
    #[default]
    Canonical,
    Reversed,
}

pub fn lift(kp: &KPair, src: &CanonicalSystem, tgt: &CanonicalSystem) -> Result<EqHom, ClassifyError> {
    lift_with(kp, src, tgt, LiftOrder::Canonical)
}

fn ordered(n: usize, order: LiftOrder) -> Vec<usize> {
    match order {
        LiftOrder::Canonical => (0..n).collect(),
        LiftOrder::Reversed => (0..n).rev().collect(),
    }
}

fn is_circulant(m: &[Vec<i64>]) -> bool {
    let p = m.len();
    (0..p).all(|r| (0..p).all(|j| m[r][j] == m[0][(j + p - r) % p]))
}

/// `F ⊗ I_k` with `F_{jc} = ζ_p^{-jc} / √p`; its columns diagonalize the
/// block shift `T[j][j-1] = I_k` with eigenvalue `ζ_p^c` on column block `c`.
fn fourier(ctx: &crate::FieldContext, k: usize) -> Result<Mat, ClassifyError> {
    let p = ctx.p();
    let sqrt_p = Scalar::sqrt_of_p(ctx).ok_or(ClassifyError::FieldTooSmall {
        p,
        order: ctx.order(),
        needed: if p % 4 == 1 { p } else { 4 * p },
    })?;
    let inv = sqrt_p.inv().expect("nonzero");
    let f = Mat::from_fn(ctx, p as usize, p as usize, |j, c| &Scalar::p_root(ctx, -((j * c) as i64)) * &inv);
    Ok(f.kron(&Mat::identity(ctx, k)))
}

struct Region {
    lambda: Vec<u32>,
    basis: Option<Mat>,
}

pub fn lift_with(kp: &KPair, src: &CanonicalSystem, tgt: &CanonicalSystem, order: LiftOrder) -> Result<EqHom, ClassifyError> {
    let ctx = src.ctx();
    let p = src.p() as usize;
    let ca = CrossedPresentation::new(src);
    let cb = CrossedPresentation::new(tgt);
    let (ia, ib) = (invariant_with(src, &ca), invariant_with(tgt, &cb));
    let report = check_pair(kp, &ia, &ib);
    if !report.is_ok() {
        return Err(ClassifyError::PairCheckFailed(report));
    }
    let f = &kp.f;
    let phi = &kp.phi;
    let mut blocks: Vec<Option<TargetBlock>> = vec![None; tgt.num_blocks()];
    let src_pieces = ordered(src.pieces().len(), order);
    let phases = ordered(p, order);

    for (ti, tpiece) in tgt.pieces().iter().enumerate() {
        let tstart = tgt.piece_start(ti);
        let trows = cb.piece_blocks(ti);
        let shape = |si: usize, detail: String| ClassifyError::CaseShapeViolation { source_piece: si, target_piece: ti, detail };
        match tpiece {
            Piece::Fixed { exponents: v } => {
                let mut slots = Vec::new();
                let mut regions = Vec::new();
                for &si in &src_pieces {
                    let sstart = src.piece_start(si);
                    let scols = ca.piece_blocks(si);
                    match &src.pieces()[si] {
                        Piece::Fixed { exponents: u } => {
                            let sub: Vec<Vec<i64>> = trows.clone().map(|r| phi[r][scols.clone()].to_vec()).collect();
                            if !is_circulant(&sub) {
                                return Err(shape(si, format!("phi sub-block {sub:?} is not circulant")));
                            }
                            let total: i64 = sub[0].iter().sum();
                            if f[tstart][sstart] != total {
                                return Err(shape(si, format!("F entry {} differs from the phi row sum {total}", f[tstart][sstart])));
                            }
                            for &c in &phases {
                                let cnt = sub[0][c] as usize;
                                if cnt == 0 {
                                    continue;
                                }
                                slots.push(Slot { block: sstart, mult: cnt, phase: Some(c as u32) });
                                let shifted: Vec<u32> = u.iter().map(|&e| (e + c as u32) % p as u32).collect();
                                let lambda = (0..cnt).flat_map(|_| shifted.iter().copied()).collect();
                                regions.push(Region { lambda, basis: None });
                            }
                        }
                        Piece::Cycle { n: k } => {
                            let row = &f[tstart][src.piece_blocks(si)];
                            let col: Vec<i64> = trows.clone().map(|r| phi[r][scols.start]).collect();
                            let m = row[0];
                            if row.iter().any(|&x| x != m) || col.iter().any(|&x| x != m) {
                                return Err(shape(si, format!("F row {row:?} and phi column {col:?} must be the same constant")));
                            }
                            for _ in 0..m {
                                for i in 0..p {
                                    slots.push(Slot { block: sstart + i, mult: 1, phase: None });
                                }
                                let lambda = (0..p as u32).flat_map(|c| std::iter::repeat_n(c, *k)).collect();
                                regions.push(Region { lambda, basis: Some(fourier(ctx, *k)?) });
                            }
                        }
                    }
                }
                let mut lambda: Vec<u32> = regions.iter().flat_map(|r| r.lambda.iter().copied()).collect();
                let mut left = vec![0i64; p];
                for &e in v {
                    left[e as usize] += 1;
                }
                for &e in &lambda {
                    left[e as usize] -= 1;
                }
                if left.iter().any(|&x| x < 0) || (kp.unital && left.iter().any(|&x| x != 0)) {
                    return Err(ClassifyError::PackingInfeasible {
                        block: tstart,
                        detail: format!("eigenvalue counts of V and of the packed slots differ by {left:?}"),
                    });
                }
                // padding takes the unused eigenvalues
                let pad_start = lambda.len();
                for (e, &cnt) in left.iter().enumerate() {
                    lambda.extend(std::iter::repeat_n(e as u32, cnt as usize));
                }
                let q = match_diagonals(&Mat::root_diag(ctx, v), &Mat::root_diag(ctx, &lambda), p as u32).map_err(|e| {
                    ClassifyError::PackingInfeasible { block: tstart, detail: e.to_string() }
                })?;
                let mut parts: Vec<Mat> = regions
                    .into_iter()
                    .map(|r| r.basis.unwrap_or_else(|| Mat::identity(ctx, r.lambda.len())))
                    .collect();
                if lambda.len() > pad_start {
                    parts.push(Mat::identity(ctx, lambda.len() - pad_start));
                }
                let phi_basis = Mat::block_diag(ctx, &parts);
                let conjugator = &q * &phi_basis.dagger();
                blocks[tstart] = Some(TargetBlock { slots, conjugator });
            }
            Piece::Cycle { n: m } => {
                let mut per_block: Vec<(Vec<Slot>, Vec<Mat>)> = vec![(Vec::new(), Vec::new()); p];
                for &si in &src_pieces {
                    let sstart = src.piece_start(si);
                    let scols = ca.piece_blocks(si);
                    match &src.pieces()[si] {
                        Piece::Fixed { exponents: u } => {
                            let col: Vec<i64> = (0..p).map(|j| f[tstart + j][sstart]).collect();
                            let row = &phi[trows.start][scols];
                            let c = col[0];
                            if col.iter().any(|&x| x != c) || row.iter().any(|&x| x != c) {
                                return Err(shape(si, format!("F column {col:?} and phi row {row:?} must be the same constant")));
                            }
                            if c == 0 {
                                continue;
                            }
                            for (j, (slots, conj)) in per_block.iter_mut().enumerate() {
                                slots.push(Slot { block: sstart, mult: c as usize, phase: None });
                                // U^{-j}
                                let exps: Vec<u32> = u.iter().map(|&e| ((p - (j * e as usize) % p) % p) as u32).collect();
                                conj.push(Mat::identity(ctx, c as usize).kron(&Mat::root_diag(ctx, &exps)));
                            }
                        }
                        Piece::Cycle { n: k } => {
                            let sub: Vec<Vec<i64>> = (0..p).map(|j| f[tstart + j][src.piece_blocks(si)].to_vec()).collect();
                            // F[j][i] = F[0][(i - j) mod p]
                            if !(0..p).all(|j| (0..p).all(|i| sub[j][i] == sub[0][(i + p - j) % p])) {
                                return Err(shape(si, format!("F sub-block {sub:?} is not circulant")));
                            }
                            let total: i64 = sub[0].iter().sum();
                            if phi[trows.start][scols.start] != total {
                                return Err(shape(
                                    si,
                                    format!("phi entry {} differs from the F row sum {total}", phi[trows.start][scols.start]),
                                ));
                            }
                            for (j, (slots, conj)) in per_block.iter_mut().enumerate() {
                                for &c in &phases {
                                    let cnt = sub[0][c] as usize;
                                    if cnt == 0 {
                                        continue;
                                    }
                                    slots.push(Slot { block: sstart + (j + c) % p, mult: cnt, phase: None });
                                    conj.push(Mat::identity(ctx, cnt * k));
                                }
                            }
                        }
                    }
                }
                for (j, (slots, mut conj)) in per_block.into_iter().enumerate() {
                    let used: usize = conj.iter().map(Mat::rows).sum();
                    if used > *m {
                        return Err(ClassifyError::PackingInfeasible {
                            block: tstart + j,
                            detail: format!("slots need {used} rows but the block has {m}"),
                        });
                    }
                    if used < *m {
                        conj.push(Mat::identity(ctx, m - used));
                    }
                    blocks[tstart + j] = Some(TargetBlock { slots, conjugator: Mat::block_diag(ctx, &conj) });
                }
            }
        }
    }

    let blocks = blocks.into_iter().map(|b| b.expect("every target block assigned")).collect();
    let h = EqHom::new(src.clone(), tgt.clone(), blocks, kp.unital)?;
    let report = h.validate();
    if !report.is_ok() {
        return Err(ClassifyError::InvalidHom(report));
    }
    let found = induced_map_with(&h, &ca, &cb)?;
    if &found != kp {
        return Err(ClassifyError::RoundTrip { expected: kp.clone(), found });
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::FieldContext;
    use crate::kinv::induced_map;

    fn sys(p: u32, pieces: Vec<Piece>) -> CanonicalSystem {
        CanonicalSystem::new(&FieldContext::with_default_order(p).unwrap(), pieces).unwrap()
    }

    fn pair(f: Vec<Vec<i64>>, phi: Vec<Vec<i64>>) -> KPair {
        KPair { f, phi, unital: true }
    }

    #[test]
    fn scalar_into_m2() {
        let a = sys(2, vec![Piece::Fixed { exponents: vec![0] }]);
        let b = sys(2, vec![Piece::Fixed { exponents: vec![0, 1] }]);
        let kp = pair(vec![vec![2]], vec![vec![1, 1], vec![1, 1]]);
        let h = lift(&kp, &a, &b).unwrap();
        assert_eq!(induced_map(&h).unwrap(), kp);
        assert!(h.blocks()[0].conjugator.is_permutation());
    }

    #[test]
    fn fixed_into_cycle() {
        let a = sys(2, vec![Piece::Fixed { exponents: vec![0] }]);
        let b = sys(2, vec![Piece::Cycle { n: 1 }]);
        let kp = pair(vec![vec![1], vec![1]], vec![vec![1, 1]]);
        let h = lift(&kp, &a, &b).unwrap();
        assert_eq!(h.apply(&[Mat::from_ints(a.ctx(), &[vec![7]])]), vec![Mat::from_ints(a.ctx(), &[vec![7]]); 2]);
    }

    #[test]
    fn cycle_into_fixed_needs_fourier_basis() {
        let a = sys(2, vec![Piece::Cycle { n: 1 }]);
        let b = sys(2, vec![Piece::Fixed { exponents: vec![0, 1] }]);
        let kp = pair(vec![vec![1, 1]], vec![vec![1], vec![1]]);
        let h = lift(&kp, &a, &b).unwrap();
        let x = &h.blocks()[0].conjugator;
        let l = &(&x.dagger() * &Mat::root_diag(a.ctx(), &[0, 1])) * x;
        assert_eq!(l, Mat::from_ints(a.ctx(), &[vec![0, 1], vec![1, 0]]));
    }

    #[test]
    fn cycle_into_cycle_p3() {
        let a = sys(3, vec![Piece::Cycle { n: 1 }]);
        let b = sys(3, vec![Piece::Cycle { n: 2 }]);
        let kp = pair(vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]], vec![vec![2]]);
        let h = lift(&kp, &a, &b).unwrap();
        let h2 = lift_with(&kp, &a, &b, LiftOrder::Reversed).unwrap();
        assert_ne!(h, h2);
        assert_eq!(induced_map(&h2).unwrap(), kp);
    }

    #[test]
    fn mixed_pieces_p3() {
        let a = sys(3, vec![Piece::Fixed { exponents: vec![0] }, Piece::Cycle { n: 1 }]);
        let b = sys(3, vec![Piece::Fixed { exponents: vec![0, 0, 1, 2] }]);
        // trivial M_1 with phase 0 plus one copy of the cycle
        let kp = pair(vec![vec![1, 1, 1, 1]], vec![vec![1, 0, 0, 1], vec![0, 1, 0, 1], vec![0, 0, 1, 1]]);
        for order in [LiftOrder::Canonical, LiftOrder::Reversed] {
            assert_eq!(induced_map(&lift_with(&kp, &a, &b, order).unwrap()).unwrap(), kp);
        }
    }

    #[test]
    fn rejects_bad_pairs() {
        let a = sys(2, vec![Piece::Fixed { exponents: vec![0, 1] }]);
        let b = sys(2, vec![Piece::Fixed { exponents: vec![0, 0, 0, 1] }]);
        let kp = pair(vec![vec![2]], vec![vec![1, 1], vec![1, 1]]);
        assert!(matches!(lift(&kp, &a, &b), Err(ClassifyError::PairCheckFailed(_))));
    }
}

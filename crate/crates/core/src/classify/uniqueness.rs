//! A unitary in the fixed-point algebra conjugating one homomorphism into
//! another with the same K-data.
//!
//! After regrouping the slots of each target block by source block, both
//! homs read `ψ_i(a) = X_i (⊕_s I_{f_s} ⊗ a_s ⊕ 0) X_i†`, so any
//! `W = X_1 C X_2†` with `C = ⊕ (C_s ⊗ I) ⊕ C_pad` conjugates `ψ_2` to `ψ_1`.
//! On a fixed target block `β(W) = W` becomes `L C = C N` with
//! `L = X_1† V X_1` and `N = X_2† V X_2`, which is solved region by region.
//! On a cycle target piece `W` must be the same in every block and
//! `X_{1,0} X_{2,0}†` works.

use serde::{Deserialize, Serialize};

use crate::kinv::induced_map;
use crate::matrix::{intertwining_unitary, Mat, MatrixError};
use crate::report::Report;
use crate::system::{EqHom, Element, Piece};

use super::ClassifyError;

/// Per target block: the commutant data `L`, `N` (fixed blocks only), the
/// multiplicity-space conjugator `C` and the resulting `W_t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessBlock {
    pub l: Option<Mat>,
    pub n: Option<Mat>,
    pub c: Mat,
    pub w: Mat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessWitness {
    pub blocks: Vec<WitnessBlock>,
}

impl UniquenessWitness {
    pub fn unitary(&self) -> Element {
        self.blocks.iter().map(|b| b.w.clone()).collect()
    }
}

/// Content rows of target block `t`, reordered so that copies of each
/// source block are consecutive (source blocks ascending), padding last.
/// Returns the permutation and the row ranges of each source block.
fn grouping(h: &EqHom, t: usize) -> (Vec<usize>, Vec<std::ops::Range<usize>>) {
    let sizes = h.source().block_sizes();
    let size = h.target().block_sizes()[t];
    let mut order = Vec::with_capacity(size);
    let mut ranges = Vec::with_capacity(sizes.len());
    for (s, &n) in sizes.iter().enumerate() {
        let start = order.len();
        for off in h.copy_offsets(t, s) {
            order.extend(off..off + n);
        }
        ranges.push(start..order.len());
    }
    let used = order.len();
    order.extend(used..size);
    (order, ranges)
}

fn regroup(h: &EqHom, t: usize) -> (Mat, Vec<std::ops::Range<usize>>) {
    let (order, ranges) = grouping(h, t);
    let g = Mat::permutation(h.source().ctx(), &order);
    (&h.blocks()[t].conjugator * &g, ranges)
}

fn unitary_err(block: usize) -> impl Fn(MatrixError) -> ClassifyError {
    move |_| ClassifyError::UnitaryNotFoundInField { block }
}

/// `W` with `W† W = I`, `β(W) = W` and `Ad W ∘ h2 = h1`.
pub fn equiv_unitary(h1: &EqHom, h2: &EqHom) -> Result<(Element, UniquenessWitness), ClassifyError> {
    if h1.source() != h2.source() || h1.target() != h2.target() {
        return Err(ClassifyError::Hom(crate::system::HomError::SystemMismatch));
    }
    for h in [h1, h2] {
        let r = h.validate();
        if !r.is_ok() {
            return Err(ClassifyError::InvalidHom(r));
        }
    }
    let (k1, k2) = (induced_map(h1)?, induced_map(h2)?);
    if k1 != k2 {
        return Err(ClassifyError::KDataMismatch { first: k1, second: k2 });
    }
    let src = h1.source();
    let tgt = h1.target();
    let ctx = src.ctx();
    let p = src.p();
    let sizes = src.block_sizes();
    let mut blocks: Vec<Option<WitnessBlock>> = vec![None; tgt.num_blocks()];

    for (ti, tpiece) in tgt.pieces().iter().enumerate() {
        let tstart = tgt.piece_start(ti);
        match tpiece {
            Piece::Fixed { exponents } => {
                let t = tstart;
                let v = Mat::root_diag(ctx, exponents);
                let (x1, ranges) = regroup(h1, t);
                let (x2, _) = regroup(h2, t);
                let l = &(&x1.dagger() * &v) * &x1;
                let nn = &(&x2.dagger() * &v) * &x2;
                let size = v.rows();
                let mut c = Mat::zero(ctx, size, size);
                for (si, spiece) in src.pieces().iter().enumerate() {
                    let sblocks = src.piece_blocks(si);
                    match spiece {
                        Piece::Fixed { exponents: u } => {
                            let s = sblocks.start;
                            let r = &ranges[s];
                            let n = sizes[s];
                            let f = r.len() / n;
                            if f == 0 {
                                continue;
                            }
                            let u00 = crate::cyclo::Scalar::p_root(ctx, u[0] as i64).inv().expect("root of unity");
                            let mult = |m: &Mat| Mat::from_fn(ctx, f, f, |a, b| m.get(r.start + a * n, r.start + b * n) * &u00);
                            let (ll, ln) = (mult(&l), mult(&nn));
                            let cs = intertwining_unitary(&ll, &ln, p).map_err(unitary_err(t))?;
                            c.set_block(r.start, r.start, &cs.kron(&Mat::identity(ctx, n)));
                        }
                        Piece::Cycle { n } => {
                            let rs: Vec<_> = sblocks.clone().map(|b| ranges[b].clone()).collect();
                            let f = rs[0].len() / n;
                            if f == 0 {
                                continue;
                            }
                            // L[R_j][R_{j-1}] = Λ_j ⊗ I_n
                            let lam = |m: &Mat, j: usize| {
                                let (rj, rprev) = (&rs[j], &rs[(j + p as usize - 1) % p as usize]);
                                Mat::from_fn(ctx, f, f, |a, b| m.get(rj.start + a * n, rprev.start + b * n).clone())
                            };
                            let mut cj = Mat::identity(ctx, f);
                            c.set_block(rs[0].start, rs[0].start, &cj.kron(&Mat::identity(ctx, *n)));
                            for j in 1..p as usize {
                                cj = &(&lam(&l, j) * &cj) * &lam(&nn, j).dagger();
                                c.set_block(rs[j].start, rs[j].start, &cj.kron(&Mat::identity(ctx, *n)));
                            }
                        }
                    }
                }
                let used = h1.used(t);
                if used < size {
                    let pad = size - used;
                    let lp = l.submatrix(used, used, pad, pad);
                    let np = nn.submatrix(used, used, pad, pad);
                    let cp = intertwining_unitary(&lp, &np, p).map_err(unitary_err(t))?;
                    c.set_block(used, used, &cp);
                }
                if &l * &c != &c * &nn || !c.is_unitary() {
                    return Err(ClassifyError::UnitaryNotFoundInField { block: t });
                }
                let w = &(&x1 * &c) * &x2.dagger();
                blocks[t] = Some(WitnessBlock { l: Some(l), n: Some(nn), c, w });
            }
            Piece::Cycle { .. } => {
                let (x1, _) = regroup(h1, tstart);
                let (x2, _) = regroup(h2, tstart);
                let w = &x1 * &x2.dagger();
                let c = Mat::identity(ctx, w.rows());
                for t in tgt.piece_blocks(ti) {
                    blocks[t] = Some(WitnessBlock { l: None, n: None, c: c.clone(), w: w.clone() });
                }
            }
        }
    }
    let witness = UniquenessWitness { blocks: blocks.into_iter().map(|b| b.expect("every block assigned")).collect() };
    let w = witness.unitary();
    let report = verify_equivalence(h1, h2, &w);
    if !report.is_ok() {
        return Err(ClassifyError::WitnessFailed(report));
    }
    Ok((w, witness))
}

/// Exact check that `W` is a unitary fixed by the target action with
/// `W ψ_2(E) W† = ψ_1(E)` on every source matrix unit.
pub fn verify_equivalence(h1: &EqHom, h2: &EqHom, w: &[Mat]) -> Report {
    let mut r = Report::new();
    let tgt = h1.target();
    if w.len() != tgt.num_blocks() || w.iter().zip(tgt.block_sizes()).any(|(m, &n)| m.rows() != n || m.cols() != n) {
        r.push("shape", "W", "does not match the target blocks");
        return r;
    }
    for (t, m) in w.iter().enumerate() {
        if !m.is_unitary() {
            r.push("unitary", format!("W block {}", t + 1), "W^* W != I");
        }
    }
    let bw = tgt.action(w);
    for t in 0..w.len() {
        if bw[t] != w[t] {
            r.push("fixed point", format!("W block {}", t + 1), "beta(W) != W");
        }
    }
    if !r.is_ok() {
        return r;
    }
    let sizes = h1.source().block_sizes();
    for (s, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let a = h1.image_of_unit(s, i, j);
                let b = h2.image_of_unit(s, i, j);
                for t in 0..w.len() {
                    if &w[t] * &b[t] != &a[t] * &w[t] {
                        r.push(
                            "conjugation",
                            format!("source block {}, unit E_{}{}", s + 1, i + 1, j + 1),
                            format!("W psi_2(E) W^* != psi_1(E) in target block {}", t + 1),
                        );
                    }
                }
            }
        }
    }
    r
}

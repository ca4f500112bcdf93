use thiserror::Error;

use crate::cyclo::Scalar;
use crate::matrix::Mat;
use crate::report::Report;

use super::{CanonicalSystem, Element};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomError {
    #[error("target has {expected} blocks but {found} block maps were given")]
    BlockCount { expected: usize, found: usize },
    #[error("target block {block}: slot refers to source block {source_block}, which does not exist")]
    SlotOutOfRange { block: usize, source_block: usize },
    #[error("target block {block}: slots need size {used} but the block has size {size}")]
    Overfull { block: usize, used: usize, size: usize },
    #[error("target block {block}: conjugator must be {size}x{size}")]
    ConjugatorShape { block: usize, size: usize },
    #[error("target block {block}: phase {phase} is not below p")]
    PhaseOutOfRange { block: usize, phase: u32 },
    #[error("source and target use different fields")]
    ContextMismatch,
    #[error("the systems do not match: the target of the first map is not the source of the second")]
    SystemMismatch,
}

/// `mult` copies of source block `block`, i.e. the content `I_mult ⊗ a_block`.
///
/// `phase = Some(c)` records that, for a fixed source block inside a fixed
/// target block, the target unitary restricted to this slot (after
/// conjugation by the block's conjugator) is `ζ_p^c (I ⊗ V_source)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Slot {
    pub block: usize,
    pub mult: usize,
    pub phase: Option<u32>,
}

/// How one target block is filled: `ψ(a)_t = X · (⊕ slots ⊕ 0) · X†`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetBlock {
    pub slots: Vec<Slot>,
    pub conjugator: Mat,
}

/// An explicit *-homomorphism between canonical systems, stored as slot
/// arrangements plus conjugating unitaries. Adjacent equal slots are merged,
/// so two homs with the same matrices and arrangement compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqHom {
    source: CanonicalSystem,
    target: CanonicalSystem,
    blocks: Vec<TargetBlock>,
    unital: bool,
}

fn merge_slots(slots: Vec<Slot>) -> Vec<Slot> {
    let mut out: Vec<Slot> = Vec::with_capacity(slots.len());
    for s in slots.into_iter().filter(|s| s.mult > 0) {
        match out.last_mut() {
            Some(last) if last.block == s.block && last.phase == s.phase => last.mult += s.mult,
            _ => out.push(s),
        }
    }
    out
}

impl EqHom {
    /// Checks the arrangement is well formed and normalizes it. Unitarity and
    /// equivariance are left to [`EqHom::validate`].
    pub fn new(
        source: CanonicalSystem,
        target: CanonicalSystem,
        blocks: Vec<TargetBlock>,
        unital: bool,
    ) -> Result<Self, HomError> {
        if source.ctx() != target.ctx() {
            return Err(HomError::ContextMismatch);
        }
        if blocks.len() != target.num_blocks() {
            return Err(HomError::BlockCount { expected: target.num_blocks(), found: blocks.len() });
        }
        let p = source.p();
        let mut normalized = Vec::with_capacity(blocks.len());
        for (t, tb) in blocks.into_iter().enumerate() {
            let size = target.block_sizes()[t];
            let mut used = 0;
            for s in &tb.slots {
                if s.block >= source.num_blocks() {
                    return Err(HomError::SlotOutOfRange { block: t, source_block: s.block });
                }
                if let Some(c) = s.phase {
                    if c >= p {
                        return Err(HomError::PhaseOutOfRange { block: t, phase: c });
                    }
                }
                used += s.mult * source.block_sizes()[s.block];
            }
            if used > size {
                return Err(HomError::Overfull { block: t, used, size });
            }
            if tb.conjugator.rows() != size || tb.conjugator.cols() != size {
                return Err(HomError::ConjugatorShape { block: t, size });
            }
            if tb.conjugator.ctx() != source.ctx() {
                return Err(HomError::ContextMismatch);
            }
            normalized.push(TargetBlock { slots: merge_slots(tb.slots), conjugator: tb.conjugator });
        }
        Ok(EqHom { source, target, blocks: normalized, unital })
    }

    pub fn source(&self) -> &CanonicalSystem {
        &self.source
    }

    pub fn target(&self) -> &CanonicalSystem {
        &self.target
    }

    pub fn blocks(&self) -> &[TargetBlock] {
        &self.blocks
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    /// Rows of target block `t` occupied by slots.
    pub fn used(&self, t: usize) -> usize {
        self.blocks[t].slots.iter().map(|s| s.mult * self.source.block_sizes()[s.block]).sum()
    }

    /// Does every target block get filled completely?
    pub fn fills_targets(&self) -> bool {
        (0..self.blocks.len()).all(|t| self.used(t) == self.target.block_sizes()[t])
    }

    /// Multiplicity of source block `s` in target block `t`.
    pub fn multiplicity(&self, t: usize, s: usize) -> usize {
        self.blocks[t].slots.iter().filter(|x| x.block == s).map(|x| x.mult).sum()
    }

    /// Row offsets of each copy of source block `s` inside target block `t`.
    pub fn copy_offsets(&self, t: usize, s: usize) -> Vec<usize> {
        let sizes = self.source.block_sizes();
        let mut out = Vec::new();
        let mut off = 0;
        for slot in &self.blocks[t].slots {
            let n = sizes[slot.block];
            for _ in 0..slot.mult {
                if slot.block == s {
                    out.push(off);
                }
                off += n;
            }
        }
        out
    }

    /// The block-diagonal content `⊕ (I_mult ⊗ a_s) ⊕ 0` before conjugation.
    pub fn content(&self, t: usize, a: &[Mat]) -> Mat {
        let ctx = self.source.ctx();
        let size = self.target.block_sizes()[t];
        let mut d = Mat::zero(ctx, size, size);
        let mut off = 0;
        for slot in &self.blocks[t].slots {
            let x = &a[slot.block];
            for _ in 0..slot.mult {
                d.set_block(off, off, x);
                off += x.rows();
            }
        }
        d
    }

    /// `ψ(a)`.
    pub fn apply(&self, a: &[Mat]) -> Element {
        (0..self.blocks.len()).map(|t| self.blocks[t].conjugator.conjugate(&self.content(t, a))).collect()
    }

    /// `ψ(E^s_ij)`, computed as a sum of outer products of conjugator columns.
    pub fn image_of_unit(&self, s: usize, i: usize, j: usize) -> Element {
        let ctx = self.source.ctx();
        (0..self.blocks.len())
            .map(|t| {
                let size = self.target.block_sizes()[t];
                let x = &self.blocks[t].conjugator;
                let mut out = Mat::zero(ctx, size, size);
                for off in self.copy_offsets(t, s) {
                    let (ci, cj) = (off + i, off + j);
                    let col_j: Vec<Scalar> = (0..size).map(|r| x.get(r, cj).conj()).collect();
                    for r in 0..size {
                        let a = x.get(r, ci);
                        if a.is_zero() {
                            continue;
                        }
                        for (c, b) in col_j.iter().enumerate() {
                            if b.is_zero() {
                                continue;
                            }
                            let v = &out.get(r, c).clone() + &(a * b);
                            out.set(r, c, v);
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// The identity map of a canonical system.
    pub fn identity(c: &CanonicalSystem) -> EqHom {
        let blocks = (0..c.num_blocks())
            .map(|t| TargetBlock {
                slots: vec![Slot { block: t, mult: 1, phase: c.is_fixed_block(t).then_some(0) }],
                conjugator: Mat::identity(c.ctx(), c.block_sizes()[t]),
            })
            .collect();
        EqHom { source: c.clone(), target: c.clone(), blocks, unital: true }
    }

    /// `Ad W ∘ ψ` for `W = (W_t)` in the target: conjugators become `W_t X_t`.
    pub fn conjugated_by(&self, w: &[Mat]) -> EqHom {
        let blocks = self
            .blocks
            .iter()
            .zip(w)
            .map(|(tb, wt)| TargetBlock { slots: tb.slots.clone(), conjugator: wt * &tb.conjugator })
            .collect();
        EqHom { source: self.source.clone(), target: self.target.clone(), blocks, unital: self.unital }
    }

    /// `g ∘ h`.
    pub fn compose(g: &EqHom, h: &EqHom) -> Result<EqHom, HomError> {
        if h.target != g.source {
            return Err(HomError::SystemMismatch);
        }
        let ctx = h.source.ctx();
        let p = h.source.p();
        let mid_sizes = h.target.block_sizes();
        let mut blocks = Vec::with_capacity(g.blocks.len());
        for (u, gb) in g.blocks.iter().enumerate() {
            let size = g.target.block_sizes()[u];
            let mut slots = Vec::new();
            // rows of the expanded content holding source data, then padding rows
            let mut data_rows = Vec::new();
            let mut pad_rows = Vec::new();
            let mut inner = Vec::new();
            let mut row = 0;
            for gs in &gb.slots {
                let t = gs.block;
                let hb = &h.blocks[t];
                let used = h.used(t);
                for _ in 0..gs.mult {
                    for hs in &hb.slots {
                        let phase = match (gs.phase, hs.phase) {
                            (Some(a), Some(b)) => Some((a + b) % p),
                            _ => None,
                        };
                        slots.push(Slot { block: hs.block, mult: hs.mult, phase });
                    }
                    data_rows.extend(row..row + used);
                    pad_rows.extend(row + used..row + mid_sizes[t]);
                    inner.push(hb.conjugator.clone());
                    row += mid_sizes[t];
                }
            }
            if row < size {
                inner.push(Mat::identity(ctx, size - row));
                pad_rows.extend(row..size);
            }
            let b = Mat::block_diag(ctx, &inner);
            let order: Vec<usize> = data_rows.into_iter().chain(pad_rows).collect();
            let conjugator = &(&gb.conjugator * &b) * &Mat::permutation(ctx, &order);
            blocks.push(TargetBlock { slots: merge_slots(slots), conjugator });
        }
        Ok(EqHom { source: h.source.clone(), target: g.target.clone(), blocks, unital: g.unital && h.unital })
    }

    /// First source matrix unit `(block, i, j)` on which the two maps differ,
    /// comparing values rather than arrangements.
    pub fn first_difference(&self, other: &EqHom) -> Option<(usize, usize, usize)> {
        let sizes = self.source.block_sizes();
        if self.source != other.source || self.target != other.target {
            return Some((0, 0, 0));
        }
        for (s, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    if self.image_of_unit(s, i, j) != other.image_of_unit(s, i, j) {
                        return Some((s, i, j));
                    }
                }
            }
        }
        None
    }

    /// Exact check of unitarity, unitality and `ψ∘α = β∘ψ` on every source
    /// matrix unit. Every failing identity is listed.
    pub fn validate(&self) -> Report {
        let mut r = Report::new();
        for (t, tb) in self.blocks.iter().enumerate() {
            if !tb.conjugator.is_unitary() {
                r.push("unitary conjugator", format!("target block {}", t + 1), "X^* X != I");
            }
        }
        if self.unital != self.fills_targets() {
            let detail = if self.unital {
                "flagged unital but some target block is not filled"
            } else {
                "flagged non-unital but every target block is filled"
            };
            r.push("unital", "hom", detail);
        }
        self.check_phases(&mut r);
        if !r.is_ok() {
            return r;
        }
        let sizes = self.source.block_sizes();
        for s in 0..self.source.num_blocks() {
            for i in 0..sizes[s] {
                for j in 0..sizes[s] {
                    let (c, s2) = self.source.action_on_unit(s, i, j);
                    let lhs: Element = self.image_of_unit(s2, i, j).iter().map(|m| m.scale(&c)).collect();
                    let rhs = self.target.action(&self.image_of_unit(s, i, j));
                    if let Some(t) = (0..lhs.len()).find(|&t| lhs[t] != rhs[t]) {
                        r.push(
                            "equivariance",
                            format!("source block {}, unit E_{}{}", s + 1, i + 1, j + 1),
                            format!("psi(alpha(E)) != beta(psi(E)) in target block {}", t + 1),
                        );
                    }
                }
            }
        }
        r
    }

    fn check_phases(&self, r: &mut Report) {
        let sizes = self.source.block_sizes();
        for (t, tb) in self.blocks.iter().enumerate() {
            if !tb.slots.iter().any(|s| s.phase.is_some()) {
                continue;
            }
            let Some(vt) = self.target.exponents(t) else {
                r.push("phase", format!("target block {}", t + 1), "phases are only meaningful in fixed target blocks");
                continue;
            };
            let ctx = self.source.ctx();
            let x = &tb.conjugator;
            let l = &(&x.dagger() * &Mat::root_diag(ctx, vt)) * x;
            let mut off = 0;
            for slot in &tb.slots {
                let n = sizes[slot.block];
                let len = n * slot.mult;
                if let Some(c) = slot.phase {
                    let ok = match self.source.exponents(slot.block) {
                        Some(u) => {
                            let want = Mat::identity(ctx, slot.mult).kron(&Mat::root_diag(ctx, u)).scale(&Scalar::p_root(ctx, c as i64));
                            l.submatrix(off, off, len, len) == want
                                && (0..l.rows()).all(|k| {
                                    (k >= off && k < off + len) || (off..off + len).all(|q| l.get(k, q).is_zero() && l.get(q, k).is_zero())
                                })
                        }
                        None => false,
                    };
                    if !ok {
                        r.push(
                            "phase",
                            format!("target block {}, slot of source block {}", t + 1, slot.block + 1),
                            format!("X^* V X is not zeta_p^{c} (I (x) U) on this slot"),
                        );
                    }
                }
                off += len;
            }
        }
    }

    /// Splits fixed-into-fixed slots into copies and records the phase of each
    /// copy when `X† V X` has the form `ζ_p^c U` there.
    pub fn with_inferred_phases(&self) -> EqHom {
        let ctx = self.source.ctx();
        let sizes = self.source.block_sizes();
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (t, tb) in self.blocks.iter().enumerate() {
            let Some(vt) = self.target.exponents(t) else {
                let slots = tb.slots.iter().map(|s| Slot { phase: None, ..s.clone() }).collect();
                blocks.push(TargetBlock { slots: merge_slots(slots), conjugator: tb.conjugator.clone() });
                continue;
            };
            let x = &tb.conjugator;
            let l = &(&x.dagger() * &Mat::root_diag(ctx, vt)) * x;
            let mut slots = Vec::new();
            let mut off = 0;
            for slot in &tb.slots {
                let n = sizes[slot.block];
                for _ in 0..slot.mult {
                    let phase = self.source.exponents(slot.block).and_then(|u| {
                        let isolated = (0..l.rows()).all(|k| {
                            (k >= off && k < off + n) || (off..off + n).all(|q| l.get(k, q).is_zero() && l.get(q, k).is_zero())
                        });
                        if !isolated {
                            return None;
                        }
                        let region = l.submatrix(off, off, n, n);
                        let c = region.get(0, 0).p_root_exponent()?;
                        let c = (c + ctx.p() - u[0]) % ctx.p();
                        (region == Mat::root_diag(ctx, u).scale(&Scalar::p_root(ctx, c as i64))).then_some(c)
                    });
                    slots.push(Slot { block: slot.block, mult: 1, phase });
                    off += n;
                }
            }
            blocks.push(TargetBlock { slots: merge_slots(slots), conjugator: tb.conjugator.clone() });
        }
        EqHom { source: self.source.clone(), target: self.target.clone(), blocks, unital: self.unital }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::FieldContext;
    use crate::system::Piece;

    fn ctx2() -> FieldContext {
        FieldContext::with_default_order(2).unwrap()
    }

    fn fixed(ctx: &FieldContext, e: &[u32]) -> CanonicalSystem {
        CanonicalSystem::new(ctx, vec![Piece::Fixed { exponents: e.to_vec() }]).unwrap()
    }

    #[test]
    fn identity_validates() {
        let c = ctx2();
        let cs = CanonicalSystem::new(&c, vec![Piece::Fixed { exponents: vec![0, 1] }, Piece::Cycle { n: 2 }]).unwrap();
        assert!(EqHom::identity(&cs).validate().is_ok());
    }

    #[test]
    fn naive_doubling_fails_equivariance() {
        let c = ctx2();
        let h = EqHom::new(
            fixed(&c, &[0, 1]),
            fixed(&c, &[0, 0, 0, 1]),
            vec![TargetBlock { slots: vec![Slot { block: 0, mult: 2, phase: None }], conjugator: Mat::identity(&c, 4) }],
            true,
        )
        .unwrap();
        let r = h.validate();
        assert!(!r.is_ok());
        assert!(r.violations.iter().all(|v| v.check == "equivariance"));
        assert!(r.violations.iter().any(|v| v.location == "source block 1, unit E_12"));
    }

    #[test]
    fn scalar_embedding_is_equivariant() {
        let c = ctx2();
        let h = EqHom::new(
            fixed(&c, &[0]),
            fixed(&c, &[0, 1]),
            vec![TargetBlock { slots: vec![Slot { block: 0, mult: 2, phase: None }], conjugator: Mat::identity(&c, 2) }],
            true,
        )
        .unwrap();
        assert!(h.validate().is_ok());
        let inferred = h.with_inferred_phases();
        assert_eq!(
            inferred.blocks()[0].slots,
            vec![Slot { block: 0, mult: 1, phase: Some(0) }, Slot { block: 0, mult: 1, phase: Some(1) }]
        );
        assert!(inferred.validate().is_ok());
    }

    #[test]
    fn composition_of_multiplicity_two_embeddings() {
        let c = ctx2();
        let m = |n: usize| fixed(&c, &vec![0; n]);
        let double = |a: usize, b: usize| {
            EqHom::new(
                m(a),
                m(b),
                vec![TargetBlock { slots: vec![Slot { block: 0, mult: 2, phase: Some(0) }], conjugator: Mat::identity(&c, b) }],
                true,
            )
            .unwrap()
        };
        let g = double(2, 4);
        let h = double(1, 2);
        let gh = EqHom::compose(&g, &h).unwrap();
        assert_eq!(gh.blocks()[0].slots, vec![Slot { block: 0, mult: 4, phase: Some(0) }]);
        assert_eq!(gh.blocks()[0].conjugator, Mat::identity(&c, 4));
        assert!(gh.validate().is_ok());
        assert_eq!(EqHom::compose(&g, &EqHom::identity(&m(2))).unwrap(), g);
        assert_eq!(EqHom::compose(&EqHom::identity(&m(4)), &g).unwrap(), g);
        assert_eq!(EqHom::compose(&h, &g), Err(HomError::SystemMismatch));
    }

    #[test]
    fn compose_moves_padding_to_the_end() {
        let c = ctx2();
        let m = |n: usize| fixed(&c, &vec![0; n]);
        let h = EqHom::new(
            m(1),
            m(2),
            vec![TargetBlock { slots: vec![Slot { block: 0, mult: 1, phase: None }], conjugator: Mat::identity(&c, 2) }],
            false,
        )
        .unwrap();
        let g = EqHom::new(
            m(2),
            m(4),
            vec![TargetBlock { slots: vec![Slot { block: 0, mult: 2, phase: None }], conjugator: Mat::identity(&c, 4) }],
            true,
        )
        .unwrap();
        let gh = EqHom::compose(&g, &h).unwrap();
        assert!(gh.validate().is_ok());
        let a = vec![Mat::from_ints(&c, &[vec![7]])];
        assert_eq!(gh.apply(&a), g.apply(&h.apply(&a)));
    }
}

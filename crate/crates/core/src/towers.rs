//! Finite truncations of inductive systems `A_0 → A_1 → …` of canonical
//! systems, and the standard examples.

use crate::cyclo::FieldContext;
use crate::matrix::{commutation_matrix, match_diagonals, Mat};
use crate::report::Report;
use crate::system::{CanonicalSystem, EqHom, HomError, Piece, Slot, SystemError, TargetBlock};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tower {
    pub systems: Vec<CanonicalSystem>,
    pub maps: Vec<EqHom>,
}

impl Tower {
    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    /// Structural agreement of stages and maps, then full validation of every
    /// connecting map.
    pub fn validate(&self) -> Report {
        let mut r = Report::new();
        if self.systems.is_empty() {
            r.push("shape", "tower", "no stages");
            return r;
        }
        if self.maps.len() + 1 != self.systems.len() {
            r.push("shape", "tower", format!("{} stages need {} maps, found {}", self.systems.len(), self.systems.len() - 1, self.maps.len()));
            return r;
        }
        for (i, h) in self.maps.iter().enumerate() {
            let loc = format!("map {i} -> {}", i + 1);
            if h.source() != &self.systems[i] || h.target() != &self.systems[i + 1] {
                r.push("shape", loc, "source or target differs from the stage systems");
                continue;
            }
            if !h.is_unital() {
                r.push("unital", loc.clone(), "connecting maps must be unital");
            }
            for v in h.validate().violations {
                r.push(v.check, format!("{loc}, {}", v.location), v.detail);
            }
        }
        r
    }

    /// The composite connecting map `A_from → A_to`, `from < to`.
    pub fn connecting(&self, from: usize, to: usize) -> Result<EqHom, HomError> {
        assert!(from < to && to < self.systems.len(), "stage indices out of range");
        let mut h = self.maps[from].clone();
        for k in from + 1..to {
            h = EqHom::compose(&self.maps[k], &h)?;
        }
        Ok(h)
    }
}

/// Exponents of `diag(1, ζ, …, ζ^{p-1})^{⊗n}` in tensor order.
fn tensor_exponents(p: u32, n: usize) -> Vec<u32> {
    let mut e = vec![0u32];
    for _ in 0..n {
        e = e.iter().flat_map(|&x| (0..p).map(move |d| (x + d) % p)).collect();
    }
    e
}

/// Builds the product tower from explicit (unsorted) stage diagonals where
/// the connecting map is `a ↦ a ⊗ I_p` in those coordinates.
fn product_from(ctx: &FieldContext, depth: usize, diag: impl Fn(usize) -> Vec<u32>) -> Result<Tower, SystemError> {
    let p = ctx.p();
    let mut systems = Vec::with_capacity(depth + 1);
    let mut sorters = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        let d = diag(n);
        let mut sorted = d.clone();
        sorted.sort_unstable();
        // Q† D Q = V: sorted coordinates to tensor coordinates
        let q = match_diagonals(&Mat::root_diag(ctx, &d), &Mat::root_diag(ctx, &sorted), p)?;
        systems.push(CanonicalSystem::new(ctx, vec![Piece::Fixed { exponents: sorted }])?);
        sorters.push(q);
    }
    let mut maps = Vec::with_capacity(depth);
    for n in 0..depth {
        let size = sorters[n].rows();
        let k = commutation_matrix(ctx, p as usize, size);
        let x = &(&sorters[n + 1].dagger() * &sorters[n].kron(&Mat::identity(ctx, p as usize))) * &k;
        let h = EqHom::new(
            systems[n].clone(),
            systems[n + 1].clone(),
            vec![TargetBlock { slots: vec![Slot { block: 0, mult: p as usize, phase: None }], conjugator: x }],
            true,
        )
        .expect("well-formed arrangement");
        maps.push(h.with_inferred_phases());
    }
    Ok(Tower { systems, maps })
}

/// Stages `(M_{p^n}, Ad diag(1, ζ_p, …, ζ_p^{p-1})^{⊗n})` for `n = 0..=depth`
/// with `a ↦ a ⊗ 1`.
pub fn product_tower(ctx: &FieldContext, depth: usize) -> Result<Tower, SystemError> {
    let p = ctx.p();
    product_from(ctx, depth, |n| tensor_exponents(p, n))
}

/// The same inductive system presented through reversed tensor coordinates,
/// so every connecting map has a different conjugator.
pub fn resorted_product_tower(ctx: &FieldContext, depth: usize) -> Result<Tower, SystemError> {
    let p = ctx.p();
    product_from(ctx, depth, |n| {
        let mut e = tensor_exponents(p, n);
        e.reverse();
        e
    })
}

/// Stages `(M_{2^n}, Ad diag(1, …, 1, -1))`, `n = 1..=depth`, with the
/// doubling maps `a ↦ diag(a, a)`. These maps are not equivariant.
pub fn naive_doubling_tower(depth: usize) -> Result<Tower, SystemError> {
    let ctx = FieldContext::with_default_order(2)?;
    let mut systems = Vec::with_capacity(depth);
    for n in 1..=depth {
        let mut e = vec![0u32; (1 << n) - 1];
        e.push(1);
        systems.push(CanonicalSystem::new(&ctx, vec![Piece::Fixed { exponents: e }])?);
    }
    let maps = (0..depth.saturating_sub(1))
        .map(|i| {
            EqHom::new(
                systems[i].clone(),
                systems[i + 1].clone(),
                vec![TargetBlock {
                    slots: vec![Slot { block: 0, mult: 2, phase: None }],
                    conjugator: Mat::identity(&ctx, 1 << (i + 2)),
                }],
                true,
            )
            .expect("well-formed arrangement")
        })
        .collect();
    Ok(Tower { systems, maps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_towers_validate() {
        for p in [2, 3] {
            let ctx = FieldContext::with_default_order(p).unwrap();
            let t = product_tower(&ctx, 2).unwrap();
            assert!(t.validate().is_ok(), "{}", t.validate());
            let r = resorted_product_tower(&ctx, 2).unwrap();
            assert!(r.validate().is_ok());
            assert_eq!(t.systems, r.systems);
            assert_ne!(t.maps, r.maps);
        }
    }

    #[test]
    fn product_maps_carry_phase_zero() {
        let ctx = FieldContext::with_default_order(2).unwrap();
        let t = product_tower(&ctx, 2).unwrap();
        assert!(t.maps.iter().all(|h| h.blocks()[0].slots.iter().all(|s| s.phase.is_some())));
    }

    #[test]
    fn doubling_tower_is_not_equivariant() {
        let t = naive_doubling_tower(3).unwrap();
        let r = t.validate();
        assert!(r.violations.iter().any(|v| v.check == "equivariance" && v.location.starts_with("map 0 -> 1")));
    }

    #[test]
    fn composite_connecting_map() {
        let ctx = FieldContext::with_default_order(2).unwrap();
        let t = product_tower(&ctx, 3).unwrap();
        let h = t.connecting(0, 3).unwrap();
        assert!(h.validate().is_ok());
        assert_eq!(h.multiplicity(0, 0), 8);
    }
}

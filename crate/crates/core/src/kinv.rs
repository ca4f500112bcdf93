//! K-theoretic invariant of a canonical system and the integer matrices
//! induced by equivariant homomorphisms.
//!
//! `K_0` of `⊕ M_{n_i}` is `Z^m` with the coordinatewise cone, so every
//! group map is an integer matrix and order preservation is entrywise
//! nonnegativity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crossed::{CrossedError, CrossedPresentation, ExtendedHom};
use crate::report::Report;
use crate::system::{CanonicalSystem, EqHom, Piece};

/// Row-major integer matrix.
pub type IntMatrix = Vec<Vec<i64>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KinvError {
    #[error("image of a minimal projection has non-integral or negative rank")]
    NonIntegralMultiplicity,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Crossed(#[from] CrossedError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct KInvariant {
    pub m: usize,
    pub unit: Vec<i64>,
    pub act: IntMatrix,
    #[serde(rename = "mC")]
    pub mc: usize,
    pub dual_act: IntMatrix,
    pub special: Vec<i64>,
    pub iota: IntMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct KPair {
    #[serde(rename = "F")]
    pub f: IntMatrix,
    pub phi: IntMatrix,
    pub unital: bool,
}

pub fn zeros(rows: usize, cols: usize) -> IntMatrix {
    vec![vec![0; cols]; rows]
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

fn cols_of(a: &IntMatrix, default: usize) -> usize {
    a.first().map_or(default, Vec::len)
}

/// Product of integer matrices; `None` on a shape mismatch. `inner` is the
/// shared dimension, needed when `a` has no rows.
pub fn mat_mul(a: &IntMatrix, b: &IntMatrix, inner: usize) -> Option<IntMatrix> {
    if a.iter().any(|r| r.len() != inner) || b.len() != inner {
        return None;
    }
    let n = cols_of(b, 0);
    if b.iter().any(|r| r.len() != n) {
        return None;
    }
    Some(a.iter().map(|row| (0..n).map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect()).collect())
}

pub fn mat_vec(a: &IntMatrix, v: &[i64]) -> Option<Vec<i64>> {
    if a.iter().any(|r| r.len() != v.len()) {
        return None;
    }
    Some(a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect())
}

fn permutation_matrix(image: &[usize]) -> IntMatrix {
    let mut m = zeros(image.len(), image.len());
    for (i, &j) in image.iter().enumerate() {
        m[i][j] = 1;
    }
    m
}

/// The invariant of a canonical system, blocks in canonical piece order.
pub fn invariant_of(c: &CanonicalSystem) -> KInvariant {
    let cp = CrossedPresentation::new(c);
    invariant_with(c, &cp)
}

pub fn invariant_with(c: &CanonicalSystem, cp: &CrossedPresentation) -> KInvariant {
    let m = c.num_blocks();
    let mc = cp.num_blocks();
    let unit = c.block_sizes().iter().map(|&n| n as i64).collect();
    let act = permutation_matrix(&(0..m).map(|b| c.sigma(b)).collect::<Vec<_>>());
    let dual_act = permutation_matrix(&cp.dual_system().sigma);
    let mut iota = zeros(mc, m);
    for (k, piece) in c.pieces().iter().enumerate() {
        let src = c.piece_blocks(k);
        let dst = cp.piece_blocks(k);
        match piece {
            Piece::Fixed { .. } => {
                for j in dst {
                    iota[j][src.start] = 1;
                }
            }
            Piece::Cycle { .. } => {
                for b in src {
                    iota[dst.start][b] = 1;
                }
            }
        }
    }
    KInvariant { m, unit, act, mc, dual_act, special: cp.special().to_vec(), iota }
}

/// `F[t][s]` is the multiplicity of source block `s` in target block `t`;
/// `phi` is the same bookkeeping for the extended map on crossed products.
pub fn induced_map(h: &EqHom) -> Result<KPair, KinvError> {
    let ca = CrossedPresentation::new(h.source());
    let cb = CrossedPresentation::new(h.target());
    induced_map_with(h, &ca, &cb)
}

pub fn induced_map_with(h: &EqHom, ca: &CrossedPresentation, cb: &CrossedPresentation) -> Result<KPair, KinvError> {
    let ma = h.source().num_blocks();
    let mb = h.target().num_blocks();
    let f = (0..mb).map(|t| (0..ma).map(|s| h.multiplicity(t, s) as i64).collect()).collect();
    let ext = ExtendedHom::new(h, ca, cb)?;
    let phi = ext.induced_matrix().map_err(|e| match e {
        CrossedError::NonIntegralRank => KinvError::NonIntegralMultiplicity,
        other => KinvError::Crossed(other),
    })?;
    Ok(KPair { f, phi, unital: h.is_unital() })
}

fn fmt_mat(a: &IntMatrix) -> String {
    format!("{a:?}")
}

/// Checks the conditions an invariant morphism must satisfy and reports each
/// failure separately.
pub fn check_pair(kp: &KPair, a: &KInvariant, b: &KInvariant) -> Report {
    let mut r = Report::new();
    let shape_ok = kp.f.len() == b.m
        && kp.f.iter().all(|row| row.len() == a.m)
        && kp.phi.len() == b.mc
        && kp.phi.iter().all(|row| row.len() == a.mc);
    if !shape_ok {
        r.push(
            "shape",
            "pair",
            format!("expected F {}x{} and phi {}x{}", b.m, a.m, b.mc, a.mc),
        );
        return r;
    }
    for (name, m) in [("F", &kp.f), ("phi", &kp.phi)] {
        for (i, row) in m.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x < 0 {
                    r.push("nonnegative", format!("{name}[{}][{}]", i + 1, j + 1), format!("entry {x}"));
                }
            }
        }
    }
    let fa = mat_mul(&kp.f, &a.act, a.m).expect("shape checked");
    let bf = mat_mul(&b.act, &kp.f, b.m).expect("shape checked");
    if fa != bf {
        r.push("action", "F", format!("F act_A = {} but act_B F = {}", fmt_mat(&fa), fmt_mat(&bf)));
    }
    let pa = mat_mul(&kp.phi, &a.dual_act, a.mc).expect("shape checked");
    let bp = mat_mul(&b.dual_act, &kp.phi, b.mc).expect("shape checked");
    if pa != bp {
        r.push("dual action", "phi", format!("phi dualAct_A = {} but dualAct_B phi = {}", fmt_mat(&pa), fmt_mat(&bp)));
    }
    let s = mat_vec(&kp.phi, &a.special).expect("shape checked");
    if s != b.special {
        r.push("special element", "phi", format!("phi special_A = {s:?} but special_B = {:?}", b.special));
    }
    let pi = mat_mul(&kp.phi, &a.iota, a.mc).expect("shape checked");
    let ifm = mat_mul(&b.iota, &kp.f, b.m).expect("shape checked");
    if pi != ifm {
        r.push("iota square", "phi, F", format!("phi iota_A = {} but iota_B F = {}", fmt_mat(&pi), fmt_mat(&ifm)));
    }
    let u = mat_vec(&kp.f, &a.unit).expect("shape checked");
    if kp.unital {
        if u != b.unit {
            r.push("unit", "F", format!("F unit_A = {u:?} but unit_B = {:?}", b.unit));
        }
    } else if u.iter().zip(&b.unit).any(|(x, y)| x > y) {
        r.push("unit", "F", format!("F unit_A = {u:?} exceeds unit_B = {:?}", b.unit));
    }
    r
}

/// `g ∘ h` at the level of invariants.
pub fn compose_pairs(g: &KPair, h: &KPair) -> Result<KPair, KinvError> {
    let f_inner = g.f.first().map_or(h.f.len(), Vec::len);
    let p_inner = g.phi.first().map_or(h.phi.len(), Vec::len);
    let f = mat_mul(&g.f, &h.f, f_inner)
        .ok_or_else(|| KinvError::ShapeMismatch(format!("F: {} columns against {} rows", f_inner, h.f.len())))?;
    let phi = mat_mul(&g.phi, &h.phi, p_inner)
        .ok_or_else(|| KinvError::ShapeMismatch(format!("phi: {} columns against {} rows", p_inner, h.phi.len())))?;
    Ok(KPair { f, phi, unital: g.unital && h.unital })
}

pub fn identity_pair(inv: &KInvariant) -> KPair {
    KPair { f: identity(inv.m), phi: identity(inv.mc), unital: true }
}

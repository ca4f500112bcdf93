//! Exact finite-depth intertwining of two towers.
//!
//! Forward maps `ψ_i: A_{s_i} → B_{n_i}` and backward maps
//! `χ_i: B_{n_i} → A_{s_{i+1}}` are lifted from K-data and then corrected by
//! unitaries in the fixed-point algebra so that
//! `χ_i ∘ ψ_i = a_{s_i → s_{i+1}}` and `ψ_{i+1} ∘ χ_i = b_{n_i → n_{i+1}}`
//! hold exactly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::kinv::{check_pair, compose_pairs, induced_map, invariant_of, KInvariant, KPair};
use crate::report::Report;
use crate::system::{EqHom, Element};
use crate::towers::Tower;

use super::{equiv_unitary, ksearch, lift, ClassifyError};

/// A lifted map, the unitary applied to it, and the result `Ad W ∘ raw`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectedHom {
    pub pair: KPair,
    pub raw: EqHom,
    pub correction: Option<Element>,
    pub hom: EqHom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IntertwiningCertificate {
    pub tower_a: Tower,
    pub tower_b: Tower,
    /// `(s_i, n_i)`: stage indices of source and target of `ψ_i`.
    pub forward_index: Vec<(usize, usize)>,
    pub forward: Vec<CorrectedHom>,
    pub backward: Vec<CorrectedHom>,
}

/// Where the K-data for each map comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSource {
    /// `[F_0, G_0, F_1, G_1, …, F_d]` with `ψ_i: A_i → B_i` and
    /// `χ_i: B_i → A_{i+1}`.
    Given(Vec<KPair>),
    /// Depth-first search over [`ksearch`] candidates with entries at most
    /// `bound`, allowing stages to be skipped.
    Auto { bound: i64 },
}

struct Ctx<'a> {
    a: &'a Tower,
    b: &'a Tower,
    inv_a: Vec<KInvariant>,
    inv_b: Vec<KInvariant>,
    k_a: HashMap<(usize, usize), KPair>,
    k_b: HashMap<(usize, usize), KPair>,
}

impl Ctx<'_> {
    fn k_conn(&mut self, in_a: bool, from: usize, to: usize) -> Result<KPair, ClassifyError> {
        let (tower, cache) = if in_a { (self.a, &mut self.k_a) } else { (self.b, &mut self.k_b) };
        if let Some(k) = cache.get(&(from, to)) {
            return Ok(k.clone());
        }
        let k = induced_map(&tower.connecting(from, to)?)?;
        cache.insert((from, to), k.clone());
        Ok(k)
    }
}

/// A K-level zigzag: forward stages, forward pairs, backward pairs.
type Chain = (Vec<(usize, usize)>, Vec<KPair>, Vec<KPair>);

fn search(cx: &mut Ctx, depth: usize, bound: i64) -> Result<Option<Chain>, ClassifyError> {
    let nb = cx.b.len() - 1;
    for n in 0..=nb {
        for f in ksearch(&cx.inv_a[0], &cx.inv_b[n], bound, true) {
            let mut chain = (vec![(0, n)], vec![f], Vec::new());
            if extend(cx, depth, bound, &mut chain)? {
                return Ok(Some(chain));
            }
        }
    }
    Ok(None)
}

fn extend(cx: &mut Ctx, depth: usize, bound: i64, chain: &mut Chain) -> Result<bool, ClassifyError> {
    let &(s, n) = chain.0.last().expect("nonempty chain");
    if s == depth {
        return Ok(true);
    }
    let nb = cx.b.len() - 1;
    for s2 in s + 1..=depth {
        let target = cx.k_conn(true, s, s2)?;
        let f = chain.1.last().expect("forward pair").clone();
        for g in ksearch(&cx.inv_b[n], &cx.inv_a[s2], bound, true) {
            if compose_pairs(&g, &f)? != target {
                continue;
            }
            for n2 in n + 1..=nb {
                let target_b = cx.k_conn(false, n, n2)?;
                for f2 in ksearch(&cx.inv_a[s2], &cx.inv_b[n2], bound, true) {
                    if compose_pairs(&f2, &g)? != target_b {
                        continue;
                    }
                    chain.0.push((s2, n2));
                    chain.1.push(f2);
                    chain.2.push(g.clone());
                    if extend(cx, depth, bound, chain)? {
                        return Ok(true);
                    }
                    chain.0.pop();
                    chain.1.pop();
                    chain.2.pop();
                }
            }
        }
    }
    Ok(false)
}

fn given_chain(cx: &mut Ctx, pairs: &[KPair], depth: usize) -> Result<Chain, ClassifyError> {
    if pairs.len() != 2 * depth + 1 {
        return Err(ClassifyError::ReindexFailed {
            stage: 0,
            detail: format!("depth {depth} needs {} pairs, found {}", 2 * depth + 1, pairs.len()),
        });
    }
    let forward: Vec<KPair> = pairs.iter().step_by(2).cloned().collect();
    let backward: Vec<KPair> = pairs.iter().skip(1).step_by(2).cloned().collect();
    for (i, f) in forward.iter().enumerate() {
        let r = check_pair(f, &cx.inv_a[i], &cx.inv_b[i]);
        if !r.is_ok() {
            return Err(ClassifyError::LiftFailed { stage: i, error: Box::new(ClassifyError::PairCheckFailed(r)) });
        }
    }
    for (i, g) in backward.iter().enumerate() {
        let r = check_pair(g, &cx.inv_b[i], &cx.inv_a[i + 1]);
        if !r.is_ok() {
            return Err(ClassifyError::LiftFailed { stage: i, error: Box::new(ClassifyError::PairCheckFailed(r)) });
        }
        if compose_pairs(g, &forward[i])? != cx.k_conn(true, i, i + 1)? {
            return Err(ClassifyError::ReindexFailed { stage: i, detail: format!("G_{i} F_{i} differs from the K-map of A_{i} -> A_{}", i + 1) });
        }
        if compose_pairs(&forward[i + 1], g)? != cx.k_conn(false, i, i + 1)? {
            return Err(ClassifyError::ReindexFailed {
                stage: i,
                detail: format!("F_{} G_{i} differs from the K-map of B_{i} -> B_{}", i + 1, i + 1),
            });
        }
    }
    Ok(((0..=depth).map(|i| (i, i)).collect(), forward, backward))
}

/// Builds a certificate reaching stage `depth` of the first tower.
pub fn intertwine(a: &Tower, b: &Tower, pairs: &PairSource, depth: usize) -> Result<IntertwiningCertificate, ClassifyError> {
    for (name, t) in [("first", a), ("second", b)] {
        let r = t.validate();
        if !r.is_ok() {
            return Err(ClassifyError::InvalidTower(format!("{name} tower:\n{r}")));
        }
    }
    if depth >= a.len() {
        return Err(ClassifyError::InvalidTower(format!("depth {depth} needs {} stages, the first tower has {}", depth + 1, a.len())));
    }
    let mut cx = Ctx {
        a,
        b,
        inv_a: a.systems.iter().map(invariant_of).collect(),
        inv_b: b.systems.iter().map(invariant_of).collect(),
        k_a: HashMap::new(),
        k_b: HashMap::new(),
    };
    let (index, fpairs, gpairs) = match pairs {
        PairSource::Given(list) => {
            if depth >= b.len() {
                return Err(ClassifyError::InvalidTower(format!("depth {depth} needs {} stages in the second tower", depth + 1)));
            }
            given_chain(&mut cx, list, depth)?
        }
        PairSource::Auto { bound } => search(&mut cx, depth, *bound)?.ok_or_else(|| ClassifyError::ReindexFailed {
            stage: 0,
            detail: format!("no chain of invariant maps with entries <= {bound} reaches stage {depth}"),
        })?,
    };

    let lift_at = |stage: usize, kp: &KPair, src, tgt| {
        lift(kp, src, tgt).map_err(|e| ClassifyError::LiftFailed { stage, error: Box::new(e) })
    };
    let (s0, n0) = index[0];
    let psi0 = lift_at(0, &fpairs[0], &a.systems[s0], &b.systems[n0])?;
    let mut forward = vec![CorrectedHom { pair: fpairs[0].clone(), raw: psi0.clone(), correction: None, hom: psi0 }];
    let mut backward = Vec::with_capacity(gpairs.len());
    for (i, g) in gpairs.iter().enumerate() {
        let (s, n) = index[i];
        let (s2, n2) = index[i + 1];
        let corrected = |raw: EqHom, prev: &EqHom, conn: EqHom| -> Result<(Element, EqHom), ClassifyError> {
            let comp = EqHom::compose(&raw, prev)?;
            let (w, _) = equiv_unitary(&conn, &comp).map_err(|e| ClassifyError::CorrectionFailed { stage: i, error: Box::new(e) })?;
            let hom = raw.conjugated_by(&w);
            Ok((w, hom))
        };
        let chi_raw = lift_at(i, g, &b.systems[n], &a.systems[s2])?;
        let (w, chi) = corrected(chi_raw.clone(), &forward[i].hom, a.connecting(s, s2)?)?;
        backward.push(CorrectedHom { pair: g.clone(), raw: chi_raw, correction: Some(w), hom: chi });
        let psi_raw = lift_at(i + 1, &fpairs[i + 1], &a.systems[s2], &b.systems[n2])?;
        let (w, psi) = corrected(psi_raw.clone(), &backward[i].hom, b.connecting(n, n2)?)?;
        forward.push(CorrectedHom { pair: fpairs[i + 1].clone(), raw: psi_raw, correction: Some(w), hom: psi });
    }
    Ok(IntertwiningCertificate { tower_a: a.clone(), tower_b: b.clone(), forward_index: index, forward, backward })
}

fn check_corrected(r: &mut Report, loc: &str, c: &CorrectedHom, inv_s: &KInvariant, inv_t: &KInvariant) {
    for v in check_pair(&c.pair, inv_s, inv_t).violations {
        r.push(v.check, format!("{loc}, pair"), v.detail);
    }
    for v in c.raw.validate().violations {
        r.push(v.check, format!("{loc}, lifted map, {}", v.location), v.detail);
    }
    match induced_map(&c.raw) {
        Ok(k) if k == c.pair => {}
        Ok(k) => r.push("K-data", loc, format!("lifted map induces {k:?}, recorded pair is {:?}", c.pair)),
        Err(e) => r.push("K-data", loc, e.to_string()),
    }
    let expected = match &c.correction {
        None => c.raw.clone(),
        Some(w) => {
            let tgt = c.raw.target();
            let shapes_ok = w.len() == tgt.num_blocks() && w.iter().zip(tgt.block_sizes()).all(|(m, &n)| m.rows() == n && m.cols() == n);
            if !shapes_ok {
                r.push("correction", loc, "unitary does not match the target blocks");
                return;
            }
            for (t, m) in w.iter().enumerate() {
                if !m.is_unitary() {
                    r.push("correction", format!("{loc}, block {}", t + 1), "W^* W != I");
                }
            }
            if tgt.action(w) != *w {
                r.push("correction", loc, "beta(W) != W");
            }
            c.raw.conjugated_by(w)
        }
    };
    if expected != c.hom {
        r.push("correction", loc, "recorded map is not Ad W applied to the lifted map");
    }
}

/// Replays every identity in the certificate from its own data.
pub fn verify_certificate(c: &IntertwiningCertificate) -> Report {
    let mut r = Report::new();
    for (name, t) in [("tower A", &c.tower_a), ("tower B", &c.tower_b)] {
        for v in t.validate().violations {
            r.push(v.check, format!("{name}, {}", v.location), v.detail);
        }
    }
    if !r.is_ok() {
        return r;
    }
    let (a, b) = (&c.tower_a, &c.tower_b);
    let idx = &c.forward_index;
    if idx.is_empty() || c.forward.len() != idx.len() || c.backward.len() + 1 != idx.len() {
        r.push("shape", "certificate", "need k forward maps, k indices and k - 1 backward maps");
        return r;
    }
    for w in idx.windows(2) {
        if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
            r.push("index", "certificate", format!("stage indices {:?} -> {:?} do not increase", w[0], w[1]));
        }
    }
    if idx.iter().any(|&(s, n)| s >= a.len() || n >= b.len()) {
        r.push("index", "certificate", "stage index beyond the towers");
    }
    if !r.is_ok() {
        return r;
    }
    let inv_a: Vec<_> = a.systems.iter().map(invariant_of).collect();
    let inv_b: Vec<_> = b.systems.iter().map(invariant_of).collect();
    for (i, f) in c.forward.iter().enumerate() {
        let (s, n) = idx[i];
        let loc = format!("forward map {i} (A_{s} -> B_{n})");
        if f.raw.source() != &a.systems[s] || f.raw.target() != &b.systems[n] {
            r.push("shape", loc, "systems differ from the tower stages");
            continue;
        }
        check_corrected(&mut r, &loc, f, &inv_a[s], &inv_b[n]);
    }
    for (i, g) in c.backward.iter().enumerate() {
        let (n, s2) = (idx[i].1, idx[i + 1].0);
        let loc = format!("backward map {i} (B_{n} -> A_{s2})");
        if g.raw.source() != &b.systems[n] || g.raw.target() != &a.systems[s2] {
            r.push("shape", loc, "systems differ from the tower stages");
            continue;
        }
        check_corrected(&mut r, &loc, g, &inv_b[n], &inv_a[s2]);
    }
    if !r.is_ok() {
        return r;
    }
    for i in 0..c.backward.len() {
        let ((s, n), (s2, n2)) = (idx[i], idx[i + 1]);
        let triangles = [
            (format!("A_{s} -> B_{n} -> A_{s2}"), &c.backward[i], &c.forward[i], a.connecting(s, s2)),
            (format!("B_{n} -> A_{s2} -> B_{n2}"), &c.forward[i + 1], &c.backward[i], b.connecting(n, n2)),
        ];
        for (loc, outer, inner, conn) in triangles {
            let (comp, conn) = match (EqHom::compose(&outer.hom, &inner.hom), conn) {
                (Ok(x), Ok(y)) => (x, y),
                (Err(e), _) | (_, Err(e)) => {
                    r.push("triangle", loc, e.to_string());
                    continue;
                }
            };
            if let Some((blk, ii, jj)) = comp.first_difference(&conn) {
                r.push("triangle", loc.clone(), format!("composite differs from the connecting map on E_{}{} of block {}", ii + 1, jj + 1, blk + 1));
            }
            match (compose_pairs(&outer.pair, &inner.pair), induced_map(&conn)) {
                (Ok(x), Ok(y)) if x == y => {}
                _ => r.push("K triangle", loc, "composite K-data differ from the connecting map's"),
            }
        }
    }
    r
}

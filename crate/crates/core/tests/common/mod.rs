#![allow(dead_code)]

use afzp_core::classify::ksearch;
use afzp_core::cyclo::Rational;
use afzp_core::kinv::invariant_of;
use afzp_core::matrix::{intertwiner_equations, LinearSystem};
use afzp_core::system::Element;
use afzp_core::{CanonicalSystem, EqHom, FieldContext, KPair, Mat, Piece, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn ctx(p: u32) -> FieldContext {
    FieldContext::with_default_order(p).unwrap()
}

pub fn sys(c: &FieldContext, pieces: Vec<Piece>) -> CanonicalSystem {
    CanonicalSystem::new(c, pieces).unwrap()
}

/// Small integer combination of one or two roots of unity of order N.
pub fn random_scalar(rng: &mut impl Rng, c: &FieldContext) -> Scalar {
    let mut s = Scalar::zero(c);
    for _ in 0..rng.gen_range(0..=2) {
        let k = rng.gen_range(0..c.order() as i64);
        let q = Rational::new(rng.gen_range(-3i64..=3).into(), rng.gen_range(1i64..=2).into());
        s = &s + &Scalar::root(c, k).scale(&q);
    }
    s
}

pub fn random_mat(rng: &mut impl Rng, c: &FieldContext, n: usize) -> Mat {
    Mat::from_fn(c, n, n, |_, _| random_scalar(rng, c))
}

pub fn random_element(rng: &mut impl Rng, c: &FieldContext, sizes: &[usize]) -> Element {
    sizes.iter().map(|&n| random_mat(rng, c, n)).collect()
}

pub fn random_exponents(rng: &mut impl Rng, p: u32, n: usize) -> Vec<u32> {
    let mut e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..p)).collect();
    e.sort_unstable();
    e
}

/// All sorted exponent lists of length `n` over `0..p`.
pub fn multisets(p: u32, n: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in multisets(p, n - 1) {
        let lo = rest.last().copied().unwrap_or(0);
        for e in lo..p {
            let mut v = rest.clone();
            v.push(e);
            out.push(v);
        }
    }
    out
}

/// Irreducible pieces with block size at most `max_fixed` (fixed) or
/// `max_cycle` (cycle).
pub fn pieces(p: u32, max_fixed: usize, max_cycle: usize) -> Vec<Piece> {
    let mut out = Vec::new();
    for n in 1..=max_fixed {
        for e in multisets(p, n) {
            out.push(Piece::Fixed { exponents: e });
        }
    }
    for n in 1..=max_cycle {
        out.push(Piece::Cycle { n });
    }
    out
}

/// One grid instance: source, target and a pair accepted by the invariant
/// check.
pub struct Instance {
    pub src: CanonicalSystem,
    pub tgt: CanonicalSystem,
    pub pair: KPair,
}

/// Sources: single irreducible pieces and sums of two small ones. Targets:
/// single irreducible pieces of size at most 6 and sums of two. Pairs: every
/// unital pair with entries at most 3.
pub fn grid(p: u32) -> Vec<Instance> {
    let c = ctx(p);
    let mut sources: Vec<CanonicalSystem> = pieces(p, 3, 2).into_iter().map(|pc| sys(&c, vec![pc])).collect();
    let small = pieces(p, 1, 1);
    for (i, a) in small.iter().enumerate() {
        for b in &small[i..] {
            sources.push(sys(&c, vec![a.clone(), b.clone()]));
        }
    }
    let max_fixed = if p == 2 { 6 } else { 4 };
    let mut targets: Vec<CanonicalSystem> = pieces(p, max_fixed, 6 / p as usize + 1).into_iter().map(|pc| sys(&c, vec![pc])).collect();
    let mid = pieces(p, 2, 1);
    for (i, a) in mid.iter().enumerate() {
        for b in &mid[i..] {
            targets.push(sys(&c, vec![a.clone(), b.clone()]));
        }
    }
    let mut out = Vec::new();
    for src in &sources {
        let ia = invariant_of(src);
        for tgt in &targets {
            let ib = invariant_of(tgt);
            for pair in ksearch(&ia, &ib, 3, true) {
                out.push(Instance { src: src.clone(), tgt: tgt.clone(), pair });
            }
        }
    }
    out
}

/// A random unitary fixed by the action: on each fixed block a permutation
/// inside each eigenspace of `V` times a diagonal of roots of unity; on a
/// cycle piece the same such unitary in every block.
pub fn random_fixed_point_unitary(rng: &mut impl Rng, c: &CanonicalSystem) -> Element {
    let ctx = c.ctx();
    let mut out = Vec::new();
    for (k, pc) in c.pieces().iter().enumerate() {
        let n = pc.n();
        let mut perm: Vec<usize> = (0..n).collect();
        if let Piece::Fixed { exponents } = pc {
            let mut start = 0;
            while start < n {
                let end = (start..n).find(|&i| exponents[i] != exponents[start]).unwrap_or(n);
                perm[start..end].shuffle(rng);
                start = end;
            }
        } else {
            perm.shuffle(rng);
        }
        let d: Vec<Scalar> = (0..n).map(|_| Scalar::root(ctx, rng.gen_range(0..ctx.order() as i64))).collect();
        let u = &Mat::permutation(ctx, &perm) * &Mat::diag(ctx, d);
        for _ in c.piece_blocks(k) {
            out.push(u.clone());
        }
    }
    out
}

/// Basis of `{W : W ψ_2(E) = ψ_1(E) W for all units E, β(W) = W}`, solved
/// directly as one linear system in all entries of `W`.
pub fn intertwiner_space(h1: &EqHom, h2: &EqHom) -> Vec<Element> {
    let tgt = h1.target();
    let ctx = tgt.ctx();
    let sizes = tgt.block_sizes();
    let offsets: Vec<usize> = sizes.iter().scan(0, |acc, &n| {
        let o = *acc;
        *acc += n * n;
        Some(o)
    }).collect();
    let nvars = sizes.iter().map(|n| n * n).sum();
    let mut sys = LinearSystem::new(ctx, nvars);
    let src_sizes = h1.source().block_sizes();
    for (s, &n) in src_sizes.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let a = h1.image_of_unit(s, i, j);
                let b = h2.image_of_unit(s, i, j);
                for t in 0..sizes.len() {
                    // ψ_1(E) W - W ψ_2(E) = 0
                    for eq in intertwiner_equations(&a[t], &b[t]) {
                        let terms = eq.into_iter().map(|(v, c)| (offsets[t] + v, c)).collect();
                        sys.add_equation(terms, Scalar::zero(ctx));
                    }
                }
            }
        }
    }
    // β(W)_t = u_t W_{σ(t)} u_t† = W_t
    for t in 0..sizes.len() {
        let st = tgt.sigma(t);
        let u = tgt.implementing(t);
        let n = sizes[t];
        for r in 0..n {
            for col in 0..n {
                let mut terms = vec![(offsets[t] + r * n + col, -Scalar::one(ctx))];
                for a in 0..n {
                    for b in 0..n {
                        let coef = u.get(r, a) * &u.get(col, b).conj();
                        if !coef.is_zero() {
                            terms.push((offsets[st] + a * n + b, coef));
                        }
                    }
                }
                sys.add_equation(terms, Scalar::zero(ctx));
            }
        }
    }
    let sol = sys.solve().unwrap();
    sol.null_basis
        .iter()
        .map(|v| {
            sizes
                .iter()
                .zip(&offsets)
                .map(|(&n, &o)| Mat::from_fn(ctx, n, n, |r, c| v[o + r * n + c].clone()))
                .collect()
        })
        .collect()
}

/// Is `w` a linear combination of `basis`?
pub fn in_span(w: &[Mat], basis: &[Element]) -> bool {
    let ctx = w[0].ctx();
    let flat = |e: &[Mat]| -> Vec<Scalar> { e.iter().flat_map(|m| m.entries().to_vec()).collect() };
    let target = flat(w);
    let cols: Vec<Vec<Scalar>> = basis.iter().map(|b| flat(b)).collect();
    let mut sys = LinearSystem::new(ctx, cols.len());
    for (r, rhs) in target.iter().enumerate() {
        let terms = cols.iter().enumerate().filter(|(_, col)| !col[r].is_zero()).map(|(k, col)| (k, col[r].clone())).collect();
        sys.add_equation(terms, rhs.clone());
    }
    sys.is_consistent()
}

use std::cmp::Ordering;

use crate::cyclo::{FieldContext, Scalar};
use crate::matrix::{eigenbasis, intertwiner_equations, sqrt_rational, vector_to_mat, LinearSystem, Mat, MatrixError};

use super::{pth_root_of_root, Element, FdSystem, SystemError};

/// An irreducible summand of a canonical system.
///
/// `Fixed` is `(M_n, Ad V)` with `V = diag(ζ_p^{e_0}, …)`, exponents ascending.
/// `Cycle` is `M_n ⊕ ⋯ ⊕ M_n` (p copies) with `α(a)_j = a_{j-1}` (indices mod p).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Piece {
    Fixed { exponents: Vec<u32> },
    Cycle { n: usize },
}

impl Piece {
    pub fn n(&self) -> usize {
        match self {
            Piece::Fixed { exponents } => exponents.len(),
            Piece::Cycle { n } => *n,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Piece::Fixed { .. })
    }

    /// Eigenvalue counts `(l_0, …, l_{p-1})` of `V`; `None` for cycles.
    pub fn eigen_counts(&self, p: u32) -> Option<Vec<usize>> {
        match self {
            Piece::Fixed { exponents } => {
                let mut c = vec![0; p as usize];
                for &e in exponents {
                    c[e as usize] += 1;
                }
                Some(c)
            }
            Piece::Cycle { .. } => None,
        }
    }

    /// The order pieces take in a canonical system.
    pub fn order_key(&self, other: &Piece) -> Ordering {
        match (self, other) {
            (Piece::Fixed { exponents: a }, Piece::Fixed { exponents: b }) => a.len().cmp(&b.len()).then_with(|| a.cmp(b)),
            (Piece::Fixed { .. }, Piece::Cycle { .. }) => Ordering::Less,
            (Piece::Cycle { .. }, Piece::Fixed { .. }) => Ordering::Greater,
            (Piece::Cycle { n: a }, Piece::Cycle { n: b }) => a.cmp(b),
        }
    }
}

/// A direct sum of irreducible pieces in canonical order: fixed pieces first,
/// each kind sorted by size and then by eigenvalue exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalSystem {
    ctx: FieldContext,
    pieces: Vec<Piece>,
    block_sizes: Vec<usize>,
    /// `(piece, position within the piece)` for each block.
    block_piece: Vec<(usize, usize)>,
    piece_start: Vec<usize>,
}

impl CanonicalSystem {
    /// Sorts the pieces (and each exponent list) into canonical order first.
    pub fn from_unsorted(ctx: &FieldContext, mut pieces: Vec<Piece>) -> Result<Self, SystemError> {
        for piece in &mut pieces {
            if let Piece::Fixed { exponents } = piece {
                exponents.sort_unstable();
            }
        }
        pieces.sort_by(Piece::order_key);
        Self::new(ctx, pieces)
    }

    pub fn new(ctx: &FieldContext, pieces: Vec<Piece>) -> Result<Self, SystemError> {
        let p = ctx.p();
        if pieces.is_empty() {
            return Err(SystemError::InvalidCanonical("no pieces".into()));
        }
        for (k, piece) in pieces.iter().enumerate() {
            if piece.n() == 0 {
                return Err(SystemError::InvalidCanonical(format!("piece {} has size 0", k + 1)));
            }
            if let Piece::Fixed { exponents } = piece {
                if exponents.iter().any(|&e| e >= p) {
                    return Err(SystemError::InvalidCanonical(format!("piece {}: exponents must be below p = {p}", k + 1)));
                }
                if exponents.windows(2).any(|w| w[0] > w[1]) {
                    return Err(SystemError::InvalidCanonical(format!("piece {}: exponents must be ascending", k + 1)));
                }
            }
        }
        if let Some(k) = pieces.windows(2).position(|w| w[0].order_key(&w[1]) == Ordering::Greater) {
            return Err(SystemError::InvalidCanonical(format!("pieces {} and {} are out of canonical order", k + 1, k + 2)));
        }
        let mut block_sizes = Vec::new();
        let mut block_piece = Vec::new();
        let mut piece_start = Vec::new();
        for (k, piece) in pieces.iter().enumerate() {
            piece_start.push(block_sizes.len());
            let copies = if piece.is_fixed() { 1 } else { p as usize };
            for j in 0..copies {
                block_sizes.push(piece.n());
                block_piece.push((k, j));
            }
        }
        Ok(CanonicalSystem { ctx: ctx.clone(), pieces, block_sizes, block_piece, piece_start })
    }

    pub fn ctx(&self) -> &FieldContext {
        &self.ctx
    }

    pub fn p(&self) -> u32 {
        self.ctx.p()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// `(piece index, position within the piece)` of a block.
    pub fn block_piece(&self, b: usize) -> (usize, usize) {
        self.block_piece[b]
    }

    /// Index of the first block of a piece.
    pub fn piece_start(&self, k: usize) -> usize {
        self.piece_start[k]
    }

    pub fn piece_blocks(&self, k: usize) -> std::ops::Range<usize> {
        let len = if self.pieces[k].is_fixed() { 1 } else { self.p() as usize };
        self.piece_start[k]..self.piece_start[k] + len
    }

    pub fn is_fixed_block(&self, b: usize) -> bool {
        self.pieces[self.block_piece[b].0].is_fixed()
    }

    /// Exponents of the implementing diagonal of a fixed block.
    pub fn exponents(&self, b: usize) -> Option<&[u32]> {
        match &self.pieces[self.block_piece[b].0] {
            Piece::Fixed { exponents } => Some(exponents),
            Piece::Cycle { .. } => None,
        }
    }

    /// Total dimension `Σ n_b²`.
    pub fn dim(&self) -> usize {
        self.block_sizes.iter().map(|n| n * n).sum()
    }

    /// Block permutation: `α(a)_b` depends on `a_{σ(b)}`.
    pub fn sigma(&self, b: usize) -> usize {
        let (k, j) = self.block_piece[b];
        if self.pieces[k].is_fixed() {
            b
        } else {
            let p = self.p() as usize;
            self.piece_start[k] + (j + p - 1) % p
        }
    }

    pub fn sigma_inv(&self, b: usize) -> usize {
        let (k, j) = self.block_piece[b];
        if self.pieces[k].is_fixed() {
            b
        } else {
            self.piece_start[k] + (j + 1) % self.p() as usize
        }
    }

    /// The implementing unitary of block `b` (`V` for fixed blocks, `I` for cycles).
    pub fn implementing(&self, b: usize) -> Mat {
        match self.exponents(b) {
            Some(e) => Mat::root_diag(&self.ctx, e),
            None => Mat::identity(&self.ctx, self.block_sizes[b]),
        }
    }

    pub fn to_system(&self) -> FdSystem {
        let m = self.num_blocks();
        FdSystem::new(
            &self.ctx,
            self.block_sizes.clone(),
            (0..m).map(|b| self.sigma(b)).collect(),
            (0..m).map(|b| self.implementing(b)).collect(),
        )
    }

    pub fn zero_element(&self) -> Element {
        self.block_sizes.iter().map(|&n| Mat::zero(&self.ctx, n, n)).collect()
    }

    pub fn one_element(&self) -> Element {
        self.block_sizes.iter().map(|&n| Mat::identity(&self.ctx, n)).collect()
    }

    pub fn unit_element(&self, b: usize, i: usize, j: usize) -> Element {
        let mut e = self.zero_element();
        e[b] = Mat::unit(&self.ctx, self.block_sizes[b], i, j);
        e
    }

    /// Conjugation of a single block by its diagonal `V`, done entrywise.
    fn apply_fixed(&self, exps: &[u32], a: &Mat, inverse: bool) -> Mat {
        let n = exps.len();
        Mat::from_fn(&self.ctx, n, n, |i, j| {
            let x = a.get(i, j);
            if x.is_zero() || exps[i] == exps[j] {
                return x.clone();
            }
            let d = exps[i] as i64 - exps[j] as i64;
            x * &Scalar::p_root(&self.ctx, if inverse { -d } else { d })
        })
    }

    /// `α(a)`.
    pub fn action(&self, a: &[Mat]) -> Element {
        (0..self.num_blocks())
            .map(|b| match self.exponents(b) {
                Some(e) => self.apply_fixed(e, &a[b], false),
                None => a[self.sigma(b)].clone(),
            })
            .collect()
    }

    /// `α^{-1}(a)`.
    pub fn action_inverse(&self, a: &[Mat]) -> Element {
        (0..self.num_blocks())
            .map(|b| match self.exponents(b) {
                Some(e) => self.apply_fixed(e, &a[b], true),
                None => a[self.sigma_inv(b)].clone(),
            })
            .collect()
    }

    /// `α^k(a)` for `k` taken modulo p.
    pub fn action_pow(&self, a: &[Mat], k: i64) -> Element {
        let k = k.rem_euclid(self.p() as i64);
        let mut out = a.to_vec();
        for _ in 0..k {
            out = self.action(&out);
        }
        out
    }

    /// `α(E^b_ij) = c · E^{b'}_ij`; returns `(c, b')`.
    pub fn action_on_unit(&self, b: usize, i: usize, j: usize) -> (Scalar, usize) {
        match self.exponents(b) {
            Some(e) => (Scalar::p_root(&self.ctx, e[i] as i64 - e[j] as i64), b),
            None => (Scalar::one(&self.ctx), self.sigma_inv(b)),
        }
    }
}

/// The canonical form of an [`FdSystem`] together with the isomorphism
/// `φ(a)_c = C_c† · a_{block_map[c]} · C_c` onto it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub canonical: CanonicalSystem,
    /// Original block carried by each canonical block.
    pub block_map: Vec<usize>,
    pub conjugators: Vec<Mat>,
}

impl CanonicalForm {
    /// `φ(a)`: original coordinates to canonical coordinates.
    pub fn apply(&self, a: &[Mat]) -> Element {
        self.block_map
            .iter()
            .zip(&self.conjugators)
            .map(|(&b, c)| &(&c.dagger() * &a[b]) * c)
            .collect()
    }

    /// `φ^{-1}(a)`: canonical coordinates back to the original ones.
    pub fn apply_inverse(&self, a: &[Mat]) -> Element {
        let mut out: Vec<Option<Mat>> = vec![None; self.block_map.len()];
        for (c, (&b, conj)) in self.block_map.iter().zip(&self.conjugators).enumerate() {
            out[b] = Some(conj.conjugate(&a[c]));
        }
        out.into_iter().map(|m| m.expect("block map is a bijection")).collect()
    }

    /// Re-checks that `φ ∘ α = α' ∘ φ` on every matrix unit of `original`.
    pub fn verify(&self, original: &FdSystem) -> bool {
        self.conjugators.iter().all(Mat::is_unitary) && original.is_transported_by(&self.canonical, |a| self.apply(a))
    }

    pub fn is_trivial(&self) -> bool {
        self.block_map.iter().enumerate().all(|(c, &b)| c == b) && self.conjugators.iter().all(Mat::is_identity)
    }
}

struct Item {
    piece: Piece,
    blocks: Vec<usize>,
    conjugators: Vec<Mat>,
}

fn fixed_item(s: &FdSystem, b: usize) -> Result<Item, SystemError> {
    let ctx = &s.ctx;
    let p = s.p;
    let u = &s.implementing[b];
    let up = u.pow(p as u64);
    let v = if up.is_identity() {
        u.clone()
    } else if u.is_diagonal() {
        let inv = u.get(0, 0).inv()?;
        u.scale(&inv)
    } else {
        let lambda = up.as_scalar_multiple().ok_or(SystemError::NonScalarHolonomy { block: b })?;
        let mu = pth_root_of_root(ctx, &lambda, b)?;
        u.scale(&mu.inv()?)
    };
    if let Some(exps) = v.root_diag_exponents() {
        let mut order: Vec<usize> = (0..exps.len()).collect();
        order.sort_by_key(|&i| exps[i]);
        let sorted = order.iter().map(|&i| exps[i]).collect();
        return Ok(Item {
            piece: Piece::Fixed { exponents: sorted },
            blocks: vec![b],
            conjugators: vec![Mat::permutation(ctx, &order)],
        });
    }
    match eigenbasis(&v, p) {
        Ok((e, exps)) => Ok(Item { piece: Piece::Fixed { exponents: exps }, blocks: vec![b], conjugators: vec![e] }),
        Err(MatrixError::EigenbasisOutsideField { .. }) => Err(SystemError::NonDiagonalizableWithinField { block: b }),
        Err(e) => Err(e.into()),
    }
}

fn cycle_item(s: &FdSystem, orbit: &[usize]) -> Result<Item, SystemError> {
    let ctx = &s.ctx;
    let p = s.p as usize;
    let m = s.num_blocks();
    let mut sigma_inv = vec![0; m];
    for (i, &t) in s.sigma.iter().enumerate() {
        sigma_inv[t] = i;
    }
    let o0 = orbit[0];
    let mut blocks = vec![o0];
    for j in 1..p {
        blocks.push(sigma_inv[blocks[j - 1]]);
    }
    let lambda = s.holonomy(o0).as_scalar_multiple().ok_or(SystemError::NonScalarHolonomy { block: o0 })?;
    let mu_inv = if lambda.is_one() { Scalar::one(ctx) } else { pth_root_of_root(ctx, &lambda, o0)?.inv()? };
    let n = s.blocks[o0];
    let mut conjugators = vec![Mat::identity(ctx, n)];
    for j in 1..p {
        let next = (&s.implementing[blocks[j]] * &conjugators[j - 1]).scale(&mu_inv);
        conjugators.push(next);
    }
    Ok(Item { piece: Piece::Cycle { n }, blocks, conjugators })
}

/// Decomposes a validated system into canonical irreducible pieces and records
/// the isomorphism.
pub fn decompose(s: &FdSystem) -> Result<CanonicalForm, SystemError> {
    let report = s.validate();
    if !report.is_ok() {
        return Err(SystemError::Invalid(report.to_string()));
    }
    let mut items = Vec::new();
    for orbit in s.orbits() {
        if orbit.len() == 1 {
            items.push(fixed_item(s, orbit[0])?);
        } else {
            items.push(cycle_item(s, &orbit)?);
        }
    }
    // stable: ties keep the order of the smallest original block index
    items.sort_by(|a, b| a.piece.order_key(&b.piece));
    let mut pieces = Vec::with_capacity(items.len());
    let mut block_map = Vec::new();
    let mut conjugators = Vec::new();
    for item in items {
        pieces.push(item.piece);
        block_map.extend(item.blocks);
        conjugators.extend(item.conjugators);
    }
    let canonical = CanonicalSystem::new(&s.ctx, pieces)?;
    Ok(CanonicalForm { canonical, block_map, conjugators })
}

/// Recovers `U` with `map = Ad U` on `M_n` from the linear map alone, by solving
/// `map(E_ij) U = U E_ij` for all matrix units. `U` is normalized to be
/// unitary with `U^p = I`; among the remaining scalar freedom the first
/// nonzero diagonal entry (or first nonzero entry) is made 1 when possible.
pub fn recover_inner_unitary(ctx: &FieldContext, n: usize, map: &dyn Fn(&Mat) -> Mat) -> Result<Mat, SystemError> {
    let mut sys = LinearSystem::new(ctx, n * n);
    let mut images = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let e = Mat::unit(ctx, n, i, j);
            let img = map(&e);
            for eq in intertwiner_equations(&img, &e) {
                sys.add_equation(eq, Scalar::zero(ctx));
            }
            images.push((e, img));
        }
    }
    let sol = sys.solve()?;
    if sol.null_basis.len() != 1 {
        return Err(SystemError::NotInnerAutomorphism { n });
    }
    let mut u = vector_to_mat(ctx, &sol.null_basis[0], n, n);
    let pivot = (0..n)
        .map(|i| u.get(i, i).clone())
        .find(|x| !x.is_zero())
        .or_else(|| u.entries().iter().find(|x| !x.is_zero()).cloned())
        .ok_or(SystemError::NotInnerAutomorphism { n })?;
    u = u.scale(&pivot.inv()?);
    let gram = (&u.dagger() * &u).as_scalar_multiple().ok_or(SystemError::NotInnerAutomorphism { n })?;
    let c = gram.as_rational().ok_or(SystemError::NormalizationOutsideField)?;
    let s = sqrt_rational(ctx, &c).ok_or(SystemError::NormalizationOutsideField)?;
    u = u.scale(&s.inv()?);
    if !u.is_unitary() || images.iter().any(|(e, img)| &u.conjugate(e) != img) {
        return Err(SystemError::NotInnerAutomorphism { n });
    }
    let up = u.pow(ctx.p() as u64);
    if !up.is_identity() {
        let lambda = up.as_scalar_multiple().ok_or(SystemError::NormalizationOutsideField)?;
        let mu = pth_root_of_root(ctx, &lambda, 0).map_err(|_| SystemError::NormalizationOutsideField)?;
        u = u.scale(&mu.inv()?);
    }
    Ok(u)
}

impl FdSystem {
    /// The implementing unitary of a fixed block recovered from the action map.
    pub fn recover_block_unitary(&self, b: usize) -> Result<Mat, SystemError> {
        if self.sigma.get(b) != Some(&b) {
            return Err(SystemError::NotFixedBlock { block: b });
        }
        let u = self.implementing[b].clone();
        recover_inner_unitary(&self.ctx, self.blocks[b], &|x: &Mat| u.conjugate(x))
    }
}

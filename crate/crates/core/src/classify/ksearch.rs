//! Exhaustive search for invariant morphisms with bounded entries.
//!
//! Equivariance ties the rows of `F` along orbits of the target permutation:
//! `F[σ_B(r)][c] = F[r][σ_A⁻¹(c)]`, so only one row per orbit is chosen and,
//! when the row is fixed by `σ_B`, it must be constant on `σ_A`-orbits. The
//! unit condition and, for `phi`, the special element and the `ι` square
//! are row-local linear constraints with nonnegative coefficients, which
//! bound the search.

use crate::kinv::{check_pair, mat_mul, IntMatrix, KInvariant, KPair};

fn perm_of(m: &IntMatrix) -> Vec<usize> {
    m.iter().map(|row| row.iter().position(|&x| x == 1).expect("permutation matrix")).collect()
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &j) in perm.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

fn orbit_reps(perm: &[usize]) -> Vec<(usize, usize)> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut b = start;
        while !seen[b] {
            seen[b] = true;
            len += 1;
            b = perm[b];
        }
        out.push((start, len));
    }
    out
}

fn orbits(perm: &[usize]) -> Vec<Vec<usize>> {
    orbit_reps(perm)
        .into_iter()
        .map(|(s, len)| {
            let mut o = vec![s];
            for _ in 1..len {
                o.push(perm[*o.last().unwrap()]);
            }
            o
        })
        .collect()
}

/// A linear constraint `Σ_c coeff[c] x[c] (= or ≤) rhs` on one row.
struct Constraint {
    coeffs: Vec<i64>,
    rhs: i64,
    exact: bool,
}

/// All rows with entries in `0..=bound`, constant on each group of columns,
/// satisfying every constraint.
fn rows(groups: &[Vec<usize>], ncols: usize, bound: i64, constraints: &[Constraint]) -> Vec<Vec<i64>> {
    // group-level coefficients
    let gc: Vec<Vec<i64>> =
        constraints.iter().map(|k| groups.iter().map(|g| g.iter().map(|&c| k.coeffs[c]).sum()).collect()).collect();
    let mut out = Vec::new();
    let mut vals = vec![0i64; groups.len()];
    let mut sums = vec![0i64; constraints.len()];
    fn rec(
        i: usize,
        groups: &[Vec<usize>],
        ncols: usize,
        bound: i64,
        constraints: &[Constraint],
        gc: &[Vec<i64>],
        vals: &mut Vec<i64>,
        sums: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        if i == groups.len() {
            if constraints.iter().zip(sums.iter()).all(|(k, &s)| if k.exact { s == k.rhs } else { s <= k.rhs }) {
                let mut row = vec![0; ncols];
                for (g, &v) in groups.iter().zip(vals.iter()) {
                    for &c in g {
                        row[c] = v;
                    }
                }
                out.push(row);
            }
            return;
        }
        for v in 0..=bound {
            if (0..constraints.len()).any(|k| sums[k] + gc[k][i] * v > constraints[k].rhs) {
                break;
            }
            for k in 0..constraints.len() {
                sums[k] += gc[k][i] * v;
            }
            vals[i] = v;
            rec(i + 1, groups, ncols, bound, constraints, gc, vals, sums, out);
            for k in 0..constraints.len() {
                sums[k] -= gc[k][i] * v;
            }
        }
    }
    rec(0, groups, ncols, bound, constraints, &gc, &mut vals, &mut sums, &mut out);
    out
}

/// Fills a full matrix from one chosen row per orbit of `sigma_b`.
fn expand(reps: &[(usize, usize)], chosen: &[&Vec<i64>], sigma_b: &[usize], sigma_a_inv: &[usize]) -> IntMatrix {
    let ncols = sigma_a_inv.len();
    let mut m = vec![vec![0; ncols]; sigma_b.len()];
    for (&(r, len), row) in reps.iter().zip(chosen) {
        let mut cur = (*row).clone();
        let mut rr = r;
        for _ in 0..len {
            m[rr] = cur.clone();
            // F[σ_B(r)][c] = F[r][σ_A⁻¹(c)]
            cur = (0..ncols).map(|c| cur[sigma_a_inv[c]]).collect();
            rr = sigma_b[rr];
        }
    }
    m
}

fn product(choices: &[Vec<Vec<i64>>]) -> Vec<Vec<&Vec<i64>>> {
    let mut out: Vec<Vec<&Vec<i64>>> = vec![Vec::new()];
    for opts in choices {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for prefix in &out {
            for o in opts {
                let mut v = prefix.clone();
                v.push(o);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn groups_for(row_fixed: bool, col_orbits: &[Vec<usize>], ncols: usize) -> Vec<Vec<usize>> {
    if row_fixed {
        col_orbits.to_vec()
    } else {
        (0..ncols).map(|c| vec![c]).collect()
    }
}

/// Every pair with entries at most `bound` that passes [`check_pair`],
/// sorted by `F` then `phi`, row-major.
pub fn ksearch(a: &KInvariant, b: &KInvariant, bound: i64, unital: bool) -> Vec<KPair> {
    let (sa, sb) = (perm_of(&a.act), perm_of(&b.act));
    let (da, db) = (perm_of(&a.dual_act), perm_of(&b.dual_act));
    let (sa_inv, da_inv) = (inverse(&sa), inverse(&da));
    let (f_reps, p_reps) = (orbit_reps(&sb), orbit_reps(&db));
    let (sa_orbits, da_orbits) = (orbits(&sa), orbits(&da));

    let f_choices: Vec<Vec<Vec<i64>>> = f_reps
        .iter()
        .map(|&(r, len)| {
            let unit = Constraint { coeffs: a.unit.clone(), rhs: b.unit[r], exact: unital };
            rows(&groups_for(len == 1, &sa_orbits, a.m), a.m, bound, &[unit])
        })
        .collect();

    let mut out = Vec::new();
    for f_rows in product(&f_choices) {
        let f = expand(&f_reps, &f_rows, &sb, &sa_inv);
        let Some(iota_f) = mat_mul(&b.iota, &f, b.m) else { continue };
        let p_choices: Vec<Vec<Vec<i64>>> = p_reps
            .iter()
            .map(|&(r, len)| {
                let mut cons = vec![Constraint { coeffs: a.special.clone(), rhs: b.special[r], exact: true }];
                for c in 0..a.m {
                    cons.push(Constraint { coeffs: a.iota.iter().map(|row| row[c]).collect(), rhs: iota_f[r][c], exact: true });
                }
                rows(&groups_for(len == 1, &da_orbits, a.mc), a.mc, bound, &cons)
            })
            .collect();
        if p_choices.iter().any(Vec::is_empty) {
            continue;
        }
        for p_rows in product(&p_choices) {
            let phi = expand(&p_reps, &p_rows, &db, &da_inv);
            let kp = KPair { f: f.clone(), phi, unital };
            if check_pair(&kp, a, b).is_ok() {
                out.push(kp);
            }
        }
    }
    out.sort_by(|x, y| (&x.f, &x.phi).cmp(&(&y.f, &y.phi)));
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::FieldContext;
    use crate::kinv::{identity_pair, invariant_of};
    use crate::system::{CanonicalSystem, Piece};

    fn inv(p: u32, pieces: Vec<Piece>) -> KInvariant {
        invariant_of(&CanonicalSystem::new(&FieldContext::with_default_order(p).unwrap(), pieces).unwrap())
    }

    #[test]
    fn scalar_into_m2() {
        let a = inv(2, vec![Piece::Fixed { exponents: vec![0] }]);
        let b = inv(2, vec![Piece::Fixed { exponents: vec![0, 1] }]);
        let found = ksearch(&a, &b, 2, true);
        assert_eq!(found, vec![KPair { f: vec![vec![2]], phi: vec![vec![1, 1], vec![1, 1]], unital: true }]);
    }

    #[test]
    fn special_element_blocks_everything() {
        let a = inv(2, vec![Piece::Fixed { exponents: vec![0, 1] }]);
        let b = inv(2, vec![Piece::Fixed { exponents: vec![0, 0, 0, 1] }]);
        assert!(ksearch(&a, &b, 3, true).is_empty());
    }

    #[test]
    fn identity_is_found() {
        for pieces in [
            vec![Piece::Fixed { exponents: vec![0, 1, 1] }],
            vec![Piece::Cycle { n: 2 }],
            vec![Piece::Fixed { exponents: vec![0] }, Piece::Cycle { n: 1 }],
        ] {
            let a = inv(3, pieces);
            assert!(ksearch(&a, &a, 1, true).contains(&identity_pair(&a)));
        }
    }

    #[test]
    fn cycle_into_cycle_circulants() {
        let a = inv(3, vec![Piece::Cycle { n: 1 }]);
        let b = inv(3, vec![Piece::Cycle { n: 2 }]);
        let found = ksearch(&a, &b, 2, true);
        // rows of F: nonneg integer vectors with sum 2, one circulant each
        assert_eq!(found.len(), 6);
        assert!(found.iter().all(|kp| kp.phi == vec![vec![2]]));
    }
}

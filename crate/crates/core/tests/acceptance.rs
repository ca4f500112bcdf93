//! Acceptance checks, one test per criterion. Each prints a PASS/FAIL line
//! directly to stderr so it shows up even when output is captured.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use afzp_core::classify::{equiv_unitary, intertwine, ksearch, lift, lift_with, verify_certificate, verify_equivalence, IntertwiningCertificate, LiftOrder, PairSource};
use afzp_core::crossed::{CrossedElement, CrossedPresentation};
use afzp_core::kinv::{check_pair, compose_pairs, induced_map, invariant_of, KInvariant};
use afzp_core::system::decompose;
use afzp_core::towers::{naive_doubling_tower, product_tower, resorted_product_tower};
use afzp_core::wire::{from_document, to_document};
use afzp_core::{CanonicalForm, CanonicalSystem, EqHom, FdSystem, KPair, Mat, Piece, Tower};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn report(criterion: u32, name: &str, ok: bool, detail: &str, elapsed: Duration) {
    let status = if ok { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr();
    writeln!(err, "criterion {criterion} [{status}] {name}: {detail} ({:.2?})", elapsed).unwrap();
}

fn random_crossed(rng: &mut ChaCha8Rng, cp: &CrossedPresentation) -> CrossedElement {
    let c = cp.ctx().clone();
    let sizes = cp.source().block_sizes().to_vec();
    let p = cp.source().p() as usize;
    CrossedElement { coeffs: (0..p).map(|_| random_element(rng, &c, &sizes)).collect() }
}

fn identification_laws(rng: &mut ChaCha8Rng, cp: &CrossedPresentation, trials: usize) -> Result<(), String> {
    let one = cp.identify(&cp.one());
    if one.iter().any(|m| !m.is_identity()) {
        return Err("unit is not sent to the identity".into());
    }
    for _ in 0..trials {
        let x = random_crossed(rng, cp);
        let y = random_crossed(rng, cp);
        let (ix, iy) = (cp.identify(&x), cp.identify(&y));
        let prod: Vec<Mat> = ix.iter().zip(&iy).map(|(a, b)| a * b).collect();
        if cp.identify(&cp.mul(&x, &y)) != prod {
            return Err("products differ".into());
        }
        let adj: Vec<Mat> = ix.iter().map(Mat::dagger).collect();
        if cp.identify(&cp.adjoint(&x)) != adj {
            return Err("adjoints differ".into());
        }
        if cp.unidentify(&ix) != x {
            return Err("identification is not invertible".into());
        }
    }
    Ok(())
}

#[test]
fn criterion_1_fixed_piece_identification() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pairs = 0;
    let mut failure = None;
    for p in [2u32, 3, 5] {
        let c = ctx(p);
        for n in 1..=4 {
            let v = random_exponents(&mut rng, p, n);
            let cp = CrossedPresentation::new(&sys(&c, vec![Piece::Fixed { exponents: v.clone() }]));
            let trials = if p == 5 { 6 } else { 10 };
            if let Err(e) = identification_laws(&mut rng, &cp, trials) {
                failure = Some(format!("p={p}, V exponents {v:?}: {e}"));
            }
            pairs += trials;
        }
    }
    let elapsed = start.elapsed();
    let ok = failure.is_none() && pairs >= 100 && elapsed < Duration::from_secs(5);
    report(1, "fixed-piece crossed product identification", ok, &failure.unwrap_or(format!("{pairs} random pairs")), elapsed);
    assert!(ok);
}

#[test]
fn criterion_2_cycle_piece_identification() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut pairs = 0;
    let mut failure = None;
    for p in [2u32, 3, 5] {
        let c = ctx(p);
        for n in 1..=3 {
            let cp = CrossedPresentation::new(&sys(&c, vec![Piece::Cycle { n }]));
            let trials = if p == 5 { 6 } else { 14 };
            if let Err(e) = identification_laws(&mut rng, &cp, trials) {
                failure = Some(format!("p={p}, n={n}: {e}"));
            }
            pairs += trials;
        }
    }
    let elapsed = start.elapsed();
    let ok = failure.is_none() && pairs >= 100 && elapsed < Duration::from_secs(5);
    report(2, "cycle-piece crossed product identification", ok, &failure.unwrap_or(format!("{pairs} random pairs")), elapsed);
    assert!(ok);
}

/// K-data computed from traces of explicit projections, with no use of the
/// invariant code.
fn k_data_from_projections(cp: &CrossedPresentation) -> (Vec<Vec<i64>>, Vec<Vec<i64>>, Vec<i64>) {
    let src = cp.source();
    let (m, mc) = (src.num_blocks(), cp.num_blocks());
    let rank = |e: &[Mat]| -> Vec<i64> { e.iter().map(|x| x.trace().as_integer().unwrap()).collect() };
    let mut iota = vec![vec![0; m]; mc];
    for b in 0..m {
        let e = src.unit_element(b, 0, 0);
        for (j, r) in rank(&cp.identify(&cp.iota(&e))).into_iter().enumerate() {
            iota[j][b] = r;
        }
    }
    let mut dual = vec![vec![0; mc]; mc];
    for j in 0..mc {
        let e = cp.minimal_projection(j);
        let moved = cp.identify(&cp.dual_action(&cp.unidentify(&e)));
        for (i, r) in rank(&moved).into_iter().enumerate() {
            dual[i][j] = r;
        }
    }
    let special = rank(&cp.identify(&cp.averaging_projection()));
    (iota, dual, special)
}

/// The maps as stated: `x ↦ (x, …, x)` and a cyclic shift on fixed pieces;
/// coordinate sum and the identity on cycle pieces.
fn stated_k_maps(c: &CanonicalSystem, mc: usize) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let p = c.p() as usize;
    let mut iota = vec![vec![0; c.num_blocks()]; mc];
    let mut dual = vec![vec![0; mc]; mc];
    let mut row = 0;
    for (k, pc) in c.pieces().iter().enumerate() {
        let blocks = c.piece_blocks(k);
        match pc {
            Piece::Fixed { .. } => {
                for j in 0..p {
                    iota[row + j][blocks.start] = 1;
                    // the minimal projection of summand j moves to summand j+1
                    dual[row + (j + 1) % p][row + j] = 1;
                }
                row += p;
            }
            Piece::Cycle { .. } => {
                for b in blocks {
                    iota[row][b] = 1;
                }
                dual[row][row] = 1;
                row += 1;
            }
        }
    }
    (iota, dual)
}

#[test]
fn criterion_3_k_data() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failure = None;
    let mut systems = 0;
    for p in [2u32, 3, 5] {
        let c = ctx(p);
        for _ in 0..12 {
            let mut pcs = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                let n = rng.gen_range(1..=3);
                if rng.gen_bool(0.6) {
                    pcs.push(Piece::Fixed { exponents: random_exponents(&mut rng, p, n) });
                } else {
                    pcs.push(Piece::Cycle { n });
                }
            }
            let s = CanonicalSystem::from_unsorted(&c, pcs.clone()).unwrap();
            systems += 1;
            let cp = CrossedPresentation::new(&s);
            let inv = invariant_of(&s);
            let (iota, dual, special) = k_data_from_projections(&cp);
            let (stated_iota, stated_dual) = stated_k_maps(&s, cp.num_blocks());
            if iota != inv.iota || iota != stated_iota {
                failure = Some(format!("iota mismatch for {pcs:?}"));
            }
            if dual != inv.dual_act || dual != stated_dual {
                failure = Some(format!("dual action mismatch for {pcs:?}"));
            }
            if special != inv.special {
                failure = Some(format!("special element mismatch for {pcs:?}: {special:?} vs {:?}", inv.special));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failure.is_none();
    report(3, "iota, dual action and special element from projections", ok, &failure.unwrap_or(format!("{systems} systems")), elapsed);
    assert!(ok);
}

#[test]
fn criterion_4_double_crossed_product() {
    let start = Instant::now();
    let mut failure = None;
    let mut checked = 0;
    for p in [2u32, 3, 5] {
        let c = ctx(p);
        for n in 1..=4 {
            for v in multisets(p, n).into_iter().take(6) {
                let cp = CrossedPresentation::new(&sys(&c, vec![Piece::Fixed { exponents: v.clone() }]));
                let dual = match decompose(cp.dual_system()) {
                    Ok(d) => d,
                    Err(e) => {
                        failure = Some(format!("p={p}, V {v:?}: {e}"));
                        continue;
                    }
                };
                let twice = CrossedPresentation::new(&dual.canonical);
                let sizes = twice.block_sizes();
                let dim: usize = sizes.iter().map(|k| k * k).sum();
                if sizes != [p as usize * n] || dim != (p as usize * n).pow(2) {
                    failure = Some(format!("p={p}, V {v:?}: blocks {sizes:?}"));
                }
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failure.is_none();
    report(4, "double crossed product of a fixed piece is one full matrix block", ok, &failure.unwrap_or(format!("{checked} pieces")), elapsed);
    assert!(ok);
}

/// Every pair with entries at most `bound` that passes the pair check,
/// found by enumerating all matrices of the right shape.
fn brute_force_pairs(a: &KInvariant, b: &KInvariant, bound: i64) -> Vec<KPair> {
    let cells = b.m * a.m + b.mc * a.mc;
    let base = (bound + 1) as usize;
    let mut out = Vec::new();
    for code in 0..base.pow(cells as u32) {
        let mut digits = (0..cells).scan(code, |c, _| {
            let d = (*c % base) as i64;
            *c /= base;
            Some(d)
        });
        let f = (0..b.m).map(|_| (0..a.m).map(|_| digits.next().unwrap()).collect()).collect();
        let phi = (0..b.mc).map(|_| (0..a.mc).map(|_| digits.next().unwrap()).collect()).collect();
        let kp = KPair { f, phi, unital: true };
        if check_pair(&kp, a, b).is_ok() {
            out.push(kp);
        }
    }
    out.sort_by(|x, y| (&x.f, &x.phi).cmp(&(&y.f, &y.phi)));
    out
}

#[test]
fn criterion_5_existence_grid() {
    let start = Instant::now();
    let mut failure = None;
    let mut count = 0;
    for p in [2u32, 3] {
        for inst in grid(p) {
            count += 1;
            match lift(&inst.pair, &inst.src, &inst.tgt) {
                Ok(h) => {
                    let r = h.validate();
                    if !r.is_ok() {
                        failure = Some(format!("invalid lift: {r}"));
                    } else if induced_map(&h).unwrap() != inst.pair {
                        failure = Some(format!("round trip differs for {:?}", inst.pair));
                    }
                }
                Err(e) => failure = Some(format!("{:?} -> {:?}, {:?}: {e}", inst.src.pieces(), inst.tgt.pieces(), inst.pair)),
            }
        }
    }
    let elapsed = start.elapsed();
    let mut oracle_shapes = 0;
    for p in [2u32, 3] {
        let c = ctx(p);
        let tiny = pieces(p, 2, 1);
        for src in tiny.iter().filter(|pc| pc.n() == 1) {
            for tgt in &tiny {
                let (ia, ib) = (invariant_of(&sys(&c, vec![src.clone()])), invariant_of(&sys(&c, vec![tgt.clone()])));
                if ib.m * ia.m + ib.mc * ia.mc > 8 {
                    continue;
                }
                oracle_shapes += 1;
                let found = ksearch(&ia, &ib, 2, true);
                if found != brute_force_pairs(&ia, &ib, 2) {
                    failure = Some(format!("pair search disagrees with enumeration for {src:?} -> {tgt:?}"));
                }
            }
        }
    }
    let ok = failure.is_none() && count >= 500 && elapsed < Duration::from_secs(60);
    let detail = failure.unwrap_or(format!("{count} grid instances, pair search matches enumeration on {oracle_shapes} shapes"));
    report(5, "every accepted pair lifts and round-trips", ok, &detail, elapsed);
    assert!(ok);
}

#[test]
fn criterion_6_uniqueness_grid() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failure = None;
    let mut count = 0;
    let mut oracle_checked = 0;
    for p in [2u32, 3] {
        for (idx, inst) in grid(p).into_iter().enumerate() {
            if idx % 4 != 0 {
                continue;
            }
            let h1 = lift_with(&inst.pair, &inst.src, &inst.tgt, LiftOrder::Canonical).unwrap();
            let reversed = lift_with(&inst.pair, &inst.src, &inst.tgt, LiftOrder::Reversed).unwrap();
            let u = random_fixed_point_unitary(&mut rng, &inst.tgt);
            let mut others = vec![reversed.conjugated_by(&u)];
            if reversed != h1 {
                others.push(reversed);
            }
            for h2 in others {
                if h2 == h1 {
                    continue;
                }
                count += 1;
                match equiv_unitary(&h1, &h2) {
                    Ok((w, _)) => {
                        let r = verify_equivalence(&h1, &h2, &w);
                        if !r.is_ok() {
                            failure = Some(format!("{r}"));
                        }
                        if inst.tgt.dim() <= 6 {
                            oracle_checked += 1;
                            if !in_span(&w, &intertwiner_space(&h1, &h2)) {
                                failure = Some(format!("W outside the solved intertwiner space for {:?}", inst.pair));
                            }
                        }
                    }
                    Err(e) => failure = Some(format!("{:?} -> {:?}, {:?}: {e}", inst.src.pieces(), inst.tgt.pieces(), inst.pair)),
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failure.is_none() && count >= 200 && elapsed < Duration::from_secs(60);
    let detail = failure.unwrap_or(format!("{count} pairs of distinct lifts, {oracle_checked} checked against the solved intertwiner space"));
    report(6, "distinct lifts are conjugate by a fixed unitary", ok, &detail, elapsed);
    assert!(ok);
}

fn replayed(cert: &IntertwiningCertificate) -> bool {
    let text = to_document("certificate", cert).unwrap();
    let back: IntertwiningCertificate = from_document("certificate", &text).unwrap();
    back == *cert && verify_certificate(&back).is_ok()
}

#[test]
fn criterion_7_tower_intertwining() {
    let mut all_ok = true;
    for (p, depth) in [(2u32, 4usize), (3, 3)] {
        let start = Instant::now();
        let c = ctx(p);
        let a = product_tower(&c, depth).unwrap();
        let b = resorted_product_tower(&c, depth).unwrap();
        let result = intertwine(&a, &b, &PairSource::Auto { bound: 3 }, depth);
        let (ok, detail) = match result {
            Ok(cert) => {
                let corrected = cert.backward.iter().chain(&cert.forward).filter(|h| h.correction.as_ref().is_some_and(|w| w.iter().any(|m| !m.is_identity()))).count();
                let ok = replayed(&cert) && cert.forward_index.last() == Some(&(depth, depth));
                (ok, format!("stages {:?}, {corrected} nontrivial corrections, re-verified from JSON", cert.forward_index))
            }
            Err(e) => (false, e.to_string()),
        };
        let elapsed = start.elapsed();
        let ok = ok && elapsed < Duration::from_secs(10);
        report(7, &format!("product tower p={p} against its resorted presentation, depth {depth}"), ok, &detail, elapsed);
        all_ok &= ok;
    }
    assert!(all_ok);
}

#[test]
fn criterion_8_naive_doubling_tower() {
    let start = Instant::now();
    let t = naive_doubling_tower(4).unwrap();
    let failing = t.maps[0].validate();
    let witness = failing.violations.iter().find(|v| v.check == "equivariance").cloned();
    let mut empty = true;
    for i in 0..t.systems.len() - 1 {
        let found = ksearch(&invariant_of(&t.systems[i]), &invariant_of(&t.systems[i + 1]), 3, true);
        empty &= found.is_empty();
    }
    // the obstruction is the special element: every circulant phi with the
    // right row sum sends (1, 1) to a constant vector
    let (ia, ib): (KInvariant, KInvariant) = (invariant_of(&t.systems[0]), invariant_of(&t.systems[1]));
    let special_only = (0..=2).all(|s| {
        let kp = KPair { f: vec![vec![2]], phi: vec![vec![s, 2 - s], vec![2 - s, s]], unital: true };
        let r = check_pair(&kp, &ia, &ib);
        r.violations.len() == 1 && r.violations[0].check == "special element"
    });
    let elapsed = start.elapsed();
    let ok = witness.is_some() && empty && special_only && elapsed < Duration::from_secs(5);
    let detail = match &witness {
        Some(v) => format!("{} at {}: {}; invariant search between consecutive stages is empty", v.check, v.location, v.detail),
        None => "doubling map unexpectedly equivariant".into(),
    };
    report(8, "doubling tower fails equivariance and the special-element condition", ok, &detail, elapsed);
    assert!(ok);
}

fn json_round_trip<T: serde::Serialize + serde::de::DeserializeOwned + PartialEq>(kind: &str, v: &T) -> bool {
    let text = to_document(kind, v).unwrap();
    let back: T = from_document(kind, &text).unwrap();
    back == *v && to_document(kind, &back).unwrap() == text
}

#[test]
fn criterion_9_functoriality_and_serialization() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failure = None;
    let mut composed = 0;
    let mut serialized = 0;
    while composed < 100 {
        let p = if rng.gen_bool(0.5) { 2 } else { 3 };
        let c = ctx(p);
        let pool = pieces(p, 2, 1);
        let pick = |rng: &mut ChaCha8Rng, k: usize| {
            let v: Vec<Piece> = (0..k).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
            CanonicalSystem::from_unsorted(&c, v).unwrap()
        };
        let a = pick(&mut rng, 1);
        let k = rng.gen_range(1..=2);
        let b = pick(&mut rng, k);
        let cands_ab = ksearch(&invariant_of(&a), &invariant_of(&b), 2, true);
        if cands_ab.is_empty() {
            continue;
        }
        let ia = invariant_of(&b);
        let cc = {
            let mut found = None;
            for _ in 0..8 {
                let k = rng.gen_range(1..=2);
                let c2 = pick(&mut rng, k);
                if c2.dim() > 12 {
                    continue;
                }
                let k = ksearch(&ia, &invariant_of(&c2), 2, true);
                if !k.is_empty() {
                    found = Some((c2, k));
                    break;
                }
            }
            found
        };
        let Some((c2, cands_bc)) = cc else { continue };
        let h = lift(&cands_ab[rng.gen_range(0..cands_ab.len())], &a, &b).unwrap();
        let g = lift(&cands_bc[rng.gen_range(0..cands_bc.len())], &b, &c2).unwrap();
        let h = h.conjugated_by(&random_fixed_point_unitary(&mut rng, &b));
        let g = g.conjugated_by(&random_fixed_point_unitary(&mut rng, &c2));
        let gh = EqHom::compose(&g, &h).unwrap();
        let lhs = induced_map(&gh).unwrap();
        let rhs = compose_pairs(&induced_map(&g).unwrap(), &induced_map(&h).unwrap()).unwrap();
        if lhs != rhs || !gh.validate().is_ok() {
            failure = Some(format!("composite {:?} -> {:?} -> {:?}", a.pieces(), b.pieces(), c2.pieces()));
        }
        composed += 1;
        if composed % 10 == 0 {
            let cp = CrossedPresentation::new(&b);
            let form: CanonicalForm = decompose(&b.to_system()).unwrap();
            let fd: FdSystem = b.to_system();
            let ok = json_round_trip("hom", &gh)
                && json_round_trip("system", &fd)
                && json_round_trip("canonical", &b)
                && json_round_trip("canonical-form", &form)
                && json_round_trip("crossed", &cp)
                && json_round_trip("kinvariant", &invariant_of(&b))
                && json_round_trip("kpair", &lhs)
                && json_round_trip("report", &gh.validate());
            if !ok {
                failure = Some(format!("JSON round trip failed for {:?}", b.pieces()));
            }
            serialized += 1;
        }
    }
    let c = ctx(2);
    let t: Tower = product_tower(&c, 2).unwrap();
    let h = lift(&KPair { f: vec![vec![2]], phi: vec![vec![1, 1], vec![1, 1]], unital: true }, &t.systems[0], &t.systems[1]).unwrap();
    let (w, witness) = equiv_unitary(&t.maps[0], &h).unwrap();
    let extra = json_round_trip("tower", &t) && json_round_trip("witness", &witness) && json_round_trip("unitary", &w);
    if !extra {
        failure = Some("tower or witness round trip failed".into());
    }
    let elapsed = start.elapsed();
    let ok = failure.is_none();
    let detail = failure.unwrap_or(format!("{composed} composable pairs, {serialized} serialization rounds"));
    report(9, "induced maps compose and JSON round-trips are exact", ok, &detail, elapsed);
    assert!(ok);
}

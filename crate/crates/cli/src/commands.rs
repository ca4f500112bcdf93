//! One function per subcommand. Each returns the document to write (if any),
//! a text rendering, and whether the result is a pass.

use std::fmt::Write as _;
use std::path::Path;

use afzp_core::classify::{equiv_unitary, intertwine, ksearch, lift, verify_certificate, verify_equivalence, IntertwiningCertificate, PairSource, UniquenessWitness};
use afzp_core::crossed::CrossedPresentation;
use afzp_core::kinv::{check_pair, induced_map, invariant_of, IntMatrix};
use afzp_core::system::{decompose, Element};
use afzp_core::towers::{naive_doubling_tower, product_tower, resorted_product_tower};
use afzp_core::{CanonicalSystem, EqHom, FdSystem, FieldContext, KInvariant, KPair, Piece, Report, Tower};
use serde::{Deserialize, Serialize};

use crate::io::{self, math, CliError};

pub struct Output {
    /// `(kind, JSON document)` for the file written by `--out`.
    pub document: Option<(String, String)>,
    pub text: String,
    pub ok: bool,
}

impl Output {
    fn data<T: Serialize>(kind: &str, value: &T, text: String) -> Result<Self, CliError> {
        Ok(Output { document: Some((kind.to_string(), io::document(kind, value)?)), text, ok: true })
    }

    fn report(r: &Report, heading: &str) -> Result<Self, CliError> {
        let text = if r.is_ok() { format!("PASS {heading}") } else { format!("FAIL {heading}\n{r}") };
        Ok(Output { document: Some(("report".into(), io::document("report", r)?)), text, ok: r.is_ok() })
    }
}

/// What `equiv` writes: the unitary and the per-block data it was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Equivalence {
    pub unitary: Element,
    pub witness: UniquenessWitness,
}

fn int_matrix(name: &str, m: &IntMatrix) -> String {
    let mut s = format!("{name}:\n");
    for row in m {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>3}")).collect();
        let _ = writeln!(s, "  [{}]", cells.join(""));
    }
    s
}

fn describe_pieces(c: &CanonicalSystem) -> String {
    let parts: Vec<String> = c
        .pieces()
        .iter()
        .map(|pc| match pc {
            Piece::Fixed { exponents } => format!("fixed M_{} with V exponents {:?}", exponents.len(), exponents),
            Piece::Cycle { n } => format!("cycle of {} copies of M_{n}", c.p()),
        })
        .collect();
    format!("p = {}, field order {}: {}", c.p(), c.ctx().order(), parts.join(" + "))
}

fn describe_invariant(k: &KInvariant) -> String {
    let mut s = format!("K0(A) = Z^{}, K0 of the crossed product = Z^{}\n", k.m, k.mc);
    let _ = writeln!(s, "unit: {:?}", k.unit);
    let _ = writeln!(s, "special: {:?}", k.special);
    s += &int_matrix("action", &k.act);
    s += &int_matrix("dual action", &k.dual_act);
    s += &int_matrix("iota", &k.iota);
    s.trim_end().to_string()
}

fn describe_pair(kp: &KPair) -> String {
    let mut s = int_matrix("F", &kp.f);
    s += &int_matrix("phi", &kp.phi);
    let _ = write!(s, "unital: {}", kp.unital);
    s
}

fn describe_hom(h: &EqHom) -> String {
    let mut s = format!("{} -> {}\n", describe_pieces(h.source()), describe_pieces(h.target()));
    for (t, b) in h.blocks().iter().enumerate() {
        let slots: Vec<String> = b
            .slots
            .iter()
            .map(|sl| match sl.phase {
                Some(c) => format!("{}x block {} (phase {c})", sl.mult, sl.block + 1),
                None => format!("{}x block {}", sl.mult, sl.block + 1),
            })
            .collect();
        let _ = writeln!(s, "target block {}: {}", t + 1, if slots.is_empty() { "zero".into() } else { slots.join(", ") });
    }
    s.trim_end().to_string()
}

fn describe_certificate(c: &IntertwiningCertificate) -> String {
    let stages: Vec<String> = c.forward_index.iter().map(|(s, n)| format!("A{s}->B{n}")).collect();
    let corrected = c.forward.iter().chain(&c.backward).filter(|h| h.correction.is_some()).count();
    format!("{} forward maps ({}), {} backward maps, {corrected} corrected", c.forward.len(), stages.join(", "), c.backward.len())
}

pub fn validate(path: &Path, order: Option<u32>) -> Result<Output, CliError> {
    let text = io::read_text(path)?;
    let kind = io::kind_of(path, &text)?;
    let r = match kind.as_str() {
        "system" => {
            let mut s: FdSystem = io::parse(path, "system")?;
            if let Some(n) = order {
                s = io::embed_system(&s, n)?;
            }
            s.validate()
        }
        // these only parse when well-formed
        "canonical" => io::load_canonical(path, order).map(|_| Report::new())?,
        "canonical-form" => io::parse::<afzp_core::CanonicalForm>(path, "canonical-form").map(|_| Report::new())?,
        "crossed" => io::parse::<CrossedPresentation>(path, "crossed").map(|_| Report::new())?,
        "kinvariant" => io::parse::<KInvariant>(path, "kinvariant").map(|_| Report::new())?,
        "kpair" => io::load_pair(path).map(|_| Report::new())?,
        "kpairs" => io::load_pairs(path).map(|_| Report::new())?,
        "hom" => io::load_hom(path, order)?.validate(),
        "tower" => io::load_tower(path, order)?.validate(),
        "certificate" => verify_certificate(&io::load_certificate(path)?),
        other => return Err(CliError::Input(format!("{}: unknown kind \"{other}\"", path.display()))),
    };
    Output::report(&r, &format!("{kind} {}", path.display()))
}

pub fn canon(path: &Path, order: Option<u32>) -> Result<Output, CliError> {
    let mut s: FdSystem = io::parse(path, "system")?;
    if let Some(n) = order {
        s = io::embed_system(&s, n)?;
    }
    let form = decompose(&s).map_err(math)?;
    let map: Vec<String> = form.block_map.iter().map(|b| (b + 1).to_string()).collect();
    let text = format!("{}\ncanonical blocks carry original blocks [{}]", describe_pieces(&form.canonical), map.join(", "));
    Output::data("canonical-form", &form, text)
}

pub fn crossed(path: &Path, order: Option<u32>) -> Result<Output, CliError> {
    let c = io::load_canonical(path, order)?;
    let cp = CrossedPresentation::new(&c);
    let text = format!("{}\ncrossed product blocks {:?}\nspecial element {:?}", describe_pieces(&c), cp.block_sizes(), cp.special());
    Output::data("crossed", &cp, text)
}

pub fn kinv(path: &Path, order: Option<u32>) -> Result<Output, CliError> {
    let c = io::load_canonical(path, order)?;
    let k = invariant_of(&c);
    let text = format!("{}\n{}", describe_pieces(&c), describe_invariant(&k));
    Output::data("kinvariant", &k, text)
}

pub fn induced(path: &Path, order: Option<u32>) -> Result<Output, CliError> {
    let h = io::load_hom(path, order)?;
    let kp = induced_map(&h).map_err(math)?;
    Output::data("kpair", &kp, describe_pair(&kp))
}

pub fn checkpair(pair: &Path, a: &Path, b: &Path, order: Option<u32>) -> Result<Output, CliError> {
    let kp = io::load_pair(pair)?;
    let (ia, ib) = (io::load_invariant(a, order)?, io::load_invariant(b, order)?);
    Output::report(&check_pair(&kp, &ia, &ib), &format!("pair {}", pair.display()))
}

pub fn lift_cmd(pair: &Path, src: &Path, tgt: &Path, order: Option<u32>) -> Result<Output, CliError> {
    let kp = io::load_pair(pair)?;
    let (a, b) = (io::load_canonical(src, order)?, io::load_canonical(tgt, order)?);
    let h = lift(&kp, &a, &b).map_err(math)?;
    Output::data("hom", &h, describe_hom(&h))
}

pub fn equiv(h1: &Path, h2: &Path, order: Option<u32>) -> Result<Output, CliError> {
    let (h1, h2) = (io::load_hom(h1, order)?, io::load_hom(h2, order)?);
    let (w, witness) = equiv_unitary(&h1, &h2).map_err(math)?;
    let r = verify_equivalence(&h1, &h2, &w);
    if !r.is_ok() {
        return Err(CliError::Math(r.to_string()));
    }
    let sizes: Vec<usize> = w.iter().map(|m| m.rows()).collect();
    let text = format!("unitary W with blocks {sizes:?}: unitary, fixed by the action, and Ad W carries the second map to the first");
    Output::data("equivalence", &Equivalence { unitary: w, witness }, text)
}

pub fn intertwine_cmd(a: &Path, b: &Path, pairs: Option<&Path>, depth: Option<usize>, bound: i64, order: Option<u32>) -> Result<Output, CliError> {
    let (ta, tb) = (io::load_tower(a, order)?, io::load_tower(b, order)?);
    let depth = depth.unwrap_or(ta.len().min(tb.len()).saturating_sub(1));
    let source = match pairs {
        Some(p) => PairSource::Given(io::load_pairs(p)?),
        None => PairSource::Auto { bound },
    };
    let cert = intertwine(&ta, &tb, &source, depth).map_err(math)?;
    let r = verify_certificate(&cert);
    if !r.is_ok() {
        return Err(CliError::Math(r.to_string()));
    }
    Output::data("certificate", &cert, format!("PASS intertwined to depth {depth}: {}", describe_certificate(&cert)))
}

pub fn verify(path: &Path) -> Result<Output, CliError> {
    let cert = io::load_certificate(path)?;
    let r = verify_certificate(&cert);
    let mut out = Output::report(&r, &format!("certificate {}", path.display()))?;
    if r.is_ok() {
        out.text = format!("{}: {}", out.text, describe_certificate(&cert));
    }
    Ok(out)
}

pub const DEMOS: [&str; 3] = ["product-tower-p2", "product-tower-p3", "naive-doubling"];

fn product_demo(p: u32, depth: usize, order: Option<u32>) -> Result<Output, CliError> {
    let ctx = match order {
        Some(n) => FieldContext::new(p, n),
        None => FieldContext::with_default_order(p),
    }
    .map_err(|e| CliError::Input(e.to_string()))?;
    let a = product_tower(&ctx, depth).map_err(math)?;
    let b = resorted_product_tower(&ctx, depth).map_err(math)?;
    let mut text = format!("product tower for p = {p} to depth {depth} against its resorted presentation\n");
    for (n, s) in a.systems.iter().enumerate() {
        let _ = writeln!(text, "stage {n}: {}", describe_pieces(s));
    }
    let cert = intertwine(&a, &b, &PairSource::Auto { bound: 3 }, depth).map_err(math)?;
    let r = verify_certificate(&cert);
    let _ = writeln!(text, "certificate: {}", describe_certificate(&cert));
    text += if r.is_ok() { "verification: PASS" } else { "verification: FAIL" };
    if !r.is_ok() {
        let _ = write!(text, "\n{r}");
    }
    Ok(Output { document: Some(("certificate".into(), io::document("certificate", &cert)?)), text, ok: r.is_ok() })
}

fn naive_demo() -> Result<Output, CliError> {
    let t: Tower = naive_doubling_tower(4).map_err(math)?;
    let mut text = String::from("stages (M_2^n, Ad diag(1, ..., 1, -1)) with doubling maps a -> diag(a, a)\n");
    let r = t.validate();
    match r.violations.iter().find(|v| v.check == "equivariance") {
        Some(v) => {
            let _ = writeln!(text, "equivariance fails at {}: {}", v.location, v.detail);
            let (h, a) = (&t.maps[0], &t.systems[0]);
            let e = a.unit_element(0, 0, 1);
            let lhs = h.apply(&a.action(&e));
            let rhs = h.target().action(&h.apply(&e));
            let _ = writeln!(text, "psi(alpha(E_12)) = {:?}", lhs[0]);
            let _ = writeln!(text, "beta(psi(E_12)) = {:?}", rhs[0]);
        }
        None => text += "equivariance unexpectedly holds\n",
    }
    let mut all_empty = true;
    for i in 0..t.len() - 1 {
        let (a, b) = (invariant_of(&t.systems[i]), invariant_of(&t.systems[i + 1]));
        let found = ksearch(&a, &b, 3, true);
        all_empty &= found.is_empty();
        let _ = writeln!(text, "stage {} -> {}: special elements {:?} -> {:?}, {} admissible pairs with entries <= 3", i + 1, i + 2, a.special, b.special, found.len());
    }
    let expected = !r.is_ok() && all_empty;
    text += if expected { "both obstructions reproduced: PASS" } else { "obstructions not reproduced: FAIL" };
    Ok(Output { document: Some(("tower".into(), io::document("tower", &t)?)), text, ok: expected })
}

pub fn demo(name: &str, depth: Option<usize>, order: Option<u32>) -> Result<Output, CliError> {
    match name {
        "product-tower-p2" => product_demo(2, depth.unwrap_or(4), order),
        "product-tower-p3" => product_demo(3, depth.unwrap_or(3), order),
        "naive-doubling" => naive_demo(),
        other => Err(CliError::Input(format!("unknown demo \"{other}\"; available: {}", DEMOS.join(", ")))),
    }
}

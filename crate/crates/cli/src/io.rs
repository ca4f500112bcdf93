//! Reading input documents and writing outputs.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use afzp_core::classify::IntertwiningCertificate;
use afzp_core::system::decompose;
use afzp_core::wire::{document_kind, from_document, to_document};
use afzp_core::{CanonicalSystem, EqHom, FdSystem, FieldContext, KInvariant, KPair, Tower};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Exit code 1: the mathematics said no.
pub const EXIT_MATH: i32 = 1;
/// Exit code 2: bad input, options or files.
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Math(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Math(_) => EXIT_MATH,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Math(m) => write!(f, "{m}"),
        }
    }
}

pub fn math(e: impl fmt::Display) -> CliError {
    CliError::Math(e.to_string())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn kind_of(path: &Path, text: &str) -> Result<String, CliError> {
    document_kind(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn parse<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T, CliError> {
    let text = read_text(path)?;
    from_document(kind, &text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Re-expresses every scalar over `Q(ζ_order)`.
pub fn embed_system(s: &FdSystem, order: u32) -> Result<FdSystem, CliError> {
    let ctx = FieldContext::new(s.p, order).map_err(|e| CliError::Input(e.to_string()))?;
    let mut implementing = Vec::with_capacity(s.implementing.len());
    for u in &s.implementing {
        let mut entries = Vec::with_capacity(u.entries().len());
        for x in u.entries() {
            entries.push(x.embed(&ctx).map_err(|e| CliError::Input(format!("--order {order}: {e}")))?);
        }
        implementing.push(afzp_core::Mat::new(&ctx, u.rows(), u.cols(), entries).map_err(|e| CliError::Input(e.to_string()))?);
    }
    Ok(FdSystem::new(&ctx, s.blocks.clone(), s.sigma.clone(), implementing))
}

fn rebase_canonical(c: &CanonicalSystem, order: u32) -> Result<CanonicalSystem, CliError> {
    if !order.is_multiple_of(c.ctx().order()) {
        return Err(CliError::Input(format!("--order {order} does not contain the field of order {}", c.ctx().order())));
    }
    let ctx = FieldContext::new(c.p(), order).map_err(|e| CliError::Input(e.to_string()))?;
    CanonicalSystem::new(&ctx, c.pieces().to_vec()).map_err(|e| CliError::Input(e.to_string()))
}

/// A system given either as a general presentation or already canonical.
pub fn load_canonical(path: &Path, order: Option<u32>) -> Result<CanonicalSystem, CliError> {
    let text = read_text(path)?;
    match kind_of(path, &text)?.as_str() {
        "system" => {
            let mut s: FdSystem = from_document("system", &text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            if let Some(n) = order {
                s = embed_system(&s, n)?;
            }
            Ok(decompose(&s).map_err(math)?.canonical)
        }
        "canonical" => {
            let c: CanonicalSystem = from_document("canonical", &text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            match order {
                Some(n) => rebase_canonical(&c, n),
                None => Ok(c),
            }
        }
        other => Err(CliError::Input(format!("{}: expected a system or canonical document, found kind \"{other}\"", path.display()))),
    }
}

/// An invariant given directly or computed from a system.
pub fn load_invariant(path: &Path, order: Option<u32>) -> Result<KInvariant, CliError> {
    let text = read_text(path)?;
    if kind_of(path, &text)? == "kinvariant" {
        return from_document("kinvariant", &text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())));
    }
    Ok(afzp_core::kinv::invariant_of(&load_canonical(path, order)?))
}

fn check_order(path: &Path, found: u32, order: Option<u32>) -> Result<(), CliError> {
    match order {
        Some(n) if n != found => Err(CliError::Input(format!("{}: stored over order {found}; --order {n} only re-embeds system inputs", path.display()))),
        _ => Ok(()),
    }
}

pub fn load_hom(path: &Path, order: Option<u32>) -> Result<EqHom, CliError> {
    let h: EqHom = parse(path, "hom")?;
    check_order(path, h.source().ctx().order(), order)?;
    Ok(h)
}

pub fn load_tower(path: &Path, order: Option<u32>) -> Result<Tower, CliError> {
    let t: Tower = parse(path, "tower")?;
    if let Some(s) = t.systems.first() {
        check_order(path, s.ctx().order(), order)?;
    }
    Ok(t)
}

pub fn load_pair(path: &Path) -> Result<KPair, CliError> {
    parse(path, "kpair")
}

pub fn load_pairs(path: &Path) -> Result<Vec<KPair>, CliError> {
    parse(path, "kpairs")
}

pub fn load_certificate(path: &Path) -> Result<IntertwiningCertificate, CliError> {
    parse(path, "certificate")
}

pub fn document<T: Serialize>(kind: &str, value: &T) -> Result<String, CliError> {
    to_document(kind, value).map_err(|e| CliError::Input(e.to_string()))
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let err = |e: std::io::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(err)?;
    tmp.write_all(contents.as_bytes()).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

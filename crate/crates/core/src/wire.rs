//! JSON representations and the versioned file envelope.
//!
//! Every file is `{"afzp_format": 1, "kind": "...", "data": {...}}`. Block
//! indices inside `data` (permutation images, slot sources, block maps) are
//! 1-based; everything in memory is 0-based.

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::crossed::CrossedPresentation;
use crate::cyclo::FieldContext;
use crate::matrix::Mat;
use crate::system::{CanonicalForm, CanonicalSystem, EqHom, FdSystem, Piece, Slot, TargetBlock};
use crate::towers::Tower;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("not valid JSON for this file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported afzp_format {0}; this build reads version 1")]
    Version(u32),
    #[error("expected a {expected} file, found {found}")]
    Kind { expected: String, found: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<T> {
    afzp_format: u32,
    kind: String,
    data: T,
}

#[derive(Deserialize)]
struct Header {
    afzp_format: u32,
    kind: String,
}

/// Wraps `value` in the file envelope, pretty-printed with a trailing newline.
pub fn to_document<T: Serialize>(kind: &str, value: &T) -> Result<String, WireError> {
    let mut s = serde_json::to_string_pretty(&Envelope { afzp_format: FORMAT_VERSION, kind: kind.to_string(), data: value })?;
    s.push('\n');
    Ok(s)
}

/// The `kind` field of a document, after checking the format version.
pub fn document_kind(text: &str) -> Result<String, WireError> {
    let h: Header = serde_json::from_str(text)?;
    if h.afzp_format != FORMAT_VERSION {
        return Err(WireError::Version(h.afzp_format));
    }
    Ok(h.kind)
}

pub fn from_document<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T, WireError> {
    let found = document_kind(text)?;
    if found != kind {
        return Err(WireError::Kind { expected: kind.to_string(), found });
    }
    let env: Envelope<T> = serde_json::from_str(text)?;
    Ok(env.data)
}

fn ctx_for<E: serde::de::Error>(p: u32, order: u32) -> Result<FieldContext, E> {
    FieldContext::new(p, order).map_err(E::custom)
}

fn check_mats<E: serde::de::Error>(ctx: &FieldContext, mats: &[Mat], what: &str) -> Result<(), E> {
    match mats.iter().position(|m| m.ctx() != ctx) {
        Some(i) => Err(E::custom(format!("{what} {} uses a different field order than the file", i + 1))),
        None => Ok(()),
    }
}

fn to_one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|&x| x + 1).collect()
}

fn from_one_based<E: serde::de::Error>(v: Vec<usize>, what: &str) -> Result<Vec<usize>, E> {
    v.into_iter()
        .map(|x| x.checked_sub(1).ok_or_else(|| E::custom(format!("{what}: indices are 1-based, found 0"))))
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdSystemWire {
    p: u32,
    order: u32,
    blocks: Vec<usize>,
    sigma: Vec<usize>,
    #[serde(rename = "impl")]
    implementing: Vec<Mat>,
}

impl Serialize for FdSystem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        FdSystemWire {
            p: self.p,
            order: self.ctx.order(),
            blocks: self.blocks.clone(),
            sigma: to_one_based(&self.sigma),
            implementing: self.implementing.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FdSystem {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = FdSystemWire::deserialize(deserializer)?;
        let ctx = ctx_for(w.p, w.order)?;
        check_mats(&ctx, &w.implementing, "impl matrix")?;
        Ok(FdSystem::new(&ctx, w.blocks, from_one_based(w.sigma, "sigma")?, w.implementing))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum PieceWire {
    Fixed { exponents: Vec<u32> },
    Cycle { n: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalWire {
    p: u32,
    order: u32,
    pieces: Vec<PieceWire>,
}

impl Serialize for CanonicalSystem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pieces = self
            .pieces()
            .iter()
            .map(|pc| match pc {
                Piece::Fixed { exponents } => PieceWire::Fixed { exponents: exponents.clone() },
                Piece::Cycle { n } => PieceWire::Cycle { n: *n },
            })
            .collect();
        CanonicalWire { p: self.p(), order: self.ctx().order(), pieces }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CanonicalSystem {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = CanonicalWire::deserialize(deserializer)?;
        let ctx = ctx_for(w.p, w.order)?;
        let pieces = w
            .pieces
            .into_iter()
            .map(|pc| match pc {
                PieceWire::Fixed { exponents } => Piece::Fixed { exponents },
                PieceWire::Cycle { n } => Piece::Cycle { n },
            })
            .collect();
        CanonicalSystem::new(&ctx, pieces).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CanonicalFormWire {
    canonical: CanonicalSystem,
    block_map: Vec<usize>,
    conjugators: Vec<Mat>,
}

impl Serialize for CanonicalForm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        CanonicalFormWire {
            canonical: self.canonical.clone(),
            block_map: to_one_based(&self.block_map),
            conjugators: self.conjugators.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CanonicalForm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = CanonicalFormWire::deserialize(deserializer)?;
        check_mats(w.canonical.ctx(), &w.conjugators, "conjugator")?;
        let n = w.canonical.num_blocks();
        if w.block_map.len() != n || w.conjugators.len() != n {
            return Err(D::Error::custom(format!("blockMap and conjugators need {n} entries")));
        }
        Ok(CanonicalForm { canonical: w.canonical, block_map: from_one_based(w.block_map, "blockMap")?, conjugators: w.conjugators })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotWire {
    block: usize,
    mult: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase: Option<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetBlockWire {
    slots: Vec<SlotWire>,
    conjugator: Mat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EqHomWire {
    source: CanonicalSystem,
    target: CanonicalSystem,
    unital: bool,
    blocks: Vec<TargetBlockWire>,
}

impl Serialize for EqHom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let blocks = self
            .blocks()
            .iter()
            .map(|tb| TargetBlockWire {
                slots: tb.slots.iter().map(|s| SlotWire { block: s.block + 1, mult: s.mult, phase: s.phase }).collect(),
                conjugator: tb.conjugator.clone(),
            })
            .collect();
        EqHomWire { source: self.source().clone(), target: self.target().clone(), unital: self.is_unital(), blocks }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EqHom {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = EqHomWire::deserialize(deserializer)?;
        let mut blocks = Vec::with_capacity(w.blocks.len());
        for tb in w.blocks {
            let mut slots = Vec::with_capacity(tb.slots.len());
            for s in tb.slots {
                let block = s.block.checked_sub(1).ok_or_else(|| D::Error::custom("slot blocks are 1-based, found 0"))?;
                slots.push(Slot { block, mult: s.mult, phase: s.phase });
            }
            blocks.push(TargetBlock { slots, conjugator: tb.conjugator });
        }
        EqHom::new(w.source, w.target, blocks, w.unital).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrossedWire {
    source: CanonicalSystem,
    p: u32,
    order: u32,
    blocks: Vec<usize>,
    sigma: Vec<usize>,
    #[serde(rename = "impl")]
    implementing: Vec<Mat>,
    special: Vec<i64>,
    identify: Mat,
}

impl Serialize for CrossedPresentation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let dual = self.dual_system();
        CrossedWire {
            source: self.source().clone(),
            p: dual.p,
            order: dual.ctx.order(),
            blocks: dual.blocks.clone(),
            sigma: to_one_based(&dual.sigma),
            implementing: dual.implementing.clone(),
            special: self.special().to_vec(),
            identify: self.identify_matrix(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CrossedPresentation {
    /// The presentation is determined by its source; the remaining fields are
    /// recomputed and must agree.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = CrossedWire::deserialize(deserializer)?;
        let cp = CrossedPresentation::new(&w.source);
        let dual = cp.dual_system();
        let sigma = from_one_based(w.sigma, "sigma")?;
        if w.p != dual.p
            || w.order != dual.ctx.order()
            || w.blocks != dual.blocks
            || sigma != dual.sigma
            || w.implementing != dual.implementing
            || w.special != cp.special()
            || w.identify != cp.identify_matrix()
        {
            return Err(D::Error::custom("crossed product data does not match its source system"));
        }
        Ok(cp)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TowerWire {
    systems: Vec<CanonicalSystem>,
    maps: Vec<EqHom>,
}

impl Serialize for Tower {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TowerWire { systems: self.systems.clone(), maps: self.maps.clone() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Tower {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = TowerWire::deserialize(deserializer)?;
        Ok(Tower { systems: w.systems, maps: w.maps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::decompose;

    fn ctx2() -> FieldContext {
        FieldContext::with_default_order(2).unwrap()
    }

    #[test]
    fn system_round_trip_is_one_based() {
        let c = ctx2();
        let s = FdSystem::new(&c, vec![1, 1], vec![1, 0], vec![Mat::identity(&c, 1), Mat::identity(&c, 1)]);
        let text = to_document("system", &s).unwrap();
        assert!(text.contains("\"sigma\": [\n      2,\n      1\n    ]"));
        let back: FdSystem = from_document("system", &text).unwrap();
        assert_eq!(back, s);
        assert_eq!(to_document("system", &back).unwrap(), text);
    }

    #[test]
    fn rejects_wrong_kind_version_and_unknown_fields() {
        let c = ctx2();
        let s = FdSystem::new(&c, vec![1], vec![0], vec![Mat::identity(&c, 1)]);
        let text = to_document("system", &s).unwrap();
        assert!(matches!(from_document::<FdSystem>("hom", &text), Err(WireError::Kind { .. })));
        let v2 = text.replace("\"afzp_format\": 1", "\"afzp_format\": 2");
        assert!(matches!(from_document::<FdSystem>("system", &v2), Err(WireError::Version(2))));
        let extra = text.replace("\"p\": 2", "\"p\": 2, \"q\": 1");
        assert!(from_document::<FdSystem>("system", &extra).is_err());
    }

    #[test]
    fn canonical_form_and_crossed_round_trip() {
        let c = ctx2();
        let s = FdSystem::new(&c, vec![2], vec![0], vec![Mat::root_diag(&c, &[1, 0])]);
        let form = decompose(&s).unwrap();
        let text = to_document("canonical-form", &form).unwrap();
        assert_eq!(from_document::<CanonicalForm>("canonical-form", &text).unwrap(), form);
        let cp = CrossedPresentation::new(&form.canonical);
        let text = to_document("crossed", &cp).unwrap();
        assert_eq!(from_document::<CrossedPresentation>("crossed", &text).unwrap(), cp);
        let tampered = text.replacen("\"special\": [\n      1,", "\"special\": [\n      2,", 1);
        assert!(from_document::<CrossedPresentation>("crossed", &tampered).is_err());
    }

    #[test]
    fn hom_round_trip() {
        let c = ctx2();
        let a = CanonicalSystem::new(&c, vec![Piece::Fixed { exponents: vec![0, 1] }]).unwrap();
        let h = EqHom::identity(&a);
        let text = to_document("hom", &h).unwrap();
        assert_eq!(from_document::<EqHom>("hom", &text).unwrap(), h);
    }
}

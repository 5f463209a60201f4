//! Weighted cultural phrase inventories and per-culture knowledge vectors.
//!
//! Inventory file: comma-separated, header `concept_id, weight, surface_en,
//! surface_ar, surface_bn, surface_sp`. Each row is one concept with one
//! canonical phrasing per language and a saliency weight of 1, 2 or 3. Only
//! the target-culture column is embedded; `surface_en` is documentation.

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::corpus::Culture;
use crate::embedding::{
    content_digest, cosine_raw, embed_batch, EmbedError, EmbeddingCache, EmbeddingProvider, EmbeddingVector,
    VectorError,
};
use crate::scalar::Scalar;

pub const DEFAULT_INVENTORY: &str = include_str!("../data/inventory.csv");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CulturalPhrase {
    pub concept_id: String,
    pub weight: u8,
    pub surface_en: Option<String>,
    pub surfaces: BTreeMap<Culture, String>,
}

impl CulturalPhrase {
    pub fn surface(&self, culture: Culture) -> Option<&str> {
        self.surfaces.get(&culture).map(String::as_str)
    }
}

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("inventory row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("inventory missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("inventory row {row}: weight {weight} outside {{1, 2, 3}}")]
    WeightRange { row: usize, weight: String },
    #[error("inventory row {row}: concept {concept_id:?} has no {culture} surface form")]
    MissingSurface { row: usize, concept_id: String, culture: Culture },
    #[error("inventory row {row}: duplicate concept {concept_id:?}")]
    DuplicateConcept { row: usize, concept_id: String },
}

/// Phrases sorted by concept id, plus the cultures the file declares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inventory {
    phrases: Vec<CulturalPhrase>,
    cultures: BTreeSet<Culture>,
}

impl Inventory {
    pub fn new(mut phrases: Vec<CulturalPhrase>, cultures: BTreeSet<Culture>) -> Self {
        phrases.sort_by(|a, b| a.concept_id.cmp(&b.concept_id));
        Self { phrases, cultures }
    }

    pub fn default_inventory() -> Self {
        Self::parse(DEFAULT_INVENTORY).expect("bundled inventory parses")
    }

    pub fn phrases(&self) -> &[CulturalPhrase] {
        &self.phrases
    }

    pub fn cultures(&self) -> &BTreeSet<Culture> {
        &self.cultures
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Hex SHA-256 over the canonical (sorted) inventory content.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.phrases {
            h.update(p.concept_id.as_bytes());
            h.update([0, p.weight]);
            for (c, s) in &p.surfaces {
                h.update(c.code().as_bytes());
                h.update(s.as_bytes());
                h.update([0]);
            }
        }
        hex::encode(h.finalize())
    }

    pub fn load(path: &Path) -> Result<Self, InventoryError> {
        let text = std::fs::read_to_string(path).map_err(|source| InventoryError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, InventoryError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| InventoryError::Row { row: 1, message: e.to_string() })?
            .iter()
            .map(|h| h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase())
            .collect();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let id_col = find("concept_id").ok_or(InventoryError::MissingColumn("concept_id"))?;
        let weight_col = find("weight").ok_or(InventoryError::MissingColumn("weight"))?;
        let en_col = find("surface_en");
        let culture_cols: Vec<(Culture, usize)> = Culture::ALL
            .iter()
            .filter_map(|&c| find(&format!("surface_{}", c.code().to_ascii_lowercase())).map(|i| (c, i)))
            .collect();
        if culture_cols.is_empty() {
            return Err(InventoryError::MissingColumn("surface_ar"));
        }

        let mut phrases = Vec::new();
        let mut ids = BTreeSet::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| InventoryError::Row { row: 0, message: e.to_string() })?;
            let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let field = |i: usize| crate::corpus::normalize_whitespace(rec.get(i).unwrap_or(""));
            let concept_id = field(id_col);
            if concept_id.is_empty() {
                return Err(InventoryError::Row { row, message: "empty concept_id".into() });
            }
            let raw_weight = field(weight_col);
            let weight = match raw_weight.parse::<u8>() {
                Ok(w @ 1..=3) => w,
                _ => return Err(InventoryError::WeightRange { row, weight: raw_weight }),
            };
            let mut surfaces = BTreeMap::new();
            for &(culture, i) in &culture_cols {
                let s = field(i);
                if s.is_empty() {
                    return Err(InventoryError::MissingSurface { row, concept_id, culture });
                }
                surfaces.insert(culture, s);
            }
            if !ids.insert(concept_id.clone()) {
                return Err(InventoryError::DuplicateConcept { row, concept_id });
            }
            let surface_en = en_col.map(field).filter(|s| !s.is_empty());
            phrases.push(CulturalPhrase { concept_id, weight, surface_en, surfaces });
        }
        Ok(Self::new(phrases, culture_cols.into_iter().map(|(c, _)| c).collect()))
    }
}

/// Saliency-weighted centroid of a culture's phrase embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CulturalVector {
    pub culture: Culture,
    pub model_id: String,
    pub phrase_count: usize,
    pub inventory_digest: String,
    /// Σ αᵢ vᵢ / Σ αᵢ over unit vectors vᵢ; not renormalized.
    pub vector: Vec<f64>,
}

impl CulturalVector {
    /// Key under which the vector is stored in a vector file.
    pub fn digest(&self) -> String {
        content_digest(&self.model_id, &format!("cultural-vector:{}", self.culture.code()))
    }

    pub fn alignment(&self, e: &EmbeddingVector<f64>) -> Result<f64, VectorError> {
        cosine_raw(e, &self.vector)
    }
}

#[derive(Debug, Error)]
pub enum CultureError {
    #[error("inventory has no phrases for {0}")]
    EmptyInventory(Culture),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("mixed embedding dimensions in centroid input")]
    Dimension,
}

/// Weighted mean of unit vectors, accumulated in the given order.
pub fn weighted_centroid<T: Scalar>(items: &[(u8, &EmbeddingVector<T>)]) -> Option<Vec<T>> {
    let dim = items.first()?.1.dim();
    if items.iter().any(|(_, v)| v.dim() != dim) {
        return None;
    }
    let mut acc = vec![T::zero(); dim];
    let mut total = T::zero();
    for (w, v) in items {
        let w = T::from_u8(*w).expect("weight fits scalar");
        for (a, &x) in acc.iter_mut().zip(v.components()) {
            *a = *a + w * x;
        }
        total = total + w;
    }
    Some(acc.into_iter().map(|a| a / total).collect())
}

/// Embed every phrase's native surface form and average by saliency weight.
/// Accumulation follows concept-id order, so row order never changes the bits.
pub fn build_cultural_vector(
    inventory: &Inventory,
    culture: Culture,
    provider: &dyn EmbeddingProvider,
    cache: &EmbeddingCache,
) -> Result<CulturalVector, CultureError> {
    let phrases: Vec<(&CulturalPhrase, &str)> =
        inventory.phrases().iter().filter_map(|p| p.surface(culture).map(|s| (p, s))).collect();
    if phrases.is_empty() {
        return Err(CultureError::EmptyInventory(culture));
    }
    let texts: Vec<&str> = phrases.iter().map(|(_, s)| *s).collect();
    let vectors = embed_batch(provider, cache, &texts)?;
    let items: Vec<(u8, &EmbeddingVector<f64>)> =
        phrases.iter().zip(&vectors).map(|((p, _), v)| (p.weight, v.as_ref())).collect();
    let vector = weighted_centroid(&items).ok_or(CultureError::Dimension)?;
    Ok(CulturalVector {
        culture,
        model_id: provider.model_id().to_string(),
        phrase_count: phrases.len(),
        inventory_digest: inventory.digest(),
        vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{normalize, HashingProvider};

    #[test]
    fn bundled_inventory_has_33_per_culture() {
        let inv = Inventory::default_inventory();
        assert_eq!(inv.len(), 33);
        for c in Culture::ALL {
            assert_eq!(inv.phrases().iter().filter(|p| p.surface(c).is_some()).count(), 33);
        }
        let weight = |id: &str| inv.phrases().iter().find(|p| p.concept_id == id).unwrap().weight;
        assert_eq!(weight("family_unity"), 3);
        assert_eq!(weight("respect_for_elders"), 2);
        assert_eq!(weight("protection_of_the_weak"), 1);
        let fam = inv.phrases().iter().find(|p| p.concept_id == "family_unity").unwrap();
        assert_eq!(fam.surface_en.as_deref(), Some("Family unity"));
        assert_eq!(fam.surface(Culture::AR), Some("وحدة الأسرة"));
    }

    #[test]
    fn weight_out_of_range() {
        let text = "concept_id,weight,surface_en,surface_ar\nx,5,a,b\n";
        assert!(matches!(Inventory::parse(text), Err(InventoryError::WeightRange { row: 2, .. })));
        let text = "concept_id,weight,surface_en,surface_ar\nx,0,a,b\n";
        assert!(matches!(Inventory::parse(text), Err(InventoryError::WeightRange { .. })));
    }

    #[test]
    fn missing_surface_and_duplicates() {
        let text = "concept_id,weight,surface_ar,surface_bn\nx,1,a,\n";
        assert!(matches!(Inventory::parse(text), Err(InventoryError::MissingSurface { culture: Culture::BN, .. })));
        let text = "concept_id,weight,surface_ar\nx,1,a\nx,2,b\n";
        assert!(matches!(Inventory::parse(text), Err(InventoryError::DuplicateConcept { row: 3, .. })));
    }

    #[test]
    fn centroid_examples() {
        let a = normalize(&[1.0_f64, 0.0]).unwrap();
        let b = normalize(&[0.0_f64, 1.0]).unwrap();
        assert_eq!(weighted_centroid(&[(3, &a), (1, &b)]).unwrap(), vec![0.75, 0.25]);
        assert_eq!(weighted_centroid(&[(2, &b)]).unwrap(), vec![0.0, 1.0]);
        let v = normalize(&[0.3_f64, -0.4]).unwrap();
        let c = weighted_centroid(&[(1, &v), (3, &v)]).unwrap();
        for (x, y) in c.iter().zip(v.components()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(weighted_centroid::<f64>(&[]).is_none());
    }

    #[test]
    fn build_requires_phrases() {
        let inv = Inventory::parse("concept_id,weight,surface_ar\nx,1,a\n").unwrap();
        let p = HashingProvider::new(16);
        let cache = EmbeddingCache::new();
        assert!(matches!(
            build_cultural_vector(&inv, Culture::BN, &p, &cache),
            Err(CultureError::EmptyInventory(Culture::BN))
        ));
        let cv = build_cultural_vector(&inv, Culture::AR, &p, &cache).unwrap();
        assert_eq!(cv.phrase_count, 1);
        let norm: f64 = cv.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}

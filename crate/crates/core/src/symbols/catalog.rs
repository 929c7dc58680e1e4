//! Curated symbols with known class membership.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SymbolExpr;
use crate::error::{FockError, Result};

/// Membership for a class indexed by the exponent `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PTag {
    AllP(bool),
    PerP(Vec<(f64, bool)>),
}

impl PTag {
    /// Membership at `p`, `None` when this `p` is not curated.
    pub fn at(&self, p: f64) -> Option<bool> {
        match self {
            PTag::AllP(v) => Some(*v),
            PTag::PerP(list) => list.iter().find(|(q, _)| *q == p).map(|(_, v)| *v),
        }
    }

    fn exponents(&self) -> Vec<f64> {
        match self {
            PTag::AllP(_) => vec![1.0, 2.0],
            PTag::PerP(list) => list.iter().map(|(q, _)| *q).collect(),
        }
    }
}

/// Known class memberships. `None` means the entry makes no claim.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassTags {
    pub in_bo: Option<bool>,
    pub in_vo: Option<bool>,
    pub in_ba: Option<PTag>,
    pub in_va: Option<PTag>,
    pub in_bmo: Option<PTag>,
    pub in_vmo: Option<PTag>,
}

fn ptag_at(t: &Option<PTag>, p: f64) -> Option<bool> {
    t.as_ref().and_then(|t| t.at(p))
}

impl ClassTags {
    fn uniform(bo: bool, vo: bool, ba: bool, va: bool, bmo: bool, vmo: bool) -> Self {
        ClassTags {
            in_bo: Some(bo),
            in_vo: Some(vo),
            in_ba: Some(PTag::AllP(ba)),
            in_va: Some(PTag::AllP(va)),
            in_bmo: Some(PTag::AllP(bmo)),
            in_vmo: Some(PTag::AllP(vmo)),
        }
    }

    pub fn ba(&self, p: f64) -> Option<bool> {
        ptag_at(&self.in_ba, p)
    }

    pub fn va(&self, p: f64) -> Option<bool> {
        ptag_at(&self.in_va, p)
    }

    pub fn bmo(&self, p: f64) -> Option<bool> {
        ptag_at(&self.in_bmo, p)
    }

    pub fn vmo(&self, p: f64) -> Option<bool> {
        ptag_at(&self.in_vmo, p)
    }

    /// Checks the inclusions between the classes for every curated `p`:
    /// VO in BO, VA in BA, VMO in BMO, BO + BA in BMO and VO + VA in VMO.
    pub fn check_consistency(&self) -> Result<()> {
        let mut ps: Vec<f64> = [&self.in_ba, &self.in_va, &self.in_bmo, &self.in_vmo]
            .iter()
            .filter_map(|t| t.as_ref())
            .flat_map(|t| t.exponents())
            .collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        let implies = |a: Option<bool>, b: Option<bool>, what: &str, p: f64| -> Result<()> {
            if a == Some(true) && b == Some(false) {
                return Err(FockError::Invariant(format!("tag inconsistency at p = {p}: {what}")));
            }
            Ok(())
        };
        if self.in_vo == Some(true) && self.in_bo == Some(false) {
            return Err(FockError::Invariant("tag inconsistency: VO without BO".into()));
        }
        for p in ps {
            implies(self.va(p), self.ba(p), "VA without BA", p)?;
            implies(self.vmo(p), self.bmo(p), "VMO without BMO", p)?;
            implies(self.in_bo, self.bmo(p), "BO outside BMO", p)?;
            implies(self.ba(p), self.bmo(p), "BA outside BMO", p)?;
            implies(self.in_vo, self.vmo(p), "VO outside VMO", p)?;
            implies(self.va(p), self.vmo(p), "VA outside VMO", p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub symbol: SymbolExpr,
    pub tags: ClassTags,
}

fn entry(name: &str, symbol: SymbolExpr, tags: ClassTags) -> CatalogEntry {
    CatalogEntry {
        name: name.to_string(),
        symbol,
        tags,
    }
}

/// The curated symbols. Every entry satisfies
/// [`ClassTags::check_consistency`].
pub fn builtin_catalog() -> Vec<CatalogEntry> {
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    vec![
        // nonzero constant: zero oscillation, but its averages never vanish
        entry(
            "const",
            SymbolExpr::constant(one),
            ClassTags::uniform(true, true, true, false, true, true),
        ),
        entry(
            "conj_z",
            SymbolExpr::zbar(),
            ClassTags::uniform(true, false, false, false, true, false),
        ),
        entry(
            "z",
            SymbolExpr::z(),
            ClassTags::uniform(true, false, false, false, true, false),
        ),
        entry(
            "re_z",
            SymbolExpr::sum(vec![
                SymbolExpr::mono(1, 0, half),
                SymbolExpr::mono(0, 1, half),
            ]),
            ClassTags::uniform(true, false, false, false, true, false),
        ),
        entry(
            "disk_ind",
            SymbolExpr::IndicatorAnnulus {
                center: Complex64::new(0.0, 0.0),
                a: 0.0,
                b: 1.0,
            },
            ClassTags::uniform(false, false, true, true, true, true),
        ),
        entry(
            "radial_sq",
            SymbolExpr::mono(1, 1, one),
            ClassTags::uniform(false, false, false, false, false, false),
        ),
        entry(
            "bounded_osc",
            SymbolExpr::RadialSin { omega: 1.0 },
            ClassTags::uniform(true, false, true, false, true, false),
        ),
        entry(
            "sqrt_abs",
            SymbolExpr::RadialPower { s: 0.5 },
            ClassTags::uniform(true, true, false, false, true, true),
        ),
        entry(
            "analytic_quad",
            SymbolExpr::sum(vec![
                SymbolExpr::mono(2, 0, one),
                SymbolExpr::mono(1, 0, Complex64::new(3.0, 0.0)),
            ]),
            ClassTags::uniform(false, false, false, false, false, false),
        ),
        entry(
            "gauss_bump",
            SymbolExpr::RadialExpQ { s: -0.25 },
            ClassTags::uniform(true, true, true, true, true, true),
        ),
    ]
}

/// Catalog entry by name.
pub fn lookup(name: &str) -> Option<CatalogEntry> {
    builtin_catalog().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_is_consistent_and_valid() {
        for e in builtin_catalog() {
            e.tags.check_consistency().unwrap();
            e.symbol.validate().unwrap();
        }
    }

    #[test]
    fn names_are_unique() {
        let cat = builtin_catalog();
        for (i, a) in cat.iter().enumerate() {
            assert!(cat[i + 1..].iter().all(|b| b.name != a.name));
        }
    }

    #[test]
    fn required_tags() {
        let c = lookup("const").unwrap().tags;
        assert_eq!(c.vmo(1.0), Some(true));
        assert_eq!(c.vmo(2.0), Some(true));
        let z = lookup("conj_z").unwrap();
        assert_eq!(z.symbol, SymbolExpr::zbar());
        assert_eq!(z.tags.in_bo, Some(true));
        assert_eq!(z.tags.in_vo, Some(false));
        assert_eq!(z.tags.bmo(2.0), Some(true));
        assert_eq!(z.tags.vmo(2.0), Some(false));
        let d = lookup("disk_ind").unwrap().tags;
        assert_eq!(d.va(1.0), Some(true));
        assert_eq!(d.va(3.5), Some(true));
        assert_eq!(lookup("radial_sq").unwrap().tags.bmo(2.0), Some(false));
        assert_eq!(lookup("bounded_osc").unwrap().tags.in_bo, Some(true));
        assert!(lookup("nope").is_none());
    }

    #[test]
    fn inconsistent_tags_are_rejected() {
        let bad = ClassTags {
            in_va: Some(PTag::PerP(vec![(2.0, true)])),
            in_ba: Some(PTag::PerP(vec![(2.0, false)])),
            ..Default::default()
        };
        assert!(bad.check_consistency().is_err());
        let bad = ClassTags {
            in_vo: Some(true),
            in_bo: Some(false),
            ..Default::default()
        };
        assert!(bad.check_consistency().is_err());
        let bad = ClassTags {
            in_bo: Some(true),
            in_bmo: Some(PTag::AllP(false)),
            ..Default::default()
        };
        assert!(bad.check_consistency().is_err());
    }

    #[test]
    fn catalog_symbols_round_trip_through_text() {
        for e in builtin_catalog() {
            let text = e.symbol.to_string();
            assert_eq!(super::super::parse_symbol(&text).unwrap(), e.symbol.canonical(), "{text}");
        }
    }
}

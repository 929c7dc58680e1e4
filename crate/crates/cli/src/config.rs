//! Run configuration: a TOML file with one section per module, overlaid by
//! command-line flags and validated before any computation starts.

use std::path::Path;

use fockso_core::berezin::{default_berezin_sizes, DEFAULT_RHO, DEFAULT_Z_MIN, MIN_RHO};
use fockso_core::basis::MAX_INDEX;
use fockso_core::hankel::EIGEN_TOL;
use fockso_core::quadrature::DiskSizes;
use fockso_core::spaces::{LatticeSpec, DEFAULT_TOL_VANISH};
use fockso_core::stablefun::MAX_ORDER;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    /// Human-readable table (verify only; other commands fall back to CSV).
    Text,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralSection {
    pub m: Option<u32>,
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub delta: Option<f64>,
    #[serde(rename = "R")]
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacesSection {
    pub panels: Option<usize>,
    pub n_radial: Option<usize>,
    pub n_angular: Option<usize>,
    pub tol_vanish: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerezinSection {
    pub rho: Option<f64>,
    pub z_min: Option<f64>,
    pub panels: Option<usize>,
    pub n_radial: Option<usize>,
    pub n_angular: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HankelSection {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    #[serde(rename = "K_cap")]
    pub k_cap: Option<usize>,
    pub eigen_tol: Option<f64>,
    pub directions: Option<usize>,
    pub tol_compact: Option<f64>,
}

/// Contents of a `--config` file. Every key is optional; unknown keys are
/// rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub general: GeneralSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub spaces: SpacesSection,
    #[serde(default)]
    pub berezin: BerezinSection,
    #[serde(default)]
    pub hankel: HankelSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| format!("config: {e}"))?;
        cfg.overlay(&RunConfig::default()).resolve().map_err(|e| format!("config: {e}"))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// `other` wins wherever it sets a value.
    pub fn overlay(&self, other: &RunConfig) -> RunConfig {
        fn pick<T: Clone>(a: &Option<T>, b: &Option<T>) -> Option<T> {
            b.clone().or_else(|| a.clone())
        }
        let (a, b) = (self, other);
        RunConfig {
            general: GeneralSection {
                m: pick(&a.general.m, &b.general.m),
                p: pick(&a.general.p, &b.general.p),
                r: pick(&a.general.r, &b.general.r),
                format: pick(&a.general.format, &b.general.format),
            },
            lattice: LatticeSection {
                delta: pick(&a.lattice.delta, &b.lattice.delta),
                radius: pick(&a.lattice.radius, &b.lattice.radius),
            },
            spaces: SpacesSection {
                panels: pick(&a.spaces.panels, &b.spaces.panels),
                n_radial: pick(&a.spaces.n_radial, &b.spaces.n_radial),
                n_angular: pick(&a.spaces.n_angular, &b.spaces.n_angular),
                tol_vanish: pick(&a.spaces.tol_vanish, &b.spaces.tol_vanish),
            },
            berezin: BerezinSection {
                rho: pick(&a.berezin.rho, &b.berezin.rho),
                z_min: pick(&a.berezin.z_min, &b.berezin.z_min),
                panels: pick(&a.berezin.panels, &b.berezin.panels),
                n_radial: pick(&a.berezin.n_radial, &b.berezin.n_radial),
                n_angular: pick(&a.berezin.n_angular, &b.berezin.n_angular),
            },
            hankel: HankelSection {
                n: pick(&a.hankel.n, &b.hankel.n),
                l: pick(&a.hankel.l, &b.hankel.l),
                k_cap: pick(&a.hankel.k_cap, &b.hankel.k_cap),
                eigen_tol: pick(&a.hankel.eigen_tol, &b.hankel.eigen_tol),
                directions: pick(&a.hankel.directions, &b.hankel.directions),
                tol_compact: pick(&a.hankel.tol_compact, &b.hankel.tol_compact),
            },
        }
    }

    /// Fills defaults and checks every constraint.
    pub fn resolve(&self) -> Result<Settings, String> {
        let r = self.general.r.unwrap_or(DEFAULT_R);
        let disk_default = DiskSizes::default();
        let ber_default = default_berezin_sizes();
        let n = self.hankel.n.unwrap_or(DEFAULT_N);
        let s = Settings {
            m: self.general.m.unwrap_or(0),
            p: self.general.p.unwrap_or(2.0),
            r,
            format: self.general.format.unwrap_or(Format::Csv),
            lattice: LatticeSpec {
                delta: self.lattice.delta.unwrap_or(r / 2.0),
                radius: self.lattice.radius.unwrap_or(DEFAULT_LATTICE_R),
            },
            disk: DiskSizes {
                panels: self.spaces.panels.unwrap_or(disk_default.panels),
                n_radial: self.spaces.n_radial.unwrap_or(disk_default.n_radial),
                n_angular: self.spaces.n_angular.unwrap_or(disk_default.n_angular),
            },
            tol_vanish: self.spaces.tol_vanish.unwrap_or(DEFAULT_TOL_VANISH),
            rho: self.berezin.rho.unwrap_or(DEFAULT_RHO),
            z_min: self.berezin.z_min.unwrap_or(DEFAULT_Z_MIN),
            berezin: DiskSizes {
                panels: self.berezin.panels.unwrap_or(ber_default.panels),
                n_radial: self.berezin.n_radial.unwrap_or(ber_default.n_radial),
                n_angular: self.berezin.n_angular.unwrap_or(ber_default.n_angular),
            },
            n,
            l: self.hankel.l.unwrap_or(4 * n),
            k_cap: self.hankel.k_cap.unwrap_or(MAX_INDEX),
            eigen_tol: self.hankel.eigen_tol.unwrap_or(EIGEN_TOL),
            directions: self.hankel.directions,
            tol_compact: self.hankel.tol_compact.unwrap_or(DEFAULT_TOL_COMPACT),
        };
        s.validate()?;
        if let (Some(n), Some(l)) = (self.hankel.n, self.hankel.l) {
            if l + 1 < n {
                return Err(format!("section sizes need N <= L + 1 (got N = {n}, L = {l})"));
            }
        }
        Ok(s)
    }
}

pub const DEFAULT_R: f64 = 1.0;
pub const DEFAULT_LATTICE_R: f64 = 12.0;
pub const DEFAULT_N: usize = 16;
pub const DEFAULT_TOL_COMPACT: f64 = 1e-3;

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub m: u32,
    pub p: f64,
    pub r: f64,
    pub format: Format,
    pub lattice: LatticeSpec,
    pub disk: DiskSizes,
    pub tol_vanish: f64,
    pub rho: f64,
    pub z_min: f64,
    pub berezin: DiskSizes,
    pub n: usize,
    pub l: usize,
    pub k_cap: usize,
    pub eigen_tol: f64,
    pub directions: Option<usize>,
    pub tol_compact: f64,
}

fn positive(name: &str, x: f64) -> Result<(), String> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(format!("{name} must be positive and finite, got {x}"));
    }
    Ok(())
}

fn sizes_ok(name: &str, s: &DiskSizes) -> Result<(), String> {
    if s.panels == 0 || s.n_radial == 0 || s.n_angular < 2 {
        return Err(format!("{name} needs panels >= 1, n_radial >= 1, n_angular >= 2 (got {s:?})"));
    }
    if s.n_radial > 512 || s.n_angular > 8192 || s.panels > 256 {
        return Err(format!("{name} sizes are too large ({s:?})"));
    }
    Ok(())
}

impl Settings {
    pub fn validate(&self) -> Result<(), String> {
        if self.m > MAX_ORDER {
            return Err(format!("m must be <= {MAX_ORDER}, got {}", self.m));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(format!("p must be >= 1, got {}", self.p));
        }
        positive("r", self.r)?;
        self.lattice.validate().map_err(|e| e.to_string())?;
        sizes_ok("spaces quadrature", &self.disk)?;
        sizes_ok("berezin quadrature", &self.berezin)?;
        positive("tol_vanish", self.tol_vanish)?;
        positive("tol_compact", self.tol_compact)?;
        positive("eigen_tol", self.eigen_tol)?;
        if !(self.rho >= MIN_RHO) || !self.rho.is_finite() {
            return Err(format!("rho must be >= {MIN_RHO}, got {}", self.rho));
        }
        if !(self.z_min >= 0.0) || !self.z_min.is_finite() {
            return Err(format!("z_min must be >= 0, got {}", self.z_min));
        }
        if self.n == 0 || self.n > MAX_INDEX || self.l >= MAX_INDEX {
            return Err(format!(
                "section sizes need 1 <= N <= {MAX_INDEX} and L < {MAX_INDEX} (got N = {}, L = {})",
                self.n, self.l
            ));
        }
        if self.k_cap == 0 || self.k_cap > MAX_INDEX {
            return Err(format!("K_cap must be in 1..={MAX_INDEX}, got {}", self.k_cap));
        }
        if self.directions == Some(0) {
            return Err("directions must be >= 1".into());
        }
        Ok(())
    }
}

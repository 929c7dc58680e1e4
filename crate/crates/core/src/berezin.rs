//! Berezin transform, Berezin mean oscillation and lattice Carleson checks.
//!
//! `B_m g(z) = (1/(pi m!)) int g(v) |k_z^m(v)|^2 |v|^{2m} e^{-|v|^2} dA(v)`,
//! truncated to the disk `B(z; rho)`. The density is formed from log
//! magnitudes so that nothing overflows for large `|z|`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::growth_of;
use crate::error::{FockError, Result};
use crate::quadrature::{DiskRule, DiskSizes};
use crate::spaces::{is_diverging, is_vanishing, LatticeSpec, OscillationReport};
use crate::stablefun::{check_order, eval_em, ln_factorial, ln_kernel_diag};
use crate::symbols::SymbolExpr;

/// Default truncation radius.
pub const DEFAULT_RHO: f64 = 8.0;

/// Smallest accepted truncation radius.
pub const MIN_RHO: f64 = 6.0;

/// Default `|z|` floor of the large-`|z|` checks.
pub const DEFAULT_Z_MIN: f64 = 2.0;

/// Default disk rule for the Berezin integrals.
pub fn default_berezin_sizes() -> DiskSizes {
    DiskSizes {
        panels: 4,
        n_radial: 16,
        n_angular: 64,
    }
}

/// Nodes of `B(z; rho)` with the Berezin density folded into the weights.
#[derive(Debug, Clone)]
pub struct KernelDisk {
    pub z: Complex64,
    pub m: u32,
    pub rho: f64,
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl KernelDisk {
    /// Builds the weighted nodes; the rule adapts to the discontinuities of
    /// `g` when given.
    pub fn new(z: Complex64, m: u32, rho: f64, sizes: DiskSizes, g: Option<&SymbolExpr>) -> Result<Self> {
        check_order(m)?;
        if !(rho >= MIN_RHO) || !rho.is_finite() {
            return Err(FockError::InvalidParameter(format!(
                "Berezin truncation radius must be >= {MIN_RHO}, got {rho}"
            )));
        }
        let rule = match g {
            Some(g) => DiskRule::for_symbol(z, rho, sizes, g)?,
            None => DiskRule::new(z, rho, sizes)?,
        };
        let ln_norm = ln_kernel_diag(m, z) + PI.ln() + ln_factorial(m as u64);
        let ln_mfact2 = 2.0 * ln_factorial(m as u64);
        let mut nodes = Vec::with_capacity(rule.len());
        let mut weights = Vec::with_capacity(rule.len());
        for (v, w) in rule.nodes() {
            let r2 = v.norm_sqr();
            let density = if m > 0 && r2 == 0.0 {
                0.0
            } else {
                let lk = eval_em(m, z.conj() * v).logmag;
                let ln_d = 2.0 * lk + ln_mfact2 + m as f64 * r2.ln() - r2 - ln_norm;
                ln_d.exp()
            };
            nodes.push(v);
            weights.push(w * density);
        }
        Ok(KernelDisk {
            z,
            m,
            rho,
            nodes,
            weights,
        })
    }

    /// `sum_i w_i f(v_i)`.
    pub fn integrate<F: FnMut(Complex64) -> Complex64>(&self, mut f: F) -> Result<Complex64> {
        let mut acc = crate::quadrature::CompensatedSum::new();
        for (v, w) in self.nodes.iter().zip(&self.weights) {
            if *w == 0.0 {
                continue;
            }
            let fv = f(*v);
            if !(fv.re.is_finite() && fv.im.is_finite()) {
                return Err(FockError::NonFinite {
                    node: format!("{}{:+}i", v.re, v.im),
                    value: format!("{fv}"),
                });
            }
            acc.add(fv * *w);
        }
        Ok(acc.value())
    }

    /// Kernel mass captured by the disk (`1` up to truncation and
    /// quadrature error).
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn tail_bound(&self, g: Option<&SymbolExpr>) -> f64 {
        tail_bound(self.z, self.m, self.rho, g)
    }
}

/// Bound on the neglected mass `int_{|v-z| > rho}` of the Berezin density,
/// scaled by the growth envelope of `g` on `|v| <= |z| + 2 rho`.
pub fn tail_bound(z: Complex64, m: u32, rho: f64, g: Option<&SymbolExpr>) -> f64 {
    let rho2 = rho * rho;
    let kernel_tail = 2.0 * (1.0 + rho2).powi(m as i32) * (-rho2).exp();
    let envelope = match g {
        Some(g) => {
            let gr = growth_of(g);
            let reach = z.norm() + 2.0 * rho;
            (1.0 + reach).powf(gr.poly) * (gr.gauss * reach * reach).exp()
        }
        None => 1.0,
    };
    kernel_tail * envelope
}

/// A Berezin-type value with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerezinValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// `B_m g(z)`.
pub fn berezin(g: &SymbolExpr, z: Complex64, m: u32, rho: f64, sizes: DiskSizes) -> Result<BerezinValue> {
    g.validate()?;
    let kd = KernelDisk::new(z, m, rho, sizes, Some(g))?;
    Ok(BerezinValue {
        value: kd.integrate(|v| g.eval(v))?,
        tail_bound: kd.tail_bound(Some(g)),
    })
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(FockError::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    Ok(())
}

/// `B_m(|g|^p)(z)`.
pub fn berezin_abs_p(g: &SymbolExpr, z: Complex64, m: u32, p: f64, rho: f64, sizes: DiskSizes) -> Result<BerezinValue> {
    g.validate()?;
    check_p(p)?;
    let kd = KernelDisk::new(z, m, rho, sizes, Some(g))?;
    Ok(BerezinValue {
        value: kd.integrate(|v| Complex64::new(g.eval(v).norm().powf(p), 0.0))?,
        tail_bound: kd.tail_bound(Some(g)),
    })
}

/// `MO_p g(z) = B_m(|g - B_m g(z)|^p)(z)`, together with `B_m g(z)`.
pub fn mean_oscillation_with_center(
    g: &SymbolExpr,
    z: Complex64,
    m: u32,
    p: f64,
    rho: f64,
    sizes: DiskSizes,
) -> Result<(f64, Complex64)> {
    g.validate()?;
    check_p(p)?;
    let kd = KernelDisk::new(z, m, rho, sizes, Some(g))?;
    let vals: Vec<Complex64> = kd.nodes.iter().map(|v| g.eval(*v)).collect();
    let mass = kd.mass();
    // shifted by one sample so that constants have zero oscillation exactly
    let base = vals[0];
    let mut acc = crate::quadrature::CompensatedSum::new();
    for (gv, w) in vals.iter().zip(&kd.weights) {
        acc.add((gv - base) * *w);
    }
    let center = base * mass + acc.value();
    let mu = base + acc.value() / mass;
    let mut osc = 0.0;
    for (gv, w) in vals.iter().zip(&kd.weights) {
        osc += w * (gv - mu).norm().powf(p);
    }
    Ok((osc.max(0.0), center))
}

/// `MO_p g(z)`.
pub fn mean_oscillation(g: &SymbolExpr, z: Complex64, m: u32, p: f64, rho: f64, sizes: DiskSizes) -> Result<f64> {
    Ok(mean_oscillation_with_center(g, z, m, p, rho, sizes)?.0)
}

/// Which Berezin-type quantity a grid holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BerezinQuantity {
    Transform,
    AbsP(f64),
    MeanOscillation(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerezinMeta {
    pub m: u32,
    pub symbol: String,
    pub rho: f64,
    pub quantity: BerezinQuantity,
}

/// Berezin values over a lattice, in lattice order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerezinGrid {
    pub meta: BerezinMeta,
    pub points: Vec<Complex64>,
    pub values: Vec<Complex64>,
    pub tail_bounds: Vec<f64>,
}

impl BerezinGrid {
    pub fn is_real(&self) -> bool {
        !matches!(self.meta.quantity, BerezinQuantity::Transform)
    }

    /// Lattice report of `|value|` (used for boundedness and vanishing).
    pub fn magnitude_report(&self) -> Result<OscillationReport> {
        OscillationReport::from_samples(self.points.iter().zip(&self.values).map(|(z, v)| (*z, v.norm())).collect())
    }

    /// CSV with columns `z_re, z_im, value, tail_bound` for real quantities
    /// and `z_re, z_im, value_re, value_im, tail_bound` for the transform.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| FockError::InvalidParameter(format!("csv output failed: {e}"));
        let mut wr = csv::Writer::from_writer(w);
        if self.is_real() {
            wr.write_record(["z_re", "z_im", "value", "tail_bound"]).map_err(io)?;
        } else {
            wr.write_record(["z_re", "z_im", "value_re", "value_im", "tail_bound"]).map_err(io)?;
        }
        for ((z, v), t) in self.points.iter().zip(&self.values).zip(&self.tail_bounds) {
            let mut rec = vec![z.re.to_string(), z.im.to_string(), v.re.to_string()];
            if !self.is_real() {
                rec.push(v.im.to_string());
            }
            rec.push(t.to_string());
            wr.write_record(&rec).map_err(io)?;
        }
        wr.flush().map_err(|e| FockError::InvalidParameter(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// Evaluates a Berezin-type quantity at every lattice point.
pub fn berezin_grid(
    g: &SymbolExpr,
    quantity: BerezinQuantity,
    m: u32,
    rho: f64,
    lattice: &LatticeSpec,
    sizes: DiskSizes,
) -> Result<BerezinGrid> {
    g.validate()?;
    lattice.validate()?;
    let points = lattice.points();
    let mut values = Vec::with_capacity(points.len());
    let mut tail_bounds = Vec::with_capacity(points.len());
    for &z in &points {
        let (v, t) = match quantity {
            BerezinQuantity::Transform => {
                let b = berezin(g, z, m, rho, sizes)?;
                (b.value, b.tail_bound)
            }
            BerezinQuantity::AbsP(p) => {
                let b = berezin_abs_p(g, z, m, p, rho, sizes)?;
                (b.value, b.tail_bound)
            }
            BerezinQuantity::MeanOscillation(p) => {
                let mo = mean_oscillation(g, z, m, p, rho, sizes)?;
                (Complex64::new(mo, 0.0), tail_bound(z, m, rho, Some(g)))
            }
        };
        values.push(v);
        tail_bounds.push(t);
    }
    Ok(BerezinGrid {
        meta: BerezinMeta {
            m,
            symbol: g.to_string(),
            rho,
            quantity,
        },
        points,
        values,
        tail_bounds,
    })
}

/// Bounded or vanishing mode of the Carleson check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarlesonMode {
    Bounded,
    Vanishing,
}

/// Masses `int_{B(b_n; r)} |g|^p dA` over the lattice with a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub mode: CarlesonMode,
    pub masses: OscillationReport,
    pub max_mass: f64,
    /// Bounded mode: no divergence detected beyond `z_min`. Vanishing mode:
    /// the vanishing flag of the profile.
    pub verdict: bool,
}

/// Lattice Carleson check for the measure `|g|^p dA`.
pub fn carleson_lattice_check(
    g: &SymbolExpr,
    p: f64,
    r: f64,
    lattice: &LatticeSpec,
    mode: CarlesonMode,
    sizes: DiskSizes,
    z_min: f64,
    tol_vanish: f64,
) -> Result<CarlesonReport> {
    g.validate()?;
    check_p(p)?;
    lattice.validate()?;
    let mut samples = Vec::new();
    for z in lattice.points() {
        let rule = DiskRule::for_symbol(z, r, sizes, g)?;
        let mass = crate::quadrature::integrate_disk_real(&rule, |v| g.eval(v).norm().powf(p))?;
        samples.push((z, mass));
    }
    let mut masses = OscillationReport::from_samples(samples)?;
    let verdict = match mode {
        CarlesonMode::Bounded => !is_diverging(&masses.profile, z_min, tol_vanish),
        CarlesonMode::Vanishing => {
            let v = is_vanishing(&masses.profile, tol_vanish);
            masses.vanishing = Some(v);
            v
        }
    };
    Ok(CarlesonReport {
        mode,
        max_mass: masses.sup_value,
        masses,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sym(s: &str) -> SymbolExpr {
        crate::symbols::parse_symbol(s).unwrap()
    }

    fn bs() -> DiskSizes {
        default_berezin_sizes()
    }

    #[test]
    fn transform_of_one_is_one() {
        let one = sym("1");
        for m in 0..3 {
            for z in [c(0.0, 0.0), c(0.3, -0.2), c(2.0, 1.0), c(-7.5, 6.0), c(0.0, 12.0)] {
                let b = berezin(&one, z, m, DEFAULT_RHO, bs()).unwrap();
                assert!((b.value - 1.0).norm() < 1e-10, "m={m} z={z}: {}", b.value);
                assert!(b.tail_bound < 1e-20);
            }
        }
    }

    #[test]
    fn gaussian_moment_examples() {
        for z in [c(0.0, 0.0), c(2.0, 1.0), c(-3.0, 4.0)] {
            let b = berezin(&sym("z^1zb^1"), z, 0, DEFAULT_RHO, bs()).unwrap();
            assert_relative_eq!(b.value.re, 1.0 + z.norm_sqr(), max_relative = 1e-12);
            let b = berezin(&SymbolExpr::z(), z, 0, DEFAULT_RHO, bs()).unwrap();
            assert!((b.value - z).norm() < 1e-12);
            let a = berezin_abs_p(&SymbolExpr::zbar(), z, 0, 2.0, DEFAULT_RHO, bs()).unwrap();
            assert_relative_eq!(a.value.re, 1.0 + z.norm_sqr(), max_relative = 1e-12);
            let mo = mean_oscillation(&SymbolExpr::zbar(), z, 0, 2.0, DEFAULT_RHO, bs()).unwrap();
            assert_relative_eq!(mo, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn constants() {
        let k = sym("(2-1i)");
        let z = c(1.0, 5.0);
        assert_eq!(mean_oscillation(&k, z, 1, 2.0, DEFAULT_RHO, bs()).unwrap(), 0.0);
        let a = berezin_abs_p(&k, z, 1, 3.0, DEFAULT_RHO, bs()).unwrap();
        assert_relative_eq!(a.value.re, 5f64.powf(1.5), max_relative = 1e-10);
    }

    #[test]
    fn disk_indicator_tails() {
        let d = sym("ind(0,0,1)");
        let a = berezin_abs_p(&d, c(6.0, 0.0), 0, 1.0, DEFAULT_RHO, bs()).unwrap();
        assert!(a.value.re < 1e-9, "{}", a.value);
        let mo = mean_oscillation(&d, c(0.0, 8.0), 0, 2.0, DEFAULT_RHO, bs()).unwrap();
        assert!(mo <= 1e-9, "{mo}");
    }

    #[test]
    fn rho_floor() {
        assert!(berezin(&sym("1"), c(0.0, 0.0), 0, 5.0, bs()).is_err());
    }

    #[test]
    fn carleson_examples() {
        let lat = LatticeSpec::new(1.0, 6.0).unwrap();
        let s = DiskSizes::default();
        let one = carleson_lattice_check(&sym("1"), 1.0, 1.0, &lat, CarlesonMode::Bounded, s, 2.0, 1e-3).unwrap();
        for (_, v) in &one.masses.samples {
            assert_relative_eq!(*v, PI, max_relative = 1e-13);
        }
        assert!(one.verdict);
        let d = carleson_lattice_check(&sym("ind(0,0,1)"), 2.0, 1.0, &lat, CarlesonMode::Vanishing, s, 2.0, 1e-3).unwrap();
        for (z, v) in &d.masses.samples {
            if z.norm() > 2.0 {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(d.verdict);
        let q = carleson_lattice_check(&sym("z^1zb^1"), 1.0, 1.0, &lat, CarlesonMode::Bounded, s, 2.0, 1e-3).unwrap();
        for (z, v) in &q.masses.samples {
            assert_relative_eq!(*v, PI * (z.norm_sqr() + 0.5), max_relative = 1e-12);
        }
        assert!(!q.verdict);
    }

    #[test]
    fn grid_csv_layout() {
        let lat = LatticeSpec::new(1.0, 1.0).unwrap();
        let g = berezin_grid(&sym("1"), BerezinQuantity::AbsP(2.0), 0, DEFAULT_RHO, &lat, bs()).unwrap();
        assert_eq!(g.points.len(), 5);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("z_re,z_im,value,tail_bound\n"));
        assert_eq!(text.lines().count(), 6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn positivity_for_nonnegative_symbols(x in -10.0f64..10.0, y in -10.0f64..10.0, m in 0u32..3, which in 0usize..4) {
            let g = [sym("ind(1,0,2)"), sym("|z|^1.5"), sym("expq(-0.2)"), sym("ind(0,1,3)")][which].clone();
            let b = berezin(&g, c(x, y), m, DEFAULT_RHO, bs()).unwrap();
            prop_assert!(b.value.re >= -1e-12);
            prop_assert!(b.value.im.abs() <= 1e-12 * (1.0 + b.value.re));
        }
    }
}

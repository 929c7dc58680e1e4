//! Norms, inner products, projections, disk means and the oscillation
//! estimators (BMO, BO, BA and their vanishing profiles).
//!
//! Every "sup over the plane" is a maximum over a truncated square lattice,
//! so the reported values are lower bounds.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::basis::{basis_value, concentric_breaks_t, growth_of, t_cutoff, SymbolMoments, MAX_INDEX};
use crate::error::{FockError, Result};
use crate::quadrature::{integrate_disk, DiskRule, DiskSizes, RadialRule};
use crate::stablefun::check_order;
use crate::symbols::SymbolExpr;

/// Default threshold of the vanishing flags.
pub const DEFAULT_TOL_VANISH: f64 = 1e-3;

/// Boundary points added to the disk nodes in [`bo_norm`].
pub const BO_BOUNDARY_POINTS: usize = 64;

/// `f = sum_k c_k b_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffVector {
    pub m: u32,
    pub coeffs: Vec<Complex64>,
}

impl CoeffVector {
    pub fn new(m: u32, coeffs: Vec<Complex64>) -> Result<Self> {
        check_order(m)?;
        if coeffs.len() > MAX_INDEX {
            return Err(FockError::InvalidParameter(format!(
                "coefficient vector of length {} exceeds {MAX_INDEX}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(FockError::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(CoeffVector { m, coeffs })
    }

    /// The basis vector `b_k`.
    pub fn unit(m: u32, k: usize) -> Result<Self> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        Self::new(m, coeffs)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, v: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(k, c)| c * basis_value(k, self.m, v))
            .sum()
    }

    /// `sum |c_k|^2`.
    pub fn parseval_norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| c.norm() != 0.0).unwrap_or(0)
    }

    /// Expansion as `(c, alpha, beta)` polar terms.
    fn polar(&self) -> Vec<(Complex64, f64, i32)> {
        let m = self.m as f64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(k, c)| {
                let s = (0.5 * (ln_gamma(m + 1.0) - ln_gamma(m + k as f64 + 1.0))).exp();
                (c * s, k as f64, k as i32)
            })
            .collect()
    }
}

/// Either a DSL symbol or a finite basis expansion.
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Symbol(&'a SymbolExpr),
    Coeffs(&'a CoeffVector),
}

impl<'a> Operand<'a> {
    pub fn eval(&self, v: Complex64) -> Complex64 {
        match self {
            Operand::Symbol(g) => g.eval(v),
            Operand::Coeffs(f) => f.eval(v),
        }
    }

    fn validate(&self, m: u32) -> Result<()> {
        check_order(m)?;
        match self {
            Operand::Symbol(g) => g.validate(),
            Operand::Coeffs(f) if f.m != m => Err(FockError::InvalidParameter(format!(
                "coefficient vector is expanded for m = {}, not m = {m}",
                f.m
            ))),
            Operand::Coeffs(_) => Ok(()),
        }
    }

    /// `(poly, gauss)` growth envelope.
    fn growth(&self) -> (f64, f64) {
        match self {
            Operand::Symbol(g) => {
                let gr = growth_of(g);
                (gr.poly, gr.gauss)
            }
            Operand::Coeffs(f) => (f.degree() as f64, 0.0),
        }
    }

    fn bandwidth(&self) -> Option<u32> {
        match self {
            Operand::Symbol(g) => g.angular_bandwidth(),
            Operand::Coeffs(f) => Some(f.degree() as u32),
        }
    }

    fn polar(&self) -> Option<Vec<(Complex64, f64, i32)>> {
        match self {
            Operand::Symbol(g) => g
                .polar_terms()
                .map(|ts| ts.into_iter().map(|t| (t.c, t.alpha, t.beta)).collect()),
            Operand::Coeffs(f) => Some(f.polar()),
        }
    }

    fn breaks_t(&self) -> Vec<f64> {
        match self {
            Operand::Symbol(g) => concentric_breaks_t(g),
            Operand::Coeffs(_) => Vec::new(),
        }
    }
}

/// `||g||_{p,m} = (omega_{p,m} int |g|^p |v|^{mp} e^{-p|v|^2/2} dA)^{1/p}`
/// with `omega_{p,m} = (p/2)^{mp/2+1} / (pi Gamma(mp/2+1))`.
///
/// With `t = p|v|^2/2` the integral becomes an angular mean of
/// `int |g|^p t^{mp/2} e^{-t} dt`, divided by `Gamma(mp/2 + 1)`.
pub fn norm_pm(g: Operand, p: f64, m: u32) -> Result<f64> {
    g.validate(m)?;
    let (poly, gauss) = g.growth();
    norm_pm_with(|v| g.eval(v), p, m, poly, gauss, g.bandwidth(), &g.breaks_t())
}

/// [`norm_pm`] for an arbitrary function with growth envelope
/// `(1+|v|)^poly e^{gauss |v|^2}`, angular bandwidth (when known) and
/// radial discontinuities at `t = |v|^2` in `breaks_t`.
pub fn norm_pm_with<F>(
    f: F,
    p: f64,
    m: u32,
    poly: f64,
    gauss: f64,
    bandwidth: Option<u32>,
    breaks_t: &[f64],
) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(p >= 1.0) || !p.is_finite() {
        return Err(FockError::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    check_order(m)?;
    let alpha = m as f64 * p / 2.0;
    let t_max = t_cutoff(alpha + p * poly / 2.0, 2.0 * gauss);
    let breaks: Vec<f64> = breaks_t.iter().map(|t| p * t / 2.0).collect();
    let radial = RadialRule::composite(alpha, t_max, &breaks, 2.0, 16)?;
    let n_ang = match bandwidth {
        Some(0) => 1,
        Some(b) if p == 2.0 => 4 * b as usize + 1,
        _ => 256,
    };
    let scale = (2.0 / p).sqrt();
    let mut total = 0.0;
    for (t, lw) in radial.nodes.iter().zip(&radial.log_weights) {
        let r = scale * t.sqrt();
        let mut ring = 0.0;
        for j in 0..n_ang {
            let v = Complex64::from_polar(r, 2.0 * PI * j as f64 / n_ang as f64);
            let gv = f(v).norm();
            if !gv.is_finite() {
                return Err(FockError::NonFinite {
                    node: format!("{}{:+}i", v.re, v.im),
                    value: format!("{gv}"),
                });
            }
            ring += gv.powf(p);
        }
        total += lw.exp() * ring / n_ang as f64;
    }
    Ok((total / ln_gamma(alpha + 1.0).exp()).powf(1.0 / p))
}

/// `<f, g>_{2,m} = (1/(pi m!)) int f conj(g) |v|^{2m} e^{-|v|^2} dA`.
pub fn inner_2m(f: Operand, g: Operand, m: u32) -> Result<Complex64> {
    f.validate(m)?;
    g.validate(m)?;
    if let (Some(a), Some(b)) = (f.polar(), g.polar()) {
        let ln_mfact = ln_gamma(m as f64 + 1.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (c1, a1, b1) in &a {
            for (c2, a2, b2) in &b {
                if b1 == b2 {
                    let w = (ln_gamma((a1 + a2) / 2.0 + m as f64 + 1.0) - ln_mfact).exp();
                    acc += c1 * c2.conj() * w;
                }
            }
        }
        return Ok(acc);
    }
    match (f, g) {
        (Operand::Symbol(x), Operand::Symbol(y)) => {
            let h = SymbolExpr::product(x.clone(), SymbolExpr::conj(y.clone()));
            Ok(SymbolMoments::new(&h, m, 0.0, 0)?.get(0, 0))
        }
        (Operand::Symbol(x), Operand::Coeffs(c)) => {
            let mo = SymbolMoments::new(x, m, c.len() as f64 / 2.0, c.len())?;
            Ok(c.coeffs.iter().enumerate().map(|(l, cl)| cl.conj() * mo.get(0, l)).sum())
        }
        (Operand::Coeffs(c), Operand::Symbol(y)) => {
            let mo = SymbolMoments::new(y, m, c.len() as f64 / 2.0, c.len())?;
            Ok(c.coeffs.iter().enumerate().map(|(l, cl)| *cl * mo.get(0, l).conj()).sum())
        }
        (Operand::Coeffs(_), Operand::Coeffs(_)) => unreachable!("coefficient vectors always expand"),
    }
}

/// `P^m g` truncated to `b_0, ..., b_L`: `c_l = <g, b_l>`.
pub fn project(g: &SymbolExpr, m: u32, l_max: usize) -> Result<CoeffVector> {
    if l_max >= MAX_INDEX {
        return Err(FockError::InvalidParameter(format!(
            "projection truncation {l_max} exceeds {}",
            MAX_INDEX - 1
        )));
    }
    let mo = SymbolMoments::new(g, m, l_max as f64 / 2.0, l_max)?;
    CoeffVector::new(m, (0..=l_max).map(|l| mo.get(0, l)).collect())
}

/// Kind of disk mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeanKind {
    /// `g~_r(z)`, the plain average.
    Linear,
    /// Average of `|g|^p`.
    Power(f64),
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(FockError::InvalidParameter(format!("disk radius must be positive, got {r}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(FockError::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    Ok(())
}

/// Values of `g` at the nodes of a disk rule adapted to `g`.
fn disk_samples(g: &SymbolExpr, z: Complex64, r: f64, sizes: DiskSizes) -> Result<(Vec<Complex64>, Vec<f64>, Vec<Complex64>)> {
    let rule = DiskRule::for_symbol(z, r, sizes, g)?;
    let mut nodes = Vec::with_capacity(rule.len());
    let mut weights = Vec::with_capacity(rule.len());
    let mut values = Vec::with_capacity(rule.len());
    for (v, w) in rule.nodes() {
        let gv = g.eval(v);
        if !(gv.re.is_finite() && gv.im.is_finite()) {
            return Err(FockError::NonFinite {
                node: format!("{}{:+}i", v.re, v.im),
                value: format!("{gv}"),
            });
        }
        nodes.push(v);
        weights.push(w);
        values.push(gv);
    }
    Ok((nodes, weights, values))
}

/// Disk mean over `B(z; r)`: the plain average of `g`, or the average of
/// `|g|^p` (returned as a real number in the real part).
pub fn disk_mean(g: &SymbolExpr, z: Complex64, r: f64, kind: MeanKind, sizes: DiskSizes) -> Result<Complex64> {
    check_radius(r)?;
    let rule = DiskRule::for_symbol(z, r, sizes, g)?;
    let area = rule.area();
    match kind {
        MeanKind::Linear => Ok(integrate_disk(&rule, |v| g.eval(v))? / area),
        MeanKind::Power(p) => {
            check_p(p)?;
            let s = integrate_disk(&rule, |v| Complex64::new(g.eval(v).norm().powf(p), 0.0))?;
            Ok(Complex64::new(s.re / area, 0.0))
        }
    }
}

/// `(mean over B(z; r) of |g - mu|^p)^{1/p}`.
pub fn disk_oscillation_about(g: &SymbolExpr, z: Complex64, r: f64, p: f64, mu: Complex64, sizes: DiskSizes) -> Result<f64> {
    check_radius(r)?;
    check_p(p)?;
    let (_, w, vals) = disk_samples(g, z, r, sizes)?;
    let area = PI * r * r;
    let s: f64 = w.iter().zip(&vals).map(|(w, gv)| w * (gv - mu).norm().powf(p)).sum();
    Ok((s / area).powf(1.0 / p))
}

/// Mean `p`-oscillation `(mean |g - g~_r(z)|^p)^{1/p}` over `B(z; r)`.
pub fn disk_oscillation(g: &SymbolExpr, z: Complex64, r: f64, p: f64, sizes: DiskSizes) -> Result<f64> {
    check_radius(r)?;
    check_p(p)?;
    let (_, w, vals) = disk_samples(g, z, r, sizes)?;
    let area = PI * r * r;
    // shifted by the first sample so that constants have exactly zero oscillation
    let base = vals[0];
    let wsum: f64 = w.iter().sum();
    let mean = base + w.iter().zip(&vals).map(|(w, gv)| (gv - base) * *w).sum::<Complex64>() / wsum;
    let s: f64 = w.iter().zip(&vals).map(|(w, gv)| w * (gv - mean).norm().powf(p)).sum();
    Ok((s / area).powf(1.0 / p))
}

/// Square lattice `{delta (j + i k)}` truncated to `|z| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub delta: f64,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl LatticeSpec {
    pub fn new(delta: f64, radius: f64) -> Result<Self> {
        let l = LatticeSpec { delta, radius };
        l.validate()?;
        Ok(l)
    }

    /// Default lattice for disk radius `r`: spacing `r/2`, radius 12.
    pub fn default_for(r: f64) -> Self {
        LatticeSpec {
            delta: r / 2.0,
            radius: 12.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !(self.radius > 0.0) || !self.radius.is_finite() || self.delta > self.radius {
            return Err(FockError::InvalidParameter(format!(
                "lattice needs 0 < delta <= R, got delta = {}, R = {}",
                self.delta, self.radius
            )));
        }
        if (self.radius / self.delta) > 2000.0 {
            return Err(FockError::InvalidParameter("lattice has too many points".into()));
        }
        Ok(())
    }

    /// Points in row-major order (imaginary part outer, real part inner).
    pub fn points(&self) -> Vec<Complex64> {
        let n = (self.radius / self.delta).floor() as i64;
        let mut out = Vec::new();
        for k in -n..=n {
            for j in -n..=n {
                let z = Complex64::new(self.delta * j as f64, self.delta * k as f64);
                if z.norm() <= self.radius * (1.0 + 1e-12) {
                    out.push(z);
                }
            }
        }
        out
    }
}

/// Lattice maximum of an oscillation-type quantity with its `|z|` profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub sup_value: f64,
    pub argmax: Complex64,
    /// `(b, max over b <= |z| < b + 1)`, ascending in `b`.
    pub profile: Vec<(f64, f64)>,
    /// Every lattice point with its value, in lattice order.
    pub samples: Vec<(Complex64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vanishing: Option<bool>,
}

/// Width of the `|z|` bins of every profile.
pub const BIN_WIDTH: f64 = 1.0;

impl OscillationReport {
    pub fn from_samples(samples: Vec<(Complex64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(FockError::InvalidParameter("empty sample set".into()));
        }
        let mut sup_value = f64::NEG_INFINITY;
        let mut argmax = Complex64::new(0.0, 0.0);
        for (z, v) in &samples {
            if *v > sup_value {
                sup_value = *v;
                argmax = *z;
            }
        }
        Ok(OscillationReport {
            sup_value,
            argmax,
            profile: bin_profile(&samples),
            samples,
            vanishing: None,
        })
    }

    /// Profile restricted to bins starting at or beyond `z_min`.
    pub fn tail(&self, z_min: f64) -> Vec<(f64, f64)> {
        self.profile.iter().copied().filter(|(b, _)| *b >= z_min).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| FockError::InvalidParameter(format!("csv output failed: {e}"));
        wr.write_record(["z_re", "z_im", "value"]).map_err(io)?;
        for (z, v) in &self.samples {
            wr.write_record([z.re.to_string(), z.im.to_string(), v.to_string()]).map_err(io)?;
        }
        wr.flush().map_err(|e| FockError::InvalidParameter(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// Maximum per `|z|` bin of width [`BIN_WIDTH`].
pub fn bin_profile(samples: &[(Complex64, f64)]) -> Vec<(f64, f64)> {
    let mut bins: Vec<(i64, f64)> = Vec::new();
    for (z, v) in samples {
        let b = (z.norm() / BIN_WIDTH + 1e-9).floor() as i64;
        match bins.iter_mut().find(|(k, _)| *k == b) {
            Some((_, m)) => *m = m.max(*v),
            None => bins.push((b, *v)),
        }
    }
    bins.sort_by_key(|(k, _)| *k);
    bins.into_iter().map(|(k, v)| (k as f64 * BIN_WIDTH, v)).collect()
}

/// Vanishing flag: the last three bins are each `<= tol` and non-increasing.
pub fn is_vanishing(profile: &[(f64, f64)], tol: f64) -> bool {
    if profile.len() < 3 {
        return false;
    }
    let last = &profile[profile.len() - 3..];
    last.iter().all(|(_, v)| *v <= tol) && last.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12)
}

/// Divergence flag for a profile tail: the bins beyond `z_min` are nearly
/// non-decreasing, the last exceeds 1.5 times the median bin and exceeds
/// `floor`.
pub fn is_diverging(profile: &[(f64, f64)], z_min: f64, floor: f64) -> bool {
    let tail: Vec<f64> = profile.iter().filter(|(b, _)| *b >= z_min).map(|(_, v)| *v).collect();
    if tail.len() < 3 {
        return false;
    }
    let nearly_increasing = tail.windows(2).all(|w| w[1] >= w[0] * (1.0 - 0.02) - 1e-12);
    let mut sorted = tail.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let last = *tail.last().unwrap();
    nearly_increasing && last >= 1.5 * median && last > floor
}

fn sweep<F>(lattice: &LatticeSpec, mut f: F) -> Result<OscillationReport>
where
    F: FnMut(Complex64) -> Result<f64>,
{
    lattice.validate()?;
    let mut samples = Vec::new();
    for z in lattice.points() {
        samples.push((z, f(z)?));
    }
    OscillationReport::from_samples(samples)
}

/// `sup_z (mean over B(z; r) of |g - g~_r(z)|^p)^{1/p}` over the lattice.
pub fn bmo_norm(g: &SymbolExpr, r: f64, p: f64, lattice: &LatticeSpec, sizes: DiskSizes) -> Result<OscillationReport> {
    g.validate()?;
    sweep(lattice, |z| disk_oscillation(g, z, r, p, sizes))
}

/// `sup_z (mean over B(z; r) of |g|^p)^{1/p}` over the lattice.
pub fn ba_norm(g: &SymbolExpr, r: f64, p: f64, lattice: &LatticeSpec, sizes: DiskSizes) -> Result<OscillationReport> {
    g.validate()?;
    check_radius(r)?;
    check_p(p)?;
    sweep(lattice, |z| Ok(disk_mean(g, z, r, MeanKind::Power(p), sizes)?.re.powf(1.0 / p)))
}

/// `sup_z sup_{v in B(z; r)} |g(v) - g(z)|` over the lattice. The inner
/// sup is sampled on the disk nodes, 64 boundary points and the two
/// boundary points on the ray through `z`.
pub fn bo_norm(g: &SymbolExpr, r: f64, lattice: &LatticeSpec, sizes: DiskSizes) -> Result<OscillationReport> {
    g.validate()?;
    check_radius(r)?;
    if g.has_indicator() {
        return Err(FockError::InvalidParameter(
            "BO estimator needs a continuous symbol; indicator atoms are rejected".into(),
        ));
    }
    sweep(lattice, |z| bo_at(g, z, r, sizes))
}

/// `sup_{v in B(z; r)} |g(v) - g(z)|`, sampled.
pub fn bo_at(g: &SymbolExpr, z: Complex64, r: f64, sizes: DiskSizes) -> Result<f64> {
    let (_, _, vals) = disk_samples(g, z, r, sizes)?;
    let gz = g.eval(z);
    let mut best = vals.iter().map(|v| (v - gz).norm()).fold(0.0, f64::max);
    let dir = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
    let ring = (0..BO_BOUNDARY_POINTS)
        .map(|j| z + Complex64::from_polar(r, 2.0 * PI * j as f64 / BO_BOUNDARY_POINTS as f64))
        .chain([z + dir * r, z - dir * r]);
    for v in ring {
        best = best.max((g.eval(v) - gz).norm());
    }
    Ok(best)
}

/// Estimator selector for [`vanishing_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Bmo,
    Ba,
    Bo,
}

impl std::str::FromStr for Estimator {
    type Err = FockError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bmo" => Ok(Estimator::Bmo),
            "ba" => Ok(Estimator::Ba),
            "bo" => Ok(Estimator::Bo),
            _ => Err(FockError::InvalidParameter(format!("unknown estimator '{s}' (expected bmo, ba or bo)"))),
        }
    }
}

/// Runs an estimator and sets the vanishing flag of its profile.
pub fn vanishing_profile(
    estimator: Estimator,
    g: &SymbolExpr,
    r: f64,
    p: f64,
    lattice: &LatticeSpec,
    sizes: DiskSizes,
    tol: f64,
) -> Result<OscillationReport> {
    let mut rep = match estimator {
        Estimator::Bmo => bmo_norm(g, r, p, lattice, sizes)?,
        Estimator::Ba => ba_norm(g, r, p, lattice, sizes)?,
        Estimator::Bo => bo_norm(g, r, lattice, sizes)?,
    };
    rep.vanishing = Some(is_vanishing(&rep.profile, tol));
    Ok(rep)
}

//! Quadrature on the plane and on Euclidean disks.
//!
//! Plane integrals are taken against `|v|^{2 alpha} e^{-|v|^2} dA(v)`. With
//! `t = |v|^2` this becomes `t^alpha e^{-t} dt dtheta / 2`, so the radial part
//! is a generalized Gauss-Laguerre rule and basis inner products are exact.

pub mod gauss;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{FockError, Result};
use crate::stablefun::LogComplex;
use crate::symbols::SymbolExpr;
use gauss::{gauss_legendre, GaussLaguerre};

/// Neumaier-compensated complex accumulator; results do not depend on
/// anything but the summation order, which is fixed.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: Complex64) {
        neumaier(&mut self.sum.re, &mut self.comp.re, x.re);
        neumaier(&mut self.sum.im, &mut self.comp.im, x.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

/// Radial rule for `int_0^inf f(t) t^alpha e^{-t} dt ~ sum_i exp(log_weights[i]) f(nodes[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRule {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

impl RadialRule {
    pub fn gauss_laguerre(alpha: f64, n: usize) -> Result<Self> {
        let g = GaussLaguerre::new(alpha, n)?;
        Ok(RadialRule {
            alpha,
            nodes: g.nodes,
            log_weights: g.log_weights,
        })
    }

    /// Composite Gauss-Legendre rule on `[0, t_max]` with the weight folded
    /// into the log-weights. Panels have width at most `panel_width`, are
    /// split at every breakpoint, and are geometrically graded towards `t = 0`
    /// so that factors like `t^{1/4}` integrate accurately.
    pub fn composite(
        alpha: f64,
        t_max: f64,
        breakpoints: &[f64],
        panel_width: f64,
        n_per_panel: usize,
    ) -> Result<Self> {
        if !(t_max > 0.0) || !(panel_width > 0.0) {
            return Err(FockError::InvalidParameter(
                "composite radial rule needs positive t_max and panel width".into(),
            ));
        }
        let mut cuts: Vec<f64> = vec![0.0, t_max];
        let first = panel_width.min(t_max);
        let mut g = first;
        for _ in 0..14 {
            cuts.push(g);
            g *= 0.25;
        }
        let mut t = first;
        while t < t_max {
            cuts.push(t);
            t += panel_width;
        }
        cuts.extend(breakpoints.iter().copied().filter(|b| *b > 0.0 && *b < t_max));
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));

        let rule = gauss_legendre(n_per_panel)?;
        let mut nodes = Vec::new();
        let mut log_weights = Vec::new();
        for pair in cuts.windows(2) {
            for (x, w) in rule.on_interval(pair[0], pair[1]) {
                nodes.push(x);
                log_weights.push(w.ln() + alpha * x.ln() - x);
            }
        }
        Ok(RadialRule {
            alpha,
            nodes,
            log_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Product rule for plane integrals against `|v|^{2 alpha} e^{-|v|^2} dA(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneRule {
    pub alpha: f64,
    pub n_angular: usize,
    pub radial: RadialRule,
}

/// Generalized Gauss-Laguerre plane rule for the measure `|v|^{2m} e^{-|v|^2} dA`.
pub fn build_plane_rule(m: u32, n_radial: usize, n_angular: usize) -> Result<PlaneRule> {
    PlaneRule::gauss(m as f64, n_radial, n_angular)
}

impl PlaneRule {
    pub fn gauss(alpha: f64, n_radial: usize, n_angular: usize) -> Result<Self> {
        if n_radial < 1 || n_angular < 2 {
            return Err(FockError::InvalidParameter(format!(
                "plane rule needs n_radial >= 1 and n_angular >= 2 (got {n_radial}, {n_angular})"
            )));
        }
        Ok(PlaneRule {
            alpha,
            n_angular,
            radial: RadialRule::gauss_laguerre(alpha, n_radial)?,
        })
    }

    pub fn from_radial(radial: RadialRule, n_angular: usize) -> Result<Self> {
        if n_angular < 2 {
            return Err(FockError::InvalidParameter("n_angular must be >= 2".into()));
        }
        Ok(PlaneRule {
            alpha: radial.alpha,
            n_angular,
            radial,
        })
    }

    pub fn n_radial(&self) -> usize {
        self.radial.len()
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.radial.nodes
    }

    pub fn radial_weights(&self) -> Vec<f64> {
        self.radial.log_weights.iter().map(|w| w.exp()).collect()
    }

    /// `ln` of the total mass `pi * Gamma(alpha + 1)` of the measure.
    pub fn ln_mass(&self) -> f64 {
        PI.ln() + ln_gamma(self.alpha + 1.0)
    }

    /// Nodes in the plane with their log-weights, radius-major order.
    pub fn nodes(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        let ln_ang = (PI / self.n_angular as f64).ln();
        let n_ang = self.n_angular;
        self.radial
            .nodes
            .iter()
            .zip(&self.radial.log_weights)
            .flat_map(move |(t, lw)| {
                let r = t.sqrt();
                (0..n_ang).map(move |j| {
                    let th = 2.0 * PI * j as f64 / n_ang as f64;
                    (Complex64::from_polar(r, th), lw + ln_ang)
                })
            })
    }
}

fn non_finite(v: Complex64, value: Complex64) -> FockError {
    FockError::NonFinite {
        node: format!("{}{:+}i", v.re, v.im),
        value: format!("{value}"),
    }
}

/// `int_C f(v) |v|^{2 alpha} e^{-|v|^2} dA(v)`.
pub fn integrate_plane<F>(rule: &PlaneRule, mut f: F) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Complex64,
{
    let mut acc = CompensatedSum::new();
    for (v, lw) in rule.nodes() {
        let fv = f(v);
        if !(fv.re.is_finite() && fv.im.is_finite()) {
            return Err(non_finite(v, fv));
        }
        acc.add(fv * lw.exp());
    }
    Ok(acc.value())
}

/// Log-scale version of [`integrate_plane`]: the integrand is given in log
/// form and the sum is shifted by its largest term before exponentiation.
pub fn integrate_plane_log<F>(rule: &PlaneRule, mut f: F) -> Result<LogComplex>
where
    F: FnMut(Complex64) -> LogComplex,
{
    let mut terms = Vec::with_capacity(rule.n_radial() * rule.n_angular);
    for (v, lw) in rule.nodes() {
        let fv = f(v);
        if fv.logmag.is_nan() || fv.logmag == f64::INFINITY {
            return Err(non_finite(v, fv.to_complex_unchecked()));
        }
        terms.push(fv.scale_ln(lw));
    }
    Ok(sum_log_terms(&terms))
}

/// Max-shifted sum of log-scale terms.
pub fn sum_log_terms(terms: &[LogComplex]) -> LogComplex {
    let shift = terms
        .iter()
        .map(|t| t.logmag)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return LogComplex::ZERO;
    }
    let mut acc = CompensatedSum::new();
    for t in terms {
        if !t.is_zero() {
            acc.add(Complex64::from_polar((t.logmag - shift).exp(), t.phase));
        }
    }
    LogComplex::from_complex(acc.value()).scale_ln(shift)
}

/// Panel and node counts of a composite polar disk rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSizes {
    pub panels: usize,
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for DiskSizes {
    fn default() -> Self {
        DiskSizes {
            panels: 2,
            n_radial: 16,
            n_angular: 256,
        }
    }
}

/// Composite polar product rule on `B(center; radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskRule {
    pub center: Complex64,
    pub radius: f64,
    pub panels: usize,
    pub n_radial: usize,
    pub n_angular: usize,
    offsets: Vec<(Complex64, f64)>,
}

impl DiskRule {
    pub fn new(center: Complex64, radius: f64, sizes: DiskSizes) -> Result<Self> {
        Self::with_breaks(center, radius, sizes, &[])
    }

    /// Rule whose radial panels are additionally split at the given radii.
    pub fn with_breaks(
        center: Complex64,
        radius: f64,
        sizes: DiskSizes,
        breaks: &[f64],
    ) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(FockError::InvalidParameter(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        if sizes.panels == 0 || sizes.n_radial == 0 || sizes.n_angular < 2 {
            return Err(FockError::InvalidParameter(format!(
                "invalid disk rule sizes {sizes:?}"
            )));
        }
        let mut cuts: Vec<f64> = (0..=sizes.panels)
            .map(|i| radius * i as f64 / sizes.panels as f64)
            .collect();
        cuts.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < radius));
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * radius);

        let rule = gauss_legendre(sizes.n_radial)?;
        let dth = 2.0 * PI / sizes.n_angular as f64;
        let mut offsets = Vec::with_capacity((cuts.len() - 1) * sizes.n_radial * sizes.n_angular);
        for pair in cuts.windows(2) {
            for (r, w) in rule.on_interval(pair[0], pair[1]) {
                for j in 0..sizes.n_angular {
                    offsets.push((Complex64::from_polar(r, dth * j as f64), w * r * dth));
                }
            }
        }
        Ok(DiskRule {
            center,
            radius,
            panels: cuts.len() - 1,
            n_radial: sizes.n_radial,
            n_angular: sizes.n_angular,
            offsets,
        })
    }

    /// Rule adapted to the discontinuities of `g`: panels snap to indicator
    /// circles concentric with the disk, and the panel count is multiplied by
    /// four when a non-concentric indicator boundary crosses the disk.
    pub fn for_symbol(
        center: Complex64,
        radius: f64,
        sizes: DiskSizes,
        g: &SymbolExpr,
    ) -> Result<Self> {
        let mut breaks = Vec::new();
        let mut refine = false;
        for (c, a, b) in g.indicator_annuli() {
            let d = (c - center).norm();
            for rad in [a, b] {
                if rad <= 0.0 {
                    continue;
                }
                if d <= 1e-12 * (1.0 + rad) {
                    breaks.push(rad);
                } else if (d - rad).abs() < radius {
                    refine = true;
                }
            }
        }
        let sizes = if refine {
            DiskSizes {
                panels: sizes.panels * 4,
                ..sizes
            }
        } else {
            sizes
        };
        Self::with_breaks(center, radius, sizes, &breaks)
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Node positions with their (positive) area weights.
    pub fn nodes(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.offsets.iter().map(move |(o, w)| (self.center + o, *w))
    }

    /// The same rule moved to a new center.
    pub fn recentered(&self, center: Complex64) -> Self {
        DiskRule {
            center,
            ..self.clone()
        }
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// `int_{B(center; radius)} f(v) dA(v)`.
pub fn integrate_disk<F>(rule: &DiskRule, mut f: F) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Complex64,
{
    let mut acc = CompensatedSum::new();
    for (v, w) in rule.nodes() {
        let fv = f(v);
        if !(fv.re.is_finite() && fv.im.is_finite()) {
            return Err(non_finite(v, fv));
        }
        acc.add(fv * w);
    }
    Ok(acc.value())
}

/// Real-valued variant of [`integrate_disk`].
pub fn integrate_disk_real<F>(rule: &DiskRule, mut f: F) -> Result<f64>
where
    F: FnMut(Complex64) -> f64,
{
    integrate_disk(rule, |v| Complex64::new(f(v), 0.0)).map(|c| c.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_point_rule() {
        let rule = build_plane_rule(0, 1, 4).unwrap();
        assert_eq!(rule.radial_nodes().len(), 1);
        assert_relative_eq!(rule.radial_nodes()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(rule.radial_weights()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn degree_two_nodes_are_laguerre_roots() {
        // L_2^{(1)}(t) = (t^2 - 6t + 6)/2, roots 3 -+ sqrt(3): brute-force
        // bisection on the explicit polynomial
        let p = |t: f64| t * t - 6.0 * t + 6.0;
        let bisect = |mut a: f64, mut b: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if p(a) * p(mid) <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        };
        let roots = [bisect(0.0, 3.0), bisect(3.0, 10.0)];
        let rule = build_plane_rule(1, 2, 4).unwrap();
        for (got, want) in rule.radial_nodes().iter().zip(roots) {
            assert_relative_eq!(*got, want, epsilon = 1e-13);
        }
    }

    #[test]
    fn normalized_mass_is_one() {
        for m in 0..5u32 {
            let rule = build_plane_rule(m, 20, 64).unwrap();
            let s = integrate_plane(&rule, |_| c(1.0, 0.0)).unwrap();
            let norm = s.re / rule.ln_mass().exp();
            assert!((norm - 1.0).abs() < 1e-12, "m={m}: {norm}");
            let sum_w: f64 = rule.radial_weights().iter().sum();
            assert_relative_eq!(sum_w, ln_gamma(m as f64 + 1.0).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn plane_moments() {
        let rule = build_plane_rule(0, 16, 32).unwrap();
        let s = integrate_plane(&rule, |v| c(v.norm_sqr(), 0.0)).unwrap() / PI;
        assert_relative_eq!(s.re, 1.0, epsilon = 1e-14);
        for (j, k) in [(1, 0), (0, 2), (3, 1), (2, 5)] {
            let s = integrate_plane(&rule, |v| v.powu(j) * v.conj().powu(k)).unwrap();
            assert!(s.norm() < 1e-14, "({j},{k}): {s}");
        }
    }

    #[test]
    fn non_finite_integrand_names_node() {
        let rule = build_plane_rule(0, 4, 4).unwrap();
        let err = integrate_plane(&rule, |_| c(f64::NAN, 0.0)).unwrap_err();
        assert!(matches!(err, FockError::NonFinite { .. }));
    }

    #[test]
    fn log_plane_handles_huge_values() {
        let rule = build_plane_rule(0, 8, 8).unwrap();
        let s = integrate_plane_log(&rule, |_| LogComplex::new(690.0, 0.0)).unwrap();
        assert_relative_eq!(s.logmag, 690.0 + PI.ln(), max_relative = 1e-14);
    }

    #[test]
    fn disk_examples() {
        let z = c(1.5, -2.0);
        let r = 0.75;
        let rule = DiskRule::new(z, r, DiskSizes::default()).unwrap();
        let area = integrate_disk(&rule, |_| c(1.0, 0.0)).unwrap();
        assert_relative_eq!(area.re, PI * r * r, max_relative = 1e-12);
        let first = integrate_disk(&rule, |v| v).unwrap();
        assert!((first - z * PI * r * r).norm() < 1e-12);
        let second = integrate_disk(&rule, |v| c(v.norm_sqr(), 0.0)).unwrap();
        assert_relative_eq!(second.re, PI * r * r * (z.norm_sqr() + r * r / 2.0), max_relative = 1e-12);
    }

    #[test]
    fn disk_rule_exact_on_low_degree_polynomials() {
        let sizes = DiskSizes {
            panels: 1,
            n_radial: 4,
            n_angular: 16,
        };
        let rule = DiskRule::new(c(0.0, 0.0), 2.0, sizes).unwrap();
        // int_{B(0,2)} x^2 y^2 dA = int r^5 cos^2 sin^2 = (2^6/6) * pi/4
        let s = integrate_disk_real(&rule, |v| v.re * v.re * v.im * v.im).unwrap();
        assert_relative_eq!(s, 64.0 / 6.0 * PI / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn disk_translation_covariance() {
        let f = |v: Complex64| c((v.re * 0.7).sin() + v.im * v.im, v.re * v.im);
        let z = c(0.3, 0.1);
        let shift = c(-2.0, 5.0);
        let a = integrate_disk(&DiskRule::new(z, 1.2, DiskSizes::default()).unwrap(), f).unwrap();
        let b = integrate_disk(&DiskRule::new(z + shift, 1.2, DiskSizes::default()).unwrap(), |v| {
            f(v - shift)
        })
        .unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn composite_radial_rule_integrates_moments() {
        let rule = RadialRule::composite(0.0, 120.0, &[1.0], 4.0, 16).unwrap();
        for k in [0.0, 0.25, 1.0, 7.5, 30.0] {
            let s: f64 = rule
                .nodes
                .iter()
                .zip(&rule.log_weights)
                .map(|(t, lw)| (lw + k * t.ln()).exp())
                .sum();
            assert_relative_eq!(s, ln_gamma(k + 1.0).exp(), max_relative = 1e-11);
        }
    }
}

//! Moments of multiplication operators in the orthonormal basis
//! `b_k(v) = sqrt(m!/(k+m)!) v^k`.
//!
//! All inner products use the measure `(1/(pi m!)) |v|^{2m} e^{-|v|^2} dA(v)`.
//! For a symbol `h`,
//!
//! ```text
//! <h b_k, b_l> = int_0^inf t^{(k+l)/2 + m} e^{-t} h_{l-k}(sqrt t) dt / sqrt((k+m)! (l+m)!)
//! ```
//!
//! where `h_n(r)` is the `n`-th angular Fourier coefficient of `h` on the
//! circle of radius `r`. Polar monomials `r^a e^{i b theta}` integrate in
//! closed form; every other symbol goes through a composite radial rule.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{FockError, Result};
use crate::quadrature::RadialRule;
use crate::stablefun::check_order;
use crate::symbols::{PolarTerm, SymbolExpr};

/// Largest basis index handled anywhere.
pub const MAX_INDEX: usize = 4096;

/// Angular samples used for symbols without a finite angular bandwidth.
pub const DEFAULT_ANGULAR: usize = 256;

/// Width (in `t = r^2`) and order of the composite radial panels.
const PANEL_WIDTH: f64 = 2.0;
const PANEL_NODES: usize = 16;

/// Growth envelope `|g(v)| <= C (1 + |v|)^poly e^{gauss |v|^2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub poly: f64,
    pub gauss: f64,
}

/// Growth envelope of a symbol, read off its tree.
pub fn growth_of(g: &SymbolExpr) -> Growth {
    use SymbolExpr::*;
    match g {
        Mono { a, b, .. } => Growth {
            poly: (a + b) as f64,
            gauss: 0.0,
        },
        RadialPower { s } => Growth { poly: *s, gauss: 0.0 },
        RadialExpQ { s } => Growth {
            poly: 0.0,
            gauss: s.max(0.0),
        },
        RadialSin { .. } | Angular { .. } | IndicatorAnnulus { .. } => Growth {
            poly: 0.0,
            gauss: 0.0,
        },
        Sum { terms } => terms.iter().map(growth_of).fold(
            Growth {
                poly: 0.0,
                gauss: 0.0,
            },
            |a, b| Growth {
                poly: a.poly.max(b.poly),
                gauss: a.gauss.max(b.gauss),
            },
        ),
        Product { left, right } => {
            let (a, b) = (growth_of(left), growth_of(right));
            Growth {
                poly: a.poly + b.poly,
                gauss: a.gauss + b.gauss,
            }
        }
        Conj { child } => growth_of(child),
    }
}

/// Upper limit in `t` beyond which `t^s e^{-(1-gauss) t}` is below `e^{-45}`
/// of its peak.
pub fn t_cutoff(s: f64, gauss: f64) -> f64 {
    let s = s.max(0.0);
    (s + 45.0 + 10.0 * (s + 1.0).sqrt()) / (1.0 - gauss).max(1e-3)
}

/// `t = r^2` positions of indicator circles centered at the origin.
pub fn concentric_breaks_t(g: &SymbolExpr) -> Vec<f64> {
    let mut out = Vec::new();
    for (c, a, b) in g.indicator_annuli() {
        if c.norm() == 0.0 {
            for r in [a, b] {
                if r > 0.0 {
                    out.push(r * r);
                }
            }
        }
    }
    out
}

/// `ln sqrt((k+m)!)`.
fn half_ln_fact(k: usize, m: u32) -> f64 {
    0.5 * ln_gamma((k + m as usize) as f64 + 1.0)
}

/// `ln <r^alpha b_k, b_l>` for `l = k + beta`, i.e.
/// `ln Gamma((alpha+k+l)/2 + m + 1) - ln sqrt((k+m)! (l+m)!)`.
pub fn ln_polar_moment(alpha: f64, k: usize, l: usize, m: u32) -> f64 {
    ln_gamma((alpha + (k + l) as f64) / 2.0 + m as f64 + 1.0) - half_ln_fact(k, m) - half_ln_fact(l, m)
}

enum Route {
    Exact(Vec<PolarTerm>),
    Fourier {
        ln_t: Vec<f64>,
        log_weights: Vec<f64>,
        /// `modes[n + max_mode][i]` is the `n`-th Fourier coefficient on
        /// the circle through radial node `i`.
        modes: Vec<Vec<Complex64>>,
        max_mode: i32,
    },
}

/// Matrix elements `<h b_k, b_l>` of multiplication by a symbol `h`.
pub struct SymbolMoments {
    m: u32,
    route: Route,
    shifts: Option<Vec<i32>>,
}

impl SymbolMoments {
    /// Prepares the moments for indices with `(k + l)/2 <= s_max` and
    /// `|l - k| <= max_shift`.
    pub fn new(h: &SymbolExpr, m: u32, s_max: f64, max_shift: usize) -> Result<Self> {
        check_order(m)?;
        h.validate()?;
        if let Some(terms) = h.polar_terms() {
            let mut shifts: Vec<i32> = terms.iter().map(|t| t.beta).collect();
            shifts.sort_unstable();
            shifts.dedup();
            return Ok(SymbolMoments {
                m,
                route: Route::Exact(terms),
                shifts: Some(shifts),
            });
        }
        let growth = growth_of(h);
        let t_max = t_cutoff(s_max + m as f64 + growth.poly / 2.0, growth.gauss);
        let radial = RadialRule::composite(0.0, t_max, &concentric_breaks_t(h), PANEL_WIDTH, PANEL_NODES)?;
        let bandwidth = h.angular_bandwidth();
        let (n_ang, max_mode) = match bandwidth {
            Some(b) => (2 * b as usize + 1, (b as usize).min(max_shift) as i32),
            None => (DEFAULT_ANGULAR, (DEFAULT_ANGULAR / 2 - 1).min(max_shift) as i32),
        };
        let width = (2 * max_mode + 1) as usize;
        let mut modes = vec![Vec::with_capacity(radial.len()); width];
        let mut samples = vec![Complex64::new(0.0, 0.0); n_ang];
        let twiddle: Vec<Complex64> = (0..n_ang)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / n_ang as f64))
            .collect();
        for &t in &radial.nodes {
            let r = t.sqrt();
            for (j, s) in samples.iter_mut().enumerate() {
                let v = Complex64::from_polar(r, 2.0 * PI * j as f64 / n_ang as f64);
                *s = h.eval(v);
                if !(s.re.is_finite() && s.im.is_finite()) {
                    return Err(FockError::NonFinite {
                        node: format!("{}{:+}i", v.re, v.im),
                        value: format!("{s}"),
                    });
                }
            }
            for n in -max_mode..=max_mode {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, s) in samples.iter().enumerate() {
                    let idx = (n as i64 * j as i64).rem_euclid(n_ang as i64) as usize;
                    acc += s * twiddle[idx];
                }
                modes[(n + max_mode) as usize].push(acc / n_ang as f64);
            }
        }
        let shifts = bandwidth.map(|b| {
            let b = (b as i32).min(max_mode);
            (-b..=b).collect()
        });
        Ok(SymbolMoments {
            m,
            route: Route::Fourier {
                ln_t: radial.nodes.iter().map(|t| t.ln()).collect(),
                log_weights: radial.log_weights,
                modes,
                max_mode,
            },
            shifts,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Values of `l - k` where the moment can be nonzero, `None` when every
    /// offset may contribute.
    pub fn shifts(&self) -> Option<&[i32]> {
        self.shifts.as_deref()
    }

    /// `<h b_k, b_l>`.
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        let m = self.m;
        let shift = l as i64 - k as i64;
        match &self.route {
            Route::Exact(terms) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in terms.iter().filter(|t| t.beta as i64 == shift) {
                    acc += t.c * ln_polar_moment(t.alpha, k, l, m).exp();
                }
                acc
            }
            Route::Fourier {
                ln_t,
                log_weights,
                modes,
                max_mode,
            } => {
                if shift.unsigned_abs() > *max_mode as u64 {
                    return Complex64::new(0.0, 0.0);
                }
                let mode = &modes[(shift + *max_mode as i64) as usize];
                let power = (k + l) as f64 / 2.0 + m as f64;
                let norm = half_ln_fact(k, m) + half_ln_fact(l, m);
                let mut re = 0.0;
                let mut im = 0.0;
                for ((lt, lw), h) in ln_t.iter().zip(log_weights).zip(mode) {
                    let w = (lw + power * lt - norm).exp();
                    re += w * h.re;
                    im += w * h.im;
                }
                Complex64::new(re, im)
            }
        }
    }

    /// Dense `rows x cols` block with entries `(l, k) -> <h b_k, b_l>`,
    /// skipping offsets that vanish structurally.
    pub fn matrix(&self, rows: usize, cols: usize) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::new(0.0, 0.0); cols]; rows];
        for k in 0..cols {
            match &self.shifts {
                Some(shifts) => {
                    for &s in shifts {
                        let l = k as i64 + s as i64;
                        if l >= 0 && (l as usize) < rows {
                            out[l as usize][k] = self.get(k, l as usize);
                        }
                    }
                }
                None => {
                    for (l, row) in out.iter_mut().enumerate() {
                        row[k] = self.get(k, l);
                    }
                }
            }
        }
        out
    }
}

/// `b_k(v) = sqrt(m!/(k+m)!) v^k`.
pub fn basis_value(k: usize, m: u32, v: Complex64) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if v.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let ln_mag = half_ln_fact(0, m) - half_ln_fact(k, m) + k as f64 * v.norm().ln();
    Complex64::from_polar(ln_mag.exp(), k as f64 * v.arg())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_moments_are_orthonormal() {
        for m in 0..4 {
            let one = SymbolMoments::new(&SymbolExpr::constant(c(1.0, 0.0)), m, 40.0, 80).unwrap();
            for k in 0..=40 {
                for l in 0..=40 {
                    let want = if k == l { 1.0 } else { 0.0 };
                    assert!((one.get(k, l) - want).norm() < 1e-12, "m={m} k={k} l={l}");
                }
            }
        }
    }

    #[test]
    fn conj_z_moments() {
        let g = SymbolMoments::new(&SymbolExpr::zbar(), 0, 20.0, 40).unwrap();
        for k in 1..20 {
            assert!((g.get(k, k - 1) - (k as f64).sqrt()).norm() < 1e-12);
            assert_eq!(g.get(k, k), c(0.0, 0.0));
        }
        assert_eq!(g.shifts(), Some(&[-1][..]));
    }

    #[test]
    fn fourier_route_matches_exact_route() {
        // |v|^2 written as a polar monomial, and multiplied by expq(0) to
        // force the quadrature route
        let exact = SymbolExpr::mono(1, 1, c(1.0, 0.0));
        let forced = SymbolExpr::product(exact.clone(), SymbolExpr::expq(0.0).unwrap());
        for m in [0u32, 2] {
            let a = SymbolMoments::new(&exact, m, 30.0, 60).unwrap();
            let b = SymbolMoments::new(&forced, m, 30.0, 60).unwrap();
            for k in 0..30 {
                let (x, y) = (a.get(k, k), b.get(k, k));
                assert!((x - y).norm() < 1e-11 * x.norm(), "m={m} k={k}: {x} vs {y}");
                assert_eq!(b.get(k, k + 1), c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn angular_modes_through_quadrature() {
        // v * expq(0) has bandwidth 1 and must reproduce <v b_k, b_{k+1}>
        let g = SymbolExpr::product(SymbolExpr::z(), SymbolExpr::expq(0.0).unwrap());
        let mo = SymbolMoments::new(&g, 1, 20.0, 40).unwrap();
        for k in 0..20 {
            let want = ((k + 2) as f64).sqrt();
            assert!((mo.get(k, k + 1) - want).norm() < 1e-11 * want, "k={k}");
            assert!(mo.get(k + 1, k).norm() < 1e-12);
        }
    }

    #[test]
    fn indicator_moments_are_incomplete_gamma() {
        // <1_{|v|<=1} b_k, b_k> = P(k+1, 1) for m = 0
        let g = SymbolExpr::indicator(c(0.0, 0.0), 0.0, 1.0).unwrap();
        let mo = SymbolMoments::new(&g, 0, 20.0, 0).unwrap();
        for k in 0..20usize {
            let want = statrs::function::gamma::gamma_lr((k + 1) as f64, 1.0);
            assert!((mo.get(k, k).re - want).abs() < 1e-13 * want.max(1e-300) + 1e-15, "k={k}");
        }
    }

    #[test]
    fn growth_envelopes() {
        let g = SymbolExpr::product(
            SymbolExpr::mono(2, 1, c(1.0, 0.0)),
            SymbolExpr::sum(vec![SymbolExpr::expq(0.2).unwrap(), SymbolExpr::radial_power(1.5).unwrap()]),
        );
        assert_eq!(growth_of(&g), Growth { poly: 4.5, gauss: 0.2 });
        assert!(t_cutoff(0.0, 0.0) > 50.0);
    }

    #[test]
    fn basis_values() {
        let v = c(1.5, 0.5);
        let b3 = basis_value(3, 2, v);
        let want = v * v * v * (2.0f64 / 120.0).sqrt();
        assert!((b3 - want).norm() < 1e-14);
        assert_eq!(basis_value(0, 5, c(0.0, 0.0)), c(1.0, 0.0));
        assert_eq!(basis_value(2, 0, c(0.0, 0.0)), c(0.0, 0.0));
    }
}

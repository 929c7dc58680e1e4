//! Hankel operators `H_g f = (I - P^m)(g f)`: pointwise action, finite
//! sections at `p = 2`, normalized-kernel probes and a compactness
//! diagnostic.
//!
//! On `span{b_0, ..., b_{N-1}}` with the projection truncated to
//! `b_0, ..., b_L`, `||H_g f||^2 = x^H (G1 - C^H C) x` where
//! `G1[j][k] = <g b_k, g b_j>` and `C[l][k] = <g b_k, b_l>`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{concentric_breaks_t, growth_of, SymbolMoments, MAX_INDEX};
use crate::error::{FockError, Result};
use crate::spaces::{norm_pm_with, CoeffVector};
use crate::stablefun::{check_order, ln_factorial, ln_kernel_diag};
use crate::symbols::SymbolExpr;

/// Tolerance of the Hermitian eigen-iteration.
pub const EIGEN_TOL: f64 = 1e-10;

/// Tolerance on the Hermitian symmetry of `G1` and `A`, relative to the
/// largest entry of `G1`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Most negative eigenvalue of `A` accepted, relative to the largest entry
/// of `G1`.
pub const PSD_TOL: f64 = 1e-8;

/// Default number of probe directions for non-radial symbols.
pub const DEFAULT_DIRECTIONS: usize = 8;

/// Relative tail allowed when truncating the kernel expansion.
pub const KERNEL_TAIL: f64 = 1e-12;

type Matrix = Vec<Vec<Complex64>>;

/// Level below which `||g f||^2 - ||P g f||^2` cannot be told apart from
/// rounding in an `n`-term quadratic form of size `scale`.
fn rounding_floor(n: usize, scale: f64) -> f64 {
    64.0 * n.max(1) as f64 * f64::EPSILON * scale
}

/// `|g|^2` as a symbol.
fn modulus_squared(g: &SymbolExpr) -> SymbolExpr {
    SymbolExpr::product(g.clone(), SymbolExpr::conj(g.clone()))
}

/// Largest positive shift `l - k` of the multiplication matrix, used to
/// size projections that must capture `g b_k` completely.
fn upward_reach(mo: &SymbolMoments) -> usize {
    match mo.shifts() {
        Some(s) => s.iter().copied().max().unwrap_or(0).max(0) as usize,
        None => 32,
    }
}

/// `(g f)(z) - (P^m_{<=L}(g f))(z)`.
pub fn hankel_apply(g: &SymbolExpr, f: &CoeffVector, z: Complex64, m: u32, l_max: usize) -> Result<Complex64> {
    check_order(m)?;
    if f.m != m {
        return Err(FockError::InvalidParameter(format!(
            "coefficient vector is expanded for m = {}, not m = {m}",
            f.m
        )));
    }
    if l_max >= MAX_INDEX {
        return Err(FockError::InvalidParameter(format!("projection truncation {l_max} exceeds {}", MAX_INDEX - 1)));
    }
    let proj = project_product(g, f, m, l_max)?;
    Ok(g.eval(z) * f.eval(z) - proj.eval(z))
}

/// Coefficients of `P^m_{<=L}(g f)`.
fn project_product(g: &SymbolExpr, f: &CoeffVector, m: u32, l_max: usize) -> Result<CoeffVector> {
    let n = f.len();
    let mo = SymbolMoments::new(g, m, (n + l_max) as f64 / 2.0, n + l_max)?;
    let mut out = vec![Complex64::new(0.0, 0.0); l_max + 1];
    for (k, x) in f.coeffs.iter().enumerate() {
        if x.norm() == 0.0 {
            continue;
        }
        for (l, o) in out.iter_mut().enumerate() {
            *o += mo.get(k, l) * x;
        }
    }
    CoeffVector::new(m, out)
}

/// `||H_g f||_{p,m}` for a user-supplied `f`, with the projection truncated
/// to `b_0, ..., b_L`.
pub fn hankel_norm_p(g: &SymbolExpr, f: &CoeffVector, p: f64, m: u32, l_max: usize) -> Result<f64> {
    let proj = project_product(g, f, m, l_max)?;
    let gr = growth_of(g);
    let poly = (gr.poly + f.degree() as f64).max(l_max as f64);
    norm_pm_with(
        |v| g.eval(v) * f.eval(v) - proj.eval(v),
        p,
        m,
        poly,
        gr.gauss,
        None,
        &concentric_breaks_t(g),
    )
}

/// Finite section of `H_g` at `p = 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HankelSection {
    pub m: u32,
    /// Domain truncation: `b_0, ..., b_{N-1}`.
    pub n: usize,
    /// Projection truncation: `b_0, ..., b_L`.
    pub l: usize,
    pub g1: Matrix,
    pub c: Matrix,
    pub a: Matrix,
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
}

fn hermitian_defect(m: &Matrix) -> f64 {
    let n = m.len();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            worst = worst.max((m[j][k] - m[k][j].conj()).norm());
        }
    }
    worst
}

/// Builds `G1`, `C` and `A = G1 - C^H C` and checks the section
/// invariants.
pub fn build_section(g: &SymbolExpr, m: u32, n: usize, l: usize) -> Result<HankelSection> {
    check_order(m)?;
    if n == 0 || l + 1 < n || l >= MAX_INDEX {
        return Err(FockError::InvalidParameter(format!(
            "section sizes need 1 <= N <= L + 1 and L < {MAX_INDEX} (got N = {n}, L = {l})"
        )));
    }
    g.validate()?;
    let mo_g = SymbolMoments::new(g, m, (n + l) as f64 / 2.0, n + l)?;
    let mo_h = SymbolMoments::new(&modulus_squared(g), m, n as f64, 2 * n)?;
    let g1 = mo_h.matrix(n, n);
    let c = mo_g.matrix(l + 1, n);
    let mut a = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for j in 0..n {
        for k in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for row in &c {
                s += row[j].conj() * row[k];
            }
            a[j][k] = g1[j][k] - s;
        }
    }
    let section = HankelSection { m, n, l, g1, c, a };
    section.check_invariants()?;
    Ok(section)
}

impl HankelSection {
    fn scale(&self) -> f64 {
        max_abs(&self.g1).max(1.0)
    }

    /// Hermitian symmetry of `G1` and `A`; `A` positive semidefinite up to
    /// quadrature error.
    pub fn check_invariants(&self) -> Result<()> {
        let scale = self.scale();
        for (name, m) in [("G1", &self.g1), ("A", &self.a)] {
            let d = hermitian_defect(m);
            if d > HERMITIAN_TOL * scale {
                return Err(FockError::Invariant(format!("{name} is not Hermitian (defect {d:e})")));
            }
        }
        let lo = self.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min);
        if lo < -PSD_TOL * scale {
            return Err(FockError::Invariant(format!(
                "A has eigenvalue {lo:e} below -{PSD_TOL:e} (scale {scale:e})"
            )));
        }
        Ok(())
    }

    /// Eigenvalues of the symmetrized `A`, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.eigenvalues_with_tol(EIGEN_TOL)
    }

    /// [`HankelSection::eigenvalues`] with a custom iteration tolerance.
    pub fn eigenvalues_with_tol(&self, tol: f64) -> Result<Vec<f64>> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(FockError::InvalidParameter(format!("eigen tolerance must be positive, got {tol}")));
        }
        let n = self.n;
        let mat = DMatrix::from_fn(n, n, |j, k| 0.5 * (self.a[j][k] + self.a[k][j].conj()));
        let iterations = 1000 * n.max(1);
        let eig = SymmetricEigen::try_new(mat, tol * f64::EPSILON.sqrt(), iterations).ok_or(
            FockError::NonConvergence {
                what: "Hermitian eigen-iteration".into(),
                iterations,
            },
        )?;
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }
}

/// `sqrt(lambda_max(A))`. Eigenvalues at the rounding level of `G1` are
/// reported as zero.
pub fn section_norm(section: &HankelSection) -> Result<f64> {
    section_norm_with_tol(section, EIGEN_TOL)
}

/// [`section_norm`] with a custom eigen-iteration tolerance.
pub fn section_norm_with_tol(section: &HankelSection, tol: f64) -> Result<f64> {
    let top = section.eigenvalues_with_tol(tol)?.last().copied().unwrap_or(0.0);
    if top <= rounding_floor(section.n, section.scale()) {
        return Ok(0.0);
    }
    Ok(top.sqrt())
}

/// Values of `||H_g k_z||_{2,m}` on a polar grid of probe points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCurve {
    pub radii: Vec<f64>,
    pub directions: Vec<Complex64>,
    /// Radius-major: `values[i * directions.len() + j]`.
    pub values: Vec<f64>,
    /// Kernel truncation used at each radius.
    pub truncations: Vec<usize>,
}

impl ProbeCurve {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.directions.len() + j]
    }

    /// Maximum over directions at each radius.
    pub fn direction_max(&self) -> Vec<f64> {
        let d = self.directions.len();
        self.values.chunks(d).map(|c| c.iter().copied().fold(0.0, f64::max)).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| FockError::InvalidParameter(format!("csv output failed: {e}"));
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["radius", "direction_re", "direction_im", "value"]).map_err(io)?;
        for (i, r) in self.radii.iter().enumerate() {
            for (j, d) in self.directions.iter().enumerate() {
                wr.write_record([r.to_string(), d.re.to_string(), d.im.to_string(), self.value(i, j).to_string()])
                    .map_err(io)?;
            }
        }
        wr.flush().map_err(|e| FockError::InvalidParameter(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// `n` equally spaced unit directions starting at `1`.
pub fn default_directions(n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect()
}

/// Smallest `K` with `sum_{k>K} |z|^{2k} m!/(k+m)! <= 1e-12 m! E_m(|z|^2)`.
pub fn kernel_truncation(m: u32, radius: f64) -> Result<usize> {
    check_order(m)?;
    let x = radius * radius;
    if x == 0.0 {
        return Ok(0);
    }
    let ln_total = ln_kernel_diag(m, Complex64::new(radius, 0.0));
    let ln_m = ln_factorial(m as u64);
    let ln_x = x.ln();
    for k in 0..MAX_INDEX {
        // terms beyond k + 1 shrink at least geometrically with ratio q
        let next = (k + 1) as u64;
        let q = x / (next + 1 + m as u64) as f64;
        if q >= 1.0 {
            continue;
        }
        let ln_next = next as f64 * ln_x + ln_m - ln_factorial(next + m as u64);
        if ln_next - (1.0 - q).ln() <= KERNEL_TAIL.ln() + ln_total {
            return Ok(k);
        }
    }
    Err(FockError::InvalidParameter(format!(
        "kernel expansion at radius {radius} needs more than {MAX_INDEX} terms; use a smaller radius"
    )))
}

/// `||H_g k_z||_{2,m}` for `z = radius * direction`. `l_min` is a lower
/// bound on the projection truncation, which is always raised to cover
/// `g b_k` for every kernel coefficient `k <= K`.
pub fn kernel_probe(
    g: &SymbolExpr,
    m: u32,
    radii: &[f64],
    directions: &[Complex64],
    l_min: Option<usize>,
) -> Result<ProbeCurve> {
    check_order(m)?;
    g.validate()?;
    if radii.is_empty() || directions.is_empty() {
        return Err(FockError::InvalidParameter("probe needs at least one radius and one direction".into()));
    }
    if radii.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(FockError::InvalidParameter("probe radii must be finite and >= 0".into()));
    }
    if directions.iter().any(|d| (d.norm() - 1.0).abs() > 1e-12) {
        return Err(FockError::InvalidParameter("probe directions must be unit complex numbers".into()));
    }
    let truncations = radii.iter().map(|r| kernel_truncation(m, *r)).collect::<Result<Vec<_>>>()?;
    let k_max = *truncations.iter().max().unwrap();
    let mo_h = SymbolMoments::new(&modulus_squared(g), m, k_max as f64, 2 * k_max + 2)?;
    let reach_probe = SymbolMoments::new(g, m, (2 * k_max + 40) as f64 / 2.0, k_max + 40)?;
    let l = (k_max + upward_reach(&reach_probe)).max(l_min.unwrap_or(0));
    if l >= MAX_INDEX {
        return Err(FockError::InvalidParameter(format!(
            "projection truncation {l} exceeds {}; use a smaller radius",
            MAX_INDEX - 1
        )));
    }
    let mo_g = SymbolMoments::new(g, m, (k_max + 1 + l) as f64 / 2.0, k_max + 1 + l)?;
    let g1 = mo_h.matrix(k_max + 1, k_max + 1);
    let c = mo_g.matrix(l + 1, k_max + 1);
    let half_ln_m = 0.5 * ln_factorial(m as u64);

    let mut values = Vec::with_capacity(radii.len() * directions.len());
    for (&radius, &kz) in radii.iter().zip(&truncations) {
        for &d in directions {
            let z = d * radius;
            let ln_norm = 0.5 * ln_kernel_diag(m, z);
            let a: Vec<Complex64> = (0..=kz)
                .map(|k| {
                    if k == 0 {
                        return Complex64::new((-ln_norm).exp(), 0.0);
                    }
                    let ln_mag = half_ln_m - 0.5 * ln_factorial((k + m as usize) as u64)
                        + k as f64 * radius.ln()
                        - ln_norm;
                    Complex64::from_polar(ln_mag.exp(), -(k as f64) * d.arg())
                })
                .collect();
            let mut quad = 0.0;
            for (j, aj) in a.iter().enumerate() {
                let mut row = Complex64::new(0.0, 0.0);
                for (k, ak) in a.iter().enumerate() {
                    row += g1[j][k] * ak;
                }
                quad += (aj.conj() * row).re;
            }
            let mut proj = 0.0;
            for crow in &c {
                let s: Complex64 = crow.iter().zip(&a).map(|(x, y)| x * y).sum();
                proj += s.norm_sqr();
            }
            let rest = quad - proj;
            values.push(if rest <= rounding_floor(kz + 1, quad) { 0.0 } else { rest.sqrt() });
        }
    }
    Ok(ProbeCurve {
        radii: radii.to_vec(),
        directions: directions.to_vec(),
        values,
        truncations,
    })
}

/// Outcome of [`compactness_verdict`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessVerdict {
    pub compact_consistent: bool,
    pub direction_max: Vec<f64>,
    pub final_value: f64,
    pub summary: String,
}

/// Compact-consistent iff the direction maximum is non-increasing over the
/// last three radii and its final value is at most `tol`. This is a
/// numerical diagnostic, not a proof.
pub fn compactness_verdict(curve: &ProbeCurve, tol: f64) -> Result<CompactnessVerdict> {
    if curve.radii.len() < 4 {
        return Err(FockError::InvalidParameter(format!(
            "compactness verdict needs at least 4 radii, got {}",
            curve.radii.len()
        )));
    }
    if curve.radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FockError::InvalidParameter("probe radii must be increasing".into()));
    }
    let dm = curve.direction_max();
    let last = &dm[dm.len() - 3..];
    let monotone = last.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let final_value = *dm.last().unwrap();
    let ok = monotone && final_value <= tol;
    let summary = format!(
        "{}: last three maxima {:?}, final {:e} vs tol {:e}",
        if ok { "compact-consistent" } else { "not compact-consistent" },
        last,
        final_value,
        tol
    );
    Ok(CompactnessVerdict {
        compact_consistent: ok,
        direction_max: dm,
        final_value,
        summary,
    })
}

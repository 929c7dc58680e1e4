//! Closed expression language for symbols `g` on the complex plane.
//!
//! The language is closed on purpose: admissibility and the location of
//! discontinuities are read off the tree, which the quadrature and the class
//! tags rely on.

mod catalog;
mod parse;

pub use catalog::{builtin_catalog, lookup, CatalogEntry, ClassTags, PTag};
pub use parse::parse_symbol;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};

/// Maximum tree depth.
pub const MAX_DEPTH: usize = 32;

/// Largest `|s|` accepted in `expq(s)`.
pub const EXPQ_BOUND: f64 = 0.25;

/// Symbol expression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum SymbolExpr {
    /// `c z^a conj(z)^b`
    Mono { a: u32, b: u32, c: Complex64 },
    /// `|z|^s`
    RadialPower { s: f64 },
    /// `sin(omega |z|)`
    RadialSin { omega: f64 },
    /// `exp(s |z|^2)`, `|s| <= 1/4`
    RadialExpQ { s: f64 },
    /// `e^{i k theta}`, zero at the origin
    Angular { k: i32 },
    /// Indicator of `a <= |z - center| <= b`.
    IndicatorAnnulus { center: Complex64, a: f64, b: f64 },
    Sum { terms: Vec<SymbolExpr> },
    Product {
        left: Box<SymbolExpr>,
        right: Box<SymbolExpr>,
    },
    Conj { child: Box<SymbolExpr> },
}

/// One term `c r^alpha e^{i beta theta}` of a polar-monomial expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarTerm {
    pub c: Complex64,
    pub alpha: f64,
    pub beta: i32,
}

const MAX_POLAR_TERMS: usize = 4096;

impl SymbolExpr {
    pub fn constant(c: Complex64) -> Self {
        SymbolExpr::Mono { a: 0, b: 0, c }
    }

    pub fn mono(a: u32, b: u32, c: Complex64) -> Self {
        SymbolExpr::Mono { a, b, c }
    }

    pub fn z() -> Self {
        Self::mono(1, 0, Complex64::new(1.0, 0.0))
    }

    pub fn zbar() -> Self {
        Self::mono(0, 1, Complex64::new(1.0, 0.0))
    }

    pub fn radial_power(s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(FockError::InvalidParameter(format!(
                "radial power exponent must be >= 0, got {s}"
            )));
        }
        Ok(SymbolExpr::RadialPower { s })
    }

    pub fn radial_sin(omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(FockError::InvalidParameter("sin frequency must be finite".into()));
        }
        Ok(SymbolExpr::RadialSin { omega })
    }

    pub fn expq(s: f64) -> Result<Self> {
        let g = SymbolExpr::RadialExpQ { s };
        g.validate()?;
        Ok(g)
    }

    pub fn angular(k: i32) -> Self {
        SymbolExpr::Angular { k }
    }

    pub fn indicator(center: Complex64, a: f64, b: f64) -> Result<Self> {
        let g = SymbolExpr::IndicatorAnnulus { center, a, b };
        g.validate()?;
        Ok(g)
    }

    pub fn sum(terms: Vec<SymbolExpr>) -> Self {
        SymbolExpr::Sum { terms }
    }

    pub fn product(left: SymbolExpr, right: SymbolExpr) -> Self {
        SymbolExpr::Product {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn conj(child: SymbolExpr) -> Self {
        SymbolExpr::Conj {
            child: Box::new(child),
        }
    }

    /// Checks every constructor invariant, the depth cap and admissibility.
    pub fn validate(&self) -> Result<()> {
        if self.depth() > MAX_DEPTH {
            return Err(FockError::InvalidParameter(format!(
                "symbol tree depth {} exceeds {MAX_DEPTH}",
                self.depth()
            )));
        }
        self.validate_nodes()?;
        let growth = self.exp_growth();
        if growth >= 0.5 {
            return Err(FockError::Admissibility(format!(
                "combined Gaussian growth exp({growth}|z|^2) reaches the weight exp(|z|^2/2)"
            )));
        }
        Ok(())
    }

    fn validate_nodes(&self) -> Result<()> {
        use SymbolExpr::*;
        match self {
            Mono { c, .. } => {
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(FockError::InvalidParameter("non-finite coefficient".into()));
                }
            }
            RadialPower { s } => {
                if !(*s >= 0.0) || !s.is_finite() {
                    return Err(FockError::InvalidParameter(format!(
                        "radial power exponent must be >= 0, got {s}"
                    )));
                }
            }
            RadialSin { omega } => {
                if !omega.is_finite() {
                    return Err(FockError::InvalidParameter("sin frequency must be finite".into()));
                }
            }
            RadialExpQ { s } => {
                if !(s.abs() <= EXPQ_BOUND) {
                    return Err(FockError::Admissibility(format!(
                        "expq({s}) needs |s| <= {EXPQ_BOUND}"
                    )));
                }
            }
            Angular { .. } => {}
            IndicatorAnnulus { center, a, b } => {
                if !(center.re.is_finite() && center.im.is_finite()) || !(*a >= 0.0) || !(b > a) || !b.is_finite() {
                    return Err(FockError::InvalidParameter(format!(
                        "indicator annulus needs 0 <= a < b, got a = {a}, b = {b}"
                    )));
                }
            }
            Sum { terms } => {
                for t in terms {
                    t.validate_nodes()?;
                }
            }
            Product { left, right } => {
                left.validate_nodes()?;
                right.validate_nodes()?;
            }
            Conj { child } => child.validate_nodes()?,
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        use SymbolExpr::*;
        match self {
            Sum { terms } => 1 + terms.iter().map(|t| t.depth()).max().unwrap_or(0),
            Product { left, right } => 1 + left.depth().max(right.depth()),
            Conj { child } => 1 + child.depth(),
            _ => 1,
        }
    }

    /// Pointwise value.
    pub fn eval(&self, v: Complex64) -> Complex64 {
        use SymbolExpr::*;
        match self {
            Mono { a, b, c } => c * v.powu(*a) * v.conj().powu(*b),
            RadialPower { s } => {
                if *s == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(v.norm().powf(*s), 0.0)
                }
            }
            RadialSin { omega } => Complex64::new((omega * v.norm()).sin(), 0.0),
            RadialExpQ { s } => Complex64::new((s * v.norm_sqr()).exp(), 0.0),
            Angular { k } => {
                let r = v.norm();
                if r == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    (v / r).powi(*k)
                }
            }
            IndicatorAnnulus { center, a, b } => {
                let d = (v - center).norm();
                if *a <= d && d <= *b {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Sum { terms } => terms.iter().map(|t| t.eval(v)).sum(),
            Product { left, right } => left.eval(v) * right.eval(v),
            Conj { child } => child.eval(v).conj(),
        }
    }

    /// All indicator atoms as `(center, a, b)`.
    pub fn indicator_annuli(&self) -> Vec<(Complex64, f64, f64)> {
        let mut out = Vec::new();
        self.visit(&mut |g| {
            if let SymbolExpr::IndicatorAnnulus { center, a, b } = g {
                out.push((*center, *a, *b));
            }
        });
        out
    }

    pub fn has_indicator(&self) -> bool {
        !self.indicator_annuli().is_empty()
    }

    fn visit<F: FnMut(&SymbolExpr)>(&self, f: &mut F) {
        f(self);
        match self {
            SymbolExpr::Sum { terms } => terms.iter().for_each(|t| t.visit(f)),
            SymbolExpr::Product { left, right } => {
                left.visit(f);
                right.visit(f);
            }
            SymbolExpr::Conj { child } => child.visit(f),
            _ => {}
        }
    }

    /// Rate `gamma` such that `|g(v)| <= C (1 + |v|)^N e^{gamma |v|^2}`.
    pub fn exp_growth(&self) -> f64 {
        use SymbolExpr::*;
        match self {
            RadialExpQ { s } => s.max(0.0),
            Sum { terms } => terms.iter().map(|t| t.exp_growth()).fold(0.0, f64::max),
            Product { left, right } => left.exp_growth() + right.exp_growth(),
            Conj { child } => child.exp_growth(),
            _ => 0.0,
        }
    }

    /// True when the symbol depends on `|z|` only.
    pub fn is_radial(&self) -> bool {
        use SymbolExpr::*;
        match self {
            Mono { a, b, .. } => a == b,
            RadialPower { .. } | RadialSin { .. } | RadialExpQ { .. } => true,
            Angular { k } => *k == 0,
            IndicatorAnnulus { center, .. } => center.norm() == 0.0,
            Sum { terms } => terms.iter().all(|t| t.is_radial()),
            Product { left, right } => left.is_radial() && right.is_radial(),
            Conj { child } => child.is_radial(),
        }
    }

    /// Largest angular frequency present, `None` when unbounded.
    pub fn angular_bandwidth(&self) -> Option<u32> {
        use SymbolExpr::*;
        match self {
            Mono { a, b, .. } => Some(a.abs_diff(*b)),
            RadialPower { .. } | RadialSin { .. } | RadialExpQ { .. } => Some(0),
            Angular { k } => Some(k.unsigned_abs()),
            IndicatorAnnulus { center, .. } => (center.norm() == 0.0).then_some(0),
            Sum { terms } => terms
                .iter()
                .map(|t| t.angular_bandwidth())
                .try_fold(0u32, |acc, b| b.map(|b| acc.max(b))),
            Product { left, right } => Some(left.angular_bandwidth()? + right.angular_bandwidth()?),
            Conj { child } => child.angular_bandwidth(),
        }
    }

    /// Expansion into terms `c r^alpha e^{i beta theta}` when the symbol is
    /// built from monomials, radial powers and angular atoms only.
    pub fn polar_terms(&self) -> Option<Vec<PolarTerm>> {
        use SymbolExpr::*;
        let one = Complex64::new(1.0, 0.0);
        let terms = match self {
            Mono { a, b, c } => vec![PolarTerm {
                c: *c,
                alpha: (a + b) as f64,
                beta: *a as i32 - *b as i32,
            }],
            RadialPower { s } => vec![PolarTerm {
                c: one,
                alpha: *s,
                beta: 0,
            }],
            Angular { k } => vec![PolarTerm {
                c: one,
                alpha: 0.0,
                beta: *k,
            }],
            Sum { terms } => {
                let mut out = Vec::new();
                for t in terms {
                    out.extend(t.polar_terms()?);
                }
                out
            }
            Product { left, right } => {
                let l = left.polar_terms()?;
                let r = right.polar_terms()?;
                if l.len() * r.len() > MAX_POLAR_TERMS {
                    return None;
                }
                let mut out = Vec::with_capacity(l.len() * r.len());
                for x in &l {
                    for y in &r {
                        out.push(PolarTerm {
                            c: x.c * y.c,
                            alpha: x.alpha + y.alpha,
                            beta: x.beta + y.beta,
                        });
                    }
                }
                out
            }
            Conj { child } => child
                .polar_terms()?
                .into_iter()
                .map(|t| PolarTerm {
                    c: t.c.conj(),
                    alpha: t.alpha,
                    beta: -t.beta,
                })
                .collect(),
            _ => return None,
        };
        Some(merge_polar_terms(terms))
    }

    /// True for polynomials in `z` alone (entire, so `H_g` vanishes on
    /// polynomials).
    pub fn is_analytic_polynomial(&self) -> bool {
        match self.polar_terms() {
            Some(terms) => terms
                .iter()
                .all(|t| t.c == Complex64::new(0.0, 0.0) || (t.beta >= 0 && t.alpha == t.beta as f64)),
            None => false,
        }
    }

    /// Canonical form: the tree the parser produces from this symbol's
    /// printed text.
    pub fn canonical(&self) -> SymbolExpr {
        parse::canonicalize(self)
    }
}

/// Combines terms with equal `(alpha, beta)` and drops exact zeros.
pub fn merge_polar_terms(terms: Vec<PolarTerm>) -> Vec<PolarTerm> {
    let mut out: Vec<PolarTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        if let Some(e) = out
            .iter_mut()
            .find(|e| e.beta == t.beta && e.alpha == t.alpha)
        {
            e.c += t.c;
        } else {
            out.push(t);
        }
    }
    out.retain(|t| t.c != Complex64::new(0.0, 0.0));
    out
}

impl std::fmt::Display for SymbolExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&parse::print(self))
    }
}

/// Evaluates `g` at `v`.
pub fn eval_symbol(g: &SymbolExpr, v: Complex64) -> Complex64 {
    g.eval(v)
}

//! Stable evaluation of the truncated exponential family and of the
//! reproducing kernel.
//!
//! `E_m(w) = (e^w - Q_m(w)) / w^m = sum_{k>=0} w^k / (k+m)!` where `Q_m` is the
//! Taylor polynomial of `e^w` of order `m - 1` (`Q_0 = 0`). Kernel-sized values
//! are carried as [`LogComplex`] since `e^{|z|^2}` overflows doubles at
//! `|z| ~ 27`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};
use crate::quadrature::gauss::{gauss_legendre, GaussLegendre};

/// Largest supported Sobolev order.
pub const MAX_ORDER: u32 = 32;

/// Largest `logmag` that still converts to a finite double.
pub const MAX_FINITE_LOGMAG: f64 = 709.0;

fn factorial_table() -> &'static [f64; 171] {
    static TABLE: OnceLock<[f64; 171]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [1.0f64; 171];
        for k in 1..171 {
            t[k] = t[k - 1] * k as f64;
        }
        t
    })
}

fn ln_factorial_table() -> &'static [f64; 171] {
    static TABLE: OnceLock<[f64; 171]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let f = factorial_table();
        let mut t = [0.0f64; 171];
        for k in 0..171 {
            t[k] = f[k].ln();
        }
        t
    })
}

/// `n!` for `n <= 170`.
pub fn factorial(n: u32) -> f64 {
    factorial_table()[n as usize]
}

/// `ln n!`, exact table up to 170 and `ln Gamma` beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if n <= 170 {
        ln_factorial_table()[n as usize]
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// Sobolev order `m`, validated against [`MAX_ORDER`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelParams {
    m: u32,
}

impl KernelParams {
    pub fn new(m: u32) -> Result<Self> {
        check_order(m)?;
        Ok(KernelParams { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }
}

pub(crate) fn check_order(m: u32) -> Result<()> {
    if m > MAX_ORDER {
        return Err(FockError::InvalidParameter(format!(
            "Sobolev order m = {m} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

fn wrap_phase(phase: f64) -> f64 {
    if !phase.is_finite() {
        return 0.0;
    }
    let p = phase.rem_euclid(2.0 * PI);
    if p > PI {
        p - 2.0 * PI
    } else {
        p
    }
}

/// A complex number stored as `(ln |c|, arg c)`.
///
/// `logmag = -inf` encodes zero, in which case `phase = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    pub logmag: f64,
    pub phase: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        logmag: f64::NEG_INFINITY,
        phase: 0.0,
    };
    pub const ONE: LogComplex = LogComplex {
        logmag: 0.0,
        phase: 0.0,
    };

    pub fn new(logmag: f64, phase: f64) -> Self {
        if logmag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogComplex {
            logmag,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    pub fn from_complex(c: Complex64) -> Self {
        if c.re == 0.0 && c.im == 0.0 {
            return Self::ZERO;
        }
        LogComplex::new(c.norm().ln(), c.arg())
    }

    /// `e^w` without ever leaving log scale.
    pub fn exp(w: Complex64) -> Self {
        LogComplex::new(w.re, w.im)
    }

    pub fn is_zero(&self) -> bool {
        self.logmag == f64::NEG_INFINITY
    }

    /// Down-conversion with an overflow check.
    pub fn to_complex(self) -> Result<Complex64> {
        if self.logmag > MAX_FINITE_LOGMAG || self.logmag.is_nan() {
            return Err(FockError::Overflow {
                logmag: self.logmag,
            });
        }
        Ok(self.to_complex_unchecked())
    }

    /// Down-conversion that may produce infinities.
    pub fn to_complex_unchecked(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.logmag.exp(), self.phase)
    }

    pub fn magnitude(self) -> f64 {
        self.logmag.exp()
    }

    pub fn conj(self) -> Self {
        LogComplex::new(self.logmag, -self.phase)
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.logmag + other.logmag, self.phase + other.phase)
    }

    pub fn div(self, other: Self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.logmag - other.logmag, self.phase - other.phase)
    }

    /// Multiplies the magnitude by `exp(ln_factor)`.
    pub fn scale_ln(self, ln_factor: f64) -> Self {
        if self.is_zero() {
            return self;
        }
        LogComplex::new(self.logmag + ln_factor, self.phase)
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.logmag * n as f64, self.phase * n as f64)
    }

    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.logmag >= other.logmag {
            (self, other)
        } else {
            (other, self)
        };
        let rel = Complex64::from_polar((small.logmag - big.logmag).exp(), small.phase - big.phase);
        let s = Complex64::new(1.0, 0.0) + rel;
        // below the rounding level of the larger operand
        if s.norm() <= 4.0 * f64::EPSILON {
            return Self::ZERO;
        }
        LogComplex::new(big.logmag + s.norm().ln(), big.phase + s.arg())
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    pub fn neg(self) -> Self {
        if self.is_zero() {
            return self;
        }
        LogComplex::new(self.logmag, self.phase + PI)
    }
}

/// Taylor polynomial of `e^w` of order `m - 1`; zero for `m = 0`.
pub fn eval_qm(m: u32, w: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 0..m {
        sum += term;
        term = term * w / (k + 1) as f64;
    }
    sum
}

/// `Q_m(w)` accumulated in log scale, usable for any `|w|`.
fn eval_qm_log(m: u32, w: Complex64) -> LogComplex {
    let lw = LogComplex::from_complex(w);
    let mut acc = LogComplex::ZERO;
    for k in 0..m {
        let term = lw.powi(k as i32).scale_ln(-ln_factorial(k as u64));
        acc = acc.add(term);
    }
    acc
}

/// Radius up to which `eval_em` uses the near-origin evaluation.
pub fn branch_radius(m: u32) -> f64 {
    f64::max(30.0, 2.0 * m as f64)
}

/// Condition number above which the near branch abandons the closed form.
const NEAR_CLOSED_FORM_MAX_COND: f64 = 1e3;

const REMAINDER_NODES: usize = 128;

fn remainder_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<std::sync::Arc<GaussLegendre>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(REMAINDER_NODES).expect("Gauss-Legendre construction"))
}

/// Power series `sum_k w^k/(k+m)!`, accurate for `|w| <= 1`.
fn em_taylor(m: u32, w: Complex64) -> Complex64 {
    let mut term = Complex64::new(1.0 / factorial(m), 0.0);
    let mut sum = term;
    for k in 1..200u32 {
        term = term * w / (k + m) as f64;
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// Taylor-remainder integral
/// `E_m(w) = 1/(m-1)! * int_0^1 (1-s)^{m-1} e^{ws} ds` for `m >= 1`,
/// evaluated by a 128-point Gauss-Legendre rule with the growth of `e^{ws}`
/// factored out.
fn em_remainder_integral(m: u32, w: Complex64) -> LogComplex {
    debug_assert!(m >= 1);
    let shift = w.re.max(0.0);
    let rule = remainder_rule();
    let mut sum = Complex64::new(0.0, 0.0);
    for (s, wt) in rule.on_interval(0.0, 1.0) {
        let envelope = (1.0 - s).powi(m as i32 - 1);
        sum += (w * s - shift).exp() * (wt * envelope);
    }
    LogComplex::from_complex(sum).scale_ln(shift - ln_factorial(m as u64 - 1))
}

/// Near-origin evaluation of `E_m`, valid for `|w| <= branch_radius(m)`.
///
/// Uses the power series for `|w| <= 1`, the closed form when its condition
/// number is below 1e3, and the Taylor-remainder integral otherwise.
pub fn em_near(m: u32, w: Complex64) -> LogComplex {
    if m == 0 {
        return LogComplex::exp(w);
    }
    let a = w.norm();
    if a <= 1.0 {
        return LogComplex::from_complex(em_taylor(m, w));
    }
    let ew = w.exp();
    let q = eval_qm(m, w);
    let diff = ew - q;
    let mut scale = ew.norm();
    let mut t = 1.0;
    for k in 0..m {
        scale += t;
        t *= a / (k + 1) as f64;
    }
    if diff.norm() * NEAR_CLOSED_FORM_MAX_COND >= scale && diff.norm().is_finite() {
        return LogComplex::from_complex(diff).div(LogComplex::from_complex(w).powi(m as i32));
    }
    em_remainder_integral(m, w)
}

/// The remainder-integral route alone; exposed for cross-checks.
pub fn em_integral(m: u32, w: Complex64) -> LogComplex {
    if m == 0 {
        return LogComplex::exp(w);
    }
    if w.norm() <= 1.0 {
        return LogComplex::from_complex(em_taylor(m, w));
    }
    em_remainder_integral(m, w)
}

/// Closed form `(e^w - Q_m(w)) / w^m` evaluated entirely in log scale.
pub fn em_far(m: u32, w: Complex64) -> LogComplex {
    if m == 0 {
        return LogComplex::exp(w);
    }
    let numer = LogComplex::exp(w).sub(eval_qm_log(m, w));
    numer.div(LogComplex::from_complex(w).powi(m as i32))
}

/// `E_m(w) = sum_{k>=0} w^k/(k+m)!`.
pub fn eval_em(m: u32, w: Complex64) -> LogComplex {
    debug_assert!(m <= MAX_ORDER);
    let a = w.norm();
    if a == 0.0 {
        return LogComplex::from_real(1.0 / factorial(m));
    }
    if a <= branch_radius(m) {
        em_near(m, w)
    } else {
        em_far(m, w)
    }
}

/// Reproducing kernel `K^m(v, z) = K_z^m(v) = m! E_m(conj(z) v)`.
pub fn kernel(m: u32, z: Complex64, v: Complex64) -> LogComplex {
    eval_em(m, z.conj() * v).scale_ln(ln_factorial(m as u64))
}

/// `ln K^m(z, z)`, which is real.
pub fn ln_kernel_diag(m: u32, z: Complex64) -> f64 {
    kernel(m, z, z).logmag
}

/// `k_z^m(v) v^m e^{-|v|^2/2}`, the normalized kernel in the weighted form
/// whose magnitude stays bounded uniformly in `z` and `v`.
pub fn normalized_kernel_weighted(m: u32, z: Complex64, v: Complex64) -> LogComplex {
    let lv = LogComplex::from_complex(v);
    if m > 0 && lv.is_zero() {
        return LogComplex::ZERO;
    }
    let num = kernel(m, z, v);
    let diag = ln_kernel_diag(m, z);
    let weight = lv.powi(m as i32).scale_ln(-0.5 * v.norm_sqr());
    num.mul(weight).scale_ln(-0.5 * diag)
}

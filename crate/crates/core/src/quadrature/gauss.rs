//! One-dimensional Gauss rules built from the three-term recurrence of the
//! orthogonal polynomials (Golub-Welsch), with Newton polishing of the nodes
//! and weights taken from closed-form polynomial identities.
//!
//! Laguerre weights are kept in log form: for large nodes they underflow long
//! before the monomials they multiply overflow.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::ln_gamma;

use crate::error::{FockError, Result};

/// Eigenvalues of the symmetric tridiagonal matrix with the given diagonal and
/// sub-diagonal, by implicit QL iteration. Fails when the total number of
/// iterations exceeds `100 * n`.
pub fn tridiagonal_eigenvalues(diag: &[f64], offdiag: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if offdiag.len() + 1 != n {
        return Err(FockError::InvalidParameter(format!(
            "off-diagonal length {} does not match diagonal length {}",
            offdiag.len(),
            n
        )));
    }
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);

    let max_iter = 100 * n;
    let mut total = 0usize;
    for l in 0..n {
        loop {
            let mut mm = l;
            while mm < n - 1 {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            total += 1;
            if total > max_iter {
                return Err(FockError::NonConvergence {
                    what: "tridiagonal QL iteration".into(),
                    iterations: total,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = mm;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    Ok(d)
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn legendre_with_prev(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FockError::InvalidParameter("Gauss-Legendre needs n >= 1".into()));
        }
        let diag = vec![0.0; n];
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            })
            .collect();
        let mut nodes = tridiagonal_eigenvalues(&diag, &off)?;
        let mut weights = Vec::with_capacity(n);
        let nf = n as f64;
        for x in nodes.iter_mut() {
            let mut dp = 0.0;
            for _ in 0..3 {
                let (p, pm) = legendre_with_prev(n, *x);
                dp = nf * (*x * p - pm) / (*x * *x - 1.0);
                let step = p / dp;
                *x -= step;
                if step.abs() < 1e-17 {
                    break;
                }
            }
            let (p, pm) = legendre_with_prev(n, *x);
            if p.is_finite() {
                dp = nf * (*x * p - pm) / (*x * *x - 1.0);
            }
            weights.push(2.0 / ((1.0 - *x * *x) * dp * dp));
        }
        // enforce exact symmetry
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

/// Shared, lazily built Gauss-Legendre rules.
pub fn gauss_legendre(n: usize) -> Result<Arc<GaussLegendre>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(GaussLegendre::new(n)?);
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert(n, rule.clone());
    Ok(rule)
}

/// Generalized Gauss-Laguerre rule for the weight `t^alpha e^{-t}` on `(0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLaguerre {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

/// Returns `(L_n, L_{n-1}, log_scale)` with the true values equal to the
/// returned ones times `exp(log_scale)`.
fn laguerre_scaled(n: usize, alpha: f64, t: f64) -> (f64, f64, f64) {
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - t;
    let mut log_scale = 0.0;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - t) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            cur *= 1e-150;
            prev *= 1e-150;
            log_scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (cur, prev, log_scale)
}

impl GaussLaguerre {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FockError::InvalidParameter("Gauss-Laguerre needs n >= 1".into()));
        }
        if !(alpha > -1.0) || !alpha.is_finite() {
            return Err(FockError::InvalidParameter(format!(
                "Gauss-Laguerre alpha must exceed -1, got {alpha}"
            )));
        }
        let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
        let off: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                (k * (k + alpha)).sqrt()
            })
            .collect();
        let mut nodes = tridiagonal_eigenvalues(&diag, &off)?;
        let nf = n as f64;
        let mut log_weights = Vec::with_capacity(n);
        let log_norm = ln_gamma(nf + alpha + 1.0) - ln_gamma(nf + 1.0);
        for t in nodes.iter_mut() {
            for _ in 0..4 {
                let (ln, lnm1, _) = laguerre_scaled(n, alpha, *t);
                let deriv = (nf * ln - (nf + alpha) * lnm1) / *t;
                let step = ln / deriv;
                if !step.is_finite() {
                    break;
                }
                *t -= step;
                if step.abs() <= 1e-16 * t.abs() {
                    break;
                }
            }
            let (ln, lnm1, scale) = laguerre_scaled(n, alpha, *t);
            let deriv = (nf * ln - (nf + alpha) * lnm1) / *t;
            log_weights.push(log_norm - t.ln() - 2.0 * (deriv.abs().ln() + scale));
        }
        Ok(GaussLaguerre {
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

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }
}

//! Numerical checks of the quantitative estimates behind the theory:
//! growth integrals, the weighted exponential series, the pointwise kernel
//! bound and the sampled equivalences between Berezin and disk-mean
//! oscillation. Every check returns a [`LemmaReport`].

use std::fmt::Write as _;
use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::berezin::{berezin, default_berezin_sizes, mean_oscillation_with_center, DEFAULT_RHO, DEFAULT_Z_MIN};
use crate::error::{FockError, Result};
use crate::quadrature::{CompensatedSum, DiskRule, DiskSizes};
use crate::spaces::{
    bin_profile, bo_at, disk_mean, disk_oscillation, disk_oscillation_about, is_diverging, is_vanishing, LatticeSpec,
    MeanKind, DEFAULT_TOL_VANISH,
};
use crate::stablefun::{check_order, eval_em, ln_factorial};
use crate::symbols::{CatalogEntry, SymbolExpr};

/// Budget multiplier applied to the constant measured on the inner half of
/// a grid.
pub const BUDGET_FACTOR: f64 = 10.0;

/// Profiles whose last bin stays below this level are never called
/// diverging.
pub const DIVERGENCE_FLOOR: f64 = 1e-6;

/// Largest `|z|` accepted by the growth-integral check.
pub const LEMMA21_MAX_Z: f64 = 10.0;

/// Largest `|z|`, `|v|` accepted by the kernel-bound check.
pub const KERNEL_BOUND_MAX: f64 = 12.0;

/// Largest `y` accepted by the series check.
pub const SERIES_MAX_Y: f64 = 700.0;

/// Relative size below which series terms are dropped.
pub const SERIES_CUTOFF: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Measured ratios stay within budget.
    Bounded,
    /// Every evaluated condition agrees with the others and with the tags.
    Agree,
    Violated,
}

impl Verdict {
    pub fn is_violated(self) -> bool {
        self == Verdict::Violated
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Bounded => "bounded",
            Verdict::Agree => "agree",
            Verdict::Violated => "violated",
        }
    }
}

/// Verdicts of one condition of an equivalence check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub name: String,
    /// Largest value over lattice points with `|z| >= z_min`.
    pub sup_tail: f64,
    /// Profile bins beyond `z_min`.
    pub profile: Vec<(f64, f64)>,
    pub verdict: bool,
}

/// Outcome of a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub params: Vec<(String, String)>,
    /// Names of the grid coordinates.
    pub axes: Vec<String>,
    pub grid: Vec<Vec<f64>>,
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmax: Vec<f64>,
    /// Upper budget on the ratio, when the check has one.
    pub budget: Option<f64>,
    /// Lower budget on the ratio, when the check has one.
    pub lower_budget: Option<f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub conditions: Vec<ConditionVerdict>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    /// Wall time; excluded from serialized output so reports stay
    /// reproducible.
    #[serde(skip)]
    pub runtime: Duration,
}

impl LemmaReport {
    fn new(lemma: &str, params: Vec<(String, String)>, axes: &[&str], grid: Vec<Vec<f64>>, ratios: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != ratios.len() {
            return Err(FockError::InvalidParameter("check grid must be non-empty".into()));
        }
        let (mut lo, mut hi, mut arg) = (f64::INFINITY, f64::NEG_INFINITY, 0);
        for (i, r) in ratios.iter().enumerate() {
            lo = lo.min(*r);
            if *r > hi {
                hi = *r;
                arg = i;
            }
        }
        Ok(LemmaReport {
            lemma: lemma.into(),
            params,
            axes: axes.iter().map(|s| s.to_string()).collect(),
            argmax: grid[arg].clone(),
            grid,
            ratios,
            min_ratio: lo,
            max_ratio: hi,
            budget: None,
            lower_budget: None,
            verdict: Verdict::Bounded,
            conditions: Vec::new(),
            notes: Vec::new(),
            runtime: Duration::ZERO,
        })
    }

    /// Human-readable summary table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "check       {}", self.lemma);
        for (k, v) in &self.params {
            let _ = writeln!(s, "  {k:<10}{v}");
        }
        let _ = writeln!(s, "grid        {} points", self.grid.len());
        let _ = writeln!(s, "min ratio   {:e}", self.min_ratio);
        let _ = writeln!(s, "max ratio   {:e}", self.max_ratio);
        let arg: Vec<String> = self.axes.iter().zip(&self.argmax).map(|(a, v)| format!("{a}={v}")).collect();
        let _ = writeln!(s, "argmax      {}", arg.join(" "));
        if let Some(b) = self.budget {
            let _ = writeln!(s, "budget      {b:e}");
        }
        if let Some(b) = self.lower_budget {
            let _ = writeln!(s, "lower       {b:e}");
        }
        for c in &self.conditions {
            let _ = writeln!(s, "condition   {:<26} {:<6} sup {:e}", c.name, c.verdict, c.sup_tail);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note        {n}");
        }
        let _ = writeln!(s, "verdict     {}", self.verdict.as_str());
        s
    }

    /// One row per grid point: the grid coordinates and the ratio.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| FockError::InvalidParameter(format!("csv output failed: {e}"));
        let mut wr = csv::Writer::from_writer(w);
        let mut header = self.axes.clone();
        header.push("ratio".into());
        wr.write_record(&header).map_err(io)?;
        for (p, r) in self.grid.iter().zip(&self.ratios) {
            let mut row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            row.push(r.to_string());
            wr.write_record(&row).map_err(io)?;
        }
        wr.flush().map_err(|e| FockError::InvalidParameter(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

/// Indices of the points whose size key is at most the median key.
fn inner_half(keys: &[f64]) -> Vec<usize> {
    let mut sorted = keys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[(sorted.len() - 1) / 2];
    (0..keys.len()).filter(|&i| keys[i] <= median).collect()
}

/// Upper budget: [`BUDGET_FACTOR`] times the largest ratio on the inner
/// half of the grid.
fn upper_budget(keys: &[f64], ratios: &[f64]) -> f64 {
    BUDGET_FACTOR * inner_half(keys).into_iter().map(|i| ratios[i]).fold(f64::NEG_INFINITY, f64::max)
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(FockError::InvalidParameter(format!("{name} must be positive and finite, got {x}")));
    }
    Ok(())
}

/// Real points `sigma, sigma + 1/2, ...` up to 10.
pub fn default_lemma21_grid(sigma: f64) -> Vec<Complex64> {
    let mut out = Vec::new();
    let mut t = sigma;
    while t <= LEMMA21_MAX_Z + 1e-12 {
        out.push(Complex64::new(t, 0.0));
        t += 0.5;
    }
    out
}

/// `ln |e^u - Q_m(u)|`.
fn ln_abs_exp_tail(m: u32, u: Complex64) -> f64 {
    if m == 0 {
        return u.re;
    }
    if u.norm() == 0.0 {
        return f64::NEG_INFINITY;
    }
    m as f64 * u.norm().ln() + eval_em(m, u).logmag
}

/// `ln int |e^{conj(z) w} - Q_m(conj(z) w)|^{p'} e^{-c|w|^2} |w|^d dA(w)`,
/// on a disk centred at the peak `p' z / (2c)`.
fn ln_growth_integral(m: u32, p_prime: f64, c: f64, d: u32, z: Complex64) -> Result<f64> {
    let w0 = z * (p_prime / (2.0 * c));
    let spread = ((40.0 + d as f64 + m as f64 * p_prime) / c).sqrt();
    let radius = w0.norm() + spread;
    let sizes = DiskSizes {
        panels: (radius * c.sqrt()).ceil().max(1.0) as usize,
        n_radial: 16,
        n_angular: 96 + 8 * d as usize,
    };
    let rule = DiskRule::new(w0, radius, sizes)?;
    let terms: Vec<f64> = rule
        .nodes()
        .map(|(w, wt)| {
            let mut l = p_prime * ln_abs_exp_tail(m, z.conj() * w) - c * w.norm_sqr() + wt.ln();
            if d > 0 {
                l += d as f64 * w.norm().ln();
            }
            l
        })
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(FockError::NonFinite {
            node: format!("z = {z}"),
            value: format!("{top}"),
        });
    }
    let mut acc = CompensatedSum::new();
    for l in &terms {
        acc.add(Complex64::new((l - top).exp(), 0.0));
    }
    Ok(top + acc.value().re.ln())
}

/// Ratio of the growth integral to `|z|^d e^{(p'^2/4c)|z|^2}` over
/// `z_grid`, which must lie in `sigma <= |z| <= 10`.
pub fn check_lemma21(m: u32, p_prime: f64, c: f64, d: u32, sigma: f64, z_grid: &[Complex64]) -> Result<LemmaReport> {
    let start = Instant::now();
    check_order(m)?;
    check_positive("p'", p_prime)?;
    check_positive("c", c)?;
    check_positive("sigma", sigma)?;
    if d % 2 != 0 {
        return Err(FockError::InvalidParameter(format!("d must be even, got {d}")));
    }
    if z_grid.is_empty() {
        return Err(FockError::InvalidParameter("z grid is empty".into()));
    }
    for z in z_grid {
        let r = z.norm();
        if r < sigma * (1.0 - 1e-12) || r > LEMMA21_MAX_Z * (1.0 + 1e-12) {
            return Err(FockError::InvalidParameter(format!(
                "grid point {z} outside {sigma} <= |z| <= {LEMMA21_MAX_Z}"
            )));
        }
    }
    let mut ratios = Vec::with_capacity(z_grid.len());
    for z in z_grid {
        let r = z.norm();
        let ln_den = d as f64 * r.ln() + p_prime * p_prime / (4.0 * c) * r * r;
        let ratio = (ln_growth_integral(m, p_prime, c, d, *z)? - ln_den).exp();
        if !ratio.is_finite() || ratio == 0.0 {
            return Err(FockError::NonFinite {
                node: format!("m = {m}, p' = {p_prime}, c = {c}, d = {d}, z = {z}"),
                value: format!("{ratio}"),
            });
        }
        ratios.push(ratio);
    }
    let keys: Vec<f64> = z_grid.iter().map(|z| z.norm()).collect();
    let params = vec![
        ("m".into(), m.to_string()),
        ("p'".into(), p_prime.to_string()),
        ("c".into(), c.to_string()),
        ("d".into(), d.to_string()),
        ("sigma".into(), sigma.to_string()),
    ];
    let grid = z_grid.iter().map(|z| vec![z.re, z.im]).collect();
    let mut rep = LemmaReport::new("lemma21", params, &["z_re", "z_im"], grid, ratios)?;
    let budget = upper_budget(&keys, &rep.ratios);
    rep.budget = Some(budget);
    rep.verdict = if rep.max_ratio <= budget { Verdict::Bounded } else { Verdict::Violated };
    rep.runtime = start.elapsed();
    Ok(rep)
}

/// `e^{-y} sum_k (y/(k+1))^t y^k / k!`, summed outward from the mode with
/// multiplicative term updates.
pub fn series_ratio(t: f64, y: f64) -> f64 {
    if y == 0.0 {
        return if t == 0.0 {
            1.0
        } else if t > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let k0 = y.floor() as u64;
    let ln_y = y.ln();
    let ln_t0 = t * (ln_y - ((k0 + 1) as f64).ln()) + k0 as f64 * ln_y - ln_factorial(k0) - y;
    let t0 = ln_t0.exp();
    let mut acc = CompensatedSum::new();
    acc.add(Complex64::new(t0, 0.0));
    let mut peak = t0;

    let mut term = t0;
    let mut k = k0;
    loop {
        // T_{k+1} / T_k = y/(k+1) ((k+1)/(k+2))^t
        term *= y / (k + 1) as f64 * (((k + 1) as f64) / ((k + 2) as f64)).powf(t);
        k += 1;
        acc.add(Complex64::new(term, 0.0));
        peak = peak.max(term);
        if (term < SERIES_CUTOFF * peak && k as f64 > y) || term == 0.0 || k > k0 + 100_000 {
            break;
        }
    }
    let mut term = t0;
    let mut k = k0;
    while k > 0 {
        // T_{k-1} / T_k = k/y ((k+1)/k)^t
        term *= k as f64 / y * (((k + 1) as f64) / (k as f64)).powf(t);
        k -= 1;
        acc.add(Complex64::new(term, 0.0));
        peak = peak.max(term);
        if term < SERIES_CUTOFF * peak || term == 0.0 {
            break;
        }
    }
    acc.value().re
}

/// `y = 1, 2, ..., floor(ymax)`.
pub fn default_series_grid(ymax: f64) -> Vec<f64> {
    (1..=(ymax.floor().max(1.0) as u64)).map(|y| y as f64).collect()
}

/// Two-sided bounds on `S(y, t) / e^y`. The upper budget applies to the
/// whole grid, the lower one to `y >= big_m`.
pub fn check_lemma23_series(t: f64, y_grid: &[f64], big_m: f64) -> Result<LemmaReport> {
    let start = Instant::now();
    if !t.is_finite() {
        return Err(FockError::InvalidParameter(format!("t must be finite, got {t}")));
    }
    if !(big_m >= 0.0) || !big_m.is_finite() {
        return Err(FockError::InvalidParameter(format!("M must be >= 0, got {big_m}")));
    }
    if let Some(y) = y_grid.iter().find(|y| !(**y >= 0.0 && **y <= SERIES_MAX_Y)) {
        return Err(FockError::InvalidParameter(format!("y = {y} outside [0, {SERIES_MAX_Y}]")));
    }
    let ratios: Vec<f64> = y_grid.iter().map(|y| series_ratio(t, *y)).collect();
    let params = vec![("t".into(), t.to_string()), ("M".into(), big_m.to_string())];
    let grid = y_grid.iter().map(|y| vec![*y]).collect();
    let mut rep = LemmaReport::new("lemma23", params, &["y"], grid, ratios)?;
    let upper = upper_budget(y_grid, &rep.ratios);
    let far: Vec<usize> = (0..y_grid.len()).filter(|&i| y_grid[i] >= big_m).collect();
    let mut ok = rep.max_ratio <= upper;
    if !far.is_empty() {
        let keys: Vec<f64> = far.iter().map(|&i| y_grid[i]).collect();
        let inner = inner_half(&keys);
        let lower = inner.iter().map(|&j| rep.ratios[far[j]]).fold(f64::INFINITY, f64::min) / BUDGET_FACTOR;
        let lowest = far.iter().map(|&i| rep.ratios[i]).fold(f64::INFINITY, f64::min);
        ok &= lowest >= lower && lowest > 0.0;
        rep.lower_budget = Some(lower);
    }
    rep.budget = Some(upper);
    rep.verdict = if ok { Verdict::Bounded } else { Verdict::Violated };
    rep.runtime = start.elapsed();
    Ok(rep)
}

/// `|E_m(z conj(v))| (1 + |z||v|)^m / e^{|z|^2/2 + |v|^2/2 - |z - v|^2/8}`,
/// formed from logarithms.
pub fn kernel_bound_ratio(m: u32, z: Complex64, v: Complex64) -> f64 {
    let ln_num = eval_em(m, z * v.conj()).logmag + m as f64 * (1.0 + z.norm() * v.norm()).ln();
    let ln_den = 0.5 * z.norm_sqr() + 0.5 * v.norm_sqr() - 0.125 * (z - v).norm_sqr();
    (ln_num - ln_den).exp()
}

/// `10^4` pairs: every pair of points of a 10 x 10 polar grid with radii
/// `1.2 (i + 1/2)` and angles `2 pi j / 10 + 0.1`.
pub fn default_kernel_pairs() -> Vec<(Complex64, Complex64)> {
    let pts: Vec<Complex64> = (0..10)
        .flat_map(|i| {
            (0..10).map(move |j| {
                Complex64::from_polar(1.2 * (i as f64 + 0.5), 2.0 * std::f64::consts::PI * j as f64 / 10.0 + 0.1)
            })
        })
        .collect();
    pts.iter().flat_map(|z| pts.iter().map(move |v| (*z, *v))).collect()
}

/// Pointwise kernel bound over `pairs` with `|z|, |v| <= 12`.
pub fn check_kernel_bound(m: u32, pairs: &[(Complex64, Complex64)]) -> Result<LemmaReport> {
    let start = Instant::now();
    check_order(m)?;
    if let Some((z, v)) = pairs
        .iter()
        .find(|(z, v)| !(z.norm() <= KERNEL_BOUND_MAX * (1.0 + 1e-12) && v.norm() <= KERNEL_BOUND_MAX * (1.0 + 1e-12)))
    {
        return Err(FockError::InvalidParameter(format!(
            "pair ({z}, {v}) outside |z|, |v| <= {KERNEL_BOUND_MAX}"
        )));
    }
    let ratios: Vec<f64> = pairs.iter().map(|(z, v)| kernel_bound_ratio(m, *z, *v)).collect();
    let keys: Vec<f64> = pairs.iter().map(|(z, v)| (z.norm_sqr() + v.norm_sqr()).sqrt()).collect();
    let grid = pairs.iter().map(|(z, v)| vec![z.re, z.im, v.re, v.im]).collect();
    let mut rep = LemmaReport::new(
        "kernel-bound",
        vec![("m".into(), m.to_string())],
        &["z_re", "z_im", "v_re", "v_im"],
        grid,
        ratios,
    )?;
    let budget = upper_budget(&keys, &rep.ratios);
    rep.budget = Some(budget);
    rep.verdict = if rep.max_ratio.is_finite() && rep.max_ratio <= budget {
        Verdict::Bounded
    } else {
        Verdict::Violated
    };
    rep.runtime = start.elapsed();
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    /// Boundedness of the three oscillation conditions.
    Thm28,
    /// Vanishing of the three oscillation conditions.
    Thm32,
}

impl std::str::FromStr for Theorem {
    type Err = FockError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thm28" => Ok(Theorem::Thm28),
            "thm32" => Ok(Theorem::Thm32),
            _ => Err(FockError::InvalidParameter(format!("unknown theorem '{s}' (expected thm28 or thm32)"))),
        }
    }
}

/// Numerical settings shared by the oscillation checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationSettings {
    pub rho: f64,
    pub z_min: f64,
    pub tol_vanish: f64,
    pub disk_sizes: DiskSizes,
    pub berezin_sizes: DiskSizes,
}

impl Default for OscillationSettings {
    fn default() -> Self {
        OscillationSettings {
            rho: DEFAULT_RHO,
            z_min: DEFAULT_Z_MIN,
            tol_vanish: DEFAULT_TOL_VANISH,
            disk_sizes: DiskSizes::default(),
            berezin_sizes: default_berezin_sizes(),
        }
    }
}

/// Known decomposition `g = g_o + g_a` into a vanishing-oscillation part and
/// a vanishing-average part, for catalog symbols where one is explicit.
fn known_split(name: &str, g: &SymbolExpr) -> Option<(SymbolExpr, SymbolExpr)> {
    let zero = SymbolExpr::constant(Complex64::new(0.0, 0.0));
    match name {
        "const" | "sqrt_abs" => Some((g.clone(), zero)),
        "disk_ind" | "gauss_bump" => Some((zero, g.clone())),
        _ => None,
    }
}

fn condition(name: &str, samples: &[(Complex64, f64)], theorem: Theorem, s: &OscillationSettings) -> ConditionVerdict {
    let profile: Vec<(f64, f64)> = bin_profile(samples).into_iter().filter(|(b, _)| *b >= s.z_min).collect();
    let sup_tail = samples
        .iter()
        .filter(|(z, _)| z.norm() >= s.z_min)
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let verdict = match theorem {
        Theorem::Thm28 => !is_diverging(&profile, s.z_min, DIVERGENCE_FLOOR),
        Theorem::Thm32 => is_vanishing(&profile, s.tol_vanish),
    };
    ConditionVerdict {
        name: name.into(),
        sup_tail,
        profile,
        verdict,
    }
}

/// Sampled equivalence of Berezin mean oscillation, disk-mean oscillation
/// about the disk average and disk-mean oscillation about the Berezin
/// transform. All values are `p`-th roots. Bounded verdicts use the
/// divergence detector, vanishing verdicts the tolerance test on the last
/// three profile bins, both restricted to `|z| >= z_min`.
pub fn check_equivalence_thm(
    theorem: Theorem,
    entry: &CatalogEntry,
    p: f64,
    r: f64,
    m: u32,
    lattice: &LatticeSpec,
    settings: &OscillationSettings,
) -> Result<LemmaReport> {
    let start = Instant::now();
    check_order(m)?;
    lattice.validate()?;
    let g = &entry.symbol;
    g.validate()?;
    let pts = lattice.points();
    let (mut berezin_mo, mut disk_avg, mut disk_ber) = (Vec::new(), Vec::new(), Vec::new());
    for z in &pts {
        let (mo, center) = mean_oscillation_with_center(g, *z, m, p, settings.rho, settings.berezin_sizes)?;
        berezin_mo.push((*z, mo.powf(1.0 / p)));
        disk_avg.push((*z, disk_oscillation(g, *z, r, p, settings.disk_sizes)?));
        disk_ber.push((*z, disk_oscillation_about(g, *z, r, p, center, settings.disk_sizes)?));
    }
    let mut conditions = vec![
        condition("berezin_mean_oscillation", &berezin_mo, theorem, settings),
        condition("disk_about_average", &disk_avg, theorem, settings),
        condition("disk_about_berezin", &disk_ber, theorem, settings),
    ];
    let mut notes = Vec::new();
    if theorem == Theorem::Thm32 {
        match known_split(&entry.name, g) {
            Some((go, ga)) => {
                let (mut osc, mut avg) = (Vec::new(), Vec::new());
                for z in &pts {
                    osc.push((*z, bo_at(&go, *z, r, settings.disk_sizes)?));
                    avg.push((*z, disk_mean(&ga, *z, r, MeanKind::Power(p), settings.disk_sizes)?.re.powf(1.0 / p)));
                }
                let a = condition("split_oscillation_part", &osc, theorem, settings);
                let b = condition("split_average_part", &avg, theorem, settings);
                conditions.push(ConditionVerdict {
                    name: "split_vo_plus_va".into(),
                    sup_tail: a.sup_tail.max(b.sup_tail),
                    profile: a.profile.iter().zip(&b.profile).map(|(x, y)| (x.0, x.1.max(y.1))).collect(),
                    verdict: a.verdict && b.verdict,
                });
            }
            None => notes.push(format!("no explicit oscillation/average split for '{}'; unchecked", entry.name)),
        }
    }
    let tag = match theorem {
        Theorem::Thm28 => entry.tags.bmo(p),
        Theorem::Thm32 => entry.tags.vmo(p),
    };
    let first = conditions[0].verdict;
    let mut agree = conditions.iter().all(|c| c.verdict == first);
    match tag {
        Some(t) => {
            if t != first {
                agree = false;
                notes.push(format!("catalog tag is {t}, conditions report {first}"));
            }
        }
        None => notes.push("catalog has no tag for this p".into()),
    }
    let small = pts.iter().filter(|z| z.norm() < settings.z_min).count();
    if small > 0 {
        notes.push(format!("{small} lattice points with |z| < {} reported but not judged", settings.z_min));
    }
    let params = vec![
        ("theorem".into(), format!("{theorem:?}").to_lowercase()),
        ("symbol".into(), entry.name.clone()),
        ("p".into(), p.to_string()),
        ("r".into(), r.to_string()),
        ("m".into(), m.to_string()),
        ("z_min".into(), settings.z_min.to_string()),
    ];
    let grid = pts.iter().map(|z| vec![z.re, z.im]).collect();
    let ratios = berezin_mo.iter().map(|(_, v)| *v).collect();
    let mut rep = LemmaReport::new(
        match theorem {
            Theorem::Thm28 => "thm28",
            Theorem::Thm32 => "thm32",
        },
        params,
        &["z_re", "z_im"],
        grid,
        ratios,
    )?;
    rep.conditions = conditions;
    rep.notes = notes;
    rep.verdict = if agree { Verdict::Agree } else { Verdict::Violated };
    rep.runtime = start.elapsed();
    Ok(rep)
}

/// Lower constant `a = r^2 e^{-r^2} / 2` in
/// `MO_p g(z) >= a * mean_{B(z; r)} |g - B_m g(z)|^p`.
pub fn disk_lower_constant(r: f64) -> f64 {
    0.5 * r * r * (-r * r).exp()
}

/// Ratio of the Berezin mean oscillation to the disk mean of
/// `|g - B_m g(z)|^p` at lattice points with `|z| > z_min`, checked against
/// [`disk_lower_constant`]. Points where the disk mean vanishes are skipped.
pub fn check_disk_lower_bound(
    g: &SymbolExpr,
    p: f64,
    r: f64,
    m: u32,
    lattice: &LatticeSpec,
    settings: &OscillationSettings,
) -> Result<LemmaReport> {
    let start = Instant::now();
    check_order(m)?;
    lattice.validate()?;
    g.validate()?;
    let (mut grid, mut ratios) = (Vec::new(), Vec::new());
    let mut skipped = 0;
    for z in lattice.points().into_iter().filter(|z| z.norm() > settings.z_min) {
        let (mo, center) = mean_oscillation_with_center(g, z, m, p, settings.rho, settings.berezin_sizes)?;
        let disk = disk_oscillation_about(g, z, r, p, center, settings.disk_sizes)?.powf(p);
        if disk <= 1e-300 {
            skipped += 1;
            continue;
        }
        grid.push(vec![z.re, z.im]);
        ratios.push(mo / disk);
    }
    let params = vec![
        ("p".into(), p.to_string()),
        ("r".into(), r.to_string()),
        ("m".into(), m.to_string()),
    ];
    if grid.is_empty() {
        return Err(FockError::InvalidParameter(
            "no lattice point beyond z_min with a non-zero disk oscillation".into(),
        ));
    }
    let mut rep = LemmaReport::new("disk-lower", params, &["z_re", "z_im"], grid, ratios)?;
    let a = disk_lower_constant(r);
    rep.lower_budget = Some(a);
    rep.verdict = if rep.min_ratio >= a { Verdict::Bounded } else { Verdict::Violated };
    if skipped > 0 {
        rep.notes.push(format!("{skipped} points with zero disk oscillation skipped"));
    }
    rep.runtime = start.elapsed();
    Ok(rep)
}

/// Sampled `sup_{w in B(z; r)} |B_m g(w) - B_m g(z)|`: the centre and two
/// rings of 16 points at radii `r/2` and `r`.
fn berezin_bo_at(g: &SymbolExpr, z: Complex64, r: f64, m: u32, s: &OscillationSettings) -> Result<f64> {
    let bz = berezin(g, z, m, s.rho, s.berezin_sizes)?.value;
    let mut best: f64 = 0.0;
    for rad in [0.5 * r, r] {
        for j in 0..16 {
            let w = z + Complex64::from_polar(rad, 2.0 * std::f64::consts::PI * j as f64 / 16.0);
            best = best.max((berezin(g, w, m, s.rho, s.berezin_sizes)?.value - bz).norm());
        }
    }
    Ok(best)
}

/// `(mean_{B(z; r)} |g - B_m g|^p)^{1/p}` on a coarse disk rule.
fn berezin_ba_at(g: &SymbolExpr, z: Complex64, r: f64, m: u32, p: f64, s: &OscillationSettings) -> Result<f64> {
    let sizes = DiskSizes {
        panels: 1,
        n_radial: 6,
        n_angular: 16,
    };
    let rule = DiskRule::for_symbol(z, r, sizes, g)?;
    let mut acc = 0.0;
    for (v, w) in rule.nodes() {
        let b = berezin(g, v, m, s.rho, s.berezin_sizes)?.value;
        acc += w * (g.eval(v) - b).norm().powf(p);
    }
    Ok((acc / rule.area()).powf(1.0 / p))
}

/// Oscillation of `B_m g` and average of `|g - B_m g|^p` over lattice
/// points with `|z| >= z_min + r`. Each is held to [`BUDGET_FACTOR`] times
/// its largest value on the inner half of the points.
pub fn check_berezin_split(
    g: &SymbolExpr,
    p: f64,
    r: f64,
    m: u32,
    lattice: &LatticeSpec,
    settings: &OscillationSettings,
) -> Result<LemmaReport> {
    let start = Instant::now();
    check_order(m)?;
    lattice.validate()?;
    g.validate()?;
    let pts: Vec<Complex64> = lattice.points().into_iter().filter(|z| z.norm() >= settings.z_min + r).collect();
    if pts.is_empty() {
        return Err(FockError::InvalidParameter("no lattice point beyond z_min + r".into()));
    }
    let (mut bo, mut ba) = (Vec::new(), Vec::new());
    for z in &pts {
        bo.push((*z, berezin_bo_at(g, *z, r, m, settings)?));
        ba.push((*z, berezin_ba_at(g, *z, r, m, p, settings)?));
    }
    let keys: Vec<f64> = pts.iter().map(|z| z.norm()).collect();
    let mut conditions = Vec::new();
    let mut ok = true;
    for (name, samples) in [("berezin_oscillation", &bo), ("average_of_difference", &ba)] {
        let vals: Vec<f64> = samples.iter().map(|(_, v)| *v).collect();
        let budget = upper_budget(&keys, &vals);
        let sup = vals.iter().copied().fold(0.0, f64::max);
        let within = sup <= budget;
        ok &= within;
        conditions.push(ConditionVerdict {
            name: name.into(),
            sup_tail: sup,
            profile: bin_profile(samples),
            verdict: within,
        });
    }
    let ratios: Vec<f64> = bo.iter().zip(&ba).map(|(a, b)| a.1.max(b.1)).collect();
    let grid = pts.iter().map(|z| vec![z.re, z.im]).collect();
    let params = vec![
        ("p".into(), p.to_string()),
        ("r".into(), r.to_string()),
        ("m".into(), m.to_string()),
    ];
    let mut rep = LemmaReport::new("berezin-split", params, &["z_re", "z_im"], grid, ratios)?;
    rep.budget = Some(upper_budget(&keys, &rep.ratios));
    rep.conditions = conditions;
    rep.verdict = if ok { Verdict::Bounded } else { Verdict::Violated };
    rep.runtime = start.elapsed();
    Ok(rep)
}

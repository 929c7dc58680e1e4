mod config;
mod literal;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fockso_core::berezin::{berezin_grid, carleson_lattice_check, BerezinQuantity, CarlesonMode};
use fockso_core::hankel::{
    build_section, compactness_verdict, default_directions, hankel_norm_p, kernel_probe, kernel_truncation,
    section_norm_with_tol,
};
use fockso_core::spaces::{
    bmo_norm, bo_norm, norm_pm, project, vanishing_profile, CoeffVector, Estimator, Operand, OscillationReport,
};
use fockso_core::stablefun::kernel;
use fockso_core::symbols::{lookup, parse_symbol, SymbolExpr};
use fockso_core::verify::{
    check_berezin_split, check_disk_lower_bound, check_equivalence_thm, check_kernel_bound, check_lemma21,
    check_lemma23_series, default_kernel_pairs, default_lemma21_grid, default_series_grid, LemmaReport,
    OscillationSettings, Theorem,
};
use fockso_core::FockError;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig, Settings};
use crate::literal::parse_complex;

/// Numerics on Fock-Sobolev spaces: kernels, norms, Berezin transforms,
/// oscillation estimators, Hankel sections and numerical checks.
///
/// Output goes to standard output as CSV (default) or JSON. Exit codes:
/// 0 success, 1 computation error, 2 usage or input error, 3 a verify
/// check reported "violated".
#[derive(Parser, Debug)]
#[command(name = "fockso", version)]
struct Cli {
    /// TOML configuration file with sections [general], [lattice],
    /// [spaces], [berezin], [hankel]; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write data output to FILE instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output format [default: csv].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct OrderArg {
    /// Order m of the space [default: 0].
    #[arg(long)]
    m: Option<u32>,
}

#[derive(Args, Debug, Default, Clone)]
struct SymbolArg {
    /// Symbol expression, e.g. "zb^1", "0.5*z^1 + 0.5*zb^1", "ind(0,0,1)".
    #[arg(long, allow_hyphen_values = true)]
    symbol: String,
}

#[derive(Args, Debug, Default, Clone)]
struct LatticeArgs {
    /// Lattice spacing [default: r/2].
    #[arg(long)]
    delta: Option<f64>,
    /// Lattice radius [default: 12].
    #[arg(long = "R")]
    big_r: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
struct PArg {
    /// Exponent p >= 1 [default: 2].
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
struct RArg {
    /// Disk radius r [default: 1].
    #[arg(long)]
    r: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reproducing kernel K^m(z, v).
    Kernel {
        #[command(flatten)]
        m: OrderArg,
        /// Point z as a+bi.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// Point v as a+bi.
        #[arg(long, allow_hyphen_values = true)]
        v: String,
    },
    /// Norm ||g||_{p,m}.
    Norm {
        #[command(flatten)]
        symbol: SymbolArg,
        #[command(flatten)]
        p: PArg,
        #[command(flatten)]
        m: OrderArg,
    },
    /// Coefficients of the projection of g onto b_0, ..., b_L.
    Project {
        #[command(flatten)]
        symbol: SymbolArg,
        #[command(flatten)]
        m: OrderArg,
        /// Truncation L [default: 64].
        #[arg(long = "L")]
        l: Option<usize>,
    },
    /// Berezin transform, Berezin transform of |g|^p, or Berezin mean
    /// oscillation over the lattice.
    Berezin {
        #[command(flatten)]
        symbol: SymbolArg,
        #[command(flatten)]
        m: OrderArg,
        #[command(flatten)]
        p: PArg,
        /// Quantity to evaluate [default: transform].
        #[arg(long, value_enum)]
        quantity: Option<QuantityArg>,
        /// Truncation radius rho >= 6 [default: 8].
        #[arg(long)]
        rho: Option<f64>,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Mean p-oscillation over disks of radius r on the lattice.
    Bmo {
        #[command(flatten)]
        symbol: SymbolArg,
        #[command(flatten)]
        p: PArg,
        #[command(flatten)]
        r: RArg,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Oscillation sup over disks of radius r on the lattice.
    Bo {
        #[command(flatten)]
        symbol: SymbolArg,
        #[command(flatten)]
        r: RArg,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Vanishing test of a BMO, BA or BO profile.
    Vanish {
        #[command(flatten)]
        symbol: SymbolArg,
        /// Estimator [default: bmo].
        #[arg(long, value_enum)]
        estimator: Option<EstimatorArg>,
        #[command(flatten)]
        p: PArg,
        #[command(flatten)]
        r: RArg,
        /// Vanishing tolerance [default: 1e-3].
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Lattice Carleson check for |g|^p dA.
    Carleson {
        #[command(flatten)]
        symbol: SymbolArg,
        #[command(flatten)]
        p: PArg,
        #[command(flatten)]
        r: RArg,
        /// Mode [default: bounded].
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Finite-section norm of H_g at p = 2, or ||H_g f||_{p,m} for a given f.
    HankelNorm {
        #[command(flatten)]
        symbol: SymbolArg,
        #[command(flatten)]
        m: OrderArg,
        /// Domain truncation N [default: 16].
        #[arg(long = "N")]
        n: Option<usize>,
        /// Projection truncation L [default: 4N].
        #[arg(long = "L")]
        l: Option<usize>,
        /// Coefficients of f in b_0, b_1, ..., comma separated a+bi.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        f: Option<Vec<String>>,
        /// Exponent for --f [default: 2].
        #[arg(long)]
        p: Option<f64>,
    },
    /// ||H_g k_z||_{2,m} on a polar grid of probe points.
    HankelProbe {
        #[command(flatten)]
        symbol: SymbolArg,
        #[command(flatten)]
        m: OrderArg,
        /// Probe radii, comma separated [default: 0,2,4,6,8].
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Number of directions [default: 8, or 1 for radial symbols].
        #[arg(long)]
        directions: Option<usize>,
        /// Lower bound on the projection truncation.
        #[arg(long = "L")]
        l: Option<usize>,
        /// Compactness tolerance on the final value [default: 1e-3].
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Numerical checks with a bounded / agree / violated verdict.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Growth integral of |e^{conj(z) w} - Q_m|^{p'} e^{-c|w|^2}|w|^d.
    Lemma21 {
        #[command(flatten)]
        m: OrderArg,
        /// Exponent p' > 0 [default: 2].
        #[arg(long = "p-prime")]
        p_prime: Option<f64>,
        /// Gaussian weight c > 0 [default: 1].
        #[arg(long)]
        c: Option<f64>,
        /// Even power d >= 0 [default: 0].
        #[arg(long)]
        d: Option<u32>,
        /// Smallest |z| [default: 1].
        #[arg(long)]
        sigma: Option<f64>,
        /// Points z, comma separated a+bi [default: sigma, sigma+0.5, ..., 10 on the real axis].
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Option<Vec<String>>,
    },
    /// Weighted exponential series sum (y/(k+1))^t y^k/k! against e^y.
    Lemma23 {
        /// Exponent t [default: 0].
        #[arg(long, allow_hyphen_values = true)]
        t: Option<f64>,
        /// Grid y = 1, 2, ..., ymax [default: 50].
        #[arg(long)]
        ymax: Option<f64>,
        /// Lower bound applies for y >= M [default: 1].
        #[arg(long = "M")]
        big_m: Option<f64>,
    },
    /// Pointwise bound |E_m(z conj v)|(1+|z||v|)^m e^{-|z|^2/2-|v|^2/2+|z-v|^2/8}.
    KernelBound {
        #[command(flatten)]
        m: OrderArg,
    },
    /// Boundedness equivalence of Berezin and disk-mean oscillation.
    Thm28(TheoremArgs),
    /// Vanishing equivalence of Berezin and disk-mean oscillation.
    Thm32(TheoremArgs),
    /// Berezin mean oscillation bounds the disk mean oscillation from below.
    DiskLower(TheoremArgs),
    /// Oscillation of B_m g and average of |g - B_m g|^p stay within budget.
    BerezinSplit(TheoremArgs),
}

#[derive(Args, Debug)]
struct TheoremArgs {
    /// Catalog symbol name (const, conj_z, z, re_z, disk_ind, radial_sq,
    /// bounded_osc, sqrt_abs, analytic_quad, gauss_bump).
    #[arg(long)]
    symbol: String,
    #[command(flatten)]
    p: PArg,
    #[command(flatten)]
    r: RArg,
    #[command(flatten)]
    m: OrderArg,
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Smallest judged |z| [default: 2].
    #[arg(long)]
    z_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum QuantityArg {
    Transform,
    AbsP,
    Mo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Bmo,
    Ba,
    Bo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Bounded,
    Vanishing,
}

enum CliError {
    Usage(String),
    Compute(FockError),
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::Parse { .. } | FockError::InvalidParameter(_) | FockError::Admissibility(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Compute(other),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Result of one command before formatting.
struct Output {
    command: String,
    meta: Map<String, Value>,
    data: Value,
    csv: Vec<u8>,
    text: Option<String>,
    summary: String,
    violated: bool,
}

impl Output {
    fn new(command: &str, settings: Value, data: Value, csv: Vec<u8>, summary: String) -> Self {
        let mut meta = Map::new();
        meta.insert("command".into(), json!(command));
        meta.insert("settings".into(), settings);
        Output {
            command: command.into(),
            meta,
            data,
            csv,
            text: None,
            summary,
            violated: false,
        }
    }

    fn with_meta(mut self, key: &str, value: Value) -> Self {
        self.meta.insert(key.into(), value);
        self
    }
}

fn csv_bytes<F>(f: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> fockso_core::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn symbol(text: &str) -> CliResult<SymbolExpr> {
    parse_symbol(text).map_err(|e| CliError::Usage(format!("malformed symbol '{text}': {e}")))
}

fn complex_arg(name: &str, text: &str) -> CliResult<Complex64> {
    parse_complex(text).map_err(|e| CliError::Usage(format!("--{name}: {e}")))
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn single_row_csv(header: &[&str], row: &[String]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut wr = csv::Writer::from_writer(&mut buf);
        wr.write_record(header).map_err(|e| CliError::Usage(e.to_string()))?;
        wr.write_record(row).map_err(|e| CliError::Usage(e.to_string()))?;
        wr.flush().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(buf)
}

/// Config overlay holding the flags given on the command line.
#[derive(Default)]
struct Flags(RunConfig);

impl Flags {
    fn m(mut self, a: &OrderArg) -> Self {
        self.0.general.m = a.m;
        self
    }
    fn p(mut self, a: &PArg) -> Self {
        self.0.general.p = a.p;
        self
    }
    fn r(mut self, a: &RArg) -> Self {
        self.0.general.r = a.r;
        self
    }
    fn lattice(mut self, a: &LatticeArgs) -> Self {
        self.0.lattice.delta = a.delta;
        self.0.lattice.radius = a.big_r;
        self
    }
}

fn oscillation_json(rep: &OscillationReport) -> Value {
    json!({
        "sup_value": rep.sup_value,
        "argmax": [rep.argmax.re, rep.argmax.im],
        "profile": rep.profile,
        "vanishing": rep.vanishing,
    })
}

fn oscillation_output(command: &str, settings: &Settings, rep: &OscillationReport) -> CliResult<Output> {
    let summary = format!(
        "sup_value = {} at {}{:+}i{}",
        rep.sup_value,
        rep.argmax.re,
        rep.argmax.im,
        rep.vanishing.map(|v| format!(", vanishing = {v}")).unwrap_or_default()
    );
    Ok(Output::new(command, to_json(settings), to_json(&rep.samples), csv_bytes(|w| rep.write_csv(w))?, summary)
        .with_meta("sup_value", json!(rep.sup_value))
        .with_meta("summary", oscillation_json(rep)))
}

fn report_output(settings: &Settings, rep: &LemmaReport) -> CliResult<Output> {
    let mut out = Output::new(
        &format!("verify {}", rep.lemma),
        to_json(settings),
        to_json(rep),
        csv_bytes(|w| rep.write_csv(w))?,
        format!(
            "{}: min ratio {}, max ratio {}, verdict {}",
            rep.lemma,
            rep.min_ratio,
            rep.max_ratio,
            rep.verdict.as_str()
        ),
    )
    .with_meta("verdict", json!(rep.verdict))
    .with_meta("min_ratio", json!(rep.min_ratio))
    .with_meta("max_ratio", json!(rep.max_ratio));
    out.text = Some(rep.to_text());
    out.violated = rep.verdict.is_violated();
    Ok(out)
}

fn oscillation_settings(s: &Settings) -> OscillationSettings {
    OscillationSettings {
        rho: s.rho,
        z_min: s.z_min,
        tol_vanish: s.tol_vanish,
        disk_sizes: s.disk,
        berezin_sizes: s.berezin,
    }
}

fn run_theorem(which: &VerifyCommand, a: &TheoremArgs, base: &RunConfig) -> CliResult<Output> {
    let mut flags = Flags::default().p(&a.p).r(&a.r).m(&a.m).lattice(&a.lattice);
    flags.0.berezin.z_min = a.z_min;
    let s = base.overlay(&flags.0).resolve().map_err(CliError::Usage)?;
    let entry = lookup(&a.symbol)
        .ok_or_else(|| CliError::Usage(format!("unknown catalog symbol '{}'", a.symbol)))?;
    let os = oscillation_settings(&s);
    let rep = match which {
        VerifyCommand::Thm28(_) => check_equivalence_thm(Theorem::Thm28, &entry, s.p, s.r, s.m, &s.lattice, &os)?,
        VerifyCommand::Thm32(_) => check_equivalence_thm(Theorem::Thm32, &entry, s.p, s.r, s.m, &s.lattice, &os)?,
        VerifyCommand::DiskLower(_) => check_disk_lower_bound(&entry.symbol, s.p, s.r, s.m, &s.lattice, &os)?,
        _ => check_berezin_split(&entry.symbol, s.p, s.r, s.m, &s.lattice, &os)?,
    };
    eprintln!("runtime {:.3} s", rep.runtime.as_secs_f64());
    report_output(&s, &rep)
}

fn run_verify(check: &VerifyCommand, base: &RunConfig) -> CliResult<Output> {
    match check {
        VerifyCommand::Lemma21 {
            m,
            p_prime,
            c,
            d,
            sigma,
            z,
        } => {
            let s = base.overlay(&Flags::default().m(m).0).resolve().map_err(CliError::Usage)?;
            let sigma = sigma.unwrap_or(1.0);
            let grid = match z {
                Some(list) => list.iter().map(|t| complex_arg("z", t)).collect::<CliResult<Vec<_>>>()?,
                None => default_lemma21_grid(sigma),
            };
            let rep = check_lemma21(s.m, p_prime.unwrap_or(2.0), c.unwrap_or(1.0), d.unwrap_or(0), sigma, &grid)?;
            eprintln!("runtime {:.3} s", rep.runtime.as_secs_f64());
            report_output(&s, &rep)
        }
        VerifyCommand::Lemma23 { t, ymax, big_m } => {
            let s = base.resolve().map_err(CliError::Usage)?;
            let ymax = ymax.unwrap_or(50.0);
            if !(ymax >= 1.0) {
                return Err(CliError::Usage(format!("--ymax must be >= 1, got {ymax}")));
            }
            let rep = check_lemma23_series(t.unwrap_or(0.0), &default_series_grid(ymax), big_m.unwrap_or(1.0))?;
            eprintln!("runtime {:.3} s", rep.runtime.as_secs_f64());
            report_output(&s, &rep)
        }
        VerifyCommand::KernelBound { m } => {
            let s = base.overlay(&Flags::default().m(m).0).resolve().map_err(CliError::Usage)?;
            let rep = check_kernel_bound(s.m, &default_kernel_pairs())?;
            eprintln!("runtime {:.3} s", rep.runtime.as_secs_f64());
            report_output(&s, &rep)
        }
        VerifyCommand::Thm28(a) | VerifyCommand::Thm32(a) | VerifyCommand::DiskLower(a) | VerifyCommand::BerezinSplit(a) => {
            run_theorem(check, a, base)
        }
    }
}

fn run(cli: &Cli) -> CliResult<Output> {
    let mut base = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    if cli.format.is_some() {
        base.general.format = cli.format;
    }
    match &cli.command {
        Command::Kernel { m, z, v } => {
            let s = base.overlay(&Flags::default().m(m).0).resolve().map_err(CliError::Usage)?;
            let (z, v) = (complex_arg("z", z)?, complex_arg("v", v)?);
            let k = kernel(s.m, z, v);
            let val = k.to_complex_unchecked();
            let row = [z.re, z.im, v.re, v.im, val.re, val.im, k.logmag, k.phase].map(fmt_num);
            let csv = single_row_csv(
                &["z_re", "z_im", "v_re", "v_im", "value_re", "value_im", "logmag", "phase"],
                &row,
            )?;
            let data = json!({"z": [z.re, z.im], "v": [v.re, v.im], "value": [val.re, val.im], "logmag": k.logmag, "phase": k.phase});
            Ok(Output::new("kernel", to_json(&s), data, csv, format!("K = {}{:+}i (logmag {})", val.re, val.im, k.logmag)))
        }
        Command::Norm { symbol: sa, p, m } => {
            let s = base.overlay(&Flags::default().p(p).m(m).0).resolve().map_err(CliError::Usage)?;
            let g = symbol(&sa.symbol)?;
            let n = norm_pm(Operand::Symbol(&g), s.p, s.m)?;
            let csv = single_row_csv(&["symbol", "p", "m", "norm"], &[g.to_string(), fmt_num(s.p), s.m.to_string(), fmt_num(n)])?;
            Ok(Output::new("norm", to_json(&s), json!({"symbol": g.to_string(), "norm": n}), csv, format!("norm = {n}")))
        }
        Command::Project { symbol: sa, m, l } => {
            let mut flags = Flags::default().m(m);
            flags.0.hankel.l = *l;
            let s = base.overlay(&flags.0).resolve().map_err(CliError::Usage)?;
            let g = symbol(&sa.symbol)?;
            let c = project(&g, s.m, s.l)?;
            let mut buf = Vec::new();
            {
                let mut wr = csv::Writer::from_writer(&mut buf);
                let e = |e: csv::Error| CliError::Usage(e.to_string());
                wr.write_record(["k", "coeff_re", "coeff_im"]).map_err(e)?;
                for (k, x) in c.coeffs.iter().enumerate() {
                    wr.write_record([k.to_string(), fmt_num(x.re), fmt_num(x.im)]).map_err(e)?;
                }
                wr.flush().map_err(|e| CliError::Usage(e.to_string()))?;
            }
            let summary = format!("{} coefficients, Parseval norm {}", c.len(), c.parseval_norm_sqr().sqrt());
            Ok(Output::new("project", to_json(&s), to_json(&c), buf, summary))
        }
        Command::Berezin {
            symbol: sa,
            m,
            p,
            quantity,
            rho,
            lattice,
        } => {
            let mut flags = Flags::default().m(m).p(p).lattice(lattice);
            flags.0.berezin.rho = *rho;
            let s = base.overlay(&flags.0).resolve().map_err(CliError::Usage)?;
            let g = symbol(&sa.symbol)?;
            let q = match quantity.unwrap_or(QuantityArg::Transform) {
                QuantityArg::Transform => BerezinQuantity::Transform,
                QuantityArg::AbsP => BerezinQuantity::AbsP(s.p),
                QuantityArg::Mo => BerezinQuantity::MeanOscillation(s.p),
            };
            let grid = berezin_grid(&g, q, s.m, s.rho, &s.lattice, s.berezin)?;
            let rep = grid.magnitude_report()?;
            let max_tail = grid.tail_bounds.iter().copied().fold(0.0, f64::max);
            let summary = format!("max |value| = {} at {}{:+}i, max tail bound {max_tail:e}", rep.sup_value, rep.argmax.re, rep.argmax.im);
            Ok(Output::new("berezin", to_json(&s), to_json(&grid), csv_bytes(|w| grid.write_csv(w))?, summary)
                .with_meta("max_abs_value", json!(rep.sup_value))
                .with_meta("max_tail_bound", json!(max_tail)))
        }
        Command::Bmo { symbol: sa, p, r, lattice } => {
            let s = base.overlay(&Flags::default().p(p).r(r).lattice(lattice).0).resolve().map_err(CliError::Usage)?;
            let g = symbol(&sa.symbol)?;
            let rep = bmo_norm(&g, s.r, s.p, &s.lattice, s.disk)?;
            oscillation_output("bmo", &s, &rep)
        }
        Command::Bo { symbol: sa, r, lattice } => {
            let s = base.overlay(&Flags::default().r(r).lattice(lattice).0).resolve().map_err(CliError::Usage)?;
            let g = symbol(&sa.symbol)?;
            let rep = bo_norm(&g, s.r, &s.lattice, s.disk)?;
            oscillation_output("bo", &s, &rep)
        }
        Command::Vanish {
            symbol: sa,
            estimator,
            p,
            r,
            tol,
            lattice,
        } => {
            let mut flags = Flags::default().p(p).r(r).lattice(lattice);
            flags.0.spaces.tol_vanish = *tol;
            let s = base.overlay(&flags.0).resolve().map_err(CliError::Usage)?;
            let g = symbol(&sa.symbol)?;
            let est = match estimator.unwrap_or(EstimatorArg::Bmo) {
                EstimatorArg::Bmo => Estimator::Bmo,
                EstimatorArg::Ba => Estimator::Ba,
                EstimatorArg::Bo => Estimator::Bo,
            };
            let rep = vanishing_profile(est, &g, s.r, s.p, &s.lattice, s.disk, s.tol_vanish)?;
            oscillation_output("vanish", &s, &rep)
        }
        Command::Carleson {
            symbol: sa,
            p,
            r,
            mode,
            lattice,
        } => {
            let s = base.overlay(&Flags::default().p(p).r(r).lattice(lattice).0).resolve().map_err(CliError::Usage)?;
            let g = symbol(&sa.symbol)?;
            let mode = match mode.unwrap_or(ModeArg::Bounded) {
                ModeArg::Bounded => CarlesonMode::Bounded,
                ModeArg::Vanishing => CarlesonMode::Vanishing,
            };
            let rep = carleson_lattice_check(&g, s.p, s.r, &s.lattice, mode, s.disk, s.z_min, s.tol_vanish)?;
            let summary = format!("max mass = {}, {:?} verdict = {}", rep.max_mass, rep.mode, rep.verdict);
            Ok(Output::new("carleson", to_json(&s), to_json(&rep.masses.samples), csv_bytes(|w| rep.masses.write_csv(w))?, summary)
                .with_meta("max_mass", json!(rep.max_mass))
                .with_meta("mode", json!(rep.mode))
                .with_meta("verdict", json!(rep.verdict))
                .with_meta("profile", json!(rep.masses.profile)))
        }
        Command::HankelNorm { symbol: sa, m, n, l, f, p } => {
            let mut flags = Flags::default().m(m);
            flags.0.hankel.n = *n;
            flags.0.hankel.l = *l;
            flags.0.general.p = *p;
            let s = base.overlay(&flags.0).resolve().map_err(CliError::Usage)?;
            let g = symbol(&sa.symbol)?;
            if let Some(list) = f {
                let coeffs = list.iter().map(|t| complex_arg("f", t)).collect::<CliResult<Vec<_>>>()?;
                let fv = CoeffVector::new(s.m, coeffs)?;
                let v = hankel_norm_p(&g, &fv, s.p, s.m, s.l)?;
                let csv = single_row_csv(&["p", "m", "L", "norm"], &[fmt_num(s.p), s.m.to_string(), s.l.to_string(), fmt_num(v)])?;
                return Ok(Output::new("hankel-norm", to_json(&s), json!({"norm": v, "f": to_json(&fv)}), csv, format!("||H_g f|| = {v}")));
            }
            let sec = build_section(&g, s.m, s.n, s.l)?;
            let v = section_norm_with_tol(&sec, s.eigen_tol)?;
            let eig = sec.eigenvalues_with_tol(s.eigen_tol)?;
            let csv = single_row_csv(&["N", "L", "section_norm"], &[s.n.to_string(), s.l.to_string(), fmt_num(v)])?;
            Ok(Output::new("hankel-norm", to_json(&s), json!({"section_norm": v, "eigenvalues": eig, "section": to_json(&sec)}), csv, format!("section norm = {v}"))
                .with_meta("section_norm", json!(v)))
        }
        Command::HankelProbe {
            symbol: sa,
            m,
            radii,
            directions,
            l,
            tol,
        } => {
            let mut flags = Flags::default().m(m);
            flags.0.hankel.directions = *directions;
            flags.0.hankel.tol_compact = *tol;
            let s = base.overlay(&flags.0).resolve().map_err(CliError::Usage)?;
            let g = symbol(&sa.symbol)?;
            let radii = radii.clone().unwrap_or_else(|| vec![0.0, 2.0, 4.0, 6.0, 8.0]);
            for r in &radii {
                if let Ok(k) = kernel_truncation(s.m, *r) {
                    if k > s.k_cap {
                        return Err(CliError::Usage(format!("radius {r} needs {k} kernel terms, above K_cap = {}", s.k_cap)));
                    }
                }
            }
            let n_dir = s.directions.unwrap_or(if g.is_radial() { 1 } else { fockso_core::hankel::DEFAULT_DIRECTIONS });
            let curve = kernel_probe(&g, s.m, &radii, &default_directions(n_dir), *l)?;
            let mut out = Output::new("hankel-probe", to_json(&s), to_json(&curve), csv_bytes(|w| curve.write_csv(w))?, String::new())
                .with_meta("direction_max", json!(curve.direction_max()));
            out.summary = format!("direction maxima {:?}", curve.direction_max());
            if radii.len() >= 4 {
                let v = compactness_verdict(&curve, s.tol_compact)?;
                out.summary = v.summary.clone();
                out = out.with_meta("compactness", to_json(&v));
            }
            Ok(out)
        }
        Command::Verify { check } => run_verify(check, &base),
    }
}

fn emit(cli: &Cli, out: &Output, format: Format) -> std::io::Result<()> {
    let bytes = match format {
        Format::Json => {
            let mut meta = out.meta.clone();
            meta.insert("summary_line".into(), json!(out.summary));
            let doc = json!({"meta": Value::Object(meta), "data": out.data});
            let mut s = serde_json::to_string_pretty(&doc).unwrap_or_default();
            s.push('\n');
            s.into_bytes()
        }
        Format::Text => match &out.text {
            Some(t) => t.clone().into_bytes(),
            None => out.csv.clone(),
        },
        Format::Csv => out.csv.clone(),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, bytes),
        None => {
            let mut h = std::io::stdout().lock();
            h.write_all(&bytes)?;
            h.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = match run(&cli) {
        Ok(o) => o,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(CliError::Compute(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let format = cli
        .format
        .or_else(|| cli.config.as_ref().and_then(|p| RunConfig::load(p).ok()).and_then(|c| c.general.format))
        .unwrap_or(Format::Csv);
    if let Err(e) = emit(&cli, &out, format) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    eprintln!("{}: {}", out.command, out.summary);
    if out.violated {
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

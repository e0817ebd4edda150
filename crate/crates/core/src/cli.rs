//! Command-line surface: reproducible, file-based runs of every subsystem.
//!
//! Every output starts with `#`-prefixed provenance lines echoing the tool
//! version and the full configuration, so a file can always be regenerated
//! byte-for-byte from its own header. Numbers are printed with 12
//! significant digits. CSV is the canonical format; `--format json` mirrors
//! the same columns and rows.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure (for example
//! a window violation or a Monte Carlo z-score above the threshold).

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::algebra::{FourierModulePoint, QuadInt};
use crate::diffraction::{
    amplitude_det, moment_recursion, monte_carlo_moments, spectrum_scan,
};
use crate::entropy::entropy_series;
use crate::geometry::{realize_patch, star_project, superwindow};
use crate::induced::{induced_matrix, pf_frequencies};
use crate::words::{exact_words, iterate_seed_patch, legal_words, ProbVector, DEFAULT_WORD_CAP};
use crate::{Error, Result};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "rnms", version, about = "Random noble means substitutions: words, entropy, frequencies, point sets and diffraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit exact words, legal words or a random patch
    Generate {
        /// Family parameter m
        #[arg(long)]
        m: u32,
        /// Emit the exact substitution words G_{m,k} for this k
        #[arg(long, conflicts_with_all = ["legal", "random"])]
        exact: Option<u32>,
        /// Emit the legal words of this length
        #[arg(long, conflicts_with_all = ["exact", "random"])]
        legal: Option<usize>,
        /// Emit a random two-sided patch after this many steps
        #[arg(long, conflicts_with_all = ["exact", "legal"], requires = "p")]
        random: Option<u32>,
        /// Choosing probabilities p_0,...,p_m (needed for --random)
        #[arg(long, value_parser = parse_probs)]
        p: Option<ProbVector>,
        /// RNG seed for --random
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cap on enumerated set size
        #[arg(long, default_value_t = DEFAULT_WORD_CAP)]
        cap: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Topological entropy H_m for m = 1..=m-max
    Entropy {
        #[arg(long = "m-max")]
        m_max: u32,
        /// Series truncation tolerance
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Perron-Frobenius word frequencies on the legal ell-words
    Frequencies {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        ell: usize,
        #[arg(long, value_parser = parse_probs)]
        p: ProbVector,
        /// Power-iteration residual tolerance
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a random patch and export its points and star projections
    Patch {
        #[arg(long)]
        m: u32,
        #[arg(long, value_parser = parse_probs)]
        p: ProbVector,
        #[arg(long)]
        steps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check star positions from a patch CSV against the superwindow W_m
    WindowCheck {
        #[arg(long)]
        m: u32,
        /// Input CSV (as written by `patch`); stdin when omitted
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Random-case spectrum on a k-grid: pure-point and a.c. parts (m = 1)
    Diffract {
        #[arg(long, value_parser = parse_probs)]
        p: ProbVector,
        /// Recursion order n
        #[arg(long, default_value_t = 6)]
        n: u32,
        /// Grid lo:hi:step
        #[arg(long = "k-range", value_parser = parse_range)]
        k_range: KRange,
        /// Tail tolerance for the phi series
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Deterministic Bragg amplitudes at Fourier module points
    DiffractDet {
        #[arg(long)]
        m: u32,
        /// Branch index i
        #[arg(long)]
        i: u32,
        /// Module points a:b, comma separated, meaning (a + b*lambda)/sqrt(m^2+4)
        #[arg(long = "k-list", value_parser = parse_module_points, value_delimiter = ',')]
        k_list: Vec<(i64, i64)>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare Monte Carlo moments of X_n(k) against the recursion (m = 1)
    McValidate {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        n: u32,
        #[arg(long, value_parser = parse_probs)]
        p: ProbVector,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Validation threshold in standard errors
        #[arg(long, default_value_t = 4.0)]
        threshold: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy)]
struct KRange {
    lo: f64,
    hi: f64,
    step: f64,
}

fn parse_probs(s: &str) -> std::result::Result<ProbVector, String> {
    let parts: std::result::Result<Vec<f64>, _> = s.split(',').map(str::parse::<f64>).collect();
    let parts = parts.map_err(|e| format!("invalid probability list: {e}"))?;
    ProbVector::new(parts).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<KRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected lo:hi:step".into());
    }
    let lo: f64 = parts[0].parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = parts[1].parse().map_err(|e| format!("hi: {e}"))?;
    let step: f64 = parts[2].parse().map_err(|e| format!("step: {e}"))?;
    if !(step > 0.0) || hi < lo {
        return Err("need step > 0 and hi >= lo".into());
    }
    Ok(KRange { lo, hi, step })
}

fn parse_module_points(s: &str) -> std::result::Result<(i64, i64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err("expected a:b with integers a, b".into());
    }
    let a: i64 = parts[0].parse().map_err(|e| format!("a: {e}"))?;
    let b: i64 = parts[1].parse().map_err(|e| format!("b: {e}"))?;
    Ok((a, b))
}

/// 12 significant digits, deterministic across runs.
fn sig(x: f64) -> String {
    format!("{x:.11e}")
}

/// A finished table: provenance pairs, column names and stringly rows.
struct Table {
    command: &'static str,
    config: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn render_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# rnms v{VERSION}").unwrap();
        let mut line = format!("# command={}", self.command);
        for (k, v) in &self.config {
            write!(line, " {k}={v}").unwrap();
        }
        writeln!(out, "{line}").unwrap();
        writeln!(out, "# columns: {}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    fn render_json(&self) -> String {
        let config: serde_json::Map<String, serde_json::Value> = self
            .config
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let value = serde_json::json!({
            "tool": "rnms",
            "version": VERSION,
            "command": self.command,
            "config": config,
            "columns": self.columns,
            "rows": self.rows,
        });
        let mut s = serde_json::to_string_pretty(&value).expect("serializable");
        s.push('\n');
        s
    }

    fn write(&self, output: &OutputArgs) -> Result<()> {
        let text = match output.format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        };
        match &output.out {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

fn probs_str(p: &ProbVector) -> String {
    p.probs()
        .iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap handles --help/--version as "errors" with zero exit
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Generate {
            m,
            exact,
            legal,
            random,
            p,
            seed,
            cap,
            output,
        } => cmd_generate(m, exact, legal, random, p, seed, cap, &output),
        Command::Entropy { m_max, tol, output } => cmd_entropy(m_max, tol, &output),
        Command::Frequencies {
            m,
            ell,
            p,
            tol,
            output,
        } => cmd_frequencies(m, ell, &p, tol, &output),
        Command::Patch {
            m,
            p,
            steps,
            seed,
            output,
        } => cmd_patch(m, &p, steps, seed, &output),
        Command::WindowCheck { m, input } => cmd_window_check(m, input),
        Command::Diffract {
            p,
            n,
            k_range,
            tol,
            output,
        } => cmd_diffract(&p, n, k_range, tol, &output),
        Command::DiffractDet {
            m,
            i,
            k_list,
            output,
        } => cmd_diffract_det(m, i, &k_list, &output),
        Command::McValidate {
            k,
            n,
            p,
            samples,
            seed,
            threshold,
            output,
        } => cmd_mc_validate(k, n, &p, samples, seed, threshold, &output),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    m: u32,
    exact: Option<u32>,
    legal: Option<usize>,
    random: Option<u32>,
    p: Option<ProbVector>,
    seed: u64,
    cap: usize,
    output: &OutputArgs,
) -> Result<i32> {
    let mut config = vec![("m".into(), m.to_string())];
    let (mode_rows, columns): (Vec<Vec<String>>, Vec<&'static str>) = match (exact, legal, random) {
        (Some(k), None, None) => {
            config.push(("exact".into(), k.to_string()));
            config.push(("cap".into(), cap.to_string()));
            let words = exact_words(m, k, cap)?;
            (
                words.into_iter().map(|w| vec![w.to_string()]).collect(),
                vec!["word"],
            )
        }
        (None, Some(len), None) => {
            config.push(("legal".into(), len.to_string()));
            let words = legal_words(m, len)?;
            (
                words.into_iter().map(|w| vec![w.to_string()]).collect(),
                vec!["word"],
            )
        }
        (None, None, Some(steps)) => {
            let p = p.ok_or_else(|| {
                Error::InvalidArgument("--random requires --p".into())
            })?;
            if p.m() != m {
                return Err(Error::InvalidArgument(format!(
                    "--p has {} entries but m = {m} needs {}",
                    p.m() + 1,
                    m + 1
                )));
            }
            config.push(("random".into(), steps.to_string()));
            config.push(("p".into(), probs_str(&p)));
            config.push(("seed".into(), seed.to_string()));
            let patch = iterate_seed_patch(&p, steps, seed);
            (vec![vec![patch.to_string()]], vec!["patch"])
        }
        _ => {
            return Err(Error::InvalidArgument(
                "exactly one of --exact, --legal, --random is required".into(),
            ))
        }
    };
    Table {
        command: "generate",
        config,
        columns,
        rows: mode_rows,
    }
    .write(output)?;
    Ok(0)
}

fn cmd_entropy(m_max: u32, tol: f64, output: &OutputArgs) -> Result<i32> {
    if m_max < 1 {
        return Err(Error::InvalidArgument("--m-max must be at least 1".into()));
    }
    let rows = (1..=m_max)
        .map(|m| vec![m.to_string(), sig(entropy_series(m, tol))])
        .collect();
    Table {
        command: "entropy",
        config: vec![
            ("m_max".into(), m_max.to_string()),
            ("tol".into(), format!("{tol:e}")),
            ("log_base".into(), "e".into()),
        ],
        columns: vec!["m", "H_m"],
        rows,
    }
    .write(output)?;
    Ok(0)
}

fn cmd_frequencies(m: u32, ell: usize, p: &ProbVector, tol: f64, output: &OutputArgs) -> Result<i32> {
    if p.m() != m {
        return Err(Error::InvalidArgument(format!(
            "--p has {} entries but m = {m} needs {}",
            p.m() + 1,
            m + 1
        )));
    }
    let matrix = induced_matrix(m, ell, p)?;
    let freq = pf_frequencies(&matrix, tol)?;
    let rows = freq
        .iter()
        .map(|(w, f)| vec![w.to_string(), sig(f)])
        .collect();
    Table {
        command: "frequencies",
        config: vec![
            ("m".into(), m.to_string()),
            ("ell".into(), ell.to_string()),
            ("p".into(), probs_str(p)),
            ("tol".into(), format!("{tol:e}")),
        ],
        columns: vec!["word", "frequency"],
        rows,
    }
    .write(output)?;
    Ok(0)
}

fn cmd_patch(m: u32, p: &ProbVector, steps: u32, seed: u64, output: &OutputArgs) -> Result<i32> {
    if p.m() != m {
        return Err(Error::InvalidArgument(format!(
            "--p has {} entries but m = {m} needs {}",
            p.m() + 1,
            m + 1
        )));
    }
    let patch = iterate_seed_patch(p, steps, seed);
    let points = realize_patch(&patch, m);
    let stars = star_project(&points);
    let rows = points
        .points()
        .iter()
        .zip(stars)
        .enumerate()
        .map(|(i, (pt, star))| vec![i.to_string(), sig(pt.value()), sig(star)])
        .collect();
    Table {
        command: "patch",
        config: vec![
            ("m".into(), m.to_string()),
            ("p".into(), probs_str(p)),
            ("steps".into(), steps.to_string()),
            ("seed".into(), seed.to_string()),
        ],
        columns: vec!["index", "float_position", "star_position"],
        rows,
    }
    .write(output)?;
    Ok(0)
}

/// Slack for re-parsed star positions: the CSV carries 12 significant
/// digits, so round-tripped values sit within 1e-9 of the exact ones.
const REPARSE_SLACK: f64 = 1e-9;

fn cmd_window_check(m: u32, input: Option<PathBuf>) -> Result<i32> {
    let reader: Box<dyn BufRead> = match input {
        Some(path) => Box::new(std::io::BufReader::new(std::fs::File::open(path)?)),
        None => Box::new(std::io::BufReader::new(std::io::stdin())),
    };
    let window = superwindow(m);
    let (mut checked, mut violations) = (0usize, 0usize);
    let mut max_violation = 0.0f64;
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "expected at least 3 columns (index,float_position,star_position), got: {trimmed}"
            )));
        }
        let star: f64 = fields[2].trim().parse().map_err(|e| {
            Error::InvalidArgument(format!("bad star_position {:?}: {e}", fields[2]))
        })?;
        checked += 1;
        let excess = window.excess(star);
        if excess > REPARSE_SLACK {
            violations += 1;
            max_violation = max_violation.max(excess);
        }
    }
    println!(
        "# rnms v{VERSION}\n# command=window-check m={m} window={window} checked={checked} violations={violations} max_violation={}",
        sig(max_violation)
    );
    Ok(if violations == 0 { 0 } else { 2 })
}

fn cmd_diffract(p: &ProbVector, n: u32, k_range: KRange, tol: f64, output: &OutputArgs) -> Result<i32> {
    if p.m() != 1 {
        return Err(Error::InvalidArgument(
            "diffract implements the analytic recursions for m = 1 (two probabilities)".into(),
        ));
    }
    let samples = spectrum_scan(k_range.lo, k_range.hi, k_range.step, n, p, tol);
    let rows = samples
        .iter()
        .map(|s| vec![sig(s.k), sig(s.pp), sig(s.ac)])
        .collect();
    Table {
        command: "diffract",
        config: vec![
            ("p".into(), probs_str(p)),
            ("n".into(), n.to_string()),
            (
                "k_range".into(),
                format!("{}:{}:{}", k_range.lo, k_range.hi, k_range.step),
            ),
            ("tol".into(), format!("{tol:e}")),
        ],
        columns: vec!["k", "pp", "ac"],
        rows,
    }
    .write(output)?;
    Ok(0)
}

fn cmd_diffract_det(m: u32, i: u32, k_list: &[(i64, i64)], output: &OutputArgs) -> Result<i32> {
    if k_list.is_empty() {
        return Err(Error::InvalidArgument("--k-list must not be empty".into()));
    }
    let mut rows = Vec::new();
    for &(a, b) in k_list {
        let k = FourierModulePoint::new(QuadInt::new(m, a, b));
        let amp = amplitude_det(m, i, &k)?;
        rows.push(vec![
            format!("{a}:{b}"),
            sig(k.value()),
            sig(k.star_value()),
            sig(amp.re),
            sig(amp.im),
            sig(amp.norm_sqr()),
        ]);
    }
    Table {
        command: "diffract-det",
        config: vec![
            ("m".into(), m.to_string()),
            ("i".into(), i.to_string()),
            (
                "k_list".into(),
                k_list
                    .iter()
                    .map(|(a, b)| format!("{a}:{b}"))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
        ],
        columns: vec!["k", "k_value", "k_star", "re_amplitude", "im_amplitude", "intensity"],
        rows,
    }
    .write(output)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_mc_validate(
    k: f64,
    n: u32,
    p: &ProbVector,
    samples: u64,
    seed: u64,
    threshold: f64,
    output: &OutputArgs,
) -> Result<i32> {
    if p.m() != 1 {
        return Err(Error::InvalidArgument(
            "mc-validate implements the analytic recursions for m = 1".into(),
        ));
    }
    let states = moment_recursion(k, n, p);
    let exact = states[n as usize];
    let mc = monte_carlo_moments(k, n, p, samples, seed);
    let z_mean = (mc.mean - exact.mean).norm() / mc.mean_stderr;
    let z_var = (mc.variance - exact.variance).abs() / mc.var_stderr;
    let rows = vec![
        vec![
            "mean".into(),
            format!("{}{:+}i", sig(exact.mean.re), sig_signed(exact.mean.im)),
            format!("{}{:+}i", sig(mc.mean.re), sig_signed(mc.mean.im)),
            sig(mc.mean_stderr),
            sig(z_mean),
        ],
        vec![
            "variance".into(),
            sig(exact.variance),
            sig(mc.variance),
            sig(mc.var_stderr),
            sig(z_var),
        ],
    ];
    Table {
        command: "mc-validate",
        config: vec![
            ("k".into(), format!("{k}")),
            ("n".into(), n.to_string()),
            ("p".into(), probs_str(p)),
            ("samples".into(), samples.to_string()),
            ("seed".into(), seed.to_string()),
            ("threshold".into(), format!("{threshold}")),
        ],
        columns: vec!["quantity", "recursion", "monte_carlo", "stderr", "z"],
        rows,
    }
    .write(output)?;
    Ok(if z_mean <= threshold && z_var <= threshold {
        0
    } else {
        2
    })
}

struct SigSigned(f64);

fn sig_signed(x: f64) -> SigSigned {
    SigSigned(x)
}

impl std::fmt::Display for SigSigned {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0 >= 0.0 {
            write!(f, "+{}", sig(self.0))
        } else {
            write!(f, "{}", sig(self.0))
        }
    }
}

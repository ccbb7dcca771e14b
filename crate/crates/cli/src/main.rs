use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use keytrade::binary::{bsc_test_channel, closed_form};
use keytrade::codec::{exact_metrics, exponent_sweep, generate_codebook, monte_carlo_metrics, CodeParams};
use keytrade::info::{cond_mutual_info, entropy, mutual_info};
use keytrade::region::{trace_boundary, CapKind, SearchConfig, Sweep, DEGRADED_TOL};
use keytrade::{AuxPair, Channel, Error, JointPmf};

/// Exit codes.
const EXIT_IO: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_GUARD: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "keytrade", version, about = "Rate, leakage and false-acceptance tradeoffs for key-based authentication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace the region boundary with a cap sweep.
    Region(RegionArgs),
    /// Closed-form boundary of the binary erasure cascade.
    BinaryExample(BinaryArgs),
    /// Generate a codebook and report its metrics.
    Simulate(SimulateArgs),
    /// Exact metrics of a fresh codebook per blocklength.
    SweepExponent(SweepArgs),
    /// Check a source file and print its basic quantities.
    ValidateSource(ValidateArgs),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output file. A manifest is written next to it as `<out>.manifest.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepKind {
    Rate,
    Leakage,
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// Source JSON with axes x, y, z.
    #[arg(long)]
    source: PathBuf,
    /// Which cap the sweep varies.
    #[arg(long, value_enum, default_value = "rate")]
    sweep: SweepKind,
    /// Comma-separated values of the swept cap.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Rate cap when sweeping leakage.
    #[arg(long, default_value_t = f64::INFINITY)]
    rate_cap: f64,
    /// Leakage cap when sweeping rate.
    #[arg(long, default_value_t = f64::INFINITY)]
    leakage_cap: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long)]
    u_size: Option<usize>,
    #[arg(long)]
    v_size: Option<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct BinaryArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    /// Comma-separated crossover values in [0, 1/2].
    #[arg(long, value_delimiter = ',', default_values_t = default_alphas())]
    alphas: Vec<f64>,
    #[command(flatten)]
    out: OutArg,
}

fn default_alphas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 * 0.05).collect()
}

#[derive(Args, Debug)]
struct CodeArgs {
    #[arg(long)]
    source: PathBuf,
    /// Preset (`bsc:ALPHA`, `identity`, `constant`) or a JSON file with
    /// `vx` and `uv` channels.
    #[arg(long)]
    aux: String,
    #[arg(long, default_value_t = 0.15)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Enumerate exactly instead of sampling.
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Comma-separated blocklengths.
    #[arg(long, value_delimiter = ',', required = true)]
    ns: Vec<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    source: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InfeasibleCaps { .. } => EXIT_INFEASIBLE,
            Error::TooLarge { .. } => EXIT_GUARD,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

fn input_error(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_INPUT,
        error,
    }
}

fn io_error(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_IO, error }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Twelve significant digits, plain decimal notation.
fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.11e}", x).parse().expect("formatted float parses");
    rounded.to_string()
}

fn read_text(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input_error)
}

fn load_source(path: &Path) -> Outcome<JointPmf> {
    let text = read_text(path)?;
    let src = JointPmf::from_json(&text)
        .with_context(|| format!("parsing source {}", path.display()))
        .map_err(input_error)?;
    for axis in ["x", "y", "z"] {
        src.axis(axis)?;
    }
    if src.axes().len() != 3 {
        return Err(input_error(anyhow::anyhow!("source must have exactly the axes x, y, z")));
    }
    Ok(src.marginalize(&["x", "y", "z"])?)
}

fn load_aux(arg: &str, x_size: usize) -> Outcome<AuxPair> {
    if let Some(alpha) = arg.strip_prefix("bsc:") {
        let alpha: f64 = alpha
            .parse()
            .with_context(|| format!("bad crossover in {arg}"))
            .map_err(input_error)?;
        if x_size != 2 {
            return Err(input_error(anyhow::anyhow!("bsc preset needs a binary x")));
        }
        return Ok(AuxPair::with_constant_u(bsc_test_channel(alpha)?));
    }
    match arg {
        "identity" => Ok(AuxPair::identity(x_size)),
        "constant" => Ok(AuxPair::constant(x_size)),
        path => {
            #[derive(serde::Deserialize)]
            struct RawAux {
                vx: Channel,
                uv: Channel,
            }
            let text = read_text(Path::new(path))?;
            let raw: RawAux = serde_json::from_str(&text)
                .with_context(|| format!("parsing aux {path}"))
                .map_err(input_error)?;
            let aux = AuxPair::new(raw.vx, raw.uv)?;
            if aux.x_size() != x_size {
                return Err(input_error(anyhow::anyhow!(
                    "aux expects {} source letters, source has {}",
                    aux.x_size(),
                    x_size
                )));
            }
            Ok(aux)
        }
    }
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Outcome<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| io_error(e.into());
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| io_error(anyhow::anyhow!(e.to_string())))
}

fn json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

#[derive(Serialize)]
struct InputFile {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    argv: Vec<String>,
    inputs: Vec<InputFile>,
    params: Value,
    seed: Option<u64>,
    version: String,
    outputs: Vec<String>,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn digest(path: &Path) -> Outcome<String> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(io_error)?;
    Ok(format!("{:x}", Sha256::digest(bytes)))
}

struct Report {
    command: &'static str,
    inputs: Vec<PathBuf>,
    params: Value,
    seed: Option<u64>,
    body: Vec<u8>,
}

fn emit(report: Report, out: &OutArg) -> Outcome<()> {
    let Some(path) = &out.out else {
        use std::io::Write;
        return std::io::stdout()
            .write_all(&report.body)
            .context("writing stdout")
            .map_err(io_error);
    };
    std::fs::write(path, &report.body)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(io_error)?;
    let inputs = report
        .inputs
        .iter()
        .map(|p| {
            Ok(InputFile {
                path: p.display().to_string(),
                sha256: digest(p)?,
            })
        })
        .collect::<Outcome<Vec<_>>>()?;
    let manifest = Manifest {
        command: report.command.to_string(),
        argv: std::env::args().skip(1).collect(),
        inputs,
        params: report.params,
        seed: report.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: vec![path.display().to_string()],
    };
    let mpath = manifest_path(path);
    std::fs::write(&mpath, json_bytes(&manifest))
        .with_context(|| format!("writing {}", mpath.display()))
        .map_err(io_error)
}

fn cmd_region(a: &RegionArgs) -> Outcome<()> {
    let src = load_source(&a.source)?;
    let cfg = SearchConfig {
        restarts: a.restarts,
        seed: a.seed,
        u_size: a.u_size,
        v_size: a.v_size,
        ..SearchConfig::default()
    };
    let (kind, fixed_cap) = match a.sweep {
        SweepKind::Rate => (CapKind::Rate, a.leakage_cap),
        SweepKind::Leakage => (CapKind::Leakage, a.rate_cap),
    };
    let sweep = Sweep {
        kind,
        values: a.values.clone(),
        fixed_cap,
    };
    let points = trace_boundary(&src, &sweep, &cfg)?;
    let rows = points
        .iter()
        .map(|p| {
            vec![
                sig12(p.rate),
                sig12(p.leakage),
                sig12(p.third),
                p.restart_id.map_or(String::new(), |r| r.to_string()),
                a.seed.to_string(),
            ]
        })
        .collect();
    let body = csv_bytes(&["R", "L", "E", "restart_id", "seed"], rows)?;
    let params = json!({
        "sweep": format!("{:?}", a.sweep).to_lowercase(),
        "values": a.values,
        "rate_cap": sig12(a.rate_cap),
        "leakage_cap": sig12(a.leakage_cap),
        "restarts": a.restarts,
        "u_size": a.u_size,
        "v_size": a.v_size,
        "local_steps": cfg.local_steps,
        "step_schedule": cfg.step_schedule,
        "exponent_tol": cfg.exponent_tol,
    });
    emit(
        Report {
            command: "region",
            inputs: vec![a.source.clone()],
            params,
            seed: Some(a.seed),
            body,
        },
        &a.out,
    )
}

fn cmd_binary_example(a: &BinaryArgs) -> Outcome<()> {
    let rows = a
        .alphas
        .iter()
        .map(|&alpha| {
            let c = closed_form(a.p, a.q, alpha)?;
            Ok(vec![sig12(alpha), sig12(c.rate), sig12(c.leakage), sig12(c.exponent)])
        })
        .collect::<Outcome<Vec<_>>>()?;
    let body = csv_bytes(&["alpha", "R", "L", "E"], rows)?;
    emit(
        Report {
            command: "binary-example",
            inputs: vec![],
            params: json!({ "p": a.p, "q": a.q, "alphas": a.alphas }),
            seed: None,
            body,
        },
        &a.out,
    )
}

fn code_params(c: &CodeArgs, n: usize) -> Outcome<(CodeParams, Vec<PathBuf>)> {
    let source = load_source(&c.source)?;
    let aux = load_aux(&c.aux, source.axis("x")?.size)?;
    let mut inputs = vec![c.source.clone()];
    if Path::new(&c.aux).is_file() {
        inputs.push(PathBuf::from(&c.aux));
    }
    Ok((
        CodeParams {
            n,
            delta: c.delta,
            eps: c.eps,
            aux,
            source,
            seed: c.seed,
        },
        inputs,
    ))
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome<()> {
    let (params, inputs) = code_params(&a.code, a.n)?;
    let cb = generate_codebook(&params)?;
    let mut report = json!({
        "n": a.n,
        "sizes": cb.sizes,
        "degenerate_rates": cb.degenerate_rates,
    });
    if a.exact {
        report["mode"] = json!("exact");
        report["metrics"] = serde_json::to_value(exact_metrics(&cb)?).expect("metrics serialize");
    } else {
        report["mode"] = json!("monte_carlo");
        report["metrics"] = serde_json::to_value(monte_carlo_metrics(&cb, a.trials)?).expect("metrics serialize");
    }
    emit(
        Report {
            command: "simulate",
            inputs,
            params: json!({
                "aux": a.code.aux,
                "n": a.n,
                "delta": a.code.delta,
                "eps": a.code.eps,
                "trials": a.trials,
                "exact": a.exact,
            }),
            seed: Some(a.code.seed),
            body: json_bytes(&report),
        },
        &a.out,
    )
}

fn cmd_sweep_exponent(a: &SweepArgs) -> Outcome<()> {
    let (params, inputs) = code_params(&a.code, 1)?;
    let rows = exponent_sweep(&params.source, &params.aux, &a.ns, a.code.delta, a.code.eps, a.code.seed)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), sig12);
    let rows = rows
        .iter()
        .map(|r| {
            let m = &r.metrics;
            vec![
                r.n.to_string(),
                r.seed.to_string(),
                sig12(m.mfap),
                opt(m.mfap_exponent),
                sig12(m.frp),
                sig12(m.key_leak),
                sig12(m.src_leak),
                sig12(m.pr_c0),
                sig12(m.fallback_rate),
            ]
        })
        .collect();
    let header = [
        "n",
        "codebook_seed",
        "mfap",
        "mfap_exponent",
        "frp",
        "key_leak",
        "src_leak",
        "pr_c0",
        "fallback_rate",
    ];
    emit(
        Report {
            command: "sweep-exponent",
            inputs,
            params: json!({
                "aux": a.code.aux,
                "ns": a.ns,
                "delta": a.code.delta,
                "eps": a.code.eps,
            }),
            seed: Some(a.code.seed),
            body: csv_bytes(&header, rows)?,
        },
        &a.out,
    )
}

fn cmd_validate_source(a: &ValidateArgs) -> Outcome<()> {
    let src = load_source(&a.source)?;
    let degraded_gap = cond_mutual_info(&src, &["x"], &["z"], &["y"])?;
    let report = json!({
        "valid": true,
        "sizes": {
            "x": src.axis("x")?.size,
            "y": src.axis("y")?.size,
            "z": src.axis("z")?.size,
        },
        "h_x": entropy(&src, &["x"])?,
        "i_xy": mutual_info(&src, &["x"], &["y"])?,
        "i_xz": mutual_info(&src, &["x"], &["z"])?,
        "i_xz_given_y": degraded_gap,
        "degraded": degraded_gap <= DEGRADED_TOL,
    });
    emit(
        Report {
            command: "validate-source",
            inputs: vec![a.source.clone()],
            params: json!({}),
            seed: None,
            body: json_bytes(&report),
        },
        &a.out,
    )
}

fn configure_threads() -> Outcome<()> {
    let Ok(value) = std::env::var("KEYTRADE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| input_error(anyhow::anyhow!("KEYTRADE_THREADS must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| io_error(e.into()))
}

fn run(cli: &Cli) -> Outcome<()> {
    configure_threads()?;
    match &cli.command {
        Command::Region(a) => cmd_region(a),
        Command::BinaryExample(a) => cmd_binary_example(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::SweepExponent(a) => cmd_sweep_exponent(a),
        Command::ValidateSource(a) => cmd_validate_source(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(0.09732516678942318), "0.0973251667894");
        assert_eq!(sig12(2.0), "2");
        assert_eq!(sig12(f64::INFINITY), "inf");
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("a/b.csv")), PathBuf::from("a/b.csv.manifest.json"));
    }
}

//! `rtd-rc`: train, evaluate and analyse the RTD reservoir from the shell.
//!
//! Exit codes: 0 success, 1 `--check` gate failure, 2 I/O or configuration
//! error, 3 numerical failure.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};

use rtd_rc::experiment::{self, data_root, ExperimentConfig, RunReport, Trainer};

#[derive(Parser)]
#[command(
    name = "rtd-rc",
    version,
    about = "Resonant-tunnelling-diode reservoir computing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode, train the readout and evaluate on the held-out split.
    Train(TrainArgs),
    /// Score a saved readout on the configured test split.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory holding weights.csv and model.json.
        #[arg(long)]
        model: PathBuf,
    },
    /// One training run per V_max on a shared split.
    SweepVmax {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated V_max values.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1.5,2.5,3.5,4.5,5.0")]
        v_list: Vec<f64>,
        /// Enforce the sweep thresholds from the config.
        #[arg(long)]
        check: bool,
    },
    /// Output spectra of the diode driven by pure tones.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated drive amplitudes (V).
        #[arg(long, value_delimiter = ',', default_value = "0.5,1.5,2.5,3.5,4.5,5.0")]
        amplitudes: Vec<f64>,
        /// Harmonic threshold relative to the fundamental (dBc, negative).
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
    },
    /// Tabulate I(V) and dI/dV on a uniform grid.
    IvCurve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        v_min: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        v_max: f64,
        #[arg(long, default_value_t = 1001)]
        points: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Download MNIST into the data directory and verify checksums.
    FetchData {
        /// Destination root; defaults to $RTD_RC_DATA_DIR or ./data.
        #[arg(long)]
        dest: Option<PathBuf>,
        /// HTTP base URL or local directory holding the .gz archives.
        #[arg(long, default_value = MNIST_MIRROR)]
        source: String,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pulse amplitude of the encoder (V).
    #[arg(long)]
    v_max: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_parser = parse_trainer)]
    trainer: Option<Trainer>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Keep only the first N samples of the dataset.
    #[arg(long)]
    limit: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fail with exit code 1 if test accuracy misses the threshold.
    #[arg(long)]
    check: bool,
}

fn parse_trainer(s: &str) -> Result<Trainer, String> {
    s.parse().map_err(|e: rtd_rc::Error| e.to_string())
}

/// Gate failure under `--check`.
#[derive(Debug)]
struct GateFailure(String);

impl std::fmt::Display for GateFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for GateFailure {}

fn load_config(path: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.dataset.resolve(&data_root());
    Ok(cfg)
}

impl CommonArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(v) = self.v_max {
            cfg.encoding.v_max = v;
        }
        if let Some(l) = self.lambda {
            cfg.readout.lambda = l;
        }
        if let Some(e) = self.epochs {
            cfg.readout.epochs = e;
        }
        if let Some(t) = self.trainer {
            cfg.readout.trainer = t;
        }
        if let Some(d) = &self.out_dir {
            cfg.out_dir = d.clone();
        }
        if let Some(n) = self.limit {
            cfg.dataset.limit = Some(n);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(r: &RunReport) {
    println!(
        "train_accuracy={:.4} test_accuracy={:.4} train_loss={:.6} test_loss={:.6} ({} train / {} test, {:.1}s)",
        r.train_accuracy, r.test_accuracy, r.train_loss, r.test_loss, r.train_samples, r.test_samples, r.wall_clock_secs
    );
    println!("history: {}", r.history_path.display());
    println!("confusion: {}", r.confusion_path.display());
    println!("config_hash: {}", r.config_hash);
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.common.config()?;
            if args.common.print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(());
            }
            let report = experiment::run_train(&cfg)?;
            print_report(&report);
            if args.check && report.test_accuracy < cfg.check.min_test_accuracy {
                return Err(GateFailure(format!(
                    "test accuracy {:.4} < {}",
                    report.test_accuracy, cfg.check.min_test_accuracy
                ))
                .into());
            }
        }
        Command::Eval { common, model } => {
            let cfg = common.config()?;
            if common.print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(());
            }
            let r = experiment::run_eval(&cfg, &model)?;
            println!(
                "accuracy={:.4} mse_loss={:.6} ({} samples)",
                r.accuracy, r.mse_loss, r.test_samples
            );
            println!("confusion: {}", r.confusion_path.display());
        }
        Command::SweepVmax {
            common,
            v_list,
            check,
        } => {
            let cfg = common.config()?;
            if common.print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(());
            }
            let out = experiment::run_sweep(&cfg, &v_list)?;
            println!("v_max,test_accuracy,test_loss");
            for (v, run) in &out.runs {
                match run {
                    Ok(r) => println!("{v},{:.4},{:.6}", r.test_accuracy, r.test_loss),
                    Err(e) => eprintln!("error: V_max = {v}: {e}"),
                }
            }
            println!("combined: {}", out.csv_path.display());
            if let Some((_, Err(e))) = out.runs.iter().find(|(_, r)| r.is_err()) {
                bail!(rtd_rc::Error::Config(format!(
                    "{} of {} sweep runs failed; first: {e}",
                    out.failures(),
                    out.runs.len()
                )));
            }
            if check {
                sweep_gate(&cfg, &v_list, &out)?;
            }
        }
        Command::Spectrum {
            common,
            amplitudes,
            threshold,
        } => {
            let mut cfg = common.config()?;
            if let Some(t) = threshold {
                cfg.spectrum.threshold_dbc = t;
            }
            if common.print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(());
            }
            let rows = experiment::run_spectrum(&amplitudes, &cfg.device, &cfg.spectrum, &cfg.out_dir)?;
            println!("amplitude,harmonics");
            for r in &rows {
                println!("{},{}", r.amplitude, r.harmonics);
            }
        }
        Command::IvCurve {
            config,
            v_min,
            v_max,
            points,
            out_dir,
        } => {
            let cfg = load_config(config.as_deref())?;
            let dir = out_dir.unwrap_or(cfg.out_dir);
            let rows = experiment::run_iv_curve(&cfg.device, v_min, v_max, points, &dir)?;
            println!(
                "{} rows written to {}",
                rows.len(),
                dir.join("iv_curve.csv").display()
            );
        }
        Command::FetchData { dest, source } => {
            let root = dest.unwrap_or_else(data_root);
            fetch_mnist(&source, &root.join("mnist"))?;
        }
    }
    Ok(())
}

fn sweep_gate(cfg: &ExperimentConfig, v_list: &[f64], out: &experiment::SweepOutcome) -> anyhow::Result<()> {
    let lo = v_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v_list.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let acc_lo = out
        .test_accuracy(lo)
        .ok_or_else(|| anyhow!("no result for V_max = {lo}"))?;
    let acc_hi = out
        .test_accuracy(hi)
        .ok_or_else(|| anyhow!("no result for V_max = {hi}"))?;
    let c = &cfg.check;
    if acc_hi - acc_lo < c.min_sweep_gain {
        return Err(GateFailure(format!(
            "accuracy gain {:.4} from V_max {lo} to {hi} < {}",
            acc_hi - acc_lo,
            c.min_sweep_gain
        ))
        .into());
    }
    if !(c.low_vmax_accuracy_min..=c.low_vmax_accuracy_max).contains(&acc_lo) {
        return Err(GateFailure(format!(
            "accuracy {acc_lo:.4} at V_max {lo} outside [{}, {}]",
            c.low_vmax_accuracy_min, c.low_vmax_accuracy_max
        ))
        .into());
    }
    Ok(())
}

const MNIST_MIRROR: &str = "https://storage.googleapis.com/cvdf-datasets/mnist/";

/// File name and SHA-256 of the decompressed file.
const MNIST_FILES: [(&str, &str); 4] = [
    (
        "train-images-idx3-ubyte",
        "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db",
    ),
    (
        "train-labels-idx1-ubyte",
        "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5",
    ),
    (
        "t10k-images-idx3-ubyte",
        "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7",
    ),
    (
        "t10k-labels-idx1-ubyte",
        "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2",
    ),
];

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn fetch_archive(source: &str, name: &str) -> anyhow::Result<Vec<u8>> {
    let mut gz = Vec::new();
    if source.starts_with("http://") || source.starts_with("https://") {
        let url = format!("{}/{name}.gz", source.trim_end_matches('/'));
        let resp = ureq::get(&url)
            .call()
            .with_context(|| format!("downloading {url}"))?;
        resp.into_body()
            .into_reader()
            .read_to_end(&mut gz)
            .with_context(|| format!("reading {url}"))?;
    } else {
        let path = Path::new(source).join(format!("{name}.gz"));
        gz = fs::read(&path).map_err(|e| rtd_rc::Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    let mut raw = Vec::new();
    GzDecoder::new(gz.as_slice())
        .read_to_end(&mut raw)
        .with_context(|| format!("decompressing {name}.gz"))?;
    Ok(raw)
}

fn fetch_mnist(source: &str, dest: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dest).map_err(|e| rtd_rc::Error::Io {
        path: dest.into(),
        source: e,
    })?;
    for (name, expected) in MNIST_FILES {
        let target = dest.join(name);
        if let Ok(existing) = fs::read(&target) {
            if hex_digest(&existing) == expected {
                println!("{name}: present");
                continue;
            }
        }
        let raw = fetch_archive(source, name)?;
        let got = hex_digest(&raw);
        if got != expected {
            bail!(rtd_rc::Error::Config(format!(
                "{name}: sha256 {got} does not match {expected}"
            )));
        }
        fs::write(&target, &raw).map_err(|e| rtd_rc::Error::Io {
            path: target.clone(),
            source: e,
        })?;
        println!("{name}: ok");
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<GateFailure>().is_some() {
        return 1;
    }
    match err.downcast_ref::<rtd_rc::Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

/// Error chain joined with `: `, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}

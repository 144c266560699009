use clap::{Args, Parser, Subcommand};
use nvlab::commands::{self, CliError, EXIT_CONFIG, EXIT_FAILURE};
use nvlab::config::{RunConfig, Settings};
use nvlab::selftest;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "nvlab", version, about = "Mollified moments and non-vanishing census for even Dirichlet L-functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weighted census of non-vanishing central values, with moments.
    Census,
    /// Mollified first and second moments per modulus.
    Moments,
    /// Optimal mollifier polynomials and the resulting proportion.
    Optimize,
    /// Z(x) on a geometric grid.
    KernelTable,
    /// Quintuple exponential sums against the trivial bound.
    ExpsumBench,
    /// Internal consistency checks.
    Selftest,
}

/// Every flag overrides the same key from `--config`.
#[derive(Args, Debug)]
struct Flags {
    /// File of `key = value` lines applied before the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "Q", global = true)]
    q: Option<String>,
    #[arg(long, global = true)]
    eta1: Option<String>,
    #[arg(long, global = true)]
    eta2: Option<String>,
    #[arg(long, global = true)]
    eps_split: Option<String>,
    /// Residue of the moduli modulo D.
    #[arg(long, global = true)]
    a: Option<String>,
    #[arg(long = "D", global = true)]
    d: Option<String>,
    #[arg(long, global = true)]
    theta1: Option<String>,
    #[arg(long, global = true)]
    theta2: Option<String>,
    /// Comma-separated coefficients a0,a1,... (rationals allowed).
    #[arg(long, global = true)]
    poly1: Option<String>,
    #[arg(long, global = true)]
    poly2: Option<String>,
    #[arg(long, global = true)]
    tau_nv: Option<String>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true)]
    threads: Option<String>,
    /// JSONL file of central values reused across runs.
    #[arg(long, global = true)]
    cache: Option<String>,
    #[arg(long, global = true)]
    out: Option<String>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Run even when the parameter constraints fail.
    #[arg(long, global = true)]
    force: bool,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// all, or a comma list of selftest suites.
    #[arg(long, global = true)]
    suite: Option<String>,
    #[arg(long, global = true)]
    degree: Option<String>,
    /// Interpolate Z from a table.
    #[arg(long, global = true)]
    fast_kernel: bool,
    #[arg(long, global = true)]
    c0: Option<String>,
    #[arg(long, global = true)]
    x_min: Option<String>,
    #[arg(long, global = true)]
    x_max: Option<String>,
    #[arg(long, global = true)]
    points: Option<String>,
    #[arg(long, global = true)]
    bench_sizes: Option<String>,
    #[arg(long, global = true)]
    bench_trials: Option<String>,
}

impl Flags {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = Settings::defaults();
        if let Some(path) = &self.config {
            s.apply_file(path)?;
        }
        let pairs = [
            ("Q", &self.q),
            ("eta1", &self.eta1),
            ("eta2", &self.eta2),
            ("eps_split", &self.eps_split),
            ("a", &self.a),
            ("D", &self.d),
            ("theta1", &self.theta1),
            ("theta2", &self.theta2),
            ("poly1", &self.poly1),
            ("poly2", &self.poly2),
            ("tau_nv", &self.tau_nv),
            ("threads", &self.threads),
            ("cache", &self.cache),
            ("out", &self.out),
            ("format", &self.format),
            ("seed", &self.seed),
            ("suite", &self.suite),
            ("degree", &self.degree),
            ("c0", &self.c0),
            ("x_min", &self.x_min),
            ("x_max", &self.x_max),
            ("points", &self.points),
            ("bench_sizes", &self.bench_sizes),
            ("bench_trials", &self.bench_trials),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                s.set(key, v)?;
            }
        }
        if self.force {
            s.set("force", "true")?;
        }
        if self.fast_kernel {
            s.set("fast_kernel", "true")?;
        }
        Ok(s)
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = RunConfig::from_settings(&cli.flags.settings()?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Census => commands::cmd_census(&cfg),
        Command::Moments => commands::cmd_moments(&cfg),
        Command::Optimize => commands::cmd_optimize(&cfg),
        Command::KernelTable => commands::cmd_kernel_table(&cfg),
        Command::ExpsumBench => commands::cmd_expsum_bench(&cfg),
        Command::Selftest => selftest::run(&cfg).map_err(CliError::Invalid),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    debug_assert!(code == 0 || code == EXIT_FAILURE || code == EXIT_CONFIG);
    ExitCode::from(code as u8)
}

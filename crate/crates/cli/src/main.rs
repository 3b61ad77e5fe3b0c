use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frontlab::boundary::CaseId;
use frontlab::experiments::{
    emit_report, fit_ebert_coefficient, run_psi_suite, run_theorem1_case, run_theorem2_rates,
    ExperimentError, Report, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "frontlab",
    version,
    about = "Linearised FKPP with an absorbing moving boundary"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the front-frame PDE and compare with the predicted amplitude or rate
    Run(Common),
    /// Scan the 1/sqrt(t) coefficient c for the fastest late-time convergence
    FitC(Common),
    /// Tabulate psi_t, psi_inf and the drift gap by Monte Carlo
    Psi(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file with key=value lines
    config: PathBuf,
    #[arg(long)]
    outdir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo ensembles (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig, String> {
        let text = std::fs::read_to_string(&self.config)
            .map_err(|e| format!("{}: {e}", self.config.display()))?;
        let mut cfg =
            ScenarioConfig::parse(&text).map_err(|e| format!("{}: {e}", self.config.display()))?;
        let overrides = [
            ("case", self.case.clone()),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("nu", self.nu.map(|v| v.to_string())),
            ("a", self.a.map(|v| v.to_string())),
            ("c", self.c.map(|v| v.to_string())),
            ("eta", self.eta.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            (
                "outdir",
                self.outdir.as_ref().map(|p| p.display().to_string()),
            ),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v).map_err(|e| format!("--{key}: {e}"))?;
            }
        }
        Ok(cfg)
    }
}

fn run(cmd: &Command, cfg: &ScenarioConfig) -> Result<Report, ExperimentError> {
    let mut report = Report::default();
    match cmd {
        Command::Run(_) if cfg.case.case == CaseId::Theorem2 => {
            let (r, snaps) = run_theorem2_rates(cfg)?;
            match &r.fit {
                Ok(f) => println!(
                    "alpha_ref {:.6e} ± {:.1e}; |d(t)| ~ {:.4} t^-{:.4} on [{}, {}] ({} points)",
                    r.alpha_ref.alpha.value,
                    r.alpha_ref.alpha.stderr,
                    f.prefactor,
                    f.p,
                    f.window.0,
                    f.window.1,
                    f.n_points
                ),
                Err(e) => println!(
                    "alpha_ref {:.6e}; rate fit rejected: {e}",
                    r.alpha_ref.alpha.value
                ),
            }
            report.theorem2 = Some(r);
            report.snapshots = snaps;
        }
        Command::Run(_) => {
            let (r, snaps) = run_theorem1_case(cfg)?;
            println!(
                "case {}: alpha_hat {:.6e} vs predicted {:.6e} ({:+.2}%), shape error {:.4}{}",
                r.case,
                r.final_alpha_hat(),
                r.alpha_pred,
                100.0 * r.relative_deviation(),
                r.shape_error,
                if r.pre_asymptotic {
                    ", pre-asymptotic"
                } else {
                    ""
                }
            );
            report.theorem1 = Some(r);
            report.snapshots = snaps;
        }
        Command::FitC(_) => {
            let f = fit_ebert_coefficient(cfg)?;
            println!(
                "c_hat {:.4} ± {:.4}, curvature {:.3e}{}",
                f.minimum.c_hat,
                f.c_halfwidth,
                f.minimum.curvature,
                if f.minimum.inconclusive {
                    " (inconclusive)"
                } else {
                    ""
                }
            );
            report.ebert = Some(f);
        }
        Command::Psi(_) => {
            report.psi = run_psi_suite(cfg)?;
            for r in &report.psi {
                println!(
                    "y={} t={}: psi_t {:.4} psi_inf {:.4} gap {:.4} (pred {:.4}) residual {:.4} (envelope {:.4})",
                    r.y, r.t, r.paired.psi_t.mean, r.paired.psi_inf.mean, r.paired.gap.mean, r.gap_pred, r.paired.residual, r.envelope
                );
            }
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run(c) | Command::FitC(c) | Command::Psi(c) => c,
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not set thread count: {e}");
        }
    }
    let cfg = match common.scenario() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome =
        run(&cli.command, &cfg).and_then(|report| emit_report(&cfg, &report, &cfg.outdir));
    match outcome {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

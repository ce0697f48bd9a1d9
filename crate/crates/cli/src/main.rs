use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pmchem::experiments::studies::{
    cutoff_suite, gns_suite, refinement_verdicts, semigroup_suite, write_refinement_csv, CUTOFF_KAPPAS,
};
use pmchem::experiments::{eps_sweep, output_root, refinement_study, report, run_scenario, RunConfig, Verdict};

#[derive(Parser)]
#[command(
    name = "pmchem",
    version,
    about = "Porous-medium chemotaxis runs and estimate checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write snapshots, ledgers and a manifest.
    Run(ScenarioArgs),
    /// Run one member per ε and tabulate successive distances.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Strictly decreasing, at least three values.
        #[arg(long = "eps-list", value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
    },
    /// Convergence orders against the closed-form oracles.
    Refine {
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Property suites for the cut-off, the semigroup and the GNS constant.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, value_delimiter = ',')]
        kappa: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        seed: u64,
        /// Radial samples per cut-off.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Random fields per GNS corpus.
        #[arg(long, default_value_t = 50)]
        corpus: usize,
    },
    /// Rebuild the ledgers of a finished run and compare fitted constants.
    Report { dir: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Cutoff,
    Semigroup,
    Gns,
    All,
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML run configuration.
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Cells per axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; defaults to $PMCHEM_OUT, then ./runs.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<pmchem::Error> for Failure {
    fn from(e: pmchem::Error) -> Self {
        match e {
            pmchem::Error::Config(_) | pmchem::Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(name)) => RunConfig::preset(name)?,
            (None, None) => return Err(Failure::Usage("give a config file or --preset".into())),
        };
        if let Some(t) = self.horizon {
            cfg.control.horizon = t;
        }
        if let Some(eps) = self.eps {
            cfg.params = cfg.params.with_eps(eps)?;
        }
        if let Some(n) = self.grid {
            cfg.grid = cfg.grid.with_cells(n)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn root(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(output_root)
    }
}

fn print_verdicts(verdicts: &[Verdict]) -> bool {
    for v in verdicts {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} [{}] {}: {:.6e} (limit {:.6e})",
            v.suite, v.name, v.measured, v.limit
        );
    }
    verdicts.iter().all(|v| v.pass)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let outcome = run_scenario(&cfg, &args.root())?;
            println!("{}", outcome.dir.display());
            println!(
                "t = {}, accepted {}, rejected {}, sup u = {:.6}, clipped mass {:.3e}",
                outcome.summary.t_final,
                outcome.summary.accepted,
                outcome.summary.rejected,
                outcome.summary.sup_u_inf,
                outcome.summary.total_clipped_mass
            );
            Ok(true)
        }
        Command::Sweep { scenario, eps_list } => {
            let cfg = scenario.resolve()?;
            let table = eps_sweep(&cfg, &eps_list)?;
            let dir = scenario.root().join(format!("{}-sweep", cfg.name));
            std::fs::create_dir_all(&dir)?;
            table.write_csv(std::fs::File::create(dir.join("sweep.csv"))?)?;
            write_json(&dir.join("sweep.json"), &table)?;
            for (k, d) in table.distances.iter().enumerate() {
                println!("eps {} -> {}: {:.6e}", table.eps[k], table.eps[k + 1], d);
            }
            println!("cauchy: {}", table.cauchy);
            Ok(table.cauchy)
        }
        Command::Refine { levels, m, out } => {
            let rows = refinement_study(levels, m)?;
            let dir = out.unwrap_or_else(output_root);
            std::fs::create_dir_all(&dir)?;
            write_refinement_csv(&rows, std::fs::File::create(dir.join("refinement.csv"))?)?;
            Ok(print_verdicts(&refinement_verdicts(&rows)))
        }
        Command::Verify {
            suite,
            kappa,
            seed,
            samples,
            corpus,
        } => {
            let mut verdicts = Vec::new();
            if matches!(suite, Suite::Cutoff | Suite::All) {
                let ks = if kappa.is_empty() {
                    CUTOFF_KAPPAS.to_vec()
                } else {
                    kappa.clone()
                };
                verdicts.extend(cutoff_suite(&ks, samples)?.1);
            }
            if matches!(suite, Suite::Semigroup | Suite::All) {
                verdicts.extend(semigroup_suite()?.1);
            }
            if matches!(suite, Suite::Gns | Suite::All) {
                let ks = if kappa.is_empty() {
                    vec![0.2, 0.1]
                } else {
                    kappa.clone()
                };
                verdicts.extend(gns_suite(&ks, 32, corpus, seed)?.1);
            }
            Ok(print_verdicts(&verdicts))
        }
        Command::Report { dir } => {
            let check = report(&dir)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&check).map_err(|e| Failure::Runtime(e.to_string()))?
            );
            Ok(check.reproduced)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

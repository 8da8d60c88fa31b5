use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use navier_lab::{commands, LabError, Report, RunConfig};

#[derive(Parser)]
#[command(name = "navier-lab", version, about = "Radial biharmonic eigenvalue problems with Navier boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regularity verdict for a family and dimension.
    Predict(Common),
    /// Exponent bootstrap trace.
    Bootstrap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Continue the minimal branch; writes branch.csv and summary.json.
    Branch {
        #[command(flatten)]
        common: Common,
        /// Also write every point's (r, u, v) under fields/.
        #[arg(long)]
        dump_fields: bool,
    },
    /// Branch plus estimate certification; writes estimates.csv and verdict.json.
    Verify(Common),
    /// Branches over a family × dimension grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated family specs.
        #[arg(long)]
        families: Option<String>,
        /// Dimension range `a..b`, inclusive.
        #[arg(long)]
        dims: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// `exp`, `power:p=<real>` or `mems:p=<real>`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long = "N")]
    dim: Option<usize>,
    /// Interior grid nodes.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m_max: Option<f64>,
    /// Newton tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn overrides(&self, map: &mut BTreeMap<&'static str, String>) {
        let mut put = |k, v: Option<String>| {
            if let Some(v) = v {
                map.insert(k, v);
            }
        };
        put("family", self.family.clone());
        put("N", self.dim.map(|x| x.to_string()));
        put("n", self.n.map(|x| x.to_string()));
        put("m_max", self.m_max.map(|x| x.to_string()));
        put("tol", self.tol.map(|x| x.to_string()));
        put("out", self.out.as_ref().map(|x| x.display().to_string()));
        put("jobs", self.jobs.map(|x| x.to_string()));
    }
}

fn resolve(common: &Common, extra: BTreeMap<&'static str, String>) -> Result<RunConfig, LabError> {
    let mut config = RunConfig::default();
    if let Some(path) = &common.config {
        config.apply_file(path)?;
    }
    let mut map = extra;
    common.overrides(&mut map);
    config.apply_overrides(&map)?;
    Ok(config)
}

fn run(cli: Cli) -> Result<Report, LabError> {
    let mut extra = BTreeMap::new();
    match cli.command {
        Command::Predict(common) => commands::predict(&resolve(&common, extra)?),
        Command::Bootstrap { common, q, alpha, beta, steps } => {
            for (k, v) in [("q", q), ("alpha", alpha), ("beta", beta)] {
                if let Some(v) = v {
                    extra.insert(k, v.to_string());
                }
            }
            if let Some(s) = steps {
                extra.insert("steps", s.to_string());
            }
            commands::bootstrap(&resolve(&common, extra)?)
        }
        Command::Branch { common, dump_fields } => {
            if dump_fields {
                extra.insert("dump_fields", "true".into());
            }
            commands::branch(&resolve(&common, extra)?)
        }
        Command::Verify(common) => commands::verify(&resolve(&common, extra)?),
        Command::Sweep { common, families, dims } => {
            if let Some(f) = families {
                extra.insert("families", f);
            }
            if let Some(d) = dims {
                extra.insert("dims", d);
            }
            commands::sweep(&resolve(&common, extra)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            match serde_json::to_string_pretty(&report.record) {
                // A closed pipe downstream is not an error of ours.
                Ok(text) => drop(writeln!(std::io::stdout().lock(), "{text}")),
                Err(e) => {
                    eprintln!("navier-lab: {e}");
                    return ExitCode::from(4);
                }
            }
            ExitCode::from(report.code)
        }
        Err(e) => {
            eprintln!("navier-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

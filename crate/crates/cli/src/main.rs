use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use pmt_core::catalog::{CatalogEntry, VerificationCase};
use pmt_core::verify::{
    self, check_closed_form, check_cyclic, check_equivalence_tol, check_solution_map_ids,
    check_theorem_relation, replay, reports_csv, CheckReport, Grid, SampleMode, SuiteConfig,
    SuiteReport, CLOSED_FORM_SAMPLES,
};
use pmt_core::{Catalog, Error, Params, Result};

#[derive(Parser)]
#[command(
    name = "pmt",
    version,
    about = "Verify point and potential transformations between nonlinear diffusion equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List catalog entries with their anchors.
    List {
        #[arg(long, value_enum, default_value_t = ListFormat::Text)]
        format: ListFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a transformation maps solutions onto solutions.
    Verify {
        #[command(flatten)]
        case: CaseArgs,
        /// Replay a single sample, e.g. `x=1.1,t=0.9,u=1.3,u_x=-0.7,u_xx=1.9`.
        #[arg(long)]
        at: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check a cyclic order and any closed-form iterate.
    Cycle {
        #[command(flatten)]
        case: CaseArgs,
        /// Order to test; defaults to the order the catalog declares.
        #[arg(long)]
        order: Option<u32>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check that a transformation carries one closed-form solution onto another.
    MapSolution {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value = "S2")]
        from: String,
        #[arg(long, default_value = "S1")]
        to: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the point-transformation relation between right-hand sides.
    Relation {
        #[command(flatten)]
        case: CaseArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run every check over the catalog's default sweeps.
    Suite {
        /// Flat `key = value` configuration file; flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print the effective configuration and exit.
        #[arg(long)]
        dump_config: bool,
        /// Comma-separated catalog ids to run.
        #[arg(long)]
        cases: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        cyclic_tol: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long = "case")]
    id: String,
    /// Parameter binding `name=re[,im]`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, Complex64)>,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Master seed; defaults to $PMT_SEED, then a built-in value.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum ListFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Real,
    ComplexPerturbed,
}

fn parse_param(s: &str) -> std::result::Result<(String, Complex64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=re[,im], got `{s}`"))?;
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{p}` is not a number in `{s}`"))
    };
    let z = match value.split_once(',') {
        Some((re, im)) => Complex64::new(num(re)?, num(im)?),
        None => Complex64::new(num(value)?, 0.0),
    };
    Ok((name.trim().to_string(), z))
}

fn parse_at(s: &str) -> Result<BTreeMap<String, Complex64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|pair| {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                Error::Parse(format!("expected name=value in --at, got `{pair}`"))
            })?;
            let z = Complex64::from_str(v.trim())
                .map_err(|_| Error::Parse(format!("`{v}` is not a number in --at")))?;
            Ok((k.trim().to_string(), z))
        })
        .collect()
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("PMT_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Configuration(format!("PMT_SEED `{s}` is not an integer"))),
        Err(_) => Ok(None),
    }
}

impl CommonArgs {
    fn apply(&self, cfg: &mut SuiteConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.samples {
            cfg.set("samples", &n.to_string())?;
        }
        if let Some(t) = self.tol {
            cfg.set("tol", &t.to_string())?;
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Real => SampleMode::Real,
                ModeArg::ComplexPerturbed => SampleMode::ComplexPerturbed,
            };
        }
        Ok(())
    }

    fn config(&self) -> Result<SuiteConfig> {
        let mut cfg = SuiteConfig::default();
        if let Some(seed) = env_seed()? {
            cfg.seed = seed;
        }
        self.apply(&mut cfg)?;
        Ok(cfg)
    }

    fn emit(&self, text: &str) -> Result<()> {
        emit(self.out.as_ref(), text)
    }

    fn render(&self, report: &SuiteReport) -> Result<String> {
        match self.format {
            Format::Json => Ok(report.to_json() + "\n"),
            Format::Csv => reports_csv(&report.cases),
            Format::Text => Ok(report.to_text()),
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// The bound cases a command runs: the given binding, or the entry's
/// default sweep when no parameters are supplied.
fn cases(catalog: &Catalog, args: &CaseArgs) -> Result<Vec<VerificationCase>> {
    let entry: &CatalogEntry = catalog.entry(&args.id)?;
    if args.params.is_empty() && !entry.free_params.is_empty() {
        return entry
            .all_bindings()
            .iter()
            .map(|b| entry.instantiate(b))
            .collect();
    }
    let params: Params = args.params.iter().cloned().collect();
    Ok(vec![entry.instantiate(&params)?])
}

fn finish(common: &CommonArgs, seed: u64, reports: Vec<CheckReport>) -> Result<bool> {
    let report = SuiteReport::from_reports(seed, reports);
    common.emit(&common.render(&report)?)?;
    Ok(report.pass)
}

fn run(cli: Cli) -> Result<bool> {
    let catalog = Catalog::new();
    match cli.command {
        Command::List { format, out } => {
            let text = match format {
                ListFormat::Json => {
                    serde_json::to_string_pretty(&catalog.export()?).expect("catalog serializes")
                        + "\n"
                }
                ListFormat::Text => {
                    let mut s = String::new();
                    for d in catalog.list_cases() {
                        let params = if d.free_params.is_empty() {
                            "-".to_string()
                        } else {
                            d.free_params.join(",")
                        };
                        s += &format!(
                            "{:<7} {:<8} {:<10} {}\n",
                            d.id,
                            d.kind.name(),
                            params,
                            d.anchor
                        );
                    }
                    s
                }
            };
            emit(out.as_ref(), &text)?;
            Ok(true)
        }
        Command::Verify { case, at, common } => {
            let cfg = common.config()?;
            let mut reports = Vec::new();
            for cs in cases(&catalog, &case)? {
                reports.push(match &at {
                    Some(at) => replay(&cs, &parse_at(at)?, cfg.tol)?,
                    None => check_equivalence_tol(&cs, &cfg.sampling(), cfg.tol),
                });
            }
            finish(&common, cfg.seed, reports)
        }
        Command::Cycle {
            case,
            order,
            common,
        } => {
            let mut cfg = common.config()?;
            if let Some(t) = common.tol {
                cfg.cyclic_tol = t;
            } else {
                cfg.cyclic_tol = verify::DEFAULT_CYCLIC_TOL;
            }
            let mut reports = Vec::new();
            for cs in cases(&catalog, &case)? {
                let Some(ord) = order.or(cs.cyclic_order) else {
                    if case.params.is_empty() {
                        continue;
                    }
                    return Err(Error::Configuration(format!(
                        "{} declares no cyclic order for {}; pass --order",
                        cs.id,
                        cs.param_label()
                    )));
                };
                reports.push(check_cyclic(&cs, ord, &cfg.sampling(), cfg.cyclic_tol));
                if cs.closed_form.is_some() {
                    let s = verify::SamplingConfig {
                        count: CLOSED_FORM_SAMPLES.min(cfg.samples),
                        ..cfg.sampling()
                    };
                    reports.push(check_closed_form(&cs, 3, &s, cfg.cyclic_tol)?);
                }
            }
            if reports.is_empty() {
                return Err(Error::Configuration(format!(
                    "{} declares no cyclic order; pass --param and --order",
                    case.id
                )));
            }
            finish(&common, cfg.seed, reports)
        }
        Command::MapSolution {
            case,
            from,
            to,
            common,
        } => {
            let cfg = common.config()?;
            let tol = common.tol.unwrap_or(verify::DEFAULT_SOLUTION_TOL);
            let mut reports = Vec::new();
            for cs in cases(&catalog, &case)? {
                reports.push(check_solution_map_ids(
                    &cs,
                    &from,
                    &to,
                    &Grid::default(),
                    tol,
                )?);
            }
            finish(&common, cfg.seed, reports)
        }
        Command::Relation { case, common } => {
            let cfg = common.config()?;
            let mut reports = Vec::new();
            for cs in cases(&catalog, &case)? {
                reports.push(check_theorem_relation(&cs, &cfg.sampling(), cfg.tol)?);
            }
            finish(&common, cfg.seed, reports)
        }
        Command::Suite {
            config,
            dump_config,
            cases,
            workers,
            cyclic_tol,
            common,
        } => {
            // a config file's seed wins over PMT_SEED; flags win over both
            let mut cfg = match &config {
                Some(path) => SuiteConfig::parse(&fs::read_to_string(path)?)?,
                None => SuiteConfig {
                    seed: env_seed()?.unwrap_or(verify::DEFAULT_SEED),
                    ..SuiteConfig::default()
                },
            };
            common.apply(&mut cfg)?;
            if let Some(c) = cases {
                cfg.set("cases", &c)?;
            }
            if let Some(w) = workers {
                cfg.set("workers", &w.to_string())?;
            }
            if let Some(t) = cyclic_tol {
                cfg.set("cyclic_tol", &t.to_string())?;
            }
            if dump_config {
                common.emit(&cfg.to_config_string())?;
                return Ok(true);
            }
            let report = verify::run_suite(&catalog, &cfg)?;
            common.emit(&common.render(&report)?)?;
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

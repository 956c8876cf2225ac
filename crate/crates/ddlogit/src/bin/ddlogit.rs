//! Command-line front end: each subcommand is a thin wrapper over the
//! library. Options beyond the common trio (`--config`, `--seed`, `--out`)
//! live in a flat `key = value` config file.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ddlogit::cmle::{fit_cmle, select_dstar_bic, CmleOptions, PairMode};
use ddlogit::error::{DdError, Result};
use ddlogit::harness::{
    bus_report_text, hausman_test, load_bus_histories, mc_summary_csv, run_bus_replication,
    run_monte_carlo, Config, McConfig,
};
use ddlogit::histories::{read_panel_csv, write_panel_csv, ChoiceHistory};
use ddlogit::mle::{fit_mle_nfxp, MleOptions, RenewalMixtureTemplate};
use ddlogit::model::CostShape;
use ddlogit::simulate::{simulate_panel, DgpSpec, RcLaw};
use ddlogit::suffstats::{Variant, VariantKind};

#[derive(Parser)]
#[command(
    name = "ddlogit",
    about = "Dynamic discrete-choice panels: simulation, conditional and full-solution estimation"
)]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed for anything stochastic.
    #[arg(long, global = true, default_value_t = 12345)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a panel and write it as CSV.
    Simulate,
    /// Fit the conditional (fixed-effects) estimator to a panel CSV.
    FitCmle,
    /// Fit the full-solution mixture estimator to a panel CSV.
    FitMle,
    /// Select the duration cutoff by BIC on a panel CSV.
    SelectDstar,
    /// Specification test from two estimates given in the config.
    Hausman,
    /// Run a Monte Carlo experiment over a preset process.
    Montecarlo,
    /// Reproduce the bus-engine maintenance application end to end.
    BusReplication,
}

fn load_data(cfg: &Config) -> Result<Vec<ChoiceHistory>> {
    match cfg.get("data") {
        Some("bus") => Ok(load_bus_histories(cfg.get_or("include_zero_replacement", false)?)),
        Some(path) => read_panel_csv(File::open(path)?),
        None => Err(DdError::Config(
            "set 'data = <panel.csv>' (or 'data = bus') in the config".into(),
        )),
    }
}

fn parse_variant(cfg: &Config) -> Result<Variant> {
    let j: u8 = cfg.get_or("j", 1)?;
    let name = cfg.get("variant").unwrap_or("forward_dur_a2");
    let kind = match name {
        "myopic_no_dur" => VariantKind::MyopicNoDur,
        "forward_no_dur" => VariantKind::ForwardNoDur,
        "myopic_dur" => VariantKind::MyopicDur,
        "forward_dur_unrestricted" => VariantKind::ForwardDurUnrestricted,
        "forward_dur_a2" => VariantKind::ForwardDurAssumption2,
        other => return Err(DdError::Config(format!("unknown variant '{other}'"))),
    };
    let dstar = if kind == VariantKind::ForwardDurAssumption2 {
        let shared: u32 = cfg.get_or("dstar", 3)?;
        let mut per_choice = vec![0u32];
        for y in 1..=j {
            per_choice.push(cfg.get_or(&format!("dstar_{y}"), shared)?);
        }
        Some(per_choice)
    } else {
        None
    };
    Variant::new(kind, j, dstar)
}

fn parse_rc_law(cfg: &Config) -> Result<RcLaw> {
    if let Some(points) = cfg.get("rc_points") {
        let parsed = points
            .split(';')
            .map(|pair| {
                let (v, p) = pair.split_once(':').ok_or_else(|| {
                    DdError::Config("rc_points expects 'value:prob;value:prob'".into())
                })?;
                Ok((
                    v.trim().parse().map_err(|_| DdError::Config("bad rc value".into()))?,
                    p.trim().parse().map_err(|_| DdError::Config("bad rc prob".into()))?,
                ))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        return Ok(RcLaw::Finite(parsed));
    }
    if let Some(mean) = cfg.get("rc_mean") {
        let mean: f64 = mean.parse().map_err(|_| DdError::Config("bad rc_mean".into()))?;
        return Ok(RcLaw::Normal { mean, sd: cfg.get_or("rc_sd", 1.0)? });
    }
    Ok(RcLaw::Fixed(cfg.get_or("rc", 8.0)?))
}

fn run(cli: &Cli) -> Result<String> {
    let cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Simulate => {
            let dgp = match cfg.get("dgp") {
                Some(_) => {
                    let mut d = DgpSpec::preset(cfg.require("dgp")?)?;
                    d.n = cfg.get_or("n", d.n)?;
                    d.t = cfg.get_or("t", d.t)?;
                    d
                }
                None => DgpSpec {
                    rc_law: parse_rc_law(&cfg)?,
                    coef: cfg.get_or("coef", 1.0)?,
                    dstar: cfg.get_or("dstar", 3)?,
                    shape: CostShape::parse(cfg.get("shape").unwrap_or("linear"))?,
                    delta: cfg.get_or("delta", 0.95)?,
                    n: cfg.get_or("n", 1000)?,
                    t: cfg.get_or("t", 25)?,
                    init: (cfg.get_or("y0", 0)?, cfg.get_or("d1", 0)?),
                },
            };
            let panel = simulate_panel(&dgp, cli.seed)?;
            let mut buf = Vec::new();
            write_panel_csv(&mut buf, &panel.histories)?;
            Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
        }
        Command::FitCmle => {
            let data = load_data(&cfg)?;
            let variant = parse_variant(&cfg)?;
            let fit = fit_cmle(&data, &variant, &CmleOptions::default())?;
            let mut out = format!(
                "conditional fit: loglik = {:.6}, informative = {}, dropped = {}\n",
                fit.loglik, fit.n_informative, fit.n_dropped
            );
            for ((key, b), se) in fit
                .parameter_keys
                .iter()
                .zip(&fit.beta_star)
                .zip(fit.standard_errors())
            {
                out.push_str(&format!("{key:?} = {b:.6} ({se:.6})\n"));
            }
            Ok(out)
        }
        Command::FitMle => {
            let data = load_data(&cfg)?;
            let template = RenewalMixtureTemplate {
                k: cfg.get_or("types", 1)?,
                dstar: cfg.get_or("dstar", 3)?,
                shape: CostShape::parse(cfg.get("shape").unwrap_or("linear"))?,
                delta: cfg.get_or("delta", 0.95)?,
            };
            let mut start = vec![cfg.get_or("start_coef", 0.5)?];
            for k in 0..template.k {
                start.push(cfg.get_or(&format!("start_rc_{}", k + 1), 6.0 + k as f64)?);
            }
            start.extend(vec![0.0; template.k - 1]);
            let fit = fit_mle_nfxp(&data, &template, &[start], &MleOptions::default())?;
            let mut out = format!("full-solution fit: loglik = {:.6}\n", fit.loglik);
            for ((name, b), i) in fit.param_names.iter().zip(&fit.params).zip(0..) {
                out.push_str(&format!(
                    "{name} = {b:.6} ({:.6})\n",
                    fit.cov[(i, i)].max(0.0).sqrt()
                ));
            }
            let (contrast, se) = fit.cutoff_contrast();
            out.push_str(&format!("cutoff_contrast = {contrast:.6} ({se:.6})\n"));
            out.push_str(&format!("weights = {:?}\n", fit.weights()));
            Ok(out)
        }
        Command::SelectDstar => {
            let data = load_data(&cfg)?;
            let mode = match cfg.get("pair_mode").unwrap_or("full_history") {
                "full_history" => PairMode::FullHistory,
                "renewal_windows" => PairMode::RenewalWindows,
                other => return Err(DdError::Config(format!("unknown pair_mode '{other}'"))),
            };
            let sel = select_dstar_bic(&data, cfg.get_or("l", 8)?, mode)?;
            let mut out = String::from("dstar,loglik,bic\n");
            for c in &sel.candidates {
                out.push_str(&format!("{},{:.6},{:.6}\n", c.dstar, c.loglik, c.bic));
            }
            out.push_str(&format!("selected = {}\n", sel.selected));
            if let (Some(b), Some(se)) = (sel.beta_at_selected, sel.se_at_selected) {
                out.push_str(&format!("estimate_at_selected = {b:.6} ({se:.6})\n"));
            }
            Ok(out)
        }
        Command::Hausman => {
            let beta_c: f64 = cfg.require("beta_robust")?;
            let se_c: f64 = cfg.require("se_robust")?;
            let beta_m: f64 = cfg.require("beta_efficient")?;
            let se_m: f64 = cfg.require("se_efficient")?;
            let h = hausman_test(beta_c, se_c * se_c, beta_m, se_m * se_m);
            Ok(format!(
                "statistic = {:.6}\np_value = {:.6}\nvar_diff = {:.6}\nclamped = {}\n",
                h.statistic, h.p_value, h.var_diff, h.clamped
            ))
        }
        Command::Montecarlo => {
            let mc = McConfig::from_config(&cfg, cli.seed)?;
            let summary = run_monte_carlo(&mc)?;
            Ok(mc_summary_csv(&summary))
        }
        Command::BusReplication => {
            let delta = cfg.get_or("delta", 0.95)?;
            let dstar_max = cfg.get_or("dstar_max", 8)?;
            let lo = cfg.get_or("grid_min", 3)?;
            let hi = cfg.get_or("grid_max", 9)?;
            let report = run_bus_replication(delta, dstar_max, lo..=hi)?;
            Ok(bus_report_text(&report))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            let result = match &cli.out {
                Some(path) => std::fs::write(path, text).map_err(DdError::from),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(DdError::from),
            };
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

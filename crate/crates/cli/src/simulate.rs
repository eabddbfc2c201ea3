use std::path::PathBuf;


use krr_deriv::simharness::{run_montecarlo, RmseReport, SimulationConfig};

use crate::args::SimulateArgs;
use crate::error::{CliError, CliResult};
use crate::files::{num, opt_num, Artifacts, Table};
use crate::Outcome;

pub const FULL_REPLICATIONS: usize = 100;

pub fn simulate(args: &SimulateArgs, seed: Option<u64>, art: &mut Artifacts) -> CliResult<Outcome> {
    let text = art.read_string(&args.config)?;
    let mut cfg: SimulationConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if args.full {
        cfg.replications = FULL_REPLICATIONS;
    }
    cfg.validate()?;
    let report = run_montecarlo(&cfg)?;

    art.write_table(&PathBuf::from("rmse.csv"), rmse_table(&report)?)?;
    art.write_table(&PathBuf::from("summary.csv"), summary_table(&report)?)?;
    if args.plotdata {
        write_plotdata(&report, &cfg, art)?;
    }

    let failed = report.fully_failed_methods();
    let mut outcome = Outcome::new(serde_json::to_value(&cfg).expect("config serializes"));
    outcome.failures = report.failures.iter().map(|f| serde_json::to_value(f).expect("failure serializes")).collect();
    if !failed.is_empty() {
        outcome.partial = Some(format!("methods without any result: {}", failed.join(", ")));
    }
    Ok(outcome)
}

fn rmse_table(report: &RmseReport) -> CliResult<Table> {
    let mut t = Table::new(["method", "target", "k", "rep", "rmse", "lambda", "sigma2", "nu"])?;
    for r in &report.rows {
        t.row([
            r.method.clone(),
            r.target.clone(),
            r.k.to_string(),
            r.rep.to_string(),
            opt_num(r.rmse),
            opt_num(r.lambda),
            opt_num(r.sigma2),
            opt_num(r.nu),
        ])?;
    }
    Ok(t)
}

fn summary_table(report: &RmseReport) -> CliResult<Table> {
    let mut t = Table::new(["method", "target", "k", "count", "missing", "median", "q1", "q3", "iqr"])?;
    for s in report.summary() {
        let iqr = s.q1.zip(s.q3).map(|(a, b)| b - a);
        t.row([
            s.method,
            s.target,
            s.k.to_string(),
            s.count.to_string(),
            s.missing.to_string(),
            opt_num(s.median),
            opt_num(s.q1),
            opt_num(s.q3),
            opt_num(iqr),
        ])?;
    }
    Ok(t)
}

/// One boxplot file and one curve file per derivative order.
fn write_plotdata(report: &RmseReport, cfg: &SimulationConfig, art: &mut Artifacts) -> CliResult<()> {
    let design = cfg.design.name();
    for &k in &cfg.orders {
        let mut box_t = Table::new(["method", "target", "design", "k", "rep", "rmse"])?;
        for r in report.rows.iter().filter(|r| r.k == k) {
            box_t.row([
                r.method.clone(),
                r.target.clone(),
                design.to_string(),
                k.to_string(),
                r.rep.to_string(),
                opt_num(r.rmse),
            ])?;
        }
        art.write_table(&PathBuf::from(format!("plotdata/boxplot_{}_{design}_k{k}.csv", file_stem(&report.target))), box_t)?;

        let mut curve_t = Table::new(["method", "target", "design", "k", "x", "estimate", "truth"])?;
        for c in report.curves.iter().filter(|c| c.k == k) {
            curve_t.row([
                c.method.clone(),
                c.target.clone(),
                design.to_string(),
                k.to_string(),
                num(c.x),
                opt_num(c.estimate),
                num(c.truth),
            ])?;
        }
        art.write_table(&PathBuf::from(format!("plotdata/curves_{}_{design}_k{k}.csv", file_stem(&report.target))), curve_t)?;
    }
    Ok(())
}

fn file_stem(target: &str) -> String {
    target.replace([':', '.'], "_")
}

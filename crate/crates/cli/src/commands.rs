//! Command implementations. Data goes to `out`, diagnostics to `err`.

use std::io::Write;
use std::path::Path;

use rdd_core::balance::summarize_balance;
use rdd_core::ci::{
    closure, derive, parse_premises, parse_statement, verify_derivation, Atom, DeriveOutcome,
    EngineConfig, ProofStep,
};
use rdd_core::estimation::{bandwidth_sweep, side_fits, EstimatorConfig};
use rdd_core::simulator::{generate, monte_carlo_study, ScenarioConfig};
use rdd_core::{AceEstimate, Design, ThresholdSpec, Window};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::CliError;
use crate::ingest::{ingest_csv, Dataset, IngestionSchema};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed three-decimal rendering; never prints a negative zero.
pub fn f3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage {
        name: "FileError",
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn write_json(out: &mut dyn Write, value: &Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn load(
    input: &Path,
    threshold: f64,
    schema: &IngestionSchema,
    err: &mut dyn Write,
) -> Result<(Dataset, ThresholdSpec), CliError> {
    let threshold = ThresholdSpec::new(threshold)?;
    let data = ingest_csv(input, schema, &threshold)?;
    for d in &data.report.dropped {
        writeln!(err, "warning: dropped line {}: {}", d.line, d.reason)?;
    }
    Ok((data, threshold))
}

fn check_bandwidths(bandwidths: &[f64]) -> Result<(), CliError> {
    match bandwidths.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        Some(b) => Err(CliError::usage(format!("bandwidths must be positive, got {b}"))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct EstimateConfigEcho<'a> {
    threshold: f64,
    bandwidths: &'a [f64],
    design: Design,
    uncertainty: rdd_core::estimation::Uncertainty,
    min_gap: f64,
    adjust: &'a [String],
    schema: &'a IngestionSchema,
}

const TABLE_HEADER: [&str; 3] = ["Bandwidth", "Estimate (Standard Error)", "95% Confidence Interval"];

fn table_row(cols: [&str; 3]) -> String {
    format!("{:<12}{:<28}{}", cols[0], cols[1], cols[2])
}

/// One row shaped like a published results table: bandwidth, estimate (SE), interval.
pub fn estimate_row(e: &AceEstimate) -> String {
    let se = e.std_error.map_or("NA".into(), f3);
    let ci = match (e.ci_low, e.ci_high) {
        (Some(lo), Some(hi)) => format!("({}, {})", f3(lo), f3(hi)),
        _ => "NA".into(),
    };
    table_row([&f3(e.bandwidth), &format!("{} ({se})", f3(e.point)), &ci])
}

pub fn run_estimate(args: &EstimateArgs, sweep: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    check_bandwidths(&args.bandwidths)?;
    let schema = args.schema.schema(&args.adjust).map_err(CliError::usage)?;
    let (data, threshold) = load(&args.input, args.threshold, &schema, err)?;
    let config = EstimatorConfig::new(args.design.into())
        .with_uncertainty(args.uncertainty.method())
        .with_min_gap(args.min_gap)
        .with_adjustment(args.adjust.clone());
    let results = bandwidth_sweep(&data.records, &threshold, &args.bandwidths, &config);
    if !sweep {
        if let Some(Err(e)) = results.iter().find(|r| r.is_err()) {
            return Err(e.clone().into());
        }
    }
    let echo = EstimateConfigEcho {
        threshold: args.threshold,
        bandwidths: &args.bandwidths,
        design: config.design,
        uncertainty: config.uncertainty,
        min_gap: config.min_gap,
        adjust: &config.adjust,
        schema: &schema,
    };
    match args.format {
        Format::Json => {
            let mut doc = json!({
                "command": if sweep { "sweep" } else { "estimate" },
                "version": VERSION,
                "provenance": data.report,
                "config": echo,
            });
            if sweep {
                let entries: Vec<Value> = args
                    .bandwidths
                    .iter()
                    .zip(&results)
                    .map(|(bw, r)| match r {
                        Ok(e) => json!({"bandwidth": bw, "estimate": e, "error": null}),
                        Err(e) => json!({
                            "bandwidth": bw,
                            "estimate": null,
                            "error": {"name": e.name(), "message": e.to_string()},
                        }),
                    })
                    .collect();
                doc["results"] = Value::Array(entries);
            } else {
                let estimates: Vec<&AceEstimate> = results.iter().flatten().collect();
                doc["estimates"] = serde_json::to_value(estimates).map_err(std::io::Error::from)?;
            }
            write_json(out, &doc)?;
        }
        Format::Table => {
            writeln!(out, "{}", table_row(TABLE_HEADER))?;
            for (bw, r) in args.bandwidths.iter().zip(&results) {
                match r {
                    Ok(e) => writeln!(out, "{}", estimate_row(e))?,
                    Err(e) => writeln!(out, "{}", table_row([&f3(*bw), &format!("error: {}", e.name()), ""]).trim_end())?,
                }
            }
        }
    }
    for (bw, r) in args.bandwidths.iter().zip(&results) {
        if let Err(e) = r {
            writeln!(err, "bandwidth {bw}: {}: {e}", e.name())?;
        }
    }
    if results.iter().all(|r| r.is_err()) {
        let e = results[0].clone().unwrap_err();
        return Err(e.into());
    }
    Ok(())
}

pub fn run_balance(args: &BalanceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    check_bandwidths(&args.bandwidths)?;
    if args.schema.covariates.is_empty() {
        return Err(CliError::usage("balance needs at least one --covariates column"));
    }
    let schema = args.schema.schema(&[]).map_err(CliError::usage)?;
    let (data, threshold) = load(&args.input, args.threshold, &schema, err)?;
    let rows = summarize_balance(&data.records, &threshold, &args.bandwidths, &schema.covariates)?;
    match args.format {
        Format::Json => write_json(
            out,
            &json!({
                "command": "balance",
                "version": VERSION,
                "provenance": data.report,
                "config": {"threshold": args.threshold, "bandwidths": args.bandwidths, "schema": schema},
                "rows": rows,
            }),
        )?,
        Format::Table => {
            let width = schema.covariates.iter().map(String::len).max().unwrap_or(8).max(8) + 2;
            let mut current = None;
            for r in &rows {
                if current != Some(r.bandwidth) {
                    if current.is_some() {
                        writeln!(out)?;
                    }
                    current = Some(r.bandwidth);
                    writeln!(out, "Bandwidth = {}", f3(r.bandwidth))?;
                    writeln!(
                        out,
                        "{:<width$}{:<7}{:>10}{:>10}{:>11}{:>10}{:>10}{:>7}",
                        "Variable", "Group", "Mean", "Median", "Std. Dev.", "Minimum", "Maximum", "n"
                    )?;
                }
                let sd = if r.sd_undefined { "NA".into() } else { f3(r.std_dev) };
                writeln!(
                    out,
                    "{:<width$}{:<7}{:>10}{:>10}{:>11}{:>10}{:>10}{:>7}",
                    r.covariate,
                    format!("Z={}", r.z),
                    f3(r.mean),
                    f3(r.median),
                    sd,
                    f3(r.minimum),
                    f3(r.maximum),
                    r.n
                )?;
            }
        }
    }
    Ok(())
}

fn resolve_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &args.scenario {
        Some(path) => ScenarioConfig::from_text(&read_text(path)?)?,
        None => ScenarioConfig::statins_like(),
    };
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(s) = args.scenario_seed {
        cfg.seed = s;
    }
    if let Some(d) = args.scenario_design {
        cfg.design = d.into();
    }
    if let Some(t) = args.tau {
        cfg.tau = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve_scenario(&args.scenario)?;
    let text = if args.print_scenario {
        cfg.to_text()
    } else {
        let regime = args.regime.map_or(cfg.observational_regime(), Into::into);
        let records = generate(&cfg, regime)?;
        let mut s = String::with_capacity(records.len() * 64);
        s.push_str("outcome,assignment,treatment,z");
        if !cfg.censor_confounder {
            s.push_str(",C");
        }
        s.push('\n');
        for r in &records {
            let z = u8::from(r.assignment >= cfg.x0);
            s.push_str(&format!("{},{},{},{}", r.outcome, r.assignment, r.treatment, z));
            for v in r.covariates.values() {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    };
    match &args.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Usage {
            name: "FileError",
            message: format!("cannot write {}: {e}", path.display()),
        })?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn run_study(args: &StudyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve_scenario(&args.scenario)?;
    if !(args.bandwidth > 0.0 && args.bandwidth.is_finite()) {
        return Err(CliError::usage(format!("bandwidth must be positive, got {}", args.bandwidth)));
    }
    let design: Design = args.estimator.map_or(cfg.design, Into::into);
    let estimator = EstimatorConfig::new(design)
        .with_uncertainty(args.uncertainty.method())
        .with_min_gap(args.min_gap);
    let report = monte_carlo_study(&cfg, &estimator, args.repetitions, args.bandwidth, args.base_seed)?;
    match args.format {
        Format::Json => write_json(
            out,
            &json!({
                "command": "mc-study",
                "version": VERSION,
                "scenario": cfg,
                "config": {
                    "estimator": design,
                    "uncertainty": estimator.uncertainty,
                    "min_gap": estimator.min_gap,
                    "bandwidth": args.bandwidth,
                    "repetitions": args.repetitions,
                    "base_seed": args.base_seed,
                },
                "report": report,
            }),
        )?,
        Format::Table => {
            writeln!(out, "{:<14}{}", "estimator", design)?;
            writeln!(out, "{:<14}{}", "bandwidth", f3(args.bandwidth))?;
            writeln!(out, "{:<14}{}", "true effect", f3(report.true_ace))?;
            writeln!(out, "{:<14}{} ({} succeeded)", "repetitions", report.repetitions, report.succeeded)?;
            writeln!(out, "{:<14}{}", "bias", f3(report.bias))?;
            writeln!(out, "{:<14}{}", "rmse", f3(report.rmse))?;
            writeln!(out, "{:<14}{}", "coverage", report.coverage.map_or("NA".into(), f3))?;
        }
    }
    Ok(())
}

pub fn run_plotdata(args: &PlotArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let schema = args.schema.schema(&[]).map_err(CliError::usage)?;
    let (data, threshold) = load(&args.input, args.threshold, &schema, err)?;
    let fits = match args.bandwidth {
        Some(bw) => {
            let window = Window::around(&threshold, bw)?;
            Some((window, side_fits(&data.records, &window, &[])?))
        }
        None => None,
    };
    let mut s = String::from("assignment,outcome,treatment,z\n");
    for r in &data.records {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.assignment,
            r.outcome,
            r.treatment,
            threshold.indicator(r.assignment)
        ));
    }
    if let Some((w, f)) = fits {
        let (x0, bw) = (w.x0(), w.bandwidth());
        s.push_str(&format!("#fit,above,{},{},{},{}\n", f.above.intercept, f.above.slope, x0, x0 + bw));
        s.push_str(&format!("#fit,below,{},{},{},{}\n", f.below.intercept, f.below.slope, x0 - bw, x0));
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn step_json(index: usize, s: &ProofStep) -> Value {
    json!({
        "index": index,
        "rule": s.rule.as_str(),
        "inputs": s.inputs,
        "output": s.output.to_string(),
        "function_witness": s.function_witness.as_ref().map(|w| w.to_string()),
    })
}

fn engine(max_atoms: usize) -> EngineConfig {
    EngineConfig { max_atoms }
}

pub fn run_derive(args: &DeriveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let premises = parse_premises(&read_text(&args.premises)?)?;
    let target = parse_statement(&args.target)?;
    let outcome = derive(&premises, &target, &engine(args.max_atoms))?;
    let premise_text: Vec<String> = premises.statements.iter().map(|s| s.to_string()).collect();
    let fds: Vec<String> = premises.functional_deps.iter().map(|f| f.to_string()).collect();
    match outcome {
        DeriveOutcome::Derived(d) => {
            let check = verify_derivation(&d);
            if !check.valid {
                return Err(CliError::Estimation {
                    name: "VerificationFailed",
                    message: format!("derivation failed its own check at step {:?}", check.first_failure),
                });
            }
            match args.format {
                Format::Json => write_json(
                    out,
                    &json!({
                        "command": "ci derive",
                        "version": VERSION,
                        "premises": premise_text,
                        "functional_deps": fds,
                        "target": target.to_string(),
                        "derivable": true,
                        "verified": true,
                        "steps": d.steps.iter().enumerate().map(|(i, s)| step_json(i, s)).collect::<Vec<_>>(),
                    }),
                )?,
                Format::Table => {
                    for (i, s) in d.steps.iter().enumerate() {
                        writeln!(out, "{i:>3}  {s}")?;
                    }
                }
            }
            Ok(())
        }
        DeriveOutcome::NotDerivable => {
            match args.format {
                Format::Json => write_json(
                    out,
                    &json!({
                        "command": "ci derive",
                        "version": VERSION,
                        "premises": premise_text,
                        "functional_deps": fds,
                        "target": target.to_string(),
                        "derivable": false,
                        "verified": false,
                        "steps": [],
                    }),
                )?,
                Format::Table => writeln!(out, "NOT DERIVABLE")?,
            }
            Err(CliError::NotDerivable)
        }
    }
}

pub fn run_closure(args: &ClosureArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let premises = parse_premises(&read_text(&args.premises)?)?;
    let mut universe = premises.atoms();
    for a in &args.atoms {
        let valid = a.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && a.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(CliError::usage(format!("invalid atom name '{a}'")));
        }
        universe.insert(Atom::new(a.as_str()));
    }
    let cl = closure(&premises, &universe, &engine(args.max_atoms))?;
    let statements: Vec<String> = cl.statements().iter().map(|s| s.to_string()).collect();
    match args.format {
        Format::Json => write_json(
            out,
            &json!({
                "command": "ci closure",
                "version": VERSION,
                "atoms": universe.iter().map(|a| a.name().to_string()).collect::<Vec<_>>(),
                "count": statements.len(),
                "statements": statements,
            }),
        )?,
        Format::Table => {
            for s in statements {
                writeln!(out, "{s}")?;
            }
        }
    }
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Estimate(a) => run_estimate(a, false, out, err),
        Command::Sweep(a) => run_estimate(a, true, out, err),
        Command::Balance(a) => run_balance(a, out, err),
        Command::Simulate(a) => run_simulate(a, out),
        Command::McStudy(a) => run_study(a, out),
        Command::Plotdata(a) => run_plotdata(a, out, err),
        Command::Ci(CiCommand::Derive(a)) => run_derive(a, out),
        Command::Ci(CiCommand::Closure(a)) => run_closure(a, out),
    }
}

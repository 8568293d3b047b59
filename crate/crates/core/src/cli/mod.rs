//! Command-line boundary: config in, report out, exit code back.

pub mod config;
pub mod experiments;
pub mod presets;
pub mod report;

pub use config::{CliError, RunConfig, Tolerances};
pub use report::{Report, ReportRow};

use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Json,
    Csv,
}

impl OutFormat {
    fn from_name(name: &str) -> Result<OutFormat, CliError> {
        match name {
            "json" => Ok(OutFormat::Json),
            "csv" => Ok(OutFormat::Csv),
            other => Err(CliError::Config(format!(
                "format must be json or csv, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliOptions {
    pub config_path: PathBuf,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

pub fn cmd_run(opts: &CliOptions) -> i32 {
    finish(run_report(opts), opts)
}

pub fn cmd_sweep(opts: &CliOptions, n_list_flag: Option<Vec<usize>>) -> i32 {
    finish(sweep_report(opts, n_list_flag), opts)
}

pub fn cmd_bench(
    opts: &CliOptions,
    n_list_flag: Option<Vec<usize>>,
    dims_flag: Option<Vec<usize>>,
) -> i32 {
    finish(bench_report(opts, n_list_flag, dims_flag), opts)
}

fn run_report(opts: &CliOptions) -> Result<(Report, RunConfig), CliError> {
    let config = config::load_config(&opts.config_path)?;
    let ctx = experiments::build_context(&config, opts.seed, None)?;
    let mut report = Report::new("run", experiments::effective_config(&config, &ctx));
    experiments::run_experiments(&ctx, &config.experiments, &mut report);
    Ok((report, config))
}

fn sweep_report(
    opts: &CliOptions,
    n_list_flag: Option<Vec<usize>>,
) -> Result<(Report, RunConfig), CliError> {
    let config = config::load_config(&opts.config_path)?;
    let n_list = n_list_flag
        .or_else(|| config.n_list.clone())
        .unwrap_or_else(|| vec![512, 1024, 2048]);
    config::validate_n_list(&n_list)?;
    let ctx = experiments::build_context(&config, opts.seed, None)?;
    let mut echo = experiments::effective_config(&config, &ctx);
    echo["n_list"] = serde_json::json!(n_list);
    let mut report = Report::new("sweep", echo);
    experiments::sweep_rows(&config, opts.seed, &n_list, &mut report)?;
    Ok((report, config))
}

fn bench_report(
    opts: &CliOptions,
    n_list_flag: Option<Vec<usize>>,
    dims_flag: Option<Vec<usize>>,
) -> Result<(Report, RunConfig), CliError> {
    let config = config::load_config(&opts.config_path)?;
    let n_list = n_list_flag
        .or_else(|| config.n_list.clone())
        .unwrap_or_else(|| vec![512, 2048, 8192]);
    config::validate_n_list(&n_list)?;
    let dims = dims_flag
        .or_else(|| config.dims.clone())
        .unwrap_or_else(|| vec![4]);
    config::validate_dims(&dims)?;
    let echo = serde_json::json!({
        "generator": config.generator,
        "signal": config.signal,
        "seed": opts.seed.or(config.seed).unwrap_or(config::DEFAULT_SEED),
        "n_list": n_list,
        "dims": dims,
    });
    let mut report = Report::new("bench", echo);
    experiments::bench_rows(&config, opts.seed, &n_list, &dims, &mut report)?;
    Ok((report, config))
}

/// Emits the report and maps everything onto the exit-code contract:
/// 2 malformed input, 3 numerical failure, 1 tolerance failure, 0 pass.
fn finish(result: Result<(Report, RunConfig), CliError>, opts: &CliOptions) -> i32 {
    let (report, config) = match result {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Err(e) = emit(&report, &config, opts) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    report.exit_code()
}

/// Without --out the serialized report is the stdout payload; with --out it
/// goes to the file and stdout keeps a short human summary.
fn emit(report: &Report, config: &RunConfig, opts: &CliOptions) -> Result<(), CliError> {
    let out = opts.out.clone().or_else(|| config.out.clone());
    let format_name = opts
        .format
        .clone()
        .or_else(|| config.format.clone())
        .unwrap_or_else(|| "json".to_string());
    let format = OutFormat::from_name(&format_name)?;
    let body = match format {
        OutFormat::Json => report.to_json_string(),
        OutFormat::Csv => report.to_csv_string(),
    };
    match out {
        Some(path) => {
            std::fs::write(&path, &body)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
            if !opts.quiet {
                report.print_summary();
            }
        }
        None => {
            if !opts.quiet {
                println!("{body}");
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_names_are_checked() {
        assert_eq!(OutFormat::from_name("json").unwrap(), OutFormat::Json);
        assert_eq!(OutFormat::from_name("csv").unwrap(), OutFormat::Csv);
        assert!(OutFormat::from_name("yaml").is_err());
    }
}

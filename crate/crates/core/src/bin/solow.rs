use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Arg, ArgAction, ArgMatches, Command};

use spatial_solow::commands::{self, Outcome};
use spatial_solow::config::{RunConfig, KEYS};

fn cli() -> Command {
    // one override flag per configuration key, e.g. `--Gmax 200`
    let overrides = KEYS.iter().map(|key| {
        let arg = Arg::new(*key)
            .long(*key)
            .value_name("VALUE")
            .global(true)
            .help(format!("override configuration key `{key}`"));
        if *key == "trace" {
            arg.num_args(0..=1).default_missing_value("true")
        } else {
            arg
        }
    });
    Command::new("solow")
        .about("Spatial Solow model: forward solves, synthetic data, parameter recovery")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .global(true)
                .help("key = value configuration file; flags override it"),
        )
        .args(overrides)
        .subcommand(Command::new("forward").about("solve the forward problem and write the capital field"))
        .subcommand(Command::new("synth").about("write clean and noisy measurements of the forward solution"))
        .subcommand(
            Command::new("invert")
                .about("recover production parameters from a dataset written by `synth`")
                .arg(
                    Arg::new("dataset")
                        .required(true)
                        .value_name("DATASET")
                        .value_parser(clap::value_parser!(PathBuf)),
                ),
        )
        .subcommand(
            Command::new("sensitivity")
                .about("write gradient fields of the reaction term over the search box")
                .arg(
                    Arg::new("check-fd")
                        .long("check-fd")
                        .action(ArgAction::SetTrue)
                        .help("compare against finite differences and fail above 1e-5"),
                ),
        )
        .subcommand(Command::new("verify").about("run the built-in oracle checks"))
}

fn load_config(m: &ArgMatches) -> Result<RunConfig> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for key in KEYS {
        if let Some(value) = m.get_one::<String>(key) {
            cfg.set(key, value).with_context(|| format!("--{key}"))?;
        }
    }
    Ok(cfg)
}

// a closed stdout (e.g. piped into `head`) is not an error for us
fn say(line: std::fmt::Arguments) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn report(out: &Outcome) {
    for line in &out.summary {
        say(format_args!("{line}"));
    }
    for file in &out.files {
        say(format_args!("wrote {}", file.display()));
    }
}

fn run() -> Result<bool> {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let cfg = load_config(sub)?;
    match name {
        "forward" => report(&commands::cmd_forward(&cfg)?),
        "synth" => report(&commands::cmd_synth(&cfg)?),
        "invert" => {
            let dataset = sub.get_one::<PathBuf>("dataset").expect("required");
            let (out, _) = commands::cmd_invert(&cfg, dataset)
                .with_context(|| format!("inverting {}", dataset.display()))?;
            report(&out);
        }
        "sensitivity" => report(&commands::cmd_sensitivity(&cfg, sub.get_flag("check-fd"))?),
        "verify" => {
            let checks = commands::cmd_verify()?;
            let mut ok = true;
            for c in &checks {
                say(format_args!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
                ok &= c.passed;
            }
            return Ok(ok);
        }
        _ => unreachable!("unknown subcommand {name}"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

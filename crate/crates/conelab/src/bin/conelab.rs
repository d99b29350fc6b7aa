//! Thin command-line front end over the experiment suites.
//!
//! Usage:
//!   conelab run <suite|all> [--config PATH] [--out DIR] [--seed N]
//!                           [--parallel] [--plots] [--timings]
//!   conelab list
//!   conelab render <results.json> [--out DIR]
//!
//! The configuration file defaults to $CONELAB_CONFIG when set. The exit
//! code is 0 when every check passes, otherwise the number of failing
//! checks (capped at 255); usage and configuration errors exit with 2.

use conelab::suite::{self, ExperimentConfig, ResultRecord};
use std::process::ExitCode;

fn usage() -> ExitCode {
    eprintln!(
        "usage:\n  conelab run <suite|all> [--config PATH] [--out DIR] [--seed N] [--parallel] [--plots] [--timings]\n  conelab list\n  conelab render <results.json> [--out DIR]\n\nsuites: {}",
        suite::list_suites().join(", ")
    );
    ExitCode::from(2)
}

fn load_config(path: Option<&str>) -> Result<ExperimentConfig, String> {
    let from_env = std::env::var("CONELAB_CONFIG").ok();
    let chosen = path.map(str::to_string).or(from_env);
    match chosen {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| format!("config {p}: {e}"))?;
            ExperimentConfig::parse(&text).map_err(|e| e.to_string())
        }
        None => {
            // built-in defaults need an explicit seed to stay reproducible
            let mut cfg = ExperimentConfig::default();
            cfg.seed = 20260808;
            Ok(cfg)
        }
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        return usage();
    }
    match args[0].as_str() {
        "list" => {
            for s in suite::list_suites() {
                println!("{s}");
            }
            ExitCode::SUCCESS
        }
        "run" => {
            if args.len() < 2 {
                return usage();
            }
            let selection = args[1].clone();
            let mut config_path: Option<String> = None;
            let mut out_dir: Option<String> = None;
            let mut seed: Option<u64> = None;
            let mut parallel = false;
            let mut plots = false;
            let mut timings = false;
            let mut i = 2;
            while i < args.len() {
                match args[i].as_str() {
                    "--config" if i + 1 < args.len() => {
                        config_path = Some(args[i + 1].clone());
                        i += 2;
                    }
                    "--out" if i + 1 < args.len() => {
                        out_dir = Some(args[i + 1].clone());
                        i += 2;
                    }
                    "--seed" if i + 1 < args.len() => {
                        seed = match args[i + 1].parse() {
                            Ok(v) => Some(v),
                            Err(_) => {
                                eprintln!("--seed expects an unsigned integer");
                                return ExitCode::from(2);
                            }
                        };
                        i += 2;
                    }
                    "--parallel" => {
                        parallel = true;
                        i += 1;
                    }
                    "--plots" => {
                        plots = true;
                        i += 1;
                    }
                    "--timings" => {
                        timings = true;
                        i += 1;
                    }
                    other => {
                        eprintln!("unknown flag '{other}'");
                        return usage();
                    }
                }
            }
            let mut cfg = match load_config(config_path.as_deref()) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out_dir {
                cfg.out_dir = o.into();
            }
            cfg.parallel |= parallel;
            cfg.plots |= plots;
            cfg.record_timings |= timings;

            let records = match suite::run_selection(&cfg, &selection) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = suite::render(&cfg, &records) {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
            report(&records)
        }
        "render" => {
            if args.len() < 2 {
                return usage();
            }
            let text = match std::fs::read_to_string(&args[1]) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{}: {e}", args[1]);
                    return ExitCode::from(2);
                }
            };
            let records: Vec<ResultRecord> = match serde_json::from_str(&text) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{}: {e}", args[1]);
                    return ExitCode::from(2);
                }
            };
            let mut cfg = ExperimentConfig::default();
            cfg.seed = 0;
            if let Some(pos) = args.iter().position(|a| a == "--out") {
                if pos + 1 >= args.len() {
                    return usage();
                }
                cfg.out_dir = args[pos + 1].clone().into();
            }
            print!("{}", suite::records_csv(&records));
            if let Err(e) = suite::render(&cfg, &records) {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
            report(&records)
        }
        _ => usage(),
    }
}

fn report(records: &[ResultRecord]) -> ExitCode {
    let failures = records.iter().filter(|r| !r.pass).count();
    for r in records {
        println!(
            "{} {}/{}: {:.3e} (tol {:.1e})",
            if r.pass { "pass" } else { "FAIL" },
            r.suite,
            r.check,
            r.value,
            r.tol
        );
    }
    println!("{} checks, {} failures", records.len(), failures);
    ExitCode::from(failures.min(255) as u8)
}

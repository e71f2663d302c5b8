//! Command-line harness for experiments, prior certification and
//! approximation checks.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use htbnn::{choose_architecture, emit_report, run_experiment, ExperimentConfig};
use htbnn_core::construct::{wide_net, ApproxConfig, TargetFn};
use htbnn_core::prior::{certify, default_certification_grid, HeavyTailDensity};

#[derive(Parser)]
#[command(name = "htbnn", about = "Heavy-tailed Bayesian ReLU network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rate-grid experiment from a TOML configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long = "clip-B")]
        clip_b: Option<f64>,
        #[arg(long = "vb-family")]
        vb_family: Option<String>,
        #[arg(long = "vb-steps")]
        vb_steps: Option<usize>,
        #[arg(long = "vb-lr")]
        vb_lr: Option<f64>,
        #[arg(long = "vb-mc-samples")]
        vb_mc_samples: Option<usize>,
    },
    /// Certify the tail conditions of a base density on the log grid.
    CertifyPrior {
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 3.0)]
        nu: f64,
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
    /// Build the glued approximant for a catalog fixture and report
    /// the measured sup error and coefficient bounds.
    ApproxCheck {
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Recompute summary.json and rate_plot.svg from results.csv.
    Report {
        dir: PathBuf,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        exponent: f64,
        #[arg(long, default_value_t = 0.15)]
        tolerance: f64,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run() -> Result<(), Box<dyn std::error::Error>> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            alpha,
            seed,
            steps,
            burnin,
            clip_b,
            vb_family,
            vb_steps,
            vb_lr,
            vb_mc_samples,
        } => {
            let mut cfg = ExperimentConfig::from_toml(&std::fs::read_to_string(&config)?)?;
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = steps {
                cfg.mcmc.steps = s;
            }
            if let Some(b) = burnin {
                cfg.mcmc.burnin = b;
            }
            if let Some(b) = clip_b {
                cfg.clip_bound = Some(b);
            }
            if let Some(f) = vb_family {
                cfg.prior_family = f;
            }
            if let Some(s) = vb_steps {
                cfg.vb.steps = s;
            }
            if let Some(l) = vb_lr {
                cfg.vb.lr = l;
            }
            if let Some(m) = vb_mc_samples {
                cfg.vb.mc_samples = m;
            }
            let dir = out
                .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("htbnn-out"));
            let report = run_experiment(&cfg)?;
            emit_report(&report, &dir)?;
            for s in &report.summaries {
                println!(
                    "{}: slope {:.4} (target {:.4}, tol {:.2}) slope_ok={} monotone_ok={}",
                    s.method,
                    s.slope,
                    -s.theoretical_exponent,
                    report.slope_tolerance,
                    s.slope_ok,
                    s.monotone_ok
                );
            }
            if !report.failures.is_empty() {
                println!("partial results: {} cell(s) failed", report.failures.len());
                for f in &report.failures {
                    println!("  {f}");
                }
            }
            println!("wrote {}", dir.display());
            // architecture provenance for the log
            let first = cfg.n_grid[0];
            let arch = choose_architecture(
                first,
                htbnn_core::data::fixture_by_name(&cfg.fixture)?.dim,
                &cfg.arch_mode()?,
                cfg.delta,
            );
            println!("architecture at n={first}: {:?} ({})", arch.arch.widths(), arch.label);
        }
        Command::CertifyPrior { family, nu, points } => {
            let h = match family.as_str() {
                "cauchy" => HeavyTailDensity::cauchy(),
                "student" => HeavyTailDensity::student(nu),
                "gaussian" => HeavyTailDensity::gaussian(),
                other => return Err(format!("unknown family `{other}`").into()),
            };
            let cert = certify(&h, &default_certification_grid(points));
            println!("family: {}", h.name());
            println!(
                "log-density growth: grid constant {:.6} at x = {:.3e} (declared {:.6})",
                cert.log_density_growth.grid_constant,
                cert.log_density_growth.argmax,
                cert.log_density_growth.declared
            );
            println!(
                "tail mass: grid constant {:.6} at x = {:.3e} (declared {:.6})",
                cert.tail_mass.grid_constant, cert.tail_mass.argmax, cert.tail_mass.declared
            );
            if cert.passed() {
                println!("verdict: PASS");
            } else {
                println!("verdict: FAIL");
                for f in cert.failures() {
                    println!("  {f}");
                }
            }
        }
        Command::ApproxCheck { d, beta, m, radius } => {
            let fix_name = match (d, beta as usize) {
                (1, 1) => "holder-d1-b1",
                (1, 2) => "holder-d1-b2",
                (2, 1) => "holder-d2-b1",
                _ => return Err("approx-check supports d in {1,2}, beta in {1,2}".into()),
            };
            let fix = htbnn_core::data::fixture_by_name(fix_name)?;
            let eval = {
                let f = fix.eval.clone();
                move |x: &[f64]| f(x)
            };
            let partial = {
                let p = fix.partial.clone().expect("catalog fixture has partials");
                move |l: &[usize], x: &[f64]| p(l, x)
            };
            let cfg = ApproxConfig::new(d, beta, radius.max(1.0), m);
            let target = TargetFn { eval: &eval, partial: &partial };
            let build = wide_net(&target, &cfg)?;
            let mut sup: f64 = 0.0;
            let pts = if d == 1 { 10_000 } else { 100 };
            if d == 1 {
                for i in 0..pts {
                    let x = -1.0 + 2.0 * i as f64 / (pts - 1) as f64;
                    sup = sup.max((build.net.eval1(&[x]) - eval(&[x])).abs());
                }
            } else {
                for i in 0..pts {
                    for j in 0..pts {
                        let x = [
                            -1.0 + 2.0 * i as f64 / (pts - 1) as f64,
                            -1.0 + 2.0 * j as f64 / (pts - 1) as f64,
                        ];
                        sup = sup.max((build.net.eval1(&x) - eval(&x)).abs());
                    }
                }
            }
            println!("fixture: {fix_name}, grid m = {m}");
            println!(
                "architecture: depth {} widths up to {}",
                build.report.depth, build.report.max_width
            );
            println!(
                "coefficients: max {:.6e} (cap {:.6e})",
                build.report.coefficient_max, build.report.coefficient_cap
            );
            println!("threshold architecture: ({}, {})", build.lemma_depth, build.lemma_width);
            println!("measured sup error: {sup:.6e} (target order {:.6e})", cfg.accuracy());
        }
        Command::Report { dir, exponent, tolerance } => {
            let report = htbnn::report::reemit_from_dir(&dir, exponent, tolerance)?;
            for s in &report.summaries {
                println!("{}: slope {:.4} slope_ok={}", s.method, s.slope, s.slope_ok);
            }
        }
    }
    Ok(())
}

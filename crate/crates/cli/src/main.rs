//! `kshort`: kernel analysis, shortening search and polar-code simulation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use kshort::analysis::kernel_scaling_exponent;
use kshort::kernelproc::{build_embedding, build_window_plan};
use kshort::mkpolar::{self, load_kernel_file, CodeSpec};
use kshort::shortening::{find_optimal_shortening_with, pd_bounds, shorten, Enumeration};
use kshort::sim::{self, ExperimentConfig};
use kshort::{Execution, ExponentReport, Kernel, ShorteningPattern};

#[derive(Parser)]
#[command(name = "kshort", version, about = "Shortened polarization kernels and mixed-kernel polar codes")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel file: size on the first line, then one 0/1 row per line.
    #[arg(long, value_name = "FILE")]
    kernel: PathBuf,
    /// Shorten the kernel at these columns first (hex, bit i = column i).
    #[arg(long, value_name = "HEX")]
    pattern: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the partial distance profile.
    Pdp {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Also write a JSON report.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Print the error exponent.
    Exponent {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Print the BEC scaling exponent.
    Mu {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Allow kernels up to 32 columns (erasure enumeration is 2^l).
        #[arg(long)]
        long: bool,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Shorten a kernel and print the result.
    Shorten {
        #[arg(long, value_name = "FILE")]
        kernel: PathBuf,
        #[arg(long, value_name = "HEX")]
        pattern: String,
        /// Write the shortened kernel here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Find the shortening pattern of size t with the largest exponent.
    Search {
        #[arg(long, value_name = "FILE")]
        kernel: PathBuf,
        #[arg(short = 't', value_name = "N")]
        t: usize,
        /// Examine this many random patterns instead of all of them.
        #[arg(long, value_name = "BUDGET")]
        sampled: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Print search statistics to stderr.
        #[arg(long, short = 'v')]
        verbose: bool,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Describe how a kernel (or a shortening of it) is processed.
    ProbeKernel {
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Construct a frozen set by genie-aided simulation.
    Construct {
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Information bits (default: from the spec file).
        #[arg(short = 'k', long)]
        k: Option<usize>,
        #[arg(long, value_name = "DB")]
        design_snr: Option<f64>,
        #[arg(long, value_name = "FRAMES")]
        budget: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Frozen-set file to write (default: stdout).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo FER/BER simulation over BPSK/AWGN.
    Simulate(SimulateArgs),
    /// Write the Arikan kernel F_t.
    GenKernel {
        #[arg(long, value_name = "T")]
        arikan: u32,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Key/value file with defaults for any of these flags.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Eb/N0 grid in dB: A:B:STEP or a comma list.
    #[arg(long, value_name = "A:B:STEP")]
    snr: Option<String>,
    #[arg(long, value_name = "L")]
    list: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    max_frames: Option<u64>,
    /// Stop a point after N frame errors (0: run max-frames).
    #[arg(long, value_name = "N")]
    max_errors: Option<u64>,
    #[arg(long, value_name = "FILE.csv")]
    out: Option<PathBuf>,
    /// Keep completed points already in the output file.
    #[arg(long)]
    resume: bool,
}

/// A failure in the data rather than the invocation.
struct DataError(anyhow::Error);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<(), DataError> {
    dispatch(cmd).map_err(DataError)
}

fn load_kernel(args: &KernelArgs) -> Result<Kernel> {
    let k = load_kernel_file(&args.kernel)?;
    match &args.pattern {
        None => Ok(k),
        Some(hex) => {
            let p = ShorteningPattern::parse_hex(hex, k.size())?;
            Ok(shorten(&k, &p).kernel)
        }
    }
}

fn write_report(path: &Option<PathBuf>, value: &serde_json::Value) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Pdp { kernel, report } => {
            let k = load_kernel(&kernel)?;
            let pdp = k.pdp();
            println!("{}", pdp.iter().map(u32::to_string).collect::<Vec<_>>().join(" "));
            write_report(&report, &json!({ "size": k.size(), "pdp": pdp }))
        }
        Command::Exponent { kernel, report } => {
            let k = load_kernel(&kernel)?;
            let r = ExponentReport::new(&k, None);
            println!("E={:.6}", r.exponent);
            write_report(&report, &serde_json::to_value(&r)?)
        }
        Command::Mu { kernel, long, report } => {
            let k = load_kernel(&kernel)?;
            let mu = kernel_scaling_exponent(&k, long)?;
            println!("mu={mu:.4}");
            write_report(&report, &serde_json::to_value(ExponentReport::new(&k, Some(mu)))?)
        }
        Command::Shorten { kernel, pattern, out } => {
            let k = load_kernel_file(&kernel)?;
            let p = ShorteningPattern::parse_hex(&pattern, k.size())?;
            let r = shorten(&k, &p);
            eprintln!(
                "l={} E={:.6} removed rows {:?}, modified rows {:?}",
                r.kernel.size(),
                r.kernel.exponent(),
                r.removed_rows,
                r.modified_rows
            );
            write_or_print(&out, &r.kernel.matrix().to_kernel_text())
        }
        Command::Search {
            kernel,
            t,
            sampled,
            seed,
            verbose,
            report,
        } => {
            let k = load_kernel_file(&kernel)?;
            let enumeration = match sampled {
                Some(budget) => Enumeration::Sampled { seed, budget },
                None => Enumeration::Full,
            };
            let out = find_optimal_shortening_with(&k, t, enumeration, Execution::Parallel)?;
            println!("E={:.3} P={}", out.best_e, out.best_pattern);
            if verbose {
                eprintln!(
                    "E={:.6} examined={} pruned={} tight={} exact={} aborted={} ties={} optimal={}",
                    out.best_e,
                    out.patterns_examined,
                    out.patterns_pruned,
                    out.bounds_tight,
                    out.exact_pdp_evaluations,
                    out.exact_aborted,
                    out.ties.len(),
                    out.optimal
                );
            }
            write_report(&report, &serde_json::to_value(&out)?)
        }
        Command::ProbeKernel { kernel } => {
            print!("{}", probe(&kernel)?);
            Ok(())
        }
        Command::Construct {
            spec,
            k,
            design_snr,
            budget,
            seed,
            out,
        } => {
            let file = read_spec(&spec)?;
            let open = file.open_code()?;
            let k = k.or(file.k).ok_or_else(|| anyhow!("k is required (flag or spec file)"))?;
            let snr = design_snr
                .or(file.design_snr_db)
                .ok_or_else(|| anyhow!("--design-snr is required"))?;
            let frozen = mkpolar::construct_frozen(
                &open,
                k,
                snr,
                budget.unwrap_or(file.construct_budget),
                seed.unwrap_or(file.construct_seed),
            )?;
            let text: String = frozen.iter().map(|i| format!("{i}\n")).collect();
            write_or_print(&out, &text)
        }
        Command::Simulate(args) => simulate(args),
        Command::GenKernel { arikan, out } => {
            if !(1..=6).contains(&arikan) {
                bail!("--arikan must be in 1..=6");
            }
            write_or_print(&out, &Kernel::arikan(arikan).matrix().to_kernel_text())
        }
    }
}

fn read_spec(path: &Path) -> Result<mkpolar::SpecFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading spec file {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(mkpolar::parse_spec_text(&text, base)?)
}

fn probe(args: &KernelArgs) -> Result<String> {
    let parent = load_kernel_file(&args.kernel)?;
    let mut s = String::new();
    writeln!(s, "kernel {} l={} E={:.6}", args.kernel.display(), parent.size(), parent.exponent())?;
    writeln!(s, "min-weight form: {}", parent.is_min_weight_form())?;
    let plan = match build_window_plan(&parent) {
        Ok(p) => p,
        Err(e) => {
            writeln!(s, "window processing: {e}")?;
            return Ok(s);
        }
    };
    writeln!(s, "T:")?;
    s.push_str(&plan.transform().to_string());
    if !s.ends_with('\n') {
        s.push('\n');
    }
    writeln!(s, "tau: {:?}", plan.tau())?;
    writeln!(s, "h:   {:?}", plan.h())?;
    let sizes: Vec<usize> = plan.windows().iter().map(Vec::len).collect();
    writeln!(s, "|D|: {sizes:?}")?;
    if let Some(hex) = &args.pattern {
        let p = ShorteningPattern::parse_hex(hex, parent.size())?;
        let r = shorten(&parent, &p);
        let emb = build_embedding(&parent, &r)?;
        writeln!(s, "pattern {p}: l={} E={:.6}", r.kernel.size(), r.kernel.exponent())?;
        writeln!(s, "psi: {:?}", r.surviving_map)?;
        writeln!(s, "zero-forced v: {:?}", emb.zero_forced())?;
        let reduced: Vec<usize> = (0..r.kernel.size()).map(|phi| emb.reduced_window(phi).len()).collect();
        writeln!(s, "|D'|: {reduced:?}")?;
        let bounds = pd_bounds(&parent, &r)?;
        writeln!(s, "pd bounds: {bounds:?}")?;
    }
    Ok(s)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let (conf, conf_dir) = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            (sim::parse_config_text(&text)?, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => Default::default(),
    };
    for key in conf.keys() {
        if !["spec", "snr", "list", "seed", "max-frames", "max-errors", "out", "batch"].contains(&key.as_str()) {
            bail!("unknown config key {key:?}");
        }
    }
    let num = |key: &str| -> Result<Option<u64>> {
        conf.get(key)
            .map(|v| v.parse::<u64>().with_context(|| format!("config {key} = {v:?}")))
            .transpose()
    };
    let spec_path = args
        .spec
        .or_else(|| conf.get("spec").map(|s| conf_dir.join(s)))
        .ok_or_else(|| anyhow!("--spec is required"))?;
    let snr = args
        .snr
        .or_else(|| conf.get("snr").cloned())
        .ok_or_else(|| anyhow!("--snr is required"))?;
    let defaults = ExperimentConfig::default();
    let cfg = ExperimentConfig {
        snr_db: sim::parse_snr_grid(&snr)?,
        list: args.list.or(num("list")?.map(|v| v as usize)).unwrap_or(defaults.list),
        seed: args.seed.or(num("seed")?).unwrap_or(defaults.seed),
        max_frames: args.max_frames.or(num("max-frames")?).unwrap_or(defaults.max_frames),
        max_errors: args.max_errors.or(num("max-errors")?).unwrap_or(defaults.max_errors),
        batch: num("batch")?.unwrap_or(defaults.batch),
    };
    let out = args.out.or_else(|| conf.get("out").map(|s| conf_dir.join(s)));
    let code: CodeSpec = mkpolar::load_spec_file(&spec_path, Execution::Parallel)
        .with_context(|| format!("loading {}", spec_path.display()))?;
    eprintln!(
        "code n={} k={} kernels [{}], list {}",
        code.n(),
        code.k(),
        code.stages()
            .iter()
            .map(|s| format!("{}x{} {}", s.size(), s.size(), s.processor().describe()))
            .collect::<Vec<_>>()
            .join(", "),
        cfg.list
    );
    let rows = match &out {
        Some(path) => sim::run_to_csv(&code, &cfg, Execution::Parallel, path, args.resume)?,
        None => {
            println!("{}", sim::CSV_HEADER);
            sim::run_experiment(&code, &cfg, Execution::Parallel, &[], |r| {
                println!("{}", r.to_csv());
                Ok(())
            })?
        }
    };
    eprint!("{}", sim::format_rows(&rows));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arguments_parse() {
        Cli::command_check();
        let cli = Cli::try_parse_from(["kshort", "search", "--kernel", "k.txt", "-t", "2"]).unwrap();
        assert!(matches!(cli.command, Command::Search { t: 2, .. }));
        assert!(Cli::try_parse_from(["kshort", "frobnicate"]).is_err());
    }

    impl Cli {
        fn command_check() {
            use clap::CommandFactory;
            Cli::command().debug_assert();
        }
    }
}

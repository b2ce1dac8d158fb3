//! Command-line front end. All numbers are printed in full-precision
//! scientific notation; exit codes are 0 (success), 1 (usage), 2 (numerics).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use hornheat::config::{parse_list, Config};
use hornheat::envelopes::{
    example_log_power_table_log, example_power_law_f_log, HeatKernelModel, LogPowerTableCutoffs,
};
use hornheat::harness::{self, VerificationReport};
use hornheat::simulator::{complement_intensity_mc, exit_time_mc, kernel_mc, survival_mc, MCConfig, MCResult};
use hornheat::{HornError, Profile};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "HORNHEAT_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "hornheat",
    version,
    allow_negative_numbers = true,
    about = "Heat-kernel envelopes and killed stable-process Monte Carlo on horns"
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// File of envelope constants (`name = value`).
    #[arg(long, global = true)]
    consts: Option<PathBuf>,
    /// Override one configuration key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Reference function kind: power_law or log_power.
    #[arg(long, global = true)]
    kind: Option<String>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Two-sided log envelope of the Dirichlet heat kernel.
    #[command(allow_negative_numbers = true)]
    Envelope {
        #[arg(long)]
        t: f64,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        x: Point,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        y: Point,
    },
    /// Regime label and crossover times.
    #[command(allow_negative_numbers = true)]
    Regime {
        #[arg(long)]
        t: f64,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        x: Point,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        y: Point,
    },
    /// Log of the survival-probability upper bound.
    #[command(allow_negative_numbers = true)]
    SurvivalBound {
        #[arg(long)]
        t: f64,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        x: Point,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
    },
    /// Log of the intrinsic-ultracontractivity constant.
    #[command(allow_negative_numbers = true)]
    IuConstant {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        cutoff: f64,
    },
    /// Closed-form shape for the worked reference functions.
    #[command(allow_negative_numbers = true)]
    ExampleTable {
        #[arg(long)]
        t: f64,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        x: Option<Point>,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        y: Option<Point>,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
        #[arg(long, default_value_t = 1.0)]
        c3: f64,
    },
    /// One Monte Carlo estimate as a CSV row.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 0.1)]
        t: f64,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        x: Option<Point>,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        y: Option<Point>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        box_radius: Option<f64>,
    },
    /// Grid sweep of estimates against envelopes; writes report.csv and summary.txt.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Compare survival estimates with the survival bound instead.
        #[arg(long)]
        survival: bool,
        #[arg(long)]
        c2: Option<f64>,
    },
    /// Lower envelope against the Varopoulos product along the axis.
    #[command(allow_negative_numbers = true)]
    DemoVaropoulos {
        /// Defaults to the largest crossover time along the axis.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
        #[arg(long, value_parser = point)]
        y_norms: Option<Point>,
    },
    /// Analytic asymptotic window checks.
    Asymptotics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Survival,
    Kernel,
    ExitTime,
    Intensity,
}

/// Comma-separated coordinates.
#[derive(Clone, Debug, PartialEq)]
struct Point(Vec<f64>);

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn point(s: &str) -> Result<Point, String> {
    parse_list(s).map(Point).map_err(|e| e.to_string())
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn nums(vs: &[f64]) -> String {
    vs.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

fn names(prefix: &str, d: usize) -> String {
    (1..=d).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(",")
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<HornError> for Failure {
    fn from(e: HornError) -> Self {
        if e.is_usage() || matches!(e, HornError::Domain(_)) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn build_config(cli: &Cli) -> Result<Config, Failure> {
    let mut cfg = Config::default();
    if let Some(p) = &cli.config {
        cfg.merge(&Config::parse(&read(p)?)?);
    }
    if let Some(p) = &cli.consts {
        cfg.merge(&Config::parse_consts(&read(p)?)?);
    }
    apply_flags(cli, &mut cfg)?;
    Ok(cfg)
}

fn apply_flags(cli: &Cli, cfg: &mut Config) -> Result<(), Failure> {
    if let Some(k) = &cli.kind {
        cfg.set("ref.kind", k)?;
    }
    if let Some(v) = cli.theta {
        cfg.set("ref.theta", &v.to_string())?;
    }
    if let Some(v) = cli.alpha {
        cfg.set("process.alpha", &v.to_string())?;
    }
    if let Some(v) = cli.dim {
        cfg.set("region.dim", &v.to_string())?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(())
}

/// Thread count from the configuration, capped by the environment.
fn threads(mc: &MCConfig) -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let cap: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
            Ok(mc.parallelism.min(cap))
        }
        Err(_) => Ok(mc.parallelism),
    }
}

fn check_dim(model: &HeatKernelModel, pts: &[&[f64]]) -> Outcome {
    let d = model.params().d;
    for p in pts {
        if p.len() != d {
            return Err(Failure::Usage(format!("points need {d} coordinates, got {}", p.len())));
        }
    }
    Ok(())
}

fn axis_point(d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    x[0] = 1.0;
    x
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Outcome {
    let cfg = build_config(cli)?;
    let model = cfg.model()?;
    let d = model.params().d;
    match &cli.cmd {
        Cmd::Envelope { t, x, y } => {
            check_dim(&model, &[x, y])?;
            let env = model.envelope(*t, x, y)?;
            writeln!(out, "t,{},{},regime,log_lower,log_upper", names("x", d), names("y", d))?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                num(*t),
                nums(x),
                nums(y),
                env.regime,
                num(env.log_lower),
                num(env.log_upper)
            )?;
        }
        Cmd::Regime { t, x, y } => {
            check_dim(&model, &[x, y])?;
            let regime = model.classify(*t, x, y)?;
            let (tx, ty) = (model.t0(x)?, model.t0(y)?);
            writeln!(out, "t,{},{},regime,t0_x,t0_y", names("x", d), names("y", d))?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                num(*t),
                nums(x),
                nums(y),
                regime,
                num(tx),
                num(ty)
            )?;
        }
        Cmd::SurvivalBound { t, x, c2 } => {
            check_dim(&model, &[x])?;
            let v = model.survival_upper_log(*c2, *t, x)?;
            writeln!(out, "t,{},c2,log_bound", names("x", d))?;
            writeln!(out, "{},{},{},{}", num(*t), nums(x), num(*c2), num(v))?;
        }
        Cmd::IuConstant { t, cutoff } => {
            let v = model.iu_constant_log(*t, *cutoff)?;
            writeln!(out, "t,cutoff,log_iu")?;
            writeln!(out, "{},{},{}", num(*t), num(*cutoff), num(v))?;
        }
        Cmd::ExampleTable { t, x, y, c1, c2, c3 } => match model.reference().profile() {
            Profile::LogPower { .. } => {
                let (x, y) = match (x, y) {
                    (Some(x), Some(y)) => (x, y),
                    _ => return Err(Failure::Usage("the log-power table needs --x and --y".into())),
                };
                check_dim(&model, &[x, y])?;
                let cut = LogPowerTableCutoffs {
                    c1: *c1,
                    c2: *c2,
                    c3: *c3,
                };
                let e = example_log_power_table_log(model.region(), model.params(), *t, x, y, &cut)?;
                writeln!(out, "t,{},{},branch,log_shape", names("x", d), names("y", d))?;
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    num(*t),
                    nums(x),
                    nums(y),
                    e.branch,
                    num(e.log_shape)
                )?;
            }
            Profile::PowerLaw { theta } => {
                let v = example_power_law_f_log(*theta, model.params(), *t)?;
                writeln!(out, "t,theta,log_F")?;
                writeln!(out, "{},{},{}", num(*t), num(*theta), num(v))?;
            }
            Profile::Custom(_) => return Err(Failure::Usage("no closed-form table for custom profiles".into())),
        },
        Cmd::Simulate {
            mode,
            t,
            x,
            y,
            paths,
            step,
            seed,
            box_radius,
        } => {
            let mut mc = cfg.mc()?;
            if let Some(v) = paths {
                mc.n_paths = *v;
            }
            if let Some(v) = step {
                mc.step_h = *v;
            }
            if let Some(v) = seed {
                mc.seed = *v;
            }
            if let Some(v) = box_radius {
                mc.box_radius = *v;
            }
            mc.parallelism = threads(&mc)?;
            let x = x.as_ref().map_or_else(|| axis_point(d), |p| p.0.clone());
            let y = y.as_ref().map_or_else(|| x.clone(), |p| p.0.clone());
            check_dim(&model, &[&x, &y])?;
            let (region, p) = (model.region(), model.params());
            let res: MCResult = match mode {
                Mode::Survival => survival_mc(region, p, &x, *t, &mc)?,
                Mode::Kernel => kernel_mc(region, p, &x, &y, *t, &mc)?,
                Mode::ExitTime => exit_time_mc(region, p, &x, *t, &mc)?,
                Mode::Intensity => complement_intensity_mc(region, p, &x, mc.n_paths, mc.seed)?,
            };
            let label = mode.to_possible_value().expect("no skipped variants");
            writeln!(
                out,
                "mode,t,{},{},paths,step,seed,box_radius,estimate,std_error,n_effective",
                names("x", d),
                names("y", d)
            )?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                label.get_name(),
                num(*t),
                nums(&x),
                nums(&y),
                mc.n_paths,
                num(mc.step_h),
                mc.seed,
                num(mc.box_radius),
                num(res.estimate),
                num(res.std_error),
                res.n_effective
            )?;
        }
        Cmd::Verify {
            spec,
            out_dir,
            survival,
            c2,
        } => {
            let mut full = cfg.clone();
            full.merge(&Config::parse(&read(spec)?)?);
            apply_flags(cli, &mut full)?;
            let model = full.model()?;
            let mut sweep_spec = full.sweep_spec()?;
            sweep_spec.mc.parallelism = threads(&sweep_spec.mc)?;
            let survival = *survival || full.get("survival").is_some_and(|v| v == "true");
            let c2 = match c2 {
                Some(v) => Some(*v),
                None => full
                    .get("c2")
                    .map(|v| {
                        v.parse::<f64>()
                            .map_err(|_| Failure::Usage(format!("c2: {v:?} is not a number")))
                    })
                    .transpose()?,
            };
            let dir = out_dir
                .clone()
                .or_else(|| full.get("out_dir").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let (report, fitted): (VerificationReport, Option<f64>) = if survival {
                let (r, c) = harness::survival_sweep(&model, &sweep_spec, c2)?;
                (r, Some(c))
            } else {
                (harness::sweep(&model, &sweep_spec)?, None)
            };
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("report.csv"), report.to_csv())?;
            let mut summary = report.summary_text();
            if let Some(c) = fitted {
                summary.push_str(&format!("c2 = {c:e}\n"));
            }
            fs::write(dir.join("summary.txt"), &summary)?;
            write!(out, "{summary}")?;
        }
        Cmd::DemoVaropoulos { t, c2, y_norms } => {
            let t = match t {
                Some(t) => *t,
                None => harness::t0_sup(&model)?,
            };
            let ys = y_norms
                .as_ref()
                .map_or_else(|| harness::log_grid(10.0, 1000.0, 5), |p| p.0.clone());
            let rows = harness::varopoulos_demo(&model, *c2, t, &ys)?;
            writeln!(out, "t,y_norm,x_norm,regime,log_lower,log_product,gap,flagged")?;
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    num(t),
                    num(r.y_norm),
                    num(r.x_norm),
                    r.regime,
                    num(r.log_lower),
                    num(r.log_product),
                    num(r.gap),
                    r.flagged
                )?;
            }
        }
        Cmd::Asymptotics => {
            writeln!(out, "check,min,max,window,passed")?;
            for c in harness::asymptotics_suite(&model)? {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    c.name,
                    num(c.measured.min),
                    num(c.measured.max),
                    c.window,
                    c.passed
                )?;
            }
        }
    }
    Ok(())
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Numeric(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reebflow::annulus::{
    check_vn, delta, find_horizontal_points, foliation_svg, group_law_sweep,
    involution_residual, pi_identity_sweep, verify_commutation, AnnulusAction, AnnulusPoint,
};
use reebflow::band::{self, build_standard_extension, realize_flow, Chart, HalfLineAction};
use reebflow::circle::{CircleAction, CirclePoint, PlHomeo};
use reebflow::examples::{build_example1_action, rigidity_report};
use reebflow::profile::{height_of, Family, Profile};
use reebflow::report::VerificationReport;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Parser)]
#[command(name = "reebflow", version, about = "Flows on the Reeb band and its quotient annulus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate y, f, f* and print sigma.
    Profile {
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Interior samples per PL segment.
        #[arg(long, default_value_t = 4)]
        subdivisions: usize,
    },
    /// Realize a band flow; emit orbit CSV and leaf pictures.
    Realize {
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Number of grid pairs drawn.
        #[arg(long, default_value_t = 6)]
        levels: usize,
        /// Orbit samples per level.
        #[arg(long, default_value_t = 16)]
        steps: usize,
    },
    /// Run one verification sweep and emit its report.
    Verify {
        #[command(subcommand)]
        check: Check,
    },
    /// Build the glued action for a random boundary action and verify it.
    Example1 {
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Break points of the random boundary conjugator.
        #[arg(long, default_value_t = 4)]
        breaks: usize,
    },
    /// Constraint set and rigidity verdict.
    Rigidity {
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Number of grid pairs; defaults to the depth.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0.01)]
        resolution: f64,
    },
    /// Extend two half-line actions to the product flow on the quadrant.
    ExtendStandard {
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Time-one factor of the x action.
        #[arg(long, default_value_t = 2.0)]
        base_x: f64,
        /// Time-one factor of the y action.
        #[arg(long, default_value_t = 0.5)]
        base_y: f64,
        /// Break points of random reparametrizations (0 keeps the model).
        #[arg(long, default_value_t = 0)]
        breaks: usize,
    },
}

#[derive(Subcommand)]
enum Check {
    /// pi_0 - pi_1 = f(p) mod 1 on random interior points.
    PiIdentity {
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// phi^s phi^t = phi^(s+t) on random triples.
    GroupLaw {
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        action: ActionArgs,
    },
    /// R_alpha phi_1^t = phi_0^t R_alpha on a grid.
    Commutation {
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        action: ActionArgs,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
    },
    /// Horizontally going points on the circles p = y_n.
    HorizontalPoints {
        #[command(flatten)]
        source: ProfileArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        action: ActionArgs,
        /// Largest n checked.
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Monotone,
    Example1,
    Example2,
}

#[derive(Args)]
struct ProfileArgs {
    /// Profile family; example2 when only --beta is given, example1 otherwise.
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 16)]
    depth: usize,
    /// Profile JSON file; overrides the family flags.
    #[arg(long)]
    profile: Option<PathBuf>,
}

impl ProfileArgs {
    fn load(&self) -> Result<Profile> {
        if let Some(path) = &self.profile {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            return Profile::from_json(&text).with_context(|| format!("parsing {}", path.display()));
        }
        let family = match (self.family, self.beta) {
            (Some(FamilyArg::Monotone), _) => Family::Monotone,
            (Some(FamilyArg::Example1), _) => Family::Example1,
            (Some(FamilyArg::Example2), beta) => Family::Example2 {
                beta: beta.unwrap_or(GOLDEN),
            },
            (None, Some(beta)) => Family::Example2 { beta },
            (None, None) => Family::Example1,
        };
        Ok(Profile::from_family(family, 0.0, self.depth)?)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Directory for emitted files.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path: PathBuf = Path::new(dir).join(name);
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct SweepArgs {
    /// Sample count; each check has its own default.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

impl SweepArgs {
    fn samples(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            bail!("--tol must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ActionChoice {
    /// Glued action with a random boundary action.
    Glued,
    /// The flow's own action (x + t, y).
    Rotation,
    /// Independent random boundary actions moved along the pi_0 leaves.
    VerticalPair,
}

#[derive(Args)]
struct ActionArgs {
    #[arg(long, value_enum, default_value_t = ActionChoice::Glued)]
    action: ActionChoice,
    /// Break points of the random boundary conjugators.
    #[arg(long, default_value_t = 4)]
    breaks: usize,
}

impl ActionArgs {
    fn build(&self, p: Profile, rng: &mut ChaCha8Rng) -> Result<AnnulusAction> {
        Ok(match self.action {
            ActionChoice::Rotation => AnnulusAction::horizontal_rotation(p),
            ActionChoice::Glued => build_example1_action(CircleAction::random_pl(rng, self.breaks), p)?,
            ActionChoice::VerticalPair => {
                let psi0 = CircleAction::random_pl(rng, self.breaks);
                let psi1 = CircleAction::random_pl(rng, self.breaks);
                AnnulusAction::vertical_pair(p, psi0, psi1)
            }
        })
    }
}

/// Result of one subcommand: whether every check passed.
struct Outcome {
    pass: bool,
}

/// Writes to stdout, ignoring a closed pipe.
fn stdout_line(text: &str) {
    let _ = writeln!(io::stdout(), "{text}");
}

fn emit_reports(out: &OutArgs, reports: &[VerificationReport]) -> Result<Outcome> {
    let text = if let [single] = reports {
        serde_json::to_string_pretty(single)?
    } else {
        serde_json::to_string_pretty(reports)?
    };
    stdout_line(&text);
    out.write("report.json", &format!("{text}\n"))?;
    for r in reports.iter().filter(|r| !r.pass) {
        eprintln!("check {} failed: residual {:e}, tol {:e}", r.check, r.residual, r.tol);
    }
    Ok(Outcome {
        pass: reports.iter().all(|r| r.pass),
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Profile {
            source,
            out,
            subdivisions,
        } => {
            let p = source.load()?;
            let csv = p.to_csv(subdivisions);
            let sigma = p.sigma();
            if out.out.is_some() {
                out.write("profile.csv", &csv)?;
                stdout_line(&format!("sigma = {sigma}"));
            } else {
                let _ = io::stdout().write_all(csv.as_bytes());
                eprintln!("sigma = {sigma}");
            }
            if let Some(w) = p.beta_warning() {
                eprintln!("warning: beta = {}/{} is rational with a small denominator", w.p, w.q);
            }
            Ok(Outcome { pass: true })
        }
        Command::Realize {
            source,
            out,
            sweep,
            levels,
            steps,
        } => {
            sweep.validate()?;
            let p = source.load()?;
            let flow = realize_flow(p.clone())?;
            let samples = sweep.samples(1000);
            let mut rng = sweep.rng();
            let mut worst = (0.0f64, 1.0f64);
            for _ in 0..samples {
                let y = height_of(rng.gen_range(0.0..=p.u_max().min(1000.0))).max(p.y_min());
                let r = (flow.transit_time(y)? - p.eval_f(y)?).abs();
                if r > worst.0 {
                    worst = (r, y);
                }
            }
            let report = VerificationReport::new("transit-time", worst.0, [("y", worst.1)], sweep.tol)
                .with_seed(sweep.seed);
            let grid = band::grid_levels(&p, levels);
            out.write("orbit.csv", &flow.orbit_csv(&grid, steps)?)?;
            out.write("band.svg", &flow.leaves_svg(&grid)?)?;
            let peaks: Vec<f64> = (1..=levels).map(|n| (2 * n - 1) as f64).filter(|&u| u <= p.u_max()).collect();
            out.write("foliation.svg", &foliation_svg(&p, 12, &peaks))?;
            emit_reports(&out, &[report])
        }
        Command::Verify { check } => run_check(check),
        Command::Example1 {
            source,
            out,
            sweep,
            breaks,
        } => {
            sweep.validate()?;
            let p = source.load()?;
            let mut rng = sweep.rng();
            let psi = CircleAction::random_pl(&mut rng, breaks);
            let a = match build_example1_action(psi.clone(), p) {
                Ok(a) => a,
                Err(reebflow::Error::GlueConstraintViolation { y, value, constraint }) => {
                    let (residual, t, x) = psi.rotation_commutator_residual(constraint.value());
                    let report = VerificationReport::new(
                        "glue-constraint",
                        residual,
                        [("y", y), ("f", value), ("c", constraint.value()), ("t", t), ("x", x)],
                        sweep.tol,
                    )
                    .with_seed(sweep.seed);
                    eprintln!("rejected: f = {value} at y = {y} is not an integer");
                    return emit_reports(&out, &[report]);
                }
                Err(e) => return Err(e.into()),
            };
            let samples = sweep.samples(256);
            let boundary = [Chart::Zero, Chart::One].map(|side| {
                let phi = a.boundary_action(side);
                let mut worst = (0.0f64, 0.0, 0.0);
                for i in 0..=32 {
                    let t = i as f64 / 32.0;
                    for j in 0..samples {
                        let x = CirclePoint::new(j as f64 / samples as f64);
                        let r = phi.act(t, x).dist(psi.act(t, x));
                        if r > worst.0 {
                            worst = (r, t, x.value());
                        }
                    }
                }
                VerificationReport::new(
                    format!("boundary-{}", side.index()),
                    worst.0,
                    [("t", worst.1), ("x", worst.2)],
                    sweep.tol,
                )
            });
            let group = group_law_sweep(&a, 1000, &mut rng, sweep.tol)?;
            let comm = verify_commutation(&a, CirclePoint::new(0.0), 64).to_report(sweep.tol);
            let inv = (0..2)
                .map(|k| involution_residual(&a, Chart::from_index(k).unwrap(), 0.0, samples))
                .fold(0.0, f64::max);
            let half = VerificationReport::new("half-turn-involution", inv, [], sweep.tol);
            let mut reports: Vec<VerificationReport> = boundary.into_iter().collect();
            reports.extend([group, comm, half]);
            let reports: Vec<_> = reports.into_iter().map(|r| r.with_seed(sweep.seed)).collect();
            emit_reports(&out, &reports)
        }
        Command::Rigidity {
            source,
            out,
            count,
            resolution,
        } => {
            if !(resolution > 0.0) {
                bail!("--resolution must be positive");
            }
            let p = source.load()?;
            let r = rigidity_report(&p, count.unwrap_or(p.depth()), resolution)?;
            let text = r.to_json()?;
            stdout_line(&text);
            out.write("rigidity.json", &format!("{text}\n"))?;
            eprintln!("verdict: {}", r.verdict.as_str());
            Ok(Outcome { pass: true })
        }
        Command::ExtendStandard {
            out,
            sweep,
            base_x,
            base_y,
            breaks,
        } => {
            sweep.validate()?;
            let mut rng = sweep.rng();
            let conj = |rng: &mut ChaCha8Rng| {
                if breaks == 0 {
                    PlHomeo::identity()
                } else {
                    PlHomeo::random(rng, breaks)
                }
            };
            let psi0 = HalfLineAction::new(conj(&mut rng), base_x)?;
            let psi1 = HalfLineAction::new(conj(&mut rng), base_y)?;
            let report = match build_standard_extension(psi0, psi1) {
                Ok(flow) => {
                    let mut worst = (0.0f64, 0.0, 0.0);
                    for _ in 0..sweep.samples(1000) {
                        let x = rng.gen_range(-20.0f64..20.0).exp2();
                        let y = rng.gen_range(-20.0f64..20.0).exp2();
                        let (x1, y1) = flow.time_one((x, y));
                        let r = ((x1 - 2.0 * x).abs() / (2.0 * x)).max((y1 - y / 2.0).abs() / (y / 2.0));
                        if r > worst.0 {
                            worst = (r, x, y);
                        }
                    }
                    VerificationReport::new(
                        "standard-extension",
                        worst.0,
                        [("x", worst.1), ("y", worst.2)],
                        sweep.tol,
                    )
                }
                Err(reebflow::Error::TimeOneMismatch {
                    axis,
                    sample,
                    got,
                    expected,
                }) => {
                    let residual = (got - expected).abs() / expected.abs().max(1.0);
                    eprintln!("rejected: time-one of the {axis} action mismatches at {sample}");
                    VerificationReport::new(
                        "standard-extension",
                        residual,
                        [("sample", sample), ("got", got), ("expected", expected)],
                        sweep.tol,
                    )
                    .with_verdict(false)
                }
                Err(e) => return Err(e.into()),
            };
            emit_reports(&out, &[report.with_seed(sweep.seed)])
        }
    }
}

fn run_check(check: Check) -> Result<Outcome> {
    match check {
        Check::PiIdentity { source, out, sweep } => {
            sweep.validate()?;
            let p = source.load()?;
            let report = pi_identity_sweep(&p, sweep.samples(10_000), &mut sweep.rng(), sweep.tol)?;
            emit_reports(&out, &[report.with_seed(sweep.seed)])
        }
        Check::GroupLaw {
            source,
            out,
            sweep,
            action,
        } => {
            sweep.validate()?;
            let mut rng = sweep.rng();
            let a = action.build(source.load()?, &mut rng)?;
            let report = group_law_sweep(&a, sweep.samples(1000), &mut rng, sweep.tol)?;
            emit_reports(&out, &[report.with_seed(sweep.seed)])
        }
        Check::Commutation {
            source,
            out,
            sweep,
            action,
            alpha,
        } => {
            sweep.validate()?;
            let mut rng = sweep.rng();
            let a = action.build(source.load()?, &mut rng)?;
            let report = verify_commutation(&a, CirclePoint::new(alpha), sweep.samples(64))
                .to_report(sweep.tol);
            emit_reports(&out, &[report.with_seed(sweep.seed)])
        }
        Check::HorizontalPoints {
            source,
            out,
            sweep,
            action,
            count,
        } => {
            sweep.validate()?;
            let mut rng = sweep.rng();
            let a = action.build(source.load()?, &mut rng)?;
            let seq = a.profile().extract_osc_seq(count)?;
            let mut worst = (0.0f64, 0.0, 0.0);
            let mut worst_image = (0.0f64, 0.0, 0.0);
            for pair in &seq.pairs {
                let y = pair.y_peak();
                for x in find_horizontal_points(&a, y, 0.5)? {
                    let xi = AnnulusPoint::Interior { x, y };
                    let image = a.act_eval(&xi, 0.5)?;
                    let again = a.act_eval(&image, 0.5)?;
                    let r = (image.level() - y).abs().max(delta(&a, &xi, 0.5)?.abs());
                    if r > worst.0 {
                        worst = (r, x.value(), y);
                    }
                    let r = (again.level() - y).abs();
                    if r > worst_image.0 {
                        worst_image = (r, x.value(), y);
                    }
                }
            }
            let vn = check_vn(&a, count, sweep.samples(64))?;
            let points = VerificationReport::new(
                "horizontal-points",
                worst.0,
                [("x", worst.1), ("y", worst.2)],
                sweep.tol,
            );
            let images = VerificationReport::new(
                "horizontal-image",
                worst_image.0,
                [("x", worst_image.1), ("y", worst_image.2)],
                10.0 * sweep.tol,
            );
            let margin = VerificationReport::new(
                "vn-margin",
                vn.min_margin_to_trough,
                [("n", count as f64)],
                sweep.tol,
            )
            .with_verdict(vn.all_in_vn && vn.all_above_trough);
            let reports = [points, images, margin].map(|r| r.with_seed(sweep.seed));
            emit_reports(&out, &reports)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome { pass: true }) => ExitCode::SUCCESS,
        Ok(Outcome { pass: false }) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error as ThisError;

use crate::channels::{
    adjoint_map, classify, coarse_grain, make_amplitude_damping, make_dephasing, make_noisy_operation,
    make_unitary_channel, random_channel, random_instrument, Instrument, QuantumMap,
};
use crate::error::Error;
use crate::inference::{
    channel_toward_past_check, deterministic_effect_check, four_task_check, four_task_check_channel,
    inference_symmetry_report, is_inference_symmetric, no_signalling_check, open_ratio_check, open_reversal_check,
    postdict_channel, postdict_channel_via_purification, postdict_closed, postdict_via_rotated_purification,
    predict_closed, Transformation,
};
use crate::linalg::{haar_random_unitary, random_state, DimsPartition, Operator, STRUCTURAL_TOL};
use crate::purify::{purify_instrument, stinespring, verify_instrument_purification, verify_purification};
use crate::report::{digest, Check, Format, ReportDocument};
use crate::rng::child_seed;
use crate::sampler::{empirical_conditionals, frequentist_check_with_floor, TOLERANCE_FLOOR};
use crate::scenario::{parse_scenario_str, OutcomeLabel, ScenarioError, TaskKind, ValidatedScenario};
use crate::table::{Direction, ProbabilityTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_UNDEFINED_CONDITIONAL: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

/// Default shot count for `sample`.
pub const DEFAULT_SHOTS: u64 = 100_000;
/// Random probe states per purification round trip.
const ROUND_TRIP_TRIALS: usize = 10;
/// Largest joint dimension accepted by `verify --dims`.
const MAX_VERIFY_DIM: usize = 64;

/// Tolerances for identities that hold exactly in arithmetic.
const EXACT_TOL: f64 = 1e-12;
/// Tolerances for identities routed through a purification.
const PURIFIED_TOL: f64 = 1e-10;
/// Row-sum tolerance for printed tables.
const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "retrodiction", version, about = "Prediction and postdiction for quantum prepare-transform-measure scenarios")]
pub struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Overrides comparison thresholds (structural validation stays at 1e-10).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probabilities of test outcomes given preparation outcomes.
    Predict {
        /// Given outcome labels, overriding the scenario.
        #[arg(long, num_args = 1..)]
        given: Vec<String>,
    },
    /// Probabilities of preparation outcomes given test outcomes.
    Postdict {
        #[arg(long, num_args = 1..)]
        given: Vec<String>,
    },
    /// Unitality, inference symmetry and existence of an active reverse.
    Classify,
    /// Purify the transformation and check the round trip.
    Purify,
    /// Run the identity suite on random instances, or on the scenario.
    Verify {
        /// Subsystem dimensions for the random suite.
        #[arg(long, num_args = 1.., default_values_t = [2usize, 2])]
        dims: Vec<usize>,
    },
    /// Monte Carlo ensemble compared with the analytic tables.
    Sample {
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Run the task named in the scenario.
    Run,
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Library(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_PARSE,
            CliError::Scenario(e) if e.is_parse_error() => EXIT_PARSE,
            CliError::Scenario(_) => EXIT_VALIDATION,
            CliError::Library(Error::UndefinedConditional(_)) => EXIT_UNDEFINED_CONDITIONAL,
            CliError::Library(_) => EXIT_VALIDATION,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "E_USAGE",
            CliError::Scenario(e) => e.code(),
            CliError::Library(e) => match e {
                Error::DimensionMismatch(_) => "E_DIMENSION",
                Error::InvalidInput(_) => "E_INVALID",
                Error::NotUnitary { .. } => "E_NOT_UNITARY",
                Error::NotCptp { .. } => "E_NOT_CPTP",
                Error::Incomplete { .. } => "E_INCOMPLETE",
                Error::UndefinedConditional(_) => "E_UNDEFINED_CONDITIONAL",
                Error::NoActiveReverse(_) => "E_NO_ACTIVE_REVERSE",
            },
        }
    }
}

struct Loaded {
    scenario: ValidatedScenario,
    digest: String,
}

fn load(cli: &Cli) -> Result<Option<Loaded>, CliError> {
    let Some(path) = &cli.scenario else { return Ok(None) };
    let bytes = std::fs::read(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let text = String::from_utf8(bytes).map_err(|e| ScenarioError::Malformed(e.to_string()))?;
    let scenario = parse_scenario_str(&text)?;
    Ok(Some(Loaded { scenario, digest: digest(text.as_bytes()) }))
}

fn required(loaded: Option<Loaded>, command: &str) -> Result<Loaded, CliError> {
    loaded.ok_or_else(|| CliError::Usage(format!("`{command}` needs --scenario <path>")))
}

/// Execute a parsed command line and build its report.
pub fn run(cli: &Cli) -> Result<ReportDocument, CliError> {
    if let Some(t) = cli.tolerance {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Usage(format!("--tolerance must be a non-negative number, got {t}")));
        }
    }
    let loaded = load(cli)?;
    let kind = match &cli.command {
        Command::Predict { .. } => TaskKind::Predict,
        Command::Postdict { .. } => TaskKind::Postdict,
        Command::Classify => TaskKind::Classify,
        Command::Purify => TaskKind::Purify,
        Command::Verify { .. } => TaskKind::Verify,
        Command::Sample { .. } => TaskKind::Sample,
        Command::Run => required_ref(&loaded, "run")?.scenario.kind,
    };
    let seed = cli.seed.or_else(|| loaded.as_ref().and_then(|l| l.scenario.file.seed)).unwrap_or(0);
    let digest = loaded.as_ref().map(|l| l.digest.clone());

    let mut report = match (kind, &cli.command) {
        (TaskKind::Verify, command) => {
            let dims = match command {
                Command::Verify { dims } => dims.clone(),
                _ => vec![2, 2],
            };
            match &loaded {
                Some(l) => verify_scenario(&l.scenario, seed, cli.tolerance)?,
                None => verify_random(&dims, seed, cli.tolerance)?,
            }
        }
        (TaskKind::Predict | TaskKind::Postdict, command) => {
            let given = match command {
                Command::Predict { given } | Command::Postdict { given } if !given.is_empty() => {
                    Some(given.iter().map(|g| OutcomeLabel::Name(g.clone())).collect::<Vec<_>>())
                }
                _ => None,
            };
            let direction = if kind == TaskKind::Predict { Direction::Predict } else { Direction::Postdict };
            infer(&required(loaded, kind.as_str())?.scenario, direction, given.as_deref())?
        }
        (TaskKind::Classify, _) => classify_scenario(&required(loaded, "classify")?.scenario, seed, cli.tolerance)?,
        (TaskKind::Purify, _) => purify_scenario(&required(loaded, "purify")?.scenario, seed, cli.tolerance)?,
        (TaskKind::Sample, command) => {
            let l = required(loaded, "sample")?;
            let shots = match command {
                Command::Sample { shots: Some(s) } => *s,
                _ => l.scenario.file.shots.unwrap_or(DEFAULT_SHOTS),
            };
            sample_scenario(&l.scenario, shots, seed, cli.tolerance)?
        }
    };
    report.scenario_digest = digest;
    report.seed.get_or_insert(seed);
    if !report.probabilities_in_range() {
        report.flag("probabilities-in-range", false, "a table entry lies outside [0, 1]");
    }
    Ok(report)
}

fn required_ref<'a>(loaded: &'a Option<Loaded>, command: &str) -> Result<&'a Loaded, CliError> {
    loaded.as_ref().ok_or_else(|| CliError::Usage(format!("`{command}` needs --scenario <path>")))
}

fn normalization_check(report: &mut ReportDocument, table: &ProbabilityTable) {
    let name = format!("normalization[{}]", table.given);
    report.check(name, table.normalization_defect, NORMALIZATION_TOL);
}

fn infer(
    scenario: &ValidatedScenario,
    direction: Direction,
    given: Option<&[OutcomeLabel]>,
) -> Result<ReportDocument, CliError> {
    let task = scenario.task(direction)?;
    let given = match given {
        Some(g) => scenario.resolve_given(&task, Some(g))?,
        None => scenario.given_indices(&task)?,
    };
    let table = task.solve(&given)?;
    let mut report = ReportDocument::new(direction.to_string());
    normalization_check(&mut report, &table);
    report.tables.push(table);
    Ok(report)
}

fn classify_scenario(scenario: &ValidatedScenario, seed: u64, tolerance: Option<f64>) -> Result<ReportDocument, CliError> {
    let channel = scenario.channel()?;
    let tol = tolerance.unwrap_or(STRUCTURAL_TOL);
    let c = classify(&channel);
    let symmetry = inference_symmetry_report(&channel, tol, seed)?;
    let adjoint_cptp = classify(&adjoint_map(&channel)).is_cptp();
    let mut report = ReportDocument::new("classify");
    report.summary.push(format!(
        "unital: {}, inference-symmetric: {}, active-reverse: {}",
        symmetry.unital,
        symmetry.tables_symmetric,
        if adjoint_cptp { "exists" } else { "none" }
    ));
    let agree = symmetry.unital == symmetry.tables_symmetric && symmetry.unital == adjoint_cptp;
    report.flag(
        "unital-symmetric-adjoint-agree",
        agree,
        format!("unital {} / symmetric {} / adjoint-cptp {}", symmetry.unital, symmetry.tables_symmetric, adjoint_cptp),
    );
    report.data = serde_json::json!({ "classification": c, "symmetry": symmetry, "adjoint_cptp": adjoint_cptp });
    Ok(report)
}

fn purify_scenario(scenario: &ValidatedScenario, seed: u64, tolerance: Option<f64>) -> Result<ReportDocument, CliError> {
    let tol = tolerance.unwrap_or(PURIFIED_TOL);
    let mut report = ReportDocument::new("purify");
    let purification = match &scenario.transformation {
        Transformation::Instrument(inst) => {
            let p = purify_instrument(inst)?;
            let r = verify_instrument_purification(inst, &p, ROUND_TRIP_TRIALS, seed)?;
            report.check("round-trip", r.max_defect(), tol);
            p
        }
        _ => {
            let channel = scenario.channel()?;
            let p = stinespring(&channel)?;
            let r = verify_purification(&channel, &p, ROUND_TRIP_TRIALS, seed)?;
            report.check("round-trip", r.max_defect(), tol);
            let (defect, skipped) = channel_ratio_defect(&channel, seed)?;
            record_with_skips(&mut report, "post-channel-ratio", defect, tol, &skipped);
            p
        }
    };
    report.summary.push(format!(
        "ancilla dimension {}, discarded output dimension {}",
        purification.d_b(),
        purification.d_y()
    ));
    report.data = serde_json::to_value(&purification).expect("purification serializes");
    Ok(report)
}

fn sample_scenario(
    scenario: &ValidatedScenario,
    shots: u64,
    seed: u64,
    tolerance: Option<f64>,
) -> Result<ReportDocument, CliError> {
    let task = scenario.task(Direction::Predict)?;
    let floor = tolerance.unwrap_or(TOLERANCE_FLOOR);
    let f = frequentist_check_with_floor(&task, shots, seed, floor)?;
    let mut report = ReportDocument::new("sample");
    for direction in [Direction::Predict, Direction::Postdict] {
        for (table, _) in empirical_conditionals(&f.ensemble, direction)?.tables {
            report.tables.push(table);
        }
    }
    for (direction, comparisons) in [(Direction::Predict, &f.predict), (Direction::Postdict, &f.postdict)] {
        for c in comparisons {
            report.pass &= c.pass;
            report.checks.push(Check {
                name: format!("{direction}[{}]", c.given),
                defect: c.max_deviation,
                tolerance: c.worst_tolerance,
                pass: c.pass,
                detail: Some(format!("worst cell {}", c.worst_label)),
            });
        }
    }
    if !f.skipped.is_empty() {
        report.summary.push(format!("no samples conditioned on: {}", f.skipped.join(", ")));
    }
    report.summary.push(format!("{shots} shots"));
    report.data = serde_json::json!({ "counts": f.ensemble.counts });
    Ok(report)
}

fn record_with_skips(report: &mut ReportDocument, name: &str, defect: f64, tol: f64, skipped: &[usize]) {
    if skipped.is_empty() {
        report.check(name, defect, tol);
    } else {
        let list: Vec<String> = skipped.iter().map(usize::to_string).collect();
        report.check_with_detail(name, defect, tol, format!("impossible outcomes skipped: {}", list.join(", ")));
    }
}

/// `max_x` distance between direct postdiction and postdiction through the
/// computational and rotated purifications. Outcomes impossible under a flat
/// prior must be impossible along both routes.
fn channel_ratio_defect(channel: &QuantumMap, seed: u64) -> Result<(f64, Vec<usize>), Error> {
    let mut worst = 0.0f64;
    let mut skipped = Vec::new();
    for x in 0..channel.dim_out() {
        let direct = postdict_channel(channel, x);
        let purified = postdict_channel_via_purification(channel, x);
        let rotated = postdict_via_rotated_purification(channel, x, child_seed(seed, x as u64));
        match (direct, purified, rotated) {
            (Ok(d), Ok(p), Ok(r)) => {
                worst = worst.max(d.max_abs_diff(&p)?).max(d.max_abs_diff(&r)?);
                let factors = [d.factor, p.factor, r.factor];
                if let [Some(fd), Some(fp), Some(fr)] = factors {
                    worst = worst.max((fd - fp).abs()).max((fd - fr).abs());
                }
            }
            (
                Err(Error::UndefinedConditional(_)),
                Err(Error::UndefinedConditional(_)),
                Err(Error::UndefinedConditional(_)),
            ) => skipped.push(x),
            (Err(Error::UndefinedConditional(_)), _, _)
            | (_, Err(Error::UndefinedConditional(_)), _)
            | (_, _, Err(Error::UndefinedConditional(_))) => worst = f64::INFINITY,
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Err(e),
        }
    }
    Ok((worst, skipped))
}

fn toward_past_defect(channel: &QuantumMap) -> Result<f64, Error> {
    let mut worst = 0.0f64;
    for a in 0..channel.dim_in() {
        for x in 0..channel.dim_out() {
            worst = worst.max(channel_toward_past_check(channel, a, x)?.defect);
        }
    }
    Ok(worst)
}

fn closed_symmetry_defect(u: &Operator) -> Result<f64, Error> {
    let d = u.rows();
    let predicted: Vec<ProbabilityTable> = (0..d).map(|a| predict_closed(u, a)).collect::<Result<_, _>>()?;
    let mut worst = 0.0f64;
    for x in 0..d {
        let post = postdict_closed(u, x)?;
        for (a, pre) in predicted.iter().enumerate() {
            worst = worst.max((post.at(a) - pre.at(x)).abs());
        }
    }
    Ok(worst)
}

fn four_task_defect(u: &Operator) -> Result<f64, Error> {
    let d = u.rows();
    let mut worst = 0.0f64;
    for a in 0..d {
        for x in 0..d {
            worst = worst.max(four_task_check(u, a, x)?.max_defect);
        }
    }
    Ok(worst)
}

/// The three channel predicates, and whether they agree.
fn predicates(channel: &QuantumMap, seed: u64) -> Result<([bool; 4], bool), Error> {
    let unital = classify(channel).is_unital;
    let tables = inference_symmetry_report(channel, STRUCTURAL_TOL, seed)?.tables_symmetric;
    let symmetric = is_inference_symmetric(channel, STRUCTURAL_TOL)?;
    let adjoint = classify(&adjoint_map(channel)).is_cptp();
    let values = [unital, tables, symmetric, adjoint];
    Ok((values, values.iter().all(|&v| v == unital)))
}

fn channel_checks(
    report: &mut ReportDocument,
    label: &str,
    channel: &QuantumMap,
    seed: u64,
    tolerance: Option<f64>,
) -> Result<(), Error> {
    let purified = tolerance.unwrap_or(PURIFIED_TOL);
    let p = stinespring(channel)?;
    let rt = verify_purification(channel, &p, ROUND_TRIP_TRIALS, child_seed(seed, 1))?;
    report.check(format!("purification-round-trip[{label}]"), rt.max_defect(), purified);
    let (defect, skipped) = channel_ratio_defect(channel, child_seed(seed, 2))?;
    record_with_skips(report, &format!("post-channel-ratio[{label}]"), defect, purified, &skipped);
    report.check(format!("toward-past[{label}]"), toward_past_defect(channel)?, purified);

    let (values, agree) = predicates(channel, child_seed(seed, 3))?;
    report.flag(
        format!("unital-symmetric-adjoint[{label}]"),
        agree,
        format!("unital {} / tables {} / criterion {} / adjoint-cptp {}", values[0], values[1], values[2], values[3]),
    );
    if values[0] {
        let mut worst = 0.0f64;
        for a in 0..channel.dim_in() {
            for x in 0..channel.dim_out() {
                worst = worst.max(four_task_check_channel(channel, a, x)?.max_defect);
            }
        }
        report.check(format!("four-task[{label}]"), worst, purified);
    }

    let effect = deterministic_effect_check(channel)?;
    report.check_with_detail(
        format!("deterministic-effect[{label}]"),
        effect.deviation_from_discard.max(effect.residual),
        purified,
        format!("unique: {}", effect.unique),
    );
    report.flag(
        format!("deterministic-effect-unique[{label}]"),
        effect.unique,
        format!(
            "min singular value {:.3e}, min alternative residual {:.3e}",
            effect.min_singular_value, effect.min_alternative_residual
        ),
    );
    Ok(())
}

fn unitary_checks(
    report: &mut ReportDocument,
    label: &str,
    u: &Operator,
    splits: &[(DimsPartition, DimsPartition)],
    tolerance: Option<f64>,
) -> Result<(), Error> {
    let exact = tolerance.unwrap_or(EXACT_TOL);
    report.check(format!("postU-symmetry[{label}]"), closed_symmetry_defect(u)?, exact);
    report.check(format!("four-task[{label}]"), four_task_defect(u)?, exact);
    for (dims_in, dims_out) in splits {
        let tag = format!("{label} {:?}->{:?}", dims_in.factors(), dims_out.factors());
        let ratios = open_ratio_check(u, dims_in, dims_out)?;
        report.check(format!("open-ratio[{tag}]"), ratios.max_defect, exact);
        let reversal = open_reversal_check(u, dims_in, dims_out)?;
        report.check(format!("open-reversal[{tag}]"), reversal.max_defect, exact);
    }
    Ok(())
}

fn no_signalling_checks(
    report: &mut ReportDocument,
    label: &str,
    e: &Instrument,
    f: &Instrument,
    rho: &Operator,
    tolerance: Option<f64>,
) -> Result<(), Error> {
    let r = no_signalling_check(e, f, rho)?;
    report.check(format!("no-signalling[{label}]"), r.marginal_defect, tolerance.unwrap_or(EXACT_TOL));
    report.check(format!("no-signalling-purified[{label}]"), r.purified_defect, tolerance.unwrap_or(PURIFIED_TOL));
    report.check(format!("no-signalling-conditional[{label}]"), r.conditional_defect, tolerance.unwrap_or(EXACT_TOL));
    Ok(())
}

/// Two-factor splits `[d_1, rest] -> [rest, d_1]` and `[d_1, rest] -> [d_1, rest]`.
fn splits_of(dims: &[usize]) -> Result<Vec<(DimsPartition, DimsPartition)>, Error> {
    if dims.len() < 2 {
        return Ok(Vec::new());
    }
    let first = dims[0];
    let rest: usize = dims[1..].iter().product();
    let input = DimsPartition::new(vec![first, rest])?;
    let mut splits = vec![(input.clone(), DimsPartition::new(vec![rest, first])?)];
    if rest != first {
        splits.push((input.clone(), input));
    }
    Ok(splits)
}

/// Identity suite on seeded random instances with joint dimensions `dims`.
pub fn verify_random(dims: &[usize], seed: u64, tolerance: Option<f64>) -> Result<ReportDocument, CliError> {
    let partition = DimsPartition::new(dims.to_vec()).map_err(|e| CliError::Usage(format!("--dims: {e}")))?;
    let total = partition.total();
    if !(2..=MAX_VERIFY_DIM).contains(&total) {
        return Err(CliError::Usage(format!("--dims: joint dimension {total} outside 2..={MAX_VERIFY_DIM}")));
    }
    let mut report = ReportDocument::new("verify");
    report.summary.push(format!("random suite on dims {dims:?}"));
    let u = haar_random_unitary(total, child_seed(seed, 0));
    unitary_checks(&mut report, "haar", &u, &splits_of(dims)?, tolerance)?;

    let system = dims[0].max(2);
    let mut channels: Vec<(String, QuantumMap)> = Vec::new();
    channels.push(("unitary".into(), make_unitary_channel(&haar_random_unitary(system, child_seed(seed, 10)))?));
    if dims.len() >= 2 && dims[0] >= 2 {
        let rest: usize = dims[1..].iter().product();
        let pair = DimsPartition::new(vec![dims[0], rest])?;
        channels.push(("noisy".into(), make_noisy_operation(&u, &pair)?));
    }
    channels.push(("random".into(), random_channel(system, system, 2, child_seed(seed, 11))));
    if system == 2 {
        channels.push(("dephasing".into(), make_dephasing()));
        channels.push(("amplitude-damping".into(), make_amplitude_damping(0.5)?));
    }
    for (k, (label, channel)) in channels.iter().enumerate() {
        channel_checks(&mut report, label, channel, child_seed(seed, 100 + k as u64), tolerance)?;
    }

    let e = random_instrument(system, system, 2, 2, child_seed(seed, 20));
    let f = random_instrument(system, system, 3, 1, child_seed(seed, 21));
    let rho = random_state(system, child_seed(seed, 22));
    no_signalling_checks(&mut report, "random", &e, &f, &rho, tolerance)?;
    Ok(report)
}

/// Checks applicable to the scenario's transformation.
pub fn verify_scenario(
    scenario: &ValidatedScenario,
    seed: u64,
    tolerance: Option<f64>,
) -> Result<ReportDocument, CliError> {
    let mut report = ReportDocument::new("verify");
    match &scenario.transformation {
        Transformation::Unitary(u) => {
            let mut splits = Vec::new();
            if scenario.dims_in.len() == 2 && scenario.dims_out.len() == 2 {
                splits.push((scenario.dims_in.clone(), scenario.dims_out.clone()));
            }
            if u.is_square() {
                unitary_checks(&mut report, "scenario", u, &splits, tolerance)?;
            }
            channel_checks(&mut report, "scenario", &make_unitary_channel(u)?, seed, tolerance)?;
        }
        Transformation::Channel(channel) => channel_checks(&mut report, "scenario", channel, seed, tolerance)?,
        Transformation::Instrument(inst) => {
            let p = purify_instrument(inst)?;
            let rt = verify_instrument_purification(inst, &p, ROUND_TRIP_TRIALS, seed)?;
            report.check("instrument-purification-round-trip", rt.max_defect(), tolerance.unwrap_or(PURIFIED_TOL));
            if inst.dim_in() == inst.dim_out() {
                let d = inst.dim_in();
                let mixed = Operator::identity(d).scale_real(1.0 / d as f64);
                no_signalling_checks(&mut report, "repeated, mixed", inst, inst, &mixed, tolerance)?;
                let rho = random_state(d, child_seed(seed, 5));
                no_signalling_checks(&mut report, "repeated, random", inst, inst, &rho, tolerance)?;
            }
            channel_checks(&mut report, "averaged", &coarse_grain(inst), seed, tolerance)?;
        }
    }
    Ok(report)
}

/// Parse `args`, run, and write the report to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match run(&cli) {
        Ok(report) => {
            let _ = out.write_all(report.render(cli.format).as_bytes());
            if report.pass {
                EXIT_OK
            } else {
                EXIT_VERIFICATION
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.code());
            e.exit_code()
        }
    }
}

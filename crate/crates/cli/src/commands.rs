//! Subcommand implementations. Each returns a [`Report`] or a [`CliError`]
//! that knows its process exit code.

use std::path::PathBuf;

use ablkit::{
    abl_distribution, bcac_check_with, born_distribution, disturbed_final_probability,
    enumerate_coarse_grainings, estimate_abl, estimate_final_probability, find_counterexample,
    histories::set_partitions, is_consistent_with, mixing_report, simulator::binomial_stderr,
    survey, with_workers, ConsistencyCriterion, HistoryFamily, ObservableConstraint,
    ObservableDecomposition, SearchParams,
};
use thiserror::Error;

use crate::builtin;
use crate::report::*;
use crate::scenario::{basis_spec, complex_spec, ket_spec, parse_scenario, Scenario, ScenarioError, ScenarioFile};

/// |z| bound used to judge agreement between simulation and exact values.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("unknown observable {name:?}; available: {}", available.join(", "))]
    UnknownObservable { name: String, available: Vec<String> },
    #[error("{0}")]
    Domain(#[from] ablkit::Error),
}

impl CliError {
    /// 1 for usage and parse errors, 2 for domain outcomes.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(ablkit::Error::InvalidArgument(_))
            | CliError::Domain(ablkit::Error::IndexOutOfRange { .. }) => 1,
            CliError::Domain(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Where a scenario comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    File(PathBuf),
    Builtin(String),
}

impl Source {
    pub fn load_file(&self) -> CliResult<ScenarioFile> {
        match self {
            Source::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(parse_scenario(&text)?)
            }
            Source::Builtin(name) => builtin::lookup(name).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown builtin {name:?}; available: {}",
                    builtin::BUILTIN_NAMES.join(", ")
                ))
            }),
        }
    }

    pub fn load(&self) -> CliResult<Scenario> {
        let file = self.load_file()?;
        let mut scenario = file.validate()?;
        if file.name.is_none() {
            if let Source::File(path) = self {
                scenario.name = path.display().to_string();
            }
        }
        Ok(scenario)
    }
}

fn observable<'a>(scenario: &'a Scenario, name: &str) -> CliResult<&'a ObservableDecomposition> {
    scenario
        .observable(name)
        .ok_or_else(|| CliError::UnknownObservable {
            name: name.to_string(),
            available: scenario.observable_names(),
        })
}

fn report(command: Vec<String>, tolerances: Tolerances, result: ReportBody) -> Report {
    Report {
        command,
        tolerances,
        result,
    }
}

pub fn cmd_abl(source: &Source, observable_name: &str, command: Vec<String>) -> CliResult<Report> {
    let scenario = source.load()?;
    let obs = observable(&scenario, observable_name)?;
    let ctx = &scenario.context;
    let dist = abl_distribution(ctx, obs)?;
    let born = born_distribution(ctx.a(), obs)?;
    let branches = obs
        .branches()
        .iter()
        .enumerate()
        .map(|(i, b)| AblRow {
            eigenvalue: b.eigenvalue,
            rank: b.projector.rank(),
            born: born[i],
            joint: dist.joint[i],
            abl: dist.probabilities[i],
        })
        .collect();
    Ok(report(
        command,
        Tolerances::default(),
        ReportBody::Abl(AblReport {
            scenario: scenario.name.clone(),
            observable: observable_name.to_string(),
            branches,
            denominator: dist.denominator,
            undisturbed: ctx.undisturbed_final_probability(),
        }),
    ))
}

#[derive(Clone, Debug)]
pub struct ConsistencyOptions {
    pub tolerance: f64,
    pub criterion: ConsistencyCriterion,
    pub coarse_grainings: bool,
}

impl Default for ConsistencyOptions {
    fn default() -> Self {
        Self {
            tolerance: ablkit::EPS_CONS,
            criterion: ConsistencyCriterion::Medium,
            coarse_grainings: false,
        }
    }
}

fn criterion_name(c: ConsistencyCriterion) -> String {
    match c {
        ConsistencyCriterion::Medium => "medium".into(),
        ConsistencyCriterion::Weak => "weak".into(),
    }
}

pub fn cmd_consistency(
    source: &Source,
    observable_name: &str,
    options: &ConsistencyOptions,
    command: Vec<String>,
) -> CliResult<Report> {
    if !(options.tolerance >= 0.0 && options.tolerance.is_finite()) {
        return Err(CliError::Usage(format!(
            "tolerance must be a non-negative number, got {}",
            options.tolerance
        )));
    }
    let scenario = source.load()?;
    let obs = observable(&scenario, observable_name)?;
    let evaluate = |o: &ObservableDecomposition| -> CliResult<(ablkit::ConsistencyReport, BcacOut)> {
        let family = HistoryFamily::from_context(&scenario.context, o.clone())?;
        let r = is_consistent_with(&family, options.criterion, options.tolerance)?;
        let b = bcac_check_with(&family, options.tolerance)?;
        Ok((
            r,
            BcacOut {
                lhs: b.lhs,
                rhs: b.rhs,
                holds: b.holds,
            },
        ))
    };
    let (r, bcac) = evaluate(obs)?;
    let coarse_grainings = if options.coarse_grainings {
        let partitions = set_partitions(obs.len());
        let grainings = enumerate_coarse_grainings(obs)?;
        let mut out = Vec::with_capacity(grainings.len());
        for (blocks, g) in partitions.into_iter().zip(&grainings) {
            let (r, bcac) = evaluate(g)?;
            out.push(CoarseGrainingOut {
                blocks,
                consistent: r.consistent,
                max_violation: r.max_violation,
                bcac,
            });
        }
        Some(out)
    } else {
        None
    };
    let tolerances = Tolerances {
        consistency: options.tolerance,
        ..Tolerances::default()
    };
    Ok(report(
        command,
        tolerances,
        ReportBody::Consistency(ConsistencyOut {
            scenario: scenario.name.clone(),
            observable: observable_name.to_string(),
            criterion: criterion_name(options.criterion),
            decoherence: r
                .offdiagonal
                .iter()
                .map(|row| row.iter().copied().map(complex_spec).collect())
                .collect(),
            consistent: r.consistent,
            max_violation: r.max_violation,
            bcac,
            coarse_grainings,
        }),
    ))
}

fn finite_z(z: f64) -> Option<f64> {
    z.is_finite().then_some(z)
}

fn z_score(observed: f64, expected: f64, stderr: f64) -> Option<f64> {
    let d = observed - expected;
    if stderr > 0.0 {
        finite_z(d / stderr)
    } else if d == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct SimulateOptions {
    pub observable: Option<String>,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

pub fn cmd_simulate(
    source: &Source,
    options: &SimulateOptions,
    command: Vec<String>,
) -> CliResult<Report> {
    if options.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let scenario = source.load()?;
    let ctx = &scenario.context;
    let obs = options
        .observable
        .as_deref()
        .map(|name| observable(&scenario, name))
        .transpose()?;

    let run = || -> CliResult<SimulateReport> {
        let (trials, seed) = (options.trials, options.seed);
        let (postselected_count, final_fraction, final_target, branches) = match obs {
            None => {
                let f = estimate_final_probability(ctx, None, trials, seed)?;
                let n = (f * trials as f64).round() as u64;
                (n, f, ctx.undisturbed_final_probability(), None)
            }
            Some(o) => {
                let exact = abl_distribution(ctx, o)?;
                let born = born_distribution(ctx.a(), o)?;
                let stats = estimate_abl(ctx, o, trials, seed)?;
                let rows: Vec<SimulatedBranch> = o
                    .branches()
                    .iter()
                    .enumerate()
                    .map(|(i, b)| SimulatedBranch {
                        eigenvalue: b.eigenvalue,
                        count: stats.counts[i],
                        frequency: stats.conditional_freq[i],
                        stderr: stats.stderr[i],
                        abl: exact.probabilities[i],
                        born: born[i],
                        z: z_score(stats.conditional_freq[i], exact.probabilities[i], stats.stderr[i]),
                        z_vs_born: z_score(stats.conditional_freq[i], born[i], stats.stderr[i]),
                    })
                    .collect();
                (
                    stats.postselected_count,
                    stats.postselected_fraction(),
                    disturbed_final_probability(ctx, o)?,
                    Some(rows),
                )
            }
        };
        let final_stderr = binomial_stderr(final_fraction, trials);
        let final_z = z_score(final_fraction, final_target, final_stderr);
        let within = |z: Option<f64>| z.is_some_and(|v| v.abs() <= Z_THRESHOLD);
        let agrees = within(final_z)
            && branches
                .as_ref()
                .is_none_or(|rows| rows.iter().all(|r| within(r.z)));
        Ok(SimulateReport {
            scenario: scenario.name.clone(),
            observable: options.observable.clone(),
            trials,
            seed,
            postselected_count,
            final_fraction,
            final_stderr,
            final_target,
            final_z,
            z_threshold: Z_THRESHOLD,
            branches,
            agrees,
        })
    };
    let body = match options.workers {
        Some(w) => with_workers(w, run)??,
        None => run()?,
    };
    Ok(report(command, Tolerances::default(), ReportBody::Simulate(body)))
}

fn mixing_out(r: &ablkit::MixingReport, branch: usize) -> MixingOut {
    MixingOut {
        branch,
        born_total: r.born_total,
        ss_total: r.ss_total,
        vaidman_total: r.vaidman_total,
        ss_gap: r.ss_gap,
        vaidman_holds: r.vaidman_holds(),
    }
}

pub fn cmd_mixing(
    source: &Source,
    observable_name: &str,
    final_basis_name: &str,
    branch: usize,
    command: Vec<String>,
) -> CliResult<Report> {
    let scenario = source.load()?;
    let obs = observable(&scenario, observable_name)?;
    let final_basis = observable(&scenario, final_basis_name)?;
    let r = mixing_report(scenario.context.a(), final_basis, obs, branch)?;
    Ok(report(
        command,
        Tolerances::default(),
        ReportBody::Mixing(mixing_out(&r, branch)),
    ))
}

#[derive(Clone, Debug)]
pub struct CounterexampleOptions {
    pub dim: usize,
    pub seed: u64,
    pub gap_min: f64,
    pub max_tries: u64,
    pub survey: bool,
}

pub fn cmd_counterexample(options: &CounterexampleOptions, command: Vec<String>) -> CliResult<Report> {
    let params = SearchParams {
        dim: options.dim,
        seed: options.seed,
        gap_min: options.gap_min,
        max_tries: options.max_tries,
        constraint: ObservableConstraint::Free,
    };
    let c = find_counterexample(&params)?;
    let survey = if options.survey {
        let s = survey(&params)?;
        Some(SurveyOut {
            tries: s.tries,
            hits: s.hits,
            hit_rate: s.hit_rate,
            max_gap: s.max_gap,
        })
    } else {
        None
    };
    let scenario = ScenarioFile {
        name: Some(format!(
            "counterexample-d{}-s{}-t{}",
            options.dim, options.seed, c.attempt
        )),
        dim: options.dim,
        preselection: ket_spec(&c.a),
        postselection: ket_spec(&c.final_kets[0]),
        observables: [
            ("C".to_string(), basis_spec(&c.observable_kets)),
            ("final".to_string(), basis_spec(&c.final_kets)),
        ]
        .into_iter()
        .collect(),
    };
    Ok(report(
        command,
        Tolerances::default(),
        ReportBody::Counterexample(CounterexampleReport {
            dim: options.dim,
            seed: options.seed,
            gap_min: options.gap_min,
            max_tries: options.max_tries,
            attempt: c.attempt,
            mixing: mixing_out(&c.report, c.branch),
            scenario,
            survey,
        }),
    ))
}

pub fn cmd_validate(source: &Source, command: Vec<String>) -> CliResult<Report> {
    let scenario = source.load()?;
    let observables = scenario
        .observables
        .iter()
        .map(|(name, o)| ObservableSummary {
            name: name.clone(),
            eigenvalues: o.branches().iter().map(|b| b.eigenvalue).collect(),
            ranks: o.projectors().map(|p| p.rank()).collect(),
        })
        .collect();
    Ok(report(
        command,
        Tolerances::default(),
        ReportBody::Validate(ValidateReport {
            scenario: scenario.name.clone(),
            dim: scenario.dim,
            undisturbed: scenario.context.undisturbed_final_probability(),
            observables,
        }),
    ))
}

/// Canonical scenario text for a source, after validating it.
pub fn cmd_emit(source: &Source) -> CliResult<String> {
    let file = source.load_file()?;
    file.validate()?;
    Ok(crate::scenario::emit_scenario(&file))
}

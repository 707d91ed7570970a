//! Weighted-sum identities over the possible postselections.
//!
//! Summing the ABL conditional over every final branch, weighted by the
//! final-branch probability, should recover the Born probability of the
//! intermediate outcome. With the undisturbed weights `|⟨b_l|a⟩|²` this
//! fails in general (the Sharp-Shanks sum); with the weights that account
//! for the intermediate measurement it always holds (Vaidman's sum).

use rayon::prelude::*;

use crate::abl::{born_distribution, joint_terms, normalize_joint, EPS_DIV};
use crate::error::{Error, Result};
use crate::linalg::{trace_product, Ket, ObservableDecomposition, EPS_ALG};
use crate::rng::{random_basis, random_ket, substream};

pub const DEFAULT_GAP_MIN: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingReport {
    /// `|⟨c|a⟩|²`.
    pub born_total: f64,
    /// Sum weighted by the undisturbed final probabilities.
    pub ss_total: f64,
    /// Sum weighted by the final probabilities given the intermediate measurement.
    pub vaidman_total: f64,
    pub ss_gap: f64,
}

fn check_inputs(
    a: &Ket,
    final_basis: &ObservableDecomposition,
    observable: &ObservableDecomposition,
    branch: usize,
) -> Result<()> {
    for found in [final_basis.dim(), observable.dim()] {
        if found != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found,
            });
        }
    }
    observable.branch(branch).map(|_| ())
}

/// `Σ_l |⟨b_l|a⟩|² · P(c_branch | a, b_l)`.
pub fn sharp_shanks_total(
    a: &Ket,
    final_basis: &ObservableDecomposition,
    observable: &ObservableDecomposition,
    branch: usize,
) -> Result<f64> {
    check_inputs(a, final_basis, observable, branch)?;
    let pa = a.projector();
    let mut total = 0.0;
    for (l, pb) in final_basis.projectors().enumerate() {
        let weight = trace_product(&[pb.operator(), pa.operator()])?.re;
        if weight <= EPS_DIV {
            continue;
        }
        let joint = joint_terms(&pa, observable, pb)?;
        let (_, conditional) = normalize_joint(&joint)
            .map_err(|_| Error::UndefinedTerm { branch: l, weight })?;
        total += weight * conditional[branch];
    }
    Ok(total)
}

/// `Σ_l [Σ_j Tr(P_{b_l} P_{c_j} P_a P_{c_j})] · P(c_branch | a, b_l)`.
pub fn vaidman_total(
    a: &Ket,
    final_basis: &ObservableDecomposition,
    observable: &ObservableDecomposition,
    branch: usize,
) -> Result<f64> {
    check_inputs(a, final_basis, observable, branch)?;
    let pa = a.projector();
    let mut total = 0.0;
    for pb in final_basis.projectors() {
        let joint = joint_terms(&pa, observable, pb)?;
        // A vanishing denominator means the term carries no probability.
        if let Ok((denominator, conditional)) = normalize_joint(&joint) {
            total += denominator * conditional[branch];
        }
    }
    Ok(total)
}

pub fn mixing_report(
    a: &Ket,
    final_basis: &ObservableDecomposition,
    observable: &ObservableDecomposition,
    branch: usize,
) -> Result<MixingReport> {
    let ss_total = sharp_shanks_total(a, final_basis, observable, branch)?;
    let vaidman_total = vaidman_total(a, final_basis, observable, branch)?;
    let born_total = born_distribution(a, observable)?[branch];
    Ok(MixingReport {
        born_total,
        ss_total,
        vaidman_total,
        ss_gap: (born_total - ss_total).abs(),
    })
}

/// How the intermediate observable is drawn during a search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ObservableConstraint {
    /// Independent Haar-random eigenbasis.
    #[default]
    Free,
    /// The observable is the final basis itself.
    EqualsFinalBasis,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchParams {
    pub dim: usize,
    pub seed: u64,
    pub gap_min: f64,
    pub max_tries: u64,
    pub constraint: ObservableConstraint,
}

impl SearchParams {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            gap_min: DEFAULT_GAP_MIN,
            max_tries: 1000,
            constraint: ObservableConstraint::Free,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(2..=6).contains(&self.dim) {
            return Err(Error::InvalidArgument(format!(
                "dimension must be between 2 and 6, got {}",
                self.dim
            )));
        }
        if !(self.gap_min > 0.0 && self.gap_min.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gap_min must be positive and finite, got {}",
                self.gap_min
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub a: Ket,
    /// Eigenkets the two decompositions were built from, in branch order.
    pub final_kets: Vec<Ket>,
    pub observable_kets: Vec<Ket>,
    pub final_basis: ObservableDecomposition,
    pub observable: ObservableDecomposition,
    pub branch: usize,
    pub report: MixingReport,
    /// Index of the attempt that produced this counterexample.
    pub attempt: u64,
}

struct Draw {
    a: Ket,
    final_kets: Vec<Ket>,
    observable_kets: Vec<Ket>,
    final_basis: ObservableDecomposition,
    observable: ObservableDecomposition,
}

fn draw(params: &SearchParams, attempt: u64) -> Result<Draw> {
    let mut rng = substream(params.seed, attempt);
    let a = random_ket(params.dim, &mut rng)?;
    let final_kets = random_basis(params.dim, &mut rng)?;
    let observable_kets = match params.constraint {
        ObservableConstraint::Free => random_basis(params.dim, &mut rng)?,
        ObservableConstraint::EqualsFinalBasis => final_kets.clone(),
    };
    let final_basis = ObservableDecomposition::from_basis(&final_kets)?;
    let observable = ObservableDecomposition::from_basis(&observable_kets)?;
    Ok(Draw {
        a,
        final_kets,
        observable_kets,
        final_basis,
        observable,
    })
}

/// Largest-gap branch of one attempt, skipping measure-zero undefined terms.
fn evaluate(params: &SearchParams, attempt: u64) -> Result<Option<Counterexample>> {
    let d = draw(params, attempt)?;
    let mut best: Option<(usize, MixingReport)> = None;
    for branch in 0..d.observable.len() {
        let report = match mixing_report(&d.a, &d.final_basis, &d.observable, branch) {
            Ok(r) => r,
            Err(Error::UndefinedTerm { .. }) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|(_, b)| report.ss_gap > b.ss_gap) {
            best = Some((branch, report));
        }
    }
    Ok(best.map(|(branch, report)| Counterexample {
        a: d.a,
        final_kets: d.final_kets,
        observable_kets: d.observable_kets,
        final_basis: d.final_basis,
        observable: d.observable,
        branch,
        report,
        attempt,
    }))
}

/// Searches attempts `0..max_tries` for a gap above `gap_min`. Attempts run
/// in parallel but the lowest successful attempt index is returned, so the
/// result is independent of the worker count.
pub fn find_counterexample(params: &SearchParams) -> Result<Counterexample> {
    params.validate()?;
    let hit = (0..params.max_tries)
        .into_par_iter()
        .map(|attempt| evaluate(params, attempt))
        .find_map_first(|r| match r {
            Ok(Some(c)) if c.report.ss_gap > params.gap_min => Some(Ok(c)),
            Ok(_) => None,
            Err(e) => Some(Err(e)),
        });
    hit.unwrap_or(Err(Error::NotFound {
        tries: params.max_tries,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurveyStats {
    pub tries: u64,
    pub hits: u64,
    pub hit_rate: f64,
    pub max_gap: f64,
    /// Largest deviation of the Vaidman sum from the Born value seen.
    pub max_vaidman_deviation: f64,
}

/// Empirical frequency with which a random draw violates the weighted-sum
/// identity by more than `gap_min`.
pub fn survey(params: &SearchParams) -> Result<SurveyStats> {
    params.validate()?;
    let results = (0..params.max_tries)
        .into_par_iter()
        .map(|attempt| evaluate(params, attempt))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<MixingReport> = results.iter().flatten().map(|c| c.report).collect();
    let hits = reports.iter().filter(|r| r.ss_gap > params.gap_min).count() as u64;
    Ok(SurveyStats {
        tries: params.max_tries,
        hits,
        hit_rate: if params.max_tries > 0 {
            hits as f64 / params.max_tries as f64
        } else {
            0.0
        },
        max_gap: reports.iter().map(|r| r.ss_gap).fold(0.0, f64::max),
        max_vaidman_deviation: reports
            .iter()
            .map(|r| (r.vaidman_total - r.born_total).abs())
            .fold(0.0, f64::max),
    })
}

impl MixingReport {
    /// Whether the Vaidman sum reproduces the Born value within `EPS_ALG`.
    pub fn vaidman_holds(&self) -> bool {
        (self.vaidman_total - self.born_total).abs() <= EPS_ALG
    }
}

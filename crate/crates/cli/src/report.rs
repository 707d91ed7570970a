//! Command reports: JSON for machines, aligned text for people.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::scenario::{ComplexSpec, ScenarioFile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub normalization: f64,
    pub division: f64,
    pub consistency: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: ablkit::EPS_ALG,
            normalization: ablkit::EPS_NORM,
            division: ablkit::EPS_DIV,
            consistency: ablkit::EPS_CONS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Vec<String>,
    pub tolerances: Tolerances,
    pub result: ReportBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportBody {
    Abl(AblReport),
    Consistency(ConsistencyOut),
    Simulate(SimulateReport),
    Counterexample(CounterexampleReport),
    Mixing(MixingOut),
    Validate(ValidateReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblRow {
    pub eigenvalue: f64,
    pub rank: usize,
    pub born: f64,
    pub joint: f64,
    pub abl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblReport {
    pub scenario: String,
    pub observable: String,
    pub branches: Vec<AblRow>,
    /// Postselection probability with the measurement.
    pub denominator: f64,
    /// `|⟨b|a⟩|²`, postselection probability without the measurement.
    pub undisturbed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcacOut {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseGrainingOut {
    /// Indices of base branches merged into each coarse branch.
    pub blocks: Vec<Vec<usize>>,
    pub consistent: bool,
    pub max_violation: f64,
    pub bcac: BcacOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyOut {
    pub scenario: String,
    pub observable: String,
    pub criterion: String,
    pub decoherence: Vec<Vec<ComplexSpec>>,
    pub consistent: bool,
    pub max_violation: f64,
    pub bcac: BcacOut,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coarse_grainings: Option<Vec<CoarseGrainingOut>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulatedBranch {
    pub eigenvalue: f64,
    pub count: u64,
    pub frequency: f64,
    pub stderr: f64,
    pub abl: f64,
    pub born: f64,
    /// `None` when the standard error is zero and the frequency misses the target.
    pub z: Option<f64>,
    pub z_vs_born: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub scenario: String,
    pub observable: Option<String>,
    pub trials: u64,
    pub seed: u64,
    pub postselected_count: u64,
    pub final_fraction: f64,
    pub final_stderr: f64,
    pub final_target: f64,
    pub final_z: Option<f64>,
    pub z_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<SimulatedBranch>>,
    /// Every |z| against the exact targets is within the threshold.
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingOut {
    pub branch: usize,
    pub born_total: f64,
    pub ss_total: f64,
    pub vaidman_total: f64,
    pub ss_gap: f64,
    pub vaidman_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyOut {
    pub tries: u64,
    pub hits: u64,
    pub hit_rate: f64,
    pub max_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub dim: usize,
    pub seed: u64,
    pub gap_min: f64,
    pub max_tries: u64,
    pub attempt: u64,
    pub mixing: MixingOut,
    /// Replayable with `mixing --observable C --final-basis final`.
    pub scenario: ScenarioFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey: Option<SurveyOut>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSummary {
    pub name: String,
    pub eigenvalues: Vec<f64>,
    pub ranks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub scenario: String,
    pub dim: usize,
    pub undisturbed: f64,
    pub observables: Vec<ObservableSummary>,
}

/// `x` with 12 significant digits; scientific notation for tiny magnitudes.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-6..15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt_z(z: Option<f64>) -> String {
    z.map(|v| format!("{v:+.3}")).unwrap_or_else(|| "inf".into())
}

fn verdict(ok: bool, yes: &'static str, no: &'static str) -> &'static str {
    if ok {
        yes
    } else {
        no
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    fn write_text(&self, out: &mut String) -> fmt::Result {
        writeln!(out, "$ {}", self.command.join(" "))?;
        match &self.result {
            ReportBody::Abl(r) => {
                writeln!(out, "scenario {}  observable {}", r.scenario, r.observable)?;
                writeln!(
                    out,
                    "{:>4} {:>12} {:>5} {:>16} {:>16} {:>16}",
                    "#", "eigenvalue", "rank", "born", "joint", "abl"
                )?;
                for (i, b) in r.branches.iter().enumerate() {
                    writeln!(
                        out,
                        "{:>4} {:>12} {:>5} {:>16} {:>16} {:>16}",
                        i,
                        b.eigenvalue,
                        b.rank,
                        sig12(b.born),
                        sig12(b.joint),
                        sig12(b.abl)
                    )?;
                }
                writeln!(out, "P(b | measured)   = {}", sig12(r.denominator))?;
                writeln!(out, "P(b | unmeasured) = {}", sig12(r.undisturbed))?;
            }
            ReportBody::Consistency(r) => {
                writeln!(out, "scenario {}  observable {}", r.scenario, r.observable)?;
                writeln!(out, "decoherence functional D(i,j):")?;
                for row in &r.decoherence {
                    let cells: Vec<String> = row
                        .iter()
                        .map(|[re, im]| format!("{:>16} {:>+16}i", sig12(*re), sig12(*im)))
                        .collect();
                    writeln!(out, "  {}", cells.join("  "))?;
                }
                writeln!(
                    out,
                    "{} ({} criterion, max off-diagonal {})",
                    verdict(r.consistent, "consistent", "inconsistent"),
                    r.criterion,
                    sig12(r.max_violation)
                )?;
                writeln!(
                    out,
                    "|<b|a>|^2 = {}  sum_j Tr(Pb Pcj Pa Pcj) = {}  {}",
                    sig12(r.bcac.lhs),
                    sig12(r.bcac.rhs),
                    verdict(r.bcac.holds, "holds", "fails")
                )?;
                if let Some(list) = &r.coarse_grainings {
                    writeln!(out, "coarse-grainings ({}):", list.len())?;
                    for c in list {
                        writeln!(
                            out,
                            "  {:<28} {:<12} max {:>16}  bcac {}",
                            format!("{:?}", c.blocks),
                            verdict(c.consistent, "consistent", "inconsistent"),
                            sig12(c.max_violation),
                            verdict(c.bcac.holds, "holds", "fails")
                        )?;
                    }
                }
            }
            ReportBody::Simulate(r) => {
                writeln!(
                    out,
                    "scenario {}  observable {}  trials {}  seed {}",
                    r.scenario,
                    r.observable.as_deref().unwrap_or("(none)"),
                    r.trials,
                    r.seed
                )?;
                writeln!(
                    out,
                    "postselected {} ({} ± {}, exact {}, z {})",
                    r.postselected_count,
                    sig12(r.final_fraction),
                    sig12(r.final_stderr),
                    sig12(r.final_target),
                    opt_z(r.final_z)
                )?;
                if let Some(branches) = &r.branches {
                    writeln!(
                        out,
                        "{:>4} {:>12} {:>10} {:>16} {:>16} {:>16} {:>8} {:>16} {:>9}",
                        "#", "eigenvalue", "count", "frequency", "stderr", "abl", "z", "born", "z(born)"
                    )?;
                    for (i, b) in branches.iter().enumerate() {
                        writeln!(
                            out,
                            "{:>4} {:>12} {:>10} {:>16} {:>16} {:>16} {:>8} {:>16} {:>9}",
                            i,
                            b.eigenvalue,
                            b.count,
                            sig12(b.frequency),
                            sig12(b.stderr),
                            sig12(b.abl),
                            opt_z(b.z),
                            sig12(b.born),
                            opt_z(b.z_vs_born)
                        )?;
                    }
                }
                writeln!(
                    out,
                    "{} (|z| <= {})",
                    verdict(r.agrees, "agrees with exact values", "DISAGREES with exact values"),
                    r.z_threshold
                )?;
            }
            ReportBody::Mixing(m) => write_mixing(out, m)?,
            ReportBody::Counterexample(r) => {
                writeln!(
                    out,
                    "counterexample: dim {} seed {} attempt {} (gap_min {})",
                    r.dim, r.seed, r.attempt, r.gap_min
                )?;
                write_mixing(out, &r.mixing)?;
                if let Some(s) = &r.survey {
                    writeln!(
                        out,
                        "survey: {} of {} draws exceed gap_min (rate {}), max gap {}",
                        s.hits,
                        s.tries,
                        sig12(s.hit_rate),
                        sig12(s.max_gap)
                    )?;
                }
                writeln!(out, "scenario:")?;
                out.push_str(&crate::scenario::emit_scenario(&r.scenario));
            }
            ReportBody::Validate(r) => {
                writeln!(out, "scenario {} is valid (dim {})", r.scenario, r.dim)?;
                writeln!(out, "|<b|a>|^2 = {}", sig12(r.undisturbed))?;
                for o in &r.observables {
                    writeln!(
                        out,
                        "  {:<16} eigenvalues {:?} ranks {:?}",
                        o.name, o.eigenvalues, o.ranks
                    )?;
                }
            }
        }
        writeln!(
            out,
            "tolerances: alg {:e}  norm {:e}  div {:e}  cons {:e}",
            self.tolerances.algebraic,
            self.tolerances.normalization,
            self.tolerances.division,
            self.tolerances.consistency
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s).expect("writing to a String");
        s
    }
}

fn write_mixing(out: &mut String, m: &MixingOut) -> fmt::Result {
    writeln!(out, "branch {}", m.branch)?;
    writeln!(out, "  born       |<c|a>|^2        = {}", sig12(m.born_total))?;
    writeln!(out, "  undisturbed-weighted sum    = {}", sig12(m.ss_total))?;
    writeln!(out, "  disturbed-weighted sum      = {}", sig12(m.vaidman_total))?;
    writeln!(out, "  gap |born - undisturbed|    = {}", sig12(m.ss_gap))?;
    writeln!(
        out,
        "  disturbed-weighted sum {} the born value",
        verdict(m.vaidman_holds, "matches", "DOES NOT match")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(1.0), "1.00000000000");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0 / 9.0), "0.111111111111");
        assert_eq!(sig12(-0.25), "-0.250000000000");
        assert_eq!(sig12(1e-17), "1.00000000000e-17");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = Report {
            command: vec!["abl".into()],
            tolerances: Tolerances::default(),
            result: ReportBody::Mixing(MixingOut {
                branch: 0,
                born_total: 0.75,
                ss_total: 0.576_923_076_923_077_1,
                vaidman_total: 0.749_999_999_999_999_9,
                ss_gap: 1.0 / 3.0 * 0.519,
                vaidman_holds: true,
            }),
        };
        assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
    }
}

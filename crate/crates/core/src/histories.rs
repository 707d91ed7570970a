//! Families of histories `(P_a, {P_c}, P_b)`, their decoherence functional
//! and consistency.

use num_complex::Complex64;

use crate::abl::{joint_terms, PrePostContext};
use crate::error::{Error, Result};
use crate::linalg::{trace_product, ObservableDecomposition, Projector};

/// Absolute threshold on off-diagonal decoherence functional entries and on
/// the gap between the undisturbed and disturbed postselection probabilities.
pub const EPS_CONS: f64 = 1e-9;

/// Largest base decomposition accepted by [`enumerate_coarse_grainings`].
pub const MAX_COARSE_GRAINING_BRANCHES: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryFamily {
    initial: Projector,
    intermediate: ObservableDecomposition,
    final_: Projector,
}

impl HistoryFamily {
    pub fn new(
        initial: Projector,
        intermediate: ObservableDecomposition,
        final_: Projector,
    ) -> Result<Self> {
        for p in [&initial, &final_] {
            if p.rank() != 1 {
                return Err(Error::InvalidProjector(format!(
                    "history endpoints must be rank 1, got rank {}",
                    p.rank()
                )));
            }
        }
        for found in [intermediate.dim(), final_.dim()] {
            if found != initial.dim() {
                return Err(Error::DimensionMismatch {
                    expected: initial.dim(),
                    found,
                });
            }
        }
        Ok(Self {
            initial,
            intermediate,
            final_,
        })
    }

    pub fn from_context(ctx: &PrePostContext, intermediate: ObservableDecomposition) -> Result<Self> {
        Self::new(ctx.pa().clone(), intermediate, ctx.pb().clone())
    }

    pub fn initial(&self) -> &Projector {
        &self.initial
    }

    pub fn intermediate(&self) -> &ObservableDecomposition {
        &self.intermediate
    }

    pub fn final_projector(&self) -> &Projector {
        &self.final_
    }

    pub fn len(&self) -> usize {
        self.intermediate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intermediate.is_empty()
    }
}

/// `D(i, j) = Tr(P_b P_{c_i} P_a P_{c_j})`.
pub fn decoherence_functional(family: &HistoryFamily, i: usize, j: usize) -> Result<Complex64> {
    let ci = &family.intermediate.branch(i)?.projector;
    let cj = &family.intermediate.branch(j)?.projector;
    trace_product(&[
        family.final_.operator(),
        ci.operator(),
        family.initial.operator(),
        cj.operator(),
    ])
}

/// Full `n × n` decoherence matrix.
pub fn decoherence_matrix(family: &HistoryFamily) -> Result<Vec<Vec<Complex64>>> {
    let n = family.len();
    (0..n)
        .map(|i| (0..n).map(|j| decoherence_functional(family, i, j)).collect())
        .collect()
}

/// Which off-diagonal quantity must vanish.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConsistencyCriterion {
    /// `D(i, j) = 0` for `i ≠ j`.
    #[default]
    Medium,
    /// `Re D(i, j) = 0` for `i ≠ j`.
    Weak,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub criterion: ConsistencyCriterion,
    pub tolerance: f64,
    /// Full decoherence matrix; the diagonal holds the joint probabilities.
    pub offdiagonal: Vec<Vec<Complex64>>,
    pub max_violation: f64,
}

/// Medium-decoherence consistency at [`EPS_CONS`].
pub fn is_consistent(family: &HistoryFamily) -> Result<ConsistencyReport> {
    is_consistent_with(family, ConsistencyCriterion::Medium, EPS_CONS)
}

pub fn is_consistent_with(
    family: &HistoryFamily,
    criterion: ConsistencyCriterion,
    tolerance: f64,
) -> Result<ConsistencyReport> {
    let d = decoherence_matrix(family)?;
    let mut max_violation: f64 = 0.0;
    for (i, row) in d.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if i != j {
                let v = match criterion {
                    ConsistencyCriterion::Medium => z.norm(),
                    ConsistencyCriterion::Weak => z.re.abs(),
                };
                max_violation = max_violation.max(v);
            }
        }
    }
    Ok(ConsistencyReport {
        consistent: max_violation <= tolerance,
        criterion,
        tolerance,
        offdiagonal: d,
        max_violation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BcacCheck {
    /// `|⟨b|a⟩|²`: postselection probability with no intermediate measurement.
    pub lhs: f64,
    /// `Σ_j Tr(P_b P_{c_j} P_a P_{c_j})`: with the intermediate measurement.
    pub rhs: f64,
    pub holds: bool,
}

pub fn bcac_check(family: &HistoryFamily) -> Result<BcacCheck> {
    bcac_check_with(family, EPS_CONS)
}

pub fn bcac_check_with(family: &HistoryFamily, tolerance: f64) -> Result<BcacCheck> {
    let lhs = trace_product(&[family.final_.operator(), family.initial.operator()])?.re;
    let rhs: f64 = joint_terms(&family.initial, &family.intermediate, &family.final_)?
        .iter()
        .sum();
    Ok(BcacCheck {
        lhs,
        rhs,
        holds: (lhs - rhs).abs() <= tolerance,
    })
}

/// All set partitions of `{0, …, n-1}` as lists of blocks, generated from
/// restricted growth strings in lexicographic order (the one-block
/// partition comes first).
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let blocks = rgs.iter().copied().max().unwrap_or(0) + 1;
        let mut partition = vec![Vec::new(); blocks];
        for (i, &b) in rgs.iter().enumerate() {
            partition[b].push(i);
        }
        out.push(partition);

        // Advance to the next restricted growth string.
        let mut k = n - 1;
        loop {
            if k == 0 {
                return out;
            }
            let prefix_max = rgs[..k].iter().copied().max().unwrap_or(0);
            if rgs[k] <= prefix_max {
                rgs[k] += 1;
                for slot in rgs.iter_mut().skip(k + 1) {
                    *slot = 0;
                }
                break;
            }
            k -= 1;
        }
    }
}

/// Every coarse-graining of `base`, one per set partition of its branches.
pub fn enumerate_coarse_grainings(
    base: &ObservableDecomposition,
) -> Result<Vec<ObservableDecomposition>> {
    if base.len() > MAX_COARSE_GRAINING_BRANCHES {
        return Err(Error::TooManyBranches {
            count: base.len(),
            max: MAX_COARSE_GRAINING_BRANCHES,
        });
    }
    set_partitions(base.len())
        .iter()
        .map(|blocks| base.coarse_grain(blocks))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{projector_from_kets, Ket, EPS_ALG};
    use approx::assert_abs_diff_eq;

    fn u(k: usize) -> Ket {
        Ket::basis(3, k).unwrap()
    }

    fn three_box() -> PrePostContext {
        PrePostContext::new(
            Ket::from_real(&[1.0, 1.0, 1.0]).unwrap(),
            Ket::from_real(&[1.0, 1.0, -1.0]).unwrap(),
        )
        .unwrap()
    }

    fn split(k: usize) -> ObservableDecomposition {
        let p = u(k).projector();
        let q = p.complement().unwrap();
        ObservableDecomposition::from_projectors(vec![p, q]).unwrap()
    }

    fn h3() -> ObservableDecomposition {
        ObservableDecomposition::from_basis(&[u(0), u(1), u(2)]).unwrap()
    }

    #[test]
    fn decoherence_functional_examples() {
        let ctx = three_box();
        let h1 = HistoryFamily::from_context(&ctx, split(0)).unwrap();
        assert_abs_diff_eq!(decoherence_functional(&h1, 0, 1).unwrap().norm(), 0.0, epsilon = EPS_ALG);
        let h3 = HistoryFamily::from_context(&ctx, h3()).unwrap();
        let d12 = decoherence_functional(&h3, 0, 1).unwrap();
        assert_abs_diff_eq!(d12.re, 1.0 / 9.0, epsilon = EPS_ALG);
        assert_abs_diff_eq!(d12.im, 0.0, epsilon = EPS_ALG);
        for i in 0..3 {
            let d = decoherence_functional(&h3, i, i).unwrap();
            assert!(d.re >= 0.0);
            assert_abs_diff_eq!(d.re, 1.0 / 9.0, epsilon = EPS_ALG);
        }
        assert!(matches!(
            decoherence_functional(&h3, 0, 3),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn three_box_verdicts() {
        let ctx = three_box();
        let r1 = is_consistent(&HistoryFamily::from_context(&ctx, split(0)).unwrap()).unwrap();
        let r2 = is_consistent(&HistoryFamily::from_context(&ctx, split(1)).unwrap()).unwrap();
        let r3 = is_consistent(&HistoryFamily::from_context(&ctx, h3()).unwrap()).unwrap();
        assert!(r1.consistent);
        assert!(r2.consistent);
        assert!(!r3.consistent);
        assert_abs_diff_eq!(r3.max_violation, 1.0 / 9.0, epsilon = EPS_ALG);

        let pab = projector_from_kets(&[ctx.a().clone(), ctx.b().clone()]).unwrap();
        let footnote = ObservableDecomposition::from_projectors(vec![
            pab.clone(),
            pab.complement().unwrap(),
        ])
        .unwrap();
        assert!(is_consistent(&HistoryFamily::from_context(&ctx, footnote).unwrap())
            .unwrap()
            .consistent);
    }

    #[test]
    fn weak_criterion_only_checks_real_parts() {
        // a = |0⟩+|1⟩, b = |0⟩+i|1⟩: D(0,1) is purely imaginary.
        let a = Ket::from_real(&[1.0, 1.0]).unwrap();
        let b = Ket::normalized(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]).unwrap();
        let ctx = PrePostContext::new(a, b).unwrap();
        let z = ObservableDecomposition::from_basis(&[
            Ket::basis(2, 0).unwrap(),
            Ket::basis(2, 1).unwrap(),
        ])
        .unwrap();
        let family = HistoryFamily::from_context(&ctx, z).unwrap();
        let medium = is_consistent(&family).unwrap();
        let weak = is_consistent_with(&family, ConsistencyCriterion::Weak, EPS_CONS).unwrap();
        assert!(!medium.consistent);
        assert!(weak.consistent);
    }

    #[test]
    fn bcac_examples() {
        let ctx = three_box();
        let r = bcac_check(&HistoryFamily::from_context(&ctx, split(0)).unwrap()).unwrap();
        assert!(r.holds);
        assert_abs_diff_eq!(r.lhs, 1.0 / 9.0, epsilon = EPS_ALG);
        assert_abs_diff_eq!(r.rhs, 1.0 / 9.0, epsilon = EPS_ALG);
        let r = bcac_check(&HistoryFamily::from_context(&ctx, h3()).unwrap()).unwrap();
        assert!(!r.holds);
        assert_abs_diff_eq!(r.lhs, 1.0 / 9.0, epsilon = EPS_ALG);
        assert_abs_diff_eq!(r.rhs, 1.0 / 3.0, epsilon = EPS_ALG);
        let b_basis = ObservableDecomposition::basis_containing(ctx.b()).unwrap();
        let r = bcac_check(&HistoryFamily::from_context(&ctx, b_basis).unwrap()).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn family_endpoints_must_be_rank_one() {
        let ctx = three_box();
        let p = projector_from_kets(&[u(0), u(1)]).unwrap();
        assert!(HistoryFamily::new(p, h3(), ctx.pb().clone()).is_err());
    }

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (0..=6).map(|n| set_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52, 203]);
        assert_eq!(set_partitions(3)[0], vec![vec![0, 1, 2]]);
    }

    #[test]
    fn coarse_grainings_of_three_box_c() {
        let all = enumerate_coarse_grainings(&h3()).unwrap();
        assert_eq!(all.len(), 5);
        assert!(all.iter().any(|d| d.same_projectors(&split(0), EPS_ALG)));
        assert!(all.iter().any(|d| d.same_projectors(&split(1), EPS_ALG)));
        assert!(all.iter().any(|d| d.len() == 1));
        let two = ObservableDecomposition::from_basis(&[
            Ket::basis(2, 0).unwrap(),
            Ket::basis(2, 1).unwrap(),
        ])
        .unwrap();
        assert_eq!(enumerate_coarse_grainings(&two).unwrap().len(), 2);
        let seven: Vec<Ket> = (0..7).map(|k| Ket::basis(7, k).unwrap()).collect();
        let seven = ObservableDecomposition::from_basis(&seven).unwrap();
        assert!(matches!(
            enumerate_coarse_grainings(&seven),
            Err(Error::TooManyBranches { count: 7, max: 6 })
        ));
    }
}

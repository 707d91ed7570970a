//! Born, joint and ABL probabilities for one intermediate measurement
//! between a preselection and a postselection.

use crate::error::{Error, Result};
use crate::linalg::{apply, inner, trace_product, Ket, ObservableDecomposition, Projector};

/// Denominator and norm cutoff separating exact zeros from rounding residue.
pub const EPS_DIV: f64 = 1e-12;

/// Preselected state `|a⟩` and postselected state `|b⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrePostContext {
    a: Ket,
    b: Ket,
    pa: Projector,
    pb: Projector,
}

impl PrePostContext {
    pub fn new(a: Ket, b: Ket) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        let pa = a.projector();
        let pb = b.projector();
        Ok(Self { a, b, pa, pb })
    }

    pub fn a(&self) -> &Ket {
        &self.a
    }

    pub fn b(&self) -> &Ket {
        &self.b
    }

    pub fn pa(&self) -> &Projector {
        &self.pa
    }

    pub fn pb(&self) -> &Projector {
        &self.pb
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `|⟨b|a⟩|²`, the postselection probability with no intermediate measurement.
    pub fn undisturbed_final_probability(&self) -> f64 {
        inner(&self.b, &self.a).map(|z| z.norm_sqr()).unwrap_or(0.0)
    }
}

fn check_dims(dim: usize, observable: &ObservableDecomposition) -> Result<()> {
    if observable.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: observable.dim(),
        });
    }
    Ok(())
}

/// `Tr(P_final P_c P_initial P_c)`.
pub(crate) fn joint_term(initial: &Projector, c: &Projector, final_: &Projector) -> Result<f64> {
    Ok(trace_product(&[
        final_.operator(),
        c.operator(),
        initial.operator(),
        c.operator(),
    ])?
    .re)
}

/// Joint terms for every branch of `observable`, in branch order.
pub(crate) fn joint_terms(
    initial: &Projector,
    observable: &ObservableDecomposition,
    final_: &Projector,
) -> Result<Vec<f64>> {
    check_dims(initial.dim(), observable)?;
    observable
        .projectors()
        .map(|c| joint_term(initial, c, final_))
        .collect()
}

/// Born probabilities `Tr(P_c P_a)` of each branch on the state `a`.
pub fn born_distribution(a: &Ket, observable: &ObservableDecomposition) -> Result<Vec<f64>> {
    check_dims(a.dim(), observable)?;
    let pa = a.projector();
    observable
        .projectors()
        .map(|c| Ok(trace_product(&[c.operator(), pa.operator()])?.re))
        .collect()
}

/// `P(c_i ∧ b | a) = Tr(P_b P_{c_i} P_a P_{c_i})`.
pub fn joint_probability(
    ctx: &PrePostContext,
    observable: &ObservableDecomposition,
    branch: usize,
) -> Result<f64> {
    check_dims(ctx.dim(), observable)?;
    let c = &observable.branch(branch)?.projector;
    joint_term(&ctx.pa, c, &ctx.pb)
}

/// Probability of finding `b` when `observable` is measured in between:
/// the sum of the joint probabilities over all branches.
pub fn disturbed_final_probability(
    ctx: &PrePostContext,
    observable: &ObservableDecomposition,
) -> Result<f64> {
    Ok(joint_terms(&ctx.pa, observable, &ctx.pb)?.iter().sum())
}

/// Conditional distribution of an intermediate measurement given both
/// the preselection and the postselection.
#[derive(Clone, Debug, PartialEq)]
pub struct AblDistribution {
    pub context: PrePostContext,
    pub observable: ObservableDecomposition,
    pub joint: Vec<f64>,
    /// Raw normalizing sum, kept so callers can spot near-impossible postselection.
    pub denominator: f64,
    pub probabilities: Vec<f64>,
}

pub(crate) fn normalize_joint(joint: &[f64]) -> Result<(f64, Vec<f64>)> {
    let denominator: f64 = joint.iter().sum();
    if denominator <= EPS_DIV {
        return Err(Error::ImpossiblePostselection { denominator });
    }
    Ok((denominator, joint.iter().map(|j| j / denominator).collect()))
}

/// The ABL rule.
pub fn abl_distribution(
    ctx: &PrePostContext,
    observable: &ObservableDecomposition,
) -> Result<AblDistribution> {
    let joint = joint_terms(&ctx.pa, observable, &ctx.pb)?;
    let (denominator, probabilities) = normalize_joint(&joint)?;
    Ok(AblDistribution {
        context: ctx.clone(),
        observable: observable.clone(),
        joint,
        denominator,
        probabilities,
    })
}

/// Lüders update: project and renormalize.
pub fn luders_update(state: &Ket, projector: &Projector) -> Result<Ket> {
    apply(projector.operator(), state)?.normalize(EPS_DIV)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{projector_from_kets, EPS_ALG, EPS_NORM};
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

    fn obs_c() -> ObservableDecomposition {
        ObservableDecomposition::from_basis(&[u(0), u(1), u(2)]).unwrap()
    }

    fn obs_c_prime() -> ObservableDecomposition {
        ObservableDecomposition::from_projectors(vec![
            u(0).projector(),
            projector_from_kets(&[u(1), u(2)]).unwrap(),
        ])
        .unwrap()
    }

    fn spin_n(theta: f64) -> ObservableDecomposition {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        ObservableDecomposition::from_basis(&[
            Ket::from_real(&[c, s]).unwrap(),
            Ket::from_real(&[-s, c]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn born_examples() {
        let p = born_distribution(&u(0), &obs_c()).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = born_distribution(three_box().a(), &obs_c()).unwrap();
        for x in p {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = EPS_ALG);
        }
        let up = Ket::basis(2, 0).unwrap();
        let p = born_distribution(&up, &spin_n(std::f64::consts::FRAC_PI_3)).unwrap();
        assert_abs_diff_eq!(p[0], 0.75, epsilon = EPS_ALG);
    }

    #[test]
    fn joint_examples() {
        let ctx = three_box();
        assert_abs_diff_eq!(
            joint_probability(&ctx, &obs_c(), 0).unwrap(),
            1.0 / 9.0,
            epsilon = EPS_ALG
        );
        let a_basis = ObservableDecomposition::basis_containing(ctx.a()).unwrap();
        assert_abs_diff_eq!(
            joint_probability(&ctx, &a_basis, 0).unwrap(),
            ctx.undisturbed_final_probability(),
            epsilon = EPS_ALG
        );
        let ctx0 = PrePostContext::new(u(0), three_box().b().clone()).unwrap();
        assert_abs_diff_eq!(joint_probability(&ctx0, &obs_c(), 1).unwrap(), 0.0);
        assert!(matches!(
            joint_probability(&ctx, &obs_c(), 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn three_box_contextuality() {
        let ctx = three_box();
        let d = abl_distribution(&ctx, &obs_c()).unwrap();
        assert_abs_diff_eq!(d.probabilities[0], 1.0 / 3.0, epsilon = EPS_ALG);
        let d = abl_distribution(&ctx, &obs_c_prime()).unwrap();
        assert_abs_diff_eq!(d.probabilities[0], 1.0, epsilon = EPS_ALG);
        assert_abs_diff_eq!(d.denominator, 1.0 / 9.0, epsilon = EPS_ALG);
    }

    #[test]
    fn impossible_postselection() {
        let ctx = PrePostContext::new(u(0), u(1)).unwrap();
        let a_basis = ObservableDecomposition::basis_containing(ctx.a()).unwrap();
        assert!(matches!(
            abl_distribution(&ctx, &a_basis),
            Err(Error::ImpossiblePostselection { .. })
        ));
    }

    #[test]
    fn luders_examples() {
        let a = three_box().a().clone();
        let k = luders_update(&a, &u(0).projector()).unwrap();
        assert_abs_diff_eq!(k.amplitudes()[0].re, 1.0, epsilon = EPS_NORM);
        let k = luders_update(&a, &projector_from_kets(&[u(1), u(2)]).unwrap()).unwrap();
        let h = 0.5f64.sqrt();
        assert_abs_diff_eq!(k.amplitudes()[0].norm(), 0.0, epsilon = EPS_ALG);
        assert_abs_diff_eq!(k.amplitudes()[1].re, h, epsilon = EPS_ALG);
        assert_abs_diff_eq!(k.amplitudes()[2].re, h, epsilon = EPS_ALG);
        assert!(matches!(
            luders_update(&u(0), &u(1).projector()),
            Err(Error::ZeroProjection)
        ));
    }

    #[test]
    fn disturbed_final_examples() {
        let ctx = three_box();
        assert_abs_diff_eq!(
            disturbed_final_probability(&ctx, &obs_c()).unwrap(),
            1.0 / 3.0,
            epsilon = EPS_ALG
        );
        assert_abs_diff_eq!(
            disturbed_final_probability(&ctx, &obs_c_prime()).unwrap(),
            1.0 / 9.0,
            epsilon = EPS_ALG
        );
        let b_basis = ObservableDecomposition::basis_containing(ctx.b()).unwrap();
        assert_abs_diff_eq!(
            disturbed_final_probability(&ctx, &b_basis).unwrap(),
            ctx.undisturbed_final_probability(),
            epsilon = EPS_ALG
        );
        let sum: f64 = (0..3)
            .map(|i| joint_probability(&ctx, &obs_c(), i).unwrap())
            .sum();
        assert_eq!(sum, disturbed_final_probability(&ctx, &obs_c()).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let spin = spin_n(0.3);
        assert!(matches!(
            abl_distribution(&three_box(), &spin),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(PrePostContext::new(u(0), Ket::basis(2, 0).unwrap()).is_err());
    }
}

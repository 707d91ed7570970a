//! Compiled-in scenarios.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_3;

use ablkit::linalg::basis_completion;
use ablkit::{projector_from_kets, Ket};
use num_complex::Complex64;

use crate::scenario::{basis_spec, ket_spec, matrix_spec, BranchSpec, ScenarioFile};

pub const BUILTIN_NAMES: &[&str] = &[
    "three-box",
    "spin-pi3",
    "spin:<radians>",
    "preselect-only",
    "identity-A",
    "identity-B",
];

fn u(k: usize) -> Ket {
    Ket::basis(3, k).expect("index below dimension")
}

fn real_ket(amplitudes: &[f64]) -> Ket {
    Ket::from_real(amplitudes).expect("nonzero amplitudes")
}

fn span(eigenvalue: f64, kets: &[Ket]) -> BranchSpec {
    BranchSpec {
        eigenvalue,
        kets: Some(kets.iter().map(ket_spec).collect()),
        projector: None,
    }
}

fn three_box_a() -> Ket {
    real_ket(&[1.0, 1.0, 1.0])
}

fn three_box_b() -> Ket {
    real_ket(&[1.0, 1.0, -1.0])
}

/// `C`, `Cprime` and `Cdoubleprime` over the box basis.
fn box_observables() -> BTreeMap<String, Vec<BranchSpec>> {
    BTreeMap::from([
        (
            "C".to_string(),
            vec![span(1.0, &[u(0)]), span(2.0, &[u(1)]), span(3.0, &[u(2)])],
        ),
        (
            "Cprime".to_string(),
            vec![span(1.0, &[u(0)]), span(2.0, &[u(1), u(2)])],
        ),
        (
            "Cdoubleprime".to_string(),
            vec![span(1.0, &[u(0), u(2)]), span(2.0, &[u(1)])],
        ),
    ])
}

/// Three boxes with `a = (1,1,1)/√3` and `b = (1,1,-1)/√3`.
pub fn three_box() -> ScenarioFile {
    let (a, b) = (three_box_a(), three_box_b());
    let mut observables = box_observables();
    observables.insert("A".into(), basis_spec(&basis_completion(&a)));
    observables.insert("B".into(), basis_spec(&basis_completion(&b)));
    let pab = projector_from_kets(&[a.clone(), b.clone()]).expect("a and b are independent");
    let rest = pab.complement().expect("rank 2 in dimension 3");
    observables.insert(
        "Pab".into(),
        vec![
            BranchSpec {
                eigenvalue: 1.0,
                kets: None,
                projector: Some(matrix_spec(pab.operator())),
            },
            BranchSpec {
                eigenvalue: 2.0,
                kets: None,
                projector: Some(matrix_spec(rest.operator())),
            },
        ],
    );
    ScenarioFile {
        name: Some("three-box".into()),
        dim: 3,
        preselection: ket_spec(&a),
        postselection: ket_spec(&b),
        observables,
    }
}

/// The three-box preselection postselected on itself.
pub fn preselect_only() -> ScenarioFile {
    let a = three_box_a();
    let mut observables = box_observables();
    observables.insert("A".into(), basis_spec(&basis_completion(&a)));
    ScenarioFile {
        name: Some("preselect-only".into()),
        dim: 3,
        preselection: ket_spec(&a),
        postselection: ket_spec(&a),
        observables,
    }
}

fn spin_basis(theta: f64) -> Vec<Ket> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    vec![real_ket(&[c, s]), real_ket(&[-s, c])]
}

fn plus_minus(kets: &[Ket]) -> Vec<BranchSpec> {
    vec![span(1.0, &kets[0..1]), span(-1.0, &kets[1..2])]
}

/// Spin 1/2 with `a = b = |+z⟩`. `N` measures along a direction at angle
/// `theta` from `z` in the x-z plane; `Z` and `X` are the coordinate axes.
pub fn spin(theta: f64) -> ScenarioFile {
    let up = Ket::basis(2, 0).expect("dim 2");
    let name = if theta == FRAC_PI_3 {
        "spin-pi3".to_string()
    } else {
        format!("spin:{theta}")
    };
    ScenarioFile {
        name: Some(name),
        dim: 2,
        preselection: ket_spec(&up),
        postselection: ket_spec(&up),
        observables: BTreeMap::from([
            ("N".to_string(), plus_minus(&spin_basis(theta))),
            ("Z".to_string(), plus_minus(&spin_basis(0.0))),
            (
                "X".to_string(),
                plus_minus(&spin_basis(std::f64::consts::FRAC_PI_2)),
            ),
        ]),
    }
}

fn identity_context() -> (Ket, Ket) {
    let c = Complex64::new;
    let a = Ket::new(vec![c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)]).expect("normalized");
    let b = Ket::new(vec![c(0.8, 0.0), c(0.0, 0.0), c(0.0, 0.6)]).expect("normalized");
    (a, b)
}

/// Complex non-orthogonal pair with the eigenbasis of `a` as observable `A`.
pub fn identity_a() -> ScenarioFile {
    let (a, b) = identity_context();
    ScenarioFile {
        name: Some("identity-A".into()),
        dim: 3,
        preselection: ket_spec(&a),
        postselection: ket_spec(&b),
        observables: BTreeMap::from([("A".to_string(), basis_spec(&basis_completion(&a)))]),
    }
}

/// Same pair as `identity-A` with the eigenbasis of `b` as observable `B`.
pub fn identity_b() -> ScenarioFile {
    let (a, b) = identity_context();
    ScenarioFile {
        name: Some("identity-B".into()),
        dim: 3,
        preselection: ket_spec(&a),
        postselection: ket_spec(&b),
        observables: BTreeMap::from([("B".to_string(), basis_spec(&basis_completion(&b)))]),
    }
}

pub fn lookup(name: &str) -> Option<ScenarioFile> {
    match name {
        "three-box" => Some(three_box()),
        "spin-pi3" => Some(spin(FRAC_PI_3)),
        "preselect-only" => Some(preselect_only()),
        "identity-A" => Some(identity_a()),
        "identity-B" => Some(identity_b()),
        _ => {
            let theta: f64 = name.strip_prefix("spin:")?.parse().ok()?;
            theta.is_finite().then(|| spin(theta))
        }
    }
}

use std::f64::consts::PI;

use steklov_core::coeff::{preset_density, preset_tensor, CoefficientTensor, DensityField};
use steklov_core::eigen::{EigenOptions, Sign};
use steklov_core::geometry::{build_cell_mesh, CellGeometry, EpsilonLevel};
use steklov_core::homog::*;
use steklov_core::spectra::*;

fn identity() -> CoefficientTensor {
    preset_tensor("identity").unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn opts() -> EigenOptions {
    EigenOptions::default()
}

fn l2_mass(mesh: &steklov_core::geometry::Mesh, u: &[f64]) -> f64 {
    let m = steklov_core::fem::assemble_volume_mass(mesh).unwrap();
    m.bilinear(u, u)
}

#[test]
fn positive_limit_examples() {
    let omega = limit_mesh(32).unwrap();
    let q = EffectiveTensor::isotropic(1.0);
    let l = solve_limit_positive(&q, 2.0, &omega, 3, &opts()).unwrap();
    assert_eq!(l.kind, LimitKind::Positive);
    assert!(rel(l.positives[0].value, PI * PI) < 0.01);
    assert!(rel(l.positives[1].value, l.positives[2].value) < 1e-8);
    assert!(l.positives.windows(2).all(|w| w[0].value <= w[1].value));
    for p in &l.positives {
        assert!((l2_mass(&omega, &p.vector) - 0.5).abs() < 1e-10);
    }
    let l4 = solve_limit_positive(&q, 4.0, &omega, 3, &opts()).unwrap();
    for (a, b) in l.positives.iter().zip(&l4.positives) {
        assert!(rel(b.value, 0.5 * a.value) < 1e-10);
    }
    assert!(solve_limit_positive(&q, -1.0, &omega, 3, &opts()).is_err());
}

#[test]
fn negative_limit_examples() {
    let omega = limit_mesh(32).unwrap();
    let q = EffectiveTensor::isotropic(1.0);
    let l = solve_limit_negative(&q, -2.0, &omega, 3, &opts()).unwrap();
    assert!(rel(l.negatives[0].value, -PI * PI) < 0.01);
    assert!(l.negatives[0].value > l.negatives[1].value);
    assert!(l.negatives.windows(2).all(|w| w[0].value >= w[1].value));
    let p = solve_limit_positive(&q, 2.0, &omega, 3, &opts()).unwrap();
    for (n, p) in l.negatives.iter().zip(&p.positives) {
        assert_eq!(n.value, -p.value);
        assert!((l2_mass(&omega, &n.vector) - 0.5).abs() < 1e-10);
    }
    assert!(solve_limit_negative(&q, 1.0, &omega, 3, &opts()).is_err());
}

#[test]
fn pencil_limit_examples() {
    let omega = limit_mesh(32).unwrap();
    let q = EffectiveTensor::isotropic(1.0);
    let l = solve_limit_pencil(&q, 1.0, &omega, 3, &opts()).unwrap();
    assert!(rel(l.positives[0].value, (2.0 * PI * PI).sqrt()) < 0.01);
    let l4 = solve_limit_pencil(&q, 4.0, &omega, 3, &opts()).unwrap();
    for i in 0..3 {
        assert_eq!(l.positives[i].value, -l.negatives[i].value);
        assert_eq!(l.positives[i].vector, l.negatives[i].vector);
        let mass = l2_mass(&omega, &l.positives[i].vector);
        assert!((2.0 * l.positives[i].value * 1.0 * mass - 1.0).abs() < 1e-8);
        assert!(rel(l4.positives[i].value, 0.5 * l.positives[i].value) < 1e-10);
    }
    assert!(solve_limit_pencil(&q, 0.0, &omega, 3, &opts()).is_err());
}

#[test]
fn diagnostics() {
    assert_eq!(Diagnostic::Scaled.apply(2.0, 0.5), 4.0);
    assert_eq!(Diagnostic::Raw.apply(2.0, 0.5), 2.0);
    assert_eq!(Diagnostic::Shifted { lambda1: -1.0 }.apply(-3.0, 0.5), -2.0);
}

#[test]
fn sanity_mode_accepts_a_nonnegative_density() {
    let g = CellGeometry::square(0.5, 8);
    let lvl = EpsilonLevel::new(2).unwrap();
    let rho = preset_density("rho-one", None).unwrap();
    let strict = solve_epsilon(&g, lvl, &identity(), &rho, SignCase::Positive, &EpsilonOptions::default());
    assert!(matches!(
        strict,
        Err(SpectraError::Eigen(steklov_core::eigen::EigenError::NoNegativeSpectrum))
    ));
    let sane = EpsilonOptions {
        sanity: true,
        ..EpsilonOptions::default()
    };
    let s = solve_epsilon(&g, lvl, &identity(), &rho, SignCase::Positive, &sane).unwrap();
    assert!(s.no_negative_spectrum && s.negatives.is_empty());
    assert_eq!(s.positives.len(), 3);
}

#[test]
fn two_sequences_with_normalization() {
    let g = CellGeometry::square(0.5, 8);
    let lvl = EpsilonLevel::new(4).unwrap();
    for c in [0.5, 0.8] {
        let rho = preset_density("rho-shifted", Some(c)).unwrap();
        let s = solve_epsilon(&g, lvl, &identity(), &rho, SignCase::Positive, &EpsilonOptions::default()).unwrap();
        assert_eq!((s.positives.len(), s.negatives.len()), (3, 3));
        for p in s.positives.iter().chain(&s.negatives) {
            assert!(p.normalization_residual <= 1e-8 && p.residual_norm <= 1e-8);
        }
        assert!(s.orthogonality_defect <= 1e-8);
        assert!(s.positives.iter().all(|p| p.eigenvalue > 0.0));
        assert!(s.negatives.iter().all(|p| p.eigenvalue < 0.0));
    }
}

#[test]
fn density_scaling_and_reflection() {
    let g = CellGeometry::square(0.5, 8);
    let lvl = EpsilonLevel::new(2).unwrap();
    let rho = preset_density("rho-shifted", Some(0.5)).unwrap();
    let o = EpsilonOptions::default();
    let base = solve_epsilon(&g, lvl, &identity(), &rho, SignCase::Positive, &o).unwrap();
    let doubled = solve_epsilon(&g, lvl, &identity(), &rho.scaled(2.0), SignCase::Positive, &o).unwrap();
    for sign in [Sign::Positive, Sign::Negative] {
        for (a, b) in base.side(sign).iter().zip(doubled.side(sign)) {
            assert!(rel(b.eigenvalue, 0.5 * a.eigenvalue) < 1e-10);
        }
    }
    let flipped = solve_epsilon(&g, lvl, &identity(), &rho.negated(), SignCase::Negative, &o).unwrap();
    for (a, b) in base.positives.iter().zip(&flipped.negatives) {
        assert_eq!(a.eigenvalue, -b.eigenvalue);
    }
    for (a, b) in base.negatives.iter().zip(&flipped.positives) {
        assert_eq!(a.eigenvalue, -b.eigenvalue);
    }
}

#[test]
fn epsilon_limit_gap_shrinks() {
    let g = CellGeometry::square(0.5, 8);
    let cell = build_cell_mesh(&g).unwrap();
    let rho = preset_density("rho-shifted", Some(0.5)).unwrap();
    let d = compute_homogenized(&cell, &identity(), &rho, &HomogOptions::default()).unwrap();
    let omega = limit_mesh(32).unwrap();
    let lim = solve_case_limits(&d, &omega, 1, &opts()).unwrap();
    let gap = |n: usize| {
        let s = solve_epsilon(&g, EpsilonLevel::new(n).unwrap(), &identity(), &rho, d.case, &EpsilonOptions {
            k: 1,
            ..EpsilonOptions::default()
        })
        .unwrap();
        (lim.positive_diagnostic.apply(s.positives[0].eigenvalue, s.epsilon()) - lim.positives[0].value).abs()
    };
    assert!(gap(4) < gap(2));
}

#[test]
fn reflected_case_limits_are_swapped() {
    let cell = build_cell_mesh(&CellGeometry::square(0.5, 8)).unwrap();
    let rho = preset_density("rho-shifted", Some(0.5)).unwrap();
    let omega = limit_mesh(16).unwrap();
    let h = HomogOptions::default();
    let p = compute_homogenized(&cell, &identity(), &rho, &h).unwrap();
    let n = compute_homogenized(&cell, &identity(), &rho.negated(), &h).unwrap();
    let lp = solve_case_limits(&p, &omega, 2, &opts()).unwrap();
    let ln = solve_case_limits(&n, &omega, 2, &opts()).unwrap();
    for (a, b) in lp.positives.iter().zip(&ln.negatives) {
        assert_eq!(a.value, -b.value);
    }
    for (a, b) in lp.negatives.iter().zip(&ln.positives) {
        assert_eq!(a.value, -b.value);
    }
    let (d, e) = (lp.negative_diagnostic, ln.positive_diagnostic);
    assert_eq!(d.apply(-7.0, 0.25), -e.apply(7.0, 0.25));
}

#[test]
fn expansion_trivial_cases() {
    let omega = limit_mesh(8).unwrap();
    let plain = build_cell_mesh(&CellGeometry::no_hole(8)).unwrap();
    let chi1 = solve_corrector(&plain, &identity(), 1, 1e-12).unwrap();
    let chi2 = solve_corrector(&plain, &identity(), 2, 1e-12).unwrap();
    let data = HomogenizedData {
        schema: HOMOGDATA_SCHEMA.into(),
        case: SignCase::Positive,
        m_s_rho: 1.0,
        perimeter: 0.0,
        q: EffectiveTensor::isotropic(1.0),
        chi: [chi1, chi2],
        critical: None,
        factorization: None,
    };
    let lim = solve_limit_positive(&data.q, 1.0, &omega, 1, &opts()).unwrap();
    let e = build_corrector_expansion(&lim.positives[0], &omega, &data, &plain, Branch::Plain, 0.25).unwrap();
    let (lead, corr) = e.eval_nodes(&omega).unwrap();
    for i in 0..omega.node_count() {
        assert!((lead[i] - lim.positives[0].vector[i]).abs() < 1e-14);
        assert!((corr[i] - lead[i]).abs() < 1e-12);
    }

    let zero = LimitPair {
        value: 1.0,
        vector: vec![0.0; omega.node_count()],
        residual_norm: 0.0,
        mass: 0.0,
    };
    let cell = build_cell_mesh(&CellGeometry::square(0.5, 8)).unwrap();
    let d = compute_homogenized(&cell, &identity(), &DensityField::parse("sin(2*pi*y1)").unwrap(), &HomogOptions::default()).unwrap();
    let e = build_corrector_expansion(&zero, &omega, &d, &cell, Branch::Critical { lambda0: 3.0 }, 0.25).unwrap();
    let perforated = steklov_core::geometry::build_perforated_domain_mesh(
        &CellGeometry::square(0.5, 8),
        EpsilonLevel::new(4).unwrap(),
        steklov_core::geometry::DEFAULT_MAX_DOFS,
    )
    .unwrap();
    let (lead, corr) = e.eval_nodes(&perforated).unwrap();
    assert!(lead.iter().chain(&corr).all(|v| *v == 0.0));
}

#[test]
fn expansion_improves_on_the_leading_term() {
    let g = CellGeometry::square(0.5, 8);
    let cell = build_cell_mesh(&g).unwrap();
    let rho = preset_density("rho-odd", None).unwrap();
    let d = compute_homogenized(&cell, &identity(), &rho, &HomogOptions::default()).unwrap();
    let omega = limit_mesh(32).unwrap();
    let lim = solve_case_limits(&d, &omega, 1, &opts()).unwrap();
    let s = solve_epsilon(&g, EpsilonLevel::new(4).unwrap(), &identity(), &rho, d.case, &EpsilonOptions {
        k: 1,
        ..EpsilonOptions::default()
    })
    .unwrap();
    let e = build_corrector_expansion(
        &lim.positives[0],
        &omega,
        &d,
        &cell,
        Branch::for_side(&d, Sign::Positive, lim.positives[0].value),
        s.epsilon(),
    )
    .unwrap();
    let (lead, corr) = e.eval_nodes(&s.mesh).unwrap();
    let u = &s.positives[0].vector;
    let sign = u.iter().zip(&lead).map(|(a, b)| a * b).sum::<f64>().signum();
    let dist = |w: &[f64]| u.iter().zip(w).map(|(a, b)| (sign * a - b).powi(2)).sum::<f64>();
    assert!(dist(&corr) < dist(&lead));
}

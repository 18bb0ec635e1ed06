use super::*;
use crate::optics::quadrature::overlap_by_quadrature;
use crate::phase::{
    curve_from_samples, sample_curve, topological_index, unwrap_curve, SampleOptions,
};
use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn arcsec(x: f64) -> f64 {
    x / 3600.0 * PI / 180.0
}

#[test]
fn vertical_input_is_normalized() {
    let field = BeamField::vertical_input(&OpticsConfig::default());
    assert_abs_diff_eq!(field.total_power(), 1.0, epsilon = 1e-12);
    let self_overlap = overlap(&field, &field).unwrap();
    assert_abs_diff_eq!((self_overlap - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
}

#[test]
fn jones_identity_leaves_field_unchanged() {
    let field = BeamField::vertical_input(&OpticsConfig::default());
    let out = apply_jones(&Operator2::identity(), &field).unwrap();
    assert_eq!(out, field);
}

#[test]
fn plate_phases_y_term() {
    let gamma = 0.8;
    let field = BeamField::vertical_input(&OpticsConfig::default());
    let out = apply_jones(&jones_phase_plate(gamma, 0.0), &field).unwrap();
    assert_eq!(out.terms.len(), 1);
    let expect = C64::from_polar(1.0, 0.5 * gamma);
    assert!((out.terms[0].amp - expect).norm() < 1e-14);
}

#[test]
fn rotation_splits_y_term() {
    let field = BeamField::vertical_input(&OpticsConfig::default());
    let out = apply_jones(&jones_rotation(FRAC_PI_4), &field).unwrap();
    assert_eq!(out.terms.len(), 2);
    let s = 0.5_f64.sqrt();
    for t in &out.terms {
        assert_abs_diff_eq!(t.amp.norm(), s, epsilon = 1e-14);
        assert_eq!(t.center, [0.0, 0.0]);
    }
    // R(pi/4) maps V to (cos, sin): the Y part keeps +1/sqrt(2), the X part
    // gets +1/sqrt(2) as well with this rotation's sign.
    let y = out.terms.iter().find(|t| t.pol == Pol::Y).unwrap();
    let x = out.terms.iter().find(|t| t.pol == Pol::X).unwrap();
    assert!((y.amp - c(s, 0.0)).norm() < 1e-14);
    assert!((x.amp - c(s, 0.0)).norm() < 1e-14);
}

#[test]
fn displacer_moves_only_horizontal() {
    let cfg = OpticsConfig::default();
    let mut field = BeamField::empty(&cfg);
    field
        .push_term(GaussianTerm {
            amp: c(1.0, 0.0),
            pol: Pol::X,
            center: [0.0, 0.0],
            tilt: [0.0, 0.0],
        })
        .unwrap();
    let out = apply_beam_displacer(&field, 1.3, 0.0, 0.0, 0.0, 1.0).unwrap();
    assert_eq!(out.terms.len(), 1);
    assert_eq!(out.terms[0].center, [1.3, 0.0]);
    assert_eq!(out.terms[0].tilt, [0.0, 0.0]);

    let vertical = BeamField::vertical_input(&cfg);
    let out = apply_beam_displacer(&vertical, 1.3, arcsec(30.0), 0.4, 0.2, 1.0).unwrap();
    assert_eq!(out, vertical);
}

#[test]
fn displacer_tilt_magnitude() {
    // beta = 30 arcsec at 632.9 nm: |q| = (2 pi / 632.9e-6 mm) sin(1.454e-4)
    // = 1.444 rad/mm. The arcsecond conversion is recomputed independently.
    let cfg = OpticsConfig::default();
    let beta = 30.0 * (PI / (180.0 * 3600.0));
    assert_abs_diff_eq!(beta, 1.4544410433286077e-4, epsilon = 1e-12);
    let mut field = BeamField::empty(&cfg);
    field
        .push_term(GaussianTerm {
            amp: c(1.0, 0.0),
            pol: Pol::X,
            center: [0.0, 0.0],
            tilt: [0.0, 0.0],
        })
        .unwrap();
    let out = apply_beam_displacer(&field, 1.0, beta, 0.0, 0.0, 1.0).unwrap();
    let q = out.terms[0].tilt[0].hypot(out.terms[0].tilt[1]);
    let expect = cfg.k_per_mm() * beta.sin();
    assert_abs_diff_eq!(q, expect, epsilon = 1e-12);
    assert_abs_diff_eq!(q, 1.444, epsilon = 5e-4);
}

#[test]
fn coincident_paths_merge() {
    let cfg = OpticsConfig::default();
    let field = BeamField::vertical_input(&cfg);
    // Two quarter-turn rotations split and recombine: term counts stay
    // bounded because coincident geometry merges.
    let once = apply_jones(&jones_rotation(0.3), &field).unwrap();
    let twice = apply_jones(&jones_rotation(-0.3), &once).unwrap();
    assert_eq!(twice.terms.len(), 1);
    assert!((twice.terms[0].amp - c(1.0, 0.0)).norm() < 1e-14);
}

#[test]
fn overlap_closed_forms() {
    let cfg = OpticsConfig {
        w0_mm: 0.8,
        ..OpticsConfig::default()
    };
    let reference = BeamField::vertical_input(&cfg);

    // Displaced copy: exp(-d^2 / (2 w0^2)).
    let d = 1.1;
    let mut displaced = BeamField::empty(&cfg);
    displaced
        .push_term(GaussianTerm {
            amp: c(1.0, 0.0),
            pol: Pol::Y,
            center: [d, 0.0],
            tilt: [0.0, 0.0],
        })
        .unwrap();
    let got = overlap(&reference, &displaced).unwrap();
    let expect = (-d * d / (2.0 * cfg.w0_mm * cfg.w0_mm)).exp();
    assert_abs_diff_eq!(got.re, expect, epsilon = 1e-14);
    assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-14);

    // Pure tilt: exp(-w0^2 q^2 / 8).
    let q = 2.3;
    let mut tilted = BeamField::empty(&cfg);
    tilted
        .push_term(GaussianTerm {
            amp: c(1.0, 0.0),
            pol: Pol::Y,
            center: [0.0, 0.0],
            tilt: [q, 0.0],
        })
        .unwrap();
    let got = overlap(&reference, &tilted).unwrap();
    let expect = (-cfg.w0_mm * cfg.w0_mm * q * q / 8.0).exp();
    assert_abs_diff_eq!(got.norm(), expect, epsilon = 1e-14);
    // Tilt applied at the origin carries no net phase.
    assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-14);
}

#[test]
fn overlap_rejects_mismatched_beams() {
    let a = BeamField::vertical_input(&OpticsConfig::default());
    let b = BeamField::vertical_input(&OpticsConfig {
        w0_mm: 2.0,
        ..OpticsConfig::default()
    });
    assert!(matches!(
        overlap(&a, &b),
        Err(OpticsError::ConfigMismatch(_, _))
    ));
}

#[test]
fn overlap_matches_quadrature_on_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let cfg = OpticsConfig::default();
    for _ in 0..5 {
        let mut a = BeamField::empty(&cfg);
        let mut b = BeamField::empty(&cfg);
        for field in [&mut a, &mut b] {
            for _ in 0..rng.gen_range(1..5) {
                field
                    .push_term(GaussianTerm {
                        amp: C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
                        pol: if rng.gen::<bool>() { Pol::Y } else { Pol::X },
                        center: [rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0],
                        tilt: [rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0],
                    })
                    .unwrap();
            }
        }
        let closed = overlap(&a, &b).unwrap();
        let quad = overlap_by_quadrature(&a, &b, 1e-9).unwrap();
        let scale = quad.norm().max(1e-9);
        assert!(
            (closed - quad).norm() / scale < 1e-6,
            "closed {closed} vs quadrature {quad}"
        );
    }
}

#[test]
fn ideal_stage_alpha_zero_passes_vertical_beam() {
    let optics = OpticsConfig::default();
    let setup = Setup::protocol(3, 0.0, optics);
    let a = setup.readout_amplitude().unwrap();
    assert!((a - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn propagate_empty_setup_and_single_stage() {
    let optics = OpticsConfig::default();
    let input = BeamField::vertical_input(&optics);
    let out = propagate(&[], &input, 1.0).unwrap();
    assert_eq!(out, input);

    let stage = build_stage(&StageConfig::ideal(0.0, optics.dx_mm));
    let out = propagate(&stage, &input, 1.0).unwrap();
    assert_eq!(out.terms.len(), 1);
    assert_eq!(out.terms[0].pol, Pol::Y);
    assert_abs_diff_eq!(out.terms[0].amp.norm(), 1.0, epsilon = 1e-14);
}

#[test]
fn naive_and_simplified_chains_agree() {
    // The merged [plate, BD, CWP] chain plus closing plate reproduces the
    // unsimplified rotated-stage product, spatial bookkeeping included.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..25 {
        let alpha = rng.gen::<f64>() * FRAC_PI_2;
        let optics = OpticsConfig {
            w0_mm: 0.4 + rng.gen::<f64>() * 2.0,
            gamma_rad: (rng.gen::<f64>() - 0.5) * 2.0,
            ..OpticsConfig::default()
        };
        let mut setup = Setup::protocol(3, alpha, optics);
        for stage in setup.stages.iter_mut() {
            stage.beta_rad = rng.gen::<f64>() * arcsec(40.0);
            stage.nu_rad = rng.gen::<f64>() * TAU;
        }
        let simplified = setup.bracket_amplitude().unwrap();
        let naive = naive_setup_bracket(&setup).unwrap();
        assert!(
            (simplified - naive).norm() < 1e-12,
            "alpha = {alpha}: {simplified} vs {naive}"
        );
    }
}

#[test]
fn stage_merge_identity_as_matrices() {
    // Two sequential unsimplified stages collapse to the merged form with a
    // single rotated plate between the displacers. Checked as pure Jones
    // algebra with the displacer replaced by an arbitrary diagonal.
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let theta = rng.gen::<f64>() * PI;
        let alpha = 0.5 * theta;
        let gamma = (rng.gen::<f64>() - 0.5) * 3.0;
        let b = rng.gen::<f64>();
        let bd = Operator2::diag(c(1.0, 0.0), c(b, 0.0));
        let p = |phi: f64| jones_phase_plate(phi, 0.0);
        let r = jones_rotation;
        let phi1 = TAU / 4.0;
        let phi2 = TAU / 2.0;
        let naive = p(-phi2)
            * r(-alpha)
            * p(gamma)
            * bd
            * r(alpha)
            * p(phi2)
            * p(-phi1)
            * r(-alpha)
            * p(gamma)
            * bd
            * r(alpha)
            * p(phi1);
        let merged = p(-phi2)
            * r(-alpha)
            * p(gamma)
            * bd
            * jones_phase_plate(phi2 - phi1, alpha)
            * p(gamma)
            * bd
            * r(alpha)
            * p(phi1);
        assert!(naive.max_abs_diff(&merged) < 1e-12);
    }
}

#[test]
fn full_setup_matches_rotated_protocol_chain() {
    // As a polarization-space product (beam displacer replaced by its Kraus
    // back-action), the N = 3 arm with closing plate equals the abstract
    // measurement family at theta = 2 alpha: the rotated axes leave the chain
    // bracket untouched.
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    for _ in 0..40 {
        let alpha = rng.gen::<f64>() * FRAC_PI_2;
        let zeta = rng.gen::<f64>();
        let kraus = Operator2::diag(c(1.0, 0.0), c((1.0 - zeta).sqrt(), 0.0));
        let q = jones_phase_plate(FRAC_PI_2, alpha);
        let closer = q.scale(c(-1.0, 0.0));
        let chain = closer * kraus * q * kraus * q * kraus * q;
        let v = chain.mul_vec([c(1.0, 0.0), c(0.0, 0.0)]);
        let optics_bracket = v[0];
        let protocol = crate::phase::no_click_bracket(3, zeta, 2.0 * alpha);
        assert!(
            (optics_bracket - protocol).norm() < 1e-12,
            "alpha = {alpha}, zeta = {zeta}: {optics_bracket} vs {protocol}"
        );
    }
}

#[test]
fn ideal_endpoints_are_exactly_trivial() {
    let optics = OpticsConfig::default();
    for w0 in [0.3, 0.671, 1.0, 2.5] {
        for alpha in [0.0, FRAC_PI_2] {
            let a = Setup::protocol(3, alpha, optics)
                .with_w0(w0)
                .readout_amplitude()
                .unwrap();
            assert!(
                (a - c(1.0, 0.0)).norm() < 1e-12,
                "w0 = {w0}, alpha = {alpha}: {a}"
            );
        }
    }
}

#[test]
fn strong_regime_phase_near_pi_and_matches_quadrature() {
    // Narrow beam, plate at pi/4: the readout phase sits near pi, and the
    // closed-form bracket agrees with direct quadrature of the propagated
    // field against the reference.
    let optics = OpticsConfig {
        w0_mm: 0.6,
        ..OpticsConfig::default()
    };
    let setup = Setup::protocol(3, FRAC_PI_4, optics);
    let closed = setup.bracket_amplitude().unwrap();
    assert!(
        wrap_angle(closed.conj().arg() - PI).abs() < 0.5,
        "chi = {}",
        closed.conj().arg()
    );

    let input = BeamField::vertical_input(&optics);
    let output = propagate(&setup.element_chain(), &input, optics.tilt_scale).unwrap();
    let quad = overlap_by_quadrature(
        &input.project_vertical(),
        &output.project_vertical(),
        1e-10,
    )
    .unwrap();
    assert!(
        (closed - quad).norm() / quad.norm() < 1e-6,
        "closed {closed} vs quadrature {quad}"
    );
}

#[test]
fn unitary_chain_matches_zero_strength_kraus() {
    // With dx = 0 the arm is a pure Jones product and must reproduce the
    // zeta = 0 qubit chain (amplitude exactly 1) for every alpha.
    let optics = OpticsConfig {
        dx_mm: 0.0,
        ..OpticsConfig::default()
    };
    for i in 0..=16 {
        let alpha = FRAC_PI_2 * i as f64 / 16.0;
        let a = Setup::protocol(3, alpha, optics).readout_amplitude().unwrap();
        assert!(
            (a - c(1.0, 0.0)).norm() < 1e-12,
            "alpha = {alpha}: amplitude {a}"
        );
    }
}

#[test]
fn single_stage_matches_kraus_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..30 {
        let alpha = rng.gen::<f64>() * FRAC_PI_2;
        let optics = OpticsConfig {
            w0_mm: 0.3 + rng.gen::<f64>() * 2.5,
            dx_mm: 0.2 + rng.gen::<f64>() * 1.5,
            ..OpticsConfig::default()
        };
        let setup = Setup::protocol(1, alpha, optics);
        let eq = kraus_equivalence(&setup).unwrap();
        assert!(
            eq.deviation < 1e-9,
            "alpha = {alpha}: optical {} vs kraus {}",
            eq.optical,
            eq.kraus
        );
    }
}

#[test]
fn two_stages_expose_joint_postselection() {
    // eta = 1 at alpha = pi/4: the joint optical readout differs from
    // per-measurement postselection by more than 1e-3.
    let optics = OpticsConfig {
        w0_mm: 1.0,
        dx_mm: 1.0,
        ..OpticsConfig::default()
    };
    let setup = Setup::protocol(2, FRAC_PI_4, optics);
    let eq = kraus_equivalence(&setup).unwrap();
    assert!(eq.deviation > 1e-3, "deviation = {}", eq.deviation);
}

#[test]
fn zero_walkoff_is_trivially_equivalent() {
    let optics = OpticsConfig {
        dx_mm: 0.0,
        ..OpticsConfig::default()
    };
    for n in [1, 2, 3] {
        let eq = kraus_equivalence(&Setup::protocol(n, 0.7, optics)).unwrap();
        assert!((eq.optical - c(1.0, 0.0)).norm() < 1e-12);
        assert!(eq.deviation < 1e-12);
    }
}

#[test]
fn readout_no_stages_and_eigenpolarization() {
    let optics = OpticsConfig::default();
    let empty = Setup {
        optics,
        stages: Vec::new(),
    };
    let grid = default_delta_grid();
    let readout = interference_readout(&empty, &grid).unwrap();
    assert_abs_diff_eq!(readout.chi, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(readout.contrast, 1.0, epsilon = 1e-12);
    for (&d, &p) in grid.iter().zip(&readout.powers) {
        assert_abs_diff_eq!(p, 0.5 * (1.0 + d.cos()), epsilon = 1e-12);
    }

    let aligned = Setup::protocol(3, 0.0, optics);
    let readout = interference_readout(&aligned, &grid).unwrap();
    assert_abs_diff_eq!(readout.chi, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(readout.contrast, 1.0, epsilon = 1e-12);
}

#[test]
fn readout_fringe_is_exactly_cosinusoidal() {
    let setup = Setup::protocol(3, 0.6, OpticsConfig::default());
    let grid = default_delta_grid();
    let readout = interference_readout(&setup, &grid).unwrap();
    let samples: Vec<_> = grid.iter().copied().zip(readout.powers.clone()).collect();
    let fit = fringe_fit(&samples).unwrap();
    assert!(fit.residual < 1e-12);
    assert_abs_diff_eq!(fit.chi, readout.chi, epsilon = 1e-9);
    // The power fringe swings with amplitude |A|/2 around 1/2, so the
    // visibility recovers the contrast.
    assert_abs_diff_eq!(fit.offset, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(fit.visibility(), readout.contrast, epsilon = 1e-9);
}

#[test]
fn strong_and_weak_regimes_quantize() {
    let optics = OpticsConfig::default();
    let grid: Vec<f64> = (0..=180).map(|i| FRAC_PI_2 * i as f64 / 180.0).collect();
    for (w0, expect_m) in [(0.3, 1), (2.5, 0), (3.0, 0)] {
        let setup = Setup::protocol(3, 0.0, optics).with_w0(w0);
        let eval = |alpha: f64| setup.with_alpha(alpha).readout_amplitude();
        let samples = sample_curve(&eval, &grid, &SampleOptions::default()).unwrap();
        let mut curve = curve_from_samples(&samples, 1e-4);
        unwrap_curve(&mut curve.points).unwrap();
        let res = topological_index(&curve).unwrap();
        assert_eq!(res.m, expect_m, "w0 = {w0}");
        assert!(res.quantization_residual < 1e-9, "w0 = {w0}");
    }
}

#[test]
fn eta_scale_invariance_spot_check() {
    let optics = OpticsConfig::default();
    let base = Setup::protocol(3, 0.0, optics);
    for factor in [0.5, 2.0, 5.0] {
        for i in [3, 45, 88] {
            let alpha = FRAC_PI_2 * i as f64 / 90.0;
            let a0 = base.with_alpha(alpha).readout_amplitude().unwrap();
            let mut scaled = base.with_alpha(alpha).with_w0(optics.w0_mm * factor);
            for stage in scaled.stages.iter_mut() {
                stage.dx_mm *= factor;
            }
            let a1 = scaled.readout_amplitude().unwrap();
            assert!(
                wrap_angle(a1.arg() - a0.arg()).abs() < 1e-9,
                "factor {factor}, alpha {alpha}"
            );
            assert!((a1.norm() - a0.norm()).abs() < 1e-9);
        }
    }
}

#[test]
fn passivity_through_random_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for _ in 0..20 {
        let optics = OpticsConfig {
            w0_mm: 0.3 + rng.gen::<f64>() * 2.0,
            gamma_rad: (rng.gen::<f64>() - 0.5) * 4.0,
            ..OpticsConfig::default()
        };
        let setup = Setup::protocol(3, rng.gen::<f64>() * FRAC_PI_2, optics);
        let input = BeamField::vertical_input(&optics);
        let mut field = input.clone();
        let mut power = field.total_power();
        for element in setup.element_chain() {
            field = apply_element(&element, &field, optics.tilt_scale).unwrap();
            let next = field.total_power();
            assert!(next <= power + 1e-9, "power rose {power} -> {next}");
            power = next;
        }
        let a = overlap(&input, &field).unwrap();
        assert!(a.norm() <= 1.0 + 1e-9);
    }
}

#[test]
fn term_budget_is_enforced() {
    let cfg = OpticsConfig::default();
    let mut field = BeamField::empty(&cfg);
    for i in 0..TERM_BUDGET {
        field
            .push_term(GaussianTerm {
                amp: c(1.0, 0.0),
                pol: Pol::Y,
                center: [i as f64, 0.0],
                tilt: [0.0, 0.0],
            })
            .unwrap();
    }
    let overflow = field.push_term(GaussianTerm {
        amp: c(1.0, 0.0),
        pol: Pol::Y,
        center: [-1.0, 0.0],
        tilt: [0.0, 0.0],
    });
    assert!(matches!(overflow, Err(OpticsError::TermBudget(_))));
}

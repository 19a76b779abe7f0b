mod common;

use std::io::Write;

use common::*;
use corrwitness::photon::*;
use corrwitness::qstate::{trace_distance, C64};
use num_complex::Complex64;
use proptest::prelude::*;

fn default_profile() -> AngularProfile {
    gaussian_profile_with(
        &PixelGrid::default(),
        DEFAULT_FWHM_MRAD,
        FwhmOf::Intensity,
        WindowPolicy::Warn,
    )
    .unwrap()
}

fn sigma_pixels(grid: &PixelGrid, fwhm_mrad: f64, of: FwhmOf) -> f64 {
    // Standard deviation of |g|^2 in pixels.
    let s_intensity = fwhm_mrad * 1e-3 / (8.0 * 2f64.ln()).sqrt();
    let s = match of {
        FwhmOf::Intensity => s_intensity,
        FwhmOf::Amplitude => s_intensity / 2f64.sqrt(),
    };
    s / grid.resolution()
}

fn odd_table(grid: &PixelGrid, seed: u64) -> PhaseFunction {
    let mut rng = rng(seed);
    let mut values = vec![(0, 0.0)];
    for m in 1..=grid.half_window() as i64 {
        let v = random_angle(&mut rng);
        values.push((m, v));
        values.push((-m, -v));
    }
    PhaseFunction::tabulated(values)
}

#[test]
fn grid_defaults_cover_the_slit() {
    let g = PixelGrid::default();
    assert_eq!(g.resolution(), 100e-6 / 0.330);
    assert_eq!(g.n_pixels(), 33);
    assert!(g.window_rad() >= DEFAULT_SLIT_ACCEPTANCE_RAD);
    let covering = PixelGrid::covering(
        DEFAULT_PIXEL_WIDTH_M,
        DEFAULT_SLM_DISTANCE_M,
        DEFAULT_SLIT_ACCEPTANCE_RAD,
    )
    .unwrap();
    assert_eq!(covering, g);
    assert!(PixelGrid::new(0.0, 0.33, 16).is_err());
}

#[test]
fn fwhm_in_pixels_is_the_unit_conversion() {
    let g = PixelGrid::default();
    let fwhm_px = DEFAULT_FWHM_MRAD * 1e-3 / g.resolution();
    assert!((fwhm_px - 19.8).abs() < 0.01);
}

#[test]
fn default_window_cuts_the_gaussian() {
    let g = PixelGrid::default();
    let strict = gaussian_profile_with(
        &g,
        DEFAULT_FWHM_MRAD,
        FwhmOf::Amplitude,
        WindowPolicy::Strict,
    );
    assert!(matches!(strict, Err(corrwitness::Error::WindowTooSmall(_))));
    assert!(gaussian_profile(&g, DEFAULT_FWHM_MRAD).is_ok());
}

#[test]
fn gaussian_oracle_on_a_wide_window() {
    let grid = PixelGrid::new(DEFAULT_PIXEL_WIDTH_M, DEFAULT_SLM_DISTANCE_M, 60).unwrap();
    for of in [FwhmOf::Amplitude, FwhmOf::Intensity] {
        let p = gaussian_profile_with(&grid, DEFAULT_FWHM_MRAD, of, WindowPolicy::Strict).unwrap();
        let sigma = sigma_pixels(&grid, DEFAULT_FWHM_MRAD, of);
        assert!((p.variance_pixels().sqrt() - sigma).abs() < 1e-6);
        for k in 0..=100 {
            let a = k as f64 * 0.01;
            let eps = epsilon(&p, &PhaseFunction::Zero, a, 1.0).unwrap();
            assert!(
                (eps - Complex64::new(gaussian_epsilon(a, sigma), 0.0)).norm() < 1e-6,
                "{of} a={a}"
            );
        }
    }
}

#[test]
fn jacobi_anger_oracle() {
    let p = default_profile();
    for k in -100..=100 {
        let a = k as f64 * 0.01;
        let eps = epsilon(
            &p,
            &PhaseFunction::Sinusoidal {
                lambda: DEFAULT_LAMBDA,
            },
            a,
            DEFAULT_V0,
        )
        .unwrap();
        let oracle = jacobi_anger_epsilon(p.weights(), DEFAULT_LAMBDA, a, DEFAULT_V0);
        assert!((eps - oracle).norm() < 1e-12, "a={a}: {eps} vs {oracle}");
    }
}

#[test]
fn linear_preparation_is_a_time_shift() {
    let p = default_profile();
    for k in 0..=100 {
        let a = k as f64 * 0.01;
        let shifted = epsilon(&p, &PhaseFunction::Linear { tau: 0.1 }, a, DEFAULT_V0).unwrap();
        let direct = epsilon(&p, &PhaseFunction::Zero, a + 0.1, DEFAULT_V0).unwrap();
        assert_eq!(shifted, direct);
    }
}

#[test]
fn coherence_is_real_and_bounded() {
    let p = default_profile();
    let phases = [
        PhaseFunction::Zero,
        PhaseFunction::Linear { tau: 0.3 },
        PhaseFunction::Sinusoidal { lambda: -0.6 },
        odd_table(p.grid(), 7),
    ];
    for f in &phases {
        assert!(f.is_odd());
        for k in -100..=100 {
            let eps = epsilon(&p, f, k as f64 * 0.01, DEFAULT_V0).unwrap();
            assert!(eps.im.abs() <= 1e-12, "{} {eps}", f.describe());
            assert!(eps.norm() <= DEFAULT_V0 + 1e-15);
        }
    }
    let eps0 = epsilon(&p, &PhaseFunction::Zero, 0.0, DEFAULT_V0).unwrap();
    assert!((eps0.re - 0.914).abs() < 1e-12);
}

#[test]
fn reduced_state_matches_total_state_trace() {
    let p = default_profile();
    let mut rng = rng(8);
    for k in 0..100 {
        use rand::Rng;
        let f = match k % 4 {
            0 => PhaseFunction::Zero,
            1 => PhaseFunction::Linear {
                tau: rng.random_range(-0.5..0.5),
            },
            2 => PhaseFunction::Sinusoidal {
                lambda: rng.random_range(-1.0..1.0),
            },
            _ => odd_table(p.grid(), k),
        };
        let a = rng.random_range(-1.0..1.0);
        let psi = build_total_state(p.grid(), &p, &f, a, 1.0).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let traced = partial_trace_environment(&psi).unwrap();
        let closed = reduced_state(&p, &f, a, 1.0).unwrap();
        assert!(max_entry_diff(traced.entries(), closed.entries()) <= 1e-12);
    }
}

#[test]
fn overall_phase_is_irrelevant() {
    let p = default_profile();
    let f = PhaseFunction::Sinusoidal { lambda: -0.6 };
    let psi = build_total_state(p.grid(), &p, &f, 0.37, 1.0).unwrap();
    let a = partial_trace_environment(&psi).unwrap();
    let b = partial_trace_environment(&psi.with_vv_phase(1.234)).unwrap();
    // The phase moves the coherence; the state is equivalent up to a local
    // rotation of the V polarization, so the HH/VV populations and |coherence|
    // are unchanged and the distance to the rotated partner is zero.
    assert!((a.get(3, 0).norm() - b.get(3, 0).norm()).abs() < 1e-12);
    let rotated = b.get(3, 0) * Complex64::from_polar(1.0, -1.234);
    assert!((rotated - a.get(3, 0)).norm() < 1e-12);
}

#[test]
fn zero_phase_at_the_origin_is_the_bell_state() {
    let p = default_profile();
    let psi = build_total_state(p.grid(), &p, &PhaseFunction::Zero, 0.0, 1.0).unwrap();
    for (h, v) in psi.hh().iter().zip(psi.vv()) {
        assert!((h - v).norm() < 1e-15);
    }
    let rho = partial_trace_environment(&psi).unwrap();
    assert!((rho.purity() - 1.0).abs() < 1e-12);
    assert!((rho.get(3, 0) - C64::new(0.5, 0.0)).norm() < 1e-12);
}

#[test]
fn family_eigenvalues() {
    let rho = polarization_state(Complex64::new(0.914, 0.0)).unwrap();
    let mut ev = rho.eigenvalues();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for (got, want) in ev.iter().zip([0.957, 0.043, 0.0, 0.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    assert!(
        (polarization_state(Complex64::new(0.0, 0.0))
            .unwrap()
            .purity()
            - 0.5)
            .abs()
            < 1e-12
    );
    assert!(polarization_state(Complex64::new(1.01, 0.0)).is_err());
    assert_eq!(visibility(Complex64::new(0.0, 0.3)), 0.0);
}

#[test]
fn slm_profiles() {
    let cfg = SlmProfileConfig::default();
    assert_eq!(cfg.a_opt, 0.1);
    let (phi1, _) = slm_phase_profiles(&cfg, cfg.n1, 0.0, &PhaseFunction::Zero);
    assert_eq!(phi1, 0.0);
    let (_, phi2) = slm_phase_profiles(&cfg, cfg.n2 + 10, 0.2, &PhaseFunction::Zero);
    assert!((phi2 - 3.0).abs() < 1e-12);
}

#[test]
fn discretization_consistency_on_a_wide_window() {
    // Same angular window and FWHM, pixels halved; a and the phase
    // frequencies are rescaled so they describe the same angular functions.
    let coarse = PixelGrid::new(DEFAULT_PIXEL_WIDTH_M, DEFAULT_SLM_DISTANCE_M, 50).unwrap();
    let fine = PixelGrid::new(DEFAULT_PIXEL_WIDTH_M / 2.0, DEFAULT_SLM_DISTANCE_M, 100).unwrap();
    let pc = gaussian_profile_with(
        &coarse,
        DEFAULT_FWHM_MRAD,
        FwhmOf::Intensity,
        WindowPolicy::Strict,
    )
    .unwrap();
    let pf = gaussian_profile_with(
        &fine,
        DEFAULT_FWHM_MRAD,
        FwhmOf::Intensity,
        WindowPolicy::Strict,
    )
    .unwrap();
    let phases = |scale: f64| {
        [
            PhaseFunction::Zero,
            PhaseFunction::Linear {
                tau: DEFAULT_TAU * scale,
            },
            PhaseFunction::Sinusoidal {
                lambda: DEFAULT_LAMBDA * scale,
            },
        ]
    };
    let mut worst: f64 = 0.0;
    for (fc, ff) in phases(1.0).iter().zip(phases(0.5).iter()) {
        for k in -100..=100 {
            let a = k as f64 * 0.01;
            let ec = epsilon(&pc, fc, a, 1.0).unwrap();
            let ef = epsilon(&pf, ff, a / 2.0, 1.0).unwrap();
            worst = worst.max((ec - ef).norm());
        }
    }
    assert!(worst <= 1e-4, "{worst}");
}

#[test]
fn tabulated_profile_from_file() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "# pixel  weight").unwrap();
    for m in -16..=16 {
        writeln!(file, "{m} {}", (-(m as f64).powi(2) / 50.0).exp()).unwrap();
    }
    file.flush().unwrap();
    let table = load_two_column(file.path()).unwrap();
    let p = AngularProfile::from_table(PixelGrid::default(), &table).unwrap();
    assert!(p.is_symmetric());
    assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let bad = read_two_column("1 0.5\nnot a row\n".as_bytes());
    assert!(matches!(
        bad,
        Err(corrwitness::Error::Parse { line: 2, .. })
    ));
    let outside = AngularProfile::from_table(PixelGrid::default(), &[(17, 1.0)]);
    assert!(matches!(outside, Err(corrwitness::Error::GridMismatch(_))));
}

#[test]
fn reduced_distance_never_exceeds_one() {
    let p = default_profile();
    let a = reduced_state(&p, &PhaseFunction::Zero, 0.0, 1.0).unwrap();
    let b = reduced_state(&p, &PhaseFunction::Zero, 1.0, 1.0).unwrap();
    assert!(trace_distance(&a, &b).unwrap() <= 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phase_function_text_round_trip(x in -3.0f64..3.0) {
        for f in [PhaseFunction::Linear { tau: x }, PhaseFunction::Sinusoidal { lambda: x }, PhaseFunction::Zero] {
            let back: PhaseFunction = f.describe().parse().unwrap();
            prop_assert_eq!(back, f);
        }
    }

    #[test]
    fn coherence_bounded_by_baseline(v0 in 0.01f64..=1.0, a in -1.0f64..1.0, seed in any::<u64>()) {
        let p = default_profile();
        let eps = epsilon(&p, &odd_table(p.grid(), seed), a, v0).unwrap();
        prop_assert!(eps.norm() <= v0 * (1.0 + 1e-12));
    }
}

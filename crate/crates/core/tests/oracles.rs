//! Statistical and algebraic oracles, independent of the sampling code
//! paths they check.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use qsi_core::analysis::{
    events_csv, reconstruct_image, security_verdict, tally_errors, write_bundle, ImagingReport,
    Verdict,
};
use qsi_core::polar::{MeasurementBasis, PolarizationState, ProtocolState};
use qsi_core::protocol::{
    run_simulation, ChannelModel, DetectorConfig, ResendPolicy, RunOptions, SourceConfig,
};
use qsi_core::ranging::{
    expected_correlation, expected_s, run_chsh, ChshConfig, PairBases, PairChannel,
};
use qsi_core::scene::{builtin_mask, parse_pbm, sample_position, ObjectMask};

// ---- density-operator CHSH oracle -------------------------------------

fn ket(deg: f64) -> Vector2<f64> {
    let r = deg.to_radians();
    Vector2::new(r.cos(), r.sin())
}

/// |α⟩⟨α| − |α⊥⟩⟨α⊥| for a linear analyzer at `deg`.
fn observable(deg: f64) -> Matrix2<f64> {
    let a = ket(deg);
    let b = ket(deg + 90.0);
    a * a.transpose() - b * b.transpose()
}

fn bell_state() -> Matrix4<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi = Vector4::new(s, 0.0, 0.0, s);
    phi * phi.transpose()
}

/// Measure-and-prepare on the second photon: project onto θe or θe+90 and
/// resend the projected state.
fn measure_and_prepare(rho: &Matrix4<f64>, theta_e: f64) -> Matrix4<f64> {
    let id = Matrix2::<f64>::identity();
    [theta_e, theta_e + 90.0]
        .iter()
        .fold(Matrix4::zeros(), |acc, &ax| {
            let k = ket(ax);
            let proj = id.kronecker(&(k * k.transpose()));
            let p4 = Matrix4::from_iterator(proj.iter().copied());
            acc + p4 * rho * p4
        })
}

fn density_correlation(rho: &Matrix4<f64>, alpha: f64, beta: f64) -> f64 {
    let obs = observable(alpha).kronecker(&observable(beta));
    let o4 = Matrix4::from_iterator(obs.iter().copied());
    (rho * o4).trace()
}

fn density_s(rho: &Matrix4<f64>) -> f64 {
    let e: Vec<f64> = PairBases::default()
        .settings()
        .iter()
        .map(|&(a, b)| density_correlation(rho, a, b))
        .collect();
    e[0] + e[1] + e[2] - e[3]
}

#[test]
fn honest_chsh_matches_density_operator() {
    let rho = bell_state();
    let s = density_s(&rho);
    assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-12, "{s}");
    for (a, b) in PairBases::default().settings() {
        let e = density_correlation(&rho, a, b);
        assert!((e - expected_correlation(a, b, &PairChannel::Honest)).abs() < 1e-12);
    }
}

#[test]
fn intercept_resend_chsh_never_exceeds_two() {
    for step in 0..36 {
        let theta_e = step as f64 * 5.0;
        let rho = measure_and_prepare(&bell_state(), theta_e);
        let oracle = density_s(&rho);
        assert!(
            oracle.abs() <= 2.0 + 1e-12,
            "theta_e {theta_e}: S = {oracle}"
        );
        let closed = expected_s(
            &PairBases::default(),
            &PairChannel::InterceptResend { theta_e },
        );
        assert!(
            (closed - oracle).abs() < 1e-12,
            "theta_e {theta_e}: {closed} vs {oracle}"
        );
    }
}

#[test]
fn intercept_resend_monte_carlo_within_three_sigma_of_oracle() {
    for step in 0..18 {
        let theta_e = step as f64 * 5.0;
        let cfg = ChshConfig {
            pairs_per_setting: 20_000,
            channel: PairChannel::InterceptResend { theta_e },
            ..ChshConfig::default()
        };
        let run = run_chsh(&cfg, 1000 + step, 4).unwrap();
        let oracle = density_s(&measure_and_prepare(&bell_state(), theta_e));
        let r = &run.record;
        assert!(
            (r.s - oracle).abs() <= 3.0 * r.s_std_error,
            "theta_e {theta_e}: {} vs {oracle}",
            r.s
        );
        assert!(r.s.abs() <= 2.0 + 3.0 * r.s_std_error);
        // one-sided marginals stay unbiased
        for st in &r.settings {
            let t = st.tally;
            let n = t.total() as f64;
            let sigma3 = 3.0 * (0.25 / n).sqrt();
            assert!((((t.pp + t.pm) as f64 / n) - 0.5).abs() < sigma3);
            assert!((((t.pp + t.mp) as f64 / n) - 0.5).abs() < sigma3);
        }
    }
}

#[test]
fn honest_correlations_within_three_sigma() {
    let run = run_chsh(&ChshConfig::default(), 77, 8).unwrap();
    for (st, e) in run.record.settings.iter().zip(run.record.correlations) {
        let expected = density_correlation(&bell_state(), st.alice_theta, st.bob_theta);
        let sigma = ((1.0 - expected * expected) / st.tally.total() as f64).sqrt();
        assert!(
            (e - expected).abs() < 3.0 * sigma,
            "{st:?}: {e} vs {expected}"
        );
    }
    assert!(run.record.secure);
}

// ---- spatial sampling --------------------------------------------------

fn chi_square_p(observed: &[u64], expected_each: f64) -> f64 {
    let stat: f64 = observed
        .iter()
        .map(|&o| (o as f64 - expected_each).powi(2) / expected_each)
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn sample_position_is_uniform_over_sixteen_pixels() {
    let mask = ObjectMask::filled(4, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 100_000;
    let mut counts = [0u64; 16];
    for _ in 0..n {
        let p = sample_position(&mask, rng.random(), rng.random());
        counts[p.y * 4 + p.x] += 1;
    }
    let p = chi_square_p(&counts, n as f64 / 16.0);
    assert!(p > 0.001, "chi-square p = {p}");
}

#[test]
fn sample_position_marginals_are_uniform() {
    let mask = builtin_mask("aircraft").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let mut rows = [0u64; 64];
    let mut cols = [0u64; 64];
    for _ in 0..n {
        let p = sample_position(&mask, rng.random(), rng.random());
        rows[p.y] += 1;
        cols[p.x] += 1;
    }
    assert!(chi_square_p(&rows, n as f64 / 64.0) > 0.001);
    assert!(chi_square_p(&cols, n as f64 / 64.0) > 0.001);
}

// ---- image reconstruction ---------------------------------------------

#[test]
fn honest_composite_covers_exactly_the_reflective_support() {
    let scene = builtin_mask("aircraft").unwrap();
    let reflective = scene.reflective_count() as f64;
    let frames = 100_000u64;
    // union bound on a reflective pixel staying dark
    let miss = reflective * (1.0 - 1.0 / reflective).powf(frames as f64);
    assert!(miss < 1e-3, "coverage oracle too weak: {miss}");

    let run = run_simulation(
        &scene,
        &SourceConfig::default(),
        &DetectorConfig::default(),
        &ChannelModel::honest(scene.clone()),
        31,
        frames,
        &RunOptions {
            workers: 4,
            max_pulses: None,
        },
    )
    .unwrap();
    let images = reconstruct_image(&run);
    for (&bit, &count) in scene.bits().iter().zip(images.composite.counts()) {
        assert_eq!(bit, count > 0);
    }
    let summed: Vec<u64> = (0..scene.len())
        .map(|i| {
            ProtocolState::ALL
                .iter()
                .map(|&p| images.ports.port(p).counts()[i])
                .sum()
        })
        .collect();
    assert_eq!(summed, images.composite.counts());
    assert_eq!(images.composite.total(), frames);
}

#[test]
fn fixed_h_attack_per_channel_rates() {
    let scene = builtin_mask("aircraft").unwrap();
    let channel = ChannelModel::intercept_resend(
        MeasurementBasis::HV,
        builtin_mask("bird").unwrap(),
        ResendPolicy::FixedState(PolarizationState::H),
    )
    .unwrap();
    let run = run_simulation(
        &scene,
        &SourceConfig::default(),
        &DetectorConfig::IDEAL,
        &channel,
        8,
        40_000,
        &RunOptions {
            workers: 2,
            max_pulses: None,
        },
    )
    .unwrap();
    let report = tally_errors(&run.events).unwrap();
    assert_eq!(report.channel(ProtocolState::H).rate(), Some(0.0));
    assert_eq!(report.channel(ProtocolState::V).rate(), Some(1.0));
    for p in [ProtocolState::D, ProtocolState::A] {
        let c = report.channel(p);
        let sigma = (0.25 / c.total as f64).sqrt();
        assert!((c.rate().unwrap() - 0.5).abs() < 3.0 * sigma);
    }
    assert!(reconstruct_image(&run).ports.v.is_zero());
    assert_eq!(security_verdict(&report).verdict, Verdict::Compromised);
    // the painted positions all come from the spoof silhouette
    let bird = builtin_mask("bird").unwrap();
    assert!(run
        .detected()
        .all(|e| bird.get(e.reported_pixel.unwrap()).unwrap()));
}

#[test]
fn tally_error_band_for_honest_run() {
    // 99% binomial band around 0.84% at 10⁴ detections: ±2.576σ
    let p: f64 = 0.0084;
    let sigma = (p * (1.0 - p) / 1e4).sqrt();
    let (lo, hi) = (p - 2.576 * sigma, p + 2.576 * sigma);
    assert!(lo > 0.006 && hi < 0.011);

    let scene = builtin_mask("aircraft").unwrap();
    let run = run_simulation(
        &scene,
        &SourceConfig::default(),
        &DetectorConfig::default(),
        &ChannelModel::honest(scene.clone()),
        12,
        10_000,
        &RunOptions::default(),
    )
    .unwrap();
    let report = tally_errors(&run.events).unwrap();
    assert_eq!(report.n_detected, 10_000);
    assert!(
        (0.006..=0.011).contains(&report.average_error),
        "{}",
        report.average_error
    );
    let per_channel: u64 = report.channels.iter().map(|c| c.total).sum();
    assert_eq!(per_channel, report.n_detected);
}

// ---- golden files ------------------------------------------------------

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

const GOLDEN_MASK: &str = "P1\n8 6\n00011000\n00111100\n01111110\n11111111\n00100100\n00100100\n";

/// Set `QSI_UPDATE_GOLDEN=1` to rewrite the golden bundle.
#[test]
fn honest_bundle_matches_golden_files() {
    let scene = parse_pbm(GOLDEN_MASK).unwrap();
    let run = run_simulation(
        &scene,
        &SourceConfig::default(),
        &DetectorConfig {
            pbs_extinction: 0.05,
            detection_efficiency: 0.9,
        },
        &ChannelModel::honest(scene.clone()),
        20_130_601,
        60,
        &RunOptions::default(),
    )
    .unwrap();
    let report = tally_errors(&run.events).unwrap();
    let verdict = security_verdict(&report);
    let doc = ImagingReport::new(
        &run,
        &report,
        &verdict,
        serde_json::json!({"scene": "golden"}),
        None,
    );
    let images = reconstruct_image(&run);

    let fresh = tempfile::tempdir().unwrap();
    write_bundle(fresh.path(), &doc, &run, &images).unwrap();
    assert_eq!(
        events_csv(&run).lines().count() as u64,
        run.frames_emitted + 1
    );

    let golden = golden_dir();
    if std::env::var_os("QSI_UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(&golden).unwrap();
        for entry in fs::read_dir(fresh.path()).unwrap() {
            let entry = entry.unwrap();
            fs::copy(entry.path(), golden.join(entry.file_name())).unwrap();
        }
    }
    let mut names: Vec<_> = fs::read_dir(fresh.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        let got = fs::read(fresh.path().join(&name)).unwrap();
        let want =
            fs::read(golden.join(&name)).unwrap_or_else(|_| panic!("missing golden {name:?}"));
        assert!(got == want, "{name:?} differs from golden copy");
    }

    // the JSON parses and round-trips
    let text = fs::read_to_string(fresh.path().join("report.json")).unwrap();
    let back: ImagingReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, doc);
}

//! End-to-end acceptance checks. Each test covers one numbered criterion
//! and prints a single pass/fail line (visible with `--nocapture`, or in
//! the failure report).

use phasetrack::estimator;
use phasetrack::lab::{self, NoiseModel, Scenario};
use phasetrack::optics::{self, BandwidthModel, Quadrature, SqueezedBeam};
use phasetrack::sde::{self, NoiseDraw, OuParams, ShapingFilterState};
use phasetrack::stats;

const KAPPA: f64 = 1.9e4;
const LAMBDA: f64 = 5.9e4;

fn verdict(n: usize, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {n} ({name}): {} [{detail}]",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn scenario(beam: SqueezedBeam, dt: f64, duration: f64, trials: usize, seed: u64) -> Scenario {
    let ou = OuParams::new(KAPPA, LAMBDA).unwrap();
    Scenario {
        ou,
        beam,
        bw: None,
        noise_model: NoiseModel::FullSine,
        dt,
        duration,
        warmup: 5.0 / LAMBDA,
        trials,
        master_seed: seed,
    }
}

#[test]
fn criterion_01_coherent_limit_reproduction() {
    let start = std::time::Instant::now();
    let sc = scenario(
        SqueezedBeam::new(1e6, 0.0, 0.0, 1.0).unwrap(),
        1e-8,
        2e-3,
        15,
        101,
    );
    let rep = lab::monte_carlo(&sc).unwrap();
    let expect = estimator::sigma_s(1e6, KAPPA, LAMBDA, 1.0);
    let rel = (rep.sigma_s_sq_mean - expect).abs() / expect;
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        1,
        "coherent-limit reproduction",
        rel < 0.05 && elapsed < 120.0,
        &format!(
            "mc {} vs closed form {expect}, rel {rel:.4}, {elapsed:.1} s",
            rep.sigma_s_sq_mean
        ),
    );
}

#[test]
fn criterion_02_squeezing_enhancement() {
    // measured -3.2 dB / 4.9 dB squeezing at 85% detection efficiency
    let mut improvements = Vec::new();
    for (i, &a2) in [1e6, 2.5e6, 5e6, 1e7].iter().enumerate() {
        let beam = SqueezedBeam::from_db(a2, -3.2, 4.9, 0.85).unwrap();
        let sc = scenario(beam, 1e-8, 2e-3, 15, 200 + i as u64);
        let rep = lab::monte_carlo(&sc).unwrap();
        improvements.push(rep.improvement_vs_csl);
    }
    let mean = stats::mean(&improvements);
    verdict(
        2,
        "squeezing enhancement vs coherent limit",
        (0.09..=0.21).contains(&mean),
        &format!("mean improvement {mean:.4}, per-point {improvements:?}"),
    );
}

#[test]
fn criterion_03_optimal_squeezing_level() {
    let (_, db) = estimator::optimal_squeezing(1e6, KAPPA, LAMBDA, 0.0).unwrap();
    verdict(
        3,
        "optimal squeezing level",
        (-db - 7.0).abs() <= 1.0,
        &format!("{:.2} dB of squeezing", -db),
    );
}

#[test]
fn criterion_04_interior_minimum_vs_first_order() {
    // squeezing 0-12 dB: the first-order trace decreases monotonically,
    // the self-consistent trace turns back up
    let a2 = 1e6;
    let n = 49;
    let mut first_order = Vec::with_capacity(n);
    let mut full = Vec::with_capacity(n);
    for k in 0..n {
        let db = 12.0 * k as f64 / (n - 1) as f64;
        let r = db / 10.0 * std::f64::consts::LN_10 / 2.0;
        first_order.push(estimator::sigma_s(a2, KAPPA, LAMBDA, (-2.0 * r).exp()));
        full.push(
            estimator::predict(a2, KAPPA, LAMBDA, r, r)
                .unwrap()
                .sigma_s_sq,
        );
    }
    let monotone = first_order.windows(2).all(|w| w[1] < w[0]);
    let (argmin, _) = full
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let interior = argmin > 0 && argmin < n - 1;
    verdict(
        4,
        "interior minimum vs first-order theory",
        monotone && interior,
        &format!(
            "first-order monotone: {monotone}, self-consistent argmin at {:.2} dB",
            12.0 * argmin as f64 / (n - 1) as f64
        ),
    );
}

fn bandwidth_rows() -> Vec<lab::BandwidthRow> {
    let beam = SqueezedBeam::from_db(1e6, -3.2, 4.9, 1.0).unwrap();
    let sc = scenario(beam, 1e-8, 2e-3, 15, 1);
    let alphas: Vec<f64> = (0..10).map(|k| 1e6 * 10f64.powf(k as f64 / 9.0)).collect();
    lab::bandwidth_comparison(&sc, &alphas).unwrap()
}

#[test]
fn criterion_05_finite_bandwidth_gap() {
    let rows = bandwidth_rows();
    let worst = rows
        .iter()
        .max_by(|a, b| a.rel_gap.total_cmp(&b.rel_gap))
        .unwrap();
    verdict(
        5,
        "finite-bandwidth MSE gap below 3%",
        rows.iter().all(|r| r.rel_gap < 0.03),
        &format!(
            "worst gap {:.4} at alpha_sq {:.3e}",
            worst.rel_gap, worst.alpha_sq
        ),
    );
}

#[test]
fn criterion_06_photon_flux_share() {
    let rows = bandwidth_rows();
    let worst = rows
        .iter()
        .max_by(|a, b| a.flux_share.total_cmp(&b.flux_share))
        .unwrap();
    verdict(
        6,
        "squeezing photon-flux share at most 7%",
        rows.iter().all(|r| r.flux_share <= 0.07),
        &format!(
            "worst share {:.4} at alpha_sq {:.3e}",
            worst.flux_share, worst.alpha_sq
        ),
    );
}

#[test]
fn criterion_07_smoother_halves_filter_mse() {
    // operating points with small epsilon
    let mut closed_ok = true;
    let mut detail = String::new();
    for &a2 in &[5e6, 1e7] {
        let p = estimator::predict(a2, KAPPA, LAMBDA, 0.0, 0.0).unwrap();
        assert!(p.epsilon <= 0.2);
        let ratio = p.sigma_s_sq / p.sigma_f_sq;
        closed_ok &= (0.45..=0.55).contains(&ratio);
        detail.push_str(&format!(
            "closed-form ratio {ratio:.4} (eps {:.3}); ",
            p.epsilon
        ));
    }
    let sc = scenario(
        SqueezedBeam::new(5e6, 0.0, 0.0, 1.0).unwrap(),
        1e-8,
        2e-3,
        15,
        700,
    );
    let rep = lab::monte_carlo(&sc).unwrap();
    let mc_ratio = rep.sigma_s_sq_mean / rep.sigma_f_sq_mean;
    let mc_ok = (mc_ratio - 0.5).abs() / 0.5 <= 0.15;
    detail.push_str(&format!("mc ratio {mc_ratio:.4}"));
    verdict(
        7,
        "smoothing halves the filtered MSE",
        closed_ok && mc_ok,
        &detail,
    );
}

#[test]
fn criterion_08_time_scales() {
    let gamma = estimator::gain_whitened(1e6, KAPPA, LAMBDA, 1.0);
    let gamma_inv_us = 1e6 / gamma;
    let gamma_ok = (gamma_inv_us - 4.0).abs() / 4.0 <= 0.25;
    let sc = scenario(
        SqueezedBeam::new(1e6, 0.0, 0.0, 1.0).unwrap(),
        1e-8,
        8e-3,
        1,
        800,
    );
    let tr = lab::run_closed_loop(&sc, 0).unwrap();
    let rep = lab::autocorr_report(&tr, &sc).unwrap();
    let tau_sq_us = rep.tau_error_sq * 1e6;
    let tau_ok = (tau_sq_us - 2.0).abs() / 2.0 <= 0.5;
    verdict(
        8,
        "loop time scales",
        gamma_ok && tau_ok,
        &format!("1/gamma = {gamma_inv_us:.2} us, tau(error^2) = {tau_sq_us:.2} us"),
    );
}

#[test]
fn criterion_09_explicit_matches_fixed_point() {
    use rand::Rng;
    let mut rng = sde::trial_rng(900, 0);
    let mut worst: f64 = 0.0;
    let mut accepted = 0usize;
    while accepted < 100 {
        let kappa = 1e3 * 10f64.powf(2.0 * rng.random::<f64>());
        let lambda = 1e4 * 10f64.powf(rng.random::<f64>());
        let a2 = 1e5 * 10f64.powf(3.0 * rng.random::<f64>());
        let r_m = 0.6 * rng.random::<f64>();
        let r_p = r_m + 0.5 * rng.random::<f64>();
        // independent oracle: iterate the noise-level self-consistency
        let mut sf2 = estimator::sigma_f_whitened(a2, kappa, lambda, 1.0);
        if sf2 > 1.0 {
            continue;
        }
        for _ in 0..1000 {
            let r_bar = optics::effective_r(sf2, r_m, r_p).unwrap();
            sf2 = estimator::sigma_f_whitened(a2, kappa, lambda, r_bar);
        }
        let r_bar = optics::effective_r(sf2, r_m, r_p).unwrap();
        if estimator::epsilon(a2, kappa, lambda, r_bar) > 0.3 {
            continue;
        }
        accepted += 1;
        let g_fp = estimator::gain_whitened(a2, kappa, lambda, r_bar);
        let g = estimator::gain_explicit(a2, kappa, lambda, r_m, r_p);
        let sf = estimator::sigma_f_explicit(a2, kappa, lambda, r_m, r_p);
        worst = worst
            .max((g - g_fp).abs() / g_fp)
            .max((sf - sf2).abs() / sf2);
    }
    verdict(
        9,
        "explicit forms match fixed-point iteration",
        worst < 1e-10,
        &format!("worst relative deviation {worst:.3e} over 100 points"),
    );
}

#[test]
fn criterion_10_colored_noise_fidelity() {
    let (r_minus, r_plus) = (0.479, 3.09);
    let x = optics::pump_x(r_minus, r_plus).unwrap();
    let bw = BandwidthModel::new(2.8e5, x).unwrap();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (level, quad) in [
        (r_minus, Quadrature::Squeezed),
        (r_plus, Quadrature::AntiSqueezed),
    ] {
        let pole = match quad {
            Quadrature::Squeezed => bw.squeezing_pole(),
            Quadrature::AntiSqueezed => bw.antisqueezing_pole(),
        };
        let dt = 0.01 / pole;
        let seg = 4096usize;
        let mut filter = ShapingFilterState::new(pole, level).unwrap();
        let mut rng = sde::trial_rng(1000 + level.to_bits() % 7, 0);
        let mut welch = stats::WelchAccumulator::new(seg, dt);
        let mut buf = vec![0.0; seg];
        for _ in 0..4000 {
            for v in buf.iter_mut() {
                *v = filter.step(NoiseDraw {
                    value: sde::standard_normal(&mut rng),
                    dt,
                });
            }
            welch.add_segment(&buf);
        }
        // 20 frequencies spanning [0, 5 * pole]
        let bin = welch.omega(1);
        let psd = welch.finalize();
        for k in 0..20 {
            let omega = 5.0 * pole * k as f64 / 19.0;
            let j = (omega / bin).round() as usize;
            let expect = optics::spectrum(omega, level, &bw, quad);
            let rel = (psd[j] - expect).abs() / expect;
            worst = worst.max(rel);
            ok &= rel < 0.05;
        }
    }
    // pure squeezed pair: the two spectra multiply to one identically
    let r: f64 = 0.37;
    let (pm, pp) = ((-2.0 * r).exp(), (2.0 * r).exp());
    let xp = optics::pump_x(pm, pp).unwrap();
    let bwp = BandwidthModel::new(2.8e5, xp).unwrap();
    let mut purity_ok = true;
    for k in 0..=500 {
        let omega = k as f64 * 0.02 * bwp.delta_omega0;
        let prod = optics::spectrum(omega, pm, &bwp, Quadrature::Squeezed)
            * optics::spectrum(omega, pp, &bwp, Quadrature::AntiSqueezed);
        purity_ok &= (prod - 1.0).abs() < 1e-12;
    }
    verdict(
        10,
        "colored-noise spectral fidelity",
        ok && purity_ok,
        &format!("worst PSD deviation {worst:.4}, purity product exact: {purity_ok}"),
    );
}

#[test]
fn criterion_11_property_suite() {
    // stationary variance at 1e7 steps
    let p = OuParams::new(KAPPA, LAMBDA).unwrap();
    let dt = 1.0 / LAMBDA;
    let prop = sde::OuPropagator::new(&p, dt);
    let mut rng = sde::trial_rng(1100, 0);
    let mut x = p.stationary_variance().sqrt() * sde::standard_normal(&mut rng);
    let n = 10_000_000usize;
    let mut acc = 0.0;
    for _ in 0..n {
        x = prop.step(x, sde::standard_normal(&mut rng));
        acc += x * x;
    }
    let var = acc / n as f64;
    let var_ok = (var - p.stationary_variance()).abs() / p.stationary_variance() < 0.02;

    // halving dt leaves the Monte Carlo MSEs within 1%
    let beam = SqueezedBeam::new(1e6, 0.0, 0.0, 1.0).unwrap();
    let mut coarse = scenario(beam, 1e-8, 4e-3, 300, 1111);
    let rep_a = lab::monte_carlo(&coarse).unwrap();
    coarse.dt = 5e-9;
    let rep_b = lab::monte_carlo(&coarse).unwrap();
    let df = (rep_a.sigma_f_sq_mean - rep_b.sigma_f_sq_mean).abs() / rep_b.sigma_f_sq_mean;
    let ds = (rep_a.sigma_s_sq_mean - rep_b.sigma_s_sq_mean).abs() / rep_b.sigma_s_sq_mean;
    let dt_ok = df < 0.01 && ds < 0.01;

    // bit-exact replay
    let small = scenario(beam, 1e-8, 5e-4, 3, 1112);
    let replay_ok = lab::monte_carlo(&small).unwrap() == lab::monte_carlo(&small).unwrap();

    // the smoother is centered on the signal; the filter trails it
    let long = scenario(beam, 1e-8, 2e-3, 1, 1113);
    let tr = lab::run_closed_loop(&long, 0).unwrap();
    let lo = (long.warmup / long.dt).ceil() as usize;
    let phi = &tr.phi[lo..];
    let phi_f = &tr.phi_f[lo..];
    let phi_s = &tr.phi_s[lo..tr.phi.len() - 2000];
    let phi_for_s = &tr.phi[lo..tr.phi.len() - 2000];
    let lag_f = stats::cross_correlation_peak_lag(phi, phi_f, 700);
    let lag_s = stats::cross_correlation_peak_lag(phi_for_s, phi_s, 700);
    let lag_ok = lag_f > 100 && lag_s.abs() <= 30;

    verdict(
        11,
        "property suite",
        var_ok && dt_ok && replay_ok && lag_ok,
        &format!(
            "stationary var rel err {:.4}; dt-halving df {df:.4} ds {ds:.4}; replay {replay_ok}; \
             filter lag {lag_f} steps, smoother lag {lag_s} steps",
            (var - p.stationary_variance()).abs() / p.stationary_variance()
        ),
    );
}

use equicorr::enp_sim::{
    rho_hat_from_spectrum, run_cpv_sweep, run_gk_sweep, sample_enp_stream, EnpParams, SweepSpec,
};
use equicorr::linalg;
use equicorr::spectral::{kolmogorov_distance, levy_distance};
use equicorr::MpLaw;

fn sample(p: usize, n: usize, rho: f64, sigma: f64, seed: u64) -> equicorr::DataMatrix {
    sample_enp_stream(&EnpParams::new(p, n, rho, sigma, seed).unwrap(), 0).unwrap()
}

#[test]
fn kolmogorov_distance_shrinks_with_n() {
    // c = 0.2, rho = 0.3
    let law = MpLaw::new(0.2, 0.7).unwrap();
    let ks: Vec<f64> = [250, 500, 1000, 2000]
        .iter()
        .map(|&n| {
            let x = sample(n / 5, n, 0.3, 1.0, 21);
            kolmogorov_distance(&linalg::correlation_spectrum(&x).unwrap().esd(), &law)
        })
        .collect();
    assert!(ks[3] < ks[0], "{ks:?}");
    assert!(ks[3] < 0.03, "{ks:?}");
}

#[test]
fn levy_distance_to_mp_is_small() {
    let x = sample(300, 1500, 0.0, 1.0, 4);
    let esd = linalg::covariance_spectrum(&x).unwrap().esd();
    let law = MpLaw::new(0.2, 1.0).unwrap();
    let le = levy_distance(&esd, &law);
    assert!(le <= kolmogorov_distance(&esd, &law));
    assert!(le < 0.02, "{le}");
}

#[test]
fn trace_of_covariance_tracks_sigma2() {
    for sigma2 in [1.0, 4.0] {
        let x = sample(400, 1000, 0.5, f64::sqrt(sigma2), 8);
        let s = linalg::covariance_spectrum(&x).unwrap();
        assert!((s.mean() - sigma2).abs() < 0.05 * sigma2, "{}", s.mean());
    }
}

#[test]
fn rho_hat_estimates_rho() {
    for rho in [0.2, 0.6] {
        let x = sample(300, 600, rho, 1.0, 31);
        let est = rho_hat_from_spectrum(&linalg::correlation_spectrum(&x).unwrap());
        assert!((est - rho).abs() < 0.03, "rho {rho}: {est}");
    }
}

#[test]
fn sweeps_are_deterministic_and_ordered() {
    let spec = SweepSpec {
        n: 120,
        p_values: vec![60, 30, 60],
        rhos: vec![0.5, 0.0],
        t: Some(0.7),
        replications: 3,
        seed: 17,
    };
    let a = run_gk_sweep(&spec).unwrap();
    let b = run_gk_sweep(&spec).unwrap();
    assert_eq!(a, b);
    let cells: Vec<(usize, f64)> = a.iter().map(|r| (r.p, r.rho)).collect();
    assert_eq!(cells, vec![(30, 0.0), (30, 0.5), (60, 0.0), (60, 0.5)]);
    assert!(a
        .iter()
        .all(|r| r.error.is_none() && r.gk_stderr.is_finite()));
    let c = run_cpv_sweep(&spec).unwrap();
    assert_eq!(c.len(), 4);
    assert!(c.iter().all(|r| r.cpv_mean >= 0.0 && r.cpv_mean < 1.0));
}

#[test]
fn sweep_validation() {
    let mut spec = SweepSpec {
        n: 50,
        p_values: vec![10],
        rhos: vec![1.0],
        t: None,
        replications: 1,
        seed: 0,
    };
    assert!(run_gk_sweep(&spec).is_err());
    spec.rhos = vec![0.1];
    assert!(run_cpv_sweep(&spec).is_err(), "CPV sweep needs t");
    spec.replications = 0;
    assert!(run_gk_sweep(&spec).is_err());
}

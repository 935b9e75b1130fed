use equicorr::spectral::{kolmogorov_distance, levy_distance, StepDistribution};
use equicorr::{cpv_limit, gk_limit, ExtReal, MpLaw, Spectrum};
use equicorr_testkit as oracle;
use proptest::prelude::*;

fn integer_spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u8..6, 1..40).prop_map(|v| {
        let mut v: Vec<f64> = v.into_iter().map(f64::from).collect();
        if v.iter().all(|x| *x == 0.0) {
            v[0] = 1.0;
        }
        v
    })
}

fn continuous_spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, 1..60)
}

fn dyadic_t() -> impl Strategy<Value = f64> {
    (1u32..64).prop_map(|k| k as f64 / 64.0)
}

fn step() -> impl Strategy<Value = StepDistribution> {
    prop::collection::vec(-8i32..8, 1..15).prop_map(|v| {
        StepDistribution::empirical(&v.iter().map(|x| *x as f64 * 0.25).collect::<Vec<_>>())
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cpv_routes_agree_on_integer_spectra(v in integer_spectrum(), t in dyadic_t()) {
        let s = Spectrum::new(v).unwrap();
        let direct = s.cpv_fraction(t).unwrap();
        prop_assert_eq!(direct, s.cpv_fraction_via_threshold(t).unwrap());
        prop_assert_eq!(direct, oracle::cpv_bruteforce(s.eigenvalues(), t));
        prop_assert!(direct < 1.0);
    }

    #[test]
    fn cpv_routes_agree_on_continuous_spectra(v in continuous_spectrum(), t in 0.01f64..0.99) {
        let s = Spectrum::new(v).unwrap();
        let total = s.trace();
        let mut head = 0.0;
        let boundary = s.eigenvalues().iter().any(|x| { head += x; (head / total - t).abs() < 1e-12 });
        prop_assume!(!boundary);
        prop_assert_eq!(s.cpv_fraction(t).unwrap(), s.cpv_fraction_via_threshold(t).unwrap());
    }

    #[test]
    fn retention_is_scale_invariant(v in integer_spectrum(), t in dyadic_t(), k in prop::sample::select(vec![0.5, 2.0, 10.0, 0.125])) {
        let s = Spectrum::new(v).unwrap();
        let sk = s.scaled(k).unwrap();
        prop_assert_eq!(s.gk_fraction(), sk.gk_fraction());
        prop_assert_eq!(s.cpv_fraction(t).unwrap(), sk.cpv_fraction(t).unwrap());
    }

    #[test]
    fn generalized_inverse_is_bounded(v in integer_spectrum(), u in 1e-12f64..=1.0) {
        let s = Spectrum::new(v).unwrap();
        let g = s.g_step().unwrap();
        match g.generalized_inverse(u) {
            ExtReal::Finite(x) => {
                prop_assert!(x >= s.min_positive().unwrap());
                prop_assert!(x <= s.largest());
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn cpv_nondecreasing_in_t(v in continuous_spectrum(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let s = Spectrum::new(v).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(s.cpv_fraction(lo).unwrap() <= s.cpv_fraction(hi).unwrap());
    }

    #[test]
    fn levy_below_kolmogorov_and_symmetric(f in step(), g in step()) {
        let k = kolmogorov_distance(&f, &g);
        let le = levy_distance(&f, &g);
        prop_assert!(le <= k + 1e-12);
        prop_assert_eq!(k, kolmogorov_distance(&g, &f));
        prop_assert!((le - levy_distance(&g, &f)).abs() <= 2e-9);
        prop_assert!((0.0..=1.0).contains(&k));
    }

    #[test]
    fn metrics_vanish_on_identity(f in step()) {
        prop_assert_eq!(kolmogorov_distance(&f, &f), 0.0);
        prop_assert_eq!(levy_distance(&f, &f), 0.0);
    }

    #[test]
    fn kolmogorov_triangle(f in step(), g in step(), h in step()) {
        let fh = kolmogorov_distance(&f, &h);
        prop_assert!(fh <= kolmogorov_distance(&f, &g) + kolmogorov_distance(&g, &h) + 1e-12);
    }

    #[test]
    fn mp_cdf_monotone_and_scaled(c in 0.01f64..20.0, s2 in 0.1f64..10.0, x in 0.0f64..60.0, dx in 0.0f64..1.0) {
        let law = MpLaw::new(c, s2).unwrap();
        prop_assert!(law.cdf(x) <= law.cdf(x + dx));
        prop_assert!(law.tail_mass(x) <= law.tail_mass(x + dx));
        let unit = MpLaw::standard(c).unwrap();
        prop_assert!((law.cdf(x) - unit.cdf(x / s2)).abs() < 1e-14);
        prop_assert!((law.tail_mass(x) - unit.tail_mass(x / s2)).abs() < 1e-14);
    }

    #[test]
    fn gk_limit_nonincreasing_in_rho(c in 0.01f64..20.0, a in 0.0f64..0.99, b in 0.0f64..0.99) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(gk_limit(c, hi).unwrap() <= gk_limit(c, lo).unwrap() + 1e-15);
        prop_assert!(gk_limit(c, lo).unwrap() < 0.5 + 1e-15);
    }

    #[test]
    fn cpv_limit_monotone(c in 0.01f64..20.0, rho in 0.0f64..0.95, t1 in 0.01f64..0.99, t2 in 0.01f64..0.99) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = cpv_limit(c, rho, lo).unwrap();
        let b = cpv_limit(c, rho, hi).unwrap();
        prop_assert!(a <= b + 1e-9, "{} > {}", a, b);
        if lo < rho {
            prop_assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn quantile_round_trip(c in 0.01f64..20.0, u in 0.0f64..1.0) {
        let law = MpLaw::standard(c).unwrap();
        let x = law.quantile(u).unwrap();
        prop_assert!(law.cdf(x) >= u - 1e-12);
        if x > law.lower_edge() + 1e-9 {
            prop_assert!(law.cdf(x - 1e-9) <= u + 1e-9);
        }
    }
}

use proptest::prelude::*;
use refchoice_core::cml::{Cml, PairingPolicy};
use refchoice_core::datamodel::{load_dataset, write_dataset};
use refchoice_core::design::{assign_tasks, generate_bank, DesignSpec};
use refchoice_core::modelspec::preset_params;
use refchoice_core::simulate::{simulate_dataset, SimConfig};
use refchoice_core::wtp::{discount_rate, EvaluationPoint, Profile, Wtp, WtpAttribute};
use refchoice_core::Model;

fn annuity(i: f64, n: f64) -> f64 {
    (1.0 - (1.0 + i).powf(-n)) / i
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discount_rate_inverts_the_annuity(annual in 0.005f64..2.0, a in 10.0f64..1000.0, years in 1u32..30) {
        let i = (1.0 + annual).powf(1.0 / 52.0) - 1.0;
        let p = a * annuity(i, 52.0 * years as f64);
        let got = discount_rate(p, a, years).unwrap();
        prop_assert!((got - annual).abs() < 1e-4 * (1.0 + annual), "{got} vs {annual}");
    }

    #[test]
    fn discount_rate_falls_as_wtp_rises(p in 1_000.0f64..70_000.0, bump in 1.0f64..5_000.0) {
        let lo = discount_rate(p, 100.0, 15).unwrap();
        let hi = discount_rate((p + bump).min(77_999.0), 100.0, 15).unwrap();
        prop_assert!(hi < lo);
    }

    #[test]
    fn linear_wtp_scales_with_the_change(change in -500.0f64..500.0, ev_price in 10.5f64..20.0) {
        let m = Model::preset("model1").unwrap();
        let p = preset_params("model1").unwrap();
        let calc = Wtp::new(&m, &p).unwrap();
        let latent = calc.latent_means(&Profile::none());
        let mut point = EvaluationPoint::default();
        point.ev.price_lacs = ev_price;
        let unit = calc.wtp(&point, WtpAttribute::Fuel, 1.0, &latent).unwrap();
        let scaled = calc.wtp(&point, WtpAttribute::Fuel, change, &latent).unwrap();
        prop_assert!((scaled - change * unit).abs() < 1e-12 * (1.0 + scaled.abs()));
    }

    #[test]
    fn curved_price_makes_wtp_grow_with_the_premium(lo in 10.5f64..14.0, gap in 0.5f64..6.0) {
        // With price curvature below one the price marginal shrinks as the EV
        // premium grows, so any attribute's WTP rises.
        let m = Model::preset("model2").unwrap();
        let p = preset_params("model2").unwrap();
        let calc = Wtp::new(&m, &p).unwrap();
        let latent = calc.latent_means(&Profile::none());
        let at = |price: f64| {
            let mut point = EvaluationPoint::default();
            point.ev.price_lacs = price;
            calc.wtp(&point, WtpAttribute::FastCharge, -10.0, &latent).unwrap()
        };
        prop_assert!(at(lo + gap) > at(lo));
    }

    #[test]
    fn pivoted_tasks_respect_comparison_relations(seed in any::<u64>(), price in 0.5f64..100.0, id in 1u32..100_000) {
        let bank = generate_bank(&DesignSpec::default(), seed).unwrap();
        let tasks = assign_tasks(&bank, id, price, 3, seed).unwrap();
        prop_assert_eq!(tasks.len(), 3);
        for t in &tasks {
            prop_assert!(t.validate(id).is_ok());
            prop_assert!((t.ev.price_lacs / price - 1.0 - bank.iter().find(|s| s.scenario_id == t.task_id).unwrap().ev_price_markup).abs() < 1e-12);
        }
        let mut ids: Vec<u32> = tasks.iter().map(|t| t.task_id).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), 3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulated_data_round_trips_through_csv(seed in any::<u64>(), n in 1usize..40) {
        let m = Model::preset("model3").unwrap();
        let p = preset_params("model3").unwrap();
        let ds = simulate_dataset(&m, &p, &SimConfig { n_respondents: n, seed, ..SimConfig::default() }).unwrap();
        for r in &ds.respondents {
            prop_assert!(r.validate().is_ok());
            prop_assert_eq!(r.tasks.len(), 3);
        }
        let dir = tempfile::tempdir().unwrap();
        let (rf, tf) = (dir.path().join("r.csv"), dir.path().join("t.csv"));
        write_dataset(&ds, &rf, &tf).unwrap();
        let back = load_dataset(&rf, &tf).unwrap();
        prop_assert_eq!(&back, &ds);

        // The objective is a finite sum of log-probabilities.
        let theta = m.dense(&p).unwrap();
        for policy in [PairingPolicy::Standard, PairingPolicy::Extended] {
            let cml = Cml::new(&m, &back, policy).unwrap();
            let contributions = cml.contributions(&theta).unwrap();
            prop_assert!(contributions.iter().all(|c| c.is_finite() && *c < 0.0));
            let total: f64 = contributions.iter().sum();
            prop_assert!((total - cml.loglik(&theta).unwrap()).abs() < 1e-8 * total.abs());
        }
    }
}

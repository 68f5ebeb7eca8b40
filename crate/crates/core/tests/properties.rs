use std::sync::Arc;

use jdcalc_core::experiment::ExperimentConfig;
use jdcalc_core::fields::{catalog_lookup, constant, ScalarSde};
use jdcalc_core::invariantkernel::{step_continuous, DensityGrid, JumpMap, Workspace};
use jdcalc_core::itowentzell::rhs_accumulate;
use jdcalc_core::mollifier::{Mollifier, MollifierSpec};
use jdcalc_core::noise::{refine_wiener, sample_wiener, NoisePath, TimeGrid};
use jdcalc_core::randomfield::FieldContext;
use jdcalc_core::sde::integrate;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_preserves_coarse_increments(
        n in 1usize..24,
        factor in 2usize..6,
        dim in 1usize..3,
        seed in any::<u64>(),
        salt in any::<u64>(),
    ) {
        let coarse = sample_wiener(TimeGrid::new(1.5, n).unwrap(), dim, seed).unwrap();
        let fine = refine_wiener(&coarse, factor, salt).unwrap();
        prop_assert_eq!(fine.grid().n_steps(), n * factor);
        for j in 0..n {
            for k in 0..dim {
                let sum: f64 = (0..factor).map(|i| fine.increment(j * factor + i, k)).sum();
                prop_assert!((sum - coarse.increment(j, k)).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn jump_records_add_exactly(seed in any::<u64>(), n in 4usize..64) {
        let p = catalog_lookup("state-jump").unwrap();
        let noise = NoisePath::sample(TimeGrid::new(p.t_end, n).unwrap(), 1, &p.measure, seed).unwrap();
        let path = integrate(&p.x0, p.state.as_ref(), &noise).unwrap();
        prop_assert_eq!(path.jumps().len(), noise.jumps().len());
        for r in path.jumps() {
            prop_assert_eq!(r.post[0], r.pre[0] + r.jump[0]);
        }
    }

    #[test]
    fn per_event_terms_match_the_direct_jump(seed in any::<u64>()) {
        for name in ["pure-jump-quadratic", "mixed", "state-jump", "jump-scaling"] {
            let p = catalog_lookup(name).unwrap();
            let noise = NoisePath::sample(TimeGrid::new(p.t_end, 32).unwrap(), p.dim_w(), &p.measure, seed).unwrap();
            let path = integrate(&p.x0, p.state.as_ref(), &noise).unwrap();
            let ctx = FieldContext::new(p.field.as_ref(), &noise).unwrap();
            let b = rhs_accumulate(&path, &ctx, p.state.as_ref()).unwrap();
            for e in &b.events {
                let err = (e.state_jump + e.field_jump - e.direct).abs() / e.direct.abs().max(1.0);
                prop_assert!(err <= 1e-12, "{}: event {} error {}", name, e.event, err);
            }
        }
    }

    #[test]
    fn continuous_step_conserves_mass(
        a in -1.0f64..1.0,
        b in 0.05f64..1.0,
        z in -3.0f64..3.0,
        sd in 0.3f64..0.8,
    ) {
        let coeffs = ScalarSde { drift: constant(a), diffusion: constant(b), jump: Arc::new(|_, _, _| [0.0; 3]) };
        let mut g = DensityGrid::truncated_gaussian(-5.0, 5.0, 400, 0.0, sd).unwrap();
        let dx = g.dx();
        let dt = (0.25 * dx * dx / (b * b)).min(0.5 * dx / a.abs().max(1e-12)) * 0.9;
        let before = g.mass();
        let mut ws = Workspace::default();
        let out = step_continuous(&mut g, &coeffs, 0.0, dt, &[z * dt.sqrt()], &mut ws).unwrap();
        prop_assert!(out.mass_drift.abs() <= 1e-14);
        prop_assert!((g.mass() - before).abs() <= 1e-13);
        prop_assert!(g.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn monotone_affine_jump_roundtrips(s in -0.8f64..2.0, c in -0.5f64..0.5, mark in 0.1f64..1.0) {
        let coeffs = ScalarSde {
            drift: constant(0.0),
            diffusion: constant(0.0),
            jump: Arc::new(move |_, x, m| [m[0] * (s * x + c), m[0] * s, 0.0]),
        };
        let g = DensityGrid::truncated_gaussian(-3.0, 3.0, 128, 0.0, 0.5).unwrap();
        let marks = [mark];
        let map = JumpMap::with_mark(&coeffs, 0.0, &marks, "affine");
        prop_assert!(map.roundtrip_error(&g).unwrap() <= 1e-10);
        let y = 0.37;
        let x = map.forward(y);
        prop_assert!((map.inverse(x).unwrap() - y).abs() <= 1e-10);
        prop_assert!((map.inverse_jacobian(x).unwrap() - 1.0 / (1.0 + mark * s)).abs() <= 1e-9);
    }

    #[test]
    fn mollifier_reproduces_affine_functions(
        slope in -5.0f64..5.0,
        shift in -5.0f64..5.0,
        x in -3.0f64..3.0,
        eps in 1e-3f64..0.5,
    ) {
        let m = Mollifier::new(MollifierSpec::with_epsilon(eps).unwrap()).unwrap();
        let f = move |y: f64| slope * y + shift;
        let v = m.mollify(&f, x).unwrap();
        prop_assert!((v - f(x)).abs() <= 1e-12 * (1.0 + f(x).abs() + slope.abs()));
        let d = m.mollify_derivative(&f, x).unwrap();
        prop_assert!((d - slope).abs() <= 1e-9 * (1.0 + slope.abs()));
    }

    #[test]
    fn config_accepts_valid_numbers(
        n_steps in 1usize..100_000,
        seeds in 1usize..1000,
        t_end in 0.01f64..10.0,
        base_seed in any::<u64>(),
    ) {
        let text = format!(
            "suite = iw-verify\npreset = mixed\nn_steps = {n_steps}\nseeds = {seeds}\nt_end = {t_end}\nbase_seed = {base_seed}\noutput_dir = out\n"
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg.n_steps, Some(n_steps));
        prop_assert_eq!(cfg.seeds, Some(seeds));
        prop_assert_eq!(cfg.t_end, Some(t_end));
        prop_assert_eq!(cfg.base_seed, base_seed);
    }

    #[test]
    fn config_rejects_non_positive_steps(v in -1000i64..=0) {
        let text = format!("suite = iw-verify\npreset = mixed\nn_steps = {v}\noutput_dir = out\n");
        prop_assert!(ExperimentConfig::parse(&text).is_err());
    }
}

use nalm_core::evaluation::{sparsity_error_of, wilson_interval};
use nalm_core::landscape::{rmse_surface, SurfaceSpec};
use nalm_core::nalm::{clip_params, forward, init_params, Mode, ModuleKind, ModuleParams, ModuleSettings};
use nalm_core::training::{BetaSchedule, LambdaSchedule, RegTargets};
use nalm_core::Matrix;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = ModuleKind> {
    proptest::sample::select(ModuleKind::ALL.to_vec())
}

fn magnitude_input(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec((0.3f64..=5.0, any::<bool>()), n)
        .prop_map(|v| v.into_iter().map(|(m, neg)| if neg { -m } else { m }).collect())
}

fn run(params: &ModuleParams, settings: &ModuleSettings, x: &[f64], mode: Mode) -> f64 {
    forward(params, settings, &Matrix::from_rows(&[x]), mode)
        .unwrap()
        .0
        .get(0, 0)
}

proptest! {
    #[test]
    fn clip_is_idempotent_and_legal(kind in kind(), i in 1usize..5, seed: u64, scale in 0.5f64..4.0) {
        let mut p = init_params(kind, i, 2, seed).unwrap();
        p.scale(scale);
        if let Some(g) = p.gate.as_mut() {
            g.iter_mut().enumerate().for_each(|(k, v)| *v = scale * if k % 2 == 0 { 1.0 } else { -1.0 });
        }
        let once = clip_params(&p);
        prop_assert_eq!(clip_params(&once), once.clone());
        let (lo, hi) = kind.weight_range();
        prop_assert!(once.weights.as_slice().iter().all(|&w| (lo..=hi).contains(&w)));
        if let Some(imag) = &once.imag {
            prop_assert!(imag.as_slice().iter().all(|&w| (-1.0..=1.0).contains(&w)));
        }
        if let Some(g) = &once.gate {
            prop_assert!(g.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn nru_training_matches_eval_at_discrete_weights(
        codes in proptest::collection::vec(0usize..3, 1..5),
        x in magnitude_input(4),
    ) {
        let w: Vec<f64> = codes.iter().map(|&c| c as f64 - 1.0).collect();
        let p = ModuleParams::with_weights(ModuleKind::Nru, Matrix::column(&w)).unwrap();
        let s = ModuleSettings::default();
        let x = &x[..w.len()];
        let train = run(&p, &s, x, Mode::Training);
        let eval = run(&p, &s, x, Mode::Eval);
        prop_assert!((train - eval).abs() <= 1e-6, "{train} vs {eval}");
    }

    #[test]
    fn zero_weights_give_identity(i in 1usize..6, x in magnitude_input(5)) {
        let x = &x[..i];
        let s = ModuleSettings::default();
        let nmu = ModuleParams::with_weights(ModuleKind::Nmu, Matrix::zeros(i, 1)).unwrap();
        let nau = ModuleParams::with_weights(ModuleKind::Nau, Matrix::zeros(i, 1)).unwrap();
        prop_assert_eq!(run(&nmu, &s, x, Mode::Eval), 1.0);
        prop_assert_eq!(run(&nau, &s, x, Mode::Eval), 0.0);
    }

    #[test]
    fn nmru_value_times_reciprocal_is_one(x in magnitude_input(2), pick in 0usize..2) {
        let mut w = vec![0.0; 4];
        w[pick] = 1.0;
        w[pick + 2] = 1.0;
        let p = ModuleParams::with_weights(ModuleKind::Nmru, Matrix::column(&w)).unwrap();
        let exact = ModuleSettings { eps: 0.0, ..ModuleSettings::default() };
        let y = run(&p, &exact, &x, Mode::Eval);
        prop_assert!((y - 1.0).abs() <= 1e-15, "{y}");
        let y = run(&p, &ModuleSettings::default(), &x, Mode::Eval);
        prop_assert!((y - 1.0).abs() <= 1e-6, "{y}");
    }

    #[test]
    fn beta_is_non_decreasing_and_capped(start_exp in -12i32..-6, span in 0i32..5, step in 1u64..20_000, a in 0u64..200_000, b in 0u64..200_000) {
        let start = 10f64.powi(start_exp);
        let end = start * 10f64.powi(span);
        let s = BetaSchedule { start, end, growth: 10.0, step, targets: RegTargets::default() };
        let (a, b) = (a.min(b), a.max(b));
        prop_assert!(s.beta(a) <= s.beta(b));
        prop_assert!(s.beta(b) <= end);
    }

    #[test]
    fn lambda_ramp_is_clamped_affine(lambda_hat in 0.1f64..20.0, start in 0u64..50_000, len in 1u64..50_000, i in 0u64..150_000) {
        let s = LambdaSchedule { lambda_hat, start, end: start + len, penalize_zero: false, targets: RegTargets::default() };
        let v = s.lambda(i);
        if i <= start {
            prop_assert_eq!(v, 0.0);
        } else if i >= start + len {
            prop_assert_eq!(v, lambda_hat);
        } else {
            let want = lambda_hat * (i - start) as f64 / len as f64;
            prop_assert!((v - want).abs() <= 1e-12 * lambda_hat);
        }
    }

    #[test]
    fn sparsity_error_ignores_order_and_sign(mut w in proptest::collection::vec(-1.0f64..=1.0, 1..10), flips: Vec<bool>, rot in 0usize..10) {
        let base = sparsity_error_of(w.iter().copied());
        prop_assert!((0.0..=0.5).contains(&base));
        for (v, f) in w.iter_mut().zip(flips) {
            if f {
                *v = -*v;
            }
        }
        let n = w.len();
        w.rotate_left(rot % n);
        prop_assert_eq!(sparsity_error_of(w), base);
    }

    #[test]
    fn wilson_interval_brackets_the_rate(trials in 1usize..200, frac in 0.0f64..=1.0) {
        let successes = (frac * trials as f64).round() as usize;
        let (lo, hi) = wilson_interval(successes, trials).unwrap();
        let p = successes as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }
}

#[test]
fn coarse_surface_is_a_subset_of_a_finer_one() {
    for kind in [ModuleKind::RealNpu, ModuleKind::Nru, ModuleKind::Nmru] {
        let mut coarse = SurfaceSpec::for_kind(kind).unwrap();
        coarse.resolution = 11;
        let mut fine = coarse;
        fine.resolution = 21;
        let c = rmse_surface(&coarse).unwrap();
        let f = rmse_surface(&fine).unwrap();
        for (i, row) in c.chunks(11).enumerate() {
            for (j, p) in row.iter().enumerate() {
                let q = f[2 * i * 21 + 2 * j];
                assert_eq!((p.w1, p.w2), (q.w1, q.w2));
                assert_eq!(p.rmse.to_bits(), q.rmse.to_bits(), "{kind} at ({}, {})", p.w1, p.w2);
            }
        }
    }
}

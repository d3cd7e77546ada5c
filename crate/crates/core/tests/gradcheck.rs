//! Finite-difference validation of the full backward stack on small
//! scenes (the acceptance suite runs the wider version).

mod common;

use claysplat_core::optimize::RawParams;
use common::{flatten_all, grads_agree, unflatten_all, FrozenPipeline};

fn check_scene(seed: u64) -> (usize, usize, f64) {
    let mut pipe = FrozenPipeline::build(seed, 3, 12);
    let raw = RawParams::from_scene(&pipe.scene);
    let env_params = pipe.env.base.clone();
    let (raw_grads, env_grads) = pipe.analytic_gradients(&raw, &env_params);

    let mut analytic = flatten_all(&raw_grads, &pipe.env.base.clone());
    let n_env = env_params.data.len();
    let base_len = analytic.len() - n_env;
    analytic.truncate(base_len);
    analytic.extend_from_slice(&env_grads);

    let theta0 = flatten_all(&raw, &env_params);
    let env_dims = (env_params.width, env_params.height);
    let h = 1e-4;
    let mut checked = 0;
    let mut failures = 0;
    let mut worst = 0.0f64;
    for i in 0..theta0.len() {
        let mut plus = theta0.clone();
        plus[i] += h;
        let (rp, ep) = unflatten_all(&raw, env_dims, &plus);
        let lp = pipe.loss(&rp, &ep);
        let mut minus = theta0.clone();
        minus[i] -= h;
        let (rm, em) = unflatten_all(&raw, env_dims, &minus);
        let lm = pipe.loss(&rm, &em);
        let fd = (lp - lm) / (2.0 * h);
        checked += 1;
        if !grads_agree(analytic[i], fd, 1e-3, 1e-6) {
            failures += 1;
            let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs());
            worst = worst.max(rel);
            if failures <= 5 {
                eprintln!(
                    "param {i}: analytic {:+.8e} fd {:+.8e} rel {:.2e}",
                    analytic[i], fd, rel
                );
            }
        }
    }
    (checked, failures, worst)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut total = 0;
    let mut failed = 0;
    for seed in 0..3 {
        let (checked, failures, worst) = check_scene(seed * 31 + 7);
        total += checked;
        failed += failures;
        assert_eq!(
            failures, 0,
            "seed {seed}: {failures}/{checked} partials disagree (worst rel {worst:.2e})"
        );
    }
    assert!(total > 500, "checked only {total} partials");
    let _ = failed;
}

use permlab_core::analysis::lemmas::{
    random_centered_quadratic, verify_prefix_sums, verify_z_moment, LemmaStatus,
};
use permlab_core::engine::{flipflop_bias_z, run_with_sequence, sgd_epoch, RunConfig};
use permlab_core::instances::{gen_hessian_smooth_1d, gen_nonconvex_pair, SmoothSpec};
use permlab_core::problems::{FiniteSum, StepContext, StepSizeRule};
use permlab_core::rng::Xoshiro256;
use permlab_core::schedulers::{shuffle, Permutation};
use permlab_core::search::{
    exhaustive_sequence_search, greedy_best_permutation, greedy_sequence_run,
    sorted_gradient_permutation, SequenceSearchBudget,
};
use permlab_core::Vector;

fn random_smooth(rng: &mut Xoshiro256) -> SmoothSpec {
    let n = 2 + rng.below(5) as usize;
    SmoothSpec {
        a: (0..n).map(|_| rng.uniform(1.0, 3.0)).collect(),
        c: (0..n).map(|_| rng.gaussian()).collect(),
        eps: (0..n).map(|_| rng.uniform(-0.2, 0.2)).collect(),
        shift: (0..n).map(|_| rng.gaussian()).collect(),
    }
}

#[test]
fn sorted_orders_bracket_the_minimizer() {
    let mut rng = Xoshiro256::seed_from_u64(21);
    for _ in 0..100 {
        let fs = gen_hessian_smooth_1d(&random_smooth(&mut rng)).unwrap();
        let n = fs.num_components();
        let x_star = fs.minimizer();
        let xs = Vector::from_element(1, x_star);
        let stats = fs.stats(x_star).unwrap();
        let ctx = StepContext::from_stats(n, 1, &stats, fs.l_hessian());
        let alpha = StepSizeRule::OneDimExponential.resolve(&ctx).unwrap();
        let sorted = sorted_gradient_permutation(&fs, x_star).unwrap();
        let p = sgd_epoch(&fs, &xs, &sorted, alpha).unwrap()[0] - x_star;
        let q = sgd_epoch(&fs, &xs, &sorted.reversed(), alpha).unwrap()[0] - x_star;
        let reach = n as f64 * alpha * stats.g;
        assert!(p >= -1e-15 && p <= reach, "p = {p}, reach {reach}");
        assert!(q <= 1e-15 && -q <= reach, "q = {q}, reach {reach}");
    }
}

#[test]
fn search_results_replay_exactly() {
    let mut rng = Xoshiro256::seed_from_u64(22);
    let fs = gen_hessian_smooth_1d(&random_smooth(&mut rng)).unwrap();
    let xs = Vector::from_element(1, fs.minimizer());
    let x0 = &xs + Vector::from_element(1, 2.0);
    let greedy = greedy_sequence_run(&fs, &x0, &xs, 0.05, 12).unwrap();
    let replay = run_with_sequence(
        &fs,
        &greedy.sequence,
        &RunConfig::new(0.05, 12, x0.clone()),
        &xs,
    )
    .unwrap();
    for (a, b) in greedy.sq_errors.iter().zip(&replay.sq_errors) {
        assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }

    let q = gen_nonconvex_pair(1.0).unwrap();
    let x0 = Vector::from_element(1, 1.0);
    let exact = exhaustive_sequence_search(
        &q,
        &x0,
        &Vector::zeros(1),
        0.3,
        8,
        &SequenceSearchBudget::default(),
    )
    .unwrap();
    let replay = run_with_sequence(
        &q,
        &exact.sequence,
        &RunConfig::new(0.3, 8, x0),
        &Vector::zeros(1),
    )
    .unwrap();
    for (a, b) in exact.sq_errors.iter().zip(&replay.sq_errors) {
        assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
    }
}

#[test]
fn greedy_epoch_beats_identity_and_random_orders() {
    let mut rng = Xoshiro256::seed_from_u64(23);
    for _ in 0..30 {
        let fs = gen_hessian_smooth_1d(&random_smooth(&mut rng)).unwrap();
        let n = fs.num_components();
        let xs = Vector::from_element(1, fs.minimizer());
        let x = &xs + Vector::from_element(1, rng.gaussian());
        let (_, end) = greedy_best_permutation(&fs, &x, &xs, 0.05).unwrap();
        let best = (end[0] - xs[0]).abs();
        for perm in [Permutation::identity(n), shuffle(&mut rng, n)] {
            let other = sgd_epoch(&fs, &x, &perm, 0.05).unwrap();
            assert!(best <= (other[0] - xs[0]).abs());
        }
    }
}

#[test]
fn prefix_of_length_one_has_closed_form() {
    let mut rng = Xoshiro256::seed_from_u64(24);
    let q = random_centered_quadratic(&mut rng, 10, 3, 0.5, 2.0).unwrap();
    let alpha = 0.1;
    let exact: f64 = (0..10)
        .map(|i| (q.linear_term(i) * alpha).norm_squared())
        .sum::<f64>()
        / 10.0;
    let gstar = (0..10).map(|i| q.linear_term(i).norm()).fold(0.0, f64::max);
    assert!(exact <= 18.0 * alpha * alpha * gstar * gstar * 10f64.ln());
    let report = verify_prefix_sums(20_000, &q, alpha, 3).unwrap();
    assert_eq!(report.status, LemmaStatus::Pass);
}

/// `E‖z‖²` over all `n!` orders drops by about `2⁴` when `α` halves in the
/// small-step regime.
#[test]
fn bias_moment_scales_with_fourth_power() {
    let mut rng = Xoshiro256::seed_from_u64(25);
    let q = random_centered_quadratic(&mut rng, 6, 2, 0.5, 2.0).unwrap();
    let perms = Permutation::all(6);
    let moment = |alpha: f64| {
        perms
            .iter()
            .map(|p| flipflop_bias_z(&q, p, alpha).unwrap().norm_squared())
            .sum::<f64>()
            / perms.len() as f64
    };
    let alpha = 0.002;
    let ratio = moment(alpha) / moment(alpha / 2.0);
    assert!((ratio - 16.0).abs() <= 1.0, "ratio {ratio}");

    let report = verify_z_moment(2_000, &q, 1.0 / (6.0 * 2.0), 4).unwrap();
    assert_eq!(report.status, LemmaStatus::Pass);
}

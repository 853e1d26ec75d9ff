//! Permutation-sequence search: sorted-gradient bracketing, per-epoch greedy
//! construction and exhaustive enumeration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::fit::{select_model, RateFit, RateModel};
use crate::engine::{epoch_affine_map, is_diverged, AffineEpochMap};
use crate::problems::{FiniteSum, QuadraticSum};
use crate::schedulers::Permutation;
use crate::{Error, Result, Vector};

/// Hard cap on `n` for anything that enumerates all `n!` orders.
pub const MAX_ENUMERATION_N: usize = 8;

/// Greedy decay is classified on epochs from this one onward.
pub const DEFAULT_TAIL_START: usize = 5;

/// A window whose errors shrink by less than this factor counts as flat.
pub const FLAT_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MinFinalError,
    MaxFinalError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSearchBudget {
    pub max_n: usize,
    pub max_epochs: usize,
    pub max_sequences: u128,
    pub objective: Objective,
}

impl Default for SequenceSearchBudget {
    fn default() -> Self {
        Self {
            max_n: MAX_ENUMERATION_N,
            max_epochs: 16,
            max_sequences: 1 << 24,
            objective: Objective::MinFinalError,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayClass {
    Exponential,
    Polynomial,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub class: DecayClass,
    /// First epoch (1-based) of the classification window.
    pub window_start: usize,
    pub exp_fit: Option<RateFit>,
    pub poly_fit: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub sequence: Vec<Permutation>,
    /// `‖x_n^k − x*‖²` after each epoch of `sequence`.
    pub sq_errors: Vec<f64>,
    pub final_x: Vector,
    pub decay: DecayReport,
    /// Number of complete sequences evaluated.
    pub evaluated: u128,
}

/// Classifies `errors[window_start-1..]` (epochs are 1-based) as flat,
/// exponential or polynomial. A window that does not shrink by
/// [`FLAT_RATIO`] or has too few positive values is flat; otherwise the
/// model with the smaller log-space residual wins.
pub fn classify_decay(errors: &[f64], window_start: usize) -> DecayReport {
    let start = window_start.max(1);
    let flat = DecayReport {
        class: DecayClass::Flat,
        window_start: start,
        exp_fit: None,
        poly_fit: None,
    };
    if start > errors.len() {
        return flat;
    }
    let ks: Vec<f64> = (start..=errors.len()).map(|k| k as f64).collect();
    let window = &errors[start - 1..];
    let Ok((model, poly, exp)) = select_model(&ks, window) else {
        return flat;
    };
    let first = window.iter().copied().find(|e| *e > 0.0).unwrap_or(0.0);
    let last = window.last().copied().unwrap_or(0.0);
    let class = if !(first > FLAT_RATIO * last) {
        DecayClass::Flat
    } else {
        match model {
            RateModel::Exp => DecayClass::Exponential,
            RateModel::Poly => DecayClass::Polynomial,
        }
    };
    DecayReport {
        class,
        window_start: start,
        exp_fit: Some(exp),
        poly_fit: Some(poly),
    }
}

fn require_1d<F: FiniteSum + ?Sized>(fs: &F) -> Result<()> {
    if fs.dim() != 1 {
        return Err(Error::Unsupported(format!(
            "sorted-gradient ordering needs a 1-D sum, got d = {}",
            fs.dim()
        )));
    }
    Ok(())
}

/// Orders components by `f_i'(x_ref)`, largest first; ties keep index order.
pub fn sorted_gradient_permutation<F: FiniteSum + ?Sized>(
    fs: &F,
    x_ref: f64,
) -> Result<Permutation> {
    require_1d(fs)?;
    let x = Vector::from_element(1, x_ref);
    let grads: Vec<f64> = (0..fs.num_components())
        .map(|i| fs.gradient(i, &x).map(|g| g[0]))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..grads.len()).collect();
    order.sort_by(|&a, &b| grads[b].total_cmp(&grads[a]));
    Permutation::from_zero_based(order)
}

fn enumeration_guard(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_N {
        return Err(Error::BudgetExceeded {
            estimated: factorial(n),
            allowed: factorial(MAX_ENUMERATION_N),
        });
    }
    Ok(())
}

/// `n!`, saturating.
pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).fold(1u128, |acc, k| acc.saturating_mul(k))
}

fn epoch_endpoint<F: FiniteSum + ?Sized>(
    fs: &F,
    x: &Vector,
    perm: &Permutation,
    alpha: f64,
) -> Vector {
    let mut y = x.clone();
    for &i in perm.as_slice() {
        fs.sgd_step(i, alpha, &mut y);
    }
    y
}

/// The order minimizing `‖endpoint − x*‖` over all `n!` orders, with the
/// lexicographically smallest order winning ties.
pub fn greedy_best_permutation<F: FiniteSum + ?Sized>(
    fs: &F,
    x: &Vector,
    x_star: &Vector,
    alpha: f64,
) -> Result<(Permutation, Vector)> {
    let n = fs.num_components();
    enumeration_guard(n)?;
    fs.check_point(x)?;
    fs.check_point(x_star)?;
    let mut perm = Permutation::identity(n);
    let mut best: Option<(Permutation, Vector, f64)> = None;
    loop {
        let y = epoch_endpoint(fs, x, &perm, alpha);
        let err = (&y - x_star).norm_squared();
        let better = match &best {
            None => true,
            Some((_, _, e)) => err < *e,
        };
        if better && err.is_finite() {
            best = Some((perm.clone(), y, err));
        }
        if !perm.advance_lexicographic() {
            break;
        }
    }
    match best {
        Some((p, y, _)) => Ok((p, y)),
        None => Err(Error::Unsupported("every order diverged".into())),
    }
}

/// Applies [`greedy_best_permutation`] for `epochs` consecutive epochs.
pub fn greedy_sequence_run<F: FiniteSum + ?Sized>(
    fs: &F,
    x0: &Vector,
    x_star: &Vector,
    alpha: f64,
    epochs: usize,
) -> Result<SearchResult> {
    let mut x = x0.clone();
    let mut sequence = Vec::with_capacity(epochs);
    let mut sq_errors = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let (p, y) = greedy_best_permutation(fs, &x, x_star, alpha)?;
        sq_errors.push((&y - x_star).norm_squared());
        sequence.push(p);
        x = y;
    }
    let evaluated = factorial(fs.num_components()).saturating_mul(epochs as u128);
    Ok(SearchResult {
        decay: classify_decay(&sq_errors, DEFAULT_TAIL_START),
        sequence,
        sq_errors,
        final_x: x,
        evaluated,
    })
}

/// `(n!)^K`, saturating.
pub fn sequence_count(n: usize, epochs: usize) -> u128 {
    let f = factorial(n);
    (0..epochs).fold(1u128, |acc, _| acc.saturating_mul(f))
}

fn check_budget(n: usize, epochs: usize, budget: &SequenceSearchBudget) -> Result<u128> {
    let estimated = sequence_count(n, epochs);
    if n > budget.max_n.min(MAX_ENUMERATION_N)
        || epochs > budget.max_epochs
        || estimated > budget.max_sequences
    {
        return Err(Error::BudgetExceeded {
            estimated,
            allowed: budget.max_sequences,
        });
    }
    if epochs == 0 {
        return Err(Error::InvalidParameter {
            name: "K",
            reason: "need at least one epoch".into(),
        });
    }
    Ok(estimated)
}

/// Epoch maps for every order of `0..n`, in lexicographic order.
pub struct MapTable {
    pub perms: Vec<Permutation>,
    pub maps: Vec<AffineEpochMap>,
}

impl MapTable {
    pub fn new(q: &QuadraticSum, alpha: f64) -> Result<Self> {
        enumeration_guard(q.n())?;
        let perms = Permutation::all(q.n());
        let maps = perms
            .iter()
            .map(|p| epoch_affine_map(q, p, alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { perms, maps })
    }
}

fn explore<S>(
    table: &MapTable,
    epochs: usize,
    prefix: &mut Vec<usize>,
    endpoints: &mut Vec<Vector>,
    state: &mut S,
    visit: &(impl Fn(&mut S, &[usize], &[Vector]) + Sync),
) {
    if prefix.len() == epochs {
        visit(state, prefix, endpoints);
        return;
    }
    for (idx, map) in table.maps.iter().enumerate() {
        let next = map.apply(endpoints.last().expect("x0 is always present"));
        prefix.push(idx);
        endpoints.push(next);
        explore(table, epochs, prefix, endpoints, state, visit);
        endpoints.pop();
        prefix.pop();
    }
}

/// Calls `visit(state, indices, endpoints)` for every sequence of `epochs`
/// orders.
///
/// `indices[k]` is the lexicographic rank of the order used in epoch `k+1`
/// (see [`Permutation::all`]) and `endpoints` holds `x0` followed by every
/// epoch endpoint. First-epoch branches run in parallel, each with its own
/// state from `init`; within a branch sequences arrive in lexicographic
/// order. The branch states are returned in branch order.
pub fn visit_sequences<S: Send>(
    q: &QuadraticSum,
    x0: &Vector,
    alpha: f64,
    epochs: usize,
    budget: &SequenceSearchBudget,
    init: impl Fn() -> S + Sync,
    visit: impl Fn(&mut S, &[usize], &[Vector]) + Sync,
) -> Result<(MapTable, Vec<S>)> {
    check_budget(q.n(), epochs, budget)?;
    q.check_point(x0)?;
    let table = MapTable::new(q, alpha)?;
    let states = (0..table.maps.len())
        .into_par_iter()
        .map(|first| {
            let mut state = init();
            let mut prefix = vec![first];
            let mut endpoints = vec![x0.clone(), table.maps[first].apply(x0)];
            explore(
                &table,
                epochs,
                &mut prefix,
                &mut endpoints,
                &mut state,
                &visit,
            );
            state
        })
        .collect();
    Ok((table, states))
}

/// Exact minimum (or maximum) of the final squared error over all `(n!)^K`
/// sequences, with the lexicographically smallest optimizer.
pub fn exhaustive_sequence_search(
    q: &QuadraticSum,
    x0: &Vector,
    x_star: &Vector,
    alpha: f64,
    epochs: usize,
    budget: &SequenceSearchBudget,
) -> Result<SearchResult> {
    q.check_point(x_star)?;
    let objective = budget.objective;
    let better = move |a: f64, b: f64| match objective {
        Objective::MinFinalError => a < b,
        Objective::MaxFinalError => a > b,
    };
    type Best = Option<(Vec<usize>, f64)>;
    let offer = |best: &mut Best, idx: &[usize], err: f64| {
        let take = match best {
            None => true,
            Some((_, e)) => better(err, *e),
        };
        if take {
            *best = Some((idx.to_vec(), err));
        }
    };
    let (table, branches) = visit_sequences(
        q,
        x0,
        alpha,
        epochs,
        budget,
        || -> Best { None },
        |best, idx, ends| {
            let last = ends.last().expect("non-empty");
            let err = if is_diverged(last) {
                f64::INFINITY
            } else {
                (last - x_star).norm_squared()
            };
            offer(best, idx, err);
        },
    )?;
    let mut best: Best = None;
    for (idx, err) in branches.into_iter().flatten() {
        offer(&mut best, &idx, err);
    }
    let (idx, _) = best.expect("at least one sequence");
    let sequence: Vec<Permutation> = idx.iter().map(|&i| table.perms[i].clone()).collect();
    let mut x = x0.clone();
    let mut sq_errors = Vec::with_capacity(epochs);
    for &i in &idx {
        x = table.maps[i].apply(&x);
        sq_errors.push((&x - x_star).norm_squared());
    }
    Ok(SearchResult {
        decay: classify_decay(&sq_errors, 1),
        sequence,
        sq_errors,
        final_x: x,
        evaluated: sequence_count(q.n(), epochs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_with_sequence, RunConfig};

    #[test]
    fn sorted_order_example() {
        // f_i = x²/2 + c_i x has gradient c_i at 0
        let q = QuadraticSum::scalar_with_linear(&[1.0; 3], &[3.0, -1.0, 2.0]).unwrap();
        let p = sorted_gradient_permutation(&q, 0.0).unwrap();
        assert_eq!(p.to_one_based(), vec![1, 3, 2]);
    }

    #[test]
    fn greedy_single_component_is_identity() {
        let q = QuadraticSum::scalar(&[1.0], &[0.5]).unwrap();
        let (p, _) =
            greedy_best_permutation(&q, &Vector::zeros(1), &Vector::zeros(1), 0.1).unwrap();
        assert_eq!(p, Permutation::identity(1));
    }

    #[test]
    fn greedy_pair_matches_closed_form() {
        // a = (1, 1), c = (1, −1): order (1,2) ends at α²·1, order (2,1) at −α²·1
        // up to O(α³); the closed form of one epoch from 0 is
        // −α Σ_i c_i Π_{j>i} (1 − α a_j).
        let a = [1.0, 1.0];
        let c = [1.0, -1.0];
        let alpha = 0.1;
        let q = QuadraticSum::scalar_with_linear(&a, &c).unwrap();
        let endpoint = |order: [usize; 2]| {
            let mut x = 0.0;
            for k in 0..2 {
                let tail: f64 = order[k + 1..].iter().map(|&j| 1.0 - alpha * a[j]).product();
                x -= alpha * c[order[k]] * tail;
            }
            x
        };
        let e12 = endpoint([0, 1]);
        let e21 = endpoint([1, 0]);
        let (p, y) =
            greedy_best_permutation(&q, &Vector::zeros(1), &Vector::zeros(1), alpha).unwrap();
        let chosen = if p.to_one_based() == vec![1, 2] {
            e12
        } else {
            e21
        };
        assert!((y[0] - chosen).abs() < 1e-15);
        assert!(chosen.abs() <= e12.abs().max(e21.abs()) + 1e-15);
        assert!((chosen.abs() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn enumeration_refuses_large_n() {
        let q = QuadraticSum::scalar(&[1.0; 9], &[0.0; 9]).unwrap();
        assert!(matches!(
            greedy_best_permutation(&q, &Vector::zeros(1), &Vector::zeros(1), 0.1),
            Err(Error::BudgetExceeded { .. })
        ));
        let small = QuadraticSum::scalar(&[1.0; 4], &[0.0; 4]).unwrap();
        let tight = SequenceSearchBudget {
            max_sequences: 1000,
            ..Default::default()
        };
        match exhaustive_sequence_search(
            &small,
            &Vector::zeros(1),
            &Vector::zeros(1),
            0.1,
            3,
            &tight,
        ) {
            Err(Error::BudgetExceeded { estimated, .. }) => assert_eq!(estimated, 13824),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exhaustive_single_component_is_plain_run() {
        let q = QuadraticSum::scalar(&[2.0], &[1.0]).unwrap();
        let x0 = Vector::from_element(1, 3.0);
        let xs = q.minimizer().unwrap();
        let r = exhaustive_sequence_search(&q, &x0, &xs, 0.1, 5, &Default::default()).unwrap();
        assert_eq!(r.evaluated, 1);
        let t = run_with_sequence(&q, &r.sequence, &RunConfig::new(0.1, 5, x0), &xs).unwrap();
        for (a, b) in r.sq_errors.iter().zip(&t.sq_errors) {
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }

    #[test]
    fn min_and_max_bracket_every_sequence() {
        let q = QuadraticSum::scalar_with_linear(&[1.0, 2.0, 0.5], &[1.0, -0.5, -0.5]).unwrap();
        let x0 = Vector::from_element(1, 0.2);
        let xs = q.minimizer().unwrap();
        let lo = exhaustive_sequence_search(&q, &x0, &xs, 0.1, 2, &Default::default()).unwrap();
        let hi_budget = SequenceSearchBudget {
            objective: Objective::MaxFinalError,
            ..Default::default()
        };
        let hi = exhaustive_sequence_search(&q, &x0, &xs, 0.1, 2, &hi_budget).unwrap();
        let (_, states) = visit_sequences(
            &q,
            &x0,
            0.1,
            2,
            &Default::default(),
            || (0usize, f64::INFINITY, 0.0f64),
            |s, _, ends| {
                let e = (ends[2][0] - xs[0]).powi(2);
                s.0 += 1;
                s.1 = s.1.min(e);
                s.2 = s.2.max(e);
            },
        )
        .unwrap();
        assert_eq!(states.iter().map(|s| s.0).sum::<usize>(), 36);
        let min = states.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let max = states.iter().map(|s| s.2).fold(0.0, f64::max);
        assert_eq!(*lo.sq_errors.last().unwrap(), min);
        assert_eq!(*hi.sq_errors.last().unwrap(), max);
    }

    #[test]
    fn decay_classes() {
        let exp: Vec<f64> = (1..=30).map(|k| (-0.5 * k as f64).exp()).collect();
        assert_eq!(classify_decay(&exp, 5).class, DecayClass::Exponential);
        let poly: Vec<f64> = (1..=30).map(|k| (k as f64).powi(-3)).collect();
        assert_eq!(classify_decay(&poly, 5).class, DecayClass::Polynomial);
        assert_eq!(classify_decay(&[0.0; 30], 5).class, DecayClass::Flat);
        assert_eq!(classify_decay(&[1e-3; 30], 5).class, DecayClass::Flat);
    }
}

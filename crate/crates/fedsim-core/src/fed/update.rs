//! Client-side local training, client sampling, and server aggregation.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::data::ClientShard;
use crate::error::{Error, Result};
use crate::fed::config::FLConfig;
use crate::fed::importance::ImportanceWeights;
use crate::nn::{ModelSpec, ParamVector};
use crate::rng::{derive_rng, stream};

/// Quadratic drift penalty `lambda * sum_i omega_i * (theta_i - anchor_i)^2`.
pub fn penalty_loss(
    lambda: f64,
    omega: &ImportanceWeights,
    params: &ParamVector,
    anchor: &ParamVector,
) -> Result<f64> {
    params.ensure_congruent(anchor)?;
    omega.ensure_congruent(params)?;
    let sum: f64 = omega
        .values()
        .iter()
        .zip(params.values().iter().zip(anchor.values()))
        .map(|(&w, (&p, &a))| {
            let d = p - a;
            w * d * d
        })
        .sum();
    Ok(lambda * sum)
}

/// Gradient of [`penalty_loss`]: `2 * lambda * omega .* (theta - anchor)`.
pub fn penalty_gradient(
    lambda: f64,
    omega: &ImportanceWeights,
    params: &ParamVector,
    anchor: &ParamVector,
) -> Result<ParamVector> {
    params.ensure_congruent(anchor)?;
    omega.ensure_congruent(params)?;
    let values = omega
        .values()
        .iter()
        .zip(params.values().iter().zip(anchor.values()))
        .map(|(&w, (&p, &a))| 2.0 * lambda * w * (p - a))
        .collect();
    ParamVector::from_values(params.layout().clone(), values)
}

/// Runs one client's local training from the global model.
///
/// `E` epochs of mini-batch SGD (batch size `B`, seeded shuffle per epoch,
/// last partial batch kept) on the local loss plus the drift penalty; the
/// penalty gradient joins the data gradient at every step. With the
/// strategy-resolved lambda equal to zero the penalty code is skipped
/// entirely, so the trajectory is bit-identical to a plain update. The
/// global parameters and importance weights are read-only throughout.
pub fn local_update(
    spec: &ModelSpec,
    global: &ParamVector,
    omega: &ImportanceWeights,
    shard: &ClientShard,
    cfg: &FLConfig,
    round_lr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ParamVector> {
    omega.ensure_congruent(global)?;
    if shard.train.is_empty() {
        return Err(Error::domain(format!(
            "client {} has no training examples",
            shard.client_id
        )));
    }

    let lambda = cfg.effective_lambda();
    let mut params = global.clone();
    let mut order: Vec<usize> = (0..shard.train.len()).collect();
    for _ in 0..cfg.local_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = shard.train.batch_of(chunk)?;
            let (_, mut grad) = spec.loss_and_grad(&params, &batch, true, Some(rng))?;
            if lambda > 0.0 {
                for ((g, &w), (&p, &a)) in grad
                    .values_mut()
                    .iter_mut()
                    .zip(omega.values())
                    .zip(params.values().iter().zip(global.values()))
                {
                    *g += 2.0 * lambda * w * (p - a);
                }
            }
            params = params.sgd_step(&grad, round_lr)?;
        }
    }
    Ok(params)
}

/// Uniformly samples `max(round(C * K), 1)` distinct clients for a round,
/// deterministic in `(seed, round)`.
pub fn sample_clients(clients: usize, fraction: f64, round: usize, seed: u64) -> Vec<usize> {
    let m = ((fraction * clients as f64).round() as usize)
        .max(1)
        .min(clients);
    let mut rng = derive_rng(seed, &[stream::SELECT, round as u64]);
    rand::seq::index::sample(&mut rng, clients, m).into_vec()
}

/// Data-size-weighted mean of client parameter vectors.
///
/// Computed as a weighted mean of deltas from the first update, so
/// aggregating identical vectors returns that vector exactly.
pub fn aggregate(updates: &[(ParamVector, usize)]) -> Result<ParamVector> {
    let (first, _) = updates
        .first()
        .ok_or_else(|| Error::domain("cannot aggregate zero client updates".to_string()))?;
    for (params, _) in updates.iter().skip(1) {
        first.ensure_congruent(params)?;
    }
    let total: u64 = updates.iter().map(|&(_, size)| size as u64).sum();
    if total == 0 {
        return Err(Error::domain(
            "aggregation weights sum to zero".to_string(),
        ));
    }

    let mut result = first.clone();
    let scale = 1.0 / total as f64;
    for coord in 0..result.len() {
        let base = first.values()[coord];
        let mut delta = 0.0;
        for (params, size) in updates {
            delta += *size as f64 * (params.values()[coord] - base);
        }
        result.values_mut()[coord] = base + delta * scale;
    }
    Ok(result)
}

/// Mean Euclidean distance from each local model to the global model.
pub fn weight_divergence(locals: &[ParamVector], global: &ParamVector) -> Result<f64> {
    if locals.is_empty() {
        return Err(Error::domain(
            "weight divergence needs at least one local model".to_string(),
        ));
    }
    let mut sum = 0.0;
    for local in locals {
        sum += local.l2_distance(global)?;
    }
    Ok(sum / locals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, dirichlet_partition};
    use crate::fed::config::Strategy;
    use crate::nn::{Layout, Segment};
    use crate::rng::derive_rng;
    use approx::assert_abs_diff_eq;

    fn one_param_layout() -> Layout {
        Layout::new(vec![Segment::new("w", vec![1])])
    }

    fn scalar(v: f64) -> ParamVector {
        ParamVector::from_values(one_param_layout(), vec![v]).unwrap()
    }

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let layout = Layout::new(vec![Segment::new("w", vec![4])]);
        let params =
            ParamVector::from_values(layout.clone(), vec![0.5, -1.0, 2.0, 0.1]).unwrap();
        let anchor =
            ParamVector::from_values(layout.clone(), vec![0.0, 0.5, 2.5, 0.1]).unwrap();
        let omega =
            ImportanceWeights::from_values(layout, vec![1.0, 0.25, 3.0, 0.0]).unwrap();
        let lambda = 0.7;

        let grad = penalty_gradient(lambda, &omega, &params, &anchor).unwrap();
        let step = 1e-6;
        for coord in 0..params.len() {
            let mut plus = params.clone();
            plus.values_mut()[coord] += step;
            let mut minus = params.clone();
            minus.values_mut()[coord] -= step;
            let fd = (penalty_loss(lambda, &omega, &plus, &anchor).unwrap()
                - penalty_loss(lambda, &omega, &minus, &anchor).unwrap())
                / (2.0 * step);
            let rel = (grad.values()[coord] - fd).abs() / fd.abs().max(1.0);
            assert!(rel < 1e-6, "coord {coord}: {} vs {fd}", grad.values()[coord]);
        }
    }

    /// One-parameter quadratic data loss `(theta - a)^2` with the shipped
    /// penalty gradient converges to the closed-form minimiser
    /// `(a + lambda * omega * anchor) / (1 + lambda * omega)`.
    #[test]
    fn quadratic_local_loss_reaches_closed_form_optimum() {
        let (a, anchor_value, lambda, omega_value) = (2.0, 0.5, 0.5, 3.0);
        let anchor = scalar(anchor_value);
        let omega =
            ImportanceWeights::from_values(one_param_layout(), vec![omega_value]).unwrap();

        let mut theta = scalar(anchor_value);
        for _ in 0..200 {
            let data_grad = 2.0 * (theta.values()[0] - a);
            let mut grad = penalty_gradient(lambda, &omega, &theta, &anchor).unwrap();
            grad.values_mut()[0] += data_grad;
            theta = theta.sgd_step(&grad, 0.1).unwrap();
        }
        let expected = (a + lambda * omega_value * anchor_value) / (1.0 + lambda * omega_value);
        assert_abs_diff_eq!(theta.values()[0], expected, epsilon = 1e-6);
    }

    #[test]
    fn lambda_zero_matches_plain_update_bit_for_bit() {
        let data = gen_synthetic(60, 5, 3, 21).unwrap();
        let (_, shards) = dirichlet_partition(&data, 2, 1.0, 21).unwrap();
        let spec = ModelSpec::new(5, vec![6], 3).unwrap();
        let global = spec.init_params(&mut derive_rng(21, &[1]));
        let omega = ImportanceWeights::identity(spec.layout());

        let fedcl_zero = FLConfig {
            strategy: Strategy::FedCl,
            lambda: 0.0,
            batch_size: 8,
            ..FLConfig::default()
        };
        let fedavg = FLConfig {
            strategy: Strategy::FedAvg,
            lambda: 0.5,
            batch_size: 8,
            ..FLConfig::default()
        };

        let a = local_update(
            &spec,
            &global,
            &omega,
            &shards[0],
            &fedcl_zero,
            0.05,
            &mut derive_rng(21, &[stream::CLIENT, 0, 0]),
        )
        .unwrap();
        let b = local_update(
            &spec,
            &global,
            &omega,
            &shards[0],
            &fedavg,
            0.05,
            &mut derive_rng(21, &[stream::CLIENT, 0, 0]),
        )
        .unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    /// With all-ones importance the update equals an independent proximal
    /// SGD loop with coefficient mu = 2 * lambda.
    #[test]
    fn identity_omega_equals_proximal_update() {
        let data = gen_synthetic(40, 4, 2, 31).unwrap();
        let (_, shards) = dirichlet_partition(&data, 1, 1.0, 31).unwrap();
        let shard = &shards[0];
        let spec = ModelSpec::new(4, vec![5], 2).unwrap();
        let global = spec.init_params(&mut derive_rng(31, &[1]));
        let omega = ImportanceWeights::identity(spec.layout());
        let cfg = FLConfig {
            strategy: Strategy::FedProx,
            lambda: 0.5,
            batch_size: 8,
            local_epochs: 2,
            ..FLConfig::default()
        };
        let lr = 0.05;

        let ours = local_update(
            &spec,
            &global,
            &omega,
            shard,
            &cfg,
            lr,
            &mut derive_rng(31, &[stream::CLIENT, 0, 0]),
        )
        .unwrap();

        // Independent re-implementation: proximal term (mu/2)||theta - g||^2.
        let mu = 2.0 * cfg.lambda;
        let mut rng = derive_rng(31, &[stream::CLIENT, 0, 0]);
        let mut params = global.clone();
        let mut order: Vec<usize> = (0..shard.train.len()).collect();
        for _ in 0..cfg.local_epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                let batch = shard.train.batch_of(chunk).unwrap();
                let (_, grad) = spec.loss_and_grad(&params, &batch, true, Some(&mut rng)).unwrap();
                let values: Vec<f64> = params
                    .values()
                    .iter()
                    .zip(global.values())
                    .zip(grad.values())
                    .map(|((&p, &g), &dg)| p - lr * (dg + mu * (p - g)))
                    .collect();
                params = ParamVector::from_values(params.layout().clone(), values).unwrap();
            }
        }

        for (a, b) in ours.values().iter().zip(params.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn local_update_leaves_inputs_untouched() {
        let data = gen_synthetic(30, 4, 2, 41).unwrap();
        let (_, shards) = dirichlet_partition(&data, 1, 1.0, 41).unwrap();
        let spec = ModelSpec::new(4, vec![], 2).unwrap();
        let global = spec.init_params(&mut derive_rng(41, &[1]));
        let omega = ImportanceWeights::identity(spec.layout());
        let global_before = global.clone();
        let omega_before = omega.clone();

        let cfg = FLConfig {
            batch_size: 4,
            ..FLConfig::default()
        };
        let updated = local_update(
            &spec,
            &global,
            &omega,
            &shards[0],
            &cfg,
            0.1,
            &mut derive_rng(41, &[2]),
        )
        .unwrap();

        assert_eq!(global, global_before);
        assert_eq!(omega, omega_before);
        assert_ne!(updated, global);
    }

    #[test]
    fn zero_epochs_returns_global_unchanged() {
        let data = gen_synthetic(20, 4, 2, 51).unwrap();
        let (_, shards) = dirichlet_partition(&data, 1, 1.0, 51).unwrap();
        let spec = ModelSpec::new(4, vec![], 2).unwrap();
        let global = spec.init_params(&mut derive_rng(51, &[1]));
        let omega = ImportanceWeights::identity(spec.layout());
        let cfg = FLConfig {
            local_epochs: 0,
            ..FLConfig::default()
        };
        let updated = local_update(
            &spec,
            &global,
            &omega,
            &shards[0],
            &cfg,
            0.1,
            &mut derive_rng(51, &[2]),
        )
        .unwrap();
        assert_eq!(updated.to_bits(), global.to_bits());
    }

    #[test]
    fn sampling_full_fraction_returns_everyone() {
        let mut ids = sample_clients(10, 1.0, 0, 7);
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn sampling_fifth_of_ten_returns_two_distinct() {
        let ids = sample_clients(10, 0.2, 3, 7);
        assert_eq!(ids.len(), 2);
        assert_ne!(ids[0], ids[1]);
        assert!(ids.iter().all(|&id| id < 10));
    }

    #[test]
    fn sampling_is_deterministic_per_round() {
        assert_eq!(sample_clients(10, 0.2, 5, 7), sample_clients(10, 0.2, 5, 7));
        assert_ne!(sample_clients(10, 0.5, 5, 7), sample_clients(10, 0.5, 6, 7));
    }

    #[test]
    fn aggregate_single_client_is_identity() {
        let p = scalar(3.25);
        let out = aggregate(&[(p.clone(), 17)]).unwrap();
        assert_eq!(out.to_bits(), p.to_bits());
    }

    #[test]
    fn aggregate_weighted_mean_arithmetic() {
        let layout = Layout::new(vec![Segment::new("w", vec![2])]);
        let a = ParamVector::from_values(layout.clone(), vec![1.0, 2.0]).unwrap();
        let b = ParamVector::from_values(layout, vec![3.0, 4.0]).unwrap();
        let out = aggregate(&[(a, 1), (b, 3)]).unwrap();
        assert_eq!(out.values(), &[2.5, 3.5]);
    }

    #[test]
    fn aggregate_equal_sizes_is_plain_mean() {
        let layout = Layout::new(vec![Segment::new("w", vec![2])]);
        let a = ParamVector::from_values(layout.clone(), vec![1.0, -2.0]).unwrap();
        let b = ParamVector::from_values(layout, vec![3.0, 6.0]).unwrap();
        let out = aggregate(&[(a, 5), (b, 5)]).unwrap();
        assert_eq!(out.values(), &[2.0, 2.0]);
    }

    #[test]
    fn aggregate_identical_vectors_is_exact() {
        let layout = Layout::new(vec![Segment::new("w", vec![3])]);
        let v = ParamVector::from_values(layout, vec![0.1, 0.7, -0.3]).unwrap();
        let out = aggregate(&[(v.clone(), 3), (v.clone(), 5), (v.clone(), 11)]).unwrap();
        assert_eq!(out.to_bits(), v.to_bits());
    }

    #[test]
    fn aggregate_permutation_stability() {
        let layout = Layout::new(vec![Segment::new("w", vec![2])]);
        let a = ParamVector::from_values(layout.clone(), vec![0.3, 1.7]).unwrap();
        let b = ParamVector::from_values(layout.clone(), vec![-1.1, 0.2]).unwrap();
        let c = ParamVector::from_values(layout, vec![2.4, -0.9]).unwrap();
        let fwd = aggregate(&[(a.clone(), 2), (b.clone(), 3), (c.clone(), 4)]).unwrap();
        let rev = aggregate(&[(c, 4), (b, 3), (a, 2)]).unwrap();
        for (x, y) in fwd.values().iter().zip(rev.values()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn aggregate_empty_is_domain_error() {
        assert!(matches!(aggregate(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn divergence_of_identical_models_is_zero() {
        let p = scalar(1.0);
        assert_eq!(weight_divergence(&[p.clone(), p.clone()], &p).unwrap(), 0.0);
    }

    #[test]
    fn divergence_norm_arithmetic() {
        let layout = Layout::new(vec![Segment::new("w", vec![4])]);
        let global = ParamVector::zeros(layout.clone());
        let local =
            ParamVector::from_values(layout, vec![3.0, 4.0, 0.0, 0.0]).unwrap();
        assert_eq!(weight_divergence(&[local], &global).unwrap(), 5.0);
    }

    #[test]
    fn divergence_monotone_in_displacement() {
        let layout = Layout::new(vec![Segment::new("w", vec![2])]);
        let global = ParamVector::zeros(layout.clone());
        let near = ParamVector::from_values(layout.clone(), vec![0.5, 0.5]).unwrap();
        let far = ParamVector::from_values(layout, vec![1.5, 2.0]).unwrap();
        let d_near = weight_divergence(&[near], &global).unwrap();
        let d_far = weight_divergence(&[far], &global).unwrap();
        assert!(d_far > d_near);
    }
}

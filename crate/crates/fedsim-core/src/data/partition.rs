//! Dirichlet non-IID partitioning and proxy-set sampling.
//!
//! Each client draws a class-proportion vector `q ~ Dirichlet(alpha * 1)`;
//! every class pool is then distributed across clients proportionally to
//! their `q` value for that class, with largest-remainder rounding so the
//! totals are conserved exactly. Small `alpha` concentrates classes on few
//! clients; large `alpha` approaches a uniform spread.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};

use crate::data::{ClientShard, Dataset, ProxyDataset};
use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream};

/// Fraction of each shard that goes to its train split.
const TRAIN_FRACTION: f64 = 0.8;

/// The drawn proportions and the resulting per-example assignment.
#[derive(Debug, Clone)]
pub struct PartitionPlan {
    /// Dirichlet concentration the proportions were drawn with.
    pub alpha: f64,
    /// `(clients, classes)` matrix; each row is a categorical distribution.
    pub proportions: Array2<f64>,
    /// Owning client of every source example.
    pub assignment: Vec<usize>,
}

/// Allocates `total` items over weighted bins, flooring the exact shares
/// and handing the remainder to the largest fractional parts (ties to the
/// lower bin index).
fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let uniform = 1.0 / weights.len() as f64;
    let shares: Vec<f64> = weights
        .iter()
        .map(|&w| {
            let p = if sum > 0.0 { w / sum } else { uniform };
            p * total as f64
        })
        .collect();
    let mut counts: Vec<usize> = shares.iter().map(|&s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    debug_assert!(assigned <= total);

    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.partial_cmp(&fa).expect("finite shares").then(a.cmp(&b))
    });
    for &bin in order.iter().take(total - assigned) {
        counts[bin] += 1;
    }
    counts
}

/// Partitions a dataset across `clients` non-IID shards.
///
/// Every shard is split 80/20 into train/test by a per-client seeded
/// shuffle; the union of all shards is exactly the source dataset.
pub fn dirichlet_partition(
    data: &Dataset,
    clients: usize,
    alpha: f64,
    seed: u64,
) -> Result<(PartitionPlan, Vec<ClientShard>)> {
    if clients == 0 {
        return Err(Error::domain("need at least one client".to_string()));
    }
    if clients > data.len() {
        return Err(Error::domain(format!(
            "{clients} clients exceed the {} available examples",
            data.len()
        )));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::domain(format!(
            "concentration alpha {alpha} must be positive"
        )));
    }

    let classes = data.classes();
    let mut rng = derive_rng(seed, &[stream::PARTITION]);
    let gamma = Gamma::new(alpha, 1.0).expect("validated parameters");

    let mut proportions = Array2::zeros((clients, classes));
    for mut row in proportions.rows_mut() {
        let draws: Vec<f64> = (0..classes).map(|_| gamma.sample(&mut rng)).collect();
        let sum: f64 = draws.iter().sum();
        for (slot, draw) in row.iter_mut().zip(&draws) {
            // Underflow to an all-zero row falls back to uniform.
            *slot = if sum > 0.0 {
                draw / sum
            } else {
                1.0 / classes as f64
            };
        }
    }

    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (example, &label) in data.labels().iter().enumerate() {
        pools[label].push(example);
    }

    let mut assignment = vec![0usize; data.len()];
    let mut client_examples: Vec<Vec<usize>> = vec![Vec::new(); clients];
    for (class, pool) in pools.iter_mut().enumerate() {
        pool.shuffle(&mut rng);
        let weights: Vec<f64> = (0..clients).map(|k| proportions[[k, class]]).collect();
        let counts = largest_remainder(pool.len(), &weights);
        let mut cursor = 0;
        for (client, &count) in counts.iter().enumerate() {
            for &example in &pool[cursor..cursor + count] {
                assignment[example] = client;
                client_examples[client].push(example);
            }
            cursor += count;
        }
    }

    let mut shards = Vec::with_capacity(clients);
    for (client, examples) in client_examples.iter_mut().enumerate() {
        let mut split_rng = derive_rng(seed, &[stream::SPLIT, client as u64]);
        examples.shuffle(&mut split_rng);
        let train_len = if examples.is_empty() {
            0
        } else {
            ((examples.len() as f64 * TRAIN_FRACTION).floor() as usize).max(1)
        };
        shards.push(ClientShard {
            client_id: client,
            train: data.subset(&examples[..train_len])?,
            test: data.subset(&examples[train_len..])?,
        });
    }

    Ok((
        PartitionPlan {
            alpha,
            proportions,
            assignment,
        },
        shards,
    ))
}

/// Uniform sample without replacement of `count` examples, deterministic
/// in `seed`. Used to cut working subsets out of large source files.
pub fn sample_subset(data: &Dataset, count: usize, seed: u64) -> Result<Dataset> {
    if count > data.len() {
        return Err(Error::domain(format!(
            "cannot sample {count} of {} examples",
            data.len()
        )));
    }
    let mut rng = derive_rng(seed, &[stream::SUBSET]);
    let indices = rand::seq::index::sample(&mut rng, data.len(), count).into_vec();
    data.subset(&indices)
}

/// Uniform sample without replacement of `round(fraction * n)` examples
/// (at least one), deterministic in `seed`.
pub fn sample_proxy(data: &Dataset, fraction: f64, seed: u64) -> Result<ProxyDataset> {
    if !fraction.is_finite() || fraction <= 0.0 || fraction > 1.0 {
        return Err(Error::domain(format!(
            "proxy fraction {fraction} outside (0, 1]"
        )));
    }
    if data.is_empty() {
        return Err(Error::domain(
            "cannot sample a proxy from an empty dataset".to_string(),
        ));
    }
    let size = ((fraction * data.len() as f64).round() as usize)
        .max(1)
        .min(data.len());
    let mut rng = derive_rng(seed, &[stream::PROXY]);
    let indices = rand::seq::index::sample(&mut rng, data.len(), size).into_vec();
    Ok(ProxyDataset {
        data: data.subset(&indices)?,
        fraction,
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_synthetic;
    use proptest::prelude::*;

    fn tv_from_uniform(hist: &[usize]) -> f64 {
        let total: usize = hist.iter().sum();
        if total == 0 {
            return 0.0;
        }
        let uniform = 1.0 / hist.len() as f64;
        0.5 * hist
            .iter()
            .map(|&c| (c as f64 / total as f64 - uniform).abs())
            .sum::<f64>()
    }

    fn pairwise_tv(hists: &[Vec<usize>]) -> f64 {
        let mut sum = 0.0;
        let mut pairs = 0;
        for i in 0..hists.len() {
            for j in i + 1..hists.len() {
                let (a, b) = (&hists[i], &hists[j]);
                let (ta, tb) = (
                    a.iter().sum::<usize>() as f64,
                    b.iter().sum::<usize>() as f64,
                );
                if ta == 0.0 || tb == 0.0 {
                    continue;
                }
                sum += 0.5
                    * a.iter()
                        .zip(b)
                        .map(|(&x, &y)| (x as f64 / ta - y as f64 / tb).abs())
                        .sum::<f64>();
                pairs += 1;
            }
        }
        sum / pairs as f64
    }

    #[test]
    fn huge_alpha_gives_near_uniform_shards() {
        let data = gen_synthetic(2000, 4, 10, 5).unwrap();
        let (_, shards) = dirichlet_partition(&data, 10, 1e6, 5).unwrap();
        for shard in &shards {
            let tv = tv_from_uniform(&shard.class_histogram());
            assert!(tv < 0.05, "client {} tv {tv}", shard.client_id);
        }
    }

    #[test]
    fn small_alpha_is_more_skewed_than_large_alpha() {
        let data = gen_synthetic(500, 4, 5, 9).unwrap();
        let mean_tv = |alpha: f64| {
            let mut acc = 0.0;
            for seed in 0..20u64 {
                let (_, shards) = dirichlet_partition(&data, 5, alpha, seed).unwrap();
                let hists: Vec<Vec<usize>> =
                    shards.iter().map(|s| s.class_histogram()).collect();
                acc += pairwise_tv(&hists);
            }
            acc / 20.0
        };
        let (skewed, uniformish) = (mean_tv(1.0), mean_tv(100.0));
        assert!(
            skewed > uniformish,
            "alpha=1 tv {skewed} should exceed alpha=100 tv {uniformish}"
        );
    }

    #[test]
    fn single_client_gets_everything() {
        let data = gen_synthetic(50, 3, 4, 2).unwrap();
        let (plan, shards) = dirichlet_partition(&data, 1, 0.5, 2).unwrap();
        assert_eq!(shards.len(), 1);
        assert_eq!(shards[0].len(), data.len());
        assert_eq!(shards[0].class_histogram(), data.class_histogram());
        assert!(plan.assignment.iter().all(|&c| c == 0));
    }

    #[test]
    fn more_clients_than_examples_is_domain_error() {
        let data = gen_synthetic(5, 3, 2, 2).unwrap();
        assert!(matches!(
            dirichlet_partition(&data, 6, 1.0, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn deterministic_in_seed() {
        let data = gen_synthetic(300, 4, 6, 3).unwrap();
        let (plan_a, _) = dirichlet_partition(&data, 7, 0.3, 11).unwrap();
        let (plan_b, _) = dirichlet_partition(&data, 7, 0.3, 11).unwrap();
        assert_eq!(plan_a.assignment, plan_b.assignment);
        assert_eq!(plan_a.proportions, plan_b.proportions);
    }

    #[test]
    fn train_test_disjoint_and_complete() {
        let data = gen_synthetic(200, 4, 5, 4).unwrap();
        let (_, shards) = dirichlet_partition(&data, 4, 1.0, 4).unwrap();
        for shard in &shards {
            assert!(shard.train.len() >= 1);
            // 80/20 within one example of the shard size.
            let expected_train =
                ((shard.len() as f64 * 0.8).floor() as usize).max(1);
            assert_eq!(shard.train.len(), expected_train);
        }
        let total: usize = shards.iter().map(|s| s.len()).sum();
        assert_eq!(total, data.len());
    }

    #[test]
    fn proxy_of_full_fraction_is_whole_dataset() {
        let data = gen_synthetic(40, 3, 4, 8).unwrap();
        let proxy = sample_proxy(&data, 1.0, 8).unwrap();
        assert_eq!(proxy.data.len(), data.len());
        assert_eq!(proxy.data.class_histogram(), data.class_histogram());
    }

    #[test]
    fn proxy_size_rounds() {
        let data = gen_synthetic(1000, 3, 4, 8).unwrap();
        let proxy = sample_proxy(&data, 0.01, 8).unwrap();
        assert_eq!(proxy.data.len(), 10);
    }

    #[test]
    fn proxy_minimum_is_one_example() {
        let data = gen_synthetic(20, 3, 4, 8).unwrap();
        let proxy = sample_proxy(&data, 0.001, 8).unwrap();
        assert_eq!(proxy.data.len(), 1);
    }

    #[test]
    fn proxy_deterministic_in_seed() {
        let data = gen_synthetic(100, 3, 4, 8).unwrap();
        let a = sample_proxy(&data, 0.1, 3).unwrap();
        let b = sample_proxy(&data, 0.1, 3).unwrap();
        assert_eq!(a.indices, b.indices);
        assert_eq!(a.data, b.data);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Shard sizes and per-class counts are conserved for any
        /// (clients, alpha, seed).
        #[test]
        fn partition_conserves_examples(
            clients in 1usize..12,
            alpha in 0.05f64..50.0,
            seed in 0u64..1000,
        ) {
            let data = gen_synthetic(120, 3, 4, 1).unwrap();
            let (plan, shards) = dirichlet_partition(&data, clients, alpha, seed).unwrap();
            let total: usize = shards.iter().map(|s| s.len()).sum();
            prop_assert_eq!(total, data.len());
            prop_assert_eq!(plan.assignment.len(), data.len());

            let mut class_totals = vec![0usize; data.classes()];
            for shard in &shards {
                for (c, n) in class_totals.iter_mut().zip(shard.class_histogram()) {
                    *c += n;
                }
            }
            prop_assert_eq!(class_totals, data.class_histogram());

            for row in plan.proportions.rows() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            }
        }
    }
}

mod common;

use cmsent::corpus::synth_fixture;
use cmsent::embedding::{train_skipgram_with_stats, EmbedConfig};
use cmsent::model::{adam_step, forward_batch, backward, grad_check, init_params, mean_loss, AdamState, Batch};
use cmsent::pipeline::tokenize_examples;
use cmsent::rng::{derive_seed, SplitMix64};

use common::SMALL_CORPUS_SUBSAMPLE;

#[test]
fn embedding_loss_falls_over_first_epochs() {
    let mut good = 0;
    let mut seen = Vec::new();
    for seed in 0..10 {
        let corpus = tokenize_examples(&synth_fixture(seed, 200).unwrap());
        let cfg = EmbedConfig {
            epochs: 3,
            subsample_t: SMALL_CORPUS_SUBSAMPLE,
            seed: derive_seed(seed, "embed"),
            ..EmbedConfig::default()
        };
        let (_, stats) = train_skipgram_with_stats(&corpus, &cfg).unwrap();
        let l = &stats.epoch_losses;
        if l[1] <= l[0] && l[2] <= l[1] {
            good += 1;
        }
        seen.push(l.clone());
    }
    assert!(good >= 8, "{good}/10 non-increasing: {seen:?}");
}

fn random_batch(rng: &mut SplitMix64, dim: usize, items: usize, max_len: usize) -> Batch {
    let lens: Vec<usize> = (0..items).map(|_| 1 + rng.below(max_len)).collect();
    let mut data = vec![0.0; items * max_len * dim];
    for (item, &len) in lens.iter().enumerate() {
        for x in &mut data[item * max_len * dim..(item * max_len + len) * dim] {
            *x = rng.uniform(-1.0, 1.0);
        }
    }
    let labels = (0..items).map(|_| rng.below(5)).collect();
    Batch { data, dim, max_len, lens, labels }
}

#[test]
fn full_batch_adam_lowers_loss() {
    let mut good = 0;
    for seed in 0..20 {
        let mut rng = SplitMix64::new(derive_seed(seed, "batch"));
        let batch = random_batch(&mut rng, 4, 8, 5);
        let mut params = init_params(6, 4, seed % 2 == 0, seed).unwrap();
        let mut adam = AdamState::new(params.flat().len());
        let mut losses = Vec::new();
        for _ in 0..=5 {
            let out = forward_batch(&params, &batch).unwrap();
            losses.push(mean_loss(&out.probs, &batch.labels).unwrap());
            let g = backward(&params, &out.cache, &batch.labels).unwrap();
            adam_step(params.flat_mut(), &g, &mut adam).unwrap();
        }
        if losses.windows(2).all(|w| w[1] < w[0]) {
            good += 1;
        }
    }
    assert!(good >= 18, "{good}/20 seeds strictly decreasing");
}

#[test]
fn gradients_match_finite_differences_on_random_shapes() {
    for seed in 0..20u64 {
        let err = grad_check(
            |s| {
                let mut rng = SplitMix64::new(derive_seed(s, "shape"));
                let hidden = 1 + rng.below(4);
                let dim = 1 + rng.below(5);
                let mut params = init_params(hidden, dim, rng.below(2) == 0, s).unwrap();
                for x in params.flat_mut().iter_mut() {
                    *x += rng.uniform(-0.2, 0.2);
                }
                let items = 1 + rng.below(3);
                let max_len = 1 + rng.below(4);
                (params, random_batch(&mut rng, dim, items, max_len))
            },
            seed,
            1e-4,
        )
        .unwrap();
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

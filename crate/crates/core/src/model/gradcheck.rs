use super::classifier::{backward, forward_batch, mean_loss, Batch, ClassifierParams};
use crate::error::{Error, Result};

/// Denominator floor for the relative error, so entries whose true
/// gradient is ~0 are compared absolutely.
pub const REL_ERROR_FLOOR: f64 = 1e-8;

fn loss_at(params: &ClassifierParams, batch: &Batch) -> Result<f64> {
    let out = forward_batch(params, batch)?;
    mean_loss(&out.probs, &batch.labels)
}

/// Largest `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)` between `analytic`
/// and central differences of the mean batch loss with step `eps`.
pub fn compare_gradients(params: &ClassifierParams, batch: &Batch, analytic: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be > 0, got {eps}")));
    }
    if analytic.len() != params.flat().len() {
        return Err(Error::Shape("gradient length differs from parameter count".into()));
    }
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = params.flat()[i];
        probe.flat_mut()[i] = orig + eps;
        let plus = loss_at(&probe, batch)?;
        probe.flat_mut()[i] = orig - eps;
        let minus = loss_at(&probe, batch)?;
        probe.flat_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Builds a model and batch from `seed`, then checks [`backward`] against
/// central differences. Returns the maximum relative error.
pub fn grad_check<F>(build: F, seed: u64, eps: f64) -> Result<f64>
where
    F: Fn(u64) -> (ClassifierParams, Batch),
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be > 0, got {eps}")));
    }
    let (params, batch) = build(seed);
    let out = forward_batch(&params, &batch)?;
    let analytic = backward(&params, &out.cache, &batch.labels)?;
    compare_gradients(&params, &batch, &analytic, eps)
}

#[cfg(test)]
mod tests {
    use super::super::classifier::init_params;
    use super::*;
    use crate::rng::SplitMix64;

    fn build(seed: u64, bidirectional: bool, lang_tag: bool) -> (ClassifierParams, Batch) {
        let dim = if lang_tag { 6 } else { 4 };
        let mut params = init_params(3, dim, bidirectional, seed).unwrap();
        let mut rng = SplitMix64::new(seed ^ 0xabc);
        // move biases off their init values so every path is exercised
        for x in params.flat_mut().iter_mut() {
            *x += rng.uniform(-0.1, 0.1);
        }
        let lens = vec![2, 3];
        let max_len = 3;
        let mut data = vec![0.0; 2 * max_len * dim];
        for (item, &len) in lens.iter().enumerate() {
            for t in 0..len {
                let o = (item * max_len + t) * dim;
                for j in 0..4 {
                    data[o + j] = rng.uniform(-1.0, 1.0);
                }
                if lang_tag {
                    let english = rng.below(2) == 0;
                    data[o + 4] = if english { 1.0 } else { 0.0 };
                    data[o + 5] = if english { 0.0 } else { 1.0 };
                }
            }
        }
        let labels = vec![rng.below(5), rng.below(5)];
        (params, Batch { data, dim, max_len, lens, labels })
    }

    #[test]
    fn healthy_gradients_pass() {
        for seed in 0..4 {
            let err = grad_check(|s| build(s, true, true), seed, 1e-4).unwrap();
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let (params, batch) = build(3, true, false);
        let out = forward_batch(&params, &batch).unwrap();
        let mut g = backward(&params, &out.cache, &batch.labels).unwrap();
        let worst = (0..g.len())
            .max_by(|&a, &b| g[a].abs().total_cmp(&g[b].abs()))
            .unwrap();
        g[worst] *= 2.0;
        let err = compare_gradients(&params, &batch, &g, 1e-4).unwrap();
        assert!(err > 1e-1, "{err}");
    }

    #[test]
    fn zero_step_rejected() {
        assert!(grad_check(|s| build(s, false, false), 0, 0.0).is_err());
    }
}

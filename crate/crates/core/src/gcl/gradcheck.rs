//! Central-finite-difference validation of the hand-written backward pass.

use super::*;
use ndarray::Array2;
use rand::seq::SliceRandom;

/// One featurized graph: node features plus message-passing edge list.
pub type FeaturizedGraph = (Array2<f64>, Vec<(usize, usize)>);

/// A frozen loss instance: anchor, positives, negatives.
pub struct GradCheckInstance {
    pub anchor: FeaturizedGraph,
    pub positives: Vec<FeaturizedGraph>,
    pub negatives: Vec<FeaturizedGraph>,
}

pub(crate) fn instance_loss(
    params: &EncoderParams,
    instance: &GradCheckInstance,
) -> Result<f64, GclError> {
    let z_anchor = forward(params, &instance.anchor.0, &instance.anchor.1)?.z;
    let z_pos: Vec<_> = instance
        .positives
        .iter()
        .map(|(f, e)| forward(params, f, e).map(|c| c.z))
        .collect::<Result<_, _>>()?;
    let z_neg: Vec<_> = instance
        .negatives
        .iter()
        .map(|(f, e)| forward(params, f, e).map(|c| c.z))
        .collect::<Result<_, _>>()?;
    nt_xent_loss(&z_anchor, &z_pos, &z_neg, params.meta.tau)
}

/// Loss plus analytic gradients for the instance.
pub(crate) fn instance_grads(
    params: &EncoderParams,
    instance: &GradCheckInstance,
) -> Result<(f64, EncoderGrads), GclError> {
    let anchor_cache = forward(params, &instance.anchor.0, &instance.anchor.1)?;
    let pos_caches: Vec<_> = instance
        .positives
        .iter()
        .map(|(f, e)| forward(params, f, e))
        .collect::<Result<_, _>>()?;
    let neg_caches: Vec<_> = instance
        .negatives
        .iter()
        .map(|(f, e)| forward(params, f, e))
        .collect::<Result<_, _>>()?;
    let z_pos: Vec<_> = pos_caches.iter().map(|c| c.z.clone()).collect();
    let z_neg: Vec<_> = neg_caches.iter().map(|c| c.z.clone()).collect();
    let result = nt_xent_with_grads(&anchor_cache.z, &z_pos, &z_neg, params.meta.tau)?;

    let mut grads = EncoderGrads::zeros_like(params);
    backward(params, &anchor_cache, &result.d_anchor, &mut grads);
    for (cache, d_z) in pos_caches.iter().zip(&result.d_positives) {
        backward(params, cache, d_z, &mut grads);
    }
    for (cache, d_z) in neg_caches.iter().zip(&result.d_negatives) {
        backward(params, cache, d_z, &mut grads);
    }
    grads.tau = result.d_tau;
    Ok((result.loss, grads))
}

/// Mutable references to every parameter scalar in the same order as
/// `EncoderParams::tensors`, with τ appended last.
fn flat_params(params: &mut EncoderParams) -> Vec<&mut f64> {
    let EncoderParams {
        layer1,
        layer2,
        projection,
        meta,
    } = params;
    let mut out: Vec<&mut f64> = Vec::new();
    for layer in [layer1, layer2] {
        for head in &mut layer.heads {
            out.extend(head.weight.iter_mut());
            out.extend(head.attn_src.iter_mut());
            out.extend(head.attn_dst.iter_mut());
        }
    }
    out.extend(projection.w1.iter_mut());
    out.extend(projection.b1.iter_mut());
    out.extend(projection.w2.iter_mut());
    out.extend(projection.b2.iter_mut());
    out.push(&mut meta.tau);
    out
}

/// Analytic gradient values flattened in the order of `flat_params`.
fn flat_grads(grads: &EncoderGrads) -> Vec<f64> {
    let mut out = Vec::new();
    for layer in [&grads.layer1, &grads.layer2] {
        for head in layer {
            out.extend(head.weight.iter().copied());
            out.extend(head.attn_src.iter().copied());
            out.extend(head.attn_dst.iter().copied());
        }
    }
    out.extend(grads.w1.iter().copied());
    out.extend(grads.b1.iter().copied());
    out.extend(grads.w2.iter().copied());
    out.extend(grads.b2.iter().copied());
    out.push(grads.tau);
    out
}

/// Compare analytic gradients against central differences on `samples`
/// randomly chosen parameter coordinates (τ always included) and return the
/// maximum relative error |g_a − g_n| / (|g_a| + |g_n| + 1e-12).
pub fn gradient_check(
    params: &EncoderParams,
    instance: &GradCheckInstance,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<f64, GclError> {
    assert!((1e-6..=1e-3).contains(&epsilon), "epsilon out of range");
    let (_, grads) = instance_grads(params, instance)?;
    let analytic = flat_grads(&grads);

    let mut work = params.clone();
    let total = flat_params(&mut work).len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..total - 1).collect();
    indices.shuffle(&mut rng);
    indices.truncate(samples.min(total - 1));
    indices.push(total - 1); // τ

    let mut max_rel = 0f64;
    for idx in indices {
        let original = *flat_params(&mut work)[idx];
        *flat_params(&mut work)[idx] = original + epsilon;
        let plus = instance_loss(&work, instance)?;
        *flat_params(&mut work)[idx] = original - epsilon;
        let minus = instance_loss(&work, instance)?;
        *flat_params(&mut work)[idx] = original;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let rel = (analytic[idx] - numeric).abs() / (analytic[idx].abs() + numeric.abs() + 1e-12);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

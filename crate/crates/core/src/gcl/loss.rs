//! Normalized temperature-scaled cross entropy over cosine similarities:
//! per anchor, −log( Σ_pos exp(sim⁺/τ) / (Σ_pos exp(sim⁺/τ) + Σ_neg exp(sim⁻/τ)) ).

use super::GclError;
use ndarray::Array1;

pub fn cosine_similarity(a: &Array1<f64>, b: &Array1<f64>) -> Result<f64, GclError> {
    let na = a.dot(a).sqrt();
    let nb = b.dot(b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(GclError::ZeroNormEmbedding);
    }
    Ok(a.dot(b) / (na * nb))
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Loss value only.
pub fn nt_xent_loss(
    anchor: &Array1<f64>,
    positives: &[Array1<f64>],
    negatives: &[Array1<f64>],
    tau: f64,
) -> Result<f64, GclError> {
    nt_xent_with_grads(anchor, positives, negatives, tau).map(|r| r.loss)
}

pub struct NtXent {
    pub loss: f64,
    pub d_anchor: Array1<f64>,
    pub d_positives: Vec<Array1<f64>>,
    pub d_negatives: Vec<Array1<f64>>,
    pub d_tau: f64,
}

/// Loss plus gradients with respect to every embedding and τ.
pub fn nt_xent_with_grads(
    anchor: &Array1<f64>,
    positives: &[Array1<f64>],
    negatives: &[Array1<f64>],
    tau: f64,
) -> Result<NtXent, GclError> {
    if tau <= 0.0 {
        return Err(GclError::NonPositiveTemperature(tau));
    }
    if positives.is_empty() || negatives.is_empty() {
        return Err(GclError::ShapeMismatch(
            "need at least one positive and one negative".to_string(),
        ));
    }
    let pos_sims: Vec<f64> = positives
        .iter()
        .map(|p| cosine_similarity(anchor, p))
        .collect::<Result<_, _>>()?;
    let neg_sims: Vec<f64> = negatives
        .iter()
        .map(|n| cosine_similarity(anchor, n))
        .collect::<Result<_, _>>()?;
    let pos_logits: Vec<f64> = pos_sims.iter().map(|s| s / tau).collect();
    let neg_logits: Vec<f64> = neg_sims.iter().map(|s| s / tau).collect();
    let all_logits: Vec<f64> = pos_logits.iter().chain(&neg_logits).copied().collect();
    let lse_pos = log_sum_exp(&pos_logits);
    let lse_all = log_sum_exp(&all_logits);
    let loss = lse_all - lse_pos;

    // dL/da_j = softmax_all(j) − softmax_pos(j) for positives, softmax_all(k)
    // for negatives, with a = s/τ
    let softmax_pos: Vec<f64> = pos_logits.iter().map(|a| (a - lse_pos).exp()).collect();
    let softmax_all: Vec<f64> = all_logits.iter().map(|a| (a - lse_all).exp()).collect();
    let d_pos_logit: Vec<f64> = (0..positives.len())
        .map(|j| softmax_all[j] - softmax_pos[j])
        .collect();
    let d_neg_logit: Vec<f64> = (0..negatives.len())
        .map(|k| softmax_all[positives.len() + k])
        .collect();

    let mut d_anchor = Array1::<f64>::zeros(anchor.len());
    let mut d_positives = Vec::with_capacity(positives.len());
    let mut d_negatives = Vec::with_capacity(negatives.len());
    let mut d_tau = 0.0;
    for (j, positive) in positives.iter().enumerate() {
        let d_sim = d_pos_logit[j] / tau;
        let (da, db) = cosine_grads(anchor, positive, pos_sims[j]);
        d_anchor.scaled_add(d_sim, &da);
        d_positives.push(db.mapv(|x| x * d_sim));
        d_tau += d_pos_logit[j] * (-pos_logits[j] / tau);
    }
    for (k, negative) in negatives.iter().enumerate() {
        let d_sim = d_neg_logit[k] / tau;
        let (da, db) = cosine_grads(anchor, negative, neg_sims[k]);
        d_anchor.scaled_add(d_sim, &da);
        d_negatives.push(db.mapv(|x| x * d_sim));
        d_tau += d_neg_logit[k] * (-neg_logits[k] / tau);
    }
    Ok(NtXent {
        loss,
        d_anchor,
        d_positives,
        d_negatives,
        d_tau,
    })
}

/// ∂cos(u,v)/∂u and ∂cos(u,v)/∂v given the precomputed similarity.
fn cosine_grads(u: &Array1<f64>, v: &Array1<f64>, sim: f64) -> (Array1<f64>, Array1<f64>) {
    let nu = u.dot(u).sqrt();
    let nv = v.dot(v).sqrt();
    let du = v.mapv(|x| x / (nu * nv)) - u.mapv(|x| x * sim / (nu * nu));
    let dv = u.mapv(|x| x / (nu * nv)) - v.mapv(|x| x * sim / (nv * nv));
    (du, dv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn anchor_case_matches_closed_form() {
        // one positive at similarity 1, one negative at similarity 0, τ=1:
        // −log(e / (e + 1)) = 0.31326168751822286
        let anchor = array![1.0, 0.0];
        let positive = array![2.0, 0.0];
        let negative = array![0.0, 3.0];
        let loss = nt_xent_loss(&anchor, &[positive], &[negative], 1.0).unwrap();
        assert!((loss - 0.313_261_687_518_222_86).abs() < 1e-12);
    }

    #[test]
    fn indifference_point_is_log_ratio() {
        // all similarities equal: loss = −log(n_pos / (n_pos + n_neg))
        let anchor = array![1.0, 1.0];
        let same = array![2.0, 2.0];
        let positives = vec![same.clone(), same.clone()];
        let negatives = vec![same.clone(), same.clone(), same.clone()];
        let loss = nt_xent_loss(&anchor, &positives, &negatives, 0.5).unwrap();
        assert!((loss - (-(2.0f64 / 5.0).ln())).abs() < 1e-12);
    }

    #[test]
    fn loss_decreases_as_positive_similarity_rises() {
        let anchor = array![1.0, 0.0];
        let negative = array![0.0, 1.0];
        let mut last = f64::INFINITY;
        for sim in [-0.5f64, 0.0, 0.5, 0.9] {
            // unit vector with exactly this cosine against the anchor
            let positive = array![sim, (1.0 - sim * sim).sqrt()];
            let loss = nt_xent_loss(&anchor, &[positive], &[negative.clone()], 0.7).unwrap();
            assert!(loss < last, "loss did not fall at sim {sim}");
            last = loss;
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = array![1.0, 0.0];
        let b = array![0.0, 1.0];
        assert!(matches!(
            nt_xent_loss(&a, &[b.clone()], &[b.clone()], 0.0),
            Err(GclError::NonPositiveTemperature(_))
        ));
        let zero = array![0.0, 0.0];
        assert!(matches!(
            nt_xent_loss(&a, &[zero], &[b.clone()], 1.0),
            Err(GclError::ZeroNormEmbedding)
        ));
        assert!(nt_xent_loss(&a, &[], &[b], 1.0).is_err());
    }
}

//! Losses over masked tokens.
//!
//! Both regression losses use the mean-squared-error convention: squared
//! Euclidean distance per token, divided by the vector length and averaged
//! over masked tokens. Sums run sequentially in token order.

use crate::error::{invalid, Result};

/// Norm guard used when normalizing vectors for the cosine loss.
pub const COSINE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub per_component: Vec<(String, f64)>,
    pub masked_count: usize,
}

fn check_shapes<P, T>(pred: &[P], target: &[T], mask_count: usize) -> Result<usize>
where
    P: AsRef<[f64]>,
    T: AsRef<[f64]>,
{
    if mask_count == 0 {
        return Err(invalid("loss needs at least one masked token"));
    }
    if pred.len() != mask_count || target.len() != mask_count {
        return Err(invalid(format!(
            "expected {mask_count} vectors, got {} predictions and {} targets",
            pred.len(),
            target.len()
        )));
    }
    let dim = target[0].as_ref().len();
    if dim == 0 {
        return Err(invalid("target vectors are empty"));
    }
    for (i, (p, t)) in pred.iter().zip(target).enumerate() {
        if p.as_ref().len() != dim || t.as_ref().len() != dim {
            return Err(invalid(format!(
                "token {i}: prediction length {} / target length {} differ from {dim}",
                p.as_ref().len(),
                t.as_ref().len()
            )));
        }
    }
    Ok(dim)
}

/// Mean over tokens of `‖pred − target‖² / dim`.
pub fn l2_masked<P, T>(pred: &[P], target: &[T], mask_count: usize) -> Result<f64>
where
    P: AsRef<[f64]>,
    T: AsRef<[f64]>,
{
    let dim = check_shapes(pred, target, mask_count)?;
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            p.as_ref()
                .iter()
                .zip(t.as_ref())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    Ok(sum / (mask_count * dim) as f64)
}

fn unit(v: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(COSINE_EPS);
    v.iter().map(move |x| x / n)
}

/// Mean squared error between ℓ2-normalized predictions and targets,
/// i.e. `2(1 − cos θ) / dim` per token.
pub fn cosine_masked<P, T>(pred: &[P], target: &[T], mask_count: usize) -> Result<f64>
where
    P: AsRef<[f64]>,
    T: AsRef<[f64]>,
{
    let dim = check_shapes(pred, target, mask_count)?;
    if let Some(i) = target
        .iter()
        .position(|t| t.as_ref().iter().all(|v| *v == 0.0))
    {
        return Err(invalid(format!("target {i} has zero norm")));
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            unit(p.as_ref())
                .zip(unit(t.as_ref()))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    Ok(sum / (mask_count * dim) as f64)
}

/// Weighted average `Σ wᵢLᵢ / Σ wᵢ` of named component losses.
pub fn multi_task(components: &[(&str, f64, f64)], masked_count: usize) -> Result<LossReport> {
    if components.is_empty() {
        return Err(invalid("multi-task loss needs at least one component"));
    }
    if let Some((name, _, w)) = components
        .iter()
        .find(|(_, _, w)| !(*w >= 0.0 && w.is_finite()))
    {
        return Err(invalid(format!("component {name} has invalid weight {w}")));
    }
    let weight_sum: f64 = components.iter().map(|(_, _, w)| w).sum();
    if weight_sum == 0.0 {
        return Err(invalid("all multi-task weights are zero"));
    }
    let total = components.iter().map(|(_, l, w)| l * w).sum::<f64>() / weight_sum;
    Ok(LossReport {
        total,
        per_component: components
            .iter()
            .map(|(n, l, _)| (n.to_string(), *l))
            .collect(),
        masked_count,
    })
}

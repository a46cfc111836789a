/// Logistic function, evaluated without overflow for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean multi-label binary cross-entropy over classes, in the stable form
/// `max(z, 0) - z*t + ln(1 + exp(-|z|))`.
pub fn bce_loss(logits: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(logits.len(), targets.len());
    if logits.is_empty() {
        return 0.0;
    }
    let total: f64 = logits
        .iter()
        .zip(targets)
        .map(|(&z, &t)| z.max(0.0) - z * t + (-z.abs()).exp().ln_1p())
        .sum();
    total / logits.len() as f64
}

/// Gradient of [`bce_loss`] with respect to the logits: `(sigmoid(z) - t) / C`.
pub fn bce_gradient(logits: &[f64], targets: &[f64]) -> Vec<f64> {
    let c = logits.len() as f64;
    logits
        .iter()
        .zip(targets)
        .map(|(&z, &t)| (sigmoid(z) - t) / c)
        .collect()
}

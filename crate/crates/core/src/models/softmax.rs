/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

/// `-log softmax(logits)[label]` without forming the probabilities.
pub(crate) fn xent_loss(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
    lse - logits[label]
}

/// Cross-entropy of `logits` against `label` and its gradient with respect to
/// the logits, `softmax(logits) - onehot(label)`.
pub fn softmax_xent(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let mut grad = softmax(logits);
    let loss = xent_loss(logits, label);
    grad[label] -= 1.0;
    (loss, grad)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

use crate::scalar::Scalar;

/// Two-class softmax probabilities.
pub fn softmax2<S: Scalar>(logits: [S; 2]) -> [S; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

/// Cross-entropy of the softmax over both logits against `label`.
/// Equal logits give `log 2`, i.e. a probability of one half.
pub fn bce_loss<S: Scalar>(logits: [S; 2], label: usize) -> S {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[label]
}

/// `∂ loss / ∂ logits = softmax − onehot(label)`
pub fn bce_grad<S: Scalar>(logits: [S; 2], label: usize) -> [S; 2] {
    let mut p = softmax2(logits);
    p[label] -= S::one();
    p
}

//! Euclidean projection onto the probability simplex.

use crate::scalar::Scalar;

/// The point of the simplex closest to `v` in Euclidean distance.
///
/// Sort-based: find the largest `k` with `u_k > (Σ_{j≤k} u_j − 1)/k` over the entries
/// sorted decreasingly, then shift by that threshold and clip at zero.
pub fn project_to_simplex<S: Scalar>(v: &[S]) -> Vec<S> {
    assert!(!v.is_empty(), "cannot project onto an empty simplex");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut cumulative = S::zero();
    let mut threshold = S::zero();
    for (k, &u) in sorted.iter().enumerate() {
        cumulative = cumulative + u;
        let t = (cumulative - S::one()) / S::of_usize(k + 1);
        if u > t {
            threshold = t;
        } else {
            break;
        }
    }
    let mut out: Vec<S> = v.iter().map(|&x| (x - threshold).max(S::zero())).collect();
    // Remove the rounding residue so the output sums to one as tightly as possible.
    let total: S = out.iter().copied().sum();
    if total > S::zero() {
        for x in &mut out {
            *x = *x / total;
        }
    }
    out
}

/// Maximizes `⟨c, x⟩ − κ‖x − center‖²` over the simplex (`κ > 0`).
pub fn maximize_concave_quadratic<S: Scalar>(c: &[S], center: &[S], kappa: S) -> Vec<S> {
    let shifted: Vec<S> = c
        .iter()
        .zip(center)
        .map(|(&ci, &gi)| gi + ci / (S::of(2.0) * kappa))
        .collect();
    project_to_simplex(&shifted)
}

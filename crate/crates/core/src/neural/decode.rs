use super::forward::position_probabilities;
use super::objective::PositionProbMatrix;
use super::{NetworkConfig, NetworkParams};
use crate::error::Result;
use crate::types::{BlockPattern, Permutation};

/// Conflict-free greedy decoding: repeatedly take the largest entry whose
/// row and column are both still free. Ties go to the lower `(row, column)`.
/// Always yields a bijection, even when row-wise argmaxes collide.
pub fn extract_permutation(p: &PositionProbMatrix) -> Permutation {
    let probs = p.as_array();
    let n = probs.nrows();
    let mut entries: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    // stable sort keeps (row, column) order among equal values
    entries.sort_by(|&a, &b| probs[[b.0, b.1]].total_cmp(&probs[[a.0, a.1]]));
    let mut map = vec![usize::MAX; n];
    let mut column_taken = vec![false; n];
    let mut remaining = n;
    for (i, j) in entries {
        if remaining == 0 {
            break;
        }
        if map[i] == usize::MAX && !column_taken[j] {
            map[i] = j;
            column_taken[j] = true;
            remaining -= 1;
        }
    }
    Permutation::from_vec_unchecked(map)
}

/// Inference: network forward pass and decoding only. No score model is
/// evaluated.
pub fn arrange(pattern: &BlockPattern, params: &NetworkParams, cfg: &NetworkConfig) -> Result<Permutation> {
    Ok(extract_permutation(&position_probabilities(pattern, params, cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn ppm(a: Array2<f64>) -> PositionProbMatrix {
        PositionProbMatrix::new(a).unwrap()
    }

    #[test]
    fn identity_decodes_to_identity() {
        assert!(extract_permutation(&ppm(Array2::eye(5))).is_identity());
    }

    #[test]
    fn colliding_argmax() {
        let perm = extract_permutation(&ppm(array![[0.9, 0.1], [0.8, 0.2]]));
        assert_eq!(perm.as_slice(), &[0, 1]);
    }

    #[test]
    fn near_permutation() {
        let p = ppm(array![[0.1, 0.2, 0.7], [0.6, 0.3, 0.1], [0.2, 0.55, 0.25]]);
        assert_eq!(extract_permutation(&p).as_slice(), &[2, 0, 1]);
    }

    #[test]
    fn uniform_ties_resolve_by_index() {
        let p = ppm(Array2::from_elem((4, 4), 0.25));
        assert!(extract_permutation(&p).is_identity());
    }
}

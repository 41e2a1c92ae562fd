//! Differentiable arrangement objective.
//!
//! The position-probability matrix `P` is turned into a sequence-generation
//! matrix `Psg` that discounts every page by the probability that an earlier
//! position already took it:
//!
//! ```text
//! Psg[0][j] = P[0][j]
//! Psg[i][j] = P[i][j] * prod_{t < i} (1 - Psg[t][j])
//! ```
//!
//! Triples of consecutive positions give the combination probabilities
//! `Pac[a][b][c] = sum_t Psg[t][a] Psg[t+1][b] Psg[t+2][c]`, and the expected
//! score is `Sm = sum Pac * Sac`. The training loss is `-Sm`.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::scoring::ScoreTensor;

/// Row-stochastic `N x N` matrix; row `i` is a distribution over the source
/// page at wordline `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionProbMatrix(Array2<f64>);

impl PositionProbMatrix {
    /// Checks squareness, entries in `[0, 1]` and unit row sums (1e-9).
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        let (r, c) = probs.dim();
        if r != c {
            return Err(Error::dims("square matrix", format!("{r}x{c}")));
        }
        for (i, row) in probs.rows().into_iter().enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) || (row.sum() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("row {i} is not a probability distribution")));
            }
        }
        Ok(PositionProbMatrix(probs))
    }

    pub(crate) fn new_unchecked(probs: Array2<f64>) -> Self {
        PositionProbMatrix(probs)
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    /// Mean over rows of the largest entry.
    pub fn mean_row_max(&self) -> f64 {
        let n = self.len().max(1) as f64;
        self.0
            .rows()
            .into_iter()
            .map(|r| r.iter().copied().fold(0.0, f64::max))
            .sum::<f64>()
            / n
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeqGenProbMatrix(Array2<f64>);

impl SeqGenProbMatrix {
    /// Wraps an arbitrary square matrix with entries in `[0, 1]`, e.g. an
    /// exact permutation matrix.
    pub fn from_array(entries: Array2<f64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::dims("square matrix", format!("{r}x{c}")));
        }
        if entries.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidConfig("sequence probabilities must lie in [0, 1]".into()));
        }
        Ok(SeqGenProbMatrix(entries))
    }

    /// Permutation matrix of `perm`: row `i` is one-hot at `perm[i]`.
    pub fn from_permutation(perm: &crate::types::Permutation) -> Self {
        let n = perm.len();
        SeqGenProbMatrix(Array2::from_shape_fn((n, n), |(i, j)| if perm[i] == j { 1.0 } else { 0.0 }))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CombinationProbMatrix(Array3<f64>);

impl CombinationProbMatrix {
    pub fn as_array(&self) -> &Array3<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Prefix products `prior[i][j] = prod_{t < i} (1 - Psg[t][j])` together
/// with `Psg` itself.
pub(crate) fn seqgen_with_prior(p: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let n = p.nrows();
    let mut psg = Array2::zeros(p.dim());
    let mut prior = Array2::ones(p.dim());
    for i in 0..n {
        for j in 0..p.ncols() {
            if i > 0 {
                prior[[i, j]] = prior[[i - 1, j]] * (1.0 - psg[[i - 1, j]]);
            }
            psg[[i, j]] = p[[i, j]] * prior[[i, j]];
        }
    }
    (psg, prior)
}

pub fn seqgen_transform(p: &PositionProbMatrix) -> SeqGenProbMatrix {
    SeqGenProbMatrix(seqgen_with_prior(&p.0).0)
}

/// Probability of every ordered page triple landing on consecutive
/// positions `t, t+1, t+2`, summed over the `N - 2` window offsets.
pub fn combination_probability(psg: &SeqGenProbMatrix) -> CombinationProbMatrix {
    let n = psg.len();
    let q = &psg.0;
    let mut pac = Array3::zeros((n, n, n));
    for t in 0..n.saturating_sub(2) {
        for a in 0..n {
            let pa = q[[t, a]];
            if pa == 0.0 {
                continue;
            }
            for b in 0..n {
                let pab = pa * q[[t + 1, b]];
                if pab == 0.0 {
                    continue;
                }
                for c in 0..n {
                    pac[[a, b, c]] += pab * q[[t + 2, c]];
                }
            }
        }
    }
    CombinationProbMatrix(pac)
}

/// `Sm = sum_{a,b,c} Pac[a][b][c] * Sac[a][b][c]`.
pub fn expected_score(pac: &CombinationProbMatrix, sac: &ScoreTensor) -> Result<f64> {
    if pac.len() != sac.len() {
        return Err(Error::dims(format!("N = {}", sac.len()), format!("N = {}", pac.len())));
    }
    Ok(pac.0.iter().zip(sac.as_array().iter()).map(|(p, s)| p * s).sum())
}

/// Training loss, `-Sm`.
pub fn loss(pac: &CombinationProbMatrix, sac: &ScoreTensor) -> Result<f64> {
    expected_score(pac, sac).map(|s| -s)
}

/// Expected score straight from `Psg` plus its gradient with respect to
/// `Psg`, without materializing `Pac`.
pub(crate) fn expected_score_grad(psg: &Array2<f64>, sac: &ScoreTensor) -> (f64, Array2<f64>) {
    let n = psg.nrows();
    let s = sac.as_array();
    let mut grad = Array2::zeros((n, n));
    let mut total = 0.0;
    let mut m = Array2::<f64>::zeros((n, n));
    for t in 0..n.saturating_sub(2) {
        // m[a][b] = sum_c S[a][b][c] Psg[t+2][c]
        let next2 = psg.row(t + 2);
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += s[[a, b, c]] * next2[c];
                }
                m[[a, b]] = acc;
            }
        }
        for a in 0..n {
            let pa = psg[[t, a]];
            for b in 0..n {
                let pb = psg[[t + 1, b]];
                let mab = m[[a, b]];
                total += pa * pb * mab;
                grad[[t, a]] += pb * mab;
                grad[[t + 1, b]] += pa * mab;
                let w = pa * pb;
                if w != 0.0 {
                    for c in 0..n {
                        grad[[t + 2, c]] += w * s[[a, b, c]];
                    }
                }
            }
        }
    }
    (total, grad)
}

/// Pulls a gradient with respect to `Psg` back to `P`.
pub(crate) fn seqgen_backward(
    p: &Array2<f64>,
    psg: &Array2<f64>,
    prior: &Array2<f64>,
    mut grad_psg: Array2<f64>,
) -> Array2<f64> {
    let (n, cols) = p.dim();
    let mut grad_p = Array2::zeros((n, cols));
    for j in 0..cols {
        // gradient flowing into prior[i][j] from rows >= i
        let mut grad_prior = 0.0;
        for i in (0..n).rev() {
            let g = grad_psg[[i, j]];
            grad_p[[i, j]] = g * prior[[i, j]];
            let gq = grad_prior + g * p[[i, j]];
            if i > 0 {
                grad_psg[[i - 1, j]] -= gq * prior[[i - 1, j]];
                grad_prior = gq * (1.0 - psg[[i - 1, j]]);
            }
        }
    }
    grad_p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Permutation;

    fn ppm(rows: &[&[f64]]) -> PositionProbMatrix {
        let n = rows.len();
        PositionProbMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j])).unwrap()
    }

    #[test]
    fn two_by_two_hand_evaluation() {
        let psg = seqgen_transform(&ppm(&[&[0.6, 0.4], &[0.3, 0.7]]));
        let want = [[0.6, 0.4], [0.12, 0.42]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((psg.as_array()[[i, j]] - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn one_hot_first_row_kills_column() {
        let psg = seqgen_transform(&ppm(&[&[0.0, 1.0, 0.0], &[0.2, 0.5, 0.3], &[0.1, 0.8, 0.1]]));
        assert_eq!(psg.as_array()[[1, 1]], 0.0);
        assert_eq!(psg.as_array()[[2, 1]], 0.0);
    }

    #[test]
    fn uniform_rows_stay_uniform() {
        let n = 4;
        let p = PositionProbMatrix::new(Array2::from_elem((n, n), 0.25)).unwrap();
        let psg = seqgen_transform(&p);
        let mut prior = 1.0;
        for i in 0..n {
            let expected = 0.25 * prior;
            for j in 0..n {
                assert!((psg.as_array()[[i, j]] - expected).abs() < 1e-15);
            }
            prior *= 1.0 - expected;
        }
    }

    #[test]
    fn combination_of_identity() {
        let pac = combination_probability(&SeqGenProbMatrix::from_permutation(&Permutation::identity(3)));
        let sum: f64 = pac.as_array().sum();
        assert_eq!(pac.as_array()[[0, 1, 2]], 1.0);
        assert_eq!(sum, 1.0);

        let pac = combination_probability(&SeqGenProbMatrix::from_permutation(&Permutation::identity(4)));
        assert_eq!(pac.as_array()[[0, 1, 2]], 1.0);
        assert_eq!(pac.as_array()[[1, 2, 3]], 1.0);
        assert_eq!(pac.as_array().sum(), 2.0);
    }

    #[test]
    fn expected_score_dimension_check() {
        let pac = combination_probability(&SeqGenProbMatrix::from_permutation(&Permutation::identity(4)));
        let sac = ScoreTensor::from_array(Array3::zeros((3, 3, 3))).unwrap();
        assert!(expected_score(&pac, &sac).is_err());
        let sac = ScoreTensor::from_array(Array3::zeros((4, 4, 4))).unwrap();
        assert_eq!(expected_score(&pac, &sac).unwrap(), 0.0);
        assert_eq!(loss(&pac, &sac).unwrap(), 0.0);
    }

    #[test]
    fn fused_expected_score_matches_materialized() {
        let n = 5;
        let psg = Array2::from_shape_fn((n, n), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 11.0);
        let sac = ScoreTensor::from_array(Array3::from_shape_fn((n, n, n), |(a, b, c)| {
            if a != b && b != c && a != c {
                (a * 31 + b * 7 + c) as f64
            } else {
                0.0
            }
        }))
        .unwrap();
        let (fused, _) = expected_score_grad(&psg, &sac);
        let pac = combination_probability(&SeqGenProbMatrix::from_array(psg).unwrap());
        let direct = expected_score(&pac, &sac).unwrap();
        assert!((fused - direct).abs() < 1e-9 * direct.abs());
    }

    #[test]
    fn position_prob_validation() {
        assert!(PositionProbMatrix::new(Array2::from_elem((2, 2), 0.4)).is_err());
        assert!(PositionProbMatrix::new(Array2::from_elem((2, 3), 1.0 / 3.0)).is_err());
    }
}

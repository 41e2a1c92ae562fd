//! Synthetic retention channel.
//!
//! A single drift step pulls every cell toward its vertical neighbors:
//!
//! ```text
//! dv = lambda * time * (1 + gamma * x / 15) * (k1 * (v_up - v) + k2 * (v_down - v)) / (k1 + k2)
//! ```
//!
//! where `x` is the cell's own level. Wordline 0 has no underside neighbor
//! and the last wordline no upside neighbor; the missing term is dropped.
//! Gaussian read noise is added afterwards. The model is not calibrated
//! against silicon; it only has to rank arrangements the way the score does.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io::gray::gray_encode;
use crate::types::{ArchConfig, BlockPattern};

#[derive(Clone, Debug, PartialEq)]
pub struct RetentionConfig {
    /// Drift rate per unit time.
    pub coupling: f64,
    pub time: f64,
    /// Level-proportional growth of the drift.
    pub saturation_gain: f64,
    /// Read-noise standard deviation in level units.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for RetentionConfig {
    fn default() -> Self {
        RetentionConfig {
            coupling: 0.08,
            time: 1.0,
            saturation_gain: 0.5,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

impl RetentionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("coupling", self.coupling),
            ("time", self.time),
            ("saturation_gain", self.saturation_gain),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Analog cell voltages (level units) after retention.
pub fn simulate_retention(pattern: &BlockPattern, arch: &ArchConfig, rcfg: &RetentionConfig) -> Result<Array2<f64>> {
    rcfg.validate()?;
    let (n, c) = (pattern.num_wordlines(), pattern.cells_per_page());
    let rate = rcfg.coupling * rcfg.time;
    let weight = arch.k1 + arch.k2;
    let mut out = Array2::from_shape_fn((n, c), |(row, col)| {
        let v = pattern.get(row, col) as f64;
        let mut pull = 0.0;
        if row + 1 < n {
            pull += arch.k1 * (pattern.get(row + 1, col) as f64 - v);
        }
        if row > 0 {
            pull += arch.k2 * (pattern.get(row - 1, col) as f64 - v);
        }
        v + rate * (1.0 + rcfg.saturation_gain * v / 15.0) * pull / weight
    });
    if rcfg.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, rcfg.noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(rcfg.seed);
        out.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    Ok(out)
}

/// Quantizes to the nearest level (halves round up), clamped to `0..=15`.
pub fn read_back(voltages: &Array2<f64>) -> BlockPattern {
    let (n, c) = voltages.dim();
    let cells = voltages
        .iter()
        .map(|&v| (v + 0.5).floor().clamp(0.0, 15.0) as u8)
        .collect();
    BlockPattern::from_raw(n, c, cells).expect("shape preserved")
}

/// Fraction of differing Gray-coded bits, over `4 * N * C` bits.
pub fn measure_ber(original: &BlockPattern, readback: &BlockPattern) -> Result<f64> {
    if original.num_wordlines() != readback.num_wordlines() || original.cells_per_page() != readback.cells_per_page() {
        return Err(Error::dims(
            format!("{}x{}", original.num_wordlines(), original.cells_per_page()),
            format!("{}x{}", readback.num_wordlines(), readback.cells_per_page()),
        ));
    }
    let mut flipped = 0u64;
    for (&a, &b) in original.as_slice().iter().zip(readback.as_slice()) {
        flipped += (gray_encode(a)? ^ gray_encode(b)?).count_ones() as u64;
    }
    let bits = 4 * original.as_slice().len();
    Ok(if bits == 0 { 0.0 } else { flipped as f64 / bits as f64 })
}

/// Retention, read-back and BER in one call.
pub fn channel_ber(pattern: &BlockPattern, arch: &ArchConfig, rcfg: &RetentionConfig) -> Result<f64> {
    let read = read_back(&simulate_retention(pattern, arch, rcfg)?);
    measure_ber(pattern, &read)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn quiet() -> RetentionConfig {
        RetentionConfig {
            noise_sigma: 0.0,
            ..RetentionConfig::default()
        }
    }

    #[test]
    fn no_physics_is_identity() {
        let p = BlockPattern::from_rows(&[[0u8, 15, 3], [7, 7, 1], [2, 9, 14]]).unwrap();
        let r = RetentionConfig {
            coupling: 0.0,
            ..quiet()
        };
        let v = simulate_retention(&p, &ArchConfig::new(3, 3), &r).unwrap();
        assert!(v.iter().zip(p.as_slice()).all(|(&a, &b)| a == b as f64));
    }

    #[test]
    fn uniform_block_does_not_drift() {
        let p = BlockPattern::from_raw(4, 5, vec![9; 20]).unwrap();
        let v = simulate_retention(&p, &ArchConfig::new(4, 5), &quiet()).unwrap();
        assert!(v.iter().all(|&x| x == 9.0));
    }

    #[test]
    fn middle_cell_hand_value() {
        let p = BlockPattern::from_rows(&[[0u8], [15], [0]]).unwrap();
        let r = RetentionConfig {
            coupling: 0.1,
            saturation_gain: 0.0,
            ..quiet()
        };
        let v = simulate_retention(&p, &ArchConfig::new(3, 1), &r).unwrap();
        assert!((v[[1, 0]] - 13.5).abs() < 1e-12);
        assert_eq!(read_back(&v).get(1, 0), 14);
    }

    #[test]
    fn read_back_convention() {
        let p = read_back(&array![[13.5, -0.7, 4.0, 15.6, 2.49]]);
        assert_eq!(p.row(0), &[14, 0, 4, 15, 2]);
    }

    #[test]
    fn ber_examples() {
        let a = BlockPattern::from_raw(10, 10, vec![2; 100]).unwrap();
        assert_eq!(measure_ber(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b.set(4, 4, crate::ProgramLevel::new(3).unwrap());
        assert_eq!(measure_ber(&a, &b).unwrap(), 1.0 / 400.0);
        assert_eq!(measure_ber(&b, &a).unwrap(), 1.0 / 400.0);

        let zeros = BlockPattern::zeros(3, 4);
        let fifteens = BlockPattern::from_raw(3, 4, vec![15; 12]).unwrap();
        assert_eq!(measure_ber(&zeros, &fifteens).unwrap(), 0.25);
        assert!(measure_ber(&zeros, &BlockPattern::zeros(4, 3)).is_err());
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let p = BlockPattern::from_raw(4, 8, (0..32).map(|v| (v % 16) as u8).collect()).unwrap();
        let arch = ArchConfig::new(4, 8);
        let r = RetentionConfig::default();
        assert_eq!(
            simulate_retention(&p, &arch, &r).unwrap(),
            simulate_retention(&p, &arch, &r).unwrap()
        );
    }
}

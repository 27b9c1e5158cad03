//! Byte-replacement mutation shared by the Zest and CGF engines.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MutationParams {
    /// Mean number of mutations applied to one parent.
    pub mean_count: f64,
    /// Mean length of one replaced window.
    pub mean_length: f64,
    pub rng_seed: u64,
}

impl Default for MutationParams {
    fn default() -> Self {
        Self {
            mean_count: 4.0,
            mean_length: 4.0,
            rng_seed: 0,
        }
    }
}

impl MutationParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, mean) in [("mean count", self.mean_count), ("mean length", self.mean_length)] {
            if !(mean.is_finite() && mean > 0.0) {
                return Err(format!("mutation {name} must be positive, got {mean}"));
            }
        }
        Ok(())
    }
}

/// One replaced window `[offset, offset + len)`, already clipped to the input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug)]
pub struct Mutation {
    pub bytes: Vec<u8>,
    /// Number of mutations drawn.
    pub count: usize,
    /// Window length drawn for each mutation, before clipping.
    pub drawn_lengths: Vec<usize>,
    pub windows: Vec<Window>,
}

/// Geometric distribution over {1, 2, ...} with the given mean.
#[derive(Clone, Copy, Debug)]
pub struct PositiveGeometric(Geometric);

impl PositiveGeometric {
    pub fn with_mean(mean: f64) -> Self {
        let p = (1.0 / mean).min(1.0);
        Self(Geometric::new(p).expect("probability in (0, 1]"))
    }
}

impl Distribution<usize> for PositiveGeometric {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        // `Geometric` counts failures before the first success
        usize::try_from(self.0.sample(rng)).unwrap_or(usize::MAX - 1) + 1
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Mutator {
    count: PositiveGeometric,
    length: PositiveGeometric,
}

impl Mutator {
    pub fn new(params: &MutationParams) -> Self {
        Self {
            count: PositiveGeometric::with_mean(params.mean_count),
            length: PositiveGeometric::with_mean(params.mean_length),
        }
    }

    /// Apply `m` sequential window replacements to a copy of `parent`.
    pub fn mutate<R: Rng + ?Sized>(&self, parent: &[u8], rng: &mut R) -> Mutation {
        assert!(!parent.is_empty(), "cannot mutate an empty sequence");
        let mut bytes = parent.to_vec();
        let count = self.count.sample(rng);
        let mut drawn_lengths = Vec::with_capacity(count);
        let mut windows = Vec::with_capacity(count);
        for _ in 0..count {
            let len = self.length.sample(rng);
            let offset = rng.random_range(0..bytes.len());
            let end = offset.saturating_add(len).min(bytes.len());
            rng.fill(&mut bytes[offset..end]);
            drawn_lengths.push(len);
            windows.push(Window {
                offset,
                len: end - offset,
            });
        }
        Mutation {
            bytes,
            count,
            drawn_lengths,
            windows,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn geometric_means_match_configuration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for mean in [1.0, 2.0, 4.0, 10.0] {
            let d = PositiveGeometric::with_mean(mean);
            let n = 50_000;
            let sum: usize = (0..n).map(|_| d.sample(&mut rng)).sum();
            let empirical = sum as f64 / n as f64;
            assert!((empirical - mean).abs() < 0.05 * mean + 0.02, "mean {mean}: {empirical}");
        }
        let ones = PositiveGeometric::with_mean(1.0);
        assert!((0..100).all(|_| ones.sample(&mut rng) == 1));
    }

    #[test]
    fn rejects_nonpositive_means() {
        let bad = MutationParams {
            mean_count: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(MutationParams::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn mutation_preserves_length_and_untouched_octets(
            parent in proptest::collection::vec(any::<u8>(), 1..200),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = Mutator::new(&MutationParams::default()).mutate(&parent, &mut rng);
            prop_assert_eq!(m.bytes.len(), parent.len());
            prop_assert!(m.count >= 1);
            prop_assert_eq!(m.windows.len(), m.count);
            for (i, (a, b)) in parent.iter().zip(&m.bytes).enumerate() {
                let covered = m.windows.iter().any(|w| (w.offset..w.offset + w.len).contains(&i));
                if !covered {
                    prop_assert_eq!(a, b);
                }
            }
            for w in &m.windows {
                prop_assert!(w.len >= 1);
                prop_assert!(w.offset + w.len <= parent.len());
            }
        }
    }
}

use crate::error::{Error, Result};
use crate::flip::BlockStructure;
use crate::rng;

/// Number of flips, seed and block structure of a sign-flip test.
///
/// Flip 0 is the identity; flip `w > 0` draws an independent fair sign for
/// each block from `(seed, w, block)` alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipPlan {
    /// Total number of flips `W`, identity included.
    pub num_flips: usize,
    pub seed: u64,
    pub blocks: BlockStructure,
}

impl FlipPlan {
    pub fn new(num_flips: usize, seed: u64, blocks: BlockStructure) -> Self {
        Self { num_flips, seed, blocks }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_flips < 2 {
            return Err(Error::InvalidPlan(format!("num_flips must be at least 2, got {}", self.num_flips)));
        }
        if self.blocks.n() == 0 {
            return Err(Error::InvalidPlan("empty block structure".into()));
        }
        Ok(())
    }

    /// Per-block signs of flip `w`.
    pub fn block_signs(&self, w: usize) -> Vec<f64> {
        let nb = self.blocks.num_blocks();
        if w == 0 {
            return vec![1.0; nb];
        }
        (0..nb).map(|j| rng::block_sign(self.seed, w as u64, j as u64)).collect()
    }

    /// Per-observation signs of flip `w`.
    pub fn signs(&self, w: usize) -> Vec<f64> {
        let block = self.block_signs(w);
        self.blocks.assignment().iter().map(|&b| block[b]).collect()
    }
}

/// All `W` sign vectors of `plan`, identity first.
pub fn generate_flips(plan: &FlipPlan) -> Result<Vec<Vec<f64>>> {
    plan.validate()?;
    Ok((0..plan.num_flips).map(|w| plan.signs(w)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flip::block_structure;

    #[test]
    fn too_few_flips_is_invalid() {
        let plan = FlipPlan::new(1, 0, BlockStructure::singletons(3));
        assert!(matches!(generate_flips(&plan), Err(Error::InvalidPlan(_))));
    }

    #[test]
    fn first_flip_is_identity() {
        let plan = FlipPlan::new(50, 9, block_structure(&[1, 1, 2, 3, 3, 3]));
        let flips = generate_flips(&plan).unwrap();
        assert_eq!(flips.len(), 50);
        assert!(flips[0].iter().all(|&s| s == 1.0));
    }

    #[test]
    fn block_signs_expand_to_observations() {
        let plan = FlipPlan::new(300, 3, block_structure(&["a", "a", "b"]));
        let flips = generate_flips(&plan).unwrap();
        // some draw flips the first block only
        let found = flips.iter().any(|f| f == &vec![-1.0, -1.0, 1.0]);
        assert!(found);
        for f in &flips {
            assert_eq!(f[0], f[1]);
        }
    }

    #[test]
    fn equal_blocks_are_kronecker_expansions() {
        let labels: Vec<u32> = (0..12).map(|i| i / 3).collect();
        let plan = FlipPlan::new(40, 11, block_structure(&labels));
        for w in 0..40 {
            let f = plan.block_signs(w);
            let expanded: Vec<f64> = f.iter().flat_map(|&s| [s; 3]).collect();
            assert_eq!(plan.signs(w), expanded);
        }
    }

    #[test]
    fn flips_are_reproducible() {
        let plan = FlipPlan::new(20, 77, BlockStructure::singletons(10));
        assert_eq!(generate_flips(&plan).unwrap(), generate_flips(&plan.clone()).unwrap());
        let other = FlipPlan::new(20, 78, BlockStructure::singletons(10));
        assert_ne!(generate_flips(&plan).unwrap(), generate_flips(&other).unwrap());
    }
}

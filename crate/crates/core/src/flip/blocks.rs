use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

/// Partition of the observations into exchangeable blocks (clusters).
///
/// Blocks are ordered by first appearance of their label; indices inside a
/// block keep their original order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockStructure {
    n: usize,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl BlockStructure {
    pub fn from_labels<T: Eq + Hash + Clone>(labels: &[T]) -> Self {
        let mut index: HashMap<T, usize> = HashMap::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            let next = blocks.len();
            let b = *index.entry(label.clone()).or_insert(next);
            if b == next {
                blocks.push(Vec::new());
            }
            blocks[b].push(i);
            block_of.push(b);
        }
        Self { n: labels.len(), blocks, block_of }
    }

    /// Every observation in its own block.
    pub fn singletons(n: usize) -> Self {
        Self { n, blocks: (0..n).map(|i| vec![i]).collect(), block_of: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Block index of observation `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.block_of
    }
}

/// One block per distinct cluster label.
pub fn block_structure<T: Eq + Hash + Clone>(cluster_labels: &[T]) -> BlockStructure {
    BlockStructure::from_labels(cluster_labels)
}

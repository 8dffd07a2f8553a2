use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dom::DomTree;
use crate::error::{Error, Result};

const TAGS: &[&str] = &["div", "span", "section", "article", "ul", "em"];

/// Shape parameters for a generated tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTreeSpec {
    pub target_node_count: usize,
    pub min_children: usize,
    pub max_children: usize,
    /// 0 grows breadth-first (wide), 1 always expands the newest node (deep).
    pub depth_bias: f64,
    pub seed: u64,
}

impl SyntheticTreeSpec {
    pub fn wide(target_node_count: usize, seed: u64) -> Self {
        SyntheticTreeSpec {
            target_node_count,
            min_children: 8,
            max_children: 12,
            depth_bias: 0.0,
            seed,
        }
    }

    pub fn narrow(target_node_count: usize, seed: u64) -> Self {
        SyntheticTreeSpec {
            target_node_count,
            min_children: 1,
            max_children: 2,
            depth_bias: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.target_node_count == 0 {
            return Err(Error::Config("target node count must be at least 1".into()));
        }
        if self.min_children > self.max_children {
            return Err(Error::Config(format!(
                "min children {} exceeds max children {}",
                self.min_children, self.max_children
            )));
        }
        if self.max_children == 0 && self.target_node_count > 1 {
            return Err(Error::Config(
                "max children is 0 but more than one node was requested".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.depth_bias) {
            return Err(Error::Config(format!(
                "depth bias {} outside [0, 1]",
                self.depth_bias
            )));
        }
        Ok(())
    }
}

/// Grows a tree of exactly `target_node_count` elements.
///
/// Unexpanded nodes sit in a frontier queue. Each step expands either the
/// oldest entry (breadth-first) or, with probability `depth_bias`, the
/// newest one, giving it a uniform number of children in
/// `[min_children, max_children]` capped by the remaining budget.
pub fn generate_tree(spec: &SyntheticTreeSpec) -> Result<DomTree> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut tree = DomTree::with_root("html", rng.gen_range(0..=3));
    let mut frontier = VecDeque::from([DomTree::ROOT]);
    let mut count = 1;

    while count < spec.target_node_count {
        let deep = spec.depth_bias > 0.0 && rng.gen::<f64>() < spec.depth_bias;
        let parent = if deep {
            frontier.pop_back()
        } else {
            frontier.pop_front()
        }
        .expect("frontier never empties before the target is reached");

        let mut k = rng.gen_range(spec.min_children..=spec.max_children);
        if k == 0 && frontier.is_empty() {
            k = 1;
        }
        k = k.min(spec.target_node_count - count);
        for _ in 0..k {
            let tag = TAGS[rng.gen_range(0..TAGS.len())];
            let id = tree.push_child(parent, tag, rng.gen_range(0..=3));
            frontier.push_back(id);
        }
        count += k;
    }

    let bytes = tree.to_html().len();
    tree.set_source_byte_size(bytes);
    Ok(tree)
}

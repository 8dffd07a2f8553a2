use serde::{Deserialize, Serialize};

use super::DomTree;

/// Column order of the nine structural features, as written to CSV and
/// consumed by the classifier.
pub const FEATURE_NAMES: [&str; 9] = [
    "dom_size",
    "attribute_count",
    "web_page_size",
    "tree_depth",
    "number_of_leaves",
    "avg_tree_width",
    "max_tree_width",
    "max_avg_width_ratio",
    "avg_work_per_level",
];

/// The nine structural characteristics of one page.
///
/// `avg_tree_width` and `avg_work_per_level` are both `dom_size / tree_depth`.
/// They are kept as separate columns because they are reported (and
/// correlated) separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageFeatures {
    pub page_id: String,
    pub dom_size: u64,
    pub attribute_count: u64,
    pub web_page_size: u64,
    pub tree_depth: u64,
    pub number_of_leaves: u64,
    pub avg_tree_width: f64,
    pub max_tree_width: u64,
    pub max_avg_width_ratio: f64,
    pub avg_work_per_level: f64,
}

impl PageFeatures {
    /// Feature values in [`FEATURE_NAMES`] order.
    pub fn values(&self) -> [f64; 9] {
        [
            self.dom_size as f64,
            self.attribute_count as f64,
            self.web_page_size as f64,
            self.tree_depth as f64,
            self.number_of_leaves as f64,
            self.avg_tree_width,
            self.max_tree_width as f64,
            self.max_avg_width_ratio,
            self.avg_work_per_level,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values()[i])
    }
}

/// Node count per depth level; `widths[0]` is level 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidthProfile {
    pub widths: Vec<u64>,
}

impl WidthProfile {
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn total(&self) -> u64 {
        self.widths.iter().sum()
    }

    pub fn max_width(&self) -> u64 {
        self.widths.iter().copied().max().unwrap_or(0)
    }
}

pub fn width_profile(tree: &DomTree) -> WidthProfile {
    let mut widths = vec![0u64; tree.depth() as usize];
    for n in tree.nodes() {
        widths[n.depth as usize - 1] += 1;
    }
    WidthProfile { widths }
}

pub fn compute_features(tree: &DomTree, page_id: &str) -> PageFeatures {
    let profile = width_profile(tree);
    let dom_size = tree.node_count() as u64;
    let tree_depth = profile.depth() as u64;
    let max_tree_width = profile.max_width();
    let avg_tree_width = dom_size as f64 / tree_depth as f64;

    PageFeatures {
        page_id: page_id.to_string(),
        dom_size,
        attribute_count: tree.nodes().iter().map(|n| n.attribute_count as u64).sum(),
        web_page_size: tree.source_byte_size() as u64,
        tree_depth,
        number_of_leaves: tree.nodes().iter().filter(|n| n.children.is_empty()).count() as u64,
        avg_tree_width,
        max_tree_width,
        // Written as max * depth / size so that uniform widths give exactly 1.
        max_avg_width_ratio: (max_tree_width * tree_depth) as f64 / dom_size as f64,
        avg_work_per_level: avg_tree_width,
    }
}

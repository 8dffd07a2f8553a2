//! Element-only DOM trees, the HTML reader that builds them, and the
//! structural features used to characterize a page's available parallelism.
//!
//! Trees are stored as an arena. Node 0 is the root and every node is
//! allocated after its parent, so `parent(i) < i` holds for all `i > 0`.
//! Sequential passes rely on that ordering: a forward scan is a valid
//! top-down order and a reverse scan a valid bottom-up order.

mod features;
mod parse;

pub use features::{compute_features, width_profile, PageFeatures, WidthProfile, FEATURE_NAMES};
pub use parse::parse_html;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomNode {
    pub tag: String,
    pub attribute_count: u32,
    /// Root is level 1.
    pub depth: u32,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomTree {
    nodes: Vec<DomNode>,
    source_byte_size: usize,
}

impl DomTree {
    pub fn with_root(tag: impl Into<String>, attribute_count: u32) -> Self {
        DomTree {
            nodes: vec![DomNode {
                tag: tag.into(),
                attribute_count,
                depth: 1,
                parent: None,
                children: Vec::new(),
            }],
            source_byte_size: 0,
        }
    }

    /// Appends a new element as the last child of `parent`.
    pub fn push_child(
        &mut self,
        parent: NodeId,
        tag: impl Into<String>,
        attribute_count: u32,
    ) -> NodeId {
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(DomNode {
            tag: tag.into(),
            attribute_count,
            depth,
            parent: Some(parent),
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn set_source_byte_size(&mut self, bytes: usize) {
        self.source_byte_size = bytes;
    }

    pub fn source_byte_size(&self) -> usize {
        self.source_byte_size
    }

    pub const ROOT: NodeId = 0;

    pub fn root(&self) -> &DomNode {
        &self.nodes[Self::ROOT]
    }

    pub fn node(&self, id: NodeId) -> &DomNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[DomNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Serializes the tree back to markup. Every element gets explicit
    /// attributes `a0..aN` so that re-parsing reproduces the same tree.
    pub fn to_html(&self) -> String {
        let mut out = String::with_capacity(self.nodes.len() * 16);
        // (node, closing?)
        let mut stack = vec![(Self::ROOT, false)];
        while let Some((id, closing)) = stack.pop() {
            let node = &self.nodes[id];
            if closing {
                out.push_str("</");
                out.push_str(&node.tag);
                out.push('>');
                continue;
            }
            out.push('<');
            out.push_str(&node.tag);
            for a in 0..node.attribute_count {
                out.push_str(&format!(" a{a}=\"v\""));
            }
            out.push('>');
            if parse::is_void(&node.tag) {
                continue;
            }
            stack.push((id, true));
            for &child in node.children.iter().rev() {
                stack.push((child, false));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_child_tracks_depth_and_parent() {
        let mut t = DomTree::with_root("html", 0);
        let body = t.push_child(DomTree::ROOT, "body", 1);
        let p = t.push_child(body, "p", 2);
        assert_eq!(t.node(p).depth, 3);
        assert_eq!(t.node(p).parent, Some(body));
        assert_eq!(t.root().children, vec![body]);
        assert_eq!(t.depth(), 3);
    }

    #[test]
    fn html_round_trip_preserves_structure() {
        let mut t = DomTree::with_root("html", 1);
        let body = t.push_child(0, "body", 0);
        for i in 0..3 {
            let d = t.push_child(body, "div", i);
            t.push_child(d, "span", 0);
        }
        let html = t.to_html();
        let back = parse_html(&html).unwrap();
        assert_eq!(back.nodes(), t.nodes());
    }
}

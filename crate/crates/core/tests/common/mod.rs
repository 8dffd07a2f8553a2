#![allow(dead_code)]

use std::path::PathBuf;

use pagepar::dom::PageFeatures;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[allow(clippy::too_many_arguments)]
fn row(
    page_id: &str,
    dom_size: u64,
    attribute_count: u64,
    web_page_size: u64,
    tree_depth: u64,
    number_of_leaves: u64,
    max_tree_width: u64,
    max_avg_width_ratio: f64,
) -> PageFeatures {
    let avg = dom_size as f64 / tree_depth as f64;
    PageFeatures {
        page_id: page_id.into(),
        dom_size,
        attribute_count,
        web_page_size,
        tree_depth,
        number_of_leaves,
        avg_tree_width: avg,
        max_tree_width,
        max_avg_width_ratio,
        avg_work_per_level: avg,
    }
}

/// Hand-counted feature rows and width profiles for every fixture, sorted by
/// page id.
pub fn expected_fixtures() -> Vec<(PageFeatures, Vec<u64>)> {
    vec![
        // html(lang) > head > meta(charset), title ; body(class,id) > p(a,b)
        (row("attributes", 6, 6, 120, 3, 3, 3, 1.5), vec![1, 2, 3]),
        // html > body > div > span
        (row("chain", 4, 0, 50, 4, 1, 1, 1.0), vec![1, 1, 1, 1]),
        (row("five_node", 5, 0, 47, 3, 3, 3, 9.0 / 5.0), vec![1, 1, 3]),
        (row("single_node", 1, 0, 13, 1, 1, 1, 1.0), vec![1]),
        // doctype, comment and text skipped; script kept, its body skipped
        (row("skipped_content", 5, 0, 121, 4, 2, 2, 8.0 / 5.0), vec![1, 1, 2, 1]),
        // ul > li x3 (implicitly closed), img/br/input void, `disabled` counts
        (row("void_and_unclosed", 9, 3, 95, 4, 6, 4, 16.0 / 9.0), vec![1, 1, 4, 3]),
    ]
}

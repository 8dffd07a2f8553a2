//! Forgiving tag-soup reader.
//!
//! Only element structure is recovered: text, comments, doctypes and
//! processing instructions are skipped, and the contents of raw-text
//! elements (`script`, `style`, `textarea`, `title`) are not scanned for
//! markup. Recovery is limited to what structural counts need:
//!
//! * void elements never take children,
//! * an end tag closes the nearest matching open element and everything
//!   above it; unmatched end tags are ignored,
//! * a handful of elements (`p`, `li`, ...) implicitly close an open
//!   sibling of the same name,
//! * elements still open at EOF are closed,
//! * elements appearing after the root element was closed are attached
//!   to the root.

use super::{DomTree, NodeId};
use crate::error::{Error, Result};

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "keygen", "link", "meta", "param",
    "source", "track", "wbr",
];

const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style", "textarea", "title"];

const SELF_CLOSING_SIBLINGS: &[&str] = &["p", "li", "option", "dt", "dd", "tr", "td", "th"];

pub(crate) fn is_void(tag: &str) -> bool {
    VOID_ELEMENTS.contains(&tag)
}

struct StartTag {
    name: String,
    attribute_count: u32,
    self_closing: bool,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn starts_with(&self, s: &[u8]) -> bool {
        self.bytes[self.pos..].starts_with(s)
    }

    fn find(&self, needle: &[u8], from: usize) -> Option<usize> {
        if needle.is_empty() || from >= self.bytes.len() {
            return None;
        }
        self.bytes[from..]
            .windows(needle.len())
            .position(|w| w == needle)
            .map(|i| i + from)
    }

    fn find_ci(&self, needle: &[u8], from: usize) -> Option<usize> {
        if from >= self.bytes.len() {
            return None;
        }
        self.bytes[from..]
            .windows(needle.len())
            .position(|w| w.eq_ignore_ascii_case(needle))
            .map(|i| i + from)
    }

    fn skip_past(&mut self, needle: &[u8]) {
        self.pos = match self.find(needle, self.pos) {
            Some(i) => i + needle.len(),
            None => self.bytes.len(),
        };
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(0), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn tag_name(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(0), Some(b) if !b.is_ascii_whitespace() && b != b'/' && b != b'>')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.bytes[start..self.pos]).to_ascii_lowercase()
    }

    /// Called with `pos` just past `<`. Leaves `pos` after the closing `>`.
    fn start_tag(&mut self) -> StartTag {
        let name = self.tag_name();
        let mut attribute_count = 0;
        let mut self_closing = false;
        loop {
            self.skip_ws();
            match self.peek(0) {
                None => break,
                Some(b'>') => {
                    self.pos += 1;
                    break;
                }
                Some(b'/') => {
                    self.pos += 1;
                    if self.peek(0) == Some(b'>') {
                        self_closing = true;
                        self.pos += 1;
                        break;
                    }
                }
                Some(_) => {
                    // Attribute name: anything up to whitespace, `/`, `>` or `=`.
                    let start = self.pos;
                    while matches!(self.peek(0), Some(b) if !b.is_ascii_whitespace()
                        && b != b'/' && b != b'>' && b != b'=')
                    {
                        self.pos += 1;
                    }
                    if self.pos == start {
                        // Stray `=`.
                        self.pos += 1;
                        continue;
                    }
                    attribute_count += 1;
                    self.skip_ws();
                    if self.peek(0) == Some(b'=') {
                        self.pos += 1;
                        self.skip_ws();
                        self.attribute_value();
                    }
                }
            }
        }
        StartTag {
            name,
            attribute_count,
            self_closing,
        }
    }

    fn attribute_value(&mut self) {
        match self.peek(0) {
            Some(q @ (b'"' | b'\'')) => {
                self.pos += 1;
                self.skip_past(&[q]);
            }
            _ => {
                while matches!(self.peek(0), Some(b) if !b.is_ascii_whitespace() && b != b'>') {
                    self.pos += 1;
                }
            }
        }
    }
}

/// Parses HTML text into an element-only tree.
pub fn parse_html(text: &str) -> Result<DomTree> {
    let mut r = Reader {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let mut tree: Option<DomTree> = None;
    let mut open: Vec<NodeId> = Vec::new();

    while r.pos < r.bytes.len() {
        let Some(lt) = r.find(b"<", r.pos) else {
            break;
        };
        r.pos = lt;
        if r.starts_with(b"<!--") {
            r.pos += 4;
            r.skip_past(b"-->");
        } else if r.starts_with(b"<!") || r.starts_with(b"<?") {
            r.skip_past(b">");
        } else if r.starts_with(b"</") {
            r.pos += 2;
            let name = r.tag_name();
            r.skip_past(b">");
            if let Some(t) = tree.as_ref() {
                if let Some(idx) = open.iter().rposition(|&id| t.node(id).tag == name) {
                    open.truncate(idx);
                }
            }
        } else if matches!(r.peek(1), Some(b) if b.is_ascii_alphabetic()) {
            r.pos += 1;
            let tag = r.start_tag();

            if let (Some(t), Some(&top)) = (tree.as_ref(), open.last()) {
                if SELF_CLOSING_SIBLINGS.contains(&tag.name.as_str()) && t.node(top).tag == tag.name
                {
                    open.pop();
                }
            }

            let id = match tree.as_mut() {
                None => {
                    tree = Some(DomTree::with_root(tag.name.clone(), tag.attribute_count));
                    DomTree::ROOT
                }
                Some(t) => {
                    let parent = open.last().copied().unwrap_or(DomTree::ROOT);
                    t.push_child(parent, tag.name.clone(), tag.attribute_count)
                }
            };

            if tag.self_closing || is_void(&tag.name) {
                continue;
            }
            open.push(id);

            if RAW_TEXT_ELEMENTS.contains(&tag.name.as_str()) {
                let close = format!("</{}", tag.name);
                r.pos = r.find_ci(close.as_bytes(), r.pos).unwrap_or(r.bytes.len());
            }
        } else {
            // A bare `<` in text.
            r.pos += 1;
        }
    }

    let mut tree = tree.ok_or(Error::EmptyDocument)?;
    tree.set_source_byte_size(text.len());
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(t: &DomTree) -> Vec<&str> {
        t.nodes().iter().map(|n| n.tag.as_str()).collect()
    }

    #[test]
    fn counts_elements_and_attributes() {
        let html = "<html><body><p a=1 b=2>x</p></body></html>";
        let t = parse_html(html).unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(tags(&t), ["html", "body", "p"]);
        assert_eq!(t.node(2).attribute_count, 2);
        assert_eq!(t.node(2).depth, 3);
        assert_eq!(t.source_byte_size(), html.len());
    }

    #[test]
    fn single_element() {
        let t = parse_html("<html></html>").unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn empty_and_text_only_inputs_fail() {
        assert!(matches!(parse_html(""), Err(Error::EmptyDocument)));
        assert!(matches!(
            parse_html("just text <!-- and a comment -->"),
            Err(Error::EmptyDocument)
        ));
        assert!(matches!(parse_html("<!DOCTYPE html>"), Err(Error::EmptyDocument)));
    }

    #[test]
    fn skips_doctype_comments_and_raw_text() {
        let html = r#"<!DOCTYPE html>
<html><head><!-- <div> in a comment -->
<script>if (a < b) { document.write("<p>no</p>"); }</script>
<style>p > a { color: red }</style>
</head><body><p>ok</p></body></html>"#;
        let t = parse_html(html).unwrap();
        assert_eq!(tags(&t), ["html", "head", "script", "style", "body", "p"]);
        assert_eq!(t.node(5).depth, 3);
    }

    #[test]
    fn void_and_unquoted_attributes() {
        let html = "<div class=x id='y' data-z=\"a b\" hidden><img src=a.png><br><input type=text disabled></div>";
        let t = parse_html(html).unwrap();
        assert_eq!(tags(&t), ["div", "img", "br", "input"]);
        assert_eq!(t.root().attribute_count, 4);
        assert_eq!(t.node(1).attribute_count, 1);
        assert_eq!(t.node(3).attribute_count, 2);
        assert!(t.nodes()[1..].iter().all(|n| n.depth == 2));
    }

    #[test]
    fn duplicate_attributes_are_counted() {
        let t = parse_html("<p a=1 a=2 a=3></p>").unwrap();
        assert_eq!(t.root().attribute_count, 3);
    }

    #[test]
    fn unclosed_elements_close_at_eof() {
        let t = parse_html("<html><body><div><span>").unwrap();
        assert_eq!(t.node_count(), 4);
        assert_eq!(t.depth(), 4);
    }

    #[test]
    fn list_items_close_siblings() {
        let t = parse_html("<ul><li>a<li>b<li>c</ul>").unwrap();
        assert_eq!(t.node_count(), 4);
        assert_eq!(t.root().children.len(), 3);
    }

    #[test]
    fn unmatched_end_tag_is_ignored() {
        let t = parse_html("<div></span><p></p></div>").unwrap();
        assert_eq!(tags(&t), ["div", "p"]);
        assert_eq!(t.node(1).parent, Some(0));
    }

    #[test]
    fn trailing_elements_attach_to_root() {
        let t = parse_html("<html></html><p></p>").unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.node(1).parent, Some(0));
    }

    #[test]
    fn self_closing_syntax_and_case() {
        let t = parse_html("<HTML><Body><svg><path d='M0'/><circle/></svg></BODY></html>").unwrap();
        assert_eq!(tags(&t), ["html", "body", "svg", "path", "circle"]);
        assert_eq!(t.node(4).parent, Some(2));
    }

    #[test]
    fn bare_less_than_is_text() {
        let t = parse_html("<p>1 < 2 <3</p>").unwrap();
        assert_eq!(t.node_count(), 1);
    }

    #[test]
    fn unterminated_script_swallows_rest() {
        let t = parse_html("<html><script>var x = '<div>';").unwrap();
        assert_eq!(tags(&t), ["html", "script"]);
    }
}

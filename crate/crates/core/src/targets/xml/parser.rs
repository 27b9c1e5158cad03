//! Well-formedness parser for the mini-XML target (syntax stage).
//!
//! Iterative, with an explicit element stack, so hostile nesting cannot
//! overflow the call stack.

use crate::coverage::CoverageRecorder;
use crate::targets::Rejection;

pub(super) const SYNTAX_SITES: u16 = 39;

const MAX_NESTING: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<Node>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

impl Element {
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    /// Concatenated text children.
    pub fn text(&self) -> String {
        self.children
            .iter()
            .filter_map(|n| match n {
                Node::Text(t) => Some(t.as_str()),
                Node::Element(_) => None,
            })
            .collect()
    }
}

struct Parser<'a, 'c> {
    input: &'a [u8],
    pos: usize,
    cov: &'c mut CoverageRecorder,
}

fn is_name_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b':'
}

fn is_name_char(b: u8) -> bool {
    is_name_start(b) || b.is_ascii_digit() || b == b'-' || b == b'.'
}

impl<'a, 'c> Parser<'a, 'c> {
    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn starts_with(&self, s: &[u8]) -> bool {
        self.input[self.pos..].starts_with(s)
    }

    fn skip_ws(&mut self) {
        while let Some(b) = self.peek() {
            if !b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8, what: &str) -> Result<(), Rejection> {
        if self.cov.syn(0, self.peek() == Some(b)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Rejection::syntax(format!("expected {what} at {}", self.pos)))
        }
    }

    fn name(&mut self) -> Result<String, Rejection> {
        let start = self.pos;
        if !self.cov.syn(1, self.peek().is_some_and(is_name_start)) {
            return Err(Rejection::syntax(format!("expected a name at {start}")));
        }
        self.pos += 1;
        while self.peek().is_some_and(is_name_char) {
            self.pos += 1;
        }
        Ok(String::from_utf8_lossy(&self.input[start..self.pos]).into_owned())
    }

    /// Skip `<!-- ... -->`; the cursor is at `<!--`.
    fn comment(&mut self) -> Result<(), Rejection> {
        self.cov.syn_hit(2);
        self.pos += 4;
        match find(&self.input[self.pos..], b"--") {
            Some(off) => {
                self.pos += off + 2;
                if self.cov.syn(3, self.peek() == Some(b'>')) {
                    self.pos += 1;
                    Ok(())
                } else {
                    Err(Rejection::syntax("`--` inside comment"))
                }
            }
            None => {
                self.cov.syn_hit(4);
                Err(Rejection::syntax("unterminated comment"))
            }
        }
    }

    /// Skip `<?target ... ?>`; the cursor is at `<?`.
    fn processing_instruction(&mut self) -> Result<(), Rejection> {
        self.cov.syn_hit(5);
        self.pos += 2;
        self.name()?;
        match find(&self.input[self.pos..], b"?>") {
            Some(off) => {
                self.pos += off + 2;
                Ok(())
            }
            None => {
                self.cov.syn_hit(6);
                Err(Rejection::syntax("unterminated processing instruction"))
            }
        }
    }

    /// Decode one reference; the cursor is at `&`.
    fn reference(&mut self, out: &mut String) -> Result<(), Rejection> {
        self.pos += 1;
        let Some(off) = self.input[self.pos..].iter().position(|&b| b == b';') else {
            self.cov.syn_hit(7);
            return Err(Rejection::syntax("unterminated reference"));
        };
        let body = &self.input[self.pos..self.pos + off];
        self.pos += off + 1;
        if self.cov.syn(8, body.first() == Some(&b'#')) {
            let (digits, radix) = if self.cov.syn(9, body.get(1) == Some(&b'x')) {
                (&body[2..], 16)
            } else {
                (&body[1..], 10)
            };
            let valid_digit = |b: &u8| (*b as char).is_digit(radix);
            if self.cov.syn(10, digits.is_empty() || !digits.iter().all(valid_digit)) {
                return Err(Rejection::syntax("malformed character reference"));
            }
            if self.cov.syn(11, digits.len() > 7) {
                return Err(Rejection::syntax("character reference too long"));
            }
            let text = std::str::from_utf8(digits).expect("ascii digits");
            let value = u32::from_str_radix(text, radix).expect("bounded digit run");
            if self.cov.syn(12, value == 0) {
                return Err(Rejection::syntax("reference to NUL"));
            }
            self.cov.syn_hit(13);
            out.push(char::from_u32(value).unwrap());
            return Ok(());
        }
        let entity = match body {
            b"lt" => '<',
            b"gt" => '>',
            b"amp" => '&',
            b"quot" => '"',
            b"apos" => '\'',
            _ => {
                self.cov.syn_hit(14);
                return Err(Rejection::syntax("unknown entity"));
            }
        };
        self.cov.syn_hit(15);
        out.push(entity);
        Ok(())
    }

    fn attribute_value(&mut self) -> Result<String, Rejection> {
        let quote = match self.peek() {
            Some(q @ (b'"' | b'\'')) => {
                self.cov.syn(16, q == b'"');
                q
            }
            _ => {
                self.cov.syn_hit(17);
                return Err(Rejection::syntax("attribute value must be quoted"));
            }
        };
        self.pos += 1;
        let mut value = String::new();
        let mut raw = Vec::new();
        loop {
            match self.peek() {
                None => {
                    self.cov.syn_hit(18);
                    return Err(Rejection::syntax("unterminated attribute value"));
                }
                Some(b) if b == quote => {
                    self.pos += 1;
                    break;
                }
                Some(b'<') => {
                    self.cov.syn_hit(19);
                    return Err(Rejection::syntax("`<` in attribute value"));
                }
                Some(b'&') => {
                    flush_utf8(&mut raw, &mut value, self.cov)?;
                    self.reference(&mut value)?;
                }
                Some(b) => {
                    raw.push(b);
                    self.pos += 1;
                }
            }
        }
        flush_utf8(&mut raw, &mut value, self.cov)?;
        Ok(value)
    }

    /// Parse `<name attr="v" ...` up to and including `>` or `/>`.
    /// Returns the element and whether it was self-closing.
    fn start_tag(&mut self) -> Result<(Element, bool), Rejection> {
        self.pos += 1;
        let name = self.name()?;
        let mut attributes: Vec<(String, String)> = Vec::new();
        loop {
            let before = self.pos;
            self.skip_ws();
            match self.peek() {
                Some(b'>') => {
                    self.cov.syn_hit(20);
                    self.pos += 1;
                    return Ok((element(name, attributes), false));
                }
                Some(b'/') => {
                    self.cov.syn_hit(21);
                    self.pos += 1;
                    self.expect(b'>', "`>` after `/`")?;
                    return Ok((element(name, attributes), true));
                }
                None => {
                    self.cov.syn_hit(22);
                    return Err(Rejection::syntax("unterminated start tag"));
                }
                Some(_) => {
                    if self.cov.syn(23, before == self.pos) {
                        return Err(Rejection::syntax("missing whitespace before attribute"));
                    }
                    let key = self.name()?;
                    self.skip_ws();
                    self.expect(b'=', "`=`")?;
                    self.skip_ws();
                    let value = self.attribute_value()?;
                    if self.cov.syn(24, attributes.iter().any(|(k, _)| *k == key)) {
                        return Err(Rejection::syntax(format!("duplicate attribute `{key}`")));
                    }
                    attributes.push((key, value));
                }
            }
        }
    }

    fn document(&mut self) -> Result<Element, Rejection> {
        self.skip_ws();
        if self.cov.syn(25, self.starts_with(b"<?")) {
            self.processing_instruction()?;
        }
        self.misc()?;
        if !self.cov.syn(26, self.peek() == Some(b'<')) {
            return Err(Rejection::syntax("document must start with an element"));
        }
        let root = self.content_tree()?;
        self.misc()?;
        if self.cov.syn(27, self.pos < self.input.len()) {
            return Err(Rejection::syntax("content after the root element"));
        }
        Ok(root)
    }

    /// Whitespace and comments.
    fn misc(&mut self) -> Result<(), Rejection> {
        loop {
            self.skip_ws();
            if self.starts_with(b"<!--") {
                self.comment()?;
            } else {
                return Ok(());
            }
        }
    }

    fn content_tree(&mut self) -> Result<Element, Rejection> {
        let (root, closed) = self.start_tag()?;
        if self.cov.syn(28, closed) {
            return Ok(root);
        }
        let mut stack: Vec<Element> = vec![root];
        let mut text = String::new();
        let mut raw = Vec::new();
        loop {
            match self.peek() {
                None => {
                    self.cov.syn_hit(29);
                    return Err(Rejection::syntax("unclosed element"));
                }
                Some(b'<') => {
                    flush_utf8(&mut raw, &mut text, self.cov)?;
                    if !text.is_empty() {
                        let top = stack.last_mut().expect("open element");
                        top.children.push(Node::Text(std::mem::take(&mut text)));
                    }
                    if self.starts_with(b"</") {
                        self.pos += 2;
                        let name = self.name()?;
                        self.skip_ws();
                        self.expect(b'>', "`>` closing end tag")?;
                        let done = stack.pop().expect("open element");
                        if self.cov.syn(30, done.name != name) {
                            return Err(Rejection::syntax(format!(
                                "unmatched end tag `{name}` for `{}`",
                                done.name
                            )));
                        }
                        match stack.last_mut() {
                            Some(parent) => parent.children.push(Node::Element(done)),
                            None => {
                                self.cov.syn_hit(31);
                                return Ok(done);
                            }
                        }
                    } else if self.starts_with(b"<!--") {
                        self.comment()?;
                    } else if self.cov.syn(32, self.starts_with(b"<![CDATA[")) {
                        self.pos += 9;
                        let Some(off) = find(&self.input[self.pos..], b"]]>") else {
                            return Err(Rejection::syntax("unterminated CDATA"));
                        };
                        raw.extend_from_slice(&self.input[self.pos..self.pos + off]);
                        self.pos += off + 3;
                    } else {
                        let (child, closed) = self.start_tag()?;
                        if self.cov.syn(33, closed) {
                            stack.last_mut().expect("open element").children.push(Node::Element(child));
                        } else {
                            if self.cov.syn(34, stack.len() >= MAX_NESTING) {
                                return Err(Rejection::syntax("nesting too deep"));
                            }
                            stack.push(child);
                        }
                    }
                }
                Some(b'&') => {
                    flush_utf8(&mut raw, &mut text, self.cov)?;
                    self.reference(&mut text)?;
                }
                Some(b'>') => {
                    self.cov.syn_hit(35);
                    return Err(Rejection::syntax("bare `>` in content"));
                }
                Some(b) => {
                    raw.push(b);
                    self.pos += 1;
                }
            }
        }
    }
}

fn element(name: String, attributes: Vec<(String, String)>) -> Element {
    Element {
        name,
        attributes,
        children: Vec::new(),
    }
}

fn flush_utf8(raw: &mut Vec<u8>, out: &mut String, cov: &mut CoverageRecorder) -> Result<(), Rejection> {
    if raw.is_empty() {
        return Ok(());
    }
    match std::str::from_utf8(raw) {
        Ok(s) => {
            cov.syn_hit(36);
            out.push_str(s);
            raw.clear();
            Ok(())
        }
        Err(_) => {
            cov.syn_hit(37);
            Err(Rejection::syntax("invalid UTF-8"))
        }
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Parse a complete document into its root element.
pub fn parse(input: &[u8], cov: &mut CoverageRecorder) -> Result<Element, Rejection> {
    let mut parser = Parser { input, pos: 0, cov };
    let root = parser.document();
    parser.cov.syn(38, root.is_ok());
    root
}

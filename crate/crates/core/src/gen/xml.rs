use super::{gen_string, gen_string_with_start, pooled_or, Alphabet, GeneratedInput, Generator, GeneratorConfig};
use crate::param::{GenError, ParametricSource};
use std::fmt::Write as _;

/// Element names understood by the built-in build-file target.
pub const DEFAULT_XML_NAMES: &[&str] = &[
    "project", "target", "property", "path", "pathelement", "fileset", "include", "description",
    "augment", "taskdef", "echo", "mkdir", "copy", "javac", "antcall", "delete",
];

pub const DEFAULT_XML_ATTRIBUTES: &[&str] = &[
    "name", "default", "basedir", "value", "location", "id", "depends", "if", "unless", "message",
    "level", "dir", "file", "tofile", "todir", "srcdir", "destdir", "classpathref", "debug",
    "target", "classname",
];

pub const DEFAULT_XML_VALUES: &[&str] = &[
    "main", "build", "compile", "clean", "src", "lib", "cp", "true", "false", "info", "debug",
    "build,compile", "a.txt", "out",
];

/// In-memory document tree, serialized only once generation finishes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XmlElement {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<XmlElement>,
    pub text: Option<String>,
}

impl XmlElement {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            attributes: Vec::new(),
            children: Vec::new(),
            text: None,
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.write_to(&mut out);
        out
    }

    fn write_to(&self, out: &mut String) {
        out.push('<');
        out.push_str(&self.name);
        for (k, v) in &self.attributes {
            let _ = write!(out, " {k}=\"");
            escape_into(v, out, true);
            out.push('"');
        }
        if self.children.is_empty() && self.text.is_none() {
            out.push_str(" />");
            return;
        }
        out.push('>');
        for child in &self.children {
            child.write_to(out);
        }
        if let Some(text) = &self.text {
            escape_into(text, out, false);
        }
        let _ = write!(out, "</{}>", self.name);
    }
}

fn escape_into(s: &str, out: &mut String, in_attribute: bool) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' if in_attribute => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
}

/// Recursive XML document generator.
///
/// Per element it decodes, in order: the name, the attributes (when
/// `max_attributes > 0`), the child count `nextInt(max_children)` (only below
/// `max_depth`), the children, then a boolean deciding whether to embed text.
pub struct XmlGenerator {
    config: GeneratorConfig,
    name_start: Alphabet,
    name_rest: Alphabet,
    text: Alphabet,
}

impl Default for XmlGenerator {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self::new(GeneratorConfig {
            max_depth: 5,
            max_children: 4,
            max_str_len: 10,
            max_attributes: 2,
            name_pool: owned(DEFAULT_XML_NAMES),
            attribute_pool: owned(DEFAULT_XML_ATTRIBUTES),
            value_pool: owned(DEFAULT_XML_VALUES),
            keep_structure: false,
        })
        .expect("default config is valid")
    }
}

impl XmlGenerator {
    pub fn new(config: GeneratorConfig) -> Result<Self, GenError> {
        config.validate()?;
        Ok(Self {
            config,
            name_start: Alphabet::new(('a'..='z').chain('A'..='Z').chain(['_'])),
            name_rest: Alphabet::identifier(),
            text: Alphabet::printable(),
        })
    }

    /// No literal pools and no attributes: every choice is a plain
    /// `nextInt`/`nextBool`/`nextChar` call, in the order described above.
    pub fn plain() -> Self {
        Self::new(GeneratorConfig {
            max_depth: 5,
            max_children: 4,
            max_str_len: 10,
            max_attributes: 0,
            name_pool: Vec::new(),
            attribute_pool: Vec::new(),
            value_pool: Vec::new(),
            keep_structure: false,
        })
        .expect("plain config is valid")
    }

    fn name(&self, src: &mut ParametricSource<'_>, pool: &[String]) -> Result<String, GenError> {
        pooled_or(src, pool, |src| {
            gen_string_with_start(src, self.config.max_str_len, &self.name_start, &self.name_rest)
        })
    }

    fn value(&self, src: &mut ParametricSource<'_>) -> Result<String, GenError> {
        pooled_or(src, &self.config.value_pool, |src| {
            gen_string(src, self.config.max_str_len, &self.text)
        })
    }

    pub fn gen_element(
        &self,
        src: &mut ParametricSource<'_>,
        depth: u32,
    ) -> Result<XmlElement, GenError> {
        let mut node = XmlElement::new(self.name(src, &self.config.name_pool)?);
        if self.config.max_attributes > 0 {
            let count = src.next_int(self.config.max_attributes as usize + 1)?;
            for _ in 0..count {
                let key = match self.config.attribute_pool.as_slice() {
                    [] => self.name(src, &[])?,
                    pool => src.choose_from(pool)?.clone(),
                };
                let value = self.value(src)?;
                if node.attributes.iter().all(|(k, _)| *k != key) {
                    node.attributes.push((key, value));
                }
            }
        }
        if depth < self.config.max_depth {
            let n = src.next_int(self.config.max_children as usize)?;
            for _ in 0..n {
                node.children.push(self.gen_element(src, depth + 1)?);
            }
        }
        if src.next_bool()? {
            node.text = Some(self.value(src)?);
        }
        Ok(node)
    }

    pub fn gen_document(&self, src: &mut ParametricSource<'_>) -> Result<XmlElement, GenError> {
        self.gen_element(src, 1)
    }
}

impl Generator for XmlGenerator {
    fn name(&self) -> &'static str {
        "xml"
    }

    fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    fn generate(&self, source: &mut ParametricSource<'_>) -> Result<GeneratedInput, GenError> {
        let root = self.gen_document(source)?;
        Ok(GeneratedInput {
            text: root.serialize().into_bytes(),
            structure: self.config.keep_structure.then(|| format!("{root:#?}")),
        })
    }
}

//! Generators: deterministic functions from a [`ParametricSource`] to a
//! serialized, syntactically valid input.

mod script;
mod xml;

pub use script::{ScriptGenerator, DEFAULT_IDENTIFIERS, DEFAULT_PROPERTIES};
pub use xml::{XmlElement, XmlGenerator, DEFAULT_XML_ATTRIBUTES, DEFAULT_XML_NAMES, DEFAULT_XML_VALUES};

use crate::param::{GenError, ParametricSource};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Output of one generator run.
///
/// `text` is the only thing a target ever sees. `structure` holds a debug
/// rendering of the in-memory tree when the generator was asked to keep it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedInput {
    pub text: Vec<u8>,
    pub structure: Option<String>,
}

impl GeneratedInput {
    pub fn text_lossy(&self) -> String {
        String::from_utf8_lossy(&self.text).into_owned()
    }
}

pub trait Generator: Send + Sync {
    fn name(&self) -> &'static str;

    fn config(&self) -> &GeneratorConfig;

    fn generate(&self, source: &mut ParametricSource<'_>) -> Result<GeneratedInput, GenError>;

    /// Identifies name and configuration; replay refuses to mix fingerprints.
    fn fingerprint(&self) -> String {
        format!(
            "{}:{}",
            self.name(),
            serde_json::to_string(self.config()).expect("config serializes")
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub max_depth: u32,
    pub max_children: u32,
    pub max_str_len: u32,
    /// Attributes per element are drawn from `0..=max_attributes`.
    #[serde(default)]
    pub max_attributes: u32,
    /// Element names (xml) or identifiers (script).
    #[serde(default)]
    pub name_pool: Vec<String>,
    /// Attribute names (xml) or property names (script).
    #[serde(default)]
    pub attribute_pool: Vec<String>,
    /// Text and attribute values.
    #[serde(default)]
    pub value_pool: Vec<String>,
    /// Keep a debug rendering of the generated tree.
    #[serde(default)]
    pub keep_structure: bool,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |what: &str| Err(GenError::Config(format!("{what} must be >= 1")));
        if self.max_depth < 1 {
            return bad("max_depth");
        }
        if self.max_children < 1 {
            return bad("max_children");
        }
        if self.max_str_len < 2 {
            return Err(GenError::Config("max_str_len must be >= 2".into()));
        }
        Ok(())
    }
}

/// Load a literal pool: one literal per line, blank lines skipped.
pub fn load_pool(path: &Path) -> std::io::Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// A restricted character set. Decoded characters already in the set pass
/// through unchanged; anything else is remapped to `chars[n % len]`.
pub struct Alphabet {
    chars: Vec<char>,
    member: [bool; 256],
}

impl Alphabet {
    pub fn new<I: IntoIterator<Item = char>>(chars: I) -> Self {
        let chars: Vec<char> = chars.into_iter().collect();
        assert!(!chars.is_empty());
        let mut member = [false; 256];
        for &c in &chars {
            member[c as usize & 0xff] = (c as u32) < 256;
        }
        Self { chars, member }
    }

    pub fn map(&self, c: char) -> char {
        let n = c as usize & 0xff;
        if self.member[n] {
            c
        } else {
            self.chars[n % self.chars.len()]
        }
    }

    pub fn contains(&self, c: char) -> bool {
        (c as u32) < 256 && self.member[c as usize]
    }

    pub fn letters() -> Self {
        Self::new(('a'..='z').chain('A'..='Z'))
    }

    pub fn identifier() -> Self {
        Self::new(('a'..='z').chain('A'..='Z').chain('0'..='9').chain(['_']))
    }

    /// Printable ASCII.
    pub fn printable() -> Self {
        Self::new((0x20u8..=0x7e).map(char::from))
    }
}

/// A string of length `nextInt(1, max_str_len)` over `alphabet`.
pub fn gen_string(
    source: &mut ParametricSource<'_>,
    max_str_len: u32,
    alphabet: &Alphabet,
) -> Result<String, GenError> {
    gen_string_with_start(source, max_str_len, alphabet, alphabet)
}

/// Like [`gen_string`], with a separate alphabet for the first character.
pub fn gen_string_with_start(
    source: &mut ParametricSource<'_>,
    max_str_len: u32,
    start: &Alphabet,
    rest: &Alphabet,
) -> Result<String, GenError> {
    let len = source.next_int_in_range(1, max_str_len as i64)?;
    let mut out = String::with_capacity(len as usize);
    for i in 0..len {
        let c = source.next_char()?;
        out.push(if i == 0 { start.map(c) } else { rest.map(c) });
    }
    Ok(out)
}

/// Either a pooled literal or a fresh string, chosen by one boolean.
/// With an empty pool no boolean is consumed.
pub(crate) fn pooled_or<F>(
    source: &mut ParametricSource<'_>,
    pool: &[String],
    fresh: F,
) -> Result<String, GenError>
where
    F: FnOnce(&mut ParametricSource<'_>) -> Result<String, GenError>,
{
    if !pool.is_empty() && source.next_bool()? {
        return Ok(source.choose_from(pool)?.clone());
    }
    fresh(source)
}

/// Look up a built-in generator by its CLI name.
pub fn generator_by_name(
    name: &str,
    config: Option<GeneratorConfig>,
) -> Result<Box<dyn Generator>, GenError> {
    match name {
        "xml" => Ok(Box::new(match config {
            Some(c) => XmlGenerator::new(c)?,
            None => XmlGenerator::default(),
        })),
        "script" => Ok(Box::new(match config {
            Some(c) => ScriptGenerator::new(c)?,
            None => ScriptGenerator::default(),
        })),
        other => Err(GenError::Config(format!("unknown generator `{other}`"))),
    }
}

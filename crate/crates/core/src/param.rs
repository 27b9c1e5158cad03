//! Untyped parameter sequences and the typed decoders that consume them.
//!
//! A parametric generator never sees a pseudo-random number generator. It
//! pulls typed choices out of a [`ParametricSource`], which reads octets from a
//! stored [`ParameterSequence`]. When the stored octets run out, the source
//! draws fresh octets from an [`ExtensionStream`] and appends them to the
//! sequence, so the sequence left behind after a run replays that run exactly.
//!
//! Every decoder consumes a fixed number of octets and accepts every octet
//! value: one octet for [`ParametricSource::next_bool`],
//! [`ParametricSource::next_char`] and integer ranges of width at most 256,
//! four little-endian octets for wider integer ranges.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the length of a parameter sequence (64 KiB).
pub const DEFAULT_MAX_SEQUENCE_LEN: usize = 64 * 1024;

/// The untyped octets a parametric generator consumes.
///
/// `id` is assigned by the engine that created the sequence and is unique
/// within a campaign. Sequences are never mutated in place once stored:
/// mutation builds a new sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParameterSequence {
    pub id: u64,
    bytes: Vec<u8>,
}

impl ParameterSequence {
    pub fn new(id: u64, bytes: Vec<u8>) -> Self {
        Self { id, bytes }
    }

    pub fn empty(id: u64) -> Self {
        Self::new(id, Vec::new())
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Drop everything past the first `len` octets.
    pub fn truncate(&mut self, len: usize) {
        self.bytes.truncate(len);
    }

    pub(crate) fn bytes_mut(&mut self) -> &mut Vec<u8> {
        &mut self.bytes
    }
}

/// Errors raised while decoding a parameter sequence.
///
/// These are generator-side problems. None of them is a target failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("empty integer range [{low}, {high})")]
    EmptyRange { low: i64, high: i64 },
    #[error("cannot choose from an empty collection")]
    EmptyChoice,
    #[error("parameter sequence would exceed the {cap}-octet cap")]
    LengthCap { cap: usize },
    #[error("parameter sequence exhausted during replay after {consumed} octets")]
    Exhausted { consumed: usize },
    #[error("invalid generator configuration: {0}")]
    Config(String),
}

/// Deterministic octet stream used to extend sequences on demand.
///
/// Backed by ChaCha8, which is counter-based: the stream position alone
/// determines the next octet.
#[derive(Clone, Debug)]
pub struct ExtensionStream {
    rng: ChaCha8Rng,
    buf: [u8; 8],
    avail: usize,
}

impl ExtensionStream {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x5e9_e7e7);
        Self {
            rng,
            buf: [0; 8],
            avail: 0,
        }
    }

    pub fn next_octet(&mut self) -> u8 {
        if self.avail == 0 {
            self.buf = self.rng.next_u64().to_le_bytes();
            self.avail = 8;
        }
        self.avail -= 1;
        self.buf[7 - self.avail]
    }
}

/// A cursor over a parameter sequence that decodes typed random choices.
///
/// With an extension stream attached, running off the end of the stored
/// octets appends fresh octets to the sequence. Without one (replay mode),
/// running off the end is reported as [`GenError::Exhausted`].
pub struct ParametricSource<'a> {
    sequence: &'a mut ParameterSequence,
    cursor: usize,
    extension: Option<&'a mut ExtensionStream>,
    max_len: usize,
    consumed: usize,
    extended: usize,
}

impl<'a> ParametricSource<'a> {
    pub fn new(
        sequence: &'a mut ParameterSequence,
        extension: Option<&'a mut ExtensionStream>,
        max_len: usize,
    ) -> Self {
        Self {
            sequence,
            cursor: 0,
            extension,
            max_len,
            consumed: 0,
            extended: 0,
        }
    }

    /// A source that never extends; exhaustion is an error.
    pub fn replaying(sequence: &'a mut ParameterSequence) -> Self {
        Self::new(sequence, None, usize::MAX)
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Octets delivered to decoders so far this run.
    pub fn consumed(&self) -> usize {
        self.consumed
    }

    /// Octets appended through [`extend`](Self::extend) this run.
    pub fn extended(&self) -> usize {
        self.extended
    }

    pub fn sequence(&self) -> &ParameterSequence {
        self.sequence
    }

    /// Draw `needed` octets from the extension stream and append them.
    ///
    /// Only valid once the cursor has reached the end of the stored octets.
    pub fn extend(&mut self, needed: usize) -> Result<&[u8], GenError> {
        debug_assert_eq!(self.cursor, self.sequence.len());
        let start = self.sequence.len();
        if needed == 0 {
            return Ok(&self.sequence.bytes()[start..]);
        }
        let Some(stream) = self.extension.as_deref_mut() else {
            return Err(GenError::Exhausted {
                consumed: self.consumed,
            });
        };
        if start + needed > self.max_len {
            return Err(GenError::LengthCap { cap: self.max_len });
        }
        let bytes = self.sequence.bytes_mut();
        bytes.extend((0..needed).map(|_| stream.next_octet()));
        self.extended += needed;
        Ok(&self.sequence.bytes()[start..])
    }

    fn next_octet(&mut self) -> Result<u8, GenError> {
        if self.cursor == self.sequence.len() {
            self.extend(1)?;
        }
        let octet = self.sequence.bytes()[self.cursor];
        self.cursor += 1;
        self.consumed += 1;
        Ok(octet)
    }

    /// `n` raw octets.
    pub fn next_octets(&mut self, n: usize) -> Result<Vec<u8>, GenError> {
        (0..n).map(|_| self.next_octet()).collect()
    }

    /// Uniform-ish integer in `[low, high)`: `n mod (high - low) + low`.
    pub fn next_int_in_range(&mut self, low: i64, high: i64) -> Result<i64, GenError> {
        if low >= high {
            return Err(GenError::EmptyRange { low, high });
        }
        let width = (high as i128 - low as i128) as u128;
        let n = if width <= 256 {
            self.next_octet()? as u128
        } else {
            let mut le = [0u8; 4];
            for b in &mut le {
                *b = self.next_octet()?;
            }
            u32::from_le_bytes(le) as u128
        };
        Ok((low as i128 + (n % width) as i128) as i64)
    }

    /// Integer in `[0, bound)`.
    pub fn next_int(&mut self, bound: usize) -> Result<usize, GenError> {
        Ok(self.next_int_in_range(0, bound as i64)? as usize)
    }

    /// True iff the least-significant bit of the next octet is set.
    pub fn next_bool(&mut self) -> Result<bool, GenError> {
        Ok(self.next_octet()? & 1 == 1)
    }

    /// The character whose code point is the next octet (0..=255).
    pub fn next_char(&mut self) -> Result<char, GenError> {
        Ok(char::from(self.next_octet()?))
    }

    pub fn choose_from<'i, T>(&mut self, items: &'i [T]) -> Result<&'i T, GenError> {
        if items.is_empty() {
            return Err(GenError::EmptyChoice);
        }
        Ok(&items[self.next_int(items.len())?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(bytes: &[u8]) -> ParameterSequence {
        ParameterSequence::new(0, bytes.to_vec())
    }

    #[test]
    fn int_in_range_matches_worked_example() {
        let mut s = seq(&[0b0000_0010]);
        let mut src = ParametricSource::replaying(&mut s);
        assert_eq!(src.next_int_in_range(1, 16).unwrap(), 3);
    }

    #[test]
    fn singleton_range_forces_low() {
        let mut s = seq(&[0xff]);
        let mut src = ParametricSource::replaying(&mut s);
        assert_eq!(src.next_int_in_range(5, 6).unwrap(), 5);
    }

    #[test]
    fn int_in_range_exhaustive_mod_seven() {
        let table: Vec<i64> = (0..=255u32).map(|n| (n % 7) as i64).collect();
        for n in 0..=255u8 {
            let mut s = seq(&[n]);
            let mut src = ParametricSource::replaying(&mut s);
            assert_eq!(src.next_int_in_range(0, 7).unwrap(), table[n as usize]);
            assert_eq!(src.consumed(), 1);
        }
    }

    #[test]
    fn wide_range_consumes_four_octets_little_endian() {
        let mut s = seq(&[0x01, 0x02, 0x00, 0x00, 0xaa]);
        let mut src = ParametricSource::replaying(&mut s);
        assert_eq!(src.next_int_in_range(0, 1000).unwrap(), 0x0201 % 1000);
        assert_eq!(src.consumed(), 4);
    }

    #[test]
    fn empty_range_is_a_generator_error() {
        let mut s = seq(&[0]);
        let mut src = ParametricSource::replaying(&mut s);
        assert_eq!(
            src.next_int_in_range(3, 3),
            Err(GenError::EmptyRange { low: 3, high: 3 })
        );
    }

    #[test]
    fn bool_uses_lsb() {
        let mut s = seq(&[0b0000_0000, 0b0000_0001, 0b1111_1110]);
        let mut src = ParametricSource::replaying(&mut s);
        assert!(!src.next_bool().unwrap());
        assert!(src.next_bool().unwrap());
        assert!(!src.next_bool().unwrap());
    }

    #[test]
    fn char_is_identity_on_code_points() {
        let mut s = seq(&[0x66, 0x00, 0x57, 0x48]);
        let mut src = ParametricSource::replaying(&mut s);
        assert_eq!(src.next_char().unwrap(), 'f');
        assert_eq!(src.next_char().unwrap(), '\0');
        assert_eq!(src.next_char().unwrap(), 'W');
        assert_eq!(src.next_char().unwrap(), 'H');
    }

    #[test]
    fn choose_from_cases() {
        let mut s = seq(&[0x00, 0x03]);
        let mut src = ParametricSource::replaying(&mut s);
        assert_eq!(*src.choose_from(&["x"]).unwrap(), "x");
        assert_eq!(*src.choose_from(&[10, 11, 12, 13]).unwrap(), 13);
        let empty: [u8; 0] = [];
        assert_eq!(src.choose_from(&empty), Err(GenError::EmptyChoice));
    }

    #[test]
    fn choose_from_exhaustive_ten() {
        let items: Vec<usize> = (0..10).collect();
        for n in 0..=255u8 {
            let mut s = seq(&[n]);
            let mut src = ParametricSource::replaying(&mut s);
            assert_eq!(*src.choose_from(&items).unwrap(), n as usize % 10);
        }
    }

    #[test]
    fn extension_appends_and_replays() {
        let mut stream = ExtensionStream::new(7);
        let mut s = ParameterSequence::empty(0);
        let first = {
            let mut src = ParametricSource::new(&mut s, Some(&mut stream), 16);
            let c = src.next_char().unwrap();
            assert_eq!(src.extended(), 1);
            c
        };
        assert_eq!(s.len(), 1);
        let mut src = ParametricSource::replaying(&mut s);
        assert_eq!(src.next_char().unwrap(), first);
        assert_eq!(src.extended(), 0);
        assert!(matches!(src.next_char(), Err(GenError::Exhausted { .. })));
    }

    #[test]
    fn extend_zero_is_a_no_op() {
        let mut stream = ExtensionStream::new(1);
        let mut s = ParameterSequence::empty(0);
        let mut src = ParametricSource::new(&mut s, Some(&mut stream), 16);
        assert!(src.extend(0).unwrap().is_empty());
        assert_eq!(src.extended(), 0);
        drop(src);
        assert!(s.is_empty());
    }

    #[test]
    fn length_cap_aborts() {
        let mut stream = ExtensionStream::new(1);
        let mut s = ParameterSequence::new(0, vec![1, 2]);
        let mut src = ParametricSource::new(&mut s, Some(&mut stream), 3);
        src.next_octets(3).unwrap();
        assert_eq!(src.next_bool(), Err(GenError::LengthCap { cap: 3 }));
    }

    #[test]
    fn octet_accounting() {
        let mut stream = ExtensionStream::new(3);
        let mut s = ParameterSequence::new(0, vec![9, 9]);
        let mut src = ParametricSource::new(&mut s, Some(&mut stream), 64);
        src.next_octets(5).unwrap();
        assert_eq!(src.consumed(), 2 + src.extended());
    }

    #[test]
    fn extension_stream_is_seed_deterministic() {
        let mut a = ExtensionStream::new(99);
        let mut b = ExtensionStream::new(99);
        let mut c = ExtensionStream::new(100);
        let xa: Vec<u8> = (0..32).map(|_| a.next_octet()).collect();
        let xb: Vec<u8> = (0..32).map(|_| b.next_octet()).collect();
        let xc: Vec<u8> = (0..32).map(|_| c.next_octet()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }
}

//! A parametric generator turns raw octets into a well-formed document.
//! Small edits to the octets make structural edits to the document.

use zest::engine::{MutationParams, Mutator};
use zest::gen::{Generator, XmlGenerator};
use zest::param::{ExtensionStream, ParameterSequence, ParametricSource};
use rand::SeedableRng;

fn generate(gen: &XmlGenerator, bytes: &[u8]) -> String {
    let mut seq = ParameterSequence::new(0, bytes.to_vec());
    let mut src = ParametricSource::replaying(&mut seq);
    gen.generate(&mut src).expect("sequence is long enough").text_lossy()
}

fn main() {
    let gen = XmlGenerator::plain();

    // root name "foo", two children: bar with text "Hello", and an empty baz
    let mut x1 = vec![0x02, b'f', b'o', b'o', 0x02];
    x1.extend([0x02, b'b', b'a', b'r', 0x00, 0x01, 0x04]);
    x1.extend(b"Hello");
    x1.extend([0x02, b'b', b'a', b'z', 0x00, 0x00, 0x00]);
    println!("x1 = {}", generate(&gen, &x1));

    let mut x2 = x1.clone();
    x2[1] = 0x57;
    println!("x2 = {}  (one name octet changed)", generate(&gen, &x2));

    let mut x3 = x1.clone();
    x3[4] = 0x01;
    println!("x3 = {}  (child count octet changed)", generate(&gen, &x3));

    // random parameters still give well-formed documents
    let gen = XmlGenerator::default();
    let mut stream = ExtensionStream::new(7);
    let mutator = Mutator::new(&MutationParams::default());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for i in 0..3 {
        let mut seq = ParameterSequence::empty(i);
        let mut src = ParametricSource::new(&mut seq, Some(&mut stream), 1 << 16);
        let doc = gen.generate(&mut src).unwrap().text_lossy();
        let consumed = src.consumed();
        println!("\nrandom #{i}: {consumed} octets\n  {doc}");
        let child = mutator.mutate(&seq.bytes()[..consumed], &mut rng);
        let mut mutated = ParameterSequence::new(i, child.bytes);
        let mut src = ParametricSource::new(&mut mutated, Some(&mut stream), 1 << 16);
        println!("mutated ({} windows):\n  {}", child.windows.len(), gen.generate(&mut src).unwrap().text_lossy());
    }
}

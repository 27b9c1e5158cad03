//! Failures are grouped by (type, message, location); each group keeps its
//! earliest witness.

use zest::engine::triage;
use zest::outcome::FailureKey;

fn main() {
    let npe = FailureKey::new("NoneUnwrap", "called `Option::unwrap()` on a `None` value", "minixml/semantic:70");
    let oob = FailureKey::new("IndexOutOfBounds", "index out of bounds: the len is # but the index is #", "minixml/semantic:57");
    let elsewhere = FailureKey::new(npe.error_type.clone(), npe.message.clone(), "minixml/semantic:35");

    let stream = vec![
        (npe.clone(), 4.0, "<project><path id=\"a\" /><augment /></project>"),
        (oob.clone(), 1.5, "<project><description /><description /></project>"),
        (npe.clone(), 2.0, "<project><path id=\"b\" /><augment /></project>"),
        (elsewhere.clone(), 9.0, "<project><target name=\"t\"><javac debug=\"on\" /></target></project>"),
        (oob, 3.0, "<project><description>x</description><description /></project>"),
    ];
    for (key, t) in triage(stream) {
        println!("{key}\n  seen {} times, first at {:.1}s: {}", t.count, t.first_secs, String::from_utf8_lossy(&t.witness));
    }
}

//! Load a graph from a TSV file and look at its indexes.
//!
//! ```text
//! cargo run --example load_and_inspect [triples.tsv]
//! ```

use std::path::PathBuf;

use kgenrich::kg::load_triples;
use kgenrich::synthetic::toy_world;

fn main() -> kgenrich::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let dir = std::env::temp_dir().join("kgenrich-inspect");
            std::fs::create_dir_all(&dir).expect("temp dir");
            let path = dir.join("toy.tsv");
            toy_world(60, 0.2, 7).save(&path)?;
            path
        }
    };
    let kg = load_triples(&path, None)?;
    let vocab = kg.vocab();
    println!("{}: {:?}", path.display(), kg.stats());

    let functionality = kg.functionality();
    for (r, f) in functionality.iter() {
        println!(
            "{:<12} {:>4} triples  {:?}  subject-functional={}",
            vocab.relation_label(r),
            kg.pairs(r).len(),
            f,
            f.subject_functional()
        );
    }

    if let Some(first) = kg.triples().first() {
        let e = first.head;
        println!("outgoing edges of {}:", vocab.entity_label(e));
        for &(r, t) in kg.outgoing(e) {
            println!("  {} {}", vocab.relation_label(r), vocab.entity_label(t));
        }
    }
    Ok(())
}

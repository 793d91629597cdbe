//! Small generated graphs for examples, tests and benchmarks.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kg::{KnowledgeGraph, Triple, Vocab};

/// Uniformly random triples over `e0..e{n}` and `r0..r{m}`; duplicates collapse.
pub fn random_graph(entities: usize, relations: usize, triples: usize, seed: u64) -> KnowledgeGraph {
    assert!(entities > 0 && relations > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = Vocab::new();
    for i in 0..entities {
        vocab.intern_entity(&format!("e{i}"));
    }
    for i in 0..relations {
        vocab.intern_relation(&format!("r{i}"));
    }
    let rows: Vec<Triple> = (0..triples)
        .map(|_| {
            let h = vocab.entity_id(&format!("e{}", rng.gen_range(0..entities))).unwrap();
            let r = vocab.relation_id(&format!("r{}", rng.gen_range(0..relations))).unwrap();
            let t = vocab.entity_id(&format!("e{}", rng.gen_range(0..entities))).unwrap();
            Triple::new(h, r, t)
        })
        .collect();
    KnowledgeGraph::from_triples(Arc::new(vocab), rows)
}

/// Three groups `x*`, `y*`, `z*` of size `n`, random bijections
/// `r1: x → y` and `r2: y → z`, and `r3 = r2 ∘ r1` with `removed` of its
/// facts left out.
pub fn composition_graph(n: usize, removed: usize, seed: u64) -> KnowledgeGraph {
    assert!(removed <= n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p1: Vec<usize> = (0..n).collect();
    let mut p2: Vec<usize> = (0..n).collect();
    p1.shuffle(&mut rng);
    p2.shuffle(&mut rng);
    let mut dropped: Vec<usize> = (0..n).collect();
    dropped.shuffle(&mut rng);
    dropped.truncate(removed);

    let mut vocab = Vocab::new();
    let mut rows = Vec::with_capacity(3 * n);
    for i in 0..n {
        let (x, y, z) = (format!("x{i}"), format!("y{}", p1[i]), format!("z{}", p2[p1[i]]));
        rows.push(vocab.intern_triple(&x, "r1", &y));
        rows.push(vocab.intern_triple(&y, "r2", &z));
        let r3 = vocab.intern_triple(&x, "r3", &z);
        if !dropped.contains(&i) {
            rows.push(r3);
        }
    }
    KnowledgeGraph::from_triples(Arc::new(vocab), rows)
}

/// People born in and living in cities that belong to countries, with a
/// nationality that mostly follows the birth country and a `lives_in` that
/// mostly matches `born_in`. A fraction `missing` of nationality facts is
/// left out.
pub fn toy_world(people: usize, missing: f64, seed: u64) -> KnowledgeGraph {
    const CITIES: [(&str, &str); 8] = [
        ("Paris", "France"),
        ("Lyon", "France"),
        ("Berlin", "Germany"),
        ("Hamburg", "Germany"),
        ("Rome", "Italy"),
        ("Milan", "Italy"),
        ("Madrid", "Spain"),
        ("Seville", "Spain"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = Vocab::new();
    let mut rows = Vec::new();
    for (city, country) in CITIES {
        rows.push(vocab.intern_triple(city, "city_of", country));
    }
    for i in 0..people {
        let person = format!("person{i}");
        let (born, country) = CITIES[rng.gen_range(0..CITIES.len())];
        rows.push(vocab.intern_triple(&person, "born_in", born));
        let lives = if rng.gen_bool(0.7) {
            born
        } else {
            CITIES[rng.gen_range(0..CITIES.len())].0
        };
        rows.push(vocab.intern_triple(&person, "lives_in", lives));
        if !rng.gen_bool(missing) {
            let nat = if rng.gen_bool(0.9) {
                country
            } else {
                CITIES[rng.gen_range(0..CITIES.len())].1
            };
            rows.push(vocab.intern_triple(&person, "nationality", nat));
        }
    }
    KnowledgeGraph::from_triples(Arc::new(vocab), rows)
}

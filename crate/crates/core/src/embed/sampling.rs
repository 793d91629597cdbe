use rand::Rng;

use crate::kg::{EntityId, KnowledgeGraph, Triple};

/// Resampling budget before a corruption that is already in the graph is accepted.
pub const MAX_CORRUPTION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionSide {
    Head,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corruption {
    pub triple: Triple,
    pub side: CorruptionSide,
    /// Every attempt hit a known triple and the last one was kept.
    pub fallback: bool,
}

/// Replace the head or the tail (fair coin) with a different, uniformly drawn
/// entity, resampling while the result is a known triple.
///
/// Panics when the vocabulary has fewer than two entities.
pub fn corrupt<R: Rng + ?Sized>(kg: &KnowledgeGraph, positive: &Triple, rng: &mut R) -> Corruption {
    let n = kg.entity_count() as u32;
    assert!(n >= 2, "negative sampling needs at least two entities");
    let side = if rng.gen_bool(0.5) {
        CorruptionSide::Head
    } else {
        CorruptionSide::Tail
    };
    let original = match side {
        CorruptionSide::Head => positive.head,
        CorruptionSide::Tail => positive.tail,
    };
    let mut candidate = *positive;
    for _ in 0..MAX_CORRUPTION_ATTEMPTS {
        // uniform over the n - 1 entities other than the original
        let mut e = rng.gen_range(0..n - 1);
        if e >= original.0 {
            e += 1;
        }
        candidate = match side {
            CorruptionSide::Head => Triple::new(EntityId(e), positive.relation, positive.tail),
            CorruptionSide::Tail => Triple::new(positive.head, positive.relation, EntityId(e)),
        };
        if !kg.contains(&candidate) {
            return Corruption {
                triple: candidate,
                side,
                fallback: false,
            };
        }
    }
    Corruption {
        triple: candidate,
        side,
        fallback: true,
    }
}

pub fn negative_sample<R: Rng + ?Sized>(kg: &KnowledgeGraph, positive: &Triple, rng: &mut R) -> Triple {
    corrupt(kg, positive, rng).triple
}

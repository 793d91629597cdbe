//! Knowledge-graph embeddings: TransE, DistMult and RotatE.
//!
//! All three models score a triple as `sigmoid(-‖residual‖)` where the residual
//! is `h + r - t` (TransE), `h ⊙ r ⊙ t` (DistMult) or `h ∘ r - t` (RotatE, with
//! `∘` a component-wise complex rotation). Scores therefore lie in `(0, 0.5]`.
//!
//! RotatE relations are stored as phase angles, so the unit-modulus constraint
//! holds exactly at all times. RotatE entities use `2d` reals laid out as
//! `[re_0 .. re_{d-1}, im_0 .. im_{d-1}]`.

mod checkpoint;
mod loss;
mod sampling;
mod train;

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId, Triple};

pub use checkpoint::{load_model, save_model, Checkpoint, CheckpointHeader};
pub use loss::{gradient, loss_batch, Gradient};
pub use sampling::{corrupt, negative_sample, Corruption, CorruptionSide, MAX_CORRUPTION_ATTEMPTS};
pub use train::{train, train_with_observer, EpochLoss, LossTrace, StepInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    TransE,
    DistMult,
    RotatE,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::TransE, ModelKind::DistMult, ModelKind::RotatE];

    pub(crate) fn code(self) -> u32 {
        match self {
            ModelKind::TransE => 0,
            ModelKind::DistMult => 1,
            ModelKind::RotatE => 2,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    /// Reals per entity vector.
    pub fn entity_width(self, dim: usize) -> usize {
        match self {
            ModelKind::RotatE => 2 * dim,
            _ => dim,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::TransE => "transe",
            ModelKind::DistMult => "distmult",
            ModelKind::RotatE => "rotate",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(ModelKind::TransE),
            "distmult" => Ok(ModelKind::DistMult),
            "rotate" => Ok(ModelKind::RotatE),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// Hyperparameters for initialization and SGD training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub margin: f64,
    pub negatives_per_positive: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 50,
            learning_rate: 0.01,
            epochs: 200,
            margin: 1.0,
            negatives_per_positive: 1,
            batch_size: 1024,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dimension must be >= 1".into()));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Config("margin must be a positive finite number".into()));
        }
        if self.negatives_per_positive == 0 {
            return Err(Error::Config("negatives per positive must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be a positive finite number".into()));
        }
        Ok(())
    }
}

/// Entity and relation parameter tables of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    kind: ModelKind,
    dim: usize,
    entity_count: usize,
    relation_count: usize,
    seed: u64,
    entities: Vec<f64>,
    relations: Vec<f64>,
}

impl ModelParams {
    /// Uniform initialization in `[-6/√d, 6/√d]`; RotatE phases uniform in `[0, 2π)`.
    pub fn init(
        kind: ModelKind,
        entity_count: usize,
        relation_count: usize,
        config: &TrainingConfig,
    ) -> Result<ModelParams> {
        config.validate()?;
        if entity_count == 0 || relation_count == 0 {
            return Err(Error::Config(
                "a model needs at least one entity and one relation".into(),
            ));
        }
        let dim = config.dim;
        let bound = 6.0 / (dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let entities = (0..entity_count * kind.entity_width(dim))
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        let relations = (0..relation_count * dim)
            .map(|_| match kind {
                ModelKind::RotatE => rng.gen_range(0.0..TAU),
                _ => rng.gen_range(-bound..=bound),
            })
            .collect();
        Ok(ModelParams {
            kind,
            dim,
            entity_count,
            relation_count,
            seed: config.seed,
            entities,
            relations,
        })
    }

    pub(crate) fn from_raw(
        kind: ModelKind,
        dim: usize,
        entity_count: usize,
        relation_count: usize,
        seed: u64,
        entities: Vec<f64>,
        relations: Vec<f64>,
    ) -> Result<ModelParams> {
        if entities.len() != entity_count * kind.entity_width(dim)
            || relations.len() != relation_count * dim
        {
            return Err(Error::Contract("parameter table sizes do not match header".into()));
        }
        Ok(ModelParams {
            kind,
            dim,
            entity_count,
            relation_count,
            seed,
            entities,
            relations,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entity_width(&self) -> usize {
        self.kind.entity_width(self.dim)
    }

    #[inline]
    pub fn entity(&self, e: EntityId) -> &[f64] {
        let w = self.entity_width();
        &self.entities[e.index() * w..(e.index() + 1) * w]
    }

    #[inline]
    pub fn relation(&self, r: RelationId) -> &[f64] {
        &self.relations[r.index() * self.dim..(r.index() + 1) * self.dim]
    }

    pub fn entity_mut(&mut self, e: EntityId) -> &mut [f64] {
        let w = self.entity_width();
        &mut self.entities[e.index() * w..(e.index() + 1) * w]
    }

    pub fn relation_mut(&mut self, r: RelationId) -> &mut [f64] {
        let d = self.dim;
        &mut self.relations[r.index() * d..(r.index() + 1) * d]
    }

    pub fn entity_table(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation_table(&self) -> &[f64] {
        &self.relations
    }

    /// RotatE relation as unit complex numbers `(re, im)`; `None` for other models.
    pub fn rotation(&self, r: RelationId) -> Option<Vec<(f64, f64)>> {
        (self.kind == ModelKind::RotatE).then(|| {
            self.relation(r)
                .iter()
                .map(|&theta| (theta.cos(), theta.sin()))
                .collect()
        })
    }

    pub fn all_finite(&self) -> bool {
        self.entities.iter().chain(&self.relations).all(|v| v.is_finite())
    }

    pub fn check_ids(&self, t: &Triple) -> bool {
        t.head.index() < self.entity_count
            && t.tail.index() < self.entity_count
            && t.relation.index() < self.relation_count
    }

    /// Euclidean norm of the model residual for `t`.
    #[inline]
    pub fn distance(&self, t: &Triple) -> f64 {
        residual_norm(
            self.kind,
            self.entity(t.head),
            self.relation(t.relation),
            self.entity(t.tail),
        )
    }

    /// Plausibility in `(0, 0.5]`; higher means more plausible.
    #[inline]
    pub fn score(&self, t: &Triple) -> f64 {
        sigmoid(-self.distance(t))
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow.
#[inline]
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn residual_norm(kind: ModelKind, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    let mut sq = 0.0;
    match kind {
        ModelKind::TransE => {
            for i in 0..r.len() {
                let v = h[i] + r[i] - t[i];
                sq += v * v;
            }
        }
        ModelKind::DistMult => {
            for i in 0..r.len() {
                let v = h[i] * r[i] * t[i];
                sq += v * v;
            }
        }
        ModelKind::RotatE => {
            let d = r.len();
            for i in 0..d {
                let (s, c) = r[i].sin_cos();
                let (a, b) = (h[i], h[d + i]);
                let re = a * c - b * s - t[i];
                let im = a * s + b * c - t[d + i];
                sq += re * re + im * im;
            }
        }
    }
    sq.sqrt()
}

/// Residual norm plus its partial derivatives with respect to the head,
/// relation and tail parameters. At a zero residual the zero subgradient is used.
pub(crate) fn residual_norm_grad(
    kind: ModelKind,
    h: &[f64],
    r: &[f64],
    t: &[f64],
    dh: &mut [f64],
    dr: &mut [f64],
    dt: &mut [f64],
) -> f64 {
    let d = r.len();
    match kind {
        ModelKind::TransE => {
            for i in 0..d {
                dh[i] = h[i] + r[i] - t[i];
            }
            let norm = dh.iter().map(|v| v * v).sum::<f64>().sqrt();
            let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
            for i in 0..d {
                let u = dh[i] * inv;
                dh[i] = u;
                dr[i] = u;
                dt[i] = -u;
            }
            norm
        }
        ModelKind::DistMult => {
            let mut sq = 0.0;
            for i in 0..d {
                let v = h[i] * r[i] * t[i];
                sq += v * v;
            }
            let norm = sq.sqrt();
            let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
            for i in 0..d {
                let u = h[i] * r[i] * t[i] * inv;
                dh[i] = u * r[i] * t[i];
                dr[i] = u * h[i] * t[i];
                dt[i] = u * h[i] * r[i];
            }
            norm
        }
        ModelKind::RotatE => {
            let mut sq = 0.0;
            for i in 0..d {
                let (s, c) = r[i].sin_cos();
                let (a, b) = (h[i], h[d + i]);
                let re = a * c - b * s - t[i];
                let im = a * s + b * c - t[d + i];
                // stash residuals, scaled below
                dt[i] = re;
                dt[d + i] = im;
                sq += re * re + im * im;
            }
            let norm = sq.sqrt();
            let inv = if norm > 0.0 { 1.0 / norm } else { 0.0 };
            for i in 0..d {
                let (s, c) = r[i].sin_cos();
                let (a, b) = (h[i], h[d + i]);
                let ure = dt[i] * inv;
                let uim = dt[d + i] * inv;
                dh[i] = ure * c + uim * s;
                dh[d + i] = -ure * s + uim * c;
                dr[i] = ure * (-a * s - b * c) + uim * (a * c - b * s);
                dt[i] = -ure;
                dt[d + i] = -uim;
            }
            norm
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dim: usize, seed: u64) -> TrainingConfig {
        TrainingConfig {
            dim,
            seed,
            ..TrainingConfig::default()
        }
    }

    #[test]
    fn init_is_deterministic() {
        for kind in ModelKind::ALL {
            let a = ModelParams::init(kind, 7, 3, &cfg(5, 11)).unwrap();
            let b = ModelParams::init(kind, 7, 3, &cfg(5, 11)).unwrap();
            assert_eq!(a, b);
            let c = ModelParams::init(kind, 7, 3, &cfg(5, 12)).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn init_ranges_and_sizes() {
        let p = ModelParams::init(ModelKind::TransE, 40_943, 11, &cfg(50, 1)).unwrap();
        assert_eq!(p.entity_table().len(), 40_943 * 50);
        let bound = 6.0 / 50f64.sqrt();
        assert!(p.entity_table().iter().all(|v| v.abs() <= bound));

        let p = ModelParams::init(ModelKind::RotatE, 10, 4, &cfg(6, 1)).unwrap();
        assert_eq!(p.entity_table().len(), 10 * 12);
        assert!(p.relation_table().iter().all(|&t| (0.0..TAU).contains(&t)));
        for r in 0..4 {
            for (re, im) in p.rotation(RelationId(r)).unwrap() {
                assert!(((re * re + im * im).sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_dim_rejected() {
        assert!(matches!(
            ModelParams::init(ModelKind::TransE, 3, 1, &cfg(0, 0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn transe_exact_translation_scores_half() {
        let mut p = ModelParams::init(ModelKind::TransE, 2, 1, &cfg(4, 3)).unwrap();
        let h = p.entity(EntityId(0)).to_vec();
        let r = p.relation(RelationId(0)).to_vec();
        let t: Vec<f64> = h.iter().zip(&r).map(|(a, b)| a + b).collect();
        p.entity_mut(EntityId(1)).copy_from_slice(&t);
        let s = p.score(&Triple::new(EntityId(0), RelationId(0), EntityId(1)));
        assert_eq!(s, 0.5);
    }

    #[test]
    fn distmult_zero_relation_scores_half() {
        let mut p = ModelParams::init(ModelKind::DistMult, 2, 1, &cfg(4, 3)).unwrap();
        p.relation_mut(RelationId(0)).fill(0.0);
        let s = p.score(&Triple::new(EntityId(0), RelationId(0), EntityId(1)));
        assert_eq!(s, 0.5);
    }

    #[test]
    fn model_kind_parsing() {
        assert_eq!("RotatE".parse::<ModelKind>().unwrap(), ModelKind::RotatE);
        assert!("complex".parse::<ModelKind>().is_err());
        for k in ModelKind::ALL {
            assert_eq!(k.to_string().parse::<ModelKind>().unwrap(), k);
        }
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(-1000.0).is_finite());
        assert!((log_sigmoid(-1000.0) + 1000.0).abs() < 1e-9);
        assert!(log_sigmoid(1000.0) <= 0.0);
    }
}

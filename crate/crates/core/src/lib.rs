//! Knowledge-graph enrichment with embeddings and closed Horn rule mining.
//!
//! Train a TransE, DistMult or RotatE model on a triple graph, add the
//! top-k highest scoring unseen triples from a sampled candidate space, mine
//! rules on the original and the enriched graph, and compare the two rule
//! sets. Link prediction quality is reported as Hits@k and MRR.
//!
//! ```no_run
//! use kgenrich::embed::{train, ModelKind, ModelParams, TrainingConfig};
//! use kgenrich::kg::Dataset;
//! use kgenrich::linkpred::{enrich, EnrichmentConfig};
//! use kgenrich::rules::{mine_rules, MinerConfig};
//!
//! # fn main() -> kgenrich::Result<()> {
//! let data = Dataset::load("train.tsv".as_ref(), None, None)?;
//! let cfg = TrainingConfig::default();
//! let mut model = ModelParams::init(ModelKind::TransE, data.train.entity_count(), data.train.relation_count(), &cfg)?;
//! train(&mut model, &data.train, &cfg)?;
//! let enriched = enrich(&data.train, &model, &EnrichmentConfig::default())?;
//! let rules = mine_rules(&enriched.enriched, &MinerConfig::default())?;
//! # Ok(()) }
//! ```

pub mod analysis;
pub mod embed;
pub mod error;
pub mod eval;
pub mod kg;
pub mod linkpred;
pub mod pipeline;
pub mod rules;
pub mod synthetic;

pub use error::{Error, Result};

//! Training losses and their analytic gradients.
//!
//! Negatives are aligned with positives: `negatives[i*n..(i+1)*n]` corrupt
//! `positives[i]`.
//!
//! * TransE / DistMult: `Σ max(0, γ + ‖pos‖ - ‖neg‖)` over every (positive, negative) pair.
//! * RotatE: `-log σ(γ - ‖pos‖) - Σ (1/n) log σ(‖neg‖ - γ)` per positive.

use std::f64::consts::TAU;

use super::{log_sigmoid, residual_norm, residual_norm_grad, sigmoid, ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId, Triple};

/// Dense gradient with the same layout as the parameter tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub entities: Vec<f64>,
    pub relations: Vec<f64>,
}

/// Sparse gradient contributions in emission order.
#[derive(Debug, Default)]
pub(crate) struct GradBuffer {
    pub loss: f64,
    entity_ids: Vec<EntityId>,
    entity_vals: Vec<f64>,
    relation_ids: Vec<RelationId>,
    relation_vals: Vec<f64>,
}

struct Partials {
    dh: Vec<f64>,
    dr: Vec<f64>,
    dt: Vec<f64>,
}

impl Partials {
    fn new(params: &ModelParams) -> Self {
        let w = params.entity_width();
        Partials {
            dh: vec![0.0; w],
            dr: vec![0.0; params.dim()],
            dt: vec![0.0; w],
        }
    }

    fn eval(&mut self, params: &ModelParams, t: &Triple) -> f64 {
        residual_norm_grad(
            params.kind(),
            params.entity(t.head),
            params.relation(t.relation),
            params.entity(t.tail),
            &mut self.dh,
            &mut self.dr,
            &mut self.dt,
        )
    }
}

impl GradBuffer {
    fn push(&mut self, coef: f64, t: &Triple, p: &Partials) {
        if coef == 0.0 {
            return;
        }
        self.entity_ids.push(t.head);
        self.entity_vals.extend(p.dh.iter().map(|v| coef * v));
        self.entity_ids.push(t.tail);
        self.entity_vals.extend(p.dt.iter().map(|v| coef * v));
        self.relation_ids.push(t.relation);
        self.relation_vals.extend(p.dr.iter().map(|v| coef * v));
    }

    /// Subtract `lr * gradient` from the parameters in emission order.
    pub fn apply(&self, params: &mut ModelParams, lr: f64) {
        let w = params.entity_width();
        let d = params.dim();
        let rotate = params.kind() == ModelKind::RotatE;
        for (i, &e) in self.entity_ids.iter().enumerate() {
            let g = &self.entity_vals[i * w..(i + 1) * w];
            for (p, g) in params.entity_mut(e).iter_mut().zip(g) {
                *p -= lr * g;
            }
        }
        for (i, &r) in self.relation_ids.iter().enumerate() {
            let g = &self.relation_vals[i * d..(i + 1) * d];
            for (p, g) in params.relation_mut(r).iter_mut().zip(g) {
                *p -= lr * g;
                if rotate {
                    *p = p.rem_euclid(TAU);
                }
            }
        }
    }

    fn add_to(&self, dense: &mut Gradient, w: usize, d: usize) {
        for (i, &e) in self.entity_ids.iter().enumerate() {
            let g = &self.entity_vals[i * w..(i + 1) * w];
            let base = e.index() * w;
            for (k, g) in g.iter().enumerate() {
                dense.entities[base + k] += g;
            }
        }
        for (i, &r) in self.relation_ids.iter().enumerate() {
            let g = &self.relation_vals[i * d..(i + 1) * d];
            let base = r.index() * d;
            for (k, g) in g.iter().enumerate() {
                dense.relations[base + k] += g;
            }
        }
    }
}

pub(crate) fn negatives_per_positive(positives: &[Triple], negatives: &[Triple]) -> Result<usize> {
    if positives.is_empty() {
        return if negatives.is_empty() {
            Ok(0)
        } else {
            Err(Error::Contract("negatives given without positives".into()))
        };
    }
    if negatives.len() < positives.len() || !negatives.len().is_multiple_of(positives.len()) {
        return Err(Error::Contract(format!(
            "{} negatives cannot be aligned to {} positives",
            negatives.len(),
            positives.len()
        )));
    }
    Ok(negatives.len() / positives.len())
}

fn check_ids(params: &ModelParams, triples: &[Triple]) -> Result<()> {
    match triples.iter().find(|t| !params.check_ids(t)) {
        Some(t) => Err(Error::Contract(format!("triple {t:?} outside the model's id range"))),
        None => Ok(()),
    }
}

/// `max(0, x)` that keeps NaN visible.
fn hinge(x: f64) -> f64 {
    if x.is_nan() {
        x
    } else {
        x.max(0.0)
    }
}

/// Loss of one positive and its negatives. With `grad`, contributions are
/// appended to the buffer.
pub(crate) fn group_loss(
    params: &ModelParams,
    positive: &Triple,
    negatives: &[Triple],
    margin: f64,
    grad: Option<&mut GradBuffer>,
) -> f64 {
    let n = negatives.len() as f64;
    let Some(buf) = grad else {
        let dist = |t: &Triple| {
            residual_norm(
                params.kind(),
                params.entity(t.head),
                params.relation(t.relation),
                params.entity(t.tail),
            )
        };
        let dp = dist(positive);
        return match params.kind() {
            ModelKind::TransE | ModelKind::DistMult => negatives
                .iter()
                .map(|neg| hinge(margin + dp - dist(neg)))
                .sum(),
            ModelKind::RotatE => {
                -log_sigmoid(margin - dp)
                    - negatives
                        .iter()
                        .map(|neg| log_sigmoid(dist(neg) - margin) / n)
                        .sum::<f64>()
            }
        };
    };

    let mut pos = Partials::new(params);
    let mut neg = Partials::new(params);
    let dp = pos.eval(params, positive);
    let mut loss = 0.0;
    match params.kind() {
        ModelKind::TransE | ModelKind::DistMult => {
            let mut active = 0.0;
            for t in negatives {
                let dn = neg.eval(params, t);
                let term = margin + dp - dn;
                if term > 0.0 {
                    loss += term;
                    active += 1.0;
                    buf.push(-1.0, t, &neg);
                } else if term.is_nan() {
                    loss = f64::NAN;
                }
            }
            buf.push(active, positive, &pos);
        }
        ModelKind::RotatE => {
            loss -= log_sigmoid(margin - dp);
            buf.push(sigmoid(dp - margin), positive, &pos);
            for t in negatives {
                let dn = neg.eval(params, t);
                loss -= log_sigmoid(dn - margin) / n;
                buf.push(-sigmoid(margin - dn) / n, t, &neg);
            }
        }
    }
    buf.loss += loss;
    loss
}

/// Summed loss over a mini-batch.
pub fn loss_batch(
    params: &ModelParams,
    positives: &[Triple],
    negatives: &[Triple],
    margin: f64,
) -> Result<f64> {
    let n = negatives_per_positive(positives, negatives)?;
    check_ids(params, positives)?;
    check_ids(params, negatives)?;
    Ok(positives
        .iter()
        .enumerate()
        .map(|(i, p)| group_loss(params, p, &negatives[i * n..(i + 1) * n], margin, None))
        .sum())
}

/// Summed loss and its dense gradient. RotatE relation gradients are with
/// respect to the phase angles.
pub fn gradient(
    params: &ModelParams,
    positives: &[Triple],
    negatives: &[Triple],
    margin: f64,
) -> Result<(f64, Gradient)> {
    let n = negatives_per_positive(positives, negatives)?;
    check_ids(params, positives)?;
    check_ids(params, negatives)?;
    let mut buf = GradBuffer::default();
    for (i, p) in positives.iter().enumerate() {
        group_loss(params, p, &negatives[i * n..(i + 1) * n], margin, Some(&mut buf));
    }
    let mut dense = Gradient {
        entities: vec![0.0; params.entity_table().len()],
        relations: vec![0.0; params.relation_table().len()],
    };
    buf.add_to(&mut dense, params.entity_width(), params.dim());
    Ok((buf.loss, dense))
}

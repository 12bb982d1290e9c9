//! Non-cyclical component-wise boosting: every iteration proposes one update
//! per distribution parameter and applies only the one with the lowest loss.

use crate::base_learner::{Design, FittedBaseLearner};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::family::K;
use crate::model::{Candidate, CoefficientState, FitConfig, FitTrace, FittedModel, IterationRecord};
use crate::scalar::Scalar;
use crate::step::{compute_iteration_steps, StepLengthCache};

pub fn boost_fit<T: Scalar>(d: &Dataset<T>, cfg: &FitConfig<T>) -> Result<(FittedModel<T>, FitTrace<T>)> {
    cfg.validate()?;
    let family = cfg.family;
    let y = d.y();
    let offsets = family.init_offsets(y)?;
    let mut etas = [vec![offsets[0]; d.n()], vec![offsets[1]; d.n()]];
    let initial_loss = family.neg_log_lik([&etas[0], &etas[1]], y)?;

    let design = Design::new(d.columns());
    let mut cache = StepLengthCache::new();
    let mut state = CoefficientState::zeros(d.p());
    let mut records = Vec::with_capacity(cfg.m_stop);

    for m in 1..=cfg.m_stop {
        let record = iterate(d, cfg, &design, &mut cache, &etas, m)
            .map_err(|e| Error::Iteration { iteration: m, source: Box::new(e) })?;
        let (record, h) = record;
        let k = record.applied;
        let nu = record.candidates[k].nu;
        for (e, &hi) in etas[k].iter_mut().zip(&h) {
            *e = *e + nu * hi;
        }
        state.apply(k, &record.candidates[k]);
        records.push(record);
    }

    let model = FittedModel {
        family,
        offsets,
        coefficients: state,
        names: d.names().to_vec(),
        m_stop: cfg.m_stop,
    };
    let trace = FitTrace {
        family,
        offsets,
        p: d.p(),
        initial_loss,
        records,
    };
    Ok((model, trace))
}

/// One iteration; returns the record and the fitted vector of the applied
/// base-learner.
fn iterate<T: Scalar>(
    d: &Dataset<T>,
    cfg: &FitConfig<T>,
    design: &Design<T>,
    cache: &mut StepLengthCache<T>,
    etas: &[Vec<T>; K],
    m: usize,
) -> Result<(IterationRecord<T>, Vec<T>)> {
    let family = cfg.family;
    let y = d.y();
    let eta_refs = [&etas[0][..], &etas[1][..]];

    let learners: [FittedBaseLearner<T>; K] = {
        let mut sel = Vec::with_capacity(K);
        for k in 0..K {
            let u = family.negative_gradient(k, eta_refs, y)?;
            sel.push(design.select_best(&u, d.columns()));
        }
        sel.try_into().expect("K learners")
    };

    let steps = compute_iteration_steps(family, &cfg.scheme, cfg.lambda_s, &learners, eta_refs, y, cache)?;

    let mut candidates = Vec::with_capacity(K);
    for k in 0..K {
        let bl = &learners[k];
        let nu = steps[k].nu;
        let moved: Vec<T> = etas[k].iter().zip(&bl.fitted).map(|(&e, &h)| e + nu * h).collect();
        let loss = if k == 0 {
            family.neg_log_lik([&moved, &etas[1]], y)?
        } else {
            family.neg_log_lik([&etas[0], &moved], y)?
        };
        candidates.push(Candidate {
            covariate: bl.covariate,
            bl_intercept: bl.intercept,
            bl_slope: bl.slope,
            nu,
            nu_star: steps[k].nu_star,
            source: steps[k].source,
            boundary: steps[k].boundary,
            sqnorm: bl.sqnorm,
            zeta: nu * bl.sqnorm,
            loss,
        });
    }
    let candidates: [Candidate<T>; K] = candidates.try_into().expect("K candidates");

    let mut applied = 0;
    for k in 1..K {
        if candidates[k].loss < candidates[applied].loss {
            applied = k;
        }
    }
    let [h0, h1] = learners.map(|bl| bl.fitted);
    let h = if applied == 0 { h0 } else { h1 };
    let record = IterationRecord {
        iteration: m,
        applied,
        candidates,
        loss_after: candidates[applied].loss,
    };
    Ok((record, h))
}

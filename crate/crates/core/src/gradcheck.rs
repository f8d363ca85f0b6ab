//! Central finite-difference gradient oracle.
//!
//! Used by tests and the acceptance suite to check tape gradients against an
//! estimate that only ever calls the forward pass.

use crate::error::Result;
use crate::tensor::{Params, Tape, TensorId};

/// Outcome of a full-parameter gradient comparison.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

/// Relative error with a floor so true-zero gradients don't divide by noise.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compare tape gradients of a scalar loss against central finite
/// differences for every entry of every parameter.
///
/// `loss_fn` must rebuild the same computation from the current parameter
/// values each time it is called.
pub fn check_gradients<F>(params: &mut Params, step: f64, mut loss_fn: F) -> Result<GradCheckReport>
where
    F: FnMut(&mut Tape, &Params) -> Result<TensorId>,
{
    params.zero_grad();
    let mut tape = Tape::new();
    let loss = loss_fn(&mut tape, params)?;
    tape.backward(loss, params)?;

    let analytic: Vec<Vec<f64>> = params.iter().map(|p| p.grad().to_vec()).collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };

    let ids: Vec<_> = params.ids().collect();
    for (pi, id) in ids.iter().enumerate() {
        let n = params.get(*id).len();
        for idx in 0..n {
            let orig = params.get(*id).values()[idx];

            params.get_mut(*id).set_value_at(idx, orig + step)?;
            let mut t = Tape::new();
            let plus_id = loss_fn(&mut t, params)?;
            let plus = t.scalar(plus_id);

            params.get_mut(*id).set_value_at(idx, orig - step)?;
            let mut t = Tape::new();
            let minus_id = loss_fn(&mut t, params)?;
            let minus = t.scalar(minus_id);

            params.get_mut(*id).set_value_at(idx, orig)?;

            let numeric = (plus - minus) / (2.0 * step);
            let err = rel_err(analytic[pi][idx], numeric);
            report.checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_param = params.get(*id).name().to_string();
                report.worst_index = idx;
            }
        }
    }
    Ok(report)
}

/// Central finite difference of an arbitrary scalar function at one entry.
pub fn central_difference<F>(
    params: &mut Params,
    id: crate::tensor::ParamId,
    idx: usize,
    step: f64,
    mut f: F,
) -> Result<f64>
where
    F: FnMut(&Params) -> Result<f64>,
{
    let orig = params.get(id).values()[idx];
    params.get_mut(id).set_value_at(idx, orig + step)?;
    let plus = f(params)?;
    params.get_mut(id).set_value_at(idx, orig - step)?;
    let minus = f(params)?;
    params.get_mut(id).set_value_at(idx, orig)?;
    Ok((plus - minus) / (2.0 * step))
}

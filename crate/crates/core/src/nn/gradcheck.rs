use super::{NnError, ParamId, ParamStore};

/// Worst disagreement between analytic and central-difference gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_param: Option<String>,
    pub checked: usize,
}

/// Compares the gradient produced by `loss_and_backward` with central differences of
/// `loss` at step `h`. `loss_and_backward` must accumulate into the store's gradients
/// and return the loss. Relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check<L, B>(
    store: &mut ParamStore,
    mut loss: L,
    mut loss_and_backward: B,
    h: f64,
) -> Result<GradCheckReport, NnError>
where
    L: FnMut(&ParamStore) -> Result<f64, NnError>,
    B: FnMut(&mut ParamStore) -> Result<f64, NnError>,
{
    store.zero_grad();
    loss_and_backward(store)?;
    let ids: Vec<ParamId> = store.ids().collect();
    let mut report = GradCheckReport { max_relative_error: 0.0, worst_param: None, checked: 0 };
    for id in ids {
        let analytic = store.grad(id).clone();
        for k in 0..analytic.len() {
            let orig = store.value(id).data()[k];
            store.value_mut(id).data_mut()[k] = orig + h;
            let up = loss(store)?;
            store.value_mut(id).data_mut()[k] = orig - h;
            let down = loss(store)?;
            store.value_mut(id).data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.data()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            report.checked += 1;
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst_param = Some(store.name(id).to_string());
            }
        }
    }
    store.zero_grad();
    Ok(report)
}

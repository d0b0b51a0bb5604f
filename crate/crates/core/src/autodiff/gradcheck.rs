use super::{AutodiffError, Tape, Tensor, Var};

/// Compares the tape gradient of `f` at `theta` with central differences.
///
/// Returns the maximum over coordinates of
/// `|autodiff - numeric| / max(1, |numeric|)`. A NaN on either side yields
/// `f64::INFINITY`.
pub fn grad_check<F>(f: F, theta: &Tensor, h: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Tape, Var) -> Result<Var, AutodiffError>,
{
    grad_check_all(
        |tape, vars| f(tape, vars[0]),
        std::slice::from_ref(theta),
        h,
    )
}

/// [`grad_check`] over several parameter tensors at once.
pub fn grad_check_all<F>(f: F, params: &[Tensor], h: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, AutodiffError>,
{
    assert!(h > 0.0, "finite-difference step must be positive");

    let eval = |values: &[Tensor]| -> Result<f64, AutodiffError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|p| tape.constant(p.clone())).collect();
        let root = f(&mut tape, &vars)?;
        Ok(tape.item(root))
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let root = f(&mut tape, &vars)?;
    tape.backward(root)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| tape.grad(v)).collect();

    let mut worst = 0.0f64;
    let mut work = params.to_vec();
    for (p, grad) in analytic.iter().enumerate() {
        for k in 0..params[p].len() {
            let orig = params[p].data()[k];
            work[p].data_mut()[k] = orig + h;
            let plus = eval(&work)?;
            work[p].data_mut()[k] = orig - h;
            let minus = eval(&work)?;
            work[p].data_mut()[k] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = grad.data()[k];
            if numeric.is_nan() || a.is_nan() {
                return Ok(f64::INFINITY);
            }
            let err = (a - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

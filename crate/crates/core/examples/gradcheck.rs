//! Builds the outcome-aware contrastive loss on a tape, backpropagates, and
//! compares the gradient with central differences.

use consurv::autodiff::{grad_check, Tape, Tensor};
use consurv::losses::{snce_loss, LossError, PairWeightMatrix};
use consurv::rng::{stream, Stream};
use rand::Rng;

fn main() -> Result<(), LossError> {
    let mut rng = stream(0, Stream::Probe);
    let m = 6;
    let taus: Vec<usize> = (0..m).map(|_| rng.random_range(0..20)).collect();
    let deltas: Vec<bool> = (0..m).map(|_| rng.random::<f64>() < 0.7).collect();
    let weights = PairWeightMatrix::build(&taus, &deltas, 0.75, 2.0)?;

    // rows 0..m are originals, rows m..2m their views
    let z = Tensor::new(
        2 * m,
        4,
        (0..8 * m).map(|_| rng.random::<f64>() - 0.5).collect(),
    )?;

    let mut tape = Tape::new();
    let zv = tape.param(z.clone());
    let loss = snce_loss(&mut tape, zv, &weights, 0.1)?;
    tape.backward(loss)?;
    println!("snce = {:.6}", tape.item(loss));
    println!("d loss / d z[0] = {:?}", tape.grad(zv).row(0));

    let err = grad_check(
        |t, p| {
            snce_loss(t, p, &weights, 0.1).map_err(|e| match e {
                LossError::Autodiff(a) => a,
                other => panic!("{other}"),
            })
        },
        &z,
        1e-6,
    )?;
    println!("max gradient error vs finite differences: {err:.2e}");
    Ok(())
}

//! Check the GNUMAP cross-entropy gradient against central finite
//! differences on a tiny random layout.
//!
//! cargo run --release --example gradient_check

use std::rc::Rc;

use graphdr::diffengine::gradient_check;
use graphdr::gnumap::{pair_cross_entropy, UMAP_ALPHA, UMAP_BETA};
use graphdr::numerics::{DenseMatrix, Rng};

fn main() -> graphdr::Result<()> {
    let mut rng = Rng::new(7);
    let y = DenseMatrix::from_fn(6, 2, |_, _| rng.normal());
    let pairs = Rc::new(vec![(0, 1), (1, 2), (2, 3), (3, 4), (0, 5), (1, 4)]);
    let p = Rc::new(DenseMatrix::new(6, 1, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0])?);
    let err = gradient_check(&y, 1e-5, |tape, v| {
        pair_cross_entropy(tape, v, pairs.clone(), p.clone(), UMAP_ALPHA, UMAP_BETA, 1e-7)
    })?;
    println!("relative error between analytic and numeric gradients: {err:.2e}");
    Ok(())
}

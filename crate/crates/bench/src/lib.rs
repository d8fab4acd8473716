//! Fixtures shared by the benchmarks.

use cbandit_core::estimation::NodeDataset;
use cbandit_core::rng::stream;
use cbandit_core::LinkFunction;
use rand::Rng;

/// `rows` logistic observations on `dim` binary regressors with the bias first.
pub fn logistic_dataset(dim: usize, rows: usize, seed: u64) -> NodeDataset {
    let link = LinkFunction::logistic();
    let theta: Vec<f64> = (0..dim).map(|k| 0.2 + 0.1 * k as f64).collect();
    let mut rng = stream(seed);
    let mut data = NodeDataset::new(dim);
    let mut v = vec![1.0; dim];
    for _ in 0..rows {
        for x in v.iter_mut().skip(1) {
            *x = f64::from(u8::from(rng.gen::<bool>()));
        }
        let p = link.eval(v.iter().zip(&theta).map(|(a, b)| a * b).sum());
        let x = f64::from(u8::from(rng.gen::<f64>() < p));
        data.push(&v, x).expect("dimension matches");
    }
    data
}

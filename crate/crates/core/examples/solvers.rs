//! Least squares and non-negative least squares on small problems, checked
//! against the brute-force reference solvers.
//!
//! cargo run --example solvers

use leadlag::prelude::*;
use leadlag::solver::oracle::{oracle_nnls, oracle_ols};
use ndarray::{array, Array1};

fn show(v: &Array1<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn run_example() -> leadlag::Result<()> {
    let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    let y = array![1.0, -1.0, 0.0];
    let ols = fit_ols(x.view(), y.view())?;
    let nnls = fit_nnls(x.view(), y.view())?;
    println!("ols  {}  oracle {}", show(&ols.values), show(&oracle_ols(x.view(), y.view())?.values));
    println!(
        "nnls {}  oracle {}  ({} iterations)",
        show(&nnls.values),
        show(&oracle_nnls(x.view(), y.view())?.values),
        nnls.iterations
    );
    println!("training rmse ols {:.4}, nnls {:.4}", ols.training_rmse, nnls.training_rmse);

    // Two identical columns: the minimum-norm answer splits the weight.
    let dup = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
    let fit_dup = fit_ols(dup.view(), array![2.0, 4.0, 6.0].view())?;
    println!("duplicate columns -> {}, rank deficient: {}", show(&fit_dup.values), fit_dup.rank_deficient);

    let ridge = fit(x.view(), y.view(), SolverVariant::Ols, 1.0)?;
    println!("ridge 1.0 -> {}", show(&ridge.values));
    println!("predictions {}", show(&predict(x.view(), &ols)?));
    Ok(())
}

#[allow(dead_code)]
fn main() -> leadlag::Result<()> {
    run_example()
}

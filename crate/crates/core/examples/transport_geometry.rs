//! The rule graph, its measure-dependent Laplacian, the pulled-back metric,
//! and one natural-gradient step next to plain gradient descent.

use nalgebra::DMatrix;

use actpc_chem::beliefs::{softmax, RuleParams};
use actpc_chem::metagraph::{Origin, RewriteRule};
use actpc_chem::transport::{
    build_rule_graph, default_ridge, laplacian, matrix_csv, metric_at, natural_step, spectrum,
};

fn main() -> actpc_chem::Result<()> {
    let rules: Vec<RewriteRule> = [
        "(State ?s) => (State ?s) (Action Right)",
        "(State ?s) => (State ?s) (Action Left)",
        "(State 0) => (State 0) (Action Right)",
        "(State 2) => (State 2) (Action Right)",
    ]
    .iter()
    .enumerate()
    .map(|(i, s)| RewriteRule::parse(i as u64, s, Origin::Seed))
    .collect::<Result<_, _>>()?;

    let graph = build_rule_graph(&rules, 3, None);
    for (i, j, w) in graph.edges() {
        println!("edge {i}-{j} weight {w:.4}");
    }
    let params = RuleParams::new(vec![0.5, -0.5, 1.0, 0.0])?;
    let p = softmax(&params.logits);
    let l = laplacian(&graph, &p)?;
    let g = metric_at(&graph, &params)?;
    println!("L(p):\n{}", matrix_csv(&l));
    println!("spectrum of L: {:?}", spectrum(&l)?.0);
    println!("G:\n{}", matrix_csv(&g));

    let grad = vec![0.2, -0.1, 0.05, -0.15];
    let natural = natural_step(&params, &grad, &g, 0.1, default_ridge(&g))?;
    let plain = natural_step(&params, &grad, &DMatrix::identity(4, 4), 0.1, 0.0)?;
    println!("natural step: {:?}", natural.logits);
    println!("gradient step: {:?}", plain.logits);
    Ok(())
}

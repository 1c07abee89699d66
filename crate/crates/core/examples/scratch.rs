use weaksub::datagen::{ar1_design, derive_seed, logistic_responses, rademacher_sparse_beta};
use weaksub::model::{Dataset, LabelEncoding, Support};
use weaksub::select::{oblivious_select_with, SelectOptions};
use weaksub::solver::{maximize_restricted, SolverConfig};
use weaksub::ObjectiveSpec;

fn main() {
    let (n, p, k_true) = (600usize, 200usize, 50usize);
    let master = 1u64;
    let tag = 0u64;
    let x = ar1_design(n, p, 0.3, 5.0, derive_seed(master, tag)).unwrap();
    let beta = rademacher_sparse_beta(p, k_true, 5.0, derive_seed(master, tag + 1)).unwrap();
    let y = logistic_responses(&x, &beta, derive_seed(master, tag + 2)).unwrap();
    let data = Dataset::new(x, y, LabelEncoding::Binary01)
        .unwrap()
        .with_bias_column();
    let spec = ObjectiveSpec::logistic();
    let config = SolverConfig::default();

    // Singleton fits with the bias forced.
    for j in 0..p {
        let support = Support::new(vec![j, p]).unwrap();
        match maximize_restricted(&spec, &data, &support, &config) {
            Ok(_) => {}
            Err(e) => println!("singleton {j}: {e}"),
        }
    }
    println!("singletons done");

    let options = SelectOptions {
        forced: Support::singleton(p),
        seed: 0,
    };
    match oblivious_select_with(&spec, &data, 70, &config, &options) {
        Ok(t) => println!("oblivious ok, f = {}", t.final_f()),
        Err(e) => println!("oblivious failed: {e}"),
    }
}

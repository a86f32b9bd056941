//! Fixtures shared by the benchmarks.

use snefy_ldl::synthetic::{sample_from_model, teacher_model};
use snefy_ldl::{Dims, LdlDataset, SeededRng, SnefyModel};

/// A trained-scale model with the default hidden and readout widths.
pub fn bench_model(d: usize, l: usize) -> SnefyModel {
    let dims = Dims::with_defaults(d, l);
    SnefyModel::init_random(dims, &mut SeededRng::new(1)).expect("valid dims")
}

/// `rows` samples from a small teacher model.
pub fn bench_data(d: usize, l: usize, rows: usize) -> LdlDataset {
    let teacher = teacher_model(Dims { d, d2: 6, n: 4, m: 3, l }, 2).expect("valid dims");
    sample_from_model(&teacher, rows, &mut SeededRng::new(3)).expect("sampling succeeds")
}

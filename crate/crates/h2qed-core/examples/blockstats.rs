use h2qed_core::hilbert::{Cutoffs, StateSpace};
use h2qed_core::sectors::{Blocking, Grading};

fn main() {
    let sp = StateSpace::build(Cutoffs::default());
    let b = Blocking::build(&sp, Grading::Charges);
    let mut sizes: Vec<usize> = (0..b.n_blocks()).map(|q| b.block(q).len()).collect();
    sizes.sort_unstable();
    let cubes: f64 = sizes.iter().map(|&n| (n as f64).powi(3)).sum();
    println!("dim {}  blocks {}  max {}  median {}  sum n^3 {:.3e} (dense {:.3e})",
        sp.dim(), b.n_blocks(), sizes.last().unwrap(), sizes[sizes.len()/2], cubes, (sp.dim() as f64).powi(3));
    let top: Vec<_> = sizes.iter().rev().take(12).collect();
    println!("largest blocks: {top:?}");
}

//! Critical points of the restricted function: Newton refinement from a grid
//! sweep, Morse indices, and the sorted list of critical values that separate
//! the regular levels.
//!
//! Run with: cargo run --release --example critical_values

use qlev::lattice::{build_plane, IntegerVector, LinearForm};
use qlev::qpfunction::{find_critical_points, restrict, Harmonic, TrigPolynomial};

fn main() {
    // Four axis cosines plus one coupling term.
    let mut hs: Vec<Harmonic> = (0..4)
        .map(|i| {
            let mut k = vec![0; 4];
            k[i] = 1;
            Harmonic { k: IntegerVector(k), a: 1.0, phi: 0.0 }
        })
        .collect();
    hs.push(Harmonic { k: IntegerVector(vec![1, 1, -1, 0]), a: 0.3, phi: 0.0 });
    let f = TrigPolynomial::new(4, hs).unwrap();

    let plane = build_plane(
        &[LinearForm::new(vec![0.0, 0.0, 0.0, 1.0]), LinearForm::new(vec![1.0, -1.0, 0.0, 0.0])],
        &[0.13, 0.07],
    )
    .unwrap();
    let g = restrict(&f, &plane).unwrap();

    let scan = find_critical_points(&g, 1.5, 0.02).unwrap();
    println!("{} critical points in the window:", scan.points.len());
    for p in &scan.points {
        let kind = match p.morse_index {
            0 => "minimum",
            1 => "saddle",
            _ => "maximum",
        };
        println!(
            "  {kind:8} at ({:+.4}, {:+.4})  value {:+.6}  det H {:+.3e}",
            p.y[0], p.y[1], p.value, p.hessian_det
        );
    }
    let mut values: Vec<f64> = scan.points.iter().map(|p| p.value).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    println!("distinct critical values: {values:.4?}");
    if !scan.non_morse.is_empty() {
        println!("warning: {} non-Morse points found", scan.non_morse.len());
    }
}

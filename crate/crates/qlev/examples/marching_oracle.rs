//! Cross-checking the continuation tracer against a marching-squares oracle:
//! both extract the same level-set components, and matched components agree
//! within a few grid cells of Hausdorff distance.
//!
//! Run with: cargo run --release --example marching_oracle

use qlev::lattice::{build_plane, IntegerVector, LinearForm};
use qlev::qpfunction::{restrict, Harmonic, TrigPolynomial};
use qlev::tracer::{extract_components, hausdorff_distance, marching_squares, TraceParams};

fn main() {
    let f = TrigPolynomial::new(
        3,
        vec![
            Harmonic { k: IntegerVector(vec![1, 0, 0]), a: 1.0, phi: 0.0 },
            Harmonic { k: IntegerVector(vec![0, 1, 0]), a: 1.0, phi: 0.3 },
            Harmonic { k: IntegerVector(vec![0, 0, 1]), a: 1.0, phi: 1.1 },
            Harmonic { k: IntegerVector(vec![1, -1, 1]), a: 0.2, phi: 0.0 },
        ],
    )
    .unwrap();
    let plane =
        build_plane(&[LinearForm::new(vec![0.4, 0.7, -0.2])], &[0.11]).unwrap();
    let g = restrict(&f, &plane).unwrap();

    let window = 0.8;
    let h = 0.005;
    let c = 2.4;
    let oracle = marching_squares(&g, c, window, h).unwrap();
    let params = TraceParams { step: 0.005, s_max: 300.0, ..Default::default() };
    let traced = extract_components(&g, c, window, 0.03, &params).unwrap();

    println!(
        "level c = {c}: tracer found {}, marching squares found {}",
        traced.trajectories.len(),
        oracle.len()
    );
    for traj in &traced.trajectories {
        let best = oracle
            .iter()
            .map(|comp| hausdorff_distance(&traj.points, &comp.polyline))
            .fold(f64::INFINITY, f64::min);
        println!(
            "  component with {} points: nearest oracle polyline at Hausdorff {:.2e} (cells: {:.1})",
            traj.points.len(),
            best,
            best / h
        );
    }
}

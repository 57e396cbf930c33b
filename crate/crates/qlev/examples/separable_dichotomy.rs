//! The simplest dichotomy: f = cos 2pi x1 + cos 2pi x2 restricted to the
//! coordinate plane. Regular levels give closed ovals; the saddle level gives
//! exact straight separatrix lines.
//!
//! Run with: cargo run --release --example separable_dichotomy

use qlev::classifier::{classify, ClassifierCfg, StripLabel};
use qlev::lattice::{build_plane, IntegerVector, LinearForm};
use qlev::qpfunction::{restrict, Harmonic, TrigPolynomial};
use qlev::tracer::{extract_components, TraceParams};

fn main() {
    let f = TrigPolynomial::new(
        4,
        vec![
            Harmonic { k: IntegerVector(vec![1, 0, 0, 0]), a: 1.0, phi: 0.0 },
            Harmonic { k: IntegerVector(vec![0, 1, 0, 0]), a: 1.0, phi: 0.0 },
        ],
    )
    .unwrap();
    let plane = build_plane(
        &[LinearForm::new(vec![0.0, 0.0, 1.0, 0.0]), LinearForm::new(vec![0.0, 0.0, 0.0, 1.0])],
        &[0.0, 0.0],
    )
    .unwrap();
    let g = restrict(&f, &plane).unwrap();
    let cfg = ClassifierCfg::default();
    let params = TraceParams { s_max: 250.0, ..Default::default() };

    for c in [1.0, 0.0, -1.0] {
        let set = extract_components(&g, c, 1.2, 0.05, &params).unwrap();
        println!("level c = {c}: {} component(s)", set.trajectories.len());
        for traj in &set.trajectories {
            match classify(traj, &plane, &cfg) {
                StripLabel::Compact => {
                    println!("  compact loop, arc length {:.3}", traj.arc_length)
                }
                StripLabel::OpenStrip { fit, .. } => println!(
                    "  open strip, width {:.2e}, direction ({:+.3}, {:+.3})",
                    fit.width, fit.direction2[0], fit.direction2[1]
                ),
                StripLabel::Unresolved { reason } => println!("  unresolved: {reason:?}"),
            }
        }
    }
}

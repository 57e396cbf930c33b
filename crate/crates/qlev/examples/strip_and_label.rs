//! Open strips and their integral labels on a rational plane: trace the
//! coupled 4-periodic fixture at an open level, fit the minimal bounding
//! strip, then isolate the unique integral hyperplane with a perturbation
//! family of nearby planes.
//!
//! Run with: cargo run --release --example strip_and_label

use qlev::classifier::{
    classify, label_by_perturbation, ClassifierCfg, LabelCfg, StripLabel,
};
use qlev::lattice::{build_plane, IntegerVector, LinearForm, PlaneSpec};
use qlev::qpfunction::{restrict, Harmonic, TrigPolynomial};
use qlev::tracer::{extract_components, TraceParams};

fn fixture() -> TrigPolynomial {
    let mut hs: Vec<Harmonic> = (0..4)
        .map(|i| {
            let mut k = vec![0; 4];
            k[i] = 1;
            Harmonic { k: IntegerVector(k), a: 1.0, phi: 0.0 }
        })
        .collect();
    hs.push(Harmonic { k: IntegerVector(vec![1, 1, -1, 0]), a: 0.3, phi: 0.0 });
    TrigPolynomial::new(4, hs).unwrap()
}

fn plane_with(tilt1: f64, tilt3: f64) -> PlaneSpec {
    build_plane(
        &[
            LinearForm::new(vec![tilt1, 0.0, 0.0, 1.0]),
            LinearForm::new(vec![1.0, -1.0, tilt3, 0.0]),
        ],
        &[0.13, 0.07],
    )
    .unwrap()
}

fn main() {
    let f = fixture();
    let plane = plane_with(0.0, 0.0);
    let g = restrict(&f, &plane).unwrap();
    let cfg = ClassifierCfg::default();
    let c = 0.3;

    let params = TraceParams { s_max: 400.0, ..Default::default() };
    let set = extract_components(&g, c, 1.0, 0.05, &params).unwrap();
    println!("level c = {c} on the base plane:");
    for traj in &set.trajectories {
        match classify(traj, &plane, &cfg) {
            StripLabel::Compact => println!("  compact, arc {:.1}", traj.arc_length),
            StripLabel::OpenStrip { fit, normals, orientation_sign } => {
                println!(
                    "  open strip: width {:.4}, orientation {orientation_sign:+}, \
                     top integer normals {:?}",
                    fit.width,
                    normals.iter().take(3).map(|n| n.normal.0.clone()).collect::<Vec<_>>()
                );
            }
            StripLabel::Unresolved { reason } => println!("  unresolved: {reason:?}"),
        }
    }

    // A single plane leaves the normal ambiguous (any lattice vector
    // orthogonal to one drift direction fits); a family of tilted planes
    // pins it down.
    let family = vec![
        plane_with(0.0, 0.0),
        plane_with(5e-3, 0.0),
        plane_with(-5e-3, 0.0),
        plane_with(0.0, 1e-3),
        plane_with(0.0, -1e-3),
    ];
    let label_cfg = LabelCfg {
        classifier: cfg,
        trace: TraceParams { s_max: 600.0, ..Default::default() },
        window: 1.0,
        grid_step: 0.05,
    };
    match label_by_perturbation(&f, c, &family, &label_cfg) {
        Ok(normal) => println!("perturbation label at c = {c}: {:?}", normal.0),
        Err(e) => println!("labeling failed honestly: {e}"),
    }
}

//! Stability zones in direction space: sweep a small grid of tilted planes,
//! label each sample, and flood-fill regions of constant verdict.
//!
//! Run with: cargo run --release --example zone_scan

use qlev::lattice::{IntegerVector, LinearForm};
use qlev::qpfunction::{Harmonic, TrigPolynomial};
use qlev::scanner::{build_zone_map, scan_directions, DirectionGrid, ScanCfg, ZoneLegend};

fn main() {
    let mut hs: Vec<Harmonic> = (0..4)
        .map(|i| {
            let mut k = vec![0; 4];
            k[i] = 1;
            Harmonic { k: IntegerVector(k), a: 1.0, phi: 0.0 }
        })
        .collect();
    hs.push(Harmonic { k: IntegerVector(vec![1, 1, -1, 0]), a: 0.3, phi: 0.0 });
    let f = TrigPolynomial::new(4, hs).unwrap();

    let grid = DirectionGrid {
        base_forms: vec![
            LinearForm::new(vec![0.0, 0.0, 0.0, 1.0]),
            LinearForm::new(vec![1.0, -1.0, 0.0, 0.0]),
        ],
        perturb_generators: vec![
            LinearForm::new(vec![1.0, 0.0, 0.0, 0.0]),
            LinearForm::new(vec![0.0, 0.0, 1.0, 0.0]),
        ],
        offsets: vec![0.13, 0.07],
        radius: 1e-3,
        resolution: 7,
    };
    let levels = [0.3];
    let cfg = ScanCfg { workers: 4, ..ScanCfg::default() };
    let records = scan_directions(&f, &grid, &levels, &cfg).unwrap();

    let map = build_zone_map(&records, 0.3).unwrap();
    println!("zone map at c = 0.3 ({} zones):", map.legend.len());
    for (id, legend) in map.legend.iter().enumerate() {
        let size = map.zone_ids.iter().filter(|&&z| z == id).count();
        let desc = match legend {
            ZoneLegend::AllCompact => "all compact".to_string(),
            ZoneLegend::Normal(n) => format!("open, normal {:?}", n.0),
            ZoneLegend::Other => "mixed / unlabeled".to_string(),
        };
        println!("  zone {id}: {size} samples, {desc}");
    }
    println!("grid rows (zone id per sample):");
    for i in 0..map.resolution {
        let row: Vec<String> = (0..map.resolution)
            .map(|j| map.zone_ids[i * map.resolution + j].to_string())
            .collect();
        println!("  {}", row.join(" "));
    }
}

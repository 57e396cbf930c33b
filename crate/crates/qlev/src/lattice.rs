//! Integer-lattice utilities: primitive vectors, rational linear forms,
//! plane parametrizations, and brute-force rationalization of measured
//! directions into integral hyperplanes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::{axpy, dot, norm, scale};

/// Threshold on the smallest singular value of the form matrix below which a
/// plane is considered degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;
/// Default enumeration box for integer normal candidates.
pub const DEFAULT_MAX_NORM: i64 = 10;

/// Integer vector in the period lattice Z^m, m = 3 or 4.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntegerVector(pub Vec<i64>);

impl IntegerVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&e| e as f64).collect()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&e| (e * e) as f64).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|e| e.abs()).max().unwrap_or(0)
    }
}

/// Primitive, sign-normalized integer normal of a codimension-1 subspace.
/// Canonical form: gcd of absolute entries 1, first nonzero entry positive.
pub type IntegerHyperplane = IntegerVector;

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Divide out the gcd and flip the sign so the first nonzero entry is positive.
pub fn primitive_normalize(v: &IntegerVector) -> Result<IntegerHyperplane> {
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    let g = v.0.iter().copied().fold(0, gcd);
    let mut out: Vec<i64> = v.0.iter().map(|&e| e / g).collect();
    if let Some(&first) = out.iter().find(|&&e| e != 0) {
        if first < 0 {
            for e in &mut out {
                *e = -*e;
            }
        }
    }
    Ok(IntegerVector(out))
}

/// Linear form on R^m; an optional integer witness marks it rational
/// (coefficients proportional to the witness entries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    pub coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<IntegerVector>,
}

impl LinearForm {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients, witness: None }
    }

    /// A form with integer coefficients, witness attached.
    pub fn rational(entries: Vec<i64>) -> Self {
        let coefficients = entries.iter().map(|&e| e as f64).collect();
        Self { coefficients, witness: Some(IntegerVector(entries)) }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        dot(&self.coefficients, x)
    }

    /// Check the witness proportionality invariant to relative error 1e-12.
    pub fn witness_consistent(&self) -> bool {
        match &self.witness {
            None => true,
            Some(w) => {
                if w.dim() != self.dim() || w.is_zero() {
                    return false;
                }
                let k = w.0.iter().position(|&e| e != 0).unwrap();
                let s = self.coefficients[k] / w.0[k] as f64;
                self.coefficients
                    .iter()
                    .zip(&w.0)
                    .all(|(&c, &e)| (c - s * e as f64).abs() <= 1e-12 * s.abs().max(1.0))
            }
        }
    }
}

/// Affine 2-plane in R^m cut out by n = m-2 linear forms, carrying a
/// deterministic orthonormal parametrization x(y) = base + y1*u1 + y2*u2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub forms: Vec<LinearForm>,
    pub offsets: Vec<f64>,
    pub base_point: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl PlaneSpec {
    pub fn dim(&self) -> usize {
        self.base_point.len()
    }

    /// Map plane coordinates to ambient coordinates.
    pub fn lift(&self, y: [f64; 2]) -> Vec<f64> {
        let mut x = self.base_point.clone();
        axpy(&mut x, y[0], &self.u1);
        axpy(&mut x, y[1], &self.u2);
        x
    }

    /// Lifted unit direction d1*u1 + d2*u2 for a planar unit direction.
    pub fn lift_direction(&self, d: [f64; 2]) -> Vec<f64> {
        let mut v = scale(&self.u1, d[0]);
        axpy(&mut v, d[1], &self.u2);
        v
    }
}

/// 2x2 symmetric solve for the minimum-norm base point; n is 1 or 2.
fn solve_gram(g: &[[f64; 2]; 2], b: &[f64], n: usize) -> Vec<f64> {
    if n == 1 {
        vec![b[0] / g[0][0]]
    } else {
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        vec![
            (b[0] * g[1][1] - b[1] * g[0][1]) / det,
            (g[0][0] * b[1] - g[1][0] * b[0]) / det,
        ]
    }
}

/// Build the deterministic orthonormal parametrization of the plane
/// {l_i(x) = b_i}. The base point is the minimum-norm solution; the basis is
/// the kernel of the form matrix, computed by row reduction with partial
/// pivoting followed by Gram-Schmidt in coordinate-index order.
pub fn build_plane(forms: &[LinearForm], offsets: &[f64]) -> Result<PlaneSpec> {
    let n = forms.len();
    if n == 0 || n > 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: n });
    }
    let m = forms[0].dim();
    if m != n + 2 {
        return Err(Error::DimensionMismatch { expected: m.saturating_sub(2), got: n });
    }
    if offsets.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: offsets.len() });
    }
    for f in forms {
        if f.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, got: f.dim() });
        }
    }

    // Smallest singular value via the Gram matrix (n <= 2).
    let mut gram = [[0.0; 2]; 2];
    for i in 0..n {
        for j in 0..n {
            gram[i][j] = dot(&forms[i].coefficients, &forms[j].coefficients);
        }
    }
    let sigma_min = if n == 1 {
        gram[0][0].sqrt()
    } else {
        let tr = gram[0][0] + gram[1][1];
        let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        (0.5 * (tr - disc)).max(0.0).sqrt()
    };
    if sigma_min <= DEGENERACY_THRESHOLD {
        return Err(Error::DegeneratePlane { sigma_min });
    }

    // Row reduction with partial pivoting; columns visited in index order.
    let mut rows: Vec<Vec<f64>> = forms.iter().map(|f| f.coefficients.clone()).collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..m {
        if r >= n {
            break;
        }
        let (best, best_abs) = (r..n)
            .map(|i| (i, rows[i][c].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if best_abs <= 1e-13 {
            continue;
        }
        rows.swap(r, best);
        let piv = rows[r][c];
        for e in rows[r].iter_mut() {
            *e /= piv;
        }
        for i in 0..n {
            if i != r {
                let factor = rows[i][c];
                if factor != 0.0 {
                    let (pr, row) = if i < r {
                        let (a, b) = rows.split_at_mut(r);
                        (&b[0], &mut a[i])
                    } else {
                        let (a, b) = rows.split_at_mut(i);
                        (&a[r], &mut b[0])
                    };
                    for (e, p) in row.iter_mut().zip(pr) {
                        *e -= factor * p;
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }

    // Kernel vectors from the free columns, in index order.
    let free_cols: Vec<usize> = (0..m).filter(|c| !pivot_cols.contains(c)).collect();
    let mut kernel: Vec<Vec<f64>> = Vec::new();
    for &fc in &free_cols {
        let mut v = vec![0.0; m];
        v[fc] = 1.0;
        for (row_idx, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -rows[row_idx][fc];
        }
        kernel.push(v);
    }
    debug_assert_eq!(kernel.len(), 2);

    // Gram-Schmidt in index order.
    let mut u1 = kernel[0].clone();
    let n1 = norm(&u1);
    for e in u1.iter_mut() {
        *e /= n1;
    }
    let mut u2 = kernel[1].clone();
    let proj = dot(&u2, &u1);
    axpy(&mut u2, -proj, &u1);
    let n2 = norm(&u2);
    for e in u2.iter_mut() {
        *e /= n2;
    }

    // Minimum-norm base point: x = A^T (A A^T)^{-1} b.
    let w = solve_gram(&gram, offsets, n);
    let mut base_point = vec![0.0; m];
    for i in 0..n {
        axpy(&mut base_point, w[i], &forms[i].coefficients);
    }

    Ok(PlaneSpec { forms: forms.to_vec(), offsets: offsets.to_vec(), base_point, u1, u2 })
}

/// An integer normal candidate with the residual it achieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalCandidate {
    pub normal: IntegerHyperplane,
    pub residual: f64,
}

fn enumerate_box(m: usize, max_norm: i64, mut visit: impl FnMut(&[i64])) {
    let mut v = vec![-max_norm; m];
    loop {
        visit(&v);
        let mut k = m;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if v[k] < max_norm {
                v[k] += 1;
                for e in v.iter_mut().skip(k + 1) {
                    *e = -max_norm;
                }
                break;
            }
        }
    }
}

/// Brute-force search for primitive integer vectors nearly orthogonal to every
/// given unit direction. Residual is max_i |<n, dir_i>| / ||n||_2; candidates
/// are sorted by (residual, ||n||_2, entries).
pub fn rationalize_common_normal(
    dirs: &[Vec<f64>],
    max_norm: i64,
    tol: f64,
) -> Result<Vec<NormalCandidate>> {
    if dirs.is_empty() {
        return Err(Error::EmptyInput("no directions given"));
    }
    let m = dirs[0].len();
    for d in dirs {
        if d.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: d.len() });
        }
        if (norm(d) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("direction not unit length: |d| = {}", norm(d))));
        }
    }
    let mut out = Vec::new();
    enumerate_box(m, max_norm, |entries| {
        // Half-space convention: first nonzero entry positive.
        match entries.iter().find(|&&e| e != 0) {
            None => return,
            Some(&first) if first < 0 => return,
            _ => {}
        }
        let g = entries.iter().copied().fold(0, gcd);
        if g != 1 {
            return;
        }
        let nf: Vec<f64> = entries.iter().map(|&e| e as f64).collect();
        let nn = norm(&nf);
        let residual = dirs
            .iter()
            .map(|d| (dot(&nf, d) / nn).abs())
            .fold(0.0_f64, f64::max);
        if residual < tol {
            out.push(NormalCandidate { normal: IntegerVector(entries.to_vec()), residual });
        }
    });
    out.sort_by(|a, b| {
        a.residual
            .total_cmp(&b.residual)
            .then(a.normal.norm().total_cmp(&b.normal.norm()))
            .then(a.normal.0.cmp(&b.normal.0))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_normalize_examples() {
        let cases = [
            (vec![2, -4, 6, 0], vec![1, -2, 3, 0]),
            (vec![0, 0, 1, 0], vec![0, 0, 1, 0]),
            (vec![-3, 0, 0, -9], vec![1, 0, 0, 3]),
        ];
        for (input, expected) in cases {
            let got = primitive_normalize(&IntegerVector(input)).unwrap();
            assert_eq!(got.0, expected);
        }
    }

    #[test]
    fn primitive_normalize_rejects_zero() {
        assert!(matches!(
            primitive_normalize(&IntegerVector(vec![0, 0, 0])),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn primitive_normalize_idempotent_exhaustive_m3() {
        let bound = 20;
        for a in -bound..=bound {
            for b in -bound..=bound {
                for c in -bound..=bound {
                    let v = IntegerVector(vec![a, b, c]);
                    if v.is_zero() {
                        continue;
                    }
                    let once = primitive_normalize(&v).unwrap();
                    let twice = primitive_normalize(&once).unwrap();
                    assert_eq!(once, twice);
                    let first = *once.0.iter().find(|&&e| e != 0).unwrap();
                    assert!(first > 0);
                }
            }
        }
    }

    #[test]
    fn build_plane_coordinate_plane_m4() {
        let forms = [LinearForm::rational(vec![0, 0, 1, 0]), LinearForm::rational(vec![0, 0, 0, 1])];
        let p = build_plane(&forms, &[0.0, 0.0]).unwrap();
        assert_eq!(p.u1, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.u2, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(p.base_point, vec![0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn build_plane_m3_offset() {
        let forms = [LinearForm::rational(vec![0, 0, 1])];
        let p = build_plane(&forms, &[0.25]).unwrap();
        assert!((p.base_point[2] - 0.25).abs() < 1e-12);
        assert!(p.u1[2].abs() < 1e-12 && p.u2[2].abs() < 1e-12);
    }

    fn check_plane_invariants(p: &PlaneSpec) {
        assert!((norm(&p.u1) - 1.0).abs() < 1e-12);
        assert!((norm(&p.u2) - 1.0).abs() < 1e-12);
        assert!(dot(&p.u1, &p.u2).abs() < 1e-12);
        for (f, &b) in p.forms.iter().zip(&p.offsets) {
            assert!(f.evaluate(&p.u1).abs() < 1e-12);
            assert!(f.evaluate(&p.u2).abs() < 1e-12);
            assert!((f.evaluate(&p.base_point) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn build_plane_generic_forms_invariants() {
        let forms = [
            LinearForm::rational(vec![0, 0, 1, 0]),
            LinearForm::rational(vec![2, 0, 0, 2]),
        ];
        let p = build_plane(&forms, &[0.0, 0.0]).unwrap();
        check_plane_invariants(&p);
    }

    #[test]
    fn build_plane_deterministic() {
        let forms = [
            LinearForm::new(vec![0.3, -0.1, 1.0, 0.05]),
            LinearForm::new(vec![1.0, -1.0, 0.2, 0.7]),
        ];
        let a = build_plane(&forms, &[0.1, -0.2]).unwrap();
        let b = build_plane(&forms, &[0.1, -0.2]).unwrap();
        assert_eq!(a.u1, b.u1);
        assert_eq!(a.u2, b.u2);
        assert_eq!(a.base_point, b.base_point);
        check_plane_invariants(&a);
    }

    #[test]
    fn build_plane_rejects_dependent_forms() {
        let forms = [
            LinearForm::new(vec![1.0, 2.0, 0.0, 0.0]),
            LinearForm::new(vec![2.0, 4.0, 0.0, 0.0]),
        ];
        assert!(matches!(
            build_plane(&forms, &[0.0, 0.0]),
            Err(Error::DegeneratePlane { .. })
        ));
    }

    #[test]
    fn build_plane_rejects_wrong_count() {
        let forms = [LinearForm::rational(vec![0, 0, 1, 0])];
        assert!(matches!(
            build_plane(&forms, &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rationalize_exact_orthogonality() {
        let s = 1.0 / 2.0_f64.sqrt();
        let dirs = vec![vec![s, s, 0.0, 0.0]];
        let cands = rationalize_common_normal(&dirs, 3, 1e-6).unwrap();
        let normals: Vec<&[i64]> = cands.iter().map(|c| c.normal.0.as_slice()).collect();
        assert!(normals.contains(&[1, -1, 0, 0].as_slice()));
        assert!(normals.contains(&[0, 0, 1, 0].as_slice()));
        assert!(normals.contains(&[0, 0, 0, 1].as_slice()));
    }

    #[test]
    fn rationalize_unique_from_multiple_samples() {
        // Unit vectors exactly orthogonal to (1,-1,0,0), plus noise 1e-8.
        let raw = [
            [0.3, 0.3, 0.7, 0.2],
            [0.5, 0.5, -0.1, 0.6],
            [-0.2, -0.2, 0.4, 0.9],
        ];
        let mut dirs = Vec::new();
        for (i, r) in raw.iter().enumerate() {
            let mut d: Vec<f64> = r.to_vec();
            d[0] += 1e-8 * (i as f64 - 1.0);
            let n = norm(&d);
            for e in d.iter_mut() {
                *e /= n;
            }
            dirs.push(d);
        }
        let cands = rationalize_common_normal(&dirs, 3, 1e-6).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].normal.0, vec![1, -1, 0, 0]);
    }

    #[test]
    fn rationalize_irrational_direction_no_candidate() {
        let mut d = vec![1.0, std::f64::consts::PI / 10.0, 0.0, 0.0];
        let n = norm(&d);
        for e in d.iter_mut() {
            *e /= n;
        }
        let cands = rationalize_common_normal(&[d.clone()], 5, 1e-6).unwrap();
        // Candidates orthogonal to the full direction must avoid the first two
        // coordinates entirely; verify none touch them.
        for c in &cands {
            assert_eq!(c.normal.0[0], 0);
            assert_eq!(c.normal.0[1], 0);
        }
        // Restricting to normals with support in the first two coordinates:
        // exhaustive enumeration finds nothing.
        let with_support: Vec<_> = cands
            .iter()
            .filter(|c| c.normal.0[0] != 0 || c.normal.0[1] != 0)
            .collect();
        assert!(with_support.is_empty());
    }

    #[test]
    fn rationalize_shrinking_tol_shrinks_list() {
        let mut d = vec![1.0, 1.0 + 1e-7, 0.3, 0.2];
        let n = norm(&d);
        for e in d.iter_mut() {
            *e /= n;
        }
        let loose = rationalize_common_normal(&[d.clone()], 4, 1e-3).unwrap();
        let tight = rationalize_common_normal(&[d], 4, 1e-8).unwrap();
        assert!(tight.len() <= loose.len());
        for c in &tight {
            assert!(loose.iter().any(|l| l.normal == c.normal));
        }
    }

    proptest::proptest! {
        #[test]
        fn primitive_normalize_properties(
            entries in proptest::collection::vec(-100i64..=100, 3..=4)
        ) {
            let v = IntegerVector(entries);
            proptest::prop_assume!(!v.is_zero());
            let p = primitive_normalize(&v).unwrap();
            // The result is parallel to the input: v = g * p with integer g.
            let g = v
                .0
                .iter()
                .zip(&p.0)
                .find(|(_, &e)| e != 0)
                .map(|(&a, &b)| a / b)
                .unwrap();
            for (a, b) in v.0.iter().zip(&p.0) {
                proptest::prop_assert_eq!(*a, g * b);
            }
            // Entries are coprime and the leading nonzero entry is positive.
            let gcd_all = p.0.iter().fold(0i64, |acc, &e| {
                let (mut a, mut b) = (acc.abs(), e.abs());
                while b != 0 {
                    let t = a % b;
                    a = b;
                    b = t;
                }
                a
            });
            proptest::prop_assert_eq!(gcd_all, 1);
            proptest::prop_assert!(p.0.iter().find(|&&e| e != 0).unwrap() > &0);
            // Idempotence.
            proptest::prop_assert_eq!(primitive_normalize(&p).unwrap(), p);
        }
    }
}

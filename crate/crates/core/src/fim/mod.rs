//! Fisher information of the USBL phase measurements with respect to the USV
//! horizontal position, and the waypoint planner that maximises its determinant.
//!
//! For AUV `k` with horizontal offset `(dx, dy) = (x_k − x, y_k − y)`, vertical
//! separation `z` and slant `S`, the Jacobian of the phase pair is
//!
//! ```text
//! H_k = K_k / S³ · [ −(dy² + z²)    dx·dy      ]
//!                  [   dx·dy      −(dx² + z²)  ]
//! ```
//!
//! and the information matrix is `J = σ⁻² Σ_k H_kᵀ H_k`.

pub mod de;
mod planner;

pub use planner::{grid_oracle, plan_waypoint, plan_waypoint_seeded, Bounds, PlannerConfig, Waypoint};

use serde::Serialize;

use crate::usbl::{AuvTruth, UsblConfig, UsvState};
use crate::{Error, Result};

/// Symmetric 2×2 information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FimMatrix {
    pub j11: f64,
    pub j12: f64,
    pub j22: f64,
    pub det: f64,
}

impl FimMatrix {
    fn from_entries(j11: f64, j12: f64, j22: f64) -> Self {
        Self {
            j11,
            j12,
            j22,
            det: j11 * j22 - j12 * j12,
        }
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.j11 + self.j22;
        let gap = ((self.j11 - self.j22).powi(2) + 4.0 * self.j12 * self.j12).sqrt();
        (0.5 * (tr - gap), 0.5 * (tr + gap))
    }
}

/// Jacobian of `(dphi_x, dphi_y)` with respect to the USV `(x, y)`, row-major.
pub fn phase_jacobian(usv: &UsvState, auv: &AuvTruth, auv_id: usize, cfg: &UsblConfig) -> Result<[[f64; 2]; 2]> {
    let dx = auv.x - usv.x;
    let dy = auv.y - usv.y;
    let z = auv.z + usv.eta;
    let s2 = dx * dx + dy * dy + z * z;
    if !(s2 > 0.0) {
        return Err(Error::DegenerateGeometry { auv: auv_id });
    }
    let k = cfg.phase_gain(auv_id) / (s2 * s2.sqrt());
    Ok([
        [-k * (dy * dy + z * z), k * dx * dy],
        [k * dx * dy, -k * (dx * dx + z * z)],
    ])
}

/// Information matrix for a USV observing every AUV in `auvs` (AUV `k` uses carrier `k`).
pub fn fim(usv: &UsvState, auvs: &[AuvTruth], cfg: &UsblConfig) -> Result<FimMatrix> {
    if auvs.is_empty() {
        return Err(Error::Config("FIM needs at least one AUV".into()));
    }
    if !(cfg.sigma_phase > 0.0) {
        return Err(Error::Config("FIM is unbounded for zero phase noise".into()));
    }
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for (k, auv) in auvs.iter().enumerate() {
        let h = phase_jacobian(usv, auv, k, cfg)?;
        // HᵀH
        a += h[0][0] * h[0][0] + h[1][0] * h[1][0];
        b += h[0][0] * h[0][1] + h[1][0] * h[1][1];
        c += h[0][1] * h[0][1] + h[1][1] * h[1][1];
    }
    let w = 1.0 / (cfg.sigma_phase * cfg.sigma_phase);
    Ok(FimMatrix::from_entries(w * a, w * b, w * c))
}

pub fn det_fim(usv: &UsvState, auvs: &[AuvTruth], cfg: &UsblConfig) -> Result<f64> {
    fim(usv, auvs, cfg).map(|j| j.det)
}

/// Per-AUV geometric quantities used to reason about the determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryTerms {
    pub slant: f64,
    /// Elevation angle, `sin(gamma) = z / S`.
    pub gamma: f64,
    /// Azimuth of the horizontal offset seen from the USV.
    pub phi: f64,
    /// Horizontal radius.
    pub p: f64,
    /// `A = (p⁴ − 2 S² p²) / (2 S⁶)`.
    pub a: f64,
}

pub fn geometry_terms(usv: &UsvState, auvs: &[AuvTruth]) -> Result<Vec<GeometryTerms>> {
    auvs.iter()
        .enumerate()
        .map(|(k, auv)| {
            let dx = auv.x - usv.x;
            let dy = auv.y - usv.y;
            let z = auv.z + usv.eta;
            let p2 = dx * dx + dy * dy;
            let s2 = p2 + z * z;
            if !(s2 > 0.0) {
                return Err(Error::DegenerateGeometry { auv: k });
            }
            let s = s2.sqrt();
            Ok(GeometryTerms {
                slant: s,
                gamma: (z / s).asin(),
                phi: dy.atan2(dx),
                p: p2.sqrt(),
                a: (p2 * p2 - 2.0 * s2 * p2) / (2.0 * s2 * s2 * s2),
            })
        })
        .collect()
}

/// `χ = Σ_{i<j} sin²(φ_i − φ_j)`, the azimuth diversity of a constellation.
pub fn angular_diversity(terms: &[GeometryTerms]) -> f64 {
    let mut chi = 0.0;
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            chi += (terms[i].phi - terms[j].phi).sin().powi(2);
        }
    }
    chi
}

/// Equal-slant, equal-depth constellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricCase {
    pub s0: f64,
    pub gamma0: f64,
    pub m: usize,
    pub chi: f64,
}

impl SymmetricCase {
    pub fn validate(&self) -> Result<()> {
        let max_chi = (self.m * self.m.saturating_sub(1)) as f64 / 2.0;
        if !(self.s0 > 0.0) || self.m == 0 || !(0.0..=max_chi).contains(&self.chi) {
            return Err(Error::Config(format!("invalid symmetric case {self:?}")));
        }
        Ok(())
    }
}

/// Closed-form symmetric-case determinant
///
/// ```text
/// (4π² f² d² / (σ² c²))² · [ 3m sin²γ0 / S0⁴ + (sin⁴γ0 + 1)² χ / S0⁴ ]
/// ```
///
/// evaluated with the first configured carrier frequency.
///
/// This is the closed form as commonly stated. It does not coincide with
/// the determinant of [`fim`] for the same geometry, which evaluates to
/// `(K²/σ²)² [m² sin⁴γ0 + (1 − sin⁴γ0)² χ] / S0⁴`; both increase with `χ` and
/// decrease with `S0`.
pub fn det_symmetric(case: &SymmetricCase, cfg: &UsblConfig) -> Result<f64> {
    case.validate()?;
    let k = cfg.phase_gain(0);
    let lead = (k * k / (cfg.sigma_phase * cfg.sigma_phase)).powi(2);
    let s = case.gamma0.sin();
    let s0_4 = case.s0.powi(4);
    let m = case.m as f64;
    Ok(lead * (3.0 * m * s * s / s0_4 + (s.powi(4) + 1.0).powi(2) * case.chi / s0_4))
}

/// Horizontal standoff in `[r_min, r_max]` maximising [`det_symmetric`] at depth
/// `depth_z`, by golden-section search to 1e-3 m with an endpoint check.
pub fn optimal_radius(depth_z: f64, m: usize, chi: f64, cfg: &UsblConfig, r_min: f64, r_max: f64) -> Result<f64> {
    if !(r_min >= 0.0 && r_min < r_max) || !(depth_z > 0.0) {
        return Err(Error::Config(format!(
            "optimal_radius needs 0 <= r_min < r_max and positive depth (got {r_min}, {r_max}, {depth_z})"
        )));
    }
    let objective = |r: f64| {
        let s0 = r.hypot(depth_z);
        det_symmetric(
            &SymmetricCase {
                s0,
                gamma0: (depth_z / s0).asin(),
                m,
                chi,
            },
            cfg,
        )
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (r_min, r_max);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c)?, objective(d)?);
    while b - a > 1e-3 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, objective(mid)?);
    for r in [r_min, r_max] {
        let f = objective(r)?;
        if f > best.1 {
            best = (r, f);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::usbl::true_phases;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const USV0: UsvState = UsvState { x: 0.0, y: 0.0, eta: 0.0 };

    /// Independent route: `J = Σ K²/(σ² S²) (I − (1 − sin⁴γ) u uᵀ)`, where `u`
    /// is the unit horizontal direction. Derived by eigen-decomposing `H_k`.
    fn closed_form(usv: &UsvState, auvs: &[AuvTruth], cfg: &UsblConfig) -> (f64, f64, f64) {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (k, auv) in auvs.iter().enumerate() {
            let dx = auv.x - usv.x;
            let dy = auv.y - usv.y;
            let z = auv.z + usv.eta;
            let r2 = dx * dx + dy * dy;
            let s2 = r2 + z * z;
            let w = cfg.phase_gain(k).powi(2) / (cfg.sigma_phase.powi(2) * s2);
            let shrink = 1.0 - (z * z / s2).powi(2);
            let (ux, uy) = if r2 > 0.0 { (dx / r2.sqrt(), dy / r2.sqrt()) } else { (0.0, 0.0) };
            a += w * (1.0 - shrink * ux * ux);
            b += w * (-shrink * ux * uy);
            c += w * (1.0 - shrink * uy * uy);
        }
        (a, b, c)
    }

    fn auv(x: f64, y: f64, z: f64) -> AuvTruth {
        AuvTruth { x, y, z }
    }

    #[test]
    fn single_auv_directly_below() {
        let cfg = UsblConfig::default();
        let z = 120.0;
        let h = phase_jacobian(&USV0, &auv(0.0, 0.0, z), 0, &cfg).unwrap();
        let k = cfg.phase_gain(0);
        assert!((h[0][0] + k / z).abs() < 1e-15 && (h[1][1] + k / z).abs() < 1e-15);
        assert_eq!((h[0][1], h[1][0]), (0.0, 0.0));
        let j = fim(&USV0, &[auv(0.0, 0.0, z)], &cfg).unwrap();
        let diag = k * k / (cfg.sigma_phase.powi(2) * z * z);
        assert!((j.det - diag * diag).abs() / (diag * diag) < 1e-12);
        assert!(j.det > 0.0);
    }

    #[test]
    fn mirrored_pair_has_no_cross_term() {
        let cfg = UsblConfig {
            freqs: vec![12_000.0],
            ..UsblConfig::default()
        };
        let j = fim(&USV0, &[auv(40.0, 0.0, 100.0), auv(-40.0, 0.0, 100.0)], &cfg).unwrap();
        assert_eq!(j.j12, 0.0);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        use rand::{Rng, SeedableRng};
        let cfg = UsblConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let h = 1e-4;
        for _ in 0..100 {
            let usv = UsvState { x: rng.random_range(0.0..200.0), y: rng.random_range(0.0..200.0), eta: rng.random_range(-5.0..5.0) };
            let a = auv(rng.random_range(0.0..200.0), rng.random_range(0.0..200.0), rng.random_range(20.0..120.0));
            let id = rng.random_range(0..4);
            let jac = phase_jacobian(&usv, &a, id, &cfg).unwrap();
            let phase = |x: f64, y: f64| {
                let (px, py, _) = true_phases(&UsvState { x, y, ..usv }, &a, id, &cfg).unwrap();
                [px, py]
            };
            let (xp, xm) = (phase(usv.x + h, usv.y), phase(usv.x - h, usv.y));
            let (yp, ym) = (phase(usv.x, usv.y + h), phase(usv.x, usv.y - h));
            let scale = jac.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            for r in 0..2 {
                let fd = [(xp[r] - xm[r]) / (2.0 * h), (yp[r] - ym[r]) / (2.0 * h)];
                for col in 0..2 {
                    assert!((fd[col] - jac[r][col]).abs() <= 1e-6 * scale, "{r}{col}: {} vs {}", fd[col], jac[r][col]);
                }
            }
        }
    }

    #[test]
    fn assembled_fim_matches_closed_form() {
        let cfg = UsblConfig::default();
        let auvs = [auv(25.0, 93.0, 120.0), auv(95.0, 40.0, 110.0), auv(10.0, 5.0, 80.0)];
        let usv = UsvState { x: 50.0, y: 60.0, eta: 1.5 };
        let j = fim(&usv, &auvs, &cfg).unwrap();
        let (a, b, c) = closed_form(&usv, &auvs, &cfg);
        for (x, y) in [(j.j11, a), (j.j12, b), (j.j22, c)] {
            assert!((x - y).abs() <= 1e-12 * a.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn degenerate_geometry_names_the_auv() {
        let cfg = UsblConfig::default();
        let auvs = [auv(5.0, 5.0, 50.0), auv(0.0, 0.0, 0.0)];
        assert_eq!(fim(&USV0, &auvs, &cfg), Err(Error::DegenerateGeometry { auv: 1 }));
        assert!(fim(&USV0, &[], &cfg).is_err());
    }

    /// `m` same-frequency AUVs at horizontal radius `r`, depth `z`, azimuths `phis`.
    fn ring(r: f64, z: f64, phis: &[f64]) -> Vec<AuvTruth> {
        phis.iter().map(|p| auv(r * p.cos(), r * p.sin(), z)).collect()
    }

    fn single_freq() -> UsblConfig {
        UsblConfig {
            freqs: vec![12_000.0],
            ..UsblConfig::default()
        }
    }

    #[test]
    fn collinear_constellation_has_no_diversity() {
        let cfg = single_freq();
        let auvs = ring(60.0, 100.0, &[0.7, 0.7, 0.7]);
        let terms = geometry_terms(&USV0, &auvs).unwrap();
        assert!(angular_diversity(&terms) < 1e-30);
        // χ = 0: det = (K²/σ²)² m² sin⁴γ0 / S0⁴
        let s0 = 60f64.hypot(100.0);
        let sin_g = 100.0 / s0;
        let lead = (cfg.phase_gain(0).powi(2) / cfg.sigma_phase.powi(2)).powi(2);
        let expect = lead * 9.0 * sin_g.powi(4) / s0.powi(4);
        let det = det_fim(&USV0, &auvs, &cfg).unwrap();
        assert!((det - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn symmetric_det_versus_assembled_det() {
        // Two equidistant, equal-depth AUVs with azimuth gap α give χ = sin²α.
        let cfg = single_freq();
        let (r, z) = (80.0f64, 100.0f64);
        let s0 = r.hypot(z);
        let gamma0 = (z / s0).asin();
        let mut fim_dets = Vec::new();
        let mut sym_dets = Vec::new();
        for chi in [0.0f64, 0.25, 0.5, 0.75, 1.0] {
            let alpha = chi.sqrt().asin();
            let auvs = ring(r, z, &[0.3, 0.3 + alpha]);
            let terms = geometry_terms(&USV0, &auvs).unwrap();
            assert!((angular_diversity(&terms) - chi).abs() < 1e-12);
            fim_dets.push(det_fim(&USV0, &auvs, &cfg).unwrap());
            sym_dets.push(det_symmetric(&SymmetricCase { s0, gamma0, m: 2, chi }, &cfg).unwrap());
        }
        // Both routes are affine and increasing in χ ...
        for w in fim_dets.windows(2).chain(sym_dets.windows(2)) {
            assert!(w[1] > w[0]);
        }
        // ... and the assembled one has the exact derived coefficients.
        let lead = (cfg.phase_gain(0).powi(2) / cfg.sigma_phase.powi(2)).powi(2);
        let s4 = gamma0.sin().powi(4);
        for (i, chi) in [0.0f64, 0.25, 0.5, 0.75, 1.0].iter().enumerate() {
            let expect = lead * (4.0 * s4 + (1.0 - s4).powi(2) * chi) / s0.powi(4);
            assert!((fim_dets[i] - expect).abs() / expect < 1e-12);
        }
        // The stated closed form is not proportional to the assembled determinant.
        let ratios: Vec<f64> = fim_dets.iter().zip(&sym_dets).map(|(a, b)| a / b).collect();
        assert!((ratios[0] - ratios[4]).abs() / ratios[0] > 1e-3);
    }

    #[test]
    fn symmetric_closed_form_values() {
        let cfg = UsblConfig::default();
        let lead = (cfg.phase_gain(0).powi(2) / cfg.sigma_phase.powi(2)).powi(2);
        let case = SymmetricCase { s0: 150.0, gamma0: PI / 4.0, m: 2, chi: 0.0 };
        let v = det_symmetric(&case, &cfg).unwrap();
        assert!((v - lead * 6.0 * 0.5 / 150f64.powi(4)).abs() / v < 1e-12);

        let doubled = det_symmetric(&SymmetricCase { s0: 300.0, ..case }, &cfg).unwrap();
        assert!((v / doubled - 16.0).abs() < 1e-12);

        // golden value: K = 2π·12000·0.033/1500, σ = 0.05,
        // bracket = 3·2·0.5 + 1.25²·1 = 4.5625 over 150⁴
        let golden = det_symmetric(&SymmetricCase { chi: 1.0, ..case }, &cfg).unwrap();
        let k = 2.0 * PI * 12_000.0 * 0.033 / 1500.0;
        let hand = (k * k / 0.0025f64).powi(2) * 4.5625 / 506_250_000.0;
        assert!((golden - hand).abs() / hand < 1e-12);
        assert!((golden - 1.091_674_095e-2).abs() / golden < 1e-6, "{golden}");
        assert!(det_symmetric(&SymmetricCase { chi: 1.5, ..case }, &cfg).is_err());
    }

    #[test]
    fn optimal_radius_is_the_lower_bound() {
        let cfg = UsblConfig::default();
        for &(z, m, chi) in &[(120.0, 2usize, 0.5), (60.0, 3, 1.2), (30.0, 4, 2.0), (120.0, 2, 0.0)] {
            // dense scan oracle confirms monotone decrease in r
            let f = |r: f64| {
                let s0 = f64::hypot(r, z);
                det_symmetric(&SymmetricCase { s0, gamma0: (z / s0).asin(), m, chi }, &cfg).unwrap()
            };
            let scan: Vec<f64> = (0..=2000).map(|i| f(i as f64 * 0.1)).collect();
            assert!(scan.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(optimal_radius(z, m, chi, &cfg, 0.0, 200.0).unwrap(), 0.0);
            assert_eq!(optimal_radius(z, m, chi, &cfg, 20.0, 200.0).unwrap(), 20.0);
        }
        assert!(optimal_radius(100.0, 2, 0.5, &cfg, 5.0, 5.0).is_err());
    }

    #[test]
    fn golden_section_agrees_with_grid_scan() {
        let cfg = UsblConfig::default();
        let (z, m, chi, lo, hi) = (80.0, 3usize, 1.0, 10.0, 150.0);
        let r = optimal_radius(z, m, chi, &cfg, lo, hi).unwrap();
        let f = |r: f64| {
            let s0 = f64::hypot(r, z);
            det_symmetric(&SymmetricCase { s0, gamma0: (z / s0).asin(), m, chi }, &cfg).unwrap()
        };
        let (mut best_r, mut best_f) = (lo, f(lo));
        for i in 0..=100_000 {
            let x = lo + (hi - lo) * i as f64 / 100_000.0;
            if f(x) > best_f {
                best_r = x;
                best_f = f(x);
            }
        }
        assert!((r - best_r).abs() <= 1e-3);
    }

    fn rotate(p: &AuvTruth, c: (f64, f64), ang: f64) -> AuvTruth {
        let (dx, dy) = (p.x - c.0, p.y - c.1);
        AuvTruth {
            x: c.0 + dx * ang.cos() - dy * ang.sin(),
            y: c.1 + dx * ang.sin() + dy * ang.cos(),
            z: p.z,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn det_is_rotation_invariant(
            pts in proptest::collection::vec((0.0..200.0f64, 0.0..200.0f64, 20.0..120.0f64), 1..5),
            ux in 0.0..200.0f64, uy in 0.0..200.0f64, ang in 0.0..(2.0 * PI),
        ) {
            let cfg = UsblConfig::default();
            let usv = UsvState { x: ux, y: uy, eta: 0.0 };
            let auvs: Vec<AuvTruth> = pts.iter().map(|&(x, y, z)| auv(x, y, z)).collect();
            let rot: Vec<AuvTruth> = auvs.iter().map(|a| rotate(a, (ux, uy), ang)).collect();
            let d0 = det_fim(&usv, &auvs, &cfg).unwrap();
            let d1 = det_fim(&usv, &rot, &cfg).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-9 * d0.abs());
        }

        #[test]
        fn fim_is_psd_and_translation_invariant(
            pts in proptest::collection::vec((0.0..200.0f64, 0.0..200.0f64, 20.0..120.0f64), 1..5),
            ux in 0.0..200.0f64, uy in 0.0..200.0f64, tx in -500.0..500.0f64, ty in -500.0..500.0f64,
        ) {
            let cfg = UsblConfig::default();
            let usv = UsvState { x: ux, y: uy, eta: 0.0 };
            let auvs: Vec<AuvTruth> = pts.iter().map(|&(x, y, z)| auv(x, y, z)).collect();
            let j = fim(&usv, &auvs, &cfg).unwrap();
            let (lo, _) = j.eigenvalues();
            prop_assert!(lo >= -1e-9);
            prop_assert!(j.det >= -1e-9);
            let moved: Vec<AuvTruth> = auvs.iter().map(|a| auv(a.x + tx, a.y + ty, a.z)).collect();
            let j2 = fim(&UsvState { x: ux + tx, y: uy + ty, eta: 0.0 }, &moved, &cfg).unwrap();
            for (a, b) in [(j.j11, j2.j11), (j.j12, j2.j12), (j.j22, j2.j22)] {
                prop_assert!((a - b).abs() <= 1e-9 * j.j11.abs().max(j.j22.abs()));
            }
        }

        #[test]
        fn adding_an_auv_never_reduces_information(
            pts in proptest::collection::vec((0.0..200.0f64, 0.0..200.0f64, 20.0..120.0f64), 1..4),
            extra in (0.0..200.0f64, 0.0..200.0f64, 20.0..120.0f64),
            ux in 0.0..200.0f64, uy in 0.0..200.0f64,
        ) {
            let cfg = UsblConfig::default();
            let usv = UsvState { x: ux, y: uy, eta: 0.0 };
            let mut auvs: Vec<AuvTruth> = pts.iter().map(|&(x, y, z)| auv(x, y, z)).collect();
            let before = det_fim(&usv, &auvs, &cfg).unwrap();
            auvs.push(auv(extra.0, extra.1, extra.2));
            let after = det_fim(&usv, &auvs, &cfg).unwrap();
            prop_assert!(after >= before * (1.0 - 1e-12));
        }
    }
}

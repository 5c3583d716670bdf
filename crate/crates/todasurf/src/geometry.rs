//! Induced geometry of the immersed surface: fundamental forms, curvatures,
//! the Willmore functional, the 2×2 closed-form frame, and the general
//! moving frame with its Gauss–Weingarten coefficient table.
//!
//! Scalars are built from the complex-bilinear trace form
//! (X, Y) = −½tr(XY) (no conjugation), whose restriction to anti-hermitian
//! matrices is the real inner product.  Metric components are carried as
//! jets, so metric derivatives entering the Christoffel-type coefficients
//! are analytic; only eigenvector-derived frame scalars fall back to finite
//! differences across the grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::immersion::{JetMat, SurfaceField, SurfacePoint};
use crate::mjet::MJet;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense complex value matrix, row major.
#[derive(Clone, Debug)]
pub struct CMat {
    pub n: usize,
    pub e: Vec<Complex64>,
}

impl CMat {
    pub fn zero(n: usize) -> Self {
        CMat { n, e: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.e[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(n: usize, e: Vec<Complex64>) -> Self {
        assert_eq!(e.len(), n * n);
        CMat { n, e }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.e[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.e[i * self.n + j] = v;
    }

    pub fn add(&self, o: &CMat) -> CMat {
        CMat { n: self.n, e: self.e.iter().zip(&o.e).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &CMat) -> CMat {
        CMat { n: self.n, e: self.e.iter().zip(&o.e).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, c: Complex64) -> CMat {
        CMat { n: self.n, e: self.e.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, o: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.get(i, k) * o.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn commutator(&self, o: &CMat) -> CMat {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn dagger(&self) -> CMat {
        let n = self.n;
        let mut out = CMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_norm(&self) -> f64 {
        self.e.iter().fold(0.0f64, |m, a| m.max(a.norm()))
    }

    pub fn frobenius(&self) -> f64 {
        self.e.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// The bilinear trace form (X, Y) = −½ tr(XY), extended complex-bilinearly.
pub fn inner(a: &CMat, b: &CMat) -> Complex64 {
    -0.5 * a.mul(b).trace()
}

/// Eigen-decomposition of a hermitian matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues ascending, column eigenvector matrix).
pub fn eigen_hermitian(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.n;
    let herm = m.sub(&m.dagger()).max_norm();
    if herm > 1e-9 * m.max_norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "eigen_hermitian needs a hermitian matrix (deviation {herm:.3e})"
        )));
    }
    let mut a = m.clone();
    let mut v = CMat::identity(n);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off < 1e-14 * a.max_norm().max(1.0) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.norm() < 1e-300 {
                    continue;
                }
                // Unitary 2×2 rotation annihilating the (p, q) entry.
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                let cs = Complex64::new(c, 0.0);
                let sn = phase * s;
                // Columns p, q of A and V: right-multiply by the rotation,
                // left-multiply A by its conjugate transpose.
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, aip * cs - aiq * sn.conj());
                    a.set(i, q, aip * sn + aiq * cs);
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, vip * cs - viq * sn.conj());
                    v.set(i, q, vip * sn + viq * cs);
                }
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, apj * cs.conj() - aqj * sn);
                    a.set(q, j, apj * sn.conj() + aqj * cs);
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    idx.sort_by(|&p, &q| vals[p].total_cmp(&vals[q]));
    let mut vv = CMat::zero(n);
    let mut ev = Vec::with_capacity(n);
    for (col, &p) in idx.iter().enumerate() {
        ev.push(vals[p]);
        for i in 0..n {
            vv.set(i, col, v.get(i, p));
        }
    }
    Ok((ev, vv))
}

/// Metric components as jets (derivatives analytic) at one surface point.
#[derive(Clone, Debug)]
pub struct MetricJets {
    pub g11: MJet,
    pub g12: MJet,
    pub g22: MJet,
    pub det: MJet,
    /// Magnitude scale used by the degeneracy threshold.
    pub scale: f64,
}

/// −½tr of a jet-matrix product.
fn inner_jet(a: &JetMat, b: &JetMat) -> MJet {
    a.mul(b).trace().scale(Complex64::new(-0.5, 0.0))
}

/// First fundamental form from the tangent fields of a point.
pub fn metric_jets(pt: &SurfacePoint) -> Result<MetricJets> {
    let (dx, dbx) = pt.tangent_fields();
    let g11 = inner_jet(&dx, &dx);
    let g12 = inner_jet(&dx, &dbx);
    let g22 = inner_jet(&dbx, &dbx);
    let det = g11.mul(&g22).sub(&g12.mul(&g12));
    let scale = g11
        .val()
        .norm()
        .max(g12.val().norm())
        .max(g22.val().norm());
    if det.val().norm() < 1e-12 * scale * scale {
        return Err(Error::DegenerateMetric(format!(
            "|det G| = {:.3e} at xi = {}",
            det.val().norm(),
            pt.xi
        )));
    }
    Ok(MetricJets { g11, g12, g22, det, scale })
}

/// Tangential coefficients (a, b) of w in the basis (∂X, ∂̄X):
/// solves the 2×2 Gram system G (a, b)ᵀ = ((w,∂X), (w,∂̄X)).
pub fn tangential_coeffs(
    w: &CMat,
    dx: &CMat,
    dbx: &CMat,
    g: &MetricJets,
) -> (Complex64, Complex64) {
    let r1 = inner(w, dx);
    let r2 = inner(w, dbx);
    let (g11, g12, g22, det) = (g.g11.val(), g.g12.val(), g.g22.val(), g.det.val());
    let a = (r1 * g22 - r2 * g12) / det;
    let b = (r2 * g11 - r1 * g12) / det;
    (a, b)
}

/// Normal projection w⊥ = w − a∂X − b∂̄X.
pub fn normal_project(w: &CMat, dx: &CMat, dbx: &CMat, g: &MetricJets) -> CMat {
    let (a, b) = tangential_coeffs(w, dx, dbx, g);
    w.sub(&dx.scale(a)).sub(&dbx.scale(b))
}

/// Second-derivative value matrices (∂²X, ∂∂̄X, ∂̄²X) of a point.
pub fn second_derivatives(pt: &SurfacePoint) -> [CMat; 3] {
    let n = pt.x.n;
    let d2 = pt.x.dxi().dxi();
    let ddb = pt.x.dxi().dxibar();
    let db2 = pt.x.dxibar().dxibar();
    [
        CMat::from_vec(n, d2.value()),
        CMat::from_vec(n, ddb.value()),
        CMat::from_vec(n, db2.value()),
    ]
}

/// Normal components of the second derivatives: the matrix-valued second
/// fundamental form (II₁₁, II₁₂, II₂₂).
pub fn second_form(pt: &SurfacePoint, g: &MetricJets) -> [CMat; 3] {
    let n = pt.x.n;
    let (dxj, dbxj) = pt.tangent_fields();
    let dx = CMat::from_vec(n, dxj.value());
    let dbx = CMat::from_vec(n, dbxj.value());
    let [d2, ddb, db2] = second_derivatives(pt);
    [
        normal_project(&d2, &dx, &dbx, g),
        normal_project(&ddb, &dx, &dbx, g),
        normal_project(&db2, &dx, &dbx, g),
    ]
}

/// Mean-curvature matrix H = det G⁻¹ (g22(∂²X)⊥ − 2g12(∂∂̄X)⊥ + g11(∂̄²X)⊥).
pub fn mean_curvature(pt: &SurfacePoint, g: &MetricJets) -> CMat {
    let [ii11, ii12, ii22] = second_form(pt, g);
    let det = g.det.val();
    ii11.scale(g.g22.val() / det)
        .sub(&ii12.scale(2.0 * g.g12.val() / det))
        .add(&ii22.scale(g.g11.val() / det))
}

/// Gaussian curvature from the metric jets:
/// K = (2 det G)⁻¹ [∂(det G⁻¹(g12 ∂̄ln g11 − ∂g22))
///                + ∂̄(det G⁻¹(2∂g12 − ∂̄g11 − g12 ∂ln g11))].
pub fn gaussian_curvature(g: &MetricJets) -> Complex64 {
    let ln_g11 = g.g11.ln();
    let inv_det = g.det.inv();
    let t1 = g
        .g12
        .mul(&ln_g11.dxibar())
        .sub(&g.g22.dxi())
        .mul(&inv_det);
    let t2 = g
        .g12
        .dxi()
        .scale(Complex64::new(2.0, 0.0))
        .sub(&g.g11.dxibar())
        .sub(&g.g12.mul(&ln_g11.dxi()))
        .mul(&inv_det);
    (t1.dxi().val() + t2.dxibar().val()) / (2.0 * g.det.val())
}

/// Willmore functional and surface area of the unmasked grid region by the
/// trapezoid rule.  The area element is |dξ∧dξ̄| = 2 dx dy.  Returns
/// (W, Area) with W = ∫|H|²√det G and Area = ∫√det G.
pub fn willmore(field: &SurfaceField) -> Result<(f64, f64)> {
    let mut w = 0.0f64;
    let mut area = 0.0f64;
    let cell = 2.0 * field.dx * field.dy;
    for iy in 0..field.ny.saturating_sub(1) {
        for ix in 0..field.nx.saturating_sub(1) {
            // Average the integrand over the four cell corners.
            let mut wsum = 0.0;
            let mut asum = 0.0;
            let mut cnt = 0usize;
            for (jx, jy) in [(ix, iy), (ix + 1, iy), (ix, iy + 1), (ix + 1, iy + 1)] {
                let Some(pt) = field.point(jx, jy) else {
                    continue;
                };
                let Ok(g) = metric_jets(pt) else { continue };
                let h = mean_curvature(pt, &g);
                let h2 = -0.5 * h.mul(&h).trace();
                let sqg = g.det.val().sqrt();
                wsum += (h2 * sqg).norm();
                asum += sqg.norm();
                cnt += 1;
            }
            if cnt == 4 {
                w += wsum / 4.0 * cell;
                area += asum / 4.0 * cell;
            }
        }
    }
    if area == 0.0 {
        return Err(Error::InvalidInput("no complete unmasked cells in the grid".into()));
    }
    Ok((w, area))
}

/// The 2×2 closed-form moving frame η = (∂X, ∂̄X, X) with its
/// Gauss–Weingarten matrices and Christoffel-type coefficients.
#[derive(Clone, Debug)]
pub struct Su2Frame {
    pub alpha: [[Complex64; 2]; 2],
    /// Coefficient of X in ∂²X = α11∂X + α12∂̄X + γ̃X relative to (X,X);
    /// γ = (∂²X, X)-bilinear = g11 is the test identity.
    pub gamma: Complex64,
    pub m1: [[Complex64; 3]; 3],
    pub m2: [[Complex64; 3]; 3],
}

/// Closed-form Christoffel coefficients from the metric jets.
pub fn alpha_coefficients(g: &MetricJets) -> [[Complex64; 2]; 2] {
    let (g11, g12) = (g.g11.val(), g.g12.val());
    let g11b = g.g22.val(); // = conj(g11) on reality-symmetric data
    let det = g.det.val();
    let (dg11, dbg11) = (g.g11.dxi().val(), g.g11.dxibar().val());
    let dg12 = g.g12.dxi().val();
    let dg22 = g.g22.dxi().val();
    let a11 = (0.5 * dg11 * g11b - dg12 * g12 + 0.5 * dbg11 * g12) / det;
    let a12 = (g11 * dg12 - 0.5 * g11 * dbg11 - 0.5 * g12 * dg11) / det;
    let a21 = (dbg11 * g11b - dg22 * g12) / (2.0 * det);
    let a22 = (g11 * dg22 - dbg11 * g12) / (2.0 * det);
    [[a11, a12], [a21, a22]]
}

/// α11, α12 from the linear system
/// tr((∂²X − α11∂X − α12∂̄X)∂X) = tr((∂²X − α11∂X − α12∂̄X)∂̄X) = 0.
pub fn alpha_by_linear_solve(pt: &SurfacePoint, g: &MetricJets) -> (Complex64, Complex64) {
    let n = pt.x.n;
    let (dxj, dbxj) = pt.tangent_fields();
    let dx = CMat::from_vec(n, dxj.value());
    let dbx = CMat::from_vec(n, dbxj.value());
    let [d2, _, _] = second_derivatives(pt);
    tangential_coeffs(&d2, &dx, &dbx, g)
}

/// Build the su(2) frame data at a point.
pub fn su2_frame(pt: &SurfacePoint, g: &MetricJets) -> Result<Su2Frame> {
    if pt.x.n != 2 {
        return Err(Error::InvalidInput("su2_frame needs 2x2 data".into()));
    }
    let n = 2;
    let alpha = alpha_coefficients(g);
    let x = CMat::from_vec(n, pt.x.value());
    let [d2, _, _] = second_derivatives(pt);
    let gamma = 0.5 * d2.mul(&x).trace();
    // X-column coefficients: w = c·X with c = (w, X)/(X, X).
    let xx = inner(&x, &x);
    let c1 = -gamma / xx; // (∂²X, X) = −½tr(∂²X X) = −γ
    let [_, ddb, _] = second_derivatives(pt);
    let c2 = inner(&ddb, &x) / xx;
    let m1 = [
        [alpha[0][0], alpha[0][1], c1],
        [alpha[1][0], alpha[1][1], c2],
        [Complex64::new(1.0, 0.0), ZERO, ZERO],
    ];
    // ∂̄ rows by the conjugate-symmetric pattern: ∂̄(∂X) = ∂(∂̄X) shares the
    // mixed row; ∂̄(∂̄X) uses the conjugate Christoffels.
    let a21b = alpha[1][0];
    let a22b = alpha[1][1];
    let (db2c, db2a, db2b) = {
        let (dxj, dbxj) = pt.tangent_fields();
        let dx = CMat::from_vec(n, dxj.value());
        let dbx = CMat::from_vec(n, dbxj.value());
        let [_, _, db2] = second_derivatives(pt);
        let (a, b) = tangential_coeffs(&db2, &dx, &dbx, g);
        (inner(&db2, &x) / xx, a, b)
    };
    let m2 = [
        [a21b, a22b, c2],
        [db2a, db2b, db2c],
        [ZERO, Complex64::new(1.0, 0.0), ZERO],
    ];
    Ok(Su2Frame { alpha, gamma, m1, m2 })
}

/// Analytic Gauss–Weingarten residual for the su(2) frame: the worst norm of
/// ∂η_row − (M η)_row and ∂̄η_row − (M2 η)_row, rows (∂X, ∂̄X, X) as jets.
pub fn su2_frame_residual(pt: &SurfacePoint, f: &Su2Frame) -> f64 {
    let n = pt.x.n;
    let rows = {
        let (dx, dbx) = pt.tangent_fields();
        [dx, dbx, pt.x.clone()]
    };
    let mut worst = 0.0f64;
    for (m, d) in [(&f.m1, 0usize), (&f.m2, 1usize)] {
        for r in 0..3 {
            let lhs = if d == 0 { rows[r].dxi() } else { rows[r].dxibar() };
            let mut rhs = CMat::zero(n);
            for c in 0..3 {
                rhs = rhs.add(&CMat::from_vec(n, rows[c].value()).scale(m[r][c]));
            }
            worst = worst.max(CMat::from_vec(n, lhs.value()).sub(&rhs).max_norm());
        }
    }
    worst
}

/// Matrix exponential of a jet matrix by scaling and squaring with a Taylor
/// series core.
pub fn jet_exp(m: &JetMat) -> JetMat {
    let n = m.n;
    let norm = m.e.iter().fold(0.0f64, |w, j| {
        let mut s = 0.0;
        for a in 0..j.d.len() {
            for b in 0..j.d.len() {
                s += j.d[a][b].norm();
            }
        }
        w.max(s)
    });
    let k = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m.scale(Complex64::new(0.5f64.powi(k as i32), 0.0));
    let mut sum = JetMat::zero(n);
    for i in 0..n {
        sum.set(i, i, MJet::constant(Complex64::new(1.0, 0.0)));
    }
    let mut term = sum.clone();
    for j in 1..=20 {
        term = term.mul(&scaled).scale(Complex64::new(1.0 / j as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..k {
        sum = sum.mul(&sum);
    }
    sum
}

/// Pure-gauge test surface: X = ΦYΦ†, A = −∂Φ·Φ⁻¹, B = −∂̄Φ·Φ⁻¹ with
/// Φ = exp(i(H0 + Re ξ·H1 + Im ξ·H2)) for hermitian generators H0..H2, so
/// ∂X = [X, A] and ∂̄X = [X, B] hold exactly and X is isospectral with
/// spectrum iy.
pub fn synth_surface(
    y: &[f64],
    gens: &[CMat; 3],
    xi0: Complex64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
) -> Result<SurfaceField> {
    let n = y.len();
    if y.iter().sum::<f64>().abs() > 1e-12 {
        return Err(Error::InvalidInput("spectrum must be traceless".into()));
    }
    for g in gens {
        if g.n != n || g.sub(&g.dagger()).max_norm() > 1e-12 {
            return Err(Error::InvalidInput("generators must be hermitian of matching size".into()));
        }
    }
    let sig = vec![1.0; n];
    let mut points = Vec::with_capacity(nx * ny);
    for iy_ in 0..ny {
        for ix in 0..nx {
            let xi = xi0 + Complex64::new(ix as f64 * dx, iy_ as f64 * dy);
            // x = Re ξ and y = Im ξ as jets of (ξ, ξ̄).
            let xj = MJet::coord_xi(xi)
                .add(&MJet::coord_xibar(xi))
                .scale(Complex64::new(0.5, 0.0));
            let yj = MJet::coord_xi(xi)
                .sub(&MJet::coord_xibar(xi))
                .scale(Complex64::new(0.0, -0.5));
            let mut s = JetMat::zero(n);
            for i in 0..n {
                for j in 0..n {
                    let v = MJet::constant(gens[0].get(i, j))
                        .add(&xj.scale(gens[1].get(i, j)))
                        .add(&yj.scale(gens[2].get(i, j)))
                        .scale(I);
                    s.set(i, j, v);
                }
            }
            let phi = jet_exp(&s);
            let phid = phi.twisted_dagger(&sig);
            let mut ymat = JetMat::zero(n);
            for i in 0..n {
                ymat.set(i, i, MJet::constant(I * y[i]));
            }
            let x = phi.mul(&ymat).mul(&phid);
            let a = phi.dxi().mul(&phid).scale(-Complex64::new(1.0, 0.0));
            let b = phi.dxibar().mul(&phid).scale(-Complex64::new(1.0, 0.0));
            points.push(Some(SurfacePoint { xi, x, a, b }));
        }
    }
    Ok(SurfaceField {
        nx,
        ny,
        xi0,
        dx,
        dy,
        lambda: Complex64::new(1.0, 0.0),
        sig,
        points,
    })
}

// ---------------------------------------------------------------------------
// Moving frame from the eigen-decomposition of X.
// ---------------------------------------------------------------------------

/// Eigen-frame at one grid point: X = Φ (i diag y) Φ⁻¹ with Φ unitary.
#[derive(Clone, Debug)]
pub struct FramePoint {
    pub phi: CMat,
    pub phi_inv: CMat,
    pub y: Vec<f64>,
}

/// Eigen-frames over a surface grid with a continuous ordering and phase
/// convention, plus the (grid-constant) spectral values y.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub nx: usize,
    pub ny: usize,
    pub y: Vec<f64>,
    /// Per eigenvector column: the row index whose entry is rotated to be
    /// real positive (chosen once, at the base point).
    pub anchors: Vec<usize>,
    pub frames: Vec<Option<FramePoint>>,
}

impl FrameField {
    pub fn frame(&self, ix: usize, iy: usize) -> Option<&FramePoint> {
        self.frames[iy * self.nx + ix].as_ref()
    }
}

/// Diagonalize X over the grid.  X must be anti-hermitian (identity
/// signature); eigenvalues iy are ordered by ascending y, and each
/// eigenvector phase is fixed so that a base-point-anchored component is
/// real positive, which makes Φ vary smoothly over the grid.
pub fn diagonalize_x(field: &SurfaceField) -> Result<FrameField> {
    if field.sig.iter().any(|&s| (s - 1.0).abs() > 0.0) {
        return Err(Error::InvalidInput(
            "diagonalize_x needs identity-signature (anti-hermitian) data".into(),
        ));
    }
    let mut y0: Option<Vec<f64>> = None;
    let mut anchors: Vec<usize> = Vec::new();
    let mut frames: Vec<Option<FramePoint>> = Vec::with_capacity(field.points.len());
    for p in &field.points {
        let Some(pt) = p else {
            frames.push(None);
            continue;
        };
        let n = pt.x.n;
        // Hermitian part: X = iM.
        let m = CMat::from_vec(n, pt.x.value()).scale(-I);
        let (vals, mut vecs) = eigen_hermitian(&m)?;
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        match &y0 {
            None => {
                for k in 1..n {
                    if (vals[k] - vals[k - 1]).abs() < 1e-8 * scale {
                        return Err(Error::EigenvalueCollision(format!(
                            "branches y_{} and y_{} coincide: {} vs {}",
                            k, k + 1, vals[k - 1], vals[k]
                        )));
                    }
                }
                // Anchor rows: the largest-modulus component of each column.
                for k in 0..n {
                    let mut best = 0usize;
                    for i in 1..n {
                        if vecs.get(i, k).norm() > vecs.get(best, k).norm() {
                            best = i;
                        }
                    }
                    anchors.push(best);
                }
                y0 = Some(vals.clone());
            }
            Some(y) => {
                let drift = vals
                    .iter()
                    .zip(y)
                    .fold(0.0f64, |a, (v, w)| a.max((v - w).abs()));
                if drift > 1e-6 * scale {
                    return Err(Error::ToleranceExceeded(format!(
                        "spectral branches drifted across the grid by {drift:.3e}"
                    )));
                }
            }
        }
        for k in 0..n {
            let a = vecs.get(anchors[k], k);
            if a.norm() < 1e-10 {
                return Err(Error::FrameDegenerate(format!(
                    "anchored eigenvector component vanished at xi = {}",
                    pt.xi
                )));
            }
            let ph = (a / a.norm()).conj();
            for i in 0..n {
                let v = vecs.get(i, k);
                vecs.set(i, k, v * ph);
            }
        }
        let phi_inv = vecs.dagger();
        frames.push(Some(FramePoint { phi: vecs, phi_inv, y: vals }));
    }
    Ok(FrameField {
        nx: field.nx,
        ny: field.ny,
        y: y0.ok_or_else(|| Error::InvalidInput("all grid points are masked".into()))?,
        anchors,
        frames,
    })
}

/// Pointwise frame scalars: the gauged connections Ξ₁ = Φ⁻¹AΦ, Ξ₂ = Φ⁻¹BΦ,
/// the gauged tangents ∂X⁰, ∂̄X⁰, and the pair scalars J, Q (with their
/// ∂̄-counterparts) indexed by the pair list (k, l), l < k, in s-order.
#[derive(Clone, Debug)]
pub struct FrameScalars {
    pub pairs: Vec<(usize, usize)>,
    pub xi1: CMat,
    pub xi2: CMat,
    pub dx0: CMat,
    pub dbx0: CMat,
    pub j: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub jb: Vec<Complex64>,
    pub qb: Vec<Complex64>,
}

impl FrameScalars {
    /// β_{k,l} = i det[[J_k, J_l], [J̄_k, J̄_l]] (1-based s-indices).
    pub fn beta(&self, k: usize, l: usize) -> Complex64 {
        I * (self.j[k - 1] * self.jb[l - 1] - self.j[l - 1] * self.jb[k - 1])
    }

    /// γ_{k,l} = i det[[J_k, Q_l], [J̄_k, Q̄_l]].
    pub fn gamma(&self, k: usize, l: usize) -> Complex64 {
        I * (self.j[k - 1] * self.qb[l - 1] - self.q[l - 1] * self.jb[k - 1])
    }

    /// κ_{k,l} = i det[[Q_k, Q_l], [Q̄_k, Q̄_l]].
    pub fn kappa(&self, k: usize, l: usize) -> Complex64 {
        I * (self.q[k - 1] * self.qb[l - 1] - self.q[l - 1] * self.qb[k - 1])
    }
}

/// Off-diagonal pair list (k, l) with l < k, 0-based, in s-order
/// s(k, l) = (k − 2)(k − 1)/2 + l for the 1-based labels.
pub fn pair_list(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for k in 1..n {
        for l in 0..k {
            pairs.push((k, l));
        }
    }
    pairs
}

pub fn xi_and_scalars(pt: &SurfacePoint, fp: &FramePoint) -> FrameScalars {
    let n = pt.x.n;
    let (dxj, dbxj) = pt.tangent_fields();
    let gauge = |w: &JetMat| {
        fp.phi_inv
            .mul(&CMat::from_vec(n, w.value()))
            .mul(&fp.phi)
    };
    let dx0 = gauge(&dxj);
    let dbx0 = gauge(&dbxj);
    let xi1 = gauge(&pt.a);
    let xi2 = gauge(&pt.b);
    let pairs = pair_list(n);
    let mut j = Vec::new();
    let mut q = Vec::new();
    let mut jb = Vec::new();
    let mut qb = Vec::new();
    for &(k, l) in &pairs {
        j.push(-0.5 * I * (dx0.get(l, k) + dx0.get(k, l)));
        q.push(-0.5 * (dx0.get(l, k) - dx0.get(k, l)));
        jb.push(-0.5 * I * (dbx0.get(l, k) + dbx0.get(k, l)));
        qb.push(-0.5 * (dbx0.get(l, k) - dbx0.get(k, l)));
    }
    FrameScalars { pairs, xi1, xi2, dx0, dbx0, j, q, jb, qb }
}

/// Non-orthogonal normal basis built from the conjugated su-basis.
#[derive(Clone, Debug)]
pub struct NormalBasis {
    /// v_s = Φ(E_kl − E_lk)Φ⁻¹, all pairs in s-order.
    pub v: Vec<CMat>,
    /// u_s = iΦ(E_kl + E_lk)Φ⁻¹.
    pub u: Vec<CMat>,
    /// Normal vectors: n_j^v, n_j^u (j = 1..P−1), then the diagonal family
    /// iΦ(E₁₁ − E_{j+1,j+1})Φ⁻¹ (j = 1..n−2) and finally y_n⁻¹X.
    pub normals: Vec<CMat>,
    /// Counts (num_v, num_u, num_d) of the three families in `normals`.
    pub counts: (usize, usize, usize),
}

pub fn normal_basis(pt: &SurfacePoint, fp: &FramePoint, sc: &FrameScalars) -> Result<NormalBasis> {
    let n = pt.x.n;
    let pairs = &sc.pairs;
    let np = pairs.len();
    let scalar_scale = sc
        .j
        .iter()
        .chain(&sc.q)
        .fold(0.0f64, |a, z| a.max(z.norm()));
    let g11 = sc.gamma(1, 1);
    if g11.norm() < 1e-12 * scalar_scale * scalar_scale {
        return Err(Error::FrameDegenerate(format!(
            "gamma_{{1,1}} = {:.3e} at xi = {}",
            g11.norm(),
            pt.xi
        )));
    }
    let mut v = Vec::with_capacity(np);
    let mut u = Vec::with_capacity(np);
    for &(k, l) in pairs {
        let mut v0 = CMat::zero(n);
        v0.set(k, l, Complex64::new(1.0, 0.0));
        v0.set(l, k, Complex64::new(-1.0, 0.0));
        let mut u0 = CMat::zero(n);
        u0.set(k, l, I);
        u0.set(l, k, I);
        v.push(fp.phi.mul(&v0).mul(&fp.phi_inv));
        u.push(fp.phi.mul(&u0).mul(&fp.phi_inv));
    }
    let mut normals = Vec::new();
    for jdx in 1..np {
        // 1-based s-index of the companion pair is jdx + 1.
        let s = jdx + 1;
        normals.push(
            v[jdx]
                .scale(g11)
                .sub(&v[0].scale(sc.gamma(1, s)))
                .sub(&u[0].scale(sc.kappa(s, 1))),
        );
    }
    for jdx in 1..np {
        let s = jdx + 1;
        normals.push(
            u[jdx]
                .scale(g11)
                .sub(&v[0].scale(sc.beta(1, s)))
                .sub(&u[0].scale(sc.gamma(s, 1))),
        );
    }
    for jdx in 1..(n - 1) {
        let mut d0 = CMat::zero(n);
        d0.set(0, 0, I);
        d0.set(jdx, jdx, -I);
        normals.push(fp.phi.mul(&d0).mul(&fp.phi_inv));
    }
    let yl = fp.y[n - 1];
    if yl.abs() < 1e-12 {
        return Err(Error::FrameDegenerate(
            "the last spectral branch vanishes; X cannot close the diagonal family".into(),
        ));
    }
    normals.push(CMat::from_vec(n, pt.x.value()).scale(Complex64::new(1.0 / yl, 0.0)));
    Ok(NormalBasis { v, u, normals, counts: (np - 1, np - 1, n - 1) })
}

/// Solve a dense complex linear system by Gaussian elimination with partial
/// pivoting.
pub fn solve_complex(a: &mut Vec<Vec<Complex64>>, b: &mut Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r][col].norm() > a[piv][col].norm() {
                piv = r;
            }
        }
        if a[piv][col].norm() < 1e-14 {
            return Err(Error::SingularSystem(format!(
                "pivot {:.3e} in column {col}",
                a[piv][col].norm()
            )));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let bv = b[col];
            b[r] -= f * bv;
        }
    }
    let mut x = vec![ZERO; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in (col + 1)..n {
            s -= a[col][c] * x[c];
        }
        x[col] = s / a[col][col];
    }
    Ok(x)
}

/// Decompose w over a list of frame matrices using the bilinear trace form:
/// solves Σ_b (η_a, η_b) c_b = (η_a, w).  Returns (coefficients, residual).
pub fn decompose(w: &CMat, frame: &[CMat]) -> Result<(Vec<Complex64>, f64)> {
    let m = frame.len();
    let mut gram = vec![vec![ZERO; m]; m];
    let mut rhs = vec![ZERO; m];
    for a in 0..m {
        for b in 0..m {
            gram[a][b] = inner(&frame[a], &frame[b]);
        }
        rhs[a] = inner(&frame[a], w);
    }
    let c = solve_complex(&mut gram, &mut rhs)?;
    let mut rec = CMat::zero(w.n);
    for (cf, f) in c.iter().zip(frame) {
        rec = rec.add(&f.scale(*cf));
    }
    let res = rec.sub(w).max_norm();
    Ok((c, res))
}

/// Gauss–Weingarten data at an interior grid point: the frame
/// η = (∂X, ∂̄X, normals…) and the coefficient matrices W1, W2 with
/// ∂η_r = Σ_c W1[r][c] η_c and ∂̄η_r = Σ_c W2[r][c] η_c.
#[derive(Clone, Debug)]
pub struct GaussWeingarten {
    pub frame: Vec<CMat>,
    pub w1: Vec<Vec<Complex64>>,
    pub w2: Vec<Vec<Complex64>>,
    /// ∂ and ∂̄ of each frame row as matrices (rows aligned with `frame`).
    pub d1: Vec<CMat>,
    pub d2: Vec<CMat>,
    /// −∂Φ·Φ⁻¹ and −∂̄Φ·Φ⁻¹ for the eigenvector gauge (finite differenced).
    pub a1: CMat,
    pub a2: CMat,
    /// Largest decomposition residual over all rows.
    pub residual: f64,
    /// Counts (num_v, num_u, num_d) of the normal families.
    pub counts: (usize, usize, usize),
}

/// Central finite differences of a grid scalar/matrix field: returns the
/// (∂, ∂̄) pair from the four neighbors.
fn fd_pair(
    e: &CMat,
    w: &CMat,
    nn: &CMat,
    ss: &CMat,
    dx: f64,
    dy: f64,
) -> (CMat, CMat) {
    let fx = e.sub(w).scale(Complex64::new(1.0 / (2.0 * dx), 0.0));
    let fy = nn.sub(ss).scale(Complex64::new(1.0 / (2.0 * dy), 0.0));
    let d = fx.sub(&fy.scale(I)).scale(Complex64::new(0.5, 0.0));
    let db = fx.add(&fy.scale(I)).scale(Complex64::new(0.5, 0.0));
    (d, db)
}

struct PointData<'a> {
    pt: &'a SurfacePoint,
    fp: &'a FramePoint,
    sc: FrameScalars,
    nb: NormalBasis,
}

fn point_data<'a>(
    field: &'a SurfaceField,
    frames: &'a FrameField,
    ix: usize,
    iy: usize,
) -> Result<PointData<'a>> {
    let pt = field
        .point(ix, iy)
        .ok_or_else(|| Error::MaskedPath(format!("grid point ({ix}, {iy}) is masked")))?;
    let fp = frames
        .frame(ix, iy)
        .ok_or_else(|| Error::MaskedPath(format!("frame at ({ix}, {iy}) is masked")))?;
    let sc = xi_and_scalars(pt, fp);
    let nb = normal_basis(pt, fp, &sc)?;
    Ok(PointData { pt, fp, sc, nb })
}

pub fn gauss_weingarten(
    field: &SurfaceField,
    frames: &FrameField,
    ix: usize,
    iy: usize,
) -> Result<GaussWeingarten> {
    if ix == 0 || iy == 0 || ix + 1 >= field.nx || iy + 1 >= field.ny {
        return Err(Error::InvalidInput(
            "gauss_weingarten needs an interior grid point".into(),
        ));
    }
    let n0 = point_data(field, frames, ix, iy)?;
    let pe = point_data(field, frames, ix + 1, iy)?;
    let pw = point_data(field, frames, ix - 1, iy)?;
    let pn = point_data(field, frames, ix, iy + 1)?;
    let ps = point_data(field, frames, ix, iy - 1)?;
    let n = n0.pt.x.n;

    // Eigenvector-gauge connections −∂Φ·Φ⁻¹ by finite differences.
    let (dphi, dbphi) = fd_pair(&pe.fp.phi, &pw.fp.phi, &pn.fp.phi, &ps.fp.phi, field.dx, field.dy);
    let a1 = dphi.mul(&n0.fp.phi_inv).scale(-Complex64::new(1.0, 0.0));
    let a2 = dbphi.mul(&n0.fp.phi_inv).scale(-Complex64::new(1.0, 0.0));

    // Frame rows.
    let (dxj, dbxj) = n0.pt.tangent_fields();
    let mut frame: Vec<CMat> = vec![
        CMat::from_vec(n, dxj.value()),
        CMat::from_vec(n, dbxj.value()),
    ];
    frame.extend(n0.nb.normals.iter().cloned());
    let rows = frame.len();

    // Row derivatives.  Tangent rows are analytic (jets); normal rows use
    // the structural formula [n, A_gauge] + (finite-differenced scalar
    // derivatives) × basis, which the tests compare against direct finite
    // differences of the normal matrices.
    let mut d1: Vec<CMat> = Vec::with_capacity(rows);
    let mut d2: Vec<CMat> = Vec::with_capacity(rows);
    d1.push(CMat::from_vec(n, dxj.dxi().value()));
    d2.push(CMat::from_vec(n, dxj.dxibar().value()));
    d1.push(CMat::from_vec(n, dbxj.dxi().value()));
    d2.push(CMat::from_vec(n, dbxj.dxibar().value()));
    let np = n0.sc.pairs.len();
    // Scalar finite differences of γ, β, κ over the grid.
    let fd_scalar = |f: &dyn Fn(&PointData) -> Complex64| -> (Complex64, Complex64) {
        let fx = (f(&pe) - f(&pw)) / (2.0 * field.dx);
        let fy = (f(&pn) - f(&ps)) / (2.0 * field.dy);
        (0.5 * (fx - I * fy), 0.5 * (fx + I * fy))
    };
    for jdx in 1..np {
        let s = jdx + 1;
        let (dg11, dbg11) = fd_scalar(&|p: &PointData| p.sc.gamma(1, 1));
        let (dg1s, dbg1s) = fd_scalar(&|p: &PointData| p.sc.gamma(1, s));
        let (dks1, dbks1) = fd_scalar(&|p: &PointData| p.sc.kappa(s, 1));
        let nv = &frame[2 + jdx - 1];
        let scal = |c: Complex64, d: Complex64, e: Complex64| {
            n0.nb.v[jdx]
                .scale(c)
                .sub(&n0.nb.v[0].scale(d))
                .sub(&n0.nb.u[0].scale(e))
        };
        d1.push(nv.commutator(&a1).add(&scal(dg11, dg1s, dks1)));
        d2.push(nv.commutator(&a2).add(&scal(dbg11, dbg1s, dbks1)));
    }
    for jdx in 1..np {
        let s = jdx + 1;
        let (dg11, dbg11) = fd_scalar(&|p: &PointData| p.sc.gamma(1, 1));
        let (db1s, dbb1s) = fd_scalar(&|p: &PointData| p.sc.beta(1, s));
        let (dgs1, dbgs1) = fd_scalar(&|p: &PointData| p.sc.gamma(s, 1));
        let nu = &frame[2 + (np - 1) + jdx - 1];
        let scal = |c: Complex64, d: Complex64, e: Complex64| {
            n0.nb.u[jdx]
                .scale(c)
                .sub(&n0.nb.v[0].scale(d))
                .sub(&n0.nb.u[0].scale(e))
        };
        d1.push(nu.commutator(&a1).add(&scal(dg11, db1s, dgs1)));
        d2.push(nu.commutator(&a2).add(&scal(dbg11, dbb1s, dbgs1)));
    }
    for jdx in 0..(n - 2) {
        let nd = &frame[2 + 2 * (np - 1) + jdx];
        d1.push(nd.commutator(&a1));
        d2.push(nd.commutator(&a2));
    }
    // Last diagonal normal is y_n⁻¹X, whose derivatives are tangent.
    let yl = Complex64::new(1.0 / n0.fp.y[n - 1], 0.0);
    d1.push(frame[0].scale(yl));
    d2.push(frame[1].scale(yl));

    // Decompose every row derivative over the frame.
    let mut w1 = Vec::with_capacity(rows);
    let mut w2 = Vec::with_capacity(rows);
    let mut worst = 0.0f64;
    for r in 0..rows {
        let (c1, r1) = decompose(&d1[r], &frame)?;
        let (c2, r2) = decompose(&d2[r], &frame)?;
        worst = worst.max(r1).max(r2);
        w1.push(c1);
        w2.push(c2);
    }
    Ok(GaussWeingarten {
        frame,
        w1,
        w2,
        d1,
        d2,
        a1,
        a2,
        residual: worst,
        counts: n0.nb.counts,
    })
}

/// Modified Gram–Schmidt over the real trace form ⟨a, b⟩ = −½ Re tr(ab),
/// positive definite on anti-hermitian matrices.  Input: the real tangent
/// pair and the normals; output: an orthonormal basis of their span.
pub fn orthonormal_frame(vectors: &[CMat]) -> Result<Vec<CMat>> {
    let mut out: Vec<CMat> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for e in &out {
            let c = inner(e, &w);
            w = w.sub(&e.scale(c));
        }
        let nrm2 = inner(&w, &w).re;
        if nrm2 < 1e-20 {
            // Linearly dependent input vector; skip it.
            continue;
        }
        out.push(w.scale(Complex64::new(1.0 / nrm2.sqrt(), 0.0)));
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no independent vectors to orthonormalize".into()));
    }
    Ok(out)
}

/// Real tangent pair T1 = ∂X + ∂̄X, T2 = i(∂X − ∂̄X), both anti-hermitian
/// when the surface is.
pub fn real_tangents(pt: &SurfacePoint) -> (CMat, CMat) {
    let n = pt.x.n;
    let (dxj, dbxj) = pt.tangent_fields();
    let dx = CMat::from_vec(n, dxj.value());
    let dbx = CMat::from_vec(n, dbxj.value());
    (dx.add(&dbx), dx.sub(&dbx).scale(I))
}

//! Membrane generating phase of a path map.
//!
//! For a path map `[sigma]` and a probe point `x`, the composition
//! `s_x o [sigma]` has a fixed point `xt`. The phase is the symplectic area
//! of a membrane whose boundary runs from `xt` along an auxiliary path `c`
//! to the start of `sigma`, along `sigma`, back along the image `[sigma](c)`
//! to `[sigma](xt)`, and closes with the Ether geodesic through `x`. The
//! orientation is fixed so that the phase differential equals
//! `-H_x(xt)`; that identity and the endpoint Hamilton-Jacobi relation are
//! what the test suites assert.

use crate::ether::EtherField;
use crate::num::Real;
use crate::path::Path;
use crate::pathmap::{ether_exponential_dense, path_symplectomorphism, PathMap};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Choice of the auxiliary boundary path `c` from the fixed point to the
/// start of the path. Different choices shift the phase by a constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AuxPath {
    Straight,
    /// Straight path bent sideways by `amount * sin(pi u)`.
    Bulge(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct PhaseOptions<R> {
    pub newton_tol: R,
    pub newton_max_iter: usize,
    /// Mesh is refined until two consecutive levels agree this well.
    pub mesh_tol: R,
    pub mesh_start: usize,
    pub mesh_max: usize,
    pub aux: AuxPath,
    /// Step for the phase differential in `x`.
    pub fd_step: R,
}

impl<R: Real> Default for PhaseOptions<R> {
    fn default() -> Self {
        Self {
            newton_tol: R::of(1e-10),
            newton_max_iter: 50,
            mesh_tol: R::of(1e-6),
            mesh_start: 8,
            mesh_max: 128,
            aux: AuxPath::Straight,
            fd_step: R::of(1e-3),
        }
    }
}

/// The computed phase data at a probe point.
#[derive(Clone, Debug)]
pub struct GeneratingPhase<R: Real> {
    pub probe: DVector<R>,
    /// Fixed point of `s_x o [sigma]`.
    pub fixed_point: DVector<R>,
    /// Its image `[sigma](fixed_point) = s_x(fixed_point)`.
    pub image_fixed_point: DVector<R>,
    /// Membrane symplectic area.
    pub phase: R,
    /// Phase differential in the probe point, by finite differences.
    pub d_phase: DVector<R>,
    /// Mesh level at which the area stabilized and the last refinement gap.
    pub mesh_level: usize,
    pub mesh_gap: R,
}

/// Damped Newton iteration for the fixed point of `s_x o [sigma]`.
pub fn reflected_map_fixed_point<R: Real>(
    field: &EtherField<R>,
    map: &PathMap<R>,
    x: &DVector<R>,
    opts: &PhaseOptions<R>,
) -> Result<DVector<R>> {
    let f = |z: &DVector<R>| -> Result<DVector<R>> {
        Ok(field.reflect_fast(x, &map.evaluate(z)?)? - z)
    };
    let mut guesses = vec![x.clone()];
    let (mid, _) = map.path().at(R::of(0.5));
    guesses.push(mid);
    let mut last_err = R::of(f64::INFINITY);
    for guess in guesses {
        match damped_newton(&f, guess, opts.newton_tol, opts.newton_max_iter) {
            Ok(z) => return Ok(z),
            Err(Error::NewtonDiverged { residual, .. }) => {
                last_err = last_err.min(R::of(residual));
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::NewtonDiverged {
        iters: opts.newton_max_iter,
        residual: last_err.to_double(),
    })
}

fn damped_newton<R: Real>(
    f: &impl Fn(&DVector<R>) -> Result<DVector<R>>,
    start: DVector<R>,
    tol: R,
    max_iter: usize,
) -> Result<DVector<R>> {
    let d = start.len();
    let h = R::of(1e-6);
    let mut z = start;
    let mut fz = f(&z)?;
    for _ in 0..max_iter {
        if fz.amax() < tol {
            return Ok(z);
        }
        let mut jac = DMatrix::zeros(d, d);
        for c in 0..d {
            let mut zp = z.clone();
            zp[c] += h;
            let mut zm = z.clone();
            zm[c] -= h;
            let col = (f(&zp)? - f(&zm)?) / (R::of(2.0) * h);
            jac.set_column(c, &col);
        }
        let step = crate::linalg::solve(&jac, &fz)?;
        // backtracking on the residual norm
        let mut lambda = R::one();
        let mut accepted = false;
        for _ in 0..8 {
            let cand = &z - &step * lambda;
            if let Ok(fc) = f(&cand) {
                if fc.amax() < fz.amax() {
                    z = cand;
                    fz = fc;
                    accepted = true;
                    break;
                }
            }
            lambda = lambda / R::of(2.0);
        }
        if !accepted {
            return Err(Error::NewtonDiverged {
                iters: max_iter,
                residual: fz.amax().to_double(),
            });
        }
    }
    if fz.amax() < tol {
        Ok(z)
    } else {
        Err(Error::NewtonDiverged {
            iters: max_iter,
            residual: fz.amax().to_double(),
        })
    }
}

/// Shooting for the exponential: finds `v` with `Exp_x(v) = target`.
pub fn exponential_shooting<R: Real>(
    field: &EtherField<R>,
    x: &DVector<R>,
    target: &DVector<R>,
    tol: R,
) -> Result<DVector<R>> {
    let f = |v: &DVector<R>| -> Result<DVector<R>> {
        Ok(crate::pathmap::ether_exponential(field, x, v, R::one())? - target)
    };
    damped_newton(&f, target - x, tol, 40)
}

/// One boundary arc of the membrane, sampled on a uniform grid.
fn sample_arc<R: Real>(f: impl Fn(R) -> DVector<R>, n: usize) -> Vec<DVector<R>> {
    (0..=n)
        .map(|i| f(R::of(i as f64) / R::of(n as f64)))
        .collect()
}

fn aux_path<R: Real>(from: DVector<R>, to: DVector<R>, aux: AuxPath) -> Path<R> {
    match aux {
        AuxPath::Straight => Path::line(from, to),
        AuxPath::Bulge(amount) => {
            let d = from.len();
            let dir = &to - &from;
            // a direction orthogonal to the chord (chart-Euclidean)
            let mut normal = DVector::zeros(d);
            if dir.amax() < R::of(1e-14) {
                normal[0] = R::one();
            } else {
                normal[0] = -dir[1];
                normal[1] = dir[0];
                let n = normal.norm();
                if n > R::zero() {
                    normal /= n;
                }
            }
            let amp = R::of(amount);
            Path::from_fn(
                move |t| {
                    let bump = (R::pi() * t).sin();
                    let dbump = R::pi() * (R::pi() * t).cos();
                    (
                        &from + &dir * t + &normal * (amp * bump),
                        &dir + &normal * (amp * dbump),
                    )
                },
                vec![],
            )
        }
    }
}

struct MembraneBoundary<R: Real> {
    bottom: Path<R>,             // c: fixed point -> path start
    map: PathMap<R>,             // sigma and its action (right side / top)
    geo: crate::ode::DenseSolution<R>, // exponential trajectory, tau in [-1, 1]
}

impl<R: Real> MembraneBoundary<R> {
    /// Corner-compatible Coons patch through the four arcs; `phase` is the
    /// symplectic area with the orientation pinned by the flat oracle.
    fn phase_at_level(&self, n: usize) -> Result<R> {
        let grid = self.sample_grid(n)?;
        let model = self.map.field().model().clone();
        let mut total = R::zero();
        let half = R::of(0.5);
        let third = R::of(1.0 / 3.0);
        let tri = |a: &DVector<R>, b: &DVector<R>, c: &DVector<R>| -> R {
            let e1 = b - a;
            let e2 = c - a;
            let m1 = (a + b) * half;
            let m2 = (b + c) * half;
            let m3 = (a + c) * half;
            let pairing = |q: &DVector<R>| -> R {
                let om = model.omega(q);
                (e1.transpose() * om * &e2)[(0, 0)]
            };
            (pairing(&m1) + pairing(&m2) + pairing(&m3)) * third * half
        };
        for i in 0..n {
            for j in 0..n {
                let a = &grid[i][j];
                let b = &grid[i + 1][j];
                let c = &grid[i + 1][j + 1];
                let dd = &grid[i][j + 1];
                total += tri(a, b, c) + tri(a, c, dd);
            }
        }
        // boundary traversal c, sigma, image reversed, geodesic encloses the
        // patch positively; the phase uses the opposite orientation
        Ok(-total)
    }

    fn sample_grid(&self, n: usize) -> Result<Vec<Vec<DVector<R>>>> {
        let nf = R::of(n as f64);
        let bottom = sample_arc(|u| self.bottom.at(u).0, n);
        let mut top = Vec::with_capacity(n + 1);
        for b in &bottom {
            top.push(self.map.evaluate(b)?);
        }
        let left = sample_arc(
            |v| self.geo.eval(R::one() - R::of(2.0) * v),
            n,
        );
        let right = sample_arc(|v| self.map.path().at(v).0, n);
        let p00 = bottom[0].clone();
        let p10 = bottom[n].clone();
        let p01 = left[n].clone();
        let p11 = right[n].clone();
        let mut grid = vec![vec![DVector::zeros(p00.len()); n + 1]; n + 1];
        for i in 0..=n {
            let u = R::of(i as f64) / nf;
            for j in 0..=n {
                let v = R::of(j as f64) / nf;
                let ruled = &bottom[i] * (R::one() - v)
                    + &top[i] * v
                    + &left[j] * (R::one() - u)
                    + &right[j] * u;
                let corners = &p00 * ((R::one() - u) * (R::one() - v))
                    + &p10 * (u * (R::one() - v))
                    + &p01 * ((R::one() - u) * v)
                    + &p11 * (u * v);
                grid[i][j] = ruled - corners;
            }
        }
        Ok(grid)
    }
}

fn build_boundary<R: Real>(
    field: &EtherField<R>,
    map: &PathMap<R>,
    x: &DVector<R>,
    fixed: &DVector<R>,
    opts: &PhaseOptions<R>,
) -> Result<MembraneBoundary<R>> {
    let start = map.path().start();
    let bottom = aux_path(fixed.clone(), start, opts.aux);
    // the exponential hits the fixed point at tau = 1 and its image at -1
    let v = exponential_shooting(field, x, fixed, opts.newton_tol)?;
    let geo = ether_exponential_dense(field, x, &v, -R::one(), R::one())?;
    Ok(MembraneBoundary {
        bottom,
        map: map.clone(),
        geo,
    })
}

/// Membrane phase of `map` at `x` with mesh refinement. Returns the phase,
/// the level at which it stabilized and the last refinement gap.
pub fn membrane_phase<R: Real>(
    field: &EtherField<R>,
    map: &PathMap<R>,
    x: &DVector<R>,
    fixed: &DVector<R>,
    opts: &PhaseOptions<R>,
) -> Result<(R, usize, R)> {
    let boundary = build_boundary(field, map, x, fixed, opts)?;
    let mut n = opts.mesh_start;
    let mut prev = boundary.phase_at_level(n)?;
    loop {
        let next_n = n * 2;
        if next_n > opts.mesh_max {
            return Err(Error::MembraneMesh {
                delta: f64::INFINITY,
            });
        }
        let cur = boundary.phase_at_level(next_n)?;
        let delta = (cur - prev).abs();
        if delta < opts.mesh_tol {
            return Ok((cur, next_n, delta));
        }
        prev = cur;
        n = next_n;
    }
}

/// Membrane phase at a fixed mesh level (used by the differentials, which
/// need the discretization error to vary smoothly with the probe point).
fn membrane_phase_fixed_level<R: Real>(
    field: &EtherField<R>,
    map: &PathMap<R>,
    x: &DVector<R>,
    opts: &PhaseOptions<R>,
    level: usize,
) -> Result<R> {
    let fixed = reflected_map_fixed_point(field, map, x, opts)?;
    let boundary = build_boundary(field, map, x, &fixed, opts)?;
    boundary.phase_at_level(level)
}

/// Full generating-phase computation at a probe point: fixed point, phase,
/// and the phase differential in `x`.
pub fn generating_phase<R: Real>(
    field: &EtherField<R>,
    map: &PathMap<R>,
    x: &DVector<R>,
    opts: &PhaseOptions<R>,
) -> Result<GeneratingPhase<R>> {
    let fixed = reflected_map_fixed_point(field, map, x, opts)?;
    let image = map.evaluate(&fixed)?;
    let (phase, level, gap) = membrane_phase(field, map, x, &fixed, opts)?;
    // differentials sit on a finer fixed mesh: the finite differences see
    // the discretization error directly, so it has to be small and smooth
    let fd_level = level.max(64).min(opts.mesh_max.max(64));
    let d = x.len();
    let h = opts.fd_step;
    let mut d_phase = DVector::zeros(d);
    for k in 0..d {
        let mut xp = x.clone();
        xp[k] += h;
        let mut xm = x.clone();
        xm[k] -= h;
        let pp = membrane_phase_fixed_level(field, map, &xp, opts, fd_level)?;
        let pm = membrane_phase_fixed_level(field, map, &xm, opts, fd_level)?;
        d_phase[k] = (pp - pm) / (R::of(2.0) * h);
    }
    Ok(GeneratingPhase {
        probe: x.clone(),
        fixed_point: fixed,
        image_fixed_point: image,
        phase,
        d_phase,
        mesh_level: level,
        mesh_gap: gap,
    })
}

/// Residual of the endpoint Hamilton-Jacobi relation: appending a short
/// segment in each chart direction at the far end of the path, the phase
/// must change by minus half the field component at the image fixed point.
pub fn hamilton_jacobi_residual<R: Real>(
    field: &EtherField<R>,
    sigma: &Path<R>,
    x: &DVector<R>,
    opts: &PhaseOptions<R>,
) -> Result<R> {
    let d = x.len();
    let map = path_symplectomorphism(field, sigma);
    let fixed = reflected_map_fixed_point(field, &map, x, opts)?;
    let image = map.evaluate(&fixed)?;
    let end = sigma.end();
    let ether_at_image = field.eval(&end, &image)?;
    let (_, level, _) = membrane_phase(field, &map, x, &fixed, opts)?;
    let level = level.max(64).min(opts.mesh_max.max(64));
    let delta = R::of(1e-3);
    let mut worst = R::zero();
    for k in 0..d {
        let mut phases = [R::zero(); 2];
        for (idx, sign) in [R::one(), -R::one()].into_iter().enumerate() {
            let mut tip = end.clone();
            tip[k] += delta * sign;
            let extended = sigma.then(&Path::line(end.clone(), tip))?;
            let ext_map = path_symplectomorphism(field, &extended);
            phases[idx] = membrane_phase_fixed_level(field, &ext_map, x, opts, level)?;
        }
        let dphi_k = (phases[0] - phases[1]) / (R::of(2.0) * delta);
        let res = dphi_k + ether_at_image[k] / R::of(2.0);
        worst = worst.max(res.abs());
    }
    Ok(worst)
}

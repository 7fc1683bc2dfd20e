//! Parametrized chart paths `t in [0, 1] -> (y(t), ydot(t))`.

use crate::manifold::ManifoldModel;
use crate::num::Real;
use crate::{Error, Result};
use nalgebra::DVector;
use std::sync::Arc;

type Curve<R> = dyn Fn(R) -> (DVector<R>, DVector<R>) + Send + Sync;

/// A C^1 path given by a callable; kinks are tracked as breakpoints so the
/// integrators can restart there.
#[derive(Clone)]
pub struct Path<R: Real> {
    f: Arc<Curve<R>>,
    breaks: Vec<R>,
}

impl<R: Real> std::fmt::Debug for Path<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Path")
            .field("start", &self.at(R::zero()).0)
            .field("end", &self.at(R::one()).0)
            .finish()
    }
}

impl<R: Real> Path<R> {
    pub fn from_fn(
        f: impl Fn(R) -> (DVector<R>, DVector<R>) + Send + Sync + 'static,
        breaks: Vec<R>,
    ) -> Self {
        Self {
            f: Arc::new(f),
            breaks,
        }
    }

    /// Position and velocity at parameter `t`.
    pub fn at(&self, t: R) -> (DVector<R>, DVector<R>) {
        (self.f)(t)
    }

    pub fn start(&self) -> DVector<R> {
        self.at(R::zero()).0
    }

    pub fn end(&self) -> DVector<R> {
        self.at(R::one()).0
    }

    /// Interior parameter values where the velocity may jump.
    pub fn breakpoints(&self) -> &[R] {
        &self.breaks
    }

    pub fn is_closed(&self) -> bool {
        (self.end() - self.start()).amax() < R::of(1e-12)
    }

    /// Chart-straight segment.
    pub fn line(from: DVector<R>, to: DVector<R>) -> Self {
        let vel = &to - &from;
        Self::from_fn(move |t| (&from + &vel * t, vel.clone()), vec![])
    }

    /// Constant path sitting at one point.
    pub fn constant(p: DVector<R>) -> Self {
        let d = p.len();
        Self::from_fn(move |_| (p.clone(), DVector::zeros(d)), vec![])
    }

    /// Circle loop of radius `r` in the `(j, k)` coordinate plane around
    /// `center`, starting at `center + r e_j`. Counterclockwise (in the
    /// `(j, k)` axes) when `ccw` is set.
    pub fn circle(center: DVector<R>, r: R, j: usize, k: usize, ccw: bool) -> Self {
        let two_pi = R::two_pi();
        let sign = if ccw { R::one() } else { -R::one() };
        Self::from_fn(
            move |t| {
                let ang = two_pi * t * sign;
                let mut y = center.clone();
                y[j] += r * ang.cos();
                y[k] += r * ang.sin();
                let mut v = DVector::zeros(center.len());
                v[j] = -r * two_pi * sign * ang.sin();
                v[k] = r * two_pi * sign * ang.cos();
                (y, v)
            },
            vec![],
        )
    }

    /// Square loop with one corner at `base`, side `side`, edges along the
    /// `(j, k)` coordinate axes, corners smoothed by quintic easing (the
    /// velocity vanishes at each corner). Traversed `base -> base + side e_k
    /// -> ... -> base`, which makes the enclosed area positive in the
    /// `dx^k wedge dx^j` orientation.
    pub fn square_loop(base: DVector<R>, side: R, j: usize, k: usize) -> Self {
        let quarter = R::of(0.25);
        let corners: Vec<DVector<R>> = {
            let mut c1 = base.clone();
            c1[k] += side;
            let mut c2 = c1.clone();
            c2[j] += side;
            let mut c3 = base.clone();
            c3[j] += side;
            vec![base.clone(), c1, c2, c3, base.clone()]
        };
        Self::from_fn(
            move |t| {
                let scaled = (t / quarter).floor();
                let edge = scaled.to_double().clamp(0.0, 3.0) as usize;
                let s = t / quarter - R::of(edge as f64);
                let (q, dq) = quintic_ease(s);
                let a = &corners[edge];
                let b = &corners[edge + 1];
                let dir = b - a;
                (a + &dir * q, dir * (dq / quarter))
            },
            vec![quarter, R::of(0.5), R::of(0.75)],
        )
    }

    /// Geodesic arc of a model with a closed-form exponential: the image of
    /// `t -> exp_x(v t)` for `t in [0, 1]`.
    pub fn geodesic(model: &ManifoldModel<R>, x: DVector<R>, v: DVector<R>) -> Result<Self> {
        if model.geodesic_exp(&x, &v, R::zero()).is_none() {
            return Err(Error::Invalid(format!(
                "model `{}` has no closed-form geodesics",
                model.name()
            )));
        }
        let model = model.clone();
        let h = R::of(1e-6);
        Ok(Self::from_fn(
            move |t| {
                let y = model.geodesic_exp(&x, &v, t).expect("checked above");
                let yp = model.geodesic_exp(&x, &v, t + h).expect("checked above");
                let ym = model.geodesic_exp(&x, &v, t - h).expect("checked above");
                ((y), (yp - ym) / (R::of(2.0) * h))
            },
            vec![],
        ))
    }

    /// Cubic Hermite interpolation of sampled positions and velocities on
    /// uniform knots over `[0, 1]`.
    pub fn from_samples(points: Vec<DVector<R>>, velocities: Vec<DVector<R>>) -> Result<Self> {
        if points.len() != velocities.len() || points.len() < 2 {
            return Err(Error::Invalid(
                "need equally many points and velocities (at least two)".into(),
            ));
        }
        let n = points.len() - 1;
        let nf = R::of(n as f64);
        let breaks = (1..n).map(|i| R::of(i as f64) / nf).collect();
        Ok(Self::from_fn(
            move |t| {
                let scaled = t * nf;
                let seg = scaled.to_double().floor().clamp(0.0, (n - 1) as f64) as usize;
                let s = scaled - R::of(seg as f64);
                let (p0, p1) = (&points[seg], &points[seg + 1]);
                // knot spacing is 1/n, so tangents scale by 1/n
                let (m0, m1) = (&velocities[seg] / nf, &velocities[seg + 1] / nf);
                let s2 = s * s;
                let s3 = s2 * s;
                let h00 = R::of(2.0) * s3 - R::of(3.0) * s2 + R::one();
                let h10 = s3 - R::of(2.0) * s2 + s;
                let h01 = -R::of(2.0) * s3 + R::of(3.0) * s2;
                let h11 = s3 - s2;
                let y = p0 * h00 + &m0 * h10 + p1 * h01 + &m1 * h11;
                let d00 = R::of(6.0) * s2 - R::of(6.0) * s;
                let d10 = R::of(3.0) * s2 - R::of(4.0) * s + R::one();
                let d01 = -d00;
                let d11 = R::of(3.0) * s2 - R::of(2.0) * s;
                let v = (p0 * d00 + &m0 * d10 + p1 * d01 + &m1 * d11) * nf;
                (y, v)
            },
            breaks,
        ))
    }

    /// The same trace run backwards.
    pub fn reversed(&self) -> Self {
        let f = self.f.clone();
        let mut breaks: Vec<R> = self.breaks.iter().map(|&b| R::one() - b).collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self::from_fn(
            move |t| {
                let (y, v) = f(R::one() - t);
                (y, -v)
            },
            breaks,
        )
    }

    /// This path followed by `next`; fails when the endpoints do not meet.
    pub fn then(&self, next: &Path<R>) -> Result<Self> {
        let gap = (self.end() - next.start()).amax();
        if gap > R::of(1e-9) {
            return Err(Error::EndpointMismatch {
                gap: gap.to_double(),
            });
        }
        let first = self.f.clone();
        let second = next.f.clone();
        let half = R::of(0.5);
        let mut breaks: Vec<R> = self.breaks.iter().map(|&b| b * half).collect();
        breaks.push(half);
        breaks.extend(next.breaks.iter().map(|&b| half + b * half));
        Ok(Self::from_fn(
            move |t| {
                let two = R::of(2.0);
                if t < half {
                    let (y, v) = first(t * two);
                    (y, v * two)
                } else {
                    let (y, v) = second((t - half) * two);
                    (y, v * two)
                }
            },
            breaks,
        ))
    }

    /// Largest gap between the declared velocity and a finite-difference
    /// velocity, sampled away from breakpoints.
    pub fn c1_defect(&self, checks: usize) -> R {
        let h = R::of(1e-6);
        let mut worst = R::zero();
        for i in 0..checks {
            let t = (R::of(i as f64) + R::of(0.5)) / R::of(checks as f64);
            let near_break = self
                .breaks
                .iter()
                .any(|&b| (t - b).abs() < R::of(2.0) * h);
            if near_break || t - h < R::zero() || t + h > R::one() {
                continue;
            }
            let (_, v) = self.at(t);
            let (yp, _) = self.at(t + h);
            let (ym, _) = self.at(t - h);
            let fd_v = (yp - ym) / (R::of(2.0) * h);
            let gap = (fd_v - v).amax();
            if gap > worst {
                worst = gap;
            }
        }
        worst
    }

    /// True when every sampled point lies in the model chart.
    pub fn stays_in(&self, model: &ManifoldModel<R>, samples: usize) -> bool {
        (0..=samples).all(|i| {
            let t = R::of(i as f64) / R::of(samples as f64);
            model.contains(&self.at(t).0)
        })
    }
}

/// Quintic smoothstep and its derivative: C^2 easing with flat ends.
fn quintic_ease<R: Real>(s: R) -> (R, R) {
    let s2 = s * s;
    let s3 = s2 * s;
    let q = s3 * (R::of(10.0) - R::of(15.0) * s + R::of(6.0) * s2);
    let dq = R::of(30.0) * s2 - R::of(60.0) * s3 + R::of(30.0) * s2 * s2;
    (q, dq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(coords)
    }

    #[test]
    fn line_velocity_consistent() {
        let p: Path<f64> = Path::line(pt(&[0.0, 1.0]), pt(&[2.0, -1.0]));
        assert!(p.c1_defect(17) < 1e-7);
        assert_eq!(p.start(), pt(&[0.0, 1.0]));
        assert_eq!(p.end(), pt(&[2.0, -1.0]));
    }

    #[test]
    fn circle_closes_and_is_smooth() {
        let p: Path<f64> = Path::circle(pt(&[0.1, 0.2]), 0.3, 0, 1, true);
        assert!(p.is_closed());
        assert!(p.c1_defect(23) < 1e-6);
    }

    #[test]
    fn square_loop_closes_with_vanishing_corner_speed() {
        let p: Path<f64> = Path::square_loop(pt(&[0.0, 0.0]), 0.2, 0, 1);
        assert!(p.is_closed());
        let (_, v) = p.at(0.25);
        assert!(v.amax() < 1e-10);
        assert!(p.c1_defect(37) < 1e-6);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        // samples of a cubic with exact velocities reproduce it
        let f = |t: f64| pt(&[t * t * t - t, 2.0 * t]);
        let df = |t: f64| pt(&[3.0 * t * t - 1.0, 2.0]);
        let n = 4;
        let points = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        let vels = (0..=n).map(|i| df(i as f64 / n as f64)).collect();
        let p: Path<f64> = Path::from_samples(points, vels).unwrap();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!((p.at(t).0 - f(t)).amax() < 1e-12);
        }
    }

    #[test]
    fn concat_checks_endpoints() {
        let a: Path<f64> = Path::line(pt(&[0.0, 0.0]), pt(&[1.0, 0.0]));
        let b: Path<f64> = Path::line(pt(&[1.0, 0.0]), pt(&[1.0, 1.0]));
        let c = a.then(&b).unwrap();
        assert_eq!(c.end(), pt(&[1.0, 1.0]));
        let bad: Path<f64> = Path::line(pt(&[0.5, 0.0]), pt(&[1.0, 1.0]));
        assert!(a.then(&bad).is_err());
    }

    #[test]
    fn reversal_flips_ends() {
        let a: Path<f64> = Path::line(pt(&[0.0, 0.0]), pt(&[1.0, 2.0]));
        let r = a.reversed();
        assert_eq!(r.start(), pt(&[1.0, 2.0]));
        let (_, v) = r.at(0.4);
        assert_eq!(v, pt(&[-1.0, -2.0]));
    }
}

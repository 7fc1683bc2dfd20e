//! Embedded Dormand-Prince 5(4) integrator with dense output.
//!
//! One solver serves every flow in the crate: reflections, path maps,
//! Hamiltonian trajectories, transport and variational systems. States are
//! flat `DVector`s; joint point/matrix systems are packed by the callers.

use crate::num::Real;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<R> {
    pub rtol: R,
    pub atol: R,
    pub max_steps: usize,
}

impl<R: Real> Default for OdeOptions<R> {
    fn default() -> Self {
        Self {
            rtol: R::of(1e-10),
            atol: R::of(1e-10),
            max_steps: 200_000,
        }
    }
}

impl<R: Real> OdeOptions<R> {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self {
            rtol: R::of(rtol),
            atol: R::of(atol),
            max_steps: 200_000,
        }
    }
}

struct Tableau<R> {
    a: [[R; 6]; 6],
    b: [R; 7],
    e: [R; 7],
    c: [R; 6],
    d: [R; 7],
}

fn tableau<R: Real>() -> Tableau<R> {
    let r = R::of;
    Tableau {
        a: [
            [r(1.0 / 5.0), r(0.0), r(0.0), r(0.0), r(0.0), r(0.0)],
            [r(3.0 / 40.0), r(9.0 / 40.0), r(0.0), r(0.0), r(0.0), r(0.0)],
            [r(44.0 / 45.0), r(-56.0 / 15.0), r(32.0 / 9.0), r(0.0), r(0.0), r(0.0)],
            [
                r(19372.0 / 6561.0),
                r(-25360.0 / 2187.0),
                r(64448.0 / 6561.0),
                r(-212.0 / 729.0),
                r(0.0),
                r(0.0),
            ],
            [
                r(9017.0 / 3168.0),
                r(-355.0 / 33.0),
                r(46732.0 / 5247.0),
                r(49.0 / 176.0),
                r(-5103.0 / 18656.0),
                r(0.0),
            ],
            [
                r(35.0 / 384.0),
                r(0.0),
                r(500.0 / 1113.0),
                r(125.0 / 192.0),
                r(-2187.0 / 6784.0),
                r(11.0 / 84.0),
            ],
        ],
        b: [
            r(35.0 / 384.0),
            r(0.0),
            r(500.0 / 1113.0),
            r(125.0 / 192.0),
            r(-2187.0 / 6784.0),
            r(11.0 / 84.0),
            r(0.0),
        ],
        e: [
            r(71.0 / 57600.0),
            r(0.0),
            r(-71.0 / 16695.0),
            r(71.0 / 1920.0),
            r(-17253.0 / 339200.0),
            r(22.0 / 525.0),
            r(-1.0 / 40.0),
        ],
        c: [
            r(1.0 / 5.0),
            r(3.0 / 10.0),
            r(4.0 / 5.0),
            r(8.0 / 9.0),
            r(1.0),
            r(1.0),
        ],
        d: [
            r(-12715105075.0 / 11282082432.0),
            r(0.0),
            r(87487479700.0 / 32700410799.0),
            r(-10690763975.0 / 1880347072.0),
            r(701980252875.0 / 199316789632.0),
            r(-1453857185.0 / 822651844.0),
            r(69997945.0 / 29380423.0),
        ],
    }
}

/// One dense-output segment over `[ta, tb]`.
#[derive(Clone, Debug)]
struct Segment<R: Real> {
    ta: R,
    tb: R,
    rcont: [DVector<R>; 5],
}

impl<R: Real> Segment<R> {
    fn eval(&self, t: R) -> DVector<R> {
        if self.tb == self.ta {
            return self.rcont[0].clone();
        }
        let theta = (t - self.ta) / (self.tb - self.ta);
        let th1 = R::one() - theta;
        let [c1, c2, c3, c4, c5] = &self.rcont;
        c1 + (c2 + (c3 + (c4 + c5 * th1) * theta) * th1) * theta
    }
}

/// Continuous solution on `[t0, t1]` (monotone in either direction).
#[derive(Clone, Debug)]
pub struct DenseSolution<R: Real> {
    t0: R,
    t1: R,
    segs: Vec<Segment<R>>,
}

impl<R: Real> DenseSolution<R> {
    pub fn t0(&self) -> R {
        self.t0
    }

    pub fn t1(&self) -> R {
        self.t1
    }

    pub fn end(&self) -> DVector<R> {
        self.eval(self.t1)
    }

    /// Evaluates the interpolant; `t` is clamped to the covered span.
    pub fn eval(&self, t: R) -> DVector<R> {
        let fwd = self.t1 >= self.t0;
        let inside = |s: &Segment<R>| {
            if fwd {
                t <= s.tb
            } else {
                t >= s.tb
            }
        };
        for s in &self.segs {
            if inside(s) {
                return s.eval(t);
            }
        }
        let last = self.segs.last().expect("dense solution has segments");
        last.eval(self.t1)
    }
}

fn finite<R: Real>(v: &DVector<R>) -> bool {
    v.iter().all(|x| x.is_finite())
}

struct Stepper<'a, R: Real, F> {
    f: &'a F,
    tb: Tableau<R>,
    opts: OdeOptions<R>,
}

impl<'a, R: Real, F: Fn(R, &DVector<R>) -> DVector<R>> Stepper<'a, R, F> {
    fn new(f: &'a F, opts: OdeOptions<R>) -> Self {
        Self {
            f,
            tb: tableau(),
            opts,
        }
    }

    /// Integrates `[t0, t1]`, appending dense segments when `dense` is set.
    fn run(
        &self,
        t0: R,
        t1: R,
        y0: DVector<R>,
        dense: Option<&mut Vec<Segment<R>>>,
    ) -> Result<DVector<R>> {
        if t0 == t1 {
            return Ok(y0);
        }
        let mut segs = dense;
        let span = (t1 - t0).abs();
        let dir = if t1 > t0 { R::one() } else { -R::one() };
        let hmin = (span + R::one()) * R::of(1e-14);

        let mut t = t0;
        let mut y = y0;
        let mut k1 = (self.f)(t, &y);
        if !finite(&k1) {
            return Err(Error::NonFiniteState { t: t.to_double() });
        }

        // Crude but safe initial step guess.
        let fnorm = k1.amax();
        let mut h = if fnorm > R::of(1e-8) {
            let guess = R::of(0.01) * (R::one() + y.amax()) / fnorm;
            dir * guess.min(span / R::of(10.0))
        } else {
            dir * span / R::of(10.0)
        };

        let mut k = vec![DVector::zeros(y.len()); 7];
        for step in 0.. {
            if step >= self.opts.max_steps {
                return Err(Error::TooManySteps {
                    max_steps: self.opts.max_steps,
                });
            }
            if (t - t1) * dir >= R::zero() {
                break;
            }
            if h.abs() < hmin {
                return Err(Error::StepUnderflow {
                    t: t.to_double(),
                    point: y.iter().map(|v| v.to_double()).collect(),
                });
            }
            // Do not overshoot the endpoint.
            if (t + h - t1) * dir > R::zero() {
                h = t1 - t;
            }

            k[0] = k1.clone();
            let mut bad = false;
            for i in 0..6 {
                let mut yi = y.clone();
                for (j, kj) in k.iter().take(i + 1).enumerate() {
                    yi += kj * (self.tb.a[i][j] * h);
                }
                k[i + 1] = (self.f)(t + self.tb.c[i] * h, &yi);
                if !finite(&k[i + 1]) {
                    bad = true;
                    break;
                }
            }
            if bad {
                h = h / R::of(2.0);
                continue;
            }

            let mut y1 = y.clone();
            let mut err_v = DVector::zeros(y.len());
            for i in 0..7 {
                if self.tb.b[i] != R::zero() {
                    y1 += &k[i] * (self.tb.b[i] * h);
                }
                if self.tb.e[i] != R::zero() {
                    err_v += &k[i] * (self.tb.e[i] * h);
                }
            }
            if !finite(&y1) {
                h = h / R::of(2.0);
                continue;
            }

            let mut err = R::zero();
            for i in 0..y.len() {
                let sk = self.opts.atol + self.opts.rtol * y[i].abs().max(y1[i].abs());
                let q = err_v[i] / sk;
                err += q * q;
            }
            err = (err / R::of(y.len() as f64)).sqrt();

            if err <= R::one() {
                // FSAL: derivative at the accepted point.
                let k_end = (self.f)(t + h, &y1);
                if !finite(&k_end) {
                    h = h / R::of(2.0);
                    continue;
                }
                if let Some(segs) = segs.as_deref_mut() {
                    let ydiff = &y1 - &y;
                    let bspl = &k[0] * h - &ydiff;
                    let r4 = &ydiff - &k_end * h - &bspl;
                    let mut r5 = DVector::zeros(y.len());
                    for i in 0..7 {
                        if self.tb.d[i] != R::zero() {
                            // FSAL: the 7th stage is the derivative at y1.
                            let ki = if i == 6 { &k_end } else { &k[i] };
                            r5 += ki * (self.tb.d[i] * h);
                        }
                    }
                    segs.push(Segment {
                        ta: t,
                        tb: t + h,
                        rcont: [y.clone(), ydiff, bspl, r4, r5],
                    });
                }
                t += h;
                y = y1;
                k1 = k_end;
                let fac = (R::of(0.9) / err.powf(R::of(0.2))).clamp(R::of(0.2), R::of(5.0));
                h = h * fac;
            } else {
                let fac = (R::of(0.9) / err.powf(R::of(0.2))).clamp(R::of(0.2), R::one());
                h = h * fac;
            }
        }
        Ok(y)
    }
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1` (either direction).
pub fn solve<R: Real>(
    f: impl Fn(R, &DVector<R>) -> DVector<R>,
    t0: R,
    t1: R,
    y0: DVector<R>,
    opts: &OdeOptions<R>,
) -> Result<DVector<R>> {
    Stepper::new(&f, *opts).run(t0, t1, y0, None)
}

/// Like [`solve`] but restarts cleanly at interior breakpoints (kinks in `f`).
pub fn solve_piecewise<R: Real>(
    f: impl Fn(R, &DVector<R>) -> DVector<R>,
    t0: R,
    t1: R,
    breaks: &[R],
    y0: DVector<R>,
    opts: &OdeOptions<R>,
) -> Result<DVector<R>> {
    let stepper = Stepper::new(&f, *opts);
    let mut y = y0;
    let mut t = t0;
    for &b in ordered_breaks(t0, t1, breaks).iter() {
        y = stepper.run(t, b, y, None)?;
        t = b;
    }
    stepper.run(t, t1, y, None)
}

/// Integrates and keeps a continuous interpolant of the whole trajectory.
pub fn solve_dense<R: Real>(
    f: impl Fn(R, &DVector<R>) -> DVector<R>,
    t0: R,
    t1: R,
    breaks: &[R],
    y0: DVector<R>,
    opts: &OdeOptions<R>,
) -> Result<DenseSolution<R>> {
    let stepper = Stepper::new(&f, *opts);
    let mut segs = Vec::new();
    let mut y = y0;
    let mut t = t0;
    for &b in ordered_breaks(t0, t1, breaks).iter() {
        y = stepper.run(t, b, y, Some(&mut segs))?;
        t = b;
    }
    let y1 = stepper.run(t, t1, y, Some(&mut segs))?;
    if segs.is_empty() {
        // Degenerate span: a single constant segment.
        segs.push(Segment {
            ta: t0,
            tb: t1,
            rcont: [
                y1.clone(),
                DVector::zeros(y1.len()),
                DVector::zeros(y1.len()),
                DVector::zeros(y1.len()),
                DVector::zeros(y1.len()),
            ],
        });
    }
    Ok(DenseSolution { t0, t1, segs })
}

fn ordered_breaks<R: Real>(t0: R, t1: R, breaks: &[R]) -> Vec<R> {
    let fwd = t1 >= t0;
    let mut bs: Vec<R> = breaks
        .iter()
        .copied()
        .filter(|&b| {
            if fwd {
                b > t0 && b < t1
            } else {
                b < t0 && b > t1
            }
        })
        .collect();
    bs.sort_by(|a, b| {
        if fwd {
            a.partial_cmp(b).unwrap()
        } else {
            b.partial_cmp(a).unwrap()
        }
    });
    bs
}

/// Packs a point and a matrix into one flat state vector.
pub fn pack<R: Real>(p: &DVector<R>, m: &DMatrix<R>) -> DVector<R> {
    let d = p.len();
    let mut out = DVector::zeros(d + m.nrows() * m.ncols());
    out.rows_mut(0, d).copy_from(p);
    for (idx, v) in m.iter().enumerate() {
        out[d + idx] = *v;
    }
    out
}

/// Splits a flat state vector into a point and an `r x c` matrix.
pub fn unpack<R: Real>(state: &DVector<R>, d: usize, r: usize, c: usize) -> (DVector<R>, DMatrix<R>) {
    let p = state.rows(0, d).into_owned();
    let m = DMatrix::from_iterator(r, c, state.iter().skip(d).copied().take(r * c));
    (p, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![y[1], -y[0]])
    }

    #[test]
    fn harmonic_oscillator_period() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let y = solve(
            harmonic,
            0.0,
            2.0 * std::f64::consts::PI,
            y0.clone(),
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y - y0).amax() < 1e-9);
    }

    #[test]
    fn backward_integration_inverts() {
        let y0 = DVector::from_vec(vec![0.3, -0.2]);
        let opts = OdeOptions::default();
        let y1 = solve(harmonic, 0.0, 1.7, y0.clone(), &opts).unwrap();
        let back = solve(harmonic, 1.7, 0.0, y1, &opts).unwrap();
        assert!((back - y0).amax() < 1e-10);
    }

    #[test]
    fn dense_output_matches_pointwise() {
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let opts = OdeOptions::default();
        let dense = solve_dense(harmonic, 0.0, 3.0, &[], y0.clone(), &opts).unwrap();
        for i in 0..=30 {
            let t = 3.0 * (i as f64) / 30.0;
            let direct = solve(harmonic, 0.0, t, y0.clone(), &opts).unwrap();
            assert!(
                (dense.eval(t) - direct).amax() < 1e-8,
                "dense output drifted at t={t}"
            );
        }
    }

    #[test]
    fn stiff_blowup_reports_underflow() {
        // y' = y^2 blows up at t = 1; the solver must fail loudly.
        let f = |_t: f64, y: &DVector<f64>| DVector::from_vec(vec![y[0] * y[0]]);
        let res = solve(
            f,
            0.0,
            2.0,
            DVector::from_vec(vec![1.0]),
            &OdeOptions::default(),
        );
        assert!(res.is_err());
    }
}

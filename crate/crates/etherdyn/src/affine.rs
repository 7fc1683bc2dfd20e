//! Internal vector fields and inversive structures on manifolds with an
//! affine connection: the non-symplectic counterpart of the Ether machinery.
//!
//! An internal vector field is a 1-form with vector-field values whose
//! structure equation has zero curvature; its diagonal restriction is the
//! Cartan field of the connection. Trajectories of the field in the base
//! variable give inversions (not necessarily involutive); the involutive,
//! torsion-free case with diagonal value `2 id` is the fundamental field,
//! which reduces to the symplectic machinery when a symplectic form is
//! present.

use crate::ether;
use crate::fd::{self, FdSteps};
use crate::linalg::{self, Tensor3};
use crate::manifold::ManifoldModel;
use crate::num::Real;
use crate::ode::{self, DenseSolution, OdeOptions};
use crate::path::Path;
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

type MapFamily<R> = dyn Fn(&DVector<R>, &DVector<R>) -> DVector<R> + Send + Sync;
type FieldFamily<R> = dyn Fn(&DVector<R>, &DVector<R>) -> DMatrix<R> + Send + Sync;

/// Family of inversions `s_x` with isolated fixed points, together with the
/// closed form of the inverse family.
#[derive(Clone)]
pub struct InversiveStructure<R: Real> {
    model: ManifoldModel<R>,
    name: String,
    s: Arc<MapFamily<R>>,
    s_inv: Arc<MapFamily<R>>,
}

impl<R: Real> std::fmt::Debug for InversiveStructure<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InversiveStructure")
            .field("model", &self.model.name())
            .field("name", &self.name)
            .finish()
    }
}

impl<R: Real> InversiveStructure<R> {
    pub fn new(
        model: ManifoldModel<R>,
        name: impl Into<String>,
        s: impl Fn(&DVector<R>, &DVector<R>) -> DVector<R> + Send + Sync + 'static,
        s_inv: impl Fn(&DVector<R>, &DVector<R>) -> DVector<R> + Send + Sync + 'static,
    ) -> Self {
        Self {
            model,
            name: name.into(),
            s: Arc::new(s),
            s_inv: Arc::new(s_inv),
        }
    }

    /// Linear family `s_x(z) = x + M (z - x)` on a flat model. `M` must be
    /// invertible with no eigenvalue 1.
    pub fn linear(model: ManifoldModel<R>, m: DMatrix<R>) -> Result<Self> {
        let m_inv = linalg::invert(&m)?;
        let a = DMatrix::identity(m.nrows(), m.ncols()) - &m;
        linalg::invert(&a).map_err(|_| {
            Error::Invalid("linear family matrix must not have eigenvalue 1".into())
        })?;
        let mf = m.clone();
        Ok(Self::new(
            model,
            "linear",
            move |x, z| x + &mf * (z - x),
            move |x, z| x + &m_inv * (z - x),
        ))
    }

    /// The model's closed-form reflections as an involutive structure.
    pub fn reflective(model: ManifoldModel<R>) -> Result<Self> {
        if !model.has_closed_reflections() {
            return Err(Error::NoReflections(model.name().to_string()));
        }
        let m1 = model.clone();
        let m2 = model.clone();
        Ok(Self::new(
            model,
            "reflective",
            move |x, z| m1.reflection_closed(x, z).expect("reflections checked"),
            move |x, z| m2.reflection_closed(x, z).expect("reflections checked"),
        ))
    }

    pub fn model(&self) -> &ManifoldModel<R> {
        &self.model
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, x: &DVector<R>, z: &DVector<R>) -> DVector<R> {
        (self.s)(x, z)
    }

    pub fn apply_inverse(&self, x: &DVector<R>, z: &DVector<R>) -> DVector<R> {
        (self.s_inv)(x, z)
    }

    /// Max deviation of `s_x(s_x(z))` from `z` (zero for reflective
    /// structures).
    pub fn involutivity_defect(&self, x: &DVector<R>, z: &DVector<R>) -> R {
        (self.apply(x, &self.apply(x, z)) - z).amax()
    }

    /// The structure viewed the other way round: the family of inverses.
    pub fn inverted(&self) -> Self {
        Self {
            model: self.model.clone(),
            name: format!("{}-inverse", self.name),
            s: self.s_inv.clone(),
            s_inv: self.s.clone(),
        }
    }

    /// The internal vector field generated by the structure:
    /// `A_x(z) = (d_x s_x)(s_x^{-1}(z))`.
    pub fn field(&self) -> InternalVectorField<R> {
        let s = self.s.clone();
        let s_inv = self.s_inv.clone();
        InternalVectorField::new(
            self.model.clone(),
            format!("{}-field", self.name),
            move |x: &DVector<R>, z: &DVector<R>| {
                let w = s_inv(x, z);
                ether::base_derivative(s.as_ref(), x, &w)
            },
        )
    }

    /// Cartan field `a(x) = d s_x / d x` on the diagonal.
    pub fn cartan_at(&self, x: &DVector<R>) -> DMatrix<R> {
        ether::base_derivative(self.s.as_ref(), x, x)
    }

    /// Connection coefficients reconstructed from the inversions:
    /// `Gamma^l_{jk} = - d^2 s^l / (dz^m dx^r) [Ds_z^{-1}]^m_k [Ds_x^{-1}]^r_j`
    /// on the diagonal.
    pub fn gamma_at(&self, x: &DVector<R>) -> Result<Tensor3<R>> {
        let d = x.len();
        let mixed = ether::mixed_base_derivative(self.s.as_ref(), x, x);
        let steps = FdSteps::default();
        let dz = fd::jacobian(|z| (self.s)(x, z), x, &steps);
        let dx = self.cartan_at(x);
        let dz_inv = linalg::invert(&dz)?;
        let dx_inv = linalg::invert(&dx)?;
        Ok(Tensor3::from_fn(d, |l, j, k| {
            let mut v = R::zero();
            for m in 0..d {
                for r in 0..d {
                    // mixed[(l, r, m)] = d^2 s^l / dx^r dz^m
                    v -= mixed[(l, r, m)] * dz_inv[(m, k)] * dx_inv[(r, j)];
                }
            }
            v
        }))
    }

    /// Torsion of the reconstructed connection.
    pub fn torsion_at(&self, x: &DVector<R>) -> Result<Tensor3<R>> {
        let g = self.gamma_at(x)?;
        let d = x.len();
        Ok(Tensor3::from_fn(d, |k, s, l| g[(k, s, l)] - g[(k, l, s)]))
    }
}

/// A matrix-valued 1-form `A_x(z)`: column `j` is the vector in the tangent
/// space at `z` attached to the base direction `j`.
#[derive(Clone)]
pub struct InternalVectorField<R: Real> {
    model: ManifoldModel<R>,
    name: String,
    a: Arc<FieldFamily<R>>,
    ode: OdeOptions<R>,
}

impl<R: Real> std::fmt::Debug for InternalVectorField<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InternalVectorField")
            .field("model", &self.model.name())
            .field("name", &self.name)
            .finish()
    }
}

impl<R: Real> InternalVectorField<R> {
    pub fn new(
        model: ManifoldModel<R>,
        name: impl Into<String>,
        a: impl Fn(&DVector<R>, &DVector<R>) -> DMatrix<R> + Send + Sync + 'static,
    ) -> Self {
        Self {
            model,
            name: name.into(),
            a: Arc::new(a),
            ode: OdeOptions::default(),
        }
    }

    /// Constant field of the linear family: `A = I - M`.
    pub fn linear_family(model: ManifoldModel<R>, m: &DMatrix<R>) -> Self {
        let a = DMatrix::identity(m.nrows(), m.ncols()) - m;
        Self::new(model, "linear-field", move |_, _| a.clone())
    }

    /// Flat fundamental field `A = 2 id`.
    pub fn fundamental_flat(model: ManifoldModel<R>) -> Self {
        let d = model.dim();
        Self::new(model, "fundamental-flat", move |_, _| {
            DMatrix::identity(d, d) * R::of(2.0)
        })
    }

    /// The Hamiltonian internal field of a symplectic Ether field.
    pub fn from_ether(field: &crate::ether::EtherField<R>) -> Self {
        let f = field.clone();
        Self::new(
            field.model().clone(),
            "ether-field",
            move |x: &DVector<R>, z: &DVector<R>| {
                f.flow_matrix(x, z)
                    .map(|m| m.transpose())
                    .unwrap_or_else(|_| {
                        DMatrix::from_element(x.len(), x.len(), R::of(f64::NAN))
                    })
            },
        )
    }

    pub fn model(&self) -> &ManifoldModel<R> {
        &self.model
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &DVector<R>, z: &DVector<R>) -> DMatrix<R> {
        (self.a)(x, z)
    }

    pub fn cartan(&self, x: &DVector<R>) -> DMatrix<R> {
        self.eval(x, x)
    }

    /// Distance of the Cartan spectrum from the forbidden values 0 and 1.
    pub fn cartan_spectrum_margin(&self, x: &DVector<R>) -> R {
        let a = self.cartan(x);
        let eig = a.complex_eigenvalues();
        let mut margin = R::of(f64::INFINITY);
        for lam in eig.iter() {
            let d0 = (lam.re * lam.re + lam.im * lam.im).sqrt();
            let d1 = ((lam.re - R::one()) * (lam.re - R::one()) + lam.im * lam.im).sqrt();
            margin = margin.min(d0).min(d1);
        }
        margin
    }

    /// Inversion generated by the field: integrates `ds = A(s)` along the
    /// chart-straight base path from `z` to `x`.
    pub fn inversion(&self, x: &DVector<R>, z: &DVector<R>) -> Result<DVector<R>> {
        let path = Path::line(z.clone(), x.clone());
        let rhs = |t: R, s: &DVector<R>| {
            let (c, cdot) = path.at(t);
            self.eval(&c, s) * cdot
        };
        ode::solve(rhs, R::zero(), R::one(), z.clone(), &self.ode)
    }

    /// Full-weight translation along a base path.
    pub fn translation(&self, path: &Path<R>) -> AffineMap<R> {
        AffineMap {
            field: self.clone(),
            path: path.clone(),
            half: false,
        }
    }

    /// Half-weight path map along a base path.
    pub fn path_map(&self, path: &Path<R>) -> AffineMap<R> {
        AffineMap {
            field: self.clone(),
            path: path.clone(),
            half: true,
        }
    }

    /// Residual of the zero-curvature structure equation contracted on two
    /// base directions at `(x, z)`.
    pub fn zero_curvature_residual(
        &self,
        x: &DVector<R>,
        z: &DVector<R>,
        dir1: &DVector<R>,
        dir2: &DVector<R>,
    ) -> R {
        let d = x.len();
        let steps = FdSteps {
            h1: R::of(1e-3),
            ..FdSteps::default()
        };
        // base-slot exterior derivative
        let da: Vec<DMatrix<R>> = (0..d)
            .map(|j| {
                fd::deriv(
                    |t| {
                        let mut xs = x.clone();
                        xs[j] += t;
                        self.eval(&xs, z)
                    },
                    R::zero(),
                    steps.h1,
                    steps.richardson,
                )
            })
            .collect();
        // z-derivatives for the commutator
        let steps_z = FdSteps {
            h1: R::of(1e-4),
            ..FdSteps::default()
        };
        let dza: Vec<DMatrix<R>> = (0..d)
            .map(|m| {
                fd::deriv(
                    |t| {
                        let mut zs = z.clone();
                        zs[m] += t;
                        self.eval(x, &zs)
                    },
                    R::zero(),
                    steps_z.h1,
                    steps_z.richardson,
                )
            })
            .collect();
        let a0 = self.eval(x, z);
        let mut worst = R::zero();
        for j in 0..d {
            for k in 0..d {
                for s in 0..d {
                    // commutator [A_j, A_k]^s = (D A_k) A_j - (D A_j) A_k
                    let mut comm = R::zero();
                    for m in 0..d {
                        comm += dza[m][(s, k)] * a0[(m, j)] - dza[m][(s, j)] * a0[(m, k)];
                    }
                    let v = (da[j][(s, k)] - da[k][(s, j)] + comm) * dir1[j] * dir2[k];
                    if v.abs() > worst {
                        worst = v.abs();
                    }
                }
            }
        }
        worst
    }

    /// Residual of the diagonal boundary condition: the adjoint covariant
    /// `z`-derivative of the field on the diagonal, `D_k A^s_j +
    /// Gamma^s_{kl} A^l_j` at `z = x`.
    pub fn boundary_condition_residual(&self, x: &DVector<R>, gamma: &Tensor3<R>) -> R {
        let d = x.len();
        let steps = FdSteps::default();
        let a0 = self.eval(x, x);
        let mut worst = R::zero();
        for k in 0..d {
            let dk = fd::deriv(
                |t| {
                    let mut zs = x.clone();
                    zs[k] += t;
                    self.eval(x, &zs)
                },
                R::zero(),
                steps.h1,
                steps.richardson,
            );
            for s in 0..d {
                for j in 0..d {
                    let mut v = dk[(s, j)];
                    for l in 0..d {
                        v += gamma[(s, k, l)] * a0[(l, j)];
                    }
                    if v.abs() > worst {
                        worst = v.abs();
                    }
                }
            }
        }
        worst
    }

    /// Residual of the skew-symmetry law `A(s_x(z)) = -Ds_x(z) A(z)` that
    /// characterizes involutive inversions.
    pub fn skew_symmetry_residual(
        &self,
        s: &InversiveStructure<R>,
        x: &DVector<R>,
        z: &DVector<R>,
    ) -> R {
        let steps = FdSteps::default();
        let sz = s.apply(x, z);
        let ds = fd::jacobian(|zz| s.apply(x, zz), z, &steps);
        let lhs = self.eval(x, &sz);
        let rhs = ds * self.eval(x, z);
        linalg::norm_max(&(lhs + rhs))
    }
}

/// An internal field certified fundamental: involutive skew-symmetry and
/// diagonal value twice the identity, with a torsion-free induced
/// connection. Construction validates the laws on sample pairs.
#[derive(Clone, Debug)]
pub struct FundamentalField<R: Real> {
    field: InternalVectorField<R>,
}

impl<R: Real> FundamentalField<R> {
    /// Wraps `field` after checking the fundamental laws against its
    /// inversive structure at the given sample pairs.
    pub fn certify(
        field: InternalVectorField<R>,
        structure: &InversiveStructure<R>,
        samples: &[(DVector<R>, DVector<R>)],
        tol: R,
    ) -> Result<Self> {
        let d = field.model().dim();
        let two_id = DMatrix::<R>::identity(d, d) * R::of(2.0);
        for (x, z) in samples {
            let diag = linalg::norm_max(&(field.cartan(x) - &two_id));
            if diag > tol {
                return Err(Error::Invalid(format!(
                    "diagonal value is not twice the identity (residual {:.3e})",
                    diag.to_double()
                )));
            }
            let skew = field.skew_symmetry_residual(structure, x, z);
            if skew > tol {
                return Err(Error::Invalid(format!(
                    "skew-symmetry law fails (residual {:.3e})",
                    skew.to_double()
                )));
            }
            let torsion = structure.torsion_at(x)?;
            if torsion.norm_max() > tol {
                return Err(Error::Invalid(format!(
                    "induced connection carries torsion ({:.3e})",
                    torsion.norm_max().to_double()
                )));
            }
        }
        Ok(Self { field })
    }

    pub fn field(&self) -> &InternalVectorField<R> {
        &self.field
    }
}

impl<R: Real> std::ops::Deref for FundamentalField<R> {
    type Target = InternalVectorField<R>;
    fn deref(&self) -> &Self::Target {
        &self.field
    }
}

/// Conjugate internal field `A^- = -(Ds^+)^{-1} A^+(s^+)` of an inversive
/// structure: the field whose inversions are the inverse family.
pub fn conjugate_field<R: Real>(
    structure: &InversiveStructure<R>,
    aplus: &InternalVectorField<R>,
) -> InternalVectorField<R> {
    let s = structure.clone();
    let ap = aplus.clone();
    InternalVectorField::new(
        structure.model().clone(),
        format!("{}-conjugate", aplus.name()),
        move |x: &DVector<R>, z: &DVector<R>| {
            let steps = FdSteps::default();
            let ds = fd::jacobian(|zz| s.apply(x, zz), z, &steps);
            match linalg::invert(&ds) {
                Ok(inv) => -inv * ap.eval(x, &s.apply(x, z)),
                Err(_) => DMatrix::from_element(x.len(), x.len(), R::of(f64::NAN)),
            }
        },
    )
}

/// Diagonal relation between the two Cartan fields of an internal pair:
/// `a^- = a^+ (a^+ - I)^{-1}`.
pub fn conjugate_cartan<R: Real>(aplus: &DMatrix<R>) -> Result<DMatrix<R>> {
    let d = aplus.nrows();
    let shifted = aplus - DMatrix::identity(d, d);
    Ok(aplus * linalg::invert(&shifted)?)
}

/// A diffeomorphism from integrating an internal field along a base path.
#[derive(Clone, Debug)]
pub struct AffineMap<R: Real> {
    field: InternalVectorField<R>,
    path: Path<R>,
    half: bool,
}

impl<R: Real> AffineMap<R> {
    pub fn path(&self) -> &Path<R> {
        &self.path
    }

    fn factor(&self) -> R {
        if self.half {
            R::of(0.5)
        } else {
            R::one()
        }
    }

    pub fn evaluate(&self, z: &DVector<R>) -> Result<DVector<R>> {
        let fac = self.factor();
        let rhs = |t: R, s: &DVector<R>| {
            let (y, ydot) = self.path.at(t);
            self.field.eval(&y, s) * ydot * fac
        };
        ode::solve_piecewise(
            rhs,
            R::zero(),
            R::one(),
            self.path.breakpoints(),
            z.clone(),
            &self.field.ode,
        )
    }

    pub fn inverse(&self, z: &DVector<R>) -> Result<DVector<R>> {
        AffineMap {
            field: self.field.clone(),
            path: self.path.reversed(),
            half: self.half,
        }
        .evaluate(z)
    }

    /// Image and differential by the joint tangent system (field derivative
    /// in `z` by finite differences).
    pub fn evaluate_with_differential(&self, z: &DVector<R>) -> Result<(DVector<R>, DMatrix<R>)> {
        let d = z.len();
        let fac = self.factor();
        let h = R::of(1e-5);
        let rhs = |t: R, state: &DVector<R>| {
            let (y, ydot) = self.path.at(t);
            let (s, j) = ode::unpack(state, d, d, d);
            let a = self.field.eval(&y, &s);
            let ds = (&a * &ydot) * fac;
            let mut lin = DMatrix::zeros(d, d);
            for c in 0..d {
                let mut sp = s.clone();
                sp[c] += h;
                let mut sm = s.clone();
                sm[c] -= h;
                let col = (self.field.eval(&y, &sp) - self.field.eval(&y, &sm)) * &ydot
                    * (fac / (R::of(2.0) * h));
                lin.set_column(c, &col);
            }
            ode::pack(&ds, &(lin * j))
        };
        let state0 = ode::pack(z, &DMatrix::identity(d, d));
        let state = ode::solve_piecewise(
            rhs,
            R::zero(),
            R::one(),
            self.path.breakpoints(),
            state0,
            &self.field.ode,
        )?;
        let (s, j) = ode::unpack(&state, d, d, d);
        Ok((s, j))
    }
}

/// Internal translation along a path: full-weight integration of the field.
pub fn internal_translation<R: Real>(
    field: &InternalVectorField<R>,
    path: &Path<R>,
) -> AffineMap<R> {
    field.translation(path)
}

/// Internal geodesics of an internal pair: integrates the half-weight field
/// with frozen base and constant velocity.
pub fn internal_geodesic<R: Real>(
    field: &InternalVectorField<R>,
    x: &DVector<R>,
    v: &DVector<R>,
    t: R,
) -> Result<DVector<R>> {
    let rhs = |_t: R, e: &DVector<R>| field.eval(x, e) * v * R::of(0.5);
    ode::solve(rhs, R::zero(), t, x.clone(), &field.ode)
}

/// Residual of the geodesic inversion law:
/// `s^+_x(Exp^-_x(v)) = Exp^+_x(-v)`.
pub fn geodesic_inversion_residual<R: Real>(
    structure: &InversiveStructure<R>,
    aplus: &InternalVectorField<R>,
    aminus: &InternalVectorField<R>,
    x: &DVector<R>,
    v: &DVector<R>,
) -> Result<R> {
    let eminus = internal_geodesic(aminus, x, v, R::one())?;
    let eplus = internal_geodesic(aplus, x, &(-v), R::one())?;
    Ok((structure.apply(x, &eminus) - eplus).amax())
}

/// Residual of the first structure equation for the Cartan field: the
/// adjoint covariant exterior derivative plus the torsion pairing of `a`
/// with itself, contracted on `(u, v)`.
pub fn structural_equation_residual<R: Real>(
    field: &InternalVectorField<R>,
    gamma: &Tensor3<R>,
    torsion: &Tensor3<R>,
    x: &DVector<R>,
    u: &DVector<R>,
    v: &DVector<R>,
) -> R {
    let d = x.len();
    let steps = FdSteps::default();
    let a0 = field.cartan(x);
    // x-derivatives of the Cartan field
    let da: Vec<DMatrix<R>> = (0..d)
        .map(|k| fd::partial(|y| field.cartan(y), x, k, &steps))
        .collect();
    // adjoint covariant derivative (nabla'_k a)^s_j = D_k a^s_j + G^s_{kl} a^l_j
    let nabla = |k: usize, s: usize, j: usize| -> R {
        let mut val = da[k][(s, j)];
        for l in 0..d {
            val += gamma[(s, k, l)] * a0[(l, j)];
        }
        val
    };
    let au = &a0 * u;
    let av = &a0 * v;
    let mut worst = R::zero();
    for s in 0..d {
        let mut delta = R::zero();
        for k in 0..d {
            for j in 0..d {
                delta += u[k] * v[j] * (nabla(k, s, j) - nabla(j, s, k));
            }
        }
        let mut pair = R::zero();
        for p in 0..d {
            for q in 0..d {
                pair += au[p] * torsion[(s, p, q)] * av[q] - av[p] * torsion[(s, p, q)] * au[q];
            }
        }
        let res = delta + pair / R::of(2.0);
        if res.abs() > worst {
            worst = res.abs();
        }
    }
    worst
}

/// Internal Hamiltonian of a symplectic inversive structure, by the line
/// integral of `A^j_k omega_{jm} dz^m` from `x` to `z`.
pub fn internal_hamiltonian<R: Real>(
    field: &InternalVectorField<R>,
    x: &DVector<R>,
    z: &DVector<R>,
    nodes: usize,
    panels: usize,
) -> DVector<R> {
    let model = field.model().clone();
    let d = model.dim();
    let gl = GaussLegendre::new(nodes);
    let path = Path::line(x.clone(), z.clone());
    gl.integrate_vec(
        |t| {
            let (p, pdot) = path.at(t);
            let a = field.eval(x, &p);
            let omega = model.omega(&p);
            // value_k = A^j_k omega_{jm} pdot^m
            (a.transpose() * omega) * pdot
        },
        R::zero(),
        R::one(),
        panels,
        d,
    )
}

/// Residuals of the symplectic-compatibility laws of an inversive structure.
#[derive(Clone, Debug)]
pub struct SymplecticInversiveReport<R> {
    /// Covariant derivative of the symplectic form under the reconstructed
    /// connection.
    pub nabla_omega: R,
    /// Cyclic sum of the lowered torsion.
    pub cyclic_torsion: R,
    /// Pairing of the two internal Hamiltonians through the inversion.
    pub hamiltonian_inversion: R,
    /// Diagonal second-derivative law for the internal Hamiltonian.
    pub diagonal_second_derivative: R,
}

pub fn symplectic_inversive_checks<R: Real>(
    structure: &InversiveStructure<R>,
    samples: &[(DVector<R>, DVector<R>)],
) -> Result<SymplecticInversiveReport<R>> {
    let model = structure.model().clone();
    let d = model.dim();
    let steps = FdSteps::default();
    let aplus = structure.field();
    let aminus = conjugate_field(structure, &aplus);

    let mut nabla_omega = R::zero();
    let mut cyclic_torsion = R::zero();
    let mut hamiltonian_inversion = R::zero();
    let mut diagonal_second_derivative = R::zero();

    for (x, z) in samples {
        let gamma = structure.gamma_at(x)?;
        let torsion = structure.torsion_at(x)?;
        let omega = model.omega(x);
        let psi = model.poisson_tensor(x)?;

        // nabla omega under the reconstructed connection
        for c in 0..d {
            let domega = fd::partial(|y| model.omega(y), x, c, &steps);
            for i in 0..d {
                for j in 0..d {
                    let mut v = domega[(i, j)];
                    for m in 0..d {
                        v -= gamma[(m, c, i)] * omega[(m, j)] + gamma[(m, c, j)] * omega[(i, m)];
                    }
                    nabla_omega = nabla_omega.max(v.abs());
                }
            }
        }

        // cyclic torsion sum
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut v = R::zero();
                    for s in 0..d {
                        v += omega[(j, s)] * torsion[(s, k, l)]
                            + omega[(k, s)] * torsion[(s, l, j)]
                            + omega[(l, s)] * torsion[(s, j, k)];
                    }
                    cyclic_torsion = cyclic_torsion.max(v.abs());
                }
            }
        }

        // H^+(s^+(z)) = -H^-(z)
        let hplus = internal_hamiltonian(&aplus, x, &structure.apply(x, z), 16, 4);
        let hminus = internal_hamiltonian(&aminus, x, z, 16, 4);
        hamiltonian_inversion = hamiltonian_inversion.max((hplus + hminus).amax());

        // diagonal second derivative law:
        // nabla_l nabla_m H_k = omega_{ms} T^s_{lr} psi^{rj} nabla_j H_k
        let hfun = |k: usize, zz: &DVector<R>| internal_hamiltonian(&aplus, x, zz, 16, 4)[k];
        for k in 0..d {
            let grad = fd::gradient(|zz| hfun(k, zz), x, &steps);
            let hess = fd::hessian(|zz| hfun(k, zz), x, &steps);
            for l in 0..d {
                for m in 0..d {
                    let mut lhs = hess[(l, m)];
                    for a in 0..d {
                        lhs -= gamma[(a, l, m)] * grad[a];
                    }
                    let mut rhs = R::zero();
                    for s in 0..d {
                        for r in 0..d {
                            for j in 0..d {
                                rhs += omega[(m, s)] * torsion[(s, l, r)] * psi[(r, j)] * grad[j];
                            }
                        }
                    }
                    diagonal_second_derivative =
                        diagonal_second_derivative.max((lhs - rhs).abs());
                }
            }
        }
    }

    Ok(SymplecticInversiveReport {
        nabla_omega,
        cyclic_torsion,
        hamiltonian_inversion,
        diagonal_second_derivative,
    })
}

type VectorFieldFn<R> = dyn Fn(&DVector<R>) -> DVector<R> + Send + Sync;

/// Translocation of a first-order system `dX = u(X)` to an anchor point,
/// driven by a fundamental internal field.
pub struct AffineTranslocation<R: Real> {
    field: InternalVectorField<R>,
    u: Arc<VectorFieldFn<R>>,
    anchor: DVector<R>,
    horizon: R,
    traj: DenseSolution<R>,
    ode: OdeOptions<R>,
}

impl<R: Real> AffineTranslocation<R> {
    pub fn new(
        field: &InternalVectorField<R>,
        u: impl Fn(&DVector<R>) -> DVector<R> + Send + Sync + 'static,
        y: &DVector<R>,
        horizon: R,
    ) -> Result<Self> {
        let u: Arc<VectorFieldFn<R>> = Arc::new(u);
        let uu = u.clone();
        let opts = OdeOptions::default();
        let traj = ode::solve_dense(
            move |_t, x: &DVector<R>| uu(x),
            R::zero(),
            horizon,
            &[],
            y.clone(),
            &opts,
        )?;
        Ok(Self {
            field: field.clone(),
            u,
            anchor: y.clone(),
            horizon,
            traj,
            ode: opts,
        })
    }

    pub fn anchor(&self) -> &DVector<R> {
        &self.anchor
    }

    pub fn horizon(&self) -> R {
        self.horizon
    }

    pub fn trajectory_point(&self, t: R) -> DVector<R> {
        self.traj.eval(t)
    }

    /// Flow of the original system.
    pub fn base_flow(&self, t: R, x: &DVector<R>) -> Result<DVector<R>> {
        let u = self.u.clone();
        ode::solve(
            move |_t, p: &DVector<R>| u(p),
            R::zero(),
            t,
            x.clone(),
            &self.ode,
        )
    }

    /// Differential of the base flow at the anchor.
    pub fn base_flow_differential(&self, t: R) -> Result<DMatrix<R>> {
        let d = self.anchor.len();
        let steps = FdSteps::default();
        let u = self.u.clone();
        let rhs = move |_t: R, state: &DVector<R>| {
            let (x, j) = ode::unpack(state, d, d, d);
            let du = fd::jacobian(|p| u(p), &x, &steps);
            ode::pack(&u(&x), &(du * j))
        };
        let state0 = ode::pack(&self.anchor, &DMatrix::identity(d, d));
        let state = ode::solve(rhs, R::zero(), t, state0, &self.ode)?;
        Ok(ode::unpack(&state, d, d, d).1)
    }

    fn segment_path(&self, t: R) -> Path<R> {
        let traj = self.traj.clone();
        let u = self.u.clone();
        Path::from_fn(
            move |s| {
                let p = traj.eval(s * t);
                let v = u(&p) * t;
                (p, v)
            },
            vec![],
        )
    }

    pub fn segment_map(&self, t: R) -> AffineMap<R> {
        self.field.path_map(&self.segment_path(t))
    }

    /// The translocated vector field `v^t_y(z)`: pull the anchored
    /// difference of `u` and the half-weight drift back through the segment
    /// map.
    pub fn translocated_field(&self, t: R, z: &DVector<R>) -> Result<DVector<R>> {
        let gamma_map = self.segment_map(t);
        let (gz, dg) = gamma_map.evaluate_with_differential(z)?;
        let w = self.trajectory_point(t);
        let xdot = (self.u)(&w);
        let drift = self.field.eval(&w, &gz) * &xdot / R::of(2.0);
        let rhs = (self.u)(&gz) - drift;
        linalg::solve(&dg, &rhs)
    }

    /// Flow of the translocated system.
    pub fn flow(&self, t: R, x: &DVector<R>) -> Result<DVector<R>> {
        let d = x.len();
        let rhs = |tau: R, z: &DVector<R>| match self.translocated_field(tau, z) {
            Ok(v) => v,
            Err(_) => DVector::from_element(d, R::of(f64::NAN)),
        };
        ode::solve(rhs, R::zero(), t, x.clone(), &self.ode)
    }

    /// `|| X^t(x) - [X^t(y)](Z^t_y(x)) ||`.
    pub fn factorization_residual(&self, t: R, x: &DVector<R>) -> Result<R> {
        let direct = self.base_flow(t, x)?;
        let via = self.segment_map(t).evaluate(&self.flow(t, x)?)?;
        Ok((direct - via).amax())
    }

    /// Covariant derivative of the translocated field at the anchor,
    /// `(nabla v)[(k, j)] = D_j v^k + Gamma^k_{sj} v^s`, with the covariant
    /// correction vanishing because the anchor is an equilibrium.
    pub fn anchored_linearization(&self, t: R) -> Result<DMatrix<R>> {
        let steps = FdSteps {
            h1: R::of(1e-4),
            ..FdSteps::default()
        };
        let mut err = None;
        let jac = fd::jacobian(
            |z| match self.translocated_field(t, z) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    DVector::zeros(self.anchor.len())
                }
            },
            &self.anchor,
            &steps,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(jac),
        }
    }

    /// The expected anchored linearization `V^{-1} (nabla u)(X^t(y)) V`.
    pub fn transported_linearization(&self, t: R, gamma_at: &dyn Fn(&DVector<R>) -> Tensor3<R>) -> Result<DMatrix<R>> {
        let d = self.anchor.len();
        let path = self.segment_path(t);
        // transport under the provided connection
        let rhs = |s: R, state: &DVector<R>| {
            let (p, pdot) = path.at(s);
            let g = gamma_at(&p);
            let v = DMatrix::from_iterator(d, d, state.iter().copied());
            let mut dv = DMatrix::zeros(d, d);
            for k in 0..d {
                for mcol in 0..d {
                    let mut acc = R::zero();
                    for j in 0..d {
                        for l in 0..d {
                            acc -= pdot[j] * g[(k, j, l)] * v[(l, mcol)];
                        }
                    }
                    dv[(k, mcol)] = acc;
                }
            }
            DVector::from_iterator(d * d, dv.iter().copied())
        };
        let id = DMatrix::identity(d, d);
        let state = ode::solve(
            rhs,
            R::zero(),
            R::one(),
            DVector::from_iterator(d * d, id.iter().copied()),
            &self.ode,
        )?;
        let v = DMatrix::from_iterator(d, d, state.iter().copied());
        let w = self.trajectory_point(t);
        let nabla_u = covariant_field_derivative(&(self.u), &gamma_at(&w), &w);
        Ok(linalg::invert(&v)? * nabla_u * v)
    }

    /// Consistency residual `nabla_u (nabla u)` along the trajectory.
    pub fn consistency_residual(
        &self,
        t: R,
        samples: usize,
        gamma_at: &dyn Fn(&DVector<R>) -> Tensor3<R>,
    ) -> R {
        let d = self.anchor.len();
        let steps = FdSteps {
            h1: R::of(1e-3),
            ..FdSteps::default()
        };
        let mut worst = R::zero();
        for i in 0..=samples {
            let tau = t * R::of(i as f64) / R::of(samples.max(1) as f64);
            let x = self.trajectory_point(tau);
            let uval = (self.u)(&x);
            let gamma = gamma_at(&x);
            let s0 = covariant_field_derivative(&(self.u), &gamma, &x);
            let ds: Vec<DMatrix<R>> = (0..d)
                .map(|m| {
                    fd::partial(
                        |p| covariant_field_derivative(&(self.u), &gamma_at(p), p),
                        &x,
                        m,
                        &steps,
                    )
                })
                .collect();
            // (nabla_u S)^k_j = u^m D_m S^k_j + u^m G^k_{ms} S^s_j - u^m G^s_{mj} S^k_s
            for k in 0..d {
                for j in 0..d {
                    let mut v = R::zero();
                    for m in 0..d {
                        v += uval[m] * ds[m][(k, j)];
                        for s in 0..d {
                            v += uval[m]
                                * (gamma[(k, m, s)] * s0[(s, j)] - gamma[(s, m, j)] * s0[(k, s)]);
                        }
                    }
                    if v.abs() > worst {
                        worst = v.abs();
                    }
                }
            }
        }
        worst
    }

    /// Closed-form differential `V exp(t nabla u(y))` for auto-linear fields.
    pub fn autolinear_differential(
        &self,
        t: R,
        gamma_at: &dyn Fn(&DVector<R>) -> Tensor3<R>,
    ) -> Result<DMatrix<R>> {
        let d = self.anchor.len();
        let path = self.segment_path(t);
        let rhs = |s: R, state: &DVector<R>| {
            let (p, pdot) = path.at(s);
            let g = gamma_at(&p);
            let v = DMatrix::from_iterator(d, d, state.iter().copied());
            let mut dv = DMatrix::zeros(d, d);
            for k in 0..d {
                for mcol in 0..d {
                    let mut acc = R::zero();
                    for j in 0..d {
                        for l in 0..d {
                            acc -= pdot[j] * g[(k, j, l)] * v[(l, mcol)];
                        }
                    }
                    dv[(k, mcol)] = acc;
                }
            }
            DVector::from_iterator(d * d, dv.iter().copied())
        };
        let id = DMatrix::identity(d, d);
        let state = ode::solve(
            rhs,
            R::zero(),
            R::one(),
            DVector::from_iterator(d * d, id.iter().copied()),
            &self.ode,
        )?;
        let v = DMatrix::from_iterator(d, d, state.iter().copied());
        let nabla_u_y = covariant_field_derivative(&(self.u), &gamma_at(&self.anchor), &self.anchor);
        Ok(v * linalg::expm(&(nabla_u_y * t)))
    }
}

/// Covariant derivative of a vector field:
/// `(nabla u)[(k, j)] = D_j u^k + Gamma^k_{sj} u^s`.
pub fn covariant_field_derivative<R: Real>(
    u: &Arc<VectorFieldFn<R>>,
    gamma: &Tensor3<R>,
    x: &DVector<R>,
) -> DMatrix<R> {
    let d = x.len();
    let steps = FdSteps::default();
    let du = fd::jacobian(|p| u(p), x, &steps);
    let uval = u(x);
    DMatrix::from_fn(d, d, |k, j| {
        let mut v = du[(k, j)];
        for s in 0..d {
            v += gamma[(k, s, j)] * uval[s];
        }
        v
    })
}

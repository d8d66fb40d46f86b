//! Oseen problem instances: coefficients, analytic fields and exact solutions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::{Error, Point, Result};

/// Value, Jacobian and second partials of a planar vector field at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VectorJet {
    pub value: [f64; 2],
    /// `grad[c][a] = ∂_a v_c`.
    pub grad: [[f64; 2]; 2],
    /// `hess[c] = [∂xx v_c, ∂xy v_c, ∂yy v_c]`.
    pub hess: [[f64; 3]; 2],
}

impl VectorJet {
    pub fn divergence(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }

    pub fn laplacian(&self) -> [f64; 2] {
        [self.hess[0][0] + self.hess[0][2], self.hess[1][0] + self.hess[1][2]]
    }

    pub fn norm(&self) -> f64 {
        self.value[0].hypot(self.value[1])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: [f64; 2],
}

type VectorFn = dyn Fn(Point) -> VectorJet + Send + Sync;
type ScalarFn = dyn Fn(Point) -> ScalarJet + Send + Sync;

/// Vector field with derivatives up to order 2.
#[derive(Clone)]
pub struct VectorField(Arc<VectorFn>);

impl VectorField {
    pub fn new(f: impl Fn(Point) -> VectorJet + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(v: [f64; 2]) -> Self {
        Self::new(move |_| VectorJet { value: v, ..Default::default() })
    }

    pub fn zero() -> Self {
        Self::constant([0.0, 0.0])
    }

    pub fn jet(&self, x: Point) -> VectorJet {
        (self.0)(x)
    }

    pub fn value(&self, x: Point) -> [f64; 2] {
        self.jet(x).value
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorField")
    }
}

#[derive(Clone)]
pub struct ScalarField(Arc<ScalarFn>);

impl ScalarField {
    pub fn new(f: impl Fn(Point) -> ScalarJet + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn zero() -> Self {
        Self::new(|_| ScalarJet::default())
    }

    pub fn jet(&self, x: Point) -> ScalarJet {
        (self.0)(x)
    }

    pub fn value(&self, x: Point) -> f64 {
        self.jet(x).value
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField")
    }
}

/// `-μΔu + (β·∇)u + σu + ∇p = f`, `div u = 0` on the unit square with `u = exact_u` on the boundary.
#[derive(Debug, Clone)]
pub struct ProblemCase {
    pub name: String,
    pub mu: f64,
    pub sigma: f64,
    pub beta: VectorField,
    pub f: VectorField,
    pub exact_u: VectorField,
    pub exact_p: ScalarField,
}

impl ProblemCase {
    pub fn new(
        name: impl Into<String>,
        mu: f64,
        sigma: f64,
        beta: VectorField,
        f: VectorField,
        exact_u: VectorField,
        exact_p: ScalarField,
    ) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {mu}")));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("reaction must be nonnegative, got {sigma}")));
        }
        Ok(Self { name: name.into(), mu, sigma, beta, f, exact_u, exact_p })
    }

    /// Boundary data: the trace of the exact velocity.
    pub fn dirichlet(&self, x: Point) -> [f64; 2] {
        self.exact_u.value(x)
    }

    /// `σu − μΔu + (β·∇)u + ∇p` evaluated from the exact fields.
    pub fn residual_forcing(&self, x: Point) -> [f64; 2] {
        oseen_operator(self.mu, self.sigma, &self.beta.jet(x), &self.exact_u.jet(x), &self.exact_p.jet(x))
    }

    /// Looks up a shipped case by CLI name.
    pub fn by_name(name: &str, mu: f64, sigma: f64) -> Result<Self> {
        match name {
            "lattice" => case_lattice_flow(mu, sigma),
            "layer" if sigma != 0.0 => Err(Error::Config("the layer case has no reaction term; sigma must be 0".into())),
            "layer" => case_boundary_layer(mu),
            "patch" => case_polynomial_patch(mu, sigma),
            other => Err(Error::Config(format!("unknown case '{other}' (expected lattice, layer or patch)"))),
        }
    }
}

fn oseen_operator(mu: f64, sigma: f64, beta: &VectorJet, u: &VectorJet, p: &ScalarJet) -> [f64; 2] {
    let lap = u.laplacian();
    std::array::from_fn(|c| {
        let conv = beta.value[0] * u.grad[c][0] + beta.value[1] * u.grad[c][1];
        sigma * u.value[c] - mu * lap[c] + conv + p.grad[c]
    })
}

fn add_constant(mut j: VectorJet, c: [f64; 2]) -> VectorJet {
    j.value[0] += c[0];
    j.value[1] += c[1];
    j
}

fn lattice_u(x: Point) -> VectorJet {
    let w = 2.0 * PI;
    let (sx, cx) = (w * x[0]).sin_cos();
    let (sy, cy) = (w * x[1]).sin_cos();
    let w2 = w * w;
    VectorJet {
        value: [sx * sy, cx * cy],
        grad: [[w * cx * sy, w * sx * cy], [-w * sx * cy, -w * cx * sy]],
        hess: [
            [-w2 * sx * sy, w2 * cx * cy, -w2 * sx * sy],
            [-w2 * cx * cy, w2 * sx * sy, -w2 * cx * cy],
        ],
    }
}

/// Planar lattice flow `u = (sin2πx sin2πy, cos2πx cos2πy)` convected by `β = u + (0,1)`,
/// with `p = (cos4πx − cos4πy)/4`.
///
/// `(u·∇)u = −∇p` here, so the forcing reduces to `σu − μΔu + ∂_y u`.
pub fn case_lattice_flow(mu: f64, sigma: f64) -> Result<ProblemCase> {
    let exact_u = VectorField::new(lattice_u);
    let beta = VectorField::new(|x| add_constant(lattice_u(x), [0.0, 1.0]));
    let exact_p = ScalarField::new(|x| {
        let w = 4.0 * PI;
        ScalarJet {
            value: 0.25 * ((w * x[0]).cos() - (w * x[1]).cos()),
            grad: [-PI * (w * x[0]).sin(), PI * (w * x[1]).sin()],
        }
    });
    let f = VectorField::new(move |x| {
        let w = 2.0 * PI;
        let (sx, cx) = (w * x[0]).sin_cos();
        let (sy, cy) = (w * x[1]).sin_cos();
        let u = [sx * sy, cx * cy];
        let lap = [-2.0 * w * w * u[0], -2.0 * w * w * u[1]];
        let value = [
            sigma * u[0] - mu * lap[0] + w * sx * cy,
            sigma * u[1] - mu * lap[1] - w * cx * sy,
        ];
        VectorJet { value, ..Default::default() }
    });
    ProblemCase::new("lattice", mu, sigma, beta, f, exact_u, exact_p)
}

/// Boundary layer at `x = 1`: `u = (0, x − (e^{(x−1)/μ} − e^{−1/μ}) / (1 − e^{−1/μ}))`,
/// `p = 1/2 − y`, `β = (1,0)`, `σ = 0`, `f = 0`.
pub fn case_boundary_layer(mu: f64) -> Result<ProblemCase> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {mu}")));
    }
    let tail = (-1.0 / mu).exp();
    let denom = 1.0 - tail;
    let exact_u = VectorField::new(move |x| {
        // exp((x-1)/μ) underflows to 0 away from x = 1 for small μ
        let e = ((x[0] - 1.0) / mu).exp();
        let v = x[0] - (e - tail) / denom;
        let dv = 1.0 - e / (mu * denom);
        let ddv = -e / (mu * mu * denom);
        VectorJet {
            value: [0.0, v],
            grad: [[0.0, 0.0], [dv, 0.0]],
            hess: [[0.0; 3], [ddv, 0.0, 0.0]],
        }
    });
    let exact_p = ScalarField::new(|x| ScalarJet { value: 0.5 - x[1], grad: [0.0, -1.0] });
    ProblemCase::new(
        "layer",
        mu,
        0.0,
        VectorField::constant([1.0, 0.0]),
        VectorField::zero(),
        exact_u,
        exact_p,
    )
}

/// Polynomial solution inside the discrete spaces: `u = (0, −3x²)`, `p = x + y − 1`, `β = (1,1)`.
pub fn case_polynomial_patch(mu: f64, sigma: f64) -> Result<ProblemCase> {
    let exact_u = VectorField::new(|x| VectorJet {
        value: [0.0, -3.0 * x[0] * x[0]],
        grad: [[0.0, 0.0], [-6.0 * x[0], 0.0]],
        hess: [[0.0; 3], [-6.0, 0.0, 0.0]],
    });
    let exact_p = ScalarField::new(|x| ScalarJet { value: x[0] + x[1] - 1.0, grad: [1.0, 1.0] });
    let f = VectorField::new(move |x| VectorJet {
        value: [1.0, -3.0 * sigma * x[0] * x[0] + 6.0 * mu - 6.0 * x[0] + 1.0],
        ..Default::default()
    });
    ProblemCase::new(
        "patch",
        mu,
        sigma,
        VectorField::constant([1.0, 1.0]),
        f,
        exact_u,
        exact_p,
    )
}

/// `β = curl ψ = (∂_y ψ, −∂_x ψ)` for `ψ = x²(1−x)² y²(1−y)²`: divergence free and vanishing
/// on the boundary of the unit square.
pub fn compact_bubble_beta() -> VectorField {
    // s(t) = t²(1−t)² and derivatives up to order 3
    fn s(t: f64) -> [f64; 4] {
        let v = t * t * (1.0 - t) * (1.0 - t);
        let d1 = 2.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        let d2 = 2.0 - 12.0 * t + 12.0 * t * t;
        let d3 = -12.0 + 24.0 * t;
        [v, d1, d2, d3]
    }
    VectorField::new(|x| {
        let (a, b) = (s(x[0]), s(x[1]));
        // β1 = A B', β2 = −A' B
        VectorJet {
            value: [a[0] * b[1], -a[1] * b[0]],
            grad: [[a[1] * b[1], a[0] * b[2]], [-a[2] * b[0], -a[1] * b[1]]],
            hess: [
                [a[2] * b[1], a[1] * b[2], a[0] * b[3]],
                [-a[3] * b[0], -a[2] * b[1], -a[1] * b[2]],
            ],
        }
    })
}

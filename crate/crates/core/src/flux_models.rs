//! Polynomial flux families `f = (f_1, ..., f_n)` with `f(0) = f'(0) = 0`,
//! their entropy/entropy-flux pairs and the Godunov interface flux.
//!
//! Directions are 0-based throughout: component `j` is the flux along the
//! spatial axis `j`, i.e. `y_{j+1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{compensated_sum, integrate, poly_derivative, poly_eval, real_roots, root_bound};

const PHI_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
struct Component {
    /// `Some(k)` for `s^k / k`.
    monomial: Option<u32>,
    coeffs: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    /// Real roots of `f'`, used as extremum candidates.
    critical: Vec<f64>,
    /// Real roots of `f''`, used for wave-speed maxima.
    inflections: Vec<f64>,
}

impl Component {
    fn monomial(k: u32) -> Self {
        let mut coeffs = vec![0.0; k as usize + 1];
        coeffs[k as usize] = 1.0 / k as f64;
        let d1 = poly_derivative(&coeffs);
        let d2 = poly_derivative(&d1);
        Component {
            monomial: Some(k),
            coeffs,
            d1,
            d2,
            critical: vec![0.0],
            inflections: if k > 2 { vec![0.0] } else { Vec::new() },
        }
    }

    fn polynomial(coeffs: Vec<f64>) -> Self {
        let d1 = poly_derivative(&coeffs);
        let d2 = poly_derivative(&d1);
        let b1 = root_bound(&d1);
        let b2 = root_bound(&d2);
        Component {
            monomial: None,
            // f'(0) = 0 holds exactly; snap the numerically isolated copy
            critical: real_roots(&d1, -b1, b1)
                .into_iter()
                .map(|z| if z.abs() < 1e-9 { 0.0 } else { z })
                .collect(),
            inflections: real_roots(&d2, -b2, b2),
            coeffs,
            d1,
            d2,
        }
    }

    fn eval(&self, s: f64) -> f64 {
        match self.monomial {
            Some(k) => s.powi(k as i32) / k as f64,
            None => poly_eval(&self.coeffs, s),
        }
    }

    fn deriv1(&self, s: f64) -> f64 {
        match self.monomial {
            Some(k) => s.powi(k as i32 - 1),
            None => poly_eval(&self.d1, s),
        }
    }

    fn deriv2(&self, s: f64) -> f64 {
        match self.monomial {
            Some(k) => (k - 1) as f64 * s.powi(k as i32 - 2),
            None => poly_eval(&self.d2, s),
        }
    }

    /// `∫_0^s z^{j-1} f'(z) dz`, the flux of the entropy `s^j / j`.
    fn power_flux(&self, j: u32, s: f64) -> f64 {
        match self.monomial {
            Some(k) => {
                let e = j + k - 1;
                s.powi(e as i32) / e as f64
            }
            None => self
                .d1
                .iter()
                .enumerate()
                .rev()
                .map(|(m, &c)| {
                    let e = j as usize + m;
                    c * s.powi(e as i32) / e as f64
                })
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FluxKind {
    /// `f_j(s) = s^{k_j} / k_j`, strictly increasing exponents, each `>= 2`.
    Monomial(Vec<u32>),
    /// Ascending coefficient lists, one per component.
    Polynomial(Vec<Vec<f64>>),
}

/// A validated flux `f: R -> R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FluxSpecRepr", into = "FluxSpecRepr")]
pub struct FluxSpec {
    kind: FluxKind,
    components: Vec<Component>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FluxSpecRepr {
    n: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    exponents: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    coefficients: Vec<Vec<f64>>,
}

impl TryFrom<FluxSpecRepr> for FluxSpec {
    type Error = Error;

    fn try_from(r: FluxSpecRepr) -> Result<Self> {
        let spec = match r.kind.as_str() {
            "burgers" if r.exponents.is_empty() && r.coefficients.is_empty() => FluxSpec::burgers(r.n),
            "monomial" => FluxSpec::monomial(r.exponents)?,
            "polynomial" => FluxSpec::polynomial(r.coefficients)?,
            other => return Err(Error::InvalidFlux(format!("unknown kind {other:?}"))),
        };
        if spec.n() != r.n {
            return Err(Error::InvalidFlux(format!(
                "n = {} but {} components given",
                r.n,
                spec.n()
            )));
        }
        Ok(spec)
    }
}

impl From<FluxSpec> for FluxSpecRepr {
    fn from(s: FluxSpec) -> Self {
        let n = s.n();
        match s.kind {
            FluxKind::Monomial(exponents) => FluxSpecRepr {
                n,
                kind: "monomial".into(),
                exponents,
                coefficients: Vec::new(),
            },
            FluxKind::Polynomial(coefficients) => FluxSpecRepr {
                n,
                kind: "polynomial".into(),
                exponents: Vec::new(),
                coefficients,
            },
        }
    }
}

/// The Godunov solution of a local Riemann problem sampled at the interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceState {
    pub flux: f64,
    /// State at which the min/max defining `flux` is attained.
    pub state: f64,
}

impl FluxSpec {
    pub fn monomial(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidFlux("no exponents given".into()));
        }
        if exponents[0] < 2 {
            return Err(Error::InvalidFlux(format!(
                "exponents must be >= 2, got {}",
                exponents[0]
            )));
        }
        if exponents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFlux(format!(
                "exponents must be strictly increasing: {exponents:?}"
            )));
        }
        if *exponents.last().unwrap() > 60 {
            return Err(Error::InvalidFlux("exponents above 60 are not supported".into()));
        }
        let components = exponents.iter().map(|&k| Component::monomial(k)).collect();
        Ok(FluxSpec {
            kind: FluxKind::Monomial(exponents),
            components,
        })
    }

    /// Multi-dimensional Burgers flux `f_j(s) = s^{j+1} / (j+1)`, `j = 1..=n`.
    pub fn burgers(n: usize) -> Self {
        Self::monomial((2..=n as u32 + 1).collect()).expect("valid exponents")
    }

    pub fn polynomial(coefficients: Vec<Vec<f64>>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidFlux("no components given".into()));
        }
        for (j, c) in coefficients.iter().enumerate() {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidFlux(format!("component {j} has non-finite coefficients")));
            }
            if c.iter().take(2).any(|&x| x != 0.0) {
                return Err(Error::InvalidFlux(format!(
                    "component {j}: constant and linear coefficients must vanish"
                )));
            }
        }
        let components = coefficients
            .iter()
            .map(|c| Component::polynomial(c.clone()))
            .collect();
        Ok(FluxSpec {
            kind: FluxKind::Polynomial(coefficients),
            components,
        })
    }

    pub fn kind(&self) -> &FluxKind {
        &self.kind
    }

    /// Space dimension.
    pub fn n(&self) -> usize {
        self.components.len()
    }

    /// Space-time dimension `d = 1 + n`.
    pub fn d(&self) -> usize {
        self.n() + 1
    }

    pub fn exponents(&self) -> Option<&[u32]> {
        match &self.kind {
            FluxKind::Monomial(k) => Some(k),
            FluxKind::Polynomial(_) => None,
        }
    }

    pub fn is_burgers(&self) -> bool {
        self.exponents()
            .map_or(false, |k| k.iter().enumerate().all(|(j, &kj)| kj as usize == j + 2))
    }

    /// Ascending coefficients of component `j`.
    pub fn coefficients(&self, j: usize) -> &[f64] {
        &self.components[j].coeffs
    }

    pub fn component(&self, j: usize, s: f64) -> f64 {
        self.components[j].eval(s)
    }

    pub fn component_deriv(&self, j: usize, s: f64, order: u8) -> f64 {
        match order {
            1 => self.components[j].deriv1(s),
            2 => self.components[j].deriv2(s),
            _ => panic!("derivative order must be 1 or 2, got {order}"),
        }
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(s)).collect()
    }

    pub fn deriv(&self, s: f64, order: u8) -> Vec<f64> {
        (0..self.n()).map(|j| self.component_deriv(j, s, order)).collect()
    }

    /// Per-direction `max |f_j'|` over `[lo, hi]`.
    pub fn max_wave_speed(&self, lo: f64, hi: f64) -> Vec<f64> {
        assert!(lo <= hi, "max_wave_speed: lo = {lo} > hi = {hi}");
        self.components
            .iter()
            .map(|c| {
                let ends = c.deriv1(lo).abs().max(c.deriv1(hi).abs());
                c.inflections
                    .iter()
                    .filter(|&&z| lo < z && z < hi)
                    .map(|&z| c.deriv1(z).abs())
                    .fold(ends, f64::max)
            })
            .collect()
    }

    /// Godunov flux along direction `j`: `min f_j` over `[uL, uR]` when
    /// `uL <= uR`, `max f_j` over `[uR, uL]` otherwise.
    ///
    /// Ties keep the earliest candidate in the order `uL`, `uR`, interior
    /// critical points.
    pub fn godunov(&self, j: usize, ul: f64, ur: f64) -> InterfaceState {
        let c = &self.components[j];
        let minimize = ul <= ur;
        let (lo, hi) = if minimize { (ul, ur) } else { (ur, ul) };
        let better = |cand: f64, best: f64| if minimize { cand < best } else { cand > best };
        let mut best = InterfaceState {
            flux: c.eval(ul),
            state: ul,
        };
        let fr = c.eval(ur);
        if better(fr, best.flux) {
            best = InterfaceState { flux: fr, state: ur };
        }
        for &z in c.critical.iter().filter(|&&z| lo < z && z < hi) {
            let fz = c.eval(z);
            if better(fz, best.flux) {
                best = InterfaceState { flux: fz, state: z };
            }
        }
        best
    }

    pub fn godunov_interface_flux(&self, j: usize, ul: f64, ur: f64) -> f64 {
        self.godunov(j, ul, ur).flux
    }
}

/// Selects an entropy/entropy-flux pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropyId {
    /// `|s - a|`.
    Kruzhkov { a: f64 },
    /// `s^j / j`, convex on `s >= 0`.
    Power { j: u32 },
    /// `s^2 / 2`.
    Quadratic,
    /// The convex profile `phi` of the flux.
    Phi,
}

impl EntropyId {
    pub fn label(&self) -> String {
        match self {
            EntropyId::Kruzhkov { a } => format!("kruzhkov_{a}"),
            EntropyId::Power { j } => format!("power_{j}"),
            EntropyId::Quadratic => "quadratic".into(),
            EntropyId::Phi => "phi".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            EntropyId::Kruzhkov { a } if !a.is_finite() => {
                Err(Error::InvalidArgument(format!("kruzhkov threshold must be finite, got {a}")))
            }
            EntropyId::Power { j: 0 } => {
                Err(Error::InvalidArgument("power entropy needs j >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// An entropy pair ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct EntropyPair<'a> {
    spec: &'a FluxSpec,
    id: EntropyId,
    phi: Option<Phi>,
}

impl<'a> EntropyPair<'a> {
    pub fn new(spec: &'a FluxSpec, id: EntropyId) -> Result<Self> {
        id.validate()?;
        let phi = matches!(id, EntropyId::Phi).then(|| Phi::new(spec));
        Ok(EntropyPair { spec, id, phi })
    }

    pub fn id(&self) -> EntropyId {
        self.id
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        if matches!(self.id, EntropyId::Power { .. }) && s < 0.0 {
            return Err(Error::EntropyDomain(self.id.label(), s));
        }
        Ok(())
    }

    pub fn eta(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match self.id {
            EntropyId::Kruzhkov { a } => (s - a).abs(),
            EntropyId::Power { j } => s.powi(j as i32) / j as f64,
            EntropyId::Quadratic => 0.5 * s * s,
            EntropyId::Phi => self.phi.as_ref().unwrap().value(s),
        })
    }

    pub fn eta_prime(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match self.id {
            EntropyId::Kruzhkov { a } => sgn(s - a),
            EntropyId::Power { j } => s.powi(j as i32 - 1),
            EntropyId::Quadratic => s,
            EntropyId::Phi => self.phi.as_ref().unwrap().deriv(s),
        })
    }

    /// Component `j` of the entropy flux.
    pub fn q_component(&self, j: usize, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        let c = &self.spec.components[j];
        Ok(match self.id {
            EntropyId::Kruzhkov { a } => sgn(s - a) * (c.eval(s) - c.eval(a)),
            EntropyId::Power { j: p } => c.power_flux(p, s),
            EntropyId::Quadratic => c.power_flux(2, s),
            EntropyId::Phi => self.phi.as_ref().unwrap().flux_component(self.spec, j, s),
        })
    }

    pub fn q(&self, s: f64) -> Result<Vec<f64>> {
        (0..self.spec.n()).map(|j| self.q_component(j, s)).collect()
    }

    /// Entropy flux sampled at the Godunov interface state.
    pub fn numerical_flux(&self, j: usize, ul: f64, ur: f64) -> Result<f64> {
        let w = self.spec.godunov(j, ul, ur).state;
        self.q_component(j, w)
    }
}

pub fn flux_eval(spec: &FluxSpec, s: f64) -> Vec<f64> {
    spec.eval(s)
}

pub fn flux_deriv(spec: &FluxSpec, s: f64, order: u8) -> Vec<f64> {
    spec.deriv(s, order)
}

pub fn entropy_pair_eval(spec: &FluxSpec, e: EntropyId, s: f64) -> Result<(f64, Vec<f64>)> {
    let pair = EntropyPair::new(spec, e)?;
    Ok((pair.eta(s)?, pair.q(s)?))
}

pub fn numerical_entropy_flux(
    spec: &FluxSpec,
    e: EntropyId,
    j: usize,
    ul: f64,
    ur: f64,
) -> Result<f64> {
    EntropyPair::new(spec, e)?.numerical_flux(j, ul, ur)
}

/// Convex profile with `phi(0) = phi'(0) = 0` and `phi'' = |W f''|`, where `W`
/// is a positive diagonal weight (the identity for the plain profile) and the
/// norm is Euclidean.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi {
    second: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// Zeros of some `f_j''`, where `phi''` may have a kink.
    breaks: Vec<f64>,
}

impl Phi {
    pub fn new(spec: &FluxSpec) -> Self {
        Self::weighted(spec, vec![1.0; spec.n()])
    }

    /// Profile built from `|diag(weights) f''|`; with `weights = 1/p` this is
    /// `psi_P` for the diagonal matrix `P = diag(p)`.
    pub fn weighted(spec: &FluxSpec, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), spec.n());
        let mut breaks: Vec<f64> = spec.components.iter().flat_map(|c| c.inflections.iter().copied()).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Phi {
            second: spec.components.iter().map(|c| c.d2.clone()).collect(),
            weights,
            breaks,
        }
    }

    pub fn second(&self, s: f64) -> f64 {
        self.second
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| {
                let v = w * poly_eval(p, s);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn deriv(&self, s: f64) -> f64 {
        self.integrate_split(|z| self.second(z), s)
    }

    /// `∫_0^s g`, split at the kinks of `phi''`.
    fn integrate_split<G: Fn(f64) -> f64>(&self, g: G, s: f64) -> f64 {
        let (lo, hi, sign) = if s >= 0.0 { (0.0, s, 1.0) } else { (s, 0.0, -1.0) };
        let mut pts = vec![lo];
        pts.extend(self.breaks.iter().copied().filter(|&b| lo < b && b < hi));
        pts.push(hi);
        sign * compensated_sum(pts.windows(2).map(|w| integrate(&g, w[0], w[1], PHI_REL_TOL)))
    }

    pub fn value(&self, s: f64) -> f64 {
        self.integrate_split(|z| (s - z) * self.second(z), s)
    }

    /// Entropy flux of `phi`: `Phi_j(s) = phi'(s) f_j(s) - ∫_0^s phi''(z) f_j(z) dz`.
    pub fn flux_component(&self, spec: &FluxSpec, j: usize, s: f64) -> f64 {
        let c = &spec.components[j];
        self.deriv(s) * c.eval(s) - self.integrate_split(|z| self.second(z) * c.eval(z), s)
    }
}

pub fn phi_build(spec: &FluxSpec) -> Phi {
    Phi::new(spec)
}

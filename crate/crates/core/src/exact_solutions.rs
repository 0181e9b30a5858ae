//! Closed-form reference solutions and initial-data profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An initial datum `u_0`, evaluable at any point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DataProfile {
    Zero {
        n: usize,
    },
    /// 1-D N-wave at time zero: `y` on `(0, L)`.
    NWave {
        l: f64,
    },
    /// `height` on the half-open box `[corner, corner + widths)`.
    Box {
        height: f64,
        corner: Vec<f64>,
        widths: Vec<f64>,
    },
    /// `height * (1 - |y - center| / radius)_+`.
    Cone {
        height: f64,
        center: Vec<f64>,
        radius: f64,
    },
    /// `height * (1 - |y - center|^2 / radius^2)_+^2`.
    Bump {
        height: f64,
        center: Vec<f64>,
        radius: f64,
    },
    /// Integrable but unbounded 1-D datum `|y|^{-1/2}` on `|y| < 1`.
    Singular,
    Sum {
        terms: Vec<DataProfile>,
    },
    Negated {
        inner: Box<DataProfile>,
    },
    /// Pointwise clip to `[-m, m]`.
    Truncated {
        inner: Box<DataProfile>,
        m: f64,
    },
    /// `λ^{-1} u_0(λ^2 y_1, ..., λ^{n+1} y_n)`.
    Scaled {
        inner: Box<DataProfile>,
        lambda: f64,
    },
}

/// Axis-aligned bounding box of the support, per axis `(lo, hi)`.
pub type Support = Vec<(f64, f64)>;

impl DataProfile {
    pub fn box_1d(height: f64, left: f64, width: f64) -> Self {
        DataProfile::Box {
            height,
            corner: vec![left],
            widths: vec![width],
        }
    }

    /// Space dimension of the profile.
    pub fn dim(&self) -> Result<usize> {
        match self {
            DataProfile::Zero { n } => Ok(*n),
            DataProfile::NWave { .. } | DataProfile::Singular => Ok(1),
            DataProfile::Box { corner, .. } => Ok(corner.len()),
            DataProfile::Cone { center, .. } | DataProfile::Bump { center, .. } => Ok(center.len()),
            DataProfile::Sum { terms } => {
                let first = terms
                    .first()
                    .ok_or_else(|| Error::InvalidProfile("empty sum; use the zero profile".into()))?
                    .dim()?;
                for t in &terms[1..] {
                    let d = t.dim()?;
                    if d != first {
                        return Err(Error::DimensionMismatch { expected: first, got: d });
                    }
                }
                Ok(first)
            }
            DataProfile::Negated { inner }
            | DataProfile::Truncated { inner, .. }
            | DataProfile::Scaled { inner, .. } => inner.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            DataProfile::Zero { n } if *n == 0 => return bad("zero profile needs n >= 1".into()),
            DataProfile::NWave { l } if !(l.is_finite() && *l > 0.0) => {
                return bad(format!("N-wave needs L > 0, got {l}"))
            }
            DataProfile::Box {
                height,
                corner,
                widths,
            } => {
                if corner.is_empty() || corner.len() != widths.len() {
                    return bad("box corner and widths must have equal, positive length".into());
                }
                if !height.is_finite() || !finite(corner) || widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return bad("box needs finite height/corner and positive widths".into());
                }
            }
            DataProfile::Cone { height, center, radius } | DataProfile::Bump { height, center, radius } => {
                if center.is_empty() || !height.is_finite() || !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return bad("cone/bump needs a finite center, height and positive radius".into());
                }
            }
            DataProfile::Sum { terms } => {
                for t in terms {
                    t.validate()?;
                }
            }
            DataProfile::Negated { inner } => inner.validate()?,
            DataProfile::Truncated { inner, m } => {
                if !(m.is_finite() && *m > 0.0) {
                    return bad(format!("truncation level must be positive, got {m}"));
                }
                inner.validate()?;
            }
            DataProfile::Scaled { inner, lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return bad(format!("scaling parameter must be positive, got {lambda}"));
                }
                inner.validate()?;
            }
            _ => {}
        }
        self.dim().map(|_| ())
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            DataProfile::Zero { .. } => 0.0,
            DataProfile::NWave { l } => n_wave(*l, 0.0, y[0]),
            DataProfile::Box {
                height,
                corner,
                widths,
            } => {
                let inside = y
                    .iter()
                    .zip(corner.iter().zip(widths))
                    .all(|(&x, (&c, &w))| c <= x && x < c + w);
                if inside {
                    *height
                } else {
                    0.0
                }
            }
            DataProfile::Cone { height, center, radius } => {
                let r = distance(y, center);
                height * (1.0 - r / radius).max(0.0)
            }
            DataProfile::Bump { height, center, radius } => {
                let r = distance(y, center) / radius;
                if r < 1.0 {
                    let w = 1.0 - r * r;
                    height * w * w
                } else {
                    0.0
                }
            }
            DataProfile::Singular => {
                let a = y[0].abs();
                if a < 1.0 {
                    1.0 / a.sqrt()
                } else {
                    0.0
                }
            }
            DataProfile::Sum { terms } => terms.iter().map(|t| t.eval(y)).sum(),
            DataProfile::Negated { inner } => -inner.eval(y),
            DataProfile::Truncated { inner, m } => inner.eval(y).clamp(-m, *m),
            DataProfile::Scaled { inner, lambda } => {
                let z: Vec<f64> = y
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| x * lambda.powi(j as i32 + 2))
                    .collect();
                inner.eval(&z) / lambda
            }
        }
    }

    /// Bounding box of the support; `None` when the profile vanishes.
    pub fn support(&self) -> Option<Support> {
        match self {
            DataProfile::Zero { .. } => None,
            DataProfile::NWave { l } => Some(vec![(0.0, *l)]),
            DataProfile::Box { corner, widths, height } => {
                (*height != 0.0).then(|| corner.iter().zip(widths).map(|(&c, &w)| (c, c + w)).collect())
            }
            DataProfile::Cone { height, center, radius } | DataProfile::Bump { height, center, radius } => {
                (*height != 0.0).then(|| center.iter().map(|&c| (c - radius, c + radius)).collect())
            }
            DataProfile::Singular => Some(vec![(-1.0, 1.0)]),
            DataProfile::Sum { terms } => terms.iter().filter_map(|t| t.support()).reduce(|a, b| {
                a.iter()
                    .zip(&b)
                    .map(|(x, y)| (x.0.min(y.0), x.1.max(y.1)))
                    .collect()
            }),
            DataProfile::Negated { inner } | DataProfile::Truncated { inner, .. } => inner.support(),
            DataProfile::Scaled { inner, lambda } => inner.support().map(|s| {
                s.iter()
                    .enumerate()
                    .map(|(j, &(lo, hi))| {
                        let f = lambda.powi(j as i32 + 2);
                        (lo / f, hi / f)
                    })
                    .collect()
            }),
        }
    }

    /// Upper bound of `|u_0|`, or infinity for unbounded data.
    pub fn sup_bound(&self) -> f64 {
        match self {
            DataProfile::Zero { .. } => 0.0,
            DataProfile::NWave { l } => *l,
            DataProfile::Box { height, .. } | DataProfile::Cone { height, .. } | DataProfile::Bump { height, .. } => {
                height.abs()
            }
            DataProfile::Singular => f64::INFINITY,
            DataProfile::Sum { terms } => terms.iter().map(|t| t.sup_bound()).sum(),
            DataProfile::Negated { inner } => inner.sup_bound(),
            DataProfile::Truncated { inner, m } => inner.sup_bound().min(*m),
            DataProfile::Scaled { inner, lambda } => inner.sup_bound() / lambda,
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `N_L(t, y) = y / (1 + t)` on `0 < y < L sqrt(1 + t)`, zero otherwise.
pub fn n_wave(l: f64, t: f64, y: f64) -> f64 {
    if y > 0.0 && y < l * (1.0 + t).sqrt() {
        y / (1.0 + t)
    } else {
        0.0
    }
}

/// `||N_L(t)||_p = (L^{p+1}/(p+1))^{1/p} (1+t)^{(1-p)/(2p)}`.
pub fn n_wave_lp_norm(l: f64, t: f64, p: f64) -> f64 {
    assert!(p >= 1.0, "n_wave_lp_norm needs p >= 1, got {p}");
    (l.powf(p + 1.0) / (p + 1.0)).powf(1.0 / p) * (1.0 + t).powf((1.0 - p) / (2.0 * p))
}

/// Exact average of `N_L(t, .)` over the cell `[a, b]`.
pub fn n_wave_cell_average(l: f64, t: f64, a: f64, b: f64) -> f64 {
    let lo = a.max(0.0);
    let hi = b.min(l * (1.0 + t).sqrt());
    if hi <= lo {
        return 0.0;
    }
    (hi * hi - lo * lo) / (2.0 * (1.0 + t)) / (b - a)
}

/// Entropy solution of Burgers' equation `u_t + (u^2/2)_y = 0` with data
/// `uL` for `y < 0` and `uR` for `y > 0`.
pub fn riemann_burgers_1d(ul: f64, ur: f64, t: f64, y: f64) -> f64 {
    assert!(t > 0.0, "riemann_burgers_1d needs t > 0");
    if ul > ur {
        if y < 0.5 * (ul + ur) * t {
            ul
        } else {
            ur
        }
    } else if y <= ul * t {
        ul
    } else if y >= ur * t {
        ur
    } else {
        y / t
    }
}

/// Exact average of [`riemann_burgers_1d`] over `[a, b]`.
pub fn riemann_cell_average(ul: f64, ur: f64, t: f64, a: f64, b: f64) -> f64 {
    let piece = |lo: f64, hi: f64, v: f64| (hi.min(b) - lo.max(a)).max(0.0) * v;
    let total = if ul > ur {
        let s = 0.5 * (ul + ur) * t;
        piece(f64::NEG_INFINITY, s, ul) + piece(s, f64::INFINITY, ur)
    } else {
        let (l, r) = (ul * t, ur * t);
        let (lo, hi) = (a.max(l), b.min(r));
        let fan = if hi > lo { (hi * hi - lo * lo) / (2.0 * t) } else { 0.0 };
        piece(f64::NEG_INFINITY, l, ul) + fan + piece(r, f64::INFINITY, ur)
    };
    total / (b - a)
}

/// `u_{0m} = max(-m, min(u_0, m))`.
pub fn truncate_data(profile: &DataProfile, m: f64) -> Result<DataProfile> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidArgument(format!("truncation level must be positive, got {m}")));
    }
    Ok(DataProfile::Truncated {
        inner: Box::new(profile.clone()),
        m,
    })
}

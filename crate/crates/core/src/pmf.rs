//! Exact joint probability mass functions over tuples of (possibly
//! counterfactual) variables, with marginalization, conditioning and
//! conditional-independence queries.

use crate::error::{EngineError, Result};
use crate::num::{sum, Scalar};
use crate::table::Shape;

/// A variable of a joint pmf: base name plus an optional regime annotation
/// marking which intervened world it was read from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PmfVar {
    pub name: String,
    pub world: Option<String>,
    pub labels: Vec<String>,
}

impl PmfVar {
    pub fn display_name(&self) -> String {
        match &self.world {
            Some(w) => format!("{}^{{{}}}", self.name, w),
            None => self.name.clone(),
        }
    }
}

/// Exact pmf over the product domain of its variables.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf<P: Scalar> {
    vars: Vec<PmfVar>,
    mass: Vec<P>,
}

impl<P: Scalar> JointPmf<P> {
    pub fn new(vars: Vec<PmfVar>, mass: Vec<P>) -> Self {
        let shape = Shape(vars.iter().map(|v| v.labels.len()).collect());
        assert_eq!(shape.len(), mass.len(), "mass table size mismatch");
        JointPmf { vars, mass }
    }

    pub fn vars(&self) -> &[PmfVar] {
        &self.vars
    }

    pub fn mass(&self) -> &[P] {
        &self.mass
    }

    pub fn shape(&self) -> Shape {
        Shape(self.vars.iter().map(|v| v.labels.len()).collect())
    }

    pub fn total_mass(&self) -> P {
        sum(self.mass.iter().cloned())
    }

    pub fn prob(&self, idx: &[usize]) -> P {
        self.mass[self.shape().flat(idx)].clone()
    }

    /// Position of a variable, matching on name and world annotation.
    pub fn position(&self, name: &str, world: Option<&str>) -> Option<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name && v.world.as_deref() == world)
    }

    /// Position of a variable by base name, ignoring world annotations;
    /// unique matches only.
    pub fn position_by_name(&self, name: &str) -> Result<usize> {
        let hits: Vec<usize> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.name == name)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(EngineError::UnknownVariable(name.to_string())),
            _ => Err(EngineError::UnknownVariable(format!(
                "{name} is ambiguous across worlds"
            ))),
        }
    }

    /// Marginal onto the given variable positions (order preserved as given).
    pub fn marginal(&self, keep: &[usize]) -> JointPmf<P> {
        let shape = self.shape();
        let out_vars: Vec<PmfVar> = keep.iter().map(|&i| self.vars[i].clone()).collect();
        let out_shape = Shape(out_vars.iter().map(|v| v.labels.len()).collect());
        let mut out_mass = vec![P::zero(); out_shape.len()];
        for (flat, p) in self.mass.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let idx = shape.unflat(flat);
            let out_idx: Vec<usize> = keep.iter().map(|&i| idx[i]).collect();
            let o = out_shape.flat(&out_idx);
            out_mass[o] = out_mass[o].clone() + p.clone();
        }
        JointPmf::new(out_vars, out_mass)
    }

    /// Condition on `given` (variable position, label index) pairs and keep
    /// the remaining variables, renormalized. Errors if the event has zero mass.
    pub fn condition(&self, given: &[(usize, usize)]) -> Result<JointPmf<P>> {
        let shape = self.shape();
        let kept: Vec<usize> = (0..self.vars.len())
            .filter(|i| !given.iter().any(|(g, _)| g == i))
            .collect();
        let out_vars: Vec<PmfVar> = kept.iter().map(|&i| self.vars[i].clone()).collect();
        let out_shape = Shape(out_vars.iter().map(|v| v.labels.len()).collect());
        let mut out_mass = vec![P::zero(); out_shape.len().max(1)];
        let mut event_mass = P::zero();
        for (flat, p) in self.mass.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let idx = shape.unflat(flat);
            if given.iter().all(|&(g, v)| idx[g] == v) {
                event_mass = event_mass.clone() + p.clone();
                let out_idx: Vec<usize> = kept.iter().map(|&i| idx[i]).collect();
                let o = if out_idx.is_empty() { 0 } else { out_shape.flat(&out_idx) };
                out_mass[o] = out_mass[o].clone() + p.clone();
            }
        }
        if event_mass.is_zero() {
            let desc: Vec<String> = given
                .iter()
                .map(|&(g, v)| format!("{}={}", self.vars[g].display_name(), self.vars[g].labels[v]))
                .collect();
            return Err(EngineError::ZeroMassEvent(desc.join(", ")));
        }
        let out_mass = out_mass
            .into_iter()
            .map(|m| m / event_mass.clone())
            .collect();
        Ok(JointPmf::new(out_vars, out_mass))
    }

    /// Exact conditional/marginal: keep `keep` positions, after conditioning
    /// on `given`. The public query operation.
    pub fn query(&self, keep: &[usize], given: &[(usize, usize)]) -> Result<JointPmf<P>> {
        let conditioned = self.condition(given)?;
        // map original positions to positions in the conditioned pmf
        let kept_orig: Vec<usize> = (0..self.vars.len())
            .filter(|i| !given.iter().any(|(g, _)| g == i))
            .collect();
        let mapped: Vec<usize> = keep
            .iter()
            .map(|k| {
                kept_orig
                    .iter()
                    .position(|o| o == k)
                    .expect("cannot keep a conditioned variable")
            })
            .collect();
        Ok(conditioned.marginal(&mapped))
    }

    /// Probability of a single event given by (position, label) pairs.
    pub fn event_prob(&self, event: &[(usize, usize)]) -> P {
        let shape = self.shape();
        let mut total = P::zero();
        for (flat, p) in self.mass.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let idx = shape.unflat(flat);
            if event.iter().all(|&(g, v)| idx[g] == v) {
                total = total + p.clone();
            }
        }
        total
    }

    /// Expectation of a variable whose labels parse as numbers.
    pub fn expectation(&self, var: usize) -> Result<P> {
        let values = numeric_labels::<P>(&self.vars[var].labels)?;
        let marg = self.marginal(&[var]);
        let mut acc = P::zero();
        for (i, p) in marg.mass.iter().enumerate() {
            acc = acc + values[i].clone() * p.clone();
        }
        Ok(acc)
    }

    /// Append a derived binary indicator `1(var = label)`.
    pub fn with_indicator(&self, var: usize, label: usize, name: &str) -> JointPmf<P> {
        let shape = self.shape();
        let mut out_vars = self.vars.clone();
        out_vars.push(PmfVar {
            name: name.to_string(),
            world: None,
            labels: vec!["0".into(), "1".into()],
        });
        let out_shape = Shape(out_vars.iter().map(|v| v.labels.len()).collect());
        let mut out_mass = vec![P::zero(); out_shape.len()];
        for (flat, p) in self.mass.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let mut idx = shape.unflat(flat);
            let ind = usize::from(idx[var] == label);
            idx.push(ind);
            let o = out_shape.flat(&idx);
            out_mass[o] = out_mass[o].clone() + p.clone();
        }
        JointPmf::new(out_vars, out_mass)
    }

    /// Max over positive-mass z-strata, and over (x, y) cells, of
    /// |P(x,y|z) - P(x|z)P(y|z)|. Zero-mass strata are skipped and counted.
    pub fn conditional_independence_deviation(
        &self,
        x: &[usize],
        y: &[usize],
        z: &[usize],
    ) -> Result<(P, usize)> {
        for &i in x {
            if y.contains(&i) || z.contains(&i) {
                return Err(EngineError::OverlappingSets);
            }
        }
        for &i in y {
            if z.contains(&i) {
                return Err(EngineError::OverlappingSets);
            }
        }
        let z_shape = Shape(z.iter().map(|&i| self.vars[i].labels.len()).collect());
        let mut max_dev = P::zero();
        let mut skipped = 0usize;
        let strata: Vec<Vec<usize>> = if z.is_empty() {
            vec![vec![]]
        } else {
            z_shape.iter().collect()
        };
        for zval in strata {
            let given: Vec<(usize, usize)> =
                z.iter().copied().zip(zval.iter().copied()).collect();
            let cond = match self.condition(&given) {
                Ok(c) => c,
                Err(EngineError::ZeroMassEvent(_)) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            // positions of x and y inside the conditioned pmf
            let remaining: Vec<usize> = (0..self.vars.len())
                .filter(|i| !z.contains(i))
                .collect();
            let xp: Vec<usize> = x
                .iter()
                .map(|i| remaining.iter().position(|r| r == i).unwrap())
                .collect();
            let yp: Vec<usize> = y
                .iter()
                .map(|i| remaining.iter().position(|r| r == i).unwrap())
                .collect();
            let joint = {
                let mut both = xp.clone();
                both.extend_from_slice(&yp);
                cond.marginal(&both)
            };
            let px = cond.marginal(&xp);
            let py = cond.marginal(&yp);
            let x_shape = Shape(xp.iter().map(|&i| cond.vars[i].labels.len()).collect());
            let y_shape = Shape(yp.iter().map(|&i| cond.vars[i].labels.len()).collect());
            for xi in 0..x_shape.len() {
                for yi in 0..y_shape.len() {
                    let mut idx = x_shape.unflat(xi);
                    idx.extend(y_shape.unflat(yi));
                    let pj = joint.prob(&idx);
                    let prod = px.mass[xi].clone() * py.mass[yi].clone();
                    let dev = (pj - prod).abs();
                    if dev > max_dev {
                        max_dev = dev;
                    }
                }
            }
        }
        Ok((max_dev, skipped))
    }
}

/// Parse every label of a domain as a numeric scalar.
pub fn numeric_labels<P: Scalar>(labels: &[String]) -> Result<Vec<P>> {
    labels
        .iter()
        .map(|l| P::from_decimal_str(l).ok_or_else(|| EngineError::NonNumericLabel(l.clone())))
        .collect()
}

/// Test conditional independence at a tolerance: `holds` iff the max
/// deviation does not exceed `tol` (use 0.0 in exact mode).
pub fn conditional_independent<P: Scalar>(
    pmf: &JointPmf<P>,
    x: &[usize],
    y: &[usize],
    z: &[usize],
    tol: f64,
) -> Result<IndependenceVerdict> {
    let (dev, skipped) = pmf.conditional_independence_deviation(x, y, z)?;
    let dev = dev.to_f64();
    Ok(IndependenceVerdict {
        holds: dev <= tol,
        max_deviation: dev,
        skipped_strata: skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceVerdict {
    pub holds: bool,
    pub max_deviation: f64,
    pub skipped_strata: usize,
}

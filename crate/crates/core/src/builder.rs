//! Convenience constructors for models given as conditional probability
//! tables. Each variable's conditional pmf is realized exactly through an
//! inverse-CDF noise term shared across parent configurations.

use crate::error::Result;
use crate::num::Scalar;
use crate::scm::{
    validate_model, CausalModelSpec, Domain, NoiseSpec, Role, StructuralFunction, ValidatedModel,
    Variable,
};
use crate::table::Shape;

/// One variable under construction: a conditional pmf row per parent
/// configuration (rows in lexicographic parent order, last parent fastest).
pub struct CptVar<P: Scalar> {
    pub name: String,
    pub domain: Domain,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<P>>,
    pub observed: bool,
    pub role: Option<Role>,
}

impl<P: Scalar> CptVar<P> {
    pub fn new(name: &str, domain: Domain, parents: &[&str], rows: Vec<Vec<P>>) -> Self {
        CptVar {
            name: name.to_string(),
            domain,
            parents: parents.iter().map(|s| s.to_string()).collect(),
            rows,
            observed: true,
            role: None,
        }
    }

    pub fn latent(mut self) -> Self {
        self.observed = false;
        self
    }

    pub fn role(mut self, role: Role) -> Self {
        self.role = Some(role);
        self
    }
}

/// Build the inverse-CDF noise realization of a conditional pmf.
///
/// The noise atoms are the consecutive gaps between all cumulative cut
/// points across rows, so every row's conditional law is reproduced exactly
/// and the noise stays small (at most rows x (labels - 1) + 1 atoms).
fn realize_cpt<P: Scalar>(var: &CptVar<P>, parent_sizes: &[usize]) -> Variable<P> {
    let n_labels = var.domain.size();
    let expected_rows = Shape(parent_sizes.to_vec()).len();
    assert_eq!(
        var.rows.len(),
        expected_rows,
        "variable `{}`: expected {expected_rows} cpt rows",
        var.name
    );
    // collect cumulative cut points of every row
    let mut cuts: Vec<P> = vec![P::zero(), P::one()];
    for row in &var.rows {
        assert_eq!(row.len(), n_labels, "cpt row arity for `{}`", var.name);
        let mut acc = P::zero();
        for p in &row[..n_labels - 1] {
            acc = acc + p.clone();
            cuts.push(acc.clone());
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let atoms: Vec<P> = cuts
        .windows(2)
        .map(|w| w[1].clone() - w[0].clone())
        .filter(|a| a.is_positive())
        .collect();
    // rebuild boundaries from the retained atoms
    let mut bounds = vec![P::zero()];
    for a in &atoms {
        let last = bounds.last().unwrap().clone();
        bounds.push(last + a.clone());
    }
    // table: (parent config, atom) -> label whose cumulative interval holds the atom
    let mut outputs = Vec::with_capacity(var.rows.len() * atoms.len());
    for row in &var.rows {
        let mut row_cum = Vec::with_capacity(n_labels);
        let mut acc = P::zero();
        for p in row {
            acc = acc + p.clone();
            row_cum.push(acc.clone());
        }
        for k in 0..atoms.len() {
            let mid_low = bounds[k].clone();
            // first label whose cumulative strictly exceeds the atom's lower bound
            let label = row_cum
                .iter()
                .position(|c| *c > mid_low)
                .unwrap_or(n_labels - 1);
            outputs.push(label);
        }
    }
    let noise_domain = Domain::indexed("u", atoms.len());
    Variable {
        name: var.name.clone(),
        domain: var.domain.clone(),
        noise: NoiseSpec {
            domain: noise_domain,
            pmf: atoms,
        },
        func: StructuralFunction {
            parents: var.parents.clone(),
            outputs,
        },
        observed: var.observed,
        role: var.role,
    }
}

/// Assemble and validate a model from conditional probability tables.
pub fn model_from_cpts<P: Scalar>(vars: Vec<CptVar<P>>) -> Result<ValidatedModel<P>> {
    let mut built: Vec<Variable<P>> = Vec::with_capacity(vars.len());
    for v in &vars {
        let parent_sizes: Vec<usize> = v
            .parents
            .iter()
            .map(|p| {
                built
                    .iter()
                    .find(|b| &b.name == p)
                    .unwrap_or_else(|| panic!("parent `{p}` of `{}` not yet declared", v.name))
                    .domain
                    .size()
            })
            .collect();
        built.push(realize_cpt(v, &parent_sizes));
    }
    validate_model(CausalModelSpec { variables: built })
}

/// Shorthand for a binary-domain cpt variable given P(V=1 | parents) per row.
pub fn binary_cpt<P: Scalar>(name: &str, parents: &[&str], p_one: &[P]) -> CptVar<P> {
    let rows = p_one
        .iter()
        .map(|p| vec![P::one() - p.clone(), p.clone()])
        .collect();
    CptVar::new(name, Domain::binary(), parents, rows)
}

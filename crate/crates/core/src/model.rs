//! Rate constants, the cell-centred grid and the six-component state.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six unknowns, in the fixed order `(u1, u2, v1, v2, v3, v4)` used by
/// every 6-vector in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    U1,
    U2,
    V1,
    V2,
    V3,
    V4,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::U1,
        Component::U2,
        Component::V1,
        Component::V2,
        Component::V3,
        Component::V4,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::U1 => "u1",
            Component::U2 => "u2",
            Component::V1 => "v1",
            Component::V2 => "v2",
            Component::V3 => "v3",
            Component::V4 => "v4",
        }
    }

    pub fn is_u(self) -> bool {
        matches!(self, Component::U1 | Component::U2)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Positive rate constants of the reaction terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Params {
    pub a1: f64,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

#[derive(Deserialize)]
struct RawParams {
    a1: f64,
    a2: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        Params::new(r.a1, r.a2, r.c1, r.c2, r.c3, r.c4)
    }
}

impl Params {
    pub fn new(a1: f64, a2: f64, c1: f64, c2: f64, c3: f64, c4: f64) -> Result<Self> {
        let p = Params {
            a1,
            a2,
            c1,
            c2,
            c3,
            c4,
        };
        for (name, v) in ["a1", "a2", "c1", "c2", "c3", "c4"]
            .iter()
            .zip(p.to_array())
        {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(p)
    }

    pub fn from_array(v: [f64; 6]) -> Result<Self> {
        Params::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a1, self.a2, self.c1, self.c2, self.c3, self.c4]
    }

    /// Global Lipschitz bound of the reaction terms.
    pub fn lipschitz(&self) -> f64 {
        self.to_array().iter().sum()
    }
}

/// Uniform cell-centred grid on `[0, length]`.
///
/// Node `i` sits at `(i + 1/2) h`; midpoint quadrature gives every node
/// weight `h`, so the weights sum to `length` exactly in exact arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid1D {
    length: f64,
    n_cells: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    length: f64,
    n_cells: usize,
}

impl TryFrom<RawGrid> for Grid1D {
    type Error = Error;

    fn try_from(r: RawGrid) -> Result<Self> {
        Grid1D::new(r.length, r.n_cells)
    }
}

impl Grid1D {
    pub const MIN_CELLS: usize = 4;

    pub fn new(length: f64, n_cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        if n_cells < Self::MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {} cells, got {n_cells}",
                Self::MIN_CELLS
            )));
        }
        Ok(Grid1D { length, n_cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.node(i))
    }

    /// Midpoint-rule weight of every node.
    pub fn weight(&self) -> f64 {
        self.spacing()
    }

    /// Midpoint-rule integral of node values over the interval.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.weight()
    }

    /// Spatial mean `(1/|Ω|) ∫ f`.
    pub fn mean(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / self.n_cells as f64
    }
}

/// Population density sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn constant(grid: &Grid1D, value: f64) -> Self {
        Field {
            values: vec![value; grid.n_cells()],
        }
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Field {
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// The six fields `(u1, u2, v1, v2, v3, v4)` on one grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    fields: [Field; 6],
    pub time: f64,
}

impl State {
    pub fn new(fields: [Field; 6], time: f64) -> Result<Self> {
        let n = fields[0].len();
        if let Some(c) = Component::ALL.iter().find(|c| fields[c.index()].len() != n) {
            return Err(Error::InvalidGrid(format!(
                "field {c} has {} nodes, expected {n}",
                fields[c.index()].len()
            )));
        }
        Ok(State { fields, time })
    }

    /// Spatially constant state with the given 6-vector at every node.
    pub fn uniform(grid: &Grid1D, w: [f64; 6], time: f64) -> Self {
        State {
            fields: w.map(|v| Field::constant(grid, v)),
            time,
        }
    }

    pub fn field(&self, c: Component) -> &Field {
        &self.fields[c.index()]
    }

    pub fn field_mut(&mut self, c: Component) -> &mut Field {
        &mut self.fields[c.index()]
    }

    pub fn fields(&self) -> &[Field; 6] {
        &self.fields
    }

    pub fn fields_mut(&mut self) -> &mut [Field; 6] {
        &mut self.fields
    }

    pub fn n_nodes(&self) -> usize {
        self.fields[0].len()
    }

    /// The 6-vector of values at node `i`.
    pub fn at(&self, i: usize) -> [f64; 6] {
        std::array::from_fn(|c| self.fields[c].values[i])
    }

    pub fn min_value(&self) -> f64 {
        self.fields
            .iter()
            .map(Field::min)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.fields
            .iter()
            .map(Field::max)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_finite(&self) -> Result<()> {
        match Component::ALL.iter().find(|c| !self.field(**c).is_finite()) {
            Some(&component) => Err(Error::NaNDetected {
                component,
                time: self.time,
            }),
            None => Ok(()),
        }
    }

    /// Pointwise sum of the selected components, weighted by `coeffs`.
    pub fn combination(&self, coeffs: [f64; 6]) -> Vec<f64> {
        (0..self.n_nodes())
            .map(|i| {
                self.fields
                    .iter()
                    .zip(coeffs)
                    .filter(|(_, c)| *c != 0.0)
                    .map(|(f, c)| c * f.values[i])
                    .sum()
            })
            .collect()
    }
}

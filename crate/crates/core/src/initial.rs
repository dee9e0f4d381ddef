//! Initial data: constants plus Neumann cosine modes, or tabulated node values.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Component, Field, Grid1D, Params, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineMode {
    pub k: u32,
    pub amp: f64,
}

/// One initial field: `constant + Σ amp_k cos(kπx/L)` or raw node values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FieldSpec {
    Modal {
        constant: f64,
        #[serde(default)]
        modes: Vec<CosineMode>,
    },
    Tabulated {
        values: Vec<f64>,
    },
}

impl FieldSpec {
    pub fn constant(value: f64) -> Self {
        FieldSpec::Modal {
            constant: value,
            modes: Vec::new(),
        }
    }

    pub fn cosine(constant: f64, k: u32, amp: f64) -> Self {
        FieldSpec::Modal {
            constant,
            modes: vec![CosineMode { k, amp }],
        }
    }

    fn shifted(&self, by: f64) -> FieldSpec {
        match self {
            FieldSpec::Modal { constant, modes } => FieldSpec::Modal {
                constant: constant + by,
                modes: modes.clone(),
            },
            FieldSpec::Tabulated { values } => FieldSpec::Tabulated {
                values: values.iter().map(|v| v + by).collect(),
            },
        }
    }

    /// Lower bound of the field over the whole interval (exact for tables).
    fn lower_bound(&self) -> f64 {
        match self {
            FieldSpec::Modal { constant, modes } => {
                constant - modes.iter().map(|m| m.amp.abs()).sum::<f64>()
            }
            FieldSpec::Tabulated { values } => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    fn sample(&self, component: Component, grid: &Grid1D) -> Result<Field> {
        match self {
            FieldSpec::Modal { constant, modes } => {
                if let Some(m) = modes.iter().find(|m| 2 * m.k as usize >= grid.n_cells()) {
                    return Err(Error::ModeOutOfRange {
                        component,
                        k: m.k,
                        n_cells: grid.n_cells(),
                    });
                }
                if !constant.is_finite() || modes.iter().any(|m| !m.amp.is_finite()) {
                    return Err(Error::MalformedInitial {
                        component,
                        reason: "non-finite coefficient".into(),
                    });
                }
                let wave = PI / grid.length();
                Ok(Field::from_fn(grid, |x| {
                    constant
                        + modes
                            .iter()
                            .map(|m| m.amp * (m.k as f64 * wave * x).cos())
                            .sum::<f64>()
                }))
            }
            FieldSpec::Tabulated { values } => {
                if values.len() != grid.n_cells() {
                    return Err(Error::MalformedInitial {
                        component,
                        reason: format!(
                            "{} tabulated values for {} cells",
                            values.len(),
                            grid.n_cells()
                        ),
                    });
                }
                Ok(Field::new(values.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub u1: FieldSpec,
    pub u2: FieldSpec,
    pub v1: FieldSpec,
    pub v2: FieldSpec,
    pub v3: FieldSpec,
    pub v4: FieldSpec,
}

impl InitialSpec {
    pub fn from_fields(f: [FieldSpec; 6]) -> Self {
        let [u1, u2, v1, v2, v3, v4] = f;
        InitialSpec {
            u1,
            u2,
            v1,
            v2,
            v3,
            v4,
        }
    }

    /// All six fields constant.
    pub fn uniform(w: [f64; 6]) -> Self {
        InitialSpec::from_fields(w.map(FieldSpec::constant))
    }

    pub fn get(&self, c: Component) -> &FieldSpec {
        match c {
            Component::U1 => &self.u1,
            Component::U2 => &self.u2,
            Component::V1 => &self.v1,
            Component::V2 => &self.v2,
            Component::V3 => &self.v3,
            Component::V4 => &self.v4,
        }
    }

    /// Spatial mean of each field taken from the specification itself:
    /// the constant part for modal fields (every resolvable cosine mode has
    /// zero mean) and the arithmetic mean for tabulated ones.
    pub fn means(&self) -> [f64; 6] {
        Component::ALL.map(|c| match self.get(c) {
            FieldSpec::Modal { constant, .. } => *constant,
            FieldSpec::Tabulated { values } => values.iter().sum::<f64>() / values.len() as f64,
        })
    }

    fn map(&self, f: impl Fn(Component, &FieldSpec) -> FieldSpec) -> InitialSpec {
        InitialSpec::from_fields(Component::ALL.map(|c| f(c, self.get(c))))
    }
}

/// Samples the initial data at the grid nodes; time is zero.
///
/// Positivity is checked node by node only.
pub fn evaluate_initial(spec: &InitialSpec, grid: &Grid1D) -> Result<State> {
    let mut fields = Vec::with_capacity(6);
    for c in Component::ALL {
        let field = spec.get(c).sample(c, grid)?;
        if let Some((node, &value)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0))
        {
            return Err(Error::NonPositiveInitial {
                component: c,
                node,
                value,
            });
        }
        fields.push(field);
    }
    let fields: [Field; 6] = fields.try_into().expect("six fields");
    State::new(fields, 0.0)
}

/// Direction of the affine symmetry of the reaction terms:
/// `(1/a1, 1/a2, 1/a1, (1 + c1/a1)/c2, (1 + c4/a2)/c3, 1/a2)`.
///
/// Adding `δ` times this vector moves both arguments of each `min` by the
/// same amount and leaves every reaction term unchanged.
pub fn shift_vector(p: &Params) -> [f64; 6] {
    [
        1.0 / p.a1,
        1.0 / p.a2,
        1.0 / p.a1,
        (1.0 + p.c1 / p.a1) / p.c2,
        (1.0 + p.c4 / p.a2) / p.c3,
        1.0 / p.a2,
    ]
}

/// Adds `delta · shift_vector(params)` to the constant part of every field.
pub fn shift_initial(spec: &InitialSpec, params: &Params, delta: f64) -> Result<InitialSpec> {
    if !delta.is_finite() {
        return Err(Error::Config(format!("shift must be finite, got {delta}")));
    }
    let shift = shift_vector(params);
    let shifted = spec.map(|c, f| f.shifted(delta * shift[c.index()]));
    if delta < 0.0 {
        for c in Component::ALL {
            let lb = shifted.get(c).lower_bound();
            if !(lb > 0.0) {
                return Err(Error::NonPositiveInitial {
                    component: c,
                    node: 0,
                    value: lb,
                });
            }
        }
    }
    Ok(shifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::reference_initial;

    #[test]
    fn reference_phi1_has_mean_10_min_7_max_13() {
        let g = Grid1D::new(PI, 64).unwrap();
        let s = evaluate_initial(&reference_initial(), &g).unwrap();
        let u1 = s.field(Component::U1);
        assert!((g.mean(u1.values()) - 10.0).abs() < 1e-12);
        // 64 cells: nodes at (i+1/2)π/64 never hit cos(2x) = ±1 exactly.
        assert!(u1.min() >= 7.0 && u1.min() < 7.0 + 1e-2);
        assert!(u1.max() <= 13.0 && u1.max() > 13.0 - 1e-2);
    }

    #[test]
    fn constant_spec_gives_constant_field() {
        let g = Grid1D::new(2.0, 16).unwrap();
        let s = evaluate_initial(&InitialSpec::uniform([5.0; 6]), &g).unwrap();
        for c in Component::ALL {
            assert!(s.field(c).values().iter().all(|&v| v == 5.0));
        }
        assert_eq!(s.time, 0.0);
    }

    #[test]
    fn psi1_matches_pointwise_evaluation() {
        let g = Grid1D::new(PI, 128).unwrap();
        let s = evaluate_initial(&reference_initial(), &g).unwrap();
        for (i, v) in s.field(Component::V1).values().iter().enumerate() {
            let x = (i as f64 + 0.5) * PI / 128.0;
            assert!((v - (6.0 + 2.0 * (2.0 * x).cos())).abs() <= 1e-15 * 8.0);
        }
    }

    #[test]
    fn rejects_non_positive_nodes() {
        let g = Grid1D::new(PI, 32).unwrap();
        let mut spec = reference_initial();
        spec.v4 = FieldSpec::cosine(1.0, 2, 3.0);
        match evaluate_initial(&spec, &g) {
            Err(Error::NonPositiveInitial { component, .. }) => {
                assert_eq!(component, Component::V4)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unresolvable_mode() {
        let g = Grid1D::new(PI, 8).unwrap();
        let mut spec = InitialSpec::uniform([5.0; 6]);
        spec.u2 = FieldSpec::cosine(5.0, 4, 1.0);
        assert!(matches!(
            evaluate_initial(&spec, &g),
            Err(Error::ModeOutOfRange { k: 4, .. })
        ));
        spec.u2 = FieldSpec::cosine(5.0, 3, 1.0);
        assert!(evaluate_initial(&spec, &g).is_ok());
    }

    #[test]
    fn tabulated_length_checked() {
        let g = Grid1D::new(1.0, 4).unwrap();
        let mut spec = InitialSpec::uniform([1.0; 6]);
        spec.v2 = FieldSpec::Tabulated {
            values: vec![1.0, 2.0, 3.0],
        };
        assert!(matches!(
            evaluate_initial(&spec, &g),
            Err(Error::MalformedInitial { .. })
        ));
    }

    #[test]
    fn spec_means_match_grid_means() {
        let g = Grid1D::new(PI, 64).unwrap();
        let spec = reference_initial();
        let s = evaluate_initial(&spec, &g).unwrap();
        assert_eq!(spec.means(), [10.0, 10.0, 6.0, 8.0, 10.0, 5.0]);
        for c in Component::ALL {
            assert!((g.mean(s.field(c).values()) - spec.means()[c.index()]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_shift_is_identity() {
        let p = Params::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0).unwrap();
        let spec = reference_initial();
        assert_eq!(shift_initial(&spec, &p, 0.0).unwrap(), spec);
    }

    #[test]
    fn unit_shift_vector_for_reference_params() {
        let p = Params::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0).unwrap();
        let expected = [1.0, 0.5, 1.0, 1.0, 0.8, 0.5];
        let got = shift_vector(&p);
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-15);
        }
        let shifted = shift_initial(&InitialSpec::uniform([2.0; 6]), &p, 1.0).unwrap();
        for c in Component::ALL {
            match shifted.get(c) {
                FieldSpec::Modal { constant, .. } => {
                    assert!((constant - (2.0 + expected[c.index()])).abs() < 1e-15)
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn negative_shift_that_breaks_positivity_is_rejected() {
        let p = Params::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0).unwrap();
        let spec = reference_initial();
        // v1 = 6 + 2cos(2x) has minimum 4; its shift coefficient is 1/a1 = 1.
        assert!(shift_initial(&spec, &p, -3.5).is_ok());
        assert!(matches!(
            shift_initial(&spec, &p, -4.5),
            Err(Error::NonPositiveInitial { .. })
        ));
    }

    #[test]
    fn field_spec_json_forms() {
        let modal: FieldSpec =
            serde_json::from_str(r#"{"constant": 10, "modes": [{"k": 2, "amp": -3}]}"#).unwrap();
        assert_eq!(modal, FieldSpec::cosine(10.0, 2, -3.0));
        let bare: FieldSpec = serde_json::from_str(r#"{"constant": 4}"#).unwrap();
        assert_eq!(bare, FieldSpec::constant(4.0));
        let table: FieldSpec = serde_json::from_str(r#"{"values": [1, 2]}"#).unwrap();
        assert_eq!(
            table,
            FieldSpec::Tabulated {
                values: vec![1.0, 2.0]
            }
        );
        assert!(serde_json::from_str::<FieldSpec>(r#"{"constant": 1, "bogus": 2}"#).is_err());
    }
}

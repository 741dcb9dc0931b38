//! Parsing of `family[:params]` specification strings, e.g. `bipyramid:0.3`,
//! `pyramid:auto`, `doubletetra:auto`, `pentagon:1.57`.

use crate::CliError;
use nalgebra::DVector;
use thomson5::families::{
    self, curve_tangent, solve_double_tetrahedron, solve_pyramid_height, FamiliesError,
    FamilyLabel, FamilyShape,
};
use thomson5::sphere::Configuration;

/// A resolved family specification: the generated configuration, its label,
/// shape parameters, and the sweep tangent at the generated point.
pub struct ResolvedFamily {
    pub label: FamilyLabel,
    pub shape: FamilyShape,
    pub configuration: Configuration,
    pub tangent: DVector<f64>,
    /// The canonical spec string (`auto` parameters resolved).
    pub resolved_spec: String,
}

fn numeric(part: &str, what: &str) -> Result<f64, CliError> {
    part.parse::<f64>()
        .map_err(|_| CliError::Usage(format!("cannot parse {what} value '{part}'")))
}

fn map_solver_err(err: FamiliesError) -> CliError {
    CliError::Numerical(err.to_string())
}

/// Resolve a family spec at the given Riesz exponent (`auto` shape
/// parameters solve the family's defining equation at that `s`).
pub fn resolve(spec: &str, s: f64) -> Result<ResolvedFamily, CliError> {
    let (name, params) = match spec.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (spec, None),
    };
    match name {
        "bipyramid" => {
            let lam = params.map_or(Ok(0.0), |p| numeric(p, "lambda"))?;
            if !(-1.0..=1.0).contains(&lam) {
                return Err(CliError::Usage(format!(
                    "bipyramid lambda {lam} outside [-1, 1]"
                )));
            }
            Ok(ResolvedFamily {
                label: FamilyLabel::BiPyramidTriangleVertex,
                shape: FamilyShape::BiPyramid,
                configuration: families::gen_bipyramid(lam),
                tangent: curve_tangent(families::gen_bipyramid, lam.clamp(-0.999, 0.999)),
                resolved_spec: format!("bipyramid:{lam}"),
            })
        }
        "bipyramid-axial" => {
            let lam = params.map_or(Ok(0.0), |p| numeric(p, "lambda"))?;
            Ok(ResolvedFamily {
                label: FamilyLabel::BiPyramidAxial,
                shape: FamilyShape::BiPyramid,
                configuration: families::gen_bipyramid_axial(lam),
                tangent: curve_tangent(families::gen_bipyramid_axial, lam),
                resolved_spec: format!("bipyramid-axial:{lam}"),
            })
        }
        "pyramid" | "pyramid-base" => {
            let alpha = match params {
                None | Some("auto") => solve_pyramid_height(s).map_err(map_solver_err)?,
                Some(p) => numeric(p, "alpha")?,
            };
            if alpha.abs() >= 1.0 {
                return Err(CliError::Usage(format!(
                    "pyramid height {alpha} outside (-1, 1)"
                )));
            }
            let (label, generator): (_, Box<dyn Fn(f64) -> Configuration>) = if name == "pyramid" {
                (
                    FamilyLabel::PyramidApex,
                    Box::new(move |l| families::gen_pyramid(alpha, l)),
                )
            } else {
                (
                    FamilyLabel::PyramidBaseVertex,
                    Box::new(move |l| families::gen_pyramid_base_vertex(alpha, l)),
                )
            };
            Ok(ResolvedFamily {
                label,
                shape: FamilyShape::SquareRightPyramid { alpha },
                configuration: generator(0.0),
                tangent: curve_tangent(&generator, 0.0),
                resolved_spec: format!("{name}:{alpha}"),
            })
        }
        "pentagon" => {
            let lam = params.map_or(Ok(0.0), |p| numeric(p, "lambda"))?;
            Ok(ResolvedFamily {
                label: FamilyLabel::Pentagon,
                shape: FamilyShape::RegularPentagon,
                configuration: families::gen_pentagon(lam),
                tangent: curve_tangent(families::gen_pentagon, lam),
                resolved_spec: format!("pentagon:{lam}"),
            })
        }
        "doubletetra" => {
            let (beta, gamma) = match params {
                None | Some("auto") => solve_double_tetrahedron(s).map_err(map_solver_err)?,
                Some(p) => {
                    let (b, g) = p.split_once(',').ok_or_else(|| {
                        CliError::Usage(format!(
                            "doubletetra parameters must be 'auto' or 'beta,gamma', got '{p}'"
                        ))
                    })?;
                    (numeric(b, "beta")?, numeric(g, "gamma")?)
                }
            };
            if beta.abs() >= 1.0 || gamma.abs() >= 1.0 {
                return Err(CliError::Usage(format!(
                    "double-tetrahedron heights ({beta}, {gamma}) outside (-1, 1)"
                )));
            }
            Ok(ResolvedFamily {
                label: FamilyLabel::DoubleTetrahedron,
                shape: FamilyShape::DoubleTetrahedron { beta, gamma },
                configuration: families::gen_double_tetrahedron(beta, gamma, 0.0),
                tangent: curve_tangent(
                    move |l| families::gen_double_tetrahedron(beta, gamma, l),
                    0.0,
                ),
                resolved_spec: format!("doubletetra:{beta},{gamma}"),
            })
        }
        other => Err(CliError::Usage(format!(
            "unknown family '{other}' (expected bipyramid, bipyramid-axial, pyramid, \
             pyramid-base, pentagon or doubletetra)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_forms() {
        assert!(resolve("bipyramid:0.3", 1.0).is_ok());
        assert!(resolve("bipyramid", 1.0).is_ok());
        assert!(resolve("pentagon:1.57", 1.0).is_ok());
        let pyr = resolve("pyramid:auto", 1.0).unwrap();
        match pyr.shape {
            FamilyShape::SquareRightPyramid { alpha } => {
                assert!((alpha - (-0.2432010309)).abs() < 1e-8)
            }
            _ => panic!("wrong shape"),
        }
        assert!(resolve("doubletetra:auto", 15.0).is_ok());
        assert!(resolve("doubletetra:-0.04,-0.32", 15.0).is_ok());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(resolve("cube", 1.0), Err(CliError::Usage(_))));
        assert!(matches!(
            resolve("bipyramid:2.0", 1.0),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            resolve("doubletetra:auto", 10.0),
            Err(CliError::Numerical(_))
        ));
    }
}

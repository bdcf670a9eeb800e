//! Programmatically generated surfaces used by fixtures and the CLI.

use thiserror::Error;

use crate::metric::{pullback, ChartBox, Immersion3, MetricField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuiltinError {
    #[error("unknown builtin surface `{0}`")]
    Unknown(String),
    #[error("malformed arguments in `{0}`; expected west(a02, a11, a20) with a02 > 0")]
    BadArguments(String),
}

fn lit(x: f64) -> String {
    format!("({x:?})")
}

/// `(u, v, 0)`.
pub fn plane() -> MetricField {
    pullback("plane", Immersion3::parse("u", "v", "0", ChartBox::square(1.0)).expect("static"))
}

/// Unit sphere in latitude-longitude coordinates, `v` the latitude.
pub fn sphere() -> MetricField {
    pullback(
        "sphere",
        Immersion3::parse(
            "cos(u)*cos(v)",
            "sin(u)*cos(v)",
            "sin(v)",
            ChartBox::new([-3.0, 3.0], [-1.4, 1.4]).expect("static"),
        )
        .expect("static"),
    )
}

/// Upper unit hemisphere as a graph over the unit disc.
pub fn hemisphere() -> MetricField {
    pullback(
        "hemisphere",
        Immersion3::parse("u", "v", "sqrt(1 - u^2 - v^2)", ChartBox::square(0.7)).expect("static"),
    )
}

/// The standard cross cap `(u, uv, v²)`.
pub fn crosscap() -> MetricField {
    pullback("crosscap", Immersion3::parse("u", "u*v", "v^2", ChartBox::square(1.0)).expect("static"))
}

/// `(u, uv, a02/2 v² + a11 uv + a20/2 u²)`.
pub fn west_immersion(a02: f64, a11: f64, a20: f64) -> Immersion3 {
    let z = format!(
        "{}/2*v^2 + {}*u*v + {}/2*u^2",
        lit(a02),
        lit(a11),
        lit(a20)
    );
    Immersion3::parse("u", "u*v", &z, ChartBox::square(1.0)).expect("generated expression parses")
}

pub fn west(a02: f64, a11: f64, a20: f64) -> MetricField {
    pullback(format!("west({a02:?},{a11:?},{a20:?})"), west_immersion(a02, a11, a20))
}

/// Resolves a builtin name such as `crosscap` or `west(2,3,1)`.
pub fn builtin(name: &str) -> Result<MetricField, BuiltinError> {
    let trimmed = name.trim();
    match trimmed {
        "plane" => return Ok(plane()),
        "sphere" => return Ok(sphere()),
        "hemisphere" => return Ok(hemisphere()),
        "crosscap" => return Ok(crosscap()),
        _ => {}
    }
    let args = trimmed
        .strip_prefix("west")
        .map(str::trim_start)
        .and_then(|s| s.strip_prefix('('))
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| BuiltinError::Unknown(trimmed.to_string()))?;
    let bad = || BuiltinError::BadArguments(trimmed.to_string());
    let values: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match values[..] {
        [a02, a11, a20] if a02 > 0.0 && a02.is_finite() && a11.is_finite() && a20.is_finite() => {
            Ok(west(a02, a11, a20))
        }
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_names() {
        assert_eq!(builtin("crosscap").unwrap().name, "crosscap");
        assert!(builtin(" west( 2, 3 ,1 )").is_ok());
        assert_eq!(builtin("torus"), Err(BuiltinError::Unknown("torus".into())));
        assert!(matches!(builtin("west(0,1,1)"), Err(BuiltinError::BadArguments(_))));
        assert!(matches!(builtin("west(1,2)"), Err(BuiltinError::BadArguments(_))));
    }

    #[test]
    fn west_generator_handles_negative_coefficients() {
        let m = west(1.5, -2.0, -0.25);
        let [e, f, g] = m.values([0.5, 0.5]).unwrap();
        // f_u = (1, v, a11 v + a20 u), f_v = (0, u, a02 v + a11 u)
        let (u, v) = (0.5, 0.5);
        let zu = -2.0 * v - 0.25 * u;
        let zv = 1.5 * v - 2.0 * u;
        assert!((e - (1.0 + v * v + zu * zu)).abs() < 1e-14);
        assert!((f - (u * v + zu * zv)).abs() < 1e-14);
        assert!((g - (u * u + zv * zv)).abs() < 1e-14);
    }
}

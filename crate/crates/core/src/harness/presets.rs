use crate::constructions::{sharpness_body_2d, sharpness_body_nd};
use crate::geometry::ConvexBody;
use crate::{Error, Result};

/// A body resolved from a preset name or a JSON file, plus the distinguished point of
/// sharpness presets.
#[derive(Clone, Debug)]
pub struct ResolvedBody {
    pub body: ConvexBody,
    pub label: String,
    pub point: Option<Vec<f64>>,
}

fn numbers(s: &str, count: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::ParameterOutOfRange(format!("cannot parse `{s}` for {what}")))?;
    if v.len() != count {
        return Err(Error::ParameterOutOfRange(format!("{what} expects {count} numbers, got `{s}`")));
    }
    Ok(v)
}

/// `disc`, `square`, `lpball:<α>`, `halfball3`, `sharp2d:<δ>,<l1>,<l2>`, `sharpnd:<δ>,<v>,<d>`,
/// or a path to a JSON body description.
pub fn resolve_body(spec: &str) -> Result<ResolvedBody> {
    let (head, tail) = spec.split_once(':').unwrap_or((spec, ""));
    let plain = |body: ConvexBody| Ok(ResolvedBody { body, label: spec.to_string(), point: None });
    match head {
        "disc" => plain(ConvexBody::unit_ball(2)),
        "square" => plain(ConvexBody::square(-1.0, 1.0)),
        "halfball3" => plain(ConvexBody::HalfBall3),
        "ball3" => plain(ConvexBody::unit_ball(3)),
        "interval" => plain(ConvexBody::interval()),
        "lpball" => {
            let a = numbers(tail, 1, "lpball")?[0];
            plain(ConvexBody::lp_ball(a, 2)?)
        }
        "sharp2d" => {
            let v = numbers(tail, 3, "sharp2d")?;
            let sb = sharpness_body_2d(v[0], v[1], v[2])?;
            Ok(ResolvedBody { body: sb.body, label: spec.to_string(), point: Some(sb.x) })
        }
        "sharpnd" => {
            let v = numbers(tail, 3, "sharpnd")?;
            let d = v[2] as usize;
            if v[2] != d as f64 {
                return Err(Error::ParameterOutOfRange(format!("dimension must be an integer, got {}", v[2])));
            }
            let sb = sharpness_body_nd(v[0], v[1], d, None)?;
            Ok(ResolvedBody { body: sb.body, label: spec.to_string(), point: Some(sb.x) })
        }
        _ => {
            let text = std::fs::read_to_string(spec)?;
            Ok(ResolvedBody { body: ConvexBody::from_json(&text)?, label: spec.to_string(), point: None })
        }
    }
}

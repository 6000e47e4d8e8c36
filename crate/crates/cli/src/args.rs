//! Parsers for option values: domains, grids, lists and box families.

use anyhow::{bail, Context, Result};
use oscint_core::equidist::{ParamGrid, UnitBox};
use oscint_core::model::Domain;
use oscint_core::quad::Grid;

/// `lo:hi:n`, as for `--param x:1:2:33` (the leading name is optional).
pub fn param_grid(s: &str) -> Result<ParamGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = match parts.len() {
        3 => &parts[..],
        4 => &parts[1..],
        _ => bail!("parameter grid '{s}' must be [name:]lo:hi:points"),
    };
    let lo = num(nums[0])?;
    let hi = num(nums[1])?;
    let n: usize = nums[2].parse().with_context(|| format!("grid point count '{}'", nums[2]))?;
    Ok(ParamGrid::new(lo, hi, n)?)
}

/// `lo:hi:cells` for frequency and time grids.
pub fn grid(s: &str) -> Result<Grid> {
    let p = param_grid(s)?;
    if p.points < 2 || !(p.hi > p.lo) {
        bail!("grid '{s}' needs lo < hi and at least 2 points");
    }
    Ok(Grid::new(p.lo, p.hi, p.points - 1))
}

pub fn num(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("'{s}' is not a number"))?;
    if !v.is_finite() {
        bail!("'{s}' is not finite");
    }
    Ok(v)
}

pub fn list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(num).collect()
}

/// `k0:k1` inclusive.
pub fn k_range(s: &str) -> Result<(u32, u32)> {
    let (a, b) = s.split_once(':').with_context(|| format!("range '{s}' must be k0:k1"))?;
    let (a, b): (u32, u32) = (a.trim().parse()?, b.trim().parse()?);
    if a > b {
        bail!("empty range {a}:{b}");
    }
    Ok((a, b))
}

/// `--ray a` or `--interval a:b`.
pub fn domain(ray: Option<f64>, interval: Option<&str>) -> Result<Domain> {
    match interval {
        Some(s) => {
            let (a, b) = s.split_once(':').with_context(|| format!("interval '{s}' must be a:b"))?;
            let (a, b) = (num(a)?, num(b)?);
            if !(a > 0.0 && b > a) {
                bail!("DomainError: interval [{a}, {b}] must satisfy 0 < a < b");
            }
            Ok(Domain::Interval { lower: a, upper: b })
        }
        None => {
            let a = ray.unwrap_or(1.0);
            if !(a > 0.0) {
                bail!("DomainError: ray start {a} must be positive");
            }
            Ok(Domain::ray(a))
        }
    }
}

/// `dyadic:N`, `full`, or explicit boxes `lo-hi,lo-hi;lo-hi,lo-hi`.
pub fn boxes(s: &str, dim: usize) -> Result<Vec<UnitBox>> {
    if s == "full" {
        return Ok(vec![UnitBox::full(dim)]);
    }
    if let Some(n) = s.strip_prefix("dyadic:") {
        let n: usize = n.parse().with_context(|| format!("box count '{n}'"))?;
        return Ok(UnitBox::dyadic(dim, n));
    }
    s.split(';')
        .map(|b| {
            let sides = b
                .split(',')
                .map(|side| {
                    let (lo, hi) = side.split_once('-').with_context(|| format!("box side '{side}' must be lo-hi"))?;
                    Ok((num(lo)?, num(hi)?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(UnitBox::new(sides)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_and_ranges() {
        let g = param_grid("x:1:2:33").unwrap();
        assert_eq!((g.lo, g.hi, g.points), (1.0, 2.0, 33));
        assert_eq!(param_grid("1:2:5").unwrap().points, 5);
        assert!(param_grid("1:2").is_err());
        assert_eq!(grid("-1:1:5").unwrap().cells, 4);
        assert_eq!(k_range("6:14").unwrap(), (6, 14));
        assert_eq!(list("1e2,1e3").unwrap(), vec![100.0, 1000.0]);
    }

    #[test]
    fn box_families() {
        assert_eq!(boxes("dyadic:4", 2).unwrap().len(), 4);
        let b = boxes("0-0.5,0.25-1;0-1,0-1", 2).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].volume(), 0.375);
        assert!(boxes("0.5-0.2,0-1", 2).is_err());
    }

    #[test]
    fn domains() {
        assert_eq!(domain(Some(2.0), None).unwrap(), Domain::ray(2.0));
        assert!(matches!(domain(None, Some("1:3")).unwrap(), Domain::Interval { .. }));
        assert!(domain(Some(-1.0), None).is_err());
    }
}

//! Aggregations with a fixed reduction order.

use crate::grammar::AggregationKind;
use crate::scalar::Scalar;

const PAIRWISE_BLOCK: usize = 8;

/// Sum by recursive halving in index order; blocks of up to eight values
/// are added left to right. The result depends only on the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().fold(0.0, |a, &x| a + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Aggregates matched values. Nulls are skipped by the numeric kinds; an
/// empty or all-null match set is null, except for `count`, which counts
/// matches regardless of their values.
pub fn aggregate<'a, I>(kind: AggregationKind, values: I) -> Result<Scalar, String>
where
    I: IntoIterator<Item = &'a Scalar>,
{
    let mut count = 0usize;
    let mut nums = Vec::new();
    for v in values {
        count += 1;
        match v {
            Scalar::Number(x) => nums.push(*x),
            Scalar::Null => {}
            Scalar::Text(t) if kind != AggregationKind::Count => {
                return Err(format!("`{kind}` needs numbers, got text '{t}'"));
            }
            Scalar::Text(_) => {}
        }
    }
    if kind == AggregationKind::Count {
        return Ok(Scalar::number(count as f64));
    }
    if nums.is_empty() {
        return Ok(Scalar::Null);
    }
    Ok(Scalar::number(match kind {
        AggregationKind::Sum => pairwise_sum(&nums),
        AggregationKind::Mean => pairwise_sum(&nums) / nums.len() as f64,
        AggregationKind::Min => nums.iter().copied().fold(f64::INFINITY, f64::min),
        AggregationKind::Max => nums.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        AggregationKind::Count => unreachable!(),
    }))
}
